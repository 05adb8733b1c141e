use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::diagnostics::DiagnosticsParams;
use crate::scalar::{CellSpec, DEFAULT_BINS, DEFAULT_MARGIN};
use crate::solver::{parse_velocity_preset, ForcingSpec, InitialCondition, ScalarPreset, SimConfig, VelocityPreset};
use crate::spectral::TorusGrid;
use crate::sweep::SweepConfig;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: duplicate key `{key}` (first set on line {first})")]
    Duplicate { line: usize, key: String, first: usize },
    #[error("line {line}: `{key}` expects {expected}, got `{value}`")]
    Type { line: usize, key: String, expected: &'static str, value: String },
    #[error("missing required key `{0}`")]
    Missing(&'static str),
    #[error("line {line}: {message}")]
    Invalid { line: usize, message: String },
}

impl ConfigError {
    /// Source line the error points at, if any.
    pub fn line(&self) -> Option<usize> {
        match self {
            Self::Missing(_) => None,
            Self::Syntax { line }
            | Self::UnknownKey { line, .. }
            | Self::Duplicate { line, .. }
            | Self::Type { line, .. }
            | Self::Invalid { line, .. } => Some(*line),
        }
    }
}

/// Every accepted key, in canonical order, with its default (`None` for
/// required keys, `Some("")` for optional keys without a default).
pub const CONFIG_KEYS: &[(&str, Option<&str>)] = &[
    ("grid.n", None),
    ("grid.p", Some("6.283185307179586")),
    ("mu", None),
    ("dt", None),
    ("t_end", None),
    ("stride", Some("1")),
    ("seed", Some("0")),
    ("threads", Some("0")),
    ("ic.name", None),
    ("ic.path", Some("")),
    ("scalar.preset", Some("")),
    ("scalar.mu_list", Some("")),
    ("scalar.blocks", Some("{2,2,2}")),
    ("scalar.windows", Some("1")),
    ("scalar.bins", Some("256")),
    ("scalar.margin", Some("0.05")),
    ("forcing.name", Some("zero")),
    ("forcing.amplitude", Some("1")),
    ("forcing.k_lo", Some("1")),
    ("forcing.k_hi", Some("2")),
    ("test.inviscid", Some("false")),
    ("sweep.mu_list", Some("")),
    ("sweep.resolution_c", Some("1")),
    ("diag.alpha", Some("0.3")),
    ("diag.beta", Some("0.6666666666666666")),
    ("diag.kstar", Some("2")),
    ("diag.q", Some("3")),
    ("diag.dt_list", Some("")),
    ("diag.trace_dt_list", Some("")),
    ("diag.delta_list", Some("")),
    ("diag.slope_range", Some("")),
];

/// Histogram settings for the scalar report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalarOptions {
    pub cells: CellSpec,
    pub bins: usize,
    pub margin: f64,
}

impl Default for ScalarOptions {
    fn default() -> Self {
        Self { cells: CellSpec { blocks: [2, 2, 2], windows: 1 }, bins: DEFAULT_BINS, margin: DEFAULT_MARGIN }
    }
}

/// A parsed configuration file.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub sim: SimConfig,
    pub params: DiagnosticsParams,
    pub scalar: ScalarOptions,
    /// Present when the file describes a sweep.
    pub ladder: Option<Vec<f64>>,
    pub resolution_c: f64,
    /// Worker thread cap; 0 leaves the choice to the runtime.
    pub threads: usize,
    /// Every key with its resolved value, defaults included.
    pub resolved: BTreeMap<String, String>,
}

impl RunConfig {
    pub fn sweep_config(&self) -> Option<SweepConfig> {
        self.ladder.as_ref().map(|l| {
            let mut s = SweepConfig::new(self.sim.clone(), l.clone(), self.params.clone());
            s.resolution_c = self.resolution_c;
            s
        })
    }

    /// The resolved key set as config text in canonical order. Parsing it
    /// gives back an equal configuration.
    pub fn canonical_text(&self) -> String {
        let mut out = String::new();
        for (key, _) in CONFIG_KEYS {
            if let Some(v) = self.resolved.get(*key) {
                if !v.is_empty() {
                    let _ = writeln!(out, "{key} = {v}");
                }
            }
        }
        out
    }
}

struct Entries {
    values: BTreeMap<&'static str, (String, usize)>,
    resolved: BTreeMap<String, String>,
}

impl Entries {
    fn line(&self, key: &str) -> usize {
        self.values.get(key).map_or(0, |(_, l)| *l)
    }

    fn raw(&self, key: &'static str) -> Result<Option<&str>, ConfigError> {
        match self.values.get(key) {
            Some((v, _)) => Ok(Some(v.as_str())),
            None => {
                let default = CONFIG_KEYS.iter().find(|(k, _)| *k == key).and_then(|(_, d)| *d);
                match default {
                    None => Err(ConfigError::Missing(key)),
                    Some("") => Ok(None),
                    Some(d) => Ok(Some(d)),
                }
            }
        }
    }

    fn type_err(&self, key: &str, expected: &'static str, value: &str) -> ConfigError {
        ConfigError::Type { line: self.line(key), key: key.to_string(), expected, value: value.to_string() }
    }

    fn invalid(&self, key: &str, message: impl Into<String>) -> ConfigError {
        ConfigError::Invalid { line: self.line(key), message: message.into() }
    }

    fn parse<T: FromStr>(&self, key: &'static str, expected: &'static str) -> Result<Option<T>, ConfigError> {
        match self.raw(key)? {
            None => Ok(None),
            Some(v) => v.parse().map(Some).map_err(|_| self.type_err(key, expected, v)),
        }
    }

    fn get<T: FromStr>(&self, key: &'static str, expected: &'static str) -> Result<T, ConfigError> {
        self.parse(key, expected)?.ok_or(ConfigError::Missing(key))
    }

    fn float(&self, key: &'static str) -> Result<f64, ConfigError> {
        let v: f64 = self.get(key, "a number")?;
        if !v.is_finite() {
            return Err(self.type_err(key, "a finite number", &v.to_string()));
        }
        Ok(v)
    }

    fn list<T: FromStr>(&self, key: &'static str, expected: &'static str) -> Result<Vec<T>, ConfigError> {
        let Some(v) = self.raw(key)? else { return Ok(Vec::new()) };
        let inner = v.trim();
        let inner = inner.strip_prefix('{').and_then(|s| s.strip_suffix('}')).unwrap_or(inner);
        if inner.trim().is_empty() {
            return Ok(Vec::new());
        }
        inner
            .split(',')
            .map(|p| p.trim().parse().map_err(|_| self.type_err(key, expected, v)))
            .collect()
    }
}

fn fmt_list<T: ToString>(v: &[T]) -> String {
    let parts: Vec<String> = v.iter().map(ToString::to_string).collect();
    format!("{{{}}}", parts.join(","))
}

fn tokenize(text: &str) -> Result<BTreeMap<&'static str, (String, usize)>, ConfigError> {
    let mut values: BTreeMap<&'static str, (String, usize)> = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (k, v) = content.split_once('=').ok_or(ConfigError::Syntax { line })?;
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() {
            return Err(ConfigError::Syntax { line });
        }
        let key = CONFIG_KEYS
            .iter()
            .map(|(k, _)| *k)
            .find(|known| *known == k)
            .ok_or_else(|| ConfigError::UnknownKey { line, key: k.to_string() })?;
        if let Some((_, first)) = values.get(key) {
            return Err(ConfigError::Duplicate { line, key: k.to_string(), first: *first });
        }
        values.insert(key, (v.to_string(), line));
    }
    Ok(values)
}

/// Parse flat `key = value` text. `#` starts a comment; list values are
/// comma separated, optionally wrapped in braces.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let mut e = Entries { values: tokenize(text)?, resolved: BTreeMap::new() };

    let n: usize = e.get("grid.n", "an even integer >= 4")?;
    let p = e.float("grid.p")?;
    let grid = TorusGrid::new(p, n).map_err(|err| {
        let key = if err.to_string().contains("period") { "grid.p" } else { "grid.n" };
        e.invalid(key, err.to_string())
    })?;
    let mu = e.float("mu")?;
    let dt = e.float("dt")?;
    let t_end = e.float("t_end")?;
    let stride: usize = e.get("stride", "a positive integer")?;
    let seed: u64 = e.get("seed", "an unsigned integer")?;
    let threads: usize = e.get("threads", "a non-negative integer")?;
    let inviscid: bool = e.get("test.inviscid", "true or false")?;
    if !(dt > 0.0) {
        return Err(e.invalid("dt", "dt must be positive"));
    }
    if !(t_end >= dt) {
        return Err(e.invalid("t_end", "t_end must be at least dt"));
    }
    if stride == 0 {
        return Err(e.invalid("stride", "stride must be at least 1"));
    }
    if mu < 0.0 {
        return Err(e.invalid("mu", "mu must be non-negative"));
    }
    if mu == 0.0 && !inviscid {
        return Err(e.invalid("mu", "mu = 0 requires test.inviscid = true"));
    }

    let ic_name: String = e.get("ic.name", "a preset name")?;
    let ic_path: Option<String> = e.parse("ic.path", "a path")?;
    let scalar_key: Option<String> = e.parse("scalar.preset", "checkerboard or smooth")?;
    let mut scalar_preset = match scalar_key.as_deref() {
        None | Some("none") => None,
        Some("checkerboard") => Some(ScalarPreset::Checkerboard),
        Some("smooth") => Some(ScalarPreset::Smooth),
        Some(other) => return Err(e.type_err("scalar.preset", "none, checkerboard or smooth", other)),
    };
    let initial = match ic_name.as_str() {
        "checkpoint" => {
            let path = ic_path.clone().ok_or_else(|| e.invalid("ic.name", "ic.name = checkpoint needs ic.path"))?;
            scalar_preset = None;
            InitialCondition::Checkpoint { path: PathBuf::from(path) }
        }
        "checkerboard-scalar" => {
            scalar_preset.get_or_insert(ScalarPreset::Checkerboard);
            InitialCondition::Preset { velocity: VelocityPreset::Zero, scalars: scalar_preset }
        }
        name => {
            let velocity = parse_velocity_preset(name).map_err(|err| e.invalid("ic.name", err.to_string()))?;
            InitialCondition::Preset { velocity, scalars: scalar_preset }
        }
    };
    let mut diffusivities: Vec<f64> = e.list("scalar.mu_list", "a list of numbers")?;
    if diffusivities.is_empty() && scalar_preset.is_some() {
        if mu == 0.0 {
            return Err(e.invalid("scalar.mu_list", "scalars in inviscid mode need explicit diffusivities"));
        }
        diffusivities = vec![mu; 2];
    }
    if diffusivities.iter().any(|m| !(*m > 0.0)) {
        return Err(e.invalid("scalar.mu_list", "scalar diffusivities must be positive"));
    }

    let forcing_name: String = e.get("forcing.name", "zero, low-mode or band")?;
    let amplitude = e.float("forcing.amplitude")?;
    let f_lo: usize = e.get("forcing.k_lo", "a positive integer")?;
    let f_hi: usize = e.get("forcing.k_hi", "a positive integer")?;
    let forcing = match forcing_name.as_str() {
        "zero" => ForcingSpec::Zero,
        "low-mode" => ForcingSpec::LowMode { amplitude },
        "band" => {
            if f_lo == 0 || f_lo > f_hi {
                return Err(e.invalid("forcing.k_lo", "band forcing needs 1 <= forcing.k_lo <= forcing.k_hi"));
            }
            ForcingSpec::Band { k_lo: f_lo, k_hi: f_hi, amplitude }
        }
        other => return Err(e.type_err("forcing.name", "zero, low-mode or band", other)),
    };

    let sim = SimConfig {
        grid,
        viscosity: mu,
        scalar_diffusivities: diffusivities.clone(),
        dt,
        t_end,
        stride,
        initial,
        forcing,
        seed,
        allow_inviscid: inviscid,
    };
    sim.validate().map_err(|err| e.invalid("ic.name", err.to_string()))?;

    let ladder: Vec<f64> = e.list("sweep.mu_list", "a list of numbers")?;
    let resolution_c = e.float("sweep.resolution_c")?;
    if !ladder.is_empty() {
        if ladder.iter().any(|m| !(*m > 0.0)) {
            return Err(e.invalid("sweep.mu_list", "ladder values must be positive"));
        }
        if ladder.windows(2).any(|w| w[1] >= w[0]) {
            return Err(e.invalid("sweep.mu_list", "ladder must decrease"));
        }
    }
    if !(resolution_c > 0.0) {
        return Err(e.invalid("sweep.resolution_c", "resolution constant must be positive"));
    }

    let alpha = e.float("diag.alpha")?;
    let beta = e.float("diag.beta")?;
    let k_star: usize = e.get("diag.kstar", "a positive integer")?;
    let q = e.float("diag.q")?;
    if !(alpha >= 0.0) {
        return Err(e.invalid("diag.alpha", "alpha must be non-negative"));
    }
    if !(beta > 0.0) {
        return Err(e.invalid("diag.beta", "beta must be positive"));
    }
    if k_star == 0 || k_star > grid.resolved_shells() {
        return Err(e.invalid("diag.kstar", format!("kstar must lie in 1..={}", grid.resolved_shells())));
    }
    if !(q >= 1.0) {
        return Err(e.invalid("diag.q", "q must be at least 1"));
    }
    let lags: Vec<f64> = e.list("diag.dt_list", "a list of numbers")?;
    let trace_lags: Vec<f64> = e.list("diag.trace_dt_list", "a list of numbers")?;
    let deltas: Vec<f64> = e.list("diag.delta_list", "a list of numbers")?;
    let slope: Vec<usize> = e.list("diag.slope_range", "two shell indices")?;
    let slope_range = match slope.as_slice() {
        [] => None,
        [a, b] if a < b => Some((*a, *b)),
        _ => return Err(e.invalid("diag.slope_range", "slope range needs two increasing shells")),
    };
    let params = DiagnosticsParams { alpha, beta, k_star, q, lags, trace_lags, deltas, slope_range };

    let blocks: Vec<usize> = e.list("scalar.blocks", "three block counts")?;
    let windows: usize = e.get("scalar.windows", "a positive integer")?;
    let bins: usize = e.get("scalar.bins", "a positive integer")?;
    let margin = e.float("scalar.margin")?;
    let blocks: [usize; 3] = match blocks.as_slice() {
        [a, b, c] if [a, b, c].iter().all(|v| **v > 0 && n % **v == 0) => [*a, *b, *c],
        _ => return Err(e.invalid("scalar.blocks", format!("scalar.blocks needs three counts dividing {n}"))),
    };
    if windows == 0 || bins == 0 || !(margin >= 0.0) {
        return Err(e.invalid("scalar.bins", "windows and bins must be positive and margin non-negative"));
    }
    let scalar = ScalarOptions { cells: CellSpec { blocks, windows }, bins, margin };

    let r = &mut e.resolved;
    let mut put = |k: &str, v: String| {
        r.insert(k.to_string(), v);
    };
    put("grid.n", n.to_string());
    put("grid.p", p.to_string());
    put("mu", mu.to_string());
    put("dt", dt.to_string());
    put("t_end", t_end.to_string());
    put("stride", stride.to_string());
    put("seed", seed.to_string());
    put("threads", threads.to_string());
    put("ic.name", ic_name.clone());
    put("ic.path", ic_path.unwrap_or_default());
    put(
        "scalar.preset",
        match &sim.initial {
            InitialCondition::Preset { scalars: Some(ScalarPreset::Checkerboard), .. } => "checkerboard".into(),
            InitialCondition::Preset { scalars: Some(ScalarPreset::Smooth), .. } => "smooth".into(),
            _ => String::new(),
        },
    );
    put("scalar.mu_list", if diffusivities.is_empty() { String::new() } else { fmt_list(&diffusivities) });
    put("scalar.blocks", fmt_list(&blocks));
    put("scalar.windows", windows.to_string());
    put("scalar.bins", bins.to_string());
    put("scalar.margin", margin.to_string());
    put("forcing.name", forcing_name);
    put("forcing.amplitude", amplitude.to_string());
    put("forcing.k_lo", f_lo.to_string());
    put("forcing.k_hi", f_hi.to_string());
    put("test.inviscid", inviscid.to_string());
    put("sweep.mu_list", if ladder.is_empty() { String::new() } else { fmt_list(&ladder) });
    put("sweep.resolution_c", resolution_c.to_string());
    put("diag.alpha", alpha.to_string());
    put("diag.beta", beta.to_string());
    put("diag.kstar", k_star.to_string());
    put("diag.q", q.to_string());
    put("diag.dt_list", if params.lags.is_empty() { String::new() } else { fmt_list(&params.lags) });
    put("diag.trace_dt_list", if params.trace_lags.is_empty() { String::new() } else { fmt_list(&params.trace_lags) });
    put("diag.delta_list", if params.deltas.is_empty() { String::new() } else { fmt_list(&params.deltas) });
    put("diag.slope_range", slope_range.map(|(a, b)| fmt_list(&[a, b])).unwrap_or_default());

    Ok(RunConfig {
        sim,
        params,
        scalar,
        ladder: if ladder.is_empty() { None } else { Some(ladder) },
        resolution_c,
        threads,
        resolved: e.resolved,
    })
}

/// `text` with the given keys replaced: their lines are dropped and the new
/// values appended. Unknown override keys are rejected.
pub fn with_overrides(text: &str, overrides: &[(&str, String)]) -> Result<String, ConfigError> {
    let last = text.lines().count();
    for (i, (key, _)) in overrides.iter().enumerate() {
        if !CONFIG_KEYS.iter().any(|(k, _)| k == key) {
            return Err(ConfigError::UnknownKey { line: last + i + 1, key: key.to_string() });
        }
    }
    let mut out = String::with_capacity(text.len());
    for raw in text.lines() {
        let content = raw.split('#').next().unwrap_or("");
        let key = content.split_once('=').map(|(k, _)| k.trim());
        if key.is_some_and(|k| overrides.iter().any(|(o, _)| *o == k)) {
            // keep line numbers stable for errors further down
            out.push('\n');
            continue;
        }
        out.push_str(raw);
        out.push('\n');
    }
    for (key, value) in overrides {
        let _ = writeln!(out, "{key} = {value}");
    }
    Ok(out)
}
