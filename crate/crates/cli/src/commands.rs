use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use log::{info, warn};
use nsk41_core::diagnostics::diagnose;
use nsk41_core::io::{
    emit_reports, parse_config, read_manifest, read_series_dir, with_overrides, write_manifest, write_series_dir,
    ConfigError, ReportBundle, RunConfig, RunManifest, ScalarSection, SERIES_META,
};
use nsk41_core::solver::{self, SnapshotSeries};
use nsk41_core::sweep::{run_sweep, SweepError};

use crate::{exit_code, OutArgs, Overrides};

pub const MANIFEST: &str = "manifest.json";
const THREADS_ENV: &str = "NSK41_THREADS";

struct Loaded {
    /// What the user handed us, verbatim.
    text: String,
    config: RunConfig,
}

fn parse_with(source: &Path, text: &str, flags: &Overrides) -> Result<RunConfig> {
    let effective = with_overrides(text, &flags.pairs()).with_context(|| source.display().to_string())?;
    parse_config(&effective).with_context(|| source.display().to_string())
}

/// A config file, or a manifest from an earlier run whose canonical config
/// is replayed.
fn load_config(path: &Path, flags: &Overrides) -> Result<Loaded> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    if let Ok(m) = serde_json::from_str::<RunManifest>(&text) {
        if !m.hash_matches() {
            let e = ConfigError::Invalid { line: 1, message: "manifest config hash does not match its text".into() };
            return Err(anyhow!(e).context(path.display().to_string()));
        }
        info!("replaying manifest {} (config sha256 {})", path.display(), m.config_sha256);
        let config = parse_with(path, &m.config_canonical, flags)?;
        return Ok(Loaded { text: m.config_text, config });
    }
    let config = parse_with(path, &text, flags)?;
    Ok(Loaded { text, config })
}

fn prepare_out(dir: &Path, force: bool) -> Result<()> {
    if let Ok(mut entries) = std::fs::read_dir(dir) {
        if entries.next().is_some() && !force {
            bail!("{} is not empty; pass --force to overwrite", dir.display());
        }
    }
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

/// Thread count from config or flag, capped by `NSK41_THREADS`.
fn init_threads(requested: usize) -> usize {
    let cap = std::env::var(THREADS_ENV).ok().and_then(|v| v.trim().parse::<usize>().ok()).filter(|c| *c > 0);
    let n = match (requested, cap) {
        (0, Some(c)) => c,
        (r, Some(c)) => r.min(c),
        (r, None) => r,
    };
    if n > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            warn!("thread pool already set up: {e}");
        }
    }
    rayon::current_num_threads()
}

struct Session {
    manifest: RunManifest,
    path: PathBuf,
}

impl Session {
    fn start(command: &str, out: &Path, loaded: &Loaded) -> Result<Self> {
        let threads = init_threads(loaded.config.threads);
        let cfg = &loaded.config;
        let json = serde_json::to_value(cfg).context("serializing config")?;
        let manifest = RunManifest::new(command, &loaded.text, &cfg.canonical_text(), json, cfg.sim.seed, threads);
        let path = out.join(MANIFEST);
        write_manifest(&path, &manifest)?;
        Ok(Self { manifest, path })
    }

    fn finish(mut self, result: Result<()>, outputs: Vec<PathBuf>) -> Result<()> {
        let status = result.as_ref().map_or_else(|e| i32::from(exit_code(e)), |_| 0);
        self.manifest.finish(status, outputs);
        let written = write_manifest(&self.path, &self.manifest);
        result?;
        Ok(written?)
    }
}

fn default_out(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

pub fn run(config: &Path, out: &OutArgs, flags: &Overrides) -> Result<()> {
    let loaded = load_config(config, flags)?;
    let dir = out.out.clone().unwrap_or_else(|| default_out(config, ".out"));
    prepare_out(&dir, out.force)?;
    let session = Session::start("run", &dir, &loaded)?;
    let cfg = &loaded.config;
    let mut outputs = Vec::new();
    let result = (|| -> Result<()> {
        let series = solver::run(&cfg.sim)?;
        outputs.extend(write_series_dir(&dir.join("checkpoints"), &series)?);
        let report = diagnose(&series, &cfg.params)?;
        let scalars = ScalarSection::compute(&series, &cfg.scalar)?;
        let bundle = ReportBundle { reports: vec![report], sweep: None, scalars };
        outputs.extend(emit_reports(&bundle, &dir)?);
        Ok(())
    })();
    session.finish(result, outputs)
}

pub fn sweep(config: &Path, out: &OutArgs, flags: &Overrides) -> Result<()> {
    let loaded = load_config(config, flags)?;
    let sweep_cfg = loaded
        .config
        .sweep_config()
        .ok_or_else(|| anyhow!(ConfigError::Missing("sweep.mu_list")).context(config.display().to_string()))?;
    let dir = out.out.clone().unwrap_or_else(|| default_out(config, ".out"));
    prepare_out(&dir, out.force)?;
    let session = Session::start("sweep", &dir, &loaded)?;
    let mut outputs = Vec::new();
    let member_dir = |i: usize| dir.join("checkpoints").join(format!("mu_{i:02}"));
    let result = (|| -> Result<()> {
        match run_sweep(&sweep_cfg) {
            Ok(res) => {
                for (i, m) in res.members.iter().enumerate() {
                    outputs.extend(write_series_dir(&member_dir(i), &m.series)?);
                }
                let bundle = ReportBundle {
                    reports: res.members.iter().map(|m| m.report.clone()).collect(),
                    sweep: Some(res.summary(sweep_cfg.resolution_floor())),
                    scalars: None,
                };
                outputs.extend(emit_reports(&bundle, &dir)?);
                Ok(())
            }
            Err(e) => {
                if let SweepError::Partial { completed, .. } = &e {
                    warn!("sweep incomplete; writing {} completed members", completed.len());
                    for m in completed {
                        let i = sweep_cfg.ladder.iter().position(|mu| *mu == m.viscosity).unwrap_or(0);
                        outputs.extend(write_series_dir(&member_dir(i), &m.series)?);
                    }
                    let reports = completed.iter().map(|m| m.report.clone()).collect();
                    outputs.extend(emit_reports(&ReportBundle { reports, sweep: None, scalars: None }, &dir)?);
                }
                Err(e.into())
            }
        }
    })();
    session.finish(result, outputs)
}

/// Config text for series that come without a manifest; only the
/// diagnostics keys matter.
fn synthetic_config(series: &SnapshotSeries) -> String {
    let steps = series.steps.len().saturating_sub(1).max(1);
    let mut text = format!(
        "grid.n = {}\ngrid.p = {}\nmu = {}\ndt = {}\nt_end = {}\nic.name = zero\n",
        series.grid.n(),
        series.grid.period(),
        series.viscosity,
        series.dt,
        series.dt * steps as f64,
    );
    if series.viscosity == 0.0 {
        text.push_str("test.inviscid = true\n");
    }
    text
}

/// Nearest manifest at or above `dir` (up to two levels).
fn find_manifest(dir: &Path) -> Option<(PathBuf, RunManifest)> {
    dir.ancestors().take(3).map(|d| d.join(MANIFEST)).find(|p| p.is_file()).and_then(|p| {
        let m = read_manifest(&p).ok()?;
        Some((p, m))
    })
}

/// Diagnostics settings for existing series: the producing run's config if
/// a manifest is found, else defaults; flags win either way.
fn diag_config(dir: &Path, series: &SnapshotSeries, flags: &Overrides) -> Result<Loaded> {
    match find_manifest(dir) {
        Some((path, m)) => {
            info!("diagnostics settings from {}", path.display());
            let config = parse_with(&path, &m.config_canonical, flags)?;
            Ok(Loaded { text: m.config_text, config })
        }
        None => {
            let text = synthetic_config(series);
            let config = parse_with(&dir.join(SERIES_META), &text, flags)?;
            Ok(Loaded { text, config })
        }
    }
}

pub fn diag(checkpoints: &Path, out: &OutArgs, flags: &Overrides) -> Result<()> {
    let series = read_series_dir(checkpoints)?;
    let loaded = diag_config(checkpoints, &series, flags)?;
    let dir = out.out.clone().unwrap_or_else(|| default_out(checkpoints, ".diag"));
    prepare_out(&dir, out.force)?;
    let session = Session::start("diag", &dir, &loaded)?;
    let cfg = &loaded.config;
    let mut outputs = Vec::new();
    let result = (|| -> Result<()> {
        let report = diagnose(&series, &cfg.params)?;
        let scalars = ScalarSection::compute(&series, &cfg.scalar)?;
        outputs.extend(emit_reports(&ReportBundle { reports: vec![report], sweep: None, scalars }, &dir)?);
        Ok(())
    })();
    session.finish(result, outputs)
}

fn series_dirs(root: &Path, depth: usize, found: &mut Vec<PathBuf>) -> Result<()> {
    if root.join(SERIES_META).is_file() {
        found.push(root.to_path_buf());
        return Ok(());
    }
    if depth == 0 {
        return Ok(());
    }
    let mut subdirs: Vec<PathBuf> = std::fs::read_dir(root)
        .with_context(|| format!("listing {}", root.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    subdirs.sort();
    for d in subdirs {
        series_dirs(&d, depth - 1, found)?;
    }
    Ok(())
}

pub fn report(root: &Path, out: &OutArgs, flags: &Overrides) -> Result<()> {
    let mut dirs = Vec::new();
    series_dirs(root, 3, &mut dirs)?;
    if dirs.is_empty() {
        bail!("no checkpoint directories ({SERIES_META}) under {}", root.display());
    }
    let dir = out.out.clone().unwrap_or_else(|| root.join("report"));
    let first = read_series_dir(&dirs[0])?;
    let loaded = diag_config(root, &first, flags)?;
    drop(first);
    prepare_out(&dir, out.force)?;
    let session = Session::start("report", &dir, &loaded)?;
    let cfg = &loaded.config;
    let mut outputs = Vec::new();
    let result = (|| -> Result<()> {
        let mut reports = Vec::with_capacity(dirs.len());
        let mut scalars = None;
        for d in &dirs {
            info!("diagnosing {}", d.display());
            let series = read_series_dir(d)?;
            reports.push(diagnose(&series, &cfg.params)?);
            if scalars.is_none() {
                scalars = ScalarSection::compute(&series, &cfg.scalar)?;
            }
        }
        outputs.extend(emit_reports(&ReportBundle { reports, sweep: None, scalars }, &dir)?);
        Ok(())
    })();
    session.finish(result, outputs)
}
