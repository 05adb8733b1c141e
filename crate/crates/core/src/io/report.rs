use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::{atomic_write, IoError, ScalarOptions};
use crate::diagnostics::DiagnosticsReport;
use crate::scalar::{
    convex_transport_residual, default_scalar_test_bank, maximum_principle_check, sum_to_one_defect,
    write_moments_csv, write_youngs_csv, young_histogram, ConvexTestFunction, ScalarBank, ScalarError,
    ScalarExtremes, TransportRow, YoungMeasureHistogram,
};
use crate::solver::SnapshotSeries;
use crate::sweep::SweepSummary;

/// Passive-scalar results of one run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalarSection {
    pub bank: ScalarBank,
    pub extremes: Vec<ScalarExtremes>,
    /// `max_x |Σχᵢ − 1|` per snapshot.
    pub sum_to_one: Vec<f64>,
    pub transport: Vec<TransportRow>,
    pub betas: Vec<ConvexTestFunction>,
    /// Labels of the histograms, e.g. "empirical pdf at viscosity 0.01".
    pub histogram_labels: Vec<String>,
    #[serde(skip_serializing)]
    pub histograms: Vec<YoungMeasureHistogram>,
}

impl ScalarSection {
    /// All scalar diagnostics of a series with the named `β` bank, or `None`
    /// when the run has no scalars.
    pub fn compute(series: &SnapshotSeries, options: &ScalarOptions) -> Result<Option<Self>, ScalarError> {
        let count = series.scalar_diffusivities.len();
        if count == 0 {
            return Ok(None);
        }
        let t0 = series.snapshots[0].time;
        let t1 = series.snapshots[series.len() - 1].time;
        let bank = default_scalar_test_bank(series.grid, t0, t1);
        let betas = ConvexTestFunction::bank();
        let mut transport = Vec::new();
        let mut histograms = Vec::with_capacity(count);
        for i in 0..count {
            for beta in &betas {
                transport.extend(convex_transport_residual(series, i, beta, &bank)?);
            }
            histograms.push(young_histogram(series, i, options.cells, options.bins, options.margin)?);
        }
        Ok(Some(Self {
            bank: ScalarBank::of(series),
            extremes: maximum_principle_check(series),
            sum_to_one: sum_to_one_defect(series)?,
            transport,
            betas,
            histogram_labels: histograms.iter().map(YoungMeasureHistogram::label).collect(),
            histograms,
        }))
    }
}

/// Everything one command emits.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportBundle {
    /// One report per run (one per ladder member for sweeps).
    pub reports: Vec<DiagnosticsReport>,
    pub sweep: Option<SweepSummary>,
    pub scalars: Option<ScalarSection>,
}

/// Digits used for every float in CSV output; enough for exact round trips.
fn num(x: f64) -> String {
    format!("{x:.16e}")
}

struct Table {
    text: String,
}

impl Table {
    /// A parameter comment line then the header with units in brackets.
    fn new(params: &str, columns: &[(&str, &str)]) -> Self {
        let mut text = format!("# {params}\n");
        let head: Vec<String> = columns.iter().map(|(c, u)| format!("{c}[{u}]")).collect();
        text.push_str(&head.join(","));
        text.push('\n');
        Self { text }
    }

    fn row(&mut self, cells: &[String]) {
        self.text.push_str(&cells.join(","));
        self.text.push('\n');
    }
}

fn params_line(r: &DiagnosticsReport) -> String {
    let p = &r.params;
    format!(
        "mu={} alpha={} beta={} k_star={} q={} stride={} dt={} n={} period={}",
        r.series.viscosity, p.alpha, p.beta, p.k_star, p.q, r.series.stride, r.series.dt, r.series.n, r.series.period
    )
}

fn spectrum_csv(reports: &[DiagnosticsReport], params: &str) -> String {
    let mut t = Table::new(
        params,
        &[("mu", "L^2/T"), ("time", "T"), ("shell", "1"), ("k", "1/L"), ("energy", "L^2/T^2")],
    );
    for r in reports {
        let k0 = 2.0 * std::f64::consts::PI / r.series.period;
        for s in &r.spectra {
            for (shell, e) in s.energy.iter().enumerate() {
                t.row(&[num(r.series.viscosity), num(s.time), shell.to_string(), num(shell as f64 * k0), num(*e)]);
            }
        }
    }
    t.text
}

fn k41_csv(reports: &[DiagnosticsReport], params: &str) -> String {
    let mut t = Table::new(
        params,
        &[("mu", "L^2/T"), ("shell", "1"), ("k", "1/L"), ("integral", "L^2/T"), ("weighted", "L^(1/3)/T")],
    );
    for r in reports {
        for row in &r.k41_shell.rows {
            t.row(&[num(r.series.viscosity), row.shell.to_string(), num(row.k), num(row.integral), num(row.weighted)]);
        }
    }
    t.text
}

fn k41w_csv(reports: &[DiagnosticsReport], params: &str) -> String {
    let mut t = Table::new(
        params,
        &[
            ("mu", "L^2/T"),
            ("n1", "1"),
            ("n2", "1"),
            ("n3", "1"),
            ("k", "1/L"),
            ("integral", "L^2/T"),
            ("weighted", "L^(-1-beta)/T"),
        ],
    );
    for r in reports {
        for row in &r.k41w.rows {
            let [a, b, c] = row.mode;
            t.row(&[
                num(r.series.viscosity),
                a.to_string(),
                b.to_string(),
                c.to_string(),
                num(row.k),
                num(row.integral),
                num(row.weighted),
            ]);
        }
    }
    t.text
}

fn modulus_csv(reports: &[DiagnosticsReport], params: &str) -> String {
    let mut t = Table::new(params, &[("mu", "L^2/T"), ("lag", "T"), ("omega2", "L^5/T")]);
    for r in reports {
        for row in &r.modulus {
            t.row(&[num(r.series.viscosity), num(row.dt), num(row.omega2)]);
        }
    }
    t.text
}

fn jtrace_csv(reports: &[DiagnosticsReport], params: &str) -> String {
    let mut t = Table::new(
        params,
        &[
            ("mu", "L^2/T"),
            ("lag", "T"),
            ("delta", "L"),
            ("alpha", "1"),
            ("lhs", "L^5/T"),
            ("j1", "L^5/T"),
            ("j2", "L^5/T"),
            ("j3", "L^5/T"),
            ("j4", "L^5/T"),
            ("identity_residual", "L^5/T"),
            ("relative_residual", "1"),
            ("c1", "L^(15/2)/T^2"),
            ("c2", "L^5/T^2"),
            ("c3", "L^(5-alpha)/T"),
            ("c4", "L^5/T^2"),
            ("c5", "L^(15/2)/T^2"),
            ("bound", "L^5/T"),
            ("delta_opt", "L"),
        ],
    );
    for r in reports {
        for j in &r.jtrace {
            t.row(&[
                num(r.series.viscosity),
                num(j.dt),
                num(j.delta),
                num(j.alpha),
                num(j.lhs),
                num(j.j1),
                num(j.j2),
                num(j.j3),
                num(j.j4),
                num(j.identity_residual),
                num(j.relative_residual),
                num(j.c1),
                num(j.c2),
                num(j.c3),
                num(j.c4),
                num(j.c5),
                num(j.bound),
                j.delta_opt.map(num).unwrap_or_default(),
            ]);
        }
    }
    t.text
}

fn budget_csv(reports: &[DiagnosticsReport], params: &str) -> String {
    let mut t = Table::new(
        params,
        &[
            ("mu", "L^2/T"),
            ("t_start", "T"),
            ("t_end", "T"),
            ("energy_change", "L^5/T^2"),
            ("dissipation", "L^5/T^2"),
            ("injection", "L^5/T^2"),
            ("residual", "L^5/T^2"),
        ],
    );
    for r in reports {
        for b in &r.energy_budget {
            t.row(&[
                num(r.series.viscosity),
                num(b.t_start),
                num(b.t_end),
                num(b.energy_change),
                num(b.dissipation),
                num(b.injection),
                num(b.residual),
            ]);
        }
    }
    t.text
}

fn dissipation_csv(reports: &[DiagnosticsReport], params: &str) -> String {
    let mut t = Table::new(params, &[("mu", "L^2/T"), ("time", "T"), ("epsilon", "L^2/T^3")]);
    for r in reports {
        for (time, eps) in &r.dissipation {
            t.row(&[num(r.series.viscosity), num(*time), num(*eps)]);
        }
    }
    t.text
}

fn sweep_csv(sweep: Option<&SweepSummary>, params: &str) -> String {
    let mut t = Table::new(
        params,
        &[
            ("mu", "L^2/T"),
            ("under_resolved", "bool"),
            ("k41w", "L^(-1-beta)/T"),
            ("sobolev", "L^(5-2alpha)/T"),
            ("cauchy_l2_next", "L^(5/2)/T^(1/2)"),
            ("cauchy_lq_next", "L^(1+4/q)/T^(1-1/q)"),
        ],
    );
    if let Some(s) = sweep {
        for (i, mu) in s.ladder.iter().enumerate() {
            let next = |m: &Vec<Vec<f64>>| m.get(i).and_then(|r| r.get(i + 1)).copied().map(num).unwrap_or_default();
            t.row(&[
                num(*mu),
                s.under_resolved[i].to_string(),
                num(s.k41w[i]),
                num(s.sobolev[i]),
                next(&s.cauchy_l2),
                next(&s.cauchy_lq),
            ]);
        }
    }
    t.text
}

fn transport_csv(scalars: Option<&ScalarSection>, params: &str) -> String {
    let mut t = Table::new(
        params,
        &[
            ("scalar_index", "1"),
            ("beta", "name"),
            ("test", "name"),
            ("residual", "L^3"),
            ("viscous_term", "L^3"),
            ("test_norm", "L^(3/2)T^(1/2)"),
            ("beta_norm", "L^(3/2)T^(1/2)"),
            ("normalized", "1"),
        ],
    );
    if let Some(s) = scalars {
        for r in &s.transport {
            t.row(&[
                r.scalar_index.to_string(),
                r.beta.clone(),
                r.test.clone(),
                num(r.residual),
                num(r.viscous_term),
                num(r.test_norm),
                num(r.beta_norm),
                num(r.normalized),
            ]);
        }
    }
    t.text
}

/// Names of the files [`emit_reports`] writes, in write order.
pub const REPORT_FILES: &[&str] = &[
    "report.json",
    "spectrum.csv",
    "k41.csv",
    "k41w.csv",
    "modulus.csv",
    "jtrace.csv",
    "budget.csv",
    "dissipation.csv",
    "sweep.csv",
    "transport.csv",
    "youngs.csv",
    "moments.csv",
];

/// Write the JSON tree and every CSV table into `dir`. Tables without data
/// are written header-only. Returns the written paths.
pub fn emit_reports(bundle: &ReportBundle, dir: &Path) -> Result<Vec<PathBuf>, IoError> {
    std::fs::create_dir_all(dir).map_err(|e| IoError::path(dir, e))?;
    let params = match bundle.reports.first() {
        Some(r) => {
            let mus: Vec<String> = bundle.reports.iter().map(|r| r.series.viscosity.to_string()).collect();
            let mut line = params_line(r);
            if bundle.reports.len() > 1 {
                let _ = write!(line, " ladder={}", mus.join(";"));
            }
            line
        }
        None => "empty".to_string(),
    };
    let json = serde_json::to_string_pretty(bundle).map_err(|e| IoError::Format(e.to_string()))?;
    let reports = &bundle.reports;
    let mut youngs = Vec::new();
    let mut moments = Vec::new();
    let (hists, betas) = match &bundle.scalars {
        Some(s) => (s.histograms.as_slice(), s.betas.as_slice()),
        None => (&[][..], &[][..]),
    };
    write_youngs_csv(&mut youngs, hists).map_err(|e| IoError::Format(e.to_string()))?;
    write_moments_csv(&mut moments, hists, betas).map_err(|e| IoError::Format(e.to_string()))?;
    let contents: Vec<Vec<u8>> = vec![
        json.into_bytes(),
        spectrum_csv(reports, &params).into_bytes(),
        k41_csv(reports, &params).into_bytes(),
        k41w_csv(reports, &params).into_bytes(),
        modulus_csv(reports, &params).into_bytes(),
        jtrace_csv(reports, &params).into_bytes(),
        budget_csv(reports, &params).into_bytes(),
        dissipation_csv(reports, &params).into_bytes(),
        sweep_csv(bundle.sweep.as_ref(), &params).into_bytes(),
        transport_csv(bundle.scalars.as_ref(), &params).into_bytes(),
        youngs,
        moments,
    ];
    let mut paths = Vec::with_capacity(REPORT_FILES.len());
    for (name, bytes) in REPORT_FILES.iter().zip(contents) {
        let path = dir.join(name);
        atomic_write(&path, &bytes)?;
        paths.push(path);
    }
    Ok(paths)
}
