use serde::Serialize;

use super::SnapshotSeries;

/// Energy balance over one snapshot interval, in physical units
/// (`‖u‖² = ∫|u|² dx`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BudgetRow {
    pub t_start: f64,
    pub t_end: f64,
    /// `‖u(t₂)‖² − ‖u(t₁)‖²`
    pub energy_change: f64,
    /// `2 ∫ μ‖∇u‖² dt`
    pub dissipation: f64,
    /// `2 ∫∫ f·u dx dt`
    pub injection: f64,
    /// `energy_change + dissipation − injection`
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BudgetTable {
    pub rows: Vec<BudgetRow>,
    /// `(t, ε(t))` at every step.
    pub dissipation_rate: Vec<(f64, f64)>,
}

impl BudgetTable {
    pub fn max_abs_residual(&self) -> f64 {
        self.rows.iter().map(|r| r.residual.abs()).fold(0.0, f64::max)
    }

    /// Sum of residuals over the whole horizon.
    pub fn total_residual(&self) -> f64 {
        self.rows.iter().map(|r| r.residual).sum()
    }
}

/// Per-interval energy budget of a series.
pub fn energy_budget(series: &SnapshotSeries) -> BudgetTable {
    let vol = series.grid.volume();
    let rows = (1..series.len())
        .map(|i| {
            let (a, b) = (series.record_at_snapshot(i - 1), series.record_at_snapshot(i));
            let energy_change = 2.0 * vol * (b.energy - a.energy);
            let dissipation = 2.0 * (b.cumulative_dissipation - a.cumulative_dissipation);
            let injection = 2.0 * (b.cumulative_injection - a.cumulative_injection);
            BudgetRow {
                t_start: a.time,
                t_end: b.time,
                energy_change,
                dissipation,
                injection,
                residual: energy_change + dissipation - injection,
            }
        })
        .collect();
    BudgetTable {
        rows,
        dissipation_rate: series.steps.iter().map(|r| (r.time, r.dissipation_rate)).collect(),
    }
}
