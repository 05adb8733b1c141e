use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use super::{check_index, scalar_samples, ScalarError};
use crate::solver::SnapshotSeries;

pub const DEFAULT_BINS: usize = 256;
/// Bins span `[−margin, 1 + margin]`.
pub const DEFAULT_MARGIN: f64 = 0.05;

/// Space-time cell partition: `blocks[d]` equal blocks along axis `d` and
/// `windows` equal groups of consecutive snapshots.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CellSpec {
    pub blocks: [usize; 3],
    pub windows: usize,
}

impl CellSpec {
    pub fn whole_domain() -> Self {
        Self { blocks: [1, 1, 1], windows: 1 }
    }

    fn count(&self) -> usize {
        self.blocks.iter().product::<usize>() * self.windows
    }
}

/// Empirical pdf of one cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellHistogram {
    /// `(window, block_x, block_y, block_z)`.
    pub cell: [usize; 4],
    /// Samples in the cell.
    pub count: usize,
    /// Fraction of samples per bin.
    pub mass: Vec<f64>,
    /// Mean sample value per bin; the bin center for empty bins.
    pub centroid: Vec<f64>,
    /// Direct average of the samples, snapshot-major then grid order.
    pub mean: f64,
}

/// Per-cell histograms of one scalar over a series.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct YoungMeasureHistogram {
    pub scalar_index: usize,
    pub viscosity: f64,
    pub spec: CellSpec,
    /// `B + 1` strictly increasing edges.
    pub edges: Vec<f64>,
    pub margin: f64,
    /// Set when observed values forced a wider margin than requested.
    pub extended_from: Option<f64>,
    /// Cells ordered by window, then x, y, z block.
    pub cells: Vec<CellHistogram>,
}

impl YoungMeasureHistogram {
    pub fn bins(&self) -> usize {
        self.edges.len() - 1
    }

    pub fn center(&self, b: usize) -> f64 {
        0.5 * (self.edges[b] + self.edges[b + 1])
    }

    pub fn label(&self) -> String {
        format!("empirical pdf at viscosity {}", self.viscosity)
    }
}

fn uniform_edges(lo: f64, hi: f64, bins: usize) -> Vec<f64> {
    let w = (hi - lo) / bins as f64;
    let mut e: Vec<f64> = (0..=bins).map(|j| lo + j as f64 * w).collect();
    e[bins] = hi;
    e
}

/// Histogram of grid-point values of scalar `index` on each space-time cell.
/// The margin grows (and the growth is recorded) when values fall outside
/// `[−margin, 1 + margin]`.
pub fn young_histogram(
    series: &SnapshotSeries,
    index: usize,
    spec: CellSpec,
    bins: usize,
    margin: f64,
) -> Result<YoungMeasureHistogram, ScalarError> {
    check_index(series, index)?;
    let n = series.grid.n();
    if spec.blocks.iter().any(|&b| b == 0 || n % b != 0) {
        return Err(ScalarError::InvalidCells(format!("blocks {:?} must divide {n}", spec.blocks)));
    }
    if spec.windows == 0 || series.len() % spec.windows != 0 {
        return Err(ScalarError::InvalidCells(format!(
            "{} windows must divide {} snapshots",
            spec.windows,
            series.len()
        )));
    }
    if bins == 0 {
        return Err(ScalarError::InvalidBins("need at least one bin".into()));
    }
    if !(margin >= 0.0) || !margin.is_finite() {
        return Err(ScalarError::InvalidBins(format!("margin must be finite and non-negative, got {margin}")));
    }

    let samples = scalar_samples(series, index);
    let (lo, hi) = samples
        .iter()
        .flatten()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
    if !lo.is_finite() || !hi.is_finite() {
        return Err(ScalarError::InvalidBins("scalar samples are not finite".into()));
    }
    let needed = (-lo).max(hi - 1.0);
    let (margin, extended_from) = if needed > margin {
        let m = needed * 1.01;
        log::info!("scalar {index}: histogram margin extended from {margin} to {m}");
        (m, Some(margin))
    } else {
        (margin, None)
    };
    let edges = uniform_edges(-margin, 1.0 + margin, bins);
    let width = (1.0 + 2.0 * margin) / bins as f64;

    let [bx, by, bz] = spec.blocks;
    let (sx, sy, sz) = (n / bx, n / by, n / bz);
    let per_window = series.len() / spec.windows;
    let cells: Vec<[usize; 4]> = (0..spec.count())
        .map(|c| {
            let z = c % bz;
            let y = (c / bz) % by;
            let x = (c / (bz * by)) % bx;
            [c / (bz * by * bx), x, y, z]
        })
        .collect();

    let cells = cells
        .into_par_iter()
        .map(|cell| {
            let [w, x, y, z] = cell;
            let mut counts = vec![0usize; bins];
            let mut sums = vec![0.0; bins];
            let mut total = 0.0;
            let mut count = 0usize;
            for snap in &samples[w * per_window..(w + 1) * per_window] {
                for i in x * sx..(x + 1) * sx {
                    for j in y * sy..(y + 1) * sy {
                        for k in z * sz..(z + 1) * sz {
                            let v = snap[(i * n + j) * n + k];
                            let b = (((v + margin) / width).floor().max(0.0) as usize).min(bins - 1);
                            counts[b] += 1;
                            sums[b] += v;
                            total += v;
                            count += 1;
                        }
                    }
                }
            }
            let mass = counts.iter().map(|&c| c as f64 / count as f64).collect();
            let centroid = (0..bins)
                .map(|b| if counts[b] > 0 { sums[b] / counts[b] as f64 } else { 0.5 * (edges[b] + edges[b + 1]) })
                .collect();
            CellHistogram { cell, count, mass, centroid, mean: total / count as f64 }
        })
        .collect();

    Ok(YoungMeasureHistogram {
        scalar_index: index,
        viscosity: series.viscosity,
        spec,
        edges,
        margin,
        extended_from,
        cells,
    })
}

/// Convex integrands `β(χ)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum ConvexTestFunction {
    /// `χ`; the equality case.
    Linear,
    /// `χ²`.
    Square,
    /// `χ ln(χ + e)`, defined for `χ > −e`.
    Entropy,
    /// `max(χ − c, 0)`.
    Hinge { c: f64 },
    /// Values on the centers of `bins` uniform bins over `[lo, hi]`,
    /// interpolated linearly (and extrapolated from the end pairs).
    Sampled { lo: f64, hi: f64, values: Vec<f64> },
}

impl ConvexTestFunction {
    /// The named bank used by reports.
    pub fn bank() -> Vec<Self> {
        vec![Self::Linear, Self::Square, Self::Entropy, Self::Hinge { c: 0.5 }]
    }

    /// Sampled `β` on the bin centers of `edges`, accepted only if its
    /// second differences are non-negative up to round-off.
    pub fn sampled(edges: &[f64], values: Vec<f64>) -> Result<Self, ScalarError> {
        if edges.len() < 2 || values.len() != edges.len() - 1 {
            return Err(ScalarError::InvalidBins(format!(
                "{} values for {} edges",
                values.len(),
                edges.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(ScalarError::UndefinedBeta {
                name: "sampled".into(),
                lo: edges[0],
                hi: edges[edges.len() - 1],
            });
        }
        let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
        for b in 1..values.len().saturating_sub(1) {
            let d2 = values[b - 1] - 2.0 * values[b] + values[b + 1];
            if d2 < -1e-12 * scale {
                return Err(ScalarError::NotConvex { bin: b, value: d2 });
            }
        }
        Ok(Self::Sampled { lo: edges[0], hi: edges[edges.len() - 1], values })
    }

    pub fn name(&self) -> String {
        match self {
            Self::Linear => "linear".into(),
            Self::Square => "square".into(),
            Self::Entropy => "entropy".into(),
            Self::Hinge { c } => format!("hinge({c})"),
            Self::Sampled { .. } => "sampled".into(),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Self::Linear => x,
            Self::Square => x * x,
            Self::Entropy => x * (x + std::f64::consts::E).ln(),
            Self::Hinge { c } => (x - c).max(0.0),
            Self::Sampled { lo, hi, values } => {
                let nb = values.len();
                if nb == 1 {
                    return values[0];
                }
                let w = (hi - lo) / nb as f64;
                let s = (x - lo) / w - 0.5;
                let j = (s.floor().max(0.0) as usize).min(nb - 2);
                let t = s - j as f64;
                values[j] + t * (values[j + 1] - values[j])
            }
        }
    }

    /// Whether `β` is finite on `[lo, hi]`.
    pub fn check_support(&self, lo: f64, hi: f64) -> Result<(), ScalarError> {
        let ok = match self {
            Self::Entropy => lo > -std::f64::consts::E,
            _ => self.eval(lo).is_finite() && self.eval(hi).is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(ScalarError::UndefinedBeta { name: self.name(), lo, hi })
        }
    }
}

/// Per-cell `⟨ν, β(χ)⟩ = Σ_b mass_b β(centroid_b)`. The linear case returns
/// the stored direct cell average.
pub fn weak_star_moment(hist: &YoungMeasureHistogram, beta: &ConvexTestFunction) -> Result<Vec<f64>, ScalarError> {
    beta.check_support(hist.edges[0], hist.edges[hist.bins()])?;
    Ok(hist
        .cells
        .iter()
        .map(|c| match beta {
            ConvexTestFunction::Linear => c.mean,
            _ => c.mass.iter().zip(&c.centroid).filter(|(m, _)| **m > 0.0).map(|(m, x)| m * beta.eval(*x)).sum(),
        })
        .collect())
}

/// `cell_t,cell_x,cell_y,cell_z,bin_lo,bin_hi,mass,scalar_index`, one row
/// per cell and bin.
pub fn write_youngs_csv(mut w: impl Write, hists: &[YoungMeasureHistogram]) -> Result<(), ScalarError> {
    writeln!(w, "cell_t,cell_x,cell_y,cell_z,bin_lo,bin_hi,mass,scalar_index")?;
    for h in hists {
        for c in &h.cells {
            let [t, x, y, z] = c.cell;
            for (b, m) in c.mass.iter().enumerate() {
                writeln!(
                    w,
                    "{t},{x},{y},{z},{:.16e},{:.16e},{:.16e},{}",
                    h.edges[b],
                    h.edges[b + 1],
                    m,
                    h.scalar_index
                )?;
            }
        }
    }
    Ok(())
}

/// `scalar_index,cell_t,cell_x,cell_y,cell_z` followed by one column per `β`.
pub fn write_moments_csv(
    mut w: impl Write,
    hists: &[YoungMeasureHistogram],
    betas: &[ConvexTestFunction],
) -> Result<(), ScalarError> {
    write!(w, "scalar_index,cell_t,cell_x,cell_y,cell_z")?;
    for b in betas {
        write!(w, ",{}", b.name())?;
    }
    writeln!(w)?;
    for h in hists {
        let moments = betas.iter().map(|b| weak_star_moment(h, b)).collect::<Result<Vec<_>, _>>()?;
        for (i, c) in h.cells.iter().enumerate() {
            let [t, x, y, z] = c.cell;
            write!(w, "{},{t},{x},{y},{z}", h.scalar_index)?;
            for m in &moments {
                write!(w, ",{:.16e}", m[i])?;
            }
            writeln!(w)?;
        }
    }
    Ok(())
}
