use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{decode_checkpoint, encode_checkpoint, atomic_write, IoError};
use crate::solver::{SimState, SnapshotSeries, StepRecord};

/// Sidecar describing a directory of snapshot checkpoints.
pub const SERIES_META: &str = "series.json";
const FORCING: &str = "forcing.ck";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct SeriesMeta {
    dt: f64,
    stride: usize,
    viscosity: f64,
    scalar_diffusivities: Vec<f64>,
    snapshots: Vec<String>,
    steps: Vec<StepRecord>,
}

fn snapshot_name(i: usize) -> String {
    format!("snap_{i:06}.ck")
}

/// Write every snapshot as a checkpoint, the forcing field, and the step
/// records. Returns the paths written.
pub fn write_series_dir(dir: &Path, series: &SnapshotSeries) -> Result<Vec<PathBuf>, IoError> {
    std::fs::create_dir_all(dir).map_err(|e| IoError::path(dir, e))?;
    let mut written = Vec::with_capacity(series.len() + 2);
    let mut names = Vec::with_capacity(series.len());
    for (i, s) in series.snapshots.iter().enumerate() {
        let name = snapshot_name(i);
        let path = dir.join(&name);
        atomic_write(&path, &encode_checkpoint(s))?;
        written.push(path);
        names.push(name);
    }
    let forcing = SimState::new(0.0, series.forcing.clone(), Vec::new());
    let path = dir.join(FORCING);
    atomic_write(&path, &encode_checkpoint(&forcing))?;
    written.push(path);
    let meta = SeriesMeta {
        dt: series.dt,
        stride: series.stride,
        viscosity: series.viscosity,
        scalar_diffusivities: series.scalar_diffusivities.clone(),
        snapshots: names,
        steps: series.steps.clone(),
    };
    let mut json = serde_json::to_string_pretty(&meta).map_err(|e| IoError::Format(e.to_string()))?;
    json.push('\n');
    let path = dir.join(SERIES_META);
    atomic_write(&path, json.as_bytes())?;
    written.push(path);
    Ok(written)
}

fn read_state(path: &Path) -> Result<SimState, IoError> {
    let bytes = std::fs::read(path).map_err(|e| IoError::path(path, e))?;
    decode_checkpoint(&bytes).map_err(|e| match e {
        IoError::Path { .. } => e,
        other => IoError::Format(format!("{}: {other}", path.display())),
    })
}

/// Inverse of [`write_series_dir`]; bit-exact.
pub fn read_series_dir(dir: &Path) -> Result<SnapshotSeries, IoError> {
    let meta_path = dir.join(SERIES_META);
    let text = std::fs::read_to_string(&meta_path).map_err(|e| IoError::path(&meta_path, e))?;
    let meta: SeriesMeta =
        serde_json::from_str(&text).map_err(|e| IoError::Format(format!("{}: {e}", meta_path.display())))?;
    if meta.snapshots.is_empty() {
        return Err(IoError::Format(format!("{}: no snapshots listed", meta_path.display())));
    }
    let snapshots = meta.snapshots.iter().map(|n| read_state(&dir.join(n))).collect::<Result<Vec<_>, _>>()?;
    let forcing = read_state(&dir.join(FORCING))?.velocity;
    let grid = snapshots[0].velocity.grid();
    if forcing.grid() != grid || snapshots.iter().any(|s| s.velocity.grid() != grid) {
        return Err(IoError::Format(format!("{}: grids differ between files", dir.display())));
    }
    if snapshots.iter().any(|s| s.scalars.len() != meta.scalar_diffusivities.len()) {
        return Err(IoError::Format(format!("{}: scalar count differs from {SERIES_META}", dir.display())));
    }
    Ok(SnapshotSeries {
        grid,
        dt: meta.dt,
        stride: meta.stride,
        viscosity: meta.viscosity,
        scalar_diffusivities: meta.scalar_diffusivities,
        forcing,
        snapshots,
        steps: meta.steps,
    })
}
