use std::fs;
use std::io::Write;
use std::path::Path;

use num_complex::Complex64;

use super::IoError;
use crate::solver::SimState;
use crate::spectral::{SpectralField, TorusGrid};

pub const CHECKPOINT_MAGIC: &[u8; 6] = b"NSK41\0";
pub const CHECKPOINT_VERSION: u32 = 1;
const HEADER_LEN: usize = 6 + 4 + 8 + 4 + 4 + 4 + 8;

/// Serialize a state: header then every coefficient, real part before
/// imaginary part, in storage order, all little-endian.
pub fn encode_checkpoint(state: &SimState) -> Vec<u8> {
    let g = state.velocity.grid();
    let ncomp = 3 + state.scalars.len();
    let mut out = Vec::with_capacity(HEADER_LEN + ncomp * g.len() * 16);
    out.extend_from_slice(CHECKPOINT_MAGIC);
    out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    out.extend_from_slice(&g.period().to_le_bytes());
    out.extend_from_slice(&(g.n() as u32).to_le_bytes());
    out.extend_from_slice(&3u32.to_le_bytes());
    out.extend_from_slice(&(state.scalars.len() as u32).to_le_bytes());
    out.extend_from_slice(&state.time.to_le_bytes());
    let comps = state.velocity.components().iter().chain(state.scalars.iter().map(|s| &s.components()[0]));
    for c in comps {
        for z in c {
            out.extend_from_slice(&z.re.to_le_bytes());
            out.extend_from_slice(&z.im.to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take<const K: usize>(&mut self) -> Result<[u8; K], IoError> {
        let end = self.pos + K;
        let slice = self.bytes.get(self.pos..end).ok_or(IoError::Truncated {
            expected: end,
            found: self.bytes.len(),
        })?;
        self.pos = end;
        Ok(slice.try_into().expect("slice length"))
    }
    fn u32(&mut self) -> Result<u32, IoError> {
        self.take::<4>().map(u32::from_le_bytes)
    }
    fn f64(&mut self) -> Result<f64, IoError> {
        self.take::<8>().map(f64::from_le_bytes)
    }
}

pub fn decode_checkpoint(bytes: &[u8]) -> Result<SimState, IoError> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take::<6>()? != *CHECKPOINT_MAGIC {
        return Err(IoError::BadMagic);
    }
    let version = r.u32()?;
    if version != CHECKPOINT_VERSION {
        return Err(IoError::VersionMismatch { found: version, expected: CHECKPOINT_VERSION });
    }
    let period = r.f64()?;
    let n = r.u32()? as usize;
    let nvel = r.u32()? as usize;
    let nscalars = r.u32()? as usize;
    let time = r.f64()?;
    let grid = TorusGrid::new(period, n).map_err(|e| IoError::Format(e.to_string()))?;
    if nvel != 3 {
        return Err(IoError::Format(format!("expected 3 velocity components, header says {nvel}")));
    }
    let expected = HEADER_LEN + (nvel + nscalars) * grid.len() * 16;
    if bytes.len() < expected {
        return Err(IoError::Truncated { expected, found: bytes.len() });
    }
    if bytes.len() > expected {
        return Err(IoError::Format(format!("{} trailing bytes", bytes.len() - expected)));
    }
    let mut comps = Vec::with_capacity(nvel + nscalars);
    for _ in 0..nvel + nscalars {
        let mut c = Vec::with_capacity(grid.len());
        for _ in 0..grid.len() {
            let re = r.f64()?;
            let im = r.f64()?;
            c.push(Complex64::new(re, im));
        }
        comps.push(c);
    }
    let scalars = comps
        .split_off(3)
        .into_iter()
        .map(|c| SpectralField::from_components(grid, vec![c]))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| IoError::Format(e.to_string()))?;
    let mut velocity = SpectralField::from_components(grid, comps).map_err(|e| IoError::Format(e.to_string()))?;
    // restore the tag when the stored field qualifies
    let _ = velocity.tag_divergence_free();
    Ok(SimState { time, velocity, scalars })
}

pub fn write_checkpoint(path: &Path, state: &SimState) -> Result<(), IoError> {
    atomic_write(path, &encode_checkpoint(state))
}

pub fn read_checkpoint(path: &Path) -> Result<SimState, IoError> {
    let bytes = fs::read(path).map_err(|e| IoError::path(path, e))?;
    decode_checkpoint(&bytes)
}

/// Write to a sibling temporary file, then rename over the target.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<(), IoError> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = dir.join(format!(".{name}.tmp"));
    let mut f = fs::File::create(&tmp).map_err(|e| IoError::path(&tmp, e))?;
    f.write_all(bytes).map_err(|e| IoError::path(&tmp, e))?;
    f.sync_all().map_err(|e| IoError::path(&tmp, e))?;
    drop(f);
    fs::rename(&tmp, path).map_err(|e| IoError::path(path, e))
}
