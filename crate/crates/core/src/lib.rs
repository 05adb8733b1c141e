//! Pseudo-spectral incompressible Navier-Stokes on the periodic 3-torus,
//! with diagnostics for Kolmogorov-type spectral bounds, compactness moduli,
//! vanishing-viscosity sweeps and passive-scalar Young measures.

pub mod diagnostics;
pub mod io;
pub mod scalar;
pub mod solver;
pub mod spectral;
pub mod sweep;
mod util;
