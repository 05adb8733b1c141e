//! Time quadrature and least-squares helpers shared by the diagnostics.

/// Composite trapezoid weights for `n` equally spaced nodes.
pub fn trapezoid_weights(n: usize, h: f64) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => {
            let mut w = vec![h; n];
            w[0] = 0.5 * h;
            w[n - 1] = 0.5 * h;
            w
        }
    }
}

pub fn trapezoid(values: &[f64], h: f64) -> f64 {
    let w = trapezoid_weights(values.len(), h);
    values.iter().zip(&w).map(|(v, w)| v * w).sum()
}

/// Stencil width of [`interval_weights`].
pub const LAGRANGE_POINTS: usize = 6;

// 4-point Gauss-Legendre on [0, 1], exact for the degree-5 basis polynomials.
const GL_NODES: [f64; 4] = [
    0.069_431_844_202_973_71,
    0.330_009_478_207_571_9,
    0.669_990_521_792_428_1,
    0.930_568_155_797_026_3,
];
const GL_WEIGHTS: [f64; 4] = [
    0.173_927_422_568_726_9,
    0.326_072_577_431_273_1,
    0.326_072_577_431_273_1,
    0.173_927_422_568_726_9,
];

/// Weights integrating over `[a·h, b·h]` from samples at nodes `0..n`
/// spaced `h` apart. Each unit sub-interval is integrated with the
/// Lagrange interpolant through the nearest six nodes (fewer when `n < 6`),
/// so stencils may reach outside `[a, b]`.
pub fn interval_weights(n: usize, h: f64, a: usize, b: usize) -> Vec<f64> {
    assert!(a <= b && b < n, "interval {a}..{b} outside {n} nodes");
    let mut w = vec![0.0; n];
    let width = LAGRANGE_POINTS.min(n);
    for i in a..b {
        let start = (i + 1).saturating_sub(width / 2).min(n - width);
        let nodes: Vec<usize> = (start..start + width).collect();
        for (j, &nj) in nodes.iter().enumerate() {
            let mut integral = 0.0;
            for (x, gw) in GL_NODES.iter().zip(GL_WEIGHTS) {
                let s = i as f64 + x;
                let mut l = 1.0;
                for (m, &nm) in nodes.iter().enumerate() {
                    if m != j {
                        l *= (s - nm as f64) / (nj as f64 - nm as f64);
                    }
                }
                integral += gw * l;
            }
            w[nj] += h * integral;
        }
    }
    w
}

/// Ordinary least squares `y ≈ slope·x + intercept`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the slope (zero for two points or an exact fit).
    pub slope_stderr: f64,
    /// Root-mean-square residual.
    pub rms_residual: f64,
}

pub fn linear_fit(x: &[f64], y: &[f64]) -> Option<LinearFit> {
    let n = x.len();
    if n < 2 || n != y.len() {
        return None;
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    if !(sxx > 0.0) {
        return None;
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let slope_stderr = if n > 2 { (ss / (nf - 2.0) / sxx).sqrt() } else { 0.0 };
    Some(LinearFit { slope, intercept, slope_stderr, rms_residual: (ss / nf).sqrt() })
}
