use rayon::prelude::*;

const BLOCK: usize = 4096;

/// `Σ_{i<n} f(i)` with a fixed blocking, so the result is bit-identical for
/// any thread count.
pub(crate) fn par_sum<F>(n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync,
{
    let blocks: Vec<f64> = (0..n.div_ceil(BLOCK))
        .into_par_iter()
        .map(|b| (b * BLOCK..((b + 1) * BLOCK).min(n)).map(&f).sum::<f64>())
        .collect();
    pairwise(&blocks)
}

/// Pairwise summation of a slice.
pub(crate) fn pairwise(v: &[f64]) -> f64 {
    match v.len() {
        0 => 0.0,
        1 => v[0],
        n if n <= 8 => v.iter().sum(),
        n => pairwise(&v[..n / 2]) + pairwise(&v[n / 2..]),
    }
}
