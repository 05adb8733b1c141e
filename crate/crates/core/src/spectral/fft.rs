//! Unnormalized three-dimensional complex FFTs over an `n³` row-major cube.
//!
//! Every line transform is independent, so the parallel split never changes
//! the arithmetic and results are identical for any thread count.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftDirection, FftPlanner};

type Plan = Arc<dyn Fft<f64>>;

fn plan(n: usize, direction: FftDirection) -> Plan {
    static PLANS: OnceLock<Mutex<HashMap<(usize, bool), Plan>>> = OnceLock::new();
    let key = (n, matches!(direction, FftDirection::Forward));
    let mut cache = PLANS
        .get_or_init(|| Mutex::new(HashMap::new()))
        .lock()
        .expect("fft plan cache poisoned");
    cache
        .entry(key)
        .or_insert_with(|| FftPlanner::new().plan_fft(n, direction))
        .clone()
}

/// `X(k) = Σ_x a(x) e^{-i k·x}` in place (no normalization).
pub fn forward(data: &mut [Complex64], n: usize) {
    transform(data, n, FftDirection::Forward);
}

/// `a(x) = Σ_k X(k) e^{+i k·x}` in place (no normalization).
pub fn inverse(data: &mut [Complex64], n: usize) {
    transform(data, n, FftDirection::Inverse);
}

fn transform(data: &mut [Complex64], n: usize, direction: FftDirection) {
    assert_eq!(data.len(), n * n * n, "fft buffer is not n³");
    let fft = plan(n, direction);
    let scratch_len = fft.get_inplace_scratch_len();

    // axis 3: contiguous lines
    data.par_chunks_mut(n * n).for_each_init(
        || vec![Complex64::default(); scratch_len],
        |scratch, plane| fft.process_with_scratch(plane, scratch),
    );

    // axis 2: strided within each i1-plane
    data.par_chunks_mut(n * n).for_each_init(
        || (vec![Complex64::default(); n], vec![Complex64::default(); scratch_len]),
        |(line, scratch), plane| {
            for i3 in 0..n {
                for i2 in 0..n {
                    line[i2] = plane[i2 * n + i3];
                }
                fft.process_with_scratch(line, scratch);
                for i2 in 0..n {
                    plane[i2 * n + i3] = line[i2];
                }
            }
        },
    );

    // axis 1: transpose so that i1 is contiguous, transform, transpose back
    let mut transposed = vec![Complex64::default(); data.len()];
    {
        let src: &[Complex64] = data;
        transposed
            .par_chunks_mut(n)
            .enumerate()
            .for_each(|(row, line)| {
                // row = i2 * n + i3
                for (i1, v) in line.iter_mut().enumerate() {
                    *v = src[i1 * n * n + row];
                }
            });
    }
    transposed.par_chunks_mut(n * n).for_each_init(
        || vec![Complex64::default(); scratch_len],
        |scratch, block| fft.process_with_scratch(block, scratch),
    );
    data.par_chunks_mut(n * n)
        .enumerate()
        .for_each(|(i1, plane)| {
            for (row, v) in plane.iter_mut().enumerate() {
                *v = transposed[row * n + i1];
            }
        });
}
