//! Thin wrappers over `rustfft` for square 1D/2D arrays stored row-major.

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{FftDirection, FftPlanner};

/// In-place unnormalized DFT along every axis of an `n^dim` array.
pub(crate) fn transform(data: &mut [Complex64], n: usize, dim: usize, direction: FftDirection) {
    debug_assert_eq!(data.len(), n.pow(dim as u32));
    let fft = FftPlanner::new().plan_fft(n, direction);
    let scratch_len = fft.get_inplace_scratch_len();
    let rows = |data: &mut [Complex64]| {
        data.par_chunks_mut(n).for_each_init(
            || vec![Complex64::default(); scratch_len],
            |scratch, row| fft.process_with_scratch(row, scratch),
        );
    };
    rows(data);
    if dim == 2 {
        transpose(data, n);
        rows(data);
        transpose(data, n);
    }
}

/// Sequential variant of [`transform`] with a caller-provided plan, for use
/// inside an outer parallel loop.
pub(crate) fn transform_with(
    fft: &dyn rustfft::Fft<f64>,
    data: &mut [Complex64],
    n: usize,
    dim: usize,
    scratch: &mut Vec<Complex64>,
) {
    scratch.resize(fft.get_inplace_scratch_len(), Complex64::default());
    for row in data.chunks_mut(n) {
        fft.process_with_scratch(row, scratch);
    }
    if dim == 2 {
        transpose(data, n);
        for row in data.chunks_mut(n) {
            fft.process_with_scratch(row, scratch);
        }
        transpose(data, n);
    }
}

fn transpose(data: &mut [Complex64], n: usize) {
    for i in 0..n {
        for j in (i + 1)..n {
            data.swap(i * n + j, j * n + i);
        }
    }
}

/// Linear correlation-style convolution `out_i = Σ_j f_j k_{i-j}` for
/// `i, j ∈ [0, n)^dim`, where `kernel` holds `k_m` for `m ∈ (-n, n)^dim`
/// stored at index `m mod 2n` on a `(2n)^dim` array.
pub(crate) fn linear_convolve(f: &[Complex64], kernel: &[Complex64], n: usize, dim: usize) -> Vec<Complex64> {
    let p = 2 * n;
    let total = p.pow(dim as u32);
    debug_assert_eq!(kernel.len(), total);
    let mut a = vec![Complex64::default(); total];
    match dim {
        1 => a[..n].copy_from_slice(f),
        _ => {
            for i in 0..n {
                a[i * p..i * p + n].copy_from_slice(&f[i * n..(i + 1) * n]);
            }
        }
    }
    let mut b = kernel.to_vec();
    transform(&mut a, p, dim, FftDirection::Forward);
    transform(&mut b, p, dim, FftDirection::Forward);
    let norm = 1.0 / total as f64;
    a.par_iter_mut().zip(b.par_iter()).for_each(|(x, y)| *x *= *y * norm);
    transform(&mut a, p, dim, FftDirection::Inverse);
    match dim {
        1 => a.truncate(n),
        _ => {
            let mut out = Vec::with_capacity(n * n);
            for i in 0..n {
                out.extend_from_slice(&a[i * p..i * p + n]);
            }
            a = out;
        }
    }
    a
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_convolve_matches_direct_sum_1d() {
        let n = 8;
        let f: Vec<Complex64> = (0..n).map(|j| Complex64::new(j as f64, 1.0)).collect();
        let km = |m: i64| Complex64::new((m as f64).cos(), 0.1 * m as f64);
        let mut kernel = vec![Complex64::default(); 2 * n];
        for m in -(n as i64 - 1)..(n as i64) {
            kernel[m.rem_euclid(2 * n as i64) as usize] = km(m);
        }
        let out = linear_convolve(&f, &kernel, n, 1);
        for i in 0..n {
            let direct: Complex64 = (0..n).map(|j| f[j] * km(i as i64 - j as i64)).sum();
            assert!((out[i] - direct).norm() < 1e-12);
        }
    }

    #[test]
    fn linear_convolve_matches_direct_sum_2d() {
        let n = 8;
        let f: Vec<Complex64> = (0..n * n).map(|j| Complex64::new((j as f64 * 0.37).sin(), 0.0)).collect();
        let km = |a: i64, b: i64| Complex64::new((-(a * a + 2 * b * b) as f64 / 9.0).exp(), 0.0);
        let p = 2 * n as i64;
        let mut kernel = vec![Complex64::default(); (2 * n) * (2 * n)];
        for a in -(n as i64 - 1)..(n as i64) {
            for b in -(n as i64 - 1)..(n as i64) {
                kernel[(a.rem_euclid(p) * p + b.rem_euclid(p)) as usize] = km(a, b);
            }
        }
        let out = linear_convolve(&f, &kernel, n, 2);
        for i0 in 0..n {
            for i1 in 0..n {
                let mut direct = Complex64::default();
                for j0 in 0..n {
                    for j1 in 0..n {
                        direct += f[j0 * n + j1] * km(i0 as i64 - j0 as i64, i1 as i64 - j1 as i64);
                    }
                }
                assert!((out[i0 * n + i1] - direct).norm() < 1e-12);
            }
        }
    }
}
