//! Short-time Fourier transform
//! `V_φ f(x, ξ) = ∫ f(y) conj(φ(y - x)) e^{-2πi y·ξ} dy` on grids.

use std::f64::consts::PI;
use std::io::Write;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::fft;
use crate::grid::{self, Grid, SampledFunction};
use crate::kernels::{heat, poisson};
use crate::numeric;

/// Samples of a function of `(x, ξ)` on `grid_x × grid_xi`, stored with `x`
/// as the slow index.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSpaceFunction {
    grid_x: Grid,
    grid_xi: Grid,
    values: Vec<Complex64>,
}

impl PhaseSpaceFunction {
    pub fn new(grid_x: Grid, grid_xi: Grid, values: Vec<Complex64>) -> Result<Self> {
        if grid_x.dim() != grid_xi.dim() {
            return Err(Error::GridMismatch("space and frequency dimensions differ".into()));
        }
        if values.len() != grid_x.len() * grid_xi.len() {
            return Err(Error::param(format!(
                "expected {} samples, got {}",
                grid_x.len() * grid_xi.len(),
                values.len()
            )));
        }
        if values.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::NonFinite("phase-space sample".into()));
        }
        Ok(Self { grid_x, grid_xi, values })
    }

    /// Evaluate `f(x, ξ)` on the product grid.
    pub fn from_fn<F>(grid_x: Grid, grid_xi: Grid, f: F) -> Result<Self>
    where
        F: Fn(&[f64], &[f64]) -> Complex64 + Sync,
    {
        let m = grid_xi.len();
        let dim = grid_x.dim();
        let values = (0..grid_x.len() * m)
            .into_par_iter()
            .map(|i| {
                let x = grid_x.point(i / m);
                let xi = grid_xi.point(i % m);
                f(&x[..dim], &xi[..dim])
            })
            .collect();
        Self::new(grid_x, grid_xi, values)
    }

    pub fn grid_x(&self) -> &Grid {
        &self.grid_x
    }

    pub fn grid_xi(&self) -> &Grid {
        &self.grid_xi
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn get(&self, ix: usize, ixi: usize) -> Complex64 {
        self.values[ix * self.grid_xi.len() + ixi]
    }

    /// Row of values at the space sample `ix`.
    pub fn row(&self, ix: usize) -> &[Complex64] {
        let m = self.grid_xi.len();
        &self.values[ix * m..(ix + 1) * m]
    }

    /// `Σ F conj(G) Δx^n Δξ^n`.
    pub fn inner(&self, other: &PhaseSpaceFunction) -> Result<Complex64> {
        self.grid_x.ensure_matches(&other.grid_x, "phase-space inner product")?;
        self.grid_xi.ensure_matches(&other.grid_xi, "phase-space inner product")?;
        let vol = self.grid_x.cell_volume() * self.grid_xi.cell_volume();
        Ok(numeric::sum_complex(self.values.iter().zip(&other.values).map(|(a, b)| a * b.conj())) * vol)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "# grids")?;
        writeln!(w, "# x={};xi={}", self.grid_x, self.grid_xi)?;
        let m = self.grid_xi.len();
        for (i, z) in self.values.iter().enumerate() {
            writeln!(w, "{},{},{},{}", i / m, i % m, z.re, z.im)?;
        }
        Ok(())
    }
}

/// Row-at-a-time STFT evaluator: one transform per translate.
pub struct StftPlan<'a> {
    f: &'a SampledFunction,
    window: &'a SampledFunction,
    fft: Arc<dyn Fft<f64>>,
    twiddles: grid::Twiddles,
}

impl<'a> StftPlan<'a> {
    /// `window` lives on the origin-aligned version of `f`'s grid, so that
    /// `φ(y_j - x_i)` is the window sample with index `j - i + N/2`.
    pub fn new(f: &'a SampledFunction, window: &'a SampledFunction) -> Result<Self> {
        f.grid().aligned().ensure_matches(window.grid(), "window must sit on the origin-aligned grid")?;
        if window.values().iter().all(|z| z.norm() == 0.0) {
            return Err(Error::ZeroWindow);
        }
        let fft = FftPlanner::new().plan_fft_forward(f.grid().n());
        let twiddles = grid::twiddles(f.grid(), false);
        Ok(Self { f, window, fft, twiddles })
    }

    pub fn grid_x(&self) -> &Grid {
        self.f.grid()
    }

    pub fn grid_xi(&self) -> Grid {
        self.f.grid().reciprocal()
    }

    /// `V_φ f(x_i, ·)` on the reciprocal grid.
    pub fn row(&self, i: usize, scratch: &mut Vec<Complex64>) -> Vec<Complex64> {
        let grid = self.f.grid();
        let n = grid.n() as i64;
        let half = n / 2;
        let [i0, i1] = grid.unravel(i);
        let w = self.window.values();
        let fv = self.f.values();
        let shifted = |j: usize, c: usize| -> Option<usize> {
            let m = j as i64 - c as i64 + half;
            (0..n).contains(&m).then_some(m as usize)
        };
        let tw = &self.twiddles;
        let mut data: Vec<Complex64> = (0..grid.len())
            .map(|j| {
                let [j0, j1] = grid.unravel(j);
                let widx = match grid.dim() {
                    1 => shifted(j0, i0),
                    _ => shifted(j0, i0).zip(shifted(j1, i1)).map(|(a, b)| a * grid.n() + b),
                };
                match widx {
                    Some(k) => {
                        let sign = match grid.dim() {
                            1 => tw.pre[j0],
                            _ => tw.pre[j0] * tw.pre[j1],
                        };
                        fv[j] * w[k].conj() * sign
                    }
                    None => Complex64::default(),
                }
            })
            .collect();
        fft::transform_with(self.fft.as_ref(), &mut data, grid.n(), grid.dim(), scratch);
        let scale = grid.cell_volume();
        grid::apply_factors(grid, &data, |k| tw.post[k]).into_iter().map(|z| z * scale).collect()
    }

    /// Rows `start..end`, computed in parallel and returned in order.
    pub fn rows(&self, start: usize, end: usize) -> Vec<Vec<Complex64>> {
        (start..end).into_par_iter().map_init(Vec::new, |scratch, i| self.row(i, scratch)).collect()
    }

    pub fn compute(&self) -> Result<PhaseSpaceFunction> {
        let values = self.rows(0, self.f.grid().len()).concat();
        PhaseSpaceFunction::new(*self.f.grid(), self.grid_xi(), values)
    }
}

/// `V_φ f` on `grid_x = f.grid()` and `grid_xi`, which must be the reciprocal
/// lattice of the space grid.
pub fn stft(f: &SampledFunction, window: &SampledFunction, grid_xi: &Grid) -> Result<PhaseSpaceFunction> {
    f.grid().reciprocal().ensure_matches(grid_xi, "frequency grid must be the reciprocal lattice")?;
    StftPlan::new(f, window)?.compute()
}

/// Independent route through `V_φ f(x, ξ) = e^{-2πi x·ξ} (f ∗ M_ξ φ*)(x)`,
/// `φ*(y) = conj(φ(-y))`: one linear convolution per frequency. Much slower
/// than [`stft`]; used to cross-check it.
pub fn stft_by_convolution(f: &SampledFunction, window: &SampledFunction) -> Result<PhaseSpaceFunction> {
    f.grid().aligned().ensure_matches(window.grid(), "window must sit on the origin-aligned grid")?;
    let grid = *f.grid();
    let grid_xi = grid.reciprocal();
    let dim = grid.dim();
    let wgrid = *window.grid();
    let reflected_conj = |m: &[f64]| -> Complex64 {
        let mut idx = [0usize; 2];
        for (axis, &c) in m.iter().enumerate() {
            match wgrid.nearest_index(-c) {
                Some(j) => idx[axis] = j,
                None => return Complex64::default(),
            }
        }
        window.values()[wgrid.ravel(idx)].conj()
    };
    let columns: Vec<Vec<Complex64>> = (0..grid_xi.len())
        .into_par_iter()
        .map(|k| {
            let xi = grid_xi.point(k);
            let conv = grid::convolve_with(f, |m| {
                let phase: f64 = m.iter().zip(&xi[..dim]).map(|(a, b)| a * b).sum();
                Complex64::from_polar(1.0, 2.0 * PI * phase) * reflected_conj(m)
            })
            .expect("finite convolution");
            conv.values()
                .iter()
                .enumerate()
                .map(|(i, &z)| {
                    let x = grid.point(i);
                    let phase: f64 = x[..dim].iter().zip(&xi[..dim]).map(|(a, b)| a * b).sum();
                    z * Complex64::from_polar(1.0, -2.0 * PI * phase)
                })
                .collect()
        })
        .collect();
    let m = grid_xi.len();
    let mut values = vec![Complex64::default(); grid.len() * m];
    for (k, col) in columns.iter().enumerate() {
        for (i, &z) in col.iter().enumerate() {
            values[i * m + k] = z;
        }
    }
    PhaseSpaceFunction::new(grid, grid_xi, values)
}

/// `V_{h_{t0}} h_{t0}(x, ξ) = e^{-2π²t0|ξ|²} e^{-πi x·ξ} h_{2t0}(x)`.
pub fn stft_gaussian_closed(t0: f64, x: &[f64], xi: &[f64]) -> Result<Complex64> {
    if !(t0 > 0.0) {
        return Err(Error::param(format!("t0 must be positive, got {t0}")));
    }
    let xi2: f64 = xi.iter().map(|v| v * v).sum();
    let xxi: f64 = x.iter().zip(xi).map(|(a, b)| a * b).sum();
    let modulus = (-2.0 * PI * PI * t0 * xi2).exp() * heat(2.0 * t0, x);
    Ok(Complex64::from_polar(modulus, -PI * xxi))
}

/// `V_φ p_{t0}(x, ξ) = e^{-2πi x·ξ} p_{2t0}(x)` for the frequency-dependent
/// window `φ(y) = e^{-2πi ξ·y} p_{t0}(y)` (see [`abel_window`]).
pub fn stft_poisson_closed(t0: f64, x: &[f64], xi: &[f64]) -> Result<Complex64> {
    if !(t0 > 0.0) {
        return Err(Error::param(format!("t0 must be positive, got {t0}")));
    }
    let xxi: f64 = x.iter().zip(xi).map(|(a, b)| a * b).sum();
    Ok(Complex64::from_polar(poisson(2.0 * t0, x), -2.0 * PI * xxi))
}

/// `φ(y) = e^{-2πi ξ·y} p_{t0}(y)`, whose transform is `e^{-2πt0|η+ξ|}`.
pub fn abel_window(t0: f64, xi: &[f64], grid: &Grid) -> Result<SampledFunction> {
    if !(t0 > 0.0) {
        return Err(Error::param(format!("t0 must be positive, got {t0}")));
    }
    SampledFunction::from_fn(grid.aligned(), |y| {
        let phase: f64 = y.iter().zip(xi).map(|(a, b)| a * b).sum();
        Complex64::from_polar(poisson(t0, y), -2.0 * PI * phase)
    })
}

/// Canonical window `e^{-π|y|²}` on the origin-aligned version of `grid`.
pub fn gaussian_window(grid: &Grid) -> SampledFunction {
    SampledFunction::from_real_fn(grid.aligned(), |y| {
        let r2: f64 = y.iter().map(|v| v * v).sum();
        (-PI * r2).exp()
    })
    .expect("finite samples")
}

/// `⟨f, g⟩ = Σ f conj(g) Δ^dim`.
pub fn inner(f: &SampledFunction, g: &SampledFunction) -> Result<Complex64> {
    f.grid().ensure_matches(g.grid(), "inner product")?;
    Ok(numeric::sum_complex(f.values().iter().zip(g.values()).map(|(a, b)| a * b.conj())) * f.grid().cell_volume())
}

/// Both sides of `⟨V_{φ1} f1, V_{φ2} f2⟩ = ⟨f1, f2⟩ conj(⟨φ1, φ2⟩)`.
pub fn moyal_check(
    f1: &SampledFunction,
    f2: &SampledFunction,
    phi1: &SampledFunction,
    phi2: &SampledFunction,
) -> Result<(Complex64, Complex64)> {
    let grid_xi = f1.grid().reciprocal();
    let v1 = stft(f1, phi1, &grid_xi)?;
    let v2 = stft(f2, phi2, &grid_xi)?;
    let lhs = v1.inner(&v2)?;
    let rhs = inner(f1, f2)? * inner(phi1, phi2)?.conj();
    Ok((lhs, rhs))
}
