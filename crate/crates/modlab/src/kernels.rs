//! Heat, Poisson and Hermite semigroup kernels, the weight ω, and the
//! two-sided Hermite kernel bounds as checkable predicates.

use std::f64::consts::{E, PI};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{norm, Grid};
use crate::quadrature::{SubordinationQuadrature, SubordinationRule};

/// Default node count for the subordination integral.
pub const DEFAULT_NODES: usize = 64;

fn check_t(t: f64) -> Result<()> {
    if t.is_finite() && t > 0.0 {
        Ok(())
    } else {
        Err(Error::param(format!("t must be positive, got {t}")))
    }
}

fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

fn dist2(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum()
}

fn sum2(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a + b) * (a + b)).sum()
}

pub(crate) fn heat(t: f64, x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let r2: f64 = x.iter().map(|v| v * v).sum();
    (4.0 * PI * t).powf(-n / 2.0) * (-r2 / (4.0 * t)).exp()
}

pub(crate) fn poisson(t: f64, x: &[f64]) -> f64 {
    let r2: f64 = x.iter().map(|v| v * v).sum();
    let q = t / (t * t + r2);
    match x.len() {
        1 => q / PI,
        // Γ(3/2) π^{-3/2} = 1/(2π)
        _ => q.powf(1.5) / (2.0 * PI),
    }
}

/// `h_t(x) = (4πt)^{-n/2} e^{-|x|²/(4t)}`, `n = x.len()`.
pub fn heat_kernel(t: f64, x: &[f64]) -> Result<f64> {
    check_t(t)?;
    Ok(heat(t, x))
}

/// `p_t(x) = Γ((n+1)/2) π^{-(n+1)/2} (t/(t²+|x|²))^{(n+1)/2}` for n ∈ {1, 2}.
pub fn poisson_kernel(t: f64, x: &[f64]) -> Result<f64> {
    check_t(t)?;
    if !(1..=2).contains(&x.len()) {
        return Err(Error::param("poisson kernel is implemented for n = 1, 2"));
    }
    Ok(poisson(t, x))
}

/// Kernel of `e^{-tH}` in the parametrization `s = tanh t`:
/// `((1-s²)/(4πs))^{n/2} exp(-(s|x+y|² + |x-y|²/s)/4)`.
/// Stable for small `t` and for large `t` (uses `1 - s² = sech² t`).
pub(crate) fn hermite_heat(t: f64, x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let s = t.tanh();
    let sech2 = 1.0 / (t.cosh() * t.cosh());
    (sech2 / (4.0 * PI * s)).powf(n / 2.0) * (-(s * sum2(x, y) + dist2(x, y) / s) / 4.0).exp()
}

/// Hermite heat kernel, evaluated through the `s = tanh t` form.
pub fn hermite_heat_kernel(t: f64, x: &[f64], y: &[f64]) -> Result<f64> {
    check_t(t)?;
    Ok(hermite_heat(t, x, y))
}

/// Hermite heat kernel in the hyperbolic form
/// `(2π sinh 2t)^{-n/2} exp(-[½|x-y|² coth 2t + x·y tanh t])`.
pub fn hermite_heat_kernel_hyperbolic(t: f64, x: &[f64], y: &[f64]) -> Result<f64> {
    check_t(t)?;
    let n = x.len() as f64;
    let e = 0.5 * dist2(x, y) / (2.0 * t).tanh() + dot(x, y) * t.tanh();
    Ok((2.0 * PI * (2.0 * t).sinh()).powf(-n / 2.0) * (-e).exp())
}

/// The hyperbolic form with the cross term `x·y tanh t` entering with the
/// opposite sign. Not a kernel of `e^{-tH}`; kept so the sign question can
/// be settled against the eigenfunction expansion.
pub fn hermite_heat_kernel_flipped(t: f64, x: &[f64], y: &[f64]) -> Result<f64> {
    check_t(t)?;
    let n = x.len() as f64;
    let e = 0.5 * dist2(x, y) / (2.0 * t).tanh() - dot(x, y) * t.tanh();
    Ok((2.0 * PI * (2.0 * t).sinh()).powf(-n / 2.0) * (-e).exp())
}

/// Kernel of `e^{-t√H}` by subordination of the Hermite heat kernel.
#[derive(Debug, Clone)]
pub struct HermitePoissonKernel {
    t: f64,
    quad: SubordinationQuadrature,
}

impl HermitePoissonKernel {
    pub fn new(t: f64, nodes: usize) -> Result<Self> {
        Self::with_rule(t, nodes, SubordinationRule::default())
    }

    pub fn with_rule(t: f64, nodes: usize, rule: SubordinationRule) -> Result<Self> {
        check_t(t)?;
        Ok(Self { t, quad: SubordinationQuadrature::new(rule, t, nodes)? })
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn nodes(&self) -> usize {
        self.quad.len()
    }

    pub fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        self.quad.apply(|s| hermite_heat(s, x, y))
    }
}

/// Relative change allowed between `M` and `2M` nodes.
pub const QUADRATURE_GUARD: f64 = 1e-8;

/// `p^H_t(x, y)` with an `M → 2M` convergence guard.
pub fn hermite_poisson_kernel(t: f64, x: &[f64], y: &[f64], nodes: usize) -> Result<f64> {
    let coarse = HermitePoissonKernel::new(t, nodes)?.eval(x, y);
    let fine = HermitePoissonKernel::new(t, 2 * nodes)?.eval(x, y);
    let change = (fine - coarse).abs();
    if change > QUADRATURE_GUARD * fine.abs().max(f64::MIN_POSITIVE) {
        return Err(Error::Quadrature(format!("t={t}: {nodes} nodes give {coarse}, {} give {fine}", 2 * nodes)));
    }
    Ok(coarse)
}

/// `ω(y) = e^{-|y|²/2} (1+|y|)^{-n/2} [ln(e+|y|)]^{-3/2}`.
pub fn omega_weight(y: &[f64]) -> f64 {
    let r = norm(y);
    let n = y.len() as f64;
    (-r * r / 2.0).exp() * (1.0 + r).powf(-n / 2.0) * (E + r).ln().powf(-1.5)
}

/// `(1-s²)^{n/2} h_s(x-y)` with `s = tanh t`, an upper bound for `h^H_t(x,y)`.
pub fn hermite_heat_upper_bound(t: f64, x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let s = t.tanh();
    let sech2 = 1.0 / (t.cosh() * t.cosh());
    let d: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
    sech2.powf(n / 2.0) * heat(s, &d)
}

/// `(1-s²) h_s(x-y)`: the upper bound with the first power of `1-s²` for
/// every dimension. Agrees with [`hermite_heat_upper_bound`] for `n = 2` and
/// fails for `n = 1`; kept to document that.
pub fn hermite_heat_upper_bound_first_power(t: f64, x: &[f64], y: &[f64]) -> f64 {
    let s = t.tanh();
    let sech2 = 1.0 / (t.cosh() * t.cosh());
    let d: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
    sech2 * heat(s, &d)
}

/// `e^{-9s|x|²/4} ((1-s²)/(1+9s²))^{n/2} h_{s/(1+9s²)}(x-y)`, a lower bound
/// for `h^H_t(x,y)`.
pub fn hermite_heat_lower_bound(t: f64, x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let s = t.tanh();
    let sech2 = 1.0 / (t.cosh() * t.cosh());
    let c = 1.0 + 9.0 * s * s;
    let d: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
    let r2: f64 = x.iter().map(|v| v * v).sum();
    (-9.0 * s * r2 / 4.0).exp() * (sech2 / c).powf(n / 2.0) * heat(s / c, &d)
}

/// Largest value of `f(x, y)` over all pairs of grid points.
fn sweep_pairs<F>(grid: &Grid, f: F) -> f64
where
    F: Fn(&[f64], &[f64]) -> f64 + Sync,
{
    let dim = grid.dim();
    (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let x = grid.point(i);
            (0..grid.len()).fold(f64::NEG_INFINITY, |m, j| {
                let y = grid.point(j);
                m.max(f(&x[..dim], &y[..dim]))
            })
        })
        .reduce(|| f64::NEG_INFINITY, f64::max)
}

/// `max (h^H_t(x,y) - upper(x,y))` over grid²; nonpositive when the bound holds.
pub fn check_upper_bound(t: f64, grid: &Grid) -> Result<f64> {
    check_t(t)?;
    Ok(sweep_pairs(grid, |x, y| hermite_heat(t, x, y) - hermite_heat_upper_bound(t, x, y)))
}

/// [`check_upper_bound`] against [`hermite_heat_upper_bound_first_power`].
pub fn check_upper_bound_first_power(t: f64, grid: &Grid) -> Result<f64> {
    check_t(t)?;
    Ok(sweep_pairs(grid, |x, y| hermite_heat(t, x, y) - hermite_heat_upper_bound_first_power(t, x, y)))
}

/// `max (lower(x,y) - h^H_t(x,y))` over grid²; nonpositive when the bound holds.
pub fn check_lower_bound(t: f64, grid: &Grid) -> Result<f64> {
    check_t(t)?;
    Ok(sweep_pairs(grid, |x, y| hermite_heat_lower_bound(t, x, y) - hermite_heat(t, x, y)))
}

/// `(min_y, max_y)` of `p^H_t(x, y)/ω(y)` over the grid.
pub fn check_poisson_sandwich(t: f64, x: &[f64], grid_y: &Grid) -> Result<(f64, f64)> {
    if x.len() != grid_y.dim() {
        return Err(Error::param("point and grid dimensions differ"));
    }
    let kernel = HermitePoissonKernel::new(t, DEFAULT_NODES)?;
    let dim = grid_y.dim();
    let ratios: Vec<f64> = (0..grid_y.len())
        .into_par_iter()
        .map(|j| {
            let y = grid_y.point(j);
            kernel.eval(x, &y[..dim]) / omega_weight(&y[..dim])
        })
        .collect();
    let lo = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = ratios.iter().copied().fold(0.0, f64::max);
    Ok((lo, hi))
}

/// A semigroup kernel with validated parameters.
#[derive(Debug, Clone)]
pub enum KernelSpec {
    Heat { t: f64 },
    Poisson { t: f64 },
    HermiteHeat { t: f64 },
    HermitePoisson { kernel: HermitePoissonKernel },
}

impl KernelSpec {
    pub fn heat(t: f64) -> Result<Self> {
        check_t(t)?;
        Ok(KernelSpec::Heat { t })
    }

    pub fn poisson(t: f64) -> Result<Self> {
        check_t(t)?;
        Ok(KernelSpec::Poisson { t })
    }

    pub fn hermite_heat(t: f64) -> Result<Self> {
        check_t(t)?;
        Ok(KernelSpec::HermiteHeat { t })
    }

    pub fn hermite_poisson(t: f64, nodes: usize) -> Result<Self> {
        Ok(KernelSpec::HermitePoisson { kernel: HermitePoissonKernel::new(t, nodes)? })
    }

    pub fn t(&self) -> f64 {
        match self {
            KernelSpec::Heat { t } | KernelSpec::Poisson { t } | KernelSpec::HermiteHeat { t } => *t,
            KernelSpec::HermitePoisson { kernel } => kernel.t(),
        }
    }

    /// `K(x, y)`; translation-invariant kernels are evaluated at `x - y`.
    pub fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        match self {
            KernelSpec::Heat { t } => {
                let d: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
                heat(*t, &d)
            }
            KernelSpec::Poisson { t } => {
                let d: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
                poisson(*t, &d)
            }
            KernelSpec::HermiteHeat { t } => hermite_heat(*t, x, y),
            KernelSpec::HermitePoisson { kernel } => kernel.eval(x, y),
        }
    }
}
