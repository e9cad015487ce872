//! Centered Hardy–Littlewood maximal operator on grids, dilation suprema and
//! the associated domination inequalities.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::descriptor::FunctionDescriptor;
use crate::error::{Error, Result};
use crate::grid::{convolve, convolve_with, norm, Grid, SampledFunction};
use crate::kernels::poisson;
use crate::modnorm::{modulation_norm, Domain, Exponent, MixedNormParams, Weight};
use crate::numeric::NeumaierSum;

/// Ball radii in units of the grid step.
#[derive(Debug, Clone, PartialEq)]
pub struct RadiiSet {
    step: f64,
    multiples: Vec<usize>,
}

impl RadiiSet {
    /// Radii must be positive integer multiples of `Δ` (to 1e-9 relative),
    /// strictly increasing and at most `2L`.
    pub fn new(grid: &Grid, radii: &[f64]) -> Result<Self> {
        if radii.is_empty() {
            return Err(Error::param("radii set must be nonempty"));
        }
        let step = grid.step();
        let mut multiples = Vec::with_capacity(radii.len());
        for &r in radii {
            let k = (r / step).round();
            if !(r.is_finite() && k >= 1.0 && (r - k * step).abs() <= 1e-9 * r) {
                return Err(Error::param(format!("radius {r} is not a positive multiple of the grid step {step}")));
            }
            if r > 2.0 * grid.half_width() * (1.0 + 1e-12) {
                return Err(Error::param(format!("radius {r} exceeds 2L")));
            }
            let k = k as usize;
            if multiples.last().is_some_and(|&last| k <= last) {
                return Err(Error::param("radii must be strictly increasing"));
            }
            multiples.push(k);
        }
        Ok(Self { step, multiples })
    }

    /// All multiples `kΔ` with `kΔ ≤ r_max`.
    pub fn up_to(grid: &Grid, r_max: f64) -> Result<Self> {
        let count = (r_max / grid.step() + 1e-9).floor() as usize;
        let radii: Vec<f64> = (1..=count).map(|k| k as f64 * grid.step()).collect();
        Self::new(grid, &radii)
    }

    /// All multiples of `Δ` up to `L`.
    pub fn default_for(grid: &Grid) -> Self {
        Self { step: grid.step(), multiples: (1..=grid.n() / 2).collect() }
    }

    pub fn radii(&self) -> Vec<f64> {
        self.multiples.iter().map(|&k| k as f64 * self.step).collect()
    }

    pub fn multiples(&self) -> &[usize] {
        &self.multiples
    }

    pub fn len(&self) -> usize {
        self.multiples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.multiples.is_empty()
    }

    fn check_grid(&self, grid: &Grid) -> Result<()> {
        if (grid.step() - self.step).abs() > 1e-12 * self.step {
            return Err(Error::GridMismatch("radii set built for a different grid step".into()));
        }
        Ok(())
    }
}

/// Prefix sums `P[j] = Σ_{i<j} a[i]`, accumulated with compensation.
fn prefix_sums(a: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(a.len() + 1);
    let mut acc = NeumaierSum::new();
    out.push(0.0);
    for &v in a {
        acc.add(v);
        out.push(acc.value());
    }
    out
}

/// Half-chord lengths `⌊√(k² - a²)⌋` for `a = 0..=k`.
fn chords(k: usize) -> Vec<usize> {
    (0..=k)
        .map(|a| {
            let rem = (k * k - a * a) as f64;
            let mut b = rem.sqrt().floor() as usize;
            while (b + 1) * (b + 1) <= k * k - a * a {
                b += 1;
            }
            while b * b > k * k - a * a {
                b -= 1;
            }
            b
        })
        .collect()
}

fn checked_values(f: &SampledFunction) -> Result<Vec<f64>> {
    f.ensure_nonnegative()?;
    Ok(f.real_parts())
}

/// `M_h f(x) = max_{r ∈ radii} avg_{B(x,r) ∩ window} f`, with lattice balls
/// `{j : |x_j - x| ≤ r}`. One-dimensional data use prefix sums; in two
/// dimensions each disk is a stack of row chords summed through row prefix
/// sums.
pub fn maximal_function(f: &SampledFunction, radii: &RadiiSet) -> Result<SampledFunction> {
    let grid = *f.grid();
    radii.check_grid(&grid)?;
    let values = checked_values(f)?;
    let n = grid.n();
    let out: Vec<f64> = match grid.dim() {
        1 => {
            let prefix = prefix_sums(&values);
            (0..n)
                .into_par_iter()
                .map(|i| {
                    radii
                        .multiples
                        .iter()
                        .map(|&k| {
                            let lo = i.saturating_sub(k);
                            let hi = (i + k + 1).min(n);
                            (prefix[hi] - prefix[lo]) / (hi - lo) as f64
                        })
                        .fold(0.0, f64::max)
                })
                .collect()
        }
        _ => {
            let row_prefix: Vec<Vec<f64>> = values.chunks(n).map(prefix_sums).collect();
            let chord_table: Vec<Vec<usize>> = radii.multiples.iter().map(|&k| chords(k)).collect();
            (0..n * n)
                .into_par_iter()
                .map(|idx| {
                    let (i0, i1) = (idx / n, idx % n);
                    let mut best = 0.0f64;
                    for chord in &chord_table {
                        let k = chord.len() - 1;
                        let mut total = NeumaierSum::new();
                        let mut count = 0usize;
                        let rows_lo = i0.saturating_sub(k);
                        let rows_hi = (i0 + k).min(n - 1);
                        for r in rows_lo..=rows_hi {
                            let b = chord[r.abs_diff(i0)];
                            let lo = i1.saturating_sub(b);
                            let hi = (i1 + b + 1).min(n);
                            total.add(row_prefix[r][hi] - row_prefix[r][lo]);
                            count += hi - lo;
                        }
                        best = best.max(total.value() / count as f64);
                    }
                    best
                })
                .collect()
        }
    };
    SampledFunction::from_real(grid, &out)
}

/// Direct `O(N^{2·dim} · #radii)` evaluation of [`maximal_function`], used as
/// an oracle.
pub fn maximal_function_direct(f: &SampledFunction, radii: &RadiiSet) -> Result<SampledFunction> {
    let grid = *f.grid();
    radii.check_grid(&grid)?;
    let values = checked_values(f)?;
    let dim = grid.dim();
    let step = grid.step();
    let out: Vec<f64> = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let xi = grid.point(i);
            radii
                .multiples
                .iter()
                .map(|&k| {
                    let r = k as f64;
                    let mut total = NeumaierSum::new();
                    let mut count = 0usize;
                    for (j, &v) in values.iter().enumerate() {
                        let xj = grid.point(j);
                        let d: Vec<f64> = (0..dim).map(|a| ((xj[a] - xi[a]) / step).round()).collect();
                        if norm(&d) <= r {
                            total.add(v);
                            count += 1;
                        }
                    }
                    total.value() / count as f64
                })
                .fold(0.0, f64::max)
        })
        .collect();
    SampledFunction::from_real(grid, &out)
}

/// Unit-mass radial profiles `φ` whose dilates `φ_t = t^{-n} φ(·/t)` form
/// approximate identities.
#[derive(Debug, Clone, PartialEq)]
pub enum Profile {
    /// Normalized indicator of the unit ball.
    Indicator,
    /// `e^{-π|x|²}`.
    Gauss,
    /// The Poisson kernel `p_1`.
    Poisson,
    /// Any descriptor, used as given.
    Custom(FunctionDescriptor),
}

impl Profile {
    pub fn eval(&self, x: &[f64]) -> f64 {
        let r = norm(x);
        match self {
            Profile::Indicator => {
                if r <= 1.0 {
                    1.0 / unit_ball_volume(x.len())
                } else {
                    0.0
                }
            }
            Profile::Gauss => (-PI * r * r).exp(),
            Profile::Poisson => poisson(1.0, x),
            Profile::Custom(d) => d.eval(x),
        }
    }

    /// `A = ∫ ψ`, with `ψ` the least decreasing radial majorant of `φ`, by a
    /// midpoint rule on `[0, 10^8]` after a reverse running maximum. Custom
    /// profiles are probed along the first axis in both directions.
    pub fn majorant_integral(&self, dim: usize) -> f64 {
        const CELLS: usize = 1 << 20;
        // Uniform cells on [0, 16] plus geometrically growing cells beyond.
        let mut edges: Vec<f64> = (0..=CELLS / 2).map(|k| 16.0 * k as f64 / (CELLS / 2) as f64).collect();
        let ratio = (1e8f64 / 16.0).powf(1.0 / (CELLS / 2) as f64);
        for _ in 0..CELLS / 2 {
            let last = *edges.last().unwrap();
            edges.push(last * ratio);
        }
        let probe = |r: f64| -> f64 {
            let mut a = [0.0; 2];
            a[0] = r;
            let mut b = [0.0; 2];
            b[0] = -r;
            self.eval(&a[..dim]).abs().max(self.eval(&b[..dim]).abs())
        };
        let at_edges: Vec<f64> = edges.par_iter().map(|&r| probe(r)).collect();
        let mut sup_edges = at_edges.clone();
        for k in (0..sup_edges.len() - 1).rev() {
            sup_edges[k] = sup_edges[k].max(sup_edges[k + 1]);
        }
        let total: NeumaierSum = (0..edges.len() - 1)
            .map(|k| {
                let (a, b) = (edges[k], edges[k + 1]);
                let mid = 0.5 * (a + b);
                let psi = probe(mid).max(sup_edges[k + 1]);
                let shell = match dim {
                    1 => 2.0 * (b - a),
                    _ => PI * (b * b - a * a),
                };
                psi * shell
            })
            .collect();
        total.value()
    }
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Profile::Indicator => f.write_str("indicator"),
            Profile::Gauss => f.write_str("gauss"),
            Profile::Poisson => f.write_str("poisson"),
            Profile::Custom(d) => write!(f, "{d}"),
        }
    }
}

impl std::str::FromStr for Profile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "indicator" => Ok(Profile::Indicator),
            "gauss" => Ok(Profile::Gauss),
            "poisson" => Ok(Profile::Poisson),
            other => FunctionDescriptor::parse(other).map(Profile::Custom),
        }
    }
}

fn unit_ball_volume(dim: usize) -> f64 {
    match dim {
        1 => 2.0,
        _ => PI,
    }
}

/// `|φ_t ∗ f|` for one dilation. The indicator profile is renormalized to
/// unit discrete mass so that its dilates are lattice ball averages.
pub fn dilate_convolve(f: &SampledFunction, profile: &Profile, t: f64) -> Result<SampledFunction> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::param(format!("dilation must be positive, got {t}")));
    }
    let grid = *f.grid();
    let dim = grid.dim() as i32;
    let scale = t.powi(-dim);
    let mut out = convolve_with(f, |d| {
        let y: Vec<f64> = d.iter().map(|c| c / t).collect();
        Complex64::new(scale * profile.eval(&y), 0.0)
    })?;
    if *profile == Profile::Indicator {
        let k = (t / grid.step() + 1e-9).floor() as i64;
        let count = match grid.dim() {
            1 => (2 * k + 1) as f64,
            _ => chords(k as usize)
                .iter()
                .enumerate()
                .map(|(a, &b)| {
                    let rows = if a == 0 { 1.0 } else { 2.0 };
                    rows * (2 * b + 1) as f64
                })
                .sum(),
        };
        let discrete_mass = count * grid.cell_volume() * scale / unit_ball_volume(grid.dim());
        out = out.scale(Complex64::new(1.0 / discrete_mass, 0.0));
    }
    Ok(out.abs())
}

/// `sup_t |φ_t ∗ f|` over a finite list of dilations.
pub fn dilation_sup(f: &SampledFunction, profile: &Profile, t_list: &[f64]) -> Result<SampledFunction> {
    if t_list.is_empty() {
        return Err(Error::param("empty dilation list"));
    }
    let parts: Result<Vec<SampledFunction>> = t_list.par_iter().map(|&t| dilate_convolve(f, profile, t)).collect();
    let parts = parts?;
    let grid = *f.grid();
    let out: Vec<f64> = (0..grid.len()).map(|i| parts.iter().map(|p| p.values()[i].re).fold(0.0, f64::max)).collect();
    SampledFunction::from_real(grid, &out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DominationReport {
    pub majorant_integral: f64,
    pub max_ratio: f64,
}

/// `max_x sup_t |φ_t ∗ f|(x) / (A · M_h f(x))` with `A = ∫ψ`.
pub fn check_domination(
    f: &SampledFunction,
    profile: &Profile,
    t_list: &[f64],
    radii: &RadiiSet,
) -> Result<DominationReport> {
    let a = profile.majorant_integral(f.grid().dim());
    let sup = dilation_sup(f, profile, t_list)?;
    let mf = maximal_function(f, radii)?;
    let floor = 1e-300;
    let max_ratio = sup
        .values()
        .iter()
        .zip(mf.values())
        .filter(|(_, m)| m.re > floor)
        .map(|(s, m)| s.re / (a * m.re))
        .fold(0.0, f64::max);
    Ok(DominationReport { majorant_integral: a, max_ratio })
}

#[derive(Debug, Clone, PartialEq)]
pub struct StftMaximalReport {
    /// `max_x (|Mf ∗ M_ξφ|(x) - M(f ∗ |φ|)(x))`.
    pub max_violation: f64,
    /// `‖f ∗ |φ|‖_∞`, the scale for the slack.
    pub scale: f64,
    /// Sample where the violation is attained.
    pub argmax: usize,
}

impl StftMaximalReport {
    /// Violation within `1e-3 · ‖f ∗ |φ|‖_∞`.
    pub fn holds(&self) -> bool {
        self.max_violation <= 1e-3 * self.scale
    }
}

/// Compares `|Mf ∗ M_ξφ|` against `M(f ∗ |φ|)` pointwise. `phi` lives on the
/// origin-aligned grid of `f` with the origin at index `N/2`.
pub fn check_stft_maximal_inequality(
    f: &SampledFunction,
    phi: &SampledFunction,
    xi: &[f64],
    radii: &RadiiSet,
) -> Result<StftMaximalReport> {
    let grid = *f.grid();
    let mf = maximal_function(f, radii)?;
    let dim = grid.dim();
    let modulated = SampledFunction::from_fn(grid, |x| {
        let phase: f64 = (0..dim).map(|a| x[a] * xi[a]).sum();
        Complex64::from_polar(1.0, 2.0 * PI * phase)
    })?
    .zip_with(phi, |m, p| m * p)?;
    let lhs = convolve(&mf, &modulated)?;
    let smoothed = convolve(f, &phi.abs())?;
    let smoothed_real =
        SampledFunction::from_real(grid, &smoothed.real_parts().iter().map(|v| v.max(0.0)).collect::<Vec<_>>())?;
    let rhs = maximal_function(&smoothed_real, radii)?;
    let scale = smoothed.sup_norm();
    let (argmax, max_violation) = lhs
        .values()
        .iter()
        .zip(rhs.values())
        .map(|(l, r)| l.norm() - r.re)
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, v)| if v > best.1 { (i, v) } else { best });
    Ok(StftMaximalReport { max_violation, scale, argmax })
}

/// `(‖M_h f‖_{M^{p,∞}}, ‖f‖_{M^{p,∞}})` with unit weight; the frequency
/// supremum is a grid maximum.
pub fn maximal_modnorm_check(
    f: &SampledFunction,
    p: Exponent,
    window: &SampledFunction,
    radii: &RadiiSet,
) -> Result<(f64, f64)> {
    if p == Exponent::Finite(1.0) {
        return Err(Error::param("p must exceed 1"));
    }
    let params = MixedNormParams::new(p, Exponent::Infinity);
    let one = Weight::one(Domain::PhaseSpace);
    let mf = maximal_function(f, radii)?;
    Ok((modulation_norm(&mf, window, params, &one)?, modulation_norm(f, window, params, &one)?))
}
