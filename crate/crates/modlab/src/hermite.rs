//! Hermite functions, spectral projections and the spectral semigroups of
//! `H = -Δ + |x|²`.

use std::f64::consts::PI;
use std::io::{BufRead, Write};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{lp_norm, Grid, SampledFunction};
use crate::modnorm::Exponent;
use crate::numeric;

/// `h̃_0, …, h̃_kmax` at `x`.
///
/// The normalized three-term recurrence is run on a rescaled pair with the
/// Gaussian factor kept as a separate log-scale, so large `|x|` does not
/// underflow before the polynomial part has grown.
pub fn hermite_functions(kmax: usize, x: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(kmax + 1);
    let mut log_scale = -x * x / 2.0;
    let mut prev = 0.0;
    let mut cur = PI.powf(-0.25);
    out.push(cur * log_scale.exp());
    for k in 0..kmax {
        let kf = k as f64;
        let next = x * (2.0 / (kf + 1.0)).sqrt() * cur - (kf / (kf + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
        if cur.abs() > 1e150 {
            prev *= 1e-150;
            cur *= 1e-150;
            log_scale += 150.0 * std::f64::consts::LN_10;
        }
        out.push(cur * log_scale.exp());
    }
    out
}

/// Normalized Hermite function `h̃_k(x)`.
pub fn hermite_function(k: usize, x: f64) -> f64 {
    hermite_functions(k, x)[k]
}

/// Tensor Hermite function `Φ_α(x) = Π h̃_{α_i}(x_i)`.
pub fn hermite_tensor(alpha: [usize; 2], x: &[f64]) -> f64 {
    x.iter().zip(alpha).map(|(&xi, k)| hermite_function(k, xi)).product()
}

/// Truncated Mehler series `Σ_{k≤K} h̃_k(x) h̃_k(y) w^k √π` and its closed form
/// `(1-w²)^{-1/2} exp(-½ (1+w²)/(1-w²) (x²+y²) + 2w/(1-w²) xy)`.
pub fn mehler_check(w: f64, x: f64, y: f64, k: usize) -> Result<(f64, f64)> {
    if !(w.abs() < 1.0) {
        return Err(Error::param(format!("|w| must be < 1, got {w}")));
    }
    let hx = hermite_functions(k, x);
    let hy = hermite_functions(k, y);
    let mut pow = 1.0;
    let series = numeric::sum(hx.iter().zip(&hy).map(|(a, b)| {
        let term = a * b * pow;
        pow *= w;
        term
    })) * PI.sqrt();
    let d = 1.0 - w * w;
    let closed = d.powf(-0.5) * (-0.5 * (1.0 + w * w) / d * (x * x + y * y) + 2.0 * w / d * x * y).exp();
    Ok((series, closed))
}

pub const DEFAULT_KMAX_1D: usize = 128;
pub const DEFAULT_KMAX_2D: usize = 64;

/// Sampled Hermite functions `h̃_0..h̃_K` on one axis of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct HermiteBasis {
    grid: Grid,
    kmax: usize,
    // samples[k][j] = h̃_k(x_j)
    samples: Vec<Vec<f64>>,
}

/// Largest `K` with `L ≥ √(2(2K + n))`.
pub fn max_degree_for(grid: &Grid) -> Option<usize> {
    let l = grid.half_width();
    let k = (l * l / 2.0 - grid.dim() as f64) / 2.0;
    (k >= 0.0).then(|| k.floor() as usize)
}

impl HermiteBasis {
    pub fn new(grid: Grid, kmax: usize) -> Result<Self> {
        let need = (2.0 * (2.0 * kmax as f64 + grid.dim() as f64)).sqrt();
        if grid.half_width() < need {
            return Err(Error::param(format!(
                "K_max = {kmax} needs half-width >= {need:.4}, grid has {}",
                grid.half_width()
            )));
        }
        let axis = grid.axis();
        let per_point: Vec<Vec<f64>> = axis.par_iter().map(|&x| hermite_functions(kmax, x)).collect();
        let samples = (0..=kmax).map(|k| per_point.iter().map(|h| h[k]).collect()).collect();
        Ok(Self { grid, kmax, samples })
    }

    /// Default degree for the dimension, reduced to what the window allows.
    pub fn for_grid(grid: Grid) -> Result<Self> {
        let default = if grid.dim() == 1 { DEFAULT_KMAX_1D } else { DEFAULT_KMAX_2D };
        let allowed = max_degree_for(&grid).ok_or_else(|| Error::param("grid too small for any Hermite function"))?;
        Self::new(grid, default.min(allowed))
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn kmax(&self) -> usize {
        self.kmax
    }

    pub fn axis_samples(&self, k: usize) -> &[f64] {
        &self.samples[k]
    }

    /// Multi-indices with `|α| ≤ K_max`, in a fixed order.
    pub fn indices(&self) -> Vec<[usize; 2]> {
        match self.grid.dim() {
            1 => (0..=self.kmax).map(|k| [k, 0]).collect(),
            _ => (0..=self.kmax).flat_map(|a| (0..=self.kmax - a).map(move |b| [a, b])).collect(),
        }
    }

    fn ensure_grid(&self, f: &SampledFunction) -> Result<()> {
        self.grid.ensure_matches(f.grid(), "Hermite basis")
    }

    /// `⟨f, Φ_α⟩` for every `|α| ≤ K_max`, in the order of [`Self::indices`].
    pub fn coefficients(&self, f: &SampledFunction) -> Result<Vec<Complex64>> {
        self.ensure_grid(f)?;
        let n = self.grid.n();
        let vol = self.grid.cell_volume();
        let values = f.values();
        match self.grid.dim() {
            1 => Ok((0..=self.kmax)
                .into_par_iter()
                .map(|k| {
                    let h = &self.samples[k];
                    numeric::sum_complex(values.iter().zip(h).map(|(z, &hk)| z * hk)) * vol
                })
                .collect()),
            _ => {
                // partial[i0][k1] = Σ_{i1} f(i0, i1) h̃_{k1}(x_{i1})
                let partial: Vec<Vec<Complex64>> = (0..n)
                    .into_par_iter()
                    .map(|i0| {
                        let row = &values[i0 * n..(i0 + 1) * n];
                        (0..=self.kmax)
                            .map(|k1| numeric::sum_complex(row.iter().zip(&self.samples[k1]).map(|(z, &h)| z * h)))
                            .collect()
                    })
                    .collect();
                Ok(self
                    .indices()
                    .par_iter()
                    .map(|&[a, b]| numeric::sum_complex((0..n).map(|i0| partial[i0][b] * self.samples[a][i0])) * vol)
                    .collect())
            }
        }
    }

    /// `Σ_α c_α Φ_α` sampled on the grid, coefficients ordered as [`Self::indices`].
    pub fn synthesize(&self, coeffs: &[Complex64]) -> Result<SampledFunction> {
        let idx = self.indices();
        if coeffs.len() != idx.len() {
            return Err(Error::param("coefficient count does not match the basis"));
        }
        let n = self.grid.n();
        let values: Vec<Complex64> = match self.grid.dim() {
            1 => (0..n)
                .into_par_iter()
                .map(|j| numeric::sum_complex(coeffs.iter().enumerate().map(|(k, c)| c * self.samples[k][j])))
                .collect(),
            _ => {
                // rows[a][i1] = Σ_b c_{a,b} h̃_b(x_{i1})
                let mut by_a: Vec<Vec<(usize, Complex64)>> = vec![Vec::new(); self.kmax + 1];
                for (&[a, b], &c) in idx.iter().zip(coeffs) {
                    by_a[a].push((b, c));
                }
                let rows: Vec<Vec<Complex64>> = by_a
                    .par_iter()
                    .map(|terms| {
                        (0..n)
                            .map(|i1| numeric::sum_complex(terms.iter().map(|&(b, c)| c * self.samples[b][i1])))
                            .collect()
                    })
                    .collect();
                (0..n * n)
                    .into_par_iter()
                    .map(|i| {
                        let (i0, i1) = (i / n, i % n);
                        numeric::sum_complex((0..=self.kmax).map(|a| rows[a][i1] * self.samples[a][i0]))
                    })
                    .collect()
            }
        };
        SampledFunction::new(self.grid, values)
    }

    /// `P_k f = Σ_{|α|=k} ⟨f, Φ_α⟩ Φ_α`.
    pub fn project(&self, f: &SampledFunction, k: usize) -> Result<SampledFunction> {
        if k > self.kmax {
            return Err(Error::param(format!("k = {k} exceeds K_max = {}", self.kmax)));
        }
        self.apply_multiplier(f, |level| if level == k { 1.0 } else { 0.0 })
    }

    /// `Σ_k m(k) P_k f` over `k ≤ K_max`.
    pub fn apply_multiplier<M>(&self, f: &SampledFunction, m: M) -> Result<SampledFunction>
    where
        M: Fn(usize) -> f64,
    {
        let coeffs = self.coefficients(f)?;
        let scaled: Vec<Complex64> = self.indices().iter().zip(coeffs).map(|(&[a, b], c)| c * m(a + b)).collect();
        self.synthesize(&scaled)
    }

    /// Writes the basis as CSV: two header lines, then rows `k,j,value`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "# hermite-basis dim,L,N,offset,K_max")?;
        writeln!(w, "# {},{}", self.grid, self.kmax)?;
        for (k, row) in self.samples.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                writeln!(w, "{k},{j},{v}")?;
            }
        }
        Ok(())
    }

    /// Reads a basis written by [`Self::write_csv`], checking it was built
    /// for `grid` and `kmax`.
    pub fn read_csv<R: BufRead>(r: R, grid: Grid, kmax: usize) -> Result<Self> {
        let mut lines = r.lines();
        let _ = lines.next().transpose()?;
        let key = lines.next().transpose()?.ok_or_else(|| Error::parse("basis cache", "missing key line"))?;
        let expected = format!("# {grid},{kmax}");
        if key.trim() != expected {
            return Err(Error::parse("basis cache", format!("cache key `{}` does not match `{expected}`", key.trim())));
        }
        let mut samples = vec![vec![0.0; grid.n()]; kmax + 1];
        let mut seen = 0usize;
        for line in lines {
            let line = line?;
            let mut parts = line.split(',');
            let mut next = || -> Result<&str> {
                parts.next().ok_or_else(|| Error::parse("basis cache", format!("short row `{line}`")))
            };
            let parse_err = |s: &str| Error::parse("basis cache", format!("bad field `{s}`"));
            let k: usize = next()?.parse().map_err(|_| parse_err("k"))?;
            let j: usize = next()?.parse().map_err(|_| parse_err("j"))?;
            let v: f64 = next()?.parse().map_err(|_| parse_err("value"))?;
            if k > kmax || j >= grid.n() {
                return Err(Error::parse("basis cache", format!("index ({k},{j}) out of range")));
            }
            samples[k][j] = v;
            seen += 1;
        }
        if seen != (kmax + 1) * grid.n() {
            return Err(Error::parse("basis cache", "incomplete table"));
        }
        Ok(Self { grid, kmax, samples })
    }
}

/// Output of a truncated spectral sum.
#[derive(Debug, Clone)]
pub struct SpectralResult {
    pub function: SampledFunction,
    /// Bound on the discarded tail, `m(K_max) ‖f‖₂`.
    pub truncation_bound: f64,
}

fn check_t(t: f64) -> Result<()> {
    if t.is_finite() && t > 0.0 {
        Ok(())
    } else {
        Err(Error::param(format!("t must be positive, got {t}")))
    }
}

/// `e^{-tH} f = Σ_k e^{-t(2k+n)} P_k f`.
pub fn hermite_heat_spectral(f: &SampledFunction, t: f64, basis: &HermiteBasis) -> Result<SpectralResult> {
    check_t(t)?;
    let n = f.grid().dim() as f64;
    let function = basis.apply_multiplier(f, |k| (-t * (2.0 * k as f64 + n)).exp())?;
    let truncation_bound = (-t * (2.0 * basis.kmax() as f64 + n)).exp() * lp_norm(f, Exponent::Finite(2.0), None)?;
    Ok(SpectralResult { function, truncation_bound })
}

/// `e^{-t√H} f = Σ_k e^{-t√(2k+n)} P_k f`.
pub fn hermite_poisson_spectral(f: &SampledFunction, t: f64, basis: &HermiteBasis) -> Result<SpectralResult> {
    check_t(t)?;
    let n = f.grid().dim() as f64;
    let function = basis.apply_multiplier(f, |k| (-t * (2.0 * k as f64 + n).sqrt()).exp())?;
    let truncation_bound =
        (-t * (2.0 * basis.kmax() as f64 + n).sqrt()).exp() * lp_norm(f, Exponent::Finite(2.0), None)?;
    Ok(SpectralResult { function, truncation_bound })
}

/// Result of the Ornstein–Uhlenbeck transfer.
#[derive(Debug, Clone)]
pub struct OuTransfer {
    pub function: SampledFunction,
    /// Samples with `|x|` beyond this radius were set to zero.
    pub reliable_radius: f64,
    pub clipped: usize,
}

/// `e^{-tO} f = e^{|x|²/2} e^{tn} e^{-tH}(e^{-|x|²/2} f)` for the operator
/// `O = -Δ + 2x·∇`. The back-transform multiplies round-off by `e^{|x|²/2}`;
/// samples where that amplification could exceed `tol` are zeroed and counted.
pub fn ou_transfer(f: &SampledFunction, t: f64, basis: &HermiteBasis, tol: f64) -> Result<OuTransfer> {
    check_t(t)?;
    if !(tol > 0.0) {
        return Err(Error::param("tolerance must be positive"));
    }
    let n = f.grid().dim() as f64;
    let damped = f.map(|x, z| {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        z * (-r2 / 2.0).exp()
    })?;
    let evolved = hermite_heat_spectral(&damped, t, basis)?.function;
    let scale = damped.sup_norm().max(f64::MIN_POSITIVE);
    let floor = 1e-15 * scale;
    let reliable_radius = if tol > floor { (2.0 * (tol / floor).ln()).sqrt() } else { 0.0 };
    let mut clipped = 0;
    let grid = *f.grid();
    let values: Vec<Complex64> = evolved
        .values()
        .iter()
        .enumerate()
        .map(|(i, &z)| {
            let p = grid.point(i);
            let r2: f64 = p[..grid.dim()].iter().map(|v| v * v).sum();
            if r2.sqrt() > reliable_radius {
                clipped += 1;
                Complex64::default()
            } else {
                z * (r2 / 2.0 + t * n).exp()
            }
        })
        .collect();
    Ok(OuTransfer { function: SampledFunction::new(grid, values)?, reliable_radius, clipped })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn low_order_values() {
        assert!((hermite_function(0, 0.0) - 0.751_125_544_464_942_5).abs() < 1e-15);
        assert_eq!(hermite_function(1, 0.0), 0.0);
        // h̃_1(x) = √2 π^{-1/4} x e^{-x²/2}
        let x = 0.8;
        let expect = 2f64.sqrt() * PI.powf(-0.25) * x * (-x * x / 2.0).exp();
        assert!((hermite_function(1, x) - expect).abs() < 1e-15);
    }

    #[test]
    fn far_field_is_finite() {
        for &x in &[-40.0, -25.0, 25.0, 40.0] {
            let h = hermite_functions(512, x);
            assert!(h.iter().all(|v| v.is_finite()));
        }
        // Past the turning point √(2k+1) ≈ 32 the function is still visible
        // at x = 30 for k = 512, which plain Gaussian prefactoring would lose.
        assert!(hermite_function(512, 30.0).abs() > 1e-3);
    }

    #[test]
    fn mehler_rejects_unit_w() {
        assert!(mehler_check(1.0, 0.0, 0.0, 10).is_err());
        let (s, c) = mehler_check(0.0, 0.3, -0.4, 10).unwrap();
        assert!((c - (-(0.09 + 0.16) / 2.0f64).exp()).abs() < 1e-15);
        assert!((s - c).abs() < 1e-15);
    }

    #[test]
    fn window_requirement() {
        let g = Grid::new(1, 16.0, 1024, crate::grid::Offset::None).unwrap();
        assert!(HermiteBasis::new(g, 64).is_err());
        assert!(HermiteBasis::new(g, 63).is_ok());
        assert_eq!(max_degree_for(&g), Some(63));
    }
}
