//! Uniform grids on centered cubes, sampled functions, quadrature, the
//! continuum-scaled Fourier transform and linear convolution.

use std::f64::consts::PI;
use std::fmt;
use std::io::{BufRead, Write};

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftDirection;

use crate::error::{Error, Result};
use crate::fft;
use crate::modnorm::{Exponent, Weight};
use crate::numeric::{self, LogSumExp};

/// Coordinates of a grid point. Only the first `dim` entries are meaningful.
pub type Point = [f64; 2];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Offset {
    None,
    HalfStep,
}

impl Offset {
    fn fraction(self) -> f64 {
        match self {
            Offset::None => 0.0,
            Offset::HalfStep => 0.5,
        }
    }
}

impl fmt::Display for Offset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Offset::None => "none",
            Offset::HalfStep => "half_step",
        })
    }
}

impl std::str::FromStr for Offset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "none" => Ok(Offset::None),
            "half_step" | "half" => Ok(Offset::HalfStep),
            other => Err(Error::parse("offset", format!("unknown offset `{other}`"))),
        }
    }
}

/// Uniform lattice `x_j = -L + (j + o)Δ`, `Δ = 2L/N`, per axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    dim: usize,
    half_width: f64,
    n: usize,
    offset: Offset,
}

impl Grid {
    pub fn new(dim: usize, half_width: f64, n: usize, offset: Offset) -> Result<Self> {
        if !(dim == 1 || dim == 2) {
            return Err(Error::InvalidGrid(format!("dim must be 1 or 2, got {dim}")));
        }
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::InvalidGrid(format!("half-width must be positive, got {half_width}")));
        }
        if !numeric::is_power_of_two(n) || n < 8 {
            return Err(Error::InvalidGrid(format!("points per axis must be a power of two >= 8, got {n}")));
        }
        Ok(Self { dim, half_width, n, offset })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    /// Points per axis.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn offset(&self) -> Offset {
        self.offset
    }

    pub fn step(&self) -> f64 {
        2.0 * self.half_width / self.n as f64
    }

    /// Δ^dim.
    pub fn cell_volume(&self) -> f64 {
        self.step().powi(self.dim as i32)
    }

    /// Total number of samples, N^dim.
    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn coord(&self, j: usize) -> f64 {
        -self.half_width + (j as f64 + self.offset.fraction()) * self.step()
    }

    pub fn axis(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.coord(j)).collect()
    }

    /// Per-axis indices of a flat (row-major) sample index.
    pub fn unravel(&self, index: usize) -> [usize; 2] {
        match self.dim {
            1 => [index, 0],
            _ => [index / self.n, index % self.n],
        }
    }

    pub fn ravel(&self, idx: [usize; 2]) -> usize {
        match self.dim {
            1 => idx[0],
            _ => idx[0] * self.n + idx[1],
        }
    }

    pub fn point(&self, index: usize) -> Point {
        let [i0, i1] = self.unravel(index);
        match self.dim {
            1 => [self.coord(i0), 0.0],
            _ => [self.coord(i0), self.coord(i1)],
        }
    }

    /// Index of the sample nearest to `x` on one axis, if inside the window.
    pub fn nearest_index(&self, x: f64) -> Option<usize> {
        let j = ((x + self.half_width) / self.step() - self.offset.fraction()).round();
        (j >= 0.0 && j < self.n as f64).then_some(j as usize)
    }

    /// Frequency lattice of the discrete transform: step 1/(2L), same N,
    /// frequencies `(k - N/2)/(2L)`.
    pub fn reciprocal(&self) -> Grid {
        Grid { dim: self.dim, half_width: self.n as f64 / (4.0 * self.half_width), n: self.n, offset: Offset::None }
    }

    /// Same window and resolution, lattice through the origin.
    pub fn aligned(&self) -> Grid {
        Grid { offset: Offset::None, ..*self }
    }

    /// Same lattice up to rounding in the half-width.
    pub fn matches(&self, other: &Grid) -> bool {
        self.dim == other.dim
            && self.n == other.n
            && self.offset == other.offset
            && (self.half_width - other.half_width).abs() <= 1e-12 * self.half_width
    }

    pub(crate) fn ensure_matches(&self, other: &Grid, what: &str) -> Result<()> {
        if self.matches(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!("{what}: {self} vs {other}")))
        }
    }
}

impl fmt::Display for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{},{}", self.dim, self.half_width, self.n, self.offset)
    }
}

/// Euclidean norm of the first `dim` coordinates.
pub fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Complex samples on a [`Grid`], immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledFunction {
    grid: Grid,
    values: Vec<Complex64>,
}

impl SampledFunction {
    pub fn new(grid: Grid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::param(format!("expected {} samples, got {}", grid.len(), values.len())));
        }
        if let Some(i) = values.iter().position(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::NonFinite(format!("sample {i} = {}", values[i])));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self { grid, values: vec![Complex64::default(); grid.len()] }
    }

    /// Evaluate `f` at every grid point. `f` receives a slice of length `dim`.
    pub fn from_fn<F>(grid: Grid, f: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> Complex64 + Sync,
    {
        let values = (0..grid.len())
            .into_par_iter()
            .map(|i| {
                let p = grid.point(i);
                f(&p[..grid.dim()])
            })
            .collect();
        Self::new(grid, values)
    }

    pub fn from_real_fn<F>(grid: Grid, f: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> f64 + Sync,
    {
        Self::from_fn(grid, |x| Complex64::new(f(x), 0.0))
    }

    pub fn from_real(grid: Grid, values: &[f64]) -> Result<Self> {
        Self::new(grid, values.iter().map(|&v| Complex64::new(v, 0.0)).collect())
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn real_parts(&self) -> Vec<f64> {
        self.values.iter().map(|z| z.re).collect()
    }

    pub fn moduli(&self) -> Vec<f64> {
        self.values.iter().map(|z| z.norm()).collect()
    }

    pub fn map<F>(&self, f: F) -> Result<Self>
    where
        F: Fn(&[f64], Complex64) -> Complex64 + Sync,
    {
        let grid = self.grid;
        let values = self
            .values
            .par_iter()
            .enumerate()
            .map(|(i, &z)| {
                let p = grid.point(i);
                f(&p[..grid.dim()], z)
            })
            .collect();
        Self::new(grid, values)
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self { grid: self.grid, values: self.values.iter().map(|&z| z * c).collect() }
    }

    pub fn abs(&self) -> Self {
        Self { grid: self.grid, values: self.values.iter().map(|z| Complex64::new(z.norm(), 0.0)).collect() }
    }

    pub fn zip_with<F>(&self, other: &SampledFunction, f: F) -> Result<Self>
    where
        F: Fn(Complex64, Complex64) -> Complex64,
    {
        self.grid.ensure_matches(&other.grid, "pointwise operation")?;
        Self::new(self.grid, self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect())
    }

    /// Largest modulus over all samples.
    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    /// Largest modulus of the difference with `other`.
    pub fn max_abs_diff(&self, other: &SampledFunction) -> Result<f64> {
        self.grid.ensure_matches(&other.grid, "difference")?;
        Ok(self.values.iter().zip(&other.values).fold(0.0, |m, (a, b)| m.max((a - b).norm())))
    }

    /// Value at the sample nearest to `x`.
    pub fn value_near(&self, x: &[f64]) -> Option<Complex64> {
        let mut idx = [0usize; 2];
        for (axis, &c) in x.iter().enumerate().take(self.grid.dim()) {
            idx[axis] = self.grid.nearest_index(c)?;
        }
        Some(self.values[self.grid.ravel(idx)])
    }

    /// Checks that every sample is real and nonnegative.
    pub fn ensure_nonnegative(&self) -> Result<()> {
        for (index, z) in self.values.iter().enumerate() {
            if z.re < 0.0 || z.im.abs() > 1e-12 * z.re.abs().max(1.0) {
                return Err(Error::Negative { index, value: z.re });
            }
        }
        Ok(())
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "# dim,L,N,offset")?;
        writeln!(w, "# {}", self.grid)?;
        let dim = self.grid.dim();
        for (i, z) in self.values.iter().enumerate() {
            let p = self.grid.point(i);
            write!(w, "{i}")?;
            for c in &p[..dim] {
                write!(w, ",{c}")?;
            }
            writeln!(w, ",{},{}", z.re, z.im)?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let mut next_header = |what: &str| -> Result<String> {
            let line = lines.next().ok_or_else(|| Error::parse("sampled function", format!("missing {what}")))??;
            line.strip_prefix('#')
                .map(|s| s.trim().to_string())
                .ok_or_else(|| Error::parse("sampled function", format!("expected {what}")))
        };
        let _ = next_header("header")?;
        let meta = next_header("grid line")?;
        let fields: Vec<&str> = meta.split(',').map(str::trim).collect();
        if fields.len() != 4 {
            return Err(Error::parse("sampled function", "grid line needs 4 fields"));
        }
        let num = |s: &str| -> Result<f64> {
            s.parse().map_err(|_| Error::parse("sampled function", format!("bad number `{s}`")))
        };
        let grid = Grid::new(num(fields[0])? as usize, num(fields[1])?, num(fields[2])? as usize, fields[3].parse()?)?;
        let rest: String = lines.collect::<std::io::Result<Vec<_>>>()?.join("\n");
        let mut reader = csv::ReaderBuilder::new().has_headers(false).from_reader(rest.as_bytes());
        let mut values = vec![Complex64::default(); grid.len()];
        let mut seen = 0usize;
        for record in reader.records() {
            let record = record?;
            let expected = grid.dim() + 3;
            if record.len() != expected {
                return Err(Error::parse(
                    "sampled function",
                    format!("row with {} fields, expected {expected}", record.len()),
                ));
            }
            let index = num(&record[0])? as usize;
            if index >= grid.len() {
                return Err(Error::parse("sampled function", format!("index {index} out of range")));
            }
            values[index] = Complex64::new(num(&record[expected - 2])?, num(&record[expected - 1])?);
            seen += 1;
        }
        if seen != grid.len() {
            return Err(Error::parse("sampled function", format!("expected {} rows, got {seen}", grid.len())));
        }
        Self::new(grid, values)
    }
}

/// Riemann sum `Σ f_j Δ^dim` with compensated accumulation.
pub fn integrate(f: &SampledFunction) -> Complex64 {
    numeric::sum_complex(f.values.iter().copied()) * f.grid.cell_volume()
}

/// Per-axis phase factors of the scaled transform.
pub(crate) struct Twiddles {
    pub(crate) pre: Vec<f64>,
    pub(crate) post: Vec<Complex64>,
}

pub(crate) fn twiddles(grid: &Grid, inverse: bool) -> Twiddles {
    let n = grid.n();
    let o = grid.offset().fraction();
    let sign = if inverse { 1.0 } else { -1.0 };
    let pre = (0..n).map(|j| if j % 2 == 0 { 1.0 } else { -1.0 }).collect();
    let post = (0..n)
        .map(|k| {
            let m = k as f64 - (n / 2) as f64;
            let parity = if (k + n / 2) % 2 == 0 { 1.0 } else { -1.0 };
            Complex64::from_polar(parity, sign * 2.0 * PI * o * m / n as f64)
        })
        .collect();
    Twiddles { pre, post }
}

/// Samples of `f̂(ξ) = ∫ f(y) e^{-2πi y·ξ} dy` on `f.grid().reciprocal()`.
pub fn fourier(f: &SampledFunction) -> SampledFunction {
    let grid = f.grid;
    let tw = twiddles(&grid, false);
    let mut data = apply_factors(&grid, &f.values, |j| Complex64::new(tw.pre[j], 0.0));
    fft::transform(&mut data, grid.n(), grid.dim(), FftDirection::Forward);
    let scale = grid.cell_volume();
    let data = apply_factors(&grid, &data, |k| tw.post[k]);
    SampledFunction { grid: grid.reciprocal(), values: data.into_iter().map(|z| z * scale).collect() }
}

/// Inverse of [`fourier`]; `target` is the space grid the samples came from
/// (its offset cannot be recovered from the frequency samples alone).
pub fn inverse_fourier(fhat: &SampledFunction, target: &Grid) -> Result<SampledFunction> {
    target.reciprocal().ensure_matches(&fhat.grid, "inverse transform target")?;
    let tw = twiddles(target, true);
    let mut data = apply_factors(target, &fhat.values, |k| tw.post[k]);
    fft::transform(&mut data, target.n(), target.dim(), FftDirection::Inverse);
    let scale = fhat.grid.cell_volume();
    let data = apply_factors(target, &data, |j| Complex64::new(tw.pre[j], 0.0));
    Ok(SampledFunction { grid: *target, values: data.into_iter().map(|z| z * scale).collect() })
}

pub(crate) fn apply_factors<F>(grid: &Grid, values: &[Complex64], factor: F) -> Vec<Complex64>
where
    F: Fn(usize) -> Complex64,
{
    values
        .iter()
        .enumerate()
        .map(|(i, &z)| {
            let [a, b] = grid.unravel(i);
            let w = if grid.dim() == 1 { factor(a) } else { factor(a) * factor(b) };
            z * w
        })
        .collect()
}

/// Kernel samples `k(mΔ)` for `m ∈ (-N, N)^dim`, laid out modulo 2N.
fn difference_lattice<K>(grid: &Grid, kernel: K) -> Vec<Complex64>
where
    K: Fn(&[f64]) -> Complex64 + Sync,
{
    let n = grid.n() as i64;
    let p = 2 * n;
    let step = grid.step();
    let signed = move |r: i64| if r < n { r } else { r - p };
    let len = (p as usize).pow(grid.dim() as u32);
    (0..len)
        .into_par_iter()
        .map(|idx| {
            let idx = idx as i64;
            let (a, b) = if grid.dim() == 1 { (idx, 0) } else { (idx / p, idx % p) };
            let (ma, mb) = (signed(a), signed(b));
            if ma == -n || mb == -n {
                return Complex64::default();
            }
            let x = [ma as f64 * step, mb as f64 * step];
            kernel(&x[..grid.dim()])
        })
        .collect()
}

/// `Δ^dim Σ_j f(x_j) k(x_i - x_j)`: the linear convolution of sampled data
/// with a kernel given in closed form. Works on either grid offset because
/// differences of lattice points are always multiples of Δ.
pub fn convolve_with<K>(f: &SampledFunction, kernel: K) -> Result<SampledFunction>
where
    K: Fn(&[f64]) -> Complex64 + Sync,
{
    let grid = f.grid;
    let lattice = difference_lattice(&grid, kernel);
    let out = fft::linear_convolve(&f.values, &lattice, grid.n(), grid.dim());
    let scale = grid.cell_volume();
    SampledFunction::new(grid, out.into_iter().map(|z| z * scale).collect())
}

/// Linear convolution of two sampled functions on the same origin-aligned
/// grid, restricted to the window.
pub fn convolve(f: &SampledFunction, g: &SampledFunction) -> Result<SampledFunction> {
    f.grid.ensure_matches(&g.grid, "convolution")?;
    if f.grid.offset() != Offset::None {
        return Err(Error::GridMismatch(
            "sampled convolution needs an origin-aligned grid; use convolve_with for half-step grids".into(),
        ));
    }
    let grid = f.grid;
    let n = grid.n() as i64;
    let half = n / 2;
    let p = 2 * n;
    let len = (p as usize).pow(grid.dim() as u32);
    let signed = |r: i64| if r < n { r } else { r - p };
    let lookup = |m: i64| {
        let j = m + half;
        (0..n).contains(&j).then_some(j as usize)
    };
    let lattice: Vec<Complex64> = (0..len)
        .map(|idx| {
            let idx = idx as i64;
            let (a, b) = if grid.dim() == 1 { (idx, 0) } else { (idx / p, idx % p) };
            match (lookup(signed(a)), lookup(signed(b))) {
                (Some(i0), Some(i1)) => g.values[grid.ravel([i0, i1])],
                _ => Complex64::default(),
            }
        })
        .collect();
    let out = fft::linear_convolve(&f.values, &lattice, grid.n(), grid.dim());
    let scale = grid.cell_volume();
    SampledFunction::new(grid, out.into_iter().map(|z| z * scale).collect())
}

/// `(Σ |f|^p v Δ^dim)^{1/p}`, or `max |f| v` for `p = ∞`.
pub fn lp_norm(f: &SampledFunction, p: Exponent, v: Option<&Weight>) -> Result<f64> {
    let grid = f.grid;
    let ln_weight = |i: usize| -> Result<f64> {
        match v {
            None => Ok(0.0),
            Some(w) => {
                let x = grid.point(i);
                w.ln_eval_space(&x[..grid.dim()])
            }
        }
    };
    match p {
        Exponent::Infinity => {
            let mut best = f64::NEG_INFINITY;
            for (i, z) in f.values.iter().enumerate() {
                if z.norm() > 0.0 {
                    best = best.max(z.norm().ln() + ln_weight(i)?);
                }
            }
            Ok(best.exp())
        }
        Exponent::Finite(p) => {
            let mut acc = LogSumExp::new();
            for (i, z) in f.values.iter().enumerate() {
                if z.norm() > 0.0 {
                    acc.add(p * z.norm().ln() + ln_weight(i)?);
                }
            }
            Ok(((acc.value() + grid.cell_volume().ln()) / p).exp())
        }
    }
}
