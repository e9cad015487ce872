//! Weighted mixed norms, modulation norms and numerical membership tests for
//! the weight classes `D^h`, `D^P`, `D^ω`.

use std::f64::consts::PI;
use std::fmt;
use std::path::Path;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::descriptor::{sample, FunctionDescriptor};
use crate::error::{Error, Result};
use crate::grid::{convolve_with, lp_norm, norm, Grid, Offset, SampledFunction};
use crate::kernels::{heat, omega_weight, poisson};
use crate::numeric::LogSumExp;
use crate::stft::{gaussian_window, PhaseSpaceFunction, StftPlan};

/// Lebesgue exponent in `[1, ∞]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Exponent {
    Finite(f64),
    Infinity,
}

impl Exponent {
    pub fn new(p: f64) -> Result<Self> {
        if p == f64::INFINITY {
            Ok(Exponent::Infinity)
        } else if p.is_finite() && p >= 1.0 {
            Ok(Exponent::Finite(p))
        } else {
            Err(Error::param(format!("exponent must be >= 1 or inf, got {p}")))
        }
    }

    /// Parses `2`, `4.5`, `inf`; `name` is used in the error message.
    pub fn parse_named(name: &str, s: &str) -> Result<Self> {
        let s = s.trim();
        if matches!(s, "inf" | "infinity" | "∞") {
            return Ok(Exponent::Infinity);
        }
        match s.parse::<f64>() {
            Ok(p) if p.is_finite() && p >= 1.0 => Ok(Exponent::Finite(p)),
            _ => Err(Error::parse(name, format!("{name} must be ≥ 1 or inf, got `{s}`"))),
        }
    }

    /// `p'` with `1/p + 1/p' = 1`.
    pub fn conjugate(self) -> Self {
        match self {
            Exponent::Infinity => Exponent::Finite(1.0),
            Exponent::Finite(p) if p == 1.0 => Exponent::Infinity,
            Exponent::Finite(p) => Exponent::Finite(p / (p - 1.0)),
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, Exponent::Finite(_))
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Exponent::Finite(p) => write!(f, "{p}"),
            Exponent::Infinity => f.write_str("inf"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixedNormParams {
    pub p: Exponent,
    pub q: Exponent,
}

impl MixedNormParams {
    pub fn new(p: Exponent, q: Exponent) -> Self {
        Self { p, q }
    }

    pub fn finite(p: f64, q: f64) -> Result<Self> {
        Ok(Self::new(Exponent::new(p)?, Exponent::new(q)?))
    }

    pub fn conjugate(self) -> Self {
        Self::new(self.p.conjugate(), self.q.conjugate())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    Space,
    PhaseSpace,
}

/// Tabulated phase-space weight on a rectilinear `(x, ξ)` lattice (n = 1),
/// bilinearly interpolated and clamped at the edges.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightTable {
    source: String,
    xs: Vec<f64>,
    xis: Vec<f64>,
    // ln values, xs-major
    ln_values: Vec<f64>,
}

impl WeightTable {
    pub fn new(source: impl Into<String>, rows: &[(f64, f64, f64)]) -> Result<Self> {
        let mut xs: Vec<f64> = rows.iter().map(|r| r.0).collect();
        let mut xis: Vec<f64> = rows.iter().map(|r| r.1).collect();
        for v in [&mut xs, &mut xis] {
            v.sort_by(f64::total_cmp);
            v.dedup();
        }
        if xs.len() * xis.len() != rows.len() || rows.is_empty() {
            return Err(Error::param("weight table must cover a full rectilinear lattice"));
        }
        let mut ln_values = vec![f64::NAN; rows.len()];
        for &(x, xi, v) in rows {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::param(format!("non-positive weight sample {v} at ({x}, {xi})")));
            }
            let i = xs.partition_point(|&a| a < x);
            let j = xis.partition_point(|&a| a < xi);
            ln_values[i * xis.len() + j] = v.ln();
        }
        if ln_values.iter().any(|v| v.is_nan()) {
            return Err(Error::param("weight table has duplicate entries"));
        }
        Ok(Self { source: source.into(), xs, xis, ln_values })
    }

    /// Reads `x,xi,value` rows; `#` lines are comments.
    pub fn from_csv(path: &Path) -> Result<Self> {
        let mut reader =
            csv::ReaderBuilder::new().has_headers(false).comment(Some(b'#')).trim(csv::Trim::All).from_path(path)?;
        let mut rows = Vec::new();
        for record in reader.records() {
            let record = record?;
            let field = |i: usize| -> Result<f64> {
                record
                    .get(i)
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| Error::parse("weight table", format!("bad row {record:?}")))
            };
            rows.push((field(0)?, field(1)?, field(2)?));
        }
        Self::new(path.display().to_string(), &rows)
    }

    fn bracket(axis: &[f64], v: f64) -> (usize, usize, f64) {
        if axis.len() == 1 || v <= axis[0] {
            return (0, 0, 0.0);
        }
        if v >= axis[axis.len() - 1] {
            let last = axis.len() - 1;
            return (last, last, 0.0);
        }
        let i = axis.partition_point(|&a| a <= v) - 1;
        let w = (v - axis[i]) / (axis[i + 1] - axis[i]);
        (i, i + 1, w)
    }

    /// `ln w(x, ξ)` with bilinear interpolation of `w`.
    pub fn ln_eval(&self, x: f64, xi: f64) -> f64 {
        let (i0, i1, a) = Self::bracket(&self.xs, x);
        let (j0, j1, b) = Self::bracket(&self.xis, xi);
        let m = self.xis.len();
        let v = |i: usize, j: usize| self.ln_values[i * m + j].exp();
        let w = (1.0 - a) * ((1.0 - b) * v(i0, j0) + b * v(i0, j1)) + a * ((1.0 - b) * v(i1, j0) + b * v(i1, j1));
        w.ln()
    }
}

/// Strictly positive weight; evaluated in the log domain.
#[derive(Debug, Clone, PartialEq)]
pub enum WeightForm {
    Constant(f64),
    /// `e^{c|z|^β}`.
    ExpPower {
        c: f64,
        beta: f64,
    },
    /// `(1 + |z|²)^{s/2}`.
    Poly {
        s: f64,
    },
    /// `w_x(x) w_ξ(ξ)` for two space weights.
    Product(Box<WeightForm>, Box<WeightForm>),
    Table(WeightTable),
    /// `w^r`.
    Power(Box<WeightForm>, f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Weight {
    pub domain: Domain,
    pub form: WeightForm,
}

impl WeightForm {
    fn ln_eval(&self, z2: f64, x: &[f64], xi: Option<&[f64]>) -> Result<f64> {
        Ok(match self {
            WeightForm::Constant(c) => c.ln(),
            WeightForm::ExpPower { c, beta } => c * z2.powf(beta / 2.0),
            WeightForm::Poly { s } => s / 2.0 * z2.ln_1p(),
            WeightForm::Product(a, b) => {
                let xi = xi.ok_or_else(|| Error::param("product weights live on phase space"))?;
                let r2 = |v: &[f64]| v.iter().map(|c| c * c).sum::<f64>();
                a.ln_eval(r2(x), x, None)? + b.ln_eval(r2(xi), xi, None)?
            }
            WeightForm::Table(t) => {
                let xi = xi.ok_or_else(|| Error::param("weight tables live on phase space"))?;
                if x.len() != 1 {
                    return Err(Error::Unsupported("weight tables are one-dimensional".into()));
                }
                t.ln_eval(x[0], xi[0])
            }
            WeightForm::Power(w, r) => r * w.ln_eval(z2, x, xi)?,
        })
    }

    fn validate(&self) -> Result<()> {
        match self {
            WeightForm::Constant(c) if !(*c > 0.0 && c.is_finite()) => {
                Err(Error::param(format!("non-positive weight sample: constant {c}")))
            }
            WeightForm::ExpPower { c, beta } if !(c.is_finite() && *beta > 0.0) => {
                Err(Error::param("exp weight needs finite c and beta > 0"))
            }
            WeightForm::Poly { s } if !s.is_finite() => Err(Error::param("poly weight needs finite s")),
            WeightForm::Product(a, b) => {
                a.validate()?;
                b.validate()
            }
            WeightForm::Power(w, r) if r.is_finite() => w.validate(),
            WeightForm::Power(..) => Err(Error::param("weight power must be finite")),
            _ => Ok(()),
        }
    }

    fn parse_list(s: &str) -> Result<WeightForm> {
        let tokens = split_top_level(s);
        let mut pos = 0;
        let form = Self::parse_tokens(&tokens, &mut pos, s)?;
        if pos != tokens.len() {
            return Err(Error::parse("weight", format!("`{s}`: trailing input")));
        }
        Ok(form)
    }

    fn parse_tokens(tokens: &[String], pos: &mut usize, whole: &str) -> Result<WeightForm> {
        let err = |m: &str| Error::parse("weight", format!("`{whole}`: {m}"));
        let num = |t: &str| t.trim().parse::<f64>().map_err(|_| err(&format!("bad number `{t}`")));
        let tok = tokens.get(*pos).ok_or_else(|| err("unexpected end"))?.trim().to_string();
        *pos += 1;
        if let Some(inner) = tok.strip_prefix("prod(").and_then(|r| r.strip_suffix(')')) {
            let parts = split_top_level(inner);
            let mut p = 0;
            let a = Self::parse_tokens(&parts, &mut p, whole)?;
            let b = Self::parse_tokens(&parts, &mut p, whole)?;
            if p != parts.len() {
                return Err(err("prod takes exactly two weights"));
            }
            return Ok(WeightForm::Product(Box::new(a), Box::new(b)));
        }
        let (head, arg) = match tok.split_once(':') {
            Some((h, a)) => (h.trim().to_string(), Some(a.trim().to_string())),
            None => (tok.clone(), None),
        };
        let form = match (head.as_str(), arg) {
            ("const", None) => WeightForm::Constant(1.0),
            ("const", Some(a)) => WeightForm::Constant(num(&a)?),
            ("exp", Some(a)) => {
                let beta = tokens.get(*pos).ok_or_else(|| err("exp needs c,beta"))?;
                *pos += 1;
                WeightForm::ExpPower { c: num(&a)?, beta: num(beta)? }
            }
            ("poly", Some(a)) => WeightForm::Poly { s: num(&a)? },
            ("table", Some(path)) => WeightForm::Table(WeightTable::from_csv(Path::new(&path))?),
            _ => return Err(err(&format!("unknown weight `{tok}`"))),
        };
        Ok(form)
    }
}

/// Splits on commas that are not inside parentheses.
fn split_top_level(s: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut cur = String::new();
    for ch in s.chars() {
        match ch {
            '(' => {
                depth += 1;
                cur.push(ch);
            }
            ')' => {
                depth -= 1;
                cur.push(ch);
            }
            ',' if depth == 0 => out.push(std::mem::take(&mut cur)),
            _ => cur.push(ch),
        }
    }
    out.push(cur);
    out
}

impl fmt::Display for WeightForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WeightForm::Constant(c) if *c == 1.0 => f.write_str("const"),
            WeightForm::Constant(c) => write!(f, "const:{c}"),
            WeightForm::ExpPower { c, beta } => write!(f, "exp:{c},{beta}"),
            WeightForm::Poly { s } => write!(f, "poly:{s}"),
            WeightForm::Product(a, b) => write!(f, "prod({a},{b})"),
            WeightForm::Table(t) => write!(f, "table:{}", t.source),
            WeightForm::Power(w, r) => write!(f, "pow({w},{r})"),
        }
    }
}

impl fmt::Display for Weight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.form.fmt(f)
    }
}

impl Weight {
    pub fn new(domain: Domain, form: WeightForm) -> Result<Self> {
        form.validate()?;
        if domain == Domain::Space && matches!(form, WeightForm::Product(..) | WeightForm::Table(_)) {
            return Err(Error::param("product and table weights live on phase space"));
        }
        Ok(Self { domain, form })
    }

    /// `v ≡ 1`.
    pub fn one(domain: Domain) -> Self {
        Self { domain, form: WeightForm::Constant(1.0) }
    }

    /// Parses the mini-language `const`, `const:c`, `exp:c,beta`, `poly:s`,
    /// `prod(wx,wxi)`, `table:path`.
    pub fn parse(s: &str, domain: Domain) -> Result<Self> {
        Self::new(domain, WeightForm::parse_list(s)?)
    }

    /// `v^{-1}`.
    pub fn inverse(&self) -> Self {
        let form = match &self.form {
            WeightForm::Power(w, r) => WeightForm::Power(w.clone(), -r),
            other => WeightForm::Power(Box::new(other.clone()), -1.0),
        };
        Self { domain: self.domain, form }
    }

    /// `ln v(x)` for a weight on space.
    pub fn ln_eval_space(&self, x: &[f64]) -> Result<f64> {
        let r2: f64 = x.iter().map(|c| c * c).sum();
        self.form.ln_eval(r2, x, None)
    }

    /// `ln v(x, ξ)`. A space weight is evaluated at `x` only; radial forms on
    /// phase space use `|z|² = |x|² + |ξ|²`.
    pub fn ln_eval(&self, x: &[f64], xi: &[f64]) -> Result<f64> {
        match self.domain {
            Domain::Space => self.ln_eval_space(x),
            Domain::PhaseSpace => {
                let z2: f64 = x.iter().chain(xi).map(|c| c * c).sum();
                self.form.ln_eval(z2, x, Some(xi))
            }
        }
    }

    pub fn eval(&self, x: &[f64], xi: &[f64]) -> Result<f64> {
        Ok(self.ln_eval(x, xi)?.exp())
    }
}

/// Streaming evaluation of `(∫ (∫ |F|^p v dx)^{q/p} dξ)^{1/q}` fed one
/// `x`-row (all frequencies) at a time, in the log domain.
struct MixedNormAccumulator {
    p: Exponent,
    q: Exponent,
    inner: Vec<LogSumExp>,
    inner_max: Vec<f64>,
}

impl MixedNormAccumulator {
    fn new(params: MixedNormParams, m: usize) -> Self {
        Self { p: params.p, q: params.q, inner: vec![LogSumExp::new(); m], inner_max: vec![f64::NEG_INFINITY; m] }
    }

    /// `ln_f[k] = ln|F(x, ξ_k)|`, `ln_v[k] = ln v(x, ξ_k)`.
    fn add_row(&mut self, ln_f: &[f64], ln_v: &[f64]) {
        for k in 0..ln_f.len() {
            if ln_f[k] == f64::NEG_INFINITY {
                continue;
            }
            match self.p {
                Exponent::Finite(p) => self.inner[k].add(p * ln_f[k] + ln_v[k]),
                Exponent::Infinity => self.inner_max[k] = self.inner_max[k].max(ln_f[k] + ln_v[k]),
            }
        }
    }

    fn finish(self, ln_dx: f64, ln_dxi: f64) -> f64 {
        self.finish_ln(ln_dx, ln_dxi).exp()
    }

    /// Logarithm of the norm; finite even when the norm overflows.
    fn finish_ln(self, ln_dx: f64, ln_dxi: f64) -> f64 {
        let inner: Vec<f64> = match self.p {
            Exponent::Finite(p) => self.inner.iter().map(|acc| (acc.value() + ln_dx) / p).collect(),
            Exponent::Infinity => self.inner_max,
        };
        let ln_norm = match self.q {
            Exponent::Finite(q) => {
                let mut acc = LogSumExp::new();
                for &v in &inner {
                    if v > f64::NEG_INFINITY {
                        acc.add(q * v);
                    }
                }
                (acc.value() + ln_dxi) / q
            }
            Exponent::Infinity => inner.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        };
        ln_norm
    }
}

fn ln_abs(z: Complex64) -> f64 {
    let r = z.norm();
    if r > 0.0 {
        r.ln()
    } else {
        f64::NEG_INFINITY
    }
}

/// Mixed norm with an arbitrary log-weight given by sample indices.
fn mixed_norm_indexed<W>(f: &PhaseSpaceFunction, params: MixedNormParams, ln_w: W) -> Result<f64>
where
    W: Fn(usize, usize) -> f64 + Sync,
{
    let m = f.grid_xi().len();
    let mut acc = MixedNormAccumulator::new(params, m);
    for ix in 0..f.grid_x().len() {
        let ln_f: Vec<f64> = f.row(ix).iter().map(|&z| ln_abs(z)).collect();
        let ln_v: Vec<f64> = (0..m).map(|k| ln_w(ix, k)).collect();
        if ln_v.iter().any(|v| v.is_nan()) {
            return Err(Error::param("non-positive weight sample"));
        }
        acc.add_row(&ln_f, &ln_v);
    }
    Ok(acc.finish(f.grid_x().cell_volume().ln(), f.grid_xi().cell_volume().ln()))
}

fn weight_rows(v: &Weight, grid_x: &Grid, grid_xi: &Grid) -> Result<Vec<f64>> {
    let dim = grid_x.dim();
    let m = grid_xi.len();
    let out: Result<Vec<f64>> = (0..grid_x.len() * m)
        .into_par_iter()
        .map(|i| {
            let x = grid_x.point(i / m);
            let xi = grid_xi.point(i % m);
            v.ln_eval(&x[..dim], &xi[..dim])
        })
        .collect();
    out
}

/// `(∫ (∫ |F|^p v dx)^{q/p} dξ)^{1/q}` by nested Riemann sums; grid maxima
/// replace infinite exponents.
pub fn mixed_norm(f: &PhaseSpaceFunction, params: MixedNormParams, v: &Weight) -> Result<f64> {
    let ln_v = weight_rows(v, f.grid_x(), f.grid_xi())?;
    let m = f.grid_xi().len();
    mixed_norm_indexed(f, params, |ix, k| ln_v[ix * m + k])
}

const STREAM_CHUNK: usize = 256;

/// Modulation norm without materializing the phase-space array. Samples of
/// `|V_φ f|` below `rel_floor · ‖f‖₂‖φ‖₂` are treated as zero.
fn modulation_norm_streaming(
    f: &SampledFunction,
    window: &SampledFunction,
    params: MixedNormParams,
    ln_weight: &(dyn Fn(&[f64], &[f64]) -> Result<f64> + Sync),
    rel_floor: f64,
) -> Result<f64> {
    let plan = StftPlan::new(f, window)?;
    let grid_x = *f.grid();
    let grid_xi = plan.grid_xi();
    let dim = grid_x.dim();
    let m = grid_xi.len();
    let ln_floor = if rel_floor > 0.0 {
        (rel_floor * lp_norm(f, Exponent::Finite(2.0), None)? * lp_norm(window, Exponent::Finite(2.0), None)?).ln()
    } else {
        f64::NEG_INFINITY
    };
    let mut acc = MixedNormAccumulator::new(params, m);
    let total = grid_x.len();
    let mut start = 0;
    while start < total {
        let end = (start + STREAM_CHUNK).min(total);
        let rows = plan.rows(start, end);
        let weights: Result<Vec<Vec<f64>>> = (start..end)
            .into_par_iter()
            .map(|ix| {
                let x = grid_x.point(ix);
                (0..m)
                    .map(|k| {
                        let xi = grid_xi.point(k);
                        ln_weight(&x[..dim], &xi[..dim])
                    })
                    .collect()
            })
            .collect();
        for (row, ln_v) in rows.iter().zip(weights?) {
            let ln_f: Vec<f64> = row
                .iter()
                .map(|&z| {
                    let l = ln_abs(z);
                    if l < ln_floor {
                        f64::NEG_INFINITY
                    } else {
                        l
                    }
                })
                .collect();
            acc.add_row(&ln_f, &ln_v);
        }
        start = end;
    }
    Ok(acc.finish(grid_x.cell_volume().ln(), grid_xi.cell_volume().ln()))
}

/// `‖V_φ f‖_{L^{p,q}_v}` on the reciprocal frequency lattice.
pub fn modulation_norm(
    f: &SampledFunction,
    window: &SampledFunction,
    params: MixedNormParams,
    v: &Weight,
) -> Result<f64> {
    modulation_norm_streaming(f, window, params, &|x, xi| v.ln_eval(x, xi), 0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightClass {
    Dh,
    DP,
    Domega,
}

impl fmt::Display for WeightClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WeightClass::Dh => "Dh",
            WeightClass::DP => "DP",
            WeightClass::Domega => "Domega",
        })
    }
}

impl std::str::FromStr for WeightClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "Dh" | "dh" | "heat" => Ok(WeightClass::Dh),
            "DP" | "dp" | "poisson" => Ok(WeightClass::DP),
            "Domega" | "domega" | "omega" => Ok(WeightClass::Domega),
            other => Err(Error::parse("weight class", format!("unknown class `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Member,
    NonMember,
    Inconclusive,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Member => "member",
            Verdict::NonMember => "non_member",
            Verdict::Inconclusive => "inconclusive",
        })
    }
}

/// Truncation radii for membership sweeps.
pub const MEMBERSHIP_RADII: [f64; 3] = [8.0, 16.0, 32.0];
/// Relative Cauchy tolerance over the last three truncations.
pub const MEMBERSHIP_TOL: f64 = 1e-3;

/// Norm sequence for one kernel parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncationSweep {
    pub t0: Option<f64>,
    pub norms: Vec<f64>,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightClassReport {
    pub class_tag: WeightClass,
    pub t0_tested: Vec<f64>,
    pub radii: Vec<f64>,
    pub sweeps: Vec<TruncationSweep>,
    pub verdict: Verdict,
}

impl WeightClassReport {
    /// Norm sequence of the first sweep with a member verdict, else of the
    /// first sweep.
    pub fn norms(&self) -> &[f64] {
        self.sweeps
            .iter()
            .find(|s| s.verdict == Verdict::Member)
            .or(self.sweeps.first())
            .map(|s| s.norms.as_slice())
            .unwrap_or(&[])
    }

    /// Smallest tested `t0` with a member verdict.
    pub fn member_t0(&self) -> Option<f64> {
        self.sweeps.iter().filter(|s| s.verdict == Verdict::Member).filter_map(|s| s.t0).reduce(f64::min)
    }
}

/// Classifies a norm sequence over increasing truncations.
pub fn cauchy_verdict(norms: &[f64], tol: f64) -> Verdict {
    if norms.iter().any(|v| !v.is_finite()) {
        return Verdict::NonMember;
    }
    if norms.len() < 3 {
        return Verdict::Inconclusive;
    }
    let k = norms.len();
    let (a, b, c) = (norms[k - 3], norms[k - 2], norms[k - 1]);
    let d1 = (b - a).abs();
    let d2 = (c - b).abs();
    if d1 <= tol * b.abs() && d2 <= tol * c.abs() {
        Verdict::Member
    } else if d2 > tol * c.abs() && c > b && d2 >= 0.5 * d1 {
        Verdict::NonMember
    } else {
        Verdict::Inconclusive
    }
}

fn dh_norm(v_inv: &Weight, params: MixedNormParams, t0: f64, radius: f64) -> Result<f64> {
    // |V_{h_t0} h_t0|(x, ξ) = e^{-2π²t0ξ²} h_{2t0}(x), on a (x, ξ) lattice with
    // 16 points per unit.
    let n = ((32.0 * radius).ceil() as usize).next_power_of_two();
    let grid = Grid::new(1, radius, n, Offset::None)?;
    let axis = grid.axis();
    let m = axis.len();
    let mut acc = MixedNormAccumulator::new(params, m);
    for &x in &axis {
        let ln_h = heat(2.0 * t0, &[x]).ln();
        let ln_f: Vec<f64> = axis.iter().map(|&xi| ln_h - 2.0 * PI * PI * t0 * xi * xi).collect();
        let ln_v: Vec<f64> = axis.iter().map(|&xi| v_inv.ln_eval(&[x], &[xi])).collect::<Result<_>>()?;
        acc.add_row(&ln_f, &ln_v);
    }
    let ln_d = grid.step().ln();
    Ok(acc.finish(ln_d, ln_d))
}

fn numeric_kernel_norm(
    kernel: &(dyn Fn(f64) -> f64 + Sync),
    v_inv: &Weight,
    params: MixedNormParams,
    radius: f64,
) -> Result<f64> {
    // N = 4R² makes the frequency window [-R, R) as well.
    let n = ((4.0 * radius * radius).ceil() as usize).next_power_of_two();
    let grid = Grid::new(1, radius, n, Offset::None)?;
    let f = SampledFunction::from_real_fn(grid, |x| kernel(x[0]))?;
    let window = gaussian_window(&grid);
    modulation_norm_streaming(&f, &window, params, &|x, xi| v_inv.ln_eval(x, xi), 1e-14)
}

/// Numerical membership test: `h_{t0}` (resp. `p_{t0}`, `ω`) in
/// `M^{p',q'}_{v^{-1}}` for some tested `t0`, judged by stabilization of
/// the norm over truncation radii 8, 16, 32. One-dimensional.
///
/// `D^h` uses the closed form of `|V_{h_{t0}} h_{t0}|`; `D^P` and `D^ω` use the
/// numerical transform with the canonical Gaussian window.
pub fn weight_class_membership(
    class: WeightClass,
    v: &Weight,
    params: MixedNormParams,
    t0_candidates: &[f64],
) -> Result<WeightClassReport> {
    membership_with_radii(class, v, params, t0_candidates, &MEMBERSHIP_RADII)
}

/// [`weight_class_membership`] with custom truncation radii.
pub fn membership_with_radii(
    class: WeightClass,
    v: &Weight,
    params: MixedNormParams,
    t0_candidates: &[f64],
    radii: &[f64],
) -> Result<WeightClassReport> {
    let dual = params.conjugate();
    let v_inv = v.inverse();
    let t0s: Vec<Option<f64>> = match class {
        WeightClass::Domega => vec![None],
        _ => {
            if t0_candidates.is_empty() {
                return Err(Error::param("no t0 candidates"));
            }
            for &t in t0_candidates {
                if !(t > 0.0 && t.is_finite()) {
                    return Err(Error::param(format!("t0 must be positive, got {t}")));
                }
            }
            t0_candidates.iter().map(|&t| Some(t)).collect()
        }
    };
    let sweeps: Result<Vec<TruncationSweep>> = t0s
        .par_iter()
        .map(|&t0| {
            let norms: Result<Vec<f64>> = radii
                .iter()
                .map(|&r| match (class, t0) {
                    (WeightClass::Dh, Some(t)) => dh_norm(&v_inv, dual, t, r),
                    (WeightClass::DP, Some(t)) => numeric_kernel_norm(&|x| poisson(t, &[x]), &v_inv, dual, r),
                    _ => numeric_kernel_norm(&|x| omega_weight(&[x]), &v_inv, dual, r),
                })
                .collect();
            let norms = norms?;
            let verdict = cauchy_verdict(&norms, MEMBERSHIP_TOL);
            Ok(TruncationSweep { t0, norms, verdict })
        })
        .collect();
    let sweeps = sweeps?;
    let verdict = if sweeps.iter().any(|s| s.verdict == Verdict::Member) {
        Verdict::Member
    } else if sweeps.iter().all(|s| s.verdict == Verdict::NonMember) {
        Verdict::NonMember
    } else {
        Verdict::Inconclusive
    };
    Ok(WeightClassReport {
        class_tag: class,
        t0_tested: t0s.into_iter().flatten().collect(),
        radii: radii.to_vec(),
        sweeps,
        verdict,
    })
}

/// One truncation radius of a characterization run.
#[derive(Debug, Clone, PartialEq)]
pub struct CharacterizationRow {
    pub radius: f64,
    /// `‖h_{t0} ∗ f_R‖_{M_u^{p,q}}`.
    pub lhs: f64,
    /// `‖f_R‖_{M_v^{p,q}}`.
    pub rhs: f64,
    pub ratio: f64,
    /// `g_{t0}(0) = ‖h_{t0}‖_{M^{p',q'}_{v^{-1}}}` restricted to the window;
    /// it multiplies the constant of the norm inequality.
    pub kernel_norm: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CharacterizationReport {
    pub t0: f64,
    pub rows: Vec<CharacterizationRow>,
    /// Ratios finite and the window-restricted kernel norm stabilizes.
    pub bounded: bool,
}

impl CharacterizationReport {
    pub fn max_ratio(&self) -> f64 {
        self.rows.iter().map(|r| r.ratio).fold(0.0, f64::max)
    }
}

/// Both sides of `‖h_{t0} ∗ f‖_{M_u^{p,q}} ≲ ‖f‖_{M_v^{p,q}}` on windows of
/// increasing half-width, with `u = min(1, u'/|V_φ g_{t0}|)`,
/// `u'(x, ξ) = e^{-π(|x|²+|ξ|²)}` and `g_{t0}(x) = ‖h_{t0}(x - ·)‖_{M^{p',q'}_{v^{-1}}}`
/// evaluated through the closed form of `|V_{h_{t0}} h_{t0}|`. One-dimensional,
/// class `D^h` only.
pub fn characterization_check(
    class: WeightClass,
    v: &Weight,
    params: MixedNormParams,
    f: &FunctionDescriptor,
    t0: f64,
    radii: &[f64],
) -> Result<CharacterizationReport> {
    if class != WeightClass::Dh {
        return Err(Error::Unsupported("characterization check is implemented for the heat class".into()));
    }
    if !(t0 > 0.0) {
        return Err(Error::param("t0 must be positive"));
    }
    if radii.is_empty() {
        return Err(Error::param("no radii"));
    }
    let dual = params.conjugate();
    let v_inv = v.inverse();
    let rows: Result<Vec<CharacterizationRow>> = radii
        .iter()
        .map(|&radius| {
            let n = ((32.0 * radius).ceil() as usize).next_power_of_two().max(8);
            let offset = if f.singular_at_origin() { Offset::HalfStep } else { Offset::None };
            let grid = Grid::new(1, radius, n, offset)?;
            let fr = sample(f, &grid)?;
            let window = gaussian_window(&grid);
            let rhs = modulation_norm(&fr, &window, params, v)?;

            let ln_g = kernel_norm_profile(&grid, &v_inv, dual, t0)?;
            let kernel_norm = {
                let x0 = grid.nearest_index(0.0).unwrap_or(n / 2);
                ln_g[x0].exp()
            };
            let ln_gmax = ln_g.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let g_scaled =
                SampledFunction::from_real(grid, &ln_g.iter().map(|l| (l - ln_gmax).exp()).collect::<Vec<_>>())?;
            let vg = StftPlan::new(&g_scaled, &window)?.compute()?;
            let m = vg.grid_xi().len();
            let ln_u: Vec<f64> = (0..grid.len() * m)
                .map(|i| {
                    let x = grid.coord(i / m);
                    let xi = vg.grid_xi().coord(i % m);
                    let ln_up = -PI * (x * x + xi * xi);
                    let ln_vg = ln_abs(vg.values()[i]) + ln_gmax;
                    (ln_up - ln_vg).min(0.0)
                })
                .collect();

            let smoothed = convolve_with(&fr, |d| Complex64::new(heat(t0, d), 0.0))?;
            let vs = StftPlan::new(&smoothed, &window)?.compute()?;
            let lhs = mixed_norm_indexed(&vs, params, |ix, k| ln_u[ix * m + k])?;
            Ok(CharacterizationRow { radius, lhs, rhs, ratio: lhs / rhs, kernel_norm })
        })
        .collect();
    let rows = rows?;
    let kernel_norms: Vec<f64> = rows.iter().map(|r| r.kernel_norm).collect();
    let stable = rows.len() < 3 || cauchy_verdict(&kernel_norms, 1e-2) == Verdict::Member;
    let bounded = rows.iter().all(|r| r.ratio.is_finite()) && stable;
    Ok(CharacterizationReport { t0, rows, bounded })
}

/// `ln g_{t0}(x_i)` with the `y`-integral over the window and `ξ` over the
/// reciprocal lattice.
fn kernel_norm_profile(grid: &Grid, v_inv: &Weight, dual: MixedNormParams, t0: f64) -> Result<Vec<f64>> {
    let xs = grid.axis();
    let xis = grid.reciprocal().axis();
    let ln_dy = grid.step().ln();
    let ln_dxi = grid.reciprocal().step().ln();
    let ln_vinv: Vec<f64> = xs
        .iter()
        .flat_map(|&y| xis.iter().map(move |&xi| (y, xi)))
        .map(|(y, xi)| v_inv.ln_eval(&[y], &[xi]))
        .collect::<Result<_>>()?;
    let m = xis.len();
    Ok(xs
        .par_iter()
        .map(|&x| {
            let mut acc = MixedNormAccumulator::new(dual, m);
            for (iy, &y) in xs.iter().enumerate() {
                let ln_h = heat(2.0 * t0, &[x - y]).ln();
                let ln_f: Vec<f64> = xis.iter().map(|&xi| ln_h - 2.0 * PI * PI * t0 * xi * xi).collect();
                acc.add_row(&ln_f, &ln_vinv[iy * m..(iy + 1) * m]);
            }
            acc.finish_ln(ln_dy, ln_dxi)
        })
        .collect())
}

/// Radial distance helper re-exported for weight tables and tests.
pub fn phase_radius(x: &[f64], xi: &[f64]) -> f64 {
    let z: Vec<f64> = x.iter().chain(xi).copied().collect();
    norm(&z)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponent_parsing() {
        assert_eq!(Exponent::parse_named("p", "inf").unwrap(), Exponent::Infinity);
        assert_eq!(Exponent::parse_named("p", "4").unwrap(), Exponent::Finite(4.0));
        let e = Exponent::parse_named("p", "0.5").unwrap_err().to_string();
        assert!(e.contains("p must be ≥ 1 or inf"), "{e}");
        assert_eq!(Exponent::Finite(1.0).conjugate(), Exponent::Infinity);
        assert_eq!(Exponent::Finite(2.0).conjugate(), Exponent::Finite(2.0));
        assert_eq!(Exponent::Finite(4.0).conjugate(), Exponent::Finite(4.0 / 3.0));
    }

    #[test]
    fn weight_language() {
        for s in ["const", "exp:-1,2", "poly:3", "prod(exp:-1,2,poly:1)", "prod(const,const:2)"] {
            let w = Weight::parse(s, Domain::PhaseSpace).unwrap();
            assert_eq!(w.to_string(), s);
        }
        assert!(Weight::parse("const:-1", Domain::PhaseSpace).is_err());
        assert!(Weight::parse("exp:1", Domain::PhaseSpace).is_err());
        assert!(Weight::parse("prod(const)", Domain::PhaseSpace).is_err());
        assert!(Weight::parse("gauss:1", Domain::PhaseSpace).is_err());
        assert!(Weight::parse("prod(const,const)", Domain::Space).is_err());
    }

    #[test]
    fn weight_values() {
        let w = Weight::parse("exp:-1,2", Domain::PhaseSpace).unwrap();
        assert!((w.eval(&[1.0], &[2.0]).unwrap() - (-5.0f64).exp()).abs() < 1e-15);
        let p = Weight::parse("prod(poly:2,exp:1,1)", Domain::PhaseSpace).unwrap();
        assert!((p.eval(&[1.0], &[-2.0]).unwrap() - 2.0 * 2f64.exp()).abs() < 1e-12);
        let inv = p.inverse();
        assert!((inv.eval(&[1.0], &[-2.0]).unwrap() * p.eval(&[1.0], &[-2.0]).unwrap() - 1.0).abs() < 1e-14);
        assert_eq!(inv.inverse().eval(&[0.3], &[0.2]).unwrap(), p.eval(&[0.3], &[0.2]).unwrap());
    }

    #[test]
    fn table_weight_bilinear() {
        let rows = [(0.0, 0.0, 1.0), (0.0, 1.0, 2.0), (1.0, 0.0, 3.0), (1.0, 1.0, 4.0)];
        let t = WeightTable::new("mem", &rows).unwrap();
        assert!((t.ln_eval(0.5, 0.5).exp() - 2.5).abs() < 1e-14);
        assert!((t.ln_eval(-3.0, 9.0).exp() - 2.0).abs() < 1e-14);
        assert!(WeightTable::new("bad", &[(0.0, 0.0, 0.0)]).is_err());
        assert!(WeightTable::new("gap", &rows[..3]).is_err());
    }

    #[test]
    fn verdict_rule() {
        assert_eq!(cauchy_verdict(&[1.0, 1.0, 1.0], 1e-3), Verdict::Member);
        assert_eq!(cauchy_verdict(&[1.0, 2.0, 4.0], 1e-3), Verdict::NonMember);
        assert_eq!(cauchy_verdict(&[1.0, 2.0, f64::INFINITY], 1e-3), Verdict::NonMember);
        assert_eq!(cauchy_verdict(&[1.0, 1.1, 1.101], 1e-3), Verdict::Inconclusive);
    }
}
