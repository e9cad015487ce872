//! Pointwise-convergence experiments for the four semigroups, and the
//! forward-direction suite pairing weight-class membership with them.

use std::fmt;
use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::descriptor::{sample, FunctionDescriptor};
use crate::error::{Error, Result};
use crate::grid::{convolve_with, norm, Grid, Offset, SampledFunction};
use crate::hermite::{hermite_heat_spectral, hermite_poisson_spectral, HermiteBasis};
use crate::kernels::{heat, hermite_heat, poisson, HermitePoissonKernel, DEFAULT_NODES};
use crate::modnorm::{
    weight_class_membership, Domain, MixedNormParams, Verdict, Weight, WeightClass, WeightClassReport,
};
use crate::numeric::NeumaierSum;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SemigroupTag {
    Heat,
    Poisson,
    HermiteHeat,
    HermitePoisson,
}

impl SemigroupTag {
    pub fn is_hermite(self) -> bool {
        matches!(self, SemigroupTag::HermiteHeat | SemigroupTag::HermitePoisson)
    }

    /// Weight class whose membership is equivalent to convergence.
    pub fn weight_class(self) -> WeightClass {
        match self {
            SemigroupTag::Heat | SemigroupTag::HermiteHeat => WeightClass::Dh,
            SemigroupTag::Poisson => WeightClass::DP,
            SemigroupTag::HermitePoisson => WeightClass::Domega,
        }
    }
}

impl fmt::Display for SemigroupTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SemigroupTag::Heat => "heat",
            SemigroupTag::Poisson => "poisson",
            SemigroupTag::HermiteHeat => "hermite_heat",
            SemigroupTag::HermitePoisson => "hermite_poisson",
        })
    }
}

impl std::str::FromStr for SemigroupTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "heat" => Ok(SemigroupTag::Heat),
            "poisson" => Ok(SemigroupTag::Poisson),
            "hermite_heat" => Ok(SemigroupTag::HermiteHeat),
            "hermite_poisson" => Ok(SemigroupTag::HermitePoisson),
            other => Err(Error::parse("semigroup", format!("unknown semigroup `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    KernelConvolution,
    Spectral,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::KernelConvolution => "kernel",
            Method::Spectral => "spectral",
        })
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "kernel" | "kernel_convolution" => Ok(Method::KernelConvolution),
            "spectral" => Ok(Method::Spectral),
            other => Err(Error::parse("method", format!("unknown method `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SemigroupSpec {
    tag: SemigroupTag,
    method: Method,
}

impl SemigroupSpec {
    /// Spectral evaluation exists only for the Hermite semigroups.
    pub fn new(tag: SemigroupTag, method: Method) -> Result<Self> {
        if method == Method::Spectral && !tag.is_hermite() {
            return Err(Error::param(format!("{tag} has no spectral route")));
        }
        Ok(Self { tag, method })
    }

    pub fn kernel(tag: SemigroupTag) -> Self {
        Self { tag, method: Method::KernelConvolution }
    }

    pub fn tag(&self) -> SemigroupTag {
        self.tag
    }

    pub fn method(&self) -> Method {
        self.method
    }

    /// Smallest `t` keeping the kernel resolved on `grid`: width `√(2t) ≥ 4Δ`
    /// for the heat kernels, `t ≥ 4Δ` for the Poisson kernels. Spectral routes
    /// have no such floor.
    pub fn resolution_floor(&self, grid: &Grid) -> f64 {
        let d = grid.step();
        match (self.method, self.tag) {
            (Method::Spectral, _) => 0.0,
            (_, SemigroupTag::Heat | SemigroupTag::HermiteHeat) => 8.0 * d * d,
            (_, SemigroupTag::Poisson | SemigroupTag::HermitePoisson) => 4.0 * d,
        }
    }

    /// `2^{-k}` for `k = k_min..=k_max`, dropping unresolved values.
    pub fn dyadic_sweep(&self, grid: &Grid, k_min: i32, k_max: i32) -> Vec<f64> {
        let floor = self.resolution_floor(grid) * (1.0 - 1e-12);
        (k_min..=k_max).map(|k| 2f64.powi(-k)).filter(|&t| t >= floor).collect()
    }
}

impl fmt::Display for SemigroupSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.tag, self.method)
    }
}

/// A semigroup bound to a grid; caches the Hermite basis for spectral routes.
#[derive(Debug, Clone)]
pub struct Semigroup {
    spec: SemigroupSpec,
    grid: Grid,
    basis: Option<HermiteBasis>,
}

impl Semigroup {
    pub fn new(spec: SemigroupSpec, grid: Grid) -> Result<Self> {
        let basis = match spec.method {
            Method::Spectral => Some(HermiteBasis::for_grid(grid)?),
            Method::KernelConvolution => None,
        };
        Ok(Self { spec, grid, basis })
    }

    pub fn with_basis(spec: SemigroupSpec, basis: HermiteBasis) -> Self {
        Self { spec, grid: *basis.grid(), basis: Some(basis) }
    }

    pub fn spec(&self) -> SemigroupSpec {
        self.spec
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// `e^{-tL} f` (or `e^{-t√L} f`) at the samples of `f`.
    pub fn apply(&self, f: &SampledFunction, t: f64) -> Result<SampledFunction> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::param(format!("t must be positive, got {t}")));
        }
        self.grid.ensure_matches(f.grid(), "semigroup")?;
        match (self.spec.tag, &self.basis) {
            (SemigroupTag::Heat, _) => convolve_with(f, |d| Complex64::new(heat(t, d), 0.0)),
            (SemigroupTag::Poisson, _) => convolve_with(f, |d| Complex64::new(poisson(t, d), 0.0)),
            (SemigroupTag::HermiteHeat, Some(basis)) => Ok(hermite_heat_spectral(f, t, basis)?.function),
            (SemigroupTag::HermitePoisson, Some(basis)) => Ok(hermite_poisson_spectral(f, t, basis)?.function),
            (SemigroupTag::HermiteHeat, None) => kernel_quadrature(f, |x, y| hermite_heat(t, x, y)),
            (SemigroupTag::HermitePoisson, None) => {
                let kernel = HermitePoissonKernel::new(t, DEFAULT_NODES)?;
                kernel_quadrature(f, |x, y| kernel.eval(x, y))
            }
        }
    }
}

/// `Δ^n Σ_j K(x_i, y_j) f(y_j)`.
fn kernel_quadrature<K>(f: &SampledFunction, kernel: K) -> Result<SampledFunction>
where
    K: Fn(&[f64], &[f64]) -> f64 + Sync,
{
    let grid = *f.grid();
    let dim = grid.dim();
    let dv = grid.cell_volume();
    let values = f.values();
    let out: Vec<Complex64> = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let x = grid.point(i);
            let mut re = NeumaierSum::new();
            let mut im = NeumaierSum::new();
            for (j, z) in values.iter().enumerate() {
                let y = grid.point(j);
                let k = kernel(&x[..dim], &y[..dim]);
                re.add(k * z.re);
                im.add(k * z.im);
            }
            Complex64::new(re.value() * dv, im.value() * dv)
        })
        .collect();
    SampledFunction::new(grid, out)
}

/// One-shot [`Semigroup::apply`].
pub fn apply_semigroup(spec: SemigroupSpec, f: &SampledFunction, t: f64) -> Result<SampledFunction> {
    Semigroup::new(spec, *f.grid())?.apply(f, t)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConvergenceVerdict {
    Converges,
    Stagnates,
    Diverges,
}

impl fmt::Display for ConvergenceVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ConvergenceVerdict::Converges => "converges",
            ConvergenceVerdict::Stagnates => "stagnates",
            ConvergenceVerdict::Diverges => "diverges",
        })
    }
}

/// Allowed growth between consecutive errors before a sweep counts as
/// non-monotone.
pub const MONOTONE_SLACK: f64 = 0.10;

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub t_values: Vec<f64>,
    pub max_error: Vec<f64>,
    pub mean_error: Vec<f64>,
    pub excluded_radius: f64,
    pub admissible_points: usize,
    pub verdict: ConvergenceVerdict,
    pub membership: Option<WeightClassReport>,
}

impl ExperimentReport {
    pub fn final_max_error(&self) -> f64 {
        self.max_error.last().copied().unwrap_or(f64::NAN)
    }
}

/// `converges` iff the last four max errors are nonincreasing up to
/// [`MONOTONE_SLACK`] and the final one is at most `eps`; `diverges` if the
/// final error exceeds the first by more than the slack.
pub fn classify(max_error: &[f64], eps: f64) -> ConvergenceVerdict {
    let Some(&last) = max_error.last() else {
        return ConvergenceVerdict::Stagnates;
    };
    if !last.is_finite() {
        return ConvergenceVerdict::Diverges;
    }
    let tail = &max_error[max_error.len().saturating_sub(4)..];
    let monotone = tail.windows(2).all(|w| w[1] <= (1.0 + MONOTONE_SLACK) * w[0]);
    if monotone && last <= eps {
        ConvergenceVerdict::Converges
    } else if last > (1.0 + MONOTONE_SLACK) * max_error[0] {
        ConvergenceVerdict::Diverges
    } else {
        ConvergenceVerdict::Stagnates
    }
}

/// Indices with `excluded_radius < |x| < L/2`.
pub fn admissible_indices(grid: &Grid, excluded_radius: f64) -> Vec<usize> {
    let outer = grid.half_width() / 2.0;
    (0..grid.len())
        .filter(|&i| {
            let p = grid.point(i);
            let r = norm(&p[..grid.dim()]);
            r > excluded_radius && r < outer
        })
        .collect()
}

/// Sweeps `t` (strictly decreasing) and records `|S_t f - f|` on the
/// admissible subgrid.
pub fn convergence_experiment(
    semigroup: &Semigroup,
    f: &SampledFunction,
    t_values: &[f64],
    excluded_radius: f64,
    eps: f64,
) -> Result<ExperimentReport> {
    if t_values.is_empty() {
        return Err(Error::param("empty t sweep"));
    }
    if t_values.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::param("t values must be strictly decreasing"));
    }
    if !(excluded_radius >= 0.0) {
        return Err(Error::param("excluded radius must be nonnegative"));
    }
    let admissible = admissible_indices(f.grid(), excluded_radius);
    if admissible.is_empty() {
        return Err(Error::EmptySubgrid);
    }
    let errors: Result<Vec<(f64, f64)>> = t_values
        .par_iter()
        .map(|&t| {
            let u = semigroup.apply(f, t)?;
            let errs: Vec<f64> = admissible.iter().map(|&i| (u.values()[i] - f.values()[i]).norm()).collect();
            let max = errs.iter().copied().fold(0.0, f64::max);
            let mean = errs.iter().copied().collect::<NeumaierSum>().value() / errs.len() as f64;
            Ok((max, mean))
        })
        .collect();
    let (max_error, mean_error): (Vec<f64>, Vec<f64>) = errors?.into_iter().unzip();
    let verdict = classify(&max_error, eps);
    Ok(ExperimentReport {
        t_values: t_values.to_vec(),
        max_error,
        mean_error,
        excluded_radius,
        admissible_points: admissible.len(),
        verdict,
        membership: None,
    })
}

/// One row of the forward-direction suite.
#[derive(Debug, Clone)]
pub struct SuiteRow {
    pub weight: Weight,
    pub params: MixedNormParams,
    pub data: FunctionDescriptor,
    pub spec: SemigroupSpec,
    pub grid: Grid,
    pub t0_candidates: Vec<f64>,
    pub excluded_radius: f64,
    pub eps: f64,
    /// Dyadic exponent range of the sweep before the resolution floor.
    pub k_range: (i32, i32),
}

impl SuiteRow {
    pub fn new(weight: Weight, data: FunctionDescriptor, spec: SemigroupSpec, grid: Grid) -> Result<Self> {
        data.validate(grid.dim())?;
        Ok(Self {
            weight,
            params: MixedNormParams::finite(2.0, 2.0)?,
            data,
            spec,
            grid,
            t0_candidates: vec![0.05, 0.1, 0.2, 0.5, 1.0],
            excluded_radius: 4.0 * grid.step(),
            eps: 1e-2,
            k_range: (2, 12),
        })
    }
}

#[derive(Debug, Clone)]
pub struct SuiteOutcome {
    pub row: SuiteRow,
    pub membership: WeightClassReport,
    pub experiment: ExperimentReport,
}

impl SuiteOutcome {
    /// A member weight whose experiment does not converge.
    pub fn is_failure(&self) -> bool {
        self.membership.verdict == Verdict::Member && self.experiment.verdict != ConvergenceVerdict::Converges
    }
}

/// The built-in rows: unit and Gaussian-decaying weights against smooth,
/// singular and eigenfunction data for all four semigroups.
pub fn default_suite() -> Result<Vec<SuiteRow>> {
    let one = Weight::one(Domain::PhaseSpace);
    let gauss_weight = Weight::parse("exp:-1,2", Domain::PhaseSpace)?;
    let fine = Grid::new(1, 8.0, 4096, Offset::None)?;
    let coarse = Grid::new(1, 8.0, 1024, Offset::None)?;
    let rows = vec![
        SuiteRow::new(
            one.clone(),
            FunctionDescriptor::Gaussian { t: 0.25 },
            SemigroupSpec::kernel(SemigroupTag::Heat),
            fine,
        )?,
        {
            let mut row = SuiteRow::new(
                gauss_weight,
                FunctionDescriptor::FAlpha { alpha: 0.5 },
                SemigroupSpec::kernel(SemigroupTag::Heat),
                Grid::new(1, 8.0, 8192, Offset::HalfStep)?,
            )?;
            row.excluded_radius = 0.5;
            row
        },
        SuiteRow::new(
            one.clone(),
            FunctionDescriptor::Gaussian { t: 1.0 },
            SemigroupSpec::kernel(SemigroupTag::Poisson),
            fine,
        )?,
        SuiteRow::new(
            one.clone(),
            FunctionDescriptor::Gaussian { t: 1.0 },
            SemigroupSpec::kernel(SemigroupTag::HermiteHeat),
            coarse,
        )?,
        SuiteRow::new(
            one,
            FunctionDescriptor::Hermite { index: [0, 0] },
            SemigroupSpec::new(SemigroupTag::HermitePoisson, Method::Spectral)?,
            coarse,
        )?,
    ];
    Ok(rows)
}

/// Runs membership and the convergence sweep for every row.
pub fn run_forward_suite(rows: &[SuiteRow]) -> Result<Vec<SuiteOutcome>> {
    rows.par_iter()
        .map(|row| {
            let membership =
                weight_class_membership(row.spec.tag().weight_class(), &row.weight, row.params, &row.t0_candidates)?;
            let f = sample(&row.data, &row.grid)?;
            let semigroup = Semigroup::new(row.spec, row.grid)?;
            let t_values = row.spec.dyadic_sweep(&row.grid, row.k_range.0, row.k_range.1);
            let mut experiment = convergence_experiment(&semigroup, &f, &t_values, row.excluded_radius, row.eps)?;
            experiment.membership = Some(membership.clone());
            Ok(SuiteOutcome { row: row.clone(), membership, experiment })
        })
        .collect()
}

/// CSV with columns `tag,weight,data,t,max_err,mean_err,verdict`.
pub fn write_suite_csv<W: Write>(outcomes: &[SuiteOutcome], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["tag", "weight", "data", "t", "max_err", "mean_err", "verdict"])?;
    for o in outcomes {
        let e = &o.experiment;
        for k in 0..e.t_values.len() {
            out.write_record([
                o.row.spec.tag().to_string(),
                o.row.weight.to_string(),
                o.row.data.to_string(),
                format!("{:e}", e.t_values[k]),
                format!("{:e}", e.max_error[k]),
                format!("{:e}", e.mean_error[k]),
                e.verdict.to_string(),
            ])?;
        }
    }
    out.flush()?;
    Ok(())
}
