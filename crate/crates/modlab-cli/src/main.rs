mod config;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{ArgAction, Args, CommandFactory, Parser, Subcommand};

use modlab::convergence::{
    convergence_experiment, default_suite, run_forward_suite, write_suite_csv, Method, Semigroup, SemigroupSpec,
    SemigroupTag, SuiteOutcome, SuiteRow,
};
use modlab::kernels::{heat_kernel, hermite_heat_kernel, hermite_poisson_kernel, poisson_kernel, DEFAULT_NODES};
use modlab::maximal::{dilation_sup, maximal_function, Profile, RadiiSet};
use modlab::modnorm::{modulation_norm, weight_class_membership, Domain, WeightClass};
use modlab::stft::{gaussian_window, stft};
use modlab::{sample, Exponent, FunctionDescriptor, Grid, MixedNormParams, Offset, SampledFunction, Weight};

#[derive(Debug, Parser)]
#[command(name = "modlab", version, about = "Modulation norms, semigroups and maximal functions on grids")]
struct Cli {
    /// `key = value` file with [section] headers; flags override its values
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Short-time Fourier transform of sampled data
    Stft {
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long)]
        data: String,
        /// Window descriptor; defaults to e^{-π|y|²}
        #[arg(long)]
        window: Option<String>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Weighted modulation norm
    Norm {
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long)]
        data: String,
        #[arg(long)]
        window: Option<String>,
        #[command(flatten)]
        exponents: ExponentArgs,
        #[arg(long, default_value = "const")]
        weight: String,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Sample a semigroup kernel K(x, y) at fixed y
    Kernels {
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long)]
        kernel: SemigroupTag,
        #[arg(long)]
        t: f64,
        /// Second argument (comma-separated in 2D)
        #[arg(long, default_value = "0")]
        y: String,
        /// Subordination nodes for the Hermite–Poisson kernel
        #[arg(long, default_value_t = DEFAULT_NODES)]
        nodes: usize,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Apply a semigroup to sampled data
    Semigroup {
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long)]
        semigroup: SemigroupTag,
        #[arg(long, default_value = "kernel")]
        method: Method,
        #[arg(long)]
        data: String,
        #[arg(long)]
        t: f64,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Hardy–Littlewood maximal function, optionally with a dilation supremum
    Maximal {
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long)]
        data: String,
        /// Largest ball radius; defaults to L
        #[arg(long)]
        radii_max: Option<f64>,
        /// Profile for sup_t |φ_t ∗ f| over the same radii
        #[arg(long)]
        profile: Option<Profile>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Pointwise-convergence experiment, or the built-in forward suite
    Converge {
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long, required_unless_present = "suite")]
        semigroup: Option<SemigroupTag>,
        #[arg(long, default_value = "kernel")]
        method: Method,
        #[arg(long, required_unless_present = "suite")]
        data: Option<String>,
        #[command(flatten)]
        exponents: ExponentArgs,
        #[arg(long, default_value = "const")]
        weight: String,
        /// Candidate kernel times for the membership test
        #[arg(long, value_delimiter = ',', default_value = "0.05,0.1,0.2,0.5,1")]
        t0: Vec<f64>,
        /// Sweep t = 2^-k for k in [k-min, k-max], floored at the resolution limit
        #[arg(long, default_value_t = 2)]
        k_min: i32,
        #[arg(long, default_value_t = 12)]
        k_max: i32,
        /// Radius excluded around the origin; defaults to 4Δ
        #[arg(long)]
        excluded_radius: Option<f64>,
        #[arg(long, default_value_t = 1e-2)]
        eps: f64,
        /// Run the built-in rows instead of a single experiment
        #[arg(long, action = ArgAction::SetTrue)]
        suite: bool,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Numerical membership test for Dh, DP or Domega
    Weightclass {
        #[arg(long)]
        class: WeightClass,
        #[arg(long)]
        weight: String,
        #[command(flatten)]
        exponents: ExponentArgs,
        #[arg(long, value_delimiter = ',', default_value = "0.05,0.1,0.2,0.5,1")]
        t0: Vec<f64>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Run the identity and inequality checks
    Verify {
        /// Restrict to these groups (repeatable or comma-separated)
        #[arg(long, value_delimiter = ',')]
        only: Vec<String>,
        /// List the available groups and exit
        #[arg(long, action = ArgAction::SetTrue)]
        list: bool,
        #[command(flatten)]
        out: OutArgs,
    },
}

#[derive(Debug, Args)]
struct GridArgs {
    #[arg(long, default_value_t = 1)]
    dim: usize,
    /// Half-width L of the window [-L, L)^dim
    #[arg(long, default_value_t = 8.0)]
    half_width: f64,
    /// Points per axis (power of two, at least 8)
    #[arg(long, default_value_t = 1024)]
    n: usize,
    /// Sample offset; defaults to half_step for data singular at the origin
    #[arg(long)]
    offset: Option<Offset>,
}

impl GridArgs {
    fn build(&self, data: Option<&FunctionDescriptor>) -> modlab::Result<Grid> {
        let offset = self.offset.unwrap_or(match data {
            Some(d) if d.singular_at_origin() => Offset::HalfStep,
            _ => Offset::None,
        });
        Grid::new(self.dim, self.half_width, self.n, offset)
    }
}

#[derive(Debug, Args)]
struct ExponentArgs {
    #[arg(long, default_value = "2", value_parser = parse_p)]
    p: Exponent,
    #[arg(long, default_value = "2", value_parser = parse_q)]
    q: Exponent,
}

fn parse_p(s: &str) -> Result<Exponent, String> {
    Exponent::parse_named("p", s).map_err(|_| format!("p must be ≥ 1 or inf, got `{s}`"))
}

fn parse_q(s: &str) -> Result<Exponent, String> {
    Exponent::parse_named("q", s).map_err(|_| format!("q must be ≥ 1 or inf, got `{s}`"))
}

#[derive(Debug, Args)]
struct OutArgs {
    /// CSV output path; standard output when absent
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Io(String),
    Compute(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Compute(_) => 1,
            CliError::Io(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Io(m) | CliError::Compute(m) => f.write_str(m),
        }
    }
}

impl From<modlab::Error> for CliError {
    fn from(e: modlab::Error) -> Self {
        use modlab::Error as E;
        match e {
            E::Io(_) | E::Csv(_) => CliError::Io(e.to_string()),
            E::Parse { .. }
            | E::InvalidGrid(_)
            | E::InvalidParameter(_)
            | E::GridMismatch(_)
            | E::SingularSample(_)
            | E::Negative { .. }
            | E::ZeroWindow
            | E::EmptySubgrid
            | E::Unsupported(_) => CliError::Usage(e.to_string()),
            _ => CliError::Compute(e.to_string()),
        }
    }
}

type CliResult<T> = Result<T, CliError>;

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let argv = match apply_config(argv) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code());
        }
    };
    let cli = Cli::try_parse_from(&argv).unwrap_or_else(|e| e.exit());
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(e.exit_code());
    }
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn configure_threads() -> CliResult<()> {
    let Ok(value) = std::env::var("MODLAB_THREADS") else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Usage(format!("MODLAB_THREADS must be a positive integer, got `{value}`")))?;
    rayon::ThreadPoolBuilder::new().num_threads(threads).build_global().map_err(|e| CliError::Compute(e.to_string()))
}

/// Expands `--config PATH` into flags for the selected subcommand.
fn apply_config(argv: Vec<String>) -> CliResult<Vec<String>> {
    let mut path = None;
    for (i, a) in argv.iter().enumerate() {
        if a == "--config" {
            path = argv.get(i + 1).cloned();
        } else if let Some(p) = a.strip_prefix("--config=") {
            path = Some(p.to_string());
        }
    }
    let Some(path) = path else {
        return Ok(argv);
    };
    let text = std::fs::read_to_string(&path).map_err(|e| CliError::Io(format!("{path}: {e}")))?;
    let entries = config::parse(&text).map_err(|e| CliError::Usage(format!("{path}: {e}")))?;
    let command = Cli::command();
    let Some((pos, sub)) =
        argv.iter().enumerate().skip(1).find_map(|(i, a)| command.find_subcommand(a).map(|s| (i, s.clone())))
    else {
        // No subcommand: let clap report it.
        return Ok(argv);
    };
    let mut known = Vec::new();
    let mut boolean = Vec::new();
    for arg in sub.get_arguments() {
        if let Some(long) = arg.get_long() {
            if long == "config" || long == "help" {
                continue;
            }
            known.push(long.to_string());
            if matches!(arg.get_action(), ArgAction::SetTrue) {
                boolean.push(long.to_string());
            }
        }
    }
    config::validate(&entries, &known).map_err(|e| CliError::Usage(format!("{path}: {e}")))?;
    let given: Vec<String> = argv[pos + 1..].to_vec();
    let flags = config::to_flags(&entries, &given, &boolean).map_err(|e| CliError::Usage(format!("{path}: {e}")))?;
    let mut out = argv[..=pos].to_vec();
    out.extend(flags);
    out.extend(given);
    Ok(out)
}

fn descriptor(s: &str) -> CliResult<FunctionDescriptor> {
    Ok(FunctionDescriptor::parse(s)?)
}

fn window_for(grid: &Grid, spec: Option<&str>) -> CliResult<SampledFunction> {
    match spec {
        None | Some("canonical") => Ok(gaussian_window(grid)),
        Some(s) => Ok(sample(&descriptor(s)?, &grid.aligned())?),
    }
}

fn emit(out: &OutArgs, bytes: &[u8]) -> CliResult<()> {
    output::emit(out.out.as_deref(), bytes).map_err(|e| {
        let target = out.out.as_deref().map(Path::display);
        CliError::Io(match target {
            Some(p) => format!("cannot write {p}: {e}"),
            None => format!("cannot write output: {e}"),
        })
    })
}

fn run(command: Command) -> CliResult<u8> {
    match command {
        Command::Stft { grid, data, window, out } => {
            let desc = descriptor(&data)?;
            let grid = grid.build(Some(&desc))?;
            let f = sample(&desc, &grid)?;
            let w = window_for(&grid, window.as_deref())?;
            let v = stft(&f, &w, &grid.reciprocal())?;
            let mut buf = Vec::new();
            v.write_csv(&mut buf).map_err(|e| CliError::Io(e.to_string()))?;
            emit(&out, &buf)?;
        }
        Command::Norm { grid, data, window, exponents, weight, out } => {
            let desc = descriptor(&data)?;
            let grid = grid.build(Some(&desc))?;
            let f = sample(&desc, &grid)?;
            let w = window_for(&grid, window.as_deref())?;
            let v = Weight::parse(&weight, Domain::PhaseSpace)?;
            let params = MixedNormParams::new(exponents.p, exponents.q);
            let norm = modulation_norm(&f, &w, params, &v)?;
            let text = csv_lines(
                &["data", "weight", "p", "q", "grid", "norm"],
                &[vec![
                    data,
                    weight,
                    exponents.p.to_string(),
                    exponents.q.to_string(),
                    grid.to_string(),
                    format!("{norm:e}"),
                ]],
            );
            emit(&out, text.as_bytes())?;
        }
        Command::Kernels { grid, kernel, t, y, nodes, out } => {
            let grid = grid.build(None)?;
            let y: Vec<f64> = y
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|_| CliError::Usage(format!("cannot parse point `{y}`")))?;
            if y.len() != grid.dim() {
                return Err(CliError::Usage(format!("y needs {} coordinates", grid.dim())));
            }
            let dim = grid.dim();
            let mut rows = Vec::with_capacity(grid.len());
            for i in 0..grid.len() {
                let x = grid.point(i);
                let x = &x[..dim];
                let d: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a - b).collect();
                let k = match kernel {
                    SemigroupTag::Heat => heat_kernel(t, &d)?,
                    SemigroupTag::Poisson => poisson_kernel(t, &d)?,
                    SemigroupTag::HermiteHeat => hermite_heat_kernel(t, x, &y)?,
                    SemigroupTag::HermitePoisson => hermite_poisson_kernel(t, x, &y, nodes)?,
                };
                let mut row = vec![i.to_string()];
                row.extend(x.iter().map(|c| c.to_string()));
                row.push(format!("{k:e}"));
                rows.push(row);
            }
            let header: Vec<&str> = match dim {
                1 => vec!["index", "x", "kernel"],
                _ => vec!["index", "x0", "x1", "kernel"],
            };
            emit(&out, csv_lines(&header, &rows).as_bytes())?;
        }
        Command::Semigroup { grid, semigroup, method, data, t, out } => {
            let desc = descriptor(&data)?;
            let grid = grid.build(Some(&desc))?;
            let f = sample(&desc, &grid)?;
            let s = Semigroup::new(SemigroupSpec::new(semigroup, method)?, grid)?;
            let u = s.apply(&f, t)?;
            let mut buf = Vec::new();
            u.write_csv(&mut buf).map_err(|e| CliError::Io(e.to_string()))?;
            emit(&out, &buf)?;
        }
        Command::Maximal { grid, data, radii_max, profile, out } => {
            let desc = descriptor(&data)?;
            let grid = grid.build(Some(&desc))?;
            let f = sample(&desc, &grid)?;
            let radii = match radii_max {
                Some(r) => RadiiSet::up_to(&grid, r)?,
                None => RadiiSet::default_for(&grid),
            };
            let mf = maximal_function(&f, &radii)?;
            let sup = match &profile {
                Some(p) => Some(dilation_sup(&f, p, &radii.radii())?),
                None => None,
            };
            let dim = grid.dim();
            let mut header = vec!["index", "x"];
            if dim == 2 {
                header = vec!["index", "x0", "x1"];
            }
            header.extend(["f", "maximal"]);
            if sup.is_some() {
                header.push("dilation_sup");
            }
            let rows: Vec<Vec<String>> = (0..grid.len())
                .map(|i| {
                    let p = grid.point(i);
                    let mut row = vec![i.to_string()];
                    row.extend(p[..dim].iter().map(|c| c.to_string()));
                    row.push(format!("{:e}", f.values()[i].re));
                    row.push(format!("{:e}", mf.values()[i].re));
                    if let Some(s) = &sup {
                        row.push(format!("{:e}", s.values()[i].re));
                    }
                    row
                })
                .collect();
            emit(&out, csv_lines(&header, &rows).as_bytes())?;
        }
        Command::Converge {
            grid,
            semigroup,
            method,
            data,
            exponents,
            weight,
            t0,
            k_min,
            k_max,
            excluded_radius,
            eps,
            suite,
            out,
        } => {
            let outcomes = if suite {
                run_forward_suite(&default_suite()?)?
            } else {
                let desc = descriptor(data.as_deref().unwrap_or_default())?;
                let grid = grid.build(Some(&desc))?;
                let spec = SemigroupSpec::new(semigroup.expect("required by clap"), method)?;
                let mut row = SuiteRow::new(Weight::parse(&weight, Domain::PhaseSpace)?, desc, spec, grid)?;
                row.params = MixedNormParams::new(exponents.p, exponents.q);
                row.t0_candidates = t0;
                row.k_range = (k_min, k_max);
                row.eps = eps;
                if let Some(r) = excluded_radius {
                    row.excluded_radius = r;
                }
                single_experiment(row)?
            };
            let mut buf = Vec::new();
            write_suite_csv(&outcomes, &mut buf)?;
            emit(&out, &buf)?;
            let mut failed = false;
            for o in &outcomes {
                eprintln!(
                    "{} {} {}: membership {}, {} (final max error {:.3e})",
                    o.row.spec,
                    o.row.weight,
                    o.row.data,
                    o.membership.verdict,
                    o.experiment.verdict,
                    o.experiment.final_max_error()
                );
                failed |= o.is_failure();
            }
            if failed {
                eprintln!("a member weight failed to converge");
                return Ok(1);
            }
        }
        Command::Weightclass { class, weight, exponents, t0, out } => {
            let v = Weight::parse(&weight, Domain::PhaseSpace)?;
            let report = weight_class_membership(class, &v, MixedNormParams::new(exponents.p, exponents.q), &t0)?;
            let mut rows = Vec::new();
            for s in &report.sweeps {
                for (r, n) in report.radii.iter().zip(&s.norms) {
                    rows.push(vec![
                        class.to_string(),
                        weight.clone(),
                        s.t0.map(|t| t.to_string()).unwrap_or_else(|| "-".into()),
                        r.to_string(),
                        format!("{n:e}"),
                        s.verdict.to_string(),
                    ]);
                }
            }
            emit(&out, csv_lines(&["class", "weight", "t0", "radius", "norm", "verdict"], &rows).as_bytes())?;
            eprintln!("{class} {weight}: {}", report.verdict);
        }
        Command::Verify { only, list, out } => {
            if list {
                for g in modlab::verify::GROUPS {
                    println!("{g}");
                }
                return Ok(0);
            }
            let outcomes = modlab::verify::run(&only)?;
            let rows: Vec<Vec<String>> = outcomes
                .iter()
                .map(|c| {
                    vec![
                        c.group.to_string(),
                        c.name.clone(),
                        format!("{:e}", c.value),
                        format!("{:e}", c.tolerance),
                        if c.passed { "pass" } else { "fail" }.to_string(),
                        c.gating.to_string(),
                    ]
                })
                .collect();
            for c in &outcomes {
                eprintln!("{c}");
            }
            if out.out.is_some() {
                emit(&out, csv_lines(&["group", "check", "value", "tolerance", "status", "gating"], &rows).as_bytes())?;
            }
            if outcomes.iter().any(|c| c.gating && !c.passed) {
                return Ok(1);
            }
        }
    }
    Ok(0)
}

fn single_experiment(row: SuiteRow) -> CliResult<Vec<SuiteOutcome>> {
    let membership =
        weight_class_membership(row.spec.tag().weight_class(), &row.weight, row.params, &row.t0_candidates)?;
    let f = sample(&row.data, &row.grid)?;
    let semigroup = Semigroup::new(row.spec, row.grid)?;
    let t_values = row.spec.dyadic_sweep(&row.grid, row.k_range.0, row.k_range.1);
    if t_values.is_empty() {
        return Err(CliError::Usage("no resolved t in the sweep; refine the grid".into()));
    }
    let mut experiment = convergence_experiment(&semigroup, &f, &t_values, row.excluded_radius, row.eps)?;
    experiment.membership = Some(membership.clone());
    Ok(vec![SuiteOutcome { row, membership, experiment }])
}

/// Renders a header and rows through the csv writer, quoting as needed.
fn csv_lines(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
}
