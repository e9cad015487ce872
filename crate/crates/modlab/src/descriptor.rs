//! Named test functions and their sampling on grids.

use std::fmt;
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::{norm, Grid, Offset, SampledFunction};
use crate::hermite::hermite_tensor;
use crate::kernels::{heat, omega_weight, poisson};

/// Radial profile given by a table `(r, value)`, linearly interpolated and
/// held constant beyond the last entry.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialTable {
    source: String,
    points: Vec<(f64, f64)>,
}

impl RadialTable {
    pub fn new(source: impl Into<String>, mut points: Vec<(f64, f64)>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::param("empty table"));
        }
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
        if points.iter().any(|(r, v)| !r.is_finite() || !v.is_finite() || *r < 0.0) {
            return Err(Error::param("table entries must be finite with r >= 0"));
        }
        Ok(Self { source: source.into(), points })
    }

    /// Reads `r,value` rows; lines starting with `#` are ignored.
    pub fn from_csv(path: &Path) -> Result<Self> {
        let mut reader =
            csv::ReaderBuilder::new().has_headers(false).comment(Some(b'#')).trim(csv::Trim::All).from_path(path)?;
        let mut points = Vec::new();
        for record in reader.records() {
            let record = record?;
            let field = |i: usize| -> Result<f64> {
                record
                    .get(i)
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| Error::parse("table", format!("bad row {:?}", record)))
            };
            points.push((field(0)?, field(1)?));
        }
        Self::new(path.display().to_string(), points)
    }

    pub fn eval(&self, r: f64) -> f64 {
        let pts = &self.points;
        if r <= pts[0].0 {
            return pts[0].1;
        }
        match pts.iter().position(|p| p.0 >= r) {
            None => pts[pts.len() - 1].1,
            Some(i) => {
                let (r0, v0) = pts[i - 1];
                let (r1, v1) = pts[i];
                if r1 == r0 {
                    v1
                } else {
                    v0 + (v1 - v0) * (r - r0) / (r1 - r0)
                }
            }
        }
    }
}

/// Test functions used as data, windows and reference solutions.
#[derive(Debug, Clone, PartialEq)]
pub enum FunctionDescriptor {
    /// Heat kernel `h_t`.
    Gaussian {
        t: f64,
    },
    /// Poisson kernel `p_t`.
    Poisson {
        t: f64,
    },
    /// `χ_{|x| ≤ r}`.
    Indicator {
        radius: f64,
    },
    /// `|x|^{-α}`, singular at the origin.
    FAlpha {
        alpha: f64,
    },
    /// Tensor Hermite function `Φ_α`.
    Hermite {
        index: [usize; 2],
    },
    /// The weight `ω`.
    Omega,
    Constant {
        value: f64,
    },
    /// `e^{c|x|^β}`.
    ExpPower {
        c: f64,
        beta: f64,
    },
    Table(RadialTable),
}

impl FunctionDescriptor {
    pub fn validate(&self, dim: usize) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::param(format!("{name} must be positive, got {v}")))
            }
        };
        match self {
            FunctionDescriptor::Gaussian { t } | FunctionDescriptor::Poisson { t } => positive("t", *t),
            FunctionDescriptor::Indicator { radius } => positive("radius", *radius),
            FunctionDescriptor::FAlpha { alpha } => {
                if *alpha > 0.0 && *alpha < dim as f64 {
                    Ok(())
                } else {
                    Err(Error::param(format!("alpha must lie in (0, {dim}), got {alpha}")))
                }
            }
            FunctionDescriptor::Hermite { index } => {
                if dim == 1 && index[1] != 0 {
                    Err(Error::param("one-dimensional Hermite index takes a single degree"))
                } else {
                    Ok(())
                }
            }
            FunctionDescriptor::ExpPower { c, beta } => {
                positive("beta", *beta)?;
                if c.is_finite() {
                    Ok(())
                } else {
                    Err(Error::param("c must be finite"))
                }
            }
            FunctionDescriptor::Constant { value } => {
                if value.is_finite() {
                    Ok(())
                } else {
                    Err(Error::param("constant must be finite"))
                }
            }
            FunctionDescriptor::Omega | FunctionDescriptor::Table(_) => Ok(()),
        }
    }

    /// Value at `x` (a slice of length `dim`).
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            FunctionDescriptor::Gaussian { t } => heat(*t, x),
            FunctionDescriptor::Poisson { t } => poisson(*t, x),
            FunctionDescriptor::Indicator { radius } => {
                if norm(x) <= *radius {
                    1.0
                } else {
                    0.0
                }
            }
            FunctionDescriptor::FAlpha { alpha } => norm(x).powf(-alpha),
            FunctionDescriptor::Hermite { index } => hermite_tensor(*index, x),
            FunctionDescriptor::Omega => omega_weight(x),
            FunctionDescriptor::Constant { value } => *value,
            FunctionDescriptor::ExpPower { c, beta } => (c * norm(x).powf(*beta)).exp(),
            FunctionDescriptor::Table(table) => table.eval(norm(x)),
        }
    }

    /// Whether the function is singular at the origin.
    pub fn singular_at_origin(&self) -> bool {
        matches!(self, FunctionDescriptor::FAlpha { .. })
    }

    /// Whether every value is nonnegative.
    pub fn is_nonnegative(&self) -> bool {
        match self {
            FunctionDescriptor::Hermite { index } => *index == [0, 0],
            FunctionDescriptor::Constant { value } => *value >= 0.0,
            FunctionDescriptor::Table(t) => t.points.iter().all(|p| p.1 >= 0.0),
            _ => true,
        }
    }

    /// Parses the CLI form: `gauss:t`, `poisson:t`, `indicator:r`,
    /// `falpha:a`, `hermite:k` or `hermite:k1,k2`, `omega`, `const:c`,
    /// `exp:c,beta`, `table:path`.
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        let (head, args) = match s.split_once(':') {
            Some((h, a)) => (h.trim(), Some(a.trim())),
            None => (s, None),
        };
        let err = |msg: &str| Error::parse("function descriptor", format!("`{s}`: {msg}"));
        let nums = |a: Option<&str>, count: usize| -> Result<Vec<f64>> {
            let a = a.ok_or_else(|| err("missing parameters"))?;
            let v: Vec<f64> = a
                .split(',')
                .map(|p| p.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| err("parameters must be numbers"))?;
            if v.len() != count {
                return Err(err(&format!("expected {count} parameter(s)")));
            }
            Ok(v)
        };
        let desc = match head {
            "gauss" | "gaussian" => FunctionDescriptor::Gaussian { t: nums(args, 1)?[0] },
            "poisson" => FunctionDescriptor::Poisson { t: nums(args, 1)?[0] },
            "indicator" => FunctionDescriptor::Indicator { radius: nums(args, 1)?[0] },
            "falpha" => FunctionDescriptor::FAlpha { alpha: nums(args, 1)?[0] },
            "hermite" => {
                let a = args.ok_or_else(|| err("missing degree"))?;
                let ks: Vec<usize> = a
                    .split(',')
                    .map(|p| p.trim().parse::<usize>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|_| err("degrees must be nonnegative integers"))?;
                match ks.as_slice() {
                    [k] => FunctionDescriptor::Hermite { index: [*k, 0] },
                    [a, b] => FunctionDescriptor::Hermite { index: [*a, *b] },
                    _ => return Err(err("expected one or two degrees")),
                }
            }
            "omega" => FunctionDescriptor::Omega,
            "const" => FunctionDescriptor::Constant {
                value: match args {
                    None => 1.0,
                    Some(_) => nums(args, 1)?[0],
                },
            },
            "exp" => {
                let v = nums(args, 2)?;
                FunctionDescriptor::ExpPower { c: v[0], beta: v[1] }
            }
            "table" => {
                let path = args.ok_or_else(|| err("missing path"))?;
                FunctionDescriptor::Table(RadialTable::from_csv(Path::new(path))?)
            }
            _ => return Err(err("unknown function")),
        };
        Ok(desc)
    }
}

impl fmt::Display for FunctionDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FunctionDescriptor::Gaussian { t } => write!(f, "gauss:{t}"),
            FunctionDescriptor::Poisson { t } => write!(f, "poisson:{t}"),
            FunctionDescriptor::Indicator { radius } => write!(f, "indicator:{radius}"),
            FunctionDescriptor::FAlpha { alpha } => write!(f, "falpha:{alpha}"),
            FunctionDescriptor::Hermite { index } => {
                if index[1] == 0 {
                    write!(f, "hermite:{}", index[0])
                } else {
                    write!(f, "hermite:{},{}", index[0], index[1])
                }
            }
            FunctionDescriptor::Omega => f.write_str("omega"),
            FunctionDescriptor::Constant { value } => write!(f, "const:{value}"),
            FunctionDescriptor::ExpPower { c, beta } => write!(f, "exp:{c},{beta}"),
            FunctionDescriptor::Table(t) => write!(f, "table:{}", t.source),
        }
    }
}

/// Pointwise evaluation of `desc` on `grid`.
pub fn sample(desc: &FunctionDescriptor, grid: &Grid) -> Result<SampledFunction> {
    desc.validate(grid.dim())?;
    if desc.singular_at_origin() && grid.offset() == Offset::None {
        return Err(Error::SingularSample(0.0));
    }
    SampledFunction::from_real_fn(*grid, |x| desc.eval(x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn parse_roundtrip() {
        for s in [
            "gauss:0.25",
            "poisson:1",
            "indicator:1",
            "falpha:0.5",
            "hermite:3",
            "hermite:1,2",
            "omega",
            "const:2",
            "exp:-1,2",
        ] {
            let d = FunctionDescriptor::parse(s).unwrap();
            assert_eq!(d.to_string(), s);
            assert_eq!(FunctionDescriptor::parse(&d.to_string()).unwrap(), d);
        }
        assert!(FunctionDescriptor::parse("gauss").is_err());
        assert!(FunctionDescriptor::parse("wavelet:1").is_err());
        assert!(FunctionDescriptor::parse("exp:1").is_err());
    }

    #[test]
    fn sample_values() {
        let g = Grid::new(1, 16.0, 8, Offset::None).unwrap();
        let f = sample(&FunctionDescriptor::Gaussian { t: 1.0 / (4.0 * PI) }, &g).unwrap();
        assert!((f.values()[4].re - 1.0).abs() < 1e-15);
        let h = sample(&FunctionDescriptor::Hermite { index: [0, 0] }, &g).unwrap();
        assert!((h.values()[4].re - PI.powf(-0.25)).abs() < 1e-15);
    }

    #[test]
    fn falpha_needs_half_step() {
        let g = Grid::new(1, 8.0, 8, Offset::None).unwrap();
        let d = FunctionDescriptor::FAlpha { alpha: 0.5 };
        assert!(matches!(sample(&d, &g), Err(Error::SingularSample(_))));
        assert!((d.eval(&[4.0]) - 0.5).abs() < 1e-15);
        let h = Grid::new(1, 8.0, 8, Offset::HalfStep).unwrap();
        assert!(sample(&d, &h).is_ok());
        assert!(FunctionDescriptor::FAlpha { alpha: 1.0 }.validate(1).is_err());
        assert!(FunctionDescriptor::FAlpha { alpha: 1.5 }.validate(2).is_ok());
    }

    #[test]
    fn table_interpolates() {
        let t = RadialTable::new("mem", vec![(0.0, 1.0), (1.0, 3.0), (2.0, 3.0)]).unwrap();
        assert_eq!(t.eval(0.5), 2.0);
        assert_eq!(t.eval(5.0), 3.0);
    }
}
