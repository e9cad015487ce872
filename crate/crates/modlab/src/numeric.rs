//! Compensated reductions shared by every module.

use num_complex::Complex64;

/// Neumaier (improved Kahan) running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for NeumaierSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = NeumaierSum::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

/// Compensated sum of a sequence of reals.
pub fn sum(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().collect::<NeumaierSum>().value()
}

/// Compensated sum of complex values (real and imaginary parts separately).
pub fn sum_complex(values: impl IntoIterator<Item = Complex64>) -> Complex64 {
    let mut re = NeumaierSum::new();
    let mut im = NeumaierSum::new();
    for z in values {
        re.add(z.re);
        im.add(z.im);
    }
    Complex64::new(re.value(), im.value())
}

/// Log-domain accumulator for `ln Σ exp(a_i)`.
///
/// Terms are rescaled against the running maximum, so very large or very
/// small summands (weighted norms with growing weights) neither overflow nor
/// flush to zero.
#[derive(Debug, Clone, Copy)]
pub struct LogSumExp {
    max: f64,
    scaled: NeumaierSum,
}

impl Default for LogSumExp {
    fn default() -> Self {
        Self { max: f64::NEG_INFINITY, scaled: NeumaierSum::new() }
    }
}

impl LogSumExp {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, a: f64) {
        if a == f64::NEG_INFINITY {
            return;
        }
        if a.is_nan() || a == f64::INFINITY {
            self.max = f64::INFINITY;
            return;
        }
        if self.max == f64::INFINITY {
            return;
        }
        if a > self.max {
            let rescale = (self.max - a).exp();
            let old = self.scaled.value() * rescale;
            self.scaled = NeumaierSum::new();
            self.scaled.add(old);
            self.max = a;
        }
        self.scaled.add((a - self.max).exp());
    }

    /// `ln Σ exp(a_i)`; `-inf` for an empty sum.
    pub fn value(&self) -> f64 {
        if self.max == f64::INFINITY {
            return f64::INFINITY;
        }
        if self.max == f64::NEG_INFINITY {
            return f64::NEG_INFINITY;
        }
        self.max + self.scaled.value().ln()
    }
}

/// Running maximum in the log domain.
pub fn log_max(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().fold(f64::NEG_INFINITY, |m, a| if a.is_nan() { f64::INFINITY } else { m.max(a) })
}

pub fn is_power_of_two(n: usize) -> bool {
    n != 0 && n & (n - 1) == 0
}
