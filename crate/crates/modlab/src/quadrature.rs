//! Quadrature for the subordination integral
//! `π^{-1/2} ∫_0^∞ e^{-τ} τ^{-1/2} g(t²/(4τ)) dτ`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use statrs::function::erf::{erf, erfc};
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};

/// Node placement for the subordination integral.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SubordinationRule {
    /// Trapezoid rule in `v = ln τ` on `[ln(t²/240), ln 60]`. The integrand
    /// is analytic and doubly-exponentially small at both ends in `v`, so
    /// the rule converges geometrically.
    #[default]
    LogTrapezoid,
    /// Generalized Gauss–Laguerre nodes for `τ^{-1/2} e^{-τ} dτ`. Kept for
    /// comparison: the heat kernel at time `t²/(4τ)` is not polynomial-like
    /// near `τ = 0`, so convergence in the node count is slow.
    GaussLaguerre,
}

/// Nodes `τ_m` and weights `w_m` with
/// `Σ w_m g(t²/(4τ_m)) ≈ π^{-1/2} ∫ e^{-τ} τ^{-1/2} g(t²/(4τ)) dτ`.
#[derive(Debug, Clone)]
pub struct SubordinationQuadrature {
    t: f64,
    tau: Vec<f64>,
    weights: Vec<f64>,
}

impl SubordinationQuadrature {
    pub fn new(rule: SubordinationRule, t: f64, nodes: usize) -> Result<Self> {
        if !(t.is_finite() && t > 0.0) {
            return Err(Error::param(format!("t must be positive, got {t}")));
        }
        if nodes < 8 {
            return Err(Error::param(format!("need at least 8 nodes, got {nodes}")));
        }
        let (tau, weights) = match rule {
            SubordinationRule::LogTrapezoid => log_trapezoid(t, nodes),
            SubordinationRule::GaussLaguerre => {
                let (x, w) = gauss_laguerre(nodes, -0.5);
                let w = w.into_iter().map(|w| w / PI.sqrt()).collect();
                (x, w)
            }
        };
        Ok(Self { t, tau, weights })
    }

    pub fn len(&self) -> usize {
        self.tau.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tau.is_empty()
    }

    /// `(s_m, w_m)` pairs where `s_m = t²/(4τ_m)` is the subordinated time.
    pub fn times_and_weights(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        let t2 = self.t * self.t / 4.0;
        self.tau.iter().zip(&self.weights).map(move |(&tau, &w)| (t2 / tau, w))
    }

    pub fn apply<G: Fn(f64) -> f64>(&self, g: G) -> f64 {
        crate::numeric::sum(self.times_and_weights().map(|(s, w)| w * g(s)))
    }
}

fn log_trapezoid(t: f64, nodes: usize) -> (Vec<f64>, Vec<f64>) {
    let lo = (t * t / 240.0).ln();
    let hi = 60f64.ln();
    let h = (hi - lo) / (nodes - 1) as f64;
    let mut tau = Vec::with_capacity(nodes);
    let mut weights = Vec::with_capacity(nodes);
    for i in 0..nodes {
        let v = lo + i as f64 * h;
        let x = v.exp();
        let end = if i == 0 || i == nodes - 1 { 0.5 } else { 1.0 };
        tau.push(x);
        weights.push(end * h * (-x).exp() * x.sqrt() / PI.sqrt());
    }
    // The mass outside the window sits at the end nodes; for decaying
    // integrands it is multiplied by a negligible value anyway.
    weights[0] += erf(tau[0].sqrt());
    weights[nodes - 1] += erfc(tau[nodes - 1].sqrt());
    (tau, weights)
}

/// Generalized Gauss–Laguerre rule for `x^α e^{-x}` by Golub–Welsch.
pub fn gauss_laguerre(nodes: usize, alpha: f64) -> (Vec<f64>, Vec<f64>) {
    let mut jacobi = DMatrix::<f64>::zeros(nodes, nodes);
    for k in 0..nodes {
        jacobi[(k, k)] = 2.0 * k as f64 + alpha + 1.0;
        if k + 1 < nodes {
            let kk = (k + 1) as f64;
            let b = (kk * (kk + alpha)).sqrt();
            jacobi[(k, k + 1)] = b;
            jacobi[(k + 1, k)] = b;
        }
    }
    let eig = SymmetricEigen::new(jacobi);
    let mu0 = gamma(alpha + 1.0);
    let mut pairs: Vec<(f64, f64)> = (0..nodes)
        .map(|i| {
            let v0 = eig.eigenvectors[(0, i)];
            (eig.eigenvalues[i], mu0 * v0 * v0)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_reproduce_unit_mass() {
        let q = SubordinationQuadrature::new(SubordinationRule::GaussLaguerre, 0.5, 64).unwrap();
        assert!((q.apply(|_| 1.0) - 1.0).abs() < 1e-12);
        // The trapezoid window is cut where the integrand is still O(√τ) for
        // a constant g, which costs a small endpoint error.
        for &t in &[0.01, 0.5, 5.0] {
            let q = SubordinationQuadrature::new(SubordinationRule::LogTrapezoid, t, 64).unwrap();
            assert!((q.apply(|_| 1.0) - 1.0).abs() < 1e-4, "t={t}");
        }
    }

    #[test]
    fn laguerre_rule_integrates_polynomials() {
        let (x, w) = gauss_laguerre(12, -0.5);
        // ∫ x^k x^{-1/2} e^{-x} dx = Γ(k + 1/2)
        for k in 0..6 {
            let exact = gamma(k as f64 + 0.5);
            let approx: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(k)).sum();
            assert!((approx - exact).abs() < 1e-10 * exact, "k={k}");
        }
    }

    #[test]
    fn log_trapezoid_matches_laplace_transform() {
        // g(s) = e^{-λs} subordinates to e^{-t√λ}.
        for &t in &[0.01, 0.5, 5.0] {
            let q = SubordinationQuadrature::new(SubordinationRule::LogTrapezoid, t, 64).unwrap();
            for &lambda in &[1.0, 3.0, 101.0, 1025.0] {
                let got = q.apply(|s| (-lambda * s).exp());
                let exact = (-t * f64::sqrt(lambda)).exp();
                assert!((got - exact).abs() < 1e-12, "t={t} λ={lambda}: {got} vs {exact}");
            }
        }
    }

    #[test]
    fn invalid_inputs() {
        assert!(SubordinationQuadrature::new(SubordinationRule::LogTrapezoid, 0.0, 64).is_err());
        assert!(SubordinationQuadrature::new(SubordinationRule::LogTrapezoid, 1.0, 4).is_err());
    }
}
