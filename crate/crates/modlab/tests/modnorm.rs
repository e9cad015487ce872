use std::f64::consts::PI;

use modlab::modnorm::{
    cauchy_verdict, characterization_check, mixed_norm, modulation_norm, weight_class_membership, Domain, Verdict,
    WeightClass,
};
use modlab::stft::{gaussian_window, stft_gaussian_closed};
use modlab::{
    sample, Exponent, FunctionDescriptor, Grid, MixedNormParams, Offset, PhaseSpaceFunction, SampledFunction, Weight,
};
use num_complex::Complex64;

fn one() -> Weight {
    Weight::one(Domain::PhaseSpace)
}

/// Nested Riemann sums written out directly.
fn nested(f: &PhaseSpaceFunction, p: f64, q: f64, v: impl Fn(f64, f64) -> f64) -> f64 {
    let (gx, gxi) = (f.grid_x(), f.grid_xi());
    let mut outer = 0.0;
    for k in 0..gxi.len() {
        let xi = gxi.coord(k);
        let inner: f64 =
            (0..gx.len()).map(|i| f.get(i, k).norm().powf(p) * v(gx.coord(i), xi)).sum::<f64>() * gx.step();
        outer += inner.powf(q / p);
    }
    (outer * gxi.step()).powf(1.0 / q)
}

#[test]
fn constant_on_unit_window() {
    // [-1/2, 1/2)² with 16 points per axis.
    let g = Grid::new(1, 0.5, 16, Offset::HalfStep).unwrap();
    let f = PhaseSpaceFunction::from_fn(g, g, |_, _| Complex64::new(1.0, 0.0)).unwrap();
    for (p, q) in [(1.0, 1.0), (2.0, 3.0), (4.0, 1.5)] {
        let n = mixed_norm(&f, MixedNormParams::finite(p, q).unwrap(), &one()).unwrap();
        assert!((n - 1.0).abs() < 1e-12, "p = {p}, q = {q}: {n}");
    }
    let inf = MixedNormParams::new(Exponent::Infinity, Exponent::Infinity);
    assert!((mixed_norm(&f, inf, &one()).unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn gaussian_transform_has_unit_l2_norm() {
    // ‖V_{h_t} h_t‖₂ = ‖h_t‖₂² = (8πt)^{-1/2} = 1 at t = 1/(8π).
    let t0 = 1.0 / (8.0 * PI);
    let g = Grid::new(1, 4.0, 256, Offset::None).unwrap();
    let gxi = Grid::new(1, 8.0, 256, Offset::None).unwrap();
    let f = PhaseSpaceFunction::from_fn(g, gxi, |x, xi| stft_gaussian_closed(t0, x, xi).unwrap()).unwrap();
    let params = MixedNormParams::finite(2.0, 2.0).unwrap();
    let n = mixed_norm(&f, params, &one()).unwrap();
    assert!((n - 1.0).abs() < 1e-4, "{n}");
    assert!((n - nested(&f, 2.0, 2.0, |_, _| 1.0)).abs() < 1e-12);
}

#[test]
fn mixed_norm_against_nested_sums() {
    let g = Grid::new(1, 4.0, 64, Offset::None).unwrap();
    let gxi = Grid::new(1, 3.0, 32, Offset::HalfStep).unwrap();
    let f = PhaseSpaceFunction::from_fn(g, gxi, |x, xi| {
        Complex64::from_polar((-(x[0] - 0.5).powi(2) - 0.5 * xi[0] * xi[0]).exp(), x[0] * xi[0])
    })
    .unwrap();
    let v = Weight::parse("poly:2", Domain::PhaseSpace).unwrap();
    for (p, q) in [(1.0, 2.0), (3.0, 1.0), (2.5, 4.0)] {
        let got = mixed_norm(&f, MixedNormParams::finite(p, q).unwrap(), &v).unwrap();
        let want = nested(&f, p, q, |x, xi| 1.0 + x * x + xi * xi);
        assert!((got - want).abs() < 1e-12 * want, "p = {p}, q = {q}");
    }
}

#[test]
fn infinite_exponents_take_the_grid_maximum() {
    let g = Grid::new(1, 4.0, 32, Offset::None).unwrap();
    let f = PhaseSpaceFunction::from_fn(g, g, |x, xi| Complex64::new((x[0] - xi[0]).sin(), 0.0)).unwrap();
    let v = Weight::parse("exp:-1,2", Domain::PhaseSpace).unwrap();
    let mut want = 0.0f64;
    for i in 0..g.len() {
        for k in 0..g.len() {
            let (x, xi) = (g.coord(i), g.coord(k));
            want = want.max(f.get(i, k).norm() * (-(x * x + xi * xi)).exp());
        }
    }
    let inf = MixedNormParams::new(Exponent::Infinity, Exponent::Infinity);
    assert!((mixed_norm(&f, inf, &v).unwrap() - want).abs() < 1e-14);
}

#[test]
fn scaling_and_monotonicity() {
    let g = Grid::new(1, 4.0, 64, Offset::None).unwrap();
    let f =
        PhaseSpaceFunction::from_fn(g, g, |x, xi| Complex64::new((-(x[0] * x[0]) - xi[0].abs()).exp(), 0.0)).unwrap();
    let c = Complex64::new(-3.0, 4.0);
    let scaled =
        PhaseSpaceFunction::new(*f.grid_x(), *f.grid_xi(), f.values().iter().map(|z| z * c).collect()).unwrap();
    let params = MixedNormParams::finite(2.0, 3.0).unwrap();
    let a = mixed_norm(&f, params, &one()).unwrap();
    assert!((mixed_norm(&scaled, params, &one()).unwrap() - 5.0 * a).abs() < 1e-12 * a);
    let heavier = Weight::parse("poly:1", Domain::PhaseSpace).unwrap();
    assert!(mixed_norm(&f, params, &heavier).unwrap() >= a);
}

#[test]
fn modulation_norm_of_the_heat_kernel() {
    let t0 = 1.0 / (8.0 * PI);
    let g = Grid::new(1, 8.0, 512, Offset::None).unwrap();
    let h = sample(&FunctionDescriptor::Gaussian { t: t0 }, &g).unwrap();
    let params = MixedNormParams::finite(2.0, 2.0).unwrap();
    let n = modulation_norm(&h, &h, params, &one()).unwrap();
    assert!((n - 1.0).abs() < 1e-4, "{n}");
    assert_eq!(modulation_norm(&SampledFunction::zeros(g), &h, params, &one()).unwrap(), 0.0);
}

#[test]
fn modulation_norm_of_singular_power_is_stable() {
    // f(x) = |x|^{-1/2} with p = q = 4; the half-step lattice avoids x = 0.
    let params = MixedNormParams::finite(4.0, 4.0).unwrap();
    let data = FunctionDescriptor::FAlpha { alpha: 0.5 };
    let norm_at = |n: usize| {
        let g = Grid::new(1, 8.0, n, Offset::HalfStep).unwrap();
        let f = sample(&data, &g).unwrap();
        let w = gaussian_window(&g);
        modulation_norm(&f, &w, params, &one()).unwrap()
    };
    let coarse = norm_at(1024);
    let fine = norm_at(2048);
    assert!(coarse.is_finite() && fine.is_finite());
    let drift = (fine - coarse).abs() / fine;
    assert!(drift <= 0.02, "N→2N drift {drift}");
}

#[test]
fn membership_verdicts() {
    let params = MixedNormParams::finite(2.0, 2.0).unwrap();
    let r = weight_class_membership(WeightClass::Dh, &one(), params, &[0.2]).unwrap();
    assert_eq!(r.verdict, Verdict::Member);
    assert_eq!(r.radii, vec![8.0, 16.0, 32.0]);

    // |V h_t0|² v^{-1} = h_{2t0}(x)² e^{x²} e^{(1-4π²t0)ξ²} is integrable
    // exactly when 1/(4π²) < t0 < 1/4.
    let v = Weight::parse("exp:-1,2", Domain::PhaseSpace).unwrap();
    let r = weight_class_membership(WeightClass::Dh, &v, params, &[0.2]).unwrap();
    assert_eq!(r.verdict, Verdict::Member);
    assert_eq!(r.member_t0(), Some(0.2));
    for t0 in [0.02, 0.3] {
        let r = weight_class_membership(WeightClass::Dh, &v, params, &[t0]).unwrap();
        assert_eq!(r.verdict, Verdict::NonMember, "t0 = {t0}");
    }

    // e^{-|x|⁴} in space only.
    let quartic = Weight::parse("prod(exp:-1,4,const)", Domain::PhaseSpace).unwrap();
    let r = weight_class_membership(WeightClass::Dh, &quartic, params, &[0.05, 0.2, 1.0]).unwrap();
    assert_eq!(r.verdict, Verdict::NonMember);
    for s in &r.sweeps {
        assert!(s.norms.windows(2).all(|w| w[1] > w[0] || !w[1].is_finite()));
    }
}

#[test]
fn cauchy_rule() {
    assert_eq!(cauchy_verdict(&[2.0, 2.0005, 2.0006], 1e-3), Verdict::Member);
    assert_eq!(cauchy_verdict(&[1.0, 3.0, 9.0], 1e-3), Verdict::NonMember);
    assert_eq!(cauchy_verdict(&[1.0, f64::INFINITY, 2.0], 1e-3), Verdict::NonMember);
    assert_eq!(cauchy_verdict(&[1.0, 1.0], 1e-3), Verdict::Inconclusive);
    // Settling but not yet within tolerance.
    assert_eq!(cauchy_verdict(&[1.0, 1.2, 1.21], 1e-3), Verdict::Inconclusive);
}

#[test]
fn characterization_for_member_weights() {
    let params = MixedNormParams::finite(2.0, 2.0).unwrap();
    let radii = [4.0, 8.0, 16.0];
    let gauss = FunctionDescriptor::Gaussian { t: 0.25 };
    let r = characterization_check(WeightClass::Dh, &one(), params, &gauss, 0.2, &radii).unwrap();
    assert!(r.bounded);
    assert!(r.max_ratio().is_finite() && r.max_ratio() > 0.0);

    let v = Weight::parse("exp:-1,2", Domain::PhaseSpace).unwrap();
    let falpha = FunctionDescriptor::FAlpha { alpha: 0.5 };
    let r = characterization_check(WeightClass::Dh, &v, params, &falpha, 0.2, &radii).unwrap();
    assert!(r.bounded, "{:?}", r.rows);
    // Resolution is tied to the window (32 points per unit), so widening
    // the window also refines the lattice; the ratio must not grow.
    let first = r.rows[0].ratio;
    assert!(r.rows.iter().all(|row| row.ratio.is_finite() && row.ratio <= first * (1.0 + 1e-9)), "{:?}", r.rows);
}

#[test]
fn characterization_for_a_non_member_weight() {
    let params = MixedNormParams::finite(2.0, 2.0).unwrap();
    let quartic = Weight::parse("prod(exp:-1,4,const)", Domain::PhaseSpace).unwrap();
    let gauss = FunctionDescriptor::Gaussian { t: 0.25 };
    let r = characterization_check(WeightClass::Dh, &quartic, params, &gauss, 0.2, &[2.0, 4.0, 8.0]).unwrap();
    assert!(!r.bounded);
    assert!(r.rows.windows(2).all(|w| w[1].kernel_norm > w[0].kernel_norm || !w[1].kernel_norm.is_finite()));

    let err = characterization_check(WeightClass::DP, &one(), params, &gauss, 0.2, &[2.0]).unwrap_err();
    assert!(err.to_string().contains("heat"), "{err}");
}
