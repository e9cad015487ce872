use std::f64::consts::PI;

use modlab::grid::{convolve, convolve_with, fourier, integrate, inverse_fourier, lp_norm};
use modlab::{sample, Exponent, FunctionDescriptor, Grid, Offset, SampledFunction};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// Closed forms written out here rather than taken from the crate.
fn heat(t: f64, x: f64) -> f64 {
    (-x * x / (4.0 * t)).exp() / (4.0 * PI * t).sqrt()
}

fn poisson(t: f64, x: f64) -> f64 {
    t / (PI * (t * t + x * x))
}

#[test]
fn coordinate_law() {
    let g = Grid::new(1, 16.0, 8, Offset::None).unwrap();
    assert_eq!(g.axis(), vec![-16.0, -12.0, -8.0, -4.0, 0.0, 4.0, 8.0, 12.0]);
    let h = Grid::new(1, 16.0, 8, Offset::HalfStep).unwrap();
    assert_eq!(h.axis(), vec![-14.0, -10.0, -6.0, -2.0, 2.0, 6.0, 10.0, 14.0]);
}

#[test]
fn grid_rejects_bad_sizes() {
    let err = Grid::new(1, 16.0, 6, Offset::None).unwrap_err();
    assert!(err.to_string().contains("power of two"), "{err}");
    assert!(Grid::new(1, -1.0, 8, Offset::None).is_err());
    assert!(Grid::new(3, 1.0, 8, Offset::None).is_err());
}

#[test]
fn descriptor_point_values() {
    let g = FunctionDescriptor::Gaussian { t: 1.0 / (4.0 * PI) };
    assert!((g.eval(&[0.0]) - 1.0).abs() < 1e-15);
    let f = FunctionDescriptor::FAlpha { alpha: 0.5 };
    assert!((f.eval(&[4.0]) - 0.5).abs() < 1e-15);
    let h = FunctionDescriptor::Hermite { index: [0, 0] };
    assert!((h.eval(&[0.0]) - PI.powf(-0.25)).abs() < 1e-15);
    assert!((h.eval(&[0.0]) - 0.751_125_5).abs() < 1e-7);
}

#[test]
fn descriptor_round_trips_through_text() {
    for s in ["gauss:0.25", "poisson:1", "indicator:1", "falpha:0.5", "hermite:3", "hermite:1,2", "omega", "exp:-1,2"] {
        let d = FunctionDescriptor::parse(s).unwrap();
        assert_eq!(FunctionDescriptor::parse(&d.to_string()).unwrap(), d);
    }
    assert!(FunctionDescriptor::parse("gauss").is_err());
    assert!(FunctionDescriptor::parse("wavelet:1").is_err());
}

#[test]
fn unit_masses() {
    let g = Grid::new(1, 16.0, 1024, Offset::None).unwrap();
    let h = sample(&FunctionDescriptor::Gaussian { t: 0.25 }, &g).unwrap();
    assert!((integrate(&h).re - 1.0).abs() < 1e-8);

    // The Poisson tail beyond L carries mass 1 - (2/π)·atan(L) ≈ 1.6e-4.
    let wide = Grid::new(1, 4096.0, 1 << 20, Offset::None).unwrap();
    let p = sample(&FunctionDescriptor::Poisson { t: 1.0 }, &wide).unwrap();
    assert!((integrate(&p).re - 1.0).abs() < 1e-3);

    assert_eq!(integrate(&SampledFunction::zeros(g)), Complex64::default());
}

#[test]
fn gaussian_is_self_dual() {
    let g = Grid::new(1, 16.0, 1024, Offset::None).unwrap();
    let f = SampledFunction::from_real_fn(g, |x| (-PI * x[0] * x[0]).exp()).unwrap();
    let fhat = fourier(&f);
    for (k, z) in fhat.values().iter().enumerate() {
        let xi = fhat.grid().coord(k);
        assert!((z - Complex64::new((-PI * xi * xi).exp(), 0.0)).norm() < 1e-8, "ξ = {xi}");
    }
}

#[test]
fn poisson_transform_is_abel_kernel() {
    // The mass outside ±L is about 2t/(πL), below the tolerance for L = 4096.
    let t = 0.5;
    let g = Grid::new(1, 4096.0, 1 << 20, Offset::None).unwrap();
    let p = sample(&FunctionDescriptor::Poisson { t }, &g).unwrap();
    let phat = fourier(&p);
    let xi_grid = *phat.grid();
    for xi in [0.0, 0.25, 1.0, 2.0] {
        let k = xi_grid.nearest_index(xi).unwrap();
        let xi = xi_grid.coord(k);
        let want = (-2.0 * PI * t * xi.abs()).exp();
        assert!((phat.values()[k].re - want).abs() < 1e-4, "ξ = {xi}");
    }
}

#[test]
fn fourier_round_trip_on_random_smooth_data() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for offset in [Offset::None, Offset::HalfStep] {
        let g = Grid::new(1, 8.0, 256, offset).unwrap();
        let coeffs: Vec<(f64, f64, f64)> =
            (0..5).map(|_| (rng.gen_range(-1.0..1.0), rng.gen_range(-2.0..2.0), rng.gen_range(0.5..2.0))).collect();
        let f = SampledFunction::from_fn(g, |x| {
            coeffs
                .iter()
                .map(|&(a, c, w)| {
                    Complex64::new(a * (-w * (x[0] - c).powi(2)).exp(), a * c * x[0].sin() * (-x[0] * x[0]).exp())
                })
                .sum()
        })
        .unwrap();
        let back = inverse_fourier(&fourier(&f), &g).unwrap();
        assert!(back.max_abs_diff(&f).unwrap() < 1e-10);
    }
}

#[test]
fn heat_and_poisson_semigroup_laws() {
    let g = Grid::new(1, 16.0, 2048, Offset::None).unwrap();
    let h = sample(&FunctionDescriptor::Gaussian { t: 0.25 }, &g).unwrap();
    let hh = convolve(&h, &h).unwrap();
    for (i, z) in hh.values().iter().enumerate() {
        let x = g.coord(i);
        if x.abs() <= 8.0 {
            assert!((z.re - heat(0.5, x)).abs() < 1e-8, "x = {x}");
        }
    }

    // Truncating p_1 at ±L loses mass O(1/L), so the window is wide.
    let wide = Grid::new(1, 256.0, 1 << 14, Offset::None).unwrap();
    let p = sample(&FunctionDescriptor::Poisson { t: 1.0 }, &wide).unwrap();
    let pp = convolve_with(&p, |x| Complex64::new(poisson(1.0, x[0]), 0.0)).unwrap();
    for (i, z) in pp.values().iter().enumerate() {
        let x = wide.coord(i);
        if x.abs() <= 4.0 {
            assert!((z.re - poisson(2.0, x)).abs() < 1e-4, "x = {x}");
        }
    }
}

#[test]
fn convolving_with_a_narrow_bump_reproduces_data() {
    let g = Grid::new(1, 8.0, 2048, Offset::None).unwrap();
    let f = SampledFunction::from_real_fn(g, |x| (x[0]).cos() * (-x[0] * x[0] / 4.0).exp()).unwrap();
    let bump = sample(&FunctionDescriptor::Gaussian { t: 1e-4 }, &g).unwrap();
    let smoothed = convolve(&f, &bump).unwrap();
    // h_t ∗ f - f ≈ t f'' with |f''| ≤ 2 here.
    for (i, (a, b)) in smoothed.values().iter().zip(f.values()).enumerate() {
        if g.coord(i).abs() < 6.0 {
            assert!((a - b).norm() < 4e-4);
        }
    }
}

#[test]
fn lp_norms_of_the_heat_kernel() {
    let g = Grid::new(1, 16.0, 1024, Offset::None).unwrap();
    let h = sample(&FunctionDescriptor::Gaussian { t: 0.25 }, &g).unwrap();
    assert!((lp_norm(&h, Exponent::Finite(1.0), None).unwrap() - 1.0).abs() < 1e-8);

    let t = 1.0 / (8.0 * PI);
    let h = sample(&FunctionDescriptor::Gaussian { t }, &g).unwrap();
    let l2 = lp_norm(&h, Exponent::Finite(2.0), None).unwrap();
    // ‖h_t‖₂² = (8πt)^{-1/2} = 1.
    assert!((l2 * l2 - (8.0 * PI * t).powf(-0.5)).abs() < 1e-8);

    let sup = lp_norm(&h, Exponent::Infinity, None).unwrap();
    assert!((sup - heat(t, 0.0)).abs() < 1e-12);
    assert_eq!(lp_norm(&SampledFunction::zeros(g), Exponent::Finite(3.0), None).unwrap(), 0.0);
}

#[test]
fn two_dimensional_heat_mass() {
    let g = Grid::new(2, 8.0, 128, Offset::HalfStep).unwrap();
    let h = sample(&FunctionDescriptor::Gaussian { t: 0.25 }, &g).unwrap();
    assert!((integrate(&h).re - 1.0).abs() < 1e-8);
    let r = [0.3, -0.7];
    let want = heat(0.25, r[0]) * heat(0.25, r[1]);
    assert!((FunctionDescriptor::Gaussian { t: 0.25 }.eval(&r) - want).abs() < 1e-15);
}
