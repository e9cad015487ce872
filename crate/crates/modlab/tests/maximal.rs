use modlab::maximal::{
    check_domination, check_stft_maximal_inequality, dilate_convolve, dilation_sup, maximal_function,
    maximal_function_direct, maximal_modnorm_check, Profile, RadiiSet,
};
use modlab::stft::gaussian_window;
use modlab::{sample, Exponent, FunctionDescriptor, Grid, Offset, SampledFunction};

fn chi() -> (Grid, SampledFunction) {
    let g = Grid::new(1, 8.0, 1024, Offset::None).unwrap();
    (g, sample(&FunctionDescriptor::Indicator { radius: 1.0 }, &g).unwrap())
}

/// Windowed ball averages by brute force over every radius.
fn brute_force(values: &[f64], max_k: usize) -> Vec<f64> {
    let n = values.len();
    (0..n)
        .map(|i| {
            (1..=max_k)
                .map(|k| {
                    let lo = i.saturating_sub(k);
                    let hi = (i + k).min(n - 1);
                    values[lo..=hi].iter().sum::<f64>() / (hi - lo + 1) as f64
                })
                .fold(0.0, f64::max)
        })
        .collect()
}

#[test]
fn indicator_values() {
    let (g, f) = chi();
    let mf = maximal_function(&f, &RadiiSet::default_for(&g)).unwrap();
    assert_eq!(mf.value_near(&[0.0]).unwrap().re, 1.0);
    // Best ball around x = 3 is [-1, 7]: mass 2 over length 8.
    let at3 = mf.value_near(&[3.0]).unwrap().re;
    assert!((at3 - 0.25).abs() <= g.step(), "{at3}");
    let oracle = brute_force(&f.real_parts(), g.n() / 2);
    let gap = mf.real_parts().iter().zip(&oracle).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(gap < 1e-12);
}

#[test]
fn prefix_sums_match_direct_route_in_two_dimensions() {
    let g = Grid::new(2, 2.0, 32, Offset::HalfStep).unwrap();
    let f = SampledFunction::from_real_fn(g, |x| (x[0] - 0.3 * x[1]).cos().abs() * (-x[0] * x[0]).exp()).unwrap();
    let radii = RadiiSet::up_to(&g, 1.0).unwrap();
    let fast = maximal_function(&f, &radii).unwrap();
    let slow = maximal_function_direct(&f, &radii).unwrap();
    assert!(fast.max_abs_diff(&slow).unwrap() < 1e-12);
}

#[test]
fn constants_are_fixed() {
    for dim in [1, 2] {
        let g = Grid::new(dim, 4.0, 32, Offset::None).unwrap();
        let f = SampledFunction::from_real_fn(g, |_| 2.5).unwrap();
        let mf = maximal_function(&f, &RadiiSet::default_for(&g)).unwrap();
        assert!(mf.values().iter().all(|z| (z.re - 2.5).abs() < 1e-12));
    }
}

#[test]
fn negative_data_is_rejected() {
    let g = Grid::new(1, 4.0, 32, Offset::None).unwrap();
    let f = SampledFunction::from_real_fn(g, |x| x[0]).unwrap();
    let err = maximal_function(&f, &RadiiSet::default_for(&g)).unwrap_err();
    assert!(err.to_string().contains("nonnegativity required"), "{err}");
}

#[test]
fn radii_validation() {
    let g = Grid::new(1, 4.0, 32, Offset::None).unwrap();
    assert!(RadiiSet::new(&g, &[0.25, 0.5]).is_ok());
    assert!(RadiiSet::new(&g, &[0.3]).is_err());
    assert!(RadiiSet::new(&g, &[0.5, 0.25]).is_err());
    assert!(RadiiSet::new(&g, &[16.0]).is_err());
    assert!(RadiiSet::new(&g, &[]).is_err());
}

#[test]
fn indicator_dilations_reproduce_ball_averages() {
    let (g, f) = chi();
    // Away from the window edge the periodic convolution and the windowed
    // ball average see the same samples.
    let radii = RadiiSet::up_to(&g, 4.0).unwrap();
    let sup = dilation_sup(&f, &Profile::Indicator, &radii.radii()).unwrap();
    let mf = maximal_function(&f, &radii).unwrap();
    for i in 0..g.n() {
        if g.coord(i).abs() <= 3.0 {
            assert!((sup.values()[i].re - mf.values()[i].re).abs() < 1e-9, "x = {}", g.coord(i));
        }
    }
}

#[test]
fn gaussian_smoothing_peaks_at_the_smallest_dilation() {
    let g = Grid::new(1, 8.0, 1024, Offset::None).unwrap();
    let f = sample(&FunctionDescriptor::Gaussian { t: 0.1 }, &g).unwrap();
    let t_list = [0.05, 0.1, 0.5, 1.0, 2.0];
    let sup = dilation_sup(&f, &Profile::Gauss, &t_list).unwrap();
    let first = dilate_convolve(&f, &Profile::Gauss, t_list[0]).unwrap();
    let i0 = g.nearest_index(0.0).unwrap();
    assert_eq!(sup.values()[i0].re, first.values()[i0].re);

    let zero = dilation_sup(&SampledFunction::zeros(g), &Profile::Gauss, &t_list).unwrap();
    assert_eq!(zero.sup_norm(), 0.0);
    assert!(dilation_sup(&f, &Profile::Gauss, &[]).is_err());
}

#[test]
fn domination_by_the_maximal_function() {
    let (g, f) = chi();
    let radii = RadiiSet::default_for(&g);
    let t_list: Vec<f64> = (2..=128).map(|k| k as f64 * 2.0 * g.step()).collect();
    let gauss = check_domination(&f, &Profile::Gauss, &t_list, &radii).unwrap();
    assert!((gauss.majorant_integral - 1.0).abs() < 1e-6);
    assert!(gauss.max_ratio <= 1.05, "{}", gauss.max_ratio);

    let data = sample(&FunctionDescriptor::Gaussian { t: 0.25 }, &g).unwrap();
    let poisson = check_domination(&data, &Profile::Poisson, &t_list, &radii).unwrap();
    assert!((poisson.majorant_integral - 1.0).abs() < 1e-6);
    assert!(poisson.max_ratio <= 1.05, "{}", poisson.max_ratio);

    let ind = check_domination(&f, &Profile::Indicator, &t_list, &radii).unwrap();
    assert!((ind.majorant_integral - 1.0).abs() < 1e-6);
    assert!(ind.max_ratio <= 1.0 + 1e-9, "{}", ind.max_ratio);
}

#[test]
fn modulated_window_inequality_holds_away_from_zero_frequency() {
    let (g, f) = chi();
    let phi = gaussian_window(&g);
    let radii = RadiiSet::default_for(&g);
    let r = check_stft_maximal_inequality(&f, &phi, &[2.0], &radii).unwrap();
    assert!(r.holds(), "{} vs {}", r.max_violation, r.scale);

    let zero = check_stft_maximal_inequality(&SampledFunction::zeros(g), &phi, &[0.0], &radii).unwrap();
    assert_eq!((zero.max_violation, zero.scale), (0.0, 0.0));
}

#[test]
fn modulated_window_inequality_fails_at_zero_frequency() {
    // At ξ = 0 and x = 0: Mf ≥ f with strict inequality off the support, so
    // (Mf ∗ φ)(0) > (f ∗ φ)(0) = ‖f ∗ φ‖_∞ ≥ M(f ∗ φ)(0).
    let (g, f) = chi();
    let phi = gaussian_window(&g);
    let radii = RadiiSet::default_for(&g);
    let mf = brute_force(&f.real_parts(), g.n() / 2);
    let dx = g.step();
    let phi_at = |y: f64| (-std::f64::consts::PI * y * y).exp();
    let lhs: f64 = (0..g.n()).map(|j| mf[j] * phi_at(g.coord(j)) * dx).sum();
    let f_phi_0: f64 = (0..g.n()).map(|j| f.values()[j].re * phi_at(g.coord(j)) * dx).sum();
    assert!(lhs - f_phi_0 > 1e-3, "{lhs} vs {f_phi_0}");

    let r = check_stft_maximal_inequality(&f, &phi, &[0.0], &radii).unwrap();
    assert!(!r.holds());
    assert!((r.scale - f_phi_0).abs() < 1e-9);
    assert!(r.max_violation >= lhs - f_phi_0 - 1e-9, "{} vs {}", r.max_violation, lhs - f_phi_0);
}

#[test]
fn maximal_function_in_modulation_spaces() {
    let g = Grid::new(1, 8.0, 1024, Offset::None).unwrap();
    let w = gaussian_window(&g);
    let radii = RadiiSet::default_for(&g);
    let f = sample(&FunctionDescriptor::Gaussian { t: 0.25 }, &g).unwrap();
    let (mf, nf) = maximal_modnorm_check(&f, Exponent::Finite(2.0), &w, &radii).unwrap();
    assert!(mf.is_finite() && nf.is_finite() && mf > 0.0 && nf > 0.0);

    let zero = maximal_modnorm_check(&SampledFunction::zeros(g), Exponent::Finite(2.0), &w, &radii).unwrap();
    assert_eq!(zero, (0.0, 0.0));
    assert!(maximal_modnorm_check(&f, Exponent::Finite(1.0), &w, &radii).is_err());
}

#[test]
fn maximal_function_of_singular_power_is_stable() {
    let run = |n: usize| {
        let g = Grid::new(1, 8.0, n, Offset::HalfStep).unwrap();
        let f = sample(&FunctionDescriptor::FAlpha { alpha: 0.5 }, &g).unwrap();
        maximal_modnorm_check(&f, Exponent::Finite(4.0), &gaussian_window(&g), &RadiiSet::default_for(&g)).unwrap()
    };
    let (coarse, _) = run(2048);
    let (fine, nf) = run(4096);
    assert!(fine.is_finite() && nf.is_finite());
    let drift = (fine - coarse).abs() / fine;
    assert!(drift <= 0.05, "N→2N drift {drift}");
}
