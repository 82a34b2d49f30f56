use std::f64::consts::PI;

use owg_core::contour::Contour;
use owg_core::quadrature::sine_integral;
use owg_core::symbols::{branch_sqrt, dtn_symbol, pml_dtn_symbol, PmlProfile};
use owg_core::synthesis::psi_profile;
use owg_core::C64;
use proptest::prelude::*;

fn point() -> impl Strategy<Value = C64> {
    (-50.0..50.0f64, -50.0..50.0f64).prop_map(|(re, im)| C64::new(re, im))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn sqrt_squares_back(z in point()) {
        let w = branch_sqrt(z).unwrap();
        prop_assert!((w * w - z).norm() <= 1e-13 * z.norm().max(1.0));
    }

    #[test]
    fn sqrt_lands_in_branch_half_plane(z in point()) {
        // arg z ∈ [-π/2, 3π/2)  ⇒  arg √z ∈ [-π/4, 3π/4)
        let w = branch_sqrt(z).unwrap();
        if w.norm() > 0.0 {
            let arg = w.arg();
            prop_assert!(arg >= -PI / 4.0 - 1e-15 && arg < 3.0 * PI / 4.0 + 1e-15, "{} -> {}", z, w);
        }
    }

    #[test]
    fn sqrt_is_continuous_off_the_cut(z in point(), dir in 0.0..(2.0 * PI)) {
        prop_assume!(z.re.abs() > 1e-3 || z.im > 1e-3);
        let step = 1e-9 * z.norm().max(1.0);
        let dz = C64::from_polar(step, dir);
        let d = (branch_sqrt(z + dz).unwrap() - branch_sqrt(z).unwrap()).norm();
        // |√z′ - √z| ≈ |dz| / (2|√z|)
        let bound = 10.0 * step / branch_sqrt(z).unwrap().norm().max(1e-6);
        prop_assert!(d <= bound, "{z}: jump {d}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn dtn_symbol_has_nonnegative_real_part_of_sqrt(ell in -7i64..=7, re in -0.5..0.5f64, im in -0.1..0.1f64) {
        let s = dtn_symbol(ell, C64::new(re, im), 0.8).unwrap() / C64::new(0.0, 1.0);
        prop_assert!(s.re >= -1e-15 || s.im >= -1e-15);
    }

    #[test]
    fn pml_symbol_approaches_exact_symbol(ell in -7i64..=7, t in 0.02..0.98f64) {
        let gamma = Contour::waveguide(0.4, -0.2, 0.1, 0.1, 3).unwrap().point(t);
        let exact = dtn_symbol(ell, gamma, 0.8).unwrap();
        let d = |rho: f64| {
            let sigma = PmlProfile::new(rho, 1.5, 3, 2.5).unwrap().sigma();
            (pml_dtn_symbol(ell, gamma, 0.8, sigma).unwrap() - exact).norm()
        };
        prop_assert!(d(40.0) <= d(10.0) + 1e-12);
    }

    #[test]
    fn psi_pair_sums_to_one(x in -1e6..1e6f64, delta in 0.01..2.0f64) {
        let (p, m) = psi_profile(x, delta);
        prop_assert!((p + m - 1.0).abs() < 1e-14);
        // Gibbs-type overshoot of Si: max Si = Si(π) ≈ 1.852
        prop_assert!((-0.09..=1.09).contains(&p));
    }

    #[test]
    fn sine_integral_is_odd(x in 0.0..500.0f64) {
        prop_assert_eq!(sine_integral(-x), -sine_integral(x));
    }
}
