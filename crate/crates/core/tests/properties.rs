use std::f64::consts::{FRAC_PI_2, PI};

use biphoton::config::{preset, RunConfig, Scheme};
use biphoton::correlations::RingCorrelation;
use biphoton::dynamics::ButterflyParams;
use biphoton::geometry::{
    enhancement_factor, enhancement_sum, peak_enhancement, DipoleOrientation, DipoleRole, ModeGrid,
};
use biphoton::polarization::{circular_probabilities, entangled_fraction};
use biphoton::schemes::{effective_params_from_silver, validate_regime, SilverConfig};
use nalgebra::Vector3;
use num_complex::Complex64;
use proptest::prelude::*;

fn complex3() -> impl Strategy<Value = Vector3<Complex64>> {
    prop::array::uniform6(-1.0f64..1.0).prop_filter_map("non-zero dipole", |a| {
        let v = Vector3::new(
            Complex64::new(a[0], a[1]),
            Complex64::new(a[2], a[3]),
            Complex64::new(a[4], a[5]),
        );
        (v.norm() > 1e-3).then_some(v)
    })
}

fn unit_direction() -> impl Strategy<Value = Vector3<f64>> {
    (-1.0f64..1.0, 0.0..2.0 * PI).prop_map(|(c, phi)| {
        let s = (1.0 - c * c).sqrt();
        Vector3::new(s * phi.cos(), s * phi.sin(), c)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sum_rule_for_any_dipole(v in complex3()) {
        let d = DipoleOrientation::new(v, DipoleRole::Signal).unwrap();
        let g = ModeGrid::build(50.0, 1.0, 200).unwrap();
        prop_assert!((enhancement_sum(&g, &d) - 1.0).abs() < 1e-3);
    }

    #[test]
    fn enhancement_is_even_and_bounded(v in complex3(), k in unit_direction(), r in 0.5f64..100.0) {
        let d = DipoleOrientation::new(v, DipoleRole::Idler).unwrap();
        let plus = enhancement_factor(&k, &d, r, 1.0).unwrap();
        let minus = enhancement_factor(&(-k), &d, r, 1.0).unwrap();
        prop_assert!((plus - minus).abs() <= 1e-15 * peak_enhancement(r, 1.0));
        prop_assert!(plus >= 0.0 && plus <= peak_enhancement(r, 1.0) * (1.0 + 1e-12));
    }

    #[test]
    fn polarization_identities(theta in 0.0f64..=PI) {
        let p = circular_probabilities(theta).unwrap();
        prop_assert!((p.signal_left + p.signal_right - 1.0).abs() < 1e-12);
        prop_assert_eq!(p.idler_right, p.signal_left);
        prop_assert_eq!(p.idler_left, p.signal_right);
        prop_assert!((p.opposite - p.signal_left.powi(2) - p.signal_right.powi(2)).abs() < 1e-12);
        prop_assert!(p.opposite >= 0.5 - 1e-15 && p.opposite <= 1.0);
        let mirror = circular_probabilities(PI - theta).unwrap();
        prop_assert!((mirror.opposite - p.opposite).abs() < 1e-12);
    }

    #[test]
    fn polarization_is_flat_near_the_poles(theta in 0.0f64..0.3) {
        let p = circular_probabilities(theta).unwrap().opposite;
        prop_assert!((p - (1.0 - theta.powi(4) / 8.0)).abs() < 1e-3);
    }

    #[test]
    fn fraction_grows_with_cone(a in 0.0f64..FRAC_PI_2, b in 0.0f64..FRAC_PI_2) {
        let d = DipoleOrientation::sigma_plus(DipoleRole::Signal);
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assert!(entangled_fraction(lo, &d).unwrap() <= entangled_fraction(hi, &d).unwrap() + 1e-9);
    }

    #[test]
    fn cs_factor_is_scale_free(s in 0.01f64..100.0, rate in 0.0f64..50.0) {
        let base = RingCorrelation {
            ring: 0,
            theta: 0.0,
            mu: rate * 1e-6,
            ground: 1e6,
            idler_occupation: 0.01,
            omega_couple: 100.0,
            gamma_idler: 1.0,
        };
        let scaled = RingCorrelation { omega_couple: 100.0 * s, gamma_idler: s, ..base };
        let (a, b) = (base.cs_factor().unwrap(), scaled.cs_factor().unwrap());
        prop_assert!((a / b - 1.0).abs() < 1e-10);
    }

    #[test]
    fn peak_scales_inversely_with_occupation(n in 1e-4f64..1.0) {
        let rc = |occ| RingCorrelation {
            ring: 0,
            theta: 0.0,
            mu: 11.94e-6,
            ground: 1e6,
            idler_occupation: occ,
            omega_couple: 100.0,
            gamma_idler: 1.0,
        };
        let (a, b) = (rc(n).peak_g2().unwrap() - 1.0, rc(2.0 * n).peak_g2().unwrap() - 1.0);
        prop_assert!((a / b - 2.0).abs() < 1e-10);
    }

    #[test]
    fn reduction_is_homogeneous(s in 0.1f64..10.0) {
        let base = SilverConfig::standard();
        let mut scaled = base.clone();
        scaled.rabi.iter_mut().for_each(|x| *x *= s);
        scaled.detunings.iter_mut().for_each(|x| *x *= s);
        let (a, b) = (effective_params_from_silver(&base).unwrap(), effective_params_from_silver(&scaled).unwrap());
        prop_assert!((b.omega_drive / a.omega_drive / s - 1.0).abs() < 1e-12);
        prop_assert!((b.omega_couple / a.omega_couple / s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn regime_flags_are_monotone(a in 0.0f64..5.0, b in 0.0f64..5.0, c in 0.0f64..50.0, d in 0.0f64..50.0) {
        let g = ModeGrid::build(50.0, 1.0, 50).unwrap();
        let report = |od: f64, oc: f64| validate_regime(&ButterflyParams::toy(od, oc, 1e6, 50.0), &g).unwrap();
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assert!(report(lo, 100.0).weak_drive || !report(hi, 100.0).weak_drive);
        let (lo, hi) = if c < d { (c, d) } else { (d, c) };
        prop_assert!(report(0.1, hi).strong_coupler || !report(0.1, lo).strong_coupler);
    }

    #[test]
    fn config_round_trips(od in 1e-3f64..10.0, oc in 1.0f64..1e3, r in 0.5f64..200.0, rings in 2usize..500) {
        let mut cfg = preset("fig2").unwrap();
        cfg.rings = rings;
        cfg.scheme = Scheme::Butterfly(ButterflyParams::toy(od, oc, 1e6, r));
        let back = RunConfig::parse(&cfg.serialize().unwrap()).unwrap();
        prop_assert_eq!(cfg, back);
    }
}

#[test]
fn grid_refinement_tightens_the_sum_rule() {
    let d = DipoleOrientation::linear(Vector3::z(), DipoleRole::Signal).unwrap();
    let errs: Vec<f64> = [10, 20, 40, 80, 160]
        .iter()
        .map(|&n| (enhancement_sum(&ModeGrid::build(50.0, 1.0, n).unwrap(), &d) - 1.0).abs())
        .collect();
    assert!(errs.windows(2).all(|w| w[1] < w[0]), "{errs:?}");
}
