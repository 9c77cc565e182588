use std::f64::consts::{E, PI};

use num_bigint::BigInt;
use num_rational::BigRational;
use oscillab_core::phases::{eval_phase, eval_phi, eval_weight, weight_consistency};
use oscillab_core::{Error, PhaseSpec, SubstitutionWeight, WeightKind};

fn flat_specs() -> Vec<PhaseSpec> {
    vec![
        PhaseSpec::gevrey(2.0),
        PhaseSpec::gevrey(1.5),
        PhaseSpec::iterated_exp(1, 2.0),
        PhaseSpec::iterated_exp(2, 2.0),
        PhaseSpec::log_power(2.0),
        PhaseSpec::intermediate(2, 1.0),
    ]
}

#[test]
fn catalog_point_values() {
    let g = PhaseSpec::gevrey(2.0).compile().unwrap();
    assert!((eval_phase(&g, 1.0).unwrap() - (-1f64).exp()).abs() < 1e-15);
    assert!((eval_phi(&g, 0.5).unwrap() - (-2f64).exp()).abs() < 1e-15);
    let plateau = PhaseSpec::plateau(2, 1).compile().unwrap();
    let v = eval_phase(&plateau, 0.7 / 8.0).unwrap();
    assert!((v - PI / 315.0).abs() < 1e-16, "{v}");
    let p = PhaseSpec::polynomial(vec![0.0, 1.0, 0.0, 1.0]).compile().unwrap();
    assert!((eval_phi(&p, 0.3).unwrap() - 0.654).abs() < 1e-14);
}

#[test]
fn flat_variants_vanish_on_the_left_and_at_zero() {
    for spec in flat_specs() {
        let phase = spec.compile().unwrap();
        let r = phase.domain_radius();
        assert_eq!(eval_phase(&phase, 0.0).unwrap(), 0.0, "{spec}");
        assert_eq!(eval_phase(&phase, -0.5 * r).unwrap(), 0.0, "{spec}");
        assert_eq!(eval_phi(&phase, 0.0).unwrap(), 0.0);
    }
}

#[test]
fn flat_variants_increase_near_zero() {
    for spec in flat_specs() {
        let phase = spec.compile().unwrap();
        let r = phase.domain_radius();
        let vals: Vec<f64> = (1..=64).map(|i| eval_phase(&phase, r * i as f64 / 64.0).unwrap()).collect();
        assert!(vals.windows(2).all(|w| w[0] < w[1] || w[1] == 0.0 && w[0] == 0.0), "{spec}: {vals:?}");
        assert!(*vals.last().unwrap() > 0.0, "{spec}: {vals:?}");
    }
}

#[test]
fn out_of_domain_is_rejected() {
    let lp = PhaseSpec::log_power(2.0).compile().unwrap();
    assert!(matches!(eval_phase(&lp, 0.5), Err(Error::Domain(_))));
    let g = PhaseSpec::gevrey(2.0).compile().unwrap();
    assert!(matches!(eval_phase(&g, 1.5), Err(Error::Domain(_))));
}

#[test]
fn weight_values() {
    let g = SubstitutionWeight::new(WeightKind::GevreyWeight { s: 2.0 }, 0.3).unwrap();
    assert!((eval_weight(&g, (-2f64).exp()).unwrap() - 3.694528049465325).abs() < 1e-12);
    let r = SubstitutionWeight::new(WeightKind::RefinedGevreyWeight { k: 1, s: 2.0 }, 0.06).unwrap();
    let u = (-E).exp();
    assert!((eval_weight(&r, u).unwrap() - 1.0 / (u * E)).abs() < 1e-10);
    let l = SubstitutionWeight::new(WeightKind::LogPowerWeight { alpha: 2.0 }, 0.3).unwrap();
    assert!((eval_weight(&l, (-4f64).exp()).unwrap() - 27.29907501657212).abs() < 1e-10);
    assert!(matches!(eval_weight(&g, 0.0), Err(Error::Domain(_))));
    assert!(matches!(eval_weight(&g, 1.0), Err(Error::Domain(_))));
}

#[test]
fn weight_identity_on_matched_pairs() {
    let cases = [
        (PhaseSpec::gevrey(2.0), vec![0.1, 0.15, 0.2, 0.25, 0.3]),
        (PhaseSpec::log_power(2.0), vec![0.05, 0.1, 0.15, 0.2]),
        (PhaseSpec::iterated_exp(1, 2.0), vec![0.3, 0.4, 0.5]),
        (PhaseSpec::intermediate(2, 1.0), vec![1e-4, 3e-4, 5e-4]),
    ];
    for (spec, grid) in cases {
        let phase = spec.compile().unwrap();
        let (w, _) = phase.matched_weight().unwrap();
        let rep = weight_consistency(&phase, &w, &grid).unwrap_or_else(|e| panic!("{spec}: {e}"));
        assert!(rep.max_rel_error <= 1e-6, "{spec}: {}", rep.max_rel_error);
    }
}

#[test]
fn mismatched_weight_is_rejected() {
    let phase = PhaseSpec::gevrey(2.0).compile().unwrap();
    let w = SubstitutionWeight::new(WeightKind::LogPowerWeight { alpha: 2.0 }, 0.3).unwrap();
    assert!(matches!(weight_consistency(&phase, &w, &[0.2]), Err(Error::Mismatch(_))));
}

#[test]
fn plateau_is_exact_on_inner_intervals() {
    let phase = PhaseSpec::plateau(2, 1).compile().unwrap();
    for j in 1..=10u32 {
        let den = BigInt::from(5) * BigInt::from(2).pow(j);
        for num in [3, 7, 4] {
            // 3/(5 2^j), 3.5/(5 2^j), 4/(5 2^j)
            let t = if num == 7 { BigRational::new(BigInt::from(7), den.clone() * 2) } else { BigRational::new(BigInt::from(num), den.clone()) };
            let c = phase.plateau_coefficient_exact(&t).unwrap().expect("on a plateau");
            let q: [u64; 10] = [5, 35, 315, 3465, 45045, 675675, 11486475, 218243025, 4583103525, 105411381075];
            assert_eq!(c, BigRational::new(1.into(), BigInt::from(q[j as usize - 1])));
        }
    }
}

#[test]
fn plateau_shells_are_disjoint() {
    let phase = PhaseSpec::plateau(2, 1).compile().unwrap();
    // Gaps between consecutive supports: psi vanishes at every dyadic point.
    for j in 1..=20 {
        assert_eq!(eval_phase(&phase, 0.5f64.powi(j)).unwrap(), 0.0);
    }
}

#[test]
fn spec_json_round_trip() {
    for spec in flat_specs().into_iter().chain([PhaseSpec::plateau(2, 1), PhaseSpec::power(3), PhaseSpec::polynomial(vec![1.0, 2.0])]) {
        let s = serde_json::to_string(&spec).unwrap();
        assert!(s.contains("\"variant\""));
        let back: PhaseSpec = serde_json::from_str(&s).unwrap();
        assert_eq!(back, spec);
    }
}
