use oscillab_core::carleman::CarlemanFamily;
use oscillab_core::derivlab::{log_grid, verify_membership, MembershipReport};
use oscillab_core::flatness::{
    bang_bound, bang_chain_oracle, bang_level, compare_methods, family_log_a, taylor_legendre_certificate, BangLevel, FlatMethod,
    VerifiedK,
};
use oscillab_core::{Error, PhaseSpec};

fn gevrey2() -> CarlemanFamily {
    CarlemanFamily::gevrey(2.0).unwrap()
}

#[test]
fn bang_level_examples() {
    let m = gevrey2();
    assert_eq!(bang_level(&m, 1.0, 0.025).unwrap(), BangLevel::Finite(10));
    assert_eq!(bang_level(&m, 1.0, 0.45).unwrap(), BangLevel::Finite(0));
    let analytic = CarlemanFamily::gevrey(1.0).unwrap();
    assert_eq!(bang_level(&analytic, 1.0, 0.1).unwrap(), BangLevel::Infinite);
    assert!(matches!(bang_level(&m, 1.0, 1.5), Err(Error::Domain(_))));
}

#[test]
fn bang_bound_example() {
    let c = bang_bound(&gevrey2(), 1.0, 2.0, 0.025).unwrap();
    assert_eq!(c.method, FlatMethod::Bang);
    assert!((c.bound.value() - 2.0 * 2f64.powi(-10)).abs() < 1e-15);
    let edge = bang_bound(&gevrey2(), 1.0, 2.0, 0.9).unwrap();
    assert!((edge.bound.value() - 2.0).abs() < 1e-15);
}

#[test]
fn refined_bang_bound_is_doubly_exponential() {
    let m = CarlemanFamily::refined_gevrey(1, 2.0).unwrap();
    // log2(1/bound) = level - 1 >= exp(c/x) for a fitted c > 0.
    let xs = log_grid(0.005, 0.05, 12);
    let fitted: Vec<f64> = xs
        .iter()
        .map(|&x| {
            let c = bang_bound(&m, 1.0, 2.0, x).unwrap();
            let bits = -c.bound.ln() / std::f64::consts::LN_2 + 1.0;
            x * bits.ln()
        })
        .collect();
    let lo = fitted.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = fitted.iter().copied().fold(0.0, f64::max);
    assert!(lo > 0.0 && hi / lo < 4.0, "{fitted:?}");
}

#[test]
fn chain_oracle_matches_packaged_bound() {
    let log_a = family_log_a(&gevrey2(), 1.0, 2.0, 5000);
    let r = bang_chain_oracle(&log_a, 0.025, 10).unwrap();
    assert!(r.holds(), "{r:?}");
    assert!(r.chain_bound > 0.0);
    let trivial = bang_chain_oracle(&log_a, 0.025, 0).unwrap();
    assert!((trivial.chain_bound - 2.0).abs() < 1e-14);
    let mut bad = log_a.clone();
    bad[5] += 30.0;
    assert!(matches!(bang_chain_oracle(&bad, 0.025, 3), Err(Error::Domain(_))));
}

#[test]
fn chain_oracle_reports_unclosed_sums() {
    let log_a = family_log_a(&gevrey2(), 1.0, 2.0, 30);
    assert!(matches!(bang_chain_oracle(&log_a, 0.4, 20), Err(Error::ChainFailed(_))));
}

#[test]
fn taylor_legendre_examples() {
    let c = taylor_legendre_certificate(&gevrey2(), 1.0, 0.1).unwrap();
    assert!((c.bound.value() - (-7.921438356864943f64).exp()).abs() < 1e-15);
    assert_eq!(c.argmax, Some(9));
    assert!(taylor_legendre_certificate(&gevrey2(), 1.0, 1.0).is_err());

    // ln(-ln bound) / ln ln(1/t) -> 2 for the exp-power family with alpha = 2.
    let m = CarlemanFamily::exp_power(1.0, 2.0).unwrap();
    let point = |t: f64| {
        let b = taylor_legendre_certificate(&m, 1.0, t).unwrap().bound;
        ((-t.ln()).ln(), b.ln_neg_ln())
    };
    let (x1, y1) = point(1e-20);
    let (x2, y2) = point(1e-250);
    let slope = (y2 - y1) / (x2 - x1);
    assert!((slope - 2.0).abs() < 0.1, "{slope}");
}

#[test]
fn gevrey_comparison_and_shape() {
    let phase = PhaseSpec::gevrey(2.0).compile().unwrap();
    let m = gevrey2();
    let rep = verify_membership(&phase, &m, 0..=12, &log_grid(0.01, 1.0, 48)).unwrap();
    let k = VerifiedK::from_membership(&rep).unwrap();
    let grid: Vec<f64> = (0..26).map(|i| 0.05 + 0.01 * i as f64).collect();
    let rows = compare_methods(&m, k, &phase, &grid, 0.0).unwrap();
    assert_eq!(rows.len(), grid.len());
    for r in &rows {
        assert!(r.actual.cmp_value(&r.bang).is_le() && r.actual.cmp_value(&r.taylor_legendre).is_le());
    }
    // The level, i.e. log2 of A0/bound, times t stays within [B/4, 4B] on [0.02, 0.2].
    let shape: Vec<f64> = log_grid(0.02, 0.2, 16)
        .into_iter()
        .map(|t| match bang_level(&m, k.value(), t).unwrap() {
            BangLevel::Finite(l) => l as f64 * t,
            other => panic!("{other:?}"),
        })
        .collect();
    let b = (shape.iter().copied().fold(0.0, f64::max) * shape.iter().copied().fold(f64::INFINITY, f64::min)).sqrt();
    assert!(shape.iter().all(|&v| v >= b / 4.0 && v <= 4.0 * b), "{shape:?}");
}

#[test]
fn wrong_class_constant_is_reported() {
    let phase = PhaseSpec::gevrey(2.0).compile().unwrap();
    let m = gevrey2();
    let rep = verify_membership(&phase, &m, 0..=12, &log_grid(0.01, 1.0, 48)).unwrap();
    let forged = MembershipReport { k_hat: 0.05, ..rep.clone() };
    let k = VerifiedK::from_membership(&forged).unwrap();
    assert!(matches!(compare_methods(&m, k, &phase, &[0.3, 0.5], 0.0), Err(Error::ClassMismatch(_))));
    let unstable = MembershipReport { stable: false, ..rep };
    assert!(matches!(VerifiedK::from_membership(&unstable), Err(Error::ClassMismatch(_))));
}
