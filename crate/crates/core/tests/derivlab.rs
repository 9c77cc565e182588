use num_bigint::BigUint;
use oscillab_core::derivlab::*;
use oscillab_core::{CarlemanFamily, PhaseSpec};

#[test]
fn triangle_small_rows() {
    let t = build_triangle(40).unwrap();
    assert_eq!(t.row(2), &[1.into(), 1.into()]);
    assert_eq!(t.row(3), &[(-2).into(), (-3).into(), (-1).into()]);
    assert_eq!(t.abs_sum(3), BigUint::from(6u32));
    let check = t.verify();
    assert!(check.recurrence && check.factorial_bound);
}

#[test]
fn bell_values() {
    let b = bell_numbers(20).unwrap();
    assert_eq!(b[3], BigUint::from(5u32));
    assert_eq!(b[5], BigUint::from(52u32));
    assert_eq!(b[20], BigUint::from(51724158235372u64));
    assert!(bell_power_bound_holds(&b));
}

#[test]
fn gevrey_contour_closed_forms() {
    let p = PhaseSpec::gevrey(2.0).compile().unwrap();
    let d1 = contour_derivative(&p, 0.5, 1, 0.2).unwrap().value();
    assert!((d1 - 4.0 * (-2f64).exp()).abs() < 1e-10, "{d1}");
    let d2 = contour_derivative(&p, 0.5, 2, 0.2).unwrap().value();
    assert!(d2.abs() < 1e-9, "{d2}");
}

#[test]
fn two_paths_agree_for_log_power() {
    let p = PhaseSpec::log_power(2.0).compile().unwrap();
    let rows = two_path_agreement(&p, 8, &[0.1, 0.2, 0.3]).unwrap();
    let worst = rows.iter().map(|r| r.rel_err).fold(0.0, f64::max);
    assert!(worst < 1e-6, "{worst} {rows:?}");
}

#[test]
fn two_paths_agree_for_intermediate() {
    let p = PhaseSpec::intermediate(2, 1.0).compile().unwrap();
    let delta = oscillab_core::phases::intermediate_delta(2).unwrap();
    let grid = [0.3 * delta, 0.6 * delta];
    let rows = two_path_agreement(&p, 8, &grid).unwrap();
    let worst = rows.iter().map(|r| r.rel_err).fold(0.0, f64::max);
    assert!(worst < 1e-6, "{worst} {rows:?}");
}

#[test]
fn membership_gevrey() {
    let p = PhaseSpec::gevrey(2.0).compile().unwrap();
    let grid = log_grid(0.01, 1.0, 64);
    let r2 = verify_membership(&p, &CarlemanFamily::gevrey(2.0).unwrap(), 0..=12, &grid).unwrap();
    println!("{:?}", r2.rows.iter().map(|r| r.k_hat_n).collect::<Vec<_>>());
    assert!(r2.stable && r2.k_hat <= 10.0, "{r2:?}");
    let r1 = verify_membership(&p, &CarlemanFamily::gevrey(1.0).unwrap(), 0..=12, &grid).unwrap();
    let growth = r1.k_hat_at(12).unwrap() / r1.k_hat_at(6).unwrap();
    assert!(growth >= 2.0, "{growth}");
}

#[test]
fn gk_examples() {
    let fit = gk_bound_check(2.0, 1..=2, &log_grid(1.0, 6.0, 40)).unwrap();
    assert!((fit.per_order[0].1 - 2.0).abs() < 1e-6, "{fit:?}");
    assert!(fit.per_order[1].1 <= 1.0, "{fit:?}");
    let fit = gk_bound_check(1.5, 1..=10, &log_grid(1.0, 20.0, 40)).unwrap();
    assert!(fit.within_limit, "{fit:?}");
}

#[test]
fn aq_examples() {
    let e4 = 4f64.exp();
    let r = aq_check(2, 1.0, &[e4]).unwrap();
    assert!((r.correction[0] - 1.25).abs() < 1e-12);
    let r = aq_check(2, 2.0, &[e4, 20f64.exp()]).unwrap();
    assert!(r.identity_rel_err < 1e-10 && r.numeric_rel_err < 1e-7, "{r:?}");
    let r = aq_check(2, 1.0, &[20f64.exp()]).unwrap();
    assert!(r.correction[0] <= 1.06);
}

#[test]
fn iter_exp_bound() {
    let rows = iter_exp_bound_check(3, 8, &[1.0, 1.5, 2.0, 2.5, 3.0]).unwrap();
    let worst = rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
    assert!(worst <= 1.0, "{worst}");
}

#[test]
fn lem_g_fit_stable() {
    let fit = lem_g_check(2, 1.0, 1..=8, &log_grid(20.0, 200.0, 16)).unwrap();
    println!("{fit:?}");
    assert!(fit.constant.is_finite());
}

#[test]
fn flat_differences_vanish() {
    for spec in [PhaseSpec::gevrey(2.0), PhaseSpec::log_power(2.0), PhaseSpec::iterated_exp(1, 2.0)] {
        let p = spec.compile().unwrap();
        let d = flat_point_differences(&p, 1..=6, &[1e-3, 1e-5, 1e-7]).unwrap();
        for (n, v) in d {
            assert!(v[2].abs() <= v[0].abs() && v[2].abs() < 1e-6, "{n} {v:?}");
        }
    }
}
