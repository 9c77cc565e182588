use oscillab_core::quadrature::{certified_nonneg_realpart, compute_m_direct, compute_m_substituted};
use oscillab_core::special::{ci, si, EULER_GAMMA};
use oscillab_core::{Complex64, PhaseSpec, QuadratureConfig};

fn power_oracle(lambda: f64) -> Complex64 {
    Complex64::new(0.5 * (ci(lambda) - EULER_GAMMA - lambda.ln()), 0.5 * si(lambda))
}

#[test]
fn power_phase_matches_sine_cosine_integrals() {
    let phase = PhaseSpec::power(1).compile().unwrap();
    let cfg = QuadratureConfig::default();
    for lambda in [1e3, 1e4, 1e5] {
        let r = compute_m_direct(&phase, lambda, &cfg).unwrap();
        let want = power_oracle(lambda);
        assert!((r.value - want).norm() < 1e-7, "lambda {lambda}: {} vs {want}", r.value);
    }
    let r = compute_m_direct(&phase, 1e4, &cfg).unwrap();
    assert!((r.value - Complex64::new(-4.89379329439722, 0.78544577269298096)).norm() < 1e-7);
}

#[test]
fn zero_frequency_gives_zero() {
    let phase = PhaseSpec::gevrey(2.0).compile().unwrap();
    let r = compute_m_direct(&phase, 0.0, &QuadratureConfig::default()).unwrap();
    assert_eq!(r.value, Complex64::new(0.0, 0.0));
}

#[test]
fn substituted_references() {
    let cfg = QuadratureConfig::default();
    let cases: [(PhaseSpec, [(f64, Complex64); 3]); 2] = [
        (
            PhaseSpec::gevrey(2.0),
            [
                (100.0, Complex64::new(-1.68928132162115, 0.291862895847261)),
                (1000.0, Complex64::new(-2.02331621524986, 0.214600461069397)),
                (1e4, Complex64::new(-2.28636670702404, 0.161809856830292)),
            ],
        ),
        (
            PhaseSpec::log_power(2.0),
            [
                (100.0, Complex64::new(-1.29902154637014, 0.339389146109182)),
                (1000.0, Complex64::new(-1.74242458706505, 0.289544049351865)),
                (1e4, Complex64::new(-2.13241771254373, 0.251825652392328)),
            ],
        ),
    ];
    for (spec, refs) in cases {
        let phase = spec.compile().unwrap();
        let (w, pre) = phase.matched_weight().unwrap();
        for (lambda, want) in refs {
            let sub = compute_m_substituted(&w, pre, lambda, &cfg).unwrap();
            let dir = compute_m_direct(&phase, lambda, &cfg).unwrap();
            assert!((sub.value - want).norm() < 1e-8, "{spec} sub {lambda}: {} vs {want}", sub.value);
            assert!((dir.value - want).norm() < 1e-6, "{spec} direct {lambda}: {} vs {want}", dir.value);
        }
    }
}

#[test]
fn certified_bound_below_full_value() {
    let phase = PhaseSpec::gevrey(2.0).compile().unwrap();
    let cfg = QuadratureConfig::default();
    for lambda in [100.0, 1000.0] {
        let full = compute_m_direct(&phase, lambda, &cfg).unwrap();
        let lower = certified_nonneg_realpart(&phase, lambda).unwrap();
        assert!(lower <= -full.value.re + 1e-9, "{lower} vs {}", -full.value.re);
        assert!(lower > 0.0);
    }
}
