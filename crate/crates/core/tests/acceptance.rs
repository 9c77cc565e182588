//! Acceptance gate. Each criterion prints one `PASS`/`FAIL` line; the process
//! exits nonzero if any criterion fails.

use std::f64::consts::{LN_10, PI};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use oscillab_core::carleman::CarlemanFamily;
use oscillab_core::derivlab::{bell_numbers, bell_power_bound_holds, build_triangle, log_grid, two_path_agreement, verify_membership};
use oscillab_core::envelopes::{polynomial_sweep, Envelope};
use oscillab_core::flatness::{
    bang_chain_oracle, bang_level, compare_methods, family_log_a, ordering_threshold, BangLevel, VerifiedK, Winner,
};
use oscillab_core::plateau::{build_ladder, plateau_lower_bound, verify_growth_window, verify_plateau_parity, WindowMeasurement};
use oscillab_core::quadrature::{
    certified_nonneg_realpart_exact, compute_m_direct, compute_m_substituted, vdc_fit_constant, vdc_max_ratio, vdc_shell_values,
};
use oscillab_core::special::{ci, si, EULER_GAMMA};
use oscillab_core::{Frequency, PhaseSpec, Quasianalytic, QuadratureConfig, TailIndex};

// Tolerances fixed by the acceptance criteria.
const PLATEAU_TOL: f64 = 1e-4;
const CERTIFIED_TOL: f64 = 1e-12;
const LOG_LAW_TOL: f64 = 0.01;
const DUAL_TOL: f64 = 1e-5;
const GEVREY_BAND: f64 = 4.0;
const BASEL_TOL: f64 = 1e-9;
const LEGENDRE_TOL: f64 = 1e-12;
const TWO_PATH_TOL: f64 = 1e-6;
const MEMBERSHIP_K_MAX: f64 = 10.0;
const NON_ANALYTIC_GROWTH: f64 = 2.0;
const VDC_C_MAX: f64 = 10.0;
const SWEEP_RATIO_MAX: f64 = 20.0;
const MIN_ORDERED_POINTS: usize = 10;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn c1_plateau_parity() -> Outcome {
    let ladder = build_ladder(2, 1, 20).map_err(|e| e.to_string())?;
    let bad: Vec<usize> = (1..=20).filter(|&n| !verify_plateau_parity(&ladder, n)).collect();
    check(bad.is_empty(), format!("Q_n/Q_j odd for 1 <= j <= n <= 20; failing n: {bad:?}"))
}

fn c2_plateau_sandwich() -> Outcome {
    let ladder = build_ladder(2, 1, 12).map_err(|e| e.to_string())?;
    let phase = PhaseSpec::plateau(2, 1).compile().map_err(|e| e.to_string())?;
    let cfg = QuadratureConfig::default();
    let mut notes = Vec::new();
    let mut ok = true;
    for n in 1..=4 {
        let r = verify_growth_window(&ladder, &phase, n, &cfg, PLATEAU_TOL).map_err(|e| e.to_string())?;
        let WindowMeasurement::Full { neg_re, abs, .. } = r.measurement else {
            return Err(format!("n = {n} fell back to certified mode"));
        };
        ok &= r.passed();
        notes.push(format!("n={n}: {:.4} <= {neg_re:.4}, {abs:.4} <= {:.4}", r.lower, r.upper));
    }
    let mut worst: f64 = 0.0;
    for n in 5..=12 {
        let v = certified_nonneg_realpart_exact(&phase, ladder.lambda(n)).map_err(|e| e.to_string())?;
        worst = worst.max((v - plateau_lower_bound(n)).abs());
    }
    ok &= worst <= CERTIFIED_TOL;
    notes.push(format!("certified n=5..12 max deviation {worst:.2e}"));
    check(ok, notes.join("; "))
}

fn c3_power_log_law() -> Outcome {
    let phase = PhaseSpec::power(1).compile().map_err(|e| e.to_string())?;
    let cfg = QuadratureConfig::default();
    let mut worst_re: f64 = 0.0;
    let mut worst_im: f64 = 0.0;
    let mut oracle_gap: f64 = 0.0;
    for e in 3..=9 {
        let lambda = 10f64.powi(e);
        let m = compute_m_direct(&phase, lambda, &cfg).map_err(|e| e.to_string())?.value;
        let oracle = 0.5 * (ci(lambda) - EULER_GAMMA - lambda.ln());
        oracle_gap = oracle_gap.max((m.re - oracle).abs()).max((m.im - 0.5 * si(lambda)).abs());
        worst_re = worst_re.max((m.re + 0.5 * (lambda.ln() + EULER_GAMMA)).abs());
        if e >= 6 {
            worst_im = worst_im.max((m.im - PI / 4.0).abs());
        }
    }
    check(
        worst_re <= LOG_LAW_TOL && worst_im <= LOG_LAW_TOL && oracle_gap <= LOG_LAW_TOL,
        format!("max |Re m + (log λ + γ)/2| = {worst_re:.2e}, max |Im m - π/4| (λ >= 1e6) = {worst_im:.2e}, Ci/Si gap {oracle_gap:.2e}"),
    )
}

fn c4_dual_evaluator() -> Outcome {
    let cfg = QuadratureConfig::default();
    let mut worst: f64 = 0.0;
    for spec in [PhaseSpec::gevrey(2.0), PhaseSpec::log_power(2.0)] {
        let phase = spec.compile().map_err(|e| e.to_string())?;
        let (w, pre) = phase.matched_weight().map_err(|e| e.to_string())?;
        for lambda in [1e2, 1e3, 1e4] {
            let d = compute_m_direct(&phase, lambda, &cfg).map_err(|e| e.to_string())?;
            let s = compute_m_substituted(&w, pre, lambda, &cfg).map_err(|e| e.to_string())?;
            worst = worst.max((d.value - s.value).norm());
        }
    }
    check(worst <= DUAL_TOL, format!("max |direct - substituted| = {worst:.2e}"))
}

fn c5_gevrey_growth() -> Outcome {
    let phase = PhaseSpec::gevrey(2.0).compile().map_err(|e| e.to_string())?;
    let cfg = QuadratureConfig::default();
    let mut vals = Vec::new();
    for e in 2..=7 {
        let lambda = 2.0 * PI * 10f64.powi(e);
        let r = compute_m_direct(&phase, lambda, &cfg).map_err(|e| e.to_string())?;
        vals.push((lambda, -r.value.re, r.total_error()));
    }
    let ratios: Vec<f64> = vals.iter().map(|&(l, v, _)| v / l.ln().ln()).collect();
    let last = &ratios[ratios.len() - 4..];
    let c_lo = last.iter().copied().fold(f64::INFINITY, f64::min);
    let c_hi = last.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let monotone = vals.windows(2).all(|w| w[1].1 >= w[0].1 - (w[0].2 + w[1].2));
    check(
        c_lo > 0.0 && c_hi / c_lo <= GEVREY_BAND && monotone,
        format!("ratios {:?}, band C/c = {:.3}, nondecreasing {monotone}", round4(&ratios), c_hi / c_lo),
    )
}

fn c6_tail_toolkit() -> Outcome {
    let g2 = CarlemanFamily::gevrey(2.0).map_err(|e| e.to_string())?;
    let basel = g2.tail(1).map_err(|e| e.to_string())?.value().unwrap_or(f64::NAN);
    let inv = g2.inverse_tail(0.1).map_err(|e| e.to_string())?;
    let q1 = CarlemanFamily::gevrey(1.0).map_err(|e| e.to_string())?.quasianalytic();
    let q21 = CarlemanFamily::refined_gevrey(2, 1.0).map_err(|e| e.to_string())?.quasianalytic();
    let q15 = CarlemanFamily::gevrey(1.5).map_err(|e| e.to_string())?.quasianalytic();
    let ok = (basel - PI * PI / 6.0).abs() <= BASEL_TOL
        && inv == TailIndex::Exact(10)
        && q1 == Quasianalytic::Yes
        && q21 == Quasianalytic::Yes
        && q15 == Quasianalytic::No;
    check(ok, format!("T(1) = {basel:.12}, inverse_tail(0.1) = {inv:?}, quasianalytic: {q1:?} {q21:?} {q15:?}"))
}

fn c7_legendre() -> Outcome {
    let g2 = CarlemanFamily::gevrey(2.0).map_err(|e| e.to_string())?;
    let y = LN_10;
    let leg = g2.legendre(y).map_err(|e| e.to_string())?;
    let ln_fact10: f64 = (1..=10).map(|j| (j as f64).ln()).sum();
    let closed = 10.0 * y - ln_fact10;
    // Brute force with an independently accumulated ln n!.
    let mut ln_fact = 0.0;
    let mut best = (f64::NEG_INFINITY, Vec::new());
    for n in 0..=10_000u64 {
        if n > 0 {
            ln_fact += (n as f64).ln();
        }
        let v = n as f64 * y - ln_fact;
        if v > best.0 + 1e-12 {
            best = (v, vec![n]);
        } else if (v - best.0).abs() <= 1e-12 {
            best.1.push(n);
        }
    }
    let ok = (leg.value - closed).abs() <= LEGENDRE_TOL
        && (best.0 - leg.value).abs() <= LEGENDRE_TOL
        && leg.argmax == vec![9, 10]
        && best.1 == leg.argmax;
    check(ok, format!("Phi*(log 10) = {:.15} (closed form {closed:.15}, brute force {:.15}), argmax {:?}", leg.value, best.0, leg.argmax))
}

fn gevrey_k() -> Result<VerifiedK, String> {
    let phase = PhaseSpec::gevrey(2.0).compile().map_err(|e| e.to_string())?;
    let m = CarlemanFamily::gevrey(2.0).map_err(|e| e.to_string())?;
    let rep = verify_membership(&phase, &m, 0..=12, &log_grid(0.01, 1.0, 48)).map_err(|e| e.to_string())?;
    VerifiedK::from_membership(&rep).map_err(|e| e.to_string())
}

fn c8_bang_domination() -> Outcome {
    let k = gevrey_k()?;
    let phase = PhaseSpec::gevrey(2.0).compile().map_err(|e| e.to_string())?;
    let m = CarlemanFamily::gevrey(2.0).map_err(|e| e.to_string())?;
    let grid: Vec<f64> = (0..256).map(|i| 0.02 + 0.48 * i as f64 / 255.0).collect();
    let rows = compare_methods(&m, k, &phase, &grid, 0.0).map_err(|e| e.to_string())?;
    let all_compared = rows.len() == grid.len();

    let kv = k.value();
    let log_a = family_log_a(&m, kv, 2.0 * kv, oscillab_core::flatness::CHAIN_BUDGET);
    let mut pairs = 0;
    let mut chain_ok = true;
    for x in log_grid(0.02, 0.5, 10) {
        let level = match bang_level(&m, kv, x).map_err(|e| e.to_string())? {
            BangLevel::Finite(l) => l as usize,
            other => return Err(format!("unexpected level {other:?} at x = {x}")),
        };
        for l in [level, level.div_ceil(2)] {
            let r = bang_chain_oracle(&log_a, x, l).map_err(|e| e.to_string())?;
            chain_ok &= r.holds();
            pairs += 1;
        }
    }
    check(
        all_compared && chain_ok && pairs == 20,
        format!("K = {kv:.4}; {} of {} grid points dominated by both bounds; chain recursion within A0 2^-l at {pairs} pairs: {chain_ok}", rows.len(), grid.len()),
    )
}

fn c9_method_ordering() -> Outcome {
    let cases = [
        ("IteratedExpFlat(2,2)", PhaseSpec::iterated_exp(2, 2.0), CarlemanFamily::refined_gevrey(2, 2.0), (0.5, 1.0), 30, (1e-3, 0.5), Winner::Bang),
        ("LogPower(2)", PhaseSpec::log_power(2.0), CarlemanFamily::exp_power(0.5, 2.0), (1e-4, 0.36), 16, (1e-3, 0.36), Winner::TaylorLegendre),
    ];
    let mut notes = Vec::new();
    let mut ok = true;
    for (name, spec, fam, (lo, hi), n_max, (tlo, thi), want) in cases {
        let phase = spec.compile().map_err(|e| e.to_string())?;
        let fam = fam.map_err(|e| e.to_string())?;
        let rep = verify_membership(&phase, &fam, 0..=n_max, &log_grid(lo, hi, 48)).map_err(|e| e.to_string())?;
        let k = VerifiedK::from_membership(&rep).map_err(|e| format!("{name}: {e}"))?;
        let rows = compare_methods(&fam, k, &phase, &log_grid(tlo, thi, 64), 1e-9).map_err(|e| e.to_string())?;
        match ordering_threshold(&rows, want) {
            Some((t_star, count)) => {
                ok &= count >= MIN_ORDERED_POINTS;
                notes.push(format!("{name}: {want:?} strictly tighter on {count} points, t* = {t_star:.4} (K = {:.4})", k.value()));
            }
            None => {
                ok = false;
                notes.push(format!("{name}: {want:?} never tighter"));
            }
        }
    }
    check(ok, notes.join("; "))
}

fn c10_derivative_triangle() -> Outcome {
    let tri = build_triangle(40).map_err(|e| e.to_string())?;
    let tc = tri.verify();
    let bell = bell_numbers(20).map_err(|e| e.to_string())?;
    let bell_ok = bell_power_bound_holds(&bell);
    let phase = PhaseSpec::log_power(2.0).compile().map_err(|e| e.to_string())?;
    let rows = two_path_agreement(&phase, 8, &[0.1, 0.2, 0.3]).map_err(|e| e.to_string())?;
    let worst = rows.iter().map(|r| r.rel_err).fold(0.0, f64::max);
    check(
        tc.recurrence && tc.factorial_bound && bell_ok && worst <= TWO_PATH_TOL,
        format!("sum |a_nk| <= n! for n <= 40: {}; B_k <= k^k for k <= 20: {bell_ok}; two-path max rel err {worst:.2e}", tc.factorial_bound),
    )
}

fn c11_membership() -> Outcome {
    let phase = PhaseSpec::gevrey(2.0).compile().map_err(|e| e.to_string())?;
    let grid = log_grid(0.01, 1.0, 48);
    let g2 = verify_membership(&phase, &CarlemanFamily::gevrey(2.0).map_err(|e| e.to_string())?, 0..=12, &grid).map_err(|e| e.to_string())?;
    let g1 = verify_membership(&phase, &CarlemanFamily::gevrey(1.0).map_err(|e| e.to_string())?, 0..=12, &grid).map_err(|e| e.to_string())?;
    let (a, b) = (g1.k_hat_at(6).unwrap_or(f64::NAN), g1.k_hat_at(12).unwrap_or(f64::NAN));
    check(
        g2.stable && g2.k_hat <= MEMBERSHIP_K_MAX && b / a >= NON_ANALYTIC_GROWTH,
        format!("Gevrey(2): K_hat = {:.4}, stable {}; Gevrey(1): K_hat_6 = {a:.3}, K_hat_12 = {b:.3}, growth {:.2}x", g2.k_hat, g2.stable, b / a),
    )
}

fn c12_vdc() -> Outcome {
    let phase = PhaseSpec::polynomial(vec![0.0, 0.0, 0.0, 1.0]).compile().map_err(|e| e.to_string())?;
    let cfg = QuadratureConfig::default();
    let (order, fit) = vdc_shell_values(&phase, 1e4, 0..=20, &cfg).map_err(|e| e.to_string())?;
    if order != Some(3) {
        return Err(format!("vanishing order {order:?}, expected 3"));
    }
    let c = vdc_fit_constant(&fit, 3);
    let mut notes = vec![format!("C = {c:.4} fitted at λ = 1e4")];
    let mut ok = c <= VDC_C_MAX;
    for lambda in [1e5, 1e6] {
        let (_, shells) = vdc_shell_values(&phase, lambda, 0..=20, &cfg).map_err(|e| e.to_string())?;
        let r = vdc_max_ratio(&shells, 3);
        ok &= r <= c;
        notes.push(format!("max ratio at λ = {lambda:e}: {r:.4}"));
    }
    check(ok, notes.join("; "))
}

fn c13_envelopes() -> Outcome {
    let chain = [
        Envelope::Constant,
        Envelope::IterLog { k: 3 },
        Envelope::LogLog,
        Envelope::LogPow { p: 0.5 },
        Envelope::LogOverIterLog { k: 2 },
        Envelope::Log,
    ];
    let lambda = Frequency::from(1e8);
    let vals = chain.iter().map(|e| e.eval(&lambda)).collect::<Result<Vec<f64>, _>>().map_err(|e| e.to_string())?;
    let ok = vals.windows(2).all(|w| w[0] < w[1]);
    check(ok, format!("values at 1e8: {:?}", round4(&vals)))
}

fn c14_polynomial_sweep() -> Outcome {
    let rows = polynomial_sweep(2..=40, 200, 1000.0, 7, &QuadratureConfig::default()).map_err(|e| e.to_string())?;
    let worst_ratio = rows.iter().filter_map(|r| r.ratio_to_log_d).fold(0.0, f64::max);
    let ceiling_ok = rows.iter().all(|r| r.max_abs <= 3.0 * (r.degree as f64).ln() + 10.0);
    let worst_abs = rows.iter().map(|r| r.max_abs).fold(0.0, f64::max);
    check(
        worst_ratio <= SWEEP_RATIO_MAX && ceiling_ok,
        format!("d = 2..40, 200 trials + extreme at scale 1e3: max |m|/log d = {worst_ratio:.3}, max |m| = {worst_abs:.3}, below 3 log d + 10: {ceiling_ok}"),
    )
}

fn round4(v: &[f64]) -> Vec<f64> {
    v.iter().map(|x| (x * 1e4).round() / 1e4).collect()
}

fn main() {
    let criteria: [(u32, &str, fn() -> Outcome); 14] = [
        (1, "exact plateau parity", c1_plateau_parity),
        (2, "plateau sandwich", c2_plateau_sandwich),
        (3, "power-phase log law", c3_power_log_law),
        (4, "dual-evaluator agreement", c4_dual_evaluator),
        (5, "Gevrey log-log growth", c5_gevrey_growth),
        (6, "tail toolkit", c6_tail_toolkit),
        (7, "Legendre exactness", c7_legendre),
        (8, "Bang domination", c8_bang_domination),
        (9, "method ordering", c9_method_ordering),
        (10, "derivative triangle", c10_derivative_triangle),
        (11, "class membership", c11_membership),
        (12, "van der Corput shells", c12_vdc),
        (13, "envelope hierarchy", c13_envelopes),
        (14, "polynomial sweep", c14_polynomial_sweep),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (id, name, f) in criteria {
        if !filter.is_empty() && !filter.iter().any(|p| name.contains(p.as_str()) || *p == id.to_string()) {
            continue;
        }
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(d) => println!("PASS criterion {id} ({name}, {secs:.1}s): {d}"),
            Err(d) => {
                failed += 1;
                println!("FAIL criterion {id} ({name}, {secs:.1}s): {d}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
