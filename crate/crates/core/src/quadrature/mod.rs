//! Evaluation of `m(lambda) = int_0^R (e^{i lambda psi(t)} - e^{i lambda psi(-t)}) dt/t`.
//!
//! Two independent routes: dyadic shells in `t` with Filon panels, and the
//! substituted weighted integral in `u = psi(t)`. Also the certified lower
//! bound on `-Re m` and the finite-type shell diagnostics.

pub mod panel;

use std::f64::consts::{FRAC_PI_2, LN_2, PI};
use std::ops::RangeInclusive;

use num_bigint::BigUint;
use num_complex::Complex64;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::phases::{Phase, SubstitutionWeight};
use panel::{adaptive_filon, adaptive_gl, CompensatedSum, Integral, NodeBudget};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QuadratureConfig {
    /// Accuracy target per shell (absolute, on integrals of size `log 2`).
    pub rel_tol: f64,
    /// Controls the largest nonlinear phase residual a panel may carry: `8 pi / panels_per_period`.
    pub panels_per_period: u32,
    pub max_shells: u32,
    /// Target bound on the discarded near-origin mass.
    pub tail_epsilon: f64,
    pub max_nodes: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig { rel_tol: 1e-8, panels_per_period: 8, max_shells: 2000, tail_epsilon: 1e-12, max_nodes: 400_000_000 }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.tail_epsilon > 0.0) || self.panels_per_period < 4 || self.max_shells == 0 || self.max_nodes == 0 {
            return domain(format!("invalid quadrature config {self:?}"));
        }
        Ok(())
    }

    fn max_residual(&self) -> f64 {
        8.0 * PI / self.panels_per_period as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Strategy {
    Zero,
    DirectShells,
    DirectShellsExactFrequency,
    Substituted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureReport {
    pub value: Complex64,
    pub est_error: f64,
    pub nodes_used: usize,
    pub shells_used: usize,
    pub strategy: Strategy,
    pub truncation_bound: f64,
}

impl QuadratureReport {
    fn zero() -> Self {
        QuadratureReport {
            value: Complex64::new(0.0, 0.0),
            est_error: 0.0,
            nodes_used: 0,
            shells_used: 0,
            strategy: Strategy::Zero,
            truncation_bound: 0.0,
        }
    }

    pub fn total_error(&self) -> f64 {
        self.est_error + self.truncation_bound
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return domain(format!("lambda = {lambda} must be finite and >= 0"));
    }
    if lambda > 2f64.powi(53) {
        return domain("lambda beyond 2^53 is outside the floating path");
    }
    Ok(())
}

/// Number of shells so that `lambda * int_0^T |phi|/t <= tail_epsilon`, and that bound.
fn direct_shell_count(phase: &Phase, lambda: f64, cfg: &QuadratureConfig) -> (usize, f64) {
    let r = phase.domain_radius();
    let mut bound = f64::INFINITY;
    for i in 1..=cfg.max_shells as usize {
        bound = lambda * phase.tail_mass_bound(r * 0.5f64.powi(i as i32));
        if bound <= cfg.tail_epsilon {
            return (i, bound);
        }
    }
    (cfg.max_shells as usize, bound)
}

type ShellPhase<'a> = dyn Fn(usize, f64) -> f64 + Sync + 'a;

fn run_direct(
    phase: &Phase,
    lambda: f64,
    theta_plus: &ShellPhase<'_>,
    theta_minus: Option<&ShellPhase<'_>>,
    strategy: Strategy,
    cfg: &QuadratureConfig,
) -> Result<QuadratureReport> {
    let (count, truncation_bound) = direct_shell_count(phase, lambda, cfg);
    let r = phase.domain_radius();
    let budget = NodeBudget::new(cfg.max_nodes);
    let max_res = cfg.max_residual();
    let shells: Vec<Integral> = (1..=count)
        .into_par_iter()
        .map(|i| {
            let lo = r * 0.5f64.powi(i as i32);
            let hi = 2.0 * lo;
            let amp = |t: f64| 1.0 / t;
            let plus = adaptive_filon(lo, hi, 8, &amp, &|t| theta_plus(i, t), cfg.rel_tol, max_res, &budget);
            match theta_minus {
                None => Integral { value: plus.value - LN_2, ..plus },
                Some(tm) => {
                    let minus = adaptive_filon(lo, hi, 8, &amp, &|t| tm(i, t), cfg.rel_tol, max_res, &budget);
                    Integral {
                        value: plus.value - minus.value,
                        error: plus.error + minus.error,
                        complete: plus.complete && minus.complete,
                    }
                }
            }
        })
        .collect();
    let mut sum = CompensatedSum::default();
    let mut err = 0.0;
    let mut complete = true;
    for s in &shells {
        sum.add(s.value);
        err += s.error;
        complete &= s.complete;
    }
    let report = QuadratureReport {
        value: sum.value(),
        est_error: err,
        nodes_used: budget.used(),
        shells_used: count,
        strategy,
        truncation_bound,
    };
    if !report.value.re.is_finite() || !report.value.im.is_finite() {
        return Err(Error::Domain("non-finite integrand".into()));
    }
    if !complete || truncation_bound > cfg.tail_epsilon {
        return Err(Error::BudgetExceeded(Box::new(report)));
    }
    Ok(report)
}

/// `m(lambda)` by dyadic shells in `t`.
pub fn compute_m_direct(phase: &Phase, lambda: f64, cfg: &QuadratureConfig) -> Result<QuadratureReport> {
    cfg.validate()?;
    check_lambda(lambda)?;
    if lambda == 0.0 {
        return Ok(QuadratureReport::zero());
    }
    let plus = |_: usize, t: f64| lambda * phase.eval_unchecked(t);
    let minus = |_: usize, t: f64| lambda * phase.eval_unchecked(-t);
    let minus_ref: Option<&ShellPhase<'_>> = if phase.is_one_sided() { None } else { Some(&minus) };
    run_direct(phase, lambda, &plus, minus_ref, Strategy::DirectShells, cfg)
}

/// `m(lambda)` at an exact integer frequency. For plateau phases the phase on
/// shell `j` is `pi (c_j eta - o_j)` with `c_j = lambda/Q_j` and `o_j` an even
/// integer removed exactly when `Q_j` divides `lambda`; other phases convert
/// `lambda` to a double.
pub fn compute_m_direct_exact(phase: &Phase, lambda: &BigUint, cfg: &QuadratureConfig) -> Result<QuadratureReport> {
    cfg.validate()?;
    let Some(pd) = phase.plateau() else {
        let l = lambda.to_f64().unwrap_or(f64::INFINITY);
        return compute_m_direct(phase, l, cfg);
    };
    if lambda.is_zero() {
        return Ok(QuadratureReport::zero());
    }
    let lf = lambda.to_f64().unwrap_or(f64::INFINITY);
    check_lambda(lf)?;
    let n = pd.ladder.n_max();
    let mut coef = vec![0.0; n + 1];
    let mut offset = vec![0.0; n + 1];
    for j in 1..=n {
        let q = pd.ladder.big_q(j);
        let (quot, rem) = lambda.div_rem(q);
        if rem.is_zero() {
            let even = &quot - (&quot % 2u32);
            coef[j] = quot.to_f64().unwrap_or(f64::INFINITY);
            offset[j] = even.to_f64().unwrap_or(f64::INFINITY);
        } else {
            let ratio = BigRational::new(lambda.clone().into(), q.clone().into());
            coef[j] = ratio.to_f64().unwrap_or(0.0);
        }
    }
    let bump = pd.bump;
    let plus = move |i: usize, t: f64| {
        let j = i - 1;
        if j == 0 || j > n {
            return 0.0;
        }
        let x = t * 2f64.powi(j as i32);
        PI * (coef[j] * bump.eval(x) - offset[j])
    };
    run_direct(phase, lf, &plus, None, Strategy::DirectShellsExactFrequency, cfg)
}

/// `prefactor * int_0^{u0} (e^{i lambda u} - 1) w(u) du`.
pub fn compute_m_substituted(
    w: &SubstitutionWeight,
    prefactor: f64,
    lambda: f64,
    cfg: &QuadratureConfig,
) -> Result<QuadratureReport> {
    cfg.validate()?;
    check_lambda(lambda)?;
    if lambda == 0.0 {
        return Ok(QuadratureReport::zero());
    }
    let u0 = w.u0;
    let ustar = (1.0 / lambda).min(u0);
    let weight = |u: f64| w.eval(u).unwrap_or(f64::NAN);
    let budget = NodeBudget::new(cfg.max_nodes);

    // Near part: (0, u*] in dyadic shells, integrand bounded by lambda u w(u).
    let mut near_shells = Vec::new();
    let mut truncation_bound = f64::INFINITY;
    for k in 1..=cfg.max_shells as usize {
        let lo = ustar * 0.5f64.powi(k as i32);
        near_shells.push((lo, 2.0 * lo));
        // u w(u) is nondecreasing, so int_0^U lambda u w(u) du <= lambda U (U w(U)).
        truncation_bound = lambda * lo * lo * weight(lo);
        if truncation_bound <= cfg.tail_epsilon {
            break;
        }
    }
    // Far part: [u*, u0] in doubling shells.
    let mut far_shells = Vec::new();
    let mut lo = ustar;
    while lo < u0 {
        let hi = (2.0 * lo).min(u0);
        far_shells.push((lo, hi));
        lo = hi;
    }
    let near: Vec<Integral> = near_shells
        .par_iter()
        .map(|&(a, b)| {
            let f = |u: f64| {
                let half = 0.5 * lambda * u;
                Complex64::new(0.0, 2.0 * half.sin()) * Complex64::from_polar(weight(u), half)
            };
            adaptive_gl(a, b, &f, cfg.rel_tol, &budget)
        })
        .collect();
    let max_res = cfg.max_residual();
    let far: Vec<Integral> = far_shells
        .par_iter()
        .map(|&(a, b)| {
            let osc = adaptive_filon(a, b, 1, &weight, &|u| lambda * u, cfg.rel_tol, max_res, &budget);
            let flat = adaptive_gl(a, b, &|u| Complex64::new(weight(u), 0.0), cfg.rel_tol, &budget);
            Integral { value: osc.value - flat.value, error: osc.error + flat.error, complete: osc.complete && flat.complete }
        })
        .collect();
    let mut sum = CompensatedSum::default();
    let mut err = 0.0;
    let mut complete = true;
    for s in near.iter().rev().chain(far.iter()) {
        sum.add(s.value);
        err += s.error;
        complete &= s.complete;
    }
    let report = QuadratureReport {
        value: sum.value() * prefactor,
        est_error: err * prefactor.abs(),
        nodes_used: budget.used(),
        shells_used: near.len() + far.len(),
        strategy: Strategy::Substituted,
        truncation_bound: truncation_bound * prefactor.abs(),
    };
    if !report.value.re.is_finite() || !report.value.im.is_finite() {
        return Err(Error::Domain("weight evaluation failed inside (0, u0]".into()));
    }
    if !complete || truncation_bound > cfg.tail_epsilon {
        return Err(Error::BudgetExceeded(Box::new(report)));
    }
    Ok(report)
}

/// Largest number of resonance windows summed by the monotone lower bound.
const MAX_WINDOWS: u64 = 50_000_000;

/// A certified lower bound on `-Re m(lambda) = int_0^R (1 - cos(lambda psi))/t dt`.
///
/// Plateau phases: integer frequencies go through the exact path. Monotone
/// phases: the integrand is at least `1/t` wherever `lambda psi mod 2 pi` lies in
/// `[pi/2, 3 pi/2]`, and those windows are located through the inverse of `psi`.
pub fn certified_nonneg_realpart(phase: &Phase, lambda: f64) -> Result<f64> {
    if !phase.is_one_sided() {
        return domain("certified_nonneg_realpart needs a one-sided phase");
    }
    check_lambda(lambda)?;
    if lambda == 0.0 {
        return Ok(0.0);
    }
    if let Some(pd) = phase.plateau() {
        if lambda.fract() == 0.0 {
            return certified_nonneg_realpart_exact(phase, &BigUint::from(lambda as u64));
        }
        let shrink = 1.0 - 1e-12;
        let v: f64 = pd.a.iter().skip(1).map(|&a| (1.0 - (lambda * a).cos()).max(0.0) * (4.0f64 / 3.0).ln()).sum();
        return Ok(v * shrink);
    }
    let r = phase.domain_radius();
    let top = lambda * phase.eval(r)?;
    let mut total = 0.0;
    let mut m: u64 = 0;
    loop {
        let base = 2.0 * PI * m as f64;
        let margin = 1e-12 * (base + PI) + 1e-12;
        let a_lo = base + FRAC_PI_2 + margin;
        if a_lo >= top || m >= MAX_WINDOWS {
            break;
        }
        let a_hi = (base + 3.0 * FRAC_PI_2 - margin).min(top);
        let t_lo = phase.inverse(a_lo / lambda).ok_or_else(|| Error::Domain("phase has no inverse".into()))?;
        let t_hi = if a_hi >= top { r } else { phase.inverse(a_hi / lambda).ok_or_else(|| Error::Domain("phase has no inverse".into()))? };
        if t_hi > t_lo && t_lo > 0.0 {
            // Shrink by a relative ulp margin against rounding in the inverse.
            total += ((t_hi / t_lo).ln() - 4.0 * f64::EPSILON).max(0.0);
        }
        m += 1;
    }
    Ok(total)
}

/// Exact-frequency lower bound for plateau phases: every shell `j` with
/// `lambda/Q_j` an odd integer has `cos(lambda psi) = -1` on `J_j` and
/// contributes `int_{J_j} 2/t dt = 2 log(4/3)` exactly.
pub fn certified_nonneg_realpart_exact(phase: &Phase, lambda: &BigUint) -> Result<f64> {
    let Some(pd) = phase.plateau() else {
        return certified_nonneg_realpart(phase, lambda.to_f64().unwrap_or(f64::INFINITY));
    };
    let per_shell = 2.0 * (4.0f64 / 3.0).ln();
    let mut count: u64 = 0;
    for j in 1..=pd.ladder.n_max() {
        let q = pd.ladder.big_q(j);
        if q > lambda {
            break;
        }
        let (quot, rem) = lambda.div_rem(q);
        if rem.is_zero() && quot.is_odd() {
            count += 1;
        }
    }
    Ok(count as f64 * per_shell)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VdcShell {
    pub j: u32,
    pub abs_j: f64,
    pub big_lambda: f64,
}

/// Shell integrals `J_j = int_{1/2}^1 (e^{i lambda psi(t_j s)} - e^{i lambda psi(-t_j s)}) ds/s`,
/// `t_j = 2^{-j} R`, with `Lambda_j = lambda t_j^k`.
pub fn vdc_shell_values(
    phase: &Phase,
    lambda: f64,
    j_range: RangeInclusive<u32>,
    cfg: &QuadratureConfig,
) -> Result<(Option<u32>, Vec<VdcShell>)> {
    cfg.validate()?;
    check_lambda(lambda)?;
    let order = phase.odd_vanishing_order()?;
    if let Some(k) = order {
        if k > 40 {
            return Err(Error::NotFiniteType(format!("vanishing order {k} exceeds cap 40")));
        }
    }
    let r = phase.domain_radius();
    let max_res = cfg.max_residual();
    let budget = NodeBudget::new(cfg.max_nodes);
    let js: Vec<u32> = j_range.collect();
    let shells: Vec<Result<VdcShell>> = js
        .par_iter()
        .map(|&j| {
            let tj = r * 0.5f64.powi(j as i32);
            let Some(k) = order else {
                return Ok(VdcShell { j, abs_j: 0.0, big_lambda: 0.0 });
            };
            let amp = |t: f64| 1.0 / t;
            let plus = adaptive_filon(0.5 * tj, tj, 8, &amp, &|t| lambda * phase.eval_unchecked(t), cfg.rel_tol, max_res, &budget);
            let minus = adaptive_filon(0.5 * tj, tj, 8, &amp, &|t| lambda * phase.eval_unchecked(-t), cfg.rel_tol, max_res, &budget);
            if !(plus.complete && minus.complete) {
                return Err(Error::BudgetExhausted(format!("node budget spent at shell {j}")));
            }
            Ok(VdcShell { j, abs_j: (plus.value - minus.value).norm(), big_lambda: lambda * tj.powi(k as i32) })
        })
        .collect();
    let shells = shells.into_iter().collect::<Result<Vec<_>>>()?;
    Ok((order, shells))
}

/// `min(Lambda, Lambda^{-1/k})`.
pub fn vdc_profile(big_lambda: f64, k: u32) -> f64 {
    big_lambda.min(big_lambda.powf(-1.0 / k as f64))
}

/// Largest `|J_j| / min(Lambda_j, Lambda_j^{-1/k})` over shells with `Lambda_j > 0`.
pub fn vdc_max_ratio(shells: &[VdcShell], k: u32) -> f64 {
    shells
        .iter()
        .filter(|s| s.big_lambda > 0.0)
        .map(|s| s.abs_j / vdc_profile(s.big_lambda, k))
        .fold(0.0, f64::max)
}

/// Fitted van der Corput constant: twice the largest observed ratio.
pub const VDC_FIT_MARGIN: f64 = 2.0;

pub fn vdc_fit_constant(shells: &[VdcShell], k: u32) -> f64 {
    VDC_FIT_MARGIN * vdc_max_ratio(shells, k)
}
