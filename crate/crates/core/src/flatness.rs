//! Flat-point bounds: Bang's chain-of-intervals lemma and the Taylor–Legendre
//! bound, with an executable form of the chain recursion.

use std::cmp::Ordering;
use std::f64::consts::LN_2;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::carleman::{CarlemanFamily, TailIndex};
use crate::derivlab::MembershipReport;
use crate::error::{domain, Error, Result};
use crate::magnitude::Magnitude;
use crate::phases::Phase;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FlatMethod {
    Bang,
    TaylorLegendre,
    ClosedForm,
}

/// Level `ℓ` certified by the tail condition `T_M(ℓ) > 4Kx`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum BangLevel {
    Finite(u64),
    /// Beyond u64; `ln_level = ln ℓ`.
    Astronomical { ln_level: f64 },
    /// Quasianalytic class: every level holds, so the function vanishes.
    Infinite,
}

impl BangLevel {
    /// `ln(ℓ ln 2 - ln A0)`, i.e. `ln(-ln bound)`, when the bound is below 1.
    fn bound(&self, a0: f64) -> Magnitude {
        match *self {
            BangLevel::Finite(l) => Magnitude::Ln(a0.ln() - l as f64 * LN_2),
            BangLevel::Astronomical { ln_level } => Magnitude::from_ln_neg_ln(ln_level + LN_2.ln() + (-a0.ln() / (ln_level.exp() * LN_2)).ln_1p()),
            BangLevel::Infinite => Magnitude::Ln(f64::NEG_INFINITY),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlatBoundCertificate {
    pub method: FlatMethod,
    pub t: f64,
    pub bound: Magnitude,
    /// Bang level, when `method` is `Bang`.
    pub level: Option<BangLevel>,
    /// Smallest Legendre argmax, when `method` is `TaylorLegendre`.
    pub argmax: Option<u64>,
    pub k: f64,
    pub a0: f64,
}

/// Largest `ℓ` with `T_M(ℓ) > 4Kx`; `Finite(0)` when even `T_M(1)` is too small.
pub fn bang_level(m: &CarlemanFamily, k: f64, x: f64) -> Result<BangLevel> {
    if !(x > 0.0 && x < 1.0 && k > 0.0) {
        return domain("bang_level needs 0 < x < 1 and K > 0");
    }
    if m.quasianalytic() == crate::carleman::Quasianalytic::Yes {
        return Ok(BangLevel::Infinite);
    }
    let r = 4.0 * k * x;
    match m.inverse_tail(r) {
        Err(Error::OutOfRange(_)) => Ok(BangLevel::Finite(0)),
        Err(e) => Err(e),
        Ok(TailIndex::Exact(n)) => {
            // The condition is strict.
            if m.tail(n)?.value().is_some_and(|v| v <= r) {
                Ok(BangLevel::Finite(n - 1))
            } else {
                Ok(BangLevel::Finite(n))
            }
        }
        Ok(TailIndex::Astronomical { ln_n }) => Ok(BangLevel::Astronomical { ln_level: ln_n }),
    }
}

/// `A0 2^{-ℓ}` with `ℓ = bang_level(M, K, x)`.
pub fn bang_bound(m: &CarlemanFamily, k: f64, a0: f64, x: f64) -> Result<FlatBoundCertificate> {
    if !(a0 > 0.0) {
        return domain("bang_bound needs A0 > 0");
    }
    let level = bang_level(m, k, x)?;
    Ok(FlatBoundCertificate { method: FlatMethod::Bang, t: x, bound: level.bound(a0), level: Some(level), argmax: None, k, a0 })
}

/// `K exp(-Phi*(log 1/(K|t|)))`.
pub fn taylor_legendre_certificate(m: &CarlemanFamily, k: f64, t: f64) -> Result<FlatBoundCertificate> {
    let t = t.abs();
    if !(k > 0.0 && t > 0.0 && k * t < 1.0) {
        return domain(format!("Taylor–Legendre bound needs 0 < |t| < 1/K (K = {k}, t = {t})"));
    }
    let leg = m.legendre(-(k * t).ln())?;
    Ok(FlatBoundCertificate {
        method: FlatMethod::TaylorLegendre,
        t,
        bound: Magnitude::Ln(k.ln() - leg.value),
        level: None,
        argmax: leg.argmax.first().copied(),
        k,
        a0: k,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainReport {
    /// `A0 G(0, ℓ)` from the recursion table.
    pub chain_bound: f64,
    /// `A0 2^{-ℓ}`.
    pub packaged_bound: f64,
    /// Closing index `n` with `sum_{j=ℓ}^n 1/η_j >= 4x`.
    pub n: usize,
    pub a: f64,
}

impl ChainReport {
    pub fn holds(&self) -> bool {
        self.chain_bound <= self.packaged_bound * (1.0 + 1e-12)
    }
}

/// Largest closing index the chain table accepts.
pub const CHAIN_BUDGET: usize = 20_000;

/// Evaluates the chain recursion `F(p,q) <= F(p,q+1) + (a/η_q) F(p+1,q)` as
/// equalities from `F(q,q) = A_q`, `F(·,n+1) = 0`, and returns `F(0,ℓ)`.
/// `log_a[j] = ln A_j`. The table is normalized by `A_p` row-wise.
pub fn bang_chain_oracle(log_a: &[f64], x: f64, l: usize) -> Result<ChainReport> {
    if log_a.is_empty() || !(x > 0.0) {
        return domain("bang_chain_oracle needs a nonempty sequence and x > 0");
    }
    let a0 = log_a[0].exp();
    if l == 0 {
        return Ok(ChainReport { chain_bound: a0, packaged_bound: a0, n: 0, a: 0.0 });
    }
    // ln η_j for j >= 1
    let ln_eta: Vec<f64> = log_a.windows(2).map(|w| w[1] - w[0]).collect();
    let eta = |j: usize| ln_eta[j - 1];
    for j in 2..log_a.len() {
        if eta(j) < eta(j - 1) - 1e-12 * eta(j - 1).abs().max(1.0) {
            return domain(format!("quotients decrease at j = {j}; the chain needs nondecreasing η"));
        }
    }
    let mut sum = 0.0;
    let mut n = None;
    for j in l..log_a.len().min(CHAIN_BUDGET + 1) {
        sum += (-eta(j)).exp();
        if sum >= 4.0 * x {
            n = Some(j);
            break;
        }
    }
    let n = n.ok_or_else(|| Error::ChainFailed(format!("sum of 1/η_j from {l} stays below 4x = {}", 4.0 * x)))?;
    let a = x / sum;
    // G(p, q) = F(p, q)/A_p; G(p,q) = G(p,q+1) + a (η_{p+1}/η_q) G(p+1,q), G(q,q) = 1, G(·,n+1) = 0.
    let mut next_col = vec![0.0; n + 2]; // column q+1
    let mut col = vec![0.0; n + 2];
    for q in (l..=n).rev() {
        col[q] = 1.0;
        for p in (0..q).rev() {
            let ratio = (eta(p + 1) - eta(q)).exp();
            col[p] = next_col[p] + a * ratio * col[p + 1];
        }
        std::mem::swap(&mut col, &mut next_col);
        col.iter_mut().for_each(|v| *v = 0.0);
    }
    let g0 = next_col[0];
    Ok(ChainReport { chain_bound: a0 * g0, packaged_bound: a0 * 0.5f64.powi(l as i32), n, a })
}

/// `ln A_n = ln A0 + n ln K + log M_n` for `n = 0..=n_max`, the majorant of a
/// flat extension with `η_n = K μ_n`.
pub fn family_log_a(m: &CarlemanFamily, k: f64, a0: f64, n_max: usize) -> Vec<f64> {
    (0..=n_max).map(|n| a0.ln() + n as f64 * k.ln() + m.log_m(n as u64)).collect()
}

/// A class constant that passed the derivative-lab stability test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerifiedK(f64);

impl VerifiedK {
    pub fn from_membership(report: &MembershipReport) -> Result<Self> {
        if !report.stable {
            return Err(Error::ClassMismatch(format!("K_hat = {} did not stabilize", report.k_hat)));
        }
        Ok(VerifiedK(report.k_hat))
    }

    pub fn value(&self) -> f64 {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Winner {
    Bang,
    TaylorLegendre,
    Tie,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub t: f64,
    pub actual: Magnitude,
    pub bang: Magnitude,
    pub taylor_legendre: Magnitude,
    pub winner: Winner,
}

/// Bang bound (with `A0 = 2K`) and Taylor–Legendre bound against `|phi(t)|`.
/// Points where a quantity is unavailable (`t >= 1/K`, budget limits,
/// values beyond double-log range) are skipped. Fails with `ClassMismatch` if `|phi|` exceeds a bound.
pub fn compare_methods(m: &CarlemanFamily, k: VerifiedK, phase: &Phase, t_grid: &[f64], tol: f64) -> Result<Vec<ComparisonRow>> {
    let k = k.value();
    let rows: Vec<Option<ComparisonRow>> = t_grid
        .par_iter()
        .map(|&t| {
            if !(t > 0.0 && k * t < 1.0) {
                return Ok(None);
            }
            let actual = match phase.phi_magnitude(t) {
                Ok(a) => a,
                Err(Error::Overflow { .. }) => return Ok(None),
                Err(e) => return Err(e),
            };
            let bang = match bang_bound(m, k, 2.0 * k, t) {
                Ok(c) => c.bound,
                Err(Error::BudgetExhausted(_) | Error::Overflow { .. }) => return Ok(None),
                Err(e) => return Err(e),
            };
            let tl = match taylor_legendre_certificate(m, k, t) {
                Ok(c) => c.bound,
                Err(Error::BudgetExhausted(_) | Error::Overflow { .. }) => return Ok(None),
                Err(e) => return Err(e),
            };
            let slack = Magnitude::mul_scalar;
            for (name, b) in [("Bang", bang), ("Taylor–Legendre", tl)] {
                if slack(&b, 1.0 + tol).lt(&actual) {
                    return Err(Error::ClassMismatch(format!("|phi({t})| exceeds the {name} bound with K = {k}")));
                }
            }
            let winner = match bang.cmp_value(&tl) {
                Ordering::Less => Winner::Bang,
                Ordering::Greater => Winner::TaylorLegendre,
                Ordering::Equal => Winner::Tie,
            };
            Ok(Some(ComparisonRow { t, actual, bang, taylor_legendre: tl, winner }))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(rows.into_iter().flatten().collect())
}

/// Largest grid `t*` such that `winner` holds at every compared point `t <= t*`,
/// with the number of such points.
pub fn ordering_threshold(rows: &[ComparisonRow], winner: Winner) -> Option<(f64, usize)> {
    let mut sorted: Vec<&ComparisonRow> = rows.iter().collect();
    sorted.sort_by(|a, b| a.t.total_cmp(&b.t));
    let count = sorted.iter().take_while(|r| r.winner == winner).count();
    (count > 0).then(|| (sorted[count - 1].t, count))
}
