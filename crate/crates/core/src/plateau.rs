//! The dyadic-plateau construction: exact odd-product ladders, the parity
//! core of the lower bound, and the explicit upper bound.

use std::f64::consts::{LN_2, PI};

use num_bigint::BigUint;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::envelopes::{iter_log, ln_biguint};
use crate::error::{Error, Result};
use crate::phases::Phase;
use crate::quadrature::{certified_nonneg_realpart_exact, compute_m_direct_exact, QuadratureConfig, QuadratureReport};

/// `q_j = 2 floor(log^{(k-2)}(j + j0)) + 1`.
pub fn q_value(k: u32, j0: u32, j: u64) -> Result<u64> {
    let x = (j + j0 as u64) as f64;
    let l = iter_log(k.saturating_sub(2), x)?;
    Ok(2 * l.floor() as u64 + 1)
}

/// Smallest `j0 >= 1` with `log^{(k-2)}(1 + j0) >= 2`.
pub fn minimal_j0(k: u32) -> Result<u32> {
    if k < 2 {
        return Err(Error::InvalidJ0(format!("k = {k} < 2")));
    }
    let ok = |j0: u32| iter_log(k - 2, 1.0 + j0 as f64).map(|v| v >= 2.0).unwrap_or(false);
    let target = crate::envelopes::iter_exp(k - 2, 2.0).unwrap_or(f64::INFINITY);
    if target > u32::MAX as f64 {
        return Err(Error::InvalidJ0(format!("k = {k}: minimal j0 exceeds u32")));
    }
    let mut j0 = (target.ceil() - 1.0).max(1.0) as u32;
    while j0 > 1 && ok(j0 - 1) {
        j0 -= 1;
    }
    while !ok(j0) {
        j0 += 1;
    }
    Ok(j0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OddProductLadder {
    pub k: u32,
    pub j0: u32,
    /// `q[j - 1] = q_j`.
    pub q: Vec<u64>,
    /// `big_q[n] = Q_n`, with `Q_0 = 1`.
    #[serde(with = "crate::serde_big::biguint_vec")]
    pub big_q: Vec<BigUint>,
}

pub fn build_ladder(k: u32, j0: u32, n_max: usize) -> Result<OddProductLadder> {
    if k < 2 {
        return Err(Error::InvalidJ0(format!("k = {k} < 2")));
    }
    let ok = iter_log(k - 2, 1.0 + j0 as f64).map(|v| v >= 2.0).unwrap_or(false);
    if !ok {
        return Err(Error::InvalidJ0(format!("log^({})(1 + {j0}) < 2", k - 2)));
    }
    let q = (1..=n_max as u64).map(|j| q_value(k, j0, j)).collect::<Result<Vec<_>>>()?;
    Ok(OddProductLadder::from_multipliers(k, j0, q))
}

impl OddProductLadder {
    /// Builds the products for arbitrary multipliers (no parity validation).
    pub fn from_multipliers(k: u32, j0: u32, q: Vec<u64>) -> Self {
        let mut big_q = Vec::with_capacity(q.len() + 1);
        big_q.push(BigUint::one());
        for &qj in &q {
            let next = big_q.last().expect("nonempty") * qj;
            big_q.push(next);
        }
        OddProductLadder { k, j0, q, big_q }
    }

    pub fn n_max(&self) -> usize {
        self.q.len()
    }

    pub fn q(&self, j: usize) -> u64 {
        self.q[j - 1]
    }

    pub fn big_q(&self, n: usize) -> &BigUint {
        &self.big_q[n]
    }

    /// `lambda_n = Q_n`.
    pub fn lambda(&self, n: usize) -> &BigUint {
        &self.big_q[n]
    }

    pub fn ln_q(&self, n: usize) -> f64 {
        ln_biguint(&self.big_q[n])
    }

    pub fn q_f64(&self, n: usize) -> f64 {
        self.big_q[n].to_f64().unwrap_or(f64::INFINITY)
    }

    /// `sum_{j<=n} Q_n/Q_j`: the oscillation count of a full quadrature at `lambda_n`.
    pub fn oscillation_count(&self, n: usize) -> BigUint {
        (1..=n).map(|j| &self.big_q[n] / &self.big_q[j]).fold(BigUint::zero(), |a, b| a + b)
    }
}

/// True iff `Q_n / Q_j` is an odd integer for every `1 <= j <= n`.
pub fn verify_plateau_parity(ladder: &OddProductLadder, n: usize) -> bool {
    if n > ladder.n_max() {
        return false;
    }
    let qn = &ladder.big_q[n];
    (1..=n).all(|j| {
        let (quot, rem) = qn.div_rem(&ladder.big_q[j]);
        rem.is_zero() && quot.is_odd()
    })
}

/// `2 n log(4/3)`.
pub fn plateau_lower_bound(n: usize) -> f64 {
    2.0 * n as f64 * (4.0f64 / 3.0).ln()
}

/// The exact tail `sum_{j>n} Q_n/Q_j` as a rational, summed until terms fall
/// below `1e-18`, plus a certified bound on the remainder.
pub fn plateau_tail(ladder: &OddProductLadder, n: usize) -> Result<(BigRational, f64)> {
    let (k, j0) = (ladder.k, ladder.j0);
    let mut sum = BigRational::zero();
    let mut term = BigRational::one();
    let mut j = n as u64 + 1;
    let threshold = BigRational::new(1.into(), num_bigint::BigInt::from(10u64).pow(18));
    loop {
        let qj = q_value(k, j0, j)?;
        term /= BigRational::from_integer(qj.into());
        sum += &term;
        j += 1;
        if term < threshold {
            // Later ratios are at most 1/q_j since q is nondecreasing.
            let r = 1.0 / q_value(k, j0, j)? as f64;
            let t = term.to_f64().unwrap_or(1e-18);
            return Ok((sum, t * r / (1.0 - r)));
        }
    }
}

/// `2 n log 2 + pi log 2 * sum_{j>n} Q_n/Q_j`, rounded up.
pub fn plateau_upper_bound(ladder: &OddProductLadder, n: usize) -> Result<f64> {
    let (tail, remainder) = plateau_tail(ladder, n)?;
    let tail = tail.to_f64().unwrap_or(f64::INFINITY) + remainder;
    let v = 2.0 * n as f64 * LN_2 + PI * LN_2 * tail;
    Ok(v * (1.0 + 8.0 * f64::EPSILON))
}

/// Largest affordable oscillation count for a full quadrature.
pub const AFFORDABILITY_CAP: u64 = 10_000_000;

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "mode")]
pub enum WindowMeasurement {
    Full { neg_re: f64, abs: f64, report: QuadratureReport },
    Certified { neg_re_lower: f64 },
}

#[derive(Debug, Clone, Serialize)]
pub struct GrowthWindowReport {
    pub n: usize,
    #[serde(with = "crate::serde_big::biguint")]
    pub lambda: BigUint,
    pub lower: f64,
    pub upper: f64,
    pub measurement: WindowMeasurement,
    pub lower_ok: bool,
    pub upper_ok: bool,
}

impl GrowthWindowReport {
    pub fn passed(&self) -> bool {
        self.lower_ok && self.upper_ok
    }
}

/// Checks `2n log(4/3) - tol <= -Re m(Q_n)` and `|m(Q_n)| <= upper + tol`,
/// falling back to the certified lower bound when the quadrature is unaffordable.
pub fn verify_growth_window(
    ladder: &OddProductLadder,
    phase: &Phase,
    n: usize,
    cfg: &QuadratureConfig,
    tol: f64,
) -> Result<GrowthWindowReport> {
    if n == 0 || n > ladder.n_max() {
        return Err(Error::OutOfRange(format!("n = {n} outside 1..={}", ladder.n_max())));
    }
    match phase.plateau() {
        Some(pd) if pd.ladder.k == ladder.k && pd.ladder.j0 == ladder.j0 => {}
        _ => return Err(Error::Mismatch("phase is not the plateau phase of this ladder".into())),
    }
    let lambda = ladder.lambda(n).clone();
    let lower = plateau_lower_bound(n);
    let upper = plateau_upper_bound(ladder, n)?;
    let cap = AFFORDABILITY_CAP.min((cfg.max_nodes / cfg.panels_per_period.max(1) as usize) as u64);
    let affordable = ladder.oscillation_count(n) <= BigUint::from(cap);
    let full = if affordable {
        match compute_m_direct_exact(phase, &lambda, cfg) {
            Ok(r) => Some(r),
            Err(Error::BudgetExceeded(_)) => None,
            Err(e) => return Err(e),
        }
    } else {
        None
    };
    let (measurement, lower_ok, upper_ok) = match full {
        Some(report) => {
            let neg_re = -report.value.re;
            let abs = report.value.norm();
            let ok_lo = neg_re >= lower - tol;
            let ok_hi = abs <= upper + tol;
            (WindowMeasurement::Full { neg_re, abs, report }, ok_lo, ok_hi)
        }
        None => {
            let v = certified_nonneg_realpart_exact(phase, &lambda)?;
            (WindowMeasurement::Certified { neg_re_lower: v }, v >= lower - tol, true)
        }
    };
    Ok(GrowthWindowReport { n, lambda, lower, upper, measurement, lower_ok, upper_ok })
}

/// `log10` of `sup_{j >= l} 2^{j m} / Q_j` over the ladder, the smoothness proxy
/// bounding the m-th derivative on shells beyond `l`.
pub fn smoothness_proxy_log(ladder: &OddProductLadder, m: u32, l: usize) -> f64 {
    (l.max(1)..=ladder.n_max())
        .map(|j| (j as f64 * m as f64 * LN_2 - ladder.ln_q(j)) / std::f64::consts::LN_10)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// `n / (log Q_n / log^{(k)} Q_n)`.
pub fn ratio_law(ladder: &OddProductLadder, n: usize) -> Result<f64> {
    let l = ladder.ln_q(n);
    let lk = crate::envelopes::iter_log_from_ln(ladder.k, l)?;
    Ok(n as f64 / (l / lk))
}
