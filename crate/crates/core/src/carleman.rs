//! Log-convex weight sequences `M_n`: quotient tails `T_M(N) = sum_{j>=N} 1/mu_j`,
//! their inverse, quasianalyticity, the Legendre transform of
//! `Phi(n) = log(M_n/n!)`, and the shell-sum upper-bound estimator.

use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};
use statrs::function::gamma::{digamma, ln_gamma};

use crate::envelopes::iter_exp;
use crate::error::{domain, Error, Result};
use crate::phases::parse_kv;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", content = "params")]
pub enum FamilySpec {
    /// `M_n = (n!)^s`
    Gevrey { s: f64 },
    /// `M_n = n! Q(n)^n`, `Q(n) = (log^{(k)} n)^s prod_{j<k} log^{(j)} n`
    RefinedGevrey { k: u32, s: f64 },
    /// `M_n = exp(c n^alpha)`
    ExpPower { c: f64, alpha: f64 },
    /// `M_n = exp^{(k)}(c n^alpha)`
    IterExpPower { k: u32, c: f64, alpha: f64 },
    /// `log M_n` for `n = 0, 1, ...`
    Tabulated { log_m: Vec<f64> },
}

impl fmt::Display for FamilySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FamilySpec::Gevrey { s } => write!(f, "gevrey:s={s}"),
            FamilySpec::RefinedGevrey { k, s } => write!(f, "refined:k={k},s={s}"),
            FamilySpec::ExpPower { c, alpha } => write!(f, "exppower:c={c},alpha={alpha}"),
            FamilySpec::IterExpPower { k, c, alpha } => write!(f, "iterexppower:k={k},c={c},alpha={alpha}"),
            FamilySpec::Tabulated { log_m } => write!(f, "tabulated:{} terms", log_m.len()),
        }
    }
}

/// Parses a JSON object or `name:key=value,...`.
impl FromStr for FamilySpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.starts_with('{') {
            return serde_json::from_str(s).map_err(|e| Error::Domain(format!("bad family JSON: {e}")));
        }
        let (name, rest) = s.split_once(':').unwrap_or((s, ""));
        let kv = parse_kv(rest)?;
        Ok(match name.to_ascii_lowercase().as_str() {
            "gevrey" => FamilySpec::Gevrey { s: kv.req_f64("s")? },
            "refined" | "refinedgevrey" => FamilySpec::RefinedGevrey { k: kv.req_u32("k")?, s: kv.req_f64("s")? },
            "exppower" => FamilySpec::ExpPower { c: kv.req_f64("c")?, alpha: kv.req_f64("alpha")? },
            "iterexppower" => FamilySpec::IterExpPower { k: kv.req_u32("k")?, c: kv.req_f64("c")?, alpha: kv.req_f64("alpha")? },
            other => return domain(format!("unknown family {other:?}")),
        })
    }
}

/// Direct summation limit for refined families; beyond it the remainder is an integral bracket.
const REFINED_SUM_LIMIT: u64 = 1 << 20;
/// Term-by-term summation cap for the fast-decaying families.
const DIRECT_SUM_CAP: u64 = 20_000_000;
/// Default search limit for the Legendre argmax.
pub const LEGENDRE_BUDGET: u64 = 1 << 62;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Tail {
    /// `value` with a certified bracket `[lower, upper]`.
    Converges { value: f64, lower: f64, upper: f64 },
    Diverges,
}

impl Tail {
    pub fn value(&self) -> Option<f64> {
        match self {
            Tail::Converges { value, .. } => Some(*value),
            Tail::Diverges => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Quasianalytic {
    Yes,
    No,
    Unknown,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum TailIndex {
    Exact(u64),
    /// Beyond u64; `ln_n` is the natural log of the index.
    Astronomical { ln_n: f64 },
}

impl TailIndex {
    pub fn ln(&self) -> f64 {
        match *self {
            TailIndex::Exact(n) => (n as f64).ln(),
            TailIndex::Astronomical { ln_n } => ln_n,
        }
    }

    pub fn exact(&self) -> Option<u64> {
        match *self {
            TailIndex::Exact(n) => Some(n),
            TailIndex::Astronomical { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Legendre {
    pub value: f64,
    /// Every maximizing `n` (ties within 1e-12 relative).
    pub argmax: Vec<u64>,
}

#[derive(Debug)]
struct RefinedCache {
    /// `suffix[n] = sum_{m=n}^{LIMIT-1} 1/mu_m` for `n < LIMIT`.
    suffix: Vec<f64>,
    /// Point estimate and bracket of `sum_{m>=LIMIT} 1/mu_m`.
    rest: (f64, f64, f64),
}

/// A log-convex weight sequence. Immutable; cloning shares cached tables.
#[derive(Debug, Clone)]
pub struct CarlemanFamily {
    spec: FamilySpec,
    n1: u64,
    /// `log M_{n1} / n1`, the constant `log mu` on the padded prefix.
    pad_log_mu: f64,
    cache: Arc<OnceLock<RefinedCache>>,
}

impl CarlemanFamily {
    pub fn new(spec: FamilySpec) -> Result<Self> {
        match &spec {
            FamilySpec::Gevrey { s } if !(*s >= 1.0) => return domain("Gevrey needs s >= 1"),
            FamilySpec::RefinedGevrey { k, s } if *k == 0 || !(*s >= 1.0) => return domain("RefinedGevrey needs k >= 1, s >= 1"),
            FamilySpec::ExpPower { c, alpha } if !(*c > 0.0 && *alpha > 1.0) => return domain("ExpPower needs c > 0, alpha > 1"),
            FamilySpec::IterExpPower { k, c, alpha } if *k < 2 || !(*c > 0.0 && *alpha > 0.0) => {
                return domain("IterExpPower needs k >= 2, c > 0, alpha > 0")
            }
            FamilySpec::Tabulated { log_m } if log_m.len() < 2 || log_m.iter().any(|v| !v.is_finite()) => {
                return domain("Tabulated needs at least two finite entries")
            }
            _ => {}
        }
        let mut fam = CarlemanFamily { spec, n1: 1, pad_log_mu: 0.0, cache: Arc::new(OnceLock::new()) };
        fam.n1 = fam.find_start()?;
        fam.pad_log_mu = if fam.n1 > 1 { fam.formula_log_m(fam.n1) / fam.n1 as f64 } else { 0.0 };
        Ok(fam)
    }

    pub fn gevrey(s: f64) -> Result<Self> {
        Self::new(FamilySpec::Gevrey { s })
    }
    pub fn refined_gevrey(k: u32, s: f64) -> Result<Self> {
        Self::new(FamilySpec::RefinedGevrey { k, s })
    }
    pub fn exp_power(c: f64, alpha: f64) -> Result<Self> {
        Self::new(FamilySpec::ExpPower { c, alpha })
    }
    pub fn iter_exp_power(k: u32, c: f64, alpha: f64) -> Result<Self> {
        Self::new(FamilySpec::IterExpPower { k, c, alpha })
    }
    pub fn tabulated(log_m: Vec<f64>) -> Result<Self> {
        Self::new(FamilySpec::Tabulated { log_m })
    }

    pub fn spec(&self) -> &FamilySpec {
        &self.spec
    }

    /// Index from which the closed-form sequence is used; earlier quotients are constant.
    pub fn start_index(&self) -> u64 {
        self.n1
    }

    fn table_len(&self) -> Option<u64> {
        match &self.spec {
            FamilySpec::Tabulated { log_m } => Some(log_m.len() as u64),
            _ => None,
        }
    }

    /// The smallest index from which the sequence is log-convex, with the
    /// backward padding `log M_n = n log M_{n1} / n1` also log-convex.
    fn find_start(&self) -> Result<u64> {
        let mut n1 = match &self.spec {
            FamilySpec::RefinedGevrey { k, .. } => {
                // Smallest n with log^{(k)} n >= 1, i.e. n >= exp^{(k-1)}(e).
                let t = iter_exp(*k - 1, std::f64::consts::E).map_err(|_| Error::Domain("RefinedGevrey start index overflows".into()))?;
                if t > 1e15 {
                    return domain("RefinedGevrey start index beyond 1e15");
                }
                let mut n = t.ceil().max(1.0) as u64;
                while n > 1 && crate::envelopes::iter_log(*k, (n - 1) as f64).map(|v| v >= 1.0).unwrap_or(false) {
                    n -= 1;
                }
                n
            }
            _ => 1,
        };
        if let FamilySpec::Tabulated { log_m } = &self.spec {
            // Last index where the quotient sequence fails to be nondecreasing.
            let mut start = 1;
            for n in 2..log_m.len() {
                if log_m[n] - log_m[n - 1] < log_m[n - 1] - log_m[n - 2] {
                    start = n as u64;
                }
            }
            return Ok(start);
        }
        for _ in 0..10_000 {
            let pad = self.formula_log_m(n1) / n1 as f64;
            let next = self.formula_log_mu(n1 + 1);
            let monotone = (n1 + 1..n1 + 64).all(|n| self.formula_log_mu(n + 1) >= self.formula_log_mu(n));
            if (n1 == 1 || next >= pad) && monotone {
                return Ok(n1);
            }
            n1 += 1;
        }
        domain("no log-convex start index found")
    }

    /// `log M_n` from the closed form (meaningful for `n >= n1`).
    fn formula_log_m(&self, n: u64) -> f64 {
        let nf = n as f64;
        match &self.spec {
            FamilySpec::Gevrey { s } => s * ln_gamma(nf + 1.0),
            FamilySpec::RefinedGevrey { k, s } => {
                if n == 0 {
                    0.0
                } else {
                    ln_gamma(nf + 1.0) + nf * refined_ln_q(*k, *s, nf)
                }
            }
            FamilySpec::ExpPower { c, alpha } => c * nf.powf(*alpha),
            FamilySpec::IterExpPower { k, c, alpha } => {
                if n == 0 {
                    0.0
                } else {
                    iter_exp(*k - 1, c * nf.powf(*alpha)).unwrap_or(f64::INFINITY)
                }
            }
            FamilySpec::Tabulated { log_m } => log_m.get(n as usize).copied().unwrap_or(f64::NAN),
        }
    }

    /// `log mu_n = log M_n - log M_{n-1}` from the closed form, evaluated stably.
    fn formula_log_mu(&self, n: u64) -> f64 {
        let nf = n as f64;
        match &self.spec {
            FamilySpec::Gevrey { s } => s * nf.ln(),
            FamilySpec::RefinedGevrey { k, s } => {
                if n == 1 {
                    return self.formula_log_m(1);
                }
                refined_log_mu(*k, *s, nf)
            }
            FamilySpec::ExpPower { c, alpha } => c * power_difference(nf, *alpha),
            FamilySpec::IterExpPower { k, c, alpha } => {
                if n == 1 {
                    return self.formula_log_m(1);
                }
                // E_{k-1}(x) - E_{k-1}(y) = e^a (1 - e^{b - a}) with a = E_{k-2}(x), b = E_{k-2}(y).
                let x = c * nf.powf(*alpha);
                let y = c * (nf - 1.0).powf(*alpha);
                if *k == 2 {
                    let d = c * power_difference(nf, *alpha);
                    return x.exp() * (-(-d).exp_m1());
                }
                let a = iter_exp(*k - 2, x).unwrap_or(f64::INFINITY);
                let b = iter_exp(*k - 2, y).unwrap_or(f64::INFINITY);
                if a.is_infinite() {
                    return f64::INFINITY;
                }
                a.exp() * (-(b - a).exp_m1())
            }
            FamilySpec::Tabulated { log_m } => {
                let i = n as usize;
                if i < log_m.len() {
                    log_m[i] - log_m[i - 1]
                } else {
                    f64::NAN
                }
            }
        }
    }

    /// `log M_n`.
    pub fn log_m(&self, n: u64) -> f64 {
        if n < self.n1 && self.n1 > 1 && !matches!(self.spec, FamilySpec::Tabulated { .. }) {
            return n as f64 * self.pad_log_mu;
        }
        self.formula_log_m(n)
    }

    /// `log mu_n` for `n >= 1`.
    pub fn log_mu(&self, n: u64) -> f64 {
        assert!(n >= 1, "mu_n starts at n = 1");
        if n <= self.n1 && self.n1 > 1 && !matches!(self.spec, FamilySpec::Tabulated { .. }) {
            return self.pad_log_mu;
        }
        self.formula_log_mu(n)
    }

    fn inv_mu(&self, n: u64) -> f64 {
        (-self.log_mu(n)).exp()
    }

    pub fn quasianalytic(&self) -> Quasianalytic {
        match &self.spec {
            FamilySpec::Gevrey { s } | FamilySpec::RefinedGevrey { s, .. } => {
                if *s == 1.0 {
                    Quasianalytic::Yes
                } else {
                    Quasianalytic::No
                }
            }
            FamilySpec::ExpPower { .. } | FamilySpec::IterExpPower { .. } => Quasianalytic::No,
            FamilySpec::Tabulated { .. } => Quasianalytic::Unknown,
        }
    }

    /// `T_M(N) = sum_{j >= N} 1/mu_j`.
    ///
    /// Divergence is decided analytically: `mu_j = j` for `Gevrey(1)`, and
    /// `1/mu_j` dominates `1/(2 j L_1(j)...L_k(j))` (divergent by the integral
    /// test) for `RefinedGevrey(k, 1)`.
    pub fn tail(&self, n: u64) -> Result<Tail> {
        if n == 0 {
            return domain("tail index starts at 1");
        }
        if self.table_len().is_some() {
            return Err(Error::BudgetExhausted("tail of a tabulated sequence is undecidable from finite data".into()));
        }
        if self.quasianalytic() == Quasianalytic::Yes {
            return Ok(Tail::Diverges);
        }
        match &self.spec {
            FamilySpec::Gevrey { s } => Ok(gevrey_tail(*s, n)),
            FamilySpec::RefinedGevrey { .. } => self.refined_tail(n),
            _ => self.direct_tail(n),
        }
    }

    /// Tail at an index given by its logarithm, for indices beyond u64.
    pub fn tail_ln(&self, ln_n: f64) -> Result<f64> {
        if ln_n < 40.0 {
            let n = ln_n.exp().round() as u64;
            return self.tail(n.max(1))?.value().ok_or_else(|| Error::Domain("divergent tail".into()));
        }
        if self.quasianalytic() == Quasianalytic::Yes {
            return domain("divergent tail");
        }
        match &self.spec {
            FamilySpec::Gevrey { s } => Ok(((1.0 - s) * ln_n).exp() / (s - 1.0)),
            FamilySpec::RefinedGevrey { k, s } => Ok(refined_integral(*k, *s, ln_n)),
            // Superexponential quotients: the tail at such indices is zero in f64.
            _ => Ok(0.0),
        }
    }

    fn refined_cache(&self) -> &RefinedCache {
        self.cache.get_or_init(|| {
            let (k, s) = match self.spec {
                FamilySpec::RefinedGevrey { k, s } => (k, s),
                _ => unreachable!(),
            };
            let limit = REFINED_SUM_LIMIT as usize;
            let mut suffix = vec![0.0; limit + 1];
            let (mut acc, mut comp) = (0.0f64, 0.0f64);
            for m in (1..limit).rev() {
                let term = self.inv_mu(m as u64);
                let t = acc + term;
                comp += if acc.abs() >= term.abs() { (acc - t) + term } else { (term - t) + acc };
                acc = t;
                suffix[m] = acc + comp;
            }
            RefinedCache { suffix, rest: refined_remainder(k, s, REFINED_SUM_LIMIT) }
        })
    }

    fn refined_tail(&self, n: u64) -> Result<Tail> {
        let (k, s) = match self.spec {
            FamilySpec::RefinedGevrey { k, s } => (k, s),
            _ => unreachable!(),
        };
        if n >= REFINED_SUM_LIMIT {
            let (v, lo, hi) = refined_remainder(k, s, n);
            return Ok(Tail::Converges { value: v, lower: lo, upper: hi });
        }
        let c = self.refined_cache();
        let head = c.suffix[n as usize];
        let (v, lo, hi) = c.rest;
        let slack = 4.0 * f64::EPSILON * head;
        Ok(Tail::Converges { value: head + v, lower: head - slack + lo, upper: head + slack + hi })
    }

    /// Term-by-term summation with a dyadic block bound on the remainder:
    /// `sum_{n >= J} f(n) <= sum_b 2^b J f(2^b J)` for decreasing `f`.
    fn direct_tail(&self, n: u64) -> Result<Tail> {
        let (mut acc, mut comp) = (0.0f64, 0.0f64);
        let mut m = n;
        loop {
            let term = self.inv_mu(m);
            let t = acc + term;
            comp += if acc.abs() >= term.abs() { (acc - t) + term } else { (term - t) + acc };
            acc = t;
            m += 1;
            if term <= 1e-18 * acc.max(1e-300) || term == 0.0 {
                break;
            }
            if m - n > DIRECT_SUM_CAP {
                return Err(Error::BudgetExhausted(format!("tail from {n} did not settle within {DIRECT_SUM_CAP} terms")));
            }
        }
        let sum = acc + comp;
        let mut bound = 0.0;
        let mut j = m as f64;
        for _ in 0..64 {
            let b = j * (-self.log_mu(j as u64)).exp();
            bound += b;
            if b <= 1e-30 * sum.max(1e-300) || b == 0.0 {
                break;
            }
            j *= 2.0;
            if j > 9e18 {
                return Err(Error::BudgetExhausted("remainder bound did not close".into()));
            }
        }
        Ok(Tail::Converges { value: sum, lower: sum * (1.0 - 4.0 * f64::EPSILON), upper: sum * (1.0 + 4.0 * f64::EPSILON) + bound })
    }

    fn tail_value(&self, n: u64) -> Result<f64> {
        self.tail(n)?.value().ok_or_else(|| Error::Domain("divergent tail".into()))
    }

    /// `N_M(r) = sup{N >= 1 : T_M(N) >= r}`.
    pub fn inverse_tail(&self, r: f64) -> Result<TailIndex> {
        if !(r > 0.0) {
            return domain("inverse_tail needs r > 0");
        }
        let t1 = match self.tail(self.n1)? {
            Tail::Diverges => return Err(Error::OutOfRange("tail diverges; N_M is infinite".into())),
            Tail::Converges { value, .. } => value,
        };
        if r > t1 {
            return Err(Error::OutOfRange(format!("r = {r} exceeds T_M(n1) = {t1}")));
        }
        // Exponential search then bisection on u64.
        let mut lo = self.n1;
        let mut hi = self.n1.max(1);
        loop {
            let next = hi.saturating_mul(2);
            if next == hi || next > (1u64 << 62) {
                return self.inverse_tail_astronomical(r);
            }
            if self.tail_value(next)? < r {
                hi = next;
                break;
            }
            lo = next;
            hi = next;
        }
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if self.tail_value(mid)? >= r {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(TailIndex::Exact(lo))
    }

    fn inverse_tail_astronomical(&self, r: f64) -> Result<TailIndex> {
        let mut lo = (1u64 << 62) as f64;
        lo = lo.ln();
        let mut hi = lo;
        for _ in 0..2000 {
            hi *= 2.0;
            if !hi.is_finite() {
                return Err(Error::BudgetExhausted("N_M(r) beyond double-log range".into()));
            }
            if self.tail_ln(hi)? < r {
                break;
            }
            lo = hi;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.tail_ln(mid)? >= r {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-13 * hi {
                break;
            }
        }
        Ok(TailIndex::Astronomical { ln_n: lo })
    }

    /// `Phi(n) = log M_n - log n!`.
    pub fn phi(&self, n: u64) -> f64 {
        self.log_m(n) - ln_gamma(n as f64 + 1.0)
    }

    /// `Phi*(y) = sup_{n >= 1} (n y - Phi(n))` with the full argmax set.
    ///
    /// The increment `y - (log mu_{n+1} - log(n+1))` is nonincreasing from the
    /// start index on, so the first negative increment past it certifies the maximum.
    pub fn legendre(&self, y: f64) -> Result<Legendre> {
        self.legendre_with_budget(y, LEGENDRE_BUDGET)
    }

    pub fn legendre_with_budget(&self, y: f64, budget: u64) -> Result<Legendre> {
        if !y.is_finite() {
            return domain("legendre needs finite y");
        }
        let limit = self.table_len().map(|l| l - 1).unwrap_or(budget).min(budget);
        let scan_limit = limit.min(1 << 21);
        let d = |n: u64| self.log_mu(n) - (n as f64).ln();
        let start = self.convex_start(limit)?;
        let mut obj = y - self.phi(1);
        let mut best = obj;
        let mut points: Vec<(u64, f64)> = vec![(1, obj)];
        let mut n = 1u64;
        let mut prev_d = f64::NEG_INFINITY;
        let mut stopped = false;
        while n < scan_limit {
            let dn = d(n + 1);
            if n + 1 > start && dn < prev_d - 1e-12 * prev_d.abs().max(1.0) {
                return Err(Error::BudgetExhausted(format!("quotient ratio mu_n/n decreases at n = {}", n + 1)));
            }
            if n + 1 > start {
                prev_d = dn;
            }
            let inc = y - dn;
            if inc < 0.0 && n >= start {
                stopped = true;
                break;
            }
            obj += inc;
            n += 1;
            if obj >= best - 1e-12 * best.abs().max(1.0) {
                best = best.max(obj);
                points.push((n, obj));
            }
        }
        if !stopped {
            if self.table_len().is_some() || scan_limit >= limit {
                return Err(Error::BudgetExhausted(format!("no downturn of n y - Phi(n) up to n = {n}")));
            }
            return self.legendre_bisect(y, n, limit);
        }
        let tol = 1e-12 * best.abs().max(1.0);
        let argmax = points.iter().filter(|(_, v)| *v >= best - tol).map(|(m, _)| *m).collect();
        Ok(Legendre { value: best, argmax })
    }

    /// First index `m >= n1` past which `log mu_n - log n` is nondecreasing
    /// over a 64-step window; the objective is concave from there on.
    fn convex_start(&self, limit: u64) -> Result<u64> {
        let d = |n: u64| self.log_mu(n) - (n as f64).ln();
        let mut m = self.n1;
        let mut k = m;
        while k < limit && k < m + 64 {
            if d(k + 1) < d(k) - 1e-12 * d(k).abs().max(1.0) {
                m = k + 1;
                if m > 4096 {
                    return Err(Error::BudgetExhausted(format!("quotient ratio mu_n/n decreases at n = {m}")));
                }
            }
            k += 1;
        }
        Ok(m)
    }

    /// Large-argmax path: bisection on the sign of the increment, then direct
    /// evaluation of the objective next to the crossing.
    fn legendre_bisect(&self, y: f64, from: u64, limit: u64) -> Result<Legendre> {
        let inc = |n: u64| y - (self.log_mu(n + 1) - ((n + 1) as f64).ln());
        let mut lo = from;
        let mut hi = from;
        loop {
            let next = hi.saturating_mul(2).min(limit);
            if inc(next) < 0.0 {
                hi = next;
                break;
            }
            if next == limit {
                return Err(Error::BudgetExhausted(format!("no downturn of n y - Phi(n) up to n = {limit}")));
            }
            lo = next;
            hi = next;
        }
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if inc(mid) >= 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        // lo is the last n with a nonnegative increment; the argmax is lo + 1.
        let objective = |n: u64| n as f64 * y - self.phi(n);
        let best_n = lo + 1;
        let best = objective(best_n);
        let mut argmax = vec![best_n];
        if inc(lo).abs() <= 1e-12 * y.abs().max(1.0) {
            argmax.insert(0, lo);
        }
        Ok(Legendre { value: best, argmax })
    }

    /// `ln` of the Taylor–Legendre bound `K exp(-Phi*(log(1/(K t))))`.
    pub fn taylor_legendre_ln_bound(&self, k: f64, t: f64) -> Result<f64> {
        let t = t.abs();
        if !(k > 0.0 && t > 0.0 && t * k < 1.0) {
            return domain(format!("taylor_legendre_bound needs 0 < |t| < 1/K (K = {k}, t = {t})"));
        }
        let y = -(k * t).ln();
        Ok(k.ln() - self.legendre(y)?.value)
    }

    pub fn taylor_legendre_bound(&self, k: f64, t: f64) -> Result<f64> {
        Ok(self.taylor_legendre_ln_bound(k, t)?.exp())
    }

    /// `sum_{N >= N0} min(1, c lambda 2^{-N}) log(T_M(N)/T_M(N+1))`, summed until
    /// a geometric certificate bounds the rest below `1e-15` of the total.
    pub fn shellsum_upper(&self, lambda: f64, c: f64, n0: u64) -> Result<f64> {
        if !(lambda >= 2.0 && c > 0.0) || n0 == 0 {
            return domain("shellsum_upper needs lambda >= 2, c > 0, N0 >= 1");
        }
        let n0 = n0.max(self.n1);
        let mut total = 0.0;
        let mut n = n0;
        let mut tn = self.tail_value(n)?;
        let mut prev_ratio = f64::INFINITY;
        for _ in 0..4000 {
            let inv_mu = self.inv_mu(n);
            // log(T(N)/T(N+1)) = -log(1 - 1/(mu_N T(N)))
            let ratio = -(-(inv_mu / tn)).ln_1p();
            let weight = (c * lambda * 0.5f64.powi(n.min(2000) as i32)).min(1.0);
            total += weight * ratio;
            if weight < 0.5 && ratio <= prev_ratio {
                // Later weights halve and later ratios do not increase.
                let rest = weight * ratio;
                if rest <= 1e-15 * total {
                    return Ok(total + rest);
                }
            }
            prev_ratio = ratio;
            tn -= inv_mu;
            n += 1;
            if !(tn > 0.0) {
                tn = self.tail_value(n)?;
            }
        }
        Err(Error::BudgetExhausted("shell sum did not close".into()))
    }
}

/// `n^alpha - (n-1)^alpha`, stably.
fn power_difference(n: f64, alpha: f64) -> f64 {
    if n <= 1.0 {
        return n.powf(alpha);
    }
    -n.powf(alpha) * (alpha * (-1.0 / n).ln_1p()).exp_m1()
}

/// `log Q(x) = s log L_k(x) + sum_{j<k} log L_j(x)`.
fn refined_ln_q(k: u32, s: f64, x: f64) -> f64 {
    let mut l = x;
    let mut acc = 0.0;
    for j in 1..=k {
        l = l.ln();
        acc += if j == k { s * l.ln() } else { l.ln() };
    }
    acc
}

/// `log mu_n = log n + log Q(n) + (n-1)(log Q(n) - log Q(n-1))`, with the
/// differences of iterated logs carried through `ln_1p`.
fn refined_log_mu(k: u32, s: f64, n: f64) -> f64 {
    let mut l_prev = n - 1.0;
    let mut d = -(-1.0 / n).ln_1p(); // L_1(n) - L_1(n-1)
    let mut dq = 0.0;
    for j in 1..=k {
        let lj_prev = l_prev.ln();
        // d = L_j(n) - L_j(n-1); contribution log(L_j(n)/L_j(n-1)).
        let r = (d / lj_prev).ln_1p();
        dq += if j == k { s * r } else { r };
        l_prev = lj_prev;
        d = r;
    }
    n.ln() + refined_ln_q(k, s, n) + (n - 1.0) * dq
}

/// `int_X^inf g(x) dx` with `g = exp(-l'(x))`, `l(x) = log Gamma(x+1) + x log Q(x)`,
/// given `ln X`. Substituting `v = L_k(x)` gives
/// `int_{v0}^inf v^{-s} h e^{-D} dv`, `h = x e^{-digamma(x+1)}`,
/// `D = s/(L_1...L_k) + sum_{i<k} 1/(L_1...L_i)`.
fn refined_integral(k: u32, s: f64, ln_x: f64) -> f64 {
    let mut v0 = ln_x;
    for _ in 1..k {
        v0 = v0.ln();
    }
    let correction = |v: f64| -> f64 {
        // L_k = v, L_{j} = exp(L_{j+1}).
        let mut ls = vec![0.0; k as usize + 1];
        ls[k as usize] = v;
        for j in (1..k as usize).rev() {
            ls[j] = ls[j + 1].exp();
        }
        let mut prod = 1.0;
        let mut dsum = 0.0;
        for (j, &l) in ls.iter().enumerate().skip(1) {
            prod *= l;
            if j < k as usize {
                dsum += 1.0 / prod;
            }
        }
        dsum += s / prod;
        let ln_xx = ls[1];
        let h = if ln_xx > 700.0 {
            1.0
        } else {
            let x = ln_xx.exp();
            (ln_xx - digamma(x + 1.0)).exp()
        };
        (h * (-dsum).exp()) - 1.0
    };
    // int_{v0}^inf v^{-s} F(v) dv = v0^{1-s} int_0^1 w^{s-2} F(v0/w) dw, in dyadic w-shells.
    let rule = &*crate::quadrature::panel::GL16;
    let mut corr = 0.0;
    let mut hi = 1.0f64;
    for _ in 0..200 {
        let lo = 0.5 * hi;
        let (mid, half) = (0.5 * (lo + hi), 0.5 * (hi - lo));
        let mut shell = 0.0;
        for (x, w) in rule.nodes.iter().zip(&rule.weights) {
            let ww = mid + half * x;
            shell += w * ww.powf(s - 2.0) * correction(v0 / ww);
        }
        shell *= half;
        corr += shell;
        if shell.abs() <= 1e-17 * (1.0 / (s - 1.0) + corr.abs()) {
            break;
        }
        hi = lo;
    }
    v0.powf(1.0 - s) * (1.0 / (s - 1.0) + corr)
}

/// Point estimate and bracket of `sum_{n >= J} 1/mu_n` for refined families.
///
/// Convexity of `l` gives `g(n) <= 1/mu_n <= g(n-1)`; monotone `g` gives the
/// integral bracket. The point estimate `int_{J-1}^inf g` is the midpoint rule.
fn refined_remainder(k: u32, s: f64, j: u64) -> (f64, f64, f64) {
    let jf = j as f64;
    let g = |x: f64| (-(digamma(x + 1.0) + refined_ln_q(k, s, x) + refined_d(k, s, x))).exp();
    let lower = refined_integral(k, s, jf.ln());
    let point = refined_integral(k, s, (jf - 1.0).ln());
    let upper = point + g(jf - 1.0);
    (point, lower, upper)
}

/// `D(x) = x (log Q)'(x)`.
fn refined_d(k: u32, s: f64, x: f64) -> f64 {
    let mut l = x;
    let mut prod = 1.0;
    let mut acc = 0.0;
    for j in 1..=k {
        l = l.ln();
        prod *= l;
        acc += if j == k { s / prod } else { 1.0 / prod };
    }
    acc
}

/// Hurwitz zeta `sum_{n >= N} n^{-s}` by Euler–Maclaurin at `M = max(N, 32)`;
/// the bracket is the first omitted correction term.
fn gevrey_tail(s: f64, n: u64) -> Tail {
    const B2K: [f64; 8] = [1.0 / 6.0, -1.0 / 30.0, 1.0 / 42.0, -1.0 / 30.0, 5.0 / 66.0, -691.0 / 2730.0, 7.0 / 6.0, -3617.0 / 510.0];
    let m = n.max(32);
    let (mut acc, mut comp) = (0.0f64, 0.0f64);
    for j in (n..m).rev() {
        let term = (j as f64).powf(-s);
        let t = acc + term;
        comp += if acc.abs() >= term.abs() { (acc - t) + term } else { (term - t) + acc };
        acc = t;
    }
    let mf = m as f64;
    let mut em = mf.powf(1.0 - s) / (s - 1.0) + 0.5 * mf.powf(-s);
    // B_{2k}/(2k)! * s(s+1)...(s+2k-2) * M^{-s-2k+1}
    let mut rising = s; // s (s+1) ... (s + 2k - 2)
    let mut fact = 2.0; // (2k)!
    let mut last = 0.0;
    for (i, b) in B2K.iter().enumerate() {
        let kk = i as f64 + 1.0;
        let term = b / fact * rising * mf.powf(-s - 2.0 * kk + 1.0);
        if i + 1 == B2K.len() {
            last = term.abs();
            break;
        }
        em += term;
        rising *= (s + 2.0 * kk - 1.0) * (s + 2.0 * kk);
        fact *= (2.0 * kk + 1.0) * (2.0 * kk + 2.0);
    }
    let value = acc + comp + em;
    let slack = last + 4.0 * f64::EPSILON * value;
    Tail::Converges { value, lower: value - slack, upper: value + slack }
}
