//! High-order derivatives of the catalog phases and empirical class membership.
//!
//! Derivatives come from two independent routes: Cauchy integrals on a circle
//! around `t` (evaluated in log space, since flat phases underflow), and the
//! exact recurrence for `d^n/dt^n g(log 1/t)` combined with Faà di Bruno for
//! `g = exp(f)`.

use std::f64::consts::{E, PI};

use num_bigint::{BigInt, BigUint};
use num_complex::Complex64;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::factorial::ln_factorial;

use crate::carleman::CarlemanFamily;
use crate::envelopes::iter_exp;
use crate::error::{domain, Error, Result};
use crate::phases::{Phase, PhaseSpec};

/// Largest derivative order handled.
pub const N_CAP: u32 = 30;

/// Coefficients of `d^n/dt^n g(log 1/t) = t^{-n} sum_k a_{n,k} g^{(k)}(log 1/t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LogDerivTriangle {
    n_max: usize,
    /// `rows[n-1][k-1] = a_{n,k}`.
    rows: Vec<Vec<BigInt>>,
}

impl LogDerivTriangle {
    pub fn n_max(&self) -> usize {
        self.n_max
    }

    /// `a_{n,k}` for `1 <= k <= n <= n_max`.
    pub fn get(&self, n: usize, k: usize) -> &BigInt {
        &self.rows[n - 1][k - 1]
    }

    pub fn row(&self, n: usize) -> &[BigInt] {
        &self.rows[n - 1]
    }

    pub fn abs_sum(&self, n: usize) -> BigUint {
        self.row(n).iter().map(|a| a.magnitude().clone()).sum()
    }

    /// Checks `a_{1,1} = -1`, the recurrence, and `sum_k |a_{n,k}| <= n!` for every row.
    pub fn verify(&self) -> TriangleCheck {
        let mut recurrence = self.rows[0] == vec![BigInt::from(-1)];
        let mut bound = true;
        let mut attained = Vec::new();
        let mut fact = BigUint::one();
        for n in 1..=self.n_max {
            fact *= BigUint::from(n);
            if n < self.n_max {
                let next = next_row(self.row(n), n);
                recurrence &= next.as_slice() == self.row(n + 1);
            }
            let s = self.abs_sum(n);
            bound &= s <= fact;
            if s == fact {
                attained.push(n);
            }
        }
        TriangleCheck { recurrence, factorial_bound: bound, attained }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TriangleCheck {
    pub recurrence: bool,
    pub factorial_bound: bool,
    /// Rows where `sum_k |a_{n,k}| = n!`.
    pub attained: Vec<usize>,
}

fn next_row(row: &[BigInt], n: usize) -> Vec<BigInt> {
    let nb = BigInt::from(n);
    (1..=n + 1)
        .map(|k| {
            let same = if k <= n { &nb * &row[k - 1] } else { BigInt::zero() };
            let left = if k >= 2 { row[k - 2].clone() } else { BigInt::zero() };
            -(same + left)
        })
        .collect()
}

pub fn build_triangle(n_max: usize) -> Result<LogDerivTriangle> {
    if n_max == 0 {
        return domain("build_triangle needs n_max >= 1");
    }
    let mut rows = vec![vec![BigInt::from(-1)]];
    for n in 1..n_max {
        let next = next_row(&rows[n - 1], n);
        rows.push(next);
    }
    Ok(LogDerivTriangle { n_max, rows })
}

/// Bell numbers `B_0..=B_{k_max}` from the Bell triangle.
pub fn bell_numbers(k_max: usize) -> Result<Vec<BigUint>> {
    if k_max > 25 {
        return domain("bell_numbers supports k_max <= 25");
    }
    let mut out = vec![BigUint::one()];
    let mut row = vec![BigUint::one()];
    for _ in 1..=k_max {
        let mut next = vec![row.last().expect("nonempty").clone()];
        for v in &row {
            let x = next.last().expect("nonempty") + v;
            next.push(x);
        }
        out.push(next[0].clone());
        row = next;
    }
    Ok(out)
}

/// `B_k <= k^k` for `1 <= k <= k_max`.
pub fn bell_power_bound_holds(bell: &[BigUint]) -> bool {
    bell.iter().enumerate().skip(1).all(|(k, b)| *b <= BigUint::from(k).pow(k as u32))
}

/// A real derivative stored as sign and log-magnitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Derivative {
    pub ln_abs: f64,
    pub sign: f64,
    /// `ln` of the ratio between the largest term of the Cauchy sum and the
    /// result; round-off error is about `1e-16 e^{cond}` relative.
    pub cond: f64,
}

impl Derivative {
    pub fn value(&self) -> f64 {
        self.sign * self.ln_abs.exp()
    }
}

const MIN_NODES: usize = 32;
const MAX_NODES: usize = 1 << 15;

/// `f^{(n)}(x)` from `ln f` by the trapezoidal rule on the circle `|z - x| = r`,
/// doubling nodes until successive values agree to `1e-8` relative. The sum is
/// scaled by the largest `Re ln f` on the circle.
pub fn cauchy_ln(ln_f: &(dyn Fn(Complex64) -> Result<Complex64> + Sync), x: f64, n: u32, r: f64) -> Result<Derivative> {
    if !(r > 0.0) {
        return domain("Cauchy radius must be positive");
    }
    let eval = |m: usize, offset: bool| -> Result<Vec<(f64, Complex64)>> {
        (0..m)
            .into_par_iter()
            .map(|j| {
                let theta = 2.0 * PI * (j as f64 + if offset { 0.5 } else { 0.0 }) / m as f64;
                let w = Complex64::from_polar(1.0, theta);
                let l = ln_f(x + r * w)?;
                Ok((theta, l))
            })
            .collect()
    };
    let mut pts = eval(MIN_NODES, false)?;
    let mut prev: Option<(f64, Complex64)> = None;
    loop {
        let m = pts.len();
        let lmax = pts.iter().map(|(_, l)| l.re).fold(f64::NEG_INFINITY, f64::max);
        if !lmax.is_finite() {
            if lmax == f64::NEG_INFINITY {
                return Ok(Derivative { ln_abs: f64::NEG_INFINITY, sign: 1.0, cond: 0.0 });
            }
            return Err(Error::NoConvergence("function overflows on the Cauchy circle".into()));
        }
        let s: Complex64 = pts.iter().map(|(th, l)| (l - lmax).exp() * Complex64::from_polar(1.0, -(n as f64) * th)).sum::<Complex64>() / m as f64;
        if let Some((pmax, ps)) = prev {
            let ps = ps * (pmax - lmax).exp();
            let diff = (s.re - ps.re).abs();
            if diff <= 1e-8 * s.re.abs() + 1e-14 {
                let ln_abs = s.re.abs().ln() + lmax + ln_factorial(n as u64) - n as f64 * r.ln();
                return Ok(Derivative { ln_abs, sign: if s.re < 0.0 { -1.0 } else { 1.0 }, cond: -s.re.abs().ln() });
            }
        }
        if 2 * m > MAX_NODES {
            return Err(Error::NoConvergence(format!("Cauchy sum for order {n} at {x} unsettled after {m} nodes")));
        }
        prev = Some((lmax, s));
        let mut extra = eval(m, true)?;
        // Interleave so node j sits at angle 2 pi j / 2m.
        let mut merged = Vec::with_capacity(2 * m);
        for (a, b) in pts.drain(..).zip(extra.drain(..)) {
            merged.push(a);
            merged.push(b);
        }
        pts = merged;
    }
}

/// `psi^{(n)}(t)` by a Cauchy integral of radius `radius` around `t > 0`.
pub fn contour_derivative(phase: &Phase, t: f64, n: u32, radius: f64) -> Result<Derivative> {
    if n > N_CAP {
        return domain(format!("derivative order {n} above {N_CAP}"));
    }
    if !(t > 0.0) {
        return domain("contour_derivative needs t > 0");
    }
    if matches!(phase.spec(), PhaseSpec::PlateauPhase { .. }) {
        return domain("PlateauPhase is not analytic off the real axis");
    }
    if phase.is_flat() && radius >= t {
        return domain(format!("radius {radius} reaches the singularity at 0 from t = {t}"));
    }
    if radius < 1e-9 * t {
        return Err(Error::NoConvergence(format!("radius {radius} at t = {t} is below working precision")));
    }
    cauchy_ln(&|z| phase.ln_complex(z), t, n, radius)
}

/// Largest acceptable conditioning, about `1e-9` relative round-off.
const MAX_COND: f64 = 16.0;
/// Fallback near zeros of the derivative, about `1e-3` relative.
const ACCEPT_COND: f64 = 30.0;

/// `psi^{(n)}(t)` starting from [`auto_radius`] and halving the radius while
/// the Cauchy sum is badly conditioned. Near a zero of the derivative the
/// best-conditioned attempt is accepted up to [`ACCEPT_COND`].
pub fn robust_derivative(phase: &Phase, t: f64, n: u32) -> Result<Derivative> {
    let mut r = auto_radius(phase, t, n);
    let mut best: Option<Derivative> = None;
    for _ in 0..40 {
        match contour_derivative(phase, t, n, r) {
            Ok(d) => {
                if d.cond <= MAX_COND {
                    return Ok(d);
                }
                if best.map_or(true, |b| d.cond < b.cond) {
                    best = Some(d);
                }
            }
            Err(Error::NoConvergence(_)) if best.is_some() => break,
            Err(Error::NoConvergence(_)) => {}
            Err(e) => return Err(e),
        }
        r *= 0.5;
    }
    if let Some(b) = best.filter(|b| b.cond <= ACCEPT_COND) {
        return Ok(b);
    }
    Err(Error::NoConvergence(format!(
        "order {n} at t = {t}: best Cauchy conditioning e^{:.1} exceeds e^{MAX_COND}",
        best.map_or(f64::INFINITY, |b| b.cond)
    )))
}

/// Radius near the saddle of the Cauchy integrand, `min(0.4 t, max(n,1)/|d/dt ln psi|)`.
pub fn auto_radius(phase: &Phase, t: f64, n: u32) -> f64 {
    let h = 1e-6 * t;
    let slope = match (phase.ln_complex(Complex64::new(t + h, 0.0)), phase.ln_complex(Complex64::new(t - h, 0.0))) {
        (Ok(a), Ok(b)) => ((a - b) / (2.0 * h)).norm(),
        _ => 0.0,
    };
    let base = 0.4 * t;
    if slope > 0.0 && slope.is_finite() {
        base.min(n.max(1) as f64 / slope)
    } else {
        base
    }
}

/// Derivatives `f'(u), ..., f^{(n)}(u)` of `f = ln g` for `psi(t) = g(log 1/t)`.
fn log_profile_derivatives(phase: &Phase, u: f64, n: usize) -> Result<Vec<f64>> {
    match phase.spec() {
        PhaseSpec::LogPower { alpha, .. } => {
            let beta = alpha / (alpha - 1.0);
            // f = -u^beta
            let mut out = Vec::with_capacity(n);
            let mut coef = 1.0;
            for j in 1..=n {
                coef *= beta - (j as f64 - 1.0);
                out.push(-coef * u.powf(beta - j as f64));
            }
            Ok(out)
        }
        PhaseSpec::Intermediate { k, alpha, .. } => {
            // f = -Q(u), Q(u) = u L_{k-1}(u)^{1/alpha}; Q is analytic and positive near u.
            let (k, alpha) = (*k, *alpha);
            let q = move |z: Complex64| -> Result<Complex64> {
                let mut l = z;
                for _ in 0..(k - 1) {
                    l = l.ln();
                }
                Ok((z * (l.ln() / alpha).exp()).ln())
            };
            let mut lu = u;
            for _ in 0..(k - 2) {
                lu = lu.ln();
            }
            let r = 0.25 * lu.ln().min(1.0) * u / (1.0 + u);
            (1..=n as u32).map(|j| cauchy_ln(&q, u, j, r.max(1e-3)).map(|d| -d.value())).collect()
        }
        _ => domain("the triangle route is implemented for LogPower and Intermediate"),
    }
}

/// Complete Bell polynomials `Y_0..=Y_n(x_1, ..., x_n)`, so that `(e^f)^{(k)} = e^f Y_k(f', ..., f^{(k)})`.
pub fn complete_bell(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut y = vec![1.0; n + 1];
    for m in 0..n {
        let mut acc = 0.0;
        let mut binom = 1.0;
        for i in 0..=m {
            acc += binom * y[m - i] * x[i];
            binom = binom * (m - i) as f64 / (i + 1) as f64;
        }
        y[m + 1] = acc;
    }
    y
}

/// `psi^{(n)}(t)` through the triangle: `t^{-n} sum_k a_{n,k} g^{(k)}(u)`,
/// with `g^{(k)} = g Y_k(f', ..., f^{(k)})`.
pub fn triangle_derivative(phase: &Phase, triangle: &LogDerivTriangle, t: f64, n: usize) -> Result<Derivative> {
    if n == 0 || n > triangle.n_max() {
        return domain(format!("triangle derivative order {n} outside 1..={}", triangle.n_max()));
    }
    let u = -t.ln();
    let f = log_profile_derivatives(phase, u, n)?;
    let y = complete_bell(&f);
    let ln_g = phase.ln_complex(Complex64::new(t, 0.0))?.re;
    let s: f64 = (1..=n).map(|k| triangle.get(n, k).to_f64().unwrap_or(f64::NAN) * y[k]).sum();
    Ok(Derivative { ln_abs: s.abs().ln() + ln_g - n as f64 * t.ln(), sign: s.signum(), cond: 0.0 })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoPathRow {
    pub n: usize,
    pub t: f64,
    pub contour: f64,
    pub triangle: f64,
    pub rel_err: f64,
}

/// Compares the two derivative routes on a grid.
pub fn two_path_agreement(phase: &Phase, n_max: usize, t_grid: &[f64]) -> Result<Vec<TwoPathRow>> {
    let tri = build_triangle(n_max)?;
    let mut rows = Vec::new();
    for &t in t_grid {
        for n in 1..=n_max {
            let c = contour_derivative(phase, t, n as u32, 0.4 * t)?;
            let d = triangle_derivative(phase, &tri, t, n)?;
            let (cv, dv) = (c.value(), d.value());
            let rel_err = ((c.ln_abs - d.ln_abs).exp_m1().abs()).max(if c.sign == d.sign { 0.0 } else { 2.0 });
            rows.push(TwoPathRow { n, t, contour: cv, triangle: dv, rel_err });
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MembershipRow {
    pub n: u32,
    /// `ln sup_grid |psi^{(n)}|`
    pub sup_abs_deriv_ln: f64,
    pub log_mn: f64,
    /// `(sup / M_n)^{1/(n+1)}`
    pub k_hat_n: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MembershipReport {
    pub k_hat: f64,
    pub rows: Vec<MembershipRow>,
    /// Last five `k_hat_n` within 20% of each other, or nonincreasing.
    pub stable: bool,
}

impl MembershipReport {
    pub fn k_hat_at(&self, n: u32) -> Option<f64> {
        self.rows.iter().find(|r| r.n == n).map(|r| r.k_hat_n)
    }
}

const STABILITY_WINDOW: usize = 5;
const STABILITY_SPREAD: f64 = 1.2;

/// Empirical class constant: `K_hat = max_n (sup_grid |psi^{(n)}| / M_n)^{1/(n+1)}`.
pub fn verify_membership(phase: &Phase, m: &CarlemanFamily, n_range: std::ops::RangeInclusive<u32>, t_grid: &[f64]) -> Result<MembershipReport> {
    if *n_range.end() > N_CAP {
        return domain(format!("membership orders must be <= {N_CAP}"));
    }
    if t_grid.is_empty() || t_grid.iter().any(|&t| !(t > 0.0 && t <= phase.domain_radius())) {
        return domain("membership grid must lie in (0, R]");
    }
    let rows = n_range
        .clone()
        .map(|n| {
            let sup = t_grid
                .par_iter()
                .map(|&t| {
                    if n == 0 {
                        return Ok(phase.ln_complex(Complex64::new(t, 0.0))?.re);
                    }
                    Ok(robust_derivative(phase, t, n)?.ln_abs)
                })
                .collect::<Result<Vec<f64>>>()?
                .into_iter()
                .fold(f64::NEG_INFINITY, f64::max);
            let log_mn = m.log_m(n as u64);
            let k_hat_n = ((sup - log_mn) / (n as f64 + 1.0)).exp();
            Ok(MembershipRow { n, sup_abs_deriv_ln: sup, log_mn, k_hat_n })
        })
        .collect::<Result<Vec<_>>>()?;
    let k_hat = rows.iter().map(|r| r.k_hat_n).fold(0.0, f64::max);
    // A settled or nonincreasing tail; a decreasing tail leaves the maximum in force.
    let stable = rows.len() >= STABILITY_WINDOW && {
        let tail = &rows[rows.len() - STABILITY_WINDOW..];
        let lo = tail.iter().map(|r| r.k_hat_n).fold(f64::INFINITY, f64::min);
        let hi = tail.iter().map(|r| r.k_hat_n).fold(0.0, f64::max);
        hi <= STABILITY_SPREAD * lo || tail.windows(2).all(|w| w[1].k_hat_n <= w[0].k_hat_n)
    };
    Ok(MembershipReport { k_hat, rows, stable })
}

/// Log-spaced grid on `[lo, hi]`.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..count).map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp()).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantFit {
    /// Smallest constant making the bound hold at order `k`, per `k`.
    pub per_order: Vec<(u32, f64)>,
    pub constant: f64,
    pub within_limit: bool,
}

fn fit_constant(per_order: Vec<(u32, f64)>, limit: f64) -> ConstantFit {
    let constant = per_order.iter().map(|p| p.1).fold(0.0, f64::max);
    ConstantFit { per_order, constant, within_limit: constant.is_finite() && constant <= limit }
}

/// Smallest `C_0` with `|g^{(k)}(u)| <= C_0^k k! k^k u^{(beta-1)k} e^{-u^beta}`
/// for `g = e^{-u^beta}` on the grid, per order.
pub fn gk_bound_check(beta: f64, k_range: std::ops::RangeInclusive<u32>, u_grid: &[f64]) -> Result<ConstantFit> {
    if !(beta > 1.0) || *k_range.start() == 0 || *k_range.end() > 15 || u_grid.iter().any(|&u| u < 1.0) {
        return domain("gk_bound_check needs beta > 1, 1 <= k <= 15, u >= 1");
    }
    let ln_g = move |z: Complex64| Ok(-(beta * z.ln()).exp());
    let per_order = k_range
        .map(|k| {
            let kf = k as f64;
            let c = u_grid
                .iter()
                .map(|&u| {
                    let r = 0.5 * (kf / (beta * u.powf(beta - 1.0))).min(1.0);
                    let d = cauchy_ln(&ln_g, u, k, r)?;
                    let ln_bound = ln_factorial(k as u64) + kf * kf.ln() + (beta - 1.0) * kf * u.ln() - u.powf(beta);
                    Ok(((d.ln_abs - ln_bound) / kf).exp())
                })
                .collect::<Result<Vec<f64>>>()?
                .into_iter()
                .fold(0.0, f64::max);
            Ok((k, c))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(fit_constant(per_order, 100.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AqReport {
    /// Max relative gap between `A + u A'` and `A (1 + 1/(alpha L_1...L_{k-1}))`.
    pub identity_rel_err: f64,
    /// Max relative gap between the identity and a Cauchy derivative of `Q`.
    pub numeric_rel_err: f64,
    /// `Q'(u)/A(u)` at each grid point.
    pub correction: Vec<f64>,
}

/// Checks `Q'(u) = A(u)(1 + 1/(alpha L_1(u)...L_{k-1}(u)))` with `A = L_{k-1}^{1/alpha}`, `Q = u A`.
pub fn aq_check(k: u32, alpha: f64, u_grid: &[f64]) -> Result<AqReport> {
    if k < 2 || !(alpha > 0.0) {
        return domain("aq_check needs k >= 2, alpha > 0");
    }
    let mut identity_rel_err: f64 = 0.0;
    let mut numeric_rel_err: f64 = 0.0;
    let mut correction = Vec::with_capacity(u_grid.len());
    for &u in u_grid {
        let mut logs = vec![u];
        for _ in 0..(k - 1) {
            let l = logs.last().expect("nonempty").ln();
            logs.push(l);
        }
        let lk1 = logs[k as usize - 1];
        if !(lk1 >= 2.0) {
            return domain(format!("aq_check needs L_{{k-1}}(u) >= 2 at u = {u}"));
        }
        let a = lk1.powf(1.0 / alpha);
        let chain: f64 = logs[1..].iter().product();
        // A' = (1/alpha) L_{k-1}^{1/alpha - 1} L_{k-1}', L_{k-1}' = 1/(u L_1 ... L_{k-2})
        let inner: f64 = logs[1..k as usize - 1].iter().product();
        let a_prime = lk1.powf(1.0 / alpha - 1.0) / (alpha * u * inner);
        let lhs = a + u * a_prime;
        let rhs = a * (1.0 + 1.0 / (alpha * chain));
        identity_rel_err = identity_rel_err.max((lhs - rhs).abs() / rhs);
        let q = move |z: Complex64| -> Result<Complex64> {
            let mut l = z;
            for _ in 0..(k - 1) {
                l = l.ln();
            }
            Ok((z * (l.ln() / alpha).exp()).ln())
        };
        let d = cauchy_ln(&q, u, 1, 0.25 * u.min(lk1))?;
        numeric_rel_err = numeric_rel_err.max((d.value() - rhs).abs() / rhs);
        correction.push(rhs / a);
    }
    Ok(AqReport { identity_rel_err, numeric_rel_err, correction })
}

/// Fitted `C` in `|g^{(r)}(u)| <= C^r (r!)^2 A(u)^r e^{-Q(u)}` for the
/// intermediate profile `g = e^{-Q}`, per order.
pub fn lem_g_check(k: u32, alpha: f64, r_range: std::ops::RangeInclusive<u32>, u_grid: &[f64]) -> Result<ConstantFit> {
    let phase = PhaseSpec::Intermediate { k, alpha, delta: None }.compile()?;
    let per_order = r_range
        .map(|r| {
            let rf = r as f64;
            let c = u_grid
                .iter()
                .map(|&u| {
                    let f = log_profile_derivatives(&phase, u, r as usize)?;
                    let y = complete_bell(&f);
                    let mut l = u;
                    for _ in 0..(k - 1) {
                        l = l.ln();
                    }
                    let a = l.powf(1.0 / alpha);
                    // g^{(r)} / e^{-Q} = Y_r
                    let ratio = y[r as usize].abs().ln() - 2.0 * ln_factorial(r as u64) - rf * a.ln();
                    Ok((ratio / rf).exp())
                })
                .collect::<Result<Vec<f64>>>()?
                .into_iter()
                .fold(0.0, f64::max);
            Ok((r, c))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(fit_constant(per_order, f64::INFINITY))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterExpBoundRow {
    pub k: u32,
    pub r: u32,
    pub x: f64,
    /// `E_k^{(r)}(x) / (r! A_k^r M_k(x)^r E_k(x))`; the bound holds when `<= 1`.
    pub ratio: f64,
}

/// `E_k^{(r)}(x) <= r! A_k^r M_k(x)^r E_k(x)` with `A_1 = 1`, `A_k = 2e A_{k-1}`,
/// `M_k = E_1 ... E_{k-1}`, by Cauchy integrals of `E_k`.
pub fn iter_exp_bound_check(k_max: u32, r_max: u32, x_grid: &[f64]) -> Result<Vec<IterExpBoundRow>> {
    if k_max == 0 || k_max > 3 || r_max > 15 {
        return domain("iter_exp_bound_check supports k <= 3, r <= 15");
    }
    let mut rows = Vec::new();
    for k in 1..=k_max {
        let a_k = (2.0 * E).powi(k as i32 - 1);
        for &x in x_grid {
            if x < 1.0 {
                return domain("iter_exp_bound_check needs x >= 1");
            }
            // ln M_k = sum_{j<k} ln E_j = sum_{j<k} E_{j-1}
            let ln_mk: f64 = (1..k).map(|j| iter_exp(j - 1, x)).sum::<Result<f64>>()?;
            // ln E_k(x) = E_{k-1}(x)
            let ln_ek = iter_exp(k - 1, x)?;
            let ln_f = move |z: Complex64| -> Result<Complex64> {
                let mut v = z;
                for _ in 0..(k - 1) {
                    v = v.exp();
                }
                Ok(v)
            };
            for r in 1..=r_max {
                // (ln E_k)' = M_k, so the saddle radius is r / M_k.
                let radius = r as f64 * (-ln_mk).exp();
                let d = cauchy_ln(&ln_f, x, r, radius)?;
                let ln_bound = ln_factorial(r as u64) + r as f64 * (a_k.ln() + ln_mk) + ln_ek;
                rows.push(IterExpBoundRow { k, r, x, ratio: (d.ln_abs - ln_bound).exp() });
            }
        }
    }
    Ok(rows)
}

/// Normalized forward differences `Delta_h^n psi(0) / h^n` for `n` in `orders` and each step `h`.
pub fn flat_point_differences(phase: &Phase, orders: std::ops::RangeInclusive<u32>, steps: &[f64]) -> Result<Vec<(u32, Vec<f64>)>> {
    if !phase.is_flat() {
        return domain("flat_point_differences needs a flat phase");
    }
    orders
        .map(|n| {
            let vals = steps
                .iter()
                .map(|&h| {
                    let mut acc = 0.0;
                    let mut binom = 1.0;
                    for j in 0..=n {
                        let sign = if (n - j) % 2 == 0 { 1.0 } else { -1.0 };
                        acc += sign * binom * phase.eval(j as f64 * h)?;
                        binom = binom * (n - j) as f64 / (j + 1) as f64;
                    }
                    Ok(acc / h.powi(n as i32))
                })
                .collect::<Result<Vec<f64>>>()?;
            Ok((n, vals))
        })
        .collect()
}

/// `|a_{n,k}|` sums as floating values, for reporting.
pub fn triangle_abs_sums(triangle: &LogDerivTriangle) -> Vec<f64> {
    (1..=triangle.n_max()).map(|n| triangle.abs_sum(n).to_f64().unwrap_or(f64::INFINITY)).collect()
}
