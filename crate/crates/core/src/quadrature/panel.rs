//! Gauss-Legendre rules and the linear-phase Filon panel.
//!
//! A panel integrand is `amp(t) * exp(i * theta(t))`. The phase is split as
//! `theta = c0 + kappa * x + rho(x)` on the reference interval, the slowly
//! varying part `amp * exp(i rho)` is expanded in Legendre polynomials, and
//! each mode is integrated against `exp(i kappa x)` exactly through spherical
//! Bessel functions.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::LazyLock;

use num_complex::Complex64;

pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    /// `legendre[i][k] = P_k(nodes[i])` for `k < n`.
    pub legendre: Vec<Vec<f64>>,
}

pub static GL8: LazyLock<Rule> = LazyLock::new(|| gauss_legendre(8));
pub static GL16: LazyLock<Rule> = LazyLock::new(|| gauss_legendre(16));

pub fn gauss_legendre(n: usize) -> Rule {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        dp = if d != 0.0 { d } else { dp };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    let legendre = nodes
        .iter()
        .map(|&x| {
            let mut row = vec![0.0; n];
            legendre_all(x, &mut row);
            row
        })
        .collect();
    Rule { nodes, weights, legendre }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Fills `out[k] = P_k(x)`.
pub fn legendre_all(x: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    out[0] = 1.0;
    if out.len() > 1 {
        out[1] = x;
    }
    for k in 2..out.len() {
        let kf = k as f64;
        out[k] = ((2.0 * kf - 1.0) * x * out[k - 1] - (kf - 1.0) * out[k - 2]) / kf;
    }
}

/// Fills `out[k] = j_k(w)`, spherical Bessel functions of the first kind.
pub fn sph_bessel_all(w: f64, out: &mut [f64]) {
    let n = out.len();
    if n == 0 {
        return;
    }
    let sign_flip = w < 0.0;
    let w = w.abs();
    if w < 0.5 {
        // Series: j_k(w) = w^k/(2k+1)!! * sum_m (-w^2/2)^m / (m! (2k+3)(2k+5)...(2k+2m+1))
        let mut lead = 1.0;
        for (k, o) in out.iter_mut().enumerate() {
            if k > 0 {
                lead *= w / (2 * k + 1) as f64;
            }
            let mut term = 1.0;
            let mut sum = 1.0;
            for m in 1..30 {
                term *= -w * w / (2.0 * m as f64 * (2 * k + 2 * m + 1) as f64);
                sum += term;
                if term.abs() < 1e-18 * sum.abs() {
                    break;
                }
            }
            *o = lead * sum;
        }
    } else if w > n as f64 {
        let (s, c) = w.sin_cos();
        out[0] = s / w;
        if n > 1 {
            out[1] = s / (w * w) - c / w;
        }
        for k in 1..n - 1 {
            out[k + 1] = (2 * k + 1) as f64 / w * out[k] - out[k - 1];
        }
    } else {
        // Miller backward recurrence, normalized against j_0 or j_1.
        let start = n + 20 + w as usize;
        let mut jp1 = 0.0;
        let mut j = 1e-300;
        let mut tmp = vec![0.0; start + 1];
        tmp[start] = j;
        for k in (1..=start).rev() {
            let jm1 = (2 * k + 1) as f64 / w * j - jp1;
            jp1 = j;
            j = jm1;
            tmp[k - 1] = j;
            if j.abs() > 1e250 {
                for t in tmp[k - 1..].iter_mut() {
                    *t *= 1e-250;
                }
                j *= 1e-250;
                jp1 *= 1e-250;
            }
        }
        let (s, c) = w.sin_cos();
        let j0 = s / w;
        let j1 = s / (w * w) - c / w;
        let scale = if j0.abs() >= j1.abs() { j0 / tmp[0] } else { j1 / tmp[1] };
        for k in 0..n {
            out[k] = tmp[k] * scale;
        }
    }
    if sign_flip {
        for (k, o) in out.iter_mut().enumerate() {
            if k % 2 == 1 {
                *o = -*o;
            }
        }
    }
}

/// `i^k * 2 * j_k(kappa)` for `k < n`: the exact integral of `exp(i kappa x) P_k(x)` over [-1, 1].
fn mode_integrals(kappa: f64, out: &mut [Complex64]) {
    let mut j = [0.0; 16];
    let n = out.len();
    sph_bessel_all(kappa, &mut j[..n]);
    let ipow = [
        Complex64::new(1.0, 0.0),
        Complex64::new(0.0, 1.0),
        Complex64::new(-1.0, 0.0),
        Complex64::new(0.0, -1.0),
    ];
    for k in 0..n {
        out[k] = ipow[k % 4] * (2.0 * j[k]);
    }
}

#[derive(Debug, Clone, Copy)]
pub struct PanelEval {
    pub fine: Complex64,
    pub coarse: Complex64,
    /// Spread of the nonlinear phase residual over the fine nodes.
    pub residual_range: f64,
    pub nodes: usize,
}

impl PanelEval {
    pub fn error(&self) -> f64 {
        (self.fine - self.coarse).norm()
    }
}

fn filon_rule(
    rule: &Rule,
    mid: f64,
    half: f64,
    c0: f64,
    kappa: f64,
    amp: &dyn Fn(f64) -> f64,
    theta: &dyn Fn(f64) -> f64,
) -> (Complex64, f64) {
    let n = rule.nodes.len();
    let mut coef = [Complex64::new(0.0, 0.0); 16];
    let mut rmin = f64::INFINITY;
    let mut rmax = f64::NEG_INFINITY;
    for i in 0..n {
        let x = rule.nodes[i];
        let t = mid + half * x;
        let rho = theta(t) - c0 - kappa * x;
        rmin = rmin.min(rho);
        rmax = rmax.max(rho);
        let a = Complex64::from_polar(amp(t), rho) * rule.weights[i];
        for k in 0..n {
            coef[k] += a * rule.legendre[i][k];
        }
    }
    let mut modes = [Complex64::new(0.0, 0.0); 16];
    mode_integrals(kappa, &mut modes[..n]);
    let mut sum = Complex64::new(0.0, 0.0);
    for k in 0..n {
        sum += coef[k] * ((2 * k + 1) as f64 / 2.0) * modes[k];
    }
    (sum * Complex64::from_polar(half, c0), rmax - rmin)
}

/// Filon panel on `[a, b]` with 16- and 8-node expansions.
pub fn filon_panel(a: f64, b: f64, amp: &dyn Fn(f64) -> f64, theta: &dyn Fn(f64) -> f64) -> PanelEval {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let ta = theta(a);
    let tb = theta(b);
    let c0 = 0.5 * (ta + tb);
    let kappa = 0.5 * (tb - ta);
    let (fine, range) = filon_rule(&GL16, mid, half, c0, kappa, amp, theta);
    let (coarse, _) = filon_rule(&GL8, mid, half, c0, kappa, amp, theta);
    PanelEval { fine, coarse, residual_range: range, nodes: 26 }
}

/// Plain Gauss-Legendre panel on a complex integrand.
pub fn gl_panel(a: f64, b: f64, f: &dyn Fn(f64) -> Complex64) -> PanelEval {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let apply = |rule: &Rule| {
        let mut s = Complex64::new(0.0, 0.0);
        for (x, w) in rule.nodes.iter().zip(&rule.weights) {
            s += f(mid + half * x) * *w;
        }
        s * half
    };
    PanelEval { fine: apply(&GL16), coarse: apply(&GL8), residual_range: 0.0, nodes: 24 }
}

/// Neumaier-compensated complex accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    re: (f64, f64),
    im: (f64, f64),
}

fn neumaier(acc: &mut (f64, f64), x: f64) {
    let (s, c) = *acc;
    let t = s + x;
    let c = if s.abs() >= x.abs() { c + ((s - t) + x) } else { c + ((x - t) + s) };
    *acc = (t, c);
}

impl CompensatedSum {
    pub fn add(&mut self, z: Complex64) {
        neumaier(&mut self.re, z.re);
        neumaier(&mut self.im, z.im);
    }
    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re.0 + self.re.1, self.im.0 + self.im.1)
    }
}

/// Shared node counter with a hard budget.
pub struct NodeBudget {
    used: AtomicUsize,
    limit: usize,
}

impl NodeBudget {
    pub fn new(limit: usize) -> Self {
        NodeBudget { used: AtomicUsize::new(0), limit }
    }

    /// Reserves `n` nodes; false once the budget is spent.
    pub fn take(&self, n: usize) -> bool {
        self.used.fetch_add(n, Ordering::Relaxed) < self.limit
    }

    pub fn used(&self) -> usize {
        self.used.load(Ordering::Relaxed).min(self.limit)
    }

    pub fn exhausted(&self) -> bool {
        self.used.load(Ordering::Relaxed) >= self.limit
    }
}

/// Result of an adaptive integration over one interval.
#[derive(Debug, Clone, Copy)]
pub struct Integral {
    pub value: Complex64,
    pub error: f64,
    pub complete: bool,
}

fn initial_stack(a: f64, b: f64, n0: usize) -> Vec<(f64, f64)> {
    let n0 = n0.max(1);
    (0..n0)
        .rev()
        .map(|i| {
            let lo = a + (b - a) * i as f64 / n0 as f64;
            let hi = if i + 1 == n0 { b } else { a + (b - a) * (i + 1) as f64 / n0 as f64 };
            (lo, hi)
        })
        .collect()
}

/// Adaptive Filon integration of `amp * exp(i theta)` over `[a, b]`.
///
/// A panel is split when the 8/16 discrepancy exceeds its share of `tol`
/// or when the nonlinear phase residual spans more than `max_residual`.
pub fn adaptive_filon(
    a: f64,
    b: f64,
    initial_panels: usize,
    amp: &dyn Fn(f64) -> f64,
    theta: &dyn Fn(f64) -> f64,
    tol: f64,
    max_residual: f64,
    budget: &NodeBudget,
) -> Integral {
    let total = b - a;
    let mut sum = CompensatedSum::default();
    let mut err = 0.0;
    let mut stack = initial_stack(a, b, initial_panels);
    let mut complete = true;
    while let Some((lo, hi)) = stack.pop() {
        if !budget.take(26) {
            complete = false;
            break;
        }
        let p = filon_panel(lo, hi, amp, theta);
        let local_tol = tol * (hi - lo) / total;
        let tiny = (hi - lo) <= 1e-13 * hi.abs().max(lo.abs());
        if !tiny && (p.residual_range > max_residual || p.error() > local_tol) {
            let m = 0.5 * (lo + hi);
            stack.push((m, hi));
            stack.push((lo, m));
        } else {
            sum.add(p.fine);
            err += p.error();
        }
    }
    Integral { value: sum.value(), error: err, complete }
}

/// Adaptive Gauss-Legendre on a complex integrand.
pub fn adaptive_gl(a: f64, b: f64, f: &dyn Fn(f64) -> Complex64, tol: f64, budget: &NodeBudget) -> Integral {
    let total = b - a;
    let mut sum = CompensatedSum::default();
    let mut err = 0.0;
    let mut stack = vec![(a, b)];
    let mut complete = true;
    while let Some((lo, hi)) = stack.pop() {
        if !budget.take(24) {
            complete = false;
            break;
        }
        let p = gl_panel(lo, hi, f);
        let local_tol = tol * (hi - lo) / total;
        let tiny = (hi - lo) <= 1e-13 * hi.abs().max(lo.abs());
        if !tiny && p.error() > local_tol {
            let m = 0.5 * (lo + hi);
            stack.push((m, hi));
            stack.push((lo, m));
        } else {
            sum.add(p.fine);
            err += p.error();
        }
    }
    Integral { value: sum.value(), error: err, complete }
}
