//! The phase catalog, the odd part `phi(t) = psi(t) - psi(-t)`, and the
//! substitution weights that push `dt/t` forward under `u = psi(t)`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::envelopes::{iter_exp, iter_log};
use crate::error::{domain, Error, Result};
use crate::magnitude::Magnitude;
use crate::plateau::{build_ladder, minimal_j0, OddProductLadder};

/// Smooth bump with `eta = 1` on [3/5, 4/5] and support in (1/2, 1).
///
/// `eta(x) = S(left_rate (x - 1/2)) * S(right_rate (1 - x))` with the standard
/// smooth step `S`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BumpSpec {
    pub left_rate: f64,
    pub right_rate: f64,
}

impl Default for BumpSpec {
    fn default() -> Self {
        BumpSpec { left_rate: 10.0, right_rate: 5.0 }
    }
}

fn step_b(x: f64) -> f64 {
    if x > 0.0 {
        (-1.0 / x).exp()
    } else {
        0.0
    }
}

/// Smooth step: 0 for `x <= 0`, 1 for `x >= 1`.
pub fn smooth_step(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x >= 1.0 {
        1.0
    } else {
        let a = step_b(x);
        a / (a + step_b(1.0 - x))
    }
}

impl BumpSpec {
    fn validate(&self) -> Result<()> {
        // Rates below these would shrink the plateau below [3/5, 4/5].
        if !(self.left_rate >= 10.0 && self.right_rate >= 5.0) || !self.left_rate.is_finite() || !self.right_rate.is_finite() {
            return domain(format!("bump rates must satisfy left >= 10, right >= 5, got {self:?}"));
        }
        Ok(())
    }

    pub fn eval(&self, x: f64) -> f64 {
        if (0.6..=0.8).contains(&x) {
            return 1.0;
        }
        if x <= 0.5 || x >= 1.0 {
            return 0.0;
        }
        smooth_step(self.left_rate * (x - 0.5)) * smooth_step(self.right_rate * (1.0 - x))
    }
}

fn one() -> f64 {
    1.0
}
fn inv_e() -> f64 {
    (-1.0f64).exp()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", content = "params")]
pub enum PhaseSpec {
    /// `max(t^{alpha+1}, 0)`
    PowerPhase {
        alpha: u32,
        #[serde(default = "one")]
        domain_radius: f64,
    },
    /// `sum_j (pi/Q_j) eta(2^j t)`
    PlateauPhase {
        k: u32,
        j0: u32,
        #[serde(default)]
        bump: BumpSpec,
        #[serde(default = "one")]
        domain_radius: f64,
    },
    /// `exp(-t^{-a})`, `a = 1/(s-1)`
    GevreyFlat {
        s: f64,
        #[serde(default = "one")]
        domain_radius: f64,
    },
    /// `exp(-E_k(t^{-a}))`
    IteratedExpFlat {
        k: u32,
        s: f64,
        #[serde(default = "one")]
        domain_radius: f64,
    },
    /// `exp(-(log 1/t)^beta)`, `beta = alpha/(alpha-1)`
    LogPower {
        alpha: f64,
        #[serde(default = "inv_e")]
        domain_radius: f64,
    },
    /// `exp(-Q(log 1/t))`, `Q(u) = u L_{k-1}(u)^{1/alpha}`; the domain is `(0, delta)`.
    Intermediate {
        k: u32,
        alpha: f64,
        #[serde(default)]
        delta: Option<f64>,
    },
    /// `sum_i c_i t^i`
    Polynomial {
        coefficients: Vec<f64>,
        #[serde(default = "one")]
        domain_radius: f64,
    },
}

impl PhaseSpec {
    pub fn power(alpha: u32) -> Self {
        PhaseSpec::PowerPhase { alpha, domain_radius: 1.0 }
    }
    pub fn plateau(k: u32, j0: u32) -> Self {
        PhaseSpec::PlateauPhase { k, j0, bump: BumpSpec::default(), domain_radius: 1.0 }
    }
    pub fn gevrey(s: f64) -> Self {
        PhaseSpec::GevreyFlat { s, domain_radius: 1.0 }
    }
    pub fn iterated_exp(k: u32, s: f64) -> Self {
        PhaseSpec::IteratedExpFlat { k, s, domain_radius: 1.0 }
    }
    pub fn log_power(alpha: f64) -> Self {
        PhaseSpec::LogPower { alpha, domain_radius: inv_e() }
    }
    pub fn intermediate(k: u32, alpha: f64) -> Self {
        PhaseSpec::Intermediate { k, alpha, delta: None }
    }
    pub fn polynomial(coefficients: Vec<f64>) -> Self {
        PhaseSpec::Polynomial { coefficients, domain_radius: 1.0 }
    }

    pub fn variant_name(&self) -> &'static str {
        match self {
            PhaseSpec::PowerPhase { .. } => "PowerPhase",
            PhaseSpec::PlateauPhase { .. } => "PlateauPhase",
            PhaseSpec::GevreyFlat { .. } => "GevreyFlat",
            PhaseSpec::IteratedExpFlat { .. } => "IteratedExpFlat",
            PhaseSpec::LogPower { .. } => "LogPower",
            PhaseSpec::Intermediate { .. } => "Intermediate",
            PhaseSpec::Polynomial { .. } => "Polynomial",
        }
    }

    pub fn compile(&self) -> Result<Phase> {
        Phase::new(self.clone())
    }
}

impl fmt::Display for PhaseSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PhaseSpec::PowerPhase { alpha, domain_radius } => write!(f, "power:alpha={alpha},R={domain_radius}"),
            PhaseSpec::PlateauPhase { k, j0, .. } => write!(f, "plateau:k={k},j0={j0}"),
            PhaseSpec::GevreyFlat { s, domain_radius } => write!(f, "gevrey:s={s},R={domain_radius}"),
            PhaseSpec::IteratedExpFlat { k, s, domain_radius } => write!(f, "iterexp:k={k},s={s},R={domain_radius}"),
            PhaseSpec::LogPower { alpha, domain_radius } => write!(f, "logpower:alpha={alpha},R={domain_radius}"),
            PhaseSpec::Intermediate { k, alpha, .. } => write!(f, "intermediate:k={k},alpha={alpha}"),
            PhaseSpec::Polynomial { coefficients, domain_radius } => {
                let c: Vec<String> = coefficients.iter().map(|c| c.to_string()).collect();
                write!(f, "poly:{};R={domain_radius}", c.join(","))
            }
        }
    }
}

/// Parses either a JSON object or the short form `name:key=value,...`
/// (`poly:c0,c1,...[;R=r]` for polynomials).
impl FromStr for PhaseSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.starts_with('{') {
            return serde_json::from_str(s).map_err(|e| Error::Domain(format!("bad phase JSON: {e}")));
        }
        let (name, rest) = s.split_once(':').unwrap_or((s, ""));
        let name = name.to_ascii_lowercase();
        if name == "poly" || name == "polynomial" {
            let (coefs, radius) = match rest.split_once(';') {
                Some((c, r)) => (c, Some(r)),
                None => (rest, None),
            };
            let coefficients = coefs
                .split(',')
                .filter(|x| !x.trim().is_empty())
                .map(|x| x.trim().parse::<f64>().map_err(|e| Error::Domain(format!("bad coefficient {x:?}: {e}"))))
                .collect::<Result<Vec<_>>>()?;
            let domain_radius = match radius {
                Some(r) => parse_kv(r)?.get_f64("r")?.unwrap_or(1.0),
                None => 1.0,
            };
            return Ok(PhaseSpec::Polynomial { coefficients, domain_radius });
        }
        let kv = parse_kv(rest)?;
        let spec = match name.as_str() {
            "power" => PhaseSpec::PowerPhase {
                alpha: kv.req_u32("alpha")?,
                domain_radius: kv.get_f64("r")?.unwrap_or(1.0),
            },
            "plateau" => PhaseSpec::PlateauPhase {
                k: kv.get_u32("k")?.unwrap_or(2),
                j0: match kv.get_u32("j0")? {
                    Some(j) => j,
                    None => minimal_j0(kv.get_u32("k")?.unwrap_or(2))?,
                },
                bump: BumpSpec::default(),
                domain_radius: 1.0,
            },
            "gevrey" => PhaseSpec::GevreyFlat { s: kv.req_f64("s")?, domain_radius: kv.get_f64("r")?.unwrap_or(1.0) },
            "iterexp" | "iteratedexp" => PhaseSpec::IteratedExpFlat {
                k: kv.req_u32("k")?,
                s: kv.req_f64("s")?,
                domain_radius: kv.get_f64("r")?.unwrap_or(1.0),
            },
            "logpower" => PhaseSpec::LogPower {
                alpha: kv.req_f64("alpha")?,
                domain_radius: kv.get_f64("r")?.unwrap_or(inv_e()),
            },
            "intermediate" => PhaseSpec::Intermediate {
                k: kv.req_u32("k")?,
                alpha: kv.req_f64("alpha")?,
                delta: kv.get_f64("delta")?,
            },
            other => return domain(format!("unknown phase {other:?}")),
        };
        Ok(spec)
    }
}

pub(crate) struct Kv(Vec<(String, String)>);

pub(crate) fn parse_kv(s: &str) -> Result<Kv> {
    let mut out = Vec::new();
    for part in s.split(',').filter(|p| !p.trim().is_empty()) {
        let (k, v) = part.split_once('=').ok_or_else(|| Error::Domain(format!("expected key=value, got {part:?}")))?;
        out.push((k.trim().to_ascii_lowercase(), v.trim().to_string()));
    }
    Ok(Kv(out))
}

impl Kv {
    fn raw(&self, key: &str) -> Option<&str> {
        self.0.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }
    pub(crate) fn get_f64(&self, key: &str) -> Result<Option<f64>> {
        self.raw(key)
            .map(|v| v.parse::<f64>().map_err(|e| Error::Domain(format!("{key}={v}: {e}"))))
            .transpose()
    }
    pub(crate) fn get_u32(&self, key: &str) -> Result<Option<u32>> {
        self.raw(key)
            .map(|v| v.parse::<u32>().map_err(|e| Error::Domain(format!("{key}={v}: {e}"))))
            .transpose()
    }
    pub(crate) fn req_f64(&self, key: &str) -> Result<f64> {
        self.get_f64(key)?.ok_or_else(|| Error::Domain(format!("missing parameter {key}")))
    }
    pub(crate) fn req_u32(&self, key: &str) -> Result<u32> {
        self.get_u32(key)?.ok_or_else(|| Error::Domain(format!("missing parameter {key}")))
    }
}

#[derive(Debug, Clone)]
pub(crate) struct PlateauData {
    pub ladder: OddProductLadder,
    pub bump: BumpSpec,
    /// `a[j] = pi / Q_j` as a double; 0 once `Q_j` leaves the f64 range.
    pub a: Vec<f64>,
}

#[derive(Debug, Clone)]
pub(crate) enum Kind {
    Power { p: i32 },
    Plateau(Box<PlateauData>),
    Gevrey { a: f64 },
    IterExp { k: u32, a: f64 },
    LogPower { beta: f64 },
    Intermediate { k: u32, alpha: f64 },
    Polynomial { c: Vec<f64> },
}

/// A validated phase ready for evaluation. Immutable and `Sync`.
#[derive(Debug, Clone)]
pub struct Phase {
    spec: PhaseSpec,
    pub(crate) kind: Kind,
    radius: f64,
}

/// Number of plateau shells kept; beyond this `pi/Q_j` is far below f64 resolution.
const PLATEAU_LN_CUTOFF: f64 = 745.0;

/// `1 / exp^{(k)}(2)`: the largest `delta` with `L_j(1/t) >= 2` for `j <= k` on `(0, delta)`.
pub fn intermediate_delta(k: u32) -> Result<f64> {
    match iter_exp(k, 2.0) {
        Ok(v) => Ok(1.0 / v),
        Err(_) => domain(format!(
            "Intermediate(k={k}): delta = 1/exp^({k})(2) underflows double precision; only k = 2 is representable"
        )),
    }
}

impl Phase {
    pub fn new(spec: PhaseSpec) -> Result<Self> {
        let (kind, radius) = match &spec {
            PhaseSpec::PowerPhase { alpha, domain_radius } => {
                if *alpha == 0 {
                    return domain("PowerPhase needs alpha >= 1");
                }
                (Kind::Power { p: *alpha as i32 + 1 }, *domain_radius)
            }
            PhaseSpec::PlateauPhase { k, j0, bump, domain_radius } => {
                bump.validate()?;
                if *domain_radius != 1.0 {
                    return domain("PlateauPhase is defined on [-1, 1]; domain_radius must be 1");
                }
                let mut ladder = build_ladder(*k, *j0, 16)?;
                while ladder.ln_q(ladder.n_max()) < PLATEAU_LN_CUTOFF {
                    ladder = build_ladder(*k, *j0, ladder.n_max() * 2)?;
                }
                let a = (0..=ladder.n_max())
                    .map(|j| {
                        let l = ladder.ln_q(j);
                        if j == 0 {
                            0.0
                        } else if l < 700.0 {
                            PI / ladder.q_f64(j)
                        } else {
                            (PI.ln() - l).exp()
                        }
                    })
                    .collect();
                (Kind::Plateau(Box::new(PlateauData { ladder, bump: *bump, a })), 1.0)
            }
            PhaseSpec::GevreyFlat { s, domain_radius } => {
                if !(*s > 1.0) {
                    return domain("GevreyFlat needs s > 1");
                }
                (Kind::Gevrey { a: 1.0 / (s - 1.0) }, *domain_radius)
            }
            PhaseSpec::IteratedExpFlat { k, s, domain_radius } => {
                if *k == 0 || !(*s > 1.0) {
                    return domain("IteratedExpFlat needs k >= 1 and s > 1");
                }
                (Kind::IterExp { k: *k, a: 1.0 / (s - 1.0) }, *domain_radius)
            }
            PhaseSpec::LogPower { alpha, domain_radius } => {
                if !(*alpha > 1.0) {
                    return domain("LogPower needs alpha > 1");
                }
                if !(*domain_radius <= inv_e() * (1.0 + 1e-15)) {
                    return domain("LogPower needs domain_radius <= 1/e");
                }
                (Kind::LogPower { beta: alpha / (alpha - 1.0) }, *domain_radius)
            }
            PhaseSpec::Intermediate { k, alpha, delta } => {
                if *k < 2 || !(*alpha > 0.0) {
                    return domain("Intermediate needs k >= 2 and alpha > 0");
                }
                let max_delta = intermediate_delta(*k)?;
                let d = delta.unwrap_or(max_delta);
                if !(d > 0.0 && d <= max_delta * (1.0 + 1e-12)) {
                    return domain(format!("Intermediate delta must lie in (0, {max_delta}]"));
                }
                (Kind::Intermediate { k: *k, alpha: *alpha }, d.min(max_delta))
            }
            PhaseSpec::Polynomial { coefficients, domain_radius } => (Kind::Polynomial { c: coefficients.clone() }, *domain_radius),
        };
        if !(radius > 0.0 && radius.is_finite()) {
            return domain("domain_radius must be positive and finite");
        }
        Ok(Phase { spec, kind, radius })
    }

    pub fn spec(&self) -> &PhaseSpec {
        &self.spec
    }

    pub fn domain_radius(&self) -> f64 {
        self.radius
    }

    /// True when `psi(t) = 0` for `t <= 0`.
    pub fn is_one_sided(&self) -> bool {
        !matches!(self.kind, Kind::Polynomial { .. })
    }

    /// True for the flat-at-zero variants.
    pub fn is_flat(&self) -> bool {
        matches!(
            self.kind,
            Kind::Gevrey { .. } | Kind::IterExp { .. } | Kind::LogPower { .. } | Kind::Intermediate { .. } | Kind::Plateau(_)
        )
    }

    pub(crate) fn plateau(&self) -> Option<&PlateauData> {
        match &self.kind {
            Kind::Plateau(p) => Some(p),
            _ => None,
        }
    }

    fn check_domain(&self, t: f64) -> Result<()> {
        if t.is_nan() || t.abs() > self.radius * (1.0 + 1e-14) {
            return domain(format!("|t| = {} exceeds domain radius {}", t.abs(), self.radius));
        }
        Ok(())
    }

    /// `ln psi(t)` for a flat variant at `t > 0` (may be `-inf`).
    pub(crate) fn ln_flat(&self, t: f64) -> f64 {
        match self.kind {
            Kind::Gevrey { a } => -t.powf(-a),
            Kind::IterExp { k, a } => match iter_exp(k, t.powf(-a)) {
                Ok(v) => -v,
                Err(_) => f64::NEG_INFINITY,
            },
            Kind::LogPower { beta } => -(-t.ln()).powf(beta),
            Kind::Intermediate { k, alpha } => {
                let u = -t.ln();
                -u * intermediate_a(k, alpha, u)
            }
            _ => unreachable!("ln_flat on non-flat variant"),
        }
    }

    /// `ln(-ln psi(t))` for a smooth flat variant at `t > 0`.
    pub fn ln_neg_ln_phase(&self, t: f64) -> Result<f64> {
        if !(t > 0.0) {
            return domain("ln_neg_ln_phase needs t > 0");
        }
        self.check_domain(t)?;
        Ok(match self.kind {
            Kind::Gevrey { a } => -a * t.ln(),
            Kind::IterExp { k, a } => {
                let y = t.powf(-a);
                match iter_exp(k - 1, y) {
                    Ok(v) => v,
                    Err(Error::Overflow { .. }) => return Err(Error::Overflow { ln_value: f64::INFINITY }),
                    Err(e) => return Err(e),
                }
            }
            Kind::LogPower { beta } => beta * (-t.ln()).ln(),
            Kind::Intermediate { k, alpha } => {
                let u = -t.ln();
                u.ln() + intermediate_a(k, alpha, u).ln()
            }
            _ => return domain("ln_neg_ln_phase is only defined for the smooth flat variants"),
        })
    }

    /// `|phi(t)|` as a magnitude (flat phases underflow f64 quickly).
    pub fn phi_magnitude(&self, t: f64) -> Result<Magnitude> {
        let t = t.abs();
        self.check_domain(t)?;
        match self.kind {
            Kind::Gevrey { .. } | Kind::IterExp { .. } | Kind::LogPower { .. } | Kind::Intermediate { .. } => {
                if t == 0.0 {
                    return Ok(Magnitude::Ln(f64::NEG_INFINITY));
                }
                let l = self.ln_flat(t);
                if l.is_finite() {
                    Ok(Magnitude::Ln(l))
                } else {
                    Ok(Magnitude::from_ln_neg_ln(self.ln_neg_ln_phase(t)?))
                }
            }
            _ => Ok(Magnitude::from_value(self.phi(t)?.abs())),
        }
    }

    /// `psi(t)`.
    pub fn eval(&self, t: f64) -> Result<f64> {
        self.check_domain(t)?;
        Ok(self.eval_unchecked(t))
    }

    pub(crate) fn eval_unchecked(&self, t: f64) -> f64 {
        match &self.kind {
            Kind::Polynomial { c } => c.iter().rev().fold(0.0, |acc, &ci| acc * t + ci),
            _ if t <= 0.0 => 0.0,
            Kind::Power { p } => t.powi(*p),
            Kind::Plateau(pd) => plateau_eval(pd, t),
            _ => self.ln_flat(t).exp(),
        }
    }

    /// `phi(t) = psi(t) - psi(-t)`, odd by construction.
    pub fn phi(&self, t: f64) -> Result<f64> {
        self.check_domain(t)?;
        Ok(self.phi_unchecked(t))
    }

    pub(crate) fn phi_unchecked(&self, t: f64) -> f64 {
        if t < 0.0 {
            return -self.phi_unchecked(-t);
        }
        if t == 0.0 {
            return 0.0;
        }
        match &self.kind {
            Kind::Polynomial { c } => {
                // Odd part doubled, summed directly to keep exact oddness.
                let mut acc = 0.0;
                for (i, &ci) in c.iter().enumerate().rev() {
                    acc *= t;
                    if i % 2 == 1 {
                        acc += 2.0 * ci;
                    }
                }
                acc
            }
            _ => self.eval_unchecked(t),
        }
    }

    /// Exact plateau check at a rational point: `Some(1/Q_j)` (the coefficient of
    /// pi) when `t` lies in `J_j = [3/(5 2^j), 4/(5 2^j)]`, `None` elsewhere.
    pub fn plateau_coefficient_exact(&self, t: &BigRational) -> Result<Option<BigRational>> {
        let pd = self.plateau().ok_or_else(|| Error::Domain("not a PlateauPhase".into()))?;
        if !t.is_positive() || *t > BigRational::one() {
            return Ok(None);
        }
        let two = BigRational::from_integer(2.into());
        let lo0 = BigRational::new(3.into(), 5.into());
        let hi0 = BigRational::new(4.into(), 5.into());
        let mut scale = BigRational::one();
        for j in 1..=pd.ladder.n_max() {
            scale = &scale / &two;
            let lo = &lo0 * &scale;
            let hi = &hi0 * &scale;
            if *t >= lo && *t <= hi {
                let q = num_bigint::BigInt::from(pd.ladder.big_q(j).clone());
                return Ok(Some(BigRational::new(1.into(), q)));
            }
            if *t > hi {
                return Ok(None);
            }
        }
        Ok(None)
    }

    /// `psi(z)` off the real axis, for Cauchy-integral derivatives near `t > 0`.
    pub fn eval_complex(&self, z: Complex64) -> Result<Complex64> {
        Ok(match &self.kind {
            Kind::Polynomial { c } => c.iter().rev().fold(Complex64::zero(), |acc, &ci| acc * z + ci),
            Kind::Power { p } => z.powi(*p),
            Kind::Gevrey { a } => (-(-a * z.ln()).exp()).exp(),
            Kind::IterExp { k, a } => {
                let mut v = (-a * z.ln()).exp();
                for _ in 0..*k {
                    v = v.exp();
                }
                (-v).exp()
            }
            Kind::LogPower { beta } => {
                let u = -z.ln();
                (-(beta * u.ln()).exp()).exp()
            }
            Kind::Intermediate { k, alpha } => {
                let u = -z.ln();
                let mut l = u;
                for _ in 0..(k - 1) {
                    l = l.ln();
                }
                (-(u * (l.ln() / *alpha).exp())).exp()
            }
            Kind::Plateau(_) => return domain("complex evaluation is not available for PlateauPhase"),
        })
    }

    /// `ln psi(z)` off the real axis (any branch), for log-space Cauchy derivatives.
    pub fn ln_complex(&self, z: Complex64) -> Result<Complex64> {
        Ok(match &self.kind {
            Kind::Gevrey { a } => -(-a * z.ln()).exp(),
            Kind::IterExp { k, a } => {
                let mut v = (-a * z.ln()).exp();
                for _ in 0..*k {
                    v = v.exp();
                }
                -v
            }
            Kind::LogPower { beta } => -(beta * (-z.ln()).ln()).exp(),
            Kind::Intermediate { k, alpha } => {
                let u = -z.ln();
                let mut l = u;
                for _ in 0..(k - 1) {
                    l = l.ln();
                }
                -(u * (l.ln() / *alpha).exp())
            }
            Kind::Power { .. } | Kind::Polynomial { .. } => self.eval_complex(z)?.ln(),
            Kind::Plateau(_) => return domain("complex evaluation is not available for PlateauPhase"),
        })
    }

    /// Inverse of `psi` on `(0, R]` for the monotone one-sided variants.
    pub(crate) fn inverse(&self, v: f64) -> Option<f64> {
        if !(v > 0.0) {
            return Some(0.0);
        }
        let t = match self.kind {
            Kind::Power { p } => v.powf(1.0 / p as f64),
            Kind::Gevrey { a } => (-v.ln()).powf(-1.0 / a),
            Kind::IterExp { k, a } => iter_log(k, -v.ln()).ok()?.powf(-1.0 / a),
            Kind::LogPower { beta } => (-(-v.ln()).powf(1.0 / beta)).exp(),
            Kind::Intermediate { k, alpha } => (-intermediate_solve_u(k, alpha, -v.ln()).ok()?).exp(),
            _ => return None,
        };
        Some(t)
    }

    /// Upper bound on `int_0^T |phi(t)|/t dt`.
    pub fn tail_mass_bound(&self, t_max: f64) -> f64 {
        let t_max = t_max.min(self.radius);
        if t_max <= 0.0 {
            return 0.0;
        }
        match &self.kind {
            Kind::Power { p } => t_max.powi(*p) / *p as f64,
            Kind::Polynomial { c } => c
                .iter()
                .enumerate()
                .filter(|(i, _)| i % 2 == 1)
                .map(|(i, ci)| 2.0 * ci.abs() * t_max.powi(i as i32) / i as f64)
                .sum(),
            Kind::Plateau(pd) => {
                // Shell j occupies (2^{-(j+1)}, 2^{-j}) and contributes at most a_j ln 2.
                let j_first = (-t_max.log2()).floor().max(1.0) as usize;
                pd.a.iter().skip(j_first).sum::<f64>() * std::f64::consts::LN_2
            }
            _ => {
                let mut sum = 0.0;
                let mut t = t_max;
                for _ in 0..2000 {
                    let v = self.eval_unchecked(t);
                    sum += v;
                    if v <= 1e-18 * sum || v == 0.0 {
                        // Remaining terms decay at least geometrically for every flat variant here.
                        sum += v;
                        break;
                    }
                    t *= 0.5;
                }
                sum * std::f64::consts::LN_2
            }
        }
    }

    /// Lowest odd power in the Taylor expansion of `phi` at 0, when finite.
    pub fn odd_vanishing_order(&self) -> Result<Option<u32>> {
        match &self.kind {
            Kind::Power { p } => Ok(Some(*p as u32)),
            Kind::Polynomial { c } => Ok(c.iter().enumerate().find(|(i, ci)| i % 2 == 1 && **ci != 0.0).map(|(i, _)| i as u32)),
            _ => Err(Error::NotFiniteType(format!("{} is flat at 0", self.spec.variant_name()))),
        }
    }

    /// The matched substitution weight with `u0 = psi(R)` and the prefactor
    /// in `m(lambda) = prefactor * int_0^{u0} (e^{i lambda u} - 1) w(u) du`.
    pub fn matched_weight(&self) -> Result<(SubstitutionWeight, f64)> {
        let u0 = self.eval_unchecked(self.radius);
        let (kind, pre) = match (&self.spec, &self.kind) {
            (PhaseSpec::GevreyFlat { s, .. }, _) => (WeightKind::GevreyWeight { s: *s }, s - 1.0),
            (PhaseSpec::IteratedExpFlat { k, s, .. }, _) => (WeightKind::RefinedGevreyWeight { k: *k, s: *s }, s - 1.0),
            (PhaseSpec::LogPower { alpha, .. }, Kind::LogPower { beta }) => (WeightKind::LogPowerWeight { alpha: *alpha }, 1.0 / beta),
            (PhaseSpec::Intermediate { k, alpha, .. }, _) => (WeightKind::IntermediateWeight { k: *k, alpha: *alpha }, 1.0),
            _ => return Err(Error::Mismatch(format!("{} has no substitution weight", self.spec.variant_name()))),
        };
        Ok((SubstitutionWeight::new(kind, u0)?, pre))
    }
}

fn plateau_eval(pd: &PlateauData, t: f64) -> f64 {
    let (j, x) = dyadic_split(t);
    if j == 0 || j >= pd.a.len() {
        return 0.0;
    }
    let eta = pd.bump.eval(x);
    if eta == 0.0 {
        0.0
    } else {
        pd.a[j] * eta
    }
}

/// Writes `t = 2^{-j} x` with `x` in `[1/2, 1)`.
pub(crate) fn dyadic_split(t: f64) -> (usize, f64) {
    let e = t.log2().floor() as i32;
    let mut j = -e - 1;
    let mut x = t * 2f64.powi(j);
    // Correct log2 rounding at exact powers of two.
    while x >= 1.0 {
        x *= 0.5;
        j -= 1;
    }
    while x < 0.5 {
        x *= 2.0;
        j += 1;
    }
    (j.max(0) as usize, x)
}

/// `A(u) = L_{k-1}(u)^{1/alpha}`.
pub(crate) fn intermediate_a(k: u32, alpha: f64, u: f64) -> f64 {
    let mut l = u;
    for _ in 0..(k - 1) {
        l = l.ln();
    }
    l.powf(1.0 / alpha)
}

/// `Q'(u) = A(u) (1 + 1/(alpha L_1(u) ... L_{k-1}(u)))`.
pub(crate) fn intermediate_q_prime(k: u32, alpha: f64, u: f64) -> f64 {
    let mut l = u;
    let mut prod = 1.0;
    for _ in 0..(k - 1) {
        l = l.ln();
        prod *= l;
    }
    l.powf(1.0 / alpha) * (1.0 + 1.0 / (alpha * prod))
}

/// Solves `Q(u) = y` for `u` with `L_{k-1}(u) >= 1`.
pub(crate) fn intermediate_solve_u(k: u32, alpha: f64, y: f64) -> Result<f64> {
    let q = |u: f64| u * intermediate_a(k, alpha, u);
    let lo0 = iter_exp(k - 1, 1.0).map_err(|_| Error::Domain("Intermediate u threshold overflows".into()))?;
    if y < q(lo0) {
        return domain(format!("Q(u) = {y} is below the guarded range"));
    }
    let (mut lo, mut hi) = (lo0, y.max(lo0));
    let mut u = 0.5 * (lo + hi);
    for _ in 0..200 {
        let f = q(u) - y;
        if f > 0.0 {
            hi = u;
        } else {
            lo = u;
        }
        let newton = u - f / intermediate_q_prime(k, alpha, u);
        u = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        if (hi - lo) <= 1e-15 * hi || f.abs() <= 1e-15 * y {
            break;
        }
    }
    Ok(u)
}

/// Substitution weights.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", content = "params")]
pub enum WeightKind {
    /// `1/(u log(1/u))`
    GevreyWeight { s: f64 },
    /// `1/(u prod_{j=1}^{k+1} log^{(j)}(1/u))`
    RefinedGevreyWeight { k: u32, s: f64 },
    /// `1/(u (log 1/u)^{1/alpha})`
    LogPowerWeight { alpha: f64 },
    /// `1/(u Q'(u(s)))` with `Q(u(s)) = log(1/s)`
    IntermediateWeight { k: u32, alpha: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubstitutionWeight {
    pub kind: WeightKind,
    pub u0: f64,
}

impl SubstitutionWeight {
    /// Validates that `w` is positive and strictly decreasing and `u w(u)`
    /// nondecreasing on a 1024-point grid in `(0, u0]`.
    pub fn new(kind: WeightKind, u0: f64) -> Result<Self> {
        if !(u0 > 0.0 && u0 < 1.0) {
            return domain(format!("weight cutoff u0 = {u0} must lie in (0, 1)"));
        }
        let w = SubstitutionWeight { kind, u0 };
        let mut prev: Option<(f64, f64)> = None;
        for i in 1..=1024 {
            let u = u0 * i as f64 / 1024.0;
            let v = w.eval(u)?;
            if !(v > 0.0) {
                return domain(format!("weight not positive at u = {u}"));
            }
            if let Some((pu, pv)) = prev {
                if !(v < pv) || u * v < pu * pv * (1.0 - 1e-12) {
                    return domain(format!("weight not monotone near u = {u}"));
                }
            }
            prev = Some((u, v));
        }
        Ok(w)
    }

    pub fn eval(&self, u: f64) -> Result<f64> {
        if !(u > 0.0 && u < 1.0) {
            return domain(format!("weight argument u = {u} outside (0, 1)"));
        }
        let l1 = -u.ln();
        match self.kind {
            WeightKind::GevreyWeight { .. } => Ok(1.0 / (u * l1)),
            WeightKind::RefinedGevreyWeight { k, .. } => {
                let mut prod = l1;
                let mut l = l1;
                for _ in 0..k {
                    if !(l > 0.0) {
                        return domain(format!("iterated log of 1/u not positive at u = {u}"));
                    }
                    l = l.ln();
                    prod *= l;
                }
                if !(prod > 0.0) {
                    return domain(format!("iterated log of 1/u not positive at u = {u}"));
                }
                Ok(1.0 / (u * prod))
            }
            WeightKind::LogPowerWeight { alpha } => Ok(1.0 / (u * l1.powf(1.0 / alpha))),
            WeightKind::IntermediateWeight { k, alpha } => {
                let uu = intermediate_solve_u(k, alpha, l1)?;
                Ok(1.0 / (u * intermediate_q_prime(k, alpha, uu)))
            }
        }
    }
}

/// `eval_phase` in free-function form.
pub fn eval_phase(phase: &Phase, t: f64) -> Result<f64> {
    phase.eval(t)
}

/// `eval_phi` in free-function form.
pub fn eval_phi(phase: &Phase, t: f64) -> Result<f64> {
    phase.phi(t)
}

/// `eval_weight` in free-function form.
pub fn eval_weight(w: &SubstitutionWeight, u: f64) -> Result<f64> {
    w.eval(u)
}

#[derive(Debug, Clone, Serialize)]
pub struct ConsistencyReport {
    pub prefactor: f64,
    /// `(t, relative error)` per grid point.
    pub points: Vec<(f64, f64)>,
    pub max_rel_error: f64,
}

/// Checks `psi'(t) * prefactor * w(psi(t)) = 1/t` on a grid, with `psi'` from
/// Richardson-extrapolated central differences.
pub fn weight_consistency(phase: &Phase, w: &SubstitutionWeight, t_grid: &[f64]) -> Result<ConsistencyReport> {
    let (matched, prefactor) = phase.matched_weight().map_err(|_| {
        Error::Mismatch(format!("{} has no documented weight", phase.spec().variant_name()))
    })?;
    let same_family = std::mem::discriminant(&matched.kind) == std::mem::discriminant(&w.kind);
    if !same_family || matched.kind != w.kind {
        return Err(Error::Mismatch(format!("{:?} does not match {}", w.kind, phase.spec().variant_name())));
    }
    let mut points = Vec::with_capacity(t_grid.len());
    let mut max_rel_error: f64 = 0.0;
    for &t in t_grid {
        let d = ridders_derivative(&|x| phase.eval_unchecked(x), t, 0.1 * t)?;
        let v = d * prefactor * w.eval(phase.eval(t)?)?;
        let rel = (v - 1.0 / t).abs() * t;
        max_rel_error = max_rel_error.max(rel);
        points.push((t, rel));
    }
    Ok(ConsistencyReport { prefactor, points, max_rel_error })
}

/// Ridders' extrapolated central difference.
pub fn ridders_derivative(f: &dyn Fn(f64) -> f64, x: f64, h0: f64) -> Result<f64> {
    const N: usize = 12;
    let con = 1.4;
    let con2 = con * con;
    let mut a = [[0.0; N]; N];
    let mut h = h0;
    a[0][0] = (f(x + h) - f(x - h)) / (2.0 * h);
    let mut best = a[0][0];
    let mut err = f64::INFINITY;
    for i in 1..N {
        h /= con;
        a[0][i] = (f(x + h) - f(x - h)) / (2.0 * h);
        let mut fac = con2;
        for j in 1..=i {
            a[j][i] = (a[j - 1][i] * fac - a[j - 1][i - 1]) / (fac - 1.0);
            fac *= con2;
            let e = (a[j][i] - a[j - 1][i]).abs().max((a[j][i] - a[j - 1][i - 1]).abs());
            if e <= err {
                err = e;
                best = a[j][i];
            }
        }
        if (a[i][i] - a[i - 1][i - 1]).abs() >= 2.0 * err {
            break;
        }
    }
    if !best.is_finite() {
        return Err(Error::NoConvergence(format!("derivative at {x}")));
    }
    Ok(best)
}
