//! Iterated logarithms and exponentials, growth envelopes, growth-series
//! fitting and the polynomial-phase sweep.

use num_bigint::BigUint;
use num_complex::Complex64;
use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::phases::{parse_kv, PhaseSpec};
use crate::quadrature::{compute_m_direct, QuadratureConfig};

/// `log^{(k)} x`. Every intermediate logarithm argument must be positive.
pub fn iter_log(k: u32, x: f64) -> Result<f64> {
    let mut v = x;
    for j in 0..k {
        if !(v > 0.0) {
            return Err(Error::Domain(format!("iter_log({k}, {x}): argument of log number {} is {v}", j + 1)));
        }
        v = v.ln();
    }
    Ok(v)
}

/// `log^{(k)} x` given `ln x`, for arguments beyond f64.
pub fn iter_log_from_ln(k: u32, ln_x: f64) -> Result<f64> {
    if k == 0 {
        return Ok(ln_x.exp());
    }
    iter_log(k - 1, ln_x)
}

/// `exp^{(k)} x`. On overflow the error carries `ln exp^{(k)} x = exp^{(k-1)} x`
/// (itself `inf` when that also overflows).
pub fn iter_exp(k: u32, x: f64) -> Result<f64> {
    let mut v = x;
    for j in 0..k {
        let next = v.exp();
        if next.is_infinite() {
            let ln_value = if j + 1 == k { v } else { f64::INFINITY };
            return Err(Error::Overflow { ln_value });
        }
        v = next;
    }
    Ok(v)
}

/// Natural log of a big integer, accurate to a few ulps.
pub fn ln_biguint(n: &BigUint) -> f64 {
    let bits = n.bits();
    if bits == 0 {
        return f64::NEG_INFINITY;
    }
    if bits <= 64 {
        let v: u64 = n.try_into().expect("fits in u64");
        return (v as f64).ln();
    }
    let shift = bits - 64;
    let top: u64 = (n >> shift).try_into().expect("64 bits");
    (top as f64).ln() + shift as f64 * std::f64::consts::LN_2
}

/// A frequency: double precision or an exact integer from the plateau ladder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Frequency {
    Float(f64),
    #[serde(with = "crate::serde_big::biguint")]
    Exact(BigUint),
}

impl Frequency {
    pub fn ln(&self) -> f64 {
        match self {
            Frequency::Float(x) => x.ln(),
            Frequency::Exact(n) => ln_biguint(n),
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Frequency::Float(x) => *x,
            Frequency::Exact(n) => {
                let l = ln_biguint(n);
                if l > 709.0 {
                    f64::INFINITY
                } else if n.bits() <= 64 {
                    u64::try_from(n).map(|v| v as f64).unwrap_or_else(|_| l.exp())
                } else {
                    l.exp()
                }
            }
        }
    }
}

impl From<f64> for Frequency {
    fn from(x: f64) -> Self {
        Frequency::Float(x)
    }
}

impl From<BigUint> for Frequency {
    fn from(n: BigUint) -> Self {
        Frequency::Exact(n)
    }
}

/// Theoretical growth profiles, as functions of the frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", content = "params")]
pub enum Envelope {
    /// `log λ`
    Log,
    /// `log λ / log^{(k)} λ`
    LogOverIterLog { k: u32 },
    /// `log log λ`
    LogLog,
    /// `log^{(k)} λ`
    IterLog { k: u32 },
    /// `(log λ)^p`
    LogPow { p: f64 },
    /// `log λ / (log^{(k)} λ)^p`
    LogOverIterLogPow { k: u32, p: f64 },
    Constant,
}

impl Envelope {
    /// Deepest iterated log the envelope touches.
    fn depth(&self) -> u32 {
        match *self {
            Envelope::Log | Envelope::LogPow { .. } => 1,
            Envelope::LogLog => 2,
            Envelope::LogOverIterLog { k } | Envelope::IterLog { k } | Envelope::LogOverIterLogPow { k, .. } => k.max(1),
            Envelope::Constant => 0,
        }
    }

    /// Evaluates the envelope from `ln λ`.
    pub fn eval_ln(&self, ln_lambda: f64) -> Result<f64> {
        let depth = self.depth();
        let mut logs = Vec::with_capacity(depth as usize + 1);
        logs.push(ln_lambda);
        for j in 1..depth {
            let prev = logs[j as usize - 1];
            if prev < 1.0 {
                break;
            }
            logs.push(prev.ln());
        }
        if depth > 0 && (logs.len() < depth as usize || logs.iter().any(|&v| v < 1.0)) {
            return Err(Error::Domain(format!("{self:?} needs all iterated logs >= 1 (ln λ = {ln_lambda})")));
        }
        let l = |j: u32| logs[j as usize - 1];
        Ok(match *self {
            Envelope::Log => l(1),
            Envelope::LogOverIterLog { k } => l(1) / l(k),
            Envelope::LogLog => l(2),
            Envelope::IterLog { k } => l(k),
            Envelope::LogPow { p } => l(1).powf(p),
            Envelope::LogOverIterLogPow { k, p } => l(1) / l(k).powf(p),
            Envelope::Constant => 1.0,
        })
    }

    pub fn eval(&self, lambda: &Frequency) -> Result<f64> {
        self.eval_ln(lambda.ln())
    }
}

/// Parses a JSON object or a short form: `log`, `loglog`, `constant`,
/// `iterlog:k=3`, `logpow:p=0.5`, `log-over-iterlog:k=2`, `log-over-iterlog-pow:k=2,p=0.5`.
impl std::str::FromStr for Envelope {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.starts_with('{') {
            return serde_json::from_str(s).map_err(|e| Error::Domain(format!("bad envelope JSON: {e}")));
        }
        let (name, rest) = s.split_once(':').unwrap_or((s, ""));
        let kv = parse_kv(rest)?;
        Ok(match name.to_ascii_lowercase().as_str() {
            "log" => Envelope::Log,
            "loglog" => Envelope::LogLog,
            "constant" => Envelope::Constant,
            "iterlog" => Envelope::IterLog { k: kv.req_u32("k")? },
            "logpow" => Envelope::LogPow { p: kv.req_f64("p")? },
            "log-over-iterlog" => Envelope::LogOverIterLog { k: kv.req_u32("k")? },
            "log-over-iterlog-pow" => Envelope::LogOverIterLogPow { k: kv.req_u32("k")?, p: kv.req_f64("p")? },
            other => return Err(Error::Domain(format!("unknown envelope {other:?}"))),
        })
    }
}

/// `envelope_eval` in free-function form.
pub fn envelope_eval(e: Envelope, lambda: &Frequency) -> Result<f64> {
    e.eval(lambda)
}

/// One sample of a growth series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthSample {
    pub lambda: Frequency,
    pub m: Complex64,
    pub est_error: f64,
}

/// Ordered samples `(λ, m(λ))` of one phase along a frequency ladder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthSeries {
    pub class_tag: String,
    samples: Vec<GrowthSample>,
}

impl GrowthSeries {
    pub fn new(class_tag: impl Into<String>) -> Self {
        GrowthSeries { class_tag: class_tag.into(), samples: Vec::new() }
    }

    /// Appends a sample; frequencies must be strictly increasing.
    pub fn push(&mut self, lambda: Frequency, m: Complex64, est_error: f64) -> Result<()> {
        if let Some(last) = self.samples.last() {
            if !(lambda.ln() > last.lambda.ln()) {
                return Err(Error::Domain("growth series frequencies must increase strictly".into()));
            }
        }
        self.samples.push(GrowthSample { lambda, m, est_error });
        Ok(())
    }

    pub fn samples(&self) -> &[GrowthSample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Which quantity is compared to the envelope.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum FitMode {
    /// `|m(λ)|`
    #[default]
    Magnitude,
    /// `-Re m(λ)`
    LowerBound,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthVerdict {
    pub pass: bool,
    pub mode: FitMode,
    /// `value / envelope` per sample.
    pub ratios: Vec<f64>,
    pub envelope: Vec<f64>,
    pub ratio_min: f64,
    pub ratio_max: f64,
    /// `max r / min r` over the last half.
    pub band: f64,
    pub band_limit: f64,
    pub nondecreasing: bool,
    /// Least-squares slope of `log value` against `log envelope` over the last half.
    pub elasticity: f64,
}

pub const DEFAULT_BAND: f64 = 6.0;
const ELASTICITY_RANGE: (f64, f64) = (0.5, 2.0);

/// Bounded-ratio reading of `m(λ) ≈ envelope(λ)`: the ratio band over the
/// last half of the series must stay within `band`, the values must be
/// nondecreasing up to their error estimates, and the log-log slope against
/// the envelope must lie in `[0.5, 2]`.
pub fn fit_growth(series: &GrowthSeries, e: Envelope, mode: FitMode, band: f64) -> Result<GrowthVerdict> {
    let s = series.samples();
    if s.len() < 8 {
        return Err(Error::InsufficientRange(format!("{} samples, need at least 8", s.len())));
    }
    let span = s[s.len() - 1].lambda.ln() - s[0].lambda.ln();
    if span < 2.0 * std::f64::consts::LN_10 - 1e-9 {
        return Err(Error::InsufficientRange(format!("frequencies span {:.3} decades, need 2", span / std::f64::consts::LN_10)));
    }
    let envelope = s
        .iter()
        .map(|x| e.eval(&x.lambda).map_err(|_| Error::InsufficientRange(format!("envelope {e:?} undefined at ln λ = {}", x.lambda.ln()))))
        .collect::<Result<Vec<f64>>>()?;
    let values: Vec<f64> = s
        .iter()
        .map(|x| match mode {
            FitMode::Magnitude => x.m.norm(),
            FitMode::LowerBound => -x.m.re,
        })
        .collect();
    let ratios: Vec<f64> = values.iter().zip(&envelope).map(|(v, en)| v / en).collect();
    let half = &ratios[s.len() / 2..];
    let ratio_min = half.iter().copied().fold(f64::INFINITY, f64::min);
    let ratio_max = half.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let band_value = if ratio_min > 0.0 { ratio_max / ratio_min } else { f64::INFINITY };
    let nondecreasing = values.windows(2).zip(s.windows(2)).all(|(v, x)| v[1] >= v[0] - (x[0].est_error + x[1].est_error));

    let start = s.len() / 2;
    let xs: Vec<f64> = envelope[start..].iter().map(|v| v.ln()).collect();
    let ys: Vec<f64> = values[start..].iter().map(|v| v.max(f64::MIN_POSITIVE).ln()).collect();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    // A constant envelope has no slope to compare against.
    let elasticity = if sxx > 0.0 { sxy / sxx } else { 1.0 };

    let pass = ratio_min > 0.0
        && band_value <= band
        && nondecreasing
        && (ELASTICITY_RANGE.0..=ELASTICITY_RANGE.1).contains(&elasticity);
    Ok(GrowthVerdict {
        pass,
        mode,
        ratios,
        envelope,
        ratio_min,
        ratio_max,
        band: band_value,
        band_limit: band,
        nondecreasing,
        elasticity,
    })
}

/// One row of the polynomial sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub degree: u32,
    /// Largest `|m|` over the random trials.
    pub random_max: f64,
    /// `|m|` for `P(t) = λ t^d`.
    pub extreme: f64,
    pub max_abs: f64,
    /// `max_abs / log d`; absent for `d = 1`.
    pub ratio_to_log_d: Option<f64>,
}

/// Worst `|p.v. ∫_{-1}^{1} e^{iP(t)} dt/t|` per degree over `trials` random
/// polynomials with coefficients uniform in `[-λ, λ]`, plus `P(t) = λ t^d`.
/// Deterministic for a fixed seed: degree `d` draws from ChaCha stream `d`.
pub fn polynomial_sweep(
    degrees: std::ops::RangeInclusive<u32>,
    trials: usize,
    lambda: f64,
    seed: u64,
    cfg: &QuadratureConfig,
) -> Result<Vec<SweepRow>> {
    if *degrees.start() == 0 || *degrees.end() > 40 {
        return Err(Error::Domain("polynomial sweep degrees must lie in 1..=40".into()));
    }
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::Domain("polynomial sweep scale must be positive".into()));
    }
    let abs_m = |coefficients: Vec<f64>| -> Result<f64> {
        let phase = PhaseSpec::polynomial(coefficients).compile()?;
        Ok(compute_m_direct(&phase, 1.0, cfg)?.value.norm())
    };
    degrees
        .map(|d| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(d as u64);
            let dist = Uniform::new_inclusive(-lambda, lambda);
            let polys: Vec<Vec<f64>> = (0..trials).map(|_| (0..=d).map(|_| dist.sample(&mut rng)).collect()).collect();
            let values = polys.into_par_iter().map(abs_m).collect::<Result<Vec<f64>>>()?;
            let random_max = values.into_iter().fold(0.0, f64::max);
            let mut extreme_coeffs = vec![0.0; d as usize + 1];
            extreme_coeffs[d as usize] = lambda;
            let extreme = abs_m(extreme_coeffs)?;
            let max_abs = random_max.max(extreme);
            let ratio_to_log_d = (d > 1).then(|| max_abs / (d as f64).ln());
            Ok(SweepRow { degree: d, random_max, extreme, max_abs, ratio_to_log_d })
        })
        .collect()
}
