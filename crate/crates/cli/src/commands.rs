//! One function per subcommand. Each returns whether its verdict passed.

use std::path::PathBuf;

use clap::{Args, ValueEnum};
use oscillab_core::carleman::Tail;
use oscillab_core::derivlab::verify_membership;
use oscillab_core::envelopes::{fit_growth, polynomial_sweep, FitMode, DEFAULT_BAND};
use oscillab_core::flatness::{compare_methods, ordering_threshold, VerifiedK, Winner};
use oscillab_core::plateau::{build_ladder, plateau_lower_bound, plateau_upper_bound, verify_growth_window, verify_plateau_parity, WindowMeasurement};
use oscillab_core::quadrature::{
    certified_nonneg_realpart, certified_nonneg_realpart_exact, compute_m_direct, compute_m_substituted, vdc_fit_constant, vdc_max_ratio, vdc_profile,
    vdc_shell_values,
};
use oscillab_core::{CarlemanFamily, Complex64, Envelope, FamilySpec, Frequency, GrowthSeries, Magnitude, PhaseSpec, QuadratureReport};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::config::{input, required, CliError, CliResult, GridSpec, LadderSpec, QuadArgs};
use crate::output::{csv_writer, loglog_svg, verdict, write_json, Series};

fn fmt_complex(z: Complex64) -> String {
    format!("{}{:+}i", z.re, z.im)
}

fn phase_of(spec: &Option<String>) -> CliResult<(PhaseSpec, oscillab_core::Phase)> {
    let spec: PhaseSpec = required(spec, "phase")?;
    let phase = input(spec.compile())?;
    Ok((spec, phase))
}

fn family_of(spec: &Option<String>) -> CliResult<CarlemanFamily> {
    let spec: FamilySpec = required(spec, "family")?;
    input(CarlemanFamily::new(spec))
}

// list-phases

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ListPhases {
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn list_phases(a: &ListPhases) -> CliResult<bool> {
    let catalog = [
        ("power", "power:alpha=1", "max(t^(alpha+1), 0)"),
        ("plateau", "plateau:k=2,j0=1", "sum_j (pi/Q_j) eta(2^j t)"),
        ("gevrey", "gevrey:s=2", "exp(-t^(-1/(s-1)))"),
        ("iterexp", "iterexp:k=2,s=2", "exp(-E_k(t^(-1/(s-1))))"),
        ("logpower", "logpower:alpha=2", "exp(-(log 1/t)^(alpha/(alpha-1)))"),
        ("intermediate", "intermediate:k=2,alpha=1", "exp(-Q(log 1/t)), Q(u) = u L_(k-1)(u)^(1/alpha)"),
        ("poly", "poly:0,0,0,1", "sum_i c_i t^i"),
    ];
    let mut w = csv_writer(a.out.as_deref())?;
    w.write_record(["name", "example", "formula", "domain_radius", "one_sided", "matched_weight"])?;
    for (name, example, formula) in catalog {
        let spec: PhaseSpec = input(example.parse())?;
        let phase = input(spec.compile())?;
        let weight = match phase.matched_weight() {
            Ok((w, pre)) => format!("{} (prefactor {pre})", serde_json::to_string(&w.kind).unwrap_or_default()),
            Err(_) => String::new(),
        };
        w.write_record([name, example, formula, &phase.domain_radius().to_string(), &phase.is_one_sided().to_string(), &weight])?;
    }
    w.flush()?;
    Ok(true)
}

// compute-m

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Direct,
    Substituted,
    Certified,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ComputeM {
    /// Phase, as `name:key=value,...` or JSON
    #[arg(long)]
    pub phase: Option<String>,
    /// Frequencies, comma separated
    #[arg(long, value_delimiter = ',')]
    pub lambda: Vec<f64>,
    #[arg(long, value_enum, default_value_t = Method::Direct)]
    pub method: Method,
    #[command(flatten)]
    #[serde(flatten)]
    pub quad: QuadArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn compute_m(a: &ComputeM) -> CliResult<bool> {
    let (_, phase) = phase_of(&a.phase)?;
    let cfg = a.quad.config()?;
    if a.lambda.is_empty() {
        return Err(CliError::Config("--lambda is required".into()));
    }
    let mut w = csv_writer(a.out.as_deref())?;
    w.write_record(["lambda", "value", "re", "im", "abs", "est_error", "truncation_bound", "nodes_used", "strategy"])?;
    for &lambda in &a.lambda {
        let r = match a.method {
            Method::Direct => compute_m_direct(&phase, lambda, &cfg)?,
            Method::Substituted => {
                let (wt, pre) = input(phase.matched_weight())?;
                compute_m_substituted(&wt, pre, lambda, &cfg)?
            }
            Method::Certified => {
                let v = certified_nonneg_realpart(&phase, lambda)?;
                w.write_record([lambda.to_string(), format!("-{v}"), (-v).to_string(), String::new(), String::new(), "0".into(), "0".into(), String::new(), "CertifiedLowerBound".into()])?;
                continue;
            }
        };
        write_report(&mut w, &lambda.to_string(), &r)?;
    }
    w.flush()?;
    Ok(true)
}

fn write_report<W: std::io::Write>(w: &mut csv::Writer<W>, lambda: &str, r: &QuadratureReport) -> CliResult<()> {
    w.write_record([
        lambda.to_string(),
        fmt_complex(r.value),
        r.value.re.to_string(),
        r.value.im.to_string(),
        r.value.norm().to_string(),
        r.est_error.to_string(),
        r.truncation_bound.to_string(),
        r.nodes_used.to_string(),
        format!("{:?}", r.strategy),
    ])?;
    Ok(())
}

// verify-growth

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Magnitude,
    LowerBound,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct VerifyGrowth {
    #[arg(long)]
    pub phase: Option<String>,
    /// Envelope: log, loglog, constant, iterlog:k=K, logpow:p=P, log-over-iterlog:k=K, log-over-iterlog-pow:k=K,p=P
    #[arg(long)]
    pub envelope: Option<String>,
    /// Geometric ladder `start,factor,count`
    #[arg(long)]
    pub lambda_ladder: Option<LadderSpec>,
    /// Explicit frequencies, comma separated
    #[arg(long, value_delimiter = ',')]
    pub lambdas: Vec<f64>,
    /// Plateau frequencies Q_1..Q_N (plateau phases only)
    #[arg(long)]
    pub plateau_n: Option<usize>,
    /// First plateau index used with `--plateau-n`
    #[arg(long, default_value_t = 1)]
    pub plateau_n_min: usize,
    #[arg(long, value_enum, default_value_t = Mode::Magnitude)]
    pub mode: Mode,
    #[arg(long, default_value_t = DEFAULT_BAND)]
    pub band: f64,
    #[command(flatten)]
    #[serde(flatten)]
    pub quad: QuadArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

pub fn verify_growth(a: &VerifyGrowth) -> CliResult<bool> {
    let (spec, phase) = phase_of(&a.phase)?;
    let envelope: Envelope = required(&a.envelope, "envelope")?;
    let cfg = a.quad.config()?;
    let sources = [a.lambda_ladder.is_some(), !a.lambdas.is_empty(), a.plateau_n.is_some()].iter().filter(|&&b| b).count();
    if sources != 1 {
        return Err(CliError::Config("give exactly one of --lambda-ladder, --lambdas, --plateau-n".into()));
    }
    let mut series = GrowthSeries::new(spec.to_string());
    let mut measured = Vec::new();
    if let Some(n_max) = a.plateau_n {
        let PhaseSpec::PlateauPhase { k, j0, .. } = spec else {
            return Err(CliError::Config("--plateau-n needs a plateau phase".into()));
        };
        let ladder = input(build_ladder(k, j0, n_max))?;
        if a.plateau_n_min == 0 || a.plateau_n_min > n_max {
            return Err(CliError::Config("--plateau-n-min must lie in 1..=--plateau-n".into()));
        }
        for n in a.plateau_n_min..=n_max {
            let lambda = ladder.lambda(n);
            if a.mode == Mode::LowerBound {
                let v = certified_nonneg_realpart_exact(&phase, lambda)?;
                input(series.push(Frequency::Exact(lambda.clone()), Complex64::new(-v, 0.0), 0.0))?;
                measured.push((lambda.to_string(), "certified"));
                continue;
            }
            match verify_growth_window(&ladder, &phase, n, &cfg, 0.0)?.measurement {
                WindowMeasurement::Full { report, .. } => {
                    input(series.push(Frequency::Exact(lambda.clone()), report.value, report.total_error()))?;
                    measured.push((lambda.to_string(), "full"));
                }
                WindowMeasurement::Certified { .. } => {
                    return Err(CliError::Config(format!("full quadrature at Q_{n} exceeds the node budget; use --mode lower-bound")));
                }
            }
        }
    } else {
        let lambdas = match &a.lambda_ladder {
            Some(l) => l.points()?,
            None => a.lambdas.clone(),
        };
        for lambda in lambdas {
            let r = compute_m_direct(&phase, lambda, &cfg)?;
            input(series.push(Frequency::Float(lambda), r.value, r.total_error()))?;
            measured.push((lambda.to_string(), "full"));
        }
    }
    let mode = match a.mode {
        Mode::Magnitude => FitMode::Magnitude,
        Mode::LowerBound => FitMode::LowerBound,
    };
    let v = input(fit_growth(&series, envelope, mode, a.band))?;

    let mut w = csv_writer(a.out.as_deref())?;
    w.write_record(["lambda", "re", "im", "abs", "est_error", "measurement", "envelope", "ratio"])?;
    for (i, s) in series.samples().iter().enumerate() {
        w.write_record([
            measured[i].0.clone(),
            s.m.re.to_string(),
            s.m.im.to_string(),
            s.m.norm().to_string(),
            s.est_error.to_string(),
            measured[i].1.to_string(),
            v.envelope[i].to_string(),
            v.ratios[i].to_string(),
        ])?;
    }
    w.flush()?;

    if let Some(path) = &a.svg {
        let value = |m: Complex64| if mode == FitMode::Magnitude { m.norm() } else { -m.re };
        let mid = (v.ratio_min * v.ratio_max).sqrt();
        let data: Vec<(f64, f64)> = series.samples().iter().map(|s| (s.lambda.to_f64(), value(s.m))).collect();
        let env: Vec<(f64, f64)> = series.samples().iter().zip(&v.envelope).map(|(s, e)| (s.lambda.to_f64(), mid * e)).collect();
        let label = if mode == FitMode::Magnitude { "|m(λ)|" } else { "-Re m(λ)" };
        loglog_svg(
            path,
            &format!("{spec} against {envelope:?}"),
            "λ",
            label,
            &[
                Series { label, color: "#1f77b4", points: data },
                Series { label: &format!("{mid:.3} × envelope"), color: "#d62728", points: env },
            ],
        )?;
    }
    Ok(verdict(
        "verify-growth",
        v.pass,
        json!({ "band": v.band, "band_limit": v.band_limit, "ratio_min": v.ratio_min, "ratio_max": v.ratio_max,
                "nondecreasing": v.nondecreasing, "elasticity": v.elasticity, "samples": series.len() }),
    ))
}

// verify-plateau

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct VerifyPlateau {
    #[arg(long, default_value_t = 2)]
    pub k: u32,
    #[arg(long, default_value_t = 1)]
    pub j0: u32,
    #[arg(long, default_value_t = 12)]
    pub n_max: usize,
    /// Largest n measured by full quadrature; later rows use the certified bound
    #[arg(long, default_value_t = 4)]
    pub full_n_max: usize,
    #[arg(long, default_value_t = 1e-4)]
    pub tol: f64,
    #[command(flatten)]
    #[serde(flatten)]
    pub quad: QuadArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn verify_plateau(a: &VerifyPlateau) -> CliResult<bool> {
    let ladder = input(build_ladder(a.k, a.j0, a.n_max))?;
    let phase = input(PhaseSpec::plateau(a.k, a.j0).compile())?;
    let cfg = a.quad.config()?;
    let mut w = csv_writer(a.out.as_deref())?;
    w.write_record(["n", "Q_n", "parity", "lower", "measured_neg_re", "abs", "upper", "pass"])?;
    let mut all = true;
    for n in 1..=a.n_max {
        let parity = verify_plateau_parity(&ladder, n);
        let (measured, abs, pass) = if n <= a.full_n_max {
            let r = verify_growth_window(&ladder, &phase, n, &cfg, a.tol)?;
            match r.measurement {
                WindowMeasurement::Full { neg_re, abs, .. } => (neg_re.to_string(), abs.to_string(), r.passed()),
                WindowMeasurement::Certified { .. } => ("certified".to_string(), String::new(), r.passed()),
            }
        } else {
            let v = certified_nonneg_realpart_exact(&phase, ladder.lambda(n))?;
            ("certified".to_string(), String::new(), v >= plateau_lower_bound(n) - a.tol)
        };
        let pass = pass && parity;
        all &= pass;
        w.write_record([
            n.to_string(),
            ladder.big_q(n).to_string(),
            parity.to_string(),
            plateau_lower_bound(n).to_string(),
            measured,
            abs,
            plateau_upper_bound(&ladder, n)?.to_string(),
            pass.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(verdict("verify-plateau", all, json!({ "k": a.k, "j0": a.j0, "n_max": a.n_max })))
}

// verify-flatbound

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct VerifyFlatbound {
    #[arg(long)]
    pub phase: Option<String>,
    /// Carleman family, as `name:key=value,...` or JSON
    #[arg(long)]
    pub family: Option<String>,
    /// Comparison grid `lo,hi,count`
    #[arg(long, default_value = "0.02,0.5,256")]
    pub grid: GridSpec,
    /// Space the comparison grid logarithmically
    #[arg(long)]
    pub log_grid: bool,
    /// Highest derivative order used to fit K
    #[arg(long, default_value_t = 12)]
    pub n_max: u32,
    /// Grid for the K fit, `lo,hi,count` (log spaced)
    #[arg(long, default_value = "0.01,1,48")]
    pub k_grid: GridSpec,
    #[arg(long, default_value_t = 0.0)]
    pub tol: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn magnitude_cells(m: &Magnitude) -> [String; 2] {
    [m.value().to_string(), m.ln().to_string()]
}

pub fn verify_flatbound(a: &VerifyFlatbound) -> CliResult<bool> {
    let (_, phase) = phase_of(&a.phase)?;
    let fam = family_of(&a.family)?;
    let k_grid = a.k_grid.points(true)?;
    let grid = a.grid.points(a.log_grid)?;
    let rep = verify_membership(&phase, &fam, 0..=a.n_max, &k_grid)?;
    let k = VerifiedK::from_membership(&rep)?;
    let rows = compare_methods(&fam, k, &phase, &grid, a.tol)?;
    let mut w = csv_writer(a.out.as_deref())?;
    w.write_record(["t", "actual", "ln_actual", "bang", "ln_bang", "taylor_legendre", "ln_taylor_legendre", "winner"])?;
    for r in &rows {
        let [av, al] = magnitude_cells(&r.actual);
        let [bv, bl] = magnitude_cells(&r.bang);
        let [tv, tl] = magnitude_cells(&r.taylor_legendre);
        w.write_record([r.t.to_string(), av, al, bv, bl, tv, tl, format!("{:?}", r.winner)])?;
    }
    w.flush()?;
    let thr = |win| ordering_threshold(&rows, win).map(|(t, n)| json!({ "t_star": t, "points": n }));
    Ok(verdict(
        "verify-flatbound",
        true,
        json!({ "k": k.value(), "compared": rows.len(), "skipped": grid.len() - rows.len(),
                "bang_tighter_below": thr(Winner::Bang), "taylor_legendre_tighter_below": thr(Winner::TaylorLegendre) }),
    ))
}

// verify-derivatives

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct VerifyDerivatives {
    #[arg(long)]
    pub phase: Option<String>,
    #[arg(long)]
    pub family: Option<String>,
    #[arg(long, default_value_t = 12)]
    pub n_max: u32,
    /// `lo,hi,count` (log spaced)
    #[arg(long, default_value = "0.01,1,48")]
    pub grid: GridSpec,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn verify_derivatives(a: &VerifyDerivatives) -> CliResult<bool> {
    let (_, phase) = phase_of(&a.phase)?;
    let fam = family_of(&a.family)?;
    let grid = a.grid.points(true)?;
    let rep = verify_membership(&phase, &fam, 0..=a.n_max, &grid)?;
    let mut w = csv_writer(a.out.as_deref())?;
    w.write_record(["n", "sup_abs_deriv_log", "log_Mn", "K_hat_n"])?;
    for r in &rep.rows {
        w.write_record([r.n.to_string(), r.sup_abs_deriv_ln.to_string(), r.log_mn.to_string(), r.k_hat_n.to_string()])?;
    }
    w.flush()?;
    Ok(verdict("verify-derivatives", rep.stable, json!({ "k_hat": rep.k_hat, "stable": rep.stable })))
}

// carleman

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CarlemanOp {
    Tail,
    InverseTail,
    Legendre,
    Shellsum,
    Quasianalytic,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct Carleman {
    #[arg(long)]
    pub family: Option<String>,
    #[arg(long, value_enum)]
    pub op: Option<CarlemanOp>,
    /// Index for `tail`
    #[arg(long, default_value_t = 1)]
    pub n: u64,
    /// Level for `inverse-tail`
    #[arg(long)]
    pub r: Option<f64>,
    /// Argument for `legendre`
    #[arg(long)]
    pub y: Option<f64>,
    /// Frequency for `shellsum`
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub c: f64,
    #[arg(long, default_value_t = 2)]
    pub n0: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn carleman(a: &Carleman) -> CliResult<bool> {
    let fam = family_of(&a.family)?;
    let need = |v: Option<f64>, flag: &str| v.ok_or_else(|| CliError::Config(format!("--{flag} is required for this op")));
    let op = a.op.ok_or_else(|| CliError::Config("--op is required".into()))?;
    let result = match op {
        CarlemanOp::Tail => match fam.tail(a.n)? {
            Tail::Converges { value, lower, upper } => json!({ "n": a.n, "converges": true, "value": value, "lower": lower, "upper": upper }),
            Tail::Diverges => json!({ "n": a.n, "converges": false }),
        },
        CarlemanOp::InverseTail => {
            let r = need(a.r, "r")?;
            let idx = fam.inverse_tail(r)?;
            json!({ "r": r, "index": idx.exact(), "ln_index": idx.ln() })
        }
        CarlemanOp::Legendre => {
            let y = need(a.y, "y")?;
            let l = fam.legendre(y)?;
            json!({ "y": y, "value": l.value, "argmax": l.argmax })
        }
        CarlemanOp::Shellsum => {
            let lambda = need(a.lambda, "lambda")?;
            json!({ "lambda": lambda, "c": a.c, "n0": a.n0, "value": fam.shellsum_upper(lambda, a.c, a.n0)? })
        }
        CarlemanOp::Quasianalytic => json!({ "quasianalytic": format!("{:?}", fam.quasianalytic()) }),
    };
    let doc = json!({ "family": fam.spec(), "op": op, "result": result });
    write_json(a.out.as_deref(), &doc)?;
    Ok(true)
}

// vdc-check

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct VdcCheck {
    #[arg(long, default_value = "poly:0,0,0,1")]
    pub phase: Option<String>,
    /// Frequency at which the constant is fitted
    #[arg(long, default_value_t = 1e4)]
    pub fit_lambda: f64,
    /// Frequencies checked against the fitted constant
    #[arg(long, value_delimiter = ',', default_value = "1e5,1e6")]
    pub lambdas: Vec<f64>,
    #[arg(long, default_value_t = 20)]
    pub j_max: u32,
    #[arg(long, default_value_t = 10.0)]
    pub c_max: f64,
    #[command(flatten)]
    #[serde(flatten)]
    pub quad: QuadArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn vdc_check(a: &VdcCheck) -> CliResult<bool> {
    let (_, phase) = phase_of(&a.phase)?;
    let cfg = a.quad.config()?;
    let (order, fit) = vdc_shell_values(&phase, a.fit_lambda, 0..=a.j_max, &cfg)?;
    let Some(k) = order else {
        return Err(CliError::Config("the phase has no odd part".into()));
    };
    let c = vdc_fit_constant(&fit, k);
    let mut w = csv_writer(a.out.as_deref())?;
    w.write_record(["lambda", "j", "abs_J", "Lambda_j", "profile", "ratio"])?;
    let mut worst: f64 = 0.0;
    for &lambda in std::iter::once(&a.fit_lambda).chain(&a.lambdas) {
        let shells = if lambda == a.fit_lambda { fit.clone() } else { vdc_shell_values(&phase, lambda, 0..=a.j_max, &cfg)?.1 };
        if lambda != a.fit_lambda {
            worst = worst.max(vdc_max_ratio(&shells, k));
        }
        for s in &shells {
            let p = vdc_profile(s.big_lambda, k);
            w.write_record([lambda.to_string(), s.j.to_string(), s.abs_j.to_string(), s.big_lambda.to_string(), p.to_string(), (s.abs_j / p).to_string()])?;
        }
    }
    w.flush()?;
    let pass = c <= a.c_max && worst <= c;
    Ok(verdict("vdc-check", pass, json!({ "order": k, "fitted_c": c, "c_max": a.c_max, "max_ratio": worst })))
}

// poly-sweep

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct PolySweep {
    #[arg(long, default_value_t = 2)]
    pub d_min: u32,
    #[arg(long, default_value_t = 40)]
    pub d_max: u32,
    #[arg(long, default_value_t = 200)]
    pub trials: usize,
    /// Coefficient scale: coefficients are uniform in [-scale, scale]
    #[arg(long, default_value_t = 1000.0)]
    pub scale: f64,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    #[arg(long, default_value_t = 20.0)]
    pub ratio_max: f64,
    #[command(flatten)]
    #[serde(flatten)]
    pub quad: QuadArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn poly_sweep(a: &PolySweep) -> CliResult<bool> {
    let cfg = a.quad.config()?;
    if a.d_min > a.d_max {
        return Err(CliError::Config("--d-min exceeds --d-max".into()));
    }
    let rows = input(polynomial_sweep(a.d_min..=a.d_max, a.trials, a.scale, a.seed, &cfg))?;
    let mut w = csv_writer(a.out.as_deref())?;
    w.write_record(["degree", "random_max", "extreme", "max_abs", "ratio_to_log_d"])?;
    for r in &rows {
        let ratio = r.ratio_to_log_d.map(|v| v.to_string()).unwrap_or_default();
        w.write_record([r.degree.to_string(), r.random_max.to_string(), r.extreme.to_string(), r.max_abs.to_string(), ratio])?;
    }
    w.flush()?;
    let worst = rows.iter().filter_map(|r| r.ratio_to_log_d).fold(0.0, f64::max);
    let ceiling = rows.iter().all(|r| r.max_abs <= 3.0 * (r.degree as f64).ln() + 10.0);
    Ok(verdict("poly-sweep", worst <= a.ratio_max && ceiling, json!({ "max_ratio_to_log_d": worst, "below_ceiling": ceiling })))
}
