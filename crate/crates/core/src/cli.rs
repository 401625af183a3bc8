//! Command-line front end: JSON configs in, JSON reports and CSV tables out.
//!
//! Exit status is 0 on success, 1 when a check fails or a computation
//! errors, and 2 for usage and configuration errors.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::{json, Value};

use crate::curve::{mollification_bounds, CurveKind, CurveSpec};
use crate::cutoff::{
    check_derivatives, verify_cutoff_bounds, CutoffFamily, BOUND_RATIO_LIMIT, DEFAULT_SHELL_SAMPLES,
};
use crate::numerics::erfc_fn;
use crate::removability::{
    classify, ClassifyConfig, DistancePowerField, Locus, LogRootField, SamplingOptions,
    SolutionField, Verdict,
};
use crate::singular_set::{
    verify_tube, ManifoldSpec, TubeKernel, TubeRegion, DEFAULT_TUBE_SAMPLES,
};
use crate::singular_solution::{
    asymptotic_coefficient, distributional_pairing_with, geometric_radii, reference_constant,
    residual_convergence, FnField, PairingOptions, ShiftedKernel, SingularField, SpaceTimeField,
    TestFunction, FIELD_TOL,
};
use crate::Error;

/// Version stamped into every output schema.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Parser)]
#[command(
    name = "heatsing",
    version,
    about = "Moving singularities of the heat equation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// JSON configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Directory for `<command>.json` and `<command>.csv`; stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Overrides the configured RNG seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Leading coefficient of F next to the curve.
    Asymptote,
    /// F (or the truncated F^τ) at listed points.
    Field,
    /// Finite-difference heat residual of F and its step-halving ratio.
    Residual,
    /// Both sides of the weak identity against a bump test function.
    Pairing,
    /// F for a stationary source against the erfc closed form (N = 3).
    OracleCheck,
    /// Scaled derivative sups and finite-difference checks of the cut-off family.
    VerifyCutoff,
    /// Monte Carlo tube integrals over a decreasing radius list.
    VerifyTube,
    /// Removability classification of a solution field.
    Classify,
    /// Mollification distance and derivative bounds.
    Moll,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Asymptote => "asymptote",
            Command::Field => "field",
            Command::Residual => "residual",
            Command::Pairing => "pairing",
            Command::OracleCheck => "oracle-check",
            Command::VerifyCutoff => "verify-cutoff",
            Command::VerifyTube => "verify-tube",
            Command::Classify => "classify",
            Command::Moll => "moll",
        }
    }
}

#[derive(Debug)]
pub enum CliError {
    /// Unreadable or invalid configuration; exit 2.
    Config(String),
    /// A computation failed; exit 1.
    Run(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Run(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Run(m) => write!(f, "error: {m}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Domain(m) => CliError::Config(m),
            other => CliError::Run(other.to_string()),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// A CSV table with a version line and a header row.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(header: &[&str]) -> Self {
        Table {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    pub fn render(&self, command: Command) -> String {
        let mut s = format!("# heatsing {} v{SCHEMA_VERSION}\n", command.name());
        s.push_str(&self.header.join(","));
        s.push('\n');
        for r in &self.rows {
            s.push_str(&r.join(","));
            s.push('\n');
        }
        s
    }
}

/// Shortest round-trip text; exponent form outside `[1e-5, 1e16)`.
fn num(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || !v.is_finite() || (1e-5..1e16).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

/// What a command produced.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub report: Value,
    pub table: Option<Table>,
    pub passed: bool,
}

/// Parses `text` as the config of a command, naming the offending key on error.
pub fn parse_config<T: DeserializeOwned>(text: &str) -> CliResult<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        CliError::Config(format!("at `{path}`: {}", e.inner()))
    })
}

fn need_seed(config: Option<u64>, flag: Option<u64>) -> CliResult<u64> {
    flag.or(config).ok_or_else(|| {
        CliError::Config("missing `seed` (set it in the config or pass --seed)".into())
    })
}

/// Default field tolerance: rough curves cannot afford the smooth-curve one.
fn default_field_tol(curve: &CurveSpec) -> f64 {
    if curve.kind == CurveKind::Weierstrass {
        1e-5
    } else {
        FIELD_TOL
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct AsymptoteConfig {
    curve: CurveSpec,
    #[serde(default = "half")]
    t: f64,
    #[serde(default)]
    direction: Option<Vec<f64>>,
    #[serde(default)]
    radii: Option<Vec<f64>>,
    #[serde(default)]
    tolerance: Option<f64>,
    #[serde(default = "one_percent")]
    max_relative_error: f64,
}

fn half() -> f64 {
    0.5
}

fn one_percent() -> f64 {
    1e-2
}

fn run_asymptote(text: &str) -> CliResult<Outcome> {
    let cfg: AsymptoteConfig = parse_config(text)?;
    let curve = cfg.curve.build()?;
    let n = curve.dim();
    let tol = cfg
        .tolerance
        .unwrap_or_else(|| default_field_tol(&cfg.curve));
    let field = SingularField::new(curve)?.with_tolerance(tol);
    let direction = cfg.direction.unwrap_or_else(|| {
        let mut d = vec![0.0; n];
        d[0] = 1.0;
        d
    });
    let radii = cfg.radii.unwrap_or_else(|| {
        if n == 2 {
            geometric_radii(1e-2, 1e-6, 9)
        } else {
            geometric_radii(1e-1, 1e-3, 9)
        }
    });
    let est = asymptotic_coefficient(&field, cfg.t, &direction, &radii)?;
    let mut table = Table::new(&["rho", "value_plus", "value_minus", "value", "scaled"]);
    for s in &est.samples {
        table.push(vec![
            num(s.rho),
            num(s.value_plus),
            num(s.value_minus),
            num(s.value),
            num(s.scaled),
        ]);
    }
    let passed = est.relative_error <= cfg.max_relative_error;
    Ok(Outcome {
        report: json!({
            "estimate": est.estimate,
            "reference_constant": reference_constant(n)?,
            "relative_error": est.relative_error,
            "error_estimate": est.error_estimate,
            "remainder_exponent": est.remainder_exponent,
            "monotone": est.monotone,
            "dim": n,
            "t": cfg.t,
            "tolerance": tol,
            "passed": passed,
        }),
        table: Some(table),
        passed,
    })
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FieldPoint {
    x: Vec<f64>,
    t: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FieldConfig {
    curve: CurveSpec,
    points: Vec<FieldPoint>,
    /// Evaluate `F^τ` instead of `F`.
    #[serde(default)]
    tau: Option<f64>,
    #[serde(default)]
    tolerance: Option<f64>,
}

fn coordinate_header(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("x{i}")).collect()
}

fn run_field(text: &str) -> CliResult<Outcome> {
    let cfg: FieldConfig = parse_config(text)?;
    let curve = cfg.curve.build()?;
    let n = curve.dim();
    let tol = cfg
        .tolerance
        .unwrap_or_else(|| default_field_tol(&cfg.curve));
    let field = SingularField::new(curve)?.with_tolerance(tol);
    let mut header = vec!["t".to_string()];
    header.extend(coordinate_header(n));
    header.extend(["value".to_string(), "error_estimate".to_string()]);
    let mut table = Table {
        header,
        rows: Vec::new(),
    };
    let mut values = Vec::with_capacity(cfg.points.len());
    for p in &cfg.points {
        let q = match cfg.tau {
            Some(tau) => crate::numerics::QuadratureResult {
                value: field.eval_truncated(&p.x, p.t, tau)?,
                ..Default::default()
            },
            None => field.eval_with_error(&p.x, p.t)?,
        };
        let mut row = vec![num(p.t)];
        row.extend(p.x.iter().map(|v| num(*v)));
        row.extend([num(q.value), num(q.error_estimate)]);
        table.push(row);
        values.push(q.value);
    }
    Ok(Outcome {
        report: json!({ "dim": n, "tau": cfg.tau, "tolerance": tol, "values": values }),
        table: Some(table),
        passed: true,
    })
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ResidualConfig {
    curve: CurveSpec,
    points: Vec<FieldPoint>,
    #[serde(default = "default_h")]
    h: f64,
    #[serde(default = "residual_tol")]
    tolerance: f64,
    #[serde(default = "ratio_range")]
    ratio_range: (f64, f64),
}

fn default_h() -> f64 {
    1e-2
}

fn residual_tol() -> f64 {
    1e-13
}

fn ratio_range() -> (f64, f64) {
    (3.5, 4.5)
}

fn run_residual(text: &str) -> CliResult<Outcome> {
    let cfg: ResidualConfig = parse_config(text)?;
    let curve = cfg.curve.build()?;
    let n = curve.dim();
    let field = SingularField::new(curve)?.with_tolerance(cfg.tolerance);
    let mut header = vec!["t".to_string()];
    header.extend(coordinate_header(n));
    header.extend(["h", "residual_h", "residual_half", "ratio"].map(String::from));
    let mut table = Table {
        header,
        rows: Vec::new(),
    };
    let mut passed = true;
    let mut ratios = Vec::new();
    for p in &cfg.points {
        let rc = residual_convergence(&field, &p.x, p.t, cfg.h)?;
        passed &= rc.ratio >= cfg.ratio_range.0 && rc.ratio <= cfg.ratio_range.1;
        let mut row = vec![num(p.t)];
        row.extend(p.x.iter().map(|v| num(*v)));
        row.extend([
            num(rc.h),
            num(rc.residual_h),
            num(rc.residual_half),
            num(rc.ratio),
        ]);
        table.push(row);
        ratios.push(rc.ratio);
    }
    Ok(Outcome {
        report: json!({ "h": cfg.h, "ratios": ratios, "ratio_range": cfg.ratio_range, "passed": passed }),
        table: Some(table),
        passed,
    })
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PairingConfig {
    curve: CurveSpec,
    test_function: TestFunction,
    #[serde(default = "pairing_tol")]
    tolerance: f64,
    #[serde(default)]
    nodes: Option<usize>,
    #[serde(default)]
    samples: Option<usize>,
    #[serde(default)]
    seed: Option<u64>,
    #[serde(default = "gap_limit")]
    max_relative_gap: f64,
    #[serde(default = "abs_limit")]
    max_abs_lhs: f64,
}

fn pairing_tol() -> f64 {
    1e-8
}

fn gap_limit() -> f64 {
    1e-3
}

fn abs_limit() -> f64 {
    1e-6
}

fn run_pairing(text: &str, seed_flag: Option<u64>) -> CliResult<Outcome> {
    let cfg: PairingConfig = parse_config(text)?;
    let curve = cfg.curve.build()?;
    let n = curve.dim();
    let defaults = PairingOptions::default();
    let seed = if n > 2 {
        need_seed(cfg.seed, seed_flag)?
    } else {
        seed_flag.or(cfg.seed).unwrap_or(0)
    };
    let opts = PairingOptions {
        nodes: cfg.nodes.unwrap_or(defaults.nodes),
        samples: cfg.samples.unwrap_or(defaults.samples),
        seed,
    };
    let field = SingularField::new(curve)?.with_tolerance(cfg.tolerance);
    let p = distributional_pairing_with(&field, &cfg.test_function, &opts)?;
    let gap = if p.rhs != 0.0 {
        Some(p.relative_gap())
    } else {
        None
    };
    // Monte Carlo sides are judged against three standard errors as well.
    let noise = if p.monte_carlo {
        3.0 * p.lhs_error
    } else {
        0.0
    };
    let passed = match gap {
        Some(g) => g <= cfg.max_relative_gap || (p.lhs - p.rhs).abs() <= noise,
        None => p.lhs.abs() <= cfg.max_abs_lhs.max(noise),
    };
    let mut table = Table::new(&["lhs", "rhs", "lhs_error", "relative_gap", "monte_carlo"]);
    table.push(vec![
        num(p.lhs),
        num(p.rhs),
        num(p.lhs_error),
        opt(gap),
        p.monte_carlo.to_string(),
    ]);
    Ok(Outcome {
        report: json!({
            "lhs": p.lhs,
            "rhs": p.rhs,
            "lhs_error": p.lhs_error,
            "relative_gap": gap,
            "monte_carlo": p.monte_carlo,
            "seed": seed,
            "passed": passed,
        }),
        table: Some(table),
        passed,
    })
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct OracleConfig {
    radii: Vec<f64>,
    times: Vec<f64>,
    tolerance: f64,
    max_relative_error: f64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            radii: vec![0.05, 0.2, 0.5, 1.0, 2.0],
            times: vec![0.01, 0.1, 0.5, 1.0, 2.0],
            tolerance: 1e-12,
            max_relative_error: 1e-8,
        }
    }
}

fn run_oracle(text: &str) -> CliResult<Outcome> {
    let cfg: OracleConfig = parse_config(text)?;
    let horizon = cfg.times.iter().cloned().fold(0.0, f64::max);
    if cfg.radii.is_empty() || cfg.times.is_empty() || !(horizon > 0.0) {
        return Err(CliError::Config(
            "radii and times must be non-empty and positive".into(),
        ));
    }
    let origin = CurveSpec {
        kind: CurveKind::Constant,
        alpha: None,
        params: Default::default(),
        dim: 3,
        horizon,
        holder_constant: None,
    };
    let field = SingularField::new(origin.build()?)?.with_tolerance(cfg.tolerance);
    let mut table = Table::new(&["R", "t", "value", "oracle", "relative_error"]);
    let mut worst: f64 = 0.0;
    for &r in &cfg.radii {
        for &t in &cfg.times {
            let value = field.eval(&[r, 0.0, 0.0], t)?;
            let oracle = erfc_fn(r / (2.0 * t.sqrt())) / (4.0 * std::f64::consts::PI * r);
            let err = ((value - oracle) / oracle).abs();
            worst = worst.max(err);
            table.push(vec![num(r), num(t), num(value), num(oracle), num(err)]);
        }
    }
    let passed = worst <= cfg.max_relative_error;
    Ok(Outcome {
        report: json!({ "dim": 3, "max_relative_error": worst, "limit": cfg.max_relative_error, "passed": passed }),
        table: Some(table),
        passed,
    })
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CutoffConfig {
    curve: CurveSpec,
    #[serde(default = "cutoff_radii")]
    radii: Vec<f64>,
    #[serde(default = "shell_samples")]
    samples: usize,
    #[serde(default = "fd_samples")]
    fd_samples: usize,
    #[serde(default)]
    seed: Option<u64>,
    #[serde(default = "fd_limit")]
    max_fd_error: f64,
}

fn cutoff_radii() -> Vec<f64> {
    (3..=8).map(|k| 0.5f64.powi(k)).collect()
}

fn shell_samples() -> usize {
    DEFAULT_SHELL_SAMPLES
}

fn fd_samples() -> usize {
    1000
}

fn fd_limit() -> f64 {
    1e-3
}

fn run_verify_cutoff(text: &str, seed_flag: Option<u64>) -> CliResult<Outcome> {
    let cfg: CutoffConfig = parse_config(text)?;
    let seed = need_seed(cfg.seed, seed_flag)?;
    let family = CutoffFamily::new(cfg.curve.build()?, &cfg.radii)?;
    let table = verify_cutoff_bounds(&family, &cfg.radii, cfg.samples, seed)?;
    let mut csv = Table::new(&[
        "r",
        "epsilon",
        "sup_scaled_grad",
        "sup_scaled_lap",
        "sup_scaled_dt",
        "grad_rel_error",
        "lap_rel_error",
        "dt_rel_error",
    ]);
    let mut fd_ok = true;
    for (k, row) in table.rows.iter().enumerate() {
        let check = check_derivatives(
            &family.level(row.r)?,
            cfg.fd_samples,
            seed.wrapping_add(1000 + k as u64),
        )?;
        fd_ok &= check.grad_rel_error <= cfg.max_fd_error
            && check.lap_rel_error <= cfg.max_fd_error
            && check.dt_rel_error <= cfg.max_fd_error;
        csv.push(vec![
            num(row.r),
            num(row.epsilon),
            num(row.sup_scaled_grad),
            num(row.sup_scaled_lap),
            num(row.sup_scaled_dt),
            num(check.grad_rel_error),
            num(check.lap_rel_error),
            num(check.dt_rel_error),
        ]);
    }
    let passed = table.bounded && fd_ok;
    Ok(Outcome {
        report: json!({
            "grad_ratio": table.grad_ratio,
            "lap_ratio": table.lap_ratio,
            "dt_ratio": table.dt_ratio,
            "ratio_limit": BOUND_RATIO_LIMIT,
            "bounded": table.bounded,
            "finite_differences_ok": fd_ok,
            "seed": seed,
            "passed": passed,
        }),
        table: Some(csv),
        passed,
    })
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TubeConfig {
    manifold: ManifoldSpec,
    #[serde(default = "half")]
    t: f64,
    radii: Vec<f64>,
    #[serde(default)]
    kernel: Option<TubeKernel>,
    #[serde(default = "tube_samples")]
    samples: usize,
    #[serde(default)]
    seed: Option<u64>,
    /// Relative tolerance against closed forms, on top of 3 standard errors.
    #[serde(default = "one_percent")]
    exact_tolerance: f64,
}

fn tube_samples() -> usize {
    DEFAULT_TUBE_SAMPLES
}

fn run_verify_tube(text: &str, seed_flag: Option<u64>) -> CliResult<Outcome> {
    let cfg: TubeConfig = parse_config(text)?;
    let seed = need_seed(cfg.seed, seed_flag)?;
    let manifold = cfg.manifold.build()?;
    let kernel = cfg
        .kernel
        .unwrap_or(if manifold.dim() == manifold.params() + 2 {
            TubeKernel::Log
        } else {
            TubeKernel::Power
        });
    let table = verify_tube(&manifold, cfg.t, &cfg.radii, kernel, cfg.samples, seed)?;
    let mut csv = Table::new(&[
        "r",
        "integral",
        "stderr",
        "scaled_value",
        "exact",
        "verdict",
    ]);
    let mut all_match = true;
    for row in &table.rows {
        let verdict = match row.exact {
            Some(e) => {
                let ok =
                    (row.integral - e).abs() <= cfg.exact_tolerance * e.abs() + 3.0 * row.stderr;
                all_match &= ok;
                if ok {
                    "match"
                } else {
                    "mismatch"
                }
            }
            None if table.bounded => "bounded",
            None => "unbounded",
        };
        csv.push(vec![
            num(row.r),
            num(row.integral),
            num(row.stderr),
            num(row.scaled_value),
            opt(row.exact),
            verdict.to_string(),
        ]);
    }
    let measure = manifold.surface_measure(cfg.t)?;
    let passed = table.bounded && all_match;
    let region = TubeRegion {
        manifold: &manifold,
        t: cfg.t,
        r: cfg.radii[0],
    };
    Ok(Outcome {
        report: json!({
            "kernel": kernel,
            "ratio": table.ratio,
            "bounded": table.bounded,
            "closed_forms_match": all_match,
            "closed_form_known": region.exact_integral(kernel).is_some(),
            "surface_measure": measure,
            "samples": cfg.samples,
            "seed": seed,
            "passed": passed,
        }),
        table: Some(csv),
        passed,
    })
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, tag = "kind", rename_all = "snake_case")]
enum FieldSpec {
    /// The Duhamel field of the locus curve.
    Singular {
        #[serde(default)]
        tolerance: Option<f64>,
    },
    /// `Φ(x − center, t + shift)`.
    Gaussian {
        center: Vec<f64>,
        shift: f64,
    },
    /// `scale · d^{−power}`.
    DistancePower {
        power: f64,
        #[serde(default = "unit")]
        scale: f64,
    },
    /// `√log(1/d)`.
    LogRoot,
    Zero,
}

fn unit() -> f64 {
    1.0
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct LocusSpec {
    #[serde(default)]
    curve: Option<CurveSpec>,
    #[serde(default)]
    manifold: Option<ManifoldSpec>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ClassifyRunConfig {
    field: FieldSpec,
    locus: LocusSpec,
    #[serde(default)]
    eps_list: Option<Vec<f64>>,
    #[serde(default)]
    windows: Option<Vec<(f64, f64)>>,
    #[serde(default)]
    r_grid: Option<Vec<f64>>,
    #[serde(default)]
    exponent_radii: Option<Vec<f64>>,
    #[serde(default)]
    time_samples: Option<usize>,
    #[serde(default)]
    normal_samples: Option<usize>,
    #[serde(default)]
    r_min: Option<f64>,
    #[serde(default)]
    seed: Option<u64>,
    /// Verdict the run must produce; a mismatch exits with status 1.
    #[serde(default)]
    expect: Option<Verdict>,
}

fn run_classify(text: &str, seed_flag: Option<u64>) -> CliResult<Outcome> {
    let cfg: ClassifyRunConfig = parse_config(text)?;
    let seed = need_seed(cfg.seed, seed_flag)?;
    let (locus, curve_spec) = match (cfg.locus.curve, cfg.locus.manifold) {
        (Some(c), None) => (Locus::Curve(c.build()?), Some(c)),
        (None, Some(m)) => (Locus::Manifold(m.build()?), None),
        _ => {
            return Err(CliError::Config(
                "at `locus`: give exactly one of `curve` and `manifold`".into(),
            ))
        }
    };
    let n = locus.dim();
    let singular;
    let gaussian;
    let power;
    let log_root;
    let zero = FnField::new(n, |_: &[f64], _| 0.0);
    let field: &dyn SpaceTimeField = match &cfg.field {
        FieldSpec::Singular { tolerance } => {
            let (Locus::Curve(curve), Some(spec)) = (&locus, &curve_spec) else {
                return Err(CliError::Config(
                    "at `field`: the singular field needs a curve locus".into(),
                ));
            };
            singular =
                SingularField::new(curve.clone())?.with_tolerance(tolerance.unwrap_or_else(|| {
                    if spec.kind == CurveKind::Weierstrass {
                        1e-4
                    } else {
                        1e-8
                    }
                }));
            &singular
        }
        FieldSpec::Gaussian { center, shift } => {
            gaussian = ShiftedKernel::new(center.clone(), *shift)?;
            &gaussian
        }
        FieldSpec::DistancePower { power: p, scale } => {
            power = DistancePowerField {
                locus: &locus,
                power: *p,
                scale: *scale,
            };
            &power
        }
        FieldSpec::LogRoot => {
            log_root = LogRootField { locus: &locus };
            &log_root
        }
        FieldSpec::Zero => &zero,
    };
    let defaults = ClassifyConfig::default();
    let sampling_defaults = SamplingOptions::default();
    let config = ClassifyConfig {
        eps_list: cfg.eps_list.unwrap_or(defaults.eps_list),
        windows: cfg.windows,
        r_grid: cfg.r_grid,
        exponent_radii: cfg.exponent_radii,
        sampling: SamplingOptions {
            time_samples: cfg.time_samples.unwrap_or(sampling_defaults.time_samples),
            normal_samples: cfg
                .normal_samples
                .unwrap_or(sampling_defaults.normal_samples),
            r_min: cfg.r_min.unwrap_or(sampling_defaults.r_min),
            seed,
        },
    };
    let sf = SolutionField::new(field, &locus)?;
    let report = classify(&sf, &config)?;
    let mut csv = Table::new(&["window", "eps", "t", "d", "abs_u", "bound"]);
    let rows = report.sample_rows(&sf);
    let per_eps = report.samples.len();
    for (k, row) in rows.iter().enumerate() {
        let window = report.samples[k % per_eps.max(1)].0;
        csv.push(vec![
            window.to_string(),
            num(row[0]),
            num(row[1]),
            num(row[2]),
            num(row[3]),
            num(row[4]),
        ]);
    }
    let passed = cfg.expect.is_none_or(|v| v == report.verdict);
    let mut value = serde_json::to_value(&report).map_err(|e| CliError::Run(e.to_string()))?;
    value["seed"] = json!(seed);
    value["expected"] = json!(cfg.expect);
    value["passed"] = json!(passed);
    Ok(Outcome {
        report: value,
        table: Some(csv),
        passed,
    })
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct MollConfig {
    curve: CurveSpec,
    #[serde(default = "moll_eps")]
    epsilons: Vec<f64>,
    #[serde(default = "moll_samples")]
    samples: usize,
    #[serde(default = "moll_slack")]
    slack: f64,
}

fn moll_eps() -> Vec<f64> {
    vec![1e-1, 1e-2, 1e-3]
}

fn moll_samples() -> usize {
    2000
}

fn moll_slack() -> f64 {
    0.05
}

fn run_moll(text: &str) -> CliResult<Outcome> {
    let cfg: MollConfig = parse_config(text)?;
    let curve = cfg.curve.build()?;
    let mut table = Table::new(&[
        "epsilon",
        "sup_coordinate_distance",
        "coordinate_bound",
        "sup_distance",
        "euclidean_bound",
        "sup_coordinate_derivative",
        "derivative_bound",
        "holds",
    ]);
    let mut passed = true;
    for &eps in &cfg.epsilons {
        let b = mollification_bounds(&curve, eps, cfg.samples)?;
        let holds = b.holds(cfg.slack);
        passed &= holds;
        table.push(vec![
            num(eps),
            num(b.sup_coordinate_distance),
            num(b.coordinate_bound),
            num(b.sup_distance),
            num(b.euclidean_bound),
            num(b.sup_coordinate_derivative),
            num(b.derivative_bound),
            holds.to_string(),
        ]);
    }
    Ok(Outcome {
        report: json!({ "slack": cfg.slack, "passed": passed }),
        table: Some(table),
        passed,
    })
}

/// Runs `command` on the config text.
pub fn execute(command: Command, config_text: &str, seed: Option<u64>) -> CliResult<Outcome> {
    let mut outcome = match command {
        Command::Asymptote => run_asymptote(config_text),
        Command::Field => run_field(config_text),
        Command::Residual => run_residual(config_text),
        Command::Pairing => run_pairing(config_text, seed),
        Command::OracleCheck => run_oracle(config_text),
        Command::VerifyCutoff => run_verify_cutoff(config_text, seed),
        Command::VerifyTube => run_verify_tube(config_text, seed),
        Command::Classify => run_classify(config_text, seed),
        Command::Moll => run_moll(config_text),
    }?;
    if let Value::Object(map) = &mut outcome.report {
        map.insert(
            "schema".into(),
            json!(format!("heatsing/{}/v{SCHEMA_VERSION}", command.name())),
        );
    }
    Ok(outcome)
}

fn write_outputs(command: Command, outcome: &Outcome, dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir)
        .map_err(|e| CliError::Run(format!("cannot create {}: {e}", dir.display())))?;
    let json_path = dir.join(format!("{}.json", command.name()));
    let body = serde_json::to_string_pretty(&outcome.report)
        .map_err(|e| CliError::Run(e.to_string()))?
        + "\n";
    fs::write(&json_path, body)
        .map_err(|e| CliError::Run(format!("cannot write {}: {e}", json_path.display())))?;
    if let Some(t) = &outcome.table {
        let csv_path = dir.join(format!("{}.csv", command.name()));
        fs::write(&csv_path, t.render(command))
            .map_err(|e| CliError::Run(format!("cannot write {}: {e}", csv_path.display())))?;
    }
    Ok(())
}

/// Parses arguments, runs the command and returns the exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run_cli(&cli) {
        Ok(passed) => {
            if passed {
                0
            } else {
                1
            }
        }
        Err(e) => {
            eprintln!("heatsing {}: {e}", cli.command.name());
            e.exit_code()
        }
    }
}

fn run_cli(cli: &Cli) -> CliResult<bool> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Run(e.to_string()))?;
    }
    let text = match &cli.config {
        Some(path) => fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?,
        None => "{}".to_string(),
    };
    let outcome = execute(cli.command, &text, cli.seed)?;
    match &cli.out {
        Some(dir) => write_outputs(cli.command, &outcome, dir)?,
        None => {
            let mut s = serde_json::to_string_pretty(&outcome.report)
                .map_err(|e| CliError::Run(e.to_string()))?;
            let _ = writeln!(s);
            print!("{s}");
        }
    }
    Ok(outcome.passed)
}
