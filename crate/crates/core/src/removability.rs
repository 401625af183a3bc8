//! Sampled removability criteria for solutions singular on a moving point or
//! set, and growth-exponent estimation.
//!
//! The criteria quantify over every point near the locus; here they are
//! checked on a finite sample (time grid × directions × geometric radii), so
//! a pass is evidence and not proof.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curve::{HolderCurve, MAX_DIM};
use crate::error::{domain, Error, Result};
use crate::numerics::linear_fit;
use crate::singular_set::SingularManifold;
use crate::singular_solution::SpaceTimeField;

/// Smallest radius sampled by the criterion tests.
pub const DEFAULT_R_MIN: f64 = 1e-4;

/// Time samples per window.
pub const DEFAULT_TIME_SAMPLES: usize = 32;

/// Directions about a point locus.
pub const POINT_DIRECTIONS: usize = 8;

/// Normal samples per time and radius about a set.
pub const DEFAULT_NORMAL_SAMPLES: usize = 64;

/// Tolerance on the growth exponent when calling a singularity genuine.
pub const EXPONENT_TOLERANCE: f64 = 0.05;

/// Closest approach of the fixed-window log test.
pub const LOG_SAMPLING_FLOOR: f64 = 1e-8;
/// Deepest sampled distance when `classify` runs in log mode.
pub const LOG_CLASSIFY_FLOOR: f64 = 1e-12;

const LEVELS_PER_DECADE: f64 = 4.0;

/// The singular locus of a solution.
#[derive(Debug, Clone)]
pub enum Locus {
    Curve(HolderCurve),
    Manifold(SingularManifold),
}

impl Locus {
    pub fn dim(&self) -> usize {
        match self {
            Locus::Curve(c) => c.dim(),
            Locus::Manifold(m) => m.dim(),
        }
    }

    /// Parameter count `m` (0 for a point).
    pub fn params(&self) -> usize {
        match self {
            Locus::Curve(_) => 0,
            Locus::Manifold(m) => m.params(),
        }
    }

    pub fn horizon(&self) -> f64 {
        match self {
            Locus::Curve(c) => c.horizon(),
            Locus::Manifold(m) => m.horizon(),
        }
    }

    pub fn distance(&self, x: &[f64], t: f64) -> Result<f64> {
        match self {
            Locus::Curve(c) => {
                let p = c.eval(t);
                Ok(x.iter()
                    .zip(&p)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt())
            }
            Locus::Manifold(m) => Ok(m.distance(x, t)?.distance),
        }
    }

    /// Box containing the locus over `[0, T]`, from 65 time samples.
    fn bounding_box(&self) -> (Vec<f64>, Vec<f64>) {
        let n = self.dim();
        let mut lo = vec![f64::INFINITY; n];
        let mut hi = vec![f64::NEG_INFINITY; n];
        for k in 0..=64 {
            let t = self.horizon() * k as f64 / 64.0;
            let (a, b) = match self {
                Locus::Curve(c) => {
                    let p = c.eval(t);
                    (p.clone(), p)
                }
                Locus::Manifold(m) => m.bounding_box(t, 0.0),
            };
            for i in 0..n {
                lo[i] = lo[i].min(a[i]);
                hi[i] = hi[i].max(b[i]);
            }
        }
        (lo, hi)
    }

    /// A point at distance about `rho` from the locus at time `t`, with its
    /// exact distance. Point loci use the `k`-th fixed direction; sets use a
    /// random normal at a random parameter.
    fn sample(&self, t: f64, rho: f64, k: usize, rng: &mut ChaCha8Rng) -> Result<(Vec<f64>, f64)> {
        match self {
            Locus::Curve(c) => {
                let mut x = c.eval(t);
                let dir = fixed_direction(c.dim(), k);
                for (xi, di) in x.iter_mut().zip(&dir) {
                    *xi += rho * di;
                }
                let d = self.distance(&x, t)?;
                Ok((x, d))
            }
            Locus::Manifold(m) => {
                let n = m.dim();
                for _ in 0..100 {
                    let s: Vec<f64> = (0..m.params()).map(|_| rng.random::<f64>()).collect();
                    let base = m.eval(&s, t);
                    let v = DVector::from_iterator(
                        n,
                        (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)),
                    );
                    let normal = if m.params() == 0 {
                        v
                    } else {
                        let j = m.jacobian(&s, t);
                        let jt = j.transpose();
                        let Some(chol) = (&jt * &j).cholesky() else {
                            continue;
                        };
                        &v - &j * chol.solve(&(&jt * &v))
                    };
                    let len = normal.norm();
                    if !(len > 1e-12) {
                        continue;
                    }
                    let x: Vec<f64> = (0..n).map(|i| base[i] + rho * normal[i] / len).collect();
                    let d = m.distance(&x, t)?.distance;
                    if d > 0.0 {
                        return Ok((x, d));
                    }
                }
                Err(Error::OnSingularity { distance: 0.0 })
            }
        }
    }
}

/// Eight fixed unit directions: the compass rose in the plane, cube
/// diagonals in the first three coordinates otherwise.
fn fixed_direction(dim: usize, k: usize) -> Vec<f64> {
    let k = k % POINT_DIRECTIONS;
    let mut d = vec![0.0; dim];
    if dim == 2 {
        let (s, c) = (std::f64::consts::FRAC_PI_4 * k as f64).sin_cos();
        d[0] = c;
        d[1] = s;
    } else {
        let w = 1.0 / 3f64.sqrt();
        for (i, v) in d.iter_mut().take(3).enumerate() {
            *v = if (k >> i) & 1 == 1 { -w } else { w };
        }
    }
    d
}

/// A solution `u` on `Ω × (0, T)` off its singular locus.
#[derive(Clone, Copy)]
pub struct SolutionField<'a> {
    field: &'a dyn SpaceTimeField,
    locus: &'a Locus,
    domain_lo: [f64; MAX_DIM],
    domain_hi: [f64; MAX_DIM],
}

impl<'a> SolutionField<'a> {
    /// Uses the locus' bounding box inflated by 1 as `Ω`.
    pub fn new(field: &'a dyn SpaceTimeField, locus: &'a Locus) -> Result<Self> {
        let (mut lo, mut hi) = locus.bounding_box();
        for i in 0..lo.len() {
            lo[i] -= 1.0;
            hi[i] += 1.0;
        }
        Self::with_domain(field, locus, &lo, &hi)
    }

    pub fn with_domain(
        field: &'a dyn SpaceTimeField,
        locus: &'a Locus,
        lo: &[f64],
        hi: &[f64],
    ) -> Result<Self> {
        let n = locus.dim();
        if field.dim() != n {
            return domain(format!("field has dimension {}, locus {n}", field.dim()));
        }
        if lo.len() != n || hi.len() != n || lo.iter().zip(hi).any(|(a, b)| !(a < b)) {
            return domain("domain box must have N ordered coordinate ranges");
        }
        let (blo, bhi) = locus.bounding_box();
        if (0..n).any(|i| blo[i] <= lo[i] || bhi[i] >= hi[i]) {
            return domain("domain box must contain the locus");
        }
        let mut domain_lo = [0.0; MAX_DIM];
        let mut domain_hi = [0.0; MAX_DIM];
        domain_lo[..n].copy_from_slice(lo);
        domain_hi[..n].copy_from_slice(hi);
        Ok(SolutionField {
            field,
            locus,
            domain_lo,
            domain_hi,
        })
    }

    pub fn dim(&self) -> usize {
        self.locus.dim()
    }

    pub fn locus(&self) -> &Locus {
        self.locus
    }

    pub fn domain(&self) -> (&[f64], &[f64]) {
        let n = self.dim();
        (&self.domain_lo[..n], &self.domain_hi[..n])
    }

    fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .enumerate()
            .all(|(i, &v)| v > self.domain_lo[i] && v < self.domain_hi[i])
    }

    pub fn value(&self, x: &[f64], t: f64) -> Result<f64> {
        self.field.value(x, t)
    }

    /// Samples `u` at random points of `Ω × (0, T)` and returns the first
    /// non-finite value's location, if any.
    pub fn find_non_finite(&self, samples: usize, seed: u64) -> Result<Option<(Vec<f64>, f64)>> {
        let n = self.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..samples {
            let x: Vec<f64> = (0..n)
                .map(|i| rng.random_range(self.domain_lo[i]..self.domain_hi[i]))
                .collect();
            let t = self.locus.horizon() * rng.random_range(0.01..0.99);
            if self.locus.distance(&x, t)? == 0.0 {
                continue;
            }
            if !self.field.value(&x, t)?.is_finite() {
                return Ok(Some((x, t)));
            }
        }
        Ok(None)
    }
}

/// Least-squares fit of `log|u|` against `log d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GrowthFit {
    pub slope: f64,
    pub intercept: f64,
    pub residual: f64,
    /// Radii that contributed.
    pub used: usize,
}

/// Direction-averaged `(mean log d, mean log|u|, mean |u|)` per radius;
/// radii where every sample vanishes are left out.
fn radial_profile(
    field: &SolutionField<'_>,
    t: f64,
    radii: &[f64],
    seed: u64,
) -> Result<Vec<(f64, f64, f64)>> {
    if radii.is_empty() || radii.iter().any(|&r| !(r > 0.0)) {
        return domain("radii must be positive and non-empty");
    }
    if !(t > 0.0 && t < field.locus.horizon()) {
        return domain(format!("t = {t} outside (0, {})", field.locus.horizon()));
    }
    let rows: Vec<Result<Option<(f64, f64, f64)>>> = radii
        .par_iter()
        .enumerate()
        .map(|(idx, &rho)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(idx as u64);
            let (mut ld, mut lu, mut au, mut count) = (0.0, 0.0, 0.0, 0usize);
            for k in 0..POINT_DIRECTIONS {
                let (x, d) = field.locus.sample(t, rho, k, &mut rng)?;
                if !field.contains(&x) {
                    return domain(format!("radius {rho} leaves the domain"));
                }
                let u = field.value(&x, t)?.abs();
                if u > 0.0 && u.is_finite() {
                    ld += d.ln();
                    lu += u.ln();
                    au += u;
                    count += 1;
                }
            }
            let c = count as f64;
            Ok((count > 0).then(|| (ld / c, lu / c, au / c)))
        })
        .collect();
    let mut out = Vec::with_capacity(radii.len());
    for r in rows {
        if let Some(p) = r? {
            out.push(p);
        }
    }
    Ok(out)
}

/// Slope of `log|u|` against `log d` over direction-averaged samples at each
/// radius (8 directions, or 8 random normals about a set).
pub fn growth_exponent(field: &SolutionField<'_>, t: f64, radii: &[f64]) -> Result<GrowthFit> {
    let profile = radial_profile(field, t, radii, 0)?;
    if profile.len() < 2 {
        return Err(Error::DegenerateFit(format!(
            "u vanishes at all but {} of {} radii",
            profile.len(),
            radii.len()
        )));
    }
    let xs: Vec<f64> = profile.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = profile.iter().map(|p| p.1).collect();
    let (slope, intercept, residual) = linear_fit(&xs, &ys)?;
    Ok(GrowthFit {
        slope,
        intercept,
        residual,
        used: profile.len(),
    })
}

/// Growth law a criterion compares `|u|` against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CriterionMode {
    /// `ε / d^{N−m−2}`
    Power,
    /// `ε log(1/d)`
    Log,
}

/// Which criterion a report applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    PointPower,
    PointLog,
    SetPower,
    SetLog,
}

impl Criterion {
    fn of(locus: &Locus, mode: CriterionMode) -> Self {
        match (locus, mode) {
            (Locus::Curve(_), CriterionMode::Power) => Criterion::PointPower,
            (Locus::Curve(_), CriterionMode::Log) => Criterion::PointLog,
            (Locus::Manifold(_), CriterionMode::Power) => Criterion::SetPower,
            (Locus::Manifold(_), CriterionMode::Log) => Criterion::SetLog,
        }
    }
}

/// The mode fixed by the codimension: logarithmic when `N = m + 2`.
pub fn natural_mode(locus: &Locus) -> CriterionMode {
    if locus.dim() == locus.params() + 2 {
        CriterionMode::Log
    } else {
        CriterionMode::Power
    }
}

fn check_mode(locus: &Locus, mode: CriterionMode) -> Result<()> {
    let (n, m) = (locus.dim(), locus.params());
    match mode {
        CriterionMode::Power if n < m + 3 => domain(format!(
            "power criterion needs N >= m + 3, got N = {n}, m = {m}"
        )),
        CriterionMode::Log if n != m + 2 => domain(format!(
            "log criterion needs N = m + 2, got N = {n}, m = {m}"
        )),
        _ => Ok(()),
    }
}

/// `d^{N−m−2}` or `log(1/d)`, so that the criterion reads `|u| ≤ ε · 1/weight`.
fn growth_scale(mode: CriterionMode, order: i32, d: f64) -> f64 {
    match mode {
        CriterionMode::Power => d.powi(-order),
        CriterionMode::Log => (1.0 / d).ln(),
    }
}

/// One sampled point of a criterion test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SampleRecord {
    pub t: f64,
    pub d: f64,
    pub abs_u: f64,
    /// Index of the sampling radius, 0 the largest.
    pub level: usize,
}

/// Sampling pattern of the criterion tests.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SamplingOptions {
    pub time_samples: usize,
    /// Random normals per time and radius about a set (point loci use 8 fixed directions).
    pub normal_samples: usize,
    pub r_min: f64,
    pub seed: u64,
}

impl Default for SamplingOptions {
    fn default() -> Self {
        SamplingOptions {
            time_samples: DEFAULT_TIME_SAMPLES,
            normal_samples: DEFAULT_NORMAL_SAMPLES,
            r_min: DEFAULT_R_MIN,
            seed: 0,
        }
    }
}

/// Radii from `hi` down to `lo`, four per decade, both ends included.
pub fn sampling_radii(hi: f64, lo: f64) -> Vec<f64> {
    let decades = (hi / lo).log10();
    let steps = ((decades * LEVELS_PER_DECADE).ceil() as usize).max(1);
    (0..=steps)
        .map(|k| hi * (lo / hi).powf(k as f64 / steps as f64))
        .collect()
}

/// Default witness grid: `1/2` down to `r_min`, four radii per decade.
pub fn default_r_grid(r_min: f64) -> Vec<f64> {
    sampling_radii(0.5, r_min)
}

fn collect_samples(
    field: &SolutionField<'_>,
    t1: f64,
    t2: f64,
    radii: &[f64],
    opts: &SamplingOptions,
) -> Result<Vec<SampleRecord>> {
    if !(t1 > 0.0 && t1 < t2 && t2 < field.locus.horizon()) {
        return domain(format!("need 0 < t1 < t2 < T, got t1 = {t1}, t2 = {t2}"));
    }
    if opts.time_samples == 0 {
        return domain("need at least one time sample");
    }
    let per_level = match field.locus {
        Locus::Curve(_) => POINT_DIRECTIONS,
        Locus::Manifold(_) => opts.normal_samples.max(1),
    };
    let chunks: Vec<Result<Vec<SampleRecord>>> = (0..opts.time_samples)
        .into_par_iter()
        .map(|k| {
            let t = t1 + (k as f64 + 0.5) * (t2 - t1) / opts.time_samples as f64;
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            rng.set_stream(k as u64);
            let mut out = Vec::with_capacity(radii.len() * per_level);
            for (level, &rho) in radii.iter().enumerate() {
                for j in 0..per_level {
                    let (x, d) = field.locus.sample(t, rho, j, &mut rng)?;
                    if !field.contains(&x) {
                        continue;
                    }
                    let u = field.value(&x, t)?;
                    if !u.is_finite() {
                        return Err(Error::NonFinite { at: d });
                    }
                    out.push(SampleRecord {
                        t,
                        d,
                        abs_u: u.abs(),
                        level,
                    });
                }
            }
            Ok(out)
        })
        .collect();
    let mut all = Vec::new();
    for c in chunks {
        all.extend(c?);
    }
    Ok(all)
}

/// Witness search over one window and one `ε`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionOutcome {
    pub eps: f64,
    pub t1: f64,
    pub t2: f64,
    /// Largest grid radius below which every sample satisfies the bound.
    pub witness: Option<f64>,
    /// Smallest distance at which the bound is violated.
    pub failure_radius: Option<f64>,
    /// Violations persist at the smallest sampled radius.
    pub fails_to_floor: bool,
    pub samples: usize,
}

/// Per-time witness radius of one `(ε, window)` test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TimeDiagnostic {
    pub eps: f64,
    pub t: f64,
    pub witness: Option<f64>,
    pub failure_radius: Option<f64>,
}

fn witness_for<'s>(
    samples: impl Iterator<Item = &'s SampleRecord>,
    eps: f64,
    mode: CriterionMode,
    order: i32,
    r_grid: &[f64],
    floor_level: usize,
) -> (Option<f64>, Option<f64>, bool) {
    let mut first_fail = f64::INFINITY;
    let mut closest = f64::INFINITY;
    let mut at_floor = false;
    for s in samples {
        closest = closest.min(s.d);
        if s.abs_u > eps * growth_scale(mode, order, s.d) {
            first_fail = first_fail.min(s.d);
            at_floor |= s.level == floor_level;
        }
    }
    // a radius with no samples below it would be a vacuous witness
    let witness = r_grid
        .iter()
        .cloned()
        .filter(|&r| r <= first_fail && r > closest)
        .fold(None, |acc: Option<f64>, r| {
            Some(acc.map_or(r, |a| a.max(r)))
        });
    let failure = first_fail.is_finite().then_some(first_fail);
    (witness, failure, at_floor)
}

fn run_criterion(
    field: &SolutionField<'_>,
    mode: CriterionMode,
    t1: f64,
    t2: f64,
    eps_list: &[f64],
    r_grid: &[f64],
    opts: &SamplingOptions,
) -> Result<(
    Vec<CriterionOutcome>,
    Vec<TimeDiagnostic>,
    Vec<SampleRecord>,
)> {
    check_mode(field.locus, mode)?;
    if eps_list.iter().any(|&e| !(e > 0.0 && e < 1.0)) {
        return domain("every ε must lie in (0, 1)");
    }
    if r_grid.is_empty() || r_grid.iter().any(|&r| !(r > 0.0)) {
        return domain("r_grid must be non-empty and positive");
    }
    if !(opts.r_min > 0.0) {
        return domain("r_min must be positive");
    }
    let r_max = r_grid.iter().cloned().fold(0.0, f64::max);
    if mode == CriterionMode::Log && r_max >= 1.0 {
        return domain("log criterion needs radii below 1");
    }
    let radii = sampling_radii(r_max.max(opts.r_min), opts.r_min);
    let samples = collect_samples(field, t1, t2, &radii, opts)?;
    let order = (field.dim() - field.locus.params()) as i32 - 2;
    let floor = radii.len() - 1;
    let mut outcomes = Vec::with_capacity(eps_list.len());
    let mut diagnostics = Vec::new();
    for &eps in eps_list {
        let (witness, failure_radius, fails_to_floor) =
            witness_for(samples.iter(), eps, mode, order, r_grid, floor);
        outcomes.push(CriterionOutcome {
            eps,
            t1,
            t2,
            witness,
            failure_radius,
            fails_to_floor,
            samples: samples.len(),
        });
        for chunk in samples.chunk_by(|a, b| a.t == b.t) {
            let (w, f, _) = witness_for(chunk.iter(), eps, mode, order, r_grid, floor);
            diagnostics.push(TimeDiagnostic {
                eps,
                t: chunk[0].t,
                witness: w,
                failure_radius: f,
            });
        }
    }
    Ok((outcomes, diagnostics, samples))
}

/// `|u| ≤ ε/|x − ξ(t)|^{N−2}` for `0 < |x − ξ(t)| < r`, `t ∈ [t1, t2]`:
/// the largest `r` in `r_grid` for which every sample complies.
pub fn test_point_criterion(
    field: &SolutionField<'_>,
    t1: f64,
    t2: f64,
    eps: f64,
    r_grid: &[f64],
) -> Result<CriterionOutcome> {
    test_point_criterion_with(field, t1, t2, eps, r_grid, &SamplingOptions::default())
}

pub fn test_point_criterion_with(
    field: &SolutionField<'_>,
    t1: f64,
    t2: f64,
    eps: f64,
    r_grid: &[f64],
    opts: &SamplingOptions,
) -> Result<CriterionOutcome> {
    if !matches!(field.locus, Locus::Curve(_)) {
        return domain("the point criterion needs a curve locus");
    }
    if field.dim() < 3 {
        return domain("the point criterion needs N >= 3");
    }
    let (mut out, _, _) = run_criterion(field, CriterionMode::Power, t1, t2, &[eps], r_grid, opts)?;
    Ok(out.remove(0))
}

/// Result of the fixed-window logarithmic test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LogCriterionOutcome {
    pub eps: f64,
    pub passed: bool,
    /// Largest `|u| / (ε log(1/d))` seen.
    pub worst_ratio: f64,
    /// Distance of that sample.
    pub worst_distance: f64,
    pub samples: usize,
}

/// `|u| ≤ ε log(1/|x − ξ(t)|)` for every sample with
/// `LOG_SAMPLING_FLOOR ≤ |x − ξ(t)| < ε`, `t ∈ [t1, t2]` (plane only).
pub fn test_log_criterion(
    field: &SolutionField<'_>,
    t1: f64,
    t2: f64,
    eps: f64,
) -> Result<LogCriterionOutcome> {
    test_log_criterion_with(field, t1, t2, eps, &SamplingOptions::default())
}

pub fn test_log_criterion_with(
    field: &SolutionField<'_>,
    t1: f64,
    t2: f64,
    eps: f64,
    opts: &SamplingOptions,
) -> Result<LogCriterionOutcome> {
    if !matches!(field.locus, Locus::Curve(_)) || field.dim() != 2 {
        return domain("the log criterion needs a curve in the plane");
    }
    if !(eps > 0.0 && eps < 1.0) {
        return domain("ε must lie in (0, 1)");
    }
    // stay strictly inside the window
    let radii = sampling_radii(eps * (1.0 - 1e-9), LOG_SAMPLING_FLOOR);
    let samples = collect_samples(field, t1, t2, &radii, opts)?;
    let mut worst = (0.0, f64::NAN);
    for s in &samples {
        let ratio = s.abs_u / (eps * (1.0 / s.d).ln());
        if ratio > worst.0 || worst.1.is_nan() {
            worst = (ratio, s.d);
        }
    }
    Ok(LogCriterionOutcome {
        eps,
        passed: worst.0 <= 1.0,
        worst_ratio: worst.0,
        worst_distance: worst.1,
        samples: samples.len(),
    })
}

/// `|u| ≤ ε/d(x, Ξ(t))^{N−m−2}` (power) or `|u| ≤ ε log(1/d(x, Ξ(t)))` (log)
/// below some `r` in `r_grid`.
pub fn test_set_criterion(
    field: &SolutionField<'_>,
    t1: f64,
    t2: f64,
    eps: f64,
    r_grid: &[f64],
    mode: CriterionMode,
) -> Result<CriterionOutcome> {
    test_set_criterion_with(
        field,
        t1,
        t2,
        eps,
        r_grid,
        mode,
        &SamplingOptions::default(),
    )
}

pub fn test_set_criterion_with(
    field: &SolutionField<'_>,
    t1: f64,
    t2: f64,
    eps: f64,
    r_grid: &[f64],
    mode: CriterionMode,
    opts: &SamplingOptions,
) -> Result<CriterionOutcome> {
    let (mut out, _, _) = run_criterion(field, mode, t1, t2, &[eps], r_grid, opts)?;
    Ok(out.remove(0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Removable,
    NonRemovable,
    Indeterminate,
}

/// Settings of [`classify`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClassifyConfig {
    pub eps_list: Vec<f64>,
    /// `(t1, t2)` pairs; `None` means `[T/4, 3T/4]`.
    pub windows: Option<Vec<(f64, f64)>>,
    /// Witness radii; `None` means [`default_r_grid`].
    pub r_grid: Option<Vec<f64>>,
    /// Radii of the growth fit; `None` picks them from the mode.
    pub exponent_radii: Option<Vec<f64>>,
    pub sampling: SamplingOptions,
}

impl Default for ClassifyConfig {
    fn default() -> Self {
        ClassifyConfig {
            eps_list: vec![0.5, 0.2, 0.1, 0.05],
            windows: None,
            r_grid: None,
            exponent_radii: None,
            sampling: SamplingOptions::default(),
        }
    }
}

/// Default growth-fit radii. A logarithmic singularity has local slope
/// `−1/log(1/d)`, so the fit must go deep to resolve a zero exponent
/// within the tolerance.
pub fn default_exponent_radii(mode: CriterionMode, r_min: f64) -> Vec<f64> {
    match mode {
        CriterionMode::Power => sampling_radii(1e-2, r_min.min(1e-3)),
        CriterionMode::Log => sampling_radii(1e-8, 1e-14),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RemovabilityReport {
    pub verdict: Verdict,
    pub criterion: Criterion,
    /// Slope of `log|u|` against `log d`, averaged over the window midpoints.
    pub exponent_estimate: f64,
    /// `−(N−m−2)` for the power criterion, 0 for the log one.
    pub critical_exponent: f64,
    /// Limit of `|u| d^{N−m−2}` (power) or slope of `|u|` in `log(1/d)` (log).
    pub coefficient_estimate: f64,
    /// Log mode only: slope of `log|u|` against `log log(1/d)`, 1 for a genuine
    /// logarithmic singularity.
    pub log_order: Option<f64>,
    pub outcomes: Vec<CriterionOutcome>,
    pub per_time: Vec<TimeDiagnostic>,
    pub r_min: f64,
    pub samples_per_window: usize,
    #[serde(skip)]
    pub samples: Vec<(usize, SampleRecord)>,
}

impl RemovabilityReport {
    /// `(eps, t, d, |u|, bound)` rows for every sample and `ε`.
    pub fn sample_rows(&self, field: &SolutionField<'_>) -> Vec<[f64; 5]> {
        let mode = match self.criterion {
            Criterion::PointPower | Criterion::SetPower => CriterionMode::Power,
            _ => CriterionMode::Log,
        };
        let order = (field.dim() - field.locus.params()) as i32 - 2;
        let eps_list: Vec<f64> = {
            let mut v: Vec<f64> = self.outcomes.iter().map(|o| o.eps).collect();
            v.dedup();
            v
        };
        let mut rows = Vec::new();
        for &eps in &eps_list {
            for (_, s) in &self.samples {
                rows.push([eps, s.t, s.d, s.abs_u, eps * growth_scale(mode, order, s.d)]);
            }
        }
        rows
    }
}

/// Runs the criterion for every `(ε, window)` and classifies the singularity.
///
/// Removable when every test finds a witness radius. Non-removable when the
/// growth exponent reaches the critical one (within
/// [`EXPONENT_TOLERANCE`]) and some test still fails at the smallest radius;
/// in log mode the growth must also be a full power of `log(1/d)`.
/// Indeterminate otherwise.
pub fn classify(field: &SolutionField<'_>, config: &ClassifyConfig) -> Result<RemovabilityReport> {
    if config.eps_list.is_empty() {
        return domain("eps_list is empty");
    }
    let locus = field.locus;
    let mode = natural_mode(locus);
    check_mode(locus, mode)?;
    let horizon = locus.horizon();
    let windows = config
        .windows
        .clone()
        .unwrap_or_else(|| vec![(0.25 * horizon, 0.75 * horizon)]);
    if windows.is_empty() {
        return domain("no time windows");
    }
    let mut opts = config.sampling;
    if mode == CriterionMode::Log {
        // ε log(1/d) only overtakes an O(1) field once d < e^{-1/ε}
        opts.r_min = opts.r_min.min(LOG_CLASSIFY_FLOOR);
    }
    let r_grid = config
        .r_grid
        .clone()
        .unwrap_or_else(|| default_r_grid(opts.r_min));
    let exponent_radii = config
        .exponent_radii
        .clone()
        .unwrap_or_else(|| default_exponent_radii(mode, opts.r_min));

    let mut outcomes = Vec::new();
    let mut per_time = Vec::new();
    let mut samples = Vec::new();
    let mut samples_per_window = 0;
    for (w, &(t1, t2)) in windows.iter().enumerate() {
        let (o, d, s) = run_criterion(field, mode, t1, t2, &config.eps_list, &r_grid, &opts)?;
        samples_per_window = s.len();
        outcomes.extend(o);
        per_time.extend(d);
        samples.extend(s.into_iter().map(|r| (w, r)));
    }

    let order = (field.dim() - locus.params()) as i32 - 2;
    let critical_exponent = match mode {
        CriterionMode::Power => -(order as f64),
        CriterionMode::Log => 0.0,
    };
    let mut slopes = Vec::new();
    let mut coefficients = Vec::new();
    let mut log_orders = Vec::new();
    for &(t1, t2) in &windows {
        let t = 0.5 * (t1 + t2);
        let profile = match radial_profile(field, t, &exponent_radii, opts.seed) {
            Ok(p) => p,
            Err(Error::DegenerateFit(_)) => continue,
            Err(e) => return Err(e),
        };
        if profile.len() < 2 {
            continue;
        }
        let ld: Vec<f64> = profile.iter().map(|p| p.0).collect();
        let lu: Vec<f64> = profile.iter().map(|p| p.1).collect();
        slopes.push(linear_fit(&ld, &lu)?.0);
        match mode {
            CriterionMode::Power => {
                let last = profile[profile.len() - 1];
                coefficients.push(last.2 * last.0.exp().powi(order));
            }
            CriterionMode::Log => {
                let logs: Vec<f64> = ld.iter().map(|l| -l).collect();
                let au: Vec<f64> = profile.iter().map(|p| p.2).collect();
                coefficients.push(linear_fit(&logs, &au)?.0);
                let lls: Vec<f64> = logs.iter().map(|l| l.ln()).collect();
                log_orders.push(linear_fit(&lls, &lu)?.0);
            }
        }
    }
    let mean = |v: &[f64]| {
        if v.is_empty() {
            f64::NAN
        } else {
            v.iter().sum::<f64>() / v.len() as f64
        }
    };
    let exponent_estimate = mean(&slopes);
    let coefficient_estimate = mean(&coefficients);
    let log_order = (mode == CriterionMode::Log).then(|| mean(&log_orders));

    let all_pass = outcomes.iter().all(|o| o.witness.is_some());
    let singular_enough = exponent_estimate <= critical_exponent + EXPONENT_TOLERANCE
        && log_order.map_or(true, |p| p >= 1.0 - 2.0 * EXPONENT_TOLERANCE);
    let verdict = if all_pass {
        Verdict::Removable
    } else if singular_enough && outcomes.iter().any(|o| o.fails_to_floor) {
        Verdict::NonRemovable
    } else {
        Verdict::Indeterminate
    };
    Ok(RemovabilityReport {
        verdict,
        criterion: Criterion::of(locus, mode),
        exponent_estimate,
        critical_exponent,
        coefficient_estimate,
        log_order,
        outcomes,
        per_time,
        r_min: opts.r_min,
        samples_per_window,
        samples,
    })
}

/// `d(x, locus)^{−p}`, a stand-in with a prescribed singularity.
pub struct DistancePowerField<'a> {
    pub locus: &'a Locus,
    pub power: f64,
    pub scale: f64,
}

impl SpaceTimeField for DistancePowerField<'_> {
    fn dim(&self) -> usize {
        self.locus.dim()
    }

    fn value(&self, x: &[f64], t: f64) -> Result<f64> {
        let d = self.locus.distance(x, t)?;
        if d == 0.0 {
            return Err(Error::OnSingularity { distance: d });
        }
        Ok(self.scale * d.powf(-self.power))
    }

    fn locus_distance(&self, x: &[f64], t: f64) -> Option<f64> {
        self.locus.distance(x, t).ok()
    }
}

/// `√log(1/d)` for `d < 1`, `0` beyond.
pub struct LogRootField<'a> {
    pub locus: &'a Locus,
}

impl SpaceTimeField for LogRootField<'_> {
    fn dim(&self) -> usize {
        self.locus.dim()
    }

    fn value(&self, x: &[f64], t: f64) -> Result<f64> {
        let d = self.locus.distance(x, t)?;
        if d == 0.0 {
            return Err(Error::OnSingularity { distance: d });
        }
        Ok((1.0 / d).ln().max(0.0).sqrt())
    }

    fn locus_distance(&self, x: &[f64], t: f64) -> Option<f64> {
        self.locus.distance(x, t).ok()
    }
}
