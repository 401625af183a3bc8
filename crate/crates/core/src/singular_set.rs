//! Moving `m`-dimensional singular sets `Ξ(t) = {ξ(s, t) : s ∈ [0,1]^m}`,
//! distance queries and tube integrals.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curve::{CurveSpec, HolderCurve, MAX_DIM};
use crate::error::{domain, Result};
use crate::numerics::{unit_ball_volume, Quadrature, QuadratureResult};

/// Grid points per parameter axis used to seed the distance search.
pub const DEFAULT_DISTANCE_GRID: usize = 64;

/// Smallest singular value accepted by the rank check.
pub const RANK_THRESHOLD: f64 = 1e-8;

/// Default Monte Carlo sample count of a tube integral.
pub const DEFAULT_TUBE_SAMPLES: usize = 1_000_000;

const MAX_PARAMS: usize = 4;
const DESCENT_SEEDS: usize = 3;
const MAX_GRID: usize = 256;
const MC_CHUNK: usize = 1 << 14;

/// `(s, t, out)`: writes `ξ(s, t)` into `out`.
pub type ManifoldFn = Arc<dyn Fn(&[f64], f64, &mut [f64]) + Send + Sync>;

/// Parametrizations of the reference set; the time dependence is added by
/// an optional translation.
#[derive(Clone)]
pub enum ManifoldShape {
    /// `m = 0`: a single point.
    Point { center: Vec<f64> },
    /// `s ↦ start + s (end − start)`.
    Segment { start: Vec<f64>, end: Vec<f64> },
    /// `s ↦ center + R (cos 2πs e_i + sin 2πs e_j)` with `(i, j) = plane`.
    Circle {
        center: Vec<f64>,
        radius: f64,
        plane: (usize, usize),
    },
    /// `(s₁, s₂) ↦ origin + side (s₁ e_i + s₂ e_j)`.
    Square {
        origin: Vec<f64>,
        side: f64,
        plane: (usize, usize),
    },
    /// Torus in the first three coordinates, angles `2π·extent·s`.
    TorusPatch { major: f64, minor: f64, extent: f64 },
    /// User map with `m` parameters; the Jacobian is taken by central differences.
    Custom { params: usize, map: ManifoldFn },
}

impl fmt::Debug for ManifoldShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Point { center } => f.debug_struct("Point").field("center", center).finish(),
            Self::Segment { start, end } => f
                .debug_struct("Segment")
                .field("start", start)
                .field("end", end)
                .finish(),
            Self::Circle {
                center,
                radius,
                plane,
            } => f
                .debug_struct("Circle")
                .field("center", center)
                .field("radius", radius)
                .field("plane", plane)
                .finish(),
            Self::Square {
                origin,
                side,
                plane,
            } => f
                .debug_struct("Square")
                .field("origin", origin)
                .field("side", side)
                .field("plane", plane)
                .finish(),
            Self::TorusPatch {
                major,
                minor,
                extent,
            } => f
                .debug_struct("TorusPatch")
                .field("major", major)
                .field("minor", minor)
                .field("extent", extent)
                .finish(),
            Self::Custom { params, .. } => f
                .debug_struct("Custom")
                .field("params", params)
                .finish_non_exhaustive(),
        }
    }
}

impl ManifoldShape {
    fn params(&self) -> usize {
        match self {
            Self::Point { .. } => 0,
            Self::Segment { .. } | Self::Circle { .. } => 1,
            Self::Square { .. } | Self::TorusPatch { .. } => 2,
            Self::Custom { params, .. } => *params,
        }
    }
}

/// `ξ(s, t) = shape(s) + motion(t)`.
#[derive(Clone, Debug)]
pub struct SingularManifold {
    dim: usize,
    horizon: f64,
    shape: ManifoldShape,
    motion: Option<HolderCurve>,
}

/// Result of a distance query.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistanceResult {
    pub distance: f64,
    /// Minimizing parameter `s*`.
    pub parameter: Vec<f64>,
    /// Set when descent did not converge even on the finest grid.
    pub approximate: bool,
}

impl SingularManifold {
    pub fn new(dim: usize, horizon: f64, shape: ManifoldShape) -> Result<Self> {
        if !(1..=MAX_DIM).contains(&dim) {
            return domain(format!("dimension must be in 1..={MAX_DIM}, got {dim}"));
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return domain(format!("horizon must be positive, got {horizon}"));
        }
        let m = shape.params();
        if m > MAX_PARAMS {
            return domain(format!(
                "at most {MAX_PARAMS} parameters are supported, got {m}"
            ));
        }
        if dim < m + 2 {
            return domain(format!("need N >= m + 2, got N = {dim}, m = {m}"));
        }
        let len_ok = |v: &Vec<f64>| v.len() == dim;
        let plane_ok = |(i, j): (usize, usize)| i < dim && j < dim && i != j;
        match &shape {
            ManifoldShape::Point { center } if !len_ok(center) => {
                return domain("point center has wrong length")
            }
            ManifoldShape::Segment { start, end } => {
                if !len_ok(start) || !len_ok(end) {
                    return domain("segment end points have wrong length");
                }
                if start == end {
                    return domain("segment end points coincide");
                }
            }
            ManifoldShape::Circle {
                center,
                radius,
                plane,
            } => {
                if !len_ok(center) || !plane_ok(*plane) || !(*radius > 0.0) {
                    return domain("circle needs a centre of length N, a positive radius and two distinct axes");
                }
            }
            ManifoldShape::Square {
                origin,
                side,
                plane,
            } => {
                if !len_ok(origin) || !plane_ok(*plane) || !(*side > 0.0) {
                    return domain(
                        "square needs an origin of length N, a positive side and two distinct axes",
                    );
                }
            }
            ManifoldShape::TorusPatch {
                major,
                minor,
                extent,
            } => {
                if !(*minor > 0.0 && *major > *minor) {
                    return domain("torus needs major > minor > 0");
                }
                if !(*extent > 0.0 && *extent <= 1.0) {
                    return domain("torus extent must lie in (0, 1]");
                }
            }
            _ => {}
        }
        Ok(SingularManifold {
            dim,
            horizon,
            shape,
            motion: None,
        })
    }

    /// Adds the time-dependent translation `ξ(s, t) = shape(s) + c(t)`.
    pub fn with_motion(mut self, motion: HolderCurve) -> Result<Self> {
        if motion.dim() != self.dim {
            return domain(format!(
                "motion has dimension {}, expected {}",
                motion.dim(),
                self.dim
            ));
        }
        if motion.horizon() < self.horizon {
            return domain("motion horizon is shorter than the manifold's");
        }
        self.motion = Some(motion);
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn params(&self) -> usize {
        self.shape.params()
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn shape(&self) -> &ManifoldShape {
        &self.shape
    }

    pub fn motion(&self) -> Option<&HolderCurve> {
        self.motion.as_ref()
    }

    fn offset(&self, t: f64) -> [f64; MAX_DIM] {
        let mut c = [0.0; MAX_DIM];
        if let Some(m) = &self.motion {
            m.eval_into(t, &mut c);
        }
        c
    }

    fn shape_into(&self, s: &[f64], out: &mut [f64]) {
        let n = self.dim;
        match &self.shape {
            ManifoldShape::Point { center } => out[..n].copy_from_slice(center),
            ManifoldShape::Segment { start, end } => {
                for i in 0..n {
                    out[i] = start[i] + s[0] * (end[i] - start[i]);
                }
            }
            ManifoldShape::Circle {
                center,
                radius,
                plane,
            } => {
                out[..n].copy_from_slice(center);
                let (sn, cs) = (2.0 * PI * s[0]).sin_cos();
                out[plane.0] += radius * cs;
                out[plane.1] += radius * sn;
            }
            ManifoldShape::Square {
                origin,
                side,
                plane,
            } => {
                out[..n].copy_from_slice(origin);
                out[plane.0] += side * s[0];
                out[plane.1] += side * s[1];
            }
            ManifoldShape::TorusPatch {
                major,
                minor,
                extent,
            } => {
                let (s1, c1) = (2.0 * PI * extent * s[0]).sin_cos();
                let (s2, c2) = (2.0 * PI * extent * s[1]).sin_cos();
                out[..n].fill(0.0);
                let ring = major + minor * c2;
                out[0] = ring * c1;
                out[1] = ring * s1;
                out[2] = minor * s2;
            }
            ManifoldShape::Custom { map, .. } => map(s, 0.0, &mut out[..n]),
        }
    }

    /// `ξ(s, t)` written into `out[..N]`.
    pub fn eval_into(&self, s: &[f64], t: f64, out: &mut [f64]) {
        if let ManifoldShape::Custom { map, .. } = &self.shape {
            map(s, t, &mut out[..self.dim]);
        } else {
            self.shape_into(s, out);
        }
        if self.motion.is_some() {
            let c = self.offset(t);
            for i in 0..self.dim {
                out[i] += c[i];
            }
        }
    }

    pub fn eval(&self, s: &[f64], t: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.eval_into(s, t, &mut out);
        out
    }

    /// The `N × m` matrix `∂ξ/∂s`.
    pub fn jacobian(&self, s: &[f64], t: f64) -> DMatrix<f64> {
        let n = self.dim;
        let m = self.params();
        let mut j = DMatrix::zeros(n, m);
        match &self.shape {
            ManifoldShape::Point { .. } => {}
            ManifoldShape::Segment { start, end } => {
                for i in 0..n {
                    j[(i, 0)] = end[i] - start[i];
                }
            }
            ManifoldShape::Circle { radius, plane, .. } => {
                let (sn, cs) = (2.0 * PI * s[0]).sin_cos();
                j[(plane.0, 0)] = -2.0 * PI * radius * sn;
                j[(plane.1, 0)] = 2.0 * PI * radius * cs;
            }
            ManifoldShape::Square { side, plane, .. } => {
                j[(plane.0, 0)] = *side;
                j[(plane.1, 1)] = *side;
            }
            ManifoldShape::TorusPatch {
                major,
                minor,
                extent,
            } => {
                let w = 2.0 * PI * extent;
                let (s1, c1) = (w * s[0]).sin_cos();
                let (s2, c2) = (w * s[1]).sin_cos();
                let ring = major + minor * c2;
                j[(0, 0)] = -w * ring * s1;
                j[(1, 0)] = w * ring * c1;
                j[(0, 1)] = -w * minor * s2 * c1;
                j[(1, 1)] = -w * minor * s2 * s1;
                j[(2, 1)] = w * minor * c2;
            }
            ManifoldShape::Custom { map, .. } => {
                let h = 1e-6;
                let mut p = [0.0; MAX_DIM];
                let mut q = [0.0; MAX_DIM];
                let mut sp = s.to_vec();
                for k in 0..m {
                    sp[k] = s[k] + h;
                    map(&sp, t, &mut p[..n]);
                    sp[k] = s[k] - h;
                    map(&sp, t, &mut q[..n]);
                    sp[k] = s[k];
                    for i in 0..n {
                        j[(i, k)] = (p[i] - q[i]) / (2.0 * h);
                    }
                }
            }
        }
        j
    }

    /// `d(x, Ξ(t)) = min_s |x − ξ(s, t)|`.
    pub fn distance(&self, x: &[f64], t: f64) -> Result<DistanceResult> {
        self.distance_with_grid(x, t, DEFAULT_DISTANCE_GRID)
    }

    /// Grid seeding with `grid` cells per axis, then projected Newton descent
    /// (Gauss–Newton where the Hessian is not positive definite) from the
    /// best few seeds. The grid doubles while descent fails.
    pub fn distance_with_grid(&self, x: &[f64], t: f64, grid: usize) -> Result<DistanceResult> {
        if x.len() != self.dim {
            return domain(format!(
                "point has dimension {}, expected {}",
                x.len(),
                self.dim
            ));
        }
        if !(0.0..=self.horizon).contains(&t) {
            return domain(format!("t = {t} outside [0, {}]", self.horizon));
        }
        if grid == 0 {
            return domain("distance grid must have at least one cell");
        }
        let mut grid = grid;
        loop {
            let r = self.distance_once(x, t, grid);
            if !r.approximate || grid >= MAX_GRID {
                return Ok(r);
            }
            grid *= 2;
        }
    }

    fn distance_once(&self, x: &[f64], t: f64, grid: usize) -> DistanceResult {
        let n = self.dim;
        let m = self.params();
        let sq = |s: &[f64]| {
            let mut p = [0.0; MAX_DIM];
            self.eval_into(s, t, &mut p);
            (0..n).map(|i| (x[i] - p[i]) * (x[i] - p[i])).sum::<f64>()
        };
        if m == 0 {
            return DistanceResult {
                distance: sq(&[]).sqrt(),
                parameter: Vec::new(),
                approximate: false,
            };
        }
        // Keep the best few grid points as descent seeds.
        let mut seeds: Vec<(f64, [f64; MAX_PARAMS])> = Vec::with_capacity(DESCENT_SEEDS + 1);
        let total = (grid + 1).pow(m as u32);
        let mut s = [0.0; MAX_PARAMS];
        for idx in 0..total {
            let mut rest = idx;
            for v in s.iter_mut().take(m) {
                *v = (rest % (grid + 1)) as f64 / grid as f64;
                rest /= grid + 1;
            }
            let d2 = sq(&s[..m]);
            if seeds.len() < DESCENT_SEEDS || d2 < seeds[seeds.len() - 1].0 {
                seeds.push((d2, s));
                seeds.sort_by(|a, b| a.0.total_cmp(&b.0));
                seeds.truncate(DESCENT_SEEDS);
            }
        }
        let mut best: Option<(f64, [f64; MAX_PARAMS], bool)> = None;
        for (d2, seed) in seeds {
            let (d2, s, converged) = self.descend(x, t, seed, d2);
            if best.as_ref().map_or(true, |b| d2 < b.0) {
                best = Some((d2, s, converged));
            }
        }
        let (d2, s, converged) = best.expect("at least one seed");
        DistanceResult {
            distance: d2.sqrt(),
            parameter: s[..m].to_vec(),
            approximate: !converged,
        }
    }

    fn descend(
        &self,
        x: &[f64],
        t: f64,
        start: [f64; MAX_PARAMS],
        start_d2: f64,
    ) -> (f64, [f64; MAX_PARAMS], bool) {
        let n = self.dim;
        let m = self.params();
        let sq = |s: &[f64], p: &mut [f64; MAX_DIM]| {
            self.eval_into(s, t, p);
            (0..n).map(|i| (x[i] - p[i]) * (x[i] - p[i])).sum::<f64>()
        };
        let mut s = start;
        let mut d2 = start_d2;
        let mut p = [0.0; MAX_DIM];
        for _ in 0..100 {
            sq(&s[..m], &mut p);
            let j = self.jacobian(&s[..m], t);
            let resid = nalgebra::DVector::from_iterator(n, (0..n).map(|i| x[i] - p[i]));
            let jt = j.transpose();
            let grad = &jt * &resid;
            let normal = &jt * &j;
            // Newton on ½|x − ξ|²: the curvature term matters once the
            // residual is not small, and Gauss–Newton alone crawls there.
            let hessian = {
                let h = 1e-6;
                let mut hess = nalgebra::DMatrix::zeros(m, m);
                let mut q = [0.0; MAX_DIM];
                for l in 0..m {
                    let mut col = nalgebra::DVector::zeros(m);
                    for (sign, side) in [(1.0, &mut s.clone()), (-1.0, &mut s.clone())] {
                        side[l] += sign * h;
                        self.eval_into(&side[..m], t, &mut q);
                        let r = nalgebra::DVector::from_iterator(n, (0..n).map(|i| x[i] - q[i]));
                        col -= sign * (self.jacobian(&side[..m], t).transpose() * r);
                    }
                    hess.set_column(l, &(col / (2.0 * h)));
                }
                0.5 * (&hess + hess.transpose())
            };
            let step = hessian
                .cholesky()
                .or_else(|| normal.clone().cholesky())
                .map(|c| c.solve(&grad))
                .unwrap_or_else(|| grad.clone() / normal.norm().max(1e-300));
            let mut scale = 1.0;
            let mut accepted = None;
            for _ in 0..40 {
                let mut trial = s;
                for k in 0..m {
                    trial[k] = (s[k] + scale * step[k]).clamp(0.0, 1.0);
                }
                let td2 = sq(&trial[..m], &mut p);
                if td2 < d2 {
                    accepted = Some((trial, td2));
                    break;
                }
                scale *= 0.5;
            }
            let Some((trial, td2)) = accepted else {
                // no descent direction left: a constrained stationary point
                return (d2, s, true);
            };
            let moved = (0..m).map(|k| (trial[k] - s[k]).abs()).fold(0.0, f64::max);
            s = trial;
            d2 = td2;
            if moved < 1e-13 {
                return (d2, s, true);
            }
        }
        (d2, s, false)
    }

    /// Surface measure `∫_{[0,1]^m} √det(JᵀJ) ds` at time `t`.
    pub fn surface_measure(&self, t: f64) -> Result<f64> {
        let m = self.params();
        if m == 0 {
            return Ok(0.0);
        }
        let f = |s: &[f64]| {
            let j = self.jacobian(s, t);
            (j.transpose() * &j).determinant().max(0.0).sqrt()
        };
        let q = Quadrature::with_tol(1e-9);
        Ok(q.integrate_box(&f, &vec![0.0; m], &vec![1.0; m])?.value)
    }

    /// Axis-aligned box containing `Ξ(t)` inflated by `margin`.
    pub fn bounding_box(&self, t: f64, margin: f64) -> (Vec<f64>, Vec<f64>) {
        let n = self.dim;
        let m = self.params();
        let per_axis = match m {
            0 => 1,
            1 => 2048,
            2 => 128,
            _ => 16,
        };
        let mut lo = vec![f64::INFINITY; n];
        let mut hi = vec![f64::NEG_INFINITY; n];
        let total = if m == 0 {
            1
        } else {
            (per_axis + 1usize).pow(m as u32)
        };
        let mut s = [0.0; MAX_PARAMS];
        let mut p = [0.0; MAX_DIM];
        for idx in 0..total {
            let mut rest = idx;
            for v in s.iter_mut().take(m) {
                *v = (rest % (per_axis + 1)) as f64 / per_axis as f64;
                rest /= per_axis + 1;
            }
            self.eval_into(&s[..m], t, &mut p);
            for i in 0..n {
                lo[i] = lo[i].min(p[i]);
                hi[i] = hi[i].max(p[i]);
            }
        }
        // A sampled point lies within half a grid step of the set; the
        // Jacobian norm bounds that step.
        let slack = if m == 0 {
            0.0
        } else {
            let mut worst: f64 = 0.0;
            for idx in 0..total.min(4096) {
                let mut rest = idx * (total / total.min(4096)).max(1);
                for v in s.iter_mut().take(m) {
                    *v = (rest % (per_axis + 1)) as f64 / per_axis as f64;
                    rest /= per_axis + 1;
                }
                worst = worst.max(self.jacobian(&s[..m], t).norm());
            }
            worst * m as f64 / per_axis as f64
        };
        for i in 0..n {
            lo[i] -= margin + slack;
            hi[i] += margin + slack;
        }
        (lo, hi)
    }
}

/// Smallest singular value of `∂ξ/∂s` over random `(s, t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RankReport {
    pub samples: usize,
    pub min_singular_value: f64,
    pub passed: bool,
}

pub fn jacobian_rank_check(
    manifold: &SingularManifold,
    sample_count: usize,
    seed: u64,
) -> Result<RankReport> {
    let m = manifold.params();
    if m == 0 {
        return domain("the rank condition needs m >= 1");
    }
    if sample_count == 0 {
        return domain("need at least one sample");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = f64::INFINITY;
    for _ in 0..sample_count {
        let s: Vec<f64> = (0..m).map(|_| rng.random::<f64>()).collect();
        let t = manifold.horizon * rng.random::<f64>();
        let sv = manifold.jacobian(&s, t).singular_values();
        worst = worst.min(sv.iter().cloned().fold(f64::INFINITY, f64::min));
    }
    Ok(RankReport {
        samples: sample_count,
        min_singular_value: worst,
        passed: worst >= RANK_THRESHOLD,
    })
}

/// Kernel of a tube integral.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TubeKernel {
    /// `d^{m+2−N}`, for `N ≥ m + 3`.
    Power,
    /// `log(1/d)`, for `N = m + 2`.
    Log,
}

/// `A_{r,t} = {x : d(x, Ξ(t)) < r}`.
#[derive(Debug, Clone, Copy)]
pub struct TubeRegion<'a> {
    pub manifold: &'a SingularManifold,
    pub t: f64,
    pub r: f64,
}

impl TubeRegion<'_> {
    pub fn contains(&self, x: &[f64]) -> Result<bool> {
        Ok(self.manifold.distance(x, self.t)?.distance < self.r)
    }

    fn kernel_value(&self, kernel: TubeKernel, d: f64) -> f64 {
        let m = self.manifold.params() as i32;
        let n = self.manifold.dim as i32;
        match kernel {
            TubeKernel::Power => d.powi(m + 2 - n),
            TubeKernel::Log => (1.0 / d).ln(),
        }
    }

    fn check_kernel(&self, kernel: TubeKernel) -> Result<()> {
        let m = self.manifold.params();
        let n = self.manifold.dim;
        match kernel {
            TubeKernel::Power if n < m + 3 => domain(format!(
                "power kernel needs N >= m + 3, got N = {n}, m = {m}"
            )),
            TubeKernel::Log if n != m + 2 => {
                domain(format!("log kernel needs N = m + 2, got N = {n}, m = {m}"))
            }
            _ => Ok(()),
        }
    }

    /// Closed form of the tube integral where one is known: a point, or a
    /// circle of radius `R > r` (`∫ = 2πR · (N−1)ω_{N−1} r²/2` with the power kernel).
    pub fn exact_integral(&self, kernel: TubeKernel) -> Option<f64> {
        self.check_kernel(kernel).ok()?;
        let n = self.manifold.dim;
        let r = self.r;
        match (&self.manifold.shape, kernel) {
            (ManifoldShape::Point { .. }, TubeKernel::Power) => {
                Some(n as f64 * unit_ball_volume(n).ok()? * r * r / 2.0)
            }
            (ManifoldShape::Point { .. }, TubeKernel::Log) => {
                Some(PI * r * r * ((1.0 / r).ln() + 0.5))
            }
            (ManifoldShape::Circle { radius, .. }, TubeKernel::Power) if r < *radius => {
                let k = n - 1;
                Some(2.0 * PI * radius * k as f64 * unit_ball_volume(k).ok()? * r * r / 2.0)
            }
            _ => None,
        }
    }

    /// Monte Carlo estimate of `∫_{A_{r,t}} kernel(d(x, Ξ(t))) dx`; the
    /// error estimate is the standard error.
    ///
    /// Samples are drawn uniformly from a box around the tube in chunks with
    /// their own RNG streams, so the result does not depend on the thread count.
    pub fn integral(
        &self,
        kernel: TubeKernel,
        samples: usize,
        seed: u64,
    ) -> Result<QuadratureResult> {
        self.check_kernel(kernel)?;
        if !(self.r > 0.0) {
            return domain(format!("tube radius must be positive, got {}", self.r));
        }
        if kernel == TubeKernel::Log && self.r >= 1.0 {
            return domain("log kernel needs r < 1");
        }
        if samples < 2 {
            return domain("need at least two samples");
        }
        let n = self.manifold.dim;
        let (lo, hi) = self.manifold.bounding_box(self.t, self.r);
        let volume: f64 = lo.iter().zip(&hi).map(|(a, b)| b - a).product();
        let chunks = samples.div_ceil(MC_CHUNK);
        let partial: Vec<Result<(f64, f64)>> = (0..chunks)
            .into_par_iter()
            .map(|k| {
                let count = MC_CHUNK.min(samples - k * MC_CHUNK);
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(k as u64);
                let mut x = [0.0; MAX_DIM];
                let (mut sum, mut sum2) = (0.0, 0.0);
                for _ in 0..count {
                    for i in 0..n {
                        x[i] = lo[i] + (hi[i] - lo[i]) * rng.random::<f64>();
                    }
                    let d = self.manifold.distance(&x[..n], self.t)?.distance;
                    if d < self.r && d > 0.0 {
                        let v = self.kernel_value(kernel, d);
                        sum += v;
                        sum2 += v * v;
                    }
                }
                Ok((sum, sum2))
            })
            .collect();
        let (mut sum, mut sum2) = (0.0, 0.0);
        for p in partial {
            let (a, b) = p?;
            sum += a;
            sum2 += b;
        }
        let m = samples as f64;
        let mean = sum / m;
        let var = (sum2 / m - mean * mean).max(0.0);
        Ok(QuadratureResult {
            value: volume * mean,
            error_estimate: volume * (var / (m - 1.0)).sqrt(),
            evaluations: samples,
        })
    }
}

/// `∫_{A_{r,t}} kernel(d) dx` for `region`.
pub fn tube_integral(
    region: &TubeRegion<'_>,
    kernel: TubeKernel,
    samples: usize,
    seed: u64,
) -> Result<QuadratureResult> {
    region.integral(kernel, samples, seed)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TubeRow {
    pub r: f64,
    pub integral: f64,
    pub stderr: f64,
    /// `integral / r²` (power) or `integral / (r²(1 + log(1/r)))` (log).
    pub scaled_value: f64,
    pub exact: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TubeTable {
    pub kernel: TubeKernel,
    pub rows: Vec<TubeRow>,
    /// max/min of `scaled_value` over the rows.
    pub ratio: f64,
    pub bounded: bool,
}

/// Tube integrals for each `r`, scaled by the expected `r²` law.
pub fn verify_tube(
    manifold: &SingularManifold,
    t: f64,
    r_list: &[f64],
    kernel: TubeKernel,
    samples: usize,
    seed: u64,
) -> Result<TubeTable> {
    if r_list.is_empty() {
        return domain("r_list is empty");
    }
    let mut rows = Vec::with_capacity(r_list.len());
    for (k, &r) in r_list.iter().enumerate() {
        let region = TubeRegion { manifold, t, r };
        let q = region.integral(kernel, samples, seed.wrapping_add(k as u64))?;
        let norm = match kernel {
            TubeKernel::Power => r * r,
            TubeKernel::Log => r * r * (1.0 + (1.0 / r).ln()),
        };
        rows.push(TubeRow {
            r,
            integral: q.value,
            stderr: q.error_estimate,
            scaled_value: q.value / norm,
            exact: region.exact_integral(kernel),
        });
    }
    let hi = rows
        .iter()
        .map(|r| r.scaled_value)
        .fold(f64::NEG_INFINITY, f64::max);
    let lo = rows
        .iter()
        .map(|r| r.scaled_value)
        .fold(f64::INFINITY, f64::min);
    let ratio = if lo > 0.0 { hi / lo } else { f64::INFINITY };
    Ok(TubeTable {
        kernel,
        rows,
        ratio,
        bounded: ratio <= 4.0,
    })
}

/// Built-in manifold families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ManifoldKind {
    Point,
    Segment,
    Circle,
    Square,
    TorusPatch,
}

/// Serializable manifold description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifoldSpec {
    pub kind: ManifoldKind,
    #[serde(rename = "N")]
    pub dim: usize,
    #[serde(rename = "T", default = "unit")]
    pub horizon: f64,
    /// Point, circle centre, segment start or square origin.
    #[serde(default)]
    pub center: Option<Vec<f64>>,
    #[serde(default)]
    pub end: Option<Vec<f64>>,
    #[serde(default)]
    pub radius: Option<f64>,
    #[serde(default)]
    pub side: Option<f64>,
    #[serde(default)]
    pub plane: Option<(usize, usize)>,
    #[serde(default)]
    pub major: Option<f64>,
    #[serde(default)]
    pub minor: Option<f64>,
    #[serde(default)]
    pub extent: Option<f64>,
    /// Optional translation in time.
    #[serde(default)]
    pub motion: Option<CurveSpec>,
}

fn unit() -> f64 {
    1.0
}

impl ManifoldSpec {
    pub fn build(&self) -> Result<SingularManifold> {
        let n = self.dim;
        let origin = self.center.clone().unwrap_or_else(|| vec![0.0; n]);
        let plane = self.plane.unwrap_or((0, 1));
        let shape = match self.kind {
            ManifoldKind::Point => ManifoldShape::Point { center: origin },
            ManifoldKind::Segment => {
                let Some(end) = self.end.clone() else {
                    return domain("segment needs `end`");
                };
                ManifoldShape::Segment { start: origin, end }
            }
            ManifoldKind::Circle => ManifoldShape::Circle {
                center: origin,
                radius: self.radius.unwrap_or(1.0),
                plane,
            },
            ManifoldKind::Square => ManifoldShape::Square {
                origin,
                side: self.side.unwrap_or(1.0),
                plane,
            },
            ManifoldKind::TorusPatch => ManifoldShape::TorusPatch {
                major: self.major.unwrap_or(1.0),
                minor: self.minor.unwrap_or(0.25),
                extent: self.extent.unwrap_or(1.0),
            },
        };
        let manifold = SingularManifold::new(n, self.horizon, shape)?;
        match &self.motion {
            Some(spec) => manifold.with_motion(spec.build()?),
            None => Ok(manifold),
        }
    }
}

/// Largest `|ξ(s,t) − ξ(s,t')| / |t − t'|^{1/2}` over a time grid at random `s`.
pub fn time_holder_ratio(
    manifold: &SingularManifold,
    s_samples: usize,
    t_samples: usize,
    seed: u64,
) -> Result<f64> {
    if t_samples < 2 {
        return domain("need at least two time samples");
    }
    let m = manifold.params();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..s_samples.max(1) {
        let s: Vec<f64> = (0..m).map(|_| rng.random::<f64>()).collect();
        let step = manifold.horizon / (t_samples - 1) as f64;
        let pts: Vec<Vec<f64>> = (0..t_samples)
            .map(|k| manifold.eval(&s, k as f64 * step))
            .collect();
        for i in 0..t_samples {
            for j in (i + 1)..t_samples {
                let d: f64 = pts[i]
                    .iter()
                    .zip(&pts[j])
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                worst = worst.max(d / ((j - i) as f64 * step).sqrt());
            }
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::{make_builtin_curve, CurveKind, CurveParams};
    use approx::assert_relative_eq;

    fn circle4() -> SingularManifold {
        SingularManifold::new(
            4,
            1.0,
            ManifoldShape::Circle {
                center: vec![0.0; 4],
                radius: 1.0,
                plane: (0, 1),
            },
        )
        .unwrap()
    }

    fn point(n: usize) -> SingularManifold {
        SingularManifold::new(
            n,
            1.0,
            ManifoldShape::Point {
                center: vec![0.0; n],
            },
        )
        .unwrap()
    }

    #[test]
    fn distance_examples() {
        let c = circle4();
        let r = c.distance(&[2.0, 0.0, 0.0, 0.0], 0.5).unwrap();
        assert_relative_eq!(r.distance, 1.0, epsilon = 1e-12);
        assert!(r.parameter[0] < 1e-9 || r.parameter[0] > 1.0 - 1e-9);
        let on = c.eval(&[0.3], 0.5);
        assert!(c.distance(&on, 0.5).unwrap().distance < 1e-12);

        let seg = SingularManifold::new(
            3,
            1.0,
            ManifoldShape::Segment {
                start: vec![0.0; 3],
                end: vec![1.0, 0.0, 0.0],
            },
        )
        .unwrap();
        let r = seg.distance(&[2.0, 1.0, 0.0], 0.0).unwrap();
        assert_relative_eq!(r.distance, 2f64.sqrt(), epsilon = 1e-12);
        assert_relative_eq!(r.parameter[0], 1.0, epsilon = 1e-12);
        assert!(!r.approximate);
    }

    #[test]
    fn torus_distance_matches_geometry() {
        let torus = SingularManifold::new(
            4,
            1.0,
            ManifoldShape::TorusPatch {
                major: 1.0,
                minor: 0.25,
                extent: 1.0,
            },
        )
        .unwrap();
        // distance from (x, y, z, w) to the torus: sqrt((ρ − R)² + z² ) − r, then with w
        let x = [0.9, 0.6, 0.1, 0.2];
        let rho: f64 = (0.81f64 + 0.36).sqrt();
        let tube = ((rho - 1.0).powi(2) + 0.01).sqrt() - 0.25;
        let exact = (tube * tube + 0.04).sqrt();
        assert_relative_eq!(
            torus.distance(&x, 0.0).unwrap().distance,
            exact,
            epsilon = 1e-10
        );
    }

    #[test]
    fn rank_reports() {
        let r = jacobian_rank_check(&circle4(), 200, 1).unwrap();
        assert_relative_eq!(r.min_singular_value, 2.0 * PI, epsilon = 1e-12);
        assert!(r.passed);
        let square = SingularManifold::new(
            4,
            1.0,
            ManifoldShape::Square {
                origin: vec![0.0; 4],
                side: 1.0,
                plane: (0, 1),
            },
        )
        .unwrap();
        assert_relative_eq!(
            jacobian_rank_check(&square, 50, 1)
                .unwrap()
                .min_singular_value,
            1.0,
            epsilon = 1e-14
        );
        let flat: ManifoldFn = Arc::new(|_s: &[f64], t: f64, out: &mut [f64]| {
            out.fill(0.0);
            out[0] = t;
        });
        let degenerate = SingularManifold::new(
            3,
            1.0,
            ManifoldShape::Custom {
                params: 1,
                map: flat,
            },
        )
        .unwrap();
        let r = jacobian_rank_check(&degenerate, 20, 1).unwrap();
        assert_eq!(r.min_singular_value, 0.0);
        assert!(!r.passed);
    }

    #[test]
    fn analytic_jacobians_match_differences() {
        let torus = SingularManifold::new(
            5,
            1.0,
            ManifoldShape::TorusPatch {
                major: 2.0,
                minor: 0.5,
                extent: 0.6,
            },
        )
        .unwrap();
        let s = [0.3, 0.7];
        let j = torus.jacobian(&s, 0.0);
        let h = 1e-6;
        for k in 0..2 {
            let mut sp = s;
            sp[k] += h;
            let a = torus.eval(&sp, 0.0);
            sp[k] -= 2.0 * h;
            let b = torus.eval(&sp, 0.0);
            for i in 0..5 {
                assert_relative_eq!(j[(i, k)], (a[i] - b[i]) / (2.0 * h), epsilon = 1e-6);
            }
        }
    }

    #[test]
    fn distance_is_lipschitz_and_rigid() {
        let c = circle4();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..300 {
            let x: Vec<f64> = (0..4).map(|_| rng.random_range(-2.0..2.0)).collect();
            let y: Vec<f64> = (0..4).map(|_| rng.random_range(-2.0..2.0)).collect();
            let dx = c.distance(&x, 0.2).unwrap().distance;
            let dy = c.distance(&y, 0.2).unwrap().distance;
            let xy: f64 = x
                .iter()
                .zip(&y)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            assert!((dx - dy).abs() <= xy + 1e-12);
        }
        // rotation by θ in the (0, 2) plane plus a translation
        let (sn, cs) = 0.7f64.sin_cos();
        let shift = [0.3, -1.0, 2.0, 0.5];
        let moved: ManifoldFn = Arc::new(move |s: &[f64], _t: f64, out: &mut [f64]| {
            let (a, b) = (2.0 * PI * s[0]).sin_cos();
            let p = [b, a, 0.0, 0.0];
            out[0] = cs * p[0] - sn * p[2] + shift[0];
            out[1] = p[1] + shift[1];
            out[2] = sn * p[0] + cs * p[2] + shift[2];
            out[3] = p[3] + shift[3];
        });
        let rigid = SingularManifold::new(
            4,
            1.0,
            ManifoldShape::Custom {
                params: 1,
                map: moved,
            },
        )
        .unwrap();
        for _ in 0..50 {
            let x: Vec<f64> = (0..4).map(|_| rng.random_range(-2.0..2.0)).collect();
            let y = [
                cs * x[0] - sn * x[2] + shift[0],
                x[1] + shift[1],
                sn * x[0] + cs * x[2] + shift[2],
                x[3] + shift[3],
            ];
            let a = c.distance(&x, 0.0).unwrap().distance;
            let b = rigid.distance(&y, 0.0).unwrap().distance;
            assert_relative_eq!(a, b, epsilon = 1e-10);
        }
    }

    #[test]
    fn moving_manifold() {
        let motion = make_builtin_curve(
            CurveKind::Weierstrass,
            Some(0.5),
            &CurveParams::default(),
            4,
            1.0,
            None,
        )
        .unwrap();
        let c = circle4().with_motion(motion.clone()).unwrap();
        let off = motion.eval(0.4);
        let x = [2.0 + off[0], off[1], off[2], off[3]];
        assert_relative_eq!(c.distance(&x, 0.4).unwrap().distance, 1.0, epsilon = 1e-10);
        let ratio = time_holder_ratio(&c, 4, 200, 0).unwrap();
        assert!(ratio <= motion.holder_constant() * 1.05);
    }

    #[test]
    fn surface_measure_of_circle_and_square() {
        assert_relative_eq!(
            circle4().surface_measure(0.0).unwrap(),
            2.0 * PI,
            epsilon = 1e-9
        );
        let torus = SingularManifold::new(
            4,
            1.0,
            ManifoldShape::TorusPatch {
                major: 1.0,
                minor: 0.25,
                extent: 1.0,
            },
        )
        .unwrap();
        assert_relative_eq!(
            torus.surface_measure(0.0).unwrap(),
            4.0 * PI * PI * 0.25,
            max_relative = 1e-8
        );
    }

    #[test]
    fn tube_closed_forms() {
        let p3 = point(3);
        let region = TubeRegion {
            manifold: &p3,
            t: 0.5,
            r: 0.25,
        };
        let q = region.integral(TubeKernel::Power, 200_000, 9).unwrap();
        let exact = region.exact_integral(TubeKernel::Power).unwrap();
        assert_relative_eq!(exact, 2.0 * PI * 0.0625, max_relative = 1e-14);
        assert!(
            (q.value - exact).abs() < 0.01 * exact + 3.0 * q.error_estimate,
            "{q:?} vs {exact}"
        );

        let p2 = point(2);
        let region = TubeRegion {
            manifold: &p2,
            t: 0.5,
            r: 0.1,
        };
        let q = region.integral(TubeKernel::Log, 200_000, 9).unwrap();
        let exact = PI * 0.01 * (10f64.ln() + 0.5);
        assert!((q.value - exact).abs() < 0.01 * exact + 3.0 * q.error_estimate);
    }

    #[test]
    fn tube_kernel_mode_checks() {
        let c = circle4();
        let region = TubeRegion {
            manifold: &c,
            t: 0.0,
            r: 0.1,
        };
        assert!(region.integral(TubeKernel::Log, 100, 0).is_err());
        let p2 = point(2);
        let region = TubeRegion {
            manifold: &p2,
            t: 0.0,
            r: 0.1,
        };
        assert!(region.integral(TubeKernel::Power, 100, 0).is_err());
    }

    #[test]
    fn tube_integral_is_deterministic() {
        let c = circle4();
        let region = TubeRegion {
            manifold: &c,
            t: 0.0,
            r: 0.1,
        };
        let a = region.integral(TubeKernel::Power, 40_000, 4).unwrap();
        let b = region.integral(TubeKernel::Power, 40_000, 4).unwrap();
        assert_eq!(a.value.to_bits(), b.value.to_bits());
        let exact = region.exact_integral(TubeKernel::Power).unwrap();
        assert_relative_eq!(exact, 4.0 * PI * PI * 0.01, max_relative = 1e-14);
        assert!((a.value - exact).abs() < 4.0 * a.error_estimate + 0.02 * exact);
    }

    #[test]
    fn manifold_spec_builds() {
        let spec: ManifoldSpec =
            serde_json::from_str(r#"{"kind": "circle", "N": 4, "radius": 2.0}"#).unwrap();
        let m = spec.build().unwrap();
        assert_eq!(m.params(), 1);
        assert!(serde_json::from_str::<ManifoldSpec>(
            r#"{"kind": "circle", "N": 4, "radiu": 2.0}"#
        )
        .is_err());
        let bad: ManifoldSpec = serde_json::from_str(r#"{"kind": "square", "N": 3}"#).unwrap();
        assert!(bad.build().is_err());
    }
}
