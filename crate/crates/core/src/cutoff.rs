//! Smooth cut-off functions `η^r` around a moving point.
//!
//! For a radius `r` the curve is mollified at `ε_r = (r / (10 N L))^{1/α}`,
//! so that `|ξ − ξ^{ε_r}| ≤ r/10`. With `d = |x − ξ^{ε_r}(t)|` and the shell
//! coordinate `σ = (10/r)(d − 7r/10)`,
//!
//! ```text
//! η^r = 0                                  for d ≤ 7r/10
//! η^r = e^{-1/σ} / (e^{-1/σ} + e^{-1/(1−σ)})  for 7r/10 < d < 4r/5
//! η^r = 1                                  for d ≥ 4r/5
//! ```
//!
//! All derivatives are closed forms in `σ`, through `X(σ) = g'(σ)` and
//! `Y_N(σ) = g''(σ) + (N − 1) g'(σ) / (σ + 7)`.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::curve::{mollify, HolderCurve, MollifiedCurve, MAX_DIM};
use crate::error::{domain, Result};

/// Stability window for the scaled sup-norms.
pub const BOUND_RATIO_LIMIT: f64 = 4.0;

/// Default Monte Carlo sample count per radius.
pub const DEFAULT_SHELL_SAMPLES: usize = 10_000;

const SIGMA_GRID: usize = 20_000;

/// `e^{-1/σ}/(e^{-1/σ}+e^{-1/(1−σ)})` and the weight `ab/(a+b)²`, computed
/// without overflow from the ratio `a/b`.
fn step_parts(sigma: f64) -> (f64, f64) {
    let log_ratio = -1.0 / sigma + 1.0 / (1.0 - sigma);
    if log_ratio > 0.0 {
        let p = (-log_ratio).exp();
        (1.0 / (1.0 + p), p / ((1.0 + p) * (1.0 + p)))
    } else {
        let q = log_ratio.exp();
        (q / (1.0 + q), q / ((1.0 + q) * (1.0 + q)))
    }
}

/// The smooth step `g(σ)`, clamped to 0 and 1 outside `(0, 1)`.
pub fn smooth_step(sigma: f64) -> f64 {
    if sigma <= 0.0 {
        0.0
    } else if sigma >= 1.0 {
        1.0
    } else {
        step_parts(sigma).0
    }
}

/// `X(σ) = g'(σ)`; zero outside the open shell.
pub fn x_factor(sigma: f64) -> f64 {
    if sigma <= 0.0 || sigma >= 1.0 {
        return 0.0;
    }
    let (_, w) = step_parts(sigma);
    if w == 0.0 {
        return 0.0;
    }
    let s1 = 1.0 - sigma;
    w * (1.0 / (sigma * sigma) + 1.0 / (s1 * s1))
}

fn y_generic(sigma: f64, dim: usize, printed: bool) -> f64 {
    if sigma <= 0.0 || sigma >= 1.0 {
        return 0.0;
    }
    let (g, w) = step_parts(sigma);
    if w == 0.0 {
        return 0.0;
    }
    let s1 = 1.0 - sigma;
    let (s2, t2) = (sigma * sigma, s1 * s1);
    let (s4, t4) = (s2 * s2, t2 * t2);
    let q = 1.0 / s2 + 1.0 / t2;
    let cross = if printed {
        s2 * (1.0 - sigma * sigma)
    } else {
        s2 * t2
    };
    let radial = (dim as f64 - 1.0) / (sigma + 7.0) * q;
    let quartic = (1.0 / s4 + 1.0 / t4) * (1.0 - 2.0 * sigma);
    let mixed = 2.0 * (g / s4 + (2.0 * g - 1.0) / cross - (1.0 - g) / t4);
    w * (radial + quartic - mixed)
}

/// `Y_N(σ)`, so that `Δη^r = (100/r²) Y_N(σ)` inside the shell.
pub fn y_factor(sigma: f64, dim: usize) -> f64 {
    y_generic(sigma, dim, false)
}

/// The historically printed variant of `Y_N`, whose mixed term carries
/// `σ²(1 − σ²)` instead of `σ²(1 − σ)²`. Kept for discrepancy reports.
pub fn y_printed(sigma: f64, dim: usize) -> f64 {
    y_generic(sigma, dim, true)
}

/// Largest `|Y_printed − Y_N|` relative to `sup |Y_N|` on a σ-grid.
pub fn printed_laplacian_discrepancy(dim: usize) -> f64 {
    let mut worst: f64 = 0.0;
    let mut sup: f64 = 0.0;
    for k in 1..SIGMA_GRID {
        let s = k as f64 / SIGMA_GRID as f64;
        let y = y_factor(s, dim);
        sup = sup.max(y.abs());
        worst = worst.max((y_printed(s, dim) - y).abs());
    }
    worst / sup
}

/// `sup_{(0,1)} |X|` and `sup_{(0,1)} |Y_N|` on a uniform σ-grid.
pub fn shell_factor_sups(dim: usize) -> (f64, f64) {
    let mut sx: f64 = 0.0;
    let mut sy: f64 = 0.0;
    for k in 1..SIGMA_GRID {
        let s = k as f64 / SIGMA_GRID as f64;
        sx = sx.max(x_factor(s).abs());
        sy = sy.max(y_factor(s, dim).abs());
    }
    (sx, sy)
}

/// One member `η^r` of the family, with its mollified curve.
#[derive(Clone, Debug)]
pub struct CutoffLevel {
    radius: f64,
    epsilon: f64,
    mollified: MollifiedCurve,
}

/// Geometry of a point relative to the mollified curve.
#[derive(Debug, Clone, Copy)]
pub struct ShellPoint {
    pub sigma: f64,
    pub distance: f64,
    /// Unit vector `(x − ξ^ε(t)) / |x − ξ^ε(t)|` (zero at the center).
    pub unit: [f64; MAX_DIM],
}

impl CutoffLevel {
    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn mollified(&self) -> &MollifiedCurve {
        &self.mollified
    }

    fn dim(&self) -> usize {
        self.mollified.base().dim()
    }

    pub fn locate(&self, x: &[f64], t: f64) -> Result<ShellPoint> {
        let n = self.dim();
        if x.len() != n {
            return domain(format!("point has dimension {}, expected {n}", x.len()));
        }
        let mut c = [0.0; MAX_DIM];
        self.mollified.eval_into(t, &mut c)?;
        let mut unit = [0.0; MAX_DIM];
        let mut d2 = 0.0;
        for i in 0..n {
            unit[i] = x[i] - c[i];
            d2 += unit[i] * unit[i];
        }
        let distance = d2.sqrt();
        if distance > 0.0 {
            for u in unit.iter_mut().take(n) {
                *u /= distance;
            }
        }
        let sigma = 10.0 / self.radius * (distance - 0.7 * self.radius);
        Ok(ShellPoint {
            sigma,
            distance,
            unit,
        })
    }

    pub fn eta(&self, x: &[f64], t: f64) -> Result<f64> {
        Ok(smooth_step(self.locate(x, t)?.sigma))
    }

    pub fn gradient(&self, x: &[f64], t: f64) -> Result<Vec<f64>> {
        let p = self.locate(x, t)?;
        let scale = 10.0 / self.radius * x_factor(p.sigma);
        Ok(p.unit[..self.dim()].iter().map(|u| scale * u).collect())
    }

    pub fn laplacian(&self, x: &[f64], t: f64) -> Result<f64> {
        let p = self.locate(x, t)?;
        Ok(100.0 / (self.radius * self.radius) * y_factor(p.sigma, self.dim()))
    }

    pub fn time_derivative(&self, x: &[f64], t: f64) -> Result<f64> {
        let p = self.locate(x, t)?;
        let xf = x_factor(p.sigma);
        if xf == 0.0 {
            return Ok(0.0);
        }
        let mut v = [0.0; MAX_DIM];
        self.mollified.derivative_into(t, &mut v)?;
        let proj: f64 = (0..self.dim()).map(|i| p.unit[i] * v[i]).sum();
        Ok(-10.0 / self.radius * xf * proj)
    }
}

/// The family `{η^r}` bound to a curve.
#[derive(Clone, Debug)]
pub struct CutoffFamily {
    curve: HolderCurve,
    levels: BTreeMap<u64, CutoffLevel>,
}

impl CutoffFamily {
    /// Prepares the levels for every radius in `radii`.
    pub fn new(curve: HolderCurve, radii: &[f64]) -> Result<Self> {
        let mut family = CutoffFamily {
            curve,
            levels: BTreeMap::new(),
        };
        for &r in radii {
            family.prepare(r)?;
        }
        Ok(family)
    }

    pub fn curve(&self) -> &HolderCurve {
        &self.curve
    }

    /// `ε_r = (r / (10 N L))^{1/α}`.
    pub fn smoothing_scale(&self, r: f64) -> f64 {
        let n = self.curve.dim() as f64;
        (r / (10.0 * n * self.curve.holder_constant())).powf(1.0 / self.curve.exponent())
    }

    fn build_level(&self, r: f64) -> Result<CutoffLevel> {
        if !(r > 0.0) || !r.is_finite() {
            return domain(format!("cut-off radius must be positive, got {r}"));
        }
        let epsilon = self.smoothing_scale(r);
        Ok(CutoffLevel {
            radius: r,
            epsilon,
            mollified: mollify(&self.curve, epsilon)?,
        })
    }

    pub fn prepare(&mut self, r: f64) -> Result<&CutoffLevel> {
        if !self.levels.contains_key(&r.to_bits()) {
            let level = self.build_level(r)?;
            self.levels.insert(r.to_bits(), level);
        }
        Ok(&self.levels[&r.to_bits()])
    }

    /// The prepared level for `r`, or a freshly built one.
    pub fn level(&self, r: f64) -> Result<CutoffLevel> {
        match self.levels.get(&r.to_bits()) {
            Some(l) => Ok(l.clone()),
            None => self.build_level(r),
        }
    }

    pub fn eta(&self, x: &[f64], t: f64, r: f64) -> Result<f64> {
        self.with_level(r, |l| l.eta(x, t))
    }

    pub fn eta_gradient(&self, x: &[f64], t: f64, r: f64) -> Result<Vec<f64>> {
        self.with_level(r, |l| l.gradient(x, t))
    }

    pub fn eta_laplacian(&self, x: &[f64], t: f64, r: f64) -> Result<f64> {
        self.with_level(r, |l| l.laplacian(x, t))
    }

    pub fn eta_dt(&self, x: &[f64], t: f64, r: f64) -> Result<f64> {
        self.with_level(r, |l| l.time_derivative(x, t))
    }

    fn with_level<T>(&self, r: f64, f: impl FnOnce(&CutoffLevel) -> Result<T>) -> Result<T> {
        match self.levels.get(&r.to_bits()) {
            Some(l) => f(l),
            None => f(&self.build_level(r)?),
        }
    }
}

/// Scaled sup-norms for one radius.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CutoffBoundsRow {
    pub r: f64,
    pub epsilon: f64,
    /// `sup r |∇η^r|`
    pub sup_scaled_grad: f64,
    /// `sup r² |Δη^r|`
    pub sup_scaled_lap: f64,
    /// `sup r^{1/α} |(η^r)_t|`
    pub sup_scaled_dt: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CutoffBoundsTable {
    pub rows: Vec<CutoffBoundsRow>,
    /// max/min of each scaled column across the radii (1 for an all-zero column).
    pub grad_ratio: f64,
    pub lap_ratio: f64,
    pub dt_ratio: f64,
    pub bounded: bool,
}

fn spread(values: impl Iterator<Item = f64>) -> f64 {
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for v in values {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if hi == 0.0 {
        1.0
    } else if lo == 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

fn random_unit(rng: &mut ChaCha8Rng, n: usize) -> [f64; MAX_DIM] {
    loop {
        let mut u = [0.0; MAX_DIM];
        let mut norm: f64 = 0.0;
        for v in u.iter_mut().take(n) {
            *v = rng.sample(StandardNormal);
            norm += *v * *v;
        }
        if norm > 1e-20 {
            let norm = norm.sqrt();
            for v in u.iter_mut().take(n) {
                *v /= norm;
            }
            return u;
        }
    }
}

/// A random point of the transition shell of `level` at a random time in `(0, T)`.
pub fn sample_shell_point(level: &CutoffLevel, rng: &mut ChaCha8Rng) -> Result<(Vec<f64>, f64)> {
    let n = level.dim();
    let horizon = level.mollified.base().horizon();
    let t = horizon * rng.random_range(0.01..0.99);
    let sigma: f64 = rng.random_range(0.0..1.0);
    let u = random_unit(rng, n);
    let mut c = [0.0; MAX_DIM];
    level.mollified.eval_into(t, &mut c)?;
    let d = level.radius * (0.7 + 0.1 * sigma);
    Ok(((0..n).map(|i| c[i] + d * u[i]).collect(), t))
}

/// Monte Carlo sup of the scaled derivatives over the shell, for each `r`.
///
/// The gradient and Laplacian depend on `σ` only, so a 1-D σ-grid is folded
/// in; the time derivative also gets the point aligned with `(ξ^ε)_t` at
/// `σ = 1/2`, where `X` peaks.
pub fn verify_cutoff_bounds(
    family: &CutoffFamily,
    r_list: &[f64],
    sample_count: usize,
    seed: u64,
) -> Result<CutoffBoundsTable> {
    if r_list.is_empty() {
        return domain("r_list is empty");
    }
    if r_list.iter().any(|&r| !(r > 0.0)) {
        return domain("radii must be positive");
    }
    if r_list.windows(2).any(|w| w[1] >= w[0]) {
        return domain("radii must be strictly decreasing");
    }
    let curve = family.curve();
    let n = curve.dim();
    let alpha = curve.exponent();
    let (grid_x, grid_y) = shell_factor_sups(n);
    let x_peak = x_factor(0.5);
    let mut rows = Vec::with_capacity(r_list.len());
    for (idx, &r) in r_list.iter().enumerate() {
        let level = family.level(r)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(idx as u64));
        let mut grad = 10.0 * grid_x;
        let mut lap = 100.0 * grid_y;
        let mut dt: f64 = 0.0;
        let time_scale = r.powf(1.0 / alpha);
        for _ in 0..sample_count {
            let (x, t) = sample_shell_point(&level, &mut rng)?;
            let g: f64 = level
                .gradient(&x, t)?
                .iter()
                .map(|v| v * v)
                .sum::<f64>()
                .sqrt();
            grad = grad.max(r * g);
            lap = lap.max(r * r * level.laplacian(&x, t)?.abs());
            dt = dt.max(time_scale * level.time_derivative(&x, t)?.abs());
            let v = level.mollified.derivative(t)?;
            let speed = v.iter().map(|c| c * c).sum::<f64>().sqrt();
            dt = dt.max(time_scale * 10.0 / r * x_peak * speed);
        }
        rows.push(CutoffBoundsRow {
            r,
            epsilon: level.epsilon,
            sup_scaled_grad: grad,
            sup_scaled_lap: lap,
            sup_scaled_dt: dt,
        });
    }
    let grad_ratio = spread(rows.iter().map(|r| r.sup_scaled_grad));
    let lap_ratio = spread(rows.iter().map(|r| r.sup_scaled_lap));
    let dt_ratio = spread(rows.iter().map(|r| r.sup_scaled_dt));
    let bounded = grad_ratio <= BOUND_RATIO_LIMIT
        && lap_ratio <= BOUND_RATIO_LIMIT
        && dt_ratio <= BOUND_RATIO_LIMIT;
    Ok(CutoffBoundsTable {
        rows,
        grad_ratio,
        lap_ratio,
        dt_ratio,
        bounded,
    })
}

/// `∂_t η` by Richardson-combined central differences on a ladder of steps
/// `h0, h0/10, …, h0/10^8`. Walks down while successive estimates keep
/// agreeing better and stops once rounding takes over.
pub fn time_difference(level: &CutoffLevel, x: &[f64], t: f64, h0: f64) -> Result<f64> {
    let mut ladder = Vec::with_capacity(9);
    for k in 0..9 {
        let h = h0 * 10f64.powi(-k);
        let mut first = [0.0; 2];
        for (j, h) in [h, 0.5 * h].into_iter().enumerate() {
            let (tp, tm) = (t + h, t - h);
            first[j] = (level.eta(x, tp)? - level.eta(x, tm)?) / (tp - tm);
        }
        ladder.push((4.0 * first[1] - first[0]) / 3.0);
    }
    let (mut best, mut best_err) = (ladder[0], f64::INFINITY);
    for k in 1..ladder.len() {
        let err = (ladder[k] - ladder[k - 1]).abs();
        if err <= best_err {
            (best, best_err) = (ladder[k], err);
        } else if err > 2.0 * best_err {
            break;
        }
    }
    Ok(best)
}

/// Worst disagreement between the closed-form derivatives and centered
/// finite differences at random shell points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DerivativeCheck {
    pub r: f64,
    pub samples: usize,
    pub grad_rel_error: f64,
    pub lap_rel_error: f64,
    pub dt_rel_error: f64,
}

/// Compares gradient (step `1e-6 r`), Laplacian (steps `1e-4 r` and `5e-5 r`,
/// Richardson-combined) and time derivative with finite differences. The time
/// derivative comes from [`time_difference`], since no single step suits
/// both rough curves (scale `ε_r`) and smooth ones whose mollification is
/// only accurate to quadrature tolerance.
///
/// Errors are relative to `max(|closed form|, 1e-6 · scale)`, where `scale`
/// is the sup of that derivative over the shell, so points where a
/// derivative passes through zero do not dominate. The Laplacian floor is
/// also kept at least 100 times the rounding level of its second difference.
pub fn check_derivatives(
    level: &CutoffLevel,
    samples: usize,
    seed: u64,
) -> Result<DerivativeCheck> {
    let n = level.dim();
    let r = level.radius;
    let (sx, sy) = shell_factor_sups(n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = (0.0f64, 0.0f64, 0.0f64);
    let hx = 1e-6 * r;
    let hl = 1e-4 * r;
    for _ in 0..samples {
        let (x, t) = sample_shell_point(level, &mut rng)?;
        let grad = level.gradient(&x, t)?;
        let lap = level.laplacian(&x, t)?;
        let dt = level.time_derivative(&x, t)?;
        let eta0 = level.eta(&x, t)?;
        let mut lap_fd = 0.0;
        let mut xp = x.clone();
        for i in 0..n {
            xp[i] = x[i] + hx;
            let up = level.eta(&xp, t)?;
            xp[i] = x[i] - hx;
            let um = level.eta(&xp, t)?;
            let fd = (up - um) / (2.0 * hx);
            let floor = 1e-6 * 10.0 * sx / r;
            worst.0 = worst.0.max((fd - grad[i]).abs() / grad[i].abs().max(floor));

            let mut second = [0.0; 2];
            for (k, h) in [hl, 0.5 * hl].into_iter().enumerate() {
                xp[i] = x[i] + h;
                let up = level.eta(&xp, t)?;
                xp[i] = x[i] - h;
                let um = level.eta(&xp, t)?;
                second[k] = (up - 2.0 * eta0 + um) / (h * h);
            }
            lap_fd += (4.0 * second[1] - second[0]) / 3.0;
            xp[i] = x[i];
        }
        // a second difference cannot resolve less than the rounding of η over h²
        let xmax = x.iter().fold(r, |m, c| m.max(c.abs()));
        let rounding = f64::EPSILON * xmax * 10.0 * sx / r;
        let floor = (1e-6 * 100.0 * sy / (r * r)).max(100.0 * rounding / (0.25 * hl * hl));
        worst.1 = worst.1.max((lap_fd - lap).abs() / lap.abs().max(floor));

        let v = level.mollified.derivative(t)?;
        let speed = v.iter().map(|c| c * c).sum::<f64>().sqrt();
        let cross = if speed > 0.0 {
            0.1 * r / speed
        } else {
            f64::INFINITY
        };
        let fd = time_difference(
            level,
            &x,
            t,
            (1e-2 * cross).min(0.1 * level.epsilon).min(1e-3),
        )?;
        let floor = 1e-6 * 10.0 * sx / r * speed;
        if floor > 0.0 || dt != 0.0 || fd != 0.0 {
            worst.2 = worst
                .2
                .max((fd - dt).abs() / dt.abs().max(floor).max(f64::MIN_POSITIVE));
        }
    }
    Ok(DerivativeCheck {
        r,
        samples,
        grad_rel_error: worst.0,
        lap_rel_error: worst.1,
        dt_rel_error: worst.2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::{make_builtin_curve, CurveKind, CurveParams};
    use approx::assert_relative_eq;

    fn constant(dim: usize) -> HolderCurve {
        make_builtin_curve(
            CurveKind::Constant,
            Some(0.5),
            &CurveParams::default(),
            dim,
            1.0,
            None,
        )
        .unwrap()
    }

    fn circle3() -> HolderCurve {
        make_builtin_curve(
            CurveKind::Circle,
            Some(0.5),
            &CurveParams::default(),
            3,
            1.0,
            None,
        )
        .unwrap()
    }

    #[test]
    fn step_profile_values() {
        assert_eq!(smooth_step(0.0), 0.0);
        assert_eq!(smooth_step(1.0), 1.0);
        assert_relative_eq!(smooth_step(0.5), 0.5, epsilon = 1e-15);
        // X(1/2) = (1/4)(4 + 4) = 2
        assert_relative_eq!(x_factor(0.5), 2.0, epsilon = 1e-14);
        for s in [1e-4, 1e-3, 1.0 - 1e-3, 1.0 - 1e-4] {
            assert!(x_factor(s).abs() < 1e-100);
            assert!(y_factor(s, 3).abs() < 1e-100);
        }
        assert_eq!(x_factor(0.0), 0.0);
        assert_eq!(y_factor(1.0, 3), 0.0);
    }

    #[test]
    fn shell_sups_match_reference_grid_search() {
        // σ-grid search at 30 digits: sup X = 2, sup |Y_2| = 9.948969, sup |Y_3| = 10.058177
        let (sx, sy2) = shell_factor_sups(2);
        let (_, sy3) = shell_factor_sups(3);
        assert_relative_eq!(sx, 2.0, max_relative = 1e-9);
        assert_relative_eq!(sy2, 9.948_968_769_415_471, max_relative = 1e-6);
        assert_relative_eq!(sy3, 10.058_177_401_517_98, max_relative = 1e-6);
    }

    #[test]
    fn corrected_y_is_the_second_derivative() {
        // reference: 30-digit numerical differentiation of g at σ = 0.2, 0.8 with N = 3
        assert_relative_eq!(
            y_factor(0.2, 3),
            9.752_630_180_205_793,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            y_factor(0.8, 3),
            -9.434_087_197_688_148,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            y_printed(0.2, 3),
            9.194_876_181_017_690,
            max_relative = 1e-12
        );
        assert!(printed_laplacian_discrepancy(3) > 0.05);
    }

    #[test]
    fn eta_regions_and_examples() {
        let fam = CutoffFamily::new(constant(2), &[0.2]).unwrap();
        let r = 0.2;
        assert_eq!(fam.eta(&[0.7 * r, 0.0], 0.5, r).unwrap(), 0.0);
        assert_relative_eq!(
            fam.eta(&[0.75 * r, 0.0], 0.5, r).unwrap(),
            0.5,
            epsilon = 1e-12
        );
        assert_eq!(fam.eta(&[0.0, 1.01 * r], 0.5, r).unwrap(), 1.0);
        assert!(fam
            .eta_gradient(&[0.1 * r, 0.0], 0.5, r)
            .unwrap()
            .iter()
            .all(|g| *g == 0.0));
        assert_eq!(fam.eta_laplacian(&[0.9 * r, 0.0], 0.5, r).unwrap(), 0.0);
        let g = fam.eta_gradient(&[0.0, 0.75 * r], 0.5, r).unwrap();
        assert_relative_eq!(g[1], 20.0 / r, max_relative = 1e-12);
        for x in [[0.72 * r, 0.0], [0.0, 0.77 * r]] {
            assert_eq!(fam.eta_dt(&x, 0.3, r).unwrap(), 0.0);
        }
    }

    #[test]
    fn smoothing_scale_shrinks_with_r() {
        let fam = CutoffFamily::new(circle3(), &[]).unwrap();
        let e: Vec<f64> = [0.5, 0.25, 0.125]
            .iter()
            .map(|&r| fam.smoothing_scale(r))
            .collect();
        assert!(e[0] > e[1] && e[1] > e[2]);
        let l = fam.curve().holder_constant();
        assert_relative_eq!(e[0], (0.5 / (30.0 * l)).powi(2), max_relative = 1e-12);
    }

    #[test]
    fn eta_is_one_far_and_zero_near_the_curve() {
        let curve = circle3();
        let r = 0.25;
        let fam = CutoffFamily::new(curve.clone(), &[r]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10_000 {
            let t = rng.random_range(0.01..0.99);
            let c = curve.eval(t);
            let u = random_unit(&mut rng, 3);
            let d: f64 = rng.random_range(0.0..2.0 * r);
            let x: Vec<f64> = (0..3).map(|i| c[i] + d * u[i]).collect();
            let e = fam.eta(&x, t, r).unwrap();
            assert!((0.0..=1.0).contains(&e));
            if d > r {
                assert_eq!(e, 1.0);
            }
            if d < r / 2.0 {
                assert_eq!(e, 0.0);
            }
        }
    }

    #[test]
    fn eta_is_radially_nondecreasing() {
        let mut prev = 0.0;
        for k in 0..=1000 {
            let s = -0.1 + 1.2 * k as f64 / 1000.0;
            let e = smooth_step(s);
            assert!(e >= prev);
            prev = e;
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let fam = CutoffFamily::new(circle3(), &[0.25]).unwrap();
        let check = check_derivatives(&fam.level(0.25).unwrap(), 1000, 11).unwrap();
        assert!(check.grad_rel_error < 1e-4, "{check:?}");
        assert!(check.lap_rel_error < 1e-3, "{check:?}");
        assert!(check.dt_rel_error < 1e-4, "{check:?}");
    }

    #[test]
    fn constant_curve_bounds_table() {
        let fam = CutoffFamily::new(constant(3), &[1.0, 0.5]).unwrap();
        let table = verify_cutoff_bounds(&fam, &[1.0, 0.5], 2000, 3).unwrap();
        let (sx, sy) = shell_factor_sups(3);
        for row in &table.rows {
            assert_relative_eq!(row.sup_scaled_grad, 10.0 * sx, max_relative = 1e-9);
            assert_relative_eq!(row.sup_scaled_lap, 100.0 * sy, max_relative = 1e-9);
            assert_eq!(row.sup_scaled_dt, 0.0);
        }
        assert_relative_eq!(table.grad_ratio, 1.0, max_relative = 1e-9);
        assert!(table.bounded);
    }

    #[test]
    fn rough_curve_time_derivative_scales_with_smoothing_scale() {
        let curve = make_builtin_curve(
            CurveKind::Weierstrass,
            Some(0.75),
            &CurveParams::default(),
            2,
            1.0,
            None,
        )
        .unwrap();
        let radii: Vec<f64> = (3..=8).map(|k| 0.5f64.powi(k)).collect();
        let fam = CutoffFamily::new(curve, &radii).unwrap();
        let table = verify_cutoff_bounds(&fam, &radii, 2000, 11).unwrap();
        assert!(table.rows.iter().all(|row| row.sup_scaled_dt > 0.0));
        assert!(table.dt_ratio <= 2.0, "{table:?}");
    }

    #[test]
    fn bounds_reject_increasing_radii() {
        let fam = CutoffFamily::new(constant(2), &[]).unwrap();
        assert!(verify_cutoff_bounds(&fam, &[0.1, 0.2], 10, 0).is_err());
        assert!(verify_cutoff_bounds(&fam, &[], 10, 0).is_err());
    }
}
