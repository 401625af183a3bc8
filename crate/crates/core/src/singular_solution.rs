//! The heat kernel and the Duhamel field of a moving point source.
//!
//! `F(x, t) = ∫_0^t Φ(x − ξ(s), t − s) ds` solves the heat equation off the
//! curve, behaves like `c_N |x − ξ(t)|^{2−N}` (or `(1/2π) log(1/|x − ξ(t)|)`
//! in the plane) next to it, and satisfies
//! `∫∫ (−φ_t − Δφ) F = ∫ φ(ξ(t), t) dt` against test functions.

use std::f64::consts::PI;

use gauss_quad::GaussLegendre;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curve::{HolderCurve, MAX_DIM};
use crate::error::{domain, Error, Result};
use crate::numerics::{combine, linear_fit, unit_ball_volume, Quadrature, QuadratureResult};

/// Points with `|x − ξ(t)| ≤ SIGMA_FORM_RATIO · √t` use the σ-substitution.
pub const SIGMA_FORM_RATIO: f64 = 0.1;

/// Default relative tolerance of a field evaluation.
pub const FIELD_TOL: f64 = 1e-10;

/// Default panel budget of a field evaluation.
pub const FIELD_MAX_PANELS: usize = 200_000;

/// Gaussian tails beyond this many standard units are dropped.
const GAUSS_CUTOFF: f64 = 6.0;

/// `Φ(x, t) = (4πt)^{−N/2} exp(−|x|²/4t)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct HeatKernel {
    dim: usize,
}

impl HeatKernel {
    pub fn new(dim: usize) -> Result<Self> {
        if !(2..=MAX_DIM).contains(&dim) {
            return domain(format!(
                "heat kernel dimension must be in 2..={MAX_DIM}, got {dim}"
            ));
        }
        Ok(HeatKernel { dim })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Kernel value from the squared norm `|x|²`.
    pub fn eval_sq(&self, r2: f64, t: f64) -> f64 {
        (4.0 * PI * t).powf(-0.5 * self.dim as f64) * (-r2 / (4.0 * t)).exp()
    }

    pub fn eval(&self, x: &[f64], t: f64) -> Result<f64> {
        if !(t > 0.0) {
            return domain(format!("heat kernel needs t > 0, got {t}"));
        }
        if x.len() != self.dim {
            return domain(format!(
                "point has dimension {}, expected {}",
                x.len(),
                self.dim
            ));
        }
        Ok(self.eval_sq(x.iter().map(|v| v * v).sum(), t))
    }
}

/// `Φ(x, t)` for the kernel's dimension.
pub fn phi(kernel: &HeatKernel, x: &[f64], t: f64) -> Result<f64> {
    kernel.eval(x, t)
}

/// `1/(N(N−2)ω_N)` for `N ≥ 3` and `1/(2π)` for `N = 2`.
pub fn reference_constant(dim: usize) -> Result<f64> {
    match dim {
        0 | 1 => domain(format!("no singular asymptote in dimension {dim}")),
        2 => Ok(1.0 / (2.0 * PI)),
        n => Ok(1.0 / (n as f64 * (n as f64 - 2.0) * unit_ball_volume(n)?)),
    }
}

/// A scalar field on space-time, possibly singular along a locus.
pub trait SpaceTimeField: Sync {
    fn dim(&self) -> usize;

    fn value(&self, x: &[f64], t: f64) -> Result<f64>;

    /// Distance from `x` to the singular locus at time `t`; `None` if smooth.
    fn locus_distance(&self, _x: &[f64], _t: f64) -> Option<f64> {
        None
    }
}

/// A smooth field given by a closure.
pub struct FnField<F> {
    dim: usize,
    f: F,
}

impl<F: Fn(&[f64], f64) -> f64 + Sync> FnField<F> {
    pub fn new(dim: usize, f: F) -> Self {
        FnField { dim, f }
    }
}

impl<F: Fn(&[f64], f64) -> f64 + Sync> SpaceTimeField for FnField<F> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[f64], t: f64) -> Result<f64> {
        Ok((self.f)(x, t))
    }
}

/// `Φ(x − x₀, t + shift)`, an everywhere smooth solution for `shift > 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftedKernel {
    kernel: HeatKernel,
    center: Vec<f64>,
    shift: f64,
}

impl ShiftedKernel {
    pub fn new(center: Vec<f64>, shift: f64) -> Result<Self> {
        if !(shift > 0.0) {
            return domain(format!("time shift must be positive, got {shift}"));
        }
        Ok(ShiftedKernel {
            kernel: HeatKernel::new(center.len())?,
            center,
            shift,
        })
    }
}

impl SpaceTimeField for ShiftedKernel {
    fn dim(&self) -> usize {
        self.kernel.dim
    }

    fn value(&self, x: &[f64], t: f64) -> Result<f64> {
        if x.len() != self.center.len() {
            return domain("dimension mismatch");
        }
        let r2 = x
            .iter()
            .zip(&self.center)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        let s = t + self.shift;
        if !(s > 0.0) {
            return domain(format!("shifted time {s} is not positive"));
        }
        Ok(self.kernel.eval_sq(r2, s))
    }
}

/// The Duhamel field `F` of a Hölder curve.
#[derive(Debug, Clone)]
pub struct SingularField {
    kernel: HeatKernel,
    curve: HolderCurve,
    quadrature: Quadrature,
}

impl SingularField {
    pub fn new(curve: HolderCurve) -> Result<Self> {
        Ok(SingularField {
            kernel: HeatKernel::new(curve.dim())?,
            curve,
            quadrature: Quadrature::relative(FIELD_TOL).max_panels(FIELD_MAX_PANELS),
        })
    }

    /// Relative tolerance of each evaluation.
    pub fn with_tolerance(mut self, rel_tol: f64) -> Self {
        self.quadrature.rel_tol = rel_tol;
        self
    }

    pub fn with_max_panels(mut self, panels: usize) -> Self {
        self.quadrature.max_panels = panels;
        self
    }

    pub fn kernel(&self) -> &HeatKernel {
        &self.kernel
    }

    pub fn curve(&self) -> &HolderCurve {
        &self.curve
    }

    pub fn tolerance(&self) -> f64 {
        self.quadrature.rel_tol
    }

    fn check_point(&self, x: &[f64], t: f64) -> Result<()> {
        if x.len() != self.kernel.dim {
            return domain(format!(
                "point has dimension {}, expected {}",
                x.len(),
                self.kernel.dim
            ));
        }
        if !(t > 0.0 && t <= self.curve.horizon() * (1.0 + 1e-12)) {
            return domain(format!("t = {t} outside (0, {}]", self.curve.horizon()));
        }
        Ok(())
    }

    /// `|x − ξ(t)|`.
    pub fn distance(&self, x: &[f64], t: f64) -> f64 {
        let mut c = [0.0; MAX_DIM];
        self.curve.eval_into(t, &mut c);
        x.iter()
            .zip(&c)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    fn sq_dist_to_curve(&self, x: &[f64], s: f64) -> f64 {
        let mut p = [0.0; MAX_DIM];
        self.curve.eval_into(s, &mut p);
        x.iter().zip(&p).map(|(a, b)| (a - b) * (a - b)).sum()
    }

    pub fn eval(&self, x: &[f64], t: f64) -> Result<f64> {
        Ok(self.eval_with_error(x, t)?.value)
    }

    /// `F(x, t)` with its quadrature error estimate, on the path chosen by
    /// the ratio `|x − ξ(t)| / √t`.
    pub fn eval_with_error(&self, x: &[f64], t: f64) -> Result<QuadratureResult> {
        self.check_point(x, t)?;
        let z = self.distance(x, t);
        if z == 0.0 {
            return Err(Error::OnSingularity { distance: 0.0 });
        }
        if z <= SIGMA_FORM_RATIO * t.sqrt() {
            self.sigma_integral(x, t, z, None)
        } else {
            self.direct_integral(x, t, z)
        }
    }

    /// `F` through `t − s = |z|²/(4σ)`:
    /// `F = ¼ π^{−N/2} |z|^{2−N} ∫_{|z|²/4t}^∞ σ^{N/2−2} e^{−σ|x−ξ(s)|²/|z|²} dσ`.
    pub fn eval_sigma_form(&self, x: &[f64], t: f64) -> Result<QuadratureResult> {
        self.check_point(x, t)?;
        let z = self.distance(x, t);
        if z == 0.0 {
            return Err(Error::OnSingularity { distance: 0.0 });
        }
        self.sigma_integral(x, t, z, None)
    }

    /// `F` by adaptive quadrature in `u = t − s`.
    pub fn eval_direct(&self, x: &[f64], t: f64) -> Result<QuadratureResult> {
        self.check_point(x, t)?;
        let z = self.distance(x, t);
        if z == 0.0 {
            return Err(Error::OnSingularity { distance: 0.0 });
        }
        self.direct_integral(x, t, z)
    }

    fn sigma_integral(
        &self,
        x: &[f64],
        t: f64,
        z: f64,
        upper: Option<f64>,
    ) -> Result<QuadratureResult> {
        let n = self.kernel.dim as f64;
        let z2 = z * z;
        let power = 0.5 * n - 2.0;
        let integrand = |sigma: f64| {
            let s = (t - z2 / (4.0 * sigma)).max(0.0);
            let d2 = self.sq_dist_to_curve(x, s);
            sigma.powf(power) * (-sigma * d2 / z2).exp()
        };
        let lower = z2 / (4.0 * t);
        let q = &self.quadrature;
        let raw = match upper {
            Some(b) if b <= lower => return Ok(QuadratureResult::default()),
            Some(b) if b <= 1.0 => q.integrate_log_scale(integrand, lower, b)?,
            Some(b) if lower >= 1.0 => q.integrate(integrand, lower, b)?,
            Some(b) => combine(
                q.integrate_log_scale(integrand, lower, 1.0)?,
                q.integrate(integrand, 1.0, b)?,
            ),
            None if lower >= 1.0 => q.integrate_semi_infinite(integrand, lower)?,
            None => combine(
                q.integrate_log_scale(integrand, lower, 1.0)?,
                q.integrate_semi_infinite(integrand, 1.0)?,
            ),
        };
        let scale = 0.25 * PI.powf(-0.5 * n) * z.powf(2.0 - n);
        Ok(raw.scaled(scale))
    }

    fn direct_integral(&self, x: &[f64], t: f64, z: f64) -> Result<QuadratureResult> {
        let n = self.kernel.dim as f64;
        let integrand = |u: f64| {
            if u <= 0.0 {
                return 0.0;
            }
            self.kernel.eval_sq(self.sq_dist_to_curve(x, t - u), u)
        };
        // Below the kernel peak the integrand is tiny and smooth; above it the
        // tail decays like a power of u and is best resolved in ln u.
        let knee = (0.1 * z * z / (2.0 * n)).min(t);
        let head = self.quadrature.integrate(integrand, 0.0, knee)?;
        if knee >= t {
            return Ok(head);
        }
        Ok(combine(
            head,
            self.quadrature.integrate_log_scale(integrand, knee, t)?,
        ))
    }

    /// `F^τ(x, t) = ∫_0^{t−τ} Φ(x − ξ(s), t − s) ds`; finite on the curve too.
    pub fn eval_truncated(&self, x: &[f64], t: f64, tau: f64) -> Result<f64> {
        self.check_point(x, t)?;
        if !(tau > 0.0 && tau < t) {
            return domain(format!("truncation tau = {tau} outside (0, {t})"));
        }
        let integrand = |u: f64| self.kernel.eval_sq(self.sq_dist_to_curve(x, t - u), u);
        Ok(self
            .quadrature
            .integrate_log_scale(integrand, tau, t)?
            .value)
    }
}

impl SpaceTimeField for SingularField {
    fn dim(&self) -> usize {
        self.kernel.dim
    }

    fn value(&self, x: &[f64], t: f64) -> Result<f64> {
        self.eval(x, t)
    }

    fn locus_distance(&self, x: &[f64], t: f64) -> Option<f64> {
        Some(self.distance(x, t))
    }
}

/// `F(x, t)`.
pub fn field_eval(field: &SingularField, x: &[f64], t: f64) -> Result<f64> {
    field.eval(x, t)
}

/// `F^τ(x, t)`.
pub fn field_eval_truncated(field: &SingularField, x: &[f64], t: f64, tau: f64) -> Result<f64> {
    field.eval_truncated(x, t, tau)
}

/// Central-difference `u_t − Δu` with spatial and temporal step `h`.
///
/// Fails with [`Error::StencilTooClose`] unless the locus stays at least
/// `(N + 1) h + 10 h` away from `x` at the times `t − h`, `t`, `t + h`.
pub fn heat_residual(u: &dyn SpaceTimeField, x: &[f64], t: f64, h: f64) -> Result<f64> {
    let n = u.dim();
    if x.len() != n {
        return domain(format!("point has dimension {}, expected {n}", x.len()));
    }
    if !(h > 0.0) {
        return domain(format!("step must be positive, got {h}"));
    }
    let required = (n as f64 + 1.0) * h + 10.0 * h;
    let nearest = [t - h, t, t + h]
        .iter()
        .filter_map(|&s| u.locus_distance(x, s))
        .fold(f64::INFINITY, f64::min);
    if nearest < required {
        return Err(Error::StencilTooClose {
            distance: nearest,
            required,
        });
    }
    let centre = u.value(x, t)?;
    let dt = (u.value(x, t + h)? - u.value(x, t - h)?) / (2.0 * h);
    let mut lap = 0.0;
    let mut p = x.to_vec();
    for i in 0..n {
        p[i] = x[i] + h;
        let up = u.value(&p, t)?;
        p[i] = x[i] - h;
        let um = u.value(&p, t)?;
        p[i] = x[i];
        lap += (up - 2.0 * centre + um) / (h * h);
    }
    Ok(dt - lap)
}

/// Residuals at `h` and `h/2` and their ratio, which tends to 4 for an
/// exact solution with a second-order stencil.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResidualConvergence {
    pub h: f64,
    pub residual_h: f64,
    pub residual_half: f64,
    pub ratio: f64,
}

pub fn residual_convergence(
    u: &dyn SpaceTimeField,
    x: &[f64],
    t: f64,
    h: f64,
) -> Result<ResidualConvergence> {
    let residual_h = heat_residual(u, x, t, h)?;
    let residual_half = heat_residual(u, x, t, 0.5 * h)?;
    Ok(ResidualConvergence {
        h,
        residual_h,
        residual_half,
        ratio: residual_h / residual_half,
    })
}

/// Product bump `A Π_i b((x_i − c_i)/w_i) · b((t − t₀)/w_t)` with
/// `b(s) = e^{−1/(1−s²)}` on `|s| < 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TestFunction {
    pub center: Vec<f64>,
    pub half_widths: Vec<f64>,
    pub t_center: f64,
    pub t_half_width: f64,
    #[serde(default = "one")]
    pub amplitude: f64,
}

fn one() -> f64 {
    1.0
}

/// `(b, b', b'')` at `s`.
fn bump_1d(s: f64) -> (f64, f64, f64) {
    if s.abs() >= 1.0 {
        return (0.0, 0.0, 0.0);
    }
    let q = 1.0 - s * s;
    let b = (-1.0 / q).exp();
    if b == 0.0 {
        return (0.0, 0.0, 0.0);
    }
    let q2 = q * q;
    (
        b,
        -2.0 * s / q2 * b,
        (6.0 * s.powi(4) - 2.0) / (q2 * q2) * b,
    )
}

impl TestFunction {
    pub fn new(
        center: Vec<f64>,
        half_widths: Vec<f64>,
        t_center: f64,
        t_half_width: f64,
    ) -> Result<Self> {
        let f = TestFunction {
            center,
            half_widths,
            t_center,
            t_half_width,
            amplitude: 1.0,
        };
        f.validate()?;
        Ok(f)
    }

    pub fn with_amplitude(mut self, amplitude: f64) -> Self {
        self.amplitude = amplitude;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.center.is_empty()
            || self.center.len() > MAX_DIM
            || self.center.len() != self.half_widths.len()
        {
            return domain("test function center and half_widths must have equal length in 1..=8");
        }
        if self.half_widths.iter().any(|w| !(*w > 0.0)) || !(self.t_half_width > 0.0) {
            return domain("test function widths must be positive");
        }
        if !self.amplitude.is_finite()
            || self.center.iter().any(|c| !c.is_finite())
            || !self.t_center.is_finite()
        {
            return domain("test function parameters must be finite");
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    /// Spatial support box `(lo, hi)`.
    pub fn support(&self) -> (Vec<f64>, Vec<f64>) {
        let lo = self
            .center
            .iter()
            .zip(&self.half_widths)
            .map(|(c, w)| c - w)
            .collect();
        let hi = self
            .center
            .iter()
            .zip(&self.half_widths)
            .map(|(c, w)| c + w)
            .collect();
        (lo, hi)
    }

    pub fn time_support(&self) -> (f64, f64) {
        (
            self.t_center - self.t_half_width,
            self.t_center + self.t_half_width,
        )
    }

    /// `(φ, φ_t, Δφ)` at `(x, t)`.
    pub fn jet(&self, x: &[f64], t: f64) -> (f64, f64, f64) {
        let (bt, dbt, _) = bump_1d((t - self.t_center) / self.t_half_width);
        if bt == 0.0 || self.amplitude == 0.0 {
            return (0.0, 0.0, 0.0);
        }
        let n = self.dim();
        let mut vals = [(0.0, 0.0, 0.0); MAX_DIM];
        let mut prod = 1.0;
        for i in 0..n {
            let w = self.half_widths[i];
            let (b, db, ddb) = bump_1d((x[i] - self.center[i]) / w);
            if b == 0.0 {
                return (0.0, 0.0, 0.0);
            }
            vals[i] = (b, db / w, ddb / (w * w));
            prod *= b;
        }
        // Δ Π b_i = Σ_i b_i'' Π_{j≠i} b_j
        let lap_space: f64 = (0..n).map(|i| vals[i].2 / vals[i].0).sum::<f64>() * prod;
        let a = self.amplitude;
        (
            a * prod * bt,
            a * prod * dbt / self.t_half_width,
            a * lap_space * bt,
        )
    }

    pub fn value(&self, x: &[f64], t: f64) -> f64 {
        self.jet(x, t).0
    }

    pub fn dt(&self, x: &[f64], t: f64) -> f64 {
        self.jet(x, t).1
    }

    pub fn laplacian(&self, x: &[f64], t: f64) -> f64 {
        self.jet(x, t).2
    }

    /// `−φ_t − Δφ`.
    pub fn adjoint(&self, x: &[f64], t: f64) -> f64 {
        let (_, dt, lap) = self.jet(x, t);
        -dt - lap
    }
}

/// One row of a concentration table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConcentrationRow {
    pub tau: f64,
    pub value: f64,
    pub target: f64,
    pub deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConcentrationTable {
    pub rows: Vec<ConcentrationRow>,
    /// Whether the deviations decrease along the τ-list.
    pub monotone: bool,
}

/// `∫ φ(x) Φ(x − ξ(t − τ), τ) dx` for each `τ`, compared with `φ(ξ(t))`.
///
/// The integral is taken in `y = (x − ξ(t−τ)) / (2√τ)` over `|y_i| ≤ 6`,
/// intersected with `window` (a box containing the support of `φ`) when given.
pub fn concentration_check_with<P>(
    field: &SingularField,
    phi: P,
    window: Option<(&[f64], &[f64])>,
    t: f64,
    tau_list: &[f64],
) -> Result<ConcentrationTable>
where
    P: Fn(&[f64]) -> f64,
{
    let n = field.kernel.dim;
    let curve = &field.curve;
    if !(t > 0.0 && t < curve.horizon()) {
        return domain(format!("t = {t} outside (0, {})", curve.horizon()));
    }
    if let Some((lo, hi)) = window {
        if lo.len() != n || hi.len() != n {
            return domain("window dimension mismatch");
        }
    }
    let target = phi(&curve.eval(t));
    let quad = Quadrature::with_tol(1e-12).max_panels(50_000);
    let mut rows = Vec::with_capacity(tau_list.len());
    for &tau in tau_list {
        if !(tau > 0.0 && tau < t) {
            return domain(format!("tau = {tau} outside (0, {t})"));
        }
        let p = curve.eval(t - tau);
        let scale = 2.0 * tau.sqrt();
        let mut lo = vec![-GAUSS_CUTOFF; n];
        let mut hi = vec![GAUSS_CUTOFF; n];
        if let Some((wlo, whi)) = window {
            for i in 0..n {
                lo[i] = lo[i].max((wlo[i] - p[i]) / scale);
                hi[i] = hi[i].min((whi[i] - p[i]) / scale);
            }
        }
        let value = if lo.iter().zip(&hi).any(|(a, b)| a >= b) {
            0.0
        } else {
            let norm = PI.powf(-0.5 * n as f64);
            let integrand = |y: &[f64]| {
                let mut x = [0.0; MAX_DIM];
                let mut y2 = 0.0;
                for i in 0..n {
                    x[i] = p[i] + scale * y[i];
                    y2 += y[i] * y[i];
                }
                norm * (-y2).exp() * phi(&x[..n])
            };
            quad.integrate_box(&integrand, &lo, &hi)?.value
        };
        rows.push(ConcentrationRow {
            tau,
            value,
            target,
            deviation: (value - target).abs(),
        });
    }
    let monotone = rows
        .windows(2)
        .all(|w| w[1].deviation <= w[0].deviation + 1e-14);
    Ok(ConcentrationTable { rows, monotone })
}

/// [`concentration_check_with`] for the spatial slice of a test function at `t`.
pub fn concentration_check(
    field: &SingularField,
    testfn: &TestFunction,
    t: f64,
    tau_list: &[f64],
) -> Result<ConcentrationTable> {
    if testfn.dim() != field.kernel.dim {
        return domain("test function dimension mismatch");
    }
    let (lo, hi) = testfn.support();
    concentration_check_with(field, |x| testfn.value(x, t), Some((&lo, &hi)), t, tau_list)
}

/// Settings of [`distributional_pairing_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairingOptions {
    /// Gauss–Legendre nodes per axis for the plane (`N = 2`).
    pub nodes: usize,
    /// Samples for the Monte Carlo path (`N ≥ 3`).
    pub samples: usize,
    pub seed: u64,
}

impl Default for PairingOptions {
    fn default() -> Self {
        PairingOptions {
            nodes: 48,
            samples: 10_000_000,
            seed: 0,
        }
    }
}

/// Both sides of the weak identity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Pairing {
    /// `∫∫ (−φ_t − Δφ) F dx dt`
    pub lhs: f64,
    /// `∫ φ(ξ(t), t) dt`
    pub rhs: f64,
    /// Change of `lhs` against a coarser rule, or the Monte Carlo standard error.
    pub lhs_error: f64,
    pub monte_carlo: bool,
}

impl Pairing {
    pub fn relative_gap(&self) -> f64 {
        (self.lhs - self.rhs).abs() / self.rhs.abs()
    }
}

pub fn distributional_pairing(field: &SingularField, testfn: &TestFunction) -> Result<Pairing> {
    distributional_pairing_with(field, testfn, &PairingOptions::default())
}

/// Evaluates both sides of `∫∫(−φ_t − Δφ) F = ∫ φ(ξ(t), t) dt`.
///
/// In the plane the left side uses tensor Gauss–Legendre rules: in `t`, then
/// over the support box, or in polar coordinates about `ξ(t)` when the curve
/// is inside the box so the logarithmic singularity sits at the origin of
/// the radial rule. The test function vanishes to all orders at the edge of
/// its support, which keeps these rules spectrally accurate. In higher
/// dimensions the left side is a Monte Carlo estimate in spherical
/// coordinates about `ξ(t)`.
pub fn distributional_pairing_with(
    field: &SingularField,
    testfn: &TestFunction,
    opts: &PairingOptions,
) -> Result<Pairing> {
    testfn.validate()?;
    let n = field.kernel.dim;
    if testfn.dim() != n {
        return domain(format!(
            "test function has dimension {}, field has {n}",
            testfn.dim()
        ));
    }
    let (t_lo, t_hi) = testfn.time_support();
    if !(t_lo > 0.0 && t_hi < field.curve.horizon()) {
        return domain(format!(
            "test function time support [{t_lo}, {t_hi}] must lie inside (0, {})",
            field.curve.horizon()
        ));
    }
    if testfn.amplitude == 0.0 {
        return Ok(Pairing {
            lhs: 0.0,
            rhs: 0.0,
            lhs_error: 0.0,
            monte_carlo: n > 2,
        });
    }
    let rhs = Quadrature::with_tol(1e-13)
        .integrate(|t| testfn.value(&field.curve.eval(t), t), t_lo, t_hi)?
        .value;
    let (lhs, lhs_error) = if n == 2 {
        if opts.nodes < 3 {
            return domain("plane pairing needs at least three nodes per axis");
        }
        let fine = plane_pairing_rule(field, testfn, opts.nodes)?;
        let coarse = plane_pairing_rule(field, testfn, (2 * opts.nodes).div_ceil(3))?;
        (fine, (fine - coarse).abs())
    } else {
        pairing_lhs_monte_carlo(field, testfn, opts)?
    };
    Ok(Pairing {
        lhs,
        rhs,
        lhs_error,
        monte_carlo: n > 2,
    })
}

/// Nodes and weights of `rule` mapped to `[a, b]`.
fn mapped(rule: &GaussLegendre, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    rule.nodes()
        .zip(rule.weights())
        .map(move |(x, w)| (mid + half * x, half * w))
}

fn plane_pairing_rule(field: &SingularField, tf: &TestFunction, nodes: usize) -> Result<f64> {
    let degree = nodes
        .try_into()
        .map_err(|_| Error::Domain("node count must be positive".into()))?;
    let rule = GaussLegendre::new(degree);
    let (lo, hi) = tf.support();
    let (t_lo, t_hi) = tf.time_support();
    let times: Vec<(f64, f64)> = mapped(&rule, t_lo, t_hi).collect();
    let parts: Vec<Result<f64>> = times
        .par_iter()
        .map(|&(t, w)| Ok(w * spatial_pairing_plane(field, tf, t, &lo, &hi, &rule)?))
        .collect();
    parts.into_iter().sum()
}

fn spatial_pairing_plane(
    field: &SingularField,
    tf: &TestFunction,
    t: f64,
    lo: &[f64],
    hi: &[f64],
    rule: &GaussLegendre,
) -> Result<f64> {
    let c = field.curve.eval(t);
    let integrand = |x: &[f64]| -> Result<f64> {
        let g = tf.adjoint(x, t);
        if g == 0.0 {
            return Ok(0.0);
        }
        Ok(g * field.eval(x, t)?)
    };
    let mut total = 0.0;
    let inside = (0..2).all(|i| c[i] > lo[i] && c[i] < hi[i]);
    if !inside {
        for (x0, w0) in mapped(rule, lo[0], hi[0]) {
            for (x1, w1) in mapped(rule, lo[1], hi[1]) {
                total += w0 * w1 * integrand(&[x0, x1])?;
            }
        }
        return Ok(total);
    }
    // Polar about ξ(t): every ray from an interior point leaves the box once.
    let exit = |theta: f64| {
        let d = [theta.cos(), theta.sin()];
        let mut r = f64::INFINITY;
        for i in 0..2 {
            if d[i] > 0.0 {
                r = r.min((hi[i] - c[i]) / d[i]);
            } else if d[i] < 0.0 {
                r = r.min((lo[i] - c[i]) / d[i]);
            }
        }
        r
    };
    // The exit distance has kinks at the corner directions, so split there.
    let mut cuts: Vec<f64> = [
        (lo[0], lo[1]),
        (hi[0], lo[1]),
        (hi[0], hi[1]),
        (lo[0], hi[1]),
    ]
    .iter()
    .map(|&(a, b)| (b - c[1]).atan2(a - c[0]).rem_euclid(2.0 * PI))
    .collect();
    cuts.sort_by(f64::total_cmp);
    cuts.push(cuts[0] + 2.0 * PI);
    for w in cuts.windows(2) {
        for (theta, wt) in mapped(rule, w[0], w[1]) {
            let (s, co) = theta.sin_cos();
            let reach = exit(theta);
            // ρ = R u² flattens the ρ log ρ behaviour at the origin
            for (u, wu) in mapped(rule, 0.0, 1.0) {
                let rho = reach * u * u;
                let x = [c[0] + rho * co, c[1] + rho * s];
                total += wt * wu * 2.0 * reach * u * rho * integrand(&x)?;
            }
        }
    }
    Ok(total)
}

fn pairing_lhs_monte_carlo(
    field: &SingularField,
    tf: &TestFunction,
    opts: &PairingOptions,
) -> Result<(f64, f64)> {
    const CHUNK: usize = 1 << 14;
    if opts.samples < 2 {
        return domain("Monte Carlo pairing needs at least two samples");
    }
    let n = field.kernel.dim;
    let (lo, hi) = tf.support();
    let (t_lo, t_hi) = tf.time_support();
    let sphere = n as f64 * unit_ball_volume(n)?;
    let chunks = opts.samples.div_ceil(CHUNK);
    let partial: Vec<Result<(f64, f64)>> = (0..chunks)
        .into_par_iter()
        .map(|k| {
            let count = CHUNK.min(opts.samples - k * CHUNK);
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            rng.set_stream(k as u64);
            let mut sum = 0.0;
            let mut sum2 = 0.0;
            for _ in 0..count {
                let t = rng.random_range(t_lo..t_hi);
                let c = field.curve.eval(t);
                // farthest box corner bounds the support radius
                let reach = (0..n)
                    .map(|i| {
                        let d = (c[i] - lo[i]).abs().max((c[i] - hi[i]).abs());
                        d * d
                    })
                    .sum::<f64>()
                    .sqrt();
                let rho = reach * rng.random::<f64>();
                let mut x = [0.0; MAX_DIM];
                let mut norm: f64 = 0.0;
                for v in x.iter_mut().take(n) {
                    *v = rng.sample(StandardNormal);
                    norm += *v * *v;
                }
                let norm = norm.sqrt();
                for i in 0..n {
                    x[i] = c[i] + rho * x[i] / norm;
                }
                let g = tf.adjoint(&x[..n], t);
                if g == 0.0 || rho == 0.0 {
                    continue;
                }
                let w = (t_hi - t_lo) * reach * sphere * rho.powi(n as i32 - 1);
                let v = w * g * field.eval(&x[..n], t)?;
                sum += v;
                sum2 += v * v;
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
    let m = opts.samples as f64;
    let mean = sum / m;
    let var = (sum2 / m - mean * mean).max(0.0);
    Ok((mean, (var / (m - 1.0)).sqrt()))
}

/// One radius of an asymptotic sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AsymptoticSample {
    pub rho: f64,
    /// `F(ξ(t) + ρ d, t)`
    pub value_plus: f64,
    /// `F(ξ(t) − ρ d, t)`
    pub value_minus: f64,
    /// Mean of the two.
    pub value: f64,
    /// `value · ρ^{N−2}` for `N ≥ 3`, `value / log(1/ρ)` for `N = 2`.
    pub scaled: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AsymptoticEstimate {
    pub dim: usize,
    pub estimate: f64,
    pub reference: f64,
    pub relative_error: f64,
    /// Spread between the extrapolations from the two smallest and the next
    /// two radii (`N ≥ 3`), or the slope's standard error (`N = 2`).
    pub error_estimate: f64,
    /// Exponent `q` of the remainder model `c + a ρ^q` (`N ≥ 3`).
    pub remainder_exponent: f64,
    /// Whether the scaled values approach the limit monotonically.
    pub monotone: bool,
    pub samples: Vec<AsymptoticSample>,
}

/// Radii `hi, …, lo` spaced geometrically, `count ≥ 2` of them.
pub fn geometric_radii(hi: f64, lo: f64, count: usize) -> Vec<f64> {
    if count < 2 {
        return vec![hi];
    }
    let ratio = (lo / hi).powf(1.0 / (count - 1) as f64);
    (0..count).map(|k| hi * ratio.powi(k as i32)).collect()
}

/// Extracts the coefficient of the leading singular term of `F` at time `t`
/// along the axis `direction`.
///
/// `F` is averaged over the two points `ξ(t) ± ρ d`. The first correction,
/// of order `ρ^{2α−1}`, is odd in `d` and cancels; on rough curves it also
/// oscillates with `log ρ`, which defeats extrapolation. What remains is
/// of order `ρ^{2(2α−1)}`, and for `N ≥ 3`
/// `F ρ^{N−2} = c + a ρ^{2(2α−1)} + …` is solved for `c` from the two
/// smallest radii. For `N = 2`, `c` is the least-squares slope of `F`
/// against `log(1/ρ)`.
pub fn asymptotic_coefficient(
    field: &SingularField,
    t: f64,
    direction: &[f64],
    radii: &[f64],
) -> Result<AsymptoticEstimate> {
    let n = field.kernel.dim;
    if direction.len() != n {
        return domain(format!(
            "direction has dimension {}, expected {n}",
            direction.len()
        ));
    }
    let norm = direction.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !(norm > 0.0) {
        return domain("direction must be non-zero");
    }
    if radii.len() < 2
        || radii.windows(2).any(|w| !(w[1] < w[0]))
        || radii.iter().any(|r| !(*r > 0.0))
    {
        return domain("radii must be a positive, strictly decreasing list of length >= 2");
    }
    let alpha = field.curve.exponent();
    if !(alpha > 0.5) {
        return domain(format!(
            "asymptotics need a curve exponent above 1/2, got {alpha}"
        ));
    }
    let centre = field.curve.eval(t);
    let points: Vec<(f64, f64)> = radii.iter().flat_map(|&r| [(r, 1.0), (r, -1.0)]).collect();
    let values: Vec<Result<f64>> = points
        .par_iter()
        .map(|&(rho, sign)| {
            let x: Vec<f64> = (0..n)
                .map(|i| centre[i] + sign * rho * direction[i] / norm)
                .collect();
            field.eval(&x, t)
        })
        .collect();
    let mut values = values.into_iter();
    let mut samples = Vec::with_capacity(radii.len());
    for &rho in radii {
        let value_plus = values.next().expect("two values per radius")?;
        let value_minus = values.next().expect("two values per radius")?;
        let value = 0.5 * (value_plus + value_minus);
        let scaled = if n == 2 {
            value / (1.0 / rho).ln()
        } else {
            value * rho.powi(n as i32 - 2)
        };
        samples.push(AsymptoticSample {
            rho,
            value_plus,
            value_minus,
            value,
            scaled,
        });
    }
    let reference = reference_constant(n)?;
    let q = 2.0 * (2.0 * alpha - 1.0);
    let (estimate, error_estimate) = if n == 2 {
        let xs: Vec<f64> = samples.iter().map(|s| (1.0 / s.rho).ln()).collect();
        let ys: Vec<f64> = samples.iter().map(|s| s.value).collect();
        let (slope, _, rms) = linear_fit(&xs, &ys)?;
        let m = xs.len() as f64;
        let mx = xs.iter().sum::<f64>() / m;
        let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
        (slope, rms / sxx.sqrt())
    } else {
        let extrapolate = |a: &AsymptoticSample, b: &AsymptoticSample| {
            let (ra, rb) = (a.rho.powf(q), b.rho.powf(q));
            (a.scaled * rb - b.scaled * ra) / (rb - ra)
        };
        let k = samples.len();
        let c = extrapolate(&samples[k - 1], &samples[k - 2]);
        let spread = if k >= 3 {
            (c - extrapolate(&samples[k - 2], &samples[k - 3])).abs()
        } else {
            (c - samples[k - 1].scaled).abs()
        };
        (c, spread)
    };
    let monotone = {
        let diffs: Vec<f64> = samples
            .windows(2)
            .map(|w| w[1].scaled - w[0].scaled)
            .collect();
        let slack = 1e-3 * estimate.abs();
        diffs.iter().all(|d| *d >= -slack) || diffs.iter().all(|d| *d <= slack)
    };
    Ok(AsymptoticEstimate {
        dim: n,
        estimate,
        reference,
        relative_error: (estimate - reference).abs() / reference,
        error_estimate,
        remainder_exponent: q,
        monotone,
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::{make_builtin_curve, CurveKind, CurveParams};
    use crate::numerics::erfc_fn;
    use approx::assert_relative_eq;

    fn constant(dim: usize) -> HolderCurve {
        make_builtin_curve(
            CurveKind::Constant,
            None,
            &CurveParams::default(),
            dim,
            1.0,
            None,
        )
        .unwrap()
    }

    fn circle(dim: usize) -> HolderCurve {
        make_builtin_curve(
            CurveKind::Circle,
            None,
            &CurveParams::default(),
            dim,
            1.0,
            None,
        )
        .unwrap()
    }

    fn stationary_3d(r: f64, t: f64) -> f64 {
        erfc_fn(r / (2.0 * t.sqrt())) / (4.0 * PI * r)
    }

    #[test]
    fn kernel_values() {
        let k = HeatKernel::new(2).unwrap();
        assert_relative_eq!(
            phi(&k, &[0.0, 0.0], 1.0 / (4.0 * PI)).unwrap(),
            1.0,
            epsilon = 1e-15
        );
        assert!(phi(&k, &[0.0, 0.0], 0.0).is_err());
        assert_eq!(k.eval_sq(4000.0, 1.0), 0.0);
        assert!(HeatKernel::new(1).is_err());
    }

    #[test]
    fn kernel_has_unit_mass() {
        for n in [2usize, 3] {
            let k = HeatKernel::new(n).unwrap();
            let lo = vec![-15.0; n];
            let hi = vec![15.0; n];
            let q = Quadrature::with_tol(1e-11).integrate_box(
                &|x: &[f64]| k.eval(x, 1.0).unwrap(),
                &lo,
                &hi,
            );
            assert_relative_eq!(q.unwrap().value, 1.0, epsilon = 1e-8);
        }
    }

    #[test]
    fn kernel_solves_heat_equation() {
        let k = HeatKernel::new(2).unwrap();
        let u = FnField::new(2, |x: &[f64], t| k.eval(x, t).unwrap());
        let r = heat_residual(&u, &[1.0, 0.0], 1.0, 1e-3).unwrap();
        assert!(r.abs() < 1e-6, "{r}");
        let c = residual_convergence(
            &ShiftedKernel::new(vec![0.3, 0.0], 1.0).unwrap(),
            &[1.0, 0.5],
            0.5,
            1e-2,
        )
        .unwrap();
        assert!((3.5..4.5).contains(&c.ratio), "{c:?}");
    }

    #[test]
    fn quadratic_residual() {
        let u = FnField::new(3, |x: &[f64], _t| x.iter().map(|v| v * v).sum());
        let r = heat_residual(&u, &[0.3, -0.2, 1.0], 0.5, 1e-3).unwrap();
        assert_relative_eq!(r, -6.0, epsilon = 1e-6);
    }

    #[test]
    fn stationary_field_matches_erfc() {
        let f = SingularField::new(constant(3)).unwrap();
        for r in [0.1, 1.0, 1e-3, 0.05] {
            for t in [0.5, 1.0, 0.01] {
                let v = f.eval(&[r, 0.0, 0.0], t).unwrap();
                assert_relative_eq!(v, stationary_3d(r, t), max_relative = 1e-9);
            }
        }
    }

    #[test]
    fn sigma_form_agrees_with_direct_quadrature() {
        let f = SingularField::new(circle(3)).unwrap();
        let t = 0.7;
        let c = f.curve().eval(t);
        for (k, z) in [0.05, 0.1, 0.2, 0.35, 0.5].into_iter().enumerate() {
            let dir = [
                (k as f64).cos(),
                (k as f64).sin() * 0.6,
                0.8 * (k as f64).sin(),
            ];
            let x: Vec<f64> = (0..3).map(|i| c[i] + z * dir[i]).collect();
            let a = f.eval_sigma_form(&x, t).unwrap().value;
            let b = f.eval_direct(&x, t).unwrap().value;
            assert_relative_eq!(a, b, max_relative = 1e-7);
        }
    }

    #[test]
    fn on_the_curve_is_an_error() {
        let f = SingularField::new(circle(2)).unwrap();
        let c = f.curve().eval(0.4);
        assert!(matches!(f.eval(&c, 0.4), Err(Error::OnSingularity { .. })));
        assert!(f.eval(&[0.0, 0.0], 0.0).is_err());
        assert!(f.eval(&[0.0, 0.0], 2.0).is_err());
    }

    #[test]
    fn field_vanishes_as_t_goes_to_zero() {
        let f = SingularField::new(circle(2)).unwrap();
        let x = [0.0, 0.5];
        let v: Vec<f64> = [1e-1, 1e-2, 1e-3]
            .iter()
            .map(|&t| f.eval(&x, t).unwrap())
            .collect();
        assert!(v[0] > v[1] && v[1] > v[2]);
        assert!(v[2] < 1e-30);
    }

    #[test]
    fn truncated_field() {
        let f = SingularField::new(constant(3)).unwrap();
        let x = [0.3, 0.0, 0.0];
        let full = f.eval(&x, 1.0).unwrap();
        for tau in [0.5, 0.1, 0.01, 1e-3] {
            let tr = f.eval_truncated(&x, 1.0, tau).unwrap();
            assert!(tr <= full);
            let oracle = erfc_fn(0.3 / (2.0 * tau.sqrt())) / (4.0 * PI * 0.3);
            assert_relative_eq!(full - tr, oracle, max_relative = 1e-6, epsilon = 1e-14);
        }
        assert!(f.eval_truncated(&x, 1.0, 1.0 - 1e-12).unwrap() < 1e-10);
        assert!(f.eval_truncated(&x, 1.0, 1.0).is_err());
        // finite on the curve
        assert!(f.eval_truncated(&[0.0; 3], 1.0, 1e-2).unwrap().is_finite());
    }

    #[test]
    fn field_grows_with_time() {
        let f = SingularField::new(circle(3)).unwrap();
        let x = [0.2, 0.9, 0.1];
        let mut prev = 0.0;
        for k in 1..=10 {
            let v = f.eval(&x, k as f64 / 10.0).unwrap();
            assert!(v > prev);
            prev = v;
        }
    }

    #[test]
    fn translation_equivariance() {
        let curve = circle(3);
        let shift = [0.7, -1.3, 2.0];
        let f = SingularField::new(curve.clone()).unwrap();
        let g = SingularField::new(curve.translated(&shift).unwrap()).unwrap();
        for x in [[0.1, 0.2, 0.3], [1.0, 0.05, 0.0], [0.9, 0.4, -0.2]] {
            let y: Vec<f64> = x.iter().zip(&shift).map(|(a, b)| a + b).collect();
            assert_relative_eq!(
                f.eval(&x, 0.6).unwrap(),
                g.eval(&y, 0.6).unwrap(),
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn reference_constants() {
        assert_relative_eq!(
            reference_constant(3).unwrap(),
            1.0 / (4.0 * PI),
            max_relative = 1e-14
        );
        assert_relative_eq!(
            reference_constant(5).unwrap(),
            1.0 / (8.0 * PI * PI),
            max_relative = 1e-14
        );
        assert_relative_eq!(
            reference_constant(2).unwrap(),
            0.159_154_943_091_895_3,
            max_relative = 1e-14
        );
    }

    #[test]
    fn stationary_asymptotes() {
        let f = SingularField::new(constant(3)).unwrap();
        let radii = geometric_radii(1e-1, 1e-3, 5);
        let est = asymptotic_coefficient(&f, 0.5, &[0.0, 1.0, 0.0], &radii).unwrap();
        assert!(est.relative_error < 1e-3, "{est:?}");
        let f2 = SingularField::new(constant(2)).unwrap();
        let est =
            asymptotic_coefficient(&f2, 0.5, &[1.0, 0.0], &geometric_radii(1e-2, 1e-6, 7)).unwrap();
        assert!(est.relative_error < 1e-3, "{est:?}");
    }

    #[test]
    fn circle_asymptote_is_direction_independent() {
        let f = SingularField::new(circle(3)).unwrap();
        let radii = geometric_radii(1e-1, 1e-3, 5);
        let a = asymptotic_coefficient(&f, 0.5, &[1.0, 0.0, 0.0], &radii).unwrap();
        let b = asymptotic_coefficient(&f, 0.5, &[0.0, -1.0, 1.0], &radii).unwrap();
        assert!(
            a.relative_error < 1e-3 && b.relative_error < 1e-3,
            "{a:?} {b:?}"
        );
        assert!(a.monotone);
        assert!(
            (a.estimate - b.estimate).abs() <= 3.0 * (a.error_estimate + b.error_estimate) + 1e-6
        );
    }

    #[test]
    fn asymptote_rejects_bad_input() {
        let f = SingularField::new(constant(3)).unwrap();
        assert!(asymptotic_coefficient(&f, 0.5, &[0.0; 3], &[0.1, 0.01]).is_err());
        assert!(asymptotic_coefficient(&f, 0.5, &[1.0, 0.0, 0.0], &[0.01, 0.1]).is_err());
        let rough = make_builtin_curve(
            CurveKind::Weierstrass,
            Some(0.5),
            &CurveParams::default(),
            3,
            1.0,
            None,
        )
        .unwrap();
        let g = SingularField::new(rough).unwrap();
        assert!(asymptotic_coefficient(&g, 0.5, &[1.0, 0.0, 0.0], &[0.1, 0.01]).is_err());
    }

    #[test]
    fn bump_derivatives_match_differences() {
        let tf = TestFunction::new(vec![0.1, -0.2], vec![0.5, 0.4], 0.5, 0.3).unwrap();
        let (x, t) = ([0.25, -0.1], 0.55);
        let h = 1e-5;
        let dt = (tf.value(&x, t + h) - tf.value(&x, t - h)) / (2.0 * h);
        assert_relative_eq!(tf.dt(&x, t), dt, max_relative = 1e-6);
        let h = 1e-4;
        let mut lap = 0.0;
        for i in 0..2 {
            let mut p = x;
            p[i] += h;
            let up = tf.value(&p, t);
            p[i] -= 2.0 * h;
            let um = tf.value(&p, t);
            lap += (up - 2.0 * tf.value(&x, t) + um) / (h * h);
        }
        assert_relative_eq!(tf.laplacian(&x, t), lap, max_relative = 1e-5);
        assert_eq!(tf.value(&[0.7, 0.0], t), 0.0);
        assert_eq!(tf.adjoint(&x, 0.9), 0.0);
    }

    #[test]
    fn concentration_of_constant_and_far_profiles() {
        let f = SingularField::new(circle(2)).unwrap();
        let table = concentration_check_with(&f, |_| 1.0, None, 0.5, &[1e-1, 1e-2, 1e-3]).unwrap();
        for row in &table.rows {
            assert_relative_eq!(row.value, 1.0, epsilon = 1e-10);
        }
        let c = f.curve().eval(0.5 - 1e-3);
        let far = TestFunction::new(vec![c[0] + 1.0, c[1]], vec![0.3, 0.3], 0.5, 0.1).unwrap();
        let table = concentration_check(&f, &far, 0.5, &[1e-3]).unwrap();
        assert!(table.rows[0].value <= 1e-50);
    }

    #[test]
    fn concentration_of_gaussian_matches_closed_form() {
        let f = SingularField::new(circle(2)).unwrap();
        let t = 0.5;
        let c = f.curve().eval(t);
        let w2: f64 = 0.25;
        let taus = [1e-1, 1e-2, 1e-3, 1e-4];
        let table = concentration_check_with(
            &f,
            |x| (-((x[0] - c[0]).powi(2) + (x[1] - c[1]).powi(2)) / w2).exp(),
            None,
            t,
            &taus,
        )
        .unwrap();
        assert!(table.monotone);
        for row in &table.rows {
            let p = f.curve().eval(t - row.tau);
            let d2 = (p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2);
            let s = w2 + 4.0 * row.tau;
            let exact = (w2 / s) * (-d2 / s).exp();
            assert_relative_eq!(row.value, exact, max_relative = 1e-9);
            // deviation is first order in tau
            assert!(row.deviation < 20.0 * row.tau);
        }
    }

    #[test]
    fn zero_test_function_pairs_to_zero() {
        let f = SingularField::new(circle(2)).unwrap();
        let tf = TestFunction::new(vec![1.0, 0.0], vec![0.2, 0.2], 0.5, 0.1)
            .unwrap()
            .with_amplitude(0.0);
        let p = distributional_pairing(&f, &tf).unwrap();
        assert_eq!((p.lhs, p.rhs), (0.0, 0.0));
    }

    #[test]
    fn pairing_rejects_support_outside_horizon() {
        let f = SingularField::new(circle(2)).unwrap();
        let tf = TestFunction::new(vec![1.0, 0.0], vec![0.2, 0.2], 0.05, 0.1).unwrap();
        assert!(distributional_pairing(&f, &tf).is_err());
    }

    #[test]
    fn plane_pairing_with_a_coarse_rule() {
        let c = circle(2);
        let f = SingularField::new(c.clone()).unwrap().with_tolerance(1e-8);
        let opts = PairingOptions {
            nodes: 24,
            ..PairingOptions::default()
        };
        let tf = TestFunction::new(c.eval(0.5), vec![0.3, 0.3], 0.5, 0.3).unwrap();
        let p = distributional_pairing_with(&f, &tf, &opts).unwrap();
        assert!(!p.monte_carlo);
        assert!(p.relative_gap() < 1e-2, "{p:?}");
        assert!((p.lhs - p.rhs).abs() <= p.lhs_error, "{p:?}");
        let away = TestFunction::new(vec![0.0, 0.0], vec![0.3, 0.3], 0.5, 0.3).unwrap();
        let q = distributional_pairing_with(&f, &away, &opts).unwrap();
        assert_eq!(q.rhs, 0.0);
        assert!(q.lhs.abs() < 1e-4, "{q:?}");
    }

    #[test]
    fn monte_carlo_pairing_in_three_dimensions() {
        let f = SingularField::new(constant(3))
            .unwrap()
            .with_tolerance(1e-8);
        let tf = TestFunction::new(vec![0.05, 0.0, 0.0], vec![0.4, 0.4, 0.4], 0.5, 0.3).unwrap();
        let opts = PairingOptions {
            samples: 40_000,
            seed: 5,
            ..PairingOptions::default()
        };
        let p = distributional_pairing_with(&f, &tf, &opts).unwrap();
        assert!(p.monte_carlo);
        assert!(
            (p.lhs - p.rhs).abs() < 5.0 * p.lhs_error + 1e-2 * p.rhs.abs(),
            "{p:?}"
        );
        let q = distributional_pairing_with(&f, &tf, &opts).unwrap();
        assert_eq!(p.lhs.to_bits(), q.lhs.to_bits());
    }
}
