//! Hölder-continuous trajectories `t ↦ ξ(t)` and their mollification.
//!
//! A [`HolderCurve`] is defined on `[0, T]` and extended to the whole line by
//! constant continuation, `ξ(t) = ξ(0)` for `t < 0` and `ξ(t) = ξ(T)` for
//! `t > T`. The extension does not increase the Hölder constant.

use std::fmt;
use std::sync::{Arc, OnceLock};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::numerics::{Quadrature, QuadratureResult};

/// Largest spatial dimension supported by the stack-allocated point buffers.
pub const MAX_DIM: usize = 8;

/// Inflation applied to sampled Hölder constants.
pub const HOLDER_SAFETY: f64 = 1.1;

/// Slack allowed when checking a declared Hölder constant against samples.
pub const HOLDER_SLACK: f64 = 0.05;

/// Point-valued evaluator writing `ξ(t)` into the output slice.
pub type PointFn = Arc<dyn Fn(f64, &mut [f64]) + Send + Sync>;

#[derive(Clone)]
pub enum CurveShape {
    Constant {
        point: Vec<f64>,
    },
    Linear {
        origin: Vec<f64>,
        velocity: Vec<f64>,
    },
    /// Uniform rotation in the first two coordinates; the rest stay at `center`.
    Circle {
        center: Vec<f64>,
        radius: f64,
        omega: f64,
    },
    /// `center_i + amplitude · Σ_{k=0}^{terms} base^{-αk} cos(base^k t)` on each
    /// designated coordinate.
    Weierstrass {
        center: Vec<f64>,
        alpha: f64,
        base: u32,
        terms: u32,
        coords: Vec<usize>,
        amplitude: f64,
    },
    Custom(PointFn),
}

impl fmt::Debug for CurveShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CurveShape::Constant { point } => {
                f.debug_struct("Constant").field("point", point).finish()
            }
            CurveShape::Linear { origin, velocity } => f
                .debug_struct("Linear")
                .field("origin", origin)
                .field("velocity", velocity)
                .finish(),
            CurveShape::Circle {
                center,
                radius,
                omega,
            } => f
                .debug_struct("Circle")
                .field("center", center)
                .field("radius", radius)
                .field("omega", omega)
                .finish(),
            CurveShape::Weierstrass {
                alpha,
                base,
                terms,
                coords,
                ..
            } => f
                .debug_struct("Weierstrass")
                .field("alpha", alpha)
                .field("base", base)
                .field("terms", terms)
                .field("coords", coords)
                .finish(),
            CurveShape::Custom(_) => f.write_str("Custom"),
        }
    }
}

/// A trajectory in ℝ^N with a declared Hölder exponent and constant.
#[derive(Clone, Debug)]
pub struct HolderCurve {
    dim: usize,
    horizon: f64,
    exponent: f64,
    holder_constant: f64,
    shape: CurveShape,
}

impl HolderCurve {
    /// Wraps an arbitrary evaluator. The Hölder constant is estimated from
    /// samples when `holder_constant` is `None`.
    pub fn custom(
        dim: usize,
        horizon: f64,
        exponent: f64,
        holder_constant: Option<f64>,
        eval: PointFn,
    ) -> Result<Self> {
        Self::assemble(
            dim,
            horizon,
            exponent,
            holder_constant,
            CurveShape::Custom(eval),
        )
    }

    fn assemble(
        dim: usize,
        horizon: f64,
        exponent: f64,
        holder_constant: Option<f64>,
        shape: CurveShape,
    ) -> Result<Self> {
        if dim == 0 || dim > MAX_DIM {
            return domain(format!(
                "curve dimension must be in 1..={MAX_DIM}, got {dim}"
            ));
        }
        if !(horizon > 0.0) || !horizon.is_finite() {
            return domain(format!("horizon must be positive, got {horizon}"));
        }
        if !(exponent > 0.0 && exponent <= 1.0) {
            return domain(format!(
                "Hölder exponent must lie in (0, 1], got {exponent}"
            ));
        }
        let mut curve = HolderCurve {
            dim,
            horizon,
            exponent,
            holder_constant: 1.0,
            shape,
        };
        curve.holder_constant = match holder_constant {
            Some(l) if l > 0.0 && l.is_finite() => l,
            Some(l) => return domain(format!("Hölder constant must be positive, got {l}")),
            None => {
                let l = estimate_holder_constant(&curve, exponent, 1 << 12)?;
                // A constant curve is Hölder with any constant; 1 keeps ε_r finite.
                if l > 0.0 {
                    l
                } else {
                    1.0
                }
            }
        };
        Ok(curve)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn exponent(&self) -> f64 {
        self.exponent
    }

    pub fn holder_constant(&self) -> f64 {
        self.holder_constant
    }

    pub fn shape(&self) -> &CurveShape {
        &self.shape
    }

    pub fn with_holder_constant(mut self, l: f64) -> Result<Self> {
        if !(l > 0.0) || !l.is_finite() {
            return domain(format!("Hölder constant must be positive, got {l}"));
        }
        self.holder_constant = l;
        Ok(self)
    }

    /// Writes `ξ(t)` into `out[..dim]`, clamping `t` to `[0, T]`.
    #[inline]
    pub fn eval_into(&self, t: f64, out: &mut [f64]) {
        let t = t.clamp(0.0, self.horizon);
        let out = &mut out[..self.dim];
        match &self.shape {
            CurveShape::Constant { point } => out.copy_from_slice(point),
            CurveShape::Linear { origin, velocity } => {
                for ((o, x0), v) in out.iter_mut().zip(origin).zip(velocity) {
                    *o = x0 + v * t;
                }
            }
            CurveShape::Circle {
                center,
                radius,
                omega,
            } => {
                out.copy_from_slice(center);
                let (s, c) = (omega * t).sin_cos();
                out[0] += radius * c;
                out[1] += radius * s;
            }
            CurveShape::Weierstrass {
                center,
                alpha,
                base,
                terms,
                coords,
                amplitude,
            } => {
                out.copy_from_slice(center);
                let w = amplitude * weierstrass_sum(t, *alpha, *base as f64, *terms);
                for &i in coords {
                    out[i] += w;
                }
            }
            CurveShape::Custom(f) => f(t, out),
        }
    }

    pub fn eval(&self, t: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.eval_into(t, &mut out);
        out
    }

    /// The same curve shifted by `offset`.
    pub fn translated(&self, offset: &[f64]) -> Result<Self> {
        if offset.len() != self.dim {
            return domain("offset dimension does not match the curve");
        }
        let base = self.clone();
        let offset = offset.to_vec();
        let f: PointFn = Arc::new(move |t, out: &mut [f64]| {
            base.eval_into(t, out);
            for (o, d) in out.iter_mut().zip(&offset) {
                *o += d;
            }
        });
        Ok(HolderCurve {
            shape: CurveShape::Custom(f),
            ..self.clone()
        })
    }

    /// Checks `|ξ(t) − ξ(s)| ≤ L(1 + slack)|t − s|^α` on a uniform grid of
    /// `samples` times; returns the worst observed ratio `|Δξ| / (L |Δt|^α)`.
    pub fn holder_ratio(&self, samples: usize) -> Result<f64> {
        let raw = sampled_holder_quotient(self, self.exponent, samples)?;
        Ok(raw / self.holder_constant)
    }
}

#[inline]
fn weierstrass_sum(t: f64, alpha: f64, base: f64, terms: u32) -> f64 {
    let decay = base.powf(-alpha);
    let mut amp = 1.0;
    let mut freq = 1.0;
    let mut sum = 0.0;
    for _ in 0..=terms {
        sum += amp * (freq * t).cos();
        amp *= decay;
        freq *= base;
    }
    sum
}

/// Built-in curve families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveKind {
    Constant,
    Linear,
    Circle,
    Weierstrass,
}

/// Family parameters; unused fields are ignored by the other kinds.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveParams {
    /// Constant point, linear origin, circle center or Weierstrass offset.
    #[serde(default)]
    pub point: Option<Vec<f64>>,
    #[serde(default)]
    pub velocity: Option<Vec<f64>>,
    #[serde(default)]
    pub radius: Option<f64>,
    #[serde(default)]
    pub omega: Option<f64>,
    #[serde(default)]
    pub base: Option<u32>,
    #[serde(default)]
    pub terms: Option<u32>,
    #[serde(default)]
    pub coords: Option<Vec<usize>>,
    #[serde(default)]
    pub amplitude: Option<f64>,
}

/// Default truncation of the Weierstrass series.
pub const WEIERSTRASS_TERMS: u32 = 24;

/// Builds one of the built-in curves.
///
/// `alpha` is the declared exponent. It defaults to 1 for the smooth
/// families and is required for `weierstrass`, where it is also the series
/// exponent.
pub fn make_builtin_curve(
    kind: CurveKind,
    alpha: Option<f64>,
    params: &CurveParams,
    dim: usize,
    horizon: f64,
    holder_constant: Option<f64>,
) -> Result<HolderCurve> {
    if dim == 0 || dim > MAX_DIM {
        return domain(format!(
            "curve dimension must be in 1..={MAX_DIM}, got {dim}"
        ));
    }
    let point = match &params.point {
        Some(p) if p.len() != dim => {
            return domain(format!(
                "params.point has length {}, expected {dim}",
                p.len()
            ))
        }
        Some(p) => p.clone(),
        None => vec![0.0; dim],
    };
    let (shape, natural) = match kind {
        CurveKind::Constant => (CurveShape::Constant { point }, 1.0),
        CurveKind::Linear => {
            let velocity = match &params.velocity {
                Some(v) if v.len() == dim => v.clone(),
                Some(v) => {
                    return domain(format!(
                        "params.velocity has length {}, expected {dim}",
                        v.len()
                    ))
                }
                None => return domain("linear curve needs params.velocity"),
            };
            (
                CurveShape::Linear {
                    origin: point,
                    velocity,
                },
                1.0,
            )
        }
        CurveKind::Circle => {
            if dim < 2 {
                return domain("circle curve needs N >= 2");
            }
            let radius = params.radius.unwrap_or(1.0);
            if !(radius > 0.0) {
                return domain(format!("circle radius must be positive, got {radius}"));
            }
            let omega = params.omega.unwrap_or(1.0);
            if !omega.is_finite() {
                return domain("circle angular speed must be finite");
            }
            (
                CurveShape::Circle {
                    center: point,
                    radius,
                    omega,
                },
                1.0,
            )
        }
        CurveKind::Weierstrass => {
            let Some(a) = alpha else {
                return domain("weierstrass curve needs alpha");
            };
            if !(a > 0.0 && a < 1.0) {
                return domain(format!("weierstrass alpha must lie in (0, 1), got {a}"));
            }
            let base = params.base.unwrap_or(2);
            if base < 2 {
                return domain(format!(
                    "weierstrass base must be an integer >= 2, got {base}"
                ));
            }
            let terms = params.terms.unwrap_or(WEIERSTRASS_TERMS);
            let coords = params.coords.clone().unwrap_or_else(|| (0..dim).collect());
            if coords.is_empty() || coords.iter().any(|&i| i >= dim) {
                return domain(format!(
                    "weierstrass coords {coords:?} out of range for N = {dim}"
                ));
            }
            let amplitude = params.amplitude.unwrap_or(1.0);
            (
                CurveShape::Weierstrass {
                    center: point,
                    alpha: a,
                    base,
                    terms,
                    coords,
                    amplitude,
                },
                a,
            )
        }
    };
    let exponent = alpha.unwrap_or(natural);
    HolderCurve::assemble(dim, horizon, exponent, holder_constant, shape)
}

/// Serializable curve description, as found in run configurations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveSpec {
    pub kind: CurveKind,
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default)]
    pub params: CurveParams,
    #[serde(rename = "N")]
    pub dim: usize,
    #[serde(rename = "T")]
    pub horizon: f64,
    #[serde(rename = "L", default)]
    pub holder_constant: Option<f64>,
}

impl CurveSpec {
    pub fn build(&self) -> Result<HolderCurve> {
        make_builtin_curve(
            self.kind,
            self.alpha,
            &self.params,
            self.dim,
            self.horizon,
            self.holder_constant,
        )
    }
}

fn sampled_holder_quotient(curve: &HolderCurve, alpha: f64, samples: usize) -> Result<f64> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return domain(format!("alpha must lie in (0, 1], got {alpha}"));
    }
    if samples < 2 {
        return domain("need at least two samples");
    }
    let n = curve.dim;
    let step = curve.horizon / (samples - 1) as f64;
    let mut points = vec![0.0; samples * n];
    for (i, chunk) in points.chunks_mut(n).enumerate() {
        curve.eval_into(i as f64 * step, chunk);
    }
    let lag_pow: Vec<f64> = (0..samples)
        .map(|k| (k as f64 * step).powf(alpha))
        .collect();
    let best = (0..samples)
        .into_par_iter()
        .map(|i| {
            let pi = &points[i * n..(i + 1) * n];
            let mut best: f64 = 0.0;
            for j in (i + 1)..samples {
                let pj = &points[j * n..(j + 1) * n];
                let d2: f64 = pi.iter().zip(pj).map(|(a, b)| (a - b) * (a - b)).sum();
                best = best.max(d2.sqrt() / lag_pow[j - i]);
            }
            best
        })
        .reduce(|| 0.0, f64::max);
    Ok(best)
}

/// Sampled Hölder constant: the largest `|ξ(t) − ξ(s)| / |t − s|^α` over all
/// pairs of a uniform grid, inflated by [`HOLDER_SAFETY`].
pub fn estimate_holder_constant(
    curve: &HolderCurve,
    alpha: f64,
    sample_count: usize,
) -> Result<f64> {
    Ok(HOLDER_SAFETY * sampled_holder_quotient(curve, alpha, sample_count)?)
}

fn bump(t: f64) -> f64 {
    if t.abs() < 1.0 {
        (-1.0 / (1.0 - t * t)).exp()
    } else {
        0.0
    }
}

/// Normalization `A` making `∫ρ = 1`.
pub fn mollifier_normalization() -> f64 {
    static A: OnceLock<f64> = OnceLock::new();
    *A.get_or_init(|| {
        let q = Quadrature::with_tol(1e-15)
            .integrate(bump, -1.0, 1.0)
            .expect("bump integral converges");
        1.0 / q.value
    })
}

/// The standard mollifier `ρ(t) = A exp(−1/(1−t²))` on `|t| < 1`.
pub fn mollifier_rho(t: f64) -> f64 {
    mollifier_normalization() * bump(t)
}

/// `ρ'(t)`.
pub fn mollifier_rho_prime(t: f64) -> f64 {
    if t.abs() < 1.0 {
        let w = 1.0 - t * t;
        mollifier_normalization() * (-1.0 / w).exp() * (-2.0 * t / (w * w))
    } else {
        0.0
    }
}

/// Cosine transform `∫ ρ(τ) cos(ωτ) dτ`, negligible beyond a few thousand.
fn mollifier_cosine_transform(omega: f64) -> f64 {
    if omega == 0.0 {
        return 1.0;
    }
    if omega > 4000.0 {
        return 0.0;
    }
    Quadrature::with_tol(1e-15)
        .max_panels(100_000)
        .integrate(|tau| mollifier_rho(tau) * (omega * tau).cos(), -1.0, 1.0)
        .map(|r| r.value)
        .unwrap_or(0.0)
}

/// Tolerance used for the mollification quadratures.
pub const MOLLIFY_TOL: f64 = 1e-10;

/// `ξ^ε = ρ^ε * ξ`, with `ρ^ε(t) = ρ(t/ε)/ε`.
#[derive(Clone, Debug)]
pub struct MollifiedCurve {
    base: HolderCurve,
    epsilon: f64,
    quadrature: Quadrature,
    /// `ρ̂(base^k ε)` per series term, for Weierstrass curves.
    damping: Option<Vec<f64>>,
}

/// Mollifies `curve` at scale `epsilon`.
pub fn mollify(curve: &HolderCurve, epsilon: f64) -> Result<MollifiedCurve> {
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return domain(format!(
            "mollification scale must be positive, got {epsilon}"
        ));
    }
    let damping = match &curve.shape {
        CurveShape::Weierstrass { base, terms, .. } => {
            let b = *base as f64;
            Some(
                (0..=*terms)
                    .map(|k| mollifier_cosine_transform(b.powi(k as i32) * epsilon))
                    .collect(),
            )
        }
        _ => None,
    };
    Ok(MollifiedCurve {
        base: curve.clone(),
        epsilon,
        quadrature: Quadrature::with_tol(MOLLIFY_TOL).max_panels(200_000),
        damping,
    })
}

impl MollifiedCurve {
    pub fn base(&self) -> &HolderCurve {
        &self.base
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// `ξ^ε(t)`.
    pub fn eval_into(&self, t: f64, out: &mut [f64]) -> Result<()> {
        if let Some((center, coords, w, _)) = self.weierstrass_terms(t)? {
            out[..center.len()].copy_from_slice(center);
            for &i in coords {
                out[i] += w;
            }
            return Ok(());
        }
        let n = self.base.dim;
        let mut center = [0.0; MAX_DIM];
        self.base.eval_into(t, &mut center);
        for i in 0..n {
            let r = self.convolve(t, i, &center, mollifier_rho)?;
            out[i] = center[i] + r.value;
        }
        Ok(())
    }

    /// `(ξ^ε)_t(t)` from the differentiated kernel.
    pub fn derivative_into(&self, t: f64, out: &mut [f64]) -> Result<()> {
        let n = self.base.dim;
        if let Some((_, coords, _, dw)) = self.weierstrass_terms(t)? {
            out[..n].fill(0.0);
            for &i in coords {
                out[i] = dw;
            }
            return Ok(());
        }
        let mut center = [0.0; MAX_DIM];
        self.base.eval_into(t, &mut center);
        for i in 0..n {
            let r = self.convolve(t, i, &center, mollifier_rho_prime)?;
            out[i] = r.value / self.epsilon;
        }
        Ok(())
    }

    /// Term-by-term mollification of a Weierstrass series: returns the
    /// offset, designated coordinates, `ρ^ε * W` and its derivative.
    fn weierstrass_terms(&self, t: f64) -> Result<Option<(&[f64], &[usize], f64, f64)>> {
        let (
            Some(damping),
            CurveShape::Weierstrass {
                center,
                alpha,
                base,
                coords,
                amplitude,
                ..
            },
        ) = (&self.damping, &self.base.shape)
        else {
            return Ok(None);
        };
        let eps = self.epsilon;
        let horizon = self.base.horizon;
        // s = t − ετ stays in [0, T] for τ in [lo, hi]
        let lo = ((t - horizon) / eps).max(-1.0);
        let hi = (t / eps).min(1.0);
        let mass_below_zero = if hi < 1.0 {
            partial_mass(hi.max(-1.0), 1.0)?
        } else {
            0.0
        };
        let mass_above_horizon = if lo > -1.0 {
            partial_mass(-1.0, lo.min(1.0))?
        } else {
            0.0
        };

        let b = *base as f64;
        let decay = b.powf(-alpha);
        let mut amp = 1.0;
        let mut omega = 1.0;
        let mut value = 0.0;
        let mut deriv = 0.0;
        for &full in damping {
            // J = ∫_lo^hi ρ(τ) e^{-iΩτ} dτ
            let big = omega * eps;
            let (jr, ji) = if lo <= -1.0 && hi >= 1.0 {
                (full, 0.0)
            } else if lo >= hi {
                (0.0, 0.0)
            } else {
                partial_transform(big, lo, hi)?
            };
            // Re/Im of e^{iωt} J
            let (sn, cs) = (omega * t).sin_cos();
            let re = cs * jr - sn * ji;
            let im = sn * jr + cs * ji;
            value += amp * (re + mass_below_zero + (omega * horizon).cos() * mass_above_horizon);
            deriv += amp * (-omega * im);
            amp *= decay;
            omega *= b;
        }
        Ok(Some((
            center.as_slice(),
            coords.as_slice(),
            amplitude * value,
            amplitude * deriv,
        )))
    }

    pub fn eval(&self, t: f64) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.base.dim];
        self.eval_into(t, &mut out)?;
        Ok(out)
    }

    pub fn derivative(&self, t: f64) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.base.dim];
        self.derivative_into(t, &mut out)?;
        Ok(out)
    }

    /// `∫_{-1}^{1} kernel(τ) (ξ_i(t − ετ) − ξ_i(t)) dτ` by adaptive quadrature.
    ///
    /// Works for every curve; the Weierstrass fast path is checked against it.
    pub fn convolve(
        &self,
        t: f64,
        coord: usize,
        center: &[f64],
        kernel: fn(f64) -> f64,
    ) -> Result<QuadratureResult> {
        let c = center[coord];
        self.quadrature.integrate(
            |tau| {
                let k = kernel(tau);
                if k == 0.0 {
                    return 0.0;
                }
                let mut p = [0.0; MAX_DIM];
                self.base.eval_into(t - self.epsilon * tau, &mut p);
                k * (p[coord] - c)
            },
            -1.0,
            1.0,
        )
    }

    /// Evaluates by quadrature regardless of the curve family.
    pub fn eval_by_quadrature(&self, t: f64) -> Result<(Vec<f64>, Vec<f64>)> {
        let n = self.base.dim;
        let mut center = [0.0; MAX_DIM];
        self.base.eval_into(t, &mut center);
        let mut value = vec![0.0; n];
        let mut deriv = vec![0.0; n];
        for i in 0..n {
            value[i] = center[i] + self.convolve(t, i, &center, mollifier_rho)?.value;
            deriv[i] = self.convolve(t, i, &center, mollifier_rho_prime)?.value / self.epsilon;
        }
        Ok((value, deriv))
    }
}

/// `∫_lo^hi ρ`.
fn partial_mass(lo: f64, hi: f64) -> Result<f64> {
    if hi <= lo {
        return Ok(0.0);
    }
    Ok(Quadrature::with_tol(1e-14)
        .integrate(mollifier_rho, lo, hi)?
        .value)
}

fn mollifier_rho_second(t: f64) -> f64 {
    if t.abs() < 1.0 {
        let w = 1.0 - t * t;
        let d1 = -2.0 * t / (w * w);
        let d2 = -2.0 / (w * w) - 8.0 * t * t / (w * w * w);
        mollifier_rho(t) * (d1 * d1 + d2)
    } else {
        0.0
    }
}

/// Frequency above which cut transforms switch to the asymptotic expansion.
const ASYMPTOTIC_FREQUENCY: f64 = 2000.0;

/// `∫_lo^hi ρ(τ) e^{-iΩτ} dτ` as `(re, im)` for a window cut inside `(-1, 1)`.
///
/// Moderate `Ω` is integrated directly. Large `Ω` uses repeated integration
/// by parts; only the cut ends contribute because every derivative of `ρ`
/// vanishes at `±1`.
fn partial_transform(big: f64, lo: f64, hi: f64) -> Result<(f64, f64)> {
    if big <= ASYMPTOTIC_FREQUENCY {
        let q = Quadrature::with_tol(1e-13).max_panels(100_000);
        let re = q
            .integrate(|tau| mollifier_rho(tau) * (big * tau).cos(), lo, hi)?
            .value;
        let im = -q
            .integrate(|tau| mollifier_rho(tau) * (big * tau).sin(), lo, hi)?
            .value;
        return Ok((re, im));
    }
    // I(g) = Σ_j (iΩ)^{-j} [g^{(j)} e^{-iΩτ} / (-iΩ)]_lo^hi, j = 0, 1, 2
    let end = |tau: f64| -> (f64, f64) {
        let g = [
            mollifier_rho(tau),
            mollifier_rho_prime(tau),
            mollifier_rho_second(tau),
        ];
        // 1/(-iΩ) = i/Ω; (iΩ)^{-1} = -i/Ω
        let (mut cr, mut ci) = (0.0, 1.0 / big);
        let (mut sr, mut si) = (0.0, 0.0);
        for gj in g {
            sr += gj * cr;
            si += gj * ci;
            // multiply coefficient by -i/Ω
            let (nr, ni) = (ci / big, -cr / big);
            cr = nr;
            ci = ni;
        }
        let (sn, cs) = (big * tau).sin_cos();
        // (sr + i si)(cos − i sin)
        (sr * cs + si * sn, si * cs - sr * sn)
    };
    let (hr, hi_im) = end(hi);
    let (lr, li) = end(lo);
    Ok((hr - lr, hi_im - li))
}

/// Sup-norm diagnostics of a mollified curve on a uniform grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MollificationBounds {
    pub epsilon: f64,
    /// `max_t max_i |ξ_i − ξ^ε_i|`.
    pub sup_coordinate_distance: f64,
    /// `max_t |ξ − ξ^ε|` (Euclidean).
    pub sup_distance: f64,
    /// `max_t max_i |(ξ^ε_i)_t|`.
    pub sup_coordinate_derivative: f64,
    /// `L ε^α`, the per-coordinate distance bound.
    pub coordinate_bound: f64,
    /// `√N L ε^α`.
    pub euclidean_bound: f64,
    /// `N L ε^α`, the summed-coordinate bound used for `ε_r`.
    pub summed_bound: f64,
    /// `A L ε^{α−1}`.
    pub derivative_bound: f64,
}

impl MollificationBounds {
    /// Per-coordinate distance within `L ε^α (1 + slack)` and derivative
    /// within `A L ε^{α−1}`.
    pub fn holds(&self, slack: f64) -> bool {
        self.sup_coordinate_distance <= self.coordinate_bound * (1.0 + slack)
            && self.sup_distance <= self.euclidean_bound * (1.0 + slack)
            && self.sup_coordinate_derivative <= self.derivative_bound * (1.0 + slack)
    }
}

/// Samples `ξ^ε` and its derivative at `samples` uniform times in `[0, T]`.
pub fn mollification_bounds(
    curve: &HolderCurve,
    epsilon: f64,
    samples: usize,
) -> Result<MollificationBounds> {
    if samples < 2 {
        return domain("need at least two samples");
    }
    let m = mollify(curve, epsilon)?;
    let n = curve.dim;
    let step = curve.horizon / (samples - 1) as f64;
    let rows: Vec<Result<(f64, f64, f64)>> = (0..samples)
        .into_par_iter()
        .map(|k| {
            let t = k as f64 * step;
            let mut x = [0.0; MAX_DIM];
            let mut xe = [0.0; MAX_DIM];
            let mut dxe = [0.0; MAX_DIM];
            curve.eval_into(t, &mut x);
            m.eval_into(t, &mut xe)?;
            m.derivative_into(t, &mut dxe)?;
            let mut coord: f64 = 0.0;
            let mut eucl = 0.0;
            let mut deriv: f64 = 0.0;
            for i in 0..n {
                let d = (x[i] - xe[i]).abs();
                coord = coord.max(d);
                eucl += d * d;
                deriv = deriv.max(dxe[i].abs());
            }
            Ok((coord, eucl.sqrt(), deriv))
        })
        .collect();
    let mut out = (0.0f64, 0.0f64, 0.0f64);
    for r in rows {
        let (a, b, c) = r?;
        out = (out.0.max(a), out.1.max(b), out.2.max(c));
    }
    let l = curve.holder_constant;
    let ea = epsilon.powf(curve.exponent);
    Ok(MollificationBounds {
        epsilon,
        sup_coordinate_distance: out.0,
        sup_distance: out.1,
        sup_coordinate_derivative: out.2,
        coordinate_bound: l * ea,
        euclidean_bound: (n as f64).sqrt() * l * ea,
        summed_bound: n as f64 * l * ea,
        derivative_bound: mollifier_normalization() * l * ea / epsilon,
    })
}
