//! Quadrature engines and special functions.
//!
//! The adaptive integrator is a 21-point Gauss–Kronrod rule driven by a
//! max-error priority queue. Panels are bisected where the error estimate is
//! largest, which refines geometrically toward integrable endpoint
//! singularities without any special casing. Semi-infinite ranges are mapped
//! to `[0, 1)` with `x = a + u / (1 - u)`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{domain, Error, Result};

/// Default tolerance for every integral in the crate.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Default subdivision budget.
pub const DEFAULT_MAX_PANELS: usize = 10_000;

/// Outcome of a quadrature.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct QuadratureResult {
    pub value: f64,
    /// Estimated absolute error, always finite and non-negative.
    pub error_estimate: f64,
    pub evaluations: usize,
}

impl QuadratureResult {
    /// Multiplies value and error by `k`.
    pub fn scaled(self, k: f64) -> QuadratureResult {
        QuadratureResult {
            value: self.value * k,
            error_estimate: self.error_estimate * k.abs(),
            evaluations: self.evaluations,
        }
    }

    fn merge(self, other: QuadratureResult) -> QuadratureResult {
        QuadratureResult {
            value: self.value + other.value,
            error_estimate: self.error_estimate + other.error_estimate,
            evaluations: self.evaluations + other.evaluations,
        }
    }
}

// Kronrod abscissae on [0, 1]; odd indices are the 10-point Gauss nodes.
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_208_980_380_730,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    abs_value: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}

impl Eq for Panel {}

impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gauss_kronrod_21<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Result<Panel> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];

    let fc = eval_checked(f, center)?;
    let mut resg = 0.0;
    let mut resk = WGK[10] * fc;
    let mut resabs = resk.abs();
    for j in 0..10 {
        let dx = half * XGK[j];
        let f1 = eval_checked(f, center - dx)?;
        let f2 = eval_checked(f, center + dx)?;
        fv1[j] = f1;
        fv2[j] = f2;
        resk += WGK[j] * (f1 + f2);
        resabs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            resg += WG[j / 2] * (f1 + f2);
        }
    }
    let reskh = 0.5 * resk;
    let mut resasc = WGK[10] * (fc - reskh).abs();
    for j in 0..10 {
        resasc += WGK[j] * ((fv1[j] - reskh).abs() + (fv2[j] - reskh).abs());
    }
    let value = resk * half;
    let resabs = resabs * half.abs();
    let resasc = resasc * half.abs();
    let mut error = ((resk - resg) * half).abs();
    if resasc != 0.0 && error != 0.0 {
        error = resasc * (200.0 * error / resasc).powf(1.5).min(1.0);
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        error = error.max(50.0 * f64::EPSILON * resabs);
    }
    Ok(Panel {
        a,
        b,
        value,
        error,
        abs_value: resabs,
    })
}

fn eval_checked<F: Fn(f64) -> f64>(f: &F, x: f64) -> Result<f64> {
    let y = f(x);
    if y.is_finite() {
        Ok(y)
    } else {
        Err(Error::NonFinite { at: x })
    }
}

const EVALS_PER_PANEL: usize = 21;

/// Adaptive quadrature settings.
///
/// A run stops once the summed panel error drops below
/// `max(abs_tol, rel_tol * |value|)`, or once the remaining error sits in
/// panels too narrow to bisect in floating point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_panels: usize,
}

impl Default for Quadrature {
    fn default() -> Self {
        Self::with_tol(DEFAULT_TOL)
    }
}

impl Quadrature {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            abs_tol: tol,
            rel_tol: tol,
            max_panels: DEFAULT_MAX_PANELS,
        }
    }

    /// Pure relative tolerance, for integrals whose magnitude spans many decades.
    pub fn relative(tol: f64) -> Self {
        Self {
            abs_tol: 0.0,
            rel_tol: tol,
            max_panels: DEFAULT_MAX_PANELS,
        }
    }

    pub fn max_panels(mut self, panels: usize) -> Self {
        self.max_panels = panels;
        self
    }

    /// Integrates `f` over the finite interval `[a, b]`.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F, a: f64, b: f64) -> Result<QuadratureResult> {
        if !(a.is_finite() && b.is_finite()) {
            return domain(format!("integration limits must be finite, got [{a}, {b}]"));
        }
        if a >= b {
            return domain(format!("integration requires a < b, got [{a}, {b}]"));
        }
        if !(self.abs_tol >= 0.0 && self.rel_tol >= 0.0 && self.abs_tol + self.rel_tol > 0.0) {
            return domain("tolerance must be positive");
        }

        let first = gauss_kronrod_21(&f, a, b)?;
        let mut evaluations = EVALS_PER_PANEL;
        let mut heap = BinaryHeap::new();
        let mut frozen: Vec<Panel> = Vec::new();
        heap.push(first);
        let mut panels = 1usize;

        let mut value = first.value;
        let mut error = first.error;
        let mut abs_value = first.abs_value;

        loop {
            let target = self
                .abs_tol
                .max(self.rel_tol * value.abs())
                .max(100.0 * f64::EPSILON * abs_value);
            if error <= target {
                break;
            }
            let Some(worst) = heap.pop() else {
                // Only unsplittable panels remain.
                break;
            };
            if panels >= self.max_panels {
                heap.push(worst);
                let partial = summarize(&heap, &frozen, evaluations);
                return Err(Error::BudgetExceeded { panels, partial });
            }
            let mid = 0.5 * (worst.a + worst.b);
            if !(mid > worst.a && mid < worst.b)
                || (worst.b - worst.a) <= 4.0 * f64::EPSILON * mid.abs()
            {
                frozen.push(worst);
                continue;
            }
            let left = gauss_kronrod_21(&f, worst.a, mid)?;
            let right = gauss_kronrod_21(&f, mid, worst.b)?;
            evaluations += 2 * EVALS_PER_PANEL;
            panels += 1;
            value += left.value + right.value - worst.value;
            error += left.error + right.error - worst.error;
            abs_value += left.abs_value + right.abs_value - worst.abs_value;
            heap.push(left);
            heap.push(right);
        }

        Ok(summarize(&heap, &frozen, evaluations))
    }

    /// Integrates `f` over `[a, ∞)` after the map `x = a + u / (1 - u)`.
    pub fn integrate_semi_infinite<F: Fn(f64) -> f64>(
        &self,
        f: F,
        a: f64,
    ) -> Result<QuadratureResult> {
        if !a.is_finite() {
            return domain(format!("lower limit must be finite, got {a}"));
        }
        self.integrate(
            |u: f64| {
                let w = 1.0 - u;
                let x = a + u / w;
                let fx = f(x);
                if fx == 0.0 {
                    0.0
                } else {
                    fx / (w * w)
                }
            },
            0.0,
            1.0,
        )
    }

    /// Integrates `f` over `[a, b]` with `0 < a < b` in the variable `v = ln x`.
    ///
    /// Suited to integrands concentrated near a tiny lower limit, such as
    /// `x^{-1}` or `x^{-1/2}` with `a` many decades below `b`.
    pub fn integrate_log_scale<F: Fn(f64) -> f64>(
        &self,
        f: F,
        a: f64,
        b: f64,
    ) -> Result<QuadratureResult> {
        if !(a > 0.0) {
            return domain(format!("log-scale integration needs a > 0, got {a}"));
        }
        self.integrate(
            |v: f64| {
                let x = v.exp();
                f(x) * x
            },
            a.ln(),
            b.ln(),
        )
    }

    /// Iterated adaptive integration over the box `lo × hi`.
    ///
    /// The innermost coordinate is the last one. Each level runs with this
    /// configuration; the returned error is the outermost estimate.
    pub fn integrate_box<F>(&self, f: &F, lo: &[f64], hi: &[f64]) -> Result<QuadratureResult>
    where
        F: Fn(&[f64]) -> f64 + ?Sized,
    {
        if lo.len() != hi.len() || lo.is_empty() {
            return domain("box bounds must have equal, non-zero length");
        }
        self.integrate_box_level(f, lo, hi, &[])
    }

    fn integrate_box_level<F>(
        &self,
        f: &F,
        lo: &[f64],
        hi: &[f64],
        prefix: &[f64],
    ) -> Result<QuadratureResult>
    where
        F: Fn(&[f64]) -> f64 + ?Sized,
    {
        let level = prefix.len();
        let last = level + 1 == lo.len();
        let failure = std::cell::RefCell::new(None::<Error>);
        let evaluations = std::cell::Cell::new(0usize);
        let res = self.integrate(
            |x| {
                if failure.borrow().is_some() {
                    return 0.0;
                }
                let mut point = Vec::with_capacity(lo.len());
                point.extend_from_slice(prefix);
                point.push(x);
                if last {
                    evaluations.set(evaluations.get() + 1);
                    f(&point)
                } else {
                    match self.integrate_box_level(f, lo, hi, &point) {
                        Ok(r) => {
                            evaluations.set(evaluations.get() + r.evaluations);
                            r.value
                        }
                        Err(e) => {
                            *failure.borrow_mut() = Some(e);
                            0.0
                        }
                    }
                }
            },
            lo[level],
            hi[level],
        );
        if let Some(e) = failure.into_inner() {
            return Err(e);
        }
        let mut r = res?;
        r.evaluations = evaluations.get();
        Ok(r)
    }
}

fn summarize(heap: &BinaryHeap<Panel>, frozen: &[Panel], evaluations: usize) -> QuadratureResult {
    // Summing small panels first keeps the total stable.
    let mut parts: Vec<&Panel> = heap.iter().chain(frozen.iter()).collect();
    parts.sort_by(|p, q| p.value.abs().total_cmp(&q.value.abs()));
    let value = parts.iter().map(|p| p.value).sum();
    let error_estimate = parts.iter().map(|p| p.error).sum();
    QuadratureResult {
        value,
        error_estimate,
        evaluations,
    }
}

/// Adaptive quadrature of `f` over `[a, b]` at tolerance `tol`.
pub fn integrate_adaptive<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    tol: f64,
) -> Result<QuadratureResult> {
    Quadrature::with_tol(tol).integrate(f, a, b)
}

/// Adaptive quadrature of `f` over `[a, ∞)` at tolerance `tol`.
pub fn integrate_semi_infinite<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    tol: f64,
) -> Result<QuadratureResult> {
    if !(a >= 0.0) {
        return domain(format!("semi-infinite lower limit must be >= 0, got {a}"));
    }
    Quadrature::with_tol(tol).integrate_semi_infinite(f, a)
}

/// Sum of two independent quadratures, e.g. the pieces of a split range.
pub fn combine(a: QuadratureResult, b: QuadratureResult) -> QuadratureResult {
    a.merge(b)
}

/// Γ(x) for x > 0.
pub fn gamma_fn(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return domain(format!(
            "gamma_fn requires a finite positive argument, got {x}"
        ));
    }
    Ok(statrs::function::gamma::gamma(x))
}

/// Volume ω_N of the unit ball in ℝ^N.
pub fn unit_ball_volume(n: usize) -> Result<f64> {
    if n < 1 {
        return domain("unit ball dimension must be at least 1");
    }
    let half = n as f64 / 2.0;
    Ok(std::f64::consts::PI.powf(half) / gamma_fn(half + 1.0)?)
}

/// Complementary error function, accurate to about 1e-14 relative.
///
/// Uses the positive-term series `erf(x) = (2/√π) e^{-x²} Σ 2ⁿ x^{2n+1} / (2n+1)!!`
/// below 2 and the Laplace continued fraction above.
pub fn erfc_fn(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x < 0.0 {
        return 2.0 - erfc_fn(-x);
    }
    if x == f64::INFINITY {
        return 0.0;
    }
    if x < 2.0 {
        let x2 = x * x;
        let mut term = x;
        let mut sum = x;
        let mut n = 0.0;
        loop {
            n += 1.0;
            term *= 2.0 * x2 / (2.0 * n + 1.0);
            sum += term;
            if term <= sum * 1e-17 {
                break;
            }
        }
        1.0 - 2.0 / std::f64::consts::PI.sqrt() * (-x2).exp() * sum
    } else {
        // erfc(x) = e^{-x²}/√π · 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + ...))))
        // evaluated with the modified Lentz method.
        let tiny = 1e-300;
        let mut f = x;
        let mut c = x;
        let mut d = 0.0;
        for k in 1..500 {
            let a = k as f64 / 2.0;
            d = x + a * d;
            if d.abs() < tiny {
                d = tiny;
            }
            c = x + a / c;
            if c.abs() < tiny {
                c = tiny;
            }
            d = 1.0 / d;
            let delta = c * d;
            f *= delta;
            if (delta - 1.0).abs() < 1e-16 {
                break;
            }
        }
        (-x * x).exp() / (std::f64::consts::PI.sqrt() * f)
    }
}

/// Least-squares line `y = slope * x + intercept`; returns `(slope, intercept, rms residual)`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<(f64, f64, f64)> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::DegenerateFit(format!(
            "need at least two paired samples, got {} and {}",
            xs.len(),
            ys.len()
        )));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx <= 0.0 {
        return Err(Error::DegenerateFit("abscissae are all equal".into()));
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let r = y - (slope * x + intercept);
            r * r
        })
        .sum();
    Ok((slope, intercept, (rss / n).sqrt()))
}
