//! Adaptive Gauss–Kronrod integration and the three integral families used
//! by the traversal and oracle paths.
//!
//! * [`integrate_sqrt_singular`]: `∫ f(k) / sqrt(k² − κ²) dk` from the
//!   turning point upward. The substitution `k = κ cosh u` turns the measure
//!   into `du`, so the endpoint singularity disappears. For `κ = 0` the
//!   substitution degenerates to `k = eᵘ`.
//! * [`integrate_oscillatory_damped`]: `k₀ ∫₀^∞ φ(ζ) K(ζ) e^{ik₀ζ} dζ` for a
//!   decaying envelope `φ`, with `K` either 1 or `J0(κζ)`.
//! * [`integrate_2d_xk`]: the `(x, k)` double integral over a smooth barrier.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::PI;
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

use crate::barriers::SmoothBarrier;
use crate::error::{Error, Result};
use crate::special::bessel_j0;
use crate::wavepackets::SpectralDensity;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuadSpec {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_subdivisions: usize,
    /// Relative threshold below which an integrand tail is dropped.
    pub tail_eps: f64,
}

impl Default for QuadSpec {
    fn default() -> Self {
        Self {
            rel_tol: 1e-9,
            abs_tol: 1e-12,
            max_subdivisions: 4000,
            tail_eps: 1e-14,
        }
    }
}

impl QuadSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0) {
            return Err(crate::error::invalid("quad.rel_tol", "must be > 0"));
        }
        if !(self.abs_tol > 0.0) {
            return Err(crate::error::invalid("quad.abs_tol", "must be > 0"));
        }
        if self.max_subdivisions < 1 {
            return Err(crate::error::invalid("quad.max_subdivisions", "must be >= 1"));
        }
        if !(self.tail_eps > 0.0 && self.tail_eps < 1.0) {
            return Err(crate::error::invalid("quad.tail_eps", "must lie in (0, 1)"));
        }
        Ok(())
    }

    fn target(&self, value: f64) -> f64 {
        (self.rel_tol * value.abs()).max(self.abs_tol)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub error_estimate: f64,
    pub evaluations: usize,
    pub converged: bool,
}

impl QuadResult {
    pub const ZERO: QuadResult = QuadResult {
        value: 0.0,
        error_estimate: 0.0,
        evaluations: 0,
        converged: true,
    };

    pub fn scale(self, factor: f64) -> Self {
        Self {
            value: self.value * factor,
            error_estimate: self.error_estimate * factor.abs(),
            ..self
        }
    }

    /// Sum of two results; error estimates add.
    pub fn combine(self, other: Self) -> Self {
        Self {
            value: self.value + other.value,
            error_estimate: self.error_estimate + other.error_estimate,
            evaluations: self.evaluations + other.evaluations,
            converged: self.converged && other.converged,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexQuadResult {
    pub value: Complex64,
    pub error_estimate: f64,
    pub evaluations: usize,
    pub converged: bool,
    /// Point beyond which the envelope was treated as zero.
    pub zeta_max: f64,
}

// 15-point Kronrod extension of the 7-point Gauss rule (QUADPACK qk15).
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Values the Kronrod rule can accumulate: real and complex scalars.
pub trait Scalar:
    Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> + Send + Sync
{
    fn zero() -> Self;
    fn magnitude(&self) -> f64;
}

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn magnitude(&self) -> f64 {
        self.abs()
    }
}

impl Scalar for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn magnitude(&self) -> f64 {
        self.norm()
    }
}

struct Panel<T> {
    a: f64,
    b: f64,
    value: T,
    error: f64,
}

impl<T> PartialEq for Panel<T> {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl<T> Eq for Panel<T> {}
impl<T> PartialOrd for Panel<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<T> Ord for Panel<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .partial_cmp(&other.error)
            .unwrap_or(Ordering::Equal)
            .then_with(|| other.a.partial_cmp(&self.a).unwrap_or(Ordering::Equal))
    }
}

fn gk15<T: Scalar, F: Fn(f64) -> T>(f: &F, a: f64, b: f64) -> (T, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut res_k = fc * WGK[7];
    let mut res_g = fc * WG[3];
    let mut res_abs = fc.magnitude() * WGK[7];
    let mut f1 = [T::zero(); 7];
    let mut f2 = [T::zero(); 7];
    for j in 0..7 {
        let dx = half * XGK[j];
        let lo = f(center - dx);
        let hi = f(center + dx);
        f1[j] = lo;
        f2[j] = hi;
        res_k = res_k + (lo + hi) * WGK[j];
        res_abs += WGK[j] * (lo.magnitude() + hi.magnitude());
        if j % 2 == 1 {
            res_g = res_g + (lo + hi) * WG[j / 2];
        }
    }
    let mean = res_k * 0.5;
    let mut res_asc = WGK[7] * (fc - mean).magnitude();
    for j in 0..7 {
        res_asc += WGK[j] * ((f1[j] - mean).magnitude() + (f2[j] - mean).magnitude());
    }
    let scale = half.abs();
    let value = res_k * half;
    res_abs *= scale;
    res_asc *= scale;
    let mut err = ((res_k - res_g) * half).magnitude();
    if res_asc != 0.0 && err != 0.0 {
        err = res_asc * (200.0 * err / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    (value, err)
}

struct Adaptive<T> {
    value: T,
    error: f64,
    evaluations: usize,
    converged: bool,
}

/// Globally adaptive GK15 over the partition given by `breaks` (sorted).
fn adaptive<T: Scalar, F: Fn(f64) -> T>(f: &F, breaks: &[f64], spec: &QuadSpec) -> Adaptive<T> {
    let mut heap = BinaryHeap::new();
    let mut evaluations = 0;
    for w in breaks.windows(2) {
        if w[1] > w[0] {
            let (value, error) = gk15(f, w[0], w[1]);
            evaluations += 15;
            heap.push(Panel {
                a: w[0],
                b: w[1],
                value,
                error,
            });
        }
    }
    let initial = heap.len();
    let limit = spec.max_subdivisions.max(initial);
    let total = |heap: &BinaryHeap<Panel<T>>| -> (T, f64) {
        let mut panels: Vec<&Panel<T>> = heap.iter().collect();
        panels.sort_by(|p, q| p.a.partial_cmp(&q.a).unwrap_or(Ordering::Equal));
        let values: Vec<T> = panels.iter().map(|p| p.value).collect();
        (pairwise_sum(&values), panels.iter().map(|p| p.error).sum())
    };
    let mut converged = true;
    loop {
        let (value, error) = total(&heap);
        if error <= spec.target(value.magnitude()) {
            break;
        }
        if heap.len() >= limit + initial {
            converged = false;
            break;
        }
        let worst = match heap.pop() {
            Some(p) => p,
            None => break,
        };
        let mid = 0.5 * (worst.a + worst.b);
        if !(mid > worst.a && mid < worst.b) {
            // panel at machine resolution; cannot refine further
            heap.push(worst);
            converged = false;
            break;
        }
        let (lv, le) = gk15(f, worst.a, mid);
        let (rv, re) = gk15(f, mid, worst.b);
        evaluations += 30;
        heap.push(Panel {
            a: worst.a,
            b: mid,
            value: lv,
            error: le,
        });
        heap.push(Panel {
            a: mid,
            b: worst.b,
            value: rv,
            error: re,
        });
    }
    let (value, error) = total(&heap);
    Adaptive {
        value,
        error,
        evaluations,
        converged,
    }
}

fn pairwise_sum<T: Scalar>(values: &[T]) -> T {
    match values.len() {
        0 => T::zero(),
        1 => values[0],
        n => pairwise_sum(&values[..n / 2]) + pairwise_sum(&values[n / 2..]),
    }
}

/// Adaptive integration of `f` over `[a, b]`. Reversed limits flip the sign.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, spec: &QuadSpec) -> QuadResult {
    integrate_with_breaks(f, &[a, b], spec)
}

/// Adaptive integration over `[points[0], points[last]]` with interior
/// break points where the integrand may be discontinuous.
pub fn integrate_with_breaks<F: Fn(f64) -> f64>(f: F, points: &[f64], spec: &QuadSpec) -> QuadResult {
    if points.len() < 2 {
        return QuadResult::ZERO;
    }
    let (first, last) = (points[0], points[points.len() - 1]);
    if first == last {
        return QuadResult::ZERO;
    }
    let sign = if last < first { -1.0 } else { 1.0 };
    let (lo, hi) = if sign > 0.0 { (first, last) } else { (last, first) };
    let mut breaks: Vec<f64> = points.iter().copied().filter(|p| *p > lo && *p < hi).collect();
    breaks.push(lo);
    breaks.push(hi);
    breaks.sort_by(|p, q| p.partial_cmp(q).unwrap_or(Ordering::Equal));
    breaks.dedup();
    let run = adaptive(&f, &breaks, spec);
    QuadResult {
        value: sign * run.value,
        error_estimate: run.error,
        evaluations: run.evaluations,
        converged: run.converged,
    }
}

/// Upper limit of a turning-point integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Upper {
    Finite(f64),
    Infinite,
}

/// `∫_κ^upper f(k) / sqrt(k² − κ²) dk`.
pub fn integrate_sqrt_singular<F: Fn(f64) -> f64>(
    f: F,
    kappa: f64,
    upper: Upper,
    spec: &QuadSpec,
) -> Result<QuadResult> {
    let hi = match upper {
        Upper::Finite(v) => v,
        Upper::Infinite => f64::INFINITY,
    };
    integrate_sqrt_singular_between(f, kappa, kappa, hi, spec)
}

/// `∫_lo^hi f(k) / sqrt(k² − κ²) dk` with `κ ≤ lo`; `hi` may be infinite.
/// Returns zero when `hi ≤ lo`.
pub fn integrate_sqrt_singular_between<F: Fn(f64) -> f64>(
    f: F,
    kappa: f64,
    lo: f64,
    hi: f64,
    spec: &QuadSpec,
) -> Result<QuadResult> {
    if kappa < 0.0 || kappa.is_nan() {
        return Err(Error::NegativeKappa(kappa));
    }
    let lo = lo.max(kappa);
    if !(hi > lo) {
        return Ok(QuadResult::ZERO);
    }
    if kappa > 0.0 {
        let map = |u: f64| kappa * u.cosh();
        let g = |u: f64| f(map(u));
        let u_lo = (lo / kappa).acosh();
        let (u_hi, tail_ok) = if hi.is_finite() {
            ((hi / kappa).acosh(), true)
        } else {
            tail_upward(&g, u_lo, spec)
        };
        let mut r = integrate(g, u_lo, u_hi, spec);
        r.converged &= tail_ok;
        Ok(r)
    } else {
        let g = |u: f64| f(u.exp());
        let (u_lo, lower_ok) = if lo > 0.0 {
            (lo.ln(), true)
        } else {
            let start = if hi.is_finite() { hi.ln() } else { 0.0 };
            tail_downward(&g, &f, start, spec)
        };
        let (u_hi, upper_ok) = if hi.is_finite() {
            (hi.ln(), true)
        } else {
            tail_upward(&g, u_lo, spec)
        };
        let mut r = integrate(g, u_lo, u_hi, spec);
        r.converged &= lower_ok && upper_ok;
        Ok(r)
    }
}

// Walk upward in u until |g| stays below tail_eps * max|g| seen.
fn tail_upward<G: Fn(f64) -> f64>(g: &G, start: f64, spec: &QuadSpec) -> (f64, bool) {
    let mut peak = g(start).abs();
    let mut u = start;
    let mut step = 0.25;
    let mut quiet = 0;
    for _ in 0..400 {
        u += step;
        let v = g(u).abs();
        if !v.is_finite() {
            return (u - step, false);
        }
        peak = peak.max(v);
        if v <= spec.tail_eps * peak {
            quiet += 1;
            if quiet >= 3 {
                return (u, true);
            }
        } else {
            quiet = 0;
        }
        step = (step * 1.25).min(4.0);
    }
    (u, false)
}

// Walk downward in log-k; convergence requires f(0) to be negligible.
fn tail_downward<G: Fn(f64) -> f64, F: Fn(f64) -> f64>(
    g: &G,
    f: &F,
    start: f64,
    spec: &QuadSpec,
) -> (f64, bool) {
    let mut peak = g(start).abs();
    let mut u = start;
    let mut quiet = 0;
    for _ in 0..400 {
        u -= 0.5;
        let v = g(u).abs();
        peak = peak.max(v);
        if v <= spec.tail_eps * peak {
            quiet += 1;
            if quiet >= 3 {
                return (u, true);
            }
        } else {
            quiet = 0;
        }
    }
    let at_zero = f(0.0).abs();
    (u, at_zero <= spec.tail_eps * peak)
}

/// Multiplicative kernel of the damped oscillatory integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OscKernel {
    Plain,
    BesselJ0(f64),
}

impl OscKernel {
    fn kappa(&self) -> f64 {
        match *self {
            OscKernel::Plain => 0.0,
            OscKernel::BesselJ0(k) => k.abs(),
        }
    }

    fn eval(&self, zeta: f64) -> f64 {
        match *self {
            OscKernel::Plain => 1.0,
            OscKernel::BesselJ0(k) => bessel_j0(k * zeta),
        }
    }
}

/// Minimum number of Kronrod nodes per oscillation period.
pub const NODES_PER_PERIOD: usize = 15;

/// `k₀ ∫₀^∞ φ(ζ) K(ζ) e^{ik₀ζ} dζ` for a non-increasing envelope `φ`.
///
/// The range is cut where `φ < tail_eps · φ(0)` and partitioned into panels
/// no longer than one period `2π / (k₀ + κ)` before adaptive refinement.
pub fn integrate_oscillatory_damped<P: Fn(f64) -> f64>(
    phi: P,
    kernel: OscKernel,
    k0: f64,
    spec: &QuadSpec,
) -> ComplexQuadResult {
    let zeta_max = envelope_cutoff(&phi, spec.tail_eps);
    let freq = k0.abs() + kernel.kappa();
    let period = if freq > 0.0 { 2.0 * PI / freq } else { zeta_max };
    let panels = ((zeta_max / period).ceil() as usize).max(1);
    let breaks: Vec<f64> = (0..=panels)
        .map(|i| zeta_max * i as f64 / panels as f64)
        .collect();
    let integrand = |z: f64| Complex64::from_polar(phi(z) * kernel.eval(z), k0 * z);
    let run = adaptive(&integrand, &breaks, spec);
    ComplexQuadResult {
        value: run.value * k0,
        error_estimate: run.error * k0.abs(),
        evaluations: run.evaluations,
        converged: run.converged,
        zeta_max,
    }
}

fn envelope_cutoff<P: Fn(f64) -> f64>(phi: &P, tail_eps: f64) -> f64 {
    let reference = phi(0.0).abs();
    if reference == 0.0 {
        return 0.0;
    }
    let threshold = tail_eps * reference;
    let mut hi = 1.0;
    while phi(hi).abs() > threshold {
        hi *= 2.0;
        if hi > 1e12 {
            return hi;
        }
    }
    let mut lo = 0.0;
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if phi(mid).abs() > threshold {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// Which part of the inner k-range the double integral covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InnerBand {
    /// `[κ(x), κ_max]`: partial traversal.
    BelowKappaMax,
    /// `[κ_max, ∞)`: above-barrier traversal.
    AboveKappaMax,
    /// `[κ(x), ∞)`: full traversal.
    Full,
}

/// `∫_b^a dx ∫ dk ρ(k) / sqrt(k² − κ(x)²)` over the chosen inner band.
pub fn integrate_2d_xk(
    profile: &SmoothBarrier,
    density: &dyn SpectralDensity,
    band: InnerBand,
    spec: &QuadSpec,
) -> Result<QuadResult> {
    let support = density.support();
    let kappa_max = profile.kappa_max();
    let (x_lo, x_hi) = profile.support();
    let inner_failed = std::sync::atomic::AtomicBool::new(false);
    let worst_inner = std::sync::Mutex::new(0.0_f64);
    let inner = |x: f64| -> f64 {
        let kx = profile.kappa(x);
        let (lo, hi) = match band {
            InnerBand::BelowKappaMax => (kx.max(support.lo), kappa_max.min(support.hi)),
            InnerBand::AboveKappaMax => (kappa_max.max(kx).max(support.lo), support.hi),
            InnerBand::Full => (kx.max(support.lo), support.hi),
        };
        match integrate_sqrt_singular_between(|k| density.density(k), kx, lo, hi, spec) {
            Ok(r) => {
                if !r.converged {
                    inner_failed.store(true, std::sync::atomic::Ordering::Relaxed);
                }
                let mut w = worst_inner.lock().unwrap_or_else(|e| e.into_inner());
                *w = w.max(r.error_estimate);
                r.value
            }
            Err(_) => {
                inner_failed.store(true, std::sync::atomic::Ordering::Relaxed);
                0.0
            }
        }
    };
    let mut outer = integrate(inner, x_lo, x_hi, spec);
    let worst = *worst_inner.lock().unwrap_or_else(|e| e.into_inner());
    outer.error_estimate += worst * (x_hi - x_lo).abs();
    outer.converged &= !inner_failed.load(std::sync::atomic::Ordering::Relaxed);
    Ok(outer)
}
