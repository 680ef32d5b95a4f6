//! Dwell, traversal, partial-traversal and above-barrier times.
//!
//! For a stack with segments `(Vₙ, wₙ)` and a momentum density `ρ(k)`,
//!
//! ```text
//! τ_trav = (μ/ħ) Σₙ wₙ ∫_{κₙ}^∞    ρ(k) / sqrt(k² − κₙ²) dk
//! τ_part = (μ/ħ) Σₙ wₙ ∫_{κₙ}^{κmax} ρ(k) / sqrt(k² − κₙ²) dk
//! τ_non  = (μ/ħ) Σₙ wₙ ∫_{κmax}^∞  ρ(k) / sqrt(k² − κₙ²) dk
//! ```
//!
//! which is `(L/v₀)·R` with `R` the dimensionless ratios and `v₀ = ħk₀/μ`.
//! The dwell time replaces `ρ(k)` by `ρ(k) − ρ(−k)`. Smooth barriers use the
//! same expressions with the sum replaced by `∫ dx` and `κₙ` by `κ(x)`.

use rayon::prelude::*;

use crate::barriers::{AttoclockBarrier, AttoclockGeometry, BarrierStack, SmoothBarrier};
use crate::error::{Error, Result};
use crate::quadrature::{integrate_2d_xk, integrate_sqrt_singular_between, InnerBand, QuadResult, QuadSpec};
use crate::wavepackets::{classify_regime, Regime, SpectralDensity, UnitSystem};
use crate::Interval;

/// The full-tunneling time. Always zero.
pub const TAU_TUN: f64 = 0.0;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Diagnostics {
    pub trav_error: f64,
    pub part_error: f64,
    pub non_error: f64,
    pub dwell_error: f64,
    pub evaluations: usize,
    pub converged: bool,
    pub warnings: Vec<String>,
}

impl Diagnostics {
    /// Sum of all quadrature error estimates.
    pub fn total_error(&self) -> f64 {
        self.trav_error + self.part_error + self.non_error + self.dwell_error
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraversalReport {
    pub tau_trav: f64,
    pub tau_part: f64,
    pub tau_non: f64,
    pub tau_tun: f64,
    pub tau_dwell: f64,
    pub regime: Regime,
    /// Reference speed `ħk₀/μ`.
    pub v0: f64,
    /// Comparison length `L`.
    pub length: f64,
    pub diagnostics: Diagnostics,
}

impl TraversalReport {
    pub fn r_part(&self) -> f64 {
        self.tau_part * self.v0 / self.length
    }

    pub fn r_non(&self) -> f64 {
        self.tau_non * self.v0 / self.length
    }

    /// `|τ_trav − (τ_part + τ_non)|`.
    pub fn additivity_gap(&self) -> f64 {
        (self.tau_trav - (self.tau_part + self.tau_non)).abs()
    }
}

// ∫_{max(lo, κ)}^{hi} ρ(k) / sqrt(k² − κ²) dk restricted to the density support.
fn k_integral(
    density: &dyn SpectralDensity,
    kappa: f64,
    band: Interval,
    spec: &QuadSpec,
) -> Result<QuadResult> {
    let s = density.support();
    integrate_sqrt_singular_between(
        |k| density.density(k),
        kappa,
        band.lo.max(s.lo).max(kappa),
        band.hi.min(s.hi),
        spec,
    )
}

// Same integral with ρ(−k), i.e. the reflected (negative-momentum) part.
fn k_integral_reflected(
    density: &dyn SpectralDensity,
    kappa: f64,
    spec: &QuadSpec,
) -> Result<QuadResult> {
    let s = density.support();
    integrate_sqrt_singular_between(|k| density.density(-k), kappa, (-s.hi).max(kappa), -s.lo, spec)
}

fn weighted_sum<F>(stack: &BarrierStack, mut per_segment: F) -> Result<QuadResult>
where
    F: FnMut(usize, f64) -> Result<QuadResult>,
{
    let mut total = QuadResult::ZERO;
    for (n, (seg, kappa)) in stack.segments().iter().zip(stack.kappas()).enumerate() {
        let r = per_segment(n, kappa)?;
        total = total.combine(r.scale(seg.width));
    }
    Ok(total.scale(stack.units().time_per_length_squared()))
}

/// Signed dwell time `(μ/ħ) Σ wₙ ∫_{κₙ}^∞ [ρ(k) − ρ(−k)] / sqrt(k² − κₙ²) dk`.
pub fn dwell_time(density: &dyn SpectralDensity, stack: &BarrierStack, spec: &QuadSpec) -> Result<QuadResult> {
    weighted_sum(stack, |_, kappa| {
        let forward = k_integral(density, kappa, Interval::new(kappa, f64::INFINITY), spec)?;
        let backward = k_integral_reflected(density, kappa, spec)?;
        Ok(forward.combine(backward.scale(-1.0)))
    })
}

/// Traversal time and its decomposition for a piecewise-constant stack.
pub fn traversal_time(
    density: &dyn SpectralDensity,
    stack: &BarrierStack,
    spec: &QuadSpec,
) -> Result<TraversalReport> {
    let kappa_max = stack.kappa_max();
    let above = |kappa: f64| Interval::new(kappa, f64::INFINITY);
    let trav = weighted_sum(stack, |_, kappa| k_integral(density, kappa, above(kappa), spec))?;
    let part = weighted_sum(stack, |_, kappa| {
        if kappa < kappa_max {
            k_integral(density, kappa, Interval::new(kappa, kappa_max), spec)
        } else {
            Ok(QuadResult::ZERO)
        }
    })?;
    let non = weighted_sum(stack, |_, kappa| k_integral(density, kappa, above(kappa_max), spec))?;
    let dwell = dwell_time(density, stack, spec)?;
    let regime = classify_regime(density, stack.kappa_min(), kappa_max)?;
    Ok(assemble(
        density,
        stack.units(),
        stack.comparison_length(),
        regime,
        [trav, part, non, dwell],
    ))
}

fn assemble(
    density: &dyn SpectralDensity,
    units: UnitSystem,
    length: f64,
    regime: Regime,
    [trav, part, non, dwell]: [QuadResult; 4],
) -> TraversalReport {
    let mut warnings = Vec::new();
    for (name, r) in [("trav", trav), ("part", part), ("non", non), ("dwell", dwell)] {
        if !r.converged {
            warnings.push(format!("tau_{name}: quadrature did not reach tolerance"));
        }
    }
    TraversalReport {
        tau_trav: trav.value,
        tau_part: part.value,
        tau_non: non.value,
        tau_tun: TAU_TUN,
        tau_dwell: dwell.value,
        regime,
        v0: units.speed(density.carrier()),
        length,
        diagnostics: Diagnostics {
            trav_error: trav.error_estimate,
            part_error: part.error_estimate,
            non_error: non.error_estimate,
            dwell_error: dwell.error_estimate,
            evaluations: trav.evaluations + part.evaluations + non.evaluations + dwell.evaluations,
            converged: trav.converged && part.converged && non.converged && dwell.converged,
            warnings,
        },
    }
}

// ρ(k) − ρ(−k), for the dwell time over smooth barriers.
struct Antisymmetric<'a>(&'a dyn SpectralDensity);

impl SpectralDensity for Antisymmetric<'_> {
    fn density(&self, k: f64) -> f64 {
        self.0.density(k) - self.0.density(-k)
    }
    fn support(&self) -> Interval {
        let s = self.0.support();
        let reach = s.hi.abs().max(s.lo.abs());
        Interval::new(s.lo.min(-s.hi).max(-reach), reach)
    }
    fn carrier(&self) -> f64 {
        self.0.carrier()
    }
}

/// Continuous-barrier limit of [`traversal_time`].
pub fn traversal_time_smooth(
    density: &dyn SpectralDensity,
    smooth: &SmoothBarrier,
    spec: &QuadSpec,
) -> Result<TraversalReport> {
    let factor = smooth.units().time_per_length_squared();
    let trav = integrate_2d_xk(smooth, density, InnerBand::Full, spec)?.scale(factor);
    let part = integrate_2d_xk(smooth, density, InnerBand::BelowKappaMax, spec)?.scale(factor);
    let non = integrate_2d_xk(smooth, density, InnerBand::AboveKappaMax, spec)?.scale(factor);
    let dwell = integrate_2d_xk(smooth, &Antisymmetric(density), InnerBand::Full, spec)?.scale(factor);
    let regime = classify_regime(density, smooth.kappa_min(), smooth.kappa_max())?;
    Ok(assemble(
        density,
        smooth.units(),
        smooth.comparison_length(),
        regime,
        [trav, part, non, dwell],
    ))
}

/// `τ_non` computed two ways, plus the literal printed variant.
#[derive(Debug, Clone, PartialEq)]
pub struct NonTunnelingTime {
    /// Per-segment restricted integrals, `(L/v₀)·R_non`.
    pub restricted: QuadResult,
    /// `∫_{κmax}^∞ ρ(k) Σₙ wₙ/vₙ(k) dk` with `vₙ(k) = ħ sqrt(k² − κₙ²)/μ`.
    pub classical_form: QuadResult,
    /// `Σₙ (μwₙ/ħk₀) ∫ ρ(k) ħ sqrt(k² − κₙ²)/μ dk`, which carries units of
    /// length² rather than time; reported for comparison only.
    pub printed_variant: f64,
}

impl NonTunnelingTime {
    pub fn value(&self) -> f64 {
        self.restricted.value
    }
}

pub fn tau_non_classical_form(
    density: &dyn SpectralDensity,
    stack: &BarrierStack,
    spec: &QuadSpec,
) -> Result<NonTunnelingTime> {
    let units = stack.units();
    let kappa_max = stack.kappa_max();
    let kappas = stack.kappas();
    let widths: Vec<f64> = stack.segments().iter().map(|s| s.width).collect();
    let restricted = weighted_sum(stack, |_, kappa| {
        k_integral(density, kappa, Interval::new(kappa_max, f64::INFINITY), spec)
    })?;
    // One integral over k with the κmax singularity removed by substitution:
    // ρ(k) Σ wₙ μ/(ħ sqrt(k² − κₙ²)) = [ρ(k) Σ wₙ μ sqrt(k² − κmax²)/(ħ sqrt(k² − κₙ²))] / sqrt(k² − κmax²)
    let regular = |k: f64| {
        let root_max = (k * k - kappa_max * kappa_max).max(0.0).sqrt();
        let sum: f64 = widths
            .iter()
            .zip(&kappas)
            .map(|(w, kn)| {
                if *kn >= kappa_max {
                    *w
                } else {
                    w * root_max / (k * k - kn * kn).sqrt()
                }
            })
            .sum();
        density.density(k) * sum * units.time_per_length_squared()
    };
    let s = density.support();
    let classical_form = integrate_sqrt_singular_between(regular, kappa_max, kappa_max.max(s.lo), s.hi, spec)?;
    let k0 = density.carrier();
    let printed_variant: f64 = widths
        .iter()
        .zip(&kappas)
        .map(|(w, kn)| {
            let lo = kappa_max.max(s.lo);
            let r = crate::quadrature::integrate(
                |k| density.density(k) * units.hbar * (k * k - kn * kn).max(0.0).sqrt() / units.mass,
                lo,
                s.hi.max(lo),
                spec,
            );
            units.mass * w / (units.hbar * k0) * r.value
        })
        .sum();
    Ok(NonTunnelingTime {
        restricted,
        classical_form,
        printed_variant,
    })
}

/// Classical time `Σ wₙ μ / (ħ sqrt(k² − κₙ²))` to cross the stack at wavenumber `k`.
pub fn classical_traversal(stack: &BarrierStack, k: f64) -> Result<f64> {
    let kappa_max = stack.kappa_max();
    if !(k > kappa_max) {
        return Err(Error::ClassicallyForbidden { k, kappa_max });
    }
    let units = stack.units();
    Ok(stack
        .segments()
        .iter()
        .zip(stack.kappas())
        .map(|(s, kn)| s.width * units.mass / (units.hbar * (k * k - kn * kn).sqrt()))
        .sum())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanEntry {
    pub field: f64,
    pub tau_part: f64,
    pub geometry: AttoclockGeometry,
    pub report: TraversalReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttoclockScan {
    pub entries: Vec<ScanEntry>,
    /// Fields rejected as over-barrier, with the reason.
    pub skipped: Vec<(f64, Error)>,
    /// Whether τ_part strictly decreases along the accepted fields (in input order).
    pub strictly_decreasing: bool,
}

/// Partial traversal time across the attoclock barrier for each field strength.
pub fn attoclock_scan(
    template: &AttoclockBarrier,
    fields: &[f64],
    density: &dyn SpectralDensity,
    units: UnitSystem,
    spec: &QuadSpec,
) -> Result<AttoclockScan> {
    let results: Vec<(f64, Result<ScanEntry>)> = fields
        .par_iter()
        .map(|&field| {
            let bar = template.with_field(field);
            let entry = bar.geometry().and_then(|geometry| {
                let smooth = bar.to_smooth(units)?;
                let report = traversal_time_smooth(density, &smooth, spec)?;
                Ok(ScanEntry {
                    field,
                    tau_part: report.tau_part,
                    geometry,
                    report,
                })
            });
            (field, entry)
        })
        .collect();
    let mut entries = Vec::new();
    let mut skipped = Vec::new();
    for (field, r) in results {
        match r {
            Ok(e) => entries.push(e),
            Err(e @ Error::OverBarrierField { .. }) => skipped.push((field, e)),
            Err(Error::InvalidParameter { name: "barrier.field", reason }) => {
                skipped.push((field, Error::InvalidParameter { name: "barrier.field", reason }))
            }
            Err(e) => return Err(e),
        }
    }
    let strictly_decreasing = entries.windows(2).all(|w| w[1].tau_part < w[0].tau_part);
    Ok(AttoclockScan {
        entries,
        skipped,
        strictly_decreasing,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::barriers::{Profile, Segment};
    use crate::wavepackets::GaussianPacket;

    fn unit() -> UnitSystem {
        UnitSystem::default()
    }

    fn two_step() -> BarrierStack {
        BarrierStack::new(vec![Segment::new(1.0, 1.0), Segment::new(2.0, 1.0)], 1.0, unit()).unwrap()
    }

    // Oracle: k = κ + t² removes the turning-point singularity differently
    // from the cosh map; composite Simpson in t on a fine grid.
    fn brute_k_integral<F: Fn(f64) -> f64>(rho: F, kappa: f64, hi: f64) -> f64 {
        if hi <= kappa {
            return 0.0;
        }
        let t_max = (hi - kappa).sqrt();
        let n = 200_000;
        let h = t_max / n as f64;
        let g = |t: f64| {
            let k = kappa + t * t;
            2.0 * rho(k) / (2.0 * kappa + t * t).sqrt()
        };
        let mut s = g(0.0) + g(t_max);
        for i in 1..n {
            s += g(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        s * h / 3.0
    }

    #[test]
    fn symmetric_density_has_zero_dwell() {
        struct Even;
        impl SpectralDensity for Even {
            fn density(&self, k: f64) -> f64 {
                0.5 * (-(k * k)).exp() / std::f64::consts::PI.sqrt() * 2.0
            }
            fn support(&self) -> Interval {
                Interval::new(-6.0, 6.0)
            }
            fn carrier(&self) -> f64 {
                1.0
            }
        }
        let d = dwell_time(&Even, &two_step(), &QuadSpec::default()).unwrap();
        assert!(d.value.abs() < 1e-12, "{}", d.value);
    }

    #[test]
    fn free_segment_dwell_is_mean_inverse_speed() {
        let p = GaussianPacket::new(-60.0, 2.0, 5.0).unwrap();
        let rho = p.density();
        let stack = BarrierStack::new(vec![Segment::new(0.0, 1.0)], 1.0, unit()).unwrap();
        let got = dwell_time(&rho, &stack, &QuadSpec::default()).unwrap().value;
        // direct k-quadrature of ∫ ρ(k)/k over the (positive) support
        let s = rho.support();
        let n = 100_000;
        let h = (s.hi - s.lo) / n as f64;
        let mut oracle = 0.0;
        for i in 0..=n {
            let k = s.lo + i as f64 * h;
            let w = if i == 0 || i == n { 0.5 } else { 1.0 };
            oracle += w * rho.density(k) / k;
        }
        oracle *= h;
        assert!((got - oracle).abs() < 1e-9 * oracle);
        assert!((got - 0.2).abs() < 0.01 * 0.2);
    }

    #[test]
    fn narrow_packet_dwell_matches_traversal() {
        let p = GaussianPacket::new(-80.0, 5.0, 5.0).unwrap();
        let rho = p.density();
        let stack = BarrierStack::new(vec![Segment::new(8.0, 1.0)], 1.0, unit()).unwrap();
        assert_eq!(stack.kappa(0).unwrap(), 4.0);
        let dwell = dwell_time(&rho, &stack, &QuadSpec::default()).unwrap().value;
        let trav = traversal_time(&rho, &stack, &QuadSpec::default()).unwrap();
        assert!(dwell > 0.0);
        assert!((dwell - trav.tau_trav).abs() < 1e-12 * dwell);
    }

    #[test]
    fn full_tunneling_vanishes() {
        let stack = two_step();
        let kmin = stack.kappa_min();
        let rho = GaussianPacket::new(-50.0, 3.0, 0.5 * kmin).unwrap().density();
        let t = rho.truncate(Interval::new(0.1 * kmin, 0.9 * kmin)).unwrap();
        let r = traversal_time(&t, &stack, &QuadSpec::default()).unwrap();
        assert_eq!(r.tau_trav, 0.0);
        assert_eq!(r.tau_part, 0.0);
        assert_eq!(r.tau_non, 0.0);
        assert_eq!(r.tau_tun, 0.0);
        assert_eq!(r.regime, Regime::FullTunneling);
    }

    #[test]
    fn high_energy_two_step_matches_classical_time() {
        let stack = two_step();
        let rho = GaussianPacket::new(-200.0, 20.0, 10.0).unwrap().density();
        let r = traversal_time(&rho, &stack, &QuadSpec::default()).unwrap();
        let classical = classical_traversal(&stack, 10.0).unwrap();
        assert!((classical - 0.203_077_327_071_186_84).abs() < 1e-14);
        assert!(((r.tau_trav - classical) / classical).abs() < 1e-3);
        assert_eq!(r.regime, Regime::NonTunneling);
        assert_eq!(r.tau_part, 0.0);
        assert!((r.tau_non - r.tau_trav).abs() < 1e-12);
    }

    #[test]
    fn partial_band_density_has_only_partial_time() {
        let stack = two_step();
        let (k1, k2) = (2f64.sqrt(), 2.0);
        let rho = GaussianPacket::new(-50.0, 2.0, 1.7).unwrap().density();
        let t = rho.truncate(Interval::new(k1, k2)).unwrap();
        let r = traversal_time(&t, &stack, &QuadSpec::default()).unwrap();
        assert_eq!(r.regime, Regime::PartialTunneling);
        assert_eq!(r.tau_non, 0.0);
        assert!(r.tau_part > 0.0);
        assert!((r.tau_trav - r.tau_part).abs() < 1e-12);
        // only the lower segment contributes: w₁ ∫_{κ₁}^{κ₂} ρ/sqrt(k² − κ₁²)
        let oracle = brute_k_integral(|k| t.density(k), k1, k2);
        assert!(((r.tau_part - oracle) / oracle).abs() < 1e-7, "{} vs {oracle}", r.tau_part);
    }

    #[test]
    fn square_barrier_has_no_partial_time() {
        let stack = BarrierStack::new(vec![Segment::new(1.5, 2.0)], 0.5, unit()).unwrap();
        for &(sigma, k0) in &[(0.5, 1.0), (1.0, 1.7), (3.0, 3.0)] {
            let rho = GaussianPacket::new(-50.0, sigma, k0).unwrap().density();
            let r = traversal_time(&rho, &stack, &QuadSpec::default()).unwrap();
            assert_eq!(r.tau_part, 0.0);
        }
    }

    #[test]
    fn classical_traversal_cases() {
        let free = BarrierStack::new(vec![Segment::new(0.0, 3.0)], 1.0, unit()).unwrap();
        assert!((classical_traversal(&free, 2.0).unwrap() - 1.5).abs() < 1e-15);
        assert!(matches!(
            classical_traversal(&two_step(), 2.0),
            Err(Error::ClassicallyForbidden { .. })
        ));
        assert!(classical_traversal(&two_step(), 2.0 + 1e-9).unwrap() > 1e3);
    }

    #[test]
    fn tau_non_forms_agree() {
        let stack = two_step();
        let rho = GaussianPacket::new(-300.0, 20.0, 12.0).unwrap().density();
        let form = tau_non_classical_form(&rho, &stack, &QuadSpec::default()).unwrap();
        let classical = classical_traversal(&stack, 12.0).unwrap();
        assert!(((form.value() - classical) / classical).abs() < 0.01);
        assert!((form.restricted.value - form.classical_form.value).abs() < 1e-9 * classical);
        let r = traversal_time(&rho, &stack, &QuadSpec::default()).unwrap();
        assert!((form.value() - r.tau_non).abs() <= r.diagnostics.non_error + 1e-14);
        assert!(form.printed_variant.is_finite());
    }

    #[test]
    fn tau_non_free_case_is_inverse_speed() {
        let stack = BarrierStack::new(vec![Segment::new(0.0, 2.0)], 1.0, unit()).unwrap();
        let rho = GaussianPacket::new(-300.0, 20.0, 8.0).unwrap().density();
        let form = tau_non_classical_form(&rho, &stack, &QuadSpec::default()).unwrap();
        assert!((form.value() - 2.0 / 8.0).abs() < 1e-3 * 0.25);
    }

    #[test]
    fn smooth_constant_profile_matches_single_segment() {
        let smooth = SmoothBarrier::new(Profile::Constant { height: 0.8 }, (1.0, 3.0), unit()).unwrap();
        let stack = smooth.discretize(1).unwrap();
        let rho = GaussianPacket::new(-50.0, 1.5, 1.6).unwrap().density();
        let a = traversal_time_smooth(&rho, &smooth, &QuadSpec::default()).unwrap();
        let b = traversal_time(&rho, &stack, &QuadSpec::default()).unwrap();
        assert!(((a.tau_trav - b.tau_trav) / b.tau_trav).abs() < 1e-9);
        assert!(((a.tau_dwell - b.tau_dwell) / b.tau_dwell).abs() < 1e-9);
        assert_eq!(a.regime, b.regime);
        assert!(a.tau_part.abs() < 1e-15);
    }

    #[test]
    fn smooth_bump_below_max_has_partial_time() {
        let smooth = SmoothBarrier::new(Profile::GaussianBump { height: 2.0, width: 0.6 }, (1.0, 4.0), unit()).unwrap();
        let rho = GaussianPacket::new(-50.0, 4.0, 1.0).unwrap().density();
        let r = traversal_time_smooth(&rho, &smooth, &QuadSpec::default()).unwrap();
        assert_eq!(r.regime, Regime::PartialTunneling);
        assert!(r.tau_part > 0.0);
        assert!(r.tau_non.abs() < 1e-12);
    }

    #[test]
    fn zero_profile_has_no_partial_time() {
        let smooth = SmoothBarrier::new(Profile::Constant { height: 0.0 }, (1.0, 2.0), unit()).unwrap();
        let rho = GaussianPacket::new(-50.0, 2.0, 3.0).unwrap().density();
        let r = traversal_time_smooth(&rho, &smooth, &QuadSpec::default()).unwrap();
        assert_eq!(r.tau_part, 0.0);
        assert!((r.tau_trav - 1.0 / 3.0).abs() < 0.01 / 3.0);
    }

    #[test]
    fn report_ratios() {
        let rho = GaussianPacket::new(-50.0, 2.0, 3.0).unwrap().density();
        let r = traversal_time(&rho, &two_step(), &QuadSpec::default()).unwrap();
        assert_eq!(r.length, 3.0);
        assert_eq!(r.v0, 3.0);
        assert!(((r.r_part() + r.r_non()) * r.length / r.v0 - r.tau_trav).abs() < 1e-10);
    }

    #[test]
    fn scan_skips_over_barrier_fields() {
        let rho = GaussianPacket::new(-50.0, 10.0, 0.5).unwrap().density();
        let scan = attoclock_scan(
            &AttoclockBarrier::helium(0.05),
            &[0.03, 0.2, 0.06],
            &rho,
            unit(),
            &QuadSpec::default(),
        )
        .unwrap();
        assert_eq!(scan.entries.len(), 2);
        assert_eq!(scan.skipped.len(), 1);
        assert_eq!(scan.skipped[0].0, 0.2);
        assert_eq!(scan.entries[0].field, 0.03);
        assert!(scan.strictly_decreasing);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(24))]

            #[test]
            fn additivity_holds(v1 in 0.0..3.0_f64, v2 in 0.0..3.0_f64, w1 in 0.2..2.0_f64, w2 in 0.2..2.0_f64,
                                sigma in 0.5..6.0_f64, k0 in 0.3..4.0_f64) {
                let stack = BarrierStack::new(vec![Segment::new(v1, w1), Segment::new(v2, w2)], 1.0, unit()).unwrap();
                let rho = GaussianPacket::new(-100.0, sigma, k0).unwrap().density();
                let r = traversal_time(&rho, &stack, &QuadSpec::default()).unwrap();
                let d = &r.diagnostics;
                let tol = d.trav_error + d.part_error + d.non_error + 64.0 * f64::EPSILON * r.tau_trav.abs();
                prop_assert!(r.additivity_gap() <= tol, "gap {} tol {}", r.additivity_gap(), tol);
                prop_assert!(r.tau_trav >= 0.0 && r.tau_part >= 0.0 && r.tau_non >= 0.0);
            }

            #[test]
            fn mass_below_kappa_min_does_not_contribute(extra in 0.0..5.0_f64) {
                // unnormalised integrals: adding mass below κ_min leaves them unchanged
                let stack = two_step();
                let kmin = stack.kappa_min();
                struct Mixture { extra: f64 }
                impl SpectralDensity for Mixture {
                    fn density(&self, k: f64) -> f64 {
                        let above = (-(k - 3.0).powi(2) * 8.0).exp();
                        let below = if k > 0.2 && k < 1.2 { self.extra } else { 0.0 };
                        above + below
                    }
                    fn support(&self) -> Interval { Interval::new(0.2, 5.0) }
                    fn carrier(&self) -> f64 { 3.0 }
                }
                prop_assume!(1.2 < kmin);
                let base = traversal_time(&Mixture { extra: 0.0 }, &stack, &QuadSpec::default()).unwrap();
                let more = traversal_time(&Mixture { extra }, &stack, &QuadSpec::default()).unwrap();
                prop_assert!((base.tau_trav - more.tau_trav).abs() <= 1e-12 * base.tau_trav);
            }

            #[test]
            fn raising_a_height_slows_above_barrier_traversal(v in 0.0..2.0_f64, dv in 0.0..2.0_f64) {
                // density well above both barrier tops
                let rho = GaussianPacket::new(-100.0, 5.0, 5.0).unwrap().density();
                let low = BarrierStack::new(vec![Segment::new(v, 1.0), Segment::new(1.0, 1.0)], 1.0, unit()).unwrap();
                let high = BarrierStack::new(vec![Segment::new(v + dv, 1.0), Segment::new(1.0, 1.0)], 1.0, unit()).unwrap();
                let a = traversal_time(&rho, &low, &QuadSpec::default()).unwrap();
                let b = traversal_time(&rho, &high, &QuadSpec::default()).unwrap();
                prop_assert!(b.tau_trav >= a.tau_trav - 1e-12);
            }
        }
    }
}
