//! Incident states `ψ(q) = e^{ik₀q} φ(q)` and their momentum densities.
//!
//! The envelope is the unit-norm Gaussian
//! `φ(q) = (2πσ²)^{-1/4} exp(−(q − q₀)² / (4σ²))`, which gives
//! `|ψ̃(k)|² = σ sqrt(2/π) exp(−2σ²(k − k₀)²)` and the envelope
//! autocorrelation `Φ(ζ) = exp(−ζ² / (8σ²))`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::quadrature::{integrate_with_breaks, QuadSpec};
use crate::Interval;

/// Default relative cutoff used to define the support of a density.
pub const DEFAULT_TAIL_EPS: f64 = 1e-12;

/// Default number of envelope widths kept clear of the barrier.
pub const DEFAULT_N_SIGMAS: f64 = 8.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UnitSystem {
    pub hbar: f64,
    pub mass: f64,
}

impl Default for UnitSystem {
    fn default() -> Self {
        Self { hbar: 1.0, mass: 1.0 }
    }
}

impl UnitSystem {
    pub fn new(hbar: f64, mass: f64) -> Result<Self> {
        let units = Self { hbar, mass };
        units.validate()?;
        Ok(units)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.hbar > 0.0 && self.hbar.is_finite()) {
            return Err(invalid("units.hbar", "must be positive"));
        }
        if !(self.mass > 0.0 && self.mass.is_finite()) {
            return Err(invalid("units.mass", "must be positive"));
        }
        Ok(())
    }

    /// `κ = sqrt(2μV) / ħ`.
    pub fn kappa(&self, potential: f64) -> f64 {
        (2.0 * self.mass * potential.max(0.0)).sqrt() / self.hbar
    }

    /// Group speed `ħk / μ`.
    pub fn speed(&self, k: f64) -> f64 {
        self.hbar * k / self.mass
    }

    /// `μ / ħ`, the factor turning `∫ ρ dk / sqrt(k² − κ²)` per unit width into a time.
    pub fn time_per_length_squared(&self) -> f64 {
        self.mass / self.hbar
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianPacket {
    pub q0: f64,
    pub sigma: f64,
    pub k0: f64,
}

impl GaussianPacket {
    pub fn new(q0: f64, sigma: f64, k0: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(invalid("packet.sigma", "must be positive"));
        }
        if !(k0 > 0.0 && k0.is_finite()) {
            return Err(invalid("packet.k0", "must be positive"));
        }
        if !q0.is_finite() {
            return Err(invalid("packet.q0", "must be finite"));
        }
        Ok(Self { q0, sigma, k0 })
    }

    /// Momentum-space width `1 / (2σ)`.
    pub fn sigma_k(&self) -> f64 {
        0.5 / self.sigma
    }

    /// `|ψ̃(k)|²`.
    pub fn momentum_density(&self, k: f64) -> f64 {
        let s = self.sigma;
        s * (2.0 / PI).sqrt() * (-2.0 * s * s * (k - self.k0).powi(2)).exp()
    }

    /// Envelope autocorrelation `Φ(ζ) = ∫ φ̄(η − ζ/2) φ(η + ζ/2) dη`.
    pub fn autocorrelation(&self, zeta: f64) -> f64 {
        (-zeta * zeta / (8.0 * self.sigma * self.sigma)).exp()
    }

    /// Envelope `φ(q)`.
    pub fn envelope(&self, q: f64) -> f64 {
        let s2 = self.sigma * self.sigma;
        (2.0 * PI * s2).powf(-0.25) * (-(q - self.q0).powi(2) / (4.0 * s2)).exp()
    }

    /// Full wave function `ψ(q) = e^{ik₀q} φ(q)` as `(re, im)`.
    pub fn wave_function(&self, q: f64) -> (f64, f64) {
        let amp = self.envelope(q);
        let phase = self.k0 * q;
        (amp * phase.cos(), amp * phase.sin())
    }

    pub fn density(&self) -> MomentumDensity {
        MomentumDensity::gaussian(self)
    }

    /// True when `q₀ + n_sigmas·σ < −a`, i.e. the packet starts clear of the
    /// barrier whose far edge sits at `−far_edge`.
    pub fn clear_of_barrier(&self, far_edge: f64, n_sigmas: f64) -> bool {
        self.q0 + n_sigmas * self.sigma < -far_edge
    }
}

/// A normalised momentum density `k ↦ |ψ̃(k)|²`.
pub trait SpectralDensity: Send + Sync {
    fn density(&self, k: f64) -> f64;
    /// Smallest interval outside which the density is treated as zero.
    fn support(&self) -> Interval;
    /// Carrier wavenumber `k₀` of the incident packet.
    fn carrier(&self) -> f64;
}

#[derive(Debug, Clone, PartialEq)]
enum Shape {
    Gaussian { k0: f64, sigma: f64 },
    // piecewise linear through (k, value) nodes, normalised
    Sampled { ks: Vec<f64>, values: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct MomentumDensity {
    shape: Shape,
    carrier: f64,
    support: Interval,
    norm_tail_eps: f64,
}

impl MomentumDensity {
    pub fn gaussian(packet: &GaussianPacket) -> Self {
        Self::gaussian_with_eps(packet, DEFAULT_TAIL_EPS)
    }

    pub fn gaussian_with_eps(packet: &GaussianPacket, norm_tail_eps: f64) -> Self {
        let half = (-norm_tail_eps.ln() / 2.0).sqrt() / packet.sigma;
        Self {
            shape: Shape::Gaussian {
                k0: packet.k0,
                sigma: packet.sigma,
            },
            carrier: packet.k0,
            support: Interval::new(packet.k0 - half, packet.k0 + half),
            norm_tail_eps,
        }
    }

    /// Density tabulated on increasing nodes `ks`, linearly interpolated and
    /// renormalised to unit integral.
    pub fn sampled(ks: Vec<f64>, values: Vec<f64>, carrier: f64) -> Result<Self> {
        if ks.len() < 2 || ks.len() != values.len() {
            return Err(invalid(
                "packet.density",
                "need at least two (k, value) pairs of equal length",
            ));
        }
        if ks.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(invalid("packet.k", "nodes must be strictly increasing"));
        }
        if values.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(invalid("packet.density", "values must be finite and non-negative"));
        }
        if !(carrier > 0.0) {
            return Err(invalid("packet.k0", "must be positive"));
        }
        let norm: f64 = ks
            .windows(2)
            .zip(values.windows(2))
            .map(|(k, v)| 0.5 * (k[1] - k[0]) * (v[0] + v[1]))
            .sum();
        if !(norm > 0.0) {
            return Err(invalid("packet.density", "density integrates to zero"));
        }
        let values: Vec<f64> = values.iter().map(|v| v / norm).collect();
        let peak = values.iter().cloned().fold(0.0, f64::max);
        let eps = DEFAULT_TAIL_EPS;
        let above = |v: &f64| *v >= eps * peak;
        let first = values.iter().position(above).unwrap_or(0);
        let last = values.iter().rposition(above).unwrap_or(values.len() - 1);
        // nodes adjacent to the last significant ones bound the linear ramps
        let lo = ks[first.saturating_sub(1)];
        let hi = ks[(last + 1).min(ks.len() - 1)];
        Ok(Self {
            shape: Shape::Sampled { ks, values },
            carrier,
            support: Interval::new(lo, hi),
            norm_tail_eps: eps,
        })
    }

    pub fn norm_tail_eps(&self) -> f64 {
        self.norm_tail_eps
    }

    pub fn peak(&self) -> f64 {
        match &self.shape {
            Shape::Gaussian { sigma, .. } => sigma * (2.0 / PI).sqrt(),
            Shape::Sampled { values, .. } => values.iter().cloned().fold(0.0, f64::max),
        }
    }

    /// Kinks and edges of the density inside its support.
    pub fn breakpoints(&self) -> Vec<f64> {
        match &self.shape {
            Shape::Gaussian { k0, .. } => vec![*k0],
            Shape::Sampled { ks, .. } => ks.clone(),
        }
    }

    /// Mass on `band`, by adaptive quadrature.
    pub fn mass_on(&self, band: Interval) -> f64 {
        let lo = band.lo.max(self.support.lo);
        let hi = band.hi.min(self.support.hi);
        if !(hi > lo) {
            return 0.0;
        }
        let mut points = vec![lo];
        points.extend(self.breakpoints().into_iter().filter(|p| *p > lo && *p < hi));
        points.push(hi);
        let spec = QuadSpec {
            rel_tol: 1e-13,
            abs_tol: 1e-15,
            ..QuadSpec::default()
        };
        integrate_with_breaks(|k| self.density(k), &points, &spec).value
    }

    /// Hard truncation to `band`, renormalised to unit mass.
    pub fn truncate(&self, band: Interval) -> Result<TruncatedMomentumDensity> {
        if !(band.hi > band.lo) {
            return Err(Error::EmptyTruncation {
                lo: band.lo,
                hi: band.hi,
            });
        }
        let renorm = self.mass_on(band);
        if !(renorm > 0.0) || self.support.intersect(&band).is_none() {
            return Err(Error::EmptyTruncation {
                lo: band.lo,
                hi: band.hi,
            });
        }
        Ok(TruncatedMomentumDensity {
            base: self.clone(),
            band,
            renorm,
        })
    }
}

impl SpectralDensity for MomentumDensity {
    fn density(&self, k: f64) -> f64 {
        match &self.shape {
            Shape::Gaussian { k0, sigma } => {
                sigma * (2.0 / PI).sqrt() * (-2.0 * sigma * sigma * (k - k0).powi(2)).exp()
            }
            Shape::Sampled { ks, values } => interpolate(ks, values, k),
        }
    }

    fn support(&self) -> Interval {
        self.support
    }

    fn carrier(&self) -> f64 {
        self.carrier
    }
}

fn interpolate(ks: &[f64], values: &[f64], k: f64) -> f64 {
    if k < ks[0] || k > ks[ks.len() - 1] {
        return 0.0;
    }
    let i = ks.partition_point(|x| *x <= k).clamp(1, ks.len() - 1);
    let (k_a, k_b) = (ks[i - 1], ks[i]);
    let t = (k - k_a) / (k_b - k_a);
    values[i - 1] + t * (values[i] - values[i - 1])
}

/// A density hard-truncated to a band and renormalised.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedMomentumDensity {
    base: MomentumDensity,
    band: Interval,
    renorm: f64,
}

impl TruncatedMomentumDensity {
    pub fn base(&self) -> &MomentumDensity {
        &self.base
    }

    pub fn band(&self) -> Interval {
        self.band
    }

    /// Mass of the base density inside the band before renormalisation.
    pub fn renorm(&self) -> f64 {
        self.renorm
    }
}

impl SpectralDensity for TruncatedMomentumDensity {
    fn density(&self, k: f64) -> f64 {
        if k < self.band.lo || k > self.band.hi {
            0.0
        } else {
            self.base.density(k) / self.renorm
        }
    }

    fn support(&self) -> Interval {
        self.base
            .support()
            .intersect(&self.band)
            .unwrap_or(Interval::new(self.band.lo, self.band.lo))
    }

    fn carrier(&self) -> f64 {
        self.base.carrier()
    }
}

/// Traversal process implied by where a density sits relative to the barrier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Regime {
    NonTunneling,
    PartialTunneling,
    FullTunneling,
    /// Support reaches both the partial band and above `κ_max`.
    Mixed,
}

impl Regime {
    pub fn as_str(&self) -> &'static str {
        match self {
            Regime::NonTunneling => "non-tunneling",
            Regime::PartialTunneling => "partial-tunneling",
            Regime::FullTunneling => "full-tunneling",
            Regime::Mixed => "mixed",
        }
    }
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Classifies by support only; only the transmission side `k ≥ 0` counts.
pub fn classify_regime(
    density: &dyn SpectralDensity,
    kappa_min: f64,
    kappa_max: f64,
) -> Result<Regime> {
    if kappa_min > kappa_max {
        return Err(Error::KappaOrder {
            kappa_min,
            kappa_max,
        });
    }
    if kappa_min < 0.0 {
        return Err(invalid("kappa_min", "must be non-negative"));
    }
    let s = density.support();
    let lo = s.lo.max(0.0);
    let hi = s.hi;
    Ok(if lo >= kappa_max && hi > lo {
        Regime::NonTunneling
    } else if hi <= kappa_min {
        Regime::FullTunneling
    } else if hi <= kappa_max {
        Regime::PartialTunneling
    } else {
        Regime::Mixed
    })
}
