//! Quantum barrier traversal times from time-of-arrival operators.
//!
//! The traversal time of a wave packet across a barrier splits into a
//! vanishing full-tunneling part, a partial-traversal part carried by the
//! momentum components that pass over only some of the barrier, and an
//! above-barrier part:
//!
//! ```text
//! τ_trav = τ_tun + τ_part + τ_non,   τ_tun = 0
//! ```
//!
//! * [`wavepackets`]: incident states, momentum densities, regime classification.
//! * [`barriers`]: piecewise-constant stacks, smooth profiles, attoclock barriers.
//! * [`quadrature`]: singular, oscillatory and `(x, k)` double integrals.
//! * [`traversal`]: dwell, traversal and decomposed times, attoclock scans.
//! * [`oracle`]: the Weyl time-kernel and ζ-space arrival-time difference,
//!   an independent route to the same quantities.
//! * [`cli`]: scenario files, CSV and plot-data output.

// `!(x > 0.0)` is used on purpose so that NaN fails validation. Quadrature
// nodes are kept at their published precision.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod barriers;
pub mod cli;
pub mod error;
pub mod oracle;
pub mod quadrature;
pub mod special;
pub mod traversal;
pub mod wavepackets;

pub use barriers::{AttoclockBarrier, AttoclockGeometry, BarrierStack, Profile, Segment, SmoothBarrier};
pub use error::{Error, Result};
pub use quadrature::{QuadResult, QuadSpec};
pub use traversal::{TraversalReport, TAU_TUN};
pub use wavepackets::{
    classify_regime, GaussianPacket, MomentumDensity, Regime, SpectralDensity, TruncatedMomentumDensity,
    UnitSystem,
};

/// Closed interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn width(&self) -> f64 {
        (self.hi - self.lo).max(0.0)
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }

    pub fn intersect(&self, other: &Interval) -> Option<Interval> {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        (hi > lo).then(|| Interval::new(lo, hi))
    }
}
