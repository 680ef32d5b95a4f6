//! Barrier systems: piecewise-constant stacks, smooth compact-support
//! profiles, and the field-tilted Coulomb barrier of strong-field ionization.
//!
//! Geometry follows the detector picture: the arrival point is the origin,
//! the barrier occupies `[−a, −b]` with `b > 0`, and a stack lists its
//! segments from the far edge `−a` toward the detector. Smooth profiles are
//! written in the distance coordinate `x = −q ∈ [b, a]`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::wavepackets::UnitSystem;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Segment {
    #[serde(rename = "V")]
    pub height: f64,
    #[serde(rename = "w")]
    pub width: f64,
}

impl Segment {
    pub fn new(height: f64, width: f64) -> Self {
        Self { height, width }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BarrierStack {
    segments: Vec<Segment>,
    right_edge: f64,
    units: UnitSystem,
}

impl BarrierStack {
    pub fn new(segments: Vec<Segment>, right_edge: f64, units: UnitSystem) -> Result<Self> {
        units.validate()?;
        if segments.is_empty() {
            return Err(invalid("barrier.segments", "at least one segment is required"));
        }
        if segments.iter().any(|s| !(s.width > 0.0 && s.width.is_finite())) {
            return Err(invalid("barrier.segments.w", "widths must be positive"));
        }
        if segments.iter().any(|s| !(s.height >= 0.0 && s.height.is_finite())) {
            return Err(invalid("barrier.segments.V", "heights must be non-negative"));
        }
        if !(right_edge > 0.0 && right_edge.is_finite()) {
            return Err(invalid("barrier.b", "must be positive"));
        }
        Ok(Self {
            segments,
            right_edge,
            units,
        })
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn units(&self) -> UnitSystem {
        self.units
    }

    /// Distance `b` from the barrier's near edge to the arrival point.
    pub fn right_edge(&self) -> f64 {
        self.right_edge
    }

    pub fn total_width(&self) -> f64 {
        self.segments.iter().map(|s| s.width).sum()
    }

    /// `a = b + Σ wₙ`.
    pub fn far_edge(&self) -> f64 {
        self.right_edge + self.total_width()
    }

    /// Free-flight comparison length `L`, fixed to `a`.
    pub fn comparison_length(&self) -> f64 {
        self.far_edge()
    }

    /// `κₙ = sqrt(2μVₙ) / ħ`.
    pub fn kappa(&self, n: usize) -> Result<f64> {
        self.segments
            .get(n)
            .map(|s| self.units.kappa(s.height))
            .ok_or(Error::SegmentIndex {
                index: n,
                len: self.segments.len(),
            })
    }

    pub fn kappas(&self) -> Vec<f64> {
        self.segments.iter().map(|s| self.units.kappa(s.height)).collect()
    }

    pub fn kappa_max(&self) -> f64 {
        self.kappas().into_iter().fold(0.0, f64::max)
    }

    pub fn kappa_min(&self) -> f64 {
        self.kappas().into_iter().fold(f64::INFINITY, f64::min)
    }

    /// `κ₂₁² = 2μ(V₂ − V₁) / ħ²` for segments `first` and `second`; may be negative.
    pub fn kappa_sq_difference(&self, first: usize, second: usize) -> Result<f64> {
        let get = |i: usize| {
            self.segments.get(i).ok_or(Error::SegmentIndex {
                index: i,
                len: self.segments.len(),
            })
        };
        let (v1, v2) = (get(first)?.height, get(second)?.height);
        Ok(2.0 * self.units.mass * (v2 - v1) / (self.units.hbar * self.units.hbar))
    }

    /// Interval `[q_left, q_right]` of segment `n` in the detector coordinate.
    pub fn segment_bounds(&self, n: usize) -> (f64, f64) {
        let left = -self.far_edge() + self.segments[..n].iter().map(|s| s.width).sum::<f64>();
        (left, left + self.segments[n].width)
    }

    /// Segment edges from `−a` to `−b`.
    pub fn edges(&self) -> Vec<f64> {
        let mut edges = vec![-self.far_edge()];
        let mut q = -self.far_edge();
        for s in &self.segments {
            q += s.width;
            edges.push(q);
        }
        // the last edge is −b up to rounding
        if let Some(last) = edges.last_mut() {
            *last = -self.right_edge;
        }
        edges
    }

    /// `V(q)`, zero outside `[−a, −b]`.
    pub fn potential(&self, q: f64) -> f64 {
        let edges = self.edges();
        if q < edges[0] || q > edges[edges.len() - 1] {
            return 0.0;
        }
        let i = edges.partition_point(|e| *e <= q).clamp(1, self.segments.len());
        self.segments[i - 1].height
    }
}

/// Potential profile of a smooth barrier, in the distance coordinate `x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum Profile {
    Constant {
        height: f64,
    },
    /// Gaussian of standard deviation `width` centred on the support,
    /// shifted and rescaled so it vanishes at the support edges and peaks at `height`.
    GaussianBump {
        height: f64,
        width: f64,
    },
    /// Linear interpolation through `(x, v)` nodes.
    Sampled {
        x: Vec<f64>,
        v: Vec<f64>,
    },
    /// `I_p − Z_eff/x − E x`, the field-tilted Coulomb barrier measured
    /// from the bound-state energy.
    Attoclock {
        z_eff: f64,
        i_p: f64,
        field: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmoothBarrier {
    profile: Profile,
    support: (f64, f64),
    v_max: f64,
    v_min: f64,
    units: UnitSystem,
}

impl SmoothBarrier {
    pub fn new(profile: Profile, support: (f64, f64), units: UnitSystem) -> Result<Self> {
        units.validate()?;
        let (b, a) = support;
        if !(b > 0.0 && a > b && a.is_finite()) {
            return Err(invalid("barrier.support", "need 0 < b < a"));
        }
        match &profile {
            Profile::Constant { height } if !(*height >= 0.0) => {
                return Err(invalid("barrier.profile.height", "must be non-negative"));
            }
            Profile::GaussianBump { height, width } => {
                if !(*height >= 0.0) {
                    return Err(invalid("barrier.profile.height", "must be non-negative"));
                }
                if !(*width > 0.0) {
                    return Err(invalid("barrier.profile.width", "must be positive"));
                }
            }
            Profile::Sampled { x, v } => {
                if x.len() < 2 || x.len() != v.len() {
                    return Err(invalid("barrier.profile.x", "need at least two (x, v) nodes of equal length"));
                }
                if x.windows(2).any(|w| !(w[1] > w[0])) {
                    return Err(invalid("barrier.profile.x", "nodes must be strictly increasing"));
                }
                if v.iter().any(|v| !(*v >= 0.0)) {
                    return Err(invalid("barrier.profile.v", "values must be non-negative"));
                }
                if x[0] > b || x[x.len() - 1] < a {
                    return Err(invalid("barrier.profile.x", "nodes must cover the support"));
                }
            }
            Profile::Attoclock { .. } => {}
            _ => {}
        }
        let (v_min, v_max) = extremes(&profile, support);
        Ok(Self {
            profile,
            support,
            v_max,
            v_min,
            units,
        })
    }

    pub fn profile(&self) -> &Profile {
        &self.profile
    }

    /// `(b, a)`.
    pub fn support(&self) -> (f64, f64) {
        self.support
    }

    pub fn units(&self) -> UnitSystem {
        self.units
    }

    pub fn length(&self) -> f64 {
        self.support.1 - self.support.0
    }

    /// Comparison length `L = a`.
    pub fn comparison_length(&self) -> f64 {
        self.support.1
    }

    pub fn v_max(&self) -> f64 {
        self.v_max
    }

    pub fn v_min(&self) -> f64 {
        self.v_min
    }

    pub fn kappa_max(&self) -> f64 {
        self.units.kappa(self.v_max)
    }

    pub fn kappa_min(&self) -> f64 {
        self.units.kappa(self.v_min)
    }

    /// `V(x)`, zero outside the support.
    pub fn potential(&self, x: f64) -> f64 {
        let (b, a) = self.support;
        if x < b || x > a {
            return 0.0;
        }
        profile_value(&self.profile, self.support, x)
    }

    pub fn kappa(&self, x: f64) -> f64 {
        self.units.kappa(self.potential(x))
    }

    /// Equal-width stack with heights sampled at segment midpoints.
    pub fn discretize(&self, n_segments: usize) -> Result<BarrierStack> {
        if n_segments == 0 {
            return Err(invalid("n_segments", "must be at least 1"));
        }
        let (b, a) = self.support;
        let h = (a - b) / n_segments as f64;
        // segment 0 is the far one, centred at x = a − h/2
        let segments = (0..n_segments)
            .map(|i| Segment::new(self.potential(a - (i as f64 + 0.5) * h), h))
            .collect();
        BarrierStack::new(segments, b, self.units)
    }
}

fn profile_value(profile: &Profile, support: (f64, f64), x: f64) -> f64 {
    let (b, a) = support;
    match profile {
        Profile::Constant { height } => *height,
        Profile::GaussianBump { height, width } => {
            let c = 0.5 * (a + b);
            let g = |y: f64| (-(y - c).powi(2) / (2.0 * width * width)).exp();
            let edge = g(a);
            (height * (g(x) - edge) / (1.0 - edge)).max(0.0)
        }
        Profile::Sampled { x: xs, v } => {
            let i = xs.partition_point(|p| *p <= x).clamp(1, xs.len() - 1);
            let t = (x - xs[i - 1]) / (xs[i] - xs[i - 1]);
            v[i - 1] + t * (v[i] - v[i - 1])
        }
        Profile::Attoclock { z_eff, i_p, field } => (i_p - z_eff / x - field * x).max(0.0),
    }
}

fn extremes(profile: &Profile, support: (f64, f64)) -> (f64, f64) {
    let (b, a) = support;
    match profile {
        Profile::Constant { height } => (*height, *height),
        Profile::GaussianBump { height, .. } => (0.0, *height),
        Profile::Sampled { x, .. } => {
            let mut pts: Vec<f64> = x.iter().copied().filter(|p| *p > b && *p < a).collect();
            pts.push(b);
            pts.push(a);
            let vals: Vec<f64> = pts.iter().map(|p| profile_value(profile, support, *p)).collect();
            (
                vals.iter().cloned().fold(f64::INFINITY, f64::min),
                vals.iter().cloned().fold(0.0, f64::max),
            )
        }
        Profile::Attoclock { z_eff, field, .. } => {
            let peak = (z_eff / field).sqrt().clamp(b, a);
            let v = profile_value(profile, support, peak);
            let edges = profile_value(profile, support, b).min(profile_value(profile, support, a));
            (edges, v)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttoclockBarrier {
    pub z_eff: f64,
    pub i_p: f64,
    pub field: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttoclockGeometry {
    /// Inner turning point, where the electron enters the barrier.
    pub d_minus: f64,
    /// Outer turning point.
    pub d_plus: f64,
    /// Classical exit `I_p / E`.
    pub d_exit: f64,
}

impl AttoclockBarrier {
    pub fn new(z_eff: f64, i_p: f64, field: f64) -> Result<Self> {
        if !(z_eff > 0.0) {
            return Err(invalid("barrier.z_eff", "must be positive"));
        }
        if !(i_p > 0.0) {
            return Err(invalid("barrier.i_p", "must be positive"));
        }
        if !(field > 0.0) {
            return Err(invalid("barrier.field", "must be positive"));
        }
        Ok(Self { z_eff, i_p, field })
    }

    /// Helium parameters with the given field strength.
    pub fn helium(field: f64) -> Self {
        Self {
            z_eff: 1.6875,
            i_p: 0.90357,
            field,
        }
    }

    pub fn with_field(&self, field: f64) -> Self {
        Self { field, ..*self }
    }

    /// Field `I_p² / (4 Z_eff)` at which the barrier top reaches `−I_p`.
    pub fn threshold_field(&self) -> f64 {
        self.i_p * self.i_p / (4.0 * self.z_eff)
    }

    /// `V_eff(q) = −Z_eff / q − E q`.
    pub fn effective_potential(&self, q: f64) -> f64 {
        -self.z_eff / q - self.field * q
    }

    /// Position of the barrier top, `sqrt(Z_eff / E)`.
    pub fn peak_position(&self) -> f64 {
        (self.z_eff / self.field).sqrt()
    }

    /// Barrier height above the bound level, `I_p − 2 sqrt(Z_eff E)`.
    pub fn peak_height(&self) -> f64 {
        self.i_p - 2.0 * (self.z_eff * self.field).sqrt()
    }

    /// Turning points are the roots of `E q² − I_p q + Z_eff = 0`.
    pub fn geometry(&self) -> Result<AttoclockGeometry> {
        let disc = self.i_p * self.i_p - 4.0 * self.field * self.z_eff;
        if disc < 0.0 {
            return Err(Error::OverBarrierField {
                field: self.field,
                threshold: self.threshold_field(),
            });
        }
        let root = disc.sqrt();
        let d_plus = (self.i_p + root) / (2.0 * self.field);
        // product of roots is Z_eff / E; avoids cancellation in the small root
        let d_minus = 2.0 * self.z_eff / (self.i_p + root);
        Ok(AttoclockGeometry {
            d_minus,
            d_plus,
            d_exit: self.i_p / self.field,
        })
    }

    /// Barrier on `[d₋, d₊]` with energies measured from the bound level `−I_p`.
    pub fn to_smooth(&self, units: UnitSystem) -> Result<SmoothBarrier> {
        let g = self.geometry()?;
        if !(g.d_plus > g.d_minus) {
            return Err(invalid("barrier.field", "barrier has zero width at threshold"));
        }
        SmoothBarrier::new(
            Profile::Attoclock {
                z_eff: self.z_eff,
                i_p: self.i_p,
                field: self.field,
            },
            (g.d_minus, g.d_plus),
            units,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> UnitSystem {
        UnitSystem::default()
    }

    #[test]
    fn kappa_values() {
        let s = BarrierStack::new(vec![Segment::new(2.0, 1.0), Segment::new(0.0, 1.0)], 1.0, unit()).unwrap();
        assert_eq!(s.kappa(0).unwrap(), 2.0);
        assert_eq!(s.kappa(1).unwrap(), 0.0);
        let heavy = BarrierStack::new(vec![Segment::new(1.0, 1.0)], 1.0, UnitSystem::new(1.0, 2.0).unwrap()).unwrap();
        assert_eq!(heavy.kappa(0).unwrap(), 2.0);
        assert!(matches!(s.kappa(5), Err(Error::SegmentIndex { index: 5, len: 2 })));
    }

    #[test]
    fn stack_geometry() {
        let s = BarrierStack::new(vec![Segment::new(1.0, 2.0), Segment::new(2.0, 0.5)], 1.5, unit()).unwrap();
        assert_eq!(s.far_edge(), 4.0);
        assert_eq!(s.comparison_length(), 4.0);
        assert_eq!(s.segment_bounds(0), (-4.0, -2.0));
        assert_eq!(s.segment_bounds(1), (-2.0, -1.5));
        assert_eq!(s.potential(-3.0), 1.0);
        assert_eq!(s.potential(-1.7), 2.0);
        assert_eq!(s.potential(-1.0), 0.0);
        assert_eq!(s.potential(-5.0), 0.0);
        assert_eq!(s.kappa_sq_difference(0, 1).unwrap(), 2.0);
        assert_eq!(s.kappa_min(), 2f64.sqrt());
        assert_eq!(s.kappa_max(), 2.0);
    }

    #[test]
    fn stack_validation() {
        assert!(BarrierStack::new(vec![], 1.0, unit()).is_err());
        assert!(BarrierStack::new(vec![Segment::new(1.0, 0.0)], 1.0, unit()).is_err());
        assert!(BarrierStack::new(vec![Segment::new(-1.0, 1.0)], 1.0, unit()).is_err());
        assert!(BarrierStack::new(vec![Segment::new(1.0, 1.0)], 0.0, unit()).is_err());
    }

    #[test]
    fn discretize_constant_profile() {
        let s = SmoothBarrier::new(Profile::Constant { height: 0.7 }, (1.0, 3.0), unit()).unwrap();
        let stack = s.discretize(5).unwrap();
        assert_eq!(stack.segments().len(), 5);
        for seg in stack.segments() {
            assert_eq!(seg.height, 0.7);
            assert!((seg.width - 0.4).abs() < 1e-15);
        }
        assert!((stack.far_edge() - 3.0).abs() < 1e-14);
        assert!(s.discretize(0).is_err());
    }

    #[test]
    fn discretize_single_segment_uses_midpoint() {
        let s = SmoothBarrier::new(Profile::GaussianBump { height: 2.0, width: 0.5 }, (1.0, 5.0), unit()).unwrap();
        let stack = s.discretize(1).unwrap();
        assert_eq!(stack.segments()[0].height, 2.0);
        assert_eq!(stack.segments()[0].width, 4.0);
    }

    #[test]
    fn gaussian_bump_vanishes_at_edges() {
        let s = SmoothBarrier::new(Profile::GaussianBump { height: 2.0, width: 0.8 }, (1.0, 5.0), unit()).unwrap();
        assert!(s.potential(1.0).abs() < 1e-15);
        assert!(s.potential(5.0).abs() < 1e-15);
        assert_eq!(s.potential(3.0), 2.0);
        assert_eq!(s.kappa_min(), 0.0);
        assert_eq!(s.kappa_max(), 2.0);
    }

    #[test]
    fn discretize_preserves_area_to_second_order() {
        let s = SmoothBarrier::new(Profile::GaussianBump { height: 1.0, width: 0.7 }, (1.0, 4.0), unit()).unwrap();
        let spec = crate::quadrature::QuadSpec::default();
        let area = crate::quadrature::integrate(|x| s.potential(x), 1.0, 4.0, &spec).value;
        let err = |n: usize| {
            let st = s.discretize(n).unwrap();
            (st.segments().iter().map(|g| g.height * g.width).sum::<f64>() - area).abs()
        };
        let (e1, e2) = (err(32), err(64));
        assert!(e2 < e1 / 3.5, "{e1} {e2}");
    }

    // Oracle: bisection on V_eff(q) + I_p = 0 inside each monotone branch.
    fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64) -> f64 {
        let flo = f(lo);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if (f(mid) > 0.0) == (flo > 0.0) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn helium_geometry() {
        let bar = AttoclockBarrier::helium(0.05);
        let g = bar.geometry().unwrap();
        let shifted = |q: f64| bar.effective_potential(q) + bar.i_p;
        let peak = bar.peak_position();
        let lo = bisect(shifted, 1e-3, peak);
        let hi = bisect(shifted, peak, 1e3);
        assert!((g.d_minus - lo).abs() < 1e-10);
        assert!((g.d_plus - hi).abs() < 1e-10);
        assert!((g.d_minus - 2.115_159_956_766).abs() < 1e-9);
        assert!((g.d_plus - 15.956_240_043_234).abs() < 1e-9);
        assert!((g.d_exit - 18.0714).abs() < 1e-12);
        assert!(shifted(g.d_minus).abs() < 1e-10 && shifted(g.d_plus).abs() < 1e-10);
        assert!(g.d_minus < peak && peak < g.d_plus);
    }

    #[test]
    fn geometry_at_and_above_threshold() {
        let base = AttoclockBarrier::helium(0.05);
        let at = base.with_field(base.threshold_field());
        let g = at.geometry().unwrap();
        let double = 2.0 * at.z_eff / at.i_p;
        assert!((g.d_minus - double).abs() < 1e-6 && (g.d_plus - double).abs() < 1e-6);
        assert!(matches!(
            base.with_field(0.13).geometry(),
            Err(Error::OverBarrierField { .. })
        ));
    }

    #[test]
    fn attoclock_smooth_profile() {
        let bar = AttoclockBarrier::helium(0.05);
        let s = bar.to_smooth(unit()).unwrap();
        let (b, a) = s.support();
        assert!(s.potential(b).abs() < 1e-12 && s.potential(a).abs() < 1e-12);
        assert!((s.v_max() - 0.322_622_498_068_887).abs() < 1e-12);
        // dense scan confirms the analytic maximum and its position
        let n = 200_000;
        let (mut best_x, mut best_v) = (b, 0.0);
        for i in 0..=n {
            let x = b + (a - b) * i as f64 / n as f64;
            let v = s.potential(x);
            assert!(v >= 0.0 && s.kappa(x).is_finite());
            if v > best_v {
                best_v = v;
                best_x = x;
            }
        }
        assert!((best_v - s.v_max()).abs() < 1e-9);
        assert!((best_x - bar.peak_position()).abs() < 1e-3);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn kappa_monotone_in_height(v1 in 0.0..10.0_f64, dv in 0.0..10.0_f64, mass in 0.1..5.0_f64) {
                let u = UnitSystem::new(1.0, mass).unwrap();
                prop_assert!(u.kappa(v1) <= u.kappa(v1 + dv));
            }

            #[test]
            fn attoclock_turning_points_are_roots(field in 0.005..0.12_f64) {
                let bar = AttoclockBarrier::helium(field);
                let g = bar.geometry().unwrap();
                prop_assert!((bar.effective_potential(g.d_minus) + bar.i_p).abs() < 1e-10);
                prop_assert!((bar.effective_potential(g.d_plus) + bar.i_p).abs() < 1e-10);
                prop_assert!(g.d_minus <= bar.peak_position() && bar.peak_position() <= g.d_plus);
            }
        }
    }
}
