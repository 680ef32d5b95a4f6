//! Independent route through the time-of-arrival operator itself.
//!
//! The Weyl-quantized time kernel factor
//!
//! ```text
//! T̃(η, ζ) = ½ ∫₀^η ds ₀F₁(;1; (μ/2ħ²)(V(η) − V(s)) ζ²)
//! ```
//!
//! is integrated numerically and compared against closed-form pieces for a
//! contiguous two-segment barrier. The far-left piece then gives the
//! arrival-time difference in ζ-space,
//!
//! ```text
//! Δτ = (L/v₀) Im Q* − Σₙ (wₙ/v₀) Im Rₙ*
//! Q*  = k₀ ∫₀^∞ Φ(ζ) e^{ik₀ζ} dζ,   Rₙ* = k₀ ∫₀^∞ Φ(ζ) J0(κₙζ) e^{ik₀ζ} dζ
//! ```
//!
//! whose barrier term must reproduce the k-space dwell time.

use num_complex::Complex64;

use crate::barriers::BarrierStack;
use crate::error::{invalid, Result};
use crate::quadrature::{integrate_oscillatory_damped, integrate_with_breaks, OscKernel, QuadResult, QuadSpec};
use crate::special::{bessel_i0, bessel_j0, hyp0f1_unit};
use crate::traversal::dwell_time;
use crate::wavepackets::{GaussianPacket, UnitSystem, DEFAULT_N_SIGMAS};

/// Numeric Weyl time kernel factor for a potential `V(s)` whose
/// discontinuities are listed in `breaks`.
pub fn weyl_tkf_numeric<V: Fn(f64) -> f64>(
    potential: V,
    breaks: &[f64],
    eta: f64,
    zeta: f64,
    units: UnitSystem,
    spec: &QuadSpec,
) -> QuadResult {
    let scale = units.mass / (2.0 * units.hbar * units.hbar) * zeta * zeta;
    let v_eta = potential(eta);
    let (lo, hi) = if eta < 0.0 { (eta, 0.0) } else { (0.0, eta) };
    let mut points = vec![0.0];
    let mut inner: Vec<f64> = breaks.iter().copied().filter(|b| *b > lo && *b < hi).collect();
    if eta < 0.0 {
        inner.sort_by(|a, b| b.total_cmp(a));
    } else {
        inner.sort_by(|a, b| a.total_cmp(b));
    }
    points.extend(inner);
    points.push(eta);
    integrate_with_breaks(|s| hyp0f1_unit(scale * (v_eta - potential(s))), &points, spec).scale(0.5)
}

/// Numeric kernel for a stack, using its own edges as break points.
pub fn stack_tkf_numeric(stack: &BarrierStack, eta: f64, zeta: f64, spec: &QuadSpec) -> QuadResult {
    weyl_tkf_numeric(|s| stack.potential(s), &stack.edges(), eta, zeta, stack.units(), spec)
}

/// Which segment of a two-segment stack plays the role of "barrier 1".
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Labeling {
    /// Barrier 1 is the far segment `(−a, −l)`, barrier 2 the near one.
    FarFirst,
    /// Barrier 1 is the segment adjacent to the detector side `(−l, −b)`.
    NearFirst,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelParams {
    pub kappa1: f64,
    pub kappa2: f64,
    /// `κ₂₁² = 2μ(V₂ − V₁)/ħ²`, signed.
    pub kappa21_sq: f64,
    pub w1: f64,
    pub w2: f64,
    pub b: f64,
    /// Length in the far-left piece `(η + L)/2`.
    pub length: f64,
}

impl KernelParams {
    /// Parameters of a two-segment stack. `length` is the barrier's total
    /// width, which is what the numeric kernel requires far to the left.
    pub fn from_stack(stack: &BarrierStack, labeling: Labeling) -> Result<Self> {
        if stack.segments().len() != 2 {
            return Err(invalid("barrier.segments", "closed-form kernel pieces need exactly two segments"));
        }
        let (one, two) = match labeling {
            Labeling::FarFirst => (0, 1),
            Labeling::NearFirst => (1, 0),
        };
        let segs = stack.segments();
        let kappas = stack.kappas();
        Ok(Self {
            kappa1: kappas[one],
            kappa2: kappas[two],
            kappa21_sq: stack.kappa_sq_difference(one, two)?,
            w1: segs[one].width,
            w2: segs[two].width,
            b: stack.right_edge(),
            length: stack.total_width(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Region {
    I,
    II,
    III,
    IV,
}

/// Closed-form kernel expressions. `II`–`IV` are the printed forms;
/// `IIAdjacent` replaces the `w₁` prefactor of `II` by `b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PieceForm {
    I,
    II,
    IIAdjacent,
    III,
    IV,
}

impl PieceForm {
    pub fn region(&self) -> Region {
        match self {
            PieceForm::I => Region::I,
            PieceForm::II | PieceForm::IIAdjacent => Region::II,
            PieceForm::III => Region::III,
            PieceForm::IV => Region::IV,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelPiece {
    pub form: PieceForm,
    pub params: KernelParams,
}

impl KernelPiece {
    pub fn region(&self) -> Region {
        self.form.region()
    }

    /// `T̃(η, ζ)` from the closed form. Depends on `ζ` only through `|ζ|`.
    pub fn eval(&self, eta: f64, zeta: f64) -> f64 {
        let p = &self.params;
        let z = zeta.abs();
        match self.form {
            PieceForm::I => eta / 2.0,
            PieceForm::II => (eta + p.b) / 2.0 - p.w1 / 2.0 * bessel_i0(p.kappa1 * z),
            PieceForm::IIAdjacent => (eta + p.b) / 2.0 - p.b / 2.0 * bessel_i0(p.kappa1 * z),
            PieceForm::III => {
                (eta + p.b + p.w1) / 2.0
                    - p.b / 2.0 * bessel_i0(p.kappa2 * z)
                    - p.w1 / 2.0 * hyp0f1_unit(p.kappa21_sq * z * z / 4.0)
            }
            PieceForm::IV => {
                (eta + p.length) / 2.0
                    - p.w1 / 2.0 * bessel_j0(p.kappa1 * z)
                    - p.w2 / 2.0 * bessel_j0(p.kappa2 * z)
            }
        }
    }
}

/// `η`-intervals of a two-segment stack, from left to right.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Interval {
    LeftFree,
    FarSegment,
    NearSegment,
    RightFree,
}

impl Interval {
    pub const ALL: [Interval; 4] = [
        Interval::LeftFree,
        Interval::FarSegment,
        Interval::NearSegment,
        Interval::RightFree,
    ];

    pub fn bounds(&self, stack: &BarrierStack) -> (f64, f64) {
        let e = stack.edges();
        match self {
            Interval::LeftFree => (e[0] - stack.total_width().max(1.0), e[0]),
            Interval::FarSegment => (e[0], e[1]),
            Interval::NearSegment => (e[1], e[2]),
            Interval::RightFree => (e[2], 0.0),
        }
    }

    pub fn locate(stack: &BarrierStack, eta: f64) -> Option<Interval> {
        let e = stack.edges();
        if eta < e[0] {
            Some(Interval::LeftFree)
        } else if eta < e[1] {
            Some(Interval::FarSegment)
        } else if eta < e[2] {
            Some(Interval::NearSegment)
        } else if eta <= 0.0 {
            Some(Interval::RightFree)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CandidateFit {
    pub label: String,
    pub piece: KernelPiece,
    /// Max of `|numeric − closed| / (1 + |closed|)` over the samples.
    pub max_deviation: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegionAssignment {
    pub interval: Interval,
    pub best: CandidateFit,
    /// Best printed form (excluding corrected variants) and its deviation.
    pub best_printed: CandidateFit,
    pub matched: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationTable {
    pub assignments: Vec<RegionAssignment>,
    pub tolerance: f64,
}

impl CalibrationTable {
    pub fn piece_for(&self, interval: Interval) -> Option<&KernelPiece> {
        self.assignments
            .iter()
            .find(|a| a.interval == interval)
            .map(|a| &a.best.piece)
    }

    /// Intervals where no printed piece matched within tolerance.
    pub fn mismatches(&self) -> Vec<&RegionAssignment> {
        self.assignments
            .iter()
            .filter(|a| a.best_printed.max_deviation > self.tolerance)
            .collect()
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for a in &self.assignments {
            out.push_str(&format!(
                "{:?}: best {} (dev {:.3e}); best printed {} (dev {:.3e}){}\n",
                a.interval,
                a.best.label,
                a.best.max_deviation,
                a.best_printed.label,
                a.best_printed.max_deviation,
                if a.best_printed.max_deviation > self.tolerance {
                    "  <- printed form does not match"
                } else {
                    ""
                }
            ));
        }
        out
    }
}

/// Default matching tolerance for calibration.
pub const CALIBRATION_TOL: f64 = 1e-8;

fn candidates(stack: &BarrierStack) -> Result<Vec<(String, KernelPiece, bool)>> {
    let mut out = Vec::new();
    for labeling in [Labeling::FarFirst, Labeling::NearFirst] {
        let params = KernelParams::from_stack(stack, labeling)?;
        for form in [PieceForm::I, PieceForm::II, PieceForm::III, PieceForm::IV, PieceForm::IIAdjacent] {
            let printed = form != PieceForm::IIAdjacent;
            out.push((format!("{form:?}/{labeling:?}"), KernelPiece { form, params }, printed));
        }
        // (η + L)/2 with L = a instead of the total width
        let far_edge = KernelParams {
            length: stack.far_edge(),
            ..params
        };
        out.push((
            format!("IV(L=a)/{labeling:?}"),
            KernelPiece {
                form: PieceForm::IV,
                params: far_edge,
            },
            true,
        ));
    }
    Ok(out)
}

/// Matches every candidate closed form against the numeric kernel on each
/// `η`-interval of a two-segment stack and keeps the best fit.
pub fn region_map_calibration(stack: &BarrierStack, zetas: &[f64], spec: &QuadSpec) -> Result<CalibrationTable> {
    let cands = candidates(stack)?;
    let mut assignments = Vec::new();
    for interval in Interval::ALL {
        let (lo, hi) = interval.bounds(stack);
        let etas: Vec<f64> = (1..=5).map(|i| lo + (hi - lo) * i as f64 / 6.0).collect();
        let numeric: Vec<Vec<f64>> = etas
            .iter()
            .map(|&eta| zetas.iter().map(|&z| stack_tkf_numeric(stack, eta, z, spec).value).collect())
            .collect();
        let fits: Vec<(CandidateFit, bool)> = cands
            .iter()
            .map(|(label, piece, printed)| {
                let mut dev: f64 = 0.0;
                for (i, &eta) in etas.iter().enumerate() {
                    for (j, &z) in zetas.iter().enumerate() {
                        let closed = piece.eval(eta, z);
                        dev = dev.max((numeric[i][j] - closed).abs() / (1.0 + closed.abs()));
                    }
                }
                (
                    CandidateFit {
                        label: label.clone(),
                        piece: *piece,
                        max_deviation: dev,
                    },
                    *printed,
                )
            })
            .collect();
        let best = pick(fits.iter().map(|(f, _)| f));
        let best_printed = pick(fits.iter().filter(|(_, p)| *p).map(|(f, _)| f));
        assignments.push(RegionAssignment {
            interval,
            matched: best.max_deviation <= CALIBRATION_TOL,
            best,
            best_printed,
        });
    }
    Ok(CalibrationTable {
        assignments,
        tolerance: CALIBRATION_TOL,
    })
}

fn pick<'a>(fits: impl Iterator<Item = &'a CandidateFit>) -> CandidateFit {
    fits.min_by(|a, b| a.max_deviation.total_cmp(&b.max_deviation))
        .cloned()
        .expect("candidate list is never empty")
}

/// Closed-form kernel at `η` using a calibrated region map.
pub fn contiguous_tkf(table: &CalibrationTable, stack: &BarrierStack, eta: f64, zeta: f64) -> Option<f64> {
    let interval = Interval::locate(stack, eta)?;
    table.piece_for(interval).map(|p| p.eval(eta, zeta))
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeltaTauBreakdown {
    pub q_star: Complex64,
    pub r_star: Vec<Complex64>,
    pub delta_tau: f64,
    /// `(L/v₀) Im Q*`.
    pub tau_free_part: f64,
    /// `Σ (wₙ/v₀) Im Rₙ*`.
    pub tau_barrier_part: f64,
    pub length: f64,
    pub v0: f64,
    pub error_estimate: f64,
    pub converged: bool,
    pub warnings: Vec<String>,
}

/// Arrival-time difference from the far-left kernel piece, in ζ-space.
pub fn delta_tau_zeta(packet: &GaussianPacket, stack: &BarrierStack, spec: &QuadSpec) -> Result<DeltaTauBreakdown> {
    let units = stack.units();
    let k0 = packet.k0;
    let v0 = units.speed(k0);
    let phi = |z: f64| packet.autocorrelation(z);
    let q = integrate_oscillatory_damped(phi, OscKernel::Plain, k0, spec);
    let rs: Vec<_> = stack
        .kappas()
        .into_iter()
        .map(|kappa| integrate_oscillatory_damped(phi, OscKernel::BesselJ0(kappa), k0, spec))
        .collect();
    let length = stack.total_width();
    let tau_free_part = length / v0 * q.value.im;
    let tau_barrier_part: f64 = stack
        .segments()
        .iter()
        .zip(&rs)
        .map(|(s, r)| s.width / v0 * r.value.im)
        .sum();
    let error_estimate = length / v0 * q.error_estimate
        + stack
            .segments()
            .iter()
            .zip(&rs)
            .map(|(s, r)| s.width / v0 * r.error_estimate)
            .sum::<f64>();
    let mut warnings = Vec::new();
    if !packet.clear_of_barrier(stack.far_edge(), DEFAULT_N_SIGMAS) {
        warnings.push(format!(
            "packet overlaps the barrier: q0 + {DEFAULT_N_SIGMAS} sigma >= -a = {}",
            -stack.far_edge()
        ));
    }
    Ok(DeltaTauBreakdown {
        q_star: q.value,
        r_star: rs.iter().map(|r| r.value).collect(),
        delta_tau: tau_free_part - tau_barrier_part,
        tau_free_part,
        tau_barrier_part,
        length,
        v0,
        error_estimate,
        converged: q.converged && rs.iter().all(|r| r.converged),
        warnings,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathEquivalence {
    pub zeta_space: f64,
    pub k_space: f64,
    pub relative_deviation: f64,
}

/// Compares the ζ-space barrier term with the k-space dwell time.
pub fn path_equivalence(packet: &GaussianPacket, stack: &BarrierStack, spec: &QuadSpec) -> Result<PathEquivalence> {
    let zeta = delta_tau_zeta(packet, stack, spec)?.tau_barrier_part;
    let k = dwell_time(&packet.density(), stack, spec)?.value;
    Ok(PathEquivalence {
        zeta_space: zeta,
        k_space: k,
        relative_deviation: if zeta == k { 0.0 } else { ((zeta - k) / k).abs() },
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FreeToa {
    /// Richardson-extrapolated expectation value.
    pub value: f64,
    /// Value at the finer of the two grids.
    pub fine: f64,
    /// Value at the coarser grid.
    pub coarse: f64,
    /// Imaginary part left over by the quadrature; zero for a Hermitian kernel.
    pub imaginary_residual: f64,
}

/// `⟨ψ|T̂_F|ψ⟩` with `T_F(q, q') = (q + q')/4`, on uniform grids.
///
/// The `q'` integral is split at `q` through running sums, so each grid
/// evaluation costs O(n). Two grids (n and 2n intervals) are combined by
/// Richardson extrapolation.
pub fn free_toa_expectation(packet: &GaussianPacket, units: UnitSystem, intervals: usize) -> Result<FreeToa> {
    units.validate()?;
    if packet.q0 >= 0.0 {
        return Err(invalid("packet.q0", "must be negative (left of the arrival point)"));
    }
    if intervals < 16 {
        return Err(invalid("intervals", "need at least 16 grid intervals"));
    }
    let coarse = free_toa_on_grid(packet, units, intervals);
    let fine = free_toa_on_grid(packet, units, 2 * intervals);
    Ok(FreeToa {
        value: (4.0 * fine.re - coarse.re) / 3.0,
        fine: fine.re,
        coarse: coarse.re,
        imaginary_residual: fine.im,
    })
}

fn free_toa_on_grid(packet: &GaussianPacket, units: UnitSystem, n: usize) -> Complex64 {
    let half = 14.0 * packet.sigma;
    let (lo, hi) = (packet.q0 - half, packet.q0 + half);
    let h = (hi - lo) / n as f64;
    let qs: Vec<f64> = (0..=n).map(|i| lo + i as f64 * h).collect();
    let psi: Vec<Complex64> = qs
        .iter()
        .map(|&q| {
            let (re, im) = packet.wave_function(q);
            Complex64::new(re, im)
        })
        .collect();
    // running trapezoid sums of ψ and q'ψ
    let mut c0 = vec![Complex64::new(0.0, 0.0); n + 1];
    let mut c1 = vec![Complex64::new(0.0, 0.0); n + 1];
    for i in 1..=n {
        c0[i] = c0[i - 1] + (psi[i - 1] + psi[i]) * (0.5 * h);
        c1[i] = c1[i - 1] + (psi[i - 1] * qs[i - 1] + psi[i] * qs[i]) * (0.5 * h);
    }
    let (t0, t1) = (c0[n], c1[n]);
    let mut outer = Complex64::new(0.0, 0.0);
    for i in 0..=n {
        let q = qs[i];
        let inner = (c0[i] * 2.0 - t0) * q + (c1[i] * 2.0 - t1);
        let w = if i == 0 || i == n { 0.5 } else { 1.0 };
        outer += psi[i].conj() * inner * w;
    }
    outer *= h * 0.25;
    // μ/(iħ) prefactor
    outer * Complex64::new(0.0, -units.mass / units.hbar)
}
