//! Scenario files and the `tunneltime` front end.
//!
//! A scenario is a TOML document:
//!
//! ```toml
//! name = "two-step"
//!
//! [units]
//! hbar = 1.0
//! mass = 1.0
//!
//! [packet]
//! kind = "gaussian"        # or "sampled" with k, density, carrier
//! q0 = -60.0
//! sigma = 2.0
//! k0 = 2.0
//! truncation = [0.5, 3.0]  # optional
//!
//! [barrier]
//! kind = "stack"           # or "smooth" / "attoclock"
//! segments = [{ V = 1.0, w = 1.0 }, { V = 2.0, w = 0.5 }]
//! b = 1.0
//!
//! [compute]
//! tasks = ["decompose", "oracle"]
//! quad = { rel_tol = 1e-10 }
//! ```
//!
//! Unknown keys are rejected, and all validation problems are reported
//! together with their key paths.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::barriers::{AttoclockBarrier, BarrierStack, Profile, Segment, SmoothBarrier};
use crate::error::Error;
use crate::oracle::{delta_tau_zeta, free_toa_expectation, path_equivalence, region_map_calibration};
use crate::quadrature::QuadSpec;
use crate::traversal::{attoclock_scan, traversal_time, traversal_time_smooth, TraversalReport};
use crate::wavepackets::{GaussianPacket, MomentumDensity, SpectralDensity, UnitSystem, DEFAULT_N_SIGMAS};
use crate::Interval;

pub const CSV_HEADER: &str = "scenario,regime,tau_trav,tau_part,tau_non,tau_tun,tau_dwell,err_est,wall_ms";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigIssue {
    pub path: String,
    pub message: String,
}

impl std::fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

fn render_issues(issues: &[ConfigIssue]) -> String {
    issues.iter().map(|i| format!("\n  {i}")).collect()
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },
    #[error("malformed scenario: {0}")]
    Syntax(String),
    #[error("invalid scenario:{}", render_issues(.0))]
    Invalid(Vec<ConfigIssue>),
}

impl CliError {
    pub fn issues(&self) -> &[ConfigIssue] {
        match self {
            CliError::Invalid(v) => v,
            _ => &[],
        }
    }
}

/// Process exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exit {
    Ok = 0,
    Invalid = 1,
    NotConverged = 2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Traverse,
    Dwell,
    Decompose,
    Scan,
    Oracle,
    Classify,
}

impl Task {
    pub const ALL: [Task; 6] = [
        Task::Traverse,
        Task::Dwell,
        Task::Decompose,
        Task::Scan,
        Task::Oracle,
        Task::Classify,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Task::Traverse => "traverse",
            Task::Dwell => "dwell",
            Task::Decompose => "decompose",
            Task::Scan => "scan",
            Task::Oracle => "oracle",
            Task::Classify => "classify",
        }
    }

    pub fn parse(s: &str) -> Option<Task> {
        Task::ALL.into_iter().find(|t| t.as_str() == s)
    }

    fn needs_row(&self) -> bool {
        matches!(self, Task::Traverse | Task::Dwell | Task::Decompose | Task::Classify)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PacketConfig {
    Gaussian {
        q0: f64,
        sigma: f64,
        k0: f64,
        truncation: Option<Interval>,
        n_sigmas: f64,
    },
    Sampled {
        k: Vec<f64>,
        density: Vec<f64>,
        carrier: f64,
        truncation: Option<Interval>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub enum BarrierConfig {
    Stack { segments: Vec<Segment>, b: f64 },
    Smooth { profile: Profile, support: (f64, f64) },
    Attoclock { z_eff: f64, i_p: f64, field: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScanParam {
    Field,
    K0,
}

impl ScanParam {
    pub fn as_str(&self) -> &'static str {
        match self {
            ScanParam::Field => "field",
            ScanParam::K0 => "k0",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantity {
    Trav,
    Part,
    Non,
    Dwell,
}

impl Quantity {
    pub fn as_str(&self) -> &'static str {
        match self {
            Quantity::Trav => "tau_trav",
            Quantity::Part => "tau_part",
            Quantity::Non => "tau_non",
            Quantity::Dwell => "tau_dwell",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        [Quantity::Trav, Quantity::Part, Quantity::Non, Quantity::Dwell]
            .into_iter()
            .find(|q| q.as_str() == s)
    }

    pub fn of(&self, r: &TraversalReport) -> f64 {
        match self {
            Quantity::Trav => r.tau_trav,
            Quantity::Part => r.tau_part,
            Quantity::Non => r.tau_non,
            Quantity::Dwell => r.tau_dwell,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanConfig {
    pub param: ScanParam,
    pub from: f64,
    pub to: f64,
    pub steps: usize,
    pub quantity: Quantity,
}

impl ScanConfig {
    pub fn values(&self) -> Vec<f64> {
        if self.steps == 1 {
            return vec![self.from];
        }
        let h = (self.to - self.from) / (self.steps - 1) as f64;
        (0..self.steps).map(|i| self.from + i as f64 * h).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComputeConfig {
    pub tasks: Vec<Task>,
    pub quad: QuadSpec,
    pub scan: Option<ScanConfig>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub name: String,
    pub units: UnitSystem,
    pub packet: PacketConfig,
    pub barrier: BarrierConfig,
    pub compute: ComputeConfig,
}

// Raw document shape. Every field is optional so missing keys can be
// reported with their paths instead of failing on the first one.

#[derive(Debug, Default, Serialize, Deserialize)]
struct RawConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    name: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    units: Option<RawUnits>,
    #[serde(skip_serializing_if = "Option::is_none")]
    packet: Option<RawPacket>,
    #[serde(skip_serializing_if = "Option::is_none")]
    barrier: Option<RawBarrier>,
    #[serde(skip_serializing_if = "Option::is_none")]
    compute: Option<RawCompute>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
struct RawUnits {
    #[serde(skip_serializing_if = "Option::is_none")]
    hbar: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    mass: Option<f64>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
struct RawPacket {
    #[serde(skip_serializing_if = "Option::is_none")]
    kind: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    q0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    sigma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    k0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    truncation: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    n_sigmas: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    k: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    density: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    carrier: Option<f64>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
struct RawSegment {
    #[serde(rename = "V", skip_serializing_if = "Option::is_none")]
    v: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    w: Option<f64>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
struct RawBarrier {
    #[serde(skip_serializing_if = "Option::is_none")]
    kind: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    segments: Option<Vec<RawSegment>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    b: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    profile: Option<Profile>,
    #[serde(skip_serializing_if = "Option::is_none")]
    support: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    z_eff: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    i_p: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    field: Option<f64>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
struct RawCompute {
    #[serde(skip_serializing_if = "Option::is_none")]
    tasks: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    quad: Option<QuadSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    scan: Option<RawScan>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
struct RawScan {
    #[serde(skip_serializing_if = "Option::is_none")]
    param: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    from: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    to: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    steps: Option<i64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    quantity: Option<String>,
}

struct Issues(Vec<ConfigIssue>);

impl Issues {
    fn push(&mut self, path: impl Into<String>, message: impl Into<String>) {
        self.0.push(ConfigIssue {
            path: path.into(),
            message: message.into(),
        });
    }

    fn require<T: Copy + Default>(&mut self, value: Option<T>, path: &str) -> T {
        match value {
            Some(v) => v,
            None => {
                self.push(path, "missing required key");
                T::default()
            }
        }
    }

    fn positive(&mut self, value: Option<f64>, path: &str) -> f64 {
        let v = self.require(value, path);
        if value.is_some() && !(v > 0.0 && v.is_finite()) {
            self.push(path, format!("must be positive and finite, got {v}"));
        }
        v
    }

    fn finite(&mut self, value: Option<f64>, path: &str) -> f64 {
        let v = self.require(value, path);
        if value.is_some() && !v.is_finite() {
            self.push(path, format!("must be finite, got {v}"));
        }
        v
    }
}

/// Parses and validates a scenario document.
pub fn parse_config(text: &str) -> Result<ScenarioConfig, CliError> {
    let de = toml::Deserializer::parse(text).map_err(|e| CliError::Syntax(e.to_string()))?;
    let mut unknown = Vec::new();
    let raw: RawConfig = serde_ignored::deserialize(de, |path| unknown.push(path.to_string()))
        .map_err(|e| CliError::Syntax(e.to_string()))?;
    let mut issues = Issues(Vec::new());
    for path in unknown {
        let clean: Vec<&str> = path.split('.').filter(|s| *s != "?").collect();
        issues.push(clean.join("."), "unknown key");
    }
    let config = convert(raw, &mut issues);
    if issues.0.is_empty() {
        Ok(config)
    } else {
        Err(CliError::Invalid(issues.0))
    }
}

pub fn load_config(path: &Path) -> Result<ScenarioConfig, CliError> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&text)
}

fn interval(v: Option<Vec<f64>>, path: &str, issues: &mut Issues) -> Option<Interval> {
    let v = v?;
    if v.len() != 2 || !(v[1] > v[0]) {
        issues.push(path, "expected [lo, hi] with hi > lo");
        return None;
    }
    Some(Interval::new(v[0], v[1]))
}

fn convert(raw: RawConfig, issues: &mut Issues) -> ScenarioConfig {
    let name = raw.name.unwrap_or_else(|| "scenario".to_string());
    if name.contains(',') || name.contains('\n') {
        issues.push("name", "must not contain commas or newlines");
    }

    let ru = raw.units.unwrap_or_default();
    let units = UnitSystem {
        hbar: ru.hbar.unwrap_or(1.0),
        mass: ru.mass.unwrap_or(1.0),
    };
    if !(units.hbar > 0.0 && units.hbar.is_finite()) {
        issues.push("units.hbar", "must be positive and finite");
    }
    if !(units.mass > 0.0 && units.mass.is_finite()) {
        issues.push("units.mass", "must be positive and finite");
    }

    let packet = convert_packet(raw.packet, issues);
    let barrier = convert_barrier(raw.barrier, issues);
    let compute = convert_compute(raw.compute, issues);

    if let Some(scan) = &compute.scan {
        check_scan(scan, &packet, &barrier, issues);
    }
    if compute.tasks.contains(&Task::Oracle) {
        check_oracle(&packet, &barrier, issues);
    }

    ScenarioConfig {
        name,
        units,
        packet,
        barrier,
        compute,
    }
}

fn convert_packet(raw: Option<RawPacket>, issues: &mut Issues) -> PacketConfig {
    let Some(p) = raw else {
        issues.push("packet", "missing required table");
        return PacketConfig::Gaussian {
            q0: 0.0,
            sigma: 0.0,
            k0: 0.0,
            truncation: None,
            n_sigmas: DEFAULT_N_SIGMAS,
        };
    };
    let truncation = interval(p.truncation, "packet.truncation", issues);
    match p.kind.as_deref().unwrap_or("gaussian") {
        "gaussian" => {
            for (key, present) in [("k", p.k.is_some()), ("density", p.density.is_some()), ("carrier", p.carrier.is_some())] {
                if present {
                    issues.push(format!("packet.{key}"), "only valid for kind = \"sampled\"");
                }
            }
            let q0 = issues.finite(p.q0, "packet.q0");
            let sigma = issues.positive(p.sigma, "packet.sigma");
            let k0 = issues.positive(p.k0, "packet.k0");
            let n_sigmas = p.n_sigmas.unwrap_or(DEFAULT_N_SIGMAS);
            if !(n_sigmas > 0.0) {
                issues.push("packet.n_sigmas", "must be positive");
            }
            PacketConfig::Gaussian {
                q0,
                sigma,
                k0,
                truncation,
                n_sigmas,
            }
        }
        "sampled" => {
            for (key, present) in [
                ("q0", p.q0.is_some()),
                ("sigma", p.sigma.is_some()),
                ("k0", p.k0.is_some()),
                ("n_sigmas", p.n_sigmas.is_some()),
            ] {
                if present {
                    issues.push(format!("packet.{key}"), "only valid for kind = \"gaussian\"");
                }
            }
            let k = p.k.unwrap_or_else(|| {
                issues.push("packet.k", "missing required key");
                Vec::new()
            });
            let density = p.density.unwrap_or_else(|| {
                issues.push("packet.density", "missing required key");
                Vec::new()
            });
            let carrier = issues.positive(p.carrier, "packet.carrier");
            if !k.is_empty() && !density.is_empty() {
                if let Err(e) = MomentumDensity::sampled(k.clone(), density.clone(), carrier.max(f64::MIN_POSITIVE)) {
                    issues.push("packet.density", e.to_string());
                }
            }
            PacketConfig::Sampled {
                k,
                density,
                carrier,
                truncation,
            }
        }
        other => {
            issues.push("packet.kind", format!("unknown kind '{other}', expected gaussian or sampled"));
            PacketConfig::Gaussian {
                q0: 0.0,
                sigma: 0.0,
                k0: 0.0,
                truncation,
                n_sigmas: DEFAULT_N_SIGMAS,
            }
        }
    }
}

fn convert_barrier(raw: Option<RawBarrier>, issues: &mut Issues) -> BarrierConfig {
    let fallback = BarrierConfig::Stack {
        segments: Vec::new(),
        b: 0.0,
    };
    let Some(r) = raw else {
        issues.push("barrier", "missing required table");
        return fallback;
    };
    let Some(kind) = r.kind.clone() else {
        issues.push("barrier.kind", "missing required key (stack, smooth or attoclock)");
        return fallback;
    };
    let foreign = |issues: &mut Issues, keys: &[(&str, bool)]| {
        for (key, present) in keys {
            if *present {
                issues.push(format!("barrier.{key}"), format!("not valid for kind = \"{kind}\""));
            }
        }
    };
    match kind.as_str() {
        "stack" => {
            foreign(
                issues,
                &[
                    ("profile", r.profile.is_some()),
                    ("support", r.support.is_some()),
                    ("z_eff", r.z_eff.is_some()),
                    ("i_p", r.i_p.is_some()),
                    ("field", r.field.is_some()),
                ],
            );
            let b = issues.positive(r.b, "barrier.b");
            let raw_segments = r.segments.unwrap_or_else(|| {
                issues.push("barrier.segments", "missing required key");
                Vec::new()
            });
            if raw_segments.is_empty() {
                issues.push("barrier.segments", "need at least one segment");
            }
            let segments = raw_segments
                .into_iter()
                .enumerate()
                .map(|(i, s)| {
                    let height = issues.finite(s.v, &format!("barrier.segments[{i}].V"));
                    if height < 0.0 {
                        issues.push(format!("barrier.segments[{i}].V"), "must be non-negative");
                    }
                    let width = issues.positive(s.w, &format!("barrier.segments[{i}].w"));
                    Segment::new(height, width)
                })
                .collect();
            BarrierConfig::Stack { segments, b }
        }
        "smooth" => {
            foreign(
                issues,
                &[
                    ("segments", r.segments.is_some()),
                    ("b", r.b.is_some()),
                    ("z_eff", r.z_eff.is_some()),
                    ("i_p", r.i_p.is_some()),
                    ("field", r.field.is_some()),
                ],
            );
            let support = match interval(r.support, "barrier.support", issues) {
                Some(s) if s.lo > 0.0 => (s.lo, s.hi),
                Some(_) => {
                    issues.push("barrier.support", "need 0 < b < a");
                    (1.0, 2.0)
                }
                None => {
                    issues.push("barrier.support", "missing required key");
                    (1.0, 2.0)
                }
            };
            let profile = r.profile.unwrap_or_else(|| {
                issues.push("barrier.profile", "missing required key");
                Profile::Constant { height: 0.0 }
            });
            if let Err(e) = SmoothBarrier::new(profile.clone(), support, UnitSystem::default()) {
                issues.push("barrier.profile", e.to_string());
            }
            BarrierConfig::Smooth { profile, support }
        }
        "attoclock" => {
            foreign(
                issues,
                &[
                    ("segments", r.segments.is_some()),
                    ("b", r.b.is_some()),
                    ("profile", r.profile.is_some()),
                    ("support", r.support.is_some()),
                ],
            );
            BarrierConfig::Attoclock {
                z_eff: issues.positive(r.z_eff, "barrier.z_eff"),
                i_p: issues.positive(r.i_p, "barrier.i_p"),
                field: issues.positive(r.field, "barrier.field"),
            }
        }
        other => {
            issues.push("barrier.kind", format!("unknown kind '{other}', expected stack, smooth or attoclock"));
            fallback
        }
    }
}

fn convert_compute(raw: Option<RawCompute>, issues: &mut Issues) -> ComputeConfig {
    let c = raw.unwrap_or_default();
    let mut tasks = Vec::new();
    match c.tasks {
        None => tasks.push(Task::Decompose),
        Some(names) => {
            if names.is_empty() {
                issues.push("compute.tasks", "must list at least one task");
            }
            for (i, name) in names.iter().enumerate() {
                match Task::parse(name) {
                    Some(t) if !tasks.contains(&t) => tasks.push(t),
                    Some(_) => {}
                    None => issues.push(format!("compute.tasks[{i}]"), format!("unknown task '{name}'")),
                }
            }
        }
    }
    let quad = c.quad.unwrap_or_default();
    if let Err(e) = quad.validate() {
        issues.push("compute.quad", e.to_string());
    }
    let scan = c.scan.map(|s| convert_scan(s, issues));
    match (&scan, tasks.contains(&Task::Scan)) {
        (Some(_), false) => issues.push("compute.scan", "present but task 'scan' is not requested"),
        (None, true) => issues.push("compute.scan", "task 'scan' needs a [compute.scan] table"),
        _ => {}
    }
    ComputeConfig { tasks, quad, scan }
}

fn convert_scan(s: RawScan, issues: &mut Issues) -> ScanConfig {
    let param = match s.param.as_deref() {
        Some("field") => ScanParam::Field,
        Some("k0") => ScanParam::K0,
        Some(other) => {
            issues.push("compute.scan.param", format!("unknown parameter '{other}', expected field or k0"));
            ScanParam::Field
        }
        None => {
            issues.push("compute.scan.param", "missing required key");
            ScanParam::Field
        }
    };
    let from = issues.positive(s.from, "compute.scan.from");
    let to = issues.positive(s.to, "compute.scan.to");
    let steps = issues.require(s.steps, "compute.scan.steps");
    if s.steps.is_some() && steps < 1 {
        issues.push("compute.scan.steps", "must be at least 1");
    }
    let quantity = match s.quantity.as_deref() {
        None => Quantity::Part,
        Some(q) => Quantity::parse(q).unwrap_or_else(|| {
            issues.push("compute.scan.quantity", format!("unknown quantity '{q}'"));
            Quantity::Part
        }),
    };
    ScanConfig {
        param,
        from,
        to,
        steps: steps.max(1) as usize,
        quantity,
    }
}

fn check_scan(scan: &ScanConfig, packet: &PacketConfig, barrier: &BarrierConfig, issues: &mut Issues) {
    match scan.param {
        ScanParam::Field if !matches!(barrier, BarrierConfig::Attoclock { .. }) => {
            issues.push("compute.scan.param", "field scans need an attoclock barrier")
        }
        ScanParam::K0 if !matches!(packet, PacketConfig::Gaussian { .. }) => {
            issues.push("compute.scan.param", "k0 scans need a gaussian packet")
        }
        _ => {}
    }
}

fn check_oracle(packet: &PacketConfig, barrier: &BarrierConfig, issues: &mut Issues) {
    match packet {
        PacketConfig::Gaussian { truncation: None, .. } => {}
        _ => issues.push("packet", "task 'oracle' needs an untruncated gaussian packet"),
    }
    if !matches!(barrier, BarrierConfig::Stack { .. }) {
        issues.push("barrier.kind", "task 'oracle' needs a stack barrier");
    }
}

/// Serializes a config back to TOML. Parsing the output yields the same config.
pub fn emit(config: &ScenarioConfig) -> String {
    let packet = match &config.packet {
        PacketConfig::Gaussian {
            q0,
            sigma,
            k0,
            truncation,
            n_sigmas,
        } => RawPacket {
            kind: Some("gaussian".into()),
            q0: Some(*q0),
            sigma: Some(*sigma),
            k0: Some(*k0),
            truncation: truncation.map(|t| vec![t.lo, t.hi]),
            n_sigmas: Some(*n_sigmas),
            ..RawPacket::default()
        },
        PacketConfig::Sampled {
            k,
            density,
            carrier,
            truncation,
        } => RawPacket {
            kind: Some("sampled".into()),
            k: Some(k.clone()),
            density: Some(density.clone()),
            carrier: Some(*carrier),
            truncation: truncation.map(|t| vec![t.lo, t.hi]),
            ..RawPacket::default()
        },
    };
    let barrier = match &config.barrier {
        BarrierConfig::Stack { segments, b } => RawBarrier {
            kind: Some("stack".into()),
            segments: Some(
                segments
                    .iter()
                    .map(|s| RawSegment {
                        v: Some(s.height),
                        w: Some(s.width),
                    })
                    .collect(),
            ),
            b: Some(*b),
            ..RawBarrier::default()
        },
        BarrierConfig::Smooth { profile, support } => RawBarrier {
            kind: Some("smooth".into()),
            profile: Some(profile.clone()),
            support: Some(vec![support.0, support.1]),
            ..RawBarrier::default()
        },
        BarrierConfig::Attoclock { z_eff, i_p, field } => RawBarrier {
            kind: Some("attoclock".into()),
            z_eff: Some(*z_eff),
            i_p: Some(*i_p),
            field: Some(*field),
            ..RawBarrier::default()
        },
    };
    let c = &config.compute;
    let raw = RawConfig {
        name: Some(config.name.clone()),
        units: Some(RawUnits {
            hbar: Some(config.units.hbar),
            mass: Some(config.units.mass),
        }),
        packet: Some(packet),
        barrier: Some(barrier),
        compute: Some(RawCompute {
            tasks: Some(c.tasks.iter().map(|t| t.as_str().to_string()).collect()),
            quad: Some(c.quad),
            scan: c.scan.as_ref().map(|s| RawScan {
                param: Some(s.param.as_str().into()),
                from: Some(s.from),
                to: Some(s.to),
                steps: Some(s.steps as i64),
                quantity: Some(s.quantity.as_str().into()),
            }),
        }),
    };
    toml::to_string(&raw).expect("scenario always serializes")
}

/// One line of `results.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub scenario: String,
    pub regime: String,
    pub tau_trav: f64,
    pub tau_part: f64,
    pub tau_non: f64,
    pub tau_tun: f64,
    pub tau_dwell: f64,
    pub err_est: f64,
    pub wall_ms: f64,
    pub converged: bool,
    pub error: Option<String>,
    pub report: Option<TraversalReport>,
}

/// Fixed-precision float format used in all outputs: 15 significant digits.
pub fn fmt_num(x: f64) -> String {
    format!("{x:.14e}")
}

fn fmt_complex(z: num_complex::Complex64) -> String {
    let sign = if z.im.is_sign_negative() { '-' } else { '+' };
    format!("{} {sign} {}i", fmt_num(z.re), fmt_num(z.im.abs()))
}

impl ResultRow {
    fn from_report(scenario: String, report: TraversalReport, wall_ms: f64) -> Self {
        Self {
            scenario,
            regime: report.regime.as_str().to_string(),
            tau_trav: report.tau_trav,
            tau_part: report.tau_part,
            tau_non: report.tau_non,
            tau_tun: report.tau_tun,
            tau_dwell: report.tau_dwell,
            err_est: report.diagnostics.total_error(),
            wall_ms,
            converged: report.diagnostics.converged,
            error: None,
            report: Some(report),
        }
    }

    fn failed(scenario: String, error: &Error, wall_ms: f64) -> Self {
        Self {
            scenario,
            regime: "error".into(),
            tau_trav: f64::NAN,
            tau_part: f64::NAN,
            tau_non: f64::NAN,
            tau_tun: f64::NAN,
            tau_dwell: f64::NAN,
            err_est: f64::NAN,
            wall_ms,
            converged: true,
            error: Some(error.to_string()),
            report: None,
        }
    }

    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{:.3}",
            self.scenario,
            self.regime,
            fmt_num(self.tau_trav),
            fmt_num(self.tau_part),
            fmt_num(self.tau_non),
            fmt_num(self.tau_tun),
            fmt_num(self.tau_dwell),
            fmt_num(self.err_est),
            self.wall_ms
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanSeries {
    pub param: ScanParam,
    pub quantity: Quantity,
    pub points: Vec<(f64, f64)>,
}

impl ScanSeries {
    pub fn file_name(&self) -> String {
        format!("scan_{}.dat", self.param.as_str())
    }

    pub fn render(&self) -> String {
        let mut out = format!("# {} {}\n", self.param.as_str(), self.quantity.as_str());
        for (x, y) in &self.points {
            let _ = writeln!(out, "{} {}", fmt_num(*x), fmt_num(*y));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleOutcome {
    pub text: String,
    pub max_relative_deviation: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub rows: Vec<ResultRow>,
    pub scan: Option<ScanSeries>,
    pub oracle: Option<OracleOutcome>,
    pub warnings: Vec<String>,
}

impl RunOutcome {
    pub fn exit(&self) -> Exit {
        if self.rows.iter().any(|r| r.error.is_some()) {
            Exit::Invalid
        } else if self.rows.iter().any(|r| !r.converged) || self.oracle.as_ref().is_some_and(|o| !o.converged) {
            Exit::NotConverged
        } else {
            Exit::Ok
        }
    }

    pub fn csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.csv_line());
            out.push('\n');
        }
        out
    }

    pub fn table(&self) -> String {
        let mut out = format!(
            "{:<28} {:<18} {:>14} {:>14} {:>14} {:>14} {:>10}\n",
            "scenario", "regime", "tau_trav", "tau_part", "tau_non", "tau_dwell", "err_est"
        );
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{:<28} {:<18} {:>14.6e} {:>14.6e} {:>14.6e} {:>14.6e} {:>10.2e}",
                r.scenario, r.regime, r.tau_trav, r.tau_part, r.tau_non, r.tau_dwell, r.err_est
            );
            if let Some(e) = &r.error {
                let _ = writeln!(out, "  error: {e}");
            }
        }
        out
    }

    /// Writes `results.csv` and, when present, the scan series and oracle report.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
        let write = |path: PathBuf, text: &str| {
            fs::write(&path, text)
                .map(|_| path.clone())
                .map_err(|source| CliError::Write { path, source })
        };
        fs::create_dir_all(dir).map_err(|source| CliError::Write {
            path: dir.to_path_buf(),
            source,
        })?;
        let mut written = vec![write(dir.join("results.csv"), &self.csv())?];
        if let Some(scan) = &self.scan {
            written.push(write(dir.join(scan.file_name()), &scan.render())?);
        }
        if let Some(oracle) = &self.oracle {
            written.push(write(dir.join("oracle_report.txt"), &oracle.text)?);
        }
        Ok(written)
    }
}

enum Density {
    Full(MomentumDensity),
    Truncated(crate::wavepackets::TruncatedMomentumDensity),
}

impl Density {
    fn as_dyn(&self) -> &dyn SpectralDensity {
        match self {
            Density::Full(d) => d,
            Density::Truncated(d) => d,
        }
    }
}

fn build_density(packet: &PacketConfig, k0_override: Option<f64>) -> crate::Result<Density> {
    let (base, truncation) = match packet {
        PacketConfig::Gaussian {
            q0,
            sigma,
            k0,
            truncation,
            ..
        } => {
            let p = GaussianPacket::new(*q0, *sigma, k0_override.unwrap_or(*k0))?;
            (MomentumDensity::gaussian(&p), truncation)
        }
        PacketConfig::Sampled {
            k,
            density,
            carrier,
            truncation,
        } => (MomentumDensity::sampled(k.clone(), density.clone(), *carrier)?, truncation),
    };
    Ok(match truncation {
        Some(band) => Density::Truncated(base.truncate(*band)?),
        None => Density::Full(base),
    })
}

fn evaluate(config: &ScenarioConfig, density: &dyn SpectralDensity, field: Option<f64>) -> crate::Result<TraversalReport> {
    let spec = &config.compute.quad;
    match &config.barrier {
        BarrierConfig::Stack { segments, b } => {
            let stack = BarrierStack::new(segments.clone(), *b, config.units)?;
            traversal_time(density, &stack, spec)
        }
        BarrierConfig::Smooth { profile, support } => {
            let smooth = SmoothBarrier::new(profile.clone(), *support, config.units)?;
            traversal_time_smooth(density, &smooth, spec)
        }
        BarrierConfig::Attoclock { z_eff, i_p, field: f0 } => {
            let bar = AttoclockBarrier::new(*z_eff, *i_p, field.unwrap_or(*f0))?;
            bar.geometry()?;
            traversal_time_smooth(density, &bar.to_smooth(config.units)?, spec)
        }
    }
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed().as_secs_f64() * 1e3)
}

/// Executes the requested tasks in memory.
pub fn run(config: &ScenarioConfig, tasks: &[Task]) -> RunOutcome {
    let mut rows = Vec::new();
    let mut warnings = Vec::new();

    if let (PacketConfig::Gaussian { q0, sigma, n_sigmas, .. }, BarrierConfig::Stack { segments, b }) =
        (&config.packet, &config.barrier)
    {
        let a = b + segments.iter().map(|s| s.width).sum::<f64>();
        if q0 + n_sigmas * sigma >= -a {
            warnings.push(format!(
                "packet is not clear of the barrier: q0 + {n_sigmas} sigma = {} >= -a = {}",
                q0 + n_sigmas * sigma,
                -a
            ));
        }
    }

    if tasks.iter().any(Task::needs_row) {
        let (result, ms) = timed(|| build_density(&config.packet, None).and_then(|d| evaluate(config, d.as_dyn(), None)));
        rows.push(match result {
            Ok(report) => {
                warnings.extend(report.diagnostics.warnings.iter().cloned());
                ResultRow::from_report(config.name.clone(), report, ms)
            }
            Err(e) => ResultRow::failed(config.name.clone(), &e, ms),
        });
    }

    let mut scan = None;
    if tasks.contains(&Task::Scan) {
        if let Some(sc) = &config.compute.scan {
            let (scan_rows, series) = run_scan(config, sc);
            rows.extend(scan_rows);
            scan = Some(series);
        }
    }

    let oracle = tasks.contains(&Task::Oracle).then(|| run_oracle(config));

    RunOutcome {
        rows,
        scan,
        oracle,
        warnings,
    }
}

fn run_scan(config: &ScenarioConfig, sc: &ScanConfig) -> (Vec<ResultRow>, ScanSeries) {
    let values = sc.values();
    let label = |v: f64| format!("{}[{}={}]", config.name, sc.param.as_str(), v);
    let rows: Vec<ResultRow> = match sc.param {
        ScanParam::Field => {
            let (z_eff, i_p) = match config.barrier {
                BarrierConfig::Attoclock { z_eff, i_p, .. } => (z_eff, i_p),
                _ => unreachable!("validated at parse time"),
            };
            let start = Instant::now();
            let outcome = build_density(&config.packet, None).and_then(|d| {
                let template = AttoclockBarrier {
                    z_eff,
                    i_p,
                    field: values[0],
                };
                attoclock_scan(&template, &values, d.as_dyn(), config.units, &config.compute.quad)
            });
            let ms = start.elapsed().as_secs_f64() * 1e3 / values.len() as f64;
            match outcome {
                Ok(result) => values
                    .iter()
                    .map(|&field| {
                        if let Some(e) = result.entries.iter().find(|e| e.field == field) {
                            ResultRow::from_report(label(field), e.report.clone(), ms)
                        } else {
                            let (_, err) = result.skipped.iter().find(|(f, _)| *f == field).expect("every field is accounted for");
                            ResultRow::failed(label(field), err, ms)
                        }
                    })
                    .collect(),
                Err(e) => values.iter().map(|&v| ResultRow::failed(label(v), &e, ms)).collect(),
            }
        }
        ScanParam::K0 => values
            .par_iter()
            .map(|&k0| {
                let (r, ms) = timed(|| build_density(&config.packet, Some(k0)).and_then(|d| evaluate(config, d.as_dyn(), None)));
                match r {
                    Ok(report) => ResultRow::from_report(label(k0), report, ms),
                    Err(e) => ResultRow::failed(label(k0), &e, ms),
                }
            })
            .collect(),
    };
    let points = values
        .iter()
        .zip(&rows)
        .filter_map(|(&x, r)| r.report.as_ref().map(|rep| (x, sc.quantity.of(rep))))
        .collect();
    (
        rows,
        ScanSeries {
            param: sc.param,
            quantity: sc.quantity,
            points,
        },
    )
}

fn run_oracle(config: &ScenarioConfig) -> OracleOutcome {
    let failed = |e: Error| OracleOutcome {
        text: format!("oracle report: {}\nerror: {e}\n", config.name),
        max_relative_deviation: f64::NAN,
        converged: false,
    };
    let (PacketConfig::Gaussian { q0, sigma, k0, .. }, BarrierConfig::Stack { segments, b }) =
        (&config.packet, &config.barrier)
    else {
        unreachable!("validated at parse time")
    };
    let spec = &config.compute.quad;
    let packet = match GaussianPacket::new(*q0, *sigma, *k0) {
        Ok(p) => p,
        Err(e) => return failed(e),
    };
    let stack = match BarrierStack::new(segments.clone(), *b, config.units) {
        Ok(s) => s,
        Err(e) => return failed(e),
    };
    let (breakdown, equivalence) = match (delta_tau_zeta(&packet, &stack, spec), path_equivalence(&packet, &stack, spec)) {
        (Ok(d), Ok(p)) => (d, p),
        (Err(e), _) | (_, Err(e)) => return failed(e),
    };
    let mut text = format!("oracle report: {}\n\n", config.name);
    let _ = writeln!(text, "Q*            = {}", fmt_complex(breakdown.q_star));
    for (n, r) in breakdown.r_star.iter().enumerate() {
        let _ = writeln!(text, "R*[{n}]         = {}", fmt_complex(*r));
    }
    let _ = writeln!(text, "v0            = {}", fmt_num(breakdown.v0));
    let _ = writeln!(text, "L             = {}", fmt_num(breakdown.length));
    let _ = writeln!(text, "free part     = {}", fmt_num(breakdown.tau_free_part));
    let _ = writeln!(text, "barrier part  = {}", fmt_num(breakdown.tau_barrier_part));
    let _ = writeln!(text, "delta tau     = {}", fmt_num(breakdown.delta_tau));
    let _ = writeln!(text, "\npath equivalence (zeta space vs k space)");
    let _ = writeln!(text, "zeta space    = {}", fmt_num(equivalence.zeta_space));
    let _ = writeln!(text, "k space dwell = {}", fmt_num(equivalence.k_space));
    let _ = writeln!(text, "max relative deviation = {:.3e}", equivalence.relative_deviation);
    if packet.q0 < 0.0 {
        if let Ok(free) = free_toa_expectation(&packet, config.units, 8192) {
            let _ = writeln!(text, "\nfree arrival time <T_F> = {}", fmt_num(free.value));
        }
    }
    if stack.segments().len() == 2 {
        let zetas: Vec<f64> = (0..10).map(|i| i as f64 * 0.4).collect();
        if let Ok(table) = region_map_calibration(&stack, &zetas, spec) {
            let _ = writeln!(text, "\nkernel region map\n{}", table.render());
        }
    }
    for w in &breakdown.warnings {
        let _ = writeln!(text, "warning: {w}");
    }
    OracleOutcome {
        text,
        max_relative_deviation: equivalence.relative_deviation,
        converged: breakdown.converged,
    }
}

/// Applies command-line overrides. Returns the tasks to run.
pub fn apply_overrides(
    config: &mut ScenarioConfig,
    tasks: &[String],
    rel_tol: Option<f64>,
) -> Result<Vec<Task>, CliError> {
    let mut issues = Issues(Vec::new());
    if let Some(tol) = rel_tol {
        config.compute.quad.rel_tol = tol;
        if let Err(e) = config.compute.quad.validate() {
            issues.push("--rel-tol", e.to_string());
        }
    }
    let selected = if tasks.is_empty() {
        config.compute.tasks.clone()
    } else {
        let mut out = Vec::new();
        for name in tasks {
            match Task::parse(name) {
                Some(t) if !out.contains(&t) => out.push(t),
                Some(_) => {}
                None => issues.push("--task", format!("unknown task '{name}'")),
            }
        }
        out
    };
    if selected.contains(&Task::Scan) && config.compute.scan.is_none() {
        issues.push("compute.scan", "task 'scan' needs a [compute.scan] table");
    }
    if selected.contains(&Task::Oracle) {
        check_oracle(&config.packet, &config.barrier, &mut issues);
    }
    if issues.0.is_empty() {
        Ok(selected)
    } else {
        Err(CliError::Invalid(issues.0))
    }
}
