//! Gate compilation into timed segment lists.
//!
//! The n-qubit controlled-phase gate uses `2n + 2` operations `U_1 … U_{2n+2}`:
//! a π pulse moving |1⟩ → |2⟩ on qutrits `2..=n`, a chain of cavity exchanges
//! that carries qutrit 1's excitation through the ancilla from cavity 1 to
//! cavity n and back, and the inverse pulse.
//!
//! Level-adjustment gaps of length `τ_a` are explicit [`SegmentClass::Adjust`]
//! segments. Every two-part operation carries one before, one between and one
//! after its parts; the first cavity operation gets one before it and the last
//! one after it. Between `U_{n+1}` and `U_{n+2}` the ancilla stays resonant
//! with cavity n, so that junction keeps a single gap. This gives `6n − 5`
//! gaps in total.

use std::f64::consts::{PI, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::{HamiltonianKind, HamiltonianSpec, PhysicalParams, PulseDrive, Transition};
use crate::hilbert::{Subsystem, SystemLayout};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SegmentClass {
    Pulse,
    TwoQutritResonant,
    AncillaOnlyResonant,
    Adjust,
    Transport,
}

impl SegmentClass {
    /// Pulses and resonant exchanges; these are the segments a timing error
    /// perturbs.
    pub fn is_interaction(self) -> bool {
        matches!(self, SegmentClass::Pulse | SegmentClass::TwoQutritResonant | SegmentClass::AncillaOnlyResonant)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScheduleSegment {
    pub label: String,
    /// Protocol operation this segment belongs to; `None` for gaps.
    pub operation: Option<usize>,
    pub class: SegmentClass,
    /// Seconds.
    pub duration: f64,
    pub hamiltonian: HamiltonianSpec,
}

impl ScheduleSegment {
    /// Qutrit–cavity couplings switched on during the segment.
    pub fn resonant_pairs(&self) -> Vec<(Subsystem, usize)> {
        let h = &self.hamiltonian;
        match (self.class, h.cavity) {
            (SegmentClass::TwoQutritResonant, Some(c)) => {
                vec![(Subsystem::Work(h.qutrit.unwrap_or(c)), c), (Subsystem::Ancilla, c)]
            }
            (SegmentClass::AncillaOnlyResonant, Some(c)) => vec![(Subsystem::Ancilla, c)],
            _ => Vec::new(),
        }
    }

    fn check(&self, layout: &SystemLayout) -> Result<()> {
        use HamiltonianKind::*;
        let kind = self.hamiltonian.kind;
        let consistent = match self.class {
            SegmentClass::Pulse => matches!(kind, PulseIdeal | PulseModified),
            SegmentClass::TwoQutritResonant => matches!(kind, TwoQutritCavityIdeal | TwoQutritCavityModified),
            SegmentClass::AncillaOnlyResonant => matches!(kind, QutritCavityIdeal | QutritCavityModified),
            SegmentClass::Adjust | SegmentClass::Transport => matches!(kind, CrosstalkOnly | Zero),
        };
        if !consistent {
            return Err(Error::InvalidParams(format!(
                "segment '{}': class {:?} does not match Hamiltonian {:?}",
                self.label, self.class, kind
            )));
        }
        let ok = if self.class.is_interaction() { self.duration > 0.0 } else { self.duration >= 0.0 };
        if !(ok && self.duration.is_finite()) {
            return Err(Error::InvalidParams(format!("segment '{}' has invalid duration {}", self.label, self.duration)));
        }
        self.hamiltonian.validate(layout)
    }
}

/// A compiled protocol.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GateSchedule {
    pub name: String,
    pub layout: SystemLayout,
    pub params: PhysicalParams,
    pub segments: Vec<ScheduleSegment>,
}

impl GateSchedule {
    /// Number of distinct protocol operations (gaps excluded).
    pub fn operation_count(&self) -> usize {
        let mut ops: Vec<usize> = self.segments.iter().filter_map(|s| s.operation).collect();
        ops.dedup();
        ops.len()
    }

    pub fn total_duration(&self) -> f64 {
        self.segments.iter().map(|s| s.duration).sum()
    }

    pub fn count_class(&self, class: SegmentClass) -> usize {
        self.segments.iter().filter(|s| s.class == class).count()
    }

    pub fn interaction_segments(&self) -> usize {
        self.segments.iter().filter(|s| s.class.is_interaction()).count()
    }

    /// The same schedule with (`true`) or without (`false`) the spurious
    /// couplings and crosstalk in every segment Hamiltonian.
    pub fn with_model(&self, modified: bool) -> Self {
        let mut out = self.clone();
        for s in &mut out.segments {
            s.hamiltonian = s.hamiltonian.with_model(modified);
        }
        out
    }

    /// The same schedule on a layout with a different photon cutoff.
    pub fn with_photon_cutoff(&self, photon_cutoff: usize) -> Result<Self> {
        let layout = SystemLayout::new(self.layout.work_qutrits(), self.layout.cavities(), photon_cutoff)?;
        Ok(Self { layout, ..self.clone() })
    }

    /// The same schedule with different physical parameters.
    pub fn with_params(&self, params: PhysicalParams) -> Result<Self> {
        params.validate(&self.layout)?;
        Ok(Self { params, ..self.clone() })
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate(&self.layout)?;
        self.segments.iter().try_for_each(|s| s.check(&self.layout))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let s: Self = serde_json::from_str(text)?;
        s.validate()?;
        Ok(s)
    }
}

struct Builder {
    layout: SystemLayout,
    params: PhysicalParams,
    segments: Vec<ScheduleSegment>,
    gap_class: SegmentClass,
    gap_duration: f64,
}

impl Builder {
    fn new(layout: SystemLayout, params: &PhysicalParams, gap_class: SegmentClass) -> Result<Self> {
        params.validate(&layout)?;
        let gap_duration = match gap_class {
            SegmentClass::Transport => params.tau_move,
            _ => params.tau_adjust,
        };
        Ok(Self { layout, params: params.clone(), segments: Vec::new(), gap_class, gap_duration })
    }

    fn push(&mut self, label: String, operation: Option<usize>, class: SegmentClass, duration: f64, hamiltonian: HamiltonianSpec) {
        self.segments.push(ScheduleSegment { label, operation, class, duration, hamiltonian });
    }

    fn gap(&mut self) {
        let label = match self.gap_class {
            SegmentClass::Transport => "transport",
            _ => "adjust",
        };
        self.push(label.into(), None, self.gap_class, self.gap_duration, HamiltonianSpec::idle(true));
    }

    fn pulse(&mut self, op: usize, label: &str, drives: Vec<PulseDrive>, duration: f64) {
        self.push(label.into(), Some(op), SegmentClass::Pulse, duration, HamiltonianSpec::pulse(drives, true));
    }

    fn tc(&mut self, op: usize, label: &str, qutrit: usize, cavity: usize) {
        let d = tc_time(self.params.g[cavity - 1]);
        let h = HamiltonianSpec::two_qutrit_cavity(qutrit, cavity, true);
        self.push(label.into(), Some(op), SegmentClass::TwoQutritResonant, d, h);
    }

    fn jc(&mut self, op: usize, label: &str, cavity: usize, duration: f64) {
        let h = HamiltonianSpec::qutrit_cavity(cavity, true);
        self.push(label.into(), Some(op), SegmentClass::AncillaOnlyResonant, duration, h);
    }

    fn finish(self, name: &str) -> GateSchedule {
        GateSchedule { name: name.into(), layout: self.layout, params: self.params, segments: self.segments }
    }
}

/// Duration of a half Tavis–Cummings cycle, `π/(√2 g)`.
fn tc_time(g: f64) -> f64 {
    PI / (SQRT_2 * g)
}

fn require_positive(name: &str, values: &[f64]) -> Result<()> {
    for (i, &v) in values.iter().enumerate() {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::InvalidParams(format!("{name}[{i}] must be positive for compilation, got {v}")));
        }
    }
    Ok(())
}

/// Common Rabi frequency of qutrits `2..=n`; they are pulsed together.
fn shared_rabi(params: &PhysicalParams) -> Result<f64> {
    let omega = params.rabi[1];
    require_positive("rabi", &params.rabi[1..])?;
    if params.rabi[1..].iter().any(|&w| (w - omega).abs() > 1e-12 * omega) {
        return Err(Error::InvalidParams("simultaneous pulses need equal Rabi frequencies on qutrits 2..=n".into()));
    }
    Ok(omega)
}

fn check_n(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::InvalidParams(format!("gate needs at least 2 qubits, got {n}")));
    }
    Ok(())
}

fn protocol_pulses(n: usize, omega: f64, phase: f64) -> Vec<PulseDrive> {
    (2..=n).map(|q| PulseDrive { qutrit: q, rabi: omega, phase, transition: Transition::Upper }).collect()
}

/// The eight-step three-qubit gate, written out step by step.
pub fn compile_3qubit(params: &PhysicalParams) -> Result<GateSchedule> {
    let layout = SystemLayout::multi_cavity(3, 1)?;
    let mut b = Builder::new(layout, params, SegmentClass::Adjust)?;
    require_positive("g", &params.g)?;
    let omega = shared_rabi(params)?;
    let g = &params.g;
    let pi_pulse = PI / (2.0 * omega);

    b.pulse(1, "Step1", protocol_pulses(3, omega, -PI / 2.0), pi_pulse);
    b.gap();
    b.tc(2, "Step2", 1, 1);
    b.gap();
    b.tc(3, "Step3/τ_{3,1}", 2, 2);
    b.gap();
    b.jc(3, "Step3/τ_{3,2}", 2, 2.0 * PI / g[1] - tc_time(g[1]));
    b.gap();
    b.gap();
    b.tc(4, "Step4/τ_{4,1}", 3, 3);
    b.gap();
    b.jc(4, "Step4/τ_{4,2}", 3, PI / g[2] - tc_time(g[2]));
    b.gap();
    b.jc(5, "Step5/τ_{5,1}", 3, 2.0 * PI / g[2] - tc_time(g[2]));
    b.gap();
    b.tc(5, "Step5/τ_{5,2}", 3, 3);
    b.gap();
    b.gap();
    b.jc(6, "Step6/τ_{6,1}", 2, 2.0 * PI / g[1] - tc_time(g[1]));
    b.gap();
    b.tc(6, "Step6/τ_{6,2}", 2, 2);
    b.gap();
    b.tc(7, "Step7", 1, 1);
    b.gap();
    b.pulse(8, "Step8", protocol_pulses(3, omega, PI / 2.0), pi_pulse);
    Ok(b.finish("controlled-phase-3"))
}

/// The general `2n + 2`-operation controlled-phase gate.
pub fn compile_nqubit(n: usize, params: &PhysicalParams) -> Result<GateSchedule> {
    check_n(n)?;
    let layout = SystemLayout::multi_cavity(n, 1)?;
    let mut b = Builder::new(layout, params, SegmentClass::Adjust)?;
    require_positive("g", &params.g)?;
    let omega = shared_rabi(params)?;
    let g = params.g.clone();
    let pi_pulse = PI / (2.0 * omega);

    b.pulse(1, "U1", protocol_pulses(n, omega, -PI / 2.0), pi_pulse);
    b.gap();
    b.tc(2, "U2", 1, 1);
    for l in 2..n {
        let op = l + 1;
        b.gap();
        b.tc(op, &format!("U{op}/part1"), l, l);
        b.gap();
        b.jc(op, &format!("U{op}/part2"), l, 2.0 * PI / g[l - 1] - tc_time(g[l - 1]));
        b.gap();
    }
    let op = n + 1;
    b.gap();
    b.tc(op, &format!("U{op}/part1"), n, n);
    b.gap();
    b.jc(op, &format!("U{op}/part2"), n, PI / g[n - 1] - tc_time(g[n - 1]));
    b.gap();
    for l in 1..n {
        let op = n + l + 1;
        let m = n - l + 1;
        if l > 1 {
            b.gap();
        }
        b.jc(op, &format!("U{op}/part1"), m, 2.0 * PI / g[m - 1] - tc_time(g[m - 1]));
        b.gap();
        b.tc(op, &format!("U{op}/part2"), m, m);
        b.gap();
    }
    b.tc(2 * n + 1, &format!("U{}", 2 * n + 1), 1, 1);
    b.gap();
    b.pulse(2 * n + 2, &format!("U{}", 2 * n + 2), protocol_pulses(n, omega, PI / 2.0), pi_pulse);
    Ok(b.finish(&format!("controlled-phase-{n}")))
}

/// Toffoli gate: the controlled-phase gate conjugated by π/2 pulses on the
/// target's |0⟩↔|1⟩ transition. The leading pulse (φ = +π/2) is the inverse
/// of the trailing one (φ = −π/2, |0⟩ → (|0⟩+|1⟩)/√2), so the target is
/// flipped with coefficient +1 when every control is |1⟩.
pub fn compile_toffoli(n: usize, params: &PhysicalParams) -> Result<GateSchedule> {
    let core = compile_nqubit(n, params)?;
    let omega = params.rabi[n - 1];
    require_positive("rabi", &[omega])?;
    let duration = PI / (4.0 * omega);
    let drive = |phase| {
        let d = PulseDrive { qutrit: n, rabi: omega, phase, transition: Transition::Lower };
        HamiltonianSpec::pulse(vec![d], true)
    };
    let mut segments = Vec::with_capacity(core.segments.len() + 2);
    segments.push(ScheduleSegment {
        label: "H_pre".into(),
        operation: Some(1),
        class: SegmentClass::Pulse,
        duration,
        hamiltonian: drive(PI / 2.0),
    });
    for s in core.segments {
        segments.push(ScheduleSegment { operation: s.operation.map(|k| k + 1), ..s });
    }
    segments.push(ScheduleSegment {
        label: "H_post".into(),
        operation: Some(2 * n + 4),
        class: SegmentClass::Pulse,
        duration,
        hamiltonian: drive(-PI / 2.0),
    });
    Ok(GateSchedule { name: format!("toffoli-{n}"), segments, ..core })
}

/// Three atoms moved in and out of one shared cavity. Transport gaps of
/// length `τ_m` stand where the circuit version retunes levels.
pub fn compile_atom_single_cavity(params: &PhysicalParams) -> Result<GateSchedule> {
    let layout = SystemLayout::single_cavity(3, 1)?;
    let mut b = Builder::new(layout, params, SegmentClass::Transport)?;
    require_positive("g", &params.g)?;
    let omega = shared_rabi(params)?;
    let g = params.g[0];
    let pi_pulse = PI / (2.0 * omega);
    let tc = tc_time(g);

    b.pulse(1, "Step1", protocol_pulses(3, omega, -PI / 2.0), pi_pulse);
    b.gap();
    b.tc(2, "Step2", 1, 1);
    b.gap();
    b.tc(3, "Step3/τ_{3,1}", 2, 1);
    b.gap();
    b.jc(3, "Step3/τ_{3,2}", 1, 2.0 * PI / g - tc);
    b.gap();
    b.tc(4, "Step4/τ_{4,1}", 3, 1);
    b.gap();
    b.jc(4, "Step4/τ_{4,2}", 1, PI / g - tc);
    b.jc(5, "Step5/τ_{5,1}", 1, 2.0 * PI / g - tc);
    b.gap();
    b.tc(5, "Step5/τ_{5,2}", 3, 1);
    b.gap();
    b.jc(6, "Step6/τ_{6,1}", 1, 2.0 * PI / g - tc);
    b.gap();
    b.tc(6, "Step6/τ_{6,2}", 2, 1);
    b.gap();
    b.tc(7, "Step7", 1, 1);
    b.gap();
    b.pulse(8, "Step8", protocol_pulses(3, omega, PI / 2.0), pi_pulse);
    Ok(b.finish("atom-controlled-phase-3"))
}

/// Closed-form duration of the n-qubit gate:
/// `π/Ω + √2π/g_1 + Σ_{j=3}^{n} 4π/g_{j−1} + 3π/g_n + (6n−5)τ_a`.
pub fn timing_budget(n: usize, params: &PhysicalParams) -> Result<f64> {
    check_n(n)?;
    if params.g.len() < n || params.rabi.len() < n {
        return Err(Error::InvalidParams(format!("parameters describe fewer than {n} qutrits")));
    }
    let omega = shared_rabi(params)?;
    require_positive("g", &params.g[..n])?;
    let g = &params.g;
    let middle: f64 = (3..=n).map(|j| 4.0 * PI / g[j - 2]).sum();
    Ok(PI / omega + SQRT_2 * PI / g[0] + middle + 3.0 * PI / g[n - 1] + (6 * n - 5) as f64 * params.tau_adjust)
}

/// Closed-form duration of the single-cavity atom variant:
/// `π/Ω + (√2 + 7)π/g + 10τ_m`.
pub fn atom_timing_budget(params: &PhysicalParams) -> Result<f64> {
    let omega = shared_rabi(params)?;
    require_positive("g", &params.g[..1])?;
    Ok(PI / omega + (SQRT_2 + 7.0) * PI / params.g[0] + 10.0 * params.tau_move)
}

/// Adds `dt` seconds to every pulse and resonant-exchange segment.
pub fn apply_time_error(schedule: &GateSchedule, dt: f64) -> Result<GateSchedule> {
    if !dt.is_finite() {
        return Err(Error::InvalidTimeError(format!("{dt} is not finite")));
    }
    let mut out = schedule.clone();
    for s in out.segments.iter_mut().filter(|s| s.class.is_interaction()) {
        let d = s.duration + dt;
        if d <= 0.0 {
            return Err(Error::InvalidTimeError(format!("δt = {dt:e} s makes segment '{}' ({:e} s) non-positive", s.label, s.duration)));
        }
        s.duration = d;
    }
    Ok(out)
}
