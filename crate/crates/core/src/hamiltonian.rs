//! Interaction-picture Hamiltonians for pulses, ancilla–cavity exchange,
//! two-qutrit cavity exchange and inter-cavity crosstalk.
//!
//! Everything is in angular frequency with ħ = 1. A Hamiltonian is kept as a
//! list of [`CouplingTerm`]s, `H(t) = Σ_k (A_k e^{iν_k t} O_k + h.c.)`, so the
//! sparsity pattern is fixed while the phases rotate.
//!
//! The "modified" Hamiltonians add the off-resonant couplings a transmon-like
//! qutrit picks up on its |1⟩↔|2⟩ (or |0⟩↔|1⟩ for pulses) transition, plus the
//! crosstalk `ε(t)`. For the two-qutrit block the unwanted terms act on the
//! |1⟩↔|2⟩ transitions of both qutrits, with strengths `μ̃_l` and `g̃_l`; a
//! variant with |0⟩⟨1| operators would duplicate the resonant terms and is not
//! what the detunings `δ_l`, `δ_{a_l}` describe.

use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{annihilation_op, embed_product, transition_op, SparseOperator, Subsystem, SystemLayout, C64};

/// Angular frequency for a frequency given in MHz.
pub fn angular_mhz(f_mhz: f64) -> f64 {
    2.0 * PI * f_mhz * 1e6
}

/// Relaxation and dephasing rates of one qutrit, in 1/s.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QutritRates {
    pub relax_01: f64,
    pub relax_12: f64,
    pub relax_02: f64,
    pub dephase_1: f64,
    pub dephase_2: f64,
}

impl QutritRates {
    pub const ZERO: QutritRates = QutritRates { relax_01: 0.0, relax_12: 0.0, relax_02: 0.0, dephase_1: 0.0, dephase_2: 0.0 };

    fn values(&self) -> [(&'static str, f64); 5] {
        [
            ("relax_01", self.relax_01),
            ("relax_12", self.relax_12),
            ("relax_02", self.relax_02),
            ("dephase_1", self.dephase_1),
            ("dephase_2", self.dephase_2),
        ]
    }
}

/// Crosstalk between cavities `first < second` with strength `g_lk`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrosstalkPair {
    pub first: usize,
    pub second: usize,
    pub strength: f64,
}

/// Physical parameters in SI units (rad/s, s, 1/s).
///
/// Per-qutrit vectors are indexed by work qutrit (`[l - 1]`), per-cavity
/// vectors by cavity. `mu`, `mu_unwanted` and `qutrit_detuning` describe a
/// work qutrit's coupling to the cavity it shares; `g`, `g_unwanted` and
/// `ancilla_detuning` describe the ancilla's coupling to each cavity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    pub rabi: Vec<f64>,
    pub pulse_phase: Vec<f64>,
    pub rabi_unwanted: Vec<f64>,
    pub pulse_detuning: Vec<f64>,
    pub mu: Vec<f64>,
    pub mu_unwanted: Vec<f64>,
    pub qutrit_detuning: Vec<f64>,
    pub g: Vec<f64>,
    pub g_unwanted: Vec<f64>,
    pub ancilla_detuning: Vec<f64>,
    pub cavity_freq: Vec<f64>,
    pub crosstalk: Vec<CrosstalkPair>,
    /// Work qutrits `1..=n` followed by the ancilla.
    pub qutrit_noise: Vec<QutritRates>,
    pub cavity_decay: Vec<f64>,
    pub tau_adjust: f64,
    pub tau_move: f64,
}

impl PhysicalParams {
    /// Superconducting-circuit defaults for `n` qutrits in `n` cavities:
    /// cavities at 5, 6, 7, … GHz, g = μ = 2π·10 MHz, Ω = 2π·15 MHz,
    /// anharmonicity 2π·600 MHz, crosstalk 0.1g, T1/T2-type times of
    /// 10–25 μs, κ⁻¹ = 10 μs and τ_a = 1 ns.
    pub fn reference_defaults(n: usize) -> Self {
        let g = angular_mhz(10.0);
        let omega = angular_mhz(15.0);
        let anharm = angular_mhz(600.0);
        let us = 1e-6;
        let rates = QutritRates {
            relax_01: 1.0 / (20.0 * us),
            relax_12: 1.0 / (10.0 * us),
            relax_02: 1.0 / (25.0 * us),
            dephase_1: 1.0 / (15.0 * us),
            dephase_2: 1.0 / (15.0 * us),
        };
        let mut crosstalk = Vec::new();
        for l in 1..=n {
            for k in l + 1..=n {
                crosstalk.push(CrosstalkPair { first: l, second: k, strength: 0.1 * g });
            }
        }
        Self {
            rabi: vec![omega; n],
            pulse_phase: vec![-PI / 2.0; n],
            rabi_unwanted: vec![omega * FRAC_1_SQRT_2; n],
            pulse_detuning: vec![anharm; n],
            mu: vec![g; n],
            mu_unwanted: vec![g * SQRT_2; n],
            qutrit_detuning: vec![anharm; n],
            g: vec![g; n],
            g_unwanted: vec![g * SQRT_2; n],
            ancilla_detuning: vec![anharm; n],
            cavity_freq: (0..n).map(|l| angular_mhz(5000.0 + 1000.0 * l as f64)).collect(),
            crosstalk,
            qutrit_noise: vec![rates; n + 1],
            cavity_decay: vec![1.0 / (10.0 * us); n],
            tau_adjust: 1e-9,
            tau_move: 1e-6,
        }
    }

    /// Three atoms sharing one cavity: Ω = g = μ = 2π·50 kHz, τ_m = 1 μs.
    /// Only ideal dynamics are modelled for this setting, so noise and
    /// unwanted couplings are zero.
    pub fn atom_defaults() -> Self {
        let g = angular_mhz(0.05);
        let n = 3;
        Self {
            rabi: vec![g; n],
            pulse_phase: vec![-PI / 2.0; n],
            rabi_unwanted: vec![0.0; n],
            pulse_detuning: vec![0.0; n],
            mu: vec![g; n],
            mu_unwanted: vec![0.0; n],
            qutrit_detuning: vec![0.0; n],
            g: vec![g],
            g_unwanted: vec![0.0],
            ancilla_detuning: vec![0.0],
            cavity_freq: vec![angular_mhz(5000.0)],
            crosstalk: Vec::new(),
            qutrit_noise: vec![QutritRates::ZERO; n + 1],
            cavity_decay: vec![0.0],
            tau_adjust: 0.0,
            tau_move: 1e-6,
        }
    }

    pub fn work_qutrits(&self) -> usize {
        self.rabi.len()
    }

    pub fn cavities(&self) -> usize {
        self.g.len()
    }

    /// `μ_1 / g_1`.
    pub fn coupling_ratio(&self) -> f64 {
        self.mu[0] / self.g[0]
    }

    /// Sets `μ_l = c·g` for the cavity each qutrit shares, rescaling `μ̃_l`
    /// by the same factor.
    pub fn with_coupling_ratio(&self, c: f64) -> Result<Self> {
        if !(c.is_finite() && c > 0.0) {
            return Err(Error::InvalidParams(format!("coupling ratio must be positive, got {c}")));
        }
        let mut out = self.clone();
        let k = self.cavities();
        for l in 0..self.work_qutrits() {
            let g = self.g[l.min(k - 1)];
            let target = c * g;
            if self.mu[l] > 0.0 {
                out.mu_unwanted[l] = self.mu_unwanted[l] * target / self.mu[l];
            }
            out.mu[l] = target;
        }
        Ok(out)
    }

    /// Scales every crosstalk strength by `s`.
    pub fn with_crosstalk_scaled(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.crosstalk.iter_mut().for_each(|p| p.strength *= s);
        out
    }

    /// Removes unwanted couplings and crosstalk, leaving the resonant model.
    pub fn without_spurious_couplings(&self) -> Self {
        let mut out = self.clone();
        out.rabi_unwanted.iter_mut().for_each(|x| *x = 0.0);
        out.mu_unwanted.iter_mut().for_each(|x| *x = 0.0);
        out.g_unwanted.iter_mut().for_each(|x| *x = 0.0);
        out.crosstalk.clear();
        out
    }

    /// Checks vector lengths against the layout and that every rate and
    /// frequency is finite and non-negative.
    pub fn validate(&self, layout: &SystemLayout) -> Result<()> {
        let n = layout.work_qutrits();
        let k = layout.cavities();
        let per_qutrit: [(&str, &Vec<f64>); 7] = [
            ("rabi", &self.rabi),
            ("pulse_phase", &self.pulse_phase),
            ("rabi_unwanted", &self.rabi_unwanted),
            ("pulse_detuning", &self.pulse_detuning),
            ("mu", &self.mu),
            ("mu_unwanted", &self.mu_unwanted),
            ("qutrit_detuning", &self.qutrit_detuning),
        ];
        let per_cavity: [(&str, &Vec<f64>); 5] = [
            ("g", &self.g),
            ("g_unwanted", &self.g_unwanted),
            ("ancilla_detuning", &self.ancilla_detuning),
            ("cavity_freq", &self.cavity_freq),
            ("cavity_decay", &self.cavity_decay),
        ];
        for (name, v) in per_qutrit {
            if v.len() != n {
                return Err(Error::InvalidParams(format!("{name}: expected {n} entries, found {}", v.len())));
            }
        }
        for (name, v) in per_cavity {
            if v.len() != k {
                return Err(Error::InvalidParams(format!("{name}: expected {k} entries, found {}", v.len())));
            }
        }
        if self.qutrit_noise.len() != n + 1 {
            return Err(Error::InvalidParams(format!("qutrit_noise: expected {} entries, found {}", n + 1, self.qutrit_noise.len())));
        }
        for (name, v) in per_qutrit.iter().chain(per_cavity.iter()) {
            for (i, &x) in v.iter().enumerate() {
                let ok = if *name == "pulse_phase" { x.is_finite() } else { x.is_finite() && x >= 0.0 };
                if !ok {
                    return Err(Error::InvalidParams(format!("{name}[{i}] = {x} is not a valid value")));
                }
            }
        }
        for (i, r) in self.qutrit_noise.iter().enumerate() {
            for (name, x) in r.values() {
                if !(x.is_finite() && x >= 0.0) {
                    return Err(Error::InvalidParams(format!("qutrit_noise[{i}].{name} = {x} must be non-negative")));
                }
            }
        }
        for p in &self.crosstalk {
            if !(p.first >= 1 && p.first < p.second && p.second <= k) {
                return Err(Error::InvalidParams(format!(
                    "crosstalk pair ({}, {}) does not name two cavities in ascending order",
                    p.first, p.second
                )));
            }
            if !(p.strength.is_finite() && p.strength >= 0.0) {
                return Err(Error::InvalidParams(format!("crosstalk strength {} must be non-negative", p.strength)));
            }
        }
        for (name, x) in [("tau_adjust", self.tau_adjust), ("tau_move", self.tau_move)] {
            if !(x.is_finite() && x >= 0.0) {
                return Err(Error::InvalidParams(format!("{name} = {x} must be non-negative")));
            }
        }
        Ok(())
    }

    /// Crosstalk detuning `Δ_lk = ω_{c_k} − ω_{c_l}`.
    pub fn crosstalk_detuning(&self, l: usize, k: usize) -> f64 {
        self.cavity_freq[k - 1] - self.cavity_freq[l - 1]
    }
}

/// Which qutrit transition a pulse drives.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Transition {
    /// |0⟩ ↔ |1⟩
    Lower,
    /// |1⟩ ↔ |2⟩
    Upper,
}

impl Transition {
    pub fn levels(self) -> (usize, usize) {
        match self {
            Transition::Lower => (0, 1),
            Transition::Upper => (1, 2),
        }
    }
}

/// A square classical pulse on one work qutrit.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PulseDrive {
    pub qutrit: usize,
    pub rabi: f64,
    pub phase: f64,
    pub transition: Transition,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum HamiltonianKind {
    PulseIdeal,
    QutritCavityIdeal,
    TwoQutritCavityIdeal,
    PulseModified,
    QutritCavityModified,
    TwoQutritCavityModified,
    CrosstalkOnly,
    Zero,
}

impl HamiltonianKind {
    pub fn is_modified(self) -> bool {
        matches!(
            self,
            HamiltonianKind::PulseModified
                | HamiltonianKind::QutritCavityModified
                | HamiltonianKind::TwoQutritCavityModified
                | HamiltonianKind::CrosstalkOnly
        )
    }
}

/// Which Hamiltonian governs a schedule segment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HamiltonianSpec {
    pub kind: HamiltonianKind,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub drives: Vec<PulseDrive>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub qutrit: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cavity: Option<usize>,
}

impl HamiltonianSpec {
    pub fn pulse(drives: Vec<PulseDrive>, modified: bool) -> Self {
        let kind = if modified { HamiltonianKind::PulseModified } else { HamiltonianKind::PulseIdeal };
        Self { kind, drives, qutrit: None, cavity: None }
    }

    pub fn qutrit_cavity(cavity: usize, modified: bool) -> Self {
        let kind = if modified { HamiltonianKind::QutritCavityModified } else { HamiltonianKind::QutritCavityIdeal };
        Self { kind, drives: Vec::new(), qutrit: None, cavity: Some(cavity) }
    }

    pub fn two_qutrit_cavity(qutrit: usize, cavity: usize, modified: bool) -> Self {
        let kind = if modified { HamiltonianKind::TwoQutritCavityModified } else { HamiltonianKind::TwoQutritCavityIdeal };
        Self { kind, drives: Vec::new(), qutrit: Some(qutrit), cavity: Some(cavity) }
    }

    /// Crosstalk only when `modified`, otherwise nothing.
    pub fn idle(modified: bool) -> Self {
        let kind = if modified { HamiltonianKind::CrosstalkOnly } else { HamiltonianKind::Zero };
        Self { kind, drives: Vec::new(), qutrit: None, cavity: None }
    }

    /// The same segment with (`true`) or without (`false`) the spurious terms.
    pub fn with_model(&self, modified: bool) -> Self {
        use HamiltonianKind::*;
        let kind = match (self.kind, modified) {
            (PulseIdeal | PulseModified, m) => {
                if m {
                    PulseModified
                } else {
                    PulseIdeal
                }
            }
            (QutritCavityIdeal | QutritCavityModified, m) => {
                if m {
                    QutritCavityModified
                } else {
                    QutritCavityIdeal
                }
            }
            (TwoQutritCavityIdeal | TwoQutritCavityModified, m) => {
                if m {
                    TwoQutritCavityModified
                } else {
                    TwoQutritCavityIdeal
                }
            }
            (CrosstalkOnly | Zero, m) => {
                if m {
                    CrosstalkOnly
                } else {
                    Zero
                }
            }
        };
        Self { kind, ..self.clone() }
    }

    /// Checks the indices against the layout and the kind.
    pub fn validate(&self, layout: &SystemLayout) -> Result<()> {
        use HamiltonianKind::*;
        let n = layout.work_qutrits();
        let k = layout.cavities();
        let bad = |m: String| Err(Error::InvalidParams(m));
        match self.kind {
            PulseIdeal | PulseModified => {
                if self.drives.is_empty() {
                    return bad("pulse segment without drives".into());
                }
                for d in &self.drives {
                    if !(1..=n).contains(&d.qutrit) {
                        return bad(format!("pulse on qutrit {} outside 1..={n}", d.qutrit));
                    }
                }
                let mut qs: Vec<usize> = self.drives.iter().map(|d| d.qutrit).collect();
                qs.sort_unstable();
                qs.dedup();
                if qs.len() != self.drives.len() {
                    return bad("a qutrit is driven twice in one segment".into());
                }
            }
            QutritCavityIdeal | QutritCavityModified => match self.cavity {
                Some(c) if (1..=k).contains(&c) => {}
                _ => return bad(format!("ancilla coupling needs a cavity in 1..={k}")),
            },
            TwoQutritCavityIdeal | TwoQutritCavityModified => match (self.qutrit, self.cavity) {
                (Some(q), Some(c)) if (1..=n).contains(&q) && (1..=k).contains(&c) => {}
                _ => return bad(format!("two-qutrit coupling needs a qutrit in 1..={n} and a cavity in 1..={k}")),
            },
            CrosstalkOnly | Zero => {}
        }
        Ok(())
    }
}

/// One rotating coupling `A e^{iνt} O + h.c.`.
#[derive(Clone, Debug)]
pub struct CouplingTerm {
    pub operator: SparseOperator,
    pub amplitude: C64,
    pub frequency: f64,
}

/// `H(t) = Σ_k (A_k e^{iν_k t} O_k + h.c.)`.
#[derive(Clone, Debug)]
pub struct TermHamiltonian {
    dim: usize,
    terms: Vec<CouplingTerm>,
}

impl TermHamiltonian {
    pub fn new(dim: usize) -> Self {
        Self { dim, terms: Vec::new() }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> &[CouplingTerm] {
        &self.terms
    }

    /// Adds a term; terms with zero amplitude are dropped.
    pub fn push(&mut self, operator: SparseOperator, amplitude: C64, frequency: f64) -> Result<()> {
        if operator.dim() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: operator.dim() });
        }
        if amplitude != C64::new(0.0, 0.0) {
            self.terms.push(CouplingTerm { operator, amplitude, frequency });
        }
        Ok(())
    }

    pub fn extend(&mut self, other: TermHamiltonian) -> Result<()> {
        if other.dim != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: other.dim });
        }
        self.terms.extend(other.terms);
        Ok(())
    }

    /// Largest rotation rate `|ν_k|` among the terms.
    pub fn max_frequency(&self) -> f64 {
        self.terms.iter().map(|t| t.frequency.abs()).fold(0.0, f64::max)
    }

    /// Evaluates the Hermitian operator at time `t`.
    pub fn at(&self, t: f64) -> SparseOperator {
        let mut trip = Vec::new();
        for term in &self.terms {
            let c = term.amplitude * C64::from_polar(1.0, term.frequency * t);
            for (r, col, v) in term.operator.iter() {
                let x = c * v;
                trip.push((r, col, x));
                trip.push((col, r, x.conj()));
            }
        }
        SparseOperator::from_triplets(self.dim, trip).expect("term operators share the Hamiltonian dimension")
    }
}

fn check_qutrit(l: usize, layout: &SystemLayout) -> Result<()> {
    if !(1..=layout.work_qutrits()).contains(&l) {
        return Err(Error::UnknownSubsystem(format!("qutrit {l}")));
    }
    Ok(())
}

fn check_cavity(l: usize, layout: &SystemLayout) -> Result<()> {
    if !(1..=layout.cavities()).contains(&l) {
        return Err(Error::UnknownSubsystem(format!("cavity {l}")));
    }
    Ok(())
}

/// `a_c† ⊗ |i⟩⟨j|_q` on the full space.
fn raise_photon_lower_qutrit(cavity: usize, qutrit: Subsystem, (i, j): (usize, usize), layout: &SystemLayout) -> Result<SparseOperator> {
    let a_dag = annihilation_op(layout.photon_cutoff())?.adjoint();
    let sigma = transition_op(i, j)?;
    embed_product(&[(&a_dag, Subsystem::Cavity(cavity)), (&sigma, qutrit)], layout)
}

/// Terms of one pulse. The modified model adds the detuned coupling of an
/// upper-transition drive to |0⟩↔|1⟩; lower-transition drives carry no extra
/// term.
pub fn pulse_terms(drive: &PulseDrive, params: &PhysicalParams, layout: &SystemLayout, modified: bool) -> Result<TermHamiltonian> {
    check_qutrit(drive.qutrit, layout)?;
    let q = Subsystem::Work(drive.qutrit);
    let mut h = TermHamiltonian::new(layout.dim());
    let (i, j) = drive.transition.levels();
    let phase = C64::from_polar(1.0, drive.phase);
    h.push(embed_product(&[(&transition_op(i, j)?, q)], layout)?, phase * drive.rabi, 0.0)?;
    if modified && drive.transition == Transition::Upper {
        let l = drive.qutrit - 1;
        h.push(embed_product(&[(&transition_op(0, 1)?, q)], layout)?, phase * params.rabi_unwanted[l], -params.pulse_detuning[l])?;
    }
    Ok(h)
}

/// `g_l a_l†|0⟩_a⟨1| + h.c.`, plus `g̃_l e^{iδ_{a_l}t} a_l†|1⟩_a⟨2| + h.c.`
/// when `modified`.
pub fn qutrit_cavity_terms(cavity: usize, params: &PhysicalParams, layout: &SystemLayout, modified: bool) -> Result<TermHamiltonian> {
    check_cavity(cavity, layout)?;
    let c = cavity - 1;
    let mut h = TermHamiltonian::new(layout.dim());
    h.push(raise_photon_lower_qutrit(cavity, Subsystem::Ancilla, (0, 1), layout)?, C64::from(params.g[c]), 0.0)?;
    if modified {
        h.push(
            raise_photon_lower_qutrit(cavity, Subsystem::Ancilla, (1, 2), layout)?,
            C64::from(params.g_unwanted[c]),
            params.ancilla_detuning[c],
        )?;
    }
    Ok(h)
}

/// Qutrit `qutrit` and the ancilla both resonant with `cavity`.
pub fn two_qutrit_cavity_terms(
    qutrit: usize,
    cavity: usize,
    params: &PhysicalParams,
    layout: &SystemLayout,
    modified: bool,
) -> Result<TermHamiltonian> {
    check_qutrit(qutrit, layout)?;
    let q = qutrit - 1;
    let w = Subsystem::Work(qutrit);
    let mut h = qutrit_cavity_terms(cavity, params, layout, false)?;
    h.push(raise_photon_lower_qutrit(cavity, w, (0, 1), layout)?, C64::from(params.mu[q]), 0.0)?;
    if modified {
        let c = cavity - 1;
        h.push(raise_photon_lower_qutrit(cavity, w, (1, 2), layout)?, C64::from(params.mu_unwanted[q]), params.qutrit_detuning[q])?;
        h.push(
            raise_photon_lower_qutrit(cavity, Subsystem::Ancilla, (1, 2), layout)?,
            C64::from(params.g_unwanted[c]),
            params.ancilla_detuning[c],
        )?;
    }
    Ok(h)
}

/// `ε(t) = Σ_{l<k} g_lk (e^{iΔ_lk t} a_l a_k† + h.c.)` over cavity pairs present
/// in the layout.
pub fn crosstalk_terms(params: &PhysicalParams, layout: &SystemLayout) -> Result<TermHamiltonian> {
    let mut h = TermHamiltonian::new(layout.dim());
    let a = annihilation_op(layout.photon_cutoff())?;
    let a_dag = a.adjoint();
    for p in &params.crosstalk {
        if p.second > layout.cavities() || p.strength == 0.0 {
            continue;
        }
        let op = embed_product(&[(&a, Subsystem::Cavity(p.first)), (&a_dag, Subsystem::Cavity(p.second))], layout)?;
        h.push(op, C64::from(p.strength), params.crosstalk_detuning(p.first, p.second))?;
    }
    Ok(h)
}

/// The terms of a segment Hamiltonian.
pub fn segment_terms(spec: &HamiltonianSpec, params: &PhysicalParams, layout: &SystemLayout) -> Result<TermHamiltonian> {
    use HamiltonianKind::*;
    spec.validate(layout)?;
    let modified = spec.kind.is_modified();
    let mut h = match spec.kind {
        PulseIdeal | PulseModified => {
            let mut h = TermHamiltonian::new(layout.dim());
            for d in &spec.drives {
                h.extend(pulse_terms(d, params, layout, modified)?)?;
            }
            h
        }
        QutritCavityIdeal | QutritCavityModified => qutrit_cavity_terms(spec.cavity.unwrap(), params, layout, modified)?,
        TwoQutritCavityIdeal | TwoQutritCavityModified => {
            two_qutrit_cavity_terms(spec.qutrit.unwrap(), spec.cavity.unwrap(), params, layout, modified)?
        }
        CrosstalkOnly | Zero => TermHamiltonian::new(layout.dim()),
    };
    if modified {
        h.extend(crosstalk_terms(params, layout)?)?;
    }
    Ok(h)
}

fn protocol_drive(l: usize, params: &PhysicalParams, layout: &SystemLayout) -> Result<PulseDrive> {
    check_qutrit(l, layout)?;
    if l < 2 {
        return Err(Error::InvalidParams(format!("only qutrits 2..=n are pulsed, got {l}")));
    }
    Ok(PulseDrive { qutrit: l, rabi: params.rabi[l - 1], phase: params.pulse_phase[l - 1], transition: Transition::Upper })
}

/// `Ω_l e^{iφ_l}|1⟩_l⟨2| + h.c.`
pub fn h_pulse_ideal(l: usize, params: &PhysicalParams, layout: &SystemLayout) -> Result<SparseOperator> {
    Ok(pulse_terms(&protocol_drive(l, params, layout)?, params, layout, false)?.at(0.0))
}

/// `g_l a_l†|0⟩_a⟨1| + h.c.`
pub fn h_qutrit_cavity_ideal(l: usize, params: &PhysicalParams, layout: &SystemLayout) -> Result<SparseOperator> {
    Ok(qutrit_cavity_terms(l, params, layout, false)?.at(0.0))
}

/// `μ_l a_l†|0⟩_l⟨1| + g_l a_l†|0⟩_a⟨1| + h.c.`
pub fn h_two_qutrit_cavity_ideal(l: usize, params: &PhysicalParams, layout: &SystemLayout) -> Result<SparseOperator> {
    Ok(two_qutrit_cavity_terms(l, l, params, layout, false)?.at(0.0))
}

/// Inter-cavity crosstalk at time `t`.
pub fn h_crosstalk(t: f64, params: &PhysicalParams, layout: &SystemLayout) -> Result<SparseOperator> {
    if layout.cavities() < 2 {
        return Err(Error::InvalidLayout("crosstalk needs at least two cavities".into()));
    }
    Ok(crosstalk_terms(params, layout)?.at(t))
}

pub fn h_pulse_modified(l: usize, t: f64, params: &PhysicalParams, layout: &SystemLayout) -> Result<SparseOperator> {
    let mut h = pulse_terms(&protocol_drive(l, params, layout)?, params, layout, true)?;
    h.extend(crosstalk_terms(params, layout)?)?;
    Ok(h.at(t))
}

pub fn h_qutrit_cavity_modified(l: usize, t: f64, params: &PhysicalParams, layout: &SystemLayout) -> Result<SparseOperator> {
    let mut h = qutrit_cavity_terms(l, params, layout, true)?;
    h.extend(crosstalk_terms(params, layout)?)?;
    Ok(h.at(t))
}

pub fn h_two_qutrit_cavity_modified(l: usize, t: f64, params: &PhysicalParams, layout: &SystemLayout) -> Result<SparseOperator> {
    let mut h = two_qutrit_cavity_terms(l, l, params, layout, true)?;
    h.extend(crosstalk_terms(params, layout)?)?;
    Ok(h.at(t))
}

/// Crosstalk estimate `g_l·C_l/C_Σ` per cavity, with `C_Σ` the sum of all
/// cavity capacitances and the ancilla's.
pub fn estimate_crosstalk(capacitances: &[f64], ancilla_capacitance: f64, couplings: &[f64]) -> Result<Vec<f64>> {
    if capacitances.len() != couplings.len() {
        return Err(Error::DimensionMismatch { expected: capacitances.len(), found: couplings.len() });
    }
    if capacitances.iter().chain([&ancilla_capacitance]).any(|&c| !(c.is_finite() && c > 0.0)) {
        return Err(Error::InvalidParams("capacitances must be positive".into()));
    }
    let total: f64 = capacitances.iter().sum::<f64>() + ancilla_capacitance;
    Ok(capacitances.iter().zip(couplings).map(|(c, g)| g * c / total).collect())
}

/// Photon lifetime `κ⁻¹ = Q/ω_c` in seconds.
pub fn cavity_lifetime(quality: f64, omega_c: f64) -> Result<f64> {
    if !(quality.is_finite() && quality > 0.0 && omega_c.is_finite() && omega_c > 0.0) {
        return Err(Error::InvalidParams("quality factor and cavity frequency must be positive".into()));
    }
    Ok(quality / omega_c)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> (PhysicalParams, SystemLayout) {
        (PhysicalParams::reference_defaults(2), SystemLayout::multi_cavity(2, 1).unwrap())
    }

    #[test]
    fn every_segment_hamiltonian_is_hermitian() {
        let (p, l) = small();
        let drive = PulseDrive { qutrit: 2, rabi: p.rabi[1], phase: 0.3, transition: Transition::Upper };
        let specs = [
            HamiltonianSpec::pulse(vec![drive], true),
            HamiltonianSpec::qutrit_cavity(2, true),
            HamiltonianSpec::two_qutrit_cavity(1, 1, true),
            HamiltonianSpec::idle(true),
        ];
        for spec in &specs {
            let h = segment_terms(spec, &p, &l).unwrap();
            for t in [0.0, 1.3e-9, 7.7e-8] {
                assert!(h.at(t).hermiticity_error() < 1e-9, "{:?}", spec.kind);
            }
        }
    }

    #[test]
    fn unwanted_pulse_term_rotates_at_minus_anharmonicity() {
        let (p, l) = small();
        let up = PulseDrive { qutrit: 2, rabi: p.rabi[1], phase: 0.0, transition: Transition::Upper };
        let h = pulse_terms(&up, &p, &l, true).unwrap();
        assert_eq!(h.terms().len(), 2);
        assert_eq!(h.terms()[1].frequency, -p.pulse_detuning[1]);
        let low = PulseDrive { transition: Transition::Lower, ..up };
        assert_eq!(pulse_terms(&low, &p, &l, true).unwrap().terms().len(), 1);
    }

    #[test]
    fn ideal_kinds_have_no_rotating_terms() {
        let (p, l) = small();
        let h = segment_terms(&HamiltonianSpec::two_qutrit_cavity(2, 2, false), &p, &l).unwrap();
        assert_eq!(h.max_frequency(), 0.0);
        assert_eq!(h.terms().len(), 2);
        assert!(segment_terms(&HamiltonianSpec::idle(false), &p, &l).unwrap().terms().is_empty());
    }

    #[test]
    fn crosstalk_runs_at_cavity_spacing() {
        let p = PhysicalParams::reference_defaults(3);
        let l = SystemLayout::multi_cavity(3, 1).unwrap();
        let h = crosstalk_terms(&p, &l).unwrap();
        assert_eq!(h.terms().len(), 3);
        assert!((h.max_frequency() - angular_mhz(2000.0)).abs() < 1e-3);
    }

    #[test]
    fn bad_indices_are_rejected() {
        let (p, l) = small();
        assert!(segment_terms(&HamiltonianSpec::qutrit_cavity(3, true), &p, &l).is_err());
        assert!(segment_terms(&HamiltonianSpec::pulse(Vec::new(), true), &p, &l).is_err());
        assert!(h_pulse_ideal(1, &p, &l).is_err());
        let mut h = TermHamiltonian::new(4);
        assert!(h.push(SparseOperator::identity(3), C64::from(1.0), 0.0).is_err());
        h.push(SparseOperator::identity(4), C64::new(0.0, 0.0), 0.0).unwrap();
        assert!(h.terms().is_empty());
    }

    #[test]
    fn validation_names_the_field() {
        let (mut p, l) = small();
        p.qutrit_noise[2].dephase_1 = -1.0;
        let e = p.validate(&l).unwrap_err().to_string();
        assert!(e.contains("qutrit_noise[2].dephase_1"), "{e}");
        let (mut p, l) = small();
        p.g.pop();
        assert!(p.validate(&l).unwrap_err().to_string().contains("g:"));
    }

    #[test]
    fn coupling_ratio_rescales_mu_only() {
        let p = PhysicalParams::reference_defaults(3);
        let q = p.with_coupling_ratio(0.97).unwrap();
        assert!((q.coupling_ratio() - 0.97).abs() < 1e-15);
        assert!((q.mu_unwanted[1] / q.mu[1] - SQRT_2).abs() < 1e-12);
        assert_eq!(q.g, p.g);
        assert_eq!(p.with_coupling_ratio(1.0).unwrap(), p);
        assert!(p.with_coupling_ratio(0.0).is_err());
    }

    #[test]
    fn crosstalk_estimate_and_lifetime() {
        let g = angular_mhz(10.0);
        let e = estimate_crosstalk(&[1e-15; 3], 97e-15, &[g; 3]).unwrap();
        assert!(e.iter().all(|x| (x / g - 0.01).abs() < 1e-12));
        assert!(estimate_crosstalk(&[0.0], 1e-15, &[g]).is_err());
        assert!(estimate_crosstalk(&[1e-15], 1e-15, &[]).is_err());
        let t = cavity_lifetime(3.1e5, angular_mhz(5000.0)).unwrap();
        assert!((t - 9.867e-6).abs() < 1e-9);
        assert!((cavity_lifetime(6.2e5, angular_mhz(5000.0)).unwrap() / t - 2.0).abs() < 1e-12);
        assert!(cavity_lifetime(-1.0, 1.0).is_err());
    }
}
