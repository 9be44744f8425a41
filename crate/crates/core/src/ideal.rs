//! Closed-form resonant dynamics and an exact dense propagator.
//!
//! The closed forms act on one basis component at a time:
//!
//! * pulse: `|1⟩ → cos θ|1⟩ − i e^{−iφ} sin θ|2⟩`, `|2⟩ → −i e^{iφ} sin θ|1⟩ + cos θ|2⟩`;
//! * ancilla–cavity exchange: `|1,0⟩ → cos θ|1,0⟩ − i sin θ|0,1⟩` and its partner row;
//! * two qutrits sharing a cavity at `μ = g`: the bright combination
//!   `(|1,0,0⟩ + |0,1,0⟩)/√2` swaps with `|0,0,1⟩` at rate `√2 g` while
//!   `(|1,0,0⟩ − |0,1,0⟩)/√2` stays dark.
//!
//! A qutrit parked in |2⟩ does not see the `|0⟩↔|1⟩` cavity coupling, so
//! during a two-qutrit segment the remaining pair exchanges as in the
//! single-qutrit case. Components holding two or more excitations in the
//! coupled subsystems are outside the modelled sectors; amplitudes there above
//! [`SECTOR_TOLERANCE`] are rejected and smaller ones are discarded.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_1_SQRT_2;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::hamiltonian::{HamiltonianSpec, PhysicalParams, Transition};
use crate::hilbert::{SparseOperator, StateVector, Subsystem, SystemLayout, C64, DENSE_LIMIT, ZERO};
use crate::schedule::{GateSchedule, ScheduleSegment, SegmentClass};

/// Amplitude below which a component outside a modelled sector is dropped.
pub const SECTOR_TOLERANCE: f64 = 1e-12;

const I: C64 = C64::new(0.0, 1.0);

/// A state stored as its nonzero amplitudes, keyed by canonical index.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SparseState {
    amps: BTreeMap<usize, C64>,
}

impl SparseState {
    pub fn basis(index: usize) -> Self {
        let mut amps = BTreeMap::new();
        amps.insert(index, C64::new(1.0, 0.0));
        Self { amps }
    }

    pub fn from_state_vector(psi: &StateVector) -> Self {
        let amps = psi.amplitudes().iter().enumerate().filter(|(_, a)| **a != ZERO).map(|(i, a)| (i, *a)).collect();
        Self { amps }
    }

    pub fn to_state_vector(&self, dim: usize) -> Result<StateVector> {
        let mut v = StateVector::zeros(dim);
        for (&i, &a) in &self.amps {
            if i >= dim {
                return Err(Error::DimensionMismatch { expected: dim, found: i + 1 });
            }
            v.amplitudes_mut()[i] = a;
        }
        Ok(v)
    }

    pub fn get(&self, index: usize) -> C64 {
        self.amps.get(&index).copied().unwrap_or(ZERO)
    }

    pub fn add(&mut self, index: usize, a: C64) {
        *self.amps.entry(index).or_insert(ZERO) += a;
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, C64)> + '_ {
        self.amps.iter().map(|(&i, &a)| (i, a))
    }

    pub fn len(&self) -> usize {
        self.amps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amps.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.amps.values().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Applies a linear map given by its action on basis components.
    fn map<F>(&self, mut f: F) -> Result<Self>
    where
        F: FnMut(usize, C64, &mut Vec<(usize, C64)>) -> Result<()>,
    {
        let mut out = SparseState::default();
        let mut buf = Vec::with_capacity(3);
        for (&i, &a) in &self.amps {
            buf.clear();
            f(i, a, &mut buf)?;
            for &(j, b) in &buf {
                out.add(j, b);
            }
        }
        out.amps.retain(|_, a| *a != ZERO);
        Ok(out)
    }
}

fn sector_violation(what: &str, index: usize, a: C64, layout: &SystemLayout) -> Result<()> {
    if a.norm() > SECTOR_TOLERANCE {
        return Err(Error::SectorViolation(format!(
            "{what}: component {:?} with amplitude {:.3e} is outside the modelled sector",
            layout.labels_of(index),
            a.norm()
        )));
    }
    Ok(())
}

/// Two-level rotation on levels `(lo, hi)` of subsystem position `p`.
#[allow(clippy::too_many_arguments)]
fn rotate(i: usize, a: C64, layout: &SystemLayout, p: usize, (lo, hi): (usize, usize), theta: f64, phi: f64, out: &mut Vec<(usize, C64)>) {
    let level = layout.level_at(i, p);
    let step = (hi - lo) * layout.strides()[p];
    let (c, s) = (theta.cos(), theta.sin());
    if level == lo {
        out.push((i, a * c));
        out.push((i + step, a * (-I) * C64::from_polar(1.0, -phi) * s));
    } else if level == hi {
        out.push((i - step, a * (-I) * C64::from_polar(1.0, phi) * s));
        out.push((i, a * c));
    } else {
        out.push((i, a));
    }
}

/// Single-emitter exchange with a cavity at angle `theta` on the emitter's
/// |0⟩↔|1⟩ transition. An emitter in |2⟩ is dark.
fn exchange(i: usize, a: C64, layout: &SystemLayout, emitter: usize, cavity: usize, theta: f64, out: &mut Vec<(usize, C64)>) -> Result<()> {
    let e = layout.level_at(i, emitter);
    let n = layout.level_at(i, cavity);
    let (se, sc) = (layout.strides()[emitter], layout.strides()[cavity]);
    let (c, s) = (theta.cos(), theta.sin());
    match (e, n) {
        (2, _) | (0, 0) => out.push((i, a)),
        (1, 0) => {
            out.push((i, a * c));
            out.push((i - se + sc, a * (-I) * s));
        }
        (0, 1) => {
            out.push((i, a * c));
            out.push((i + se - sc, a * (-I) * s));
        }
        _ => sector_violation("exchange", i, a, layout)?,
    }
    Ok(())
}

/// Two qutrits (positions `q`, `anc`) resonant with one cavity at equal
/// coupling; `theta = g t`.
fn tavis_cummings(
    i: usize,
    a: C64,
    layout: &SystemLayout,
    (q, anc, cav): (usize, usize, usize),
    theta: f64,
    out: &mut Vec<(usize, C64)>,
) -> Result<()> {
    let (lq, la, lc) = (layout.level_at(i, q), layout.level_at(i, anc), layout.level_at(i, cav));
    if lq == 2 {
        return exchange(i, a, layout, anc, cav, theta, out);
    }
    if la == 2 {
        return exchange(i, a, layout, q, cav, theta, out);
    }
    let st = layout.strides();
    let base = i - lq * st[q] - la * st[anc] - lc * st[cav];
    let states = [base + st[q], base + st[anc], base + st[cav]];
    let angle = std::f64::consts::SQRT_2 * theta;
    let (c, s) = (angle.cos(), angle.sin());
    let stay = C64::from(0.5 * (1.0 + c));
    let cross = C64::from(0.5 * (c - 1.0));
    let emit = -I * (FRAC_1_SQRT_2 * s);
    let rows: [[C64; 3]; 3] = [[stay, cross, emit], [cross, stay, emit], [emit, emit, C64::from(c)]];
    match lq + la + lc {
        0 => out.push((i, a)),
        1 => {
            let k = if lq == 1 {
                0
            } else if la == 1 {
                1
            } else {
                2
            };
            for (target, coeff) in states.iter().zip(rows[k]) {
                out.push((*target, a * coeff));
            }
        }
        _ => sector_violation("two-qutrit exchange", i, a, layout)?,
    }
    Ok(())
}

fn pulse_sparse(
    state: &SparseState,
    layout: &SystemLayout,
    qutrit: usize,
    transition: Transition,
    theta: f64,
    phi: f64,
) -> Result<SparseState> {
    if theta.is_nan() || theta < 0.0 {
        return Err(Error::InvalidParams(format!("pulse area must be non-negative, got {theta}")));
    }
    let p = layout.position(Subsystem::Work(qutrit))?;
    state.map(|i, a, out| {
        rotate(i, a, layout, p, transition.levels(), theta, phi, out);
        Ok(())
    })
}

fn jc_sparse(state: &SparseState, layout: &SystemLayout, cavity: usize, theta: f64) -> Result<SparseState> {
    let anc = layout.position(Subsystem::Ancilla)?;
    let cav = layout.position(Subsystem::Cavity(cavity))?;
    state.map(|i, a, out| exchange(i, a, layout, anc, cav, theta, out))
}

fn tc_sparse(state: &SparseState, layout: &SystemLayout, qutrit: usize, cavity: usize, theta: f64) -> Result<SparseState> {
    let pos =
        (layout.position(Subsystem::Work(qutrit))?, layout.position(Subsystem::Ancilla)?, layout.position(Subsystem::Cavity(cavity))?);
    state.map(|i, a, out| tavis_cummings(i, a, layout, pos, theta, out))
}

fn check_dim(psi: &StateVector, layout: &SystemLayout) -> Result<()> {
    if psi.dim() != layout.dim() {
        return Err(Error::DimensionMismatch { expected: layout.dim(), found: psi.dim() });
    }
    Ok(())
}

/// Square pulse of area `theta = Ωt` and phase `phi` on qutrit `l`'s
/// |1⟩↔|2⟩ transition.
pub fn pulse_map(psi: &StateVector, layout: &SystemLayout, l: usize, theta: f64, phi: f64) -> Result<StateVector> {
    check_dim(psi, layout)?;
    pulse_sparse(&SparseState::from_state_vector(psi), layout, l, Transition::Upper, theta, phi)?.to_state_vector(layout.dim())
}

/// Same rotation on the |0⟩↔|1⟩ transition.
pub fn lower_pulse_map(psi: &StateVector, layout: &SystemLayout, l: usize, theta: f64, phi: f64) -> Result<StateVector> {
    check_dim(psi, layout)?;
    pulse_sparse(&SparseState::from_state_vector(psi), layout, l, Transition::Lower, theta, phi)?.to_state_vector(layout.dim())
}

/// Ancilla–cavity exchange for `theta = g t`.
pub fn jc_map(psi: &StateVector, layout: &SystemLayout, cavity: usize, theta: f64) -> Result<StateVector> {
    check_dim(psi, layout)?;
    jc_sparse(&SparseState::from_state_vector(psi), layout, cavity, theta)?.to_state_vector(layout.dim())
}

/// Qutrit and ancilla both resonant with `cavity` at `μ = g`, `theta = g t`.
pub fn tc_map(psi: &StateVector, layout: &SystemLayout, qutrit: usize, cavity: usize, theta: f64) -> Result<StateVector> {
    check_dim(psi, layout)?;
    tc_sparse(&SparseState::from_state_vector(psi), layout, qutrit, cavity, theta)?.to_state_vector(layout.dim())
}

/// `exp(−iHt)` as a dense matrix, via the eigendecomposition of `H`.
pub fn exact_propagator(h: &SparseOperator, t: f64) -> Result<DMatrix<C64>> {
    if h.dim() > DENSE_LIMIT {
        return Err(Error::DimensionGuard { dim: h.dim(), limit: DENSE_LIMIT });
    }
    let err = h.hermiticity_error();
    if err > 1e-12 * h.max_abs().max(1.0) {
        return Err(Error::NotHermitian(err));
    }
    let eig = h.to_dense().symmetric_eigen();
    let v = &eig.eigenvectors;
    let phases = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| C64::from_polar(1.0, -l * t)));
    Ok(v * phases * v.adjoint())
}

fn segment_sparse(segment: &ScheduleSegment, layout: &SystemLayout, params: &PhysicalParams, state: &SparseState) -> Result<SparseState> {
    let HamiltonianSpec { drives, qutrit, cavity, .. } = &segment.hamiltonian;
    let t = segment.duration;
    match segment.class {
        SegmentClass::Pulse => {
            let mut s = state.clone();
            for d in drives {
                s = pulse_sparse(&s, layout, d.qutrit, d.transition, d.rabi * t, d.phase)?;
            }
            Ok(s)
        }
        SegmentClass::TwoQutritResonant => {
            let (q, c) = match (qutrit, cavity) {
                (Some(q), Some(c)) => (*q, *c),
                _ => return Err(Error::InvalidParams(format!("segment '{}' lacks its qutrit/cavity", segment.label))),
            };
            let (g, mu) = (params.g[c - 1], params.mu[q - 1]);
            if (g - mu).abs() > 1e-12 * g.abs().max(mu.abs()) {
                return Err(Error::InvalidParams(format!(
                    "closed-form two-qutrit exchange needs μ = g (segment '{}': μ = {mu:e}, g = {g:e})",
                    segment.label
                )));
            }
            tc_sparse(state, layout, q, c, g * t)
        }
        SegmentClass::AncillaOnlyResonant => {
            let c = cavity.ok_or_else(|| Error::InvalidParams(format!("segment '{}' lacks its cavity", segment.label)))?;
            jc_sparse(state, layout, c, params.g[c - 1] * t)
        }
        SegmentClass::Adjust | SegmentClass::Transport => Ok(state.clone()),
    }
}

/// Runs a schedule on a sparse state with the closed-form maps.
pub fn apply_schedule_ideal_sparse(schedule: &GateSchedule, input: &SparseState) -> Result<SparseState> {
    let mut s = input.clone();
    for seg in &schedule.segments {
        s = segment_sparse(seg, &schedule.layout, &schedule.params, &s)?;
    }
    Ok(s)
}

/// Runs a schedule on a state vector with the closed-form maps.
pub fn apply_schedule_ideal(schedule: &GateSchedule, input: &StateVector) -> Result<StateVector> {
    check_dim(input, &schedule.layout)?;
    apply_schedule_ideal_sparse(schedule, &SparseState::from_state_vector(input))?.to_state_vector(schedule.layout.dim())
}

/// The ideal state after each segment of the schedule.
pub fn ideal_trajectory(schedule: &GateSchedule, input: &StateVector) -> Result<Vec<StateVector>> {
    check_dim(input, &schedule.layout)?;
    let dim = schedule.layout.dim();
    let mut s = SparseState::from_state_vector(input);
    let mut out = Vec::with_capacity(schedule.segments.len());
    for seg in &schedule.segments {
        s = segment_sparse(seg, &schedule.layout, &schedule.params, &s)?;
        out.push(s.to_state_vector(dim)?);
    }
    Ok(out)
}
