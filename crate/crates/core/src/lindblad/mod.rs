//! Master-equation integration over a compiled schedule.
//!
//! ```text
//! dρ/dt = −i[H̃(t), ρ] + Σ κ L[a] + Σ γ L[σ⁻] + Σ γ_φ (PρP − ½Pρ − ½ρP)
//! ```
//!
//! [`lindblad_rhs`] evaluates this directly from sparse operators and dense
//! products. The integrator in [`engine`] evaluates the same generator on the
//! subset of basis states the dynamics can reach, which is much faster and is
//! checked against the direct form in the tests.

mod engine;
mod noise;

pub use engine::{integrate, write_snapshots_csv, IntegrationOutput, Integrator, SegmentSnapshot};
pub use noise::{DephasingChannel, JumpChannel, NoiseModel};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::TermHamiltonian;
use crate::hilbert::{DensityMatrix, SparseOperator, C64};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Rk4,
    AdaptiveDp45,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntegratorOptions {
    pub method: Method,
    /// Largest phase a rotating term may advance in one fixed step (rad).
    pub max_phase_per_step: f64,
    pub min_steps_per_segment: usize,
    /// Multiplies the fixed step; used for convergence checks.
    pub step_scale: f64,
    pub rtol: f64,
    pub atol: f64,
    /// Rotating phases use protocol time rather than restarting per segment.
    pub global_clock: bool,
    /// Evolve only the basis states reachable from the current support.
    pub restrict_support: bool,
    pub trace_drift_limit: f64,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        Self {
            method: Method::Rk4,
            max_phase_per_step: 2.0 * std::f64::consts::PI / 20.0,
            min_steps_per_segment: 100,
            step_scale: 1.0,
            rtol: 1e-8,
            atol: 1e-10,
            global_clock: true,
            restrict_support: true,
            trace_drift_limit: 1e-6,
        }
    }
}

impl IntegratorOptions {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("max_phase_per_step", self.max_phase_per_step),
            ("step_scale", self.step_scale),
            ("rtol", self.rtol),
            ("atol", self.atol),
            ("trace_drift_limit", self.trace_drift_limit),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParams(format!("integrator.{name} must be positive, got {v}")));
            }
        }
        if self.min_steps_per_segment == 0 {
            return Err(Error::InvalidParams("integrator.min_steps_per_segment must be positive".into()));
        }
        Ok(())
    }
}

/// `ΛρΛ† − ½{Λ†Λ, ρ}`.
pub fn dissipator(op: &SparseOperator, rho: &DensityMatrix) -> Result<DensityMatrix> {
    if op.dim() != rho.dim() {
        return Err(Error::DimensionMismatch { expected: rho.dim(), found: op.dim() });
    }
    let adj = op.adjoint();
    let n = adj.matmul(op)?;
    let mut out = rho.left_mul(op)?.right_mul(&adj)?;
    out.add_scaled(&rho.left_mul(&n)?, C64::from(-0.5))?;
    out.add_scaled(&rho.right_mul(&n)?, C64::from(-0.5))?;
    Ok(out)
}

/// The master-equation right-hand side at time `t`, built from full sparse
/// operators.
pub fn lindblad_rhs(
    rho: &DensityMatrix,
    t: f64,
    hamiltonian: &TermHamiltonian,
    noise: &NoiseModel,
    layout: &crate::hilbert::SystemLayout,
) -> Result<DensityMatrix> {
    if rho.dim() != layout.dim() || hamiltonian.dim() != layout.dim() {
        return Err(Error::DimensionMismatch { expected: layout.dim(), found: rho.dim() });
    }
    let h = hamiltonian.at(t);
    let mut out = rho.left_mul(&h)?;
    out.add_scaled(&rho.right_mul(&h)?, C64::from(-1.0))?;
    let mut out = {
        let data = out.data().iter().map(|x| x * C64::new(0.0, -1.0)).collect();
        DensityMatrix::from_data(rho.dim(), data)?
    };
    for ch in noise.channels(layout)? {
        out.add_scaled(&dissipator(&ch.operator, rho)?, C64::from(ch.rate))?;
    }
    for ch in noise.dephasing(layout)? {
        let p = &ch.projector;
        let mut term = rho.left_mul(p)?.right_mul(p)?;
        term.add_scaled(&rho.left_mul(p)?, C64::from(-0.5))?;
        term.add_scaled(&rho.right_mul(p)?, C64::from(-0.5))?;
        out.add_scaled(&term, C64::from(ch.rate))?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::{HamiltonianSpec, PhysicalParams, QutritRates};
    use crate::hilbert::{basis_state, transition_op, StateVector, SystemLayout};
    use crate::schedule::{GateSchedule, ScheduleSegment, SegmentClass};

    fn idle_schedule(duration: f64) -> GateSchedule {
        let layout = SystemLayout::multi_cavity(2, 1).unwrap();
        let seg = ScheduleSegment {
            label: "wait".into(),
            operation: None,
            class: SegmentClass::Adjust,
            duration,
            hamiltonian: HamiltonianSpec::idle(false),
        };
        GateSchedule { name: "idle".into(), layout, params: PhysicalParams::reference_defaults(2), segments: vec![seg] }
    }

    #[test]
    fn options_validation_names_field() {
        let o = IntegratorOptions { step_scale: 0.0, ..Default::default() };
        assert!(o.validate().unwrap_err().to_string().contains("integrator.step_scale"));
        let o = IntegratorOptions { min_steps_per_segment: 0, ..Default::default() };
        assert!(o.validate().is_err());
        assert!(serde_json::from_str::<IntegratorOptions>(r#"{"tolerance": 1}"#).is_err());
        let o: IntegratorOptions = serde_json::from_str(r#"{"method": "adaptive_dp45"}"#).unwrap();
        assert_eq!(o.method, Method::AdaptiveDp45);
    }

    #[test]
    fn dissipator_of_lowering_operator() {
        let s = transition_op(0, 1).unwrap();
        let rho = DensityMatrix::from_pure(&StateVector::new(vec![C64::from(0.6), C64::from(0.8), C64::from(0.0)]));
        let d = dissipator(&s, &rho).unwrap();
        assert!((d.get(0, 0).re - 0.64).abs() < 1e-15);
        assert!((d.get(1, 1).re + 0.64).abs() < 1e-15);
        assert!((d.get(0, 1).re + 0.24).abs() < 1e-15);
        assert!(d.trace().norm() < 1e-15);
        assert!(dissipator(&SparseOperator::identity(2), &rho).is_err());
    }

    #[test]
    fn noise_channels_skip_zero_rates() {
        let layout = SystemLayout::multi_cavity(2, 1).unwrap();
        let mut noise = NoiseModel::noiseless(&layout);
        assert!(noise.is_noiseless());
        assert!(noise.channels(&layout).unwrap().is_empty());
        noise.qutrits[2] = QutritRates { relax_12: 1.0, ..QutritRates::ZERO };
        noise.cavity_decay[1] = 2.0;
        let labels: Vec<String> = noise.channels(&layout).unwrap().into_iter().map(|c| c.label).collect();
        assert_eq!(labels, ["a:relax_12", "c2:decay"]);
        noise.cavity_decay[0] = -1.0;
        assert!(noise.validate(&layout).unwrap_err().to_string().contains("noise.cavity_decay[0]"));
        noise.cavity_decay.pop();
        assert!(noise.validate(&layout).is_err());
    }

    #[test]
    fn integrator_rejects_bad_inputs() {
        let s = idle_schedule(1e-9);
        let layout = s.layout.clone();
        let psi = basis_state(&[1, 0, 0, 0, 0], &layout).unwrap();
        let rho = DensityMatrix::from_pure(&psi);
        assert!(matches!(Integrator::new(&s).run(&DensityMatrix::zeros(3)), Err(Error::DimensionMismatch { .. })));
        let mut skew = rho.clone();
        skew.data_mut()[1] = C64::from(0.5);
        assert!(matches!(Integrator::new(&s).run(&skew), Err(Error::NotHermitian(_))));
        let refs = vec![psi.clone(), psi];
        assert!(Integrator::new(&s).references(&refs).run(&rho).is_err());
        let bad = IntegratorOptions { rtol: -1.0, ..Default::default() };
        assert!(Integrator::new(&s).options(bad).run(&rho).is_err());
    }

    #[test]
    fn snapshots_and_zero_length_segments() {
        let s = idle_schedule(0.0);
        let psi = basis_state(&[1, 1, 0, 0, 0], &s.layout).unwrap();
        let refs = vec![psi.clone()];
        let out = Integrator::new(&s).references(&refs).run(&DensityMatrix::from_pure(&psi)).unwrap();
        assert_eq!(out.steps, 0);
        assert_eq!(out.snapshots.len(), 1);
        assert!((out.snapshots[0].fidelity.unwrap() - 1.0).abs() < 1e-15);
        let mut csv = Vec::new();
        write_snapshots_csv(&out.snapshots, &mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert!(text.starts_with("segment,label,t_end_s,steps,support,trace,purity,fidelity\n"));
        assert!(!text.contains('\r'));
    }
}
