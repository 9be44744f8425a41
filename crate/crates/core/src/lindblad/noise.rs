use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::{PhysicalParams, QutritRates};
use crate::hilbert::{annihilation_op, embed, transition_op, SparseOperator, Subsystem, SystemLayout};

/// Relaxation, dephasing and cavity-decay rates (1/s).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    /// Work qutrits `1..=n` followed by the ancilla.
    pub qutrits: Vec<QutritRates>,
    pub cavity_decay: Vec<f64>,
}

/// A jump operator entering as `rate · L[operator]`.
#[derive(Clone, Debug)]
pub struct JumpChannel {
    pub label: String,
    pub rate: f64,
    pub operator: SparseOperator,
}

/// A projector entering as `rate · (PρP − ½Pρ − ½ρP)`.
#[derive(Clone, Debug)]
pub struct DephasingChannel {
    pub label: String,
    pub rate: f64,
    pub projector: SparseOperator,
}

impl NoiseModel {
    pub fn from_params(params: &PhysicalParams) -> Self {
        Self { qutrits: params.qutrit_noise.clone(), cavity_decay: params.cavity_decay.clone() }
    }

    pub fn noiseless(layout: &SystemLayout) -> Self {
        Self { qutrits: vec![QutritRates::ZERO; layout.work_qutrits() + 1], cavity_decay: vec![0.0; layout.cavities()] }
    }

    pub fn is_noiseless(&self) -> bool {
        let q = self.qutrits.iter().all(|r| *r == QutritRates::ZERO);
        q && self.cavity_decay.iter().all(|&k| k == 0.0)
    }

    pub fn validate(&self, layout: &SystemLayout) -> Result<()> {
        if self.qutrits.len() != layout.work_qutrits() + 1 {
            return Err(Error::InvalidParams(format!(
                "noise: expected {} qutrit rate sets, found {}",
                layout.work_qutrits() + 1,
                self.qutrits.len()
            )));
        }
        if self.cavity_decay.len() != layout.cavities() {
            return Err(Error::InvalidParams(format!(
                "noise: expected {} cavity decay rates, found {}",
                layout.cavities(),
                self.cavity_decay.len()
            )));
        }
        for (i, r) in self.qutrits.iter().enumerate() {
            for (name, v) in [
                ("relax_01", r.relax_01),
                ("relax_12", r.relax_12),
                ("relax_02", r.relax_02),
                ("dephase_1", r.dephase_1),
                ("dephase_2", r.dephase_2),
            ] {
                if !(v.is_finite() && v >= 0.0) {
                    return Err(Error::InvalidParams(format!("noise.qutrits[{i}].{name} must be non-negative, got {v}")));
                }
            }
        }
        for (i, &k) in self.cavity_decay.iter().enumerate() {
            if !(k.is_finite() && k >= 0.0) {
                return Err(Error::InvalidParams(format!("noise.cavity_decay[{i}] must be non-negative, got {k}")));
            }
        }
        Ok(())
    }

    fn qutrit_subsystems(layout: &SystemLayout) -> Vec<(String, Subsystem)> {
        let mut out: Vec<_> = (1..=layout.work_qutrits()).map(|l| (format!("q{l}"), Subsystem::Work(l))).collect();
        out.push(("a".to_string(), Subsystem::Ancilla));
        out
    }

    /// Jump channels with nonzero rate: `σ⁻_{01}`, `σ⁻_{12}`, `σ⁻_{02}` per
    /// qutrit and `a_l` per cavity.
    pub fn channels(&self, layout: &SystemLayout) -> Result<Vec<JumpChannel>> {
        self.validate(layout)?;
        let mut out = Vec::new();
        for ((name, sub), r) in Self::qutrit_subsystems(layout).into_iter().zip(&self.qutrits) {
            for (suffix, (lo, hi), rate) in [("01", (0, 1), r.relax_01), ("12", (1, 2), r.relax_12), ("02", (0, 2), r.relax_02)] {
                if rate > 0.0 {
                    out.push(JumpChannel {
                        label: format!("{name}:relax_{suffix}"),
                        rate,
                        operator: embed(&transition_op(lo, hi)?, sub, layout)?,
                    });
                }
            }
        }
        let a = annihilation_op(layout.photon_cutoff())?;
        for (c, &kappa) in self.cavity_decay.iter().enumerate() {
            if kappa > 0.0 {
                out.push(JumpChannel {
                    label: format!("c{}:decay", c + 1),
                    rate: kappa,
                    operator: embed(&a, Subsystem::Cavity(c + 1), layout)?,
                });
            }
        }
        Ok(out)
    }

    /// Dephasing projectors `σ_{11}`, `σ_{22}` per qutrit with nonzero rate.
    pub fn dephasing(&self, layout: &SystemLayout) -> Result<Vec<DephasingChannel>> {
        self.validate(layout)?;
        let mut out = Vec::new();
        for ((name, sub), r) in Self::qutrit_subsystems(layout).into_iter().zip(&self.qutrits) {
            for (level, rate) in [(1, r.dephase_1), (2, r.dephase_2)] {
                if rate > 0.0 {
                    out.push(DephasingChannel {
                        label: format!("{name}:dephase_{level}"),
                        rate,
                        projector: embed(&transition_op(level, level)?, sub, layout)?,
                    });
                }
            }
        }
        Ok(out)
    }
}
