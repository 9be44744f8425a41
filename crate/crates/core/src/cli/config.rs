//! Run configuration: a JSON document whose missing fields fall back to the
//! superconducting-circuit defaults. Frequencies are given as `f/2π` in MHz,
//! times in ns and lifetimes in μs.

use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::analysis::{default_c_grid, default_dt_grid_ns, SimulationSetup};
use crate::error::{Error, Result};
use crate::hamiltonian::{angular_mhz, CrosstalkPair, PhysicalParams, QutritRates};
use crate::lindblad::IntegratorOptions;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Number of work qutrits, one per cavity.
    pub n: usize,
    pub photon_cutoff: usize,
    pub g_over_2pi_mhz: f64,
    /// Work-qutrit coupling; `null` means `coupling_ratio · g`.
    pub mu_over_2pi_mhz: Option<f64>,
    pub coupling_ratio: f64,
    pub omega_over_2pi_mhz: f64,
    pub anharmonicity_over_2pi_mhz: f64,
    pub first_cavity_over_2pi_mhz: f64,
    pub cavity_spacing_over_2pi_mhz: f64,
    /// Inter-cavity crosstalk as a fraction of `g`.
    pub crosstalk_fraction: f64,
    /// Include unwanted couplings and crosstalk.
    pub modified: bool,
    pub tau_adjust_ns: f64,
    /// Timing error added to every pulse and exchange in `simulate`.
    pub time_error_ns: f64,
    pub noise: NoiseConfig,
    pub atom: AtomConfig,
    pub integrator: IntegratorOptions,
    pub sweep: SweepConfig,
}

/// Lifetimes `γ⁻¹` in μs; `null` switches a channel off.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseConfig {
    pub enabled: bool,
    pub relax_01_us: Option<f64>,
    pub relax_12_us: Option<f64>,
    pub relax_02_us: Option<f64>,
    pub dephase_1_us: Option<f64>,
    pub dephase_2_us: Option<f64>,
    pub cavity_us: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AtomConfig {
    pub g_over_2pi_mhz: f64,
    pub omega_over_2pi_mhz: f64,
    pub tau_move_ns: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub dt_ns: Vec<f64>,
    pub c: Vec<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            n: 3,
            photon_cutoff: 2,
            g_over_2pi_mhz: 10.0,
            mu_over_2pi_mhz: None,
            coupling_ratio: 1.0,
            omega_over_2pi_mhz: 15.0,
            anharmonicity_over_2pi_mhz: 600.0,
            first_cavity_over_2pi_mhz: 5000.0,
            cavity_spacing_over_2pi_mhz: 1000.0,
            crosstalk_fraction: 0.1,
            modified: true,
            tau_adjust_ns: 1.0,
            time_error_ns: 0.0,
            noise: NoiseConfig::default(),
            atom: AtomConfig::default(),
            integrator: IntegratorOptions::default(),
            sweep: SweepConfig::default(),
        }
    }
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            enabled: true,
            relax_01_us: Some(20.0),
            relax_12_us: Some(10.0),
            relax_02_us: Some(25.0),
            dephase_1_us: Some(15.0),
            dephase_2_us: Some(15.0),
            cavity_us: Some(10.0),
        }
    }
}

impl Default for AtomConfig {
    fn default() -> Self {
        Self { g_over_2pi_mhz: 0.05, omega_over_2pi_mhz: 0.05, tau_move_ns: 1000.0 }
    }
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self { dt_ns: default_dt_grid_ns(), c: default_c_grid() }
    }
}

fn rate(lifetime_us: Option<f64>) -> f64 {
    lifetime_us.map_or(0.0, |t| 1e6 / t)
}

impl NoiseConfig {
    fn rates(&self) -> (QutritRates, f64) {
        if !self.enabled {
            return (QutritRates::ZERO, 0.0);
        }
        let q = QutritRates {
            relax_01: rate(self.relax_01_us),
            relax_12: rate(self.relax_12_us),
            relax_02: rate(self.relax_02_us),
            dephase_1: rate(self.dephase_1_us),
            dephase_2: rate(self.dephase_2_us),
        };
        (q, rate(self.cavity_us))
    }
}

fn positive(field: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParams(format!("{field} must be positive, got {v}")))
    }
}

fn non_negative(field: &str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParams(format!("{field} must be non-negative, got {v}")))
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if !(2..=10).contains(&self.n) {
            return Err(Error::InvalidParams(format!("n must be between 2 and 10, got {}", self.n)));
        }
        if self.photon_cutoff == 0 {
            return Err(Error::InvalidParams("photon_cutoff must be at least 1".into()));
        }
        positive("g_over_2pi_mhz", self.g_over_2pi_mhz)?;
        if let Some(mu) = self.mu_over_2pi_mhz {
            positive("mu_over_2pi_mhz", mu)?;
        }
        positive("coupling_ratio", self.coupling_ratio)?;
        positive("omega_over_2pi_mhz", self.omega_over_2pi_mhz)?;
        positive("anharmonicity_over_2pi_mhz", self.anharmonicity_over_2pi_mhz)?;
        positive("first_cavity_over_2pi_mhz", self.first_cavity_over_2pi_mhz)?;
        non_negative("cavity_spacing_over_2pi_mhz", self.cavity_spacing_over_2pi_mhz)?;
        non_negative("crosstalk_fraction", self.crosstalk_fraction)?;
        non_negative("tau_adjust_ns", self.tau_adjust_ns)?;
        if !self.time_error_ns.is_finite() {
            return Err(Error::InvalidParams("time_error_ns must be finite".into()));
        }
        let n = &self.noise;
        for (field, v) in [
            ("noise.relax_01_us", n.relax_01_us),
            ("noise.relax_12_us", n.relax_12_us),
            ("noise.relax_02_us", n.relax_02_us),
            ("noise.dephase_1_us", n.dephase_1_us),
            ("noise.dephase_2_us", n.dephase_2_us),
            ("noise.cavity_us", n.cavity_us),
        ] {
            if let Some(v) = v {
                positive(field, v)?;
            }
        }
        positive("atom.g_over_2pi_mhz", self.atom.g_over_2pi_mhz)?;
        positive("atom.omega_over_2pi_mhz", self.atom.omega_over_2pi_mhz)?;
        non_negative("atom.tau_move_ns", self.atom.tau_move_ns)?;
        for (i, &d) in self.sweep.dt_ns.iter().enumerate() {
            if !d.is_finite() {
                return Err(Error::InvalidParams(format!("sweep.dt_ns[{i}] must be finite, got {d}")));
            }
        }
        for (i, &c) in self.sweep.c.iter().enumerate() {
            positive(&format!("sweep.c[{i}]"), c)?;
        }
        self.integrator.validate()
    }

    /// Parameters for `n` qutrits. The per-qutrit and per-cavity values are
    /// uniform; unwanted strengths follow the transmon ratios `Ω/√2`, `√2μ`
    /// and `√2g`.
    pub fn physical_params(&self, n: usize) -> PhysicalParams {
        let g = angular_mhz(self.g_over_2pi_mhz);
        let mu = self.mu_over_2pi_mhz.map_or(self.coupling_ratio * g, angular_mhz);
        let omega = angular_mhz(self.omega_over_2pi_mhz);
        let anharm = angular_mhz(self.anharmonicity_over_2pi_mhz);
        let (q, kappa) = self.noise.rates();
        let mut p = PhysicalParams::reference_defaults(n);
        p.rabi = vec![omega; n];
        p.rabi_unwanted = vec![omega * FRAC_1_SQRT_2; n];
        p.pulse_detuning = vec![anharm; n];
        p.mu = vec![mu; n];
        p.mu_unwanted = vec![mu * SQRT_2; n];
        p.qutrit_detuning = vec![anharm; n];
        p.g = vec![g; n];
        p.g_unwanted = vec![g * SQRT_2; n];
        p.ancilla_detuning = vec![anharm; n];
        p.cavity_freq = (0..n).map(|l| angular_mhz(self.first_cavity_over_2pi_mhz + self.cavity_spacing_over_2pi_mhz * l as f64)).collect();
        p.crosstalk = (1..=n)
            .flat_map(|l| (l + 1..=n).map(move |k| (l, k)))
            .map(|(first, second)| CrosstalkPair { first, second, strength: self.crosstalk_fraction * g })
            .collect();
        p.qutrit_noise = vec![q; n + 1];
        p.cavity_decay = vec![kappa; n];
        p.tau_adjust = self.tau_adjust_ns * 1e-9;
        p
    }

    pub fn atom_params(&self) -> PhysicalParams {
        let mut p = PhysicalParams::atom_defaults();
        let g = angular_mhz(self.atom.g_over_2pi_mhz);
        p.rabi = vec![angular_mhz(self.atom.omega_over_2pi_mhz); p.rabi.len()];
        p.mu = vec![g; p.mu.len()];
        p.g = vec![g];
        p.tau_move = self.atom.tau_move_ns * 1e-9;
        p
    }

    pub fn setup(&self) -> SimulationSetup {
        SimulationSetup {
            qubits: self.n,
            photon_cutoff: self.photon_cutoff,
            modified: self.modified,
            params: self.physical_params(self.n),
            options: self.integrator.clone(),
        }
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.to_json().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Compact JSON with fields in declaration order.
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }
}

/// Applies `key.path=value` overrides to a JSON document. The value is parsed
/// as JSON when possible and taken as a string otherwise.
pub fn apply_overrides(doc: &mut Value, overrides: &[String]) -> Result<()> {
    for item in overrides {
        let (path, raw) =
            item.split_once('=').ok_or_else(|| Error::InvalidParams(format!("override '{item}' is not of the form key=value")))?;
        let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
        let mut node = &mut *doc;
        let keys: Vec<&str> = path.split('.').collect();
        for (i, key) in keys.iter().enumerate() {
            if key.is_empty() {
                return Err(Error::InvalidParams(format!("override '{item}' has an empty key")));
            }
            let obj = node
                .as_object_mut()
                .ok_or_else(|| Error::InvalidParams(format!("override '{item}': '{}' is not an object", keys[..i].join("."))))?;
            if i + 1 == keys.len() {
                obj.insert(key.to_string(), value.clone());
                break;
            }
            node = obj.entry(key.to_string()).or_insert_with(|| Value::Object(Default::default()));
        }
    }
    Ok(())
}

/// Parses a config document, applies overrides, fills defaults and validates.
pub fn parse_config(text: Option<&str>, overrides: &[String]) -> Result<RunConfig> {
    let mut doc: Value = match text {
        Some(t) => serde_json::from_str(t).map_err(|e| Error::Serialization(format!("config: {e}")))?,
        None => Value::Object(Default::default()),
    };
    if !doc.is_object() {
        return Err(Error::Serialization("config: top level must be a JSON object".into()));
    }
    apply_overrides(&mut doc, overrides)?;
    let config: RunConfig = serde_json::from_value(doc).map_err(|e| Error::Serialization(format!("config: {e}")))?;
    config.validate()?;
    Ok(config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::PhysicalParams;

    #[test]
    fn empty_document_gives_defaults() {
        let c = parse_config(Some("{}"), &[]).unwrap();
        assert_eq!(c, RunConfig::default());
        let p = c.physical_params(3);
        let d = PhysicalParams::reference_defaults(3);
        assert_eq!(p.g, d.g);
        assert_eq!(p.rabi, d.rabi);
        assert_eq!(p.mu, d.mu);
        assert_eq!(p.crosstalk, d.crosstalk);
        for (a, b) in p.qutrit_noise.iter().zip(&d.qutrit_noise) {
            assert!((a.relax_12 - b.relax_12).abs() < 1e-6 * b.relax_12);
        }
        assert_eq!(p.tau_adjust, d.tau_adjust);
    }

    #[test]
    fn unknown_key_is_rejected() {
        let e = parse_config(Some(r#"{"g_mhz": 3}"#), &[]).unwrap_err();
        assert!(e.to_string().contains("g_mhz"), "{e}");
        assert!(parse_config(Some(r#"{"noise": {"t1": 3}}"#), &[]).is_err());
    }

    #[test]
    fn negative_lifetime_names_field() {
        let e = parse_config(Some(r#"{"noise": {"relax_12_us": -1}}"#), &[]).unwrap_err();
        assert!(e.to_string().contains("noise.relax_12_us"), "{e}");
    }

    #[test]
    fn overrides_reach_nested_fields() {
        let c = parse_config(None, &["noise.enabled=false".into(), "integrator.method=\"adaptive_dp45\"".into(), "n=4".into()]).unwrap();
        assert!(!c.noise.enabled);
        assert_eq!(c.n, 4);
        assert!(parse_config(None, &["n".into()]).is_err());
        assert!(parse_config(None, &["n.x=1".into()]).is_err());
    }

    #[test]
    fn hash_tracks_content() {
        let a = RunConfig::default();
        let mut b = a.clone();
        assert_eq!(a.hash(), b.hash());
        b.coupling_ratio = 0.99;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }

    #[test]
    fn bad_top_level_is_a_parse_error() {
        assert!(matches!(parse_config(Some("[1]"), &[]), Err(Error::Serialization(_))));
        assert!(matches!(parse_config(Some("{"), &[]), Err(Error::Serialization(_))));
    }
}
