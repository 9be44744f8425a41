//! Gate-level figures of merit: input and target states, fidelity, truth
//! tables, and parameter sweeps over timing error and coupling ratio.

use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::PhysicalParams;
use crate::hilbert::{DensityMatrix, StateVector, SystemLayout, C64};
use crate::lindblad::{Integrator, IntegratorOptions, NoiseModel};
use crate::schedule::{apply_time_error, compile_nqubit, GateSchedule};

/// Components outside the computational sector below this are ignored.
const SECTOR_EPS: f64 = 1e-12;

fn computational_indices(layout: &SystemLayout) -> Result<Vec<(Vec<u8>, usize)>> {
    let n = layout.work_qutrits();
    if n > 20 {
        return Err(Error::InvalidLayout(format!("{n} qubits is too many to enumerate")));
    }
    (0..1usize << n)
        .map(|k| {
            let bits: Vec<u8> = (0..n).map(|q| ((k >> (n - 1 - q)) & 1) as u8).collect();
            let idx = layout.computational_index(&bits)?;
            Ok((bits, idx))
        })
        .collect()
}

/// Uniform superposition of all computational basis states with the ancilla
/// in |0⟩ and every cavity empty.
pub fn gate_input_state(layout: &SystemLayout) -> Result<StateVector> {
    let comp = computational_indices(layout)?;
    let amp = C64::from(1.0 / (comp.len() as f64).sqrt());
    let mut psi = StateVector::zeros(layout.dim());
    for (_, idx) in comp {
        psi.amplitudes_mut()[idx] = amp;
    }
    Ok(psi)
}

/// The controlled-phase image of `input`: the all-ones component changes sign.
pub fn ideal_output_state(input: &StateVector, layout: &SystemLayout) -> Result<StateVector> {
    if input.dim() != layout.dim() {
        return Err(Error::DimensionMismatch { expected: layout.dim(), found: input.dim() });
    }
    let comp = computational_indices(layout)?;
    let mut inside = vec![false; layout.dim()];
    comp.iter().for_each(|(_, i)| inside[*i] = true);
    if let Some((i, a)) = input.amplitudes().iter().enumerate().find(|(i, a)| !inside[*i] && a.norm() > SECTOR_EPS) {
        return Err(Error::SectorViolation(format!(
            "input has amplitude {:.3e} on {:?}, outside the computational sector",
            a.norm(),
            layout.labels_of(i)
        )));
    }
    let mut out = StateVector::zeros(layout.dim());
    for (bits, idx) in comp {
        let a = input.amplitudes()[idx];
        out.amplitudes_mut()[idx] = if bits.iter().all(|&b| b == 1) { -a } else { a };
    }
    Ok(out)
}

/// `√⟨ψ|ρ|ψ⟩`, clamped to `[0, 1]`.
pub fn fidelity(rho: &DensityMatrix, target: &StateVector) -> Result<f64> {
    let overlap = rho.expectation(target)?.re;
    Ok(overlap.clamp(0.0, 1.0).sqrt())
}

/// One computational input and where it ended up.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruthRow {
    pub input: Vec<u8>,
    /// Largest output component, when it is a computational state.
    pub output: Option<Vec<u8>>,
    /// Amplitude on `output`.
    pub coefficient: C64,
    /// Amplitude on the input state itself.
    pub diagonal: C64,
    /// Norm of everything except the `output` component.
    pub leakage: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruthTable {
    pub qubits: usize,
    pub rows: Vec<TruthRow>,
}

impl TruthTable {
    pub fn max_leakage(&self) -> f64 {
        self.rows.iter().map(|r| r.leakage).fold(0.0, f64::max)
    }

    pub fn is_diagonal(&self) -> bool {
        self.rows.iter().all(|r| r.output.as_ref() == Some(&r.input))
    }

    /// Largest `|diagonal − (−1)^{∏ bits}|` over the rows.
    pub fn controlled_phase_error(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| {
                let expected = if r.input.iter().all(|&b| b == 1) { -1.0 } else { 1.0 };
                (r.diagonal - C64::from(expected)).norm()
            })
            .fold(0.0, f64::max)
    }
}

/// Applies `gate` to every computational basis state and tabulates the result.
pub fn truth_table<F>(layout: &SystemLayout, gate: F) -> Result<TruthTable>
where
    F: Fn(&StateVector) -> Result<StateVector>,
{
    let comp = computational_indices(layout)?;
    let mut by_index = vec![None; layout.dim()];
    for (bits, idx) in &comp {
        by_index[*idx] = Some(bits.clone());
    }
    let mut rows = Vec::with_capacity(comp.len());
    for (bits, idx) in &comp {
        let mut input = StateVector::zeros(layout.dim());
        input.amplitudes_mut()[*idx] = C64::from(1.0);
        let out = gate(&input)?;
        if out.dim() != layout.dim() {
            return Err(Error::DimensionMismatch { expected: layout.dim(), found: out.dim() });
        }
        let amps = out.amplitudes();
        let (best, _) = amps.iter().enumerate().fold((0, -1.0), |(bi, bn), (i, a)| if a.norm() > bn { (i, a.norm()) } else { (bi, bn) });
        let rest: f64 = amps.iter().enumerate().filter(|(i, _)| *i != best).map(|(_, a)| a.norm_sqr()).sum();
        rows.push(TruthRow {
            input: bits.clone(),
            output: by_index[best].clone(),
            coefficient: amps[best],
            diagonal: amps[*idx],
            leakage: rest.sqrt(),
        });
    }
    Ok(TruthTable { qubits: layout.work_qutrits(), rows })
}

/// Everything needed to run the noisy gate at one operating point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulationSetup {
    pub qubits: usize,
    pub photon_cutoff: usize,
    /// Include unwanted couplings and crosstalk.
    pub modified: bool,
    pub params: PhysicalParams,
    pub options: IntegratorOptions,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunOutcome {
    pub fidelity: f64,
    pub trace: f64,
    pub steps: usize,
    pub runtime_s: f64,
}

impl SimulationSetup {
    /// Three qubits, up to two photons per cavity, default parameters and
    /// options.
    pub fn reference_defaults() -> Self {
        Self {
            qubits: 3,
            photon_cutoff: 2,
            modified: true,
            params: PhysicalParams::reference_defaults(3),
            options: IntegratorOptions::default(),
        }
    }

    /// The gate with every interaction lengthened by `dt` seconds and
    /// `μ_l = c·g_l`.
    pub fn schedule(&self, dt: f64, c: f64) -> Result<GateSchedule> {
        let params = self.params.with_coupling_ratio(c)?;
        let s = compile_nqubit(self.qubits, &params)?.with_model(self.modified).with_photon_cutoff(self.photon_cutoff)?;
        apply_time_error(&s, dt)
    }

    pub fn run(&self, dt: f64, c: f64) -> Result<RunOutcome> {
        let start = Instant::now();
        let schedule = self.schedule(dt, c)?;
        let layout = &schedule.layout;
        let input = gate_input_state(layout)?;
        let target = ideal_output_state(&input, layout)?;
        let out = Integrator::new(&schedule)
            .noise(NoiseModel::from_params(&schedule.params))
            .options(self.options.clone())
            .run(&DensityMatrix::from_pure(&input))?;
        Ok(RunOutcome {
            fidelity: fidelity(&out.final_state, &target)?,
            trace: out.final_state.trace().re,
            steps: out.steps,
            runtime_s: start.elapsed().as_secs_f64(),
        })
    }
}

/// One grid point of a sweep. A failed run keeps its error and has no
/// fidelity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub dt_ns: f64,
    pub c: f64,
    pub fidelity: Option<f64>,
    pub runtime_s: f64,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub dt_ns: Vec<f64>,
    pub c: Vec<f64>,
    /// Row-major over `dt_ns` × `c`.
    pub points: Vec<SweepPoint>,
    pub setup: SimulationSetup,
}

impl SweepResult {
    pub fn get(&self, dt_ns: f64, c: f64) -> Option<&SweepPoint> {
        self.points.iter().find(|p| p.dt_ns == dt_ns && p.c == c)
    }

    /// Smallest fidelity among points accepted by `filter`; `None` if any
    /// accepted point failed or none was accepted.
    pub fn min_fidelity<F: Fn(&SweepPoint) -> bool>(&self, filter: F) -> Option<f64> {
        let mut min: Option<f64> = None;
        for p in self.points.iter().filter(|p| filter(p)) {
            let f = p.fidelity?;
            min = Some(min.map_or(f, |m| m.min(f)));
        }
        min
    }

    /// Zeroes the runtimes so that repeated runs serialize identically.
    pub fn without_timing(mut self) -> Self {
        self.points.iter_mut().for_each(|p| p.runtime_s = 0.0);
        self
    }

    /// CSV with columns `dt_ns,c,fidelity,runtime_s`, preceded by `# ` lines
    /// from `preamble`. Failed points have an empty fidelity.
    pub fn write_csv<W: Write>(&self, mut writer: W, preamble: &[String]) -> Result<()> {
        for line in preamble {
            writeln!(writer, "# {line}")?;
        }
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(writer);
        w.write_record(["dt_ns", "c", "fidelity", "runtime_s"])?;
        for p in &self.points {
            w.write_record([
                p.dt_ns.to_string(),
                p.c.to_string(),
                p.fidelity.map(|f| f.to_string()).unwrap_or_default(),
                p.runtime_s.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Evenly spaced values `start, start + step, …` up to `stop` inclusive,
/// computed as `start + k·step` to avoid accumulated drift.
pub fn grid(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0 && start.is_finite() && stop.is_finite()) || stop < start {
        return Err(Error::InvalidParams(format!("bad grid {start}..={stop} step {step}")));
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|k| round_grid(start + k as f64 * step)).collect())
}

fn round_grid(x: f64) -> f64 {
    (x * 1e9).round() / 1e9
}

/// Default timing-error axis: −5 … 5 ns in 1 ns steps.
pub fn default_dt_grid_ns() -> Vec<f64> {
    (-5..=5).map(f64::from).collect()
}

/// Default coupling-ratio axis: 0.95 … 1.05 in steps of 0.01.
pub fn default_c_grid() -> Vec<f64> {
    (95..=105).map(|k| k as f64 / 100.0).collect()
}

/// Runs every `(dt_ns, c)` pair of the cross product on a pool of `jobs`
/// threads. Results come back in grid order.
pub fn sweep_2d(setup: &SimulationSetup, dt_ns: &[f64], c: &[f64], jobs: usize) -> Result<SweepResult> {
    let grid: Vec<(f64, f64)> = dt_ns.iter().flat_map(|&d| c.iter().map(move |&c| (d, c))).collect();
    let points = run_points(setup, &grid, jobs)?;
    Ok(SweepResult { dt_ns: dt_ns.to_vec(), c: c.to_vec(), points, setup: setup.clone() })
}

/// Timing-error sweep at `c = 1`.
pub fn sweep_dt(setup: &SimulationSetup, dt_ns: &[f64], jobs: usize) -> Result<SweepResult> {
    sweep_2d(setup, dt_ns, &[1.0], jobs)
}

/// Coupling-ratio sweep at `δt = 0`.
pub fn sweep_c(setup: &SimulationSetup, c: &[f64], jobs: usize) -> Result<SweepResult> {
    sweep_2d(setup, &[0.0], c, jobs)
}

/// Runs arbitrary grid points in order.
pub fn run_points(setup: &SimulationSetup, grid: &[(f64, f64)], jobs: usize) -> Result<Vec<SweepPoint>> {
    let pool =
        rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build().map_err(|e| Error::InvalidParams(format!("thread pool: {e}")))?;
    let point = |&(dt_ns, c): &(f64, f64)| {
        let start = Instant::now();
        match setup.run(dt_ns * 1e-9, c) {
            Ok(r) => SweepPoint { dt_ns, c, fidelity: Some(r.fidelity), runtime_s: r.runtime_s, error: None },
            Err(e) => SweepPoint { dt_ns, c, fidelity: None, runtime_s: start.elapsed().as_secs_f64(), error: Some(e.to_string()) },
        }
    };
    Ok(pool.install(|| grid.par_iter().map(point).collect()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub fidelity_low: f64,
    pub fidelity_high: f64,
    pub photon_cutoff_low: usize,
    pub photon_cutoff_high: usize,
    pub delta: f64,
}

/// Fidelity at the setup's operating point for two photon cutoffs.
pub fn convergence_check(setup: &SimulationSetup, low: usize, high: usize, dt: f64, c: f64) -> Result<ConvergenceReport> {
    let run = |cutoff| SimulationSetup { photon_cutoff: cutoff, ..setup.clone() }.run(dt, c);
    let lo = run(low)?;
    let hi = run(high)?;
    Ok(ConvergenceReport {
        fidelity_low: lo.fidelity,
        fidelity_high: hi.fidelity,
        photon_cutoff_low: low,
        photon_cutoff_high: high,
        delta: (hi.fidelity - lo.fidelity).abs(),
    })
}

/// Sum of squared amplitudes outside the computational sector.
pub fn leakage(psi: &StateVector, layout: &SystemLayout) -> Result<f64> {
    let comp = computational_indices(layout)?;
    let mut inside = vec![false; layout.dim()];
    comp.iter().for_each(|(_, i)| inside[*i] = true);
    Ok(psi.amplitudes().iter().zip(&inside).filter(|(_, &k)| !k).map(|(a, _)| a.norm_sqr()).sum::<f64>().sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::ZERO;

    #[test]
    fn grid_is_inclusive_and_exact() {
        assert_eq!(grid(-5.0, 5.0, 1.0).unwrap(), default_dt_grid_ns());
        let c = grid(0.95, 1.05, 0.01).unwrap();
        assert_eq!(c.len(), 11);
        assert_eq!(c, default_c_grid());
        assert!(grid(1.0, 0.0, 0.1).is_err());
        assert!(grid(0.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn ideal_output_flips_only_all_ones() {
        let layout = SystemLayout::multi_cavity(2, 1).unwrap();
        let input = gate_input_state(&layout).unwrap();
        let out = ideal_output_state(&input, &layout).unwrap();
        let ones = layout.computational_index(&[1, 1]).unwrap();
        for (i, (a, b)) in input.amplitudes().iter().zip(out.amplitudes()).enumerate() {
            if i == ones {
                assert_eq!(*b, -a);
            } else {
                assert_eq!(a, b);
            }
        }
        assert_eq!(out.amplitudes().iter().filter(|a| **a != ZERO).count(), 4);
    }

    #[test]
    fn ideal_output_rejects_leaked_input() {
        let layout = SystemLayout::multi_cavity(2, 1).unwrap();
        let mut psi = StateVector::zeros(layout.dim());
        psi.amplitudes_mut()[layout.index_of(&[2, 0, 0, 0, 0]).unwrap()] = C64::from(1.0);
        assert!(matches!(ideal_output_state(&psi, &layout), Err(Error::SectorViolation(_))));
    }

    #[test]
    fn min_fidelity_propagates_failures() {
        let p = |f: Option<f64>| SweepPoint { dt_ns: 0.0, c: 1.0, fidelity: f, runtime_s: 0.0, error: None };
        let r = SweepResult {
            dt_ns: vec![0.0],
            c: vec![1.0],
            points: vec![p(Some(0.9)), p(Some(0.8))],
            setup: SimulationSetup::reference_defaults(),
        };
        assert_eq!(r.min_fidelity(|_| true), Some(0.8));
        let r = SweepResult { points: vec![p(Some(0.9)), p(None)], ..r };
        assert_eq!(r.min_fidelity(|_| true), None);
        assert_eq!(r.min_fidelity(|_| false), None);
    }
}
