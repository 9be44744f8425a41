//! Support-restricted Runge–Kutta integration.
//!
//! Every term of the generator maps `|i⟩⟨j|` to combinations of `|k⟩⟨l|` with
//! `k`, `l` joined to `i`, `j` by a Hamiltonian matrix element or a jump. The
//! set of basis states reachable from the current support of ρ is therefore
//! invariant for a segment, and ρ is integrated as an `m × m` block on that
//! set. At the start of each segment the set is re-closed under the new
//! Hamiltonian.
//!
//! All jump operators and dephasing projectors are maps between basis states,
//! so `Λ†Λ` and `P` are diagonal. The anticommutator and dephasing parts then
//! collapse into one real matrix `E` applied elementwise.

use std::collections::{HashMap, VecDeque};
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{IntegratorOptions, Method, NoiseModel};
use crate::error::{Error, Result};
use crate::hamiltonian::segment_terms;
use crate::hilbert::{DensityMatrix, StateVector, SystemLayout, C64, ZERO};
use crate::schedule::{GateSchedule, ScheduleSegment};

const NONE: u32 = u32::MAX;
const TILE: usize = 32;

/// Diagnostics recorded at the end of each segment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SegmentSnapshot {
    pub segment: usize,
    pub label: String,
    pub t_end: f64,
    pub steps: usize,
    pub support: usize,
    pub trace: f64,
    pub purity: f64,
    /// `√⟨ψ|ρ|ψ⟩` against the reference state for this segment, if given.
    pub fidelity: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct IntegrationOutput {
    pub final_state: DensityMatrix,
    pub snapshots: Vec<SegmentSnapshot>,
    pub steps: usize,
}

/// Writes snapshots as CSV with columns
/// `segment,label,t_end_s,steps,support,trace,purity,fidelity`.
pub fn write_snapshots_csv<W: Write>(snapshots: &[SegmentSnapshot], writer: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(writer);
    w.write_record(["segment", "label", "t_end_s", "steps", "support", "trace", "purity", "fidelity"])?;
    for s in snapshots {
        w.write_record([
            s.segment.to_string(),
            s.label.clone(),
            format!("{:e}", s.t_end),
            s.steps.to_string(),
            s.support.to_string(),
            format!("{:.12}", s.trace),
            format!("{:.12}", s.purity),
            s.fidelity.map(|f| format!("{f:.12}")).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Clone, Copy)]
struct HEntry {
    col: u32,
    channel: u32,
    coef: C64,
}

/// One jump operator on the support, sorted by destination.
struct JumpList {
    src: Vec<usize>,
    dst: Vec<usize>,
    coef: Vec<f64>,
    /// `tile_start[t]` is the first entry whose destination lies in tile `t`.
    tile_start: Vec<usize>,
}

impl JumpList {
    fn new(mut entries: Vec<(usize, usize, f64)>, m: usize) -> Self {
        entries.sort_by_key(|e| e.1);
        let dst: Vec<usize> = entries.iter().map(|e| e.1).collect();
        let tiles = m.div_ceil(TILE);
        let tile_start = (0..=tiles).map(|t| dst.partition_point(|&d| d < t * TILE)).collect();
        Self { src: entries.iter().map(|e| e.0).collect(), dst, coef: entries.iter().map(|e| e.2).collect(), tile_start }
    }

    fn tile(&self, t: usize) -> std::ops::Range<usize> {
        self.tile_start[t]..self.tile_start[t + 1]
    }
}

/// Segment-independent pieces of the dissipative part, on the full space.
struct Dissipation {
    jumps: Vec<Vec<(usize, usize, f64)>>,
    dephasing: Vec<(f64, Vec<bool>)>,
    /// `Σ (Λ†Λ)_ii + Σ γ_φ P_ii` per basis state.
    loss: Vec<f64>,
}

impl Dissipation {
    fn new(noise: &NoiseModel, layout: &SystemLayout) -> Result<Self> {
        let dim = layout.dim();
        let mut loss = vec![0.0; dim];
        let mut jumps = Vec::new();
        for ch in noise.channels(layout)? {
            let s = ch.rate.sqrt();
            let mut list = Vec::with_capacity(ch.operator.nnz());
            let mut seen = vec![false; dim];
            for (r, c, v) in ch.operator.iter() {
                if std::mem::replace(&mut seen[c], true) || v.im != 0.0 {
                    return Err(Error::InvalidParams(format!("jump operator {} is not a real basis map", ch.label)));
                }
                let coef = v.re * s;
                loss[c] += coef * coef;
                list.push((c, r, coef));
            }
            jumps.push(list);
        }
        let mut dephasing = Vec::new();
        for ch in noise.dephasing(layout)? {
            let mut member = vec![false; dim];
            for (r, c, v) in ch.projector.iter() {
                if r != c || (v - C64::from(1.0)).norm() > 1e-15 {
                    return Err(Error::InvalidParams(format!("dephasing operator {} is not a basis projector", ch.label)));
                }
                member[r] = true;
                loss[r] += ch.rate;
            }
            dephasing.push((ch.rate, member));
        }
        Ok(Self { jumps, dephasing, loss })
    }
}

/// The generator of one segment restricted to its support.
struct Generator {
    m: usize,
    row_ptr: Vec<usize>,
    entries: Vec<HEntry>,
    frequencies: Vec<f64>,
    decay: Vec<f64>,
    jumps: Vec<JumpList>,
    omega_fast: f64,
    /// Clock offset added to the integration time when evaluating phases.
    clock: f64,
}

struct Scratch {
    phases: Vec<C64>,
    values: Vec<C64>,
    upper: Vec<C64>,
    lower: Vec<C64>,
    block: Vec<C64>,
}

impl Generator {
    fn build(
        segment: &ScheduleSegment,
        schedule: &GateSchedule,
        diss: &Dissipation,
        support: &[usize],
        clock: f64,
    ) -> Result<(Self, Vec<usize>)> {
        let layout = &schedule.layout;
        let dim = layout.dim();
        let terms = segment_terms(&segment.hamiltonian, &schedule.params, layout)?;

        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); dim];
        for term in terms.terms() {
            for (r, c, _) in term.operator.iter() {
                adj[r].push(c);
                adj[c].push(r);
            }
        }
        for list in &diss.jumps {
            for &(src, dst, _) in list {
                adj[src].push(dst);
            }
        }
        let mut inside = vec![false; dim];
        let mut queue: VecDeque<usize> = support.iter().copied().collect();
        support.iter().for_each(|&i| inside[i] = true);
        while let Some(i) = queue.pop_front() {
            for &j in &adj[i] {
                if !inside[j] {
                    inside[j] = true;
                    queue.push_back(j);
                }
            }
        }
        let closed: Vec<usize> = (0..dim).filter(|&i| inside[i]).collect();
        let m = closed.len();
        let mut local = vec![NONE; dim];
        for (k, &i) in closed.iter().enumerate() {
            local[i] = k as u32;
        }

        let mut channel_of: HashMap<u64, u32> = HashMap::new();
        let mut frequencies = Vec::new();
        let mut channel = |nu: f64| -> u32 {
            let nu = if nu == 0.0 { 0.0 } else { nu };
            *channel_of.entry(nu.to_bits()).or_insert_with(|| {
                frequencies.push(nu);
                (frequencies.len() - 1) as u32
            })
        };
        let mut rows: Vec<Vec<HEntry>> = vec![Vec::new(); m];
        for term in terms.terms() {
            let up = channel(term.frequency);
            let down = channel(-term.frequency);
            for (r, c, v) in term.operator.iter() {
                let (lr, lc) = (local[r], local[c]);
                if lr == NONE {
                    continue;
                }
                let x = term.amplitude * v;
                rows[lr as usize].push(HEntry { col: lc, channel: up, coef: x });
                rows[lc as usize].push(HEntry { col: lr, channel: down, coef: x.conj() });
            }
        }
        let mut row_ptr = Vec::with_capacity(m + 1);
        row_ptr.push(0);
        let mut entries = Vec::new();
        for mut r in rows {
            r.sort_by_key(|e| e.col);
            entries.extend(r);
            row_ptr.push(entries.len());
        }

        let mut decay = vec![0.0; m * m];
        for (i, &gi) in closed.iter().enumerate() {
            for (j, &gj) in closed.iter().enumerate() {
                let mut e = -0.5 * (diss.loss[gi] + diss.loss[gj]);
                for (rate, member) in &diss.dephasing {
                    if member[gi] && member[gj] {
                        e += rate;
                    }
                }
                decay[i * m + j] = e;
            }
        }
        let jumps = diss
            .jumps
            .iter()
            .map(|list| {
                let kept = list
                    .iter()
                    .filter(|(src, _, _)| local[*src] != NONE)
                    .map(|&(src, dst, c)| (local[src] as usize, local[dst] as usize, c))
                    .collect();
                JumpList::new(kept, m)
            })
            .filter(|j| !j.src.is_empty())
            .collect();
        let gen = Generator { m, row_ptr, entries, omega_fast: terms.max_frequency(), frequencies, decay, jumps, clock };
        Ok((gen, closed))
    }

    fn scratch(&self) -> Scratch {
        Scratch {
            phases: vec![ZERO; self.frequencies.len()],
            values: vec![ZERO; self.entries.len()],
            upper: vec![ZERO; TILE * TILE],
            lower: vec![ZERO; TILE * TILE],
            block: vec![ZERO; TILE * TILE],
        }
    }

    /// Accumulates `(Hρ)[rows, cols]` into `buf` (row stride [`TILE`]).
    fn h_block(&self, values: &[C64], rho: &[C64], rows: std::ops::Range<usize>, cols: std::ops::Range<usize>, buf: &mut [C64]) {
        let m = self.m;
        let w = cols.len();
        for (r, i) in rows.enumerate() {
            let dst = &mut buf[r * TILE..r * TILE + w];
            dst.fill(ZERO);
            let span = self.row_ptr[i]..self.row_ptr[i + 1];
            for (&v, entry) in values[span.clone()].iter().zip(&self.entries[span]) {
                let k = entry.col as usize;
                let src = &rho[k * m + cols.start..k * m + cols.end];
                for (o, x) in dst.iter_mut().zip(src) {
                    *o += v * x;
                }
            }
        }
    }

    /// `out = L(t) ρ` for Hermitian `ρ`.
    ///
    /// The output is assembled tile by tile over the upper triangle; each
    /// off-diagonal tile is mirrored into the lower triangle.
    fn apply(&self, t: f64, rho: &[C64], out: &mut [C64], s: &mut Scratch) {
        let m = self.m;
        let tc = t + self.clock;
        for (p, &nu) in s.phases.iter_mut().zip(&self.frequencies) {
            *p = if nu == 0.0 { C64::from(1.0) } else { C64::from_polar(1.0, nu * tc) };
        }
        for (v, e) in s.values.iter_mut().zip(&self.entries) {
            *v = e.coef * s.phases[e.channel as usize];
        }
        let tiles = m.div_ceil(TILE);
        let span = |t: usize| t * TILE..((t + 1) * TILE).min(m);
        for ti in 0..tiles {
            let rows = span(ti);
            for tj in ti..tiles {
                let cols = span(tj);
                let (i0, j0) = (rows.start, cols.start);
                self.h_block(&s.values, rho, rows.clone(), cols.clone(), &mut s.upper);
                let lower = if ti == tj {
                    &s.upper
                } else {
                    self.h_block(&s.values, rho, cols.clone(), rows.clone(), &mut s.lower);
                    &s.lower
                };
                let u = &mut s.block;
                for i in rows.clone() {
                    for j in cols.clone() {
                        let (a, b) = (i - i0, j - j0);
                        let comm = s.upper[a * TILE + b] - lower[b * TILE + a].conj();
                        let ij = i * m + j;
                        u[a * TILE + b] = C64::new(comm.im, -comm.re) + rho[ij] * self.decay[ij];
                    }
                }
                for list in &self.jumps {
                    for p in list.tile(ti) {
                        let (sp, dp, cp) = (list.src[p], list.dst[p] - i0, list.coef[p]);
                        let src = &rho[sp * m..(sp + 1) * m];
                        let dst = &mut u[dp * TILE..(dp + 1) * TILE];
                        for q in list.tile(tj) {
                            dst[list.dst[q] - j0] += src[list.src[q]] * (cp * list.coef[q]);
                        }
                    }
                }
                for i in rows.clone() {
                    let a = i - i0;
                    out[i * m + j0..i * m + cols.end].copy_from_slice(&u[a * TILE..a * TILE + cols.len()]);
                }
                if ti != tj {
                    for j in cols.clone() {
                        let b = j - j0;
                        for (a, o) in out[j * m + i0..j * m + rows.end].iter_mut().enumerate() {
                            *o = u[a * TILE + b].conj();
                        }
                    }
                }
            }
        }
    }
}

/// `out = y + h Σ c_k k_k`.
fn combine(out: &mut [C64], y: &[C64], h: f64, parts: &[(f64, &[C64])]) {
    out.copy_from_slice(y);
    for &(c, k) in parts {
        if c == 0.0 {
            continue;
        }
        let w = h * c;
        out.iter_mut().zip(k).for_each(|(o, x)| *o += x * w);
    }
}

fn trace_of(rho: &[C64], m: usize) -> C64 {
    (0..m).map(|i| rho[i * m + i]).sum()
}

struct Stepper {
    k: Vec<Vec<C64>>,
    tmp: Vec<C64>,
    scratch: Scratch,
}

impl Stepper {
    fn new(gen: &Generator, stages: usize) -> Self {
        let n = gen.m * gen.m;
        Self { k: vec![vec![ZERO; n]; stages], tmp: vec![ZERO; n], scratch: gen.scratch() }
    }
}

fn rk4_step(gen: &Generator, t: f64, h: f64, y: &mut [C64], st: &mut Stepper) {
    let Stepper { k, tmp, scratch } = st;
    let (k1, rest) = k.split_at_mut(1);
    let (k2, rest) = rest.split_at_mut(1);
    let (k3, k4) = rest.split_at_mut(1);
    let (k1, k2, k3, k4) = (&mut k1[0], &mut k2[0], &mut k3[0], &mut k4[0]);
    gen.apply(t, y, k1, scratch);
    combine(tmp, y, 0.5 * h, &[(1.0, k1)]);
    gen.apply(t + 0.5 * h, tmp, k2, scratch);
    combine(tmp, y, 0.5 * h, &[(1.0, k2)]);
    gen.apply(t + 0.5 * h, tmp, k3, scratch);
    combine(tmp, y, h, &[(1.0, k3)]);
    gen.apply(t + h, tmp, k4, scratch);
    let w = h / 6.0;
    for i in 0..y.len() {
        y[i] += (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * w;
    }
}

const DP_C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const DP_A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const DP_B4: [f64; 7] = [5179.0 / 57600.0, 0.0, 7571.0 / 16695.0, 393.0 / 640.0, -92097.0 / 339200.0, 187.0 / 2100.0, 1.0 / 40.0];

/// One Dormand–Prince attempt. Leaves the 5th-order solution in `st.tmp` and
/// returns the scaled error norm.
fn dp45_attempt(gen: &Generator, t: f64, h: f64, y: &[C64], st: &mut Stepper, opts: &IntegratorOptions) -> f64 {
    let Stepper { k, tmp, scratch } = st;
    gen.apply(t, y, &mut k[0], scratch);
    for s in 1..7 {
        let (done, rest) = k.split_at_mut(s);
        let parts: Vec<(f64, &[C64])> = (0..s).map(|j| (DP_A[s][j], done[j].as_slice())).collect();
        combine(tmp, y, h, &parts);
        gen.apply(t + DP_C[s] * h, tmp, &mut rest[0], scratch);
    }
    // Stage 7 is evaluated at the 5th-order solution, which `tmp` still holds.
    let mut err: f64 = 0.0;
    for i in 0..y.len() {
        let mut e = ZERO;
        for s in 0..7 {
            let b5 = if s < 6 { DP_A[6][s] } else { 0.0 };
            e += k[s][i] * (b5 - DP_B4[s]);
        }
        let scale = opts.atol + opts.rtol * y[i].norm().max(tmp[i].norm());
        err = err.max((e * h).norm() / scale);
    }
    err
}

/// Builder for a master-equation run over a schedule.
pub struct Integrator<'a> {
    schedule: &'a GateSchedule,
    noise: NoiseModel,
    options: IntegratorOptions,
    references: Option<&'a [StateVector]>,
}

impl<'a> Integrator<'a> {
    /// Noise defaults to the schedule's parameter rates.
    pub fn new(schedule: &'a GateSchedule) -> Self {
        Self { schedule, noise: NoiseModel::from_params(&schedule.params), options: IntegratorOptions::default(), references: None }
    }

    pub fn noise(mut self, noise: NoiseModel) -> Self {
        self.noise = noise;
        self
    }

    pub fn options(mut self, options: IntegratorOptions) -> Self {
        self.options = options;
        self
    }

    /// One reference state per segment, used for the snapshot fidelities.
    pub fn references(mut self, refs: &'a [StateVector]) -> Self {
        self.references = Some(refs);
        self
    }

    fn fixed_step(&self, gen: &Generator, duration: f64) -> (usize, f64) {
        let o = &self.options;
        let mut h = duration / o.min_steps_per_segment as f64;
        if gen.omega_fast > 0.0 {
            h = h.min(o.max_phase_per_step / gen.omega_fast);
        }
        h *= o.step_scale;
        let n = (duration / h).ceil().max(1.0) as usize;
        (n, duration / n as f64)
    }

    pub fn run(&self, rho0: &DensityMatrix) -> Result<IntegrationOutput> {
        let schedule = self.schedule;
        let layout = &schedule.layout;
        let dim = layout.dim();
        schedule.validate()?;
        self.options.validate()?;
        self.noise.validate(layout)?;
        if rho0.dim() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: rho0.dim() });
        }
        if let Some(refs) = self.references {
            if refs.len() != schedule.segments.len() {
                return Err(Error::InvalidParams(format!("expected {} reference states, found {}", schedule.segments.len(), refs.len())));
            }
            if let Some(bad) = refs.iter().find(|r| r.dim() != dim) {
                return Err(Error::DimensionMismatch { expected: dim, found: bad.dim() });
            }
        }
        let diss = Dissipation::new(&self.noise, layout)?;

        let mut support: Vec<usize> = if self.options.restrict_support {
            let data = rho0.data();
            (0..dim).filter(|&i| (0..dim).any(|j| data[i * dim + j] != ZERO || data[j * dim + i] != ZERO)).collect()
        } else {
            (0..dim).collect()
        };
        let herm = rho0.hermiticity_error();
        if herm > 1e-10 {
            return Err(Error::NotHermitian(herm));
        }
        let mut rho: Vec<C64> =
            support.iter().flat_map(|&i| support.iter().map(move |&j| 0.5 * (rho0.get(i, j) + rho0.get(j, i).conj()))).collect();
        let trace0 = rho0.trace().re;

        let mut t_abs = 0.0;
        let mut total_steps = 0;
        let mut snapshots = Vec::with_capacity(schedule.segments.len());
        for (idx, seg) in schedule.segments.iter().enumerate() {
            let clock = if self.options.global_clock { t_abs } else { 0.0 };
            let (gen, closed) = Generator::build(seg, schedule, &diss, &support, clock)?;
            rho = expand(&rho, &support, &closed);
            support = closed;

            let steps = if seg.duration > 0.0 {
                match self.options.method {
                    Method::Rk4 => {
                        let (n, h) = self.fixed_step(&gen, seg.duration);
                        let mut st = Stepper::new(&gen, 4);
                        for s in 0..n {
                            rk4_step(&gen, s as f64 * h, h, &mut rho, &mut st);
                        }
                        n
                    }
                    Method::AdaptiveDp45 => self.adaptive(&gen, seg, t_abs, &mut rho)?,
                }
            } else {
                0
            };
            total_steps += steps;
            t_abs += seg.duration;

            let m = gen.m;
            let tr = trace_of(&rho, m);
            if !(tr.re.is_finite() && tr.im.is_finite()) {
                return Err(Error::NonFinite(seg.label.clone()));
            }
            let drift = (tr - C64::from(trace0)).norm();
            if drift > self.options.trace_drift_limit {
                return Err(Error::TraceDrift { drift, segment: seg.label.clone() });
            }
            let fidelity = self.references.map(|refs| {
                let psi = refs[idx].amplitudes();
                let mut acc = ZERO;
                for (i, &gi) in support.iter().enumerate() {
                    if psi[gi] == ZERO {
                        continue;
                    }
                    let row: C64 = support.iter().enumerate().map(|(j, &gj)| rho[i * m + j] * psi[gj]).sum();
                    acc += psi[gi].conj() * row;
                }
                acc.re.clamp(0.0, 1.0).sqrt()
            });
            snapshots.push(SegmentSnapshot {
                segment: idx,
                label: seg.label.clone(),
                t_end: t_abs,
                steps,
                support: m,
                trace: tr.re,
                purity: rho.iter().map(|x| x.norm_sqr()).sum(),
                fidelity,
            });
        }

        let mut full = DensityMatrix::zeros(dim);
        let m = support.len();
        let data = full.data_mut();
        for (i, &gi) in support.iter().enumerate() {
            for (j, &gj) in support.iter().enumerate() {
                data[gi * dim + gj] = rho[i * m + j];
            }
        }
        Ok(IntegrationOutput { final_state: full, snapshots, steps: total_steps })
    }

    fn adaptive(&self, gen: &Generator, seg: &ScheduleSegment, t_abs: f64, rho: &mut [C64]) -> Result<usize> {
        let (_, mut h) = self.fixed_step(gen, seg.duration);
        let h_min = seg.duration * 1e-12;
        let mut st = Stepper::new(gen, 7);
        let mut t = 0.0;
        let mut steps = 0;
        while t < seg.duration {
            h = h.min(seg.duration - t);
            let err = dp45_attempt(gen, t, h, rho, &mut st, &self.options);
            if !err.is_finite() {
                return Err(Error::NonFinite(seg.label.clone()));
            }
            if err <= 1.0 {
                rho.copy_from_slice(&st.tmp);
                t += h;
                steps += 1;
            }
            let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            h *= factor;
            if h < h_min && t < seg.duration {
                return Err(Error::StepUnderflow { t: t_abs + t, segment: seg.label.clone() });
            }
        }
        Ok(steps)
    }
}

/// Re-embeds an `old × old` block into the larger `new × new` support.
fn expand(rho: &[C64], old: &[usize], new: &[usize]) -> Vec<C64> {
    let m = new.len();
    if old == new {
        return rho.to_vec();
    }
    let pos: HashMap<usize, usize> = new.iter().enumerate().map(|(k, &i)| (i, k)).collect();
    let idx: Vec<usize> = old.iter().map(|i| pos[i]).collect();
    let n = old.len();
    let mut out = vec![ZERO; m * m];
    for (a, &ia) in idx.iter().enumerate() {
        for (b, &ib) in idx.iter().enumerate() {
            out[ia * m + ib] = rho[a * n + b];
        }
    }
    out
}

/// Integrates `rho0` through every segment and returns the final state.
pub fn integrate(rho0: &DensityMatrix, schedule: &GateSchedule, noise: &NoiseModel, options: &IntegratorOptions) -> Result<DensityMatrix> {
    Ok(Integrator::new(schedule).noise(noise.clone()).options(options.clone()).run(rho0)?.final_state)
}
