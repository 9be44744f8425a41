//! Composite Hilbert spaces of qutrits and truncated cavity modes.
//!
//! Subsystems are ordered canonically: work qutrits `1..=n`, the ancilla,
//! then cavities `1..=k`. The first subsystem is the most significant digit
//! of a basis index, so index arithmetic agrees with the Kronecker product
//! `A_1 ⊗ A_2 ⊗ …` taken in that order.

use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);

/// Largest dimension for which dense linear algebra is attempted.
pub const DENSE_LIMIT: usize = 3000;

/// Local dimension of every qutrit.
pub const QUTRIT_DIM: usize = 3;

/// A subsystem of the composite space. Work qutrits and cavities are 1-based.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Subsystem {
    Work(usize),
    Ancilla,
    Cavity(usize),
}

impl fmt::Display for Subsystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Subsystem::Work(l) => write!(f, "qutrit {l}"),
            Subsystem::Ancilla => write!(f, "ancilla"),
            Subsystem::Cavity(l) => write!(f, "cavity {l}"),
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
struct LayoutRepr {
    work_qutrits: usize,
    cavities: usize,
    photon_cutoff: usize,
}

/// Which subsystems exist and how they are truncated.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "LayoutRepr", into = "LayoutRepr")]
pub struct SystemLayout {
    work_qutrits: usize,
    cavities: usize,
    photon_cutoff: usize,
    local_dims: Vec<usize>,
    strides: Vec<usize>,
    dim: usize,
}

impl TryFrom<LayoutRepr> for SystemLayout {
    type Error = Error;
    fn try_from(r: LayoutRepr) -> Result<Self> {
        SystemLayout::new(r.work_qutrits, r.cavities, r.photon_cutoff)
    }
}

impl From<SystemLayout> for LayoutRepr {
    fn from(l: SystemLayout) -> Self {
        LayoutRepr { work_qutrits: l.work_qutrits, cavities: l.cavities, photon_cutoff: l.photon_cutoff }
    }
}

/// Per-subsystem dimensions and strides of a layout.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpaceDescriptor {
    pub subsystems: Vec<Subsystem>,
    pub local_dims: Vec<usize>,
    pub strides: Vec<usize>,
    pub dim: usize,
}

impl SystemLayout {
    /// `n` work qutrits, one ancilla and `cavities` modes holding at most
    /// `photon_cutoff` photons each.
    pub fn new(n: usize, cavities: usize, photon_cutoff: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidLayout(format!("need at least 2 work qutrits, got {n}")));
        }
        if photon_cutoff < 1 {
            return Err(Error::InvalidLayout("photon cutoff must be at least 1".into()));
        }
        if cavities < 1 {
            return Err(Error::InvalidLayout("need at least one cavity".into()));
        }
        let mut local_dims = vec![QUTRIT_DIM; n + 1];
        local_dims.extend(std::iter::repeat_n(photon_cutoff + 1, cavities));
        let mut strides = vec![0; local_dims.len()];
        let mut acc: usize = 1;
        for (p, &d) in local_dims.iter().enumerate().rev() {
            strides[p] = acc;
            acc = acc.checked_mul(d).ok_or_else(|| Error::InvalidLayout("total dimension overflows".into()))?;
        }
        Ok(Self { work_qutrits: n, cavities, photon_cutoff, local_dims, strides, dim: acc })
    }

    /// One cavity per work qutrit.
    pub fn multi_cavity(n: usize, photon_cutoff: usize) -> Result<Self> {
        Self::new(n, n, photon_cutoff)
    }

    /// All qutrits share a single cavity.
    pub fn single_cavity(n: usize, photon_cutoff: usize) -> Result<Self> {
        Self::new(n, 1, photon_cutoff)
    }

    pub fn work_qutrits(&self) -> usize {
        self.work_qutrits
    }

    pub fn cavities(&self) -> usize {
        self.cavities
    }

    pub fn photon_cutoff(&self) -> usize {
        self.photon_cutoff
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn subsystem_count(&self) -> usize {
        self.local_dims.len()
    }

    pub fn local_dims(&self) -> &[usize] {
        &self.local_dims
    }

    pub fn strides(&self) -> &[usize] {
        &self.strides
    }

    pub fn subsystems(&self) -> Vec<Subsystem> {
        let mut out: Vec<Subsystem> = (1..=self.work_qutrits).map(Subsystem::Work).collect();
        out.push(Subsystem::Ancilla);
        out.extend((1..=self.cavities).map(Subsystem::Cavity));
        out
    }

    /// Position of a subsystem in the canonical order.
    pub fn position(&self, s: Subsystem) -> Result<usize> {
        match s {
            Subsystem::Work(l) if (1..=self.work_qutrits).contains(&l) => Ok(l - 1),
            Subsystem::Ancilla => Ok(self.work_qutrits),
            Subsystem::Cavity(l) if (1..=self.cavities).contains(&l) => Ok(self.work_qutrits + l),
            _ => Err(Error::UnknownSubsystem(s.to_string())),
        }
    }

    pub fn local_dim(&self, s: Subsystem) -> Result<usize> {
        Ok(self.local_dims[self.position(s)?])
    }

    /// Level of subsystem at `position` in basis state `index`.
    #[inline]
    pub fn level_at(&self, index: usize, position: usize) -> usize {
        (index / self.strides[position]) % self.local_dims[position]
    }

    pub fn level(&self, index: usize, s: Subsystem) -> Result<usize> {
        Ok(self.level_at(index, self.position(s)?))
    }

    /// Canonical index of a label list (one level or photon number per subsystem).
    pub fn index_of(&self, labels: &[usize]) -> Result<usize> {
        if labels.len() != self.local_dims.len() {
            return Err(Error::DimensionMismatch { expected: self.local_dims.len(), found: labels.len() });
        }
        let mut idx = 0;
        for ((&l, &d), &s) in labels.iter().zip(&self.local_dims).zip(&self.strides) {
            if l >= d {
                return Err(Error::LevelOutOfRange { level: l, dim: d });
            }
            idx += l * s;
        }
        Ok(idx)
    }

    pub fn labels_of(&self, index: usize) -> Vec<usize> {
        (0..self.local_dims.len()).map(|p| self.level_at(index, p)).collect()
    }

    /// Index with every work qutrit set from `bits`, ancilla in |0⟩ and cavities empty.
    pub fn computational_index(&self, bits: &[u8]) -> Result<usize> {
        if bits.len() != self.work_qutrits {
            return Err(Error::DimensionMismatch { expected: self.work_qutrits, found: bits.len() });
        }
        let mut labels = vec![0; self.local_dims.len()];
        for (l, &b) in bits.iter().enumerate() {
            if b > 1 {
                return Err(Error::LevelOutOfRange { level: b as usize, dim: 2 });
            }
            labels[l] = b as usize;
        }
        self.index_of(&labels)
    }
}

/// Validates the layout and returns its dimensions and strides.
pub fn build_space(layout: &SystemLayout) -> Result<SpaceDescriptor> {
    let checked = SystemLayout::new(layout.work_qutrits, layout.cavities, layout.photon_cutoff)?;
    Ok(SpaceDescriptor {
        subsystems: checked.subsystems(),
        local_dims: checked.local_dims.clone(),
        strides: checked.strides.clone(),
        dim: checked.dim,
    })
}

/// Complex sparse matrix in compressed-row form.
///
/// Entries are unique per position and sorted by column within each row.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseOperator {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<C64>,
}

impl SparseOperator {
    pub fn zeros(dim: usize) -> Self {
        Self { dim, row_ptr: vec![0; dim + 1], cols: Vec::new(), vals: Vec::new() }
    }

    pub fn identity(dim: usize) -> Self {
        Self { dim, row_ptr: (0..=dim).collect(), cols: (0..dim).collect(), vals: vec![ONE; dim] }
    }

    /// Builds an operator from `(row, col, value)` triplets. Repeated positions
    /// are summed and exact zeros dropped.
    pub fn from_triplets<I>(dim: usize, triplets: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, C64)>,
    {
        let mut t: Vec<(usize, usize, C64)> = triplets.into_iter().collect();
        for &(r, c, _) in &t {
            if r >= dim || c >= dim {
                return Err(Error::DimensionMismatch { expected: dim, found: r.max(c) + 1 });
            }
        }
        t.sort_by_key(|a| (a.0, a.1));
        let mut merged: Vec<(usize, usize, C64)> = Vec::with_capacity(t.len());
        for (r, c, v) in t {
            match merged.last_mut() {
                Some(last) if last.0 == r && last.1 == c => last.2 += v,
                _ => merged.push((r, c, v)),
            }
        }
        merged.retain(|e| e.2 != ZERO);
        Ok(Self::from_sorted_unique(dim, merged))
    }

    fn from_sorted_unique(dim: usize, entries: Vec<(usize, usize, C64)>) -> Self {
        let mut row_ptr = vec![0; dim + 1];
        for &(r, _, _) in &entries {
            row_ptr[r + 1] += 1;
        }
        for i in 0..dim {
            row_ptr[i + 1] += row_ptr[i];
        }
        let cols = entries.iter().map(|e| e.1).collect();
        let vals = entries.iter().map(|e| e.2).collect();
        Self { dim, row_ptr, cols, vals }
    }

    /// Builds from per-row entry lists, merging repeats and dropping zeros.
    fn from_rows(dim: usize, rows: Vec<Vec<(usize, C64)>>) -> Self {
        let mut row_ptr = Vec::with_capacity(dim + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for mut row in rows {
            row.sort_by_key(|e| e.0);
            let start = cols.len();
            for (c, v) in row {
                if cols.len() > start && *cols.last().unwrap() == c {
                    *vals.last_mut().unwrap() += v;
                } else {
                    cols.push(c);
                    vals.push(v);
                }
            }
            let mut k = start;
            for i in start..cols.len() {
                if vals[i] != ZERO {
                    cols[k] = cols[i];
                    vals[k] = vals[i];
                    k += 1;
                }
            }
            cols.truncate(k);
            vals.truncate(k);
            row_ptr.push(cols.len());
        }
        Self { dim, row_ptr, cols, vals }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> (&[usize], &[C64]) {
        let (a, b) = (self.row_ptr[i], self.row_ptr[i + 1]);
        (&self.cols[a..b], &self.vals[a..b])
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.dim).flat_map(move |r| {
            let (c, v) = self.row(r);
            c.iter().zip(v).map(move |(&c, &v)| (r, c, v))
        })
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        let (cols, vals) = self.row(r);
        match cols.binary_search(&c) {
            Ok(k) => vals[k],
            Err(_) => ZERO,
        }
    }

    pub fn adjoint(&self) -> Self {
        let mut rows: Vec<Vec<(usize, C64)>> = vec![Vec::new(); self.dim];
        for (r, c, v) in self.iter() {
            rows[c].push((r, v.conj()));
        }
        Self::from_rows(self.dim, rows)
    }

    pub fn scale(&self, s: C64) -> Self {
        if s == ZERO {
            return Self::zeros(self.dim);
        }
        let mut out = self.clone();
        out.vals.iter_mut().for_each(|v| *v *= s);
        out
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_dim(other.dim)?;
        let rows = (0..self.dim)
            .map(|r| {
                let (c1, v1) = self.row(r);
                let (c2, v2) = other.row(r);
                c1.iter().zip(v1).chain(c2.iter().zip(v2)).map(|(&c, &v)| (c, v)).collect()
            })
            .collect();
        Ok(Self::from_rows(self.dim, rows))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(-ONE))
    }

    /// Sparse product `self · other`.
    pub fn matmul(&self, other: &Self) -> Result<Self> {
        self.check_dim(other.dim)?;
        let rows = (0..self.dim)
            .map(|r| {
                let mut row = Vec::new();
                let (c1, v1) = self.row(r);
                for (&k, &a) in c1.iter().zip(v1) {
                    let (c2, v2) = other.row(k);
                    row.extend(c2.iter().zip(v2).map(|(&c, &b)| (c, a * b)));
                }
                row
            })
            .collect();
        Ok(Self::from_rows(self.dim, rows))
    }

    /// Kronecker product `self ⊗ other`.
    pub fn kron(&self, other: &Self) -> Self {
        let d = self.dim * other.dim;
        let mut rows = Vec::with_capacity(d);
        for r1 in 0..self.dim {
            let (c1, v1) = self.row(r1);
            for r2 in 0..other.dim {
                let (c2, v2) = other.row(r2);
                let mut row = Vec::with_capacity(c1.len() * c2.len());
                for (&a, &x) in c1.iter().zip(v1) {
                    for (&b, &y) in c2.iter().zip(v2) {
                        row.push((a * other.dim + b, x * y));
                    }
                }
                rows.push(row);
            }
        }
        Self::from_rows(d, rows)
    }

    /// Matrix-vector product.
    pub fn apply(&self, x: &[C64]) -> Result<Vec<C64>> {
        self.check_dim(x.len())?;
        Ok((0..self.dim)
            .map(|r| {
                let (c, v) = self.row(r);
                c.iter().zip(v).map(|(&c, &v)| v * x[c]).sum()
            })
            .collect())
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for (r, c, v) in self.iter() {
            m[(r, c)] = v;
        }
        m
    }

    /// Largest entrywise deviation `|A_ij − conj(A_ji)|`.
    pub fn hermiticity_error(&self) -> f64 {
        self.iter().map(|(r, c, v)| (v - self.get(c, r).conj()).norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        if self.dim != other.dim {
            return f64::INFINITY;
        }
        let a = self.iter().map(|(r, c, v)| (v - other.get(r, c)).norm());
        let b = other.iter().map(|(r, c, v)| (v - self.get(r, c)).norm());
        a.chain(b).fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.vals.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    fn check_dim(&self, d: usize) -> Result<()> {
        if d != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: d });
        }
        Ok(())
    }
}

/// Local qutrit operator `|i⟩⟨j|`.
pub fn transition_op(i: usize, j: usize) -> Result<SparseOperator> {
    for l in [i, j] {
        if l >= QUTRIT_DIM {
            return Err(Error::LevelOutOfRange { level: l, dim: QUTRIT_DIM });
        }
    }
    SparseOperator::from_triplets(QUTRIT_DIM, [(i, j, ONE)])
}

/// Local cavity annihilation operator on `n_max + 1` Fock states.
pub fn annihilation_op(n_max: usize) -> Result<SparseOperator> {
    if n_max < 1 {
        return Err(Error::InvalidLayout("photon cutoff must be at least 1".into()));
    }
    SparseOperator::from_triplets(n_max + 1, (1..=n_max).map(|k| (k - 1, k, C64::from((k as f64).sqrt()))))
}

/// Embeds a local operator with identities on every other subsystem.
pub fn embed(local: &SparseOperator, subsystem: Subsystem, layout: &SystemLayout) -> Result<SparseOperator> {
    embed_product(&[(local, subsystem)], layout)
}

/// Embeds a tensor product of local operators acting on distinct subsystems.
pub fn embed_product(factors: &[(&SparseOperator, Subsystem)], layout: &SystemLayout) -> Result<SparseOperator> {
    let mut placed: Vec<(&SparseOperator, usize)> = Vec::with_capacity(factors.len());
    for &(op, s) in factors {
        let p = layout.position(s)?;
        if op.dim() != layout.local_dims()[p] {
            return Err(Error::DimensionMismatch { expected: layout.local_dims()[p], found: op.dim() });
        }
        if placed.iter().any(|&(_, q)| q == p) {
            return Err(Error::UnknownSubsystem(format!("{s} listed twice")));
        }
        placed.push((op, p));
    }
    let dim = layout.dim();
    let strides = layout.strides();
    let mut rows = Vec::with_capacity(dim);
    for i in 0..dim {
        // Cartesian product over the factors' local rows.
        let mut row: Vec<(usize, C64)> = vec![(i, ONE)];
        for &(op, p) in &placed {
            let r = layout.level_at(i, p);
            let (cols, vals) = op.row(r);
            let mut next = Vec::with_capacity(row.len() * cols.len());
            for &(j, a) in &row {
                for (&c, &v) in cols.iter().zip(vals) {
                    next.push((j + c * strides[p] - r * strides[p], a * v));
                }
            }
            row = next;
        }
        rows.push(row);
    }
    Ok(SparseOperator::from_rows(dim, rows))
}

/// Pure state amplitudes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateVector {
    amplitudes: Vec<C64>,
}

impl StateVector {
    pub fn new(amplitudes: Vec<C64>) -> Self {
        Self { amplitudes }
    }

    pub fn zeros(dim: usize) -> Self {
        Self { amplitudes: vec![ZERO; dim] }
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn amplitudes_mut(&mut self) -> &mut [C64] {
        &mut self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &Self) -> Result<C64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: other.dim() });
        }
        Ok(self.amplitudes.iter().zip(&other.amplitudes).map(|(a, b)| a.conj() * b).sum())
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        if self.dim() != other.dim() {
            return f64::INFINITY;
        }
        self.amplitudes.iter().zip(&other.amplitudes).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }
}

/// Unit vector for the given per-subsystem labels in canonical order.
pub fn basis_state(labels: &[usize], layout: &SystemLayout) -> Result<StateVector> {
    let idx = layout.index_of(labels)?;
    let mut v = StateVector::zeros(layout.dim());
    v.amplitudes[idx] = ONE;
    Ok(v)
}

/// Dense density matrix stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    dim: usize,
    data: Vec<C64>,
}

impl DensityMatrix {
    pub fn from_data(dim: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != dim * dim {
            return Err(Error::DimensionMismatch { expected: dim * dim, found: data.len() });
        }
        Ok(Self { dim, data })
    }

    pub fn zeros(dim: usize) -> Self {
        Self { dim, data: vec![ZERO; dim * dim] }
    }

    pub fn from_pure(psi: &StateVector) -> Self {
        let a = psi.amplitudes();
        let dim = a.len();
        let mut data = vec![ZERO; dim * dim];
        for (i, ai) in a.iter().enumerate() {
            if *ai == ZERO {
                continue;
            }
            for (j, aj) in a.iter().enumerate() {
                data[i * dim + j] = ai * aj.conj();
            }
        }
        Self { dim, data }
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = C64::from(1.0 / dim as f64);
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [C64] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.data[i * self.dim + j]
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self.data[i * self.dim + i]).sum()
    }

    pub fn hermiticity_error(&self) -> f64 {
        let d = self.dim;
        let mut worst: f64 = 0.0;
        for i in 0..d {
            for j in i..d {
                worst = worst.max((self.data[i * d + j] - self.data[j * d + i].conj()).norm());
            }
        }
        worst
    }

    /// `Tr ρ²`.
    pub fn purity(&self) -> f64 {
        self.data.iter().map(|v| v.norm_sqr()).sum()
    }

    /// `⟨ψ|ρ|ψ⟩`.
    pub fn expectation(&self, psi: &StateVector) -> Result<C64> {
        if psi.dim() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: psi.dim() });
        }
        let a = psi.amplitudes();
        let mut acc = ZERO;
        for (i, ai) in a.iter().enumerate() {
            if *ai == ZERO {
                continue;
            }
            let row = &self.data[i * self.dim..(i + 1) * self.dim];
            let r: C64 = row.iter().zip(a).map(|(x, aj)| x * aj).sum();
            acc += ai.conj() * r;
        }
        Ok(acc)
    }

    /// `op · ρ`.
    pub fn left_mul(&self, op: &SparseOperator) -> Result<Self> {
        self.check(op.dim())?;
        let d = self.dim;
        let mut out = Self::zeros(d);
        for i in 0..d {
            let (cols, vals) = op.row(i);
            let dst = &mut out.data[i * d..(i + 1) * d];
            for (&k, &v) in cols.iter().zip(vals) {
                let src = &self.data[k * d..(k + 1) * d];
                dst.iter_mut().zip(src).for_each(|(o, s)| *o += v * s);
            }
        }
        Ok(out)
    }

    /// `ρ · op`.
    pub fn right_mul(&self, op: &SparseOperator) -> Result<Self> {
        self.check(op.dim())?;
        let d = self.dim;
        let mut out = Self::zeros(d);
        for i in 0..d {
            let src = &self.data[i * d..(i + 1) * d];
            let dst = &mut out.data[i * d..(i + 1) * d];
            for (k, &x) in src.iter().enumerate() {
                if x == ZERO {
                    continue;
                }
                let (cols, vals) = op.row(k);
                for (&c, &v) in cols.iter().zip(vals) {
                    dst[c] += x * v;
                }
            }
        }
        Ok(out)
    }

    /// `self += s · other`.
    pub fn add_scaled(&mut self, other: &Self, s: C64) -> Result<()> {
        self.check(other.dim)?;
        self.data.iter_mut().zip(&other.data).for_each(|(a, b)| *a += s * b);
        Ok(())
    }

    pub fn adjoint(&self) -> Self {
        let d = self.dim;
        let mut out = Self::zeros(d);
        for i in 0..d {
            for j in 0..d {
                out.data[j * d + i] = self.data[i * d + j].conj();
            }
        }
        out
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        if self.dim != other.dim {
            return f64::INFINITY;
        }
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        DMatrix::from_row_slice(self.dim, self.dim, &self.data)
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        if self.dim > DENSE_LIMIT {
            return Err(Error::DimensionGuard { dim: self.dim, limit: DENSE_LIMIT });
        }
        let m = self.to_dense();
        let h = (&m + m.adjoint()) * C64::from(0.5);
        let mut ev: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        Ok(ev)
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(self.eigenvalues()?.first().copied().unwrap_or(0.0))
    }

    /// `½‖ρ − σ‖₁`.
    pub fn trace_distance(&self, other: &Self) -> Result<f64> {
        self.check(other.dim)?;
        let mut diff = self.clone();
        diff.add_scaled(other, -ONE)?;
        Ok(0.5 * diff.eigenvalues()?.iter().map(|l| l.abs()).sum::<f64>())
    }

    fn check(&self, d: usize) -> Result<()> {
        if d != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: d });
        }
        Ok(())
    }
}
