#![allow(dead_code)]

use cavgate::hilbert::{SparseOperator, StateVector, C64};
use nalgebra::{DMatrix, DVector};

/// `exp(−iHt)` by scaling and squaring a truncated Taylor series.
pub fn expm_taylor(h: &SparseOperator, t: f64) -> DMatrix<C64> {
    let a = h.to_dense() * C64::new(0.0, -t);
    let norm: f64 = a.row_iter().map(|r| r.iter().map(|x| x.norm()).sum::<f64>()).fold(0.0, f64::max);
    let mut s = 0;
    while norm / 2f64.powi(s) > 0.25 {
        s += 1;
    }
    let a = a / C64::from(2f64.powi(s));
    let n = a.nrows();
    let mut term = DMatrix::<C64>::identity(n, n);
    let mut sum = term.clone();
    for k in 1..=24 {
        term = &term * &a / C64::from(k as f64);
        sum += &term;
    }
    for _ in 0..s {
        sum = &sum * &sum;
    }
    sum
}

pub fn apply(u: &DMatrix<C64>, psi: &StateVector) -> StateVector {
    let v = u * DVector::from_column_slice(psi.amplitudes());
    StateVector::new(v.iter().copied().collect())
}

pub fn max_diff(a: &StateVector, b: &StateVector) -> f64 {
    a.amplitudes().iter().zip(b.amplitudes()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}
