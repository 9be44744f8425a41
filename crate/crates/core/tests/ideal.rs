mod common;

use cavgate::analysis::{gate_input_state, ideal_output_state};
use cavgate::hamiltonian::{h_pulse_ideal, h_qutrit_cavity_ideal, h_two_qutrit_cavity_ideal, PhysicalParams};
use cavgate::hilbert::{StateVector, SystemLayout, C64};
use cavgate::ideal::{apply_schedule_ideal, apply_schedule_ideal_sparse, exact_propagator, jc_map, pulse_map, tc_map, SparseState};
use cavgate::schedule::{compile_nqubit, compile_toffoli};
use common::{apply, expm_taylor, max_diff};
use proptest::prelude::*;

fn layout() -> SystemLayout {
    SystemLayout::new(2, 1, 1).unwrap()
}

/// A normalized state on the labels `q1 q2 a c` accepted by `keep`.
fn sector_state(coeffs: &[(f64, f64)], keep: impl Fn(&[usize]) -> bool) -> StateVector {
    let l = layout();
    let mut v = StateVector::zeros(l.dim());
    let mut k = 0;
    for i in 0..l.dim() {
        if keep(&l.labels_of(i)) {
            let (a, b) = coeffs[k % coeffs.len()];
            v.amplitudes_mut()[i] = C64::new(a, b);
            k += 1;
        }
    }
    let n = v.norm();
    v.amplitudes_mut().iter_mut().for_each(|x| *x /= n);
    v
}

/// At most one quantum shared between two emitters (levels 0/1) and a cavity,
/// or an emitter parked in the dark level 2.
fn exchange_sector(q: usize, a: usize, c: usize) -> bool {
    match (q, a) {
        (2, 2) => c == 0,
        (2, x) | (x, 2) => x + c <= 1,
        _ => q + a + c <= 1,
    }
}

fn coeffs() -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 8..16).prop_filter("nonzero", |v| v.iter().any(|(a, b)| a.abs() + b.abs() > 0.1))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn pulse_closed_form_matches_propagator(t in 0.0f64..200e-9, c in coeffs()) {
        let p = PhysicalParams::reference_defaults(2);
        let l = layout();
        let psi = sector_state(&c, |_| true);
        let u = expm_taylor(&h_pulse_ideal(2, &p, &l).unwrap(), t);
        let closed = pulse_map(&psi, &l, 2, p.rabi[1] * t, p.pulse_phase[1]).unwrap();
        prop_assert!(max_diff(&closed, &apply(&u, &psi)) < 1e-9);
    }

    #[test]
    fn jc_closed_form_matches_propagator(t in 0.0f64..200e-9, c in coeffs()) {
        let p = PhysicalParams::reference_defaults(2);
        let l = layout();
        let psi = sector_state(&c, |x| exchange_sector(0, x[2], x[3]));
        let u = expm_taylor(&h_qutrit_cavity_ideal(1, &p, &l).unwrap(), t);
        let closed = jc_map(&psi, &l, 1, p.g[0] * t).unwrap();
        prop_assert!(max_diff(&closed, &apply(&u, &psi)) < 1e-9);
    }

    #[test]
    fn tc_closed_form_matches_propagator(t in 0.0f64..200e-9, c in coeffs()) {
        let p = PhysicalParams::reference_defaults(2);
        let l = layout();
        let psi = sector_state(&c, |x| exchange_sector(x[0], x[2], x[3]));
        let u = expm_taylor(&h_two_qutrit_cavity_ideal(1, &p, &l).unwrap(), t);
        let closed = tc_map(&psi, &l, 1, 1, p.g[0] * t).unwrap();
        prop_assert!(max_diff(&closed, &apply(&u, &psi)) < 1e-9);
    }

    #[test]
    fn eigen_propagator_matches_taylor(t in 0.0f64..300e-9) {
        let p = PhysicalParams::reference_defaults(2);
        let h = h_two_qutrit_cavity_ideal(1, &p, &layout()).unwrap();
        let d = exact_propagator(&h, t).unwrap() - expm_taylor(&h, t);
        prop_assert!(d.iter().all(|x| x.norm() < 1e-10));
    }

    #[test]
    fn ideal_schedule_preserves_norm(n in 2usize..5, c in coeffs()) {
        let s = compile_nqubit(n, &PhysicalParams::reference_defaults(n)).unwrap();
        let mut psi = gate_input_state(&s.layout).unwrap();
        let comp: Vec<usize> = psi.amplitudes().iter().enumerate().filter(|(_, a)| a.norm() > 0.0).map(|(i, _)| i).collect();
        for (k, &i) in comp.iter().enumerate() {
            let (a, b) = c[k % c.len()];
            psi.amplitudes_mut()[i] = C64::new(a, b);
        }
        let out = apply_schedule_ideal(&s, &psi).unwrap();
        prop_assert!((out.norm() - psi.norm()).abs() < 1e-12);
        prop_assert!(max_diff(&out, &ideal_output_state(&psi, &s.layout).unwrap()) < 1e-12 * psi.norm().max(1.0));
    }
}

#[test]
fn sparse_and_dense_application_agree() {
    let s = compile_toffoli(3, &PhysicalParams::reference_defaults(3)).unwrap();
    let idx = s.layout.computational_index(&[1, 1, 0]).unwrap();
    let sparse = apply_schedule_ideal_sparse(&s, &SparseState::basis(idx)).unwrap();
    let dense = apply_schedule_ideal(&s, &sparse_to_basis(idx, s.layout.dim())).unwrap();
    assert_eq!(sparse.to_state_vector(s.layout.dim()).unwrap(), dense);
    let flipped = s.layout.computational_index(&[1, 1, 1]).unwrap();
    assert!((sparse.get(flipped) - C64::from(1.0)).norm() < 1e-12);
}

fn sparse_to_basis(i: usize, dim: usize) -> StateVector {
    let mut v = StateVector::zeros(dim);
    v.amplitudes_mut()[i] = C64::from(1.0);
    v
}
