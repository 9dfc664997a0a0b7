//! The sparse inertia eigensolver against a dense symmetric eigensolver.

use std::f64::consts::PI;

use approx::assert_relative_eq;
use nalgebra::{DMatrix, SymmetricEigen};
use tadpole_nls::graph::{GraphDomain, VertexCondition};
use tadpole_nls::profile::assemble_standing_wave;
use tadpole_nls::spectral::{assemble, assemble_half_line, eigen_lowest, OperatorKind, OperatorMatrix};

/// Eigenvalues of `M^{-1/2} K M^{-1/2}`, ascending.
fn dense_eigenvalues(op: &OperatorMatrix) -> Vec<f64> {
    let k = op.dense_stiffness();
    let n = k.len();
    let s: Vec<f64> = op.mass_diag.iter().map(|m| 1.0 / m.sqrt()).collect();
    let a = DMatrix::from_fn(n, n, |i, j| s[i] * k[i][j] * s[j]);
    let mut ev: Vec<f64> = SymmetricEigen::new(a).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

fn compare(op: &OperatorMatrix, k: usize) {
    let dense = dense_eigenvalues(op);
    let rep = eigen_lowest(op, k).unwrap();
    for (a, b) in rep.eigenvalues.iter().zip(&dense) {
        assert_relative_eq!(*a, *b, epsilon = 1e-9, max_relative = 1e-9);
    }
    let negatives = dense.iter().filter(|&&l| l < -rep.tol_null).count();
    assert_eq!(rep.morse_index, negatives);
}

#[test]
fn linearized_operators_match_dense_solver() {
    let d = GraphDomain::new(PI, 9.0, 120, 180).unwrap();
    let w = assemble_standing_wave(0.5, PI, &d).unwrap();
    for kind in [OperatorKind::L1, OperatorKind::L2, OperatorKind::PeriodicRing, OperatorKind::NeumannHalfLine] {
        let op = assemble(kind, VertexCondition::neumann_kirchhoff(), Some(&w), &d).unwrap();
        compare(&op, 6);
    }
}

#[test]
fn delta_laplacian_matches_dense_solver() {
    for z in [-1.0, 0.0, 0.7, 3.0] {
        let d = GraphDomain::new(1.3, 12.0, 80, 300).unwrap();
        let op = assemble(OperatorKind::Laplacian, VertexCondition::from_strength(z).unwrap(), None, &d).unwrap();
        compare(&op, 5);
    }
}

#[test]
fn oscillator_matches_dense_solver() {
    let op = assemble_half_line(0.7, 10.0, 400).unwrap();
    compare(&op, 8);
}
