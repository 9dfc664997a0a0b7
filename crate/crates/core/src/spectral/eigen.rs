//! Lowest eigenpairs of `K v = λ M v` for arrow-shaped `K` and diagonal `M > 0`.
//!
//! Eigenvalues are bracketed by bisection on the Sylvester inertia of
//! `K - σM` (an `LDLᵀ` factorization costs `O(n)` for this sparsity), then
//! polished by inverse iteration at the bracketed shift and a final Rayleigh
//! quotient. Morse index and nullity come straight from inertia counts, so
//! they do not depend on how many eigenpairs were requested.

use serde::Serialize;

use super::assemble::{Arrow, OperatorMatrix};
use crate::error::{Error, Result};

/// Largest number of eigenpairs [`eigen_lowest`] computes.
pub const MAX_EIGENPAIRS: usize = 20;

const INVERSE_ITERATIONS: usize = 12;

/// `LDLᵀ` factors of `K - σM` in arrow ordering.
pub(crate) struct ShiftedFactor {
    d: Vec<f64>,
    chain: Vec<f64>,
    border: Vec<f64>,
    corner: f64,
}

impl ShiftedFactor {
    pub(crate) fn new(a: &Arrow, mass: &[f64], sigma: f64) -> Self {
        let n = mass.len();
        let m = n - 1;
        let pivmin = f64::MIN_POSITIVE.sqrt() * a.diag.iter().fold(1.0_f64, |s, v| s.max(v.abs()));
        let mut d = vec![0.0; m];
        let mut chain = vec![0.0; m.saturating_sub(1)];
        let mut border = vec![0.0; m];
        let mut corner = a.diag[m] - sigma * mass[m];
        for i in 0..m {
            let mut di = a.diag[i] - sigma * mass[i];
            let mut bi = a.border[i];
            if i > 0 {
                di -= a.off[i - 1] * chain[i - 1];
                bi -= a.off[i - 1] * border[i - 1];
            }
            if di.abs() < pivmin {
                di = -pivmin;
            }
            d[i] = di;
            if i + 1 < m {
                chain[i] = a.off[i] / di;
            }
            border[i] = bi / di;
            corner -= bi * bi / di;
        }
        if corner.abs() < pivmin {
            corner = -pivmin;
        }
        Self { d, chain, border, corner }
    }

    /// Number of negative pivots, i.e. eigenvalues below the shift.
    pub(crate) fn negatives(&self) -> usize {
        self.d.iter().filter(|&&v| v < 0.0).count() + usize::from(self.corner < 0.0)
    }

    pub(crate) fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let m = self.d.len();
        let mut y = rhs.to_vec();
        for i in 1..m {
            y[i] -= self.chain[i - 1] * y[i - 1];
        }
        let mut yb = y[m];
        for i in 0..m {
            yb -= self.border[i] * y[i];
        }
        for i in 0..m {
            y[i] /= self.d[i];
        }
        y[m] = yb / self.corner;
        let xb = y[m];
        for i in (0..m).rev() {
            let next = if i + 1 < m { self.chain[i] * y[i + 1] } else { 0.0 };
            y[i] -= next + self.border[i] * xb;
        }
        y
    }
}

/// Count of generalized eigenvalues strictly below `sigma`.
pub fn count_below(op: &OperatorMatrix, sigma: f64) -> usize {
    ShiftedFactor::new(&op.arrow(), &op.mass_diag, sigma).negatives()
}

/// Gershgorin interval of `M^{-1/2} K M^{-1/2}`.
pub fn spectral_bounds(op: &OperatorMatrix) -> (f64, f64) {
    let n = op.dim();
    let mut centre: Vec<f64> = op.shift.clone();
    let mut radius = vec![0.0; n];
    for &(i, j, c) in &op.edges {
        centre[i] += c;
        centre[j] += c;
        let r = c.abs() / (op.mass_diag[i] * op.mass_diag[j]).sqrt();
        radius[i] += r;
        radius[j] += r;
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let c = centre[i] / op.mass_diag[i];
        lo = lo.min(c - radius[i]);
        hi = hi.max(c + radius[i]);
    }
    let pad = 1e-12 * (hi - lo).abs().max(1.0);
    (lo - pad, hi + pad)
}

/// Lowest eigenpairs and inertia data of one operator.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumReport {
    pub eigenvalues: Vec<f64>,
    /// Mass-normalized eigenvectors in unknown ordering.
    #[serde(skip)]
    pub eigenvectors: Vec<Vec<f64>>,
    pub morse_index: usize,
    pub nullity: usize,
    pub tol_null: f64,
    /// `‖K v - λ M v‖_{M⁻¹}` per pair.
    pub residuals: Vec<f64>,
    /// `‖K v‖_{M⁻¹}` per pair.
    pub image_norms: Vec<f64>,
}

impl SpectrumReport {
    /// Worst ratio `residual / max(‖Kv‖, 1)` over the computed pairs.
    pub fn worst_relative_residual(&self) -> f64 {
        self.residuals
            .iter()
            .zip(&self.image_norms)
            .map(|(r, k)| r / k.max(1.0))
            .fold(0.0, f64::max)
    }
}

/// `max(1e-8, 50 h² · scale)`, with `scale` the operator's intrinsic potential size.
pub fn default_tol_null(op: &OperatorMatrix) -> f64 {
    (50.0 * op.meta.h * op.meta.h * op.potential_scale).max(1e-8)
}

fn m_inverse_norm(op: &OperatorMatrix, r: &[f64]) -> f64 {
    r.iter().zip(&op.mass_diag).map(|(x, m)| x * x / m).sum::<f64>().sqrt()
}

/// Bisection for the `j`-th eigenvalue (0-based) inside `[lo, hi]`, where
/// `count_below(lo) ≤ j < count_below(hi)`.
fn bisect(a: &Arrow, mass: &[f64], j: usize, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || hi - lo <= 4.0 * f64::EPSILON * lo.abs().max(hi.abs()) {
            break;
        }
        if ShiftedFactor::new(a, mass, mid).negatives() > j {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// The `k` lowest eigenpairs with the default zero tolerance.
pub fn eigen_lowest(op: &OperatorMatrix, k: usize) -> Result<SpectrumReport> {
    eigen_lowest_with_tol(op, k, default_tol_null(op))
}

pub fn eigen_lowest_with_tol(op: &OperatorMatrix, k: usize, tol_null: f64) -> Result<SpectrumReport> {
    let n = op.dim();
    if k == 0 || k > MAX_EIGENPAIRS || k > n {
        return Err(Error::Argument(format!(
            "requested {k} eigenpairs; allowed 1..={} for dimension {n}",
            MAX_EIGENPAIRS.min(n)
        )));
    }
    let arrow = op.arrow();
    let mass = &op.mass_diag;
    let (glo, ghi) = spectral_bounds(op);

    let mut values = Vec::with_capacity(k);
    let mut vectors: Vec<Vec<f64>> = Vec::with_capacity(k);
    let mut residuals = Vec::with_capacity(k);
    let mut image_norms = Vec::with_capacity(k);
    let mut lo = glo;
    for j in 0..k {
        let sigma = bisect(&arrow, mass, j, lo, ghi);
        lo = glo.max(sigma - 1e-6 * sigma.abs().max(1.0));
        if ShiftedFactor::new(&arrow, mass, lo).negatives() > j {
            lo = glo;
        }
        let factor = ShiftedFactor::new(&arrow, mass, sigma);
        let mut x: Vec<f64> = (0..n).map(|i| 1.0 + 0.5 * ((i as f64 + 1.0) * (0.7 + j as f64)).sin()).collect();
        normalize(op, &mut x, &vectors);
        for _ in 0..INVERSE_ITERATIONS {
            let mx: Vec<f64> = x.iter().zip(mass).map(|(v, m)| v * m).collect();
            let mut y = factor.solve(&mx);
            if y.iter().any(|v| !v.is_finite()) {
                break;
            }
            normalize(op, &mut y, &vectors);
            let align = op.mass_inner(&x, &y).signum();
            let diff = x
                .iter()
                .zip(&y)
                .map(|(a, b)| (a - align * b).powi(2))
                .zip(mass)
                .map(|(d, m)| d * m)
                .sum::<f64>()
                .sqrt();
            x = y;
            if diff < 1e-14 {
                break;
            }
        }
        // fix the sign: largest component positive
        let imax = (0..n).max_by(|&a, &b| x[a].abs().total_cmp(&x[b].abs())).unwrap_or(0);
        if x[imax] < 0.0 {
            x.iter_mut().for_each(|v| *v = -*v);
        }
        let lambda = op.form(&x, &x) / op.mass_inner(&x, &x);
        let kx = op.apply(&x);
        let r: Vec<f64> = kx.iter().zip(&x).zip(mass).map(|((a, v), m)| a - lambda * m * v).collect();
        residuals.push(m_inverse_norm(op, &r));
        image_norms.push(m_inverse_norm(op, &kx));
        values.push(lambda);
        vectors.push(x);
    }

    let below = |s: f64| ShiftedFactor::new(&arrow, mass, s).negatives();
    let morse_index = below(-tol_null);
    let nullity = below(tol_null) - morse_index;
    Ok(SpectrumReport {
        eigenvalues: values,
        eigenvectors: vectors,
        morse_index,
        nullity,
        tol_null,
        residuals,
        image_norms,
    })
}

/// M-orthogonalizes against `basis` (twice, for stability) and M-normalizes.
fn normalize(op: &OperatorMatrix, x: &mut [f64], basis: &[Vec<f64>]) {
    for _ in 0..2 {
        for b in basis {
            let p = op.mass_inner(x, b);
            x.iter_mut().zip(b).for_each(|(v, w)| *v -= p * w);
        }
    }
    let norm = op.mass_inner(x, x).sqrt();
    if norm > 0.0 {
        x.iter_mut().for_each(|v| *v /= norm);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{GraphDomain, VertexCondition};
    use crate::spectral::assemble::{assemble, assemble_half_line, periodic_from_potential, OperatorKind};

    fn dense_solve(k: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
        let n = b.len();
        let mut a: Vec<Vec<f64>> = k.iter().zip(b).map(|(r, &v)| {
            let mut row = r.clone();
            row.push(v);
            row
        }).collect();
        for c in 0..n {
            let p = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).unwrap();
            a.swap(c, p);
            for r in c + 1..n {
                let f = a[r][c] / a[c][c];
                for q in c..=n {
                    a[r][q] -= f * a[c][q];
                }
            }
        }
        let mut x = vec![0.0; n];
        for r in (0..n).rev() {
            let s: f64 = (r + 1..n).map(|q| a[r][q] * x[q]).sum();
            x[r] = (a[r][n] - s) / a[r][r];
        }
        x
    }

    #[test]
    fn factor_solve_matches_dense_solve() {
        let d = GraphDomain::new(1.0, 1.5, 10, 8).unwrap();
        let op = assemble(OperatorKind::Laplacian, VertexCondition::delta(1.0).unwrap(), None, &d).unwrap();
        let sigma = 0.37;
        let f = ShiftedFactor::new(&op.arrow(), &op.mass_diag, sigma);
        let mut k = op.dense_stiffness();
        for (i, row) in k.iter_mut().enumerate() {
            row[i] -= sigma * op.mass_diag[i];
        }
        let b: Vec<f64> = (0..op.dim()).map(|i| (i as f64).cos()).collect();
        let x = f.solve(&b);
        let y = dense_solve(&k, &b);
        for (a, b) in x.iter().zip(&y) {
            assert!((a - b).abs() < 1e-10 * b.abs().max(1.0));
        }
    }

    #[test]
    fn periodic_free_ring_has_fourier_spectrum() {
        // -u'' on a ring of length 2π: 0, 1, 1, 4, 4, ... up to O(h²)
        let n = 400;
        let op = periodic_from_potential(&vec![0.0; n + 1], std::f64::consts::PI, None).unwrap();
        let rep = eigen_lowest(&op, 5).unwrap();
        let expect = [0.0, 1.0, 1.0, 4.0, 4.0];
        for (l, e) in rep.eigenvalues.iter().zip(expect) {
            assert!((l - e).abs() < 1e-3, "{:?}", rep.eigenvalues);
        }
        // the degenerate pair comes back orthogonal
        let v = &rep.eigenvectors;
        assert!(op.mass_inner(&v[1], &v[2]).abs() < 1e-10);
    }

    #[test]
    fn oscillator_counts_and_values() {
        let op = assemble_half_line(0.0, 10.0, 5000).unwrap();
        let rep = eigen_lowest(&op, 3).unwrap();
        for (l, e) in rep.eigenvalues.iter().zip([-2.0, 2.0, 6.0]) {
            assert!((l - e).abs() < 1e-4, "{:?}", rep.eigenvalues);
        }
        assert_eq!(count_below(&op, 0.0), 1);
        assert_eq!(rep.morse_index, 1);
        assert_eq!(rep.nullity, 0);
        assert!(rep.worst_relative_residual() < 1e-8);
    }

    #[test]
    fn too_many_pairs_rejected() {
        let op = assemble_half_line(0.0, 5.0, 100).unwrap();
        assert!(eigen_lowest(&op, 21).is_err());
        assert!(eigen_lowest(&op, 0).is_err());
    }
}
