//! Eigendecomposition of complex Hermitian matrices via the real embedding
//! R(X) = [[Re X, −Im X], [Im X, Re X]].
//!
//! R(X) is real symmetric, and [I iI] R(X) [I; −iI]ᵀ = 2X, so the 2d real
//! eigenpairs (λ_k, [a_k; b_k]) yield an exact ensemble for X: the complex
//! vectors z_k = a_k + i b_k are unit norm and Σ_k (λ_k/2) z_k z_k† = X.
//! Every true eigenvalue shows up twice (z and iz span the same state), so
//! no deduplication is needed and degenerate eigenspaces are handled for
//! free; the embedded spectrum equals the spectrum of X with doubled
//! multiplicity.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

/// Weighted unit-vector ensemble (w_k, z_k) with Σ w_k z_k z_k† = `x` and
/// w_k = (eigenvalue)/2. Weights may be negative if `x` is not PSD; callers
/// decide how to treat small negative values.
pub fn hermitian_ensemble(x: &DMatrix<Complex64>) -> Vec<(f64, DVector<Complex64>)> {
    let d = x.nrows();
    assert_eq!(d, x.ncols(), "matrix must be square");
    let mut embedded = DMatrix::<f64>::zeros(2 * d, 2 * d);
    for r in 0..d {
        for c in 0..d {
            let v = x[(r, c)];
            embedded[(r, c)] = v.re;
            embedded[(r, c + d)] = -v.im;
            embedded[(r + d, c)] = v.im;
            embedded[(r + d, c + d)] = v.re;
        }
    }
    // Symmetrize against representation round-off before factorizing.
    let embedded = (&embedded + embedded.transpose()) * 0.5;
    let eig = embedded.symmetric_eigen();
    let mut out = Vec::with_capacity(2 * d);
    for k in 0..2 * d {
        let col = eig.eigenvectors.column(k);
        let z = DVector::from_fn(d, |i, _| Complex64::new(col[i], col[i + d]));
        out.push((eig.eigenvalues[k] / 2.0, z));
    }
    out
}

/// Eigenvalues of a complex Hermitian matrix (each listed twice, in the
/// embedding's order). Convenient for minimum-eigenvalue checks.
pub fn hermitian_eigenvalues(x: &DMatrix<Complex64>) -> Vec<f64> {
    hermitian_ensemble(x).iter().map(|(w, _)| 2.0 * w).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn test_matrix(d: usize) -> DMatrix<Complex64> {
        // Deterministic Hermitian matrix with irrational entries.
        let mut m = DMatrix::<Complex64>::zeros(d, d);
        for r in 0..d {
            for c in 0..d {
                let re = ((r * d + c + 1) as f64).sqrt().sin();
                let im = ((r as f64 + 2.0) * (c as f64 + 3.0)).cos() * 0.4;
                m[(r, c)] = Complex64::new(re, im);
            }
        }
        let herm = (&m + m.adjoint()) * Complex64::new(0.5, 0.0);
        herm
    }

    #[test]
    fn ensemble_reconstructs_matrix() {
        for d in [2, 3, 9] {
            let x = test_matrix(d);
            let ens = hermitian_ensemble(&x);
            assert_eq!(ens.len(), 2 * d);
            let mut rebuilt = DMatrix::<Complex64>::zeros(d, d);
            for (w, z) in &ens {
                let zc = DMatrix::from_column_slice(d, 1, z.as_slice());
                rebuilt += &zc * zc.adjoint() * Complex64::new(*w, 0.0);
                assert_abs_diff_eq!(z.norm(), 1.0, epsilon = 1e-12);
            }
            assert!((rebuilt - &x).norm() < 1e-12);
        }
    }

    #[test]
    fn eigenvalues_match_known_two_level_spectrum() {
        // [[1, i], [−i, 1]] has eigenvalues 0 and 2.
        let mut x = DMatrix::<Complex64>::zeros(2, 2);
        x[(0, 0)] = Complex64::new(1.0, 0.0);
        x[(1, 1)] = Complex64::new(1.0, 0.0);
        x[(0, 1)] = Complex64::new(0.0, 1.0);
        x[(1, 0)] = Complex64::new(0.0, -1.0);
        let mut ev = hermitian_eigenvalues(&x);
        ev.sort_by(f64::total_cmp);
        assert_abs_diff_eq!(ev[0], 0.0, epsilon = 1e-13);
        assert_abs_diff_eq!(ev[1], 0.0, epsilon = 1e-13);
        assert_abs_diff_eq!(ev[2], 2.0, epsilon = 1e-13);
        assert_abs_diff_eq!(ev[3], 2.0, epsilon = 1e-13);
    }
}
