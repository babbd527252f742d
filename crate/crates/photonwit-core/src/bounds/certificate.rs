//! Closed-form dual certificate for the joint-vacuum-deficit bound.
//!
//! The separable bound that depends only on p_joint (the probability that
//! the joint state carries photon number above one on either side) has a
//! closed form, and that closed form is provable by exhibiting an explicit
//! dual certificate: two PSD matrices A and B and two scalars λ, μ with
//!
//! ```text
//! A + B^{T_B(0,1)} − μ·N − λ·I = −M,
//! ```
//!
//! where M is the witness objective on the truncated two-mode basis, N
//! projects onto the states with at most one photon per side, and
//! `T_B(0,1)` is the partial transpose restricted to Bob's 0/1 levels.
//! Tracing the identity against any state with tr(Nρ) = 1 − p_joint shows
//! S ≤ λ + μ(1 − p_joint) + 2√2·p_joint, which equals the closed form
//! exactly. [`build_certificate`] assembles everything and reports the
//! residual of the identity together with the smallest eigenvalues of A
//! and B, so callers (and the command-line `certify` mode) can audit the
//! certificate numerically instead of trusting the algebra.
//!
//! All matrices live on the 9-dimensional basis |n_A n_B⟩ with
//! n_A, n_B ∈ {0, 1, 2} and index n_A·3 + n_B.

use nalgebra::DMatrix;
use serde::Serialize;
use std::f64::consts::{PI, SQRT_2};

use super::BoundsError;
use crate::sdp::{self, DualMultipliers};

/// Per-mode levels kept by the truncation.
const D: usize = 3;
/// Dimension of the two-mode basis.
const D2: usize = D * D;

fn idx(n_a: usize, n_b: usize) -> usize {
    n_a * D + n_b
}

/// The witness objective as a matrix on the truncated two-mode basis:
/// S ≤ tr(Mρ) + 2√2·p_joint for every separable ρ, where M couples
/// the |01⟩⟨10| coherence with weight 16/(π√2) and the |20⟩⟨11| and
/// |02⟩⟨11| coherences with weight 8/π (real parts, hence symmetric
/// entries of half those weights on each side of the diagonal).
pub fn witness_objective_matrix() -> DMatrix<f64> {
    let mut m = DMatrix::zeros(D2, D2);
    let d_weight = 8.0 / (PI * SQRT_2);
    let ef_weight = 4.0 / PI;
    m[(idx(0, 1), idx(1, 0))] = d_weight;
    m[(idx(1, 0), idx(0, 1))] = d_weight;
    m[(idx(2, 0), idx(1, 1))] = ef_weight;
    m[(idx(1, 1), idx(2, 0))] = ef_weight;
    m[(idx(0, 2), idx(1, 1))] = ef_weight;
    m[(idx(1, 1), idx(0, 2))] = ef_weight;
    m
}

/// Projector onto the subspace where both sides carry at most one photon.
/// Its expectation is 1 − p_joint.
pub fn both_at_most_one_projector() -> DMatrix<f64> {
    let mut n = DMatrix::zeros(D2, D2);
    for a in 0..2 {
        for b in 0..2 {
            n[(idx(a, b), idx(a, b))] = 1.0;
        }
    }
    n
}

/// Partial transpose on Bob's 0/1 levels: ⟨i j|ρ'|k l⟩ = ⟨i l|ρ|k j⟩
/// whenever both j and l are in {0, 1}; every other entry is copied
/// unchanged. Applying it twice restores the input. Positivity of the
/// image is a strictly weaker requirement than full PPT, which is the
/// point: it constrains separable states only through their single-photon
/// block and therefore certifies entanglement residing in that block.
pub fn partial_transpose_01(rho: &DMatrix<f64>) -> DMatrix<f64> {
    assert_eq!(rho.nrows(), D2, "partial_transpose_01 expects the 9-dim two-mode basis");
    assert_eq!(rho.ncols(), D2, "partial_transpose_01 expects a square matrix");
    let mut out = rho.clone();
    for i in 0..D {
        for k in 0..D {
            for j in 0..2 {
                for l in 0..2 {
                    out[(idx(i, j), idx(k, l))] = rho[(idx(i, l), idx(k, j))];
                }
            }
        }
    }
    out
}

/// The assembled certificate for one value of p_joint, with its own
/// quality report. `residual_norm` is the Frobenius norm of
/// A + B^{T_B(0,1)} − μN − λI + M, which is zero in exact arithmetic.
#[derive(Debug, Clone, Serialize)]
pub struct CertificateData {
    pub lambda: f64,
    pub mu: f64,
    /// Diagonal weight ℓ of A on |11⟩, fixed by λℓ = 32/π².
    pub ell: f64,
    /// Off-diagonal coupling of A between |01⟩ and |10⟩; equals −(λ+μ).
    pub m: f64,
    #[serde(serialize_with = "sdp::serialize_matrix")]
    pub a_matrix: DMatrix<f64>,
    #[serde(serialize_with = "sdp::serialize_matrix")]
    pub b_matrix: DMatrix<f64>,
    pub residual_norm: f64,
    pub min_eig_a: f64,
    pub min_eig_b: f64,
}

impl CertificateData {
    /// The bound the certificate proves: λ + μ(1 − p_joint) + 2√2·p_joint.
    pub fn bound_value(&self, p_joint: f64) -> f64 {
        self.lambda + self.mu * (1.0 - p_joint) + 2.0 * SQRT_2 * p_joint
    }

    /// Repackages the certificate as dual multipliers for the program
    /// built by [`super::pjoint_program`], whose rows are
    /// [tr(Nρ) = 1 − p_joint, tr(ρ) = 1] and whose cones are
    /// [ρ itself, the compressed 0/1 partial transpose]. Feeding the
    /// result to [`crate::sdp::check_dual_feasibility`] re-derives the
    /// certificate residual through an independent code path.
    pub fn to_dual_multipliers(&self) -> DualMultipliers {
        // The solver's second cone acts on the compressed 2⊗2 block, so
        // B must be handed over in that basis. B is supported there.
        let mut b_compressed = DMatrix::zeros(4, 4);
        for a in 0..2 {
            for b in 0..2 {
                for c in 0..2 {
                    for e in 0..2 {
                        b_compressed[(a * 2 + b, c * 2 + e)] =
                            self.b_matrix[(idx(a, b), idx(c, e))];
                    }
                }
            }
        }
        DualMultipliers {
            constraint_duals: vec![self.mu, self.lambda],
            box_lower_duals: Vec::new(),
            box_upper_duals: Vec::new(),
            cone_duals: vec![self.a_matrix.clone(), b_compressed],
        }
    }
}

/// Builds the dual certificate for 0 < p_joint ≤ 1/2.
///
/// With p = p_joint, q = 1 − p and x_± = √q ± √p, the multipliers are
///
/// ```text
/// λ = (2√2/π)·x₊/√p,      λ + μ = (2√2/π)·x₊/√q,
/// ℓ = (8√2/π)·√p/x₊,      m = −(λ + μ),
/// ```
///
/// which satisfy λℓ = 32/π² exactly. The sums λ+μ and λ+μ−ℓ are computed
/// in those combined forms rather than by subtracting large multipliers,
/// so the certificate stays accurate as p → 0 where λ itself diverges.
/// At p = 0 the bound degenerates to the qubit value and no certificate
/// exists; callers should use that limit instead.
pub fn build_certificate(p_joint: f64) -> Result<CertificateData, BoundsError> {
    if p_joint == 0.0 {
        return Err(BoundsError::DegenerateAtZero);
    }
    if !(p_joint > 0.0 && p_joint <= 0.5) {
        return Err(BoundsError::OutOfRegime { value: p_joint });
    }
    let p = p_joint;
    let q = 1.0 - p;
    let (sp, sq) = (p.sqrt(), q.sqrt());
    let x_plus = sq + sp;
    let x_minus = sq - sp;
    let k = 2.0 * SQRT_2 / PI;

    let lambda = k * x_plus / sp;
    let lam_plus_mu = k * x_plus / sq;
    let mu = lam_plus_mu - lambda;
    let ell = 8.0 * SQRT_2 / PI * sp / x_plus;
    let m = -lam_plus_mu;
    // λ + μ − ℓ in a cancellation-free form: (2√2/π)·x₋²/(√q·x₊).
    let corner = k * x_minus * x_minus / (sq * x_plus);

    // B is rank one on span{|00⟩, |11⟩}: the Gram matrix of the vector
    // (√(λ+μ), −√corner·sign) realized with exact off-diagonal
    // −(2√2/π)·x₋/√q, so its determinant vanishes identically.
    let mut b_matrix = DMatrix::zeros(D2, D2);
    b_matrix[(idx(0, 0), idx(0, 0))] = lam_plus_mu;
    b_matrix[(idx(0, 0), idx(1, 1))] = -k * x_minus / sq;
    b_matrix[(idx(1, 1), idx(0, 0))] = -k * x_minus / sq;
    b_matrix[(idx(1, 1), idx(1, 1))] = corner;

    // A acts as (λ+μ)(|01⟩⟨01| + |10⟩⟨10|) + m(|01⟩⟨10| + h.c.) on the
    // single-photon block, as ℓ on |11⟩ coupled to |02⟩ and |20⟩ with
    // weight −4/π, and as λ on every remaining multiphoton level. The
    // {|02⟩, |11⟩, |20⟩} block is singular because λℓ = (4/π)²·2.
    let mut a_matrix = DMatrix::zeros(D2, D2);
    a_matrix[(idx(0, 1), idx(0, 1))] = lam_plus_mu;
    a_matrix[(idx(1, 0), idx(1, 0))] = lam_plus_mu;
    a_matrix[(idx(0, 1), idx(1, 0))] = m;
    a_matrix[(idx(1, 0), idx(0, 1))] = m;
    a_matrix[(idx(1, 1), idx(1, 1))] = ell;
    for &level in &[idx(0, 2), idx(2, 0), idx(1, 2), idx(2, 1), idx(2, 2)] {
        a_matrix[(level, level)] = lambda;
    }
    a_matrix[(idx(0, 2), idx(1, 1))] = -4.0 / PI;
    a_matrix[(idx(1, 1), idx(0, 2))] = -4.0 / PI;
    a_matrix[(idx(2, 0), idx(1, 1))] = -4.0 / PI;
    a_matrix[(idx(1, 1), idx(2, 0))] = -4.0 / PI;

    let residual = &a_matrix + partial_transpose_01(&b_matrix)
        - both_at_most_one_projector() * mu
        - DMatrix::identity(D2, D2) * lambda
        + witness_objective_matrix();
    let residual_norm = residual.norm();

    let min_eig = |m: &DMatrix<f64>| {
        m.clone().symmetric_eigen().eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min)
    };
    let min_eig_a = min_eig(&a_matrix);
    let min_eig_b = min_eig(&b_matrix);

    Ok(CertificateData {
        lambda,
        mu,
        ell,
        m,
        a_matrix,
        b_matrix,
        residual_norm,
        min_eig_a,
        min_eig_b,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::pjoint_closed_form;

    const TIGHT: f64 = 1e-12;

    #[test]
    fn multipliers_match_frozen_values_at_p_one_tenth() {
        let cert = build_certificate(0.1).unwrap();
        assert!((cert.lambda - 3.601_265_264_628_424_3).abs() < TIGHT);
        assert!((cert.mu - -2.400_843_509_752_282_9).abs() < TIGHT);
        assert!((cert.ell - 0.900_316_316_157_106_07).abs() < TIGHT);
        assert!((cert.m - -1.200_421_754_876_141_4).abs() < TIGHT);
    }

    #[test]
    fn multipliers_degenerate_cleanly_at_p_one_half() {
        let cert = build_certificate(0.5).unwrap();
        assert!((cert.lambda - 1.800_632_632_314_212_1).abs() < TIGHT);
        assert!((cert.ell - cert.lambda).abs() < TIGHT);
        assert!(cert.mu.abs() < TIGHT);
        assert!((cert.m + cert.lambda).abs() < TIGHT);
    }

    #[test]
    fn stable_forms_agree_with_the_literal_formulas() {
        for &p in &[0.05, 0.17, 0.3, 0.45] {
            let cert = build_certificate(p).unwrap();
            let q = 1.0 - p;
            let x_plus = q.sqrt() + p.sqrt();
            let x_minus = q.sqrt() - p.sqrt();
            let k = 2.0 * SQRT_2 / PI;
            let mu_literal = -k * x_plus * x_minus / (p.sqrt() * q.sqrt());
            assert!((cert.mu - mu_literal).abs() < TIGHT * mu_literal.abs().max(1.0));
            assert!((cert.lambda * cert.ell - 32.0 / (PI * PI)).abs() < TIGHT * 10.0);
        }
    }

    #[test]
    fn certificate_identity_and_positivity_hold_across_the_regime() {
        for i in 1..=50 {
            let p = 0.5 * f64::from(i) / 50.0;
            let cert = build_certificate(p).unwrap();
            assert!(
                cert.residual_norm <= 1e-10,
                "identity residual {} at p = {p}",
                cert.residual_norm
            );
            assert!(cert.min_eig_a >= -1e-10, "A not PSD at p = {p}: {}", cert.min_eig_a);
            assert!(cert.min_eig_b >= -1e-10, "B not PSD at p = {p}: {}", cert.min_eig_b);
            let chain = cert.bound_value(p);
            assert!(
                (chain - pjoint_closed_form(p)).abs() < 1e-12,
                "duality chain off at p = {p}"
            );
        }
    }

    #[test]
    fn b_matrix_is_rank_one_on_its_support() {
        let cert = build_certificate(0.23).unwrap();
        let b = &cert.b_matrix;
        let det = b[(0, 0)] * b[(idx(1, 1), idx(1, 1))] - b[(0, idx(1, 1))].powi(2);
        assert!(det.abs() < 1e-14);
    }

    #[test]
    fn rejects_out_of_regime_and_degenerate_inputs() {
        assert!(matches!(build_certificate(0.0), Err(BoundsError::DegenerateAtZero)));
        assert!(matches!(
            build_certificate(0.6),
            Err(BoundsError::OutOfRegime { .. })
        ));
        assert!(matches!(
            build_certificate(-0.1),
            Err(BoundsError::OutOfRegime { .. })
        ));
    }

    #[test]
    fn partial_transpose_is_involutive_and_moves_the_defining_entry() {
        let mut rho = DMatrix::zeros(D2, D2);
        rho[(idx(0, 0), idx(1, 1))] = 1.0;
        let pt = partial_transpose_01(&rho);
        assert_eq!(pt[(idx(0, 1), idx(1, 0))], 1.0);
        assert_eq!(pt[(idx(0, 0), idx(1, 1))], 0.0);

        let mut arbitrary = DMatrix::zeros(D2, D2);
        let mut v = 0.3_f64;
        for i in 0..D2 {
            for j in 0..D2 {
                v = (v * 997.0 + 0.123).fract();
                arbitrary[(i, j)] = v;
            }
        }
        let twice = partial_transpose_01(&partial_transpose_01(&arbitrary));
        assert!((twice - &arbitrary).norm() < 1e-15);
    }

    #[test]
    fn partial_transpose_leaves_diagonals_and_high_levels_alone() {
        let diag = DMatrix::from_fn(D2, D2, |i, j| if i == j { (i + 1) as f64 } else { 0.0 });
        assert_eq!(partial_transpose_01(&diag), diag);

        // An entry with a level-2 Bob index on either side must not move.
        let mut rho = DMatrix::zeros(D2, D2);
        rho[(idx(0, 2), idx(1, 1))] = 0.7;
        rho[(idx(1, 1), idx(0, 2))] = 0.7;
        let pt = partial_transpose_01(&rho);
        assert_eq!(pt[(idx(0, 2), idx(1, 1))], 0.7);
        assert_eq!(pt, rho);
    }

    #[test]
    fn objective_and_projector_have_the_expected_entries() {
        let m = witness_objective_matrix();
        assert!((m[(idx(0, 1), idx(1, 0))] - 8.0 / (PI * SQRT_2)).abs() < TIGHT);
        assert!((m[(idx(1, 1), idx(0, 2))] - 4.0 / PI).abs() < TIGHT);
        assert_eq!((&m - m.transpose()).norm(), 0.0);
        assert_eq!(m.iter().filter(|&&e| e != 0.0).count(), 6);

        let n = both_at_most_one_projector();
        assert_eq!(n.trace(), 4.0);
        assert_eq!((&n * &n - &n).norm(), 0.0);
        for a in 0..2 {
            for b in 0..2 {
                assert_eq!(n[(idx(a, b), idx(a, b))], 1.0);
            }
        }
    }
}
