//! Certificate audit: rebuild the closed-form dual certificate on a
//! p_joint grid and re-verify its defining identity, positivity, and the
//! bound chain from scratch, without trusting the construction's own
//! bookkeeping. An optional perturbation check proves the audit can see
//! a corrupted multiplier.

use nalgebra::DMatrix;
use photonwit_core::bounds::{
    both_at_most_one_projector, build_certificate, partial_transpose_01, pjoint_closed_form,
    witness_objective_matrix, CertificateData,
};
use serde::Serialize;

use crate::CliError;

pub const CERTIFY_SCHEMA: &str = "certify-report/v1";

/// Audit tolerances, matching the certificate's stated guarantees.
pub const RESIDUAL_TOL: f64 = 1e-10;
pub const EIG_TOL: f64 = -1e-10;
pub const CHAIN_TOL: f64 = 1e-12;

#[derive(Debug, Serialize)]
pub struct CertifyRow {
    pub p_joint: f64,
    pub lambda: f64,
    pub mu: f64,
    pub ell: f64,
    pub m: f64,
    /// ‖A + B^{T_B(0,1)} − μN − λI + M‖_F, recomputed here.
    pub residual_norm: f64,
    pub min_eig_a: f64,
    pub min_eig_b: f64,
    /// λ + μ(1 − p_joint) + 2√2·p_joint.
    pub bound_value: f64,
    /// The closed-form bound it must equal.
    pub closed_form: f64,
    pub residual_ok: bool,
    pub eigs_ok: bool,
    pub chain_ok: bool,
    pub passed: bool,
}

#[derive(Debug, Serialize)]
pub struct CertifyReport {
    pub schema: &'static str,
    /// Amount added to λ before auditing; nonzero values must fail.
    pub perturbation: f64,
    pub rows: Vec<CertifyRow>,
    pub all_passed: bool,
}

fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    m.clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .fold(f64::INFINITY, |acc, &e| acc.min(e))
}

/// Re-derives every audited quantity from the certificate's matrices and
/// multipliers alone.
fn audit(cert: &CertificateData, p_joint: f64) -> CertifyRow {
    let identity = DMatrix::identity(9, 9);
    let residual = &cert.a_matrix + partial_transpose_01(&cert.b_matrix)
        - both_at_most_one_projector() * cert.mu
        - identity * cert.lambda
        + witness_objective_matrix();
    let residual_norm = residual.norm();
    let min_eig_a = min_eigenvalue(&cert.a_matrix);
    let min_eig_b = min_eigenvalue(&cert.b_matrix);
    let bound_value = cert.bound_value(p_joint);
    let closed_form = pjoint_closed_form(p_joint);
    let residual_ok = residual_norm <= RESIDUAL_TOL;
    let eigs_ok = min_eig_a >= EIG_TOL && min_eig_b >= EIG_TOL;
    let chain_ok = (bound_value - closed_form).abs() <= CHAIN_TOL;
    CertifyRow {
        p_joint,
        lambda: cert.lambda,
        mu: cert.mu,
        ell: cert.ell,
        m: cert.m,
        residual_norm,
        min_eig_a,
        min_eig_b,
        bound_value,
        closed_form,
        residual_ok,
        eigs_ok,
        chain_ok,
        passed: residual_ok && eigs_ok && chain_ok,
    }
}

/// Builds and audits the certificate at each grid point. `perturbation`
/// is added to λ first, so a nonzero value demonstrates that corruption
/// is detected (the report then fails).
pub fn run_certify(grid: &[f64], perturbation: f64) -> Result<CertifyReport, CliError> {
    if grid.is_empty() {
        return Err(CliError::Usage("certify needs at least one p_joint value".into()));
    }
    if !perturbation.is_finite() {
        return Err(CliError::Usage(format!("perturbation {perturbation} must be finite")));
    }
    for &p in grid {
        if !(p > 0.0 && p <= 0.5) {
            return Err(CliError::Usage(format!(
                "p_joint = {p} is outside the certificate regime (0, 0.5]"
            )));
        }
    }
    let mut rows = Vec::with_capacity(grid.len());
    for &p in grid {
        let mut cert =
            build_certificate(p).map_err(|e| CliError::Usage(format!("p_joint = {p}: {e}")))?;
        cert.lambda += perturbation;
        rows.push(audit(&cert, p));
    }
    let all_passed = rows.iter().all(|r| r.passed);
    Ok(CertifyReport { schema: CERTIFY_SCHEMA, perturbation, rows, all_passed })
}

/// The grid used when none is given.
pub fn default_grid() -> Vec<f64> {
    vec![0.05, 0.1, 0.25, 0.5]
}
