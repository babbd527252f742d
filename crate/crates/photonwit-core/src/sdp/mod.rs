//! A small dense semidefinite-programming engine.
//!
//! Solves max ⟨C, X⟩ + offset over a real symmetric matrix variable X and
//! optional bounded scalars y, subject to linear constraints
//! ⟨G_i, X⟩ + a_i·y {≤,=,≥} g_i and cone constraints M_k(X) ⪰ 0 for one or
//! more linear maps M_k (identity and partial transpose). All data in this
//! crate's programs is real, so a complex Hermitian optimizer can always be
//! replaced by its real part at equal objective value; the engine therefore
//! works over real symmetric matrices only.
//!
//! The reported bound is always the *dual* value: the solver runs a
//! log-barrier interior-point method on the Lagrangian dual, which is
//! strictly feasible for every program in this crate even when the primal
//! optimum sits on the boundary of the PSD cones (e.g. states with an
//! exactly vanishing multiphoton population). Weak duality then makes the
//! returned value a safe upper bound regardless of convergence quality,
//! and the recovered multipliers are checkable by [`check_dual_feasibility`]
//! without re-solving. Newton systems are solved by dense LU without any
//! randomized pivoting, so identical problems produce bitwise-identical
//! iterates.
//!
//! Numeric tolerances live in [`tolerances`].

mod solver;

use nalgebra::DMatrix;
use serde::ser::SerializeSeq;
use serde::{Serialize, Serializer};
use thiserror::Error;

/// All solver tolerances in one place.
pub mod tolerances {
    /// Allowed primal constraint violation / cone eigenvalue deficit.
    pub const FEASIBILITY: f64 = 1e-9;
    /// Default duality-gap target of [`super::solve`].
    pub const GAP: f64 = 1e-7;
    /// Dual certificates must reproduce stationarity to this residual.
    pub const CERT_RESIDUAL: f64 = 1e-8;
    /// Dual objective below −RAY_SCALE·(problem scale) is treated as an
    /// unbounded dual ray, i.e. a primal infeasibility certificate.
    pub const RAY_SCALE: f64 = 1e8;
}

/// Largest matrix dimension the dense engine accepts.
pub const MAX_DIM: usize = 16;
/// Largest number of linear constraints accepted.
pub const MAX_CONSTRAINTS: usize = 256;

#[derive(Debug, Error)]
pub enum SdpError {
    #[error("ill-formed problem: {0}")]
    BadProblem(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
}

/// Constraint sense of one linear row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

/// One linear constraint ⟨g, X⟩ + box_coeffs·y (rel) rhs.
#[derive(Debug, Clone, Serialize)]
pub struct LinearConstraint {
    #[serde(serialize_with = "serialize_matrix")]
    pub g: DMatrix<f64>,
    /// Coefficients of the box variables; empty means all zero.
    pub box_coeffs: Vec<f64>,
    pub rel: Relation,
    pub rhs: f64,
    pub label: String,
}

impl LinearConstraint {
    /// Row acting on X only.
    pub fn on_matrix(g: DMatrix<f64>, rel: Relation, rhs: f64, label: impl Into<String>) -> Self {
        Self { g, box_coeffs: Vec::new(), rel, rhs, label: label.into() }
    }
}

/// A scalar decision variable confined to [lo, up].
#[derive(Debug, Clone, Serialize)]
pub struct BoxVar {
    pub lo: f64,
    pub up: f64,
    pub label: String,
}

/// Linear map whose image of X must be PSD.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PsdMap {
    /// X itself.
    Identity,
    /// Partial transpose of the block of a dim_a ⊗ dim_b system (indices
    /// i·dim_b + j) where both factors sit in their levels 0 and 1:
    /// Y[(a,b),(c,d)] = X[(a,d),(c,b)] for a,b,c,d ∈ {0,1}, all other
    /// entries of X dropped. Requiring the image PSD imposes positivity
    /// under partial transposition only within that subspace, a strict
    /// relaxation of full PPT. For a 2 ⊗ 2 system the block is everything
    /// and this is the ordinary partial transpose.
    PartialTranspose01 { dim_a: usize, dim_b: usize },
}

impl PsdMap {
    /// Applies the map.
    pub fn apply(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        match *self {
            PsdMap::Identity => x.clone(),
            PsdMap::PartialTranspose01 { dim_a, dim_b } => {
                assert_eq!(x.nrows(), dim_a * dim_b, "matrix does not match the tensor split");
                let (ka, kb) = (dim_a.min(2), dim_b.min(2));
                let mut y = DMatrix::zeros(ka * kb, ka * kb);
                for a in 0..ka {
                    for b in 0..kb {
                        for c in 0..ka {
                            for e in 0..kb {
                                y[(a * kb + b, c * kb + e)] = x[(a * dim_b + e, c * dim_b + b)];
                            }
                        }
                    }
                }
                y
            }
        }
    }

    /// Adjoint of the map for a `dim`-dimensional input space: satisfies
    /// tr(Z·apply(X)) = tr(adjoint_apply(Z)·X).
    pub fn adjoint_apply(&self, z: &DMatrix<f64>, dim: usize) -> DMatrix<f64> {
        match *self {
            PsdMap::Identity => z.clone(),
            PsdMap::PartialTranspose01 { dim_a, dim_b } => {
                let (ka, kb) = (dim_a.min(2), dim_b.min(2));
                assert_eq!(z.nrows(), ka * kb, "dual matrix does not match the block");
                let mut y = DMatrix::zeros(dim, dim);
                for a in 0..ka {
                    for b in 0..kb {
                        for c in 0..ka {
                            for e in 0..kb {
                                y[(a * dim_b + e, c * dim_b + b)] = z[(a * kb + b, c * kb + e)];
                            }
                        }
                    }
                }
                y
            }
        }
    }

    fn output_dim(&self, dim: usize) -> usize {
        match *self {
            PsdMap::Identity => dim,
            PsdMap::PartialTranspose01 { dim_a, dim_b } => dim_a.min(2) * dim_b.min(2),
        }
    }
}

/// A maximization problem over one symmetric matrix and box scalars.
#[derive(Debug, Clone, Serialize)]
pub struct SdpProblem {
    pub dim: usize,
    #[serde(serialize_with = "serialize_matrix")]
    pub objective: DMatrix<f64>,
    /// Constant added to the objective value.
    pub offset: f64,
    pub psd_maps: Vec<PsdMap>,
    pub constraints: Vec<LinearConstraint>,
    pub box_vars: Vec<BoxVar>,
}

impl SdpProblem {
    pub(crate) fn validate(&self) -> Result<(), SdpError> {
        let bad = |m: String| Err(SdpError::BadProblem(m));
        if self.dim == 0 || self.dim > MAX_DIM {
            return bad(format!("dimension {} outside 1..={MAX_DIM}", self.dim));
        }
        if self.psd_maps.is_empty() {
            return bad("at least one PSD map is required".into());
        }
        if self.constraints.is_empty() || self.constraints.len() > MAX_CONSTRAINTS {
            return bad(format!(
                "constraint count {} outside 1..={MAX_CONSTRAINTS}",
                self.constraints.len()
            ));
        }
        let check_sym = |m: &DMatrix<f64>, what: &str| {
            if m.nrows() != self.dim || m.ncols() != self.dim {
                return bad(format!("{what} is {}x{}, expected {}", m.nrows(), m.ncols(), self.dim));
            }
            let dev = (m - m.transpose()).abs().max();
            if dev > 1e-12 {
                return bad(format!("{what} asymmetric by {dev:.2e}"));
            }
            if m.iter().any(|v| !v.is_finite()) {
                return bad(format!("{what} has non-finite entries"));
            }
            Ok(())
        };
        check_sym(&self.objective, "objective")?;
        for map in &self.psd_maps {
            if let PsdMap::PartialTranspose01 { dim_a, dim_b } = map {
                if dim_a * dim_b != self.dim {
                    return bad(format!(
                        "partial transpose split {dim_a}x{dim_b} does not factor dimension {}",
                        self.dim
                    ));
                }
            }
        }
        for (i, c) in self.constraints.iter().enumerate() {
            check_sym(&c.g, &format!("constraint {} ({})", i, c.label))?;
            if !c.box_coeffs.is_empty() && c.box_coeffs.len() != self.box_vars.len() {
                return bad(format!(
                    "constraint {} has {} box coefficients for {} box variables",
                    i,
                    c.box_coeffs.len(),
                    self.box_vars.len()
                ));
            }
            if !c.rhs.is_finite() {
                return bad(format!("constraint {i} has non-finite rhs"));
            }
        }
        for (j, b) in self.box_vars.iter().enumerate() {
            if !(b.lo.is_finite() && b.up.is_finite() && b.lo <= b.up) {
                return bad(format!("box variable {j} ({}) has bounds [{}, {}]", b.label, b.lo, b.up));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SdpStatus {
    Optimal,
    MaxIterations,
    Infeasible,
}

/// Dual variables aligned with the problem definition: one multiplier per
/// linear constraint (sign ≥ 0 for ≤-rows, ≤ 0 for ≥-rows, free for
/// equalities), nonnegative multipliers for each box bound, and one PSD
/// matrix per cone. Together they must satisfy the stationarity identity
/// Σ_i d_i G_i − Σ_k M_k(Z_k) = C (and its box-variable analogue), which
/// [`check_dual_feasibility`] verifies without solving anything.
#[derive(Debug, Clone, Serialize)]
pub struct DualMultipliers {
    pub constraint_duals: Vec<f64>,
    pub box_lower_duals: Vec<f64>,
    pub box_upper_duals: Vec<f64>,
    #[serde(serialize_with = "serialize_matrices")]
    pub cone_duals: Vec<DMatrix<f64>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SdpSolution {
    pub status: SdpStatus,
    /// Objective of the recovered (strictly feasible) primal point.
    pub primal_value: f64,
    /// Certified dual bound; the value callers should report.
    pub dual_value: f64,
    /// dual_value − primal_value (≥ 0 up to round-off).
    pub gap: f64,
    #[serde(serialize_with = "serialize_matrix")]
    pub rho_opt: DMatrix<f64>,
    pub box_opt: Vec<f64>,
    pub dual_certificate: DualMultipliers,
    pub iterations: usize,
    /// Human-readable notes on non-optimal terminations; empty otherwise.
    pub diagnostics: String,
}

/// Residuals of a claimed dual certificate against a problem.
#[derive(Debug, Clone, Serialize)]
pub struct ResidualReport {
    /// Frobenius norm of Σ d_i G_i − Σ M_k(Z_k) − C.
    pub stationarity_x: f64,
    /// Norm of the box-variable stationarity rows.
    pub stationarity_y: f64,
    /// Minimum eigenvalue of each cone multiplier (≥ −tol required).
    pub cone_min_eigs: Vec<f64>,
    /// Largest violation of the multiplier sign conditions (0 when clean).
    pub sign_violation: f64,
    /// The bound this certificate proves: Σ d_i g_i + Σ du_j·up_j −
    /// Σ dl_j·lo_j + offset.
    pub dual_value: f64,
}

/// Solves the problem to duality gap ≤ tol (see [`tolerances::GAP`] for
/// the standard choice), spending at most `max_iter` Newton steps.
pub fn solve(problem: &SdpProblem, tol: f64, max_iter: usize) -> Result<SdpSolution, SdpError> {
    problem.validate()?;
    solver::solve_dual_barrier(problem, tol, max_iter)
}

/// Verifies a dual certificate by direct evaluation: stationarity
/// residuals, cone eigenvalues, multiplier signs, and the bound value.
/// Pure arithmetic; no solving.
pub fn check_dual_feasibility(
    problem: &SdpProblem,
    multipliers: &DualMultipliers,
) -> Result<ResidualReport, SdpError> {
    problem.validate()?;
    let d = problem.dim;
    let nb = problem.box_vars.len();
    if multipliers.constraint_duals.len() != problem.constraints.len() {
        return Err(SdpError::ShapeMismatch(format!(
            "{} constraint duals for {} constraints",
            multipliers.constraint_duals.len(),
            problem.constraints.len()
        )));
    }
    if multipliers.box_lower_duals.len() != nb || multipliers.box_upper_duals.len() != nb {
        return Err(SdpError::ShapeMismatch("box dual count mismatch".into()));
    }
    if multipliers.cone_duals.len() != problem.psd_maps.len() {
        return Err(SdpError::ShapeMismatch(format!(
            "{} cone duals for {} cones",
            multipliers.cone_duals.len(),
            problem.psd_maps.len()
        )));
    }
    for (k, z) in multipliers.cone_duals.iter().enumerate() {
        let want = problem.psd_maps[k].output_dim(d);
        if z.nrows() != want || z.ncols() != want {
            return Err(SdpError::ShapeMismatch(format!(
                "cone dual {k} is {}x{}, expected {want}",
                z.nrows(),
                z.ncols()
            )));
        }
    }

    let mut station = -&problem.objective;
    for (c, &dual) in problem.constraints.iter().zip(&multipliers.constraint_duals) {
        station += &c.g * dual;
    }
    for (map, z) in problem.psd_maps.iter().zip(&multipliers.cone_duals) {
        station -= map.adjoint_apply(z, d);
    }
    let stationarity_x = station.norm();

    let mut stationarity_y = 0.0f64;
    for j in 0..nb {
        let mut r = multipliers.box_lower_duals[j] - multipliers.box_upper_duals[j];
        for (c, &dual) in problem.constraints.iter().zip(&multipliers.constraint_duals) {
            if !c.box_coeffs.is_empty() {
                r -= dual * c.box_coeffs[j];
            }
        }
        stationarity_y = stationarity_y.hypot(r);
    }

    let mut sign_violation = 0.0f64;
    for (c, &dual) in problem.constraints.iter().zip(&multipliers.constraint_duals) {
        match c.rel {
            Relation::Le => sign_violation = sign_violation.max(-dual),
            Relation::Ge => sign_violation = sign_violation.max(dual),
            Relation::Eq => {}
        }
    }
    for &dl in &multipliers.box_lower_duals {
        sign_violation = sign_violation.max(-dl);
    }
    for &du in &multipliers.box_upper_duals {
        sign_violation = sign_violation.max(-du);
    }

    let cone_min_eigs = multipliers
        .cone_duals
        .iter()
        .map(|z| {
            let sym = (z + z.transpose()) * 0.5;
            sym.symmetric_eigen().eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
        })
        .collect();

    let mut dual_value = problem.offset;
    for (c, &dual) in problem.constraints.iter().zip(&multipliers.constraint_duals) {
        dual_value += dual * c.rhs;
    }
    for (b, (&dl, &du)) in problem
        .box_vars
        .iter()
        .zip(multipliers.box_lower_duals.iter().zip(&multipliers.box_upper_duals))
    {
        dual_value += du * b.up - dl * b.lo;
    }

    Ok(ResidualReport { stationarity_x, stationarity_y, cone_min_eigs, sign_violation, dual_value })
}

pub(crate) fn serialize_matrix<S: Serializer>(m: &DMatrix<f64>, s: S) -> Result<S::Ok, S::Error> {
    let rows: Vec<Vec<f64>> =
        (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect();
    rows.serialize(s)
}

fn serialize_matrices<S: Serializer>(ms: &[DMatrix<f64>], s: S) -> Result<S::Ok, S::Error> {
    let mut seq = s.serialize_seq(Some(ms.len()))?;
    for m in ms {
        let rows: Vec<Vec<f64>> =
            (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect();
        seq.serialize_element(&rows)?;
    }
    seq.end()
}
