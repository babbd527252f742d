//! Semidefinite programs bounding S over separable-compatible states.
//!
//! Both programs maximize the witness objective over real symmetric
//! ρ ⪰ 0 whose partial transpose on the 0/1 subspace is also PSD — the
//! defining relaxation of separability used throughout — subject to
//! linear constraints tying ρ to the measured local photon statistics:
//!
//! * the original program restricts the Frechet pairs to the singleton
//!   level sets {0} and {1} per party, leaving every marginal otherwise
//!   free, and treats the multiphoton component as a lump sum: the mass
//!   outside the both-at-most-one-photon subspace is capped by the
//!   measured worst case p* = p_ge2(A) + p_ge2(B), and the objective
//!   pays the flat penalty 2√2·p* in place of the ρ-dependent term;
//! * the enhanced program constrains every pairwise overlap
//!   tr((Π_S ⊗ Π_T)ρ) by the Frechet inequalities
//!   max(0, P_A(S)+P_B(T)−1) ≤ P(S∩T) ≤ min(P_A(S), P_B(T)) over all
//!   nonempty level subsets S, T of {0, 1, ≥2}, and expresses the
//!   multiphoton penalty through ρ itself as 2√2·(1 − tr(Nρ)).
//!
//! The pair of a subset with the full set carries no Frechet content
//! beyond the marginal itself, so those pairs enter as marginal equality
//! rows and the full×full pair is dropped entirely (48 informative pairs
//! out of the nominal 49).
//!
//! With measurement uncertainties, each local probability becomes a box
//! variable ranging over [p − kσ, p + kσ] (clipped to [0, 1]) and every
//! Frechet row becomes jointly linear in ρ and those variables; a
//! min/max over two sides then needs one row per side. Degenerate cases
//! where a side is pinned at exactly 0 or 1 are emitted as equalities so
//! the dual never sees an opposing pair of inequalities with zero slack.
//!
//! Trailing photon levels whose probability is pinned at exactly zero
//! are excluded from the matrix basis before the solver sees them.
//! Keeping such a level would force diagonal entries of ρ to vanish, so
//! the feasible set would have no interior point and the dual would
//! acquire a flat recession ray (a zero-objective direction along which
//! the log barrier decreases forever), stalling the solver; on the
//! reduced basis the same constraints become either vacuous or plain
//! linear dependencies that preprocessing removes. A zero probability
//! *below* a nonzero level cannot be reduced away this way, because the
//! 0/1-subspace transposition is tied to the physical level labels; such
//! statistics are exotic and may be reported as a solver failure rather
//! than a bound.
//!
//! Every bound is reported from the dual side: the returned value is the
//! certified ceiling, and the multipliers are re-verified by
//! [`crate::sdp::check_dual_feasibility`] before the result is accepted.

use nalgebra::DMatrix;
use std::f64::consts::{PI, SQRT_2};

use super::certificate::{both_at_most_one_projector, witness_objective_matrix};
use super::{
    validated_levels, BoundCertificate, BoundInputs, BoundMethod, BoundResult, BoundsError,
};
use crate::sdp::{
    self, tolerances, BoxVar, LinearConstraint, PsdMap, Relation, SdpProblem, SdpStatus,
};
use crate::tomography::LocalPhotonStats;

/// Nonempty proper subsets of the level set {0, 1, ≥2}, as bitmasks.
const PROPER_MASKS: [u8; 6] = [0b001, 0b010, 0b100, 0b011, 0b101, 0b110];
/// Singleton level sets available to the original program.
const SINGLE_PHOTON_MASKS: [u8; 2] = [0b001, 0b010];
/// Below this width a box variable is pinned and folded into constants.
const PIN_WIDTH: f64 = 1e-14;

/// Duality-gap target for every bound-producing solve.
const DEFAULT_TOL: f64 = tolerances::GAP;
const DEFAULT_MAX_ITER: usize = 600;

const PARTY: [&str; 2] = ["A", "B"];
const LEVEL_NAMES: [&str; 3] = ["0", "1", ">=2"];

fn mask_label(mask: u8) -> String {
    let named: Vec<&str> =
        (0..3).filter(|l| mask & (1 << l) != 0).map(|l| LEVEL_NAMES[l]).collect();
    format!("{{{}}}", named.join(","))
}

/// The witness objective on the basis spanned by the first `dim_a`
/// Alice levels and `dim_b` Bob levels (index n_A·dim_b + n_B). Matches
/// [`witness_objective_matrix`] at full dimension; couplings that
/// reference an excluded level simply disappear.
fn reduced_witness_objective(dim_a: usize, dim_b: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(dim_a * dim_b, dim_a * dim_b);
    let idx = |a: usize, b: usize| a * dim_b + b;
    if dim_a >= 2 && dim_b >= 2 {
        let w = 8.0 / (PI * SQRT_2);
        m[(idx(0, 1), idx(1, 0))] = w;
        m[(idx(1, 0), idx(0, 1))] = w;
    }
    if dim_a >= 3 && dim_b >= 2 {
        m[(idx(2, 0), idx(1, 1))] = 4.0 / PI;
        m[(idx(1, 1), idx(2, 0))] = 4.0 / PI;
    }
    if dim_a >= 2 && dim_b >= 3 {
        m[(idx(0, 2), idx(1, 1))] = 4.0 / PI;
        m[(idx(1, 1), idx(0, 2))] = 4.0 / PI;
    }
    m
}

/// Projector onto both sides carrying at most one photon, on the same
/// reduced basis.
fn reduced_both_at_most_one(dim_a: usize, dim_b: usize) -> DMatrix<f64> {
    let mut n = DMatrix::zeros(dim_a * dim_b, dim_a * dim_b);
    for a in 0..dim_a.min(2) {
        for b in 0..dim_b.min(2) {
            n[(a * dim_b + b, a * dim_b + b)] = 1.0;
        }
    }
    n
}

/// Objective and offset shared by the enhanced and box-variable
/// programs: tr(Mρ) + 2√2·(1 − tr(Nρ)).
fn enhanced_objective(dim_a: usize, dim_b: usize) -> (DMatrix<f64>, f64) {
    let c = reduced_witness_objective(dim_a, dim_b)
        - reduced_both_at_most_one(dim_a, dim_b) * (2.0 * SQRT_2);
    (c, 2.0 * SQRT_2)
}

/// Accumulates the constraint rows of one program, tracking which local
/// probabilities are fixed numbers and which are box variables, and on
/// which live sub-basis the matrix variable lives.
struct ProgramBuilder {
    constraints: Vec<LinearConstraint>,
    box_vars: Vec<BoxVar>,
    var_of: [[Option<usize>; 3]; 2],
    levels: [[f64; 3]; 2],
    dim_a: usize,
    dim_b: usize,
}

impl ProgramBuilder {
    /// All probabilities fixed at their point estimates.
    fn point(a: [f64; 3], b: [f64; 3]) -> Self {
        let mut builder = ProgramBuilder {
            constraints: Vec::new(),
            box_vars: Vec::new(),
            var_of: [[None; 3]; 2],
            levels: [a, b],
            dim_a: 3,
            dim_b: 3,
        };
        builder.shrink_to_live_levels();
        builder
    }

    /// Each probability with nonzero confidence width becomes a box
    /// variable; zero-width boxes collapse to constants so the row
    /// emitter can use the exact degenerate forms.
    fn boxed(a: [f64; 3], b: [f64; 3], sigma: [[f64; 3]; 2], k_sigma: f64) -> Self {
        let mut builder = ProgramBuilder {
            constraints: Vec::new(),
            box_vars: Vec::new(),
            var_of: [[None; 3]; 2],
            levels: [a, b],
            dim_a: 3,
            dim_b: 3,
        };
        for party in 0..2 {
            for level in 0..3 {
                let p = builder.levels[party][level];
                let lo = (p - k_sigma * sigma[party][level]).clamp(0.0, 1.0);
                let up = (p + k_sigma * sigma[party][level]).clamp(0.0, 1.0);
                if up - lo > PIN_WIDTH {
                    builder.var_of[party][level] = Some(builder.box_vars.len());
                    builder.box_vars.push(BoxVar {
                        lo,
                        up,
                        label: format!("p{} {}", LEVEL_NAMES[level], PARTY[party]),
                    });
                }
            }
        }
        builder.shrink_to_live_levels();
        builder
    }

    /// Drops trailing dead levels (probability pinned at exactly zero)
    /// from the matrix basis; see the module notes on why they must not
    /// reach the solver.
    fn shrink_to_live_levels(&mut self) {
        for party in 0..2 {
            let dim = if party == 0 { &mut self.dim_a } else { &mut self.dim_b };
            while *dim > 1 {
                let level = *dim - 1;
                if self.var_of[party][level].is_some() || self.levels[party][level] > 0.0 {
                    break;
                }
                *dim -= 1;
            }
        }
    }

    fn matrix_dim(&self) -> usize {
        self.dim_a * self.dim_b
    }

    /// Diagonal projector onto Alice levels in `mask_a` and Bob levels
    /// in `mask_b`; excluded levels contribute nothing.
    fn pair_projector(&self, mask_a: u8, mask_b: u8) -> DMatrix<f64> {
        let (da, db) = (self.dim_a, self.dim_b);
        DMatrix::from_fn(da * db, da * db, |i, j| {
            let (a, b) = (i / db, i % db);
            if i == j && mask_a & (1 << a) != 0 && mask_b & (1 << b) != 0 {
                1.0
            } else {
                0.0
            }
        })
    }

    /// Splits a level subset's probability into its pinned constant part
    /// and the indices of its live box variables.
    fn side(&self, party: usize, mask: u8) -> (f64, Vec<usize>) {
        let mut constant = 0.0;
        let mut vars = Vec::new();
        for level in 0..3 {
            if mask & (1 << level) == 0 {
                continue;
            }
            match self.var_of[party][level] {
                Some(v) => vars.push(v),
                None => constant += self.levels[party][level],
            }
        }
        (constant, vars)
    }

    fn push_row(
        &mut self,
        g: DMatrix<f64>,
        plus: &[usize],
        minus: &[usize],
        rel: Relation,
        rhs: f64,
        label: String,
    ) {
        let mut box_coeffs = Vec::new();
        if !plus.is_empty() || !minus.is_empty() {
            box_coeffs = vec![0.0; self.box_vars.len()];
            for &v in plus {
                box_coeffs[v] += 1.0;
            }
            for &v in minus {
                box_coeffs[v] -= 1.0;
            }
        }
        self.constraints.push(LinearConstraint { g, box_coeffs, rel, rhs, label });
    }

    fn push_trace_row(&mut self) {
        let d = self.matrix_dim();
        self.push_row(
            DMatrix::identity(d, d),
            &[],
            &[],
            Relation::Le,
            1.0,
            "trace at most one".into(),
        );
    }

    /// Caps the mass outside the both-at-most-one-photon subspace at the
    /// measured worst case p*. On a basis with no level above one the
    /// cap reads 0 ≤ p* and no row is emitted.
    fn push_escape_cap(&mut self, p_star: f64) {
        let d = self.matrix_dim();
        let escape =
            DMatrix::identity(d, d) - reduced_both_at_most_one(self.dim_a, self.dim_b);
        if escape.amax() == 0.0 {
            return;
        }
        self.push_row(
            escape,
            &[],
            &[],
            Relation::Le,
            p_star,
            "multiphoton mass at most p*".into(),
        );
    }

    /// Marginal rows tr((Π_S ⊗ I)ρ) = P_A(S) and the mirror-image Bob
    /// rows, for each subset in `masks`. These are the subset×full-set
    /// Frechet pairs, whose lower and upper limits coincide.
    fn emit_marginals(&mut self, masks: &[u8]) {
        for party in 0..2 {
            for &mask in masks {
                let g = if party == 0 {
                    self.pair_projector(mask, 0b111)
                } else {
                    self.pair_projector(0b111, mask)
                };
                let (constant, vars) = self.side(party, mask);
                let label = format!("marginal {} {}", PARTY[party], mask_label(mask));
                self.push_row(g, &[], &vars, Relation::Eq, constant, label);
            }
        }
    }

    /// One Frechet pair. Degenerate sides (probability pinned at exactly
    /// 0 or 1) force the overlap outright and are emitted as equalities;
    /// fully pinned pairs use the evaluated min/max; everything else
    /// gets one upper row per side plus the two lower rows.
    fn emit_pair(&mut self, mask_a: u8, mask_b: u8) {
        let (ca, va) = self.side(0, mask_a);
        let (cb, vb) = self.side(1, mask_b);
        let g = self.pair_projector(mask_a, mask_b);
        let name = format!("frechet A{} B{}", mask_label(mask_a), mask_label(mask_b));

        let a_pinned = va.is_empty();
        let b_pinned = vb.is_empty();
        if a_pinned && ca <= PIN_WIDTH || b_pinned && cb <= PIN_WIDTH {
            self.push_row(g, &[], &[], Relation::Eq, 0.0, format!("{name} empty side"));
        } else if a_pinned && ca >= 1.0 - PIN_WIDTH {
            self.push_row(g, &[], &vb, Relation::Eq, cb, format!("{name} full side"));
        } else if b_pinned && cb >= 1.0 - PIN_WIDTH {
            self.push_row(g, &[], &va, Relation::Eq, ca, format!("{name} full side"));
        } else if a_pinned && b_pinned {
            let up = ca.min(cb);
            let lo = (ca + cb - 1.0).max(0.0);
            if up - lo <= 1e-12 {
                self.push_row(g, &[], &[], Relation::Eq, up, format!("{name} pinned"));
            } else {
                self.push_row(g.clone(), &[], &[], Relation::Le, up, format!("{name} upper"));
                self.push_row(g, &[], &[], Relation::Ge, lo, format!("{name} lower"));
            }
        } else {
            self.push_row(g.clone(), &[], &va, Relation::Le, ca, format!("{name} upper A"));
            self.push_row(g.clone(), &[], &vb, Relation::Le, cb, format!("{name} upper B"));
            self.push_row(g.clone(), &[], &[], Relation::Ge, 0.0, format!("{name} nonneg"));
            let union: Vec<usize> = va.iter().chain(vb.iter()).copied().collect();
            self.push_row(g, &[], &union, Relation::Ge, ca + cb - 1.0, format!("{name} lower"));
        }
    }

    fn emit_all_pairs(&mut self, masks: &[u8]) {
        for &mask_a in masks {
            for &mask_b in masks {
                self.emit_pair(mask_a, mask_b);
            }
        }
    }

    /// Per-party totals: live variables plus pinned constants sum to 1.
    fn emit_normalizations(&mut self) {
        for party in 0..2 {
            let (pinned, vars) = self.side(party, 0b111);
            if vars.is_empty() {
                continue;
            }
            let d = self.matrix_dim();
            self.push_row(
                DMatrix::zeros(d, d),
                &vars,
                &[],
                Relation::Eq,
                1.0 - pinned,
                format!("levels of {} sum to one", PARTY[party]),
            );
        }
    }

    fn into_problem(self, objective: DMatrix<f64>, offset: f64) -> SdpProblem {
        SdpProblem {
            dim: self.dim_a * self.dim_b,
            objective,
            offset,
            psd_maps: vec![
                PsdMap::Identity,
                PsdMap::PartialTranspose01 { dim_a: self.dim_a, dim_b: self.dim_b },
            ],
            constraints: self.constraints,
            box_vars: self.box_vars,
        }
    }
}

/// Solves, demands optimality, re-checks the dual certificate through
/// the independent verifier, and returns the certified ceiling.
fn certified_value(problem: &SdpProblem) -> Result<(f64, BoundCertificate), BoundsError> {
    let sol = sdp::solve(problem, DEFAULT_TOL, DEFAULT_MAX_ITER)?;
    if sol.status != SdpStatus::Optimal {
        return Err(BoundsError::NotOptimal {
            status: sol.status,
            iterations: sol.iterations,
            diagnostics: sol.diagnostics,
        });
    }
    let report = sdp::check_dual_feasibility(problem, &sol.dual_certificate)?;
    let residual_norm = report.stationarity_x.hypot(report.stationarity_y);
    let scale = 1.0 + problem.objective.amax();
    let mut flaws = Vec::new();
    if residual_norm > tolerances::CERT_RESIDUAL * scale {
        flaws.push(format!("stationarity residual {residual_norm:.3e}"));
    }
    if report.sign_violation > tolerances::FEASIBILITY {
        flaws.push(format!("sign violation {:.3e}", report.sign_violation));
    }
    if let Some(worst) =
        report.cone_min_eigs.iter().copied().find(|&e| e < -tolerances::FEASIBILITY)
    {
        flaws.push(format!("cone multiplier eigenvalue {worst:.3e}"));
    }
    if !flaws.is_empty() {
        return Err(BoundsError::WeakCertificate { detail: flaws.join("; ") });
    }
    Ok((
        report.dual_value,
        BoundCertificate {
            dual_value: report.dual_value,
            residual_norm,
            min_cone_eigs: report.cone_min_eigs,
            sign_violation: report.sign_violation,
            gap: Some(sol.gap),
            iterations: Some(sol.iterations),
        },
    ))
}

/// Refined separable bound: all 48 informative Frechet pairs over level
/// subsets, multiphoton mass expressed through ρ itself. The returned
/// value is the certified dual ceiling, never the primal objective.
pub fn sdp_enhanced_bound(
    stats_a: &LocalPhotonStats,
    stats_b: &LocalPhotonStats,
) -> Result<BoundResult, BoundsError> {
    let a = validated_levels(stats_a, "A")?;
    let b = validated_levels(stats_b, "B")?;
    let mut builder = ProgramBuilder::point(a, b);
    builder.push_trace_row();
    builder.emit_marginals(&PROPER_MASKS);
    builder.emit_all_pairs(&PROPER_MASKS);
    let (objective, offset) = enhanced_objective(builder.dim_a, builder.dim_b);
    let problem = builder.into_problem(objective, offset);
    let (value, certificate) = certified_value(&problem)?;
    Ok(BoundResult {
        value,
        method: BoundMethod::SdpEnhanced,
        certificate: Some(certificate),
        inputs: BoundInputs::from_stats(stats_a, stats_b),
        tight: None,
        small_multiphoton_regime: None,
    })
}

/// The earlier program: the local statistics enter only through the
/// four Frechet pairs over the singleton level sets {0} and {1}, and
/// the multiphoton component is handled as a lump sum — the mass
/// outside the both-at-most-one-photon subspace is capped at
/// p* = p_ge2(A) + p_ge2(B) and the objective pays 2√2·p* outright
/// instead of reading the escape mass off ρ. Every state feasible for
/// the enhanced program stays feasible here (its pinned marginals imply
/// the singleton pairs and its escape mass never exceeds p*) and its
/// objective can only grow under the swap, so this value dominates the
/// enhanced bound on identical inputs.
pub fn sdp_original_bound(
    stats_a: &LocalPhotonStats,
    stats_b: &LocalPhotonStats,
) -> Result<BoundResult, BoundsError> {
    let a = validated_levels(stats_a, "A")?;
    let b = validated_levels(stats_b, "B")?;
    let p_star = a[2] + b[2];
    let mut builder = ProgramBuilder::point(a, b);
    builder.push_trace_row();
    builder.push_escape_cap(p_star);
    builder.emit_all_pairs(&SINGLE_PHOTON_MASKS);
    let objective = reduced_witness_objective(builder.dim_a, builder.dim_b);
    let problem = builder.into_problem(objective, 2.0 * SQRT_2 * p_star);
    let (value, certificate) = certified_value(&problem)?;
    Ok(BoundResult {
        value,
        method: BoundMethod::SdpOriginal,
        certificate: Some(certificate),
        inputs: BoundInputs::from_stats(stats_a, stats_b),
        tight: None,
        small_multiphoton_regime: None,
    })
}

/// Worst-case enhanced bound when each local probability is only known
/// to lie in [p − k·σ, p + k·σ] (clipped to [0, 1]): the probabilities
/// join the program as box variables, every Frechet row becomes linear
/// in ρ and those variables jointly, and per-party totals are pinned to
/// one. Zero-width boxes reproduce the point bound exactly; widening
/// any box can only raise the value.
pub fn bound_with_uncertainties(
    stats_a: &LocalPhotonStats,
    stats_b: &LocalPhotonStats,
    k_sigma: f64,
) -> Result<BoundResult, BoundsError> {
    if !k_sigma.is_finite() || k_sigma < 0.0 {
        return Err(BoundsError::BadStats {
            reason: format!("confidence radius k_sigma = {k_sigma} must be finite and nonnegative"),
        });
    }
    let a = validated_levels(stats_a, "A")?;
    let b = validated_levels(stats_b, "B")?;
    let sigma = [
        [stats_a.sigma0, stats_a.sigma1, stats_a.sigma_ge2],
        [stats_b.sigma0, stats_b.sigma1, stats_b.sigma_ge2],
    ];
    for (party, levels) in sigma.iter().enumerate() {
        for (s, name) in levels.iter().zip(["sigma0", "sigma1", "sigma_ge2"]) {
            if !s.is_finite() || *s < 0.0 {
                return Err(BoundsError::BadStats {
                    reason: format!("{name} of party {} is {s}", PARTY[party]),
                });
            }
        }
    }
    let mut builder = ProgramBuilder::boxed(a, b, sigma, k_sigma);
    builder.push_trace_row();
    builder.emit_marginals(&PROPER_MASKS);
    builder.emit_all_pairs(&PROPER_MASKS);
    builder.emit_normalizations();
    let (objective, offset) = enhanced_objective(builder.dim_a, builder.dim_b);
    let problem = builder.into_problem(objective, offset);
    let (value, certificate) = certified_value(&problem)?;
    let mut inputs = BoundInputs::from_stats(stats_a, stats_b);
    inputs.k_sigma = Some(k_sigma);
    Ok(BoundResult {
        value,
        method: BoundMethod::SdpEnhanced,
        certificate: Some(certificate),
        inputs,
        tight: None,
        small_multiphoton_regime: None,
    })
}

/// The program behind the closed-form p_joint bound: maximize tr(Mρ)
/// subject to tr(Nρ) = 1 − p_joint and tr ρ = 1, over both cones, plus
/// the constant penalty 2√2·p_joint. Always full-dimensional. The
/// constraint order matches
/// [`super::CertificateData::to_dual_multipliers`].
pub fn pjoint_program(p_joint: f64) -> SdpProblem {
    SdpProblem {
        dim: 9,
        objective: witness_objective_matrix(),
        offset: 2.0 * SQRT_2 * p_joint,
        psd_maps: vec![PsdMap::Identity, PsdMap::PartialTranspose01 { dim_a: 3, dim_b: 3 }],
        constraints: vec![
            LinearConstraint::on_matrix(
                both_at_most_one_projector(),
                Relation::Eq,
                1.0 - p_joint,
                "subspace mass",
            ),
            LinearConstraint::on_matrix(
                DMatrix::identity(9, 9),
                Relation::Eq,
                1.0,
                "normalization",
            ),
        ],
        box_vars: Vec::new(),
    }
}

/// Solves the p_joint-only program and returns the certified value.
/// Unlike the closed form this stays meaningful beyond p_joint = 1/2,
/// but its primary role is cross-validating the closed form inside its
/// regime.
pub fn pjoint_program_bound(p_joint: f64) -> Result<(f64, BoundCertificate), BoundsError> {
    if !(0.0..=1.0).contains(&p_joint) {
        return Err(BoundsError::OutOfRegime { value: p_joint });
    }
    certified_value(&pjoint_program(p_joint))
}
