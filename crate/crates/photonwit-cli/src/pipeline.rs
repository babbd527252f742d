//! Shared per-point machinery: building the lossy two-mode state,
//! simulating one grid point end to end, and dispatching bound methods.

use photonwit_core::bounds::{
    self, analytic_multiphoton_bound, pjoint_closed_form_bound, qubit_sep_bound,
    sdp_enhanced_bound, sdp_original_bound, sep_bound_lossy_asym, sep_bound_lossy_sym,
    BoundsError,
};
use photonwit_core::fock::{
    apply_loss, beam_splitter_split, heralded_source_state, LossParams, TwoModeState,
};
use photonwit_core::homodyne::{phase_averaged_correlator, sample_batch};
use photonwit_core::tomography::{estimate_local_probs, p_star, Party};
use photonwit_core::witness::s_from_samples;
use photonwit_core::{BoundMethod, BoundResult, LocalPhotonStats, WitnessResult};
use std::f64::consts::FRAC_PI_4;

use crate::config::ExperimentConfig;
use crate::CliError;

/// Fiber length whose 0.2 dB/km attenuation equals the transmission.
pub fn km_equivalent(eta_ab: f64) -> f64 {
    -10.0 * eta_ab.log10() / 0.2
}

/// Spreads grid indices across the seed space so per-point sample
/// streams never collide.
pub fn point_seed(base: u64, index: usize) -> u64 {
    base.wrapping_add((index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Heralded source, balanced splitter, then per-arm loss.
pub fn build_state(p1: f64, p2: f64, eta_a: f64, eta_b: f64) -> Result<TwoModeState, CliError> {
    let source = heralded_source_state(p1, p2)
        .map_err(|e| CliError::Usage(format!("source: {e}")))?;
    let split = beam_splitter_split(&source, 0.5)
        .map_err(|e| CliError::Usage(format!("splitter: {e}")))?;
    let loss = LossParams::new(eta_a, eta_b)
        .map_err(|e| CliError::Usage(format!("loss: {e}")))?;
    Ok(apply_loss(&split, &loss))
}

/// The phase-averaged witness value the experiment estimates:
/// S = 2E(+π/4) + 2E(−π/4).
pub fn exact_witness(state: &TwoModeState) -> f64 {
    2.0 * (phase_averaged_correlator(state, FRAC_PI_4)
        + phase_averaged_correlator(state, -FRAC_PI_4))
}

/// Estimated probabilities can stray slightly outside the simplex; the
/// bounds demand exact distributions, so clip to [0, 1] and renormalize
/// before feeding them in. Uncertainties are left untouched.
pub fn project_to_simplex(stats: &LocalPhotonStats) -> LocalPhotonStats {
    let clipped = [
        stats.p0.clamp(0.0, 1.0),
        stats.p1.clamp(0.0, 1.0),
        stats.p_ge2.clamp(0.0, 1.0),
    ];
    let total: f64 = clipped.iter().sum();
    LocalPhotonStats {
        p0: clipped[0] / total,
        p1: clipped[1] / total,
        p_ge2: clipped[2] / total,
        ..*stats
    }
}

/// Everything simulated at one grid point.
pub struct PointOutcome {
    pub eta_ab: f64,
    pub eta_a: f64,
    pub eta_b: f64,
    pub s_exact: f64,
    pub witness: WitnessResult,
    /// Raw pattern-function estimates, as an experiment would report them.
    pub raw_a: LocalPhotonStats,
    pub raw_b: LocalPhotonStats,
    /// The estimates projected back onto the probability simplex; this
    /// is what every bound consumes.
    pub stats_a: LocalPhotonStats,
    pub stats_b: LocalPhotonStats,
}

/// Builds, samples, and tomographs one grid point. Failures past config
/// validation (sampler truncation artifacts, degenerate batches) come
/// back as strings for the caller's errors column.
pub fn simulate_point(
    config: &ExperimentConfig,
    eta_ab: f64,
    index: usize,
) -> Result<PointOutcome, String> {
    let (eta_a, eta_b) = config.loss_mode.arm_efficiencies(eta_ab);
    let state = build_state(config.source.p1, config.source.p2, eta_a, eta_b)
        .map_err(|e| e.to_string())?;
    let s_exact = exact_witness(&state);
    let batch = sample_batch(&state, config.samples_per_setting, point_seed(config.seed, index))
        .map_err(|e| e.to_string())?;
    let witness = s_from_samples(&batch).map_err(|e| e.to_string())?;
    let raw_a = estimate_local_probs(&batch, Party::A, 3).map_err(|e| e.to_string())?;
    let raw_b = estimate_local_probs(&batch, Party::B, 3).map_err(|e| e.to_string())?;
    Ok(PointOutcome {
        eta_ab,
        eta_a,
        eta_b,
        s_exact,
        witness,
        raw_a,
        raw_b,
        stats_a: project_to_simplex(&raw_a),
        stats_b: project_to_simplex(&raw_b),
    })
}

/// One bound method at one point. The loss-curve methods are properties
/// of the loss model, not the measured statistics, so they insist on the
/// arm shape they were derived for.
pub fn compute_bound(
    method: BoundMethod,
    outcome: &PointOutcome,
) -> Result<BoundResult, BoundsError> {
    let (a, b) = (&outcome.stats_a, &outcome.stats_b);
    match method {
        BoundMethod::Qubit => Ok(qubit_sep_bound(a.p0, b.p0)),
        BoundMethod::LossySym => {
            if (outcome.eta_a - outcome.eta_b).abs() > 1e-12 {
                return Err(BoundsError::BadStats {
                    reason: format!(
                        "lossy_sym needs equal arms, got eta_a = {}, eta_b = {}",
                        outcome.eta_a, outcome.eta_b
                    ),
                });
            }
            Ok(sep_bound_lossy_sym(outcome.eta_ab))
        }
        BoundMethod::LossyAsym => {
            if (outcome.eta_a - 1.0).abs() > 1e-12 {
                return Err(BoundsError::BadStats {
                    reason: format!(
                        "lossy_asym assumes a lossless A arm, got eta_a = {}",
                        outcome.eta_a
                    ),
                });
            }
            Ok(sep_bound_lossy_asym(outcome.eta_ab))
        }
        BoundMethod::AnalyticMultiphoton => Ok(analytic_multiphoton_bound(a, b)),
        BoundMethod::PjointClosedForm => {
            let joint = p_star(a, b);
            pjoint_closed_form_bound(joint.p_star).map(|mut r| {
                r.inputs.p_joint = Some(joint.p_star);
                r
            })
        }
        BoundMethod::SdpOriginal => sdp_original_bound(a, b),
        BoundMethod::SdpEnhanced => sdp_enhanced_bound(a, b),
    }
}

/// Distinguishes solver breakdowns (exit code 3) from input and regime
/// errors (recorded, exit through the verdict path).
pub fn is_solver_failure(err: &BoundsError) -> bool {
    matches!(
        err,
        BoundsError::Solver(_)
            | BoundsError::NotOptimal { .. }
            | BoundsError::WeakCertificate { .. }
    )
}

/// Stable text for verdict cells and JSON maps.
pub fn verdict_label(v: bounds::Verdict) -> &'static str {
    match v {
        bounds::Verdict::Witnessed => "witnessed",
        bounds::Verdict::NotWitnessed => "not_witnessed",
    }
}
