//! Acceptance sweep: one test per guaranteed behavior of the toolkit,
//! each checked at its stated tolerance and runtime budget. Every test
//! prints a single summary line, so running with `--nocapture` yields a
//! pass/fail report of the whole contract.

use nalgebra::DMatrix;
use num_complex::Complex64;
use photonwit_cli::config::LossMode;
use photonwit_cli::pipeline::{build_state, exact_witness, km_equivalent};
use photonwit_core::bounds::{
    both_at_most_one_projector, build_certificate, partial_transpose_01, pjoint_closed_form,
    pjoint_program_bound, qubit_sep_bound, sdp_enhanced_bound, sdp_original_bound,
    sep_bound_lossy_asym, sep_bound_lossy_sym, witness_objective_matrix, BoundsError,
};
use photonwit_core::fock::{
    local_photon_probs, lossy_bell_state, FockCutoff, SingleModeState, TwoModeState,
};
use photonwit_core::homodyne::{
    exact_correlator, phase_averaged_correlator, sample_batch, QuadratureSetting,
};
use photonwit_core::tomography::{
    estimate_local_probs, p_star, pattern_gram_entry, LocalPhotonStats, Party,
};
use photonwit_core::witness::{s_exact_qubit, s_from_samples, s_lossy};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::{FRAC_PI_4, PI, SQRT_2};
use std::time::Instant;

/// 4√2/π, the witness value of the ideal heralded single photon.
const S_IDEAL: f64 = 1.800_632_632_314_212_1;
/// 2√2/π, the separable ceiling on the two-qubit subspace.
const QUBIT_BOUND: f64 = 0.900_316_316_157_106_07;

fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    m.clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .fold(f64::INFINITY, |acc, &e| acc.min(e))
}

/// Random single-mode density matrix on the lowest three photon levels:
/// ρ = GG†/tr with a complex Gaussian-free G of the given rank.
fn random_single_mode(rng: &mut ChaCha8Rng, rank: usize) -> SingleModeState {
    let g = DMatrix::from_fn(3, rank, |_, _| {
        Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
    });
    let mut rho = &g * g.adjoint();
    let trace = rho.trace().re;
    rho.unscale_mut(trace);
    SingleModeState::from_matrix(rho, FockCutoff::new(2).unwrap())
        .expect("normalized Gram matrix is a state")
}

fn diagonal_single_mode(p: [f64; 3]) -> SingleModeState {
    let rho = DMatrix::from_fn(3, 3, |i, j| {
        if i == j {
            Complex64::new(p[i], 0.0)
        } else {
            Complex64::ZERO
        }
    });
    SingleModeState::from_matrix(rho, FockCutoff::new(2).unwrap()).unwrap()
}

#[test]
fn a01_ideal_witness_reaches_the_qubit_ceiling_both_ways() {
    let start = Instant::now();
    let state = lossy_bell_state(1.0, 1.0).unwrap();

    let via_qubit_formula = s_exact_qubit(&state).unwrap();

    // Summed route: the four setting pairs at global phase zero, with the
    // (P, X−P) pair entering negated as in the pooled estimator.
    let via_sum: f64 = QuadratureSetting::all_chsh()
        .into_iter()
        .map(|setting| {
            let e = exact_correlator(&state, setting.a.phase(), setting.b.phase());
            if setting.chsh_index() == 3 {
                -e
            } else {
                e
            }
        })
        .sum();

    let err_formula = (via_qubit_formula - S_IDEAL).abs();
    let err_sum = (via_sum - S_IDEAL).abs();
    assert!(err_formula < 1e-9, "coherence formula off by {err_formula:.2e}");
    assert!(err_sum < 1e-9, "summed correlators off by {err_sum:.2e}");
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 1.0, "took {elapsed:?}, budget 1 s");
    println!(
        "[a01] PASS ideal witness 4*sqrt(2)/pi: formula err {err_formula:.1e}, \
         summed err {err_sum:.1e} ({elapsed:?})"
    );
}

#[test]
fn a02_monte_carlo_tracks_the_exact_witness_at_a_million_samples() {
    let start = Instant::now();
    let cases = [
        (1.0, 0xA2_0001_u64),
        (0.68, 0xA2_0002),
        (0.3, 0xA2_0003),
        (0.1, 0xA2_0004),
    ];
    let mut report = String::new();
    for (eta_ab, seed) in cases {
        let arm = f64::sqrt(eta_ab);
        let state = lossy_bell_state(arm, arm).unwrap();
        let s_exact = s_lossy(arm, arm);
        let batch = sample_batch(&state, 1_000_000, seed).unwrap();
        let witness = s_from_samples(&batch).unwrap();
        let dev = (witness.s - s_exact).abs();
        assert!(
            dev <= 3.0 * witness.se,
            "eta_AB = {eta_ab}: |{} - {s_exact}| = {dev:.2e} exceeds 3 SE = {:.2e}",
            witness.s,
            3.0 * witness.se
        );
        assert!(
            witness.se > 2e-4 && witness.se < 5e-3,
            "eta_AB = {eta_ab}: SE {:.2e} is not at the expected 1e-3 scale",
            witness.se
        );
        report.push_str(&format!(" eta={eta_ab}: dev={:.1}sigma", dev / witness.se));
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 60.0, "took {elapsed:?}, budget 60 s");
    println!("[a02] PASS Monte Carlo at 1e6/setting:{report} ({elapsed:?})");
}

#[test]
fn a03_qubit_separable_bound_closed_form() {
    let value = qubit_sep_bound(0.5, 0.5).value;
    let err = (value - QUBIT_BOUND).abs();
    assert!(err < 1e-9, "qubit bound off by {err:.2e}");
    println!("[a03] PASS qubit separable bound 2*sqrt(2)/pi: err {err:.1e}");
}

#[test]
fn a04_loss_curves_match_the_closed_forms_and_order_correctly() {
    let k = 8.0 / (PI * SQRT_2);
    let bound_formula =
        |eta_a: f64, eta_b: f64| k * (eta_a * eta_b * (1.0 - eta_a / 2.0) * (1.0 - eta_b / 2.0)).sqrt();
    let mut max_err = 0.0_f64;
    for i in 1..=50 {
        let eta_ab = i as f64 / 50.0;
        let arm = eta_ab.sqrt();
        let s_formula = k * eta_ab.sqrt();

        // The witness depends on the arms only through their product, so
        // both splits must land on the same curve.
        let s_sym = exact_witness(&lossy_bell_state(arm, arm).unwrap());
        let s_asym = exact_witness(&lossy_bell_state(1.0, eta_ab).unwrap());
        max_err = max_err.max((s_sym - s_formula).abs()).max((s_asym - s_formula).abs());

        let bound_sym = sep_bound_lossy_sym(eta_ab).value;
        let bound_asym = sep_bound_lossy_asym(eta_ab).value;
        max_err = max_err.max((bound_sym - bound_formula(arm, arm)).abs());
        max_err = max_err.max((bound_asym - bound_formula(1.0, eta_ab)).abs());

        let gap_sym = s_formula - bound_sym;
        let gap_asym = s_formula - bound_asym;
        assert!(gap_sym > 0.0, "sym gap closed at eta_AB = {eta_ab}");
        assert!(gap_asym > 0.0, "asym gap closed at eta_AB = {eta_ab}");
        if eta_ab < 1.0 {
            assert!(
                gap_asym > gap_sym,
                "asym gap must exceed sym at eta_AB = {eta_ab}: {gap_asym} vs {gap_sym}"
            );
        } else {
            // At unit transmission the two splits are the same channel.
            assert!((gap_asym - gap_sym).abs() < 1e-15);
        }
    }
    assert!(max_err < 1e-12, "worst formula deviation {max_err:.2e}");
    println!("[a04] PASS loss curves on 50 points: worst formula err {max_err:.1e}, gaps ordered");
}

#[test]
fn a05_certificate_identity_holds_across_the_admissible_range() {
    let start = Instant::now();
    let m = witness_objective_matrix();
    let n_proj = both_at_most_one_projector();
    let eye = DMatrix::<f64>::identity(9, 9);
    let mut worst_residual = 0.0_f64;
    let mut worst_eig = f64::INFINITY;
    let mut worst_chain = 0.0_f64;
    for i in 1..=50 {
        let p = i as f64 / 100.0;
        let cert = build_certificate(p).unwrap();
        // Recompute the operator identity from the stored matrices; the
        // stored residual norm is not trusted here.
        let residual =
            &cert.a_matrix + partial_transpose_01(&cert.b_matrix) - &n_proj * cert.mu
                - &eye * cert.lambda
                + &m;
        worst_residual = worst_residual.max(residual.norm());
        worst_eig = worst_eig
            .min(min_eigenvalue(&cert.a_matrix))
            .min(min_eigenvalue(&cert.b_matrix));
        let chain = cert.lambda + cert.mu * (1.0 - p) + 2.0 * SQRT_2 * p;
        worst_chain = worst_chain.max((chain - pjoint_closed_form(p)).abs());
    }
    assert!(worst_residual <= 1e-10, "residual {worst_residual:.2e}");
    assert!(worst_eig >= -1e-10, "negative eigenvalue {worst_eig:.2e}");
    assert!(worst_chain <= 1e-12, "chain mismatch {worst_chain:.2e}");
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 1.0, "took {elapsed:?}, budget 1 s");
    println!(
        "[a05] PASS certificate on 50 points: residual {worst_residual:.1e}, \
         min eig {worst_eig:.1e}, chain err {worst_chain:.1e} ({elapsed:?})"
    );
}

#[test]
fn a06_sdp_programs_reproduce_the_closed_forms() {
    let start = Instant::now();
    let mut worst_qubit = 0.0_f64;
    for i in 0..10 {
        for j in 0..10 {
            let p0_a = 0.05 + 0.1 * i as f64;
            let p0_b = 0.05 + 0.1 * j as f64;
            let stats_a = LocalPhotonStats::exact(p0_a, 1.0 - p0_a, 0.0);
            let stats_b = LocalPhotonStats::exact(p0_b, 1.0 - p0_b, 0.0);
            let sdp = sdp_enhanced_bound(&stats_a, &stats_b)
                .unwrap_or_else(|e| panic!("solve failed at ({p0_a}, {p0_b}): {e}"))
                .value;
            let closed = qubit_sep_bound(p0_a, p0_b).value;
            worst_qubit = worst_qubit.max((sdp - closed).abs());
        }
    }
    assert!(
        worst_qubit <= 1e-5,
        "worst deviation from the qubit closed form: {worst_qubit:.2e}"
    );

    let mut worst_pjoint = 0.0_f64;
    for p in [0.05, 0.1, 0.2, 0.35, 0.5] {
        let (value, _) = pjoint_program_bound(p).unwrap();
        worst_pjoint = worst_pjoint.max((value - pjoint_closed_form(p)).abs());
    }
    assert!(
        worst_pjoint <= 1e-6,
        "worst deviation from the p_joint closed form: {worst_pjoint:.2e}"
    );
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 300.0, "took {elapsed:?}, budget 5 min");
    println!(
        "[a06] PASS SDP cross-validation: qubit grid err {worst_qubit:.1e} (100 pts), \
         p_joint err {worst_pjoint:.1e} (5 pts) ({elapsed:?})"
    );
}

#[test]
fn a07_no_separable_product_state_beats_the_enhanced_bound() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xACCE_0007);
    let mut violations = 0usize;
    let mut tightest = f64::INFINITY;
    for case in 0..200 {
        let rank_a = 1 + case % 3;
        let rank_b = 1 + (case / 3) % 3;
        let a = random_single_mode(&mut rng, rank_a);
        let b = random_single_mode(&mut rng, rank_b);
        let state = TwoModeState::product(&a, &b).unwrap();
        let s = exact_witness(&state);
        let (stats_a, stats_b) = local_photon_probs(&state);
        let bound = sdp_enhanced_bound(&stats_a, &stats_b)
            .unwrap_or_else(|e| panic!("solve failed on case {case}: {e}"))
            .value;
        // The dual value upper-bounds every compatible state's witness up
        // to the certified residual slack.
        if s > bound + 1e-8 {
            violations += 1;
        }
        tightest = tightest.min(bound - s);
    }
    assert_eq!(violations, 0, "{violations} separable states beat the bound");
    let elapsed = start.elapsed();
    println!(
        "[a07] PASS soundness on 200 product states: zero violations, \
         smallest slack {tightest:.3} ({elapsed:?})"
    );
}

#[test]
fn a08_pattern_functions_are_dual_to_the_wavefunctions_and_recover_diagonals() {
    let mut worst_gram = 0.0_f64;
    for n in 0..=5 {
        for m in 0..=5 {
            let target = if n == m { 1.0 } else { 0.0 };
            worst_gram = worst_gram.max((pattern_gram_entry(n, m) - target).abs());
        }
    }
    assert!(worst_gram <= 1e-6, "worst Gram deviation {worst_gram:.2e}");

    // Known diagonal product state; party A's levels are the target.
    let p_a = [0.55, 0.35, 0.10];
    let state = TwoModeState::product(
        &diagonal_single_mode(p_a),
        &diagonal_single_mode([0.70, 0.25, 0.05]),
    )
    .unwrap();
    let start = Instant::now();
    let mut passes = 0usize;
    for run in 0..100u64 {
        let batch = sample_batch(&state, 25_000, 0xD1A6_0000 + run).unwrap();
        let est = estimate_local_probs(&batch, Party::A, 3).unwrap();
        let within = (est.p0 - p_a[0]).abs() <= 3.0 * est.sigma0
            && (est.p1 - p_a[1]).abs() <= 3.0 * est.sigma1
            && (est.p_ge2 - p_a[2]).abs() <= 3.0 * est.sigma_ge2;
        passes += usize::from(within);
    }
    assert!(passes >= 99, "only {passes}/100 runs recovered the diagonal within 3 sigma");
    let elapsed = start.elapsed();
    println!(
        "[a08] PASS pattern functions: Gram err {worst_gram:.1e}, \
         diagonal recovery {passes}/100 runs ({elapsed:?})"
    );
}

/// Deterministic standard error of the pooled witness when each setting
/// pair collects `n` samples: every correlator contributes (1 − E²)/n.
fn model_sigma_s(state: &TwoModeState, n: f64) -> f64 {
    let e_plus = phase_averaged_correlator(state, FRAC_PI_4);
    let e_minus = phase_averaged_correlator(state, -FRAC_PI_4);
    ((2.0 * (1.0 - e_plus * e_plus) + 2.0 * (1.0 - e_minus * e_minus)) / n).sqrt()
}

#[test]
fn a09_enhanced_program_tolerates_more_loss_on_the_modeled_source() {
    let start = Instant::now();
    const N_PER_SETTING: f64 = 1e5;
    const K_SIGMA: f64 = 3.0;
    type BoundFn = fn(&LocalPhotonStats, &LocalPhotonStats) -> Result<
        photonwit_core::bounds::BoundResult,
        BoundsError,
    >;

    let modeled = |mode: &LossMode, eta_ab: f64| {
        let (eta_a, eta_b) = mode.arm_efficiencies(eta_ab);
        build_state(0.68, 0.02, eta_a, eta_b).unwrap()
    };
    let margin = |mode: &LossMode, bound: BoundFn, eta_ab: f64| {
        let state = modeled(mode, eta_ab);
        let s = exact_witness(&state);
        let sigma = model_sigma_s(&state, N_PER_SETTING);
        let (stats_a, stats_b) = local_photon_probs(&state);
        let value = bound(&stats_a, &stats_b)
            .unwrap_or_else(|e| panic!("solve failed at eta_AB = {eta_ab}: {e}"))
            .value;
        s - K_SIGMA * sigma - value
    };
    // Transmission below which the error-penalized witness stops beating
    // the bound; the margin changes sign exactly once on this model.
    let threshold = |mode: &LossMode, bound: BoundFn| {
        let (mut lo, mut hi) = (1e-3, 1.0);
        assert!(margin(mode, bound, lo) < 0.0, "still witnessing at eta_AB = {lo}");
        assert!(margin(mode, bound, hi) > 0.0, "not witnessing even at eta_AB = {hi}");
        for _ in 0..30 {
            let mid = 0.5 * (lo + hi);
            if margin(mode, bound, mid) > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    };

    let sym = LossMode::Sym;
    let asym = LossMode::Asym;
    let sym_orig = threshold(&sym, sdp_original_bound as BoundFn);
    let sym_enh = threshold(&sym, sdp_enhanced_bound as BoundFn);
    let asym_orig = threshold(&asym, sdp_original_bound as BoundFn);
    let asym_enh = threshold(&asym, sdp_enhanced_bound as BoundFn);

    // The enhanced program witnesses deeper into the loss in both modes:
    // a smaller transmission threshold is a larger tolerable loss.
    assert!(
        sym_enh < sym_orig - 1e-6,
        "sym: enhanced threshold {sym_enh} not below original {sym_orig}"
    );
    assert!(
        asym_enh < asym_orig - 1e-6,
        "asym: enhanced threshold {asym_enh} not below original {asym_orig}"
    );

    // At its witnessing edge the asym split retains more multiphoton
    // mass: the arm that never sees loss keeps its full two-photon
    // component, while the sym split attenuates both arms.
    let p_star_at = |mode: &LossMode, eta_ab: f64| {
        let (stats_a, stats_b) = local_photon_probs(&modeled(mode, eta_ab));
        p_star(&stats_a, &stats_b).p_star
    };
    let residual_asym = p_star_at(&asym, asym_enh);
    let residual_sym = p_star_at(&sym, sym_enh);
    assert!(
        residual_asym > residual_sym,
        "asym residual two-photon mass {residual_asym:.2e} not above sym {residual_sym:.2e}"
    );

    let elapsed = start.elapsed();
    let loss_pct = |eta: f64| 100.0 * (1.0 - eta);
    println!(
        "[a09] PASS threshold ordering: sym loss {:.2}% -> {:.2}%, asym loss {:.2}% -> {:.2}%, \
         residual p* asym {residual_asym:.1e} > sym {residual_sym:.1e} ({elapsed:?})",
        loss_pct(sym_orig),
        loss_pct(sym_enh),
        loss_pct(asym_orig),
        loss_pct(asym_enh)
    );
}

#[test]
fn a10_transmission_converts_to_fiber_kilometers() {
    let km_005 = km_equivalent(0.05);
    let km_003 = km_equivalent(0.03);
    assert!((km_005 - 65.05).abs() <= 1.0, "eta 0.05 -> {km_005} km, expected near 65.05");
    assert!((km_003 - 76.16).abs() <= 1.0, "eta 0.03 -> {km_003} km, expected near 76.16");
    println!("[a10] PASS km conversion: 0.05 -> {km_005:.2} km, 0.03 -> {km_003:.2} km");
}
