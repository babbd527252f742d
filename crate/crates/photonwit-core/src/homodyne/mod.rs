//! Quadrature-domain physics: Fock wavefunctions, the sign-binning operator
//! and its rotated matrix elements, exact and phase-averaged sign-binned
//! correlators, and Monte Carlo sampling of homodyne outcomes.
//!
//! Conventions. The measured quadrature is X_θ = cosθ·X + sinθ·P with
//! vacuum variance 1/2, so ⟨x|n⟩_θ = ψ_n(x) e^(−inθ). Party A chooses
//! between X (θ = 0) and P (θ = π/2); party B between the rotated
//! quadratures X+P (θ = π/4) and X−P (θ = −π/4). A setting pair's relative
//! phase is θ_B − θ_A. The global oscillator phase φ is uniformly random
//! per sample and shifts both parties' angles.

mod sampler;

pub use sampler::{joint_quadrature_density, sample_batch, MarginalDistribution};

use crate::fock::TwoModeState;
use crate::math::{hermite, quad};
use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};
use thiserror::Error;

/// Failures while building operators or sampling quadrature data.
#[derive(Debug, Error)]
pub enum HomodyneError {
    /// Adaptive quadrature failed to converge on a matrix element.
    #[error("sign-operator matrix element did not converge: {0}")]
    Quadrature(#[from] quad::QuadratureError),
    /// The computed s_01 disagrees with √(2/π); the wavefunction convention
    /// or the quadrature is broken.
    #[error("s_01 = {s01} disagrees with sqrt(2/pi) = {expected} beyond 1e-10")]
    ConventionCheck { s01: f64, expected: f64 },
    /// A state eigenvalue below −1e-9: the joint quadrature density would
    /// be negative beyond round-off, signalling a truncation artifact.
    #[error("state eigenvalue {value:.3e} below -1e-9; truncated state is unphysical")]
    NegativeWeight { value: f64 },
    /// The state has no mass to sample from.
    #[error("state trace {trace:.3e} too small to sample")]
    EmptyState { trace: f64 },
    /// CSV row with an unknown setting label.
    #[error("unrecognized setting label {0:?}")]
    BadLabel(String),
    /// CSV row with a wrong column count or unparsable number.
    #[error("malformed sample row {row}: {reason}")]
    MalformedRow { row: usize, reason: String },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

/// Party A's quadrature choice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SettingA {
    X,
    P,
}

impl SettingA {
    pub fn phase(&self) -> f64 {
        match self {
            SettingA::X => 0.0,
            SettingA::P => FRAC_PI_2,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            SettingA::X => "X",
            SettingA::P => "P",
        }
    }

    pub fn from_label(s: &str) -> Option<Self> {
        match s {
            "X" => Some(SettingA::X),
            "P" => Some(SettingA::P),
            _ => None,
        }
    }
}

/// Party B's quadrature choice (A's basis rotated by ±45°).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SettingB {
    XPlusP,
    XMinusP,
}

impl SettingB {
    pub fn phase(&self) -> f64 {
        match self {
            SettingB::XPlusP => FRAC_PI_4,
            SettingB::XMinusP => -FRAC_PI_4,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            SettingB::XPlusP => "X+P",
            SettingB::XMinusP => "X-P",
        }
    }

    pub fn from_label(s: &str) -> Option<Self> {
        match s {
            "X+P" => Some(SettingB::XPlusP),
            "X-P" => Some(SettingB::XMinusP),
            _ => None,
        }
    }
}

/// One of the four CHSH setting pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct QuadratureSetting {
    pub a: SettingA,
    pub b: SettingB,
}

impl QuadratureSetting {
    /// The four pairs in canonical order: (X,X+P), (X,X−P), (P,X+P), (P,X−P).
    pub fn all_chsh() -> [QuadratureSetting; 4] {
        [
            QuadratureSetting { a: SettingA::X, b: SettingB::XPlusP },
            QuadratureSetting { a: SettingA::X, b: SettingB::XMinusP },
            QuadratureSetting { a: SettingA::P, b: SettingB::XPlusP },
            QuadratureSetting { a: SettingA::P, b: SettingB::XMinusP },
        ]
    }

    /// Fixed Alice–Bob phase difference θ_B − θ_A.
    pub fn relative_phase_delta(&self) -> f64 {
        self.b.phase() - self.a.phase()
    }

    /// Position of this pair in [`QuadratureSetting::all_chsh`].
    pub fn chsh_index(&self) -> usize {
        2 * (self.a == SettingA::P) as usize + (self.b == SettingB::XMinusP) as usize
    }
}

/// One quadrature sample tagged with its setting pair and the oscillator
/// phase it was taken at.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleRecord {
    pub setting: QuadratureSetting,
    pub x_a: f64,
    pub x_b: f64,
    pub global_phase: f64,
}

/// Sign-binnable quadrature samples: the simulated raw data.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBatch {
    pub records: Vec<SampleRecord>,
    pub rng_seed: u64,
}

impl SampleBatch {
    pub fn count(&self) -> usize {
        self.records.len()
    }

    /// Writes `setting_a,setting_b,x_a,x_b,global_phase` rows with a header.
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<(), HomodyneError> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["setting_a", "setting_b", "x_a", "x_b", "global_phase"])?;
        for r in &self.records {
            wtr.write_record([
                r.setting.a.label(),
                r.setting.b.label(),
                &format_float(r.x_a),
                &format_float(r.x_b),
                &format_float(r.global_phase),
            ])?;
        }
        wtr.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    /// Reads a batch written by [`SampleBatch::write_csv`]. The seed is not
    /// stored in the CSV and is restored as 0.
    pub fn read_csv<R: std::io::Read>(r: R) -> Result<Self, HomodyneError> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
        let mut records = Vec::new();
        for (i, row) in rdr.records().enumerate() {
            let row = row?;
            if row.len() != 5 {
                return Err(HomodyneError::MalformedRow {
                    row: i + 1,
                    reason: format!("expected 5 columns, got {}", row.len()),
                });
            }
            let a = SettingA::from_label(&row[0])
                .ok_or_else(|| HomodyneError::BadLabel(row[0].to_string()))?;
            let b = SettingB::from_label(&row[1])
                .ok_or_else(|| HomodyneError::BadLabel(row[1].to_string()))?;
            let parse = |j: usize| -> Result<f64, HomodyneError> {
                row[j].parse().map_err(|e| HomodyneError::MalformedRow {
                    row: i + 1,
                    reason: format!("column {j}: {e}"),
                })
            };
            records.push(SampleRecord {
                setting: QuadratureSetting { a, b },
                x_a: parse(2)?,
                x_b: parse(3)?,
                global_phase: parse(4)?,
            });
        }
        Ok(SampleBatch { records, rng_seed: 0 })
    }
}

/// 12-significant-digit float formatting shared by all CSV output, so
/// identical runs produce byte-identical files.
pub fn format_float(v: f64) -> String {
    format!("{v:.11e}")
}

/// ψ_n(x) in the vacuum-variance-1/2 convention.
pub fn fock_wavefunction(n: usize, x: f64) -> f64 {
    hermite::wavefunction(n, x)
}

/// Matrix elements s_nm = ∫ sgn(x) ψ_n(x) ψ_m(x) dx of the sign-binning
/// observable, with parity zeros enforced exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct SgnOperator {
    s: DMatrix<f64>,
    /// Quadrature angle: the operator for X_θ has elements e^{i(n−m)θ} s_nm.
    pub phase: f64,
}

impl SgnOperator {
    pub fn dim(&self) -> usize {
        self.s.nrows()
    }

    /// Unrotated element s_nm.
    pub fn element(&self, n: usize, m: usize) -> f64 {
        self.s[(n, m)]
    }

    /// Same operator tagged with a different quadrature angle.
    pub fn with_phase(&self, phase: f64) -> Self {
        SgnOperator { s: self.s.clone(), phase }
    }

    /// Dense complex matrix e^{i(n−m)θ} s_nm at this operator's phase.
    pub fn complex_matrix(&self) -> DMatrix<Complex64> {
        let d = self.dim();
        DMatrix::from_fn(d, d, |n, m| {
            Complex64::from_polar(self.s[(n, m)], (n as f64 - m as f64) * self.phase)
        })
    }
}

/// Builds the sign operator up to photon number `n_max` by adaptive
/// quadrature of 2∫_0^∞ ψ_n ψ_m dx (odd n+m; even entries vanish by
/// parity). Fails if the quadrature stalls or if s_01 disagrees with
/// √(2/π) beyond 1e-10.
pub fn sgn_matrix_elements(n_max: usize) -> Result<SgnOperator, HomodyneError> {
    assert!(n_max >= 1, "need at least two levels");
    let d = n_max + 1;
    let mut s = DMatrix::zeros(d, d);
    for n in 0..d {
        for m in (n + 1)..d {
            if (n + m) % 2 == 1 {
                // Integrand decays like e^{−x²}; [0, 12] holds all the mass.
                let v = quad::adaptive_simpson(
                    &|x| hermite::wavefunction(n, x) * hermite::wavefunction(m, x),
                    0.0,
                    12.0,
                    1e-13,
                )?;
                s[(n, m)] = 2.0 * v;
                s[(m, n)] = 2.0 * v;
            }
        }
    }
    let expected = (2.0 / std::f64::consts::PI).sqrt();
    if (s[(0, 1)] - expected).abs() > 1e-10 {
        return Err(HomodyneError::ConventionCheck { s01: s[(0, 1)], expected });
    }
    Ok(SgnOperator { s, phase: 0.0 })
}

/// E(θ_A, θ_B) = tr[ρ · sgn X_{θ_A} ⊗ sgn X_{θ_B}], exact in the truncated
/// space.
pub fn exact_correlator(state: &TwoModeState, theta_a: f64, theta_b: f64) -> f64 {
    let d = state.cutoff().dim();
    let sgn = sgn_matrix_elements(d - 1)
        .expect("sign operator quadrature converges for supported cutoffs");
    let sa = sgn.with_phase(theta_a).complex_matrix();
    let sb = sgn.with_phase(theta_b).complex_matrix();
    let rho = state.rho();
    let mut e = Complex64::new(0.0, 0.0);
    // tr[ρ (S_A ⊗ S_B)] = Σ ρ[r,c] (S_A ⊗ S_B)[c,r]
    for na in 0..d {
        for ma in 0..d {
            for nb in 0..d {
                for mb in 0..d {
                    e += rho[(na * d + ma, nb * d + mb)] * sa[(nb, na)] * sb[(mb, ma)];
                }
            }
        }
    }
    e.re
}

/// (1/2π) ∫ E(φ, φ + delta) dφ by trapezoid over a phase grid. The
/// integrand is a trigonometric polynomial of degree at most 2·n_max in φ,
/// so a 64-point grid integrates it exactly up to round-off.
pub fn phase_averaged_correlator(state: &TwoModeState, delta: f64) -> f64 {
    const POINTS: usize = 64;
    let mut acc = 0.0;
    for i in 0..POINTS {
        let phi = 2.0 * std::f64::consts::PI * i as f64 / POINTS as f64;
        acc += exact_correlator(state, phi, phi + delta);
    }
    acc / POINTS as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{
        beam_splitter_split, heralded_source_state, lossy_bell_state, FockCutoff,
        SingleModeState, TwoModeState,
    };
    use approx::assert_abs_diff_eq;

    fn ideal_split() -> TwoModeState {
        let one = SingleModeState::fock_state(1, FockCutoff::default()).unwrap();
        beam_splitter_split(&one, 0.5).unwrap()
    }

    #[test]
    fn wavefunction_reference_points() {
        assert_abs_diff_eq!(fock_wavefunction(0, 0.0), 0.75112554446494248, epsilon = 1e-14);
        assert_abs_diff_eq!(fock_wavefunction(1, 0.0), 0.0);
        assert_abs_diff_eq!(fock_wavefunction(2, 1.0), 0.32214418255673759, epsilon = 1e-14);
    }

    #[test]
    fn sgn_elements_match_quadrature_oracle() {
        let sgn = sgn_matrix_elements(6).unwrap();
        // Frozen 30-digit quadrature values.
        assert_abs_diff_eq!(sgn.element(0, 1), 0.79788456080286536, epsilon = 1e-11);
        assert_abs_diff_eq!(sgn.element(1, 2), 0.56418958354775629, epsilon = 1e-11);
        assert_abs_diff_eq!(sgn.element(0, 3), -0.32573500793527995, epsilon = 1e-11);
        assert_abs_diff_eq!(sgn.element(2, 3), 0.69098829894267096, epsilon = 1e-11);
        assert_abs_diff_eq!(sgn.element(5, 6), 0.6107531398786499, epsilon = 1e-11);
    }

    #[test]
    fn sgn_parity_zeros_are_exact() {
        let sgn = sgn_matrix_elements(6).unwrap();
        for n in 0..=6 {
            for m in 0..=6 {
                if (n + m) % 2 == 0 {
                    assert_eq!(sgn.element(n, m), 0.0);
                }
                assert!(sgn.element(n, m).abs() <= 1.0);
                assert_eq!(sgn.element(n, m), sgn.element(m, n));
            }
        }
    }

    #[test]
    fn ideal_state_correlator_at_quarter_turn() {
        // E(Δ = ±π/4) = (2/π) cos(π/4) = √2/π for the delocalized photon.
        let s = ideal_split();
        let expected = std::f64::consts::SQRT_2 / std::f64::consts::PI;
        assert_abs_diff_eq!(exact_correlator(&s, 0.0, FRAC_PI_4), expected, epsilon = 1e-10);
        assert_abs_diff_eq!(exact_correlator(&s, 0.0, -FRAC_PI_4), expected, epsilon = 1e-10);
        assert_abs_diff_eq!(exact_correlator(&s, FRAC_PI_2, FRAC_PI_4), expected, epsilon = 1e-10);
    }

    #[test]
    fn diagonal_product_states_are_uncorrelated() {
        let a = heralded_source_state(0.4, 0.1).unwrap();
        let b = heralded_source_state(0.7, 0.05).unwrap();
        let s = TwoModeState::product(&a, &b).unwrap();
        for &(ta, tb) in &[(0.0, 0.0), (0.3, -1.2), (FRAC_PI_2, FRAC_PI_4)] {
            assert_abs_diff_eq!(exact_correlator(&s, ta, tb), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn phase_shift_covariance_on_pipeline_states() {
        let s = lossy_bell_state(0.73, 0.41).unwrap();
        for &c in &[0.17, 1.0, 2.9] {
            assert_abs_diff_eq!(
                exact_correlator(&s, 0.2 + c, -0.5 + c),
                exact_correlator(&s, 0.2, -0.5),
                epsilon = 1e-10
            );
        }
    }

    #[test]
    fn phase_averaged_correlator_reference_points() {
        let s = ideal_split();
        let expected = std::f64::consts::SQRT_2 / std::f64::consts::PI;
        assert_abs_diff_eq!(phase_averaged_correlator(&s, FRAC_PI_4), expected, epsilon = 1e-10);
        assert_abs_diff_eq!(phase_averaged_correlator(&s, FRAC_PI_2), 0.0, epsilon = 1e-12);
        let a = heralded_source_state(0.4, 0.1).unwrap();
        let b = heralded_source_state(0.7, 0.05).unwrap();
        let sep = TwoModeState::product(&a, &b).unwrap();
        assert_abs_diff_eq!(phase_averaged_correlator(&sep, 0.9), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn lossy_state_correlator_tracks_transmission() {
        // E(Δ = π/4) = 2·(2/π)·(η/2)·cos(π/4) for symmetric transmission η.
        let eta = 0.62;
        let s = lossy_bell_state(eta, eta).unwrap();
        let expected = eta * std::f64::consts::SQRT_2 / std::f64::consts::PI;
        assert_abs_diff_eq!(phase_averaged_correlator(&s, FRAC_PI_4), expected, epsilon = 1e-10);
    }

    #[test]
    fn relative_phase_reproduces_pair_deltas() {
        let pairs = QuadratureSetting::all_chsh();
        assert_abs_diff_eq!(pairs[0].relative_phase_delta(), FRAC_PI_4);
        assert_abs_diff_eq!(pairs[1].relative_phase_delta(), -FRAC_PI_4);
        assert_abs_diff_eq!(pairs[2].relative_phase_delta(), -FRAC_PI_4);
        assert_abs_diff_eq!(pairs[3].relative_phase_delta(), -3.0 * FRAC_PI_4);
    }

    #[test]
    fn csv_roundtrip_preserves_records() {
        let batch = SampleBatch {
            records: vec![
                SampleRecord {
                    setting: QuadratureSetting { a: SettingA::X, b: SettingB::XPlusP },
                    x_a: 0.123456789,
                    x_b: -1.5,
                    global_phase: 3.1,
                },
                SampleRecord {
                    setting: QuadratureSetting { a: SettingA::P, b: SettingB::XMinusP },
                    x_a: -0.25,
                    x_b: 6.0,
                    global_phase: 0.0,
                },
            ],
            rng_seed: 7,
        };
        let mut buf = Vec::new();
        batch.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("setting_a,setting_b,x_a,x_b,global_phase\n"));
        let back = SampleBatch::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back.records.len(), 2);
        assert_eq!(back.records[0].setting, batch.records[0].setting);
        assert_abs_diff_eq!(back.records[0].x_a, batch.records[0].x_a, epsilon = 1e-11);
        assert_abs_diff_eq!(back.records[1].x_b, batch.records[1].x_b, epsilon = 1e-11);
    }

    #[test]
    fn csv_rejects_unknown_labels() {
        let data = "setting_a,setting_b,x_a,x_b,global_phase\nY,X+P,0.0,0.0,0.0\n";
        assert!(matches!(
            SampleBatch::read_csv(data.as_bytes()),
            Err(HomodyneError::BadLabel(_))
        ));
    }
}
