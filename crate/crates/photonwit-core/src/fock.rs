//! One- and two-mode quantum states in a truncated Fock basis, and the
//! channels that produce them: heralded sources, beam splitting, pure photon
//! loss, and the closed-form lossy delocalized-single-photon state.
//!
//! Two-mode matrices are indexed |n_A n_B⟩ with the B index fastest, i.e.
//! row/column index = n_A·(n_max+1) + n_B.

use crate::math::eigh;
use crate::tomography::LocalPhotonStats;
use nalgebra::DMatrix;
use num_complex::Complex64;
use thiserror::Error;

/// Tolerated Hermiticity deviation ‖ρ − ρ†‖_∞ when validating states.
pub const HERMITICITY_TOL: f64 = 1e-12;
/// Eigenvalue floor below which a matrix stops being an acceptable state.
/// Slightly negative values are tolerated as truncation round-off.
pub const EIGENVALUE_FLOOR: f64 = -1e-10;
/// Tolerated excess of the trace above 1.
pub const TRACE_TOL: f64 = 1e-12;

/// Construction and validation failures for Fock-space objects.
#[derive(Debug, Error)]
pub enum FockError {
    /// Source populations do not form a probability distribution.
    #[error("p1 + p2 = {sum} exceeds 1 (p1 = {p1}, p2 = {p2})")]
    InvalidProbabilities { p1: f64, p2: f64, sum: f64 },
    /// A probability or transmission lies outside [0, 1].
    #[error("{name} = {value} lies outside [0, 1]")]
    OutOfUnitInterval { name: &'static str, value: f64 },
    /// The matrix is not Hermitian within [`HERMITICITY_TOL`].
    #[error("matrix deviates from Hermiticity by {deviation:.3e}")]
    NotHermitian { deviation: f64 },
    /// An eigenvalue falls below [`EIGENVALUE_FLOOR`].
    #[error("eigenvalue {value:.3e} below the floor {floor:.3e}")]
    NegativeEigenvalue { value: f64, floor: f64 },
    /// Trace outside [0, 1 + TRACE_TOL].
    #[error("trace {trace} outside [0, 1]")]
    TraceOutOfRange { trace: f64 },
    /// The requested construction needs more photon-number levels.
    #[error("cutoff n_max = {n_max} too small, need at least {needed}")]
    CutoffTooSmall { needed: usize, n_max: usize },
    /// Input state trace must be 1 for this channel.
    #[error("input trace {trace} is not 1 within {tol:.1e}")]
    NonUnitTrace { trace: f64, tol: f64 },
    /// Matrix dimension incompatible with the stated cutoff.
    #[error("matrix dimension {dim} does not equal {expected}")]
    DimensionMismatch { dim: usize, expected: usize },
}

/// Maximum photon number kept per mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FockCutoff {
    n_max: usize,
}

impl FockCutoff {
    /// A cutoff keeping levels 0..=n_max. Requires n_max ≥ 1.
    pub fn new(n_max: usize) -> Result<Self, FockError> {
        if n_max == 0 {
            return Err(FockError::CutoffTooSmall { needed: 1, n_max });
        }
        Ok(Self { n_max })
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    /// Single-mode matrix dimension n_max + 1.
    pub fn dim(&self) -> usize {
        self.n_max + 1
    }
}

impl Default for FockCutoff {
    /// Two photons per mode: the smallest space in which all multiphoton
    /// bound machinery operates.
    fn default() -> Self {
        Self { n_max: 2 }
    }
}

/// Channel transmissions from the source to each party.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossParams {
    eta_a: f64,
    eta_b: f64,
}

impl LossParams {
    pub fn new(eta_a: f64, eta_b: f64) -> Result<Self, FockError> {
        check_unit("eta_a", eta_a)?;
        check_unit("eta_b", eta_b)?;
        Ok(Self { eta_a, eta_b })
    }

    pub fn eta_a(&self) -> f64 {
        self.eta_a
    }

    pub fn eta_b(&self) -> f64 {
        self.eta_b
    }

    /// Full transmission between the parties, η_A·η_B.
    pub fn eta_ab(&self) -> f64 {
        self.eta_a * self.eta_b
    }
}

fn check_unit(name: &'static str, value: f64) -> Result<(), FockError> {
    if !(0.0..=1.0).contains(&value) {
        return Err(FockError::OutOfUnitInterval { name, value });
    }
    Ok(())
}

fn validate_density(rho: &DMatrix<Complex64>) -> Result<(), FockError> {
    let mut herm_dev: f64 = 0.0;
    for r in 0..rho.nrows() {
        for c in 0..rho.ncols() {
            herm_dev = herm_dev.max((rho[(r, c)] - rho[(c, r)].conj()).norm());
        }
    }
    if herm_dev > HERMITICITY_TOL {
        return Err(FockError::NotHermitian {
            deviation: herm_dev,
        });
    }
    let trace = rho.trace().re;
    if !(0.0..=1.0 + TRACE_TOL).contains(&trace) {
        return Err(FockError::TraceOutOfRange { trace });
    }
    let min_eig = eigh::hermitian_eigenvalues(rho)
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    if min_eig < EIGENVALUE_FLOOR {
        return Err(FockError::NegativeEigenvalue {
            value: min_eig,
            floor: EIGENVALUE_FLOOR,
        });
    }
    Ok(())
}

/// A single optical mode's density matrix in the Fock basis.
#[derive(Debug, Clone, PartialEq)]
pub struct SingleModeState {
    rho: DMatrix<Complex64>,
    cutoff: FockCutoff,
}

impl SingleModeState {
    /// Validates Hermiticity, positivity (within round-off), and trace.
    pub fn from_matrix(rho: DMatrix<Complex64>, cutoff: FockCutoff) -> Result<Self, FockError> {
        if rho.nrows() != cutoff.dim() || rho.ncols() != cutoff.dim() {
            return Err(FockError::DimensionMismatch {
                dim: rho.nrows(),
                expected: cutoff.dim(),
            });
        }
        validate_density(&rho)?;
        Ok(Self { rho, cutoff })
    }

    /// The pure number state |n⟩⟨n|.
    pub fn fock_state(n: usize, cutoff: FockCutoff) -> Result<Self, FockError> {
        if n > cutoff.n_max() {
            return Err(FockError::CutoffTooSmall {
                needed: n,
                n_max: cutoff.n_max(),
            });
        }
        let mut rho = DMatrix::zeros(cutoff.dim(), cutoff.dim());
        rho[(n, n)] = Complex64::new(1.0, 0.0);
        Ok(Self { rho, cutoff })
    }

    pub fn rho(&self) -> &DMatrix<Complex64> {
        &self.rho
    }

    pub fn cutoff(&self) -> FockCutoff {
        self.cutoff
    }

    pub fn trace(&self) -> f64 {
        self.rho.trace().re
    }
}

/// A two-mode density matrix, indexed |n_A n_B⟩ with B fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoModeState {
    rho: DMatrix<Complex64>,
    cutoff: FockCutoff,
}

impl TwoModeState {
    /// Validates Hermiticity, positivity (within round-off), and trace.
    pub fn from_matrix(rho: DMatrix<Complex64>, cutoff: FockCutoff) -> Result<Self, FockError> {
        let d2 = cutoff.dim() * cutoff.dim();
        if rho.nrows() != d2 || rho.ncols() != d2 {
            return Err(FockError::DimensionMismatch {
                dim: rho.nrows(),
                expected: d2,
            });
        }
        validate_density(&rho)?;
        Ok(Self { rho, cutoff })
    }

    /// Product state ρ_A ⊗ ρ_B of two single-mode states with equal cutoffs.
    pub fn product(a: &SingleModeState, b: &SingleModeState) -> Result<Self, FockError> {
        if a.cutoff != b.cutoff {
            return Err(FockError::DimensionMismatch {
                dim: b.cutoff.dim(),
                expected: a.cutoff.dim(),
            });
        }
        Ok(Self {
            rho: a.rho.kronecker(&b.rho),
            cutoff: a.cutoff,
        })
    }

    /// Flat index of |n_A n_B⟩.
    pub fn index(&self, n_a: usize, n_b: usize) -> usize {
        n_a * self.cutoff.dim() + n_b
    }

    pub fn rho(&self) -> &DMatrix<Complex64> {
        &self.rho
    }

    pub fn cutoff(&self) -> FockCutoff {
        self.cutoff
    }

    pub fn trace(&self) -> f64 {
        self.rho.trace().re
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    let mut v = 1.0;
    for j in 0..k {
        v = v * (n - j) as f64 / (j + 1) as f64;
    }
    v
}

/// Phase-averaged heralded photon: diag(1−p1−p2, p1, p2, 0, …).
///
/// Uses the default two-photon cutoff; see
/// [`heralded_source_state_with_cutoff`] for deeper spaces.
pub fn heralded_source_state(p1: f64, p2: f64) -> Result<SingleModeState, FockError> {
    heralded_source_state_with_cutoff(p1, p2, FockCutoff::default())
}

/// [`heralded_source_state`] in a caller-chosen space (n_max ≥ 2 whenever
/// p2 > 0).
pub fn heralded_source_state_with_cutoff(
    p1: f64,
    p2: f64,
    cutoff: FockCutoff,
) -> Result<SingleModeState, FockError> {
    check_unit("p1", p1)?;
    check_unit("p2", p2)?;
    if p1 + p2 > 1.0 {
        return Err(FockError::InvalidProbabilities {
            p1,
            p2,
            sum: p1 + p2,
        });
    }
    if p2 > 0.0 && cutoff.n_max() < 2 {
        return Err(FockError::CutoffTooSmall {
            needed: 2,
            n_max: cutoff.n_max(),
        });
    }
    let mut rho = DMatrix::zeros(cutoff.dim(), cutoff.dim());
    rho[(0, 0)] = Complex64::new(1.0 - p1 - p2, 0.0);
    rho[(1, 1)] = Complex64::new(p1, 0.0);
    if cutoff.n_max() >= 2 {
        rho[(2, 2)] = Complex64::new(p2, 0.0);
    }
    Ok(SingleModeState { rho, cutoff })
}

/// Sends a single-mode state and vacuum through a beam splitter of the given
/// transmittance: |n, 0⟩ → Σ_k √(C(n,k) T^k (1−T)^(n−k)) |k, n−k⟩.
///
/// The output lives at the input's cutoff; inputs with at most n_max photons
/// can never populate levels beyond it.
pub fn beam_splitter_split(
    input: &SingleModeState,
    transmittance: f64,
) -> Result<TwoModeState, FockError> {
    check_unit("transmittance", transmittance)?;
    let trace = input.trace();
    if (trace - 1.0).abs() > 1e-9 {
        return Err(FockError::NonUnitTrace { trace, tol: 1e-9 });
    }
    let d = input.cutoff.dim();
    let mut isometry = DMatrix::<Complex64>::zeros(d * d, d);
    for n in 0..d {
        for k in 0..=n {
            let amp = (binomial(n, k)
                * transmittance.powi(k as i32)
                * (1.0 - transmittance).powi((n - k) as i32))
            .sqrt();
            isometry[(k * d + (n - k), n)] = Complex64::new(amp, 0.0);
        }
    }
    let rho = &isometry * &input.rho * isometry.adjoint();
    Ok(TwoModeState {
        rho,
        cutoff: input.cutoff,
    })
}

fn loss_kraus(eta: f64, d: usize) -> Vec<DMatrix<Complex64>> {
    (0..d)
        .map(|j| {
            let mut k = DMatrix::<Complex64>::zeros(d, d);
            for n in j..d {
                let amp =
                    (binomial(n, j) * eta.powi((n - j) as i32) * (1.0 - eta).powi(j as i32)).sqrt();
                k[(n - j, n)] = Complex64::new(amp, 0.0);
            }
            k
        })
        .collect()
}

/// Independent pure-loss channels of transmission η_A, η_B on the two modes,
/// in Kraus form (trace preserving and completely positive within the
/// cutoff by construction).
pub fn apply_loss(state: &TwoModeState, loss: &LossParams) -> TwoModeState {
    let d = state.cutoff.dim();
    let eye = DMatrix::<Complex64>::identity(d, d);
    let mut rho = DMatrix::<Complex64>::zeros(d * d, d * d);
    for ka in loss_kraus(loss.eta_a, d) {
        let op = ka.kronecker(&eye);
        rho += &op * &state.rho * op.adjoint();
    }
    let mut out = DMatrix::<Complex64>::zeros(d * d, d * d);
    for kb in loss_kraus(loss.eta_b, d) {
        let op = eye.kronecker(&kb);
        out += &op * &rho * op.adjoint();
    }
    TwoModeState {
        rho: out,
        cutoff: state.cutoff,
    }
}

/// Closed form of the delocalized single photon after lossy propagation:
/// ⟨00|ρ|00⟩ = (2−η_A−η_B)/2, ⟨10|ρ|10⟩ = η_A/2, ⟨01|ρ|01⟩ = η_B/2,
/// ⟨10|ρ|01⟩ = √(η_A η_B)/2, at the default cutoff.
///
/// The |10⟩ slot carries η_A (a photon at Alice with probability η_A/2),
/// the only convention consistent with the parties' local single-photon
/// probabilities p1^A = η_A/2, p1^B = η_B/2.
pub fn lossy_bell_state(eta_a: f64, eta_b: f64) -> Result<TwoModeState, FockError> {
    check_unit("eta_a", eta_a)?;
    check_unit("eta_b", eta_b)?;
    let cutoff = FockCutoff::default();
    let d = cutoff.dim();
    let idx = |na: usize, nb: usize| na * d + nb;
    let mut rho = DMatrix::<Complex64>::zeros(d * d, d * d);
    rho[(idx(0, 0), idx(0, 0))] = Complex64::new((2.0 - eta_a - eta_b) / 2.0, 0.0);
    rho[(idx(1, 0), idx(1, 0))] = Complex64::new(eta_a / 2.0, 0.0);
    rho[(idx(0, 1), idx(0, 1))] = Complex64::new(eta_b / 2.0, 0.0);
    let cross = Complex64::new((eta_a * eta_b).sqrt() / 2.0, 0.0);
    rho[(idx(1, 0), idx(0, 1))] = cross;
    rho[(idx(0, 1), idx(1, 0))] = cross;
    Ok(TwoModeState { rho, cutoff })
}

/// Per-party marginal photon-number probabilities (p0, p1, p≥2), exact from
/// the state's diagonal; p≥2 aggregates levels 2..=n_max. Returned as
/// (Alice, Bob) with zero uncertainties.
pub fn local_photon_probs(state: &TwoModeState) -> (LocalPhotonStats, LocalPhotonStats) {
    let d = state.cutoff.dim();
    let mut pa = vec![0.0; d];
    let mut pb = vec![0.0; d];
    for na in 0..d {
        for nb in 0..d {
            let pop = state.rho[(na * d + nb, na * d + nb)].re;
            pa[na] += pop;
            pb[nb] += pop;
        }
    }
    let collapse = |p: &[f64]| LocalPhotonStats::exact(p[0], p[1], p[2..].iter().sum());
    (collapse(&pa), collapse(&pb))
}

/// Squared temporal overlap of two double-exponential wave packets
/// ψ(t) = √γ e^(−γ|t|) offset by τ: η(τ) = [e^(−γ|τ|)(1 + γ|τ|)]².
///
/// η(0) = 1 and η is nonincreasing in |τ|. Panics if γ ≤ 0.
pub fn temporal_overlap_efficiency(gamma: f64, tau: f64) -> f64 {
    assert!(gamma > 0.0, "decay rate gamma must be positive");
    let g = gamma * tau.abs();
    let amp = (-g).exp() * (1.0 + g);
    amp * amp
}
