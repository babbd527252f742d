//! Simulation and certification of single-photon entanglement witnessed by
//! local homodyne measurements.
//!
//! The crate models the full chain of such an experiment in a truncated Fock
//! space: heralded single-photon sources split on a beam splitter
//! ([`fock`]), lossy propagation ([`fock::apply_loss`]), sign-binned
//! quadrature statistics and their Monte Carlo sampling ([`homodyne`]), the
//! CHSH-type witness parameter S ([`witness`]), photon-number tomography
//! through pattern functions ([`tomography`]), and the family of separable
//! bounds that S must exceed before entanglement is certified ([`bounds`]),
//! including bounds computed by a small dense semidefinite-programming
//! engine with dual certificates ([`sdp`]).
//!
//! Quadratures are normalized so the vacuum has variance 1/2, i.e. the
//! number-state wavefunctions are ψ_n(x) = π^(−1/4) (2ⁿ n!)^(−1/2) H_n(x)
//! e^(−x²/2). Two-mode matrices are indexed |n_A n_B⟩ with the B index
//! varying fastest.

pub mod bounds;
pub mod fock;
pub mod homodyne;
pub mod math;
pub mod sdp;
pub mod tomography;
pub mod witness;

pub use bounds::{BoundMethod, BoundResult, CertificateData, Verdict};
pub use fock::{FockCutoff, LossParams, SingleModeState, TwoModeState};
pub use homodyne::{QuadratureSetting, SampleBatch, SettingA, SettingB, SgnOperator};
pub use sdp::{SdpProblem, SdpSolution, SdpStatus};
pub use tomography::{LocalPhotonStats, PStar};
pub use witness::WitnessResult;
