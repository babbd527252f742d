//! Numerical building blocks shared across the physics modules: harmonic
//! oscillator wavefunctions, Gaussian-weighted polynomial integrals,
//! adaptive quadrature, and eigendecomposition of complex Hermitian
//! matrices through their real embedding.

pub mod eigh;
pub mod gauss;
pub mod hermite;
pub mod quad;
