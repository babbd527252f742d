//! Exact joint-quadrature sampling by eigendecomposition.
//!
//! The state is decomposed into an ensemble ρ = Σ w_k |z_k⟩⟨z_k| (through
//! the real embedding, see [`crate::math::eigh`]). A sample first picks an
//! eigenvector by weight, then draws x_A from that vector's marginal and
//! x_B from the exact conditional. Both one-dimensional laws have densities
//! of the form P(x) e^(−x²) with P a polynomial in the Hermite-pair basis,
//! so their CDFs are closed forms in erf and exp and are inverted by
//! safeguarded Newton bisection; no rejection step, no loss-level
//! pathologies, and exactly five uniform draws per sample regardless of
//! the state, which keeps RNG streams aligned across configurations.
//!
//! Streams are split per setting and per 65536-sample chunk via a
//! documented rule — ChaCha8 seeded with (seed, setting·2³² + chunk, fixed
//! tag) — so batches can be produced in any order, or in parallel, and
//! merge deterministically by index.

use super::{HomodyneError, QuadratureSetting, SampleBatch, SampleRecord};
use crate::fock::TwoModeState;
use crate::math::{eigh, gauss, hermite};
use crate::tomography::Party;
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Samples per RNG chunk; one stream is derived per (setting, chunk).
const CHUNK: usize = 1 << 16;
/// Tag bytes folded into every derived stream seed.
const STREAM_TAG: &[u8; 16] = b"photonwit.sample";
/// Quadrature values are searched inside [−X_LIMIT, X_LIMIT]; the mass
/// outside is below 1e-16 for any state within the supported cutoff.
const X_LIMIT: f64 = 6.5;
/// Ensemble weights below this are unresolvable truncation noise and get
/// clamped to zero; weights below −1e-9 are a hard error.
const WEIGHT_FLOOR: f64 = -1e-9;

/// Maximum single-mode dimension the fixed-size sample buffers support
/// (n_max = 6).
const D_CAP: usize = 7;
/// Longest polynomial: degree 2(D_CAP−1) has 2·D_CAP−1 coefficients.
const P_CAP: usize = 2 * D_CAP - 1;

struct Component {
    /// Cumulative selection weight (upper edge of this component's slot).
    cum_weight: f64,
    /// Eigenvector coefficients c[n·d + m] on |n_A m_B⟩.
    coeffs: Vec<Complex64>,
    /// Cumulative column masses Σ_n |c[n,m]|² for the x_A column pick.
    col_cum: Vec<f64>,
}

pub(super) struct Sampler {
    d: usize,
    comps: Vec<Component>,
    total_weight: f64,
    /// pair_coeffs[n·d + m]: monomial coefficients of ψ_n ψ_m e^{x²}.
    pair_coeffs: Vec<Vec<f64>>,
    /// I_j(∞) for j = 0..P_CAP+2 (density moments for the Newton seed).
    totals: [f64; P_CAP + 2],
}

impl Sampler {
    pub(super) fn new(state: &TwoModeState) -> Result<Self, HomodyneError> {
        Self::from_matrix(state.rho(), state.cutoff().dim())
    }

    pub(super) fn from_matrix(
        rho: &DMatrix<Complex64>,
        d: usize,
    ) -> Result<Self, HomodyneError> {
        assert!(d <= D_CAP, "sampler supports single-mode dimension <= 7");
        let mut comps = Vec::new();
        let mut total_weight = 0.0;
        for (w, z) in eigh::hermitian_ensemble(rho) {
            // Each state eigenvalue arrives as two half-weight copies.
            if 2.0 * w < WEIGHT_FLOOR {
                return Err(HomodyneError::NegativeWeight { value: 2.0 * w });
            }
            if w <= 1e-15 {
                continue;
            }
            total_weight += w;
            let coeffs: Vec<Complex64> = z.iter().copied().collect();
            let mut col_cum = vec![0.0; d];
            let mut acc = 0.0;
            for (m, slot) in col_cum.iter_mut().enumerate() {
                for n in 0..d {
                    acc += coeffs[n * d + m].norm_sqr();
                }
                *slot = acc;
            }
            comps.push(Component { cum_weight: total_weight, coeffs, col_cum });
        }
        if total_weight < 1e-12 {
            return Err(HomodyneError::EmptyState { trace: total_weight });
        }
        let mut pair_coeffs = Vec::with_capacity(d * d);
        for n in 0..d {
            for m in 0..d {
                pair_coeffs.push(hermite::pair_product_coeffs(n, m));
            }
        }
        let mut totals = [0.0; P_CAP + 2];
        gauss::total_moments(&mut totals);
        Ok(Self { d, comps, total_weight, pair_coeffs, totals })
    }

    fn pick_component(&self, u: f64) -> &Component {
        let target = u * self.total_weight;
        for c in &self.comps {
            if target < c.cum_weight {
                return c;
            }
        }
        self.comps.last().expect("at least one component")
    }

    /// Accumulates the monomial coefficients of |Σ_k amps[k] ψ_k|² e^{x²}.
    fn squared_amplitude_poly(&self, amps: &[Complex64], poly: &mut [f64; P_CAP]) {
        poly.fill(0.0);
        let d = self.d;
        for n in 0..d {
            let an = amps[n];
            if an == Complex64::ZERO {
                continue;
            }
            for m in n..d {
                let w = if m == n {
                    an.norm_sqr()
                } else {
                    2.0 * (an * amps[m].conj()).re
                };
                if w == 0.0 {
                    continue;
                }
                for (j, &c) in self.pair_coeffs[n * d + m].iter().enumerate() {
                    poly[j] += w * c;
                }
            }
        }
    }

    /// Inverts the CDF of the density poly(x)·e^(−x²) at quantile `u` by
    /// safeguarded Newton with a moment-matched Gaussian seed.
    fn invert_cdf(&self, poly: &[f64; P_CAP], deg_len: usize, u: f64) -> f64 {
        let mut total = 0.0;
        let mut mean_num = 0.0;
        let mut m2_num = 0.0;
        for j in 0..deg_len {
            total += poly[j] * self.totals[j];
            mean_num += poly[j] * self.totals[j + 1];
            m2_num += poly[j] * self.totals[j + 2];
        }
        if !(total > 1e-300) {
            return 0.0;
        }
        let target = u * total;
        let mean = mean_num / total;
        let var = (m2_num / total - mean * mean).max(1e-6);
        let mut x = mean + var.sqrt() * gauss::inv_std_normal_cdf(u);
        if !x.is_finite() {
            x = 0.0;
        }
        x = x.clamp(-X_LIMIT + 1e-9, X_LIMIT - 1e-9);
        let (mut lo, mut hi) = (-X_LIMIT, X_LIMIT);
        for _ in 0..80 {
            let (cdf, pdf) = cdf_pdf(&poly[..deg_len], x);
            let err = cdf - target;
            if err > 0.0 {
                hi = x;
            } else {
                lo = x;
            }
            if err.abs() <= 1e-13 * total || hi - lo <= 1e-13 {
                break;
            }
            let mut next = x - err / pdf.max(1e-300);
            if !next.is_finite() || next <= lo || next >= hi {
                next = 0.5 * (lo + hi);
            }
            x = next;
        }
        x
    }

    /// Draws one (x_A, x_B, φ) for the given setting phases. Consumes
    /// exactly five uniforms in a fixed order.
    fn draw(&self, rng: &mut ChaCha8Rng, phase_a: f64, phase_b: f64) -> (f64, f64, f64) {
        let u_phi: f64 = rng.gen();
        let u_comp: f64 = rng.gen();
        let u_col: f64 = rng.gen();
        let u_xa: f64 = rng.gen();
        let u_xb: f64 = rng.gen();

        let d = self.d;
        let phi = 2.0 * std::f64::consts::PI * u_phi;
        let theta_a = phi + phase_a;
        let theta_b = phi + phase_b;
        let comp = self.pick_component(u_comp);

        // Phase factors e^{−i n θ_A}.
        let rot_a = Complex64::from_polar(1.0, -theta_a);
        let mut pa = [Complex64::ZERO; D_CAP];
        pa[0] = Complex64::ONE;
        for n in 1..d {
            pa[n] = pa[n - 1] * rot_a;
        }

        // x_A: pick a Bob column by mass, then invert that column's marginal.
        let col_total = comp.col_cum[d - 1];
        let col_target = u_col * col_total;
        let mut m0 = d - 1;
        for (m, &cum) in comp.col_cum.iter().enumerate() {
            if col_target < cum {
                m0 = m;
                break;
            }
        }
        let mut amps = [Complex64::ZERO; D_CAP];
        for n in 0..d {
            amps[n] = comp.coeffs[n * d + m0] * pa[n];
        }
        let mut poly = [0.0; P_CAP];
        self.squared_amplitude_poly(&amps[..d], &mut poly);
        let x_a = self.invert_cdf(&poly, 2 * d - 1, u_xa);

        // x_B: exact conditional given x_A, mixing every Bob column.
        let mut psi = [0.0; D_CAP];
        hermite::wavefunction_row(x_a, &mut psi[..d]);
        let rot_b = Complex64::from_polar(1.0, -theta_b);
        let mut pb = Complex64::ONE;
        for m in 0..d {
            let mut g = Complex64::ZERO;
            for n in 0..d {
                g += comp.coeffs[n * d + m] * pa[n] * psi[n];
            }
            amps[m] = g * pb;
            pb *= rot_b;
        }
        self.squared_amplitude_poly(&amps[..d], &mut poly);
        let x_b = self.invert_cdf(&poly, 2 * d - 1, u_xb);

        (x_a, x_b, phi)
    }
}

fn stream_rng(seed: u64, setting_idx: u64, chunk_idx: u64) -> ChaCha8Rng {
    let mut bytes = [0u8; 32];
    bytes[..8].copy_from_slice(&seed.to_le_bytes());
    bytes[8..16].copy_from_slice(&((setting_idx << 32) | chunk_idx).to_le_bytes());
    bytes[16..].copy_from_slice(STREAM_TAG);
    ChaCha8Rng::from_seed(bytes)
}

/// CDF and density of poly(x)·e^(−x²) at x, sharing one erf and one exp.
fn cdf_pdf(poly: &[f64], x: f64) -> (f64, f64) {
    let expx = (-x * x).exp();
    let mut moment = std::f64::consts::PI.sqrt() * (1.0 + libm::erf(x)) / 2.0;
    let mut cdf = poly[0] * moment;
    if poly.len() > 1 {
        let mut prev = moment; // I_{j−2} lags two behind
        moment = -expx / 2.0;
        cdf += poly[1] * moment;
        let mut xpow = x;
        for (j, &c) in poly.iter().enumerate().skip(2) {
            let next = (j as f64 - 1.0) / 2.0 * prev - xpow * expx / 2.0;
            prev = moment;
            moment = next;
            xpow *= x;
            cdf += c * moment;
        }
    }
    let mut val = 0.0;
    for &c in poly.iter().rev() {
        val = val * x + c;
    }
    (cdf, (val * expx).max(0.0))
}

/// Draws `n_per_setting` i.i.d. samples for each of the four CHSH setting
/// pairs from the joint quadrature density
/// P(x_A, x_B | θ_A = φ + a, θ_B = φ + b), with a fresh uniform global
/// phase φ per sample. Deterministic for a given seed; records are ordered
/// by setting, then by sample index. States with trace below 1 are
/// renormalized to their own mass.
pub fn sample_batch(
    state: &TwoModeState,
    n_per_setting: usize,
    seed: u64,
) -> Result<SampleBatch, HomodyneError> {
    assert!(n_per_setting >= 1, "need at least one sample per setting");
    let sampler = Sampler::new(state)?;
    let mut records = Vec::with_capacity(4 * n_per_setting);
    for (si, setting) in QuadratureSetting::all_chsh().into_iter().enumerate() {
        let (pa, pb) = (setting.a.phase(), setting.b.phase());
        let mut produced = 0usize;
        let mut chunk_idx = 0u64;
        while produced < n_per_setting {
            let take = CHUNK.min(n_per_setting - produced);
            let mut rng = stream_rng(seed, si as u64, chunk_idx);
            for _ in 0..take {
                let (x_a, x_b, global_phase) = sampler.draw(&mut rng, pa, pb);
                records.push(SampleRecord { setting, x_a, x_b, global_phase });
            }
            produced += take;
            chunk_idx += 1;
        }
    }
    Ok(SampleBatch { records, rng_seed: seed })
}

/// Joint quadrature density P(x_A, x_B) at fixed measurement angles,
/// evaluated directly as ⟨v|ρ|v⟩ with v the two-mode position amplitude
/// vector. Negative values beyond −1e-9 indicate an unphysical truncation.
pub fn joint_quadrature_density(
    state: &TwoModeState,
    theta_a: f64,
    theta_b: f64,
    x_a: f64,
    x_b: f64,
) -> f64 {
    let d = state.cutoff().dim();
    let mut psi_a = [0.0; D_CAP];
    let mut psi_b = [0.0; D_CAP];
    hermite::wavefunction_row(x_a, &mut psi_a[..d]);
    hermite::wavefunction_row(x_b, &mut psi_b[..d]);
    let mut v = vec![Complex64::ZERO; d * d];
    for n in 0..d {
        for m in 0..d {
            v[n * d + m] = Complex64::from_polar(
                psi_a[n] * psi_b[m],
                n as f64 * theta_a + m as f64 * theta_b,
            );
        }
    }
    let rho = state.rho();
    let mut acc = Complex64::ZERO;
    for r in 0..d * d {
        for c in 0..d * d {
            acc += v[r].conj() * rho[(r, c)] * v[c];
        }
    }
    acc.re
}

/// Analytic phase-averaged single-party quadrature distribution
/// Σ_n q_n ψ_n(x)², with q_n the party's photon-number populations.
/// Uniform phase averaging removes every off-diagonal contribution.
pub struct MarginalDistribution {
    coeffs: Vec<f64>,
    total: f64,
}

impl MarginalDistribution {
    pub fn phase_averaged(state: &TwoModeState, party: Party) -> Self {
        let d = state.cutoff().dim();
        let rho = state.rho();
        let mut pops = vec![0.0; d];
        for na in 0..d {
            for nb in 0..d {
                let p = rho[(na * d + nb, na * d + nb)].re;
                match party {
                    Party::A => pops[na] += p,
                    Party::B => pops[nb] += p,
                }
            }
        }
        let mut coeffs = vec![0.0; 2 * d - 1];
        for (n, &q) in pops.iter().enumerate() {
            for (j, &c) in hermite::pair_product_coeffs(n, n).iter().enumerate() {
                coeffs[j] += q * c;
            }
        }
        let mut totals = vec![0.0; 2 * d - 1];
        gauss::total_moments(&mut totals);
        let total = gauss::polynomial_integral(&coeffs, &totals);
        Self { coeffs, total }
    }

    /// Normalized cumulative distribution at x.
    pub fn cdf(&self, x: f64) -> f64 {
        let mut moments = vec![0.0; self.coeffs.len()];
        gauss::lower_moments(x, &mut moments);
        gauss::polynomial_integral(&self.coeffs, &moments) / self.total
    }

    /// Normalized density at x.
    pub fn density(&self, x: f64) -> f64 {
        gauss::polynomial_density(&self.coeffs, x) / self.total
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{beam_splitter_split, FockCutoff, SingleModeState, TwoModeState};
    use approx::assert_abs_diff_eq;

    fn vacuum_pair() -> TwoModeState {
        let vac = SingleModeState::fock_state(0, FockCutoff::default()).unwrap();
        TwoModeState::product(&vac, &vac).unwrap()
    }

    fn ideal_split() -> TwoModeState {
        let one = SingleModeState::fock_state(1, FockCutoff::default()).unwrap();
        beam_splitter_split(&one, 0.5).unwrap()
    }

    #[test]
    fn vacuum_marginals_match_half_variance_gaussian() {
        let batch = sample_batch(&vacuum_pair(), 20_000, 11).unwrap();
        let n = batch.records.len() as f64;
        let (mut mean, mut var) = (0.0, 0.0);
        for r in &batch.records {
            mean += r.x_a + r.x_b;
        }
        mean /= 2.0 * n;
        for r in &batch.records {
            var += (r.x_a - mean).powi(2) + (r.x_b - mean).powi(2);
        }
        var /= 2.0 * n;
        assert_abs_diff_eq!(mean, 0.0, epsilon = 0.02);
        assert_abs_diff_eq!(var, 0.5, epsilon = 0.02);
    }

    #[test]
    fn batches_are_deterministic_in_the_seed() {
        let s = ideal_split();
        let b1 = sample_batch(&s, 500, 42).unwrap();
        let b2 = sample_batch(&s, 500, 42).unwrap();
        assert_eq!(b1, b2);
        let b3 = sample_batch(&s, 500, 43).unwrap();
        assert_ne!(b1, b3);
    }

    #[test]
    fn negative_eigenvalue_is_rejected() {
        let d = 3;
        let mut rho = DMatrix::<Complex64>::zeros(d * d, d * d);
        rho[(0, 0)] = Complex64::new(1.0 + 2e-9, 0.0);
        rho[(1, 1)] = Complex64::new(-2e-9, 0.0);
        assert!(matches!(
            Sampler::from_matrix(&rho, d),
            Err(HomodyneError::NegativeWeight { .. })
        ));
    }

    #[test]
    fn tiny_negative_eigenvalues_are_clamped() {
        let d = 3;
        let mut rho = DMatrix::<Complex64>::zeros(d * d, d * d);
        rho[(0, 0)] = Complex64::new(1.0, 0.0);
        rho[(1, 1)] = Complex64::new(-5e-11, 0.0);
        assert!(Sampler::from_matrix(&rho, d).is_ok());
    }

    #[test]
    fn empty_state_is_rejected() {
        let d = 3;
        let rho = DMatrix::<Complex64>::zeros(d * d, d * d);
        assert!(matches!(
            Sampler::from_matrix(&rho, d),
            Err(HomodyneError::EmptyState { .. })
        ));
    }

    #[test]
    fn joint_density_is_nonnegative_and_normalized_for_ideal_state() {
        let s = ideal_split();
        // Coarse grid positivity plus a trapezoid mass check.
        let grid = 60;
        let (lo, hi) = (-5.0, 5.0);
        let step = (hi - lo) / grid as f64;
        let mut mass = 0.0;
        for i in 0..=grid {
            for j in 0..=grid {
                let (xa, xb) = (lo + i as f64 * step, lo + j as f64 * step);
                let p = joint_quadrature_density(&s, 0.3, 0.9, xa, xb);
                assert!(p >= -1e-9, "negative density {p} at ({xa}, {xb})");
                let wi = if i == 0 || i == grid { 0.5 } else { 1.0 };
                let wj = if j == 0 || j == grid { 0.5 } else { 1.0 };
                let w = wi * wj;
                mass += w * p;
            }
        }
        assert_abs_diff_eq!(mass * step * step, 1.0, epsilon = 1e-6);
    }

    #[test]
    fn marginal_distribution_integrates_to_one() {
        let s = ideal_split();
        let m = MarginalDistribution::phase_averaged(&s, Party::A);
        assert_abs_diff_eq!(m.cdf(8.0), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(m.cdf(-8.0), 0.0, epsilon = 1e-12);
        // Half vacuum, half one photon: even density, CDF(0) = 1/2.
        assert_abs_diff_eq!(m.cdf(0.0), 0.5, epsilon = 1e-12);
        // Density is the CDF's derivative.
        let h = 1e-5;
        for &x in &[-1.7, 0.2, 2.4] {
            let numeric = (m.cdf(x + h) - m.cdf(x - h)) / (2.0 * h);
            assert_abs_diff_eq!(m.density(x), numeric, epsilon = 1e-8);
        }
    }

    #[test]
    fn sampled_quantiles_match_marginal_cdf() {
        // Inverse-CDF sampling must reproduce the analytic marginal law.
        let s = ideal_split();
        let batch = sample_batch(&s, 40_000, 3).unwrap();
        let m = MarginalDistribution::phase_averaged(&s, Party::A);
        let mut xs: Vec<f64> = batch.records.iter().map(|r| r.x_a).collect();
        xs.sort_by(f64::total_cmp);
        let n = xs.len();
        let mut d_stat: f64 = 0.0;
        for (i, &x) in xs.iter().enumerate() {
            let f = m.cdf(x);
            d_stat = d_stat
                .max((f - i as f64 / n as f64).abs())
                .max(((i + 1) as f64 / n as f64 - f).abs());
        }
        // 1% Kolmogorov-Smirnov threshold 1.6276/sqrt(n).
        assert!(d_stat < 1.6276236115189503 / (n as f64).sqrt(), "KS D = {d_stat}");
    }
}
