//! Harmonic-oscillator eigenfunctions ψ_n(x) = π^(−1/4) (2ⁿ n!)^(−1/2)
//! H_n(x) e^(−x²/2) and their polynomial coefficient tables.
//!
//! The convention fixes the vacuum quadrature variance to 1/2; it is the
//! unique normalization under which the sign-binned two-level correlator
//! matrix element between |0⟩ and |1⟩ equals √(2/π).

/// Largest photon number supported by the coefficient tables.
pub const N_MAX_SUPPORTED: usize = 6;

/// ψ_n(x) by the stable three-term recurrence
/// ψ_n = x √(2/n) ψ_{n−1} − √((n−1)/n) ψ_{n−2}.
pub fn wavefunction(n: usize, x: f64) -> f64 {
    let mut prev = std::f64::consts::PI.powf(-0.25) * (-x * x / 2.0).exp();
    if n == 0 {
        return prev;
    }
    let mut cur = x * std::f64::consts::SQRT_2 * prev;
    for k in 2..=n {
        let next = x * (2.0 / k as f64).sqrt() * cur - ((k - 1) as f64 / k as f64).sqrt() * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// Fills `out[k] = ψ_k(x)` for k = 0..out.len(). One pass of the recurrence.
pub fn wavefunction_row(x: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    out[0] = std::f64::consts::PI.powf(-0.25) * (-x * x / 2.0).exp();
    if out.len() > 1 {
        out[1] = x * std::f64::consts::SQRT_2 * out[0];
    }
    for k in 2..out.len() {
        out[k] = x * (2.0 / k as f64).sqrt() * out[k - 1]
            - ((k - 1) as f64 / k as f64).sqrt() * out[k - 2];
    }
}

/// ψ_n'(x) = √(2n) ψ_{n−1}(x) − x ψ_n(x).
pub fn wavefunction_derivative(n: usize, x: f64) -> f64 {
    let lower = if n == 0 {
        0.0
    } else {
        (2.0 * n as f64).sqrt() * wavefunction(n - 1, x)
    };
    lower - x * wavefunction(n, x)
}

/// Coefficients of the physicists' Hermite polynomial H_n in the monomial
/// basis: H_n(x) = Σ_j coeffs[j] x^j. Exact in f64 for n ≤ 6.
fn hermite_coeffs(n: usize) -> Vec<f64> {
    let mut prev = vec![1.0];
    if n == 0 {
        return prev;
    }
    let mut cur = vec![0.0, 2.0];
    for k in 2..=n {
        // H_k = 2x H_{k−1} − 2(k−1) H_{k−2}
        let mut next = vec![0.0; k + 1];
        for (j, &c) in cur.iter().enumerate() {
            next[j + 1] += 2.0 * c;
        }
        for (j, &c) in prev.iter().enumerate() {
            next[j] -= 2.0 * (k - 1) as f64 * c;
        }
        prev = cur;
        cur = next;
    }
    cur
}

/// Monomial coefficients of the Gaussian-free part of ψ_n ψ_m, i.e. the
/// polynomial P_{nm} with ψ_n(x) ψ_m(x) = P_{nm}(x) e^(−x²). Degree n+m.
pub fn pair_product_coeffs(n: usize, m: usize) -> Vec<f64> {
    assert!(n <= N_MAX_SUPPORTED && m <= N_MAX_SUPPORTED);
    let norm = |k: usize| -> f64 {
        let mut fact = 1.0;
        for j in 1..=k {
            fact *= j as f64;
        }
        std::f64::consts::PI.powf(-0.25) / (2f64.powi(k as i32) * fact).sqrt()
    };
    let (hn, hm) = (hermite_coeffs(n), hermite_coeffs(m));
    let scale = norm(n) * norm(m);
    let mut out = vec![0.0; n + m + 1];
    for (i, &a) in hn.iter().enumerate() {
        for (j, &b) in hm.iter().enumerate() {
            out[i + j] += scale * a * b;
        }
    }
    out
}
