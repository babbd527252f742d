//! Integrals of polynomials against the Gaussian weight e^(−x²).
//!
//! Every quadrature density in this crate has the form P(x) e^(−x²) with P a
//! polynomial, so cumulative distribution values reduce to the lower moments
//! I_j(x) = ∫_{−∞}^x t^j e^(−t²) dt, which satisfy
//! I_0 = √π (1 + erf x)/2, I_1 = −e^(−x²)/2,
//! I_j = (j−1)/2 · I_{j−2} − x^{j−1} e^(−x²)/2.
//! One erf and one exp evaluation yield the whole family.

/// Fills `out[j] = I_j(x)` for j = 0..out.len().
pub fn lower_moments(x: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    let expx = (-x * x).exp();
    out[0] = std::f64::consts::PI.sqrt() * (1.0 + libm::erf(x)) / 2.0;
    if out.len() > 1 {
        out[1] = -expx / 2.0;
    }
    let mut xpow = x; // x^{j−1} for j = 2
    for j in 2..out.len() {
        out[j] = (j as f64 - 1.0) / 2.0 * out[j - 2] - xpow * expx / 2.0;
        xpow *= x;
    }
}

/// Fills `out[j] = I_j(∞)`: √π·(j−1)!!/2^(j/2) for even j, 0 for odd j.
pub fn total_moments(out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    out[0] = std::f64::consts::PI.sqrt();
    if out.len() > 1 {
        out[1] = 0.0;
    }
    for j in 2..out.len() {
        out[j] = (j as f64 - 1.0) / 2.0 * out[j - 2];
    }
}

/// ∫_{−∞}^x P(t) e^(−t²) dt for P given by monomial `coeffs`, using
/// precomputed moments from [`lower_moments`] (or [`total_moments`] for the
/// full-line integral).
pub fn polynomial_integral(coeffs: &[f64], moments: &[f64]) -> f64 {
    debug_assert!(moments.len() >= coeffs.len());
    coeffs.iter().zip(moments).map(|(c, m)| c * m).sum()
}

/// P(x) e^(−x²) by Horner evaluation.
pub fn polynomial_density(coeffs: &[f64], x: f64) -> f64 {
    let mut poly = 0.0;
    for &c in coeffs.iter().rev() {
        poly = poly * x + c;
    }
    poly * (-x * x).exp()
}

/// Inverse standard-normal CDF (Acklam's rational approximation, relative
/// error below 1.2e-9). Used only to seed Newton iterations; accuracy of the
/// sampler never depends on it.
pub fn inv_std_normal_cdf(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.383577518672690e+02,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    const P_LOW: f64 = 0.02425;
    if !(0.0..=1.0).contains(&p) {
        return f64::NAN;
    }
    if p < P_LOW {
        let q = (-2.0 * p.max(f64::MIN_POSITIVE).ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        -inv_std_normal_cdf(1.0 - p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn moments_match_quadrature_oracle() {
        // Frozen values of I_j(x) from 30-digit quadrature of the definition.
        let mut m = [0.0; 13];
        lower_moments(0.5, &mut m);
        assert_abs_diff_eq!(m[0], 1.3475079318655505, epsilon = 1e-14);
        assert_abs_diff_eq!(m[1], -0.38940039153570243, epsilon = 1e-14);
        assert_abs_diff_eq!(m[4], 0.66990560630542322, epsilon = 1e-14);
        lower_moments(-1.2, &mut m);
        assert_abs_diff_eq!(m[7], -2.8249825424483411, epsilon = 1e-13);
        lower_moments(2.0, &mut m);
        assert_abs_diff_eq!(m[12], 166.45522801319212, epsilon = 1e-11);
        lower_moments(-6.5, &mut m);
        assert_abs_diff_eq!(m[3], -9.6830964052158263e-18, epsilon = 1e-25);
    }

    #[test]
    fn totals_are_limits_of_lower_moments() {
        let mut total = [0.0; 13];
        let mut far = [0.0; 13];
        total_moments(&mut total);
        lower_moments(9.0, &mut far);
        for j in 0..13 {
            assert_abs_diff_eq!(total[j], far[j], epsilon = 1e-12 * total[0].max(total[j]));
        }
        assert_abs_diff_eq!(total[0], std::f64::consts::PI.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(total[2], std::f64::consts::PI.sqrt() / 2.0, epsilon = 1e-15);
    }

    #[test]
    fn density_is_derivative_of_integral() {
        let coeffs = [0.3, -1.1, 0.0, 2.0, 0.7];
        let h = 1e-5;
        let mut lo = [0.0; 5];
        let mut hi = [0.0; 5];
        for &x in &[-2.0, -0.3, 0.0, 1.4, 3.0] {
            lower_moments(x - h, &mut lo);
            lower_moments(x + h, &mut hi);
            let numeric =
                (polynomial_integral(&coeffs, &hi) - polynomial_integral(&coeffs, &lo)) / (2.0 * h);
            assert_abs_diff_eq!(polynomial_density(&coeffs, x), numeric, epsilon = 1e-8);
        }
    }

    #[test]
    fn inverse_normal_roundtrips_through_erf() {
        for &p in &[0.001, 0.02, 0.2, 0.5, 0.77, 0.99, 0.9995] {
            let z = inv_std_normal_cdf(p);
            let back = 0.5 * (1.0 + libm::erf(z / std::f64::consts::SQRT_2));
            assert_abs_diff_eq!(back, p, epsilon = 2e-9);
        }
    }
}
