//! Adaptive Simpson quadrature with an explicit non-convergence error.

use thiserror::Error;

/// Failure of the adaptive subdivision to reach the requested tolerance.
#[derive(Debug, Error)]
#[error("adaptive quadrature did not converge on [{a}, {b}]: residual {residual:.3e} > {tol:.3e}")]
pub struct QuadratureError {
    pub a: f64,
    pub b: f64,
    pub residual: f64,
    pub tol: f64,
}

/// ∫_a^b f dx by adaptive Simpson subdivision with Richardson correction.
/// Errors out instead of returning a value that missed `tol`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    tol: f64,
) -> Result<f64, QuadratureError> {
    const MAX_DEPTH: u32 = 40;
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    recurse(f, a, b, fa, fm, fb, whole, tol, MAX_DEPTH).map_err(|residual| QuadratureError {
        a,
        b,
        residual,
        tol,
    })
}

#[allow(clippy::too_many_arguments)]
fn recurse<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Result<f64, f64> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * tol {
        return Ok(left + right + delta / 15.0);
    }
    if depth == 0 {
        return Err(delta.abs() / 15.0);
    }
    let l = recurse(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)?;
    let r = recurse(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)?;
    Ok(l + r)
}
