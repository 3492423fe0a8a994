//! One-dimensional adaptive quadrature shared by the rest of the crate.

use crate::error::{Error, Result};

/// Maximum bisection depth before the quadrature gives up.
const MAX_DEPTH: u32 = 96;

/// Adaptive Simpson quadrature of `f` over `[a, b]`.
///
/// The effective tolerance is `max(abs_tol, rel_tol * |I|)` with `|I|`
/// estimated from a first coarse pass. Returns
/// [`Error::QuadratureNonConvergence`] if the subdivision budget runs out.
pub fn adaptive_simpson<F>(f: F, a: f64, b: f64, rel_tol: f64, abs_tol: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    if a == b {
        return Ok(0.0);
    }
    let m = 0.5 * (a + b);
    let fa = f(a);
    let fm = f(m);
    let fb = f(b);
    let whole = simpson(fa, fm, fb, b - a);
    let tol = abs_tol.max(rel_tol * whole.abs());
    recurse(&f, a, b, fa, fm, fb, whole, tol, MAX_DEPTH)
}

fn simpson(fa: f64, fm: f64, fb: f64, width: f64) -> f64 {
    width / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn recurse<F>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(fa, flm, fm, m - a);
    let right = simpson(fm, frm, fb, b - m);
    let delta = left + right - whole;
    // Richardson: |delta|/15 estimates the error of left+right.
    if delta.abs() <= 15.0 * tol || m == a || m == b {
        return Ok(left + right + delta / 15.0);
    }
    if depth == 0 {
        return Err(Error::QuadratureNonConvergence {
            a,
            b,
            estimate: delta.abs() / 15.0,
            tolerance: tol,
        });
    }
    // Split by sqrt(2) rather than 2: still contracts the global budget,
    // but lets cells around a jump discontinuity terminate.
    let child_tol = tol / std::f64::consts::SQRT_2;
    Ok(recurse(f, a, m, fa, flm, fm, left, child_tol, depth - 1)?
        + recurse(f, m, b, fm, frm, fb, right, child_tol, depth - 1)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        // Simpson is exact on cubics, so no refinement at all is needed.
        let v = adaptive_simpson(|x| x * x * x - 2.0 * x, 0.0, 2.0, 1e-12, 1e-14).unwrap();
        assert!((v - 0.0).abs() < 1e-13);
    }

    #[test]
    fn transcendental_reaches_tolerance() {
        let v = adaptive_simpson(f64::exp, 0.0, 1.0, 1e-12, 1e-14).unwrap();
        assert!((v - (std::f64::consts::E - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn empty_interval_is_zero() {
        let v = adaptive_simpson(f64::exp, 1.5, 1.5, 1e-12, 1e-14).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn kinked_integrand_converges() {
        let v = adaptive_simpson(|x: f64| x.abs(), -1.0, 1.0, 1e-11, 1e-13).unwrap();
        assert!((v - 1.0).abs() < 1e-10);
    }
}
