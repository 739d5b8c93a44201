//! Adaptive Simpson quadrature and the fixed Gauss-Legendre rule used for
//! cell averaging.

use crate::error::{Result, SolverError};

/// 5-node Gauss-Legendre nodes on [-1, 1] (exact through degree 9).
pub const GAUSS_LEGENDRE_5_NODES: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683_1,
    0.0,
    0.538_469_310_105_683_1,
    0.906_179_845_938_664,
];

/// Matching Gauss-Legendre weights (sum to 2).
pub const GAUSS_LEGENDRE_5_WEIGHTS: [f64; 5] = [
    0.236_926_885_056_189_1,
    0.478_628_670_499_366_5,
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_5,
    0.236_926_885_056_189_1,
];

fn simpson(fa: f64, fm: f64, fb: f64, h: f64) -> f64 {
    h / 6.0 * (fa + 4.0 * fm + fb)
}

fn adapt<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Result<f64> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(fa, flm, fm, m - a);
    let right = simpson(fm, frm, fb, b - m);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * tol {
        return Ok(left + right + delta / 15.0);
    }
    if depth == 0 {
        return Err(SolverError::QuadratureFailure(format!(
            "depth cap reached on [{a}, {b}] with residual {:.3e}",
            delta.abs()
        )));
    }
    let l = adapt(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)?;
    let r = adapt(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?;
    Ok(l + r)
}

/// Adaptive Simpson integration of `f` over `[a, b]` to absolute tolerance
/// `tol`, with subdivision depth capped at `max_depth`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    tol: f64,
    max_depth: u32,
) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let m = 0.5 * (lo + hi);
    let fa = f(lo);
    let fm = f(m);
    let fb = f(hi);
    for (x, v) in [(lo, fa), (m, fm), (hi, fb)] {
        if !v.is_finite() {
            return Err(SolverError::NonFiniteInput {
                context: "quadrature integrand",
                x,
            });
        }
    }
    let whole = simpson(fa, fm, fb, hi - lo);
    Ok(sign * adapt(&f, lo, hi, fa, fm, fb, whole, tol, max_depth)?)
}

/// Signed integral from 0 to `u` (handles `u < 0` by orientation).
pub fn integrate_from_zero<F: Fn(f64) -> f64>(f: F, u: f64, tol: f64, max_depth: u32) -> Result<f64> {
    adaptive_simpson(f, 0.0, u, tol, max_depth)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let v = adaptive_simpson(|x| x * x * x - 2.0 * x, -1.0, 2.0, 1e-12, 40).unwrap();
        // antiderivative x^4/4 - x^2
        assert!((v - (4.0 - 4.0 - (0.25 - 1.0))).abs() < 1e-12);
    }

    #[test]
    fn handles_kinked_integrand() {
        // |x| over [-1, 2] = 0.5 + 2
        let v = adaptive_simpson(|x| x.abs(), -1.0, 2.0, 1e-11, 40).unwrap();
        assert!((v - 2.5).abs() < 1e-10);
    }

    #[test]
    fn reversed_limits_flip_sign() {
        let a = adaptive_simpson(|x| x.exp(), 0.0, 1.0, 1e-12, 40).unwrap();
        let b = adaptive_simpson(|x| x.exp(), 1.0, 0.0, 1e-12, 40).unwrap();
        assert!((a + b).abs() < 1e-13);
    }

    #[test]
    fn signed_integral_from_zero() {
        let v = integrate_from_zero(|s| s.max(0.0), -1.0, 1e-12, 40).unwrap();
        assert_eq!(v, 0.0);
        let v = integrate_from_zero(|s| s.max(0.0), 1.0, 1e-12, 40).unwrap();
        assert!((v - 0.5).abs() < 1e-12);
    }

    #[test]
    fn rejects_non_finite_integrand() {
        let r = adaptive_simpson(|x| 1.0 / x, 0.0, 1.0, 1e-10, 40);
        assert!(matches!(r, Err(SolverError::NonFiniteInput { .. })));
    }
}
