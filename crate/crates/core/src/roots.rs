//! Bracketed scalar root finding.

use crate::error::{Error, Result};

/// Newton's method kept inside a sign-changing bracket, falling back to
/// bisection whenever a Newton step would leave it or stalls.
///
/// `f` returns the value and derivative. Stops once the bracket is narrower
/// than `tol` or `f` is exactly zero.
pub fn safeguarded_newton<F>(f: F, lo: f64, hi: f64, tol: f64, max_iter: usize) -> Result<f64>
where
    F: Fn(f64) -> (f64, f64),
{
    let (flo, _) = f(lo);
    let (fhi, _) = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(Error::Domain(format!(
            "no sign change on [{lo}, {hi}]: f = {flo}, {fhi}"
        )));
    }
    // orient so that f(a) < 0 < f(b)
    let (mut a, mut b) = if flo < 0.0 { (lo, hi) } else { (hi, lo) };
    let mut x = 0.5 * (lo + hi);
    let mut dx_old = (hi - lo).abs();
    let mut dx = dx_old;
    let (mut fx, mut dfx) = f(x);
    if fx == 0.0 {
        return Ok(x);
    }
    for _ in 0..max_iter {
        let newton_leaves = ((x - b) * dfx - fx) * ((x - a) * dfx - fx) >= 0.0;
        let slow = (2.0 * fx).abs() > (dx_old * dfx).abs();
        dx_old = dx;
        if newton_leaves || slow {
            dx = 0.5 * (b - a);
            x = a + dx;
        } else {
            dx = fx / dfx;
            x -= dx;
        }
        if dx.abs() < tol {
            return Ok(x);
        }
        (fx, dfx) = f(x);
        if fx == 0.0 {
            return Ok(x);
        }
        if fx < 0.0 {
            a = x;
        } else {
            b = x;
        }
        if (b - a).abs() < tol {
            return Ok(x);
        }
    }
    Err(Error::Domain(format!(
        "root finding did not converge in {max_iter} iterations"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_sqrt_two() {
        let r = safeguarded_newton(|x| (x * x - 2.0, 2.0 * x), 0.0, 2.0, 1e-14, 100).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn survives_flat_derivative() {
        // derivative vanishes at the midpoint, so the first step must bisect
        let r = safeguarded_newton(|x| (x.powi(3) - 0.001, 3.0 * x * x), -1.0, 1.0, 1e-14, 200)
            .unwrap();
        assert!((r - 0.1).abs() < 1e-12);
    }

    #[test]
    fn decreasing_function() {
        let r = safeguarded_newton(|x| (1.0 - x, -1.0), 0.0, 3.0, 1e-14, 50).unwrap();
        assert!((r - 1.0).abs() < 1e-14);
    }

    #[test]
    fn zero_derivative_at_start() {
        // the midpoint is a triple root with vanishing derivative
        let r = safeguarded_newton(
            |x| (x.tanh() - x, 1.0 / x.cosh().powi(2) - 1.0),
            -2.0,
            2.0,
            1e-13,
            200,
        )
        .unwrap();
        assert_eq!(r, 0.0);
        let r = safeguarded_newton(
            |x| (x.tanh() - x, 1.0 / x.cosh().powi(2) - 1.0),
            -2.0,
            3.0,
            1e-13,
            200,
        )
        .unwrap();
        assert!(r.abs() < 1e-4);
    }

    #[test]
    fn rejects_bracket_without_sign_change() {
        assert!(safeguarded_newton(|x| (x * x + 1.0, 2.0 * x), -1.0, 1.0, 1e-12, 50).is_err());
    }
}
