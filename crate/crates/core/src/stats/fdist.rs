//! Fisher–Snedecor F distribution.

use super::special::beta_inc;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

fn check<S: Scalar>(x: S, d1: S, d2: S) -> Result<()> {
    if !(x >= S::zero()) || !(d1 >= S::one()) || !(d2 >= S::one()) {
        return Err(Error::Domain(format!(
            "F distribution needs x >= 0 and d1, d2 >= 1 (x={x}, d1={d1}, d2={d2})"
        )));
    }
    Ok(())
}

/// `P(F <= x)` for `F ~ F(d1, d2)`.
pub fn f_cdf<S: Scalar>(x: S, d1: S, d2: S) -> Result<S> {
    check(x, d1, d2)?;
    if x.is_infinite() {
        return Ok(S::one());
    }
    let half = S::lit(0.5);
    beta_inc(d1 * half, d2 * half, d1 * x / (d1 * x + d2))
}

/// Upper tail `P(F > x)`, evaluated directly so tiny p-values keep precision.
pub fn f_sf<S: Scalar>(x: S, d1: S, d2: S) -> Result<S> {
    check(x, d1, d2)?;
    if x.is_infinite() {
        return Ok(S::zero());
    }
    let half = S::lit(0.5);
    beta_inc(d2 * half, d1 * half, d2 / (d2 + d1 * x))
}

/// Critical value `x` with `P(F > x) = alpha`, by bisection.
pub fn f_critical<S: Scalar>(alpha: S, d1: S, d2: S) -> Result<S> {
    if !(alpha > S::zero() && alpha < S::one()) {
        return Err(Error::Domain(format!(
            "alpha must be in (0, 1), got {alpha}"
        )));
    }
    check(S::zero(), d1, d2)?;
    let mut lo = S::zero();
    let mut hi = S::one();
    while f_sf(hi, d1, d2)? > alpha {
        lo = hi;
        hi = hi * S::lit(2.0);
    }
    for _ in 0..200 {
        let mid = S::lit(0.5) * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f_sf(mid, d1, d2)? > alpha {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn zero_and_symmetry() {
        assert_eq!(f_cdf(0.0f64, 4.0, 35.0).unwrap(), 0.0);
        for d in [1.0f64, 2.0, 7.0, 35.0, 300.0] {
            assert_relative_eq!(f_cdf(1.0, d, d).unwrap(), 0.5, epsilon = 1e-12);
        }
    }

    #[test]
    fn cdf_and_sf_are_complementary() {
        for &x in &[0.1f64, 1.0, 2.64, 10.0] {
            let c = f_cdf(x, 4.0, 35.0).unwrap();
            let s = f_sf(x, 4.0, 35.0).unwrap();
            assert_relative_eq!(c + s, 1.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn closed_form_for_two_numerator_df() {
        // F(2, d2): sf(x) = (1 + 2x/d2)^(-d2/2)
        for &x in &[0.3f64, 1.7, 6.0] {
            let exact = (1.0 + 2.0 * x / 9.0).powf(-4.5);
            assert_relative_eq!(f_sf(x, 2.0, 9.0).unwrap(), exact, max_relative = 1e-13);
        }
    }

    #[test]
    fn critical_value_for_anova_degrees_of_freedom() {
        let crit = f_critical(0.05f64, 4.0, 35.0).unwrap();
        assert!((crit - 2.64146).abs() < 5e-4, "{crit}");
    }

    #[test]
    fn domain_errors() {
        assert!(f_cdf(-1.0f64, 2.0, 2.0).is_err());
        assert!(f_cdf(1.0f64, 0.5, 2.0).is_err());
        assert!(f_critical(1.5f64, 2.0, 2.0).is_err());
    }
}
