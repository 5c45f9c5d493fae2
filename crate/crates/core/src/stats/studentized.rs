//! Studentized range distribution by numerical integration.
//!
//! For `k` normal means and `df` error degrees of freedom,
//!
//! ```text
//! P(Q <= q) = ∫ f_df(s) · W(q·s) ds,   W(w) = k ∫ φ(z) [Φ(z) − Φ(z − w)]^(k−1) dz
//! ```
//!
//! where `f_df` is the density of `sqrt(χ²_df / df)`. Both integrals use
//! composite Gauss–Legendre rules on finite ranges outside which the
//! integrands are below double precision.

use std::sync::OnceLock;

use super::special::{ln_gamma, normal_cdf, normal_pdf};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

const GL_POINTS: usize = 10;
const PANELS: usize = 24;
/// `φ(z)` is below 1e-17 outside this half-width.
const Z_RANGE: f64 = 9.0;
/// Half-width of the `s` range in units of its asymptotic standard deviation.
const S_SPREAD: f64 = 14.0;
/// Beyond this many degrees of freedom the `s` integral is replaced by `s = 1`.
const DF_INFINITE: f64 = 1e7;

/// Gauss–Legendre nodes and weights on [-1, 1].
fn gauss_legendre() -> &'static [(f64, f64); GL_POINTS] {
    static RULE: OnceLock<[(f64, f64); GL_POINTS]> = OnceLock::new();
    RULE.get_or_init(|| {
        let n = GL_POINTS;
        let mut rule = [(0.0, 0.0); GL_POINTS];
        for (i, slot) in rule.iter_mut().enumerate() {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for j in 2..=n {
                    let p2 = ((2 * j - 1) as f64 * x * p1 - (j - 1) as f64 * p0) / j as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            *slot = (x, 2.0 / ((1.0 - x * x) * dp * dp));
        }
        rule
    })
}

/// Quadrature nodes/weights for `[a, b]` split into `PANELS` equal panels.
fn nodes<S: Scalar>(a: S, b: S) -> Vec<(S, S)> {
    let rule = gauss_legendre();
    let width = (b - a) / S::from_usize_lossy(PANELS);
    let half = S::lit(0.5) * width;
    let mut out = Vec::with_capacity(PANELS * GL_POINTS);
    for p in 0..PANELS {
        let mid = a + width * (S::from_usize_lossy(p) + S::lit(0.5));
        for &(x, w) in rule {
            out.push((mid + half * S::lit(x), half * S::lit(w)));
        }
    }
    out
}

/// CDF of the range of `k` iid standard normals.
fn range_cdf<S: Scalar>(w: S, k: usize, z_nodes: &[(S, S, S)]) -> S {
    if w <= S::zero() {
        return S::zero();
    }
    let power = (k - 1) as i32;
    let total: S = z_nodes
        .iter()
        .map(|&(z, weight, phi_z)| {
            let inner = (phi_z - normal_cdf(z - w)).max(S::zero());
            weight * normal_pdf(z) * inner.powi(power)
        })
        .sum();
    (S::from_usize_lossy(k) * total).min(S::one())
}

fn check<S: Scalar>(k: usize, df: S) -> Result<()> {
    if k < 2 || !(df >= S::one()) {
        return Err(Error::Domain(format!(
            "studentized range needs k >= 2 and df >= 1 (k={k}, df={df})"
        )));
    }
    Ok(())
}

/// `P(Q <= q)` for the studentized range with `k` groups and `df` degrees of
/// freedom. `df` may be infinite.
pub fn studentized_range_cdf<S: Scalar>(q: S, k: usize, df: S) -> Result<S> {
    check(k, df)?;
    if q <= S::zero() {
        return Ok(S::zero());
    }
    let z_range = S::lit(Z_RANGE);
    let z_nodes: Vec<(S, S, S)> = nodes(-z_range, z_range)
        .into_iter()
        .map(|(z, w)| (z, w, normal_cdf(z)))
        .collect();
    if df >= S::lit(DF_INFINITE) {
        return Ok(range_cdf(q, k, &z_nodes));
    }
    let half_df = S::lit(0.5) * df;
    // log density of s = sqrt(chi2_df / df)
    let log_norm = (S::lit(2.0) * df).ln() - half_df * S::LN_2() - ln_gamma(half_df);
    let log_density =
        |s: S| log_norm + s.ln() + (half_df - S::one()) * (df * s * s).ln() - half_df * s * s;
    let mode = ((df - S::one()).max(S::zero()) / df).sqrt();
    let spread = S::lit(S_SPREAD) / (S::lit(2.0) * df).sqrt();
    let lo = (mode - spread).max(S::zero());
    let hi = mode + spread;
    let weighted: Vec<(S, S)> = nodes(lo, hi)
        .into_iter()
        .filter(|&(s, _)| s > S::zero())
        .map(|(s, w)| (s, w * log_density(s).exp()))
        .collect();
    // nodes far in the tails cannot move the sum
    let cutoff = S::lit(1e-18);
    let total: S = weighted
        .into_iter()
        .filter(|&(_, w)| w > cutoff)
        .map(|(s, w)| w * range_cdf(q * s, k, &z_nodes))
        .sum();
    Ok(total.max(S::zero()).min(S::one()))
}

/// Upper quantile: the `q` with `P(Q > q) = alpha`.
pub fn studentized_range_quantile<S: Scalar>(alpha: S, k: usize, df: S) -> Result<S> {
    check(k, df)?;
    if !(alpha > S::zero() && alpha < S::one()) {
        return Err(Error::Domain(format!(
            "alpha must be in (0, 1), got {alpha}"
        )));
    }
    let target = S::one() - alpha;
    let g = |q: S| studentized_range_cdf(q, k, df).map(|p| p - target);
    let (mut lo, mut f_lo) = (S::zero(), -target);
    let mut hi = S::lit(2.0);
    let mut f_hi = g(hi)?;
    while f_hi < S::zero() {
        lo = hi;
        f_lo = f_hi;
        hi = hi * S::lit(2.0);
        f_hi = g(hi)?;
    }
    // Illinois-modified regula falsi
    let tol = S::lit(1e-10).max(S::epsilon() * S::lit(16.0));
    let mut side = 0i8;
    for _ in 0..100 {
        let q = (lo * f_hi - hi * f_lo) / (f_hi - f_lo);
        let f = g(q)?;
        if f.abs() <= tol || (hi - lo) <= tol * hi {
            return Ok(q);
        }
        if f < S::zero() {
            lo = q;
            f_lo = f;
            if side == -1 {
                f_hi = f_hi * S::lit(0.5);
            }
            side = -1;
        } else {
            hi = q;
            f_hi = f;
            if side == 1 {
                f_lo = f_lo * S::lit(0.5);
            }
            side = 1;
        }
    }
    Ok(S::lit(0.5) * (lo + hi))
}
