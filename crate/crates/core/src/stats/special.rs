//! Special functions: log-gamma, regularized incomplete beta and gamma,
//! standard normal CDF and quantile.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

const MAX_ITER: usize = 500;

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// `ln Γ(x)` for `x > 0` (Lanczos, g = 7).
pub fn ln_gamma<S: Scalar>(x: S) -> S {
    let half = S::lit(0.5);
    if x < half {
        // reflection
        let pi = S::PI();
        return (pi / (pi * x).sin().abs()).ln() - ln_gamma(S::one() - x);
    }
    let x = x - S::one();
    let mut acc = S::lit(LANCZOS[0]);
    for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
        acc = acc + S::lit(c) / (x + S::from_usize_lossy(i));
    }
    let t = x + S::lit(LANCZOS_G) + half;
    half * (S::lit(2.0) * S::PI()).ln() + (x + half) * t.ln() - t + acc.ln()
}

pub fn ln_beta<S: Scalar>(a: S, b: S) -> S {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// Regularized incomplete beta `I_x(a, b)`.
pub fn beta_inc<S: Scalar>(a: S, b: S, x: S) -> Result<S> {
    let (zero, one) = (S::zero(), S::one());
    if !(a > zero && b > zero) || !(x >= zero && x <= one) {
        return Err(Error::Domain(format!(
            "incomplete beta needs a, b > 0 and 0 <= x <= 1 (a={a}, b={b}, x={x})"
        )));
    }
    if x == zero {
        return Ok(zero);
    }
    if x == one {
        return Ok(one);
    }
    if x > (a + one) / (a + b + S::lit(2.0)) {
        Ok(one - beta_cf(b, a, one - x))
    } else {
        Ok(beta_cf(a, b, x))
    }
}

/// Continued fraction for `I_x(a, b)` by the modified Lentz method.
fn beta_cf<S: Scalar>(a: S, b: S, x: S) -> S {
    let one = S::one();
    let two = S::lit(2.0);
    let tiny = S::min_positive_value() / S::epsilon();
    let eps = S::epsilon();
    let prefix = (a * x.ln() + b * (one - x).ln() - ln_beta(a, b)).exp() / a;

    let clamp = |v: S| if v.abs() < tiny { tiny } else { v };
    let (qab, qap, qam) = (a + b, a + one, a - one);
    let mut c = one;
    let mut d = one / clamp(one - qab * x / qap);
    let mut h = d;
    for m in 1..=MAX_ITER {
        let m = S::from_usize_lossy(m);
        let m2 = two * m;
        let even = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = one / clamp(one + even * d);
        c = clamp(one + even / c);
        h = h * d * c;
        let odd = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = one / clamp(one + odd * d);
        c = clamp(one + odd / c);
        let delta = d * c;
        h = h * delta;
        if (delta - one).abs() <= eps {
            break;
        }
    }
    prefix * h
}

/// Regularized lower incomplete gamma `P(a, x)`.
pub fn gamma_p<S: Scalar>(a: S, x: S) -> S {
    if x <= S::zero() {
        return S::zero();
    }
    if x < a + S::one() {
        gamma_series(a, x)
    } else {
        S::one() - gamma_cf(a, x)
    }
}

/// Regularized upper incomplete gamma `Q(a, x) = 1 - P(a, x)`.
pub fn gamma_q<S: Scalar>(a: S, x: S) -> S {
    if x <= S::zero() {
        return S::one();
    }
    if x < a + S::one() {
        S::one() - gamma_series(a, x)
    } else {
        gamma_cf(a, x)
    }
}

fn gamma_series<S: Scalar>(a: S, x: S) -> S {
    let mut ap = a;
    let mut del = S::one() / a;
    let mut sum = del;
    for _ in 0..MAX_ITER {
        ap = ap + S::one();
        del = del * x / ap;
        sum = sum + del;
        if del.abs() < sum.abs() * S::epsilon() {
            break;
        }
    }
    sum * (-x + a * x.ln() - ln_gamma(a)).exp()
}

fn gamma_cf<S: Scalar>(a: S, x: S) -> S {
    let one = S::one();
    let two = S::lit(2.0);
    let tiny = S::min_positive_value() / S::epsilon();
    let clamp = |v: S| if v.abs() < tiny { tiny } else { v };
    let mut b = x + one - a;
    let mut c = one / tiny;
    let mut d = one / b;
    let mut h = d;
    for i in 1..=MAX_ITER {
        let i = S::from_usize_lossy(i);
        let an = -i * (i - a);
        b = b + two;
        d = one / clamp(an * d + b);
        c = clamp(b + an / c);
        let delta = d * c;
        h = h * delta;
        if (delta - one).abs() <= S::epsilon() {
            break;
        }
    }
    (-x + a * x.ln() - ln_gamma(a)).exp() * h
}

/// Complementary error function.
pub fn erfc<S: Scalar>(x: S) -> S {
    let half = S::lit(0.5);
    if x >= S::zero() {
        gamma_q(half, x * x)
    } else {
        S::one() + gamma_p(half, x * x)
    }
}

/// Standard normal CDF `Φ(z)`.
pub fn normal_cdf<S: Scalar>(z: S) -> S {
    S::lit(0.5) * erfc(-z / S::SQRT_2())
}

/// Standard normal upper tail `1 - Φ(z)` without cancellation.
pub fn normal_sf<S: Scalar>(z: S) -> S {
    S::lit(0.5) * erfc(z / S::SQRT_2())
}

pub fn normal_pdf<S: Scalar>(z: S) -> S {
    (-S::lit(0.5) * z * z).exp() / (S::lit(2.0) * S::PI()).sqrt()
}

/// Inverse of [`normal_cdf`] (Acklam's rational approximation plus one
/// Halley refinement step).
pub fn normal_quantile<S: Scalar>(p: S) -> Result<S> {
    if !(p > S::zero() && p < S::one()) {
        return Err(Error::Domain(format!(
            "normal quantile needs 0 < p < 1, got {p}"
        )));
    }
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    let poly = |coef: &[f64], x: f64| coef.iter().fold(0.0, |acc, &c| acc * x + c);
    let pf = p.to_f64_lossy();
    let low = 0.02425;
    let x0 = if pf < low {
        let q = (-2.0 * pf.ln()).sqrt();
        poly(&C, q) / (poly(&D, q) * q + 1.0)
    } else if pf <= 1.0 - low {
        let q = pf - 0.5;
        let r = q * q;
        poly(&A, r) * q / (poly(&B, r) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - pf).ln()).sqrt();
        -poly(&C, q) / (poly(&D, q) * q + 1.0)
    };
    let x = S::lit(x0);
    let e = normal_cdf(x) - p;
    let u = e * (S::lit(2.0) * S::PI()).sqrt() * (x * x / S::lit(2.0)).exp();
    Ok(x - u / (S::one() + x * u / S::lit(2.0)))
}
