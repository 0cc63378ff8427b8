//! Special functions built from series and quadrature, no external crates.
//!
//! Each function here is paired with an independent oracle in the test
//! suite (harmonic-sum limit for gamma, partial sum + integral tail for
//! zeta, alternating series for the dilogarithm, a quadrature of the
//! integral definition for Gamma).

use super::quad::integrate;
use crate::error::{CoreError, Result};
use std::f64::consts::PI;
use std::sync::LazyLock;

/// Euler's constant, from the integral identity
/// `gamma = int_0^1 (1-e^{-t})/t dt - int_1^inf e^{-t}/t dt`.
pub fn euler_gamma() -> f64 {
    static GAMMA: LazyLock<f64> = LazyLock::new(|| {
        let head = integrate(|t| -f64::exp_m1(-t) / t, 0.0, 1.0, 1e-15)
            .expect("gamma head integral");
        let tail = integrate(|t| (-t).exp() / t, 1.0, f64::INFINITY, 1e-15)
            .expect("gamma tail integral");
        head.value - tail.value
    });
    *GAMMA
}

// Bernoulli numbers B_2, B_4, ..., B_16 used by the Euler-Maclaurin sums.
const BERNOULLI: [f64; 8] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
];

/// Riemann zeta for real argument `k > 1`, via Euler-Maclaurin.
pub fn zeta(k: f64) -> Result<f64> {
    if !(k > 1.0) {
        return Err(CoreError::Domain(format!("zeta requires k > 1, got {k}")));
    }
    let n = 20usize;
    let mut sum = 0.0;
    for i in 1..n {
        sum += (i as f64).powf(-k);
    }
    let nf = n as f64;
    sum += nf.powf(1.0 - k) / (k - 1.0);
    sum += 0.5 * nf.powf(-k);

    // correction terms B_{2j}/(2j)! * k(k+1)...(k+2j-2) * n^{-k-2j+1}
    let mut rising = k; // k(k+1)...(k+2j-2), starts at j=1 with just k
    let mut fact = 2.0; // (2j)!
    let mut prev = f64::INFINITY;
    for (j, b) in BERNOULLI.iter().enumerate() {
        let term = b / fact * rising * nf.powf(-(k + 2.0 * j as f64 + 1.0));
        if term.abs() > prev {
            break; // asymptotic series started to diverge
        }
        sum += term;
        prev = term.abs();
        let m = 2.0 * (j as f64 + 1.0);
        rising *= (k + m - 1.0) * (k + m);
        fact *= (m + 1.0) * (m + 2.0);
    }
    Ok(sum)
}

/// Dilogarithm `Li_2(x) = sum_{n>=1} x^n / n^2` for `x <= 1`.
///
/// Series on `|x| <= 1/2`, the reflection and Landen identities elsewhere,
/// and the inversion formula for `x < -1`.
pub fn dilog(x: f64) -> Result<f64> {
    if x > 1.0 {
        return Err(CoreError::Domain(format!("dilog requires x <= 1, got {x}")));
    }
    Ok(dilog_inner(x))
}

fn dilog_series(x: f64) -> f64 {
    debug_assert!(x.abs() <= 0.5 + 1e-15);
    let mut term = x;
    let mut sum = x;
    let mut n = 1.0f64;
    while term.abs() > 1e-18 * sum.abs().max(1e-30) {
        n += 1.0;
        term *= x;
        sum += term / (n * n);
        if n > 200.0 {
            break;
        }
    }
    sum
}

fn dilog_inner(x: f64) -> f64 {
    let z2_6 = PI * PI / 6.0;
    if x == 1.0 {
        return z2_6;
    }
    if x == -1.0 {
        return -PI * PI / 12.0;
    }
    if x < -1.0 {
        // Li2(x) = -pi^2/6 - ln^2(-x)/2 - Li2(1/x)
        let l = (-x).ln();
        return -z2_6 - 0.5 * l * l - dilog_inner(1.0 / x);
    }
    if x < -0.5 {
        // Landen: Li2(x) = -Li2(x/(x-1)) - ln^2(1-x)/2, and x/(x-1) in [1/3, 1/2]
        let y = x / (x - 1.0);
        let l = (1.0 - x).ln();
        return -dilog_series(y) - 0.5 * l * l;
    }
    if x <= 0.5 {
        return dilog_series(x);
    }
    // reflection: Li2(x) = pi^2/6 - ln(x) ln(1-x) - Li2(1-x), 1-x in (0, 1/2)
    z2_6 - x.ln() * (1.0 - x).ln() - dilog_series(1.0 - x)
}

/// `Li_2(-e^y)` for any real `y`, without forming `e^y`.
///
/// For `y > 0` the inversion identity gives
/// `Li_2(-e^y) = -pi^2/6 - y^2/2 - Li_2(-e^{-y})`, keeping the argument of
/// the series branch in `[-1, 0)` however large `y` is.
pub fn dilog_neg_exp(y: f64) -> f64 {
    if y > 0.0 {
        -PI * PI / 6.0 - 0.5 * y * y - dilog_inner(-(-y).exp())
    } else {
        dilog_inner(-y.exp())
    }
}

// Stirling coefficients B_{2j} / (2j (2j-1)) for ln Gamma.
const STIRLING: [f64; 8] = [
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360360.0,
    1.0 / 156.0,
    -3617.0 / 122400.0,
];

/// `ln Gamma(x)` for `x >= 12` by the Stirling series.
fn ln_gamma_stirling(x: f64) -> f64 {
    let mut s = (x - 0.5) * x.ln() - x + 0.5 * (2.0 * PI).ln();
    let x2 = x * x;
    let mut xp = x;
    for c in STIRLING {
        s += c / xp;
        xp *= x2;
    }
    s
}

/// Gamma function for `x > 0` (Stirling plus upward recursion).
pub fn gamma_fn(x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(CoreError::Domain(format!("gamma requires x > 0, got {x}")));
    }
    let mut shift = 1.0f64;
    let mut y = x;
    while y < 12.0 {
        shift *= y;
        y += 1.0;
    }
    Ok(ln_gamma_stirling(y).exp() / shift)
}
