//! Special functions not covered by `statrs`: the Gauss hypergeometric
//! function on the negative real axis, plus thin wrappers that keep call
//! sites short.

use statrs::function::{beta as sbeta, gamma as sgamma};

use crate::error::{Error, Result};

pub fn gamma(x: f64) -> f64 {
    sgamma::gamma(x)
}

pub fn ln_gamma(x: f64) -> f64 {
    sgamma::ln_gamma(x)
}

pub fn beta(a: f64, b: f64) -> f64 {
    sbeta::beta(a, b)
}

pub fn ln_beta(a: f64, b: f64) -> f64 {
    sbeta::ln_beta(a, b)
}

/// Lower incomplete gamma `∫₀^x t^{a-1} e^{-t} dt` for `a > 0`, `x ≥ 0`.
pub fn gamma_lower(a: f64, x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    sgamma::gamma_li(a, x)
}

/// `ln C(n, k)` is never needed beyond small arguments, so binomials are
/// evaluated exactly in floating point.
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0;
    for j in 0..k {
        acc = acc * (n - j) as f64 / (j + 1) as f64;
    }
    acc.round()
}

pub fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, j| acc * j as f64)
}

/// Neumaier-compensated sum.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(xs: I) -> f64 {
    let mut sum = 0.0;
    let mut c = 0.0;
    for x in xs {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            c += (sum - t) + x;
        } else {
            c += (x - t) + sum;
        }
        sum = t;
    }
    sum + c
}

/// `1 - γ Σ t` with compensated summation.
pub fn simplex_slack(ts: &[f64], gamma: f64) -> f64 {
    compensated_sum(std::iter::once(1.0).chain(ts.iter().map(|t| -gamma * t)))
}

const SERIES_LIMIT: f64 = 0.9;
const MAX_SERIES_TERMS: usize = 20_000;

fn is_nonpositive_integer(x: f64) -> bool {
    x <= 0.0 && x == x.round()
}

fn series(a: f64, b: f64, c: f64, z: f64) -> Result<f64> {
    let mut term = 1.0;
    let mut sum = 1.0;
    for n in 0..MAX_SERIES_TERMS {
        let nf = n as f64;
        term *= (a + nf) * (b + nf) / ((c + nf) * (nf + 1.0)) * z;
        sum += term;
        if term == 0.0 || term.abs() <= 1e-17 * sum.abs() {
            return Ok(sum);
        }
    }
    Err(Error::Hypergeometric(format!(
        "series for 2F1({a}, {b}; {c}; {z}) did not converge"
    )))
}

/// Gauss hypergeometric function `₂F₁(a, b; c; z)` for real `z < 0.9`.
///
/// The power series is used for `|z| < 0.9`, the `1/z` connection formula
/// for `z < -1/0.9`, and the Pfaff transformation `z ↦ z/(z-1)` in between.
pub fn hyp2f1(a: f64, b: f64, c: f64, z: f64) -> Result<f64> {
    if !(a.is_finite() && b.is_finite() && c.is_finite() && z.is_finite()) {
        return Err(Error::Hypergeometric("non-finite argument".into()));
    }
    if is_nonpositive_integer(c) {
        return Err(Error::Hypergeometric(format!("c = {c} is a pole")));
    }
    if z.abs() < SERIES_LIMIT {
        return series(a, b, c, z);
    }
    if z >= SERIES_LIMIT {
        return Err(Error::Hypergeometric(format!(
            "argument {z} is outside the supported range"
        )));
    }
    if z > -1.0 / SERIES_LIMIT {
        // Pfaff: w = z/(z-1) lies in [0.47, 0.53] here.
        let w = z / (z - 1.0);
        return Ok((1.0 - z).powf(-a) * series(a, c - b, c, w)?);
    }
    let d = a - b;
    if d == d.round() {
        return Err(Error::Hypergeometric(format!(
            "a - b = {d} is an integer; the 1/z connection is degenerate"
        )));
    }
    let inv = 1.0 / z;
    let mz = -z;
    let first = gamma(c) * gamma(b - a) / (gamma(b) * gamma(c - a))
        * mz.powf(-a)
        * series(a, a - c + 1.0, a - b + 1.0, inv)?;
    let second = gamma(c) * gamma(a - b) / (gamma(a) * gamma(c - b))
        * mz.powf(-b)
        * series(b, b - c + 1.0, b - a + 1.0, inv)?;
    let v = first + second;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Hypergeometric(format!(
            "2F1({a}, {b}; {c}; {z}) overflowed"
        )))
    }
}
