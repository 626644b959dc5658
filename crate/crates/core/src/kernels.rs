//! The special integrals `C'(β)`, `I_{n,β}(x)` and `J_{n,β}(x₁,…,xₙ)`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{domain, Result};
use crate::qmc::{qmc_integrate, quad_halfline, Estimate, QmcConfig, QuadConfig};
use crate::special::{beta as beta_fn, gamma, hyp2f1, ln_beta, ln_gamma};

/// Path-loss model `l(x) = (K|x|)^β`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathLossParams {
    pub beta: f64,
    #[serde(rename = "K")]
    pub k: f64,
}

impl PathLossParams {
    pub fn new(beta: f64, k: f64) -> Result<Self> {
        let p = PathLossParams { beta, k };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        check_beta(self.beta)?;
        if !(self.k > 0.0 && self.k.is_finite()) {
            return Err(domain(format!("path-loss constant K must be positive, got {}", self.k)));
        }
        Ok(())
    }

    /// `2/β`.
    pub fn alpha(&self) -> f64 {
        2.0 / self.beta
    }
}

pub(crate) fn check_beta(beta: f64) -> Result<()> {
    if beta > 2.0 && beta.is_finite() {
        Ok(())
    } else {
        Err(domain(format!("path-loss exponent must exceed 2, got {beta}")))
    }
}

/// `C'(β) = 2π / (β sin(2π/β))`.
pub fn c_prime(beta: f64) -> Result<f64> {
    check_beta(beta)?;
    let w = 2.0 * PI / beta;
    Ok(w / w.sin())
}

/// `I_{n,β}(0) = 2^{n-1} / (β^{n-1} C'(β)^n)`.
pub fn integral_i_at_zero(n: usize, beta: f64) -> Result<f64> {
    if n == 0 {
        return Err(domain("integral_I needs n >= 1"));
    }
    let c = c_prime(beta)?;
    let n1 = (n - 1) as f64;
    Ok(((n1) * (2.0 / beta).ln() - n as f64 * c.ln()).exp())
}

/// Noise ratio `Ī_{n,β}(x) = I_{n,β}(x) / I_{n,β}(0)`, in `(0, 1]`.
pub fn integral_i_ratio(n: usize, beta: f64, x: f64, quad: &QuadConfig) -> Result<f64> {
    if n == 0 {
        return Err(domain("integral_I needs n >= 1"));
    }
    check_beta(beta)?;
    if !(x >= 0.0 && x.is_finite()) {
        return Err(domain(format!("integral_I needs x >= 0, got {x}")));
    }
    if x == 0.0 {
        return Ok(1.0);
    }
    let scale = x * gamma(1.0 - 2.0 / beta).powf(-beta / 2.0);
    // Normalised by ∫u^{2n-1}e^{-u²}du = Γ(n)/2 so that the ratio is returned.
    let log_norm = std::f64::consts::LN_2 - ln_gamma(n as f64);
    let two_n1 = (2 * n - 1) as f64;
    let g = |u: f64| {
        if u <= 0.0 {
            return 0.0;
        }
        (two_n1 * u.ln() - u * u - scale * u.powf(beta) + log_norm).exp()
    };
    quad_halfline(g, quad)
}

/// `I_{n,β}(x) = 2ⁿ∫₀^∞ u^{2n-1} exp(-u² - u^β x Γ(1-2/β)^{-β/2}) du / (β^{n-1} C'(β)ⁿ (n-1)!)`.
pub fn integral_i(n: usize, beta: f64, x: f64, quad: &QuadConfig) -> Result<f64> {
    Ok(integral_i_at_zero(n, beta)? * integral_i_ratio(n, beta, x, quad)?)
}

/// Maps `(v₁,…,v_{n-1}) ∈ [0,1]^{n-1}` to the simplex point `(η₁,…,ηₙ)`:
/// `η₁ = v₁⋯v_{n-1}`, `η_i = (1-v_{i-1}) v_i⋯v_{n-1}`, `ηₙ = 1-v_{n-1}`.
pub fn eta_from_v(v: &[f64]) -> Vec<f64> {
    let mut eta = vec![0.0; v.len() + 1];
    fill_eta(v, &mut eta);
    eta
}

pub(crate) fn fill_eta(v: &[f64], eta: &mut [f64]) {
    let m = v.len();
    let mut suffix = 1.0;
    for i in (0..=m).rev() {
        let head = if i == 0 { 1.0 } else { 1.0 - v[i - 1] };
        eta[i] = head * suffix;
        if i > 0 {
            suffix *= v[i - 1];
        }
    }
}

fn check_xs(beta: f64, xs: &[f64]) -> Result<()> {
    check_beta(beta)?;
    if xs.is_empty() {
        return Err(domain("J needs at least one argument"));
    }
    if let Some(x) = xs.iter().find(|x| !(**x >= 0.0 && x.is_finite())) {
        return Err(domain(format!("J arguments must be finite and >= 0, got {x}")));
    }
    Ok(())
}

/// QMC estimate of
/// `J_{n,β}(x) = (1+Σx)/n ∫_{[0,1]^{n-1}} ∏ v_i^{i(2/β+1)-1}(1-v_i)^{2/β} / ∏(x_i+η_i) dv`.
///
/// The factor `v_i^{c_i-1}` is absorbed by `v_i = u_i^{1/c_i}`, `c_i = i(2/β+1)`.
pub fn integral_j(beta: f64, xs: &[f64], qmc: &QmcConfig) -> Result<Estimate> {
    check_xs(beta, xs)?;
    let n = xs.len();
    if n == 1 {
        return Ok(Estimate::exact(1.0));
    }
    let alpha = 2.0 / beta;
    let exps: Vec<f64> = (1..n).map(|i| i as f64 * (alpha + 1.0)).collect();
    let prefactor = (1.0 + xs.iter().sum::<f64>()) / n as f64 / exps.iter().product::<f64>();
    qmc_integrate(
        |u| {
            let mut v = [0.0; 32];
            let mut eta = [0.0; 33];
            let mut w = prefactor;
            for i in 0..n - 1 {
                let lu = u[i].ln() / exps[i];
                v[i] = lu.exp();
                w *= (-lu.exp_m1()).powf(alpha);
            }
            fill_eta(&v[..n - 1], &mut eta[..n]);
            for i in 0..n {
                w /= xs[i] + eta[i];
            }
            w
        },
        n - 1,
        qmc,
    )
}

/// `∫₀¹ v^α(1-v)^α/(x+v) dv = B(α+1,α+1) ₂F₁(1, α+1; 2(α+1); -1/x) / x`.
fn j2_half(alpha: f64, x: f64) -> Result<f64> {
    let a1 = alpha + 1.0;
    Ok(beta_fn(a1, a1) * hyp2f1(1.0, a1, 2.0 * a1, -1.0 / x)? / x)
}

/// `J_{2,β}(x₁,x₂)` through the Beta/₂F₁ closed form.
pub fn integral_j2_closed(beta: f64, x1: f64, x2: f64) -> Result<f64> {
    check_beta(beta)?;
    if !(x1 > 0.0 && x2 > 0.0 && x1.is_finite() && x2.is_finite()) {
        return Err(domain("closed-form J2 needs x1, x2 > 0"));
    }
    let alpha = 2.0 / beta;
    Ok(0.5 * (j2_half(alpha, x1)? + j2_half(alpha, x2)?))
}

/// Monte Carlo estimate of `J_{n,β}` from independent beta variables:
/// `1-v_i ~ Beta(2/β+1, i(2/β+1))`, `J = E[H] ∏B(1+2/β, i(2/β+1)) / n` with
/// `H = (1+Σx)/∏(x_i+η_i)`.
pub fn integral_j_beta_mc(beta: f64, xs: &[f64], sample_count: usize, seed: u64) -> Result<Estimate> {
    check_xs(beta, xs)?;
    let n = xs.len();
    if n == 1 {
        return Ok(Estimate::exact(1.0));
    }
    if sample_count < 2 {
        return Err(domain("beta Monte Carlo needs at least two samples"));
    }
    let a = 2.0 / beta + 1.0;
    let dists = (1..n)
        .map(|i| Beta::new(a, i as f64 * a).map_err(|e| domain(e.to_string())))
        .collect::<Result<Vec<_>>>()?;
    let log_norm: f64 = (1..n).map(|i| ln_beta(a, i as f64 * a)).sum();
    let factor = log_norm.exp() / n as f64;
    let total = 1.0 + xs.iter().sum::<f64>();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v = vec![0.0; n - 1];
    let mut eta = vec![0.0; n];
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for _ in 0..sample_count {
        for (vi, d) in v.iter_mut().zip(&dists) {
            *vi = 1.0 - d.sample(&mut rng);
        }
        fill_eta(&v, &mut eta);
        let h = total / xs.iter().zip(&eta).map(|(x, e)| x + e).product::<f64>();
        sum += h;
        sum_sq += h * h;
    }
    let m = sample_count as f64;
    let mean = sum / m;
    let var = (sum_sq / m - mean * mean).max(0.0) * m / (m - 1.0);
    Ok(Estimate::new(mean * factor, (var / m).sqrt() * factor))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn qmc() -> QmcConfig {
        QmcConfig::default()
    }

    #[test]
    fn c_prime_values() {
        assert!((c_prime(4.0).unwrap() - PI / 2.0).abs() < 1e-15);
        assert!((c_prime(3.0).unwrap() - 4.0 * PI / (3.0 * 3f64.sqrt())).abs() < 1e-14);
        assert!((c_prime(1e6).unwrap() - 1.0).abs() < 1e-9);
        assert!(c_prime(2.0).is_err());
        assert!(c_prime(1.5).is_err());
        for &b in &[2.5, 3.0, 3.5, 4.0, 5.0, 7.0] {
            let g = gamma(1.0 - 2.0 / b) * gamma(1.0 + 2.0 / b);
            assert!((c_prime(b).unwrap() - g).abs() < 1e-12, "beta={b}");
        }
    }

    #[test]
    fn integral_i_at_zero_matches_closed_form() {
        let q = QuadConfig::default();
        assert!((integral_i(1, 4.0, 0.0, &q).unwrap() - 2.0 / PI).abs() < 1e-14);
        assert!((integral_i(2, 4.0, 0.0, &q).unwrap() - 2.0 / (PI * PI)).abs() < 1e-14);
        for n in 1..=6 {
            for &b in &[2.5f64, 3.0, 4.0, 5.0] {
                let want = 2f64.powi(n as i32 - 1) / (b.powi(n as i32 - 1) * c_prime(b).unwrap().powi(n as i32));
                assert!((integral_i(n, b, 0.0, &q).unwrap() - want).abs() < 1e-10);
                // The quadrature path at a vanishing argument agrees too.
                let tiny = integral_i(n, b, 1e-300, &q).unwrap();
                assert!((tiny - want).abs() < 1e-9 * want.max(1.0), "n={n} b={b}");
            }
        }
    }

    fn trapezoid(g: impl Fn(f64) -> f64, upper: f64) -> f64 {
        let mut steps = 1024usize;
        let mut prev = f64::NAN;
        loop {
            let h = upper / steps as f64;
            let mut s = 0.5 * (g(0.0) + g(upper));
            for j in 1..steps {
                s += g(j as f64 * h);
            }
            let cur = s * h;
            if (cur - prev).abs() < 1e-11 {
                return cur;
            }
            prev = cur;
            steps *= 2;
        }
    }

    #[test]
    fn integral_i_matches_trapezoid_oracle() {
        let (n, b, x) = (2usize, 3.0f64, 0.7f64);
        let scale = x * gamma(1.0 - 2.0 / b).powf(-b / 2.0);
        let raw = trapezoid(|u| u.powi(3) * (-u * u - scale * u.powf(b)).exp(), 12.0);
        let want = 4.0 * raw / (b * c_prime(b).unwrap().powi(2));
        let got = integral_i(n, b, x, &QuadConfig::default()).unwrap();
        assert!((got - want).abs() < 1e-10, "{got} vs {want}");
    }

    #[test]
    fn integral_i_decreasing() {
        let q = QuadConfig::default();
        for n in 1..=4 {
            let mut prev = f64::INFINITY;
            for j in 0..12 {
                let v = integral_i(n, 3.5, j as f64 * 0.3, &q).unwrap();
                assert!(v > 0.0 && v < prev);
                prev = v;
            }
        }
        assert!(integral_i(0, 3.0, 0.0, &q).is_err());
        assert!(integral_i(1, 3.0, -1.0, &q).is_err());
    }

    #[test]
    fn eta_examples() {
        assert_eq!(eta_from_v(&[]), vec![1.0]);
        assert_eq!(eta_from_v(&[0.5]), vec![0.5, 0.5]);
        let e = eta_from_v(&[0.2, 0.5]);
        for (a, b) in e.iter().zip([0.1, 0.4, 0.5]) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    proptest! {
        #[test]
        fn eta_on_simplex(v in proptest::collection::vec(0.0f64..=1.0, 1..8)) {
            let e = eta_from_v(&v);
            prop_assert_eq!(e.len(), v.len() + 1);
            prop_assert!(e.iter().all(|x| (0.0..=1.0).contains(x)));
            prop_assert!((e.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn j_single_argument_is_one() {
        assert_eq!(integral_j(3.0, &[0.37], &qmc()).unwrap(), Estimate::exact(1.0));
        assert_eq!(integral_j_beta_mc(3.0, &[5.0], 10, 1).unwrap(), Estimate::exact(1.0));
        assert!(integral_j(3.0, &[], &qmc()).is_err());
        assert!(integral_j(3.0, &[-0.1, 1.0], &qmc()).is_err());
    }

    // Direct quadrature of the defining n=2 integral.
    fn j2_quadrature(beta: f64, x1: f64, x2: f64) -> f64 {
        let a = 2.0 / beta;
        let cfg = QuadConfig {
            abs_tol: 1e-13,
            rel_tol: 1e-12,
            max_refinements: 5000,
        };
        let g = |v: f64| v.powf(a) * (1.0 - v).powf(a) / ((x1 + v) * (x2 + 1.0 - v));
        (1.0 + x1 + x2) / 2.0 * crate::qmc::quad_interval(g, 0.0, 1.0, &cfg).unwrap()
    }

    #[test]
    fn j2_closed_form_matches_quadrature_and_qmc() {
        let q = qmc().with_points(1 << 15);
        for &(b, x1, x2) in &[(3.0, 1.0, 1.0), (5.0, 0.3, 2.0), (3.0, 0.5, 0.5), (4.0, 0.05, 7.0), (2.5, 0.9, 1.2)] {
            let closed = integral_j2_closed(b, x1, x2).unwrap();
            assert!((closed - j2_quadrature(b, x1, x2)).abs() < 1e-10, "beta={b}");
            assert_eq!(closed, integral_j2_closed(b, x2, x1).unwrap());
            let est = integral_j(b, &[x1, x2], &q).unwrap();
            assert!((est.value - closed).abs() < 1e-4, "beta={b} x=({x1},{x2}): {est:?} vs {closed}");
        }
    }

    #[test]
    fn j_permutation_invariance() {
        let q = qmc();
        let a = integral_j(3.0, &[0.4, 0.7], &q).unwrap();
        let b = integral_j(3.0, &[0.7, 0.4], &q).unwrap();
        assert!((a.value - b.value).abs() <= 3.0 * a.std_error.hypot(b.std_error) + 1e-12);
        let xs = [0.2, 1.3, 0.6, 0.9];
        let base = integral_j(4.0, &xs, &q).unwrap();
        for perm in [[3, 2, 1, 0], [1, 0, 3, 2], [2, 3, 0, 1]] {
            let p: Vec<f64> = perm.iter().map(|&i| xs[i]).collect();
            let e = integral_j(4.0, &p, &q).unwrap();
            assert!((e.value - base.value).abs() <= 3.0 * e.std_error.hypot(base.std_error) + 1e-12);
        }
    }

    #[test]
    fn beta_mc_agrees_with_qmc() {
        let q = qmc().with_points(1 << 14);
        for &(b, ref xs) in &[(3.0, vec![0.4, 0.7]), (5.0, vec![1.0, 1.0, 1.0]), (4.0, vec![0.3, 0.2, 0.5, 0.8])] {
            let mc = integral_j_beta_mc(b, xs, 400_000, 7).unwrap();
            let qm = integral_j(b, xs, &q).unwrap();
            let tol = 3.0 * mc.std_error.hypot(qm.std_error);
            assert!((mc.value - qm.value).abs() <= tol, "beta={b} {mc:?} vs {qm:?}");
        }
    }

    #[test]
    fn zero_argument_is_integrable() {
        let e = integral_j(3.0, &[0.0, 0.5], &qmc()).unwrap();
        assert!(e.value.is_finite() && e.value > 0.0);
    }
}
