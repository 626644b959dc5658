//! Symmetric sums, k-coverage probabilities, the coverage-number
//! distribution and the multi-tier reduction.

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::kernels::{c_prime, check_beta, integral_j, PathLossParams};
use crate::moments::{factorial_moment_sinr, ChannelParams, TailKernel, SIMPLEX_TOL};
use crate::qmc::{qmc_integrate, Estimate, QmcConfig, QuadConfig, MAX_SOBOL_DIM};
use crate::special::{binomial, factorial, gamma, gamma_lower};

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// Distribution of the fading variable `S` of a tier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "lowercase", deny_unknown_fields)]
pub enum Fading {
    Constant,
    Exponential { mean: f64 },
    /// `S = exp(σN - σ²/2)` with `σ = σ_dB ln(10)/10`, so `E[S] = 1`.
    Lognormal { sigma_db: f64 },
}

impl Fading {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Fading::Constant => Ok(()),
            Fading::Exponential { mean } if mean > 0.0 && mean.is_finite() => Ok(()),
            Fading::Lognormal { sigma_db } if sigma_db >= 0.0 && sigma_db.is_finite() => Ok(()),
            other => Err(domain(format!("invalid fading parameters {other:?}"))),
        }
    }

    /// Natural-log standard deviation of a lognormal law.
    pub fn lognormal_sigma(sigma_db: f64) -> f64 {
        sigma_db * std::f64::consts::LN_10 / 10.0
    }

    /// `E[S^p]`.
    pub fn moment(&self, p: f64) -> f64 {
        match *self {
            Fading::Constant => 1.0,
            Fading::Exponential { mean } => mean.powf(p) * gamma(1.0 + p),
            Fading::Lognormal { sigma_db } => {
                let s = Self::lognormal_sigma(sigma_db);
                (p * (p - 1.0) * s * s / 2.0).exp()
            }
        }
    }
}

/// One tier of base stations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TierSpec {
    /// Stations per unit area.
    pub lambda: f64,
    /// Transmit power `P`.
    pub power: f64,
    pub fading: Fading,
    /// SINR threshold of the tier (linear).
    pub tau: f64,
}

impl TierSpec {
    pub fn new(lambda: f64, power: f64, fading: Fading, tau: f64) -> Result<Self> {
        let t = TierSpec {
            lambda,
            power,
            fading,
            tau,
        };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("lambda", self.lambda), ("power", self.power), ("tau", self.tau)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(domain(format!("tier {name} must be positive, got {v}")));
            }
        }
        self.fading.validate()
    }

    /// `E[(PS)^{2/β}]`.
    pub fn ps_moment(&self, beta: f64) -> f64 {
        let alpha = 2.0 / beta;
        self.power.powf(alpha) * self.fading.moment(alpha)
    }
}

/// Full heterogeneous network model.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkScenario {
    pub path_loss: PathLossParams,
    /// Noise power `W`.
    pub noise: f64,
    /// Interference factor `γ`.
    pub gamma: f64,
    pub tiers: Vec<TierSpec>,
}

impl NetworkScenario {
    pub fn new(path_loss: PathLossParams, noise: f64, gamma: f64, tiers: Vec<TierSpec>) -> Result<Self> {
        let s = NetworkScenario {
            path_loss,
            noise,
            gamma,
            tiers,
        };
        s.validate()?;
        Ok(s)
    }

    /// One tier, `λ = 1`, `K = 1`, `P = S = 1`, `W = 0`, `γ = 1`.
    pub fn single_tier(beta: f64, tau: f64) -> Result<Self> {
        Self::new(
            PathLossParams::new(beta, 1.0)?,
            0.0,
            1.0,
            vec![TierSpec::new(1.0, 1.0, Fading::Constant, tau)?],
        )
    }

    pub fn validate(&self) -> Result<()> {
        self.path_loss.validate()?;
        if self.tiers.is_empty() {
            return Err(domain("a scenario needs at least one tier"));
        }
        for t in &self.tiers {
            t.validate()?;
        }
        if !(self.noise >= 0.0 && self.noise.is_finite()) {
            return Err(domain(format!("noise power must be >= 0, got {}", self.noise)));
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(domain(format!("interference factor must lie in (0, 1], got {}", self.gamma)));
        }
        Ok(())
    }

    pub fn is_single_tier(&self) -> bool {
        self.tiers.len() == 1
    }

    /// Copy with the threshold of tier `index` replaced.
    pub fn with_tau(&self, index: usize, tau: f64) -> Result<Self> {
        let mut s = self.clone();
        let t = s
            .tiers
            .get_mut(index)
            .ok_or_else(|| domain(format!("no tier with index {index}")))?;
        t.tau = tau;
        s.validate()?;
        Ok(s)
    }

    pub fn equivalent_network(&self) -> Result<EquivalentNetwork> {
        self.validate()?;
        let beta = self.path_loss.beta;
        let weights: Vec<f64> = self.tiers.iter().map(|t| t.lambda * t.ps_moment(beta)).collect();
        let lambda_star: f64 = weights.iter().sum();
        let k = self.path_loss.k;
        Ok(EquivalentNetwork {
            lambda_star,
            a: std::f64::consts::PI * lambda_star / (k * k),
            thresholds: self
                .tiers
                .iter()
                .zip(&weights)
                .map(|(t, w)| (t.tau, w / lambda_star))
                .collect(),
        })
    }

    pub fn channel(&self) -> Result<ChannelParams> {
        let eq = self.equivalent_network()?;
        ChannelParams::new(self.path_loss, self.noise, self.gamma, eq.a)
    }

    pub fn min_tau(&self) -> f64 {
        self.tiers.iter().map(|t| t.tau).fold(f64::INFINITY, f64::min)
    }

    /// Largest index `n` with a possibly non-zero `S_n`: `⌈1/(γ t_min)⌉`.
    pub fn n_max(&self) -> usize {
        n_max_for(self.gamma, self.min_tau())
    }
}

pub(crate) fn n_max_for(gamma: f64, tau_min: f64) -> usize {
    let x = 1.0 / (gamma * tau_min);
    if x >= 1e6 {
        return usize::MAX;
    }
    (x.ceil() as usize).max(1)
}

/// Canonical single-tier reduction.
#[derive(Debug, Clone, PartialEq)]
pub struct EquivalentNetwork {
    pub lambda_star: f64,
    pub a: f64,
    /// `(τ_j, P(T* = τ_j))`.
    pub thresholds: Vec<(f64, f64)>,
}

impl EquivalentNetwork {
    /// `E[T*]`.
    pub fn mean_threshold(&self) -> f64 {
        self.thresholds.iter().map(|(t, p)| t * p).sum()
    }
}

fn check_dimension(n: usize) -> Result<()> {
    if n > MAX_SOBOL_DIM + 1 {
        return Err(Error::Budget(format!(
            "S_{n} needs a {}-dimensional integral; at most {MAX_SOBOL_DIM} dimensions are supported",
            n - 1
        )));
    }
    Ok(())
}

/// `S_n` of a single tier with threshold `tau`:
/// `τ_n^{-2n/β} I_{n,β} J_{n,β}(τ_n,…,τ_n)`, `τ_n = γτ/(1-(n-1)γτ)`.
pub fn single_tier_sum(n: usize, tau: f64, p: &ChannelParams, qmc: &QmcConfig) -> Result<Estimate> {
    if n == 0 {
        return Ok(Estimate::exact(1.0));
    }
    if !(tau > 0.0) {
        return Err(domain(format!("threshold must be positive, got {tau}")));
    }
    let slack = 1.0 - (n - 1) as f64 * p.gamma * tau;
    if slack <= SIMPLEX_TOL {
        return Ok(Estimate::zero());
    }
    check_dimension(n)?;
    let tn = p.gamma * tau / slack;
    let factor = tn.powf(-(n as f64) * p.alpha()) * p.noise_integral(n, &QuadConfig::default())?;
    Ok(integral_j(p.beta(), &vec![tn; n], qmc)? * factor)
}

fn compositions(n: usize, parts: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if parts == 1 {
        prefix.push(n);
        out.push(prefix.clone());
        prefix.pop();
        return;
    }
    for c in 0..=n {
        prefix.push(c);
        compositions(n - c, parts - 1, prefix, out);
        prefix.pop();
    }
}

/// `S_n = E[C(N, n)]` with per-tier thresholds.
pub fn symmetric_sum(n: usize, s: &NetworkScenario, qmc: &QmcConfig) -> Result<Estimate> {
    let eq = s.equivalent_network()?;
    let p = s.channel()?;
    symmetric_sum_with(n, &eq, &p, qmc)
}

fn symmetric_sum_with(n: usize, eq: &EquivalentNetwork, p: &ChannelParams, qmc: &QmcConfig) -> Result<Estimate> {
    if n == 0 {
        return Ok(Estimate::exact(1.0));
    }
    if eq.thresholds.len() == 1 {
        return single_tier_sum(n, eq.thresholds[0].0, p, qmc);
    }
    let mut combos = Vec::new();
    compositions(n, eq.thresholds.len(), &mut Vec::new(), &mut combos);
    let mut total = Estimate::zero();
    for c in combos {
        let mut ts = Vec::with_capacity(n);
        let mut log_w = 0.0;
        for (&count, &(tau, prob)) in c.iter().zip(&eq.thresholds) {
            ts.extend(std::iter::repeat_n(tau, count));
            log_w += count as f64 * prob.ln() - factorial(count).ln();
        }
        let sinr_slack = ts.iter().map(|t| p.gamma * t / (1.0 + p.gamma * t)).sum::<f64>();
        if 1.0 - sinr_slack <= SIMPLEX_TOL {
            continue;
        }
        check_dimension(n)?;
        total = total + factorial_moment_sinr(&ts, p, qmc)? * log_w.exp();
    }
    Ok(total)
}

/// All symmetric sums `S_0 = 1, S_1, …, S_{n_max}` of a scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricSums {
    pub sums: Vec<Estimate>,
}

impl SymmetricSums {
    pub fn compute(s: &NetworkScenario, qmc: &QmcConfig) -> Result<Self> {
        let eq = s.equivalent_network()?;
        let p = s.channel()?;
        let n_max = s.n_max();
        if n_max == usize::MAX {
            return Err(Error::Budget("threshold too small: unbounded coverage number".into()));
        }
        let sums = (0..=n_max)
            .map(|n| symmetric_sum_with(n, &eq, &p, qmc))
            .collect::<Result<Vec<_>>>()?;
        Ok(SymmetricSums { sums })
    }

    pub fn single_tier(tau: f64, p: &ChannelParams, qmc: &QmcConfig) -> Result<Self> {
        let n_max = n_max_for(p.gamma, tau);
        if n_max == usize::MAX {
            return Err(Error::Budget("threshold too small: unbounded coverage number".into()));
        }
        let sums = (0..=n_max)
            .map(|n| single_tier_sum(n, tau, p, qmc))
            .collect::<Result<Vec<_>>>()?;
        Ok(SymmetricSums { sums })
    }

    pub fn n_max(&self) -> usize {
        self.sums.len() - 1
    }

    /// `Σ_{n≥k} (-1)^{n-k} C(n-1, k-1) S_n`, unclamped.
    pub fn k_coverage_raw(&self, k: usize) -> Estimate {
        (k.max(1)..=self.n_max())
            .map(|n| self.sums[n] * (sign(n - k) * binomial(n - 1, k - 1)))
            .sum()
    }

    /// `P^{(k)}` clamped to `[0, 1]`.
    pub fn k_coverage(&self, k: usize) -> Estimate {
        if k == 0 {
            return Estimate::exact(1.0);
        }
        clamp_probability(self.k_coverage_raw(k), &format!("P^({k})"))
    }

    /// Partial sums of the inclusion-exclusion series for `P^{(k)}`.
    pub fn k_coverage_partial_sums(&self, k: usize) -> Vec<f64> {
        let mut acc = 0.0;
        (k..=self.n_max())
            .map(|n| {
                acc += sign(n - k) * binomial(n - 1, k - 1) * self.sums[n].value;
                acc
            })
            .collect()
    }

    /// `P(N = k) = Σ_{n≥k} (-1)^{n-k} C(n, k) S_n`.
    pub fn pmf_raw(&self, k: usize) -> Estimate {
        (k..=self.n_max())
            .map(|n| self.sums[n] * (sign(n - k) * binomial(n, k)))
            .sum()
    }

    /// `E[z^N] = Σ (z-1)^n S_n`.
    pub fn pgf(&self, z: f64) -> f64 {
        self.sums
            .iter()
            .enumerate()
            .map(|(n, s)| if n == 0 { s.value } else { (z - 1.0).powi(n as i32) * s.value })
            .sum()
    }
}

fn sign(m: usize) -> f64 {
    if m % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

pub(crate) fn clamp_probability(e: Estimate, label: &str) -> Estimate {
    let excess = if e.value < 0.0 {
        -e.value
    } else if e.value > 1.0 {
        e.value - 1.0
    } else {
        return e;
    };
    if excess > 3.0 * e.std_error + 1e-12 {
        warn!("{label} = {} lies outside [0, 1] by more than 3 standard errors", e.value);
    }
    Estimate::new(e.value.clamp(0.0, 1.0), e.std_error)
}

/// `P^{(k)} = P(N ≥ k)` via inclusion-exclusion over `S_n`, `n ≤ ⌈1/(γ t_min)⌉`.
pub fn k_coverage(k: usize, s: &NetworkScenario, qmc: &QmcConfig) -> Result<Estimate> {
    if k == 0 {
        return Err(domain("k must be >= 1"));
    }
    if k > s.n_max() {
        s.validate()?;
        return Ok(Estimate::zero());
    }
    Ok(SymmetricSums::compute(s, qmc)?.k_coverage(k))
}

/// `P^{(k)}(τ)` for a single tier described by channel parameters.
pub fn single_tier_coverage(k: usize, tau: f64, p: &ChannelParams, qmc: &QmcConfig) -> Result<Estimate> {
    if k == 0 {
        return Err(domain("k must be >= 1"));
    }
    if k > n_max_for(p.gamma, tau) {
        return Ok(Estimate::zero());
    }
    Ok(SymmetricSums::single_tier(tau, p, qmc)?.k_coverage(k))
}

/// Distribution of the coverage number `N`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoverageDistribution {
    pub sums: SymmetricSums,
    /// `P(N = k)` for `k = 0..=n_max`; `P(N = 0)` completes the total to 1.
    pub pmf: Vec<Estimate>,
    /// `E[N] = S_1`.
    pub mean: Estimate,
}

impl CoverageDistribution {
    pub fn pgf(&self, z: f64) -> f64 {
        self.sums.pgf(z)
    }
}

pub fn coverage_count_distribution(s: &NetworkScenario, qmc: &QmcConfig) -> Result<CoverageDistribution> {
    let sums = SymmetricSums::compute(s, qmc)?;
    let mut pmf: Vec<Estimate> = (0..=sums.n_max()).map(|k| sums.pmf_raw(k)).collect();
    let rest: Estimate = pmf[1..].iter().copied().sum();
    pmf[0] = Estimate::new(1.0 - rest.value, rest.std_error);
    let mean = sums.sums.get(1).copied().unwrap_or_default();
    Ok(CoverageDistribution { sums, pmf, mean })
}

/// `1 + Σ_{n<1/(γτ')} (1/n!) ∫_{(τ',1/γ)^n} ∏(h(t'_i)-1) μ'^{(n)}(t') dt'`, i.e. `E[∏_{Z'>τ'} h(Z')]`.
pub fn pgf_expansion(
    h: &(dyn Fn(f64) -> f64 + Sync),
    tau_prime: f64,
    s: &NetworkScenario,
    qmc: &QmcConfig,
) -> Result<Estimate> {
    if !s.is_single_tier() {
        return Err(domain("the pgf expansion is implemented for single-tier scenarios"));
    }
    let p = s.channel()?;
    if !(tau_prime > 0.0 && p.gamma * tau_prime < 1.0) {
        return Err(domain(format!("tau' must lie in (0, 1/gamma), got {tau_prime}")));
    }
    let bound = 1.0 / (p.gamma * tau_prime);
    let n_max = (bound.ceil() as usize).saturating_sub(1);
    if n_max > MAX_SOBOL_DIM {
        return Err(Error::Budget(format!(
            "the expansion needs {n_max} terms; at most {MAX_SOBOL_DIM} are supported"
        )));
    }
    let quad = QuadConfig::default();
    let mut total = Estimate::exact(1.0);
    for n in 1..=n_max {
        let kernel = TailKernel::new(0, n, &p, &quad)?;
        if kernel.slack(&[], tau_prime) <= SIMPLEX_TOL {
            continue;
        }
        let term = qmc_integrate(|u| kernel.sample(&[], tau_prime, u, |z| h(z) - 1.0), n, qmc)?;
        total = total + term * (1.0 / factorial(n));
    }
    Ok(total)
}

/// `1/φ_β(ξ)` with `φ_β(ξ) = e^{-ξ} + ξ^{2/β} γ(1-2/β, ξ)`.
pub fn interference_factor_laplace(xi: f64, beta: f64) -> Result<f64> {
    check_beta(beta)?;
    if !(xi > 0.0 && xi.is_finite()) {
        return Err(domain(format!("xi must be positive, got {xi}")));
    }
    let alpha = 2.0 / beta;
    Ok(1.0 / ((-xi).exp() + xi.powf(alpha) * gamma_lower(1.0 - alpha, xi)))
}

/// `P^{(1)}(τ) = (γτ)^{-2/β}/C'(β)` for `γτ ≥ 1` and `W = 0`.
pub fn high_threshold_coverage(tau: f64, gamma: f64, beta: f64) -> Result<f64> {
    if !(gamma * tau >= 1.0) {
        return Err(domain("the closed form needs gamma * tau >= 1"));
    }
    Ok((gamma * tau).powf(-2.0 / beta) / c_prime(beta)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn qmc() -> QmcConfig {
        QmcConfig::default()
    }

    #[test]
    fn db_conversion() {
        assert_eq!(db_to_linear(0.0), 1.0);
        assert!((db_to_linear(-10.0) - 0.1).abs() < 1e-15);
        assert!((linear_to_db(db_to_linear(-9.5424)) + 9.5424).abs() < 1e-12);
    }

    #[test]
    fn fading_moments() {
        assert_eq!(Fading::Constant.moment(0.5), 1.0);
        assert!((Fading::Exponential { mean: 1.0 }.moment(0.5) - gamma(1.5)).abs() < 1e-15);
        assert!((Fading::Lognormal { sigma_db: 8.0 }.moment(1.0) - 1.0).abs() < 1e-15);
        assert!(Fading::Exponential { mean: -1.0 }.validate().is_err());
    }

    #[test]
    fn equivalent_network_examples() {
        let s = NetworkScenario::single_tier(3.0, 2.0).unwrap();
        let eq = s.equivalent_network().unwrap();
        assert_eq!(eq.lambda_star, 1.0);
        assert_eq!(eq.thresholds, vec![(2.0, 1.0)]);
        assert!((eq.a - PI).abs() < 1e-15);

        let two = NetworkScenario::new(
            PathLossParams::new(3.0, 1.0).unwrap(),
            0.0,
            1.0,
            vec![
                TierSpec::new(0.5, 100.0, Fading::Constant, 1.0).unwrap(),
                TierSpec::new(1.0, 1.0, Fading::Constant, 2.0).unwrap(),
            ],
        )
        .unwrap();
        let eq = two.equivalent_network().unwrap();
        let ratio = eq.thresholds[0].1 / eq.thresholds[1].1;
        assert!((ratio - 0.5 * 100f64.powf(2.0 / 3.0)).abs() < 1e-12);
        assert!((eq.thresholds.iter().map(|t| t.1).sum::<f64>() - 1.0).abs() < 1e-15);
        assert!(two.with_tau(0, 2.0).is_ok());
    }

    #[test]
    fn single_tier_sums() {
        let s = NetworkScenario::single_tier(4.0, 1.0).unwrap();
        let s1 = symmetric_sum(1, &s, &qmc()).unwrap();
        // a = π here; W = 0 so the sums do not depend on a.
        assert!((s1.value - 2.0 / PI).abs() < 1e-14);
        assert_eq!(symmetric_sum(2, &s, &qmc()).unwrap(), Estimate::zero());
    }

    #[test]
    fn closed_form_coverage_and_bounds() {
        for &beta in &[3.0, 4.0, 5.0] {
            for &tau in &[1.0, 2.0, 5.0] {
                let s = NetworkScenario::single_tier(beta, tau).unwrap();
                let p = k_coverage(1, &s, &qmc()).unwrap();
                let want = high_threshold_coverage(tau, 1.0, beta).unwrap();
                assert!((p.value - want).abs() < 1e-12 && p.std_error == 0.0);
                assert_eq!(k_coverage(2, &s, &qmc()).unwrap(), Estimate::zero());
            }
        }
        let s = NetworkScenario::single_tier(3.0, 0.3).unwrap();
        assert_eq!(s.n_max(), 4);
        assert_eq!(k_coverage(5, &s, &qmc()).unwrap(), Estimate::zero());
    }

    #[test]
    fn coverage_nested_and_decreasing() {
        let grid: Vec<f64> = (-5..=5).map(|d| db_to_linear(d as f64 * 2.0)).collect();
        let mut prev = vec![f64::INFINITY; 3];
        for &tau in &grid {
            let s = NetworkScenario::single_tier(3.0, tau).unwrap();
            let sums = SymmetricSums::compute(&s, &qmc()).unwrap();
            let ps: Vec<Estimate> = (1..=3).map(|k| sums.k_coverage(k)).collect();
            for k in 0..3 {
                let slack = 3.0 * ps[k].std_error + 1e-9;
                assert!(ps[k].value <= prev[k] + slack, "tau={tau} k={}", k + 1);
                if k > 0 {
                    assert!(ps[k].value <= ps[k - 1].value + slack);
                }
                prev[k] = ps[k].value;
            }
        }
    }

    #[test]
    fn two_tier_continuity() {
        let tau = 0.4;
        let single = NetworkScenario::single_tier(3.5, tau).unwrap();
        let two = NetworkScenario::new(
            single.path_loss,
            0.0,
            1.0,
            vec![
                TierSpec::new(0.5, 1.0, Fading::Constant, tau * (1.0 + 1e-9)).unwrap(),
                TierSpec::new(0.5, 1.0, Fading::Constant, tau).unwrap(),
            ],
        )
        .unwrap();
        for n in 1..=3 {
            let a = symmetric_sum(n, &single, &qmc()).unwrap();
            let b = symmetric_sum(n, &two, &qmc()).unwrap();
            assert!((a.value - b.value).abs() <= 3.0 * a.std_error.hypot(b.std_error) + 1e-6, "n={n}: {a:?} {b:?}");
        }
    }

    #[test]
    fn distribution_identities() {
        let s = NetworkScenario::single_tier(3.0, 0.25).unwrap();
        let d = coverage_count_distribution(&s, &qmc()).unwrap();
        assert_eq!(d.pgf(1.0), 1.0);
        let total: f64 = (0..=d.sums.n_max()).map(|k| d.sums.pmf_raw(k).value).sum();
        assert!((total - 1.0).abs() < 1e-9);
        assert!((d.pmf.iter().map(|e| e.value).sum::<f64>() - 1.0).abs() < 1e-12);
        let h = 1e-6;
        let slope = (d.pgf(1.0) - d.pgf(1.0 - h)) / h;
        assert!((slope - d.mean.value).abs() < 1e-4 * d.mean.value);
        let mean_from_pmf: f64 = d.pmf.iter().enumerate().map(|(k, e)| k as f64 * e.value).sum();
        assert!((mean_from_pmf - d.mean.value).abs() < 1e-9);

        let high = NetworkScenario::single_tier(3.0, 2.0).unwrap();
        let d = coverage_count_distribution(&high, &qmc()).unwrap();
        assert_eq!(d.pmf.len(), 2);
        assert_eq!(d.pmf[1], k_coverage(1, &high, &qmc()).unwrap());
    }

    #[test]
    fn pgf_expansion_identities() {
        let tau: f64 = 0.25;
        let s = NetworkScenario::single_tier(3.0, tau).unwrap();
        let q = qmc().with_points(1 << 14);
        let tp = tau / (1.0 + tau);
        assert_eq!(pgf_expansion(&|_| 1.0, tp, &s, &q).unwrap(), Estimate::exact(1.0));
        let void = pgf_expansion(&|_| 0.0, tp, &s, &q).unwrap();
        let p1 = k_coverage(1, &s, &q).unwrap();
        assert!((void.value - (1.0 - p1.value)).abs() <= 3.0 * void.std_error.hypot(p1.std_error) + 1e-4, "{void:?} {p1:?}");
        let d = coverage_count_distribution(&s, &q).unwrap();
        for &z in &[0.3, 0.7] {
            let e = pgf_expansion(&move |_| z, tp, &s, &q).unwrap();
            assert!((e.value - d.pgf(z)).abs() <= 3.0 * e.std_error + 1e-3, "z={z}: {e:?} vs {}", d.pgf(z));
        }
    }

    #[test]
    fn interference_factor_values() {
        assert!((interference_factor_laplace(1e-12, 4.0).unwrap() - 1.0).abs() < 1e-5);
        let want = 1.0 / ((-1f64).exp() + 1.493_648_265_624_854);
        assert!((interference_factor_laplace(1.0, 4.0).unwrap() - want).abs() < 1e-14);
        assert!(interference_factor_laplace(0.0, 4.0).is_err());
    }
}
