//! Factorial moment measures and densities of the STINR and SINR processes.

use crate::error::{domain, Error, Result};
use crate::kernels::{integral_i, integral_i_ratio, integral_j, PathLossParams};
use crate::qmc::{qmc_integrate, Estimate, QmcConfig, QuadConfig, MAX_SOBOL_DIM};
use crate::special::{factorial, ln_gamma, simplex_slack};

/// Slack below which a threshold vector counts as outside the simplex.
pub const SIMPLEX_TOL: f64 = 1e-12;

/// Channel-level parameters shared by every analytic quantity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelParams {
    pub path_loss: PathLossParams,
    /// Noise power `W` (linear).
    pub noise: f64,
    /// Interference factor `γ ∈ (0, 1]`.
    pub gamma: f64,
    /// Propagation constant `a`.
    pub a: f64,
}

impl ChannelParams {
    pub fn new(path_loss: PathLossParams, noise: f64, gamma: f64, a: f64) -> Result<Self> {
        let p = ChannelParams {
            path_loss,
            noise,
            gamma,
            a,
        };
        p.validate()?;
        Ok(p)
    }

    /// Interference-limited channel (`W = 0`, `γ = 1`, `a = 1`).
    pub fn interference_limited(beta: f64) -> Result<Self> {
        Self::new(PathLossParams::new(beta, 1.0)?, 0.0, 1.0, 1.0)
    }

    pub fn validate(&self) -> Result<()> {
        self.path_loss.validate()?;
        if !(self.noise >= 0.0 && self.noise.is_finite()) {
            return Err(domain(format!("noise power must be >= 0, got {}", self.noise)));
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(domain(format!("interference factor must lie in (0, 1], got {}", self.gamma)));
        }
        if !(self.a > 0.0 && self.a.is_finite()) {
            return Err(domain(format!("propagation constant must be positive, got {}", self.a)));
        }
        Ok(())
    }

    pub fn beta(&self) -> f64 {
        self.path_loss.beta
    }

    pub fn alpha(&self) -> f64 {
        self.path_loss.alpha()
    }

    /// `(W/γ) a^{-β/2}`, the argument of `I_{n,β}`.
    pub fn noise_argument(&self) -> f64 {
        if self.noise == 0.0 {
            return 0.0;
        }
        self.noise / self.gamma * self.a.powf(-self.beta() / 2.0)
    }

    /// `Ī_{n,β}((W/γ) a^{-β/2})`.
    pub fn noise_ratio(&self, n: usize, quad: &QuadConfig) -> Result<f64> {
        integral_i_ratio(n, self.beta(), self.noise_argument(), quad)
    }

    /// `I_{n,β}((W/γ) a^{-β/2})`.
    pub fn noise_integral(&self, n: usize, quad: &QuadConfig) -> Result<f64> {
        integral_i(n, self.beta(), self.noise_argument(), quad)
    }
}

/// Order `n` and STINR thresholds `t'₁,…,t'ₙ`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentQuery {
    pub thresholds: Vec<f64>,
}

impl MomentQuery {
    pub fn new(thresholds: Vec<f64>) -> Result<Self> {
        if thresholds.is_empty() {
            return Err(domain("a moment query needs at least one threshold"));
        }
        if let Some(t) = thresholds.iter().find(|t| !(**t > 0.0 && t.is_finite())) {
            return Err(domain(format!("STINR thresholds must be positive, got {t}")));
        }
        Ok(MomentQuery { thresholds })
    }

    pub fn n(&self) -> usize {
        self.thresholds.len()
    }
}

/// `a = λπ E[(PS)^{2/β}] / K²`.
pub fn propagation_constant(lambda: f64, k: f64, beta: f64, moment: f64) -> Result<f64> {
    crate::kernels::check_beta(beta)?;
    for (name, v) in [("lambda", lambda), ("K", k), ("moment", moment)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(domain(format!("{name} must be positive, got {v}")));
        }
    }
    Ok(lambda * std::f64::consts::PI * moment / (k * k))
}

/// `z' = z / (1 + γz)`.
pub fn stinr_from_sinr(z: f64, gamma: f64) -> Result<f64> {
    if !(z >= 0.0) || !(gamma > 0.0) {
        return Err(domain(format!("need z >= 0 and gamma > 0, got z={z}, gamma={gamma}")));
    }
    if z.is_infinite() {
        return Ok(1.0 / gamma);
    }
    Ok(z / (1.0 + gamma * z))
}

/// `z = z' / (1 - γz')`, defined for `z' ∈ [0, 1/γ)`.
pub fn sinr_from_stinr(z_prime: f64, gamma: f64) -> Result<f64> {
    if !(z_prime >= 0.0) || !(gamma > 0.0) || gamma * z_prime >= 1.0 {
        return Err(domain(format!(
            "STINR must lie in [0, 1/gamma), got {z_prime} with gamma={gamma}"
        )));
    }
    Ok(z_prime / (1.0 - gamma * z_prime))
}

/// `t̂_i = γt'_i / (1 - γΣt'_j)`.
pub fn t_hat(thresholds: &[f64], gamma: f64) -> Result<Vec<f64>> {
    let slack = simplex_slack(thresholds, gamma);
    if slack <= SIMPLEX_TOL {
        return Err(Error::SimplexViolation(1.0 - slack));
    }
    Ok(thresholds.iter().map(|t| gamma * t / slack).collect())
}

/// `M'^{(n)}(t'₁,…,t'ₙ) = n! ∏t̂_i^{-2/β} I_{n,β}((W/γ)a^{-β/2}) J_{n,β}(t̂)`,
/// and exactly 0 once `γΣt' ≥ 1`.
pub fn factorial_moment_stinr(q: &MomentQuery, p: &ChannelParams, qmc: &QmcConfig) -> Result<Estimate> {
    p.validate()?;
    let n = q.n();
    let hat = match t_hat(&q.thresholds, p.gamma) {
        Ok(h) => h,
        Err(Error::SimplexViolation(_)) => return Ok(Estimate::zero()),
        Err(e) => return Err(e),
    };
    let alpha = p.alpha();
    let i_n = p.noise_integral(n, &QuadConfig::default())?;
    let log_hat: f64 = hat.iter().map(|h| -alpha * h.ln()).sum();
    let factor = factorial(n) * log_hat.exp() * i_n;
    Ok(integral_j(p.beta(), &hat, qmc)? * factor)
}

/// `M^{(n)}(t) = M'^{(n)}(t/(1+γt))`.
pub fn factorial_moment_sinr(ts: &[f64], p: &ChannelParams, qmc: &QmcConfig) -> Result<Estimate> {
    if let Some(t) = ts.iter().find(|t| !(**t > 0.0)) {
        return Err(domain(format!("SINR thresholds must be positive, got {t}")));
    }
    let primes = ts
        .iter()
        .map(|&t| stinr_from_sinr(t, p.gamma))
        .collect::<Result<Vec<_>>>()?;
    factorial_moment_stinr(&MomentQuery::new(primes)?, p, qmc)
}

/// Factorial moment density of order `n` with its `t`-independent factors
/// folded into `log_scale`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct DensityKernel {
    pub n: usize,
    pub alpha: f64,
    pub gamma: f64,
    log_scale: f64,
}

impl DensityKernel {
    pub fn new(n: usize, p: &ChannelParams, quad: &QuadConfig) -> Result<Self> {
        if n == 0 {
            return Err(domain("density order must be >= 1"));
        }
        let alpha = p.alpha();
        let nf = n as f64;
        // c_n = α^{n-1} Γ(n) / (Γ(nα) Γ(1-α)^n)
        let log_c = (nf - 1.0) * alpha.ln() + ln_gamma(nf) - ln_gamma(nf * alpha) - nf * ln_gamma(1.0 - alpha);
        let log_scale = log_c + p.noise_ratio(n, quad)?.ln() + nf * p.gamma.ln();
        Ok(DensityKernel {
            n,
            alpha,
            gamma: p.gamma,
            log_scale,
        })
    }

    /// `μ'^{(n)}(ts)` for positive `ts` of length `n`.
    pub fn eval(&self, ts: &[f64]) -> f64 {
        debug_assert_eq!(ts.len(), self.n);
        let slack = simplex_slack(ts, self.gamma);
        if slack <= SIMPLEX_TOL {
            return 0.0;
        }
        let mut log = self.log_scale + (self.n as f64 * self.alpha - 1.0) * slack.ln();
        for t in ts {
            log -= (self.alpha + 1.0) * (self.gamma * t).ln();
        }
        log.exp()
    }
}

/// Integral of `μ'^{(k+i)}(prefix, ζ) ∏h(ζ_m)` over `ζ ∈ (lower, ∞)^i`, where the
/// density confines `ζ` to the simplex.
///
/// The free coordinates are written `ζ_m = lower + ρX_m` with
/// `ρ = 1/γ - Σprefix - i·lower` and `X` Dirichlet(1,…,1,q), `q = (k+i)·2/β`,
/// which absorbs the `(1-γΣ)^{q-1}` factor exactly. A cube point `u ∈ (0,1)^i`
/// drives the stick-breaking construction of `X`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct TailKernel {
    density: DensityKernel,
    extra: usize,
    q: f64,
    log_norm: f64,
}

impl TailKernel {
    pub fn new(prefix_len: usize, extra: usize, p: &ChannelParams, quad: &QuadConfig) -> Result<Self> {
        let density = DensityKernel::new(prefix_len + extra, p, quad)?;
        let q = density.n as f64 * density.alpha;
        Ok(TailKernel {
            density,
            extra,
            q,
            log_norm: ln_gamma(q) - ln_gamma(extra as f64 + q),
        })
    }

    /// Slack `γρ` left after placing the prefix and `i` copies of `lower`.
    pub fn slack(&self, prefix: &[f64], lower: f64) -> f64 {
        let g = self.density.gamma;
        crate::special::compensated_sum(
            std::iter::once(1.0)
                .chain(prefix.iter().map(|z| -g * z))
                .chain(std::iter::repeat_n(-g * lower, self.extra)),
        )
    }

    /// Single-point estimator; its mean over `u` is the tail integral.
    pub fn sample<H: Fn(f64) -> f64>(&self, prefix: &[f64], lower: f64, u: &[f64], h: H) -> f64 {
        let d = &self.density;
        let slack = self.slack(prefix, lower);
        if slack <= SIMPLEX_TOL {
            return 0.0;
        }
        let rho = slack / d.gamma;
        let a1 = d.alpha + 1.0;
        let i = self.extra;
        let mut log = d.log_scale + self.log_norm + (self.q - 1.0) * slack.ln() + i as f64 * rho.ln();
        for z in prefix {
            log -= a1 * (d.gamma * z).ln();
        }
        let mut weight = 1.0;
        let mut rem = 1.0;
        for (m, um) in u.iter().take(i).enumerate() {
            let b = (i - m - 1) as f64 + self.q;
            let lu = um.ln() / b;
            let x = rem * -lu.exp_m1();
            rem *= lu.exp();
            let zeta = lower + rho * x;
            log -= a1 * (d.gamma * zeta).ln();
            weight *= h(zeta);
            if weight == 0.0 {
                return 0.0;
            }
        }
        weight * log.exp()
    }
}

fn check_density_args(ts: &[f64]) -> Result<()> {
    if ts.is_empty() {
        return Err(domain("density needs at least one coordinate"));
    }
    for &t in ts {
        if t == 0.0 {
            return Err(Error::Singular);
        }
        if !(t > 0.0 && t.is_finite()) {
            return Err(domain(format!("density coordinates must be positive, got {t}")));
        }
    }
    Ok(())
}

/// `μ'^{(n)}(t') = c_n Ī_{n,β} γⁿ ∏(γt'_i)^{-(2/β+1)} (1-γΣt')^{2n/β-1}` inside the
/// simplex, 0 outside.
pub fn moment_density(thresholds: &[f64], p: &ChannelParams) -> Result<f64> {
    p.validate()?;
    check_density_args(thresholds)?;
    Ok(DensityKernel::new(thresholds.len(), p, &QuadConfig::default())?.eval(thresholds))
}

/// `μ'_k^{(k+i)}(z)`: the moment density of order `k+i` integrated over the
/// last `i` coordinates on `(z_k, 1/γ)`.
pub fn partial_density(k: usize, i: usize, zs: &[f64], p: &ChannelParams, qmc: &QmcConfig) -> Result<Estimate> {
    p.validate()?;
    if k == 0 || zs.len() != k {
        return Err(domain(format!("partial density needs k = {} >= 1 coordinates", zs.len())));
    }
    check_density_args(zs)?;
    if i == 0 {
        return Ok(Estimate::exact(moment_density(zs, p)?));
    }
    if i > MAX_SOBOL_DIM {
        return Err(Error::UnsupportedDimension {
            dim: i,
            max: MAX_SOBOL_DIM,
        });
    }
    let kernel = TailKernel::new(k, i, p, &QuadConfig::default())?;
    let lower = zs[k - 1];
    if kernel.slack(zs, lower) <= SIMPLEX_TOL {
        return Ok(Estimate::zero());
    }
    qmc_integrate(|u| kernel.sample(zs, lower, u, |_| 1.0), i, qmc)
}
