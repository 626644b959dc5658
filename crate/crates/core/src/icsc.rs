//! Order statistics of the STINR process and coverage under interference
//! cancellation (IC) and signal combination (SC).

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use crate::coverage::{clamp_probability, single_tier_coverage};
use crate::error::{domain, Error, Result};
use crate::moments::{partial_density, stinr_from_sinr, ChannelParams, TailKernel};
use crate::qmc::{qmc_integrate, Estimate, QmcConfig, QuadConfig, MAX_SOBOL_DIM};
use crate::special::{factorial, gamma};

/// Decodability requirement on the cancelled (helper) signals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IcCondition {
    /// No decodability requirement.
    None,
    /// Successive cancellation: each helper is decodable once the stronger
    /// helpers have been removed.
    Sic,
    /// Independent cancellation: each helper is decodable on its own.
    Iic,
}

impl FromStr for IcCondition {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "none" => Ok(IcCondition::None),
            "sic" => Ok(IcCondition::Sic),
            "iic" => Ok(IcCondition::Iic),
            other => Err(domain(format!("unknown cancellation condition '{other}'"))),
        }
    }
}

impl fmt::Display for IcCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            IcCondition::None => "none",
            IcCondition::Sic => "sic",
            IcCondition::Iic => "iic",
        })
    }
}

/// Coverage query over the `k` strongest stations.
///
/// Signals indexed by `combine_set` (1-based, by decreasing strength) are
/// combined; the remaining signals among the `k` strongest are cancelled.
/// Coverage holds when
/// `Σ_{i∈U} Z'_(i) + γ̄τ' Σ_{j∉U, j≤k} Z'_(j) > τ'`.
/// With a decodability condition, the strongest combined signal `p = min U`
/// is the primary and every other index in `1..=k` is a helper that must be
/// decodable at `ε'`; the user is then covered if `Z'_(p) > τ'` on its own,
/// or if the helpers are decodable and the combined event holds.
#[derive(Debug, Clone, PartialEq)]
pub struct IcscQuery {
    pub k: usize,
    pub combine_set: Vec<usize>,
    /// Target SINR (linear).
    pub tau: f64,
    /// Decoding SINR threshold (linear).
    pub epsilon: f64,
    pub condition: IcCondition,
    /// Residual interference factor inside the coverage event (defaults to `γ`).
    pub gamma_bar: Option<f64>,
}

impl IcscQuery {
    pub fn new(k: usize, combine_set: Vec<usize>, tau: f64, epsilon: f64, condition: IcCondition) -> Result<Self> {
        let mut q = IcscQuery {
            k,
            combine_set,
            tau,
            epsilon,
            condition,
            gamma_bar: None,
        };
        q.combine_set.sort_unstable();
        q.combine_set.dedup();
        q.validate()?;
        Ok(q)
    }

    pub fn with_gamma_bar(mut self, gamma_bar: f64) -> Result<Self> {
        self.gamma_bar = Some(gamma_bar);
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(domain("k must be >= 1"));
        }
        if self.combine_set.is_empty() {
            return Err(domain("the combine set must not be empty"));
        }
        if self.combine_set.iter().any(|&i| i == 0 || i > self.k) {
            return Err(domain(format!("combine set {:?} must lie in 1..={}", self.combine_set, self.k)));
        }
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(domain(format!("tau must be positive, got {}", self.tau)));
        }
        if !(self.epsilon > 0.0 && self.epsilon <= self.tau) {
            return Err(domain(format!("epsilon must lie in (0, tau], got {}", self.epsilon)));
        }
        if let Some(g) = self.gamma_bar {
            if !(g > 0.0 && g <= 1.0) {
                return Err(domain(format!("gamma_bar must lie in (0, 1], got {g}")));
            }
        }
        Ok(())
    }

    fn primary(&self) -> usize {
        self.combine_set[0]
    }

    /// Coverage event on the `k` strongest STINR values (descending, 0-padded).
    pub fn event(&self, z: &[f64], gamma: f64) -> bool {
        let tp = self.tau / (1.0 + gamma * self.tau);
        let ep = self.epsilon / (1.0 + gamma * self.epsilon);
        let gc = self.gamma_bar.unwrap_or(gamma);
        let combined = || {
            let mut s = 0.0;
            let mut c = 0.0;
            for (j, &zj) in z.iter().take(self.k).enumerate() {
                if self.combine_set.binary_search(&(j + 1)).is_ok() {
                    s += zj;
                } else {
                    c += zj;
                }
            }
            s + gc * tp * c > tp
        };
        let p = self.primary();
        let helpers = (1..=self.k).filter(|&j| j != p);
        match self.condition {
            IcCondition::None => combined(),
            IcCondition::Iic => z[p - 1] > tp || (helpers.clone().all(|j| z[j - 1] > ep) && combined()),
            IcCondition::Sic => {
                if z[p - 1] > tp {
                    return true;
                }
                let mut removed = 0.0;
                for j in helpers {
                    if z[j - 1] + gamma * ep * removed > ep {
                        removed += z[j - 1];
                    } else {
                        return false;
                    }
                }
                combined()
            }
        }
    }
}

/// Number of non-negative integers strictly below `x`. Bounds within 1e-9 of
/// an integer are rounded to it: the dropped term would integrate over a
/// region of vanishing width.
fn count_below(x: f64) -> usize {
    if x <= 0.0 {
        0
    } else if x >= 1e6 {
        usize::MAX
    } else {
        let r = x.round();
        if (x - r).abs() < 1e-9 * r.max(1.0) {
            r as usize
        } else {
            x.ceil() as usize
        }
    }
}

fn check_budget(k: usize, terms: usize) -> Result<()> {
    if terms == usize::MAX || k + terms.saturating_sub(1) > MAX_SOBOL_DIM {
        return Err(Error::Budget(format!(
            "{} expansion terms over {k} coordinates exceed the {MAX_SOBOL_DIM}-dimensional integration limit",
            if terms == usize::MAX { "unbounded".to_string() } else { terms.to_string() }
        )));
    }
    Ok(())
}

/// `f'_(k)(z) = Σ_{i<1/(γz_k)-k} (-1)^i/i! μ'_k^{(k+i)}(z)`, zero unless
/// `z₁ > … > z_k > 0`.
pub fn order_stat_density(k: usize, zs: &[f64], p: &ChannelParams, qmc: &QmcConfig) -> Result<Estimate> {
    p.validate()?;
    if k == 0 || zs.len() != k {
        return Err(domain("order_stat_density needs exactly k >= 1 coordinates"));
    }
    if zs.iter().any(|z| !z.is_finite()) {
        return Err(domain("order_stat_density needs finite coordinates"));
    }
    let ordered = zs.windows(2).all(|w| w[0] > w[1]) && zs[k - 1] > 0.0;
    if !ordered {
        return Ok(Estimate::zero());
    }
    let terms = count_below(1.0 / (p.gamma * zs[k - 1]) - k as f64);
    check_budget(0, terms)?;
    let mut total = Estimate::zero();
    for i in 0..terms {
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        total = total + partial_density(k, i, zs, p, qmc)? * (sign / factorial(i));
    }
    Ok(total)
}

/// Integration region for the expansion terms: ordered `z` in `(lo, hi)^k`
/// restricted by `region`.
struct Region<'a> {
    k: usize,
    lo: f64,
    hi: f64,
    inside: &'a (dyn Fn(&[f64]) -> bool + Sync),
}

/// The `i`-th signed term `(-1)^i/i! ∫_{region} μ'_k^{(k+i)}(z) dz`.
fn expansion_term(region: &Region<'_>, i: usize, p: &ChannelParams, qmc: &QmcConfig) -> Result<Estimate> {
    let k = region.k;
    check_budget(k, i + 1)?;
    let kernel = TailKernel::new(k, i, p, &QuadConfig::default())?;
    let width = region.hi - region.lo;
    let volume = width.powi(k as i32) / factorial(k);
    let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
    let est = qmc_integrate(
        |u| {
            let mut z = [0.0; MAX_SOBOL_DIM];
            let z = &mut z[..k];
            for (zj, uj) in z.iter_mut().zip(u) {
                *zj = region.lo + width * uj;
            }
            z.sort_unstable_by(|a, b| b.total_cmp(a));
            if z[k - 1] <= 0.0 || !(region.inside)(z) {
                return 0.0;
            }
            kernel.sample(z, z[k - 1], &u[k..], |_| 1.0)
        },
        k + i,
        qmc,
    )?;
    Ok(est * (sign * volume / factorial(i)))
}

fn expansion(region: &Region<'_>, terms: usize, p: &ChannelParams, qmc: &QmcConfig) -> Result<Vec<Estimate>> {
    check_budget(region.k, terms)?;
    (0..terms).map(|i| expansion_term(region, i, p, qmc)).collect()
}

/// `P^{({k},k)}(τ)`: coverage by the `k`-th strongest signal after the `k-1`
/// stronger ones are cancelled.
pub fn residual_coverage(k: usize, tau: f64, p: &ChannelParams, qmc: &QmcConfig) -> Result<Estimate> {
    p.validate()?;
    if k == 0 {
        return Err(domain("k must be >= 1"));
    }
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(domain(format!("tau must be positive, got {tau}")));
    }
    let g = p.gamma;
    if g * tau >= 1.0 {
        let alpha = p.alpha();
        let kf = k as f64;
        let ratio = p.noise_ratio(k, &QuadConfig::default())?;
        let v = ratio / ((g * tau).powf(kf * alpha) * gamma(1.0 + kf * alpha) * gamma(1.0 - alpha).powf(kf));
        return Ok(Estimate::exact(v));
    }
    if k == 1 {
        return single_tier_coverage(1, tau, p, qmc);
    }
    let tp = stinr_from_sinr(tau, g)?;
    let terms = count_below(1.0 / (g * tau));
    check_budget(k, terms)?;
    let total: Estimate = (0..terms)
        .map(|i| residual_term(k, i, tp, p, qmc))
        .sum::<Result<Estimate>>()?;
    Ok(clamp_probability(total, "residual coverage"))
}

/// The `i`-th signed term of the residual expansion for `k >= 2`.
///
/// With prefix slack `s = 1 - γΣ_{j<k} z_j` the region is `z_k = s·w`,
/// `τ' < w < 1/(γ(i+1))`. Both `s` and `w` are drawn through power maps that
/// cancel the integrable singularities at `s → 0` and at the tail slack edge;
/// the prefix is uniform on the face `Σ γz_j = 1 - s`.
fn residual_term(k: usize, i: usize, tp: f64, p: &ChannelParams, qmc: &QmcConfig) -> Result<Estimate> {
    let g = p.gamma;
    let w_hi = 1.0 / (g * (i + 1) as f64);
    if w_hi <= tp {
        return Ok(Estimate::zero());
    }
    let kernel = TailKernel::new(k, i, p, &QuadConfig::default())?;
    let alpha = p.alpha();
    let r_s = (1.0 / ((k - 1) as f64 * alpha)).max(1.0);
    let r_w = (1.0 / ((k + i) as f64 * alpha)).max(1.0);
    let w_span = w_hi - tp;
    let face = g.powi(-(k as i32 - 1)) / (factorial(k - 2) * factorial(k - 1));
    let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
    let est = qmc_integrate(
        |u| {
            let mut z = [0.0; MAX_SOBOL_DIM];
            let z = &mut z[..k];
            let s = u[0].powf(r_s);
            let mut jac = r_s * u[0].powf(r_s - 1.0) * (1.0 - s).powi(k as i32 - 2);
            // Uniform point on the (k-2)-simplex by stick breaking.
            let mut rem = 1.0;
            for m in 0..k - 2 {
                let x = rem * (1.0 - u[1 + m].powf(1.0 / (k - 2 - m) as f64));
                z[m] = (1.0 - s) * x / g;
                rem -= x;
            }
            z[k - 2] = (1.0 - s) * rem.max(0.0) / g;
            z[..k - 1].sort_unstable_by(|a, b| b.total_cmp(a));
            let v = u[k - 1];
            let w = w_hi - w_span * v.powf(r_w);
            jac *= w_span * r_w * v.powf(r_w - 1.0) * s;
            z[k - 1] = s * w;
            if !(z[k - 1] > 0.0 && z[k - 1] < z[k - 2]) || jac == 0.0 {
                return 0.0;
            }
            jac * kernel.sample(z, z[k - 1], &u[k..], |_| 1.0)
        },
        k + i,
        qmc,
    )?;
    Ok(est * (sign * face / factorial(i)))
}

/// Which signals the `k` strongest contribute in a Δ computation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DeltaKind {
    /// Strongest signal alone, the others cancelled.
    Ic,
    /// All `k` signals combined.
    Sc,
}

impl DeltaKind {
    fn query(self, k: usize, tau: f64, epsilon: f64) -> Result<IcscQuery> {
        let set = match self {
            DeltaKind::Ic => vec![1],
            DeltaKind::Sc => (1..=k).collect(),
        };
        IcscQuery::new(k, set, tau, epsilon, IcCondition::Iic)
    }
}

/// Terms of the Δ expansion plus their count bound.
#[derive(Debug, Clone, PartialEq)]
pub struct DeltaExpansion {
    /// Signed terms `(-1)^i/i! ∫ μ'_k^{(k+i)}`, `i = 0, 1, …`.
    pub terms: Vec<Estimate>,
}

impl DeltaExpansion {
    pub fn total(&self) -> Estimate {
        clamp_probability(self.terms.iter().copied().sum(), "coverage gain")
    }

    /// Sum of the first `len` terms (unclamped).
    pub fn partial(&self, len: usize) -> Estimate {
        self.terms.iter().take(len).copied().sum()
    }
}

fn delta_region<'a>(k: usize, tau_p: f64, eps_p: f64, inside: &'a (dyn Fn(&[f64]) -> bool + Sync)) -> Region<'a> {
    Region {
        k,
        lo: eps_p,
        hi: tau_p,
        inside,
    }
}

fn delta_setup(k: usize, tau: f64, epsilon: f64, p: &ChannelParams) -> Result<Option<(f64, f64)>> {
    p.validate()?;
    if k == 0 {
        return Err(domain("k must be >= 1"));
    }
    if !(tau > 0.0 && epsilon > 0.0) {
        return Err(domain("tau and epsilon must be positive"));
    }
    if tau <= epsilon {
        return Ok(None);
    }
    Ok(Some((stinr_from_sinr(tau, p.gamma)?, stinr_from_sinr(epsilon, p.gamma)?)))
}

/// Number of Δ expansion terms: `i < 1/(γε') - k`.
pub fn delta_term_count(k: usize, epsilon: f64, gamma: f64) -> usize {
    let ep = epsilon / (1.0 + gamma * epsilon);
    count_below(1.0 / (gamma * ep) - k as f64)
}

/// A single Δ term by index, including indices beyond the count bound.
pub fn delta_term(kind: DeltaKind, k: usize, tau: f64, epsilon: f64, i: usize, p: &ChannelParams, qmc: &QmcConfig) -> Result<Estimate> {
    let Some((tp, ep)) = delta_setup(k, tau, epsilon, p)? else {
        return Ok(Estimate::zero());
    };
    let q = kind.query(k, tau, epsilon)?;
    let g = p.gamma;
    let inside = |z: &[f64]| z[0] <= tp && q.event(z, g);
    expansion_term(&delta_region(k, tp, ep, &inside), i, p, qmc)
}

/// All terms of the Δ expansion up to the count bound.
pub fn delta_expansion(kind: DeltaKind, k: usize, tau: f64, epsilon: f64, p: &ChannelParams, qmc: &QmcConfig) -> Result<DeltaExpansion> {
    let Some((tp, ep)) = delta_setup(k, tau, epsilon, p)? else {
        return Ok(DeltaExpansion { terms: vec![] });
    };
    let q = kind.query(k, tau, epsilon)?;
    let g = p.gamma;
    let inside = |z: &[f64]| z[0] <= tp && q.event(z, g);
    let terms = delta_term_count(k, epsilon, g);
    Ok(DeltaExpansion {
        terms: expansion(&delta_region(k, tp, ep, &inside), terms, p, qmc)?,
    })
}

/// Coverage gain of cancelling the `k-1` strongest interferers (each decodable
/// at `ε`) over plain coverage.
pub fn delta_ic(k: usize, tau: f64, epsilon: f64, p: &ChannelParams, qmc: &QmcConfig) -> Result<Estimate> {
    Ok(delta_expansion(DeltaKind::Ic, k, tau, epsilon, p, qmc)?.total())
}

/// Coverage gain of combining the `k` strongest signals (each decodable at `ε`).
pub fn delta_sc(k: usize, tau: f64, epsilon: f64, p: &ChannelParams, qmc: &QmcConfig) -> Result<Estimate> {
    Ok(delta_expansion(DeltaKind::Sc, k, tau, epsilon, p, qmc)?.total())
}

/// Probability of the [`IcscQuery`] coverage event.
pub fn icsc_coverage(q: &IcscQuery, p: &ChannelParams, qmc: &QmcConfig) -> Result<Estimate> {
    q.validate()?;
    p.validate()?;
    let g = p.gamma;
    let k = q.k;
    let tp = stinr_from_sinr(q.tau, g)?;
    let ep = stinr_from_sinr(q.epsilon, g)?;
    let gc = q.gamma_bar.unwrap_or(g);
    let primary = q.primary();
    let only_last = q.combine_set == [k];

    if q.condition == IcCondition::None {
        if k == 1 {
            return single_tier_coverage(1, q.tau, p, qmc);
        }
        if !only_last {
            return Err(Error::Budget(format!(
                "combine set {:?} without a decodability condition leaves the expansion unbounded; use sic or iic",
                q.combine_set
            )));
        }
        if q.gamma_bar.is_none() {
            return residual_coverage(k, q.tau, p, qmc);
        }
        let inside = |z: &[f64]| q.event(z, g);
        let region = Region {
            k,
            lo: 0.0,
            hi: 1.0 / g,
            inside: &inside,
        };
        let terms = count_below(1.0 / (gc * tp) - 1.0);
        let total: Estimate = expansion(&region, terms, p, qmc)?.into_iter().sum();
        return Ok(clamp_probability(total, "icsc coverage"));
    }

    let base = single_tier_coverage(primary, q.tau, p, qmc)?;
    if k == 1 {
        return Ok(base);
    }
    let terms = if primary == k {
        count_below(1.0 / (gc * tp) - 1.0)
    } else if q.condition == IcCondition::Iic {
        count_below(1.0 / (g * ep) - k as f64)
    } else {
        count_below(1.0 / (g * ep) - 1.0)
    };
    let lo = if q.condition == IcCondition::Iic && primary != k { ep } else { 0.0 };
    let hi = if primary == 1 { tp } else { 1.0 / g };
    let inside = |z: &[f64]| z[primary - 1] <= tp && q.event(z, g);
    let region = Region { k, lo, hi, inside: &inside };
    let extra: Estimate = expansion(&region, terms, p, qmc)?.into_iter().sum();
    Ok(clamp_probability(base + extra, "icsc coverage"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coverage::{high_threshold_coverage, k_coverage, NetworkScenario};
    use crate::kernels::c_prime;
    use std::f64::consts::PI;

    fn channel(beta: f64) -> ChannelParams {
        ChannelParams::interference_limited(beta).unwrap()
    }

    #[test]
    fn query_validation_and_parsing() {
        assert!(IcscQuery::new(2, vec![3], 1.0, 0.1, IcCondition::None).is_err());
        assert!(IcscQuery::new(2, vec![], 1.0, 0.1, IcCondition::None).is_err());
        assert!(IcscQuery::new(2, vec![1], 1.0, 2.0, IcCondition::None).is_err());
        let q = IcscQuery::new(3, vec![2, 1, 2], 1.0, 0.1, IcCondition::Sic).unwrap();
        assert_eq!(q.combine_set, vec![1, 2]);
        assert_eq!("IIC".parse::<IcCondition>().unwrap(), IcCondition::Iic);
        assert!("both".parse::<IcCondition>().is_err());
        assert_eq!(IcCondition::Sic.to_string(), "sic");
    }

    #[test]
    fn iic_implies_sic() {
        let iic = IcscQuery::new(3, vec![1], 1.0, 0.2, IcCondition::Iic).unwrap();
        let sic = IcscQuery { condition: IcCondition::Sic, ..iic.clone() };
        let mut state = 12345u64;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..20_000 {
            let mut z = [next(), next(), next()];
            let s: f64 = z.iter().sum::<f64>() * (1.0 + next());
            z.iter_mut().for_each(|v| *v /= s);
            z.sort_by(|a, b| b.total_cmp(a));
            if iic.event(&z, 1.0) {
                assert!(sic.event(&z, 1.0), "{z:?}");
            }
        }
    }

    #[test]
    fn order_stat_density_zero_off_support() {
        let p = channel(3.0);
        let q = QmcConfig::default();
        assert_eq!(order_stat_density(2, &[0.1, 0.2], &p, &q).unwrap(), Estimate::zero());
        assert_eq!(order_stat_density(2, &[0.2, 0.2], &p, &q).unwrap(), Estimate::zero());
        assert_eq!(order_stat_density(1, &[0.0], &p, &q).unwrap(), Estimate::zero());
    }

    #[test]
    fn residual_closed_forms() {
        let p = channel(4.0);
        let q = QmcConfig::default();
        let r = residual_coverage(2, 2.0, &p, &q).unwrap();
        assert!((r.value - 1.0 / (2.0 * PI)).abs() < 1e-12);
        for &beta in &[3.0, 4.0, 5.0] {
            let p = channel(beta);
            let r1 = residual_coverage(1, 3.0, &p, &q).unwrap();
            assert!((r1.value - 3f64.powf(-2.0 / beta) / c_prime(beta).unwrap()).abs() < 1e-12);
            assert!((r1.value - high_threshold_coverage(3.0, 1.0, beta).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn trivial_icsc_identities() {
        let p = channel(3.0);
        let q = QmcConfig::default();
        for &tau in &[0.5, 1.0, 2.0] {
            let one = IcscQuery::new(1, vec![1], tau, tau, IcCondition::None).unwrap();
            let s = NetworkScenario::single_tier(3.0, tau).unwrap();
            assert_eq!(icsc_coverage(&one, &p, &q).unwrap(), k_coverage(1, &s, &q).unwrap());
        }
        let last = IcscQuery::new(2, vec![2], 0.5, 0.5, IcCondition::None).unwrap();
        assert_eq!(icsc_coverage(&last, &p, &q).unwrap(), residual_coverage(2, 0.5, &p, &q).unwrap());
        let unbounded = IcscQuery::new(2, vec![1, 2], 0.5, 0.1, IcCondition::None).unwrap();
        assert!(matches!(icsc_coverage(&unbounded, &p, &q), Err(Error::Budget(_))));
    }

    #[test]
    fn delta_empty_domain_and_counts() {
        let p = channel(3.0);
        let q = QmcConfig::default();
        assert_eq!(delta_ic(2, 0.1, 0.1, &p, &q).unwrap(), Estimate::zero());
        assert_eq!(delta_sc(2, 0.05, 0.1, &p, &q).unwrap(), Estimate::zero());
        // ε' = 0.1 ⇔ ε = 1/9 when γ = 1.
        assert_eq!(delta_term_count(2, 1.0 / 9.0, 1.0), 8);
        assert_eq!(delta_term_count(2, 1.0 / 19.0, 1.0), 18);
    }

    #[test]
    fn tiny_epsilon_exceeds_budget() {
        let p = channel(3.0);
        let r = delta_sc(2, 1.0, 0.01, &p, &QmcConfig::default());
        assert!(matches!(r, Err(Error::Budget(_))));
    }
}
