//! Monte Carlo simulation of the Poisson network seen from the origin.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, LogNormal, Poisson};
use rayon::prelude::*;
use std::io::Write;

use crate::coverage::{Fading, NetworkScenario};
#[cfg(test)]
use crate::kernels::PathLossParams;
use crate::error::{domain, Error, Result};
use crate::icsc::IcscQuery;
use crate::qmc::Estimate;

/// Simulation effort and geometry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub region_radius: f64,
    pub trials: usize,
    pub seed: u64,
    /// Number of strongest STINR values kept per trial.
    pub top_k: usize,
    /// Add the mean interference of the stations beyond the disk to every
    /// trial. For β close to 2 the truncated tail decays slowly (like
    /// `R^{2-β}`), and its mean dominates its fluctuations (`R^{1-β}`).
    pub far_field_mean: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            region_radius: 10.0,
            trials: 100_000,
            seed: 1,
            top_k: 8,
            far_field_mean: false,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.region_radius > 0.0 && self.region_radius.is_finite()) {
            return Err(Error::InvalidConfig(format!("region radius must be positive, got {}", self.region_radius)));
        }
        if self.trials == 0 {
            return Err(Error::InvalidConfig("at least one trial is required".into()));
        }
        if self.top_k == 0 {
            return Err(Error::InvalidConfig("top_k must be >= 1".into()));
        }
        Ok(())
    }
}

/// Per-trial order statistics of the STINR values.
#[derive(Debug, Clone, PartialEq)]
pub struct SimBatch {
    pub top_k: usize,
    pub gamma: f64,
    pub noise: f64,
    /// `trials × top_k` STINR values, each row descending, padded with 0.
    values: Vec<f64>,
    /// Total received power per trial.
    pub total_power: Vec<f64>,
    pub station_count: Vec<u32>,
    /// Sum of all STINR values per trial.
    pub stinr_sum: Vec<f64>,
}

enum Mark {
    Constant,
    Exponential(Exp<f64>),
    Lognormal(LogNormal<f64>),
}

impl Mark {
    fn new(f: &Fading) -> Result<Self> {
        Ok(match *f {
            Fading::Constant => Mark::Constant,
            Fading::Exponential { mean } => Mark::Exponential(Exp::new(1.0 / mean).map_err(|e| domain(e.to_string()))?),
            Fading::Lognormal { sigma_db } => {
                let s = Fading::lognormal_sigma(sigma_db);
                Mark::Lognormal(LogNormal::new(-s * s / 2.0, s).map_err(|e| domain(e.to_string()))?)
            }
        })
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        match self {
            Mark::Constant => 1.0,
            Mark::Exponential(d) => d.sample(rng),
            Mark::Lognormal(d) => d.sample(rng),
        }
    }
}

struct TierSampler {
    count: Option<Poisson<f64>>,
    power: f64,
    mark: Mark,
}

struct Trial {
    top: Vec<f64>,
    labels: Vec<u16>,
    total_power: f64,
    station_count: u32,
    stinr_sum: f64,
}

fn run_trial(
    index: u64,
    tiers: &[TierSampler],
    s: &NetworkScenario,
    cfg: &SimConfig,
    far: f64,
    recv: &mut Vec<(f64, u16)>,
) -> Trial {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(index);
    recv.clear();
    let half_beta = s.path_loss.beta / 2.0;
    let kr = s.path_loss.k * cfg.region_radius;
    for (j, t) in tiers.iter().enumerate() {
        let n = t.count.as_ref().map_or(0, |d| d.sample(&mut rng) as usize);
        for _ in 0..n {
            // (K r)^β with r = R√u.
            let u: f64 = rng.random();
            let loss = (kr * kr * u).powf(half_beta);
            recv.push((t.power * t.mark.sample(&mut rng) / loss, j as u16));
        }
    }
    let total = recv.iter().map(|r| r.0).sum::<f64>() + far;
    let denom = s.noise + s.gamma * total;
    let mut top = vec![0.0; cfg.top_k];
    let mut labels = vec![0u16; cfg.top_k];
    let keep = cfg.top_k.min(recv.len());
    if keep > 0 && denom > 0.0 {
        if recv.len() > keep {
            recv.select_nth_unstable_by(keep - 1, |a, b| b.0.total_cmp(&a.0));
        }
        let head = &mut recv[..keep];
        head.sort_unstable_by(|a, b| b.0.total_cmp(&a.0));
        for (j, (v, l)) in head.iter().enumerate() {
            top[j] = v / denom;
            labels[j] = *l;
        }
    }
    Trial {
        top,
        labels,
        total_power: total,
        station_count: recv.len() as u32,
        stinr_sum: if denom > 0.0 { total / denom } else { 0.0 },
    }
}

/// Simulates `cfg.trials` independent networks restricted to a disk of radius
/// `cfg.region_radius` around the typical user.
///
/// Trial `t` draws from ChaCha8 stream `t` of `cfg.seed`, so results do not
/// depend on thread scheduling.
pub fn simulate(s: &NetworkScenario, cfg: &SimConfig) -> Result<SimBatch> {
    simulate_tiered(s, cfg).map(|(b, _)| b)
}

/// As [`simulate`], additionally returning the tier index of every retained value.
pub fn simulate_tiered(s: &NetworkScenario, cfg: &SimConfig) -> Result<(SimBatch, Vec<u16>)> {
    s.validate()?;
    cfg.validate()?;
    if s.tiers.len() > u16::MAX as usize {
        return Err(domain("too many tiers"));
    }
    let area = std::f64::consts::PI * cfg.region_radius * cfg.region_radius;
    let tiers = s
        .tiers
        .iter()
        .map(|t| {
            let mean = t.lambda * area;
            let count = if mean > 0.0 {
                Some(Poisson::new(mean).map_err(|e| domain(e.to_string()))?)
            } else {
                None
            };
            Ok(TierSampler {
                count,
                power: t.power,
                mark: Mark::new(&t.fading)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let far = if cfg.far_field_mean { far_field_mean(s, cfg.region_radius) } else { 0.0 };
    let trials: Vec<Trial> = (0..cfg.trials as u64)
        .into_par_iter()
        .map_init(Vec::new, |buf, i| run_trial(i, &tiers, s, cfg, far, buf))
        .collect();
    let mut batch = SimBatch {
        top_k: cfg.top_k,
        gamma: s.gamma,
        noise: s.noise,
        values: Vec::with_capacity(cfg.trials * cfg.top_k),
        total_power: Vec::with_capacity(cfg.trials),
        station_count: Vec::with_capacity(cfg.trials),
        stinr_sum: Vec::with_capacity(cfg.trials),
    };
    let mut labels = Vec::with_capacity(cfg.trials * cfg.top_k);
    for t in trials {
        batch.values.extend_from_slice(&t.top);
        batch.total_power.push(t.total_power);
        batch.station_count.push(t.station_count);
        batch.stinr_sum.push(t.stinr_sum);
        labels.extend_from_slice(&t.labels);
    }
    Ok((batch, labels))
}

/// `E[Σ_{|x|>R} P S (K|x|)^{-β}] = 2π Σ λ_j E[P_j S_j] K^{-β} R^{2-β}/(β-2)`.
pub fn far_field_mean(s: &NetworkScenario, radius: f64) -> f64 {
    let beta = s.path_loss.beta;
    let per_area: f64 = s.tiers.iter().map(|t| t.lambda * t.power * t.fading.moment(1.0)).sum();
    2.0 * std::f64::consts::PI * per_area * s.path_loss.k.powf(-beta) * radius.powf(2.0 - beta) / (beta - 2.0)
}

fn binomial_estimate(hits: usize, n: usize) -> Estimate {
    let p = hits as f64 / n as f64;
    Estimate::new(p, (p * (1.0 - p) / n as f64).sqrt())
}

fn mean_estimate(xs: impl Iterator<Item = f64>, n: usize) -> Estimate {
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for x in xs {
        sum += x;
        sum_sq += x * x;
    }
    let m = n as f64;
    let mean = sum / m;
    let var = if n > 1 {
        (sum_sq / m - mean * mean).max(0.0) * m / (m - 1.0)
    } else {
        0.0
    };
    Estimate::new(mean, (var / m).sqrt())
}

impl SimBatch {
    pub fn trials(&self) -> usize {
        self.station_count.len()
    }

    /// Descending STINR values retained for `trial`.
    pub fn values(&self, trial: usize) -> &[f64] {
        &self.values[trial * self.top_k..(trial + 1) * self.top_k]
    }

    fn check_k(&self, k: usize) -> Result<()> {
        if k == 0 || k > self.top_k {
            return Err(domain(format!("order {k} is not within the retained top {}", self.top_k)));
        }
        Ok(())
    }

    /// Errors if some trial may hold an unretained station above `threshold`.
    fn check_complete(&self, threshold: f64) -> Result<()> {
        for t in 0..self.trials() {
            if self.station_count[t] as usize > self.top_k && self.values(t)[self.top_k - 1] > threshold {
                return Err(Error::InvalidConfig(format!(
                    "trial {t} has more than top_k = {} stations above STINR {threshold}; raise top_k",
                    self.top_k
                )));
            }
        }
        Ok(())
    }

    /// Fraction of trials whose `k`-th strongest SINR exceeds `tau`.
    pub fn empirical_coverage(&self, k: usize, tau: f64) -> Result<Estimate> {
        self.check_k(k)?;
        let tp = tau / (1.0 + self.gamma * tau);
        let hits = (0..self.trials()).filter(|&t| self.values(t)[k - 1] > tp).count();
        Ok(binomial_estimate(hits, self.trials()))
    }

    /// Per-trial coverage number: stations whose STINR exceeds the threshold
    /// of their own tier.
    ///
    /// `tiers` holds the per-value tier indices from [`simulate_tiered`] and
    /// `taus` the SINR threshold of each tier.
    pub fn coverage_numbers(&self, tiers: &[u16], taus: &[f64]) -> Result<Vec<usize>> {
        if tiers.len() != self.values.len() {
            return Err(domain("tier labels do not match the batch"));
        }
        let primes: Vec<f64> = taus.iter().map(|t| t / (1.0 + self.gamma * t)).collect();
        if let Some(&l) = tiers.iter().find(|&&l| l as usize >= primes.len()) {
            return Err(domain(format!("no threshold given for tier {l}")));
        }
        let min = primes.iter().copied().fold(f64::INFINITY, f64::min);
        self.check_complete(min)?;
        Ok((0..self.trials())
            .map(|t| {
                let labels = &tiers[t * self.top_k..(t + 1) * self.top_k];
                self.values(t)
                    .iter()
                    .zip(labels)
                    .filter(|(z, &j)| **z > primes[j as usize])
                    .count()
            })
            .collect())
    }

    /// Multi-tier `k`-coverage: fraction of trials with at least `k` stations
    /// above the SINR threshold of their own tier.
    pub fn empirical_tier_coverage(&self, tiers: &[u16], k: usize, taus: &[f64]) -> Result<Estimate> {
        if k == 0 {
            return Err(domain("k must be >= 1"));
        }
        let counts = self.coverage_numbers(tiers, taus)?;
        Ok(binomial_estimate(counts.iter().filter(|&&c| c >= k).count(), self.trials()))
    }

    /// Fraction of trials with coverage number exactly `k`.
    pub fn empirical_count_pmf(&self, tiers: &[u16], k: usize, taus: &[f64]) -> Result<Estimate> {
        let counts = self.coverage_numbers(tiers, taus)?;
        Ok(binomial_estimate(counts.iter().filter(|&&c| c == k).count(), self.trials()))
    }

    /// Mean number of ordered distinct `n`-tuples of stations whose STINR
    /// values exceed `thresholds` componentwise.
    pub fn empirical_moment(&self, thresholds: &[f64]) -> Result<Estimate> {
        let n = thresholds.len();
        self.check_k(n)?;
        let mut sorted = thresholds.to_vec();
        sorted.sort_by(|a, b| b.total_cmp(a));
        if self.gamma * sorted.iter().sum::<f64>() >= 1.0 {
            return Ok(Estimate::zero());
        }
        self.check_complete(sorted[n - 1])?;
        let counts = (0..self.trials()).map(|t| {
            let row = self.values(t);
            let mut ways = 1.0;
            for (j, th) in sorted.iter().enumerate() {
                let above = row.iter().filter(|z| *z > th).count();
                if above <= j {
                    return 0.0;
                }
                ways *= (above - j) as f64;
            }
            ways
        });
        Ok(mean_estimate(counts, self.trials()))
    }

    /// Fraction of trials satisfying the coverage event of `q`.
    pub fn empirical_icsc(&self, q: &IcscQuery) -> Result<Estimate> {
        q.validate()?;
        self.check_k(q.k)?;
        let hits = (0..self.trials()).filter(|&t| q.event(self.values(t), self.gamma)).count();
        Ok(binomial_estimate(hits, self.trials()))
    }

    /// Fraction of trials where `pred` holds on the retained values.
    pub fn fraction(&self, pred: impl Fn(&[f64]) -> bool) -> Estimate {
        let hits = (0..self.trials()).filter(|&t| pred(self.values(t))).count();
        binomial_estimate(hits, self.trials())
    }

    /// Writes `trial_id, z1..z{top_k}, station_count` rows.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let cols: Vec<String> = (1..=self.top_k).map(|j| format!("z{j}")).collect();
        writeln!(w, "trial_id,{},station_count", cols.join(","))?;
        for t in 0..self.trials() {
            let row: Vec<String> = self.values(t).iter().map(|v| format!("{v}")).collect();
            writeln!(w, "{t},{},{}", row.join(","), self.station_count[t])?;
        }
        Ok(())
    }
}
