//! Threshold sweeps pairing analytic values with simulation, and the
//! parameter sets of the standard figures.

use rayon::prelude::*;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use crate::coverage::{coverage_count_distribution, db_to_linear, k_coverage, single_tier_coverage, Fading, NetworkScenario, TierSpec};
use crate::error::{domain, Error, Result};
use crate::icsc::{delta_expansion, delta_term, delta_term_count, residual_coverage, DeltaKind, IcCondition, IcscQuery};
use crate::kernels::PathLossParams;
use crate::moments::sinr_from_stinr;
use crate::netsim::{simulate_tiered, SimBatch, SimConfig};
use crate::qmc::{Estimate, QmcConfig};

/// Quantity evaluated along a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantity {
    KCoverage,
    DeltaIc,
    DeltaSc,
    Residual,
    Pmf,
}

impl FromStr for Quantity {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "k_coverage" => Ok(Quantity::KCoverage),
            "delta_ic" => Ok(Quantity::DeltaIc),
            "delta_sc" => Ok(Quantity::DeltaSc),
            "residual" => Ok(Quantity::Residual),
            "pmf" => Ok(Quantity::Pmf),
            other => Err(domain(format!("unknown quantity '{other}'"))),
        }
    }
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Quantity::KCoverage => "k_coverage",
            Quantity::DeltaIc => "delta_ic",
            Quantity::DeltaSc => "delta_sc",
            Quantity::Residual => "residual",
            Quantity::Pmf => "pmf",
        })
    }
}

/// One curve: `quantity` as a function of the threshold of tier 0.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub label: String,
    pub quantity: Quantity,
    pub k: usize,
    /// Decoding threshold `ε'` (STINR scale) for the Δ quantities.
    pub epsilon_prime: Option<f64>,
    pub scenario: NetworkScenario,
    pub tau_grid_db: Vec<f64>,
    /// Also evaluate the single-tier model with threshold `E[T*]`.
    pub single_tier_approx: bool,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        if self.tau_grid_db.is_empty() {
            return Err(domain("the threshold grid is empty"));
        }
        if self.tau_grid_db.iter().any(|t| !t.is_finite()) || self.tau_grid_db.windows(2).any(|w| w[0] >= w[1]) {
            return Err(domain("the threshold grid must be finite and strictly increasing"));
        }
        if self.k == 0 && self.quantity != Quantity::Pmf {
            return Err(domain("k must be >= 1"));
        }
        match self.quantity {
            Quantity::DeltaIc | Quantity::DeltaSc | Quantity::Residual => {
                if !self.scenario.is_single_tier() {
                    return Err(domain(format!("{} sweeps need a single-tier scenario", self.quantity)));
                }
            }
            _ => {}
        }
        if matches!(self.quantity, Quantity::DeltaIc | Quantity::DeltaSc) {
            let e = self.epsilon_prime.ok_or_else(|| domain("Δ sweeps need epsilon_prime"))?;
            if !(e > 0.0 && self.scenario.gamma * e < 1.0) {
                return Err(domain(format!("epsilon_prime must lie in (0, 1/gamma), got {e}")));
            }
        }
        Ok(())
    }

    fn epsilon(&self) -> Result<f64> {
        sinr_from_stinr(self.epsilon_prime.unwrap_or_default(), self.scenario.gamma)
    }

    fn analytic(&self, tau: f64, qmc: &QmcConfig) -> Result<Estimate> {
        let s = self.scenario.with_tau(0, tau)?;
        match self.quantity {
            Quantity::KCoverage => k_coverage(self.k, &s, qmc),
            Quantity::Pmf => {
                let d = coverage_count_distribution(&s, qmc)?;
                Ok(d.pmf.get(self.k).copied().unwrap_or_default())
            }
            Quantity::Residual => residual_coverage(self.k, tau, &s.channel()?, qmc),
            Quantity::DeltaIc | Quantity::DeltaSc => {
                let kind = if self.quantity == Quantity::DeltaIc { DeltaKind::Ic } else { DeltaKind::Sc };
                Ok(delta_expansion(kind, self.k, tau, self.epsilon()?, &s.channel()?, qmc)?.total())
            }
        }
    }

    fn approx(&self, tau: f64, qmc: &QmcConfig) -> Result<Estimate> {
        let s = self.scenario.with_tau(0, tau)?;
        let mean = s.equivalent_network()?.mean_threshold();
        single_tier_coverage(self.k.max(1), mean, &s.channel()?, qmc)
    }

    fn simulated(&self, tau: f64, b: &SimBatch, labels: &[u16]) -> Result<Estimate> {
        let taus: Vec<f64> = std::iter::once(tau)
            .chain(self.scenario.tiers[1..].iter().map(|t| t.tau))
            .collect();
        match self.quantity {
            Quantity::KCoverage => b.empirical_tier_coverage(labels, self.k, &taus),
            Quantity::Pmf => b.empirical_count_pmf(labels, self.k, &taus),
            Quantity::Residual => {
                let q = IcscQuery::new(self.k, vec![self.k], tau, tau, IcCondition::None)?;
                b.empirical_icsc(&q)
            }
            Quantity::DeltaIc | Quantity::DeltaSc => {
                let eps = self.epsilon()?;
                if tau <= eps {
                    return Ok(Estimate::zero());
                }
                let set = if self.quantity == Quantity::DeltaIc { vec![1] } else { (1..=self.k).collect() };
                let q = IcscQuery::new(self.k, set, tau, eps, IcCondition::Iic)?;
                let tp = tau / (1.0 + b.gamma * tau);
                let g = b.gamma;
                // The gain counts trials covered only thanks to the extra signals.
                Ok(b.fraction(|z| q.event(z, g) && z[0] <= tp))
            }
        }
    }

    /// Order statistics a simulation must retain for this sweep.
    fn required_top_k(&self) -> usize {
        let tau_min = db_to_linear(self.tau_grid_db[0]).min(self.scenario.min_tau());
        let g = self.scenario.gamma;
        let by_threshold = match self.quantity {
            Quantity::KCoverage | Quantity::Pmf => ((1.0 + g * tau_min) / (g * tau_min)).floor() as usize + 1,
            _ => 0,
        };
        by_threshold.clamp(self.k.max(1), MAX_RETAINED)
    }
}

const MAX_RETAINED: usize = 64;

/// Evenly spaced dB grid from `lo` to `hi` inclusive.
pub fn db_grid(lo: f64, hi: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0 && hi >= lo) {
        return Err(domain("grid needs step > 0 and hi >= lo"));
    }
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| lo + i as f64 * step).collect())
}

/// One grid point of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub curve: String,
    pub tau_db: f64,
    pub analytic: Option<Estimate>,
    pub simulated: Option<Estimate>,
    pub approx: Option<Estimate>,
    /// Failure of this point; the sweep carries on.
    pub error: Option<String>,
}

/// Evaluates a sweep; with `sim` set, one simulation supplies every grid point.
pub fn run_sweep(spec: &SweepSpec, qmc: &QmcConfig, sim: Option<&SimConfig>) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    let batch = match sim {
        Some(cfg) => {
            let cfg = SimConfig {
                top_k: cfg.top_k.max(spec.required_top_k()),
                ..*cfg
            };
            Some(simulate_tiered(&spec.scenario, &cfg)?)
        }
        None => None,
    };
    Ok(spec
        .tau_grid_db
        .par_iter()
        .map(|&db| {
            let tau = db_to_linear(db);
            let mut errors = Vec::new();
            let mut keep = |r: Result<Estimate>| match r {
                Ok(e) => Some(e),
                Err(e) => {
                    errors.push(e.to_string());
                    None
                }
            };
            let analytic = keep(spec.analytic(tau, qmc));
            let simulated = batch.as_ref().and_then(|(b, l)| keep(spec.simulated(tau, b, l)));
            let approx = if spec.single_tier_approx { keep(spec.approx(tau, qmc)) } else { None };
            SweepRow {
                curve: spec.label.clone(),
                tau_db: db,
                analytic,
                simulated,
                approx,
                error: if errors.is_empty() { None } else { Some(errors.join("; ")) },
            }
        })
        .collect())
}

/// Partial sums of a Δ expansion along a threshold grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncationSpec {
    pub label: String,
    pub kind: DeltaKind,
    pub k: usize,
    pub epsilon_prime: f64,
    pub scenario: NetworkScenario,
    pub tau_grid_db: Vec<f64>,
    /// Partial-sum lengths to report.
    pub lengths: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TruncationRow {
    pub tau_db: f64,
    /// One entry per requested length, in order.
    pub partials: Vec<Estimate>,
    pub full: Estimate,
    /// Number of terms in the full expansion.
    pub terms: usize,
    /// The first term past the count bound; zero up to integration error.
    pub next_term: Estimate,
    pub error: Option<String>,
}

pub fn truncation_study(spec: &TruncationSpec, qmc: &QmcConfig) -> Result<Vec<TruncationRow>> {
    let quantity = match spec.kind {
        DeltaKind::Ic => Quantity::DeltaIc,
        DeltaKind::Sc => Quantity::DeltaSc,
    };
    SweepSpec {
        label: spec.label.clone(),
        quantity,
        k: spec.k,
        epsilon_prime: Some(spec.epsilon_prime),
        scenario: spec.scenario.clone(),
        tau_grid_db: spec.tau_grid_db.clone(),
        single_tier_approx: false,
    }
    .validate()?;
    if spec.lengths.is_empty() || spec.lengths.contains(&0) {
        return Err(domain("partial-sum lengths must be positive"));
    }
    let p = spec.scenario.channel()?;
    let eps = sinr_from_stinr(spec.epsilon_prime, p.gamma)?;
    let terms = delta_term_count(spec.k, eps, p.gamma);
    Ok(spec
        .tau_grid_db
        .par_iter()
        .map(|&db| {
            let tau = db_to_linear(db);
            let run = || -> Result<TruncationRow> {
                let e = delta_expansion(spec.kind, spec.k, tau, eps, &p, qmc)?;
                Ok(TruncationRow {
                    tau_db: db,
                    partials: spec.lengths.iter().map(|&l| e.partial(l)).collect(),
                    full: e.total(),
                    terms,
                    next_term: delta_term(spec.kind, spec.k, tau, eps, terms, &p, qmc)?,
                    error: None,
                })
            };
            run().unwrap_or_else(|e| TruncationRow {
                tau_db: db,
                partials: vec![],
                full: Estimate::default(),
                terms,
                next_term: Estimate::default(),
                error: Some(e.to_string()),
            })
        })
        .collect())
}

/// Rectangular CSV table.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

fn num(x: f64) -> String {
    format!("{x}")
}

fn opt(e: Option<Estimate>) -> [String; 2] {
    match e {
        Some(e) => [num(e.value), num(e.std_error)],
        None => [String::new(), String::new()],
    }
}

fn quote(cell: &str) -> String {
    if cell.contains([',', '"', '\n']) {
        format!("\"{}\"", cell.replace('"', "\"\""))
    } else {
        cell.to_string()
    }
}

impl Table {
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{}", self.header.join(","))?;
        for r in &self.rows {
            let cells: Vec<String> = r.iter().map(|c| quote(c)).collect();
            writeln!(w, "{}", cells.join(","))?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory cannot fail");
        String::from_utf8(buf).expect("CSV is UTF-8")
    }
}

pub fn sweep_table(rows: &[SweepRow]) -> Table {
    let with_approx = rows.iter().any(|r| r.approx.is_some());
    let mut header: Vec<String> = ["curve", "tau_dB", "analytic", "analytic_err", "simulated", "simulated_err"]
        .map(String::from)
        .to_vec();
    if with_approx {
        header.extend(["approx_single_tier".to_string(), "approx_single_tier_err".to_string()]);
    }
    header.push("error".into());
    let rows = rows
        .iter()
        .map(|r| {
            let mut cells = vec![r.curve.clone(), num(r.tau_db)];
            cells.extend(opt(r.analytic));
            cells.extend(opt(r.simulated));
            if with_approx {
                cells.extend(opt(r.approx));
            }
            cells.push(r.error.clone().unwrap_or_default());
            cells
        })
        .collect();
    Table { header, rows }
}

pub fn truncation_table(spec: &TruncationSpec, rows: &[TruncationRow]) -> Table {
    let mut header = vec!["curve".to_string(), "tau_dB".to_string()];
    for l in &spec.lengths {
        header.push(format!("partial_{l}"));
        header.push(format!("partial_{l}_err"));
    }
    header.extend(["full", "full_err", "terms", "next_term", "next_term_err", "error"].map(String::from));
    let rows = rows
        .iter()
        .map(|r| {
            let mut cells = vec![spec.label.clone(), num(r.tau_db)];
            let ok = r.error.is_none();
            for (i, _) in spec.lengths.iter().enumerate() {
                cells.extend(opt(r.partials.get(i).copied()));
            }
            cells.extend(opt(ok.then_some(r.full)));
            cells.push(r.terms.to_string());
            cells.extend(opt(ok.then_some(r.next_term)));
            cells.push(r.error.clone().unwrap_or_default());
            cells
        })
        .collect();
    Table { header, rows }
}

/// A named figure: several curves or one truncation study.
#[derive(Debug, Clone, PartialEq)]
pub enum Figure {
    Sweeps(Vec<SweepSpec>),
    Truncation(TruncationSpec),
}

pub const FIGURE_NAMES: [&str; 9] = ["fig1", "fig2", "fig3", "fig4", "fig5", "fig6", "fig7", "fig8", "fig9"];

fn default_grid() -> Vec<f64> {
    db_grid(-10.0, 20.0, 0.5).expect("static grid")
}

fn coverage_curves(beta: f64) -> Result<Vec<SweepSpec>> {
    let s = NetworkScenario::single_tier(beta, 1.0)?;
    Ok((1..=3)
        .map(|k| SweepSpec {
            label: format!("k={k}"),
            quantity: Quantity::KCoverage,
            k,
            epsilon_prime: None,
            scenario: s.clone(),
            tau_grid_db: default_grid(),
            single_tier_approx: false,
        })
        .collect())
}

/// Two tiers with `λ₁ = λ₂/2`, `P₁ = 100 P₂`, `β = 3`; tier 0 is swept.
pub fn two_tier_scenario(tau2_db: f64) -> Result<NetworkScenario> {
    NetworkScenario::new(
        PathLossParams::new(3.0, 1.0)?,
        0.0,
        1.0,
        vec![
            TierSpec::new(0.5, 100.0, Fading::Constant, 1.0)?,
            TierSpec::new(1.0, 1.0, Fading::Constant, db_to_linear(tau2_db))?,
        ],
    )
}

fn two_tier_curves() -> Result<Vec<SweepSpec>> {
    [(1.0, 1), (-2.0, 1), (-2.0, 2)]
        .into_iter()
        .map(|(tau2, k)| {
            Ok(SweepSpec {
                label: format!("tau2={tau2}dB k={k}"),
                quantity: Quantity::KCoverage,
                k,
                epsilon_prime: None,
                scenario: two_tier_scenario(tau2)?,
                tau_grid_db: default_grid(),
                single_tier_approx: true,
            })
        })
        .collect()
}

fn delta_curves(beta: f64, epsilon_prime: f64) -> Result<Vec<SweepSpec>> {
    let s = NetworkScenario::single_tier(beta, 1.0)?;
    Ok([Quantity::DeltaIc, Quantity::DeltaSc]
        .into_iter()
        .map(|q| SweepSpec {
            label: q.to_string(),
            quantity: q,
            k: 2,
            epsilon_prime: Some(epsilon_prime),
            scenario: s.clone(),
            tau_grid_db: default_grid(),
            single_tier_approx: false,
        })
        .collect())
}

fn truncation(epsilon_prime: f64, lengths: Vec<usize>) -> Result<TruncationSpec> {
    Ok(TruncationSpec {
        label: "delta_sc".into(),
        kind: DeltaKind::Sc,
        k: 2,
        epsilon_prime,
        scenario: NetworkScenario::single_tier(3.0, 1.0)?,
        tau_grid_db: default_grid(),
        lengths,
    })
}

/// Parameter set of a named figure.
///
/// * `fig1`, `fig2`: k-coverage, k = 1..3, single tier, β = 3 and 5.
/// * `fig3`: two-tier P⁽¹⁾ (τ₂ = 1, -2 dB) and P⁽²⁾ (τ₂ = -2 dB) against τ₁.
/// * `fig4`..`fig7`: Δ_IC and Δ_SC with k = 2 for (β, ε') = (3, 0.1), (5, 0.1), (3, 0.05), (5, 0.05).
/// * `fig8`, `fig9`: Δ_SC partial sums, β = 3, ε' = 0.1 (1, 2, 3 terms) and ε' = 0.05 (1, 2, 5 terms).
pub fn preset(name: &str) -> Result<Figure> {
    Ok(match name {
        "fig1" => Figure::Sweeps(coverage_curves(3.0)?),
        "fig2" => Figure::Sweeps(coverage_curves(5.0)?),
        "fig3" => Figure::Sweeps(two_tier_curves()?),
        "fig4" => Figure::Sweeps(delta_curves(3.0, 0.1)?),
        "fig5" => Figure::Sweeps(delta_curves(5.0, 0.1)?),
        "fig6" => Figure::Sweeps(delta_curves(3.0, 0.05)?),
        "fig7" => Figure::Sweeps(delta_curves(5.0, 0.05)?),
        "fig8" => Figure::Truncation(truncation(0.1, vec![1, 2, 3])?),
        "fig9" => Figure::Truncation(truncation(0.05, vec![1, 2, 5])?),
        other => {
            return Err(domain(format!(
                "unknown figure '{other}'; expected one of {}",
                FIGURE_NAMES.join(", ")
            )))
        }
    })
}

/// Evaluates a figure into one table. Truncation studies ignore `sim`.
pub fn run_figure(fig: &Figure, qmc: &QmcConfig, sim: Option<&SimConfig>) -> Result<Table> {
    match fig {
        Figure::Sweeps(specs) => {
            let mut rows = Vec::new();
            for s in specs {
                rows.extend(run_sweep(s, qmc, sim)?);
            }
            Ok(sweep_table(&rows))
        }
        Figure::Truncation(t) => Ok(truncation_table(t, &truncation_study(t, qmc)?)),
    }
}
