//! Command-line front end: scenario files in, CSV out.

use clap::{Args, Parser, Subcommand};
use std::path::{Path, PathBuf};

use crate::coverage::{db_to_linear, linear_to_db};
use crate::error::{domain, Error, Result};
use crate::figures::{db_grid, preset, run_figure, run_sweep, sweep_table, Quantity, SweepSpec, Table, FIGURE_NAMES};
use crate::icsc::{icsc_coverage, IcCondition, IcscQuery};
use crate::moments::{factorial_moment_sinr, stinr_from_sinr};
use crate::netsim::{simulate, SimConfig};
use crate::qmc::{Estimate, QmcConfig};
use crate::scenario::ScenarioFile;

#[derive(Debug, Parser)]
#[command(name = "sinr-moments", version, about = "SINR coverage and moment computations for Poisson cellular networks")]
pub struct Cli {
    /// Seed for QMC scrambling and simulation (overrides the scenario file).
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// QMC points per integral (overrides the scenario file).
    #[arg(long, global = true)]
    pub points: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a scenario template.
    Init {
        /// Destination file (stdout if omitted).
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// k-coverage probability (or coverage-number pmf) against the tier-0 threshold.
    Coverage(CoverageArgs),
    /// Factorial moment measure at SINR thresholds.
    Moments(MomentsArgs),
    /// Coverage with interference cancellation and signal combination.
    Icsc(IcscArgs),
    /// Regenerate the data behind a standard figure.
    Figure(FigureArgs),
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Write CSV to this file instead of stdout.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CoverageArgs {
    pub scenario: PathBuf,
    #[arg(long, short, default_value_t = 1)]
    pub k: usize,
    /// Tier-0 threshold in dB (defaults to the scenario value).
    #[arg(long, allow_hyphen_values = true, conflicts_with = "grid")]
    pub tau_db: Option<f64>,
    /// Tier-0 threshold grid `lo:hi:step` in dB.
    #[arg(long, allow_hyphen_values = true)]
    pub grid: Option<String>,
    /// Report `P(N = k)` instead of `P(N >= k)`.
    #[arg(long)]
    pub pmf: bool,
    /// Add simulated columns.
    #[arg(long)]
    pub simulate: bool,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct MomentsArgs {
    pub scenario: PathBuf,
    /// Comma-separated SINR thresholds in dB; their count is the order n.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    pub thresholds_db: Vec<f64>,
    #[arg(long)]
    pub simulate: bool,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct IcscArgs {
    pub scenario: PathBuf,
    /// Number of strongest signals involved.
    #[arg(long, short, default_value_t = 2)]
    pub k: usize,
    /// Comma-separated 1-based indices of the combined signals.
    #[arg(long, value_delimiter = ',', default_value = "1")]
    pub combine: Vec<usize>,
    /// Target SINR in dB (defaults to the scenario threshold).
    #[arg(long, allow_hyphen_values = true)]
    pub tau_db: Option<f64>,
    /// Decoding SINR threshold in dB.
    #[arg(long, allow_hyphen_values = true)]
    pub epsilon_db: f64,
    /// Decodability condition: none, sic or iic.
    #[arg(long, default_value = "iic")]
    pub condition: IcCondition,
    /// Residual interference factor inside the coverage event.
    #[arg(long)]
    pub gamma_bar: Option<f64>,
    #[arg(long)]
    pub simulate: bool,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct FigureArgs {
    /// One of fig1..fig9.
    pub name: String,
    /// Write `<name>.csv` into this directory instead of stdout.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    #[arg(long)]
    pub simulate: bool,
    /// Simulation trials.
    #[arg(long, default_value_t = SimConfig::default().trials)]
    pub trials: usize,
    /// Simulation disk radius.
    #[arg(long, default_value_t = SimConfig::default().region_radius)]
    pub radius: f64,
    /// Add the mean interference from beyond the disk.
    #[arg(long)]
    pub far_field: bool,
}

fn num(x: f64) -> String {
    format!("{x}")
}

struct Loaded {
    file: ScenarioFile,
    qmc: QmcConfig,
    sim: SimConfig,
}

fn load(path: &Path, cli: &Cli) -> Result<Loaded> {
    let file = ScenarioFile::load(path)?;
    let mut qmc = file.qmc_config()?;
    let mut sim = file.sim_config()?;
    apply_overrides(cli, &mut qmc, &mut sim)?;
    Ok(Loaded { file, qmc, sim })
}

fn apply_overrides(cli: &Cli, qmc: &mut QmcConfig, sim: &mut SimConfig) -> Result<()> {
    if let Some(seed) = cli.seed {
        qmc.scramble_seed = seed;
        sim.seed = seed;
    }
    if let Some(points) = cli.points {
        qmc.point_count = points;
    }
    qmc.validate()
}

fn parse_grid(text: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 3 {
        return Err(domain(format!("grid '{text}' must have the form lo:hi:step")));
    }
    let v = parts
        .iter()
        .map(|p| p.trim().parse::<f64>().map_err(|e| domain(format!("grid '{text}': {e}"))))
        .collect::<Result<Vec<_>>>()?;
    db_grid(v[0], v[1], v[2])
}

fn coverage(cli: &Cli, a: &CoverageArgs) -> Result<Table> {
    let l = load(&a.scenario, cli)?;
    let scenario = l.file.scenario()?;
    let grid = match (&a.grid, a.tau_db) {
        (Some(g), _) => parse_grid(g)?,
        (None, Some(t)) => vec![t],
        (None, None) => vec![linear_to_db(scenario.tiers[0].tau)],
    };
    let spec = SweepSpec {
        label: format!("k={}", a.k),
        quantity: if a.pmf { Quantity::Pmf } else { Quantity::KCoverage },
        k: a.k,
        epsilon_prime: None,
        scenario,
        tau_grid_db: grid,
        single_tier_approx: false,
    };
    let rows = run_sweep(&spec, &l.qmc, a.simulate.then_some(&l.sim))?;
    let mut t = sweep_table(&rows);
    if !a.simulate {
        drop_columns(&mut t, &["simulated", "simulated_err"]);
    }
    Ok(t)
}

fn drop_columns(t: &mut Table, names: &[&str]) {
    let keep: Vec<usize> = (0..t.header.len()).filter(|&i| !names.contains(&t.header[i].as_str())).collect();
    t.header = keep.iter().map(|&i| t.header[i].clone()).collect();
    for r in &mut t.rows {
        *r = keep.iter().map(|&i| r[i].clone()).collect();
    }
}

fn estimate_cells(e: &Estimate) -> [String; 2] {
    [num(e.value), num(e.std_error)]
}

fn moments(cli: &Cli, a: &MomentsArgs) -> Result<Table> {
    let l = load(&a.scenario, cli)?;
    let scenario = l.file.scenario()?;
    let p = scenario.channel()?;
    let ts: Vec<f64> = a.thresholds_db.iter().map(|&d| db_to_linear(d)).collect();
    let primes = ts.iter().map(|&t| stinr_from_sinr(t, p.gamma)).collect::<Result<Vec<_>>>()?;
    let outside = p.gamma * primes.iter().sum::<f64>() >= 1.0;
    let value = factorial_moment_sinr(&ts, &p, &l.qmc)?;
    let mut header: Vec<String> = ["n", "thresholds_dB", "value", "std_error", "flag"].map(String::from).to_vec();
    let labels: Vec<String> = a.thresholds_db.iter().map(|&d| num(d)).collect();
    let mut row = vec![ts.len().to_string(), labels.join(" ")];
    row.extend(estimate_cells(&value));
    row.push(if outside { "simplex".into() } else { String::new() });
    if a.simulate {
        let sim = SimConfig {
            top_k: l.sim.top_k.max(ts.len()),
            ..l.sim
        };
        let b = simulate(&scenario, &sim)?;
        header.extend(["simulated", "simulated_err"].map(String::from));
        row.extend(estimate_cells(&b.empirical_moment(&primes)?));
    }
    Ok(Table { header, rows: vec![row] })
}

fn icsc(cli: &Cli, a: &IcscArgs) -> Result<Table> {
    let l = load(&a.scenario, cli)?;
    let scenario = l.file.scenario()?;
    if !scenario.is_single_tier() {
        return Err(domain("icsc needs a single-tier scenario"));
    }
    let p = scenario.channel()?;
    let tau_db = a.tau_db.unwrap_or_else(|| linear_to_db(scenario.tiers[0].tau));
    let mut q = IcscQuery::new(a.k, a.combine.clone(), db_to_linear(tau_db), db_to_linear(a.epsilon_db), a.condition)?;
    if let Some(g) = a.gamma_bar {
        q = q.with_gamma_bar(g)?;
    }
    let value = icsc_coverage(&q, &p, &l.qmc)?;
    let combine: Vec<String> = q.combine_set.iter().map(|i| i.to_string()).collect();
    let mut header: Vec<String> = ["k", "combine", "tau_dB", "epsilon_dB", "condition", "analytic", "analytic_err"]
        .map(String::from)
        .to_vec();
    let mut row = vec![a.k.to_string(), combine.join(" "), num(tau_db), num(a.epsilon_db), a.condition.to_string()];
    row.extend(estimate_cells(&value));
    if a.simulate {
        let sim = SimConfig {
            top_k: l.sim.top_k.max(a.k),
            ..l.sim
        };
        let b = simulate(&scenario, &sim)?;
        header.extend(["simulated", "simulated_err"].map(String::from));
        row.extend(estimate_cells(&b.empirical_icsc(&q)?));
    }
    Ok(Table { header, rows: vec![row] })
}

fn figure(cli: &Cli, a: &FigureArgs) -> Result<Table> {
    let fig = preset(&a.name)?;
    let mut qmc = QmcConfig::default();
    let mut sim = SimConfig {
        trials: a.trials,
        region_radius: a.radius,
        far_field_mean: a.far_field,
        ..SimConfig::default()
    };
    apply_overrides(cli, &mut qmc, &mut sim)?;
    sim.validate()?;
    run_figure(&fig, &qmc, a.simulate.then_some(&sim))
}

/// Writes `text` to `path` only once it is complete, so failures leave no partial file.
/// Symlinks are followed; devices and pipes are written in place.
fn write_whole(path: &Path, text: &str) -> Result<()> {
    if let Ok(meta) = std::fs::metadata(path) {
        if !meta.is_file() {
            std::fs::write(path, text)?;
            return Ok(());
        }
    }
    let resolved = std::fs::canonicalize(path).ok();
    let path = resolved.as_deref().unwrap_or(path);
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path.file_name().ok_or_else(|| Error::Io(format!("{} is not a file path", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp", name.to_string_lossy()));
    std::fs::write(&tmp, text)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

/// Runs a parsed command. Returns the text destined for stdout.
pub fn run(cli: &Cli) -> Result<String> {
    let (table, dest) = match &cli.command {
        Command::Init { output } => {
            let text = ScenarioFile::template().to_json() + "\n";
            return match output {
                Some(path) => write_whole(path, &text).map(|_| String::new()),
                None => Ok(text),
            };
        }
        Command::Coverage(a) => (coverage(cli, a)?, a.out.output.clone()),
        Command::Moments(a) => (moments(cli, a)?, a.out.output.clone()),
        Command::Icsc(a) => (icsc(cli, a)?, a.out.output.clone()),
        Command::Figure(a) => {
            if !FIGURE_NAMES.contains(&a.name.as_str()) {
                return Err(domain(format!("unknown figure '{}'; expected one of {}", a.name, FIGURE_NAMES.join(", "))));
            }
            let dest = match &a.out_dir {
                Some(dir) => {
                    std::fs::create_dir_all(dir)?;
                    Some(dir.join(format!("{}.csv", a.name)))
                }
                None => None,
            };
            (figure(cli, a)?, dest)
        }
    };
    let text = table.to_csv_string();
    match dest {
        Some(path) => write_whole(&path, &text).map(|_| String::new()),
        None => Ok(text),
    }
}
