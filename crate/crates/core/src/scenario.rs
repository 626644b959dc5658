//! JSON scenario files.
//!
//! ```json
//! {
//!   "path_loss": { "K": 1.0, "beta": 3.0 },
//!   "channel": { "W": 0.0, "gamma": 1.0 },
//!   "tiers": [
//!     { "lambda": 1.0, "power": 1.0, "fading": { "kind": "constant" }, "tau_dB": 0.0 }
//!   ],
//!   "qmc": { "points": 8192, "seed": 24301 },
//!   "sim": { "radius": 10.0, "trials": 100000, "seed": 1, "top_k": 8 }
//! }
//! ```
//!
//! `qmc` and `sim` are optional. Fading kinds are `constant`,
//! `exponential` (`params.mean`) and `lognormal` (`params.sigma_db`).

use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::coverage::{db_to_linear, linear_to_db, Fading, NetworkScenario, TierSpec};
use crate::error::{Error, Result};
use crate::kernels::PathLossParams;
use crate::netsim::SimConfig;
use crate::qmc::QmcConfig;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSection {
    #[serde(rename = "W")]
    pub noise: f64,
    pub gamma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TierSection {
    pub lambda: f64,
    pub power: f64,
    pub fading: Fading,
    #[serde(rename = "tau_dB")]
    pub tau_db: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QmcSection {
    pub points: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    pub radius: f64,
    pub trials: usize,
    pub seed: u64,
    pub top_k: usize,
    #[serde(default)]
    pub far_field_mean: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub path_loss: PathLossParams,
    pub channel: ChannelSection,
    pub tiers: Vec<TierSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub qmc: Option<QmcSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sim: Option<SimSection>,
}

impl ScenarioFile {
    /// Single-tier template written by `init`.
    pub fn template() -> Self {
        let q = QmcConfig::default();
        let s = SimConfig::default();
        ScenarioFile {
            path_loss: PathLossParams { beta: 3.0, k: 1.0 },
            channel: ChannelSection { noise: 0.0, gamma: 1.0 },
            tiers: vec![TierSection {
                lambda: 1.0,
                power: 1.0,
                fading: Fading::Constant,
                tau_db: 0.0,
            }],
            qmc: Some(QmcSection {
                points: q.point_count,
                seed: q.scramble_seed,
            }),
            sim: Some(SimSection {
                radius: s.region_radius,
                trials: s.trials,
                seed: s.seed,
                top_k: s.top_k,
                far_field_mean: s.far_field_mean,
            }),
        }
    }

    /// Parses and validates a scenario document.
    pub fn parse(text: &str) -> Result<Self> {
        let f: ScenarioFile = serde_json::from_str(text).map_err(|e| Error::Scenario(e.to_string()))?;
        f.scenario()?;
        f.qmc_config()?;
        f.sim_config()?;
        Ok(f)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Scenario(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            Error::Scenario(m) => Error::Scenario(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serialization cannot fail")
    }

    pub fn from_scenario(s: &NetworkScenario) -> Self {
        let mut f = Self::template();
        f.path_loss = s.path_loss;
        f.channel = ChannelSection {
            noise: s.noise,
            gamma: s.gamma,
        };
        f.tiers = s
            .tiers
            .iter()
            .map(|t| TierSection {
                lambda: t.lambda,
                power: t.power,
                fading: t.fading,
                tau_db: linear_to_db(t.tau),
            })
            .collect();
        f
    }

    pub fn scenario(&self) -> Result<NetworkScenario> {
        let tiers = self
            .tiers
            .iter()
            .map(|t| TierSpec::new(t.lambda, t.power, t.fading, db_to_linear(t.tau_db)))
            .collect::<Result<Vec<_>>>()?;
        NetworkScenario::new(PathLossParams::new(self.path_loss.beta, self.path_loss.k)?, self.channel.noise, self.channel.gamma, tiers)
    }

    pub fn qmc_config(&self) -> Result<QmcConfig> {
        let mut c = QmcConfig::default();
        if let Some(q) = self.qmc {
            c.point_count = q.points;
            c.scramble_seed = q.seed;
        }
        c.validate()?;
        Ok(c)
    }

    pub fn sim_config(&self) -> Result<SimConfig> {
        let mut c = SimConfig::default();
        if let Some(s) = self.sim {
            c = SimConfig {
                region_radius: s.radius,
                trials: s.trials,
                seed: s.seed,
                top_k: s.top_k,
                far_field_mean: s.far_field_mean,
            };
        }
        c.validate()?;
        Ok(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn template_round_trips() {
        let t = ScenarioFile::template();
        let back = ScenarioFile::parse(&t.to_json()).unwrap();
        assert_eq!(t, back);
        assert_eq!(back.to_json(), t.to_json());
    }

    #[test]
    fn optional_sections_default() {
        let text = r#"{
            "path_loss": {"K": 1, "beta": 4},
            "channel": {"W": 0, "gamma": 1},
            "tiers": [{"lambda": 1, "power": 1, "fading": {"kind": "exponential", "params": {"mean": 1}}, "tau_dB": 0}]
        }"#;
        let f = ScenarioFile::parse(text).unwrap();
        assert_eq!(f.qmc_config().unwrap(), QmcConfig::default());
        assert_eq!(f.sim_config().unwrap(), SimConfig::default());
        let s = f.scenario().unwrap();
        assert_eq!(s.tiers[0].tau, 1.0);
        assert_eq!(s.tiers[0].fading, Fading::Exponential { mean: 1.0 });
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let mut v: serde_json::Value = serde_json::from_str(&ScenarioFile::template().to_json()).unwrap();
        v["channel"]["noise"] = 1.0.into();
        let err = ScenarioFile::parse(&v.to_string()).unwrap_err();
        assert!(err.to_string().contains("noise"), "{err}");
        let mut v: serde_json::Value = serde_json::from_str(&ScenarioFile::template().to_json()).unwrap();
        v["extra"] = 1.into();
        assert!(ScenarioFile::parse(&v.to_string()).is_err());
    }

    #[test]
    fn invalid_values_are_rejected() {
        let mut f = ScenarioFile::template();
        f.path_loss.beta = 2.0;
        assert!(ScenarioFile::parse(&f.to_json()).is_err());
        let mut f = ScenarioFile::template();
        f.tiers.clear();
        assert!(ScenarioFile::parse(&f.to_json()).is_err());
        assert!(ScenarioFile::parse("{ not json").is_err());
    }

    #[test]
    fn lognormal_fading_parses() {
        let mut f = ScenarioFile::template();
        f.tiers[0].fading = Fading::Lognormal { sigma_db: 8.0 };
        let back = ScenarioFile::parse(&f.to_json()).unwrap();
        assert!(back.to_json().contains("\"sigma_db\": 8.0"));
        assert_eq!(back, f);
    }
}
