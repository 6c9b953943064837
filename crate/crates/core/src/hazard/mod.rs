//! Stochastic hazard scenarios: wind profiles, line damage under every pole
//! option, repair costs and perturbed loads.
//!
//! Every scenario draws from its own child seed derived from the master seed
//! and the scenario position, so a set is reproducible byte for byte and can
//! be sampled in parallel.

mod fragility;
mod sampling;

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::network::Network;

pub use fragility::FragilityCurve;
pub use sampling::{
    child_seed, perturb_loads, sample_damage, sample_repair_costs, sample_wind, HazardProfile,
    LoadProfile, RepairCosts, Stream, Zeta,
};

#[derive(Debug, Error)]
pub enum HazardError {
    #[error("horizon must be at least one step")]
    NonPositiveHorizon,
    #[error("invalid hazard configuration: {0}")]
    InvalidConfig(String),
    #[error("pole option {option} references missing fragility curve `{id}`")]
    MissingFragility { option: usize, id: String },
    #[error("perturbation range {0} outside [0, 1)")]
    PerturbRange(f64),
    #[error("need at least one scenario, got {0}")]
    NoScenarios(usize),
    #[error("scenario {scenario}: {what}")]
    Dimension { scenario: usize, what: String },
    #[error("scenario probabilities sum to {0}, expected 1")]
    Probability(f64),
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("scenario file does not match the schema: {0}")]
    Schema(#[from] serde_json::Error),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LoadPerturbation {
    /// Fresh multiplier per bus and step.
    #[default]
    PerStep,
    /// One multiplier per bus for the whole event.
    PerEvent,
}

fn d_horizon() -> usize {
    12
}
fn d_dt() -> f64 {
    2.0
}
fn d_peak() -> f64 {
    35.0
}
fn d_base() -> f64 {
    10.0
}
fn d_peak_frac() -> f64 {
    0.4
}
fn d_sigma() -> f64 {
    0.2
}
fn d_peak_min() -> f64 {
    20.0
}
fn d_peak_max() -> f64 {
    60.0
}
fn d_perturb() -> f64 {
    0.3
}

/// Scenario generation parameters. The wind model is a deterministic
/// rise-peak-decay envelope whose peak is scaled by one lognormal draw per
/// scenario and clamped to `[peak_min_ms, peak_max_ms]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HazardConfig {
    #[serde(default = "d_horizon")]
    pub horizon_steps: usize,
    #[serde(default = "d_dt")]
    pub dt_hours: f64,
    #[serde(default = "d_base")]
    pub base_wind_ms: f64,
    #[serde(default = "d_peak")]
    pub peak_wind_ms: f64,
    /// Position of the peak as a fraction of the horizon.
    #[serde(default = "d_peak_frac")]
    pub peak_position: f64,
    /// Log-space standard deviation of the peak multiplier.
    #[serde(default = "d_sigma")]
    pub peak_sigma: f64,
    #[serde(default = "d_peak_min")]
    pub peak_min_ms: f64,
    #[serde(default = "d_peak_max")]
    pub peak_max_ms: f64,
    #[serde(default = "d_perturb")]
    pub perturb_range: f64,
    #[serde(default)]
    pub load_perturbation: LoadPerturbation,
}

impl Default for HazardConfig {
    fn default() -> Self {
        Self {
            horizon_steps: d_horizon(),
            dt_hours: d_dt(),
            base_wind_ms: d_base(),
            peak_wind_ms: d_peak(),
            peak_position: d_peak_frac(),
            peak_sigma: d_sigma(),
            peak_min_ms: d_peak_min(),
            peak_max_ms: d_peak_max(),
            perturb_range: d_perturb(),
            load_perturbation: LoadPerturbation::PerStep,
        }
    }
}

impl HazardConfig {
    pub fn validate(&self) -> Result<(), HazardError> {
        if self.horizon_steps == 0 {
            return Err(HazardError::NonPositiveHorizon);
        }
        let bad = |m: &str| Err(HazardError::InvalidConfig(m.to_string()));
        if !(self.dt_hours > 0.0 && self.dt_hours.is_finite()) {
            return bad("dt_hours must be positive");
        }
        if !(self.base_wind_ms >= 0.0) {
            return bad("base_wind_ms must be non-negative");
        }
        if !(self.peak_sigma >= 0.0 && self.peak_sigma.is_finite()) {
            return bad("peak_sigma must be non-negative");
        }
        if !(self.base_wind_ms <= self.peak_min_ms && self.peak_min_ms <= self.peak_max_ms) {
            return bad("need base_wind_ms <= peak_min_ms <= peak_max_ms");
        }
        if !(0.0..=1.0).contains(&self.peak_position) {
            return bad("peak_position must lie in [0, 1]");
        }
        if !(0.0..1.0).contains(&self.perturb_range) {
            return Err(HazardError::PerturbRange(self.perturb_range));
        }
        Ok(())
    }
}

/// One realization of the hazard.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub id: u32,
    pub probability: f64,
    /// Wind speed per step (m/s); informational.
    #[serde(default)]
    pub wind: Vec<f64>,
    /// Damage flag `[line][pole option][step]`, absorbing in the step index.
    pub zeta: Zeta,
    /// Repair cost `[line][pole option]` in dollars.
    pub chi: RepairCosts,
    /// Active load `[bus][step]` in kW.
    pub p_load: LoadProfile,
    /// Reactive load `[bus][step]` in kVAr.
    pub q_load: LoadProfile,
}

impl Scenario {
    pub fn steps(&self) -> usize {
        self.p_load.first().map_or(0, Vec::len)
    }

    pub fn damaged(&self, line: usize, option: usize, step: usize) -> bool {
        self.zeta[line][option][step] != 0
    }

    /// Dimension checks against `net`; `pos` labels errors.
    pub fn check(&self, net: &Network, pos: usize) -> Result<(), HazardError> {
        let err = |what: String| Err(HazardError::Dimension { scenario: pos, what });
        let t = self.steps();
        if t == 0 {
            return err("no time steps".into());
        }
        let k = net.num_pole_options();
        if self.zeta.len() != net.num_lines() || self.chi.len() != net.num_lines() {
            return err(format!("expected {} lines in zeta and chi", net.num_lines()));
        }
        for (l, (z, c)) in self.zeta.iter().zip(&self.chi).enumerate() {
            if z.len() != k || c.len() != k {
                return err(format!("line {l}: expected {k} pole options"));
            }
            if z.iter().any(|row| row.len() != t) {
                return err(format!("line {l}: expected {t} steps in zeta"));
            }
            if z.iter().flatten().any(|&v| v > 1) {
                return err(format!("line {l}: zeta must be 0 or 1"));
            }
            if c.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
                return err(format!("line {l}: repair costs must be finite and non-negative"));
            }
        }
        for (name, loads) in [("p_load", &self.p_load), ("q_load", &self.q_load)] {
            if loads.len() != net.num_buses() || loads.iter().any(|r| r.len() != t) {
                return err(format!("{name} must be {} buses x {t} steps", net.num_buses()));
            }
            if loads.iter().flatten().any(|x| !x.is_finite()) {
                return err(format!("{name} has non-finite entries"));
            }
        }
        if !(0.0..=1.0).contains(&self.probability) {
            return err(format!("probability {} outside [0, 1]", self.probability));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSet {
    pub seed: u64,
    pub config_digest: String,
    pub config: HazardConfig,
    pub scenarios: Vec<Scenario>,
}

impl ScenarioSet {
    pub fn dt_hours(&self) -> f64 {
        self.config.dt_hours
    }

    pub fn len(&self) -> usize {
        self.scenarios.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scenarios.is_empty()
    }

    /// Dimension and probability checks against `net`.
    pub fn check(&self, net: &Network) -> Result<(), HazardError> {
        if self.scenarios.is_empty() {
            return Err(HazardError::NoScenarios(0));
        }
        for (pos, s) in self.scenarios.iter().enumerate() {
            s.check(net, pos)?;
        }
        let total: f64 = self.scenarios.iter().map(|s| s.probability).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(HazardError::Probability(total));
        }
        Ok(())
    }

    pub fn to_json_string(&self) -> String {
        let mut s = serde_json::to_string(self).expect("scenario set serializes");
        s.push('\n');
        s
    }

    pub fn from_json_str(text: &str) -> Result<Self, HazardError> {
        Ok(serde_json::from_str(text)?)
    }

    /// Scenario set with no damage and unperturbed base loads.
    pub fn undamaged(net: &Network, config: &HazardConfig, n: usize) -> Result<Self, HazardError> {
        config.validate()?;
        if n == 0 {
            return Err(HazardError::NoScenarios(n));
        }
        let t = config.horizon_steps;
        let k = net.num_pole_options();
        let loads = |f: fn(&crate::network::Bus) -> &crate::network::LoadSeries| {
            net.buses
                .iter()
                .map(|b| (0..t).map(|s| f(b).at(s)).collect())
                .collect::<LoadProfile>()
        };
        let scenarios = (0..n)
            .map(|s| Scenario {
                id: s as u32 + 1,
                probability: 1.0 / n as f64,
                wind: vec![0.0; t],
                zeta: vec![vec![vec![0; t]; k]; net.num_lines()],
                chi: vec![vec![0.0; k]; net.num_lines()],
                p_load: loads(|b| &b.base_p_load),
                q_load: loads(|b| &b.base_q_load),
            })
            .collect();
        Ok(Self {
            seed: 0,
            config_digest: config_digest(net, config, n, 0),
            config: config.clone(),
            scenarios,
        })
    }
}

pub fn parse_scenarios(path: impl AsRef<Path>) -> Result<ScenarioSet, HazardError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| HazardError::Io {
        path: path.display().to_string(),
        source,
    })?;
    ScenarioSet::from_json_str(&text)
}

/// SHA-256 over everything that determines a generated set.
pub fn config_digest(net: &Network, config: &HazardConfig, n: usize, seed: u64) -> String {
    let mut h = Sha256::new();
    h.update(net.to_json_string().as_bytes());
    h.update(serde_json::to_string(config).expect("config serializes").as_bytes());
    h.update(n.to_le_bytes());
    h.update(seed.to_le_bytes());
    hex::encode(h.finalize())
}

/// Samples `n` equiprobable scenarios. The result depends only on
/// `(net, config, n, seed)`.
pub fn generate_scenarios(
    net: &Network,
    config: &HazardConfig,
    n: usize,
    seed: u64,
) -> Result<ScenarioSet, HazardError> {
    use rayon::prelude::*;

    if n < 1 {
        return Err(HazardError::NoScenarios(n));
    }
    config.validate()?;
    sampling::resolve_curves(net)?;
    let probability = 1.0 / n as f64;
    let scenarios = (0..n)
        .into_par_iter()
        .map(|s| -> Result<Scenario, HazardError> {
            let profile = sample_wind(child_seed(seed, s, Stream::Wind), config)?;
            let zeta = sample_damage(&profile, net, child_seed(seed, s, Stream::Damage))?;
            let chi = sample_repair_costs(&zeta, &net.pole_catalog);
            let (p_load, q_load) = perturb_loads(
                net,
                config.perturb_range,
                config.horizon_steps,
                config.load_perturbation,
                child_seed(seed, s, Stream::Load),
            )?;
            Ok(Scenario {
                id: s as u32 + 1,
                probability,
                wind: profile.wind,
                zeta,
                chi,
                p_load,
                q_load,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ScenarioSet {
        seed,
        config_digest: config_digest(net, config, n, seed),
        config: config.clone(),
        scenarios,
    })
}
