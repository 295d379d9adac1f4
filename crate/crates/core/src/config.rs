//! Run configurations, their content hash, and sweep manifests.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::caps::Caps;
use crate::error::{Error, Result};
use crate::experiments::{
    compute_profile, concentration_sweep, nicemax_sweep, one_statement_sweep, zero_statement_sweep, Experiment,
    SweepResult, ThresholdProfile,
};
use crate::index2::{enumerate_index2_subgroups, is_nice};
use crate::parse::{parse_group_spec, parse_p_grid, parse_subgroup};
use crate::sumfree::Safety;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Subcommand {
    Group,
    Subgroups,
    Cayley,
    Solve,
    Hypergeom,
    Sweep,
    Verify,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

fn default_omega() -> f64 {
    3.0
}

fn default_delta() -> f64 {
    0.1
}

fn default_k_max() -> usize {
    2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub subcommand: Subcommand,
    pub group: String,
    #[serde(default)]
    pub experiment: Option<Experiment>,
    /// Index set label such as `0+2`; the first nice subgroup when absent.
    #[serde(default)]
    pub subgroup: Option<String>,
    /// Law string such as `p:0.1`, for subcommands that sample.
    #[serde(default)]
    pub law: Option<String>,
    #[serde(default)]
    pub p_grid: Option<String>,
    pub seed: u64,
    pub trials: u64,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default = "default_omega")]
    pub omega: f64,
    #[serde(default = "default_k_max")]
    pub k_max: usize,
    #[serde(default)]
    pub safety: Safety,
    #[serde(default)]
    pub output: Option<String>,
    #[serde(default)]
    pub format: Format,
}

impl RunConfig {
    pub fn sweep(group: &str, experiment: Experiment, p_grid: &str, trials: u64, seed: u64) -> Self {
        RunConfig {
            subcommand: Subcommand::Sweep,
            group: group.into(),
            experiment: Some(experiment),
            subgroup: None,
            law: None,
            p_grid: Some(p_grid.into()),
            seed,
            trials,
            delta: default_delta(),
            omega: default_omega(),
            k_max: default_k_max(),
            safety: Safety::Strict,
            output: None,
            format: Format::Csv,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Config(e.to_string()))
    }

    /// Hex SHA-256 of the compact JSON form; fields serialize in declaration
    /// order, so equal configs hash equally.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_json().as_bytes()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Manifest {
    pub group: String,
    pub canonical_group: String,
    pub subgroup: Option<String>,
    pub profile: ThresholdProfile,
    pub p_grid: Vec<f64>,
    pub seed: u64,
    pub trials: u64,
    pub config_hash: String,
    pub config: RunConfig,
    pub version: String,
    pub crossing_p: Vec<(String, Option<f64>)>,
}

/// Runs the sweep described by `config`.
pub fn run_sweep(config: &RunConfig, caps: &Caps) -> Result<(SweepResult, Manifest)> {
    let experiment = config
        .experiment
        .ok_or_else(|| Error::Config("sweep needs an experiment".into()))?;
    let g = parse_group_spec(&config.group, caps.elements)?;
    let profile = compute_profile(&g, config.delta)?;
    let grid_text = config
        .p_grid
        .as_deref()
        .ok_or_else(|| Error::Config("sweep needs a p grid".into()))?;
    let p_grid = parse_p_grid(grid_text, Some(profile.p_star))?;
    let needs_sub = matches!(experiment, Experiment::Zero | Experiment::Concentration);
    let sub = if needs_sub {
        Some(match &config.subgroup {
            Some(label) => parse_subgroup(&g, label)?,
            None => enumerate_index2_subgroups(&g, caps)?
                .into_iter()
                .find(|s| is_nice(&g, s, config.delta))
                .ok_or(Error::NotNice)?,
        })
    } else {
        None
    };
    let (seed, trials) = (config.seed, config.trials);
    let result = match experiment {
        Experiment::Zero => {
            let sub = sub.as_ref().expect("zero sweep has a subgroup");
            zero_statement_sweep(&g, sub, &p_grid, trials, seed, config.delta, config.safety, caps)?
        }
        Experiment::One => one_statement_sweep(&g, &p_grid, config.k_max, trials, seed, config.safety, caps)?,
        Experiment::Concentration => concentration_sweep(
            sub.as_ref().expect("concentration has a subgroup"),
            &p_grid,
            trials,
            seed,
            config.safety,
        )?,
        Experiment::Nicemax => nicemax_sweep(&g, &p_grid, config.omega, config.delta, trials, seed, caps)?,
    };
    let crossing_p = result
        .events()
        .into_iter()
        .map(|e| (e.clone(), result.crossing_p(&e)))
        .collect();
    let manifest = Manifest {
        group: config.group.clone(),
        canonical_group: g.canonical_name(),
        subgroup: sub.map(|s| s.label()),
        profile,
        p_grid,
        seed,
        trials,
        config_hash: config.hash(),
        config: config.clone(),
        version: env!("CARGO_PKG_VERSION").into(),
        crossing_p,
    };
    Ok((result, manifest))
}

pub fn manifest_json(manifest: &Manifest) -> String {
    serde_json::to_string_pretty(manifest).expect("manifest serializes") + "\n"
}
