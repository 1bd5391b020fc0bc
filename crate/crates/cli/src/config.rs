//! Run configuration: a TOML document (or the `config` block of a run
//! manifest) with a `[params]` table and one table per command.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use fxdyn_core::basins::{BasinWindow, OrbitCaps};
use fxdyn_core::bifurcation::{Branches, SweepProtocol};
use fxdyn_core::simulate::{DEFAULT_BURN_IN, DEFAULT_E_MAX, DEFAULT_YEAR_LENGTH};
use fxdyn_core::{Axis, ModelParams, QqMode};
use serde::{Deserialize, Serialize};

use crate::presets;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CommandKind {
    Equilibria,
    Simulate,
    Sweep,
    Basins,
    Stats,
    Estimate,
}

impl CommandKind {
    pub fn name(self) -> &'static str {
        match self {
            CommandKind::Equilibria => "equilibria",
            CommandKind::Simulate => "simulate",
            CommandKind::Sweep => "sweep",
            CommandKind::Basins => "basins",
            CommandKind::Stats => "stats",
            CommandKind::Estimate => "estimate",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command: Option<CommandKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub params: ModelParams,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulate: Option<SimulateConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scan: Option<ScanConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub basins: Option<BasinsConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stats: Option<StatsConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub estimate: Option<EstimateConfig>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Start {
    P1,
    P2,
    P3,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    /// Recorded steps after the burn-in.
    #[serde(default = "default_horizon")]
    pub horizon: usize,
    #[serde(default = "default_burn_in")]
    pub burn_in: usize,
    #[serde(default = "default_year_length")]
    pub year_length: usize,
    /// Equilibrium to start from; ignored when `e0` and `dy0` are given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<Start>,
    #[serde(default)]
    pub offset: [f64; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub e0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dy0: Option<f64>,
    #[serde(default = "default_e_max")]
    pub e_max: f64,
    #[serde(default)]
    pub qq_mode: QqMode,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self {
            horizon: default_horizon(),
            burn_in: default_burn_in(),
            year_length: default_year_length(),
            start: None,
            offset: [0.0, 0.0],
            e0: None,
            dy0: None,
            e_max: default_e_max(),
            qq_mode: QqMode::Standardized,
        }
    }
}

fn default_horizon() -> usize {
    10 * DEFAULT_YEAR_LENGTH
}
fn default_burn_in() -> usize {
    DEFAULT_BURN_IN
}
fn default_year_length() -> usize {
    DEFAULT_YEAR_LENGTH
}
fn default_e_max() -> f64 {
    DEFAULT_E_MAX
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub axis: Axis,
    pub range: [f64; 2],
    /// Number of grid values, endpoints included.
    pub n: usize,
    #[serde(default = "default_transient")]
    pub transient: usize,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_offset")]
    pub offset: [f64; 2],
    #[serde(default = "default_branches")]
    pub branches: Branches,
    #[serde(default = "default_e_max")]
    pub e_max: f64,
}

fn default_transient() -> usize {
    SweepProtocol::default().transient
}
fn default_samples() -> usize {
    SweepProtocol::default().samples
}
fn default_offset() -> [f64; 2] {
    let (a, b) = SweepProtocol::default().offset;
    [a, b]
}
fn default_branches() -> Branches {
    Branches::Both
}

impl SweepConfig {
    pub fn protocol(&self) -> SweepProtocol {
        SweepProtocol {
            transient: self.transient,
            samples: self.samples,
            offset: (self.offset[0], self.offset[1]),
            branches: self.branches,
            e_max: self.e_max,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanConfig {
    pub axis1: Axis,
    pub range1: [f64; 2],
    pub n1: usize,
    pub axis2: Axis,
    pub range2: [f64; 2],
    pub n2: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasinsConfig {
    pub e_range: [f64; 2],
    pub dy_range: [f64; 2],
    pub nx: usize,
    pub ny: usize,
    #[serde(default = "default_t_max")]
    pub t_max: usize,
    #[serde(default = "default_eps_conv")]
    pub eps_conv: f64,
    #[serde(default = "default_e_max")]
    pub e_max: f64,
    #[serde(default = "default_dwell")]
    pub dwell: usize,
    /// Also write the run-length-encoded raster.
    #[serde(default)]
    pub rle: bool,
}

fn default_t_max() -> usize {
    OrbitCaps::default().t_max
}
fn default_eps_conv() -> f64 {
    OrbitCaps::default().eps_conv
}
fn default_dwell() -> usize {
    OrbitCaps::default().dwell
}

impl BasinsConfig {
    pub fn window(&self) -> BasinWindow {
        BasinWindow { e: (self.e_range[0], self.e_range[1]), dy: (self.dy_range[0], self.dy_range[1]) }
    }

    pub fn caps(&self) -> OrbitCaps {
        OrbitCaps { t_max: self.t_max, eps_conv: self.eps_conv, e_max: self.e_max, dwell: self.dwell }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Transform {
    /// Use the column as is.
    #[default]
    None,
    /// `exp(x_t - x_{t-1}) - 1`, for log-level columns.
    Returns,
    /// `x_t - x_{t-1}`.
    Diff,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StatsConfig {
    pub input: PathBuf,
    pub column: String,
    #[serde(default)]
    pub transform: Transform,
    #[serde(default)]
    pub qq_mode: QqMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimateConfig {
    pub input: PathBuf,
    /// Measurement noise variance; estimated when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    /// State noise variance; estimated when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
}

/// Manifest files carry the resolved configuration under `config`.
#[derive(Deserialize)]
struct ManifestConfig {
    config: RunConfig,
}

pub fn parse_toml(text: &str) -> Result<RunConfig> {
    Ok(toml::from_str(text)?)
}

/// Reads a TOML config, or a run manifest when the file ends in `.json`.
pub fn load(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
    let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
    let cfg = if is_json {
        serde_json::from_str::<ManifestConfig>(&text)
            .with_context(|| format!("{} is not a run manifest", path.display()))?
            .config
    } else {
        parse_toml(&text).with_context(|| format!("invalid config {}", path.display()))?
    };
    Ok(cfg)
}

pub fn load_preset(name: &str) -> Result<RunConfig> {
    let text = presets::get(name)
        .ok_or_else(|| anyhow!("unknown preset `{name}` (available: {})", presets::names().join(", ")))?;
    parse_toml(text).with_context(|| format!("bundled preset `{name}` is invalid"))
}

impl RunConfig {
    /// Checks everything that can be checked before any computation starts.
    pub fn validate(&self, command: CommandKind) -> Result<()> {
        self.params.validate()?;
        if self.workers == Some(0) {
            bail!("workers must be at least 1");
        }
        match command {
            CommandKind::Equilibria => {}
            CommandKind::Simulate => {
                let s = self.simulate.clone().unwrap_or_default();
                if s.e0.is_some() != s.dy0.is_some() {
                    bail!("[simulate] needs both e0 and dy0, or neither");
                }
                if s.horizon == 0 {
                    bail!("[simulate] horizon must be positive");
                }
            }
            CommandKind::Sweep => match (&self.sweep, &self.scan) {
                (None, None) => bail!("sweep needs a [sweep] or a [scan] table"),
                (Some(s), _) => {
                    if !(s.range[0] < s.range[1]) || s.n < 2 {
                        bail!("[sweep] needs range[0] < range[1] and n >= 2");
                    }
                }
                (None, Some(s)) => {
                    if s.axis1 == s.axis2 || s.n1 < 2 || s.n2 < 2 {
                        bail!("[scan] needs two distinct axes with at least 2 points each");
                    }
                }
            },
            CommandKind::Basins => {
                let b = self.basins.as_ref().ok_or_else(|| anyhow!("basins needs a [basins] table with e_range and dy_range"))?;
                b.window().validate()?;
                b.caps().validate()?;
                if b.nx < 2 || b.ny < 2 {
                    bail!("[basins] needs nx, ny >= 2");
                }
            }
            CommandKind::Stats => {
                if self.stats.is_none() {
                    bail!("stats needs --input and --column, or a [stats] table");
                }
            }
            CommandKind::Estimate => {
                let e = self.estimate.as_ref().ok_or_else(|| anyhow!("estimate needs --input or an [estimate] table"))?;
                if e.r.is_some() != e.q.is_some() {
                    bail!("[estimate] needs both r and q, or neither");
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_rejected() {
        assert!(parse_toml("[params]\nmu = 3.0\nlambda = 2.0\n").is_err());
        assert!(parse_toml("colour = 1\n").is_err());
        assert!(parse_toml("[sweep]\naxis = \"mu\"\nrange = [0.0, 1.0]\nn = 3\nstep = 2\n").is_err());
    }

    #[test]
    fn partial_params_take_baseline() {
        let c = parse_toml("[params]\nmu = 3.5\nsigma = 0.0\n").unwrap();
        assert_eq!(c.params.mu, 3.5);
        assert_eq!(c.params.rho, ModelParams::default().rho);
    }

    #[test]
    fn every_preset_parses_and_validates() {
        for name in presets::names() {
            let c = load_preset(name).unwrap();
            let cmd = c.command.unwrap_or_else(|| panic!("{name} has no command"));
            c.validate(cmd).unwrap_or_else(|e| panic!("{name}: {e:#}"));
        }
    }

    #[test]
    fn bad_shares_fail_validation() {
        let c = parse_toml("[params]\nw_f = 0.9\nw_c = 0.1\nw_e = 0.1\n").unwrap();
        let err = c.validate(CommandKind::Equilibria).unwrap_err();
        assert!(format!("{err}").contains("sum to 1"));
    }
}
