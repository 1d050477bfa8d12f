//! Scenario files: one JSON document describing a game together with the
//! knobs of whichever commands will be run against it.
//!
//! Every struct rejects unknown fields so that typos surface as parse
//! errors instead of silently ignored settings. Channel gains must say
//! whether they are linear ratios or decibels; there is no guessing.

use std::fs;
use std::path::Path;

use serde::Deserialize;

use game_lab_core::aloha::{AlohaGame, CostBasis};
use game_lab_core::dynamics::{AxisSpec, GridSpec};
use game_lab_core::powerctl::{db_to_linear, ChannelModel, Modulation, ModulationModel, PowerGame};
use game_lab_core::utility::UtilitySpec;
use game_lab_core::variations::LinearGame;

use crate::CliError;

fn default_price() -> f64 {
    1.0
}

fn default_clip() -> [f64; 2] {
    let (lo, hi) = game_lab_core::aloha::DEFAULT_CLIP;
    [lo, hi]
}

/// Top-level scenario: the game, plus one optional parameter block per
/// command so a single file can drive several commands.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub game: GameConfig,
    /// Reserved for randomized commands; current commands are deterministic.
    #[serde(default)]
    #[allow(dead_code)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub simulate: Option<SimulateParams>,
    #[serde(default)]
    pub sweep: Option<SweepParams>,
    #[serde(default)]
    pub contour: Option<ContourParams>,
    #[serde(default)]
    pub basin: Option<BasinParams>,
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| {
            CliError::Config(format!("cannot read config {}: {e}", path.display()))
        })?;
        serde_json::from_str(&text).map_err(|e| {
            // serde_json reports line and column; keep them in the message.
            CliError::Config(format!("invalid config {}: {e}", path.display()))
        })
    }
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum GameConfig {
    Aloha(AlohaConfig),
    Power(PowerConfig),
    Linear(LinearConfig),
}

/// Random-access game over attempt probabilities.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlohaConfig {
    pub players: Vec<UtilityConfig>,
    pub alpha: f64,
    #[serde(default = "default_clip")]
    pub clip: [f64; 2],
    #[serde(default)]
    pub cost_basis: CostBasisConfig,
}

#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CostBasisConfig {
    #[default]
    Throughput,
    Power,
}

impl From<CostBasisConfig> for CostBasis {
    fn from(c: CostBasisConfig) -> Self {
        match c {
            CostBasisConfig::Throughput => CostBasis::Throughput,
            CostBasisConfig::Power => CostBasis::Power,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum UtilityConfig {
    Arctan {
        demand: f64,
        #[serde(default = "default_price")]
        price: f64,
    },
    ArctanScaled {
        u: f64,
        beta: f64,
        #[serde(default = "default_price")]
        price: f64,
    },
    Linear {
        slope: f64,
        #[serde(default = "default_price")]
        price: f64,
    },
    Saturating {
        demand: f64,
        saturation: f64,
        #[serde(default = "default_price")]
        price: f64,
    },
}

impl UtilityConfig {
    fn build(&self) -> Result<UtilitySpec, CliError> {
        let spec = match *self {
            UtilityConfig::Arctan { demand, price } => UtilitySpec::arctan(demand, price),
            UtilityConfig::ArctanScaled { u, beta, price } => {
                UtilitySpec::arctan_scaled(u, beta, price)
            }
            UtilityConfig::Linear { slope, price } => UtilitySpec::linear(slope, price),
            UtilityConfig::Saturating { demand, saturation, price } => {
                UtilitySpec::saturating(demand, saturation, price)
            }
        };
        spec.map_err(|e| CliError::Config(format!("bad utility: {e}")))
    }
}

/// Interference game over transmit powers.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerConfig {
    pub channel: ChannelConfig,
    pub modulation: ModulationConfig,
    pub demands: Vec<f64>,
    #[serde(default = "default_price")]
    pub price: f64,
    pub alpha: f64,
    #[serde(default = "power_basis")]
    pub cost_basis: CostBasisConfig,
}

fn power_basis() -> CostBasisConfig {
    CostBasisConfig::Power
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelConfig {
    pub noise: f64,
    pub gains: GainsConfig,
    #[serde(default)]
    pub processing_gain: Option<f64>,
}

/// Gain matrix with an explicit unit tag: `{"linear": [[...]]}` or
/// `{"db": [[...]]}`.
#[derive(Debug, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum GainsConfig {
    Linear(Vec<Vec<f64>>),
    Db(Vec<Vec<f64>>),
}

impl GainsConfig {
    fn linear(&self) -> Vec<Vec<f64>> {
        match self {
            GainsConfig::Linear(g) => g.clone(),
            GainsConfig::Db(g) => {
                g.iter().map(|row| row.iter().map(|&x| db_to_linear(x)).collect()).collect()
            }
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModulationConfig {
    pub scheme: SchemeConfig,
    pub bits_per_frame: u32,
    /// GMSK correlation coefficient; required for `gmsk`, rejected otherwise.
    #[serde(default)]
    pub kappa: Option<f64>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeConfig {
    Gmsk,
    Dbpsk,
    Gfsk,
    Qpsk,
    Qam16,
    Qam64,
    LargeNApprox,
}

impl ModulationConfig {
    fn build(&self) -> Result<ModulationModel, CliError> {
        let scheme = match (self.scheme, self.kappa) {
            (SchemeConfig::Gmsk, Some(kappa)) => Modulation::Gmsk { kappa },
            (SchemeConfig::Gmsk, None) => {
                return Err(CliError::Config("gmsk needs a kappa value".into()));
            }
            (_, Some(_)) => {
                return Err(CliError::Config("kappa applies to gmsk only".into()));
            }
            (SchemeConfig::Dbpsk, None) => Modulation::Dbpsk,
            (SchemeConfig::Gfsk, None) => Modulation::Gfsk,
            (SchemeConfig::Qpsk, None) => Modulation::Qpsk,
            (SchemeConfig::Qam16, None) => Modulation::Qam16,
            (SchemeConfig::Qam64, None) => Modulation::Qam64,
            (SchemeConfig::LargeNApprox, None) => Modulation::LargeNApprox,
        };
        ModulationModel::new(scheme, self.bits_per_frame)
            .map_err(|e| CliError::Config(format!("bad modulation: {e}")))
    }
}

/// Two-player game with linear utilities and corner equilibria.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearConfig {
    pub u: [f64; 2],
    #[serde(default = "default_price")]
    pub price: f64,
    pub alpha: f64,
    #[serde(default)]
    pub cost_basis: CostBasisConfig,
}

/// A built game, dispatched per command.
pub enum GameInstance {
    Aloha(AlohaGame),
    Power(PowerGame),
    Linear(LinearGame),
}

impl GameConfig {
    pub fn build(&self) -> Result<GameInstance, CliError> {
        let cfg_err = |e: game_lab_core::Error| CliError::Config(e.to_string());
        match self {
            GameConfig::Aloha(c) => {
                let players =
                    c.players.iter().map(|p| p.build()).collect::<Result<Vec<_>, _>>()?;
                let game = AlohaGame::new(
                    players,
                    c.alpha,
                    (c.clip[0], c.clip[1]),
                    c.cost_basis.into(),
                )
                .map_err(cfg_err)?;
                Ok(GameInstance::Aloha(game))
            }
            GameConfig::Power(c) => {
                let mut channel = ChannelModel::new(c.channel.noise, c.channel.gains.linear())
                    .map_err(cfg_err)?;
                if let Some(pg) = c.channel.processing_gain {
                    channel = channel.with_processing_gain(pg).map_err(cfg_err)?;
                }
                let game = PowerGame::new(
                    channel,
                    c.modulation.build()?,
                    c.demands.clone(),
                    c.price,
                    c.alpha,
                    c.cost_basis.into(),
                )
                .map_err(cfg_err)?;
                Ok(GameInstance::Power(game))
            }
            GameConfig::Linear(c) => {
                let game = LinearGame::new(c.u, c.price, c.alpha, c.cost_basis.into())
                    .map_err(cfg_err)?;
                Ok(GameInstance::Linear(game))
            }
        }
    }
}

/// Which response map drives a trajectory or basin run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ResponseConfig {
    Selfish,
    Altruistic,
    Partial,
    BlendLinear,
    BlendWeighted,
    PowerCost,
    BangBang,
}

impl ResponseConfig {
    pub fn name(self) -> &'static str {
        match self {
            ResponseConfig::Selfish => "selfish",
            ResponseConfig::Altruistic => "altruistic",
            ResponseConfig::Partial => "partial",
            ResponseConfig::BlendLinear => "blend-linear",
            ResponseConfig::BlendWeighted => "blend-weighted",
            ResponseConfig::PowerCost => "power-cost",
            ResponseConfig::BangBang => "bang-bang",
        }
    }
}

/// Which energy function to log or grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LyapunovConfig {
    Selfish,
    Altruistic,
    Blend,
    PowerCost,
}

impl LyapunovConfig {
    pub fn name(self) -> &'static str {
        match self {
            LyapunovConfig::Selfish => "selfish",
            LyapunovConfig::Altruistic => "altruistic",
            LyapunovConfig::Blend => "blend",
            LyapunovConfig::PowerCost => "power-cost",
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateParams {
    pub start: Vec<f64>,
    pub dt: f64,
    pub t_end: f64,
    pub response: ResponseConfig,
    #[serde(default)]
    pub lyapunov: Option<LyapunovConfig>,
    /// Power games only: box ceiling per flow.
    #[serde(default)]
    pub power_cap: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepParams {
    pub alphas: Vec<f64>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisConfig {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub x: AxisConfig,
    pub y: AxisConfig,
}

impl GridConfig {
    pub fn build(&self) -> Result<GridSpec, CliError> {
        for (name, axis) in [("x", &self.x), ("y", &self.y)] {
            if axis.count == 0 {
                return Err(CliError::Config(format!("{name} axis needs at least one point")));
            }
            if !(axis.start.is_finite() && axis.stop.is_finite()) {
                return Err(CliError::Config(format!("{name} axis bounds must be finite")));
            }
        }
        Ok(GridSpec {
            x: AxisSpec { start: self.x.start, stop: self.x.stop, count: self.x.count },
            y: AxisSpec { start: self.y.start, stop: self.y.stop, count: self.y.count },
        })
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContourParams {
    pub grid: GridConfig,
    pub lyapunov: LyapunovConfig,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasinParams {
    pub grid: GridConfig,
    pub attractors: Vec<Vec<f64>>,
    pub response: ResponseConfig,
    #[serde(default)]
    pub capture_radius: Option<f64>,
    #[serde(default)]
    pub t_end: Option<f64>,
    #[serde(default)]
    pub dt: Option<f64>,
    #[serde(default)]
    pub power_cap: Option<f64>,
}
