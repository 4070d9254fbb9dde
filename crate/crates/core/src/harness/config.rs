//! Run configuration, read from TOML. Every key is optional; missing keys
//! take the robot-task defaults.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::mdp::RewardParams;
use crate::ncs::{DelayConfig, Timing};
use crate::plant::{identity, DoubleIntegrator, Dynamics, PlantModel, Unicycle};
use crate::sac::SacConfig;
use crate::stl::{parse_spec, Spec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpecSection {
    pub formula: String,
    pub beta: f64,
}

impl Default for SpecSection {
    fn default() -> Self {
        Self { formula: crate::ROBOT_TASK.to_string(), beta: 100.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlantKind {
    #[default]
    Unicycle,
    DoubleIntegrator,
}

/// Plant parameters. Box and shift fields left out fall back to the
/// defaults of the selected plant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlantSection {
    pub kind: PlantKind,
    pub dt: f64,
    /// Standard deviation of the additive Gaussian noise on every coordinate.
    pub noise: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub init_low: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub init_high: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub action_low: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub action_high: Option<Vec<f64>>,
    /// Subtracted from every plant state before it reaches a network.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input_shift: Option<Vec<f64>>,
}

impl Default for PlantSection {
    fn default() -> Self {
        Self {
            kind: PlantKind::Unicycle,
            dt: 0.1,
            noise: 0.01,
            init_low: None,
            init_high: None,
            action_low: None,
            action_high: None,
            input_shift: None,
        }
    }
}

struct PlantDefaults {
    init_low: Vec<f64>,
    init_high: Vec<f64>,
    action_low: Vec<f64>,
    action_high: Vec<f64>,
    input_shift: Vec<f64>,
}

impl PlantKind {
    fn defaults(self) -> PlantDefaults {
        use std::f64::consts::FRAC_PI_2;
        match self {
            PlantKind::Unicycle => PlantDefaults {
                init_low: vec![0.0, 0.0, -FRAC_PI_2],
                init_high: vec![2.5, 2.5, FRAC_PI_2],
                action_low: vec![-1.0; 2],
                action_high: vec![1.0; 2],
                input_shift: vec![2.5, 2.5, 0.0],
            },
            PlantKind::DoubleIntegrator => PlantDefaults {
                init_low: vec![-1.0, 0.0],
                init_high: vec![1.0, 0.0],
                action_low: vec![-1.0],
                action_high: vec![1.0],
                input_shift: vec![0.0, 0.0],
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DelaySection {
    pub d_sc: usize,
    pub d_ca: usize,
    pub d_sc_max: usize,
    pub d_ca_max: usize,
    pub timing: Timing,
}

impl Default for DelaySection {
    fn default() -> Self {
        Self { d_sc: 3, d_ca: 4, d_sc_max: 5, d_ca_max: 5, timing: Timing::OnArrival }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSection {
    /// Environment steps between evaluations.
    pub every: usize,
    pub episodes: usize,
    /// Draw fresh initial states at every evaluation instead of one fixed set.
    pub resample: bool,
}

impl Default for EvalSection {
    fn default() -> Self {
        Self { every: 10_000, episodes: 100, resample: false }
    }
}

/// What the networks see.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InputMode {
    /// Current state, flags, and action history.
    #[default]
    Preprocessed,
    /// Current state and flags only.
    TauMdp,
    /// The raw flattened window and action history.
    NoPreprocess,
}

impl std::str::FromStr for InputMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "preprocessed" => Ok(InputMode::Preprocessed),
            "tau-mdp" => Ok(InputMode::TauMdp),
            "no-preprocess" => Ok(InputMode::NoPreprocess),
            other => Err(format!("unknown input mode '{other}' (expected preprocessed, tau-mdp, no-preprocess)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub total_steps: usize,
    pub seeds: Vec<u64>,
    pub input: InputMode,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
}

impl Default for RunSection {
    fn default() -> Self {
        Self { total_steps: 600_000, seeds: vec![0], input: InputMode::Preprocessed, out_dir: None }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainerConfig {
    pub spec: SpecSection,
    pub plant: PlantSection,
    pub delays: DelaySection,
    pub sac: SacConfig,
    pub eval: EvalSection,
    pub run: RunSection,
}

impl TrainerConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, HarnessError> {
        toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Io { path: path.into(), source })?;
        toml::from_str(&text).map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    /// Parses the formula, builds the plant, and checks every section.
    pub fn resolve(&self) -> Result<Experiment, HarnessError> {
        let (dynamics, n_x, n_u): (Arc<dyn Dynamics>, usize, usize) = match self.plant.kind {
            PlantKind::Unicycle => (Arc::new(Unicycle { dt: self.plant.dt }), 3, 2),
            PlantKind::DoubleIntegrator => (Arc::new(DoubleIntegrator { dt: self.plant.dt }), 2, 1),
        };
        if !(self.plant.dt > 0.0 && self.plant.dt.is_finite()) {
            return Err(HarnessError::Config(format!("plant.dt must be positive, got {}", self.plant.dt)));
        }
        if !(self.plant.noise >= 0.0 && self.plant.noise.is_finite()) {
            return Err(HarnessError::Config(format!("plant.noise must be non-negative, got {}", self.plant.noise)));
        }
        let d = self.plant.kind.defaults();
        let pick = |v: &Option<Vec<f64>>, def: Vec<f64>| v.clone().unwrap_or(def);
        let input_shift = pick(&self.plant.input_shift, d.input_shift);
        if input_shift.len() != n_x {
            return Err(HarnessError::Config(format!(
                "plant.input_shift has {} entries for a {n_x}-dimensional state",
                input_shift.len()
            )));
        }
        let model = PlantModel::new(
            dynamics,
            identity(n_x, self.plant.noise),
            pick(&self.plant.init_low, d.init_low),
            pick(&self.plant.init_high, d.init_high),
            pick(&self.plant.action_low, d.action_low),
            pick(&self.plant.action_high, d.action_high),
        )?;
        debug_assert_eq!(model.n_u(), n_u);
        let spec = parse_spec(&self.spec.formula, n_x)?;
        let reward = RewardParams::new(self.spec.beta, spec.outer())?;
        let timing = self.delays.timing;
        let ds = &self.delays;
        let delays = DelayConfig::new(ds.d_sc, ds.d_ca, ds.d_sc_max, ds.d_ca_max)?;
        self.sac.validate()?;
        if self.eval.episodes == 0 {
            return Err(HarnessError::Config("eval.episodes must be at least 1".into()));
        }
        if self.eval.every == 0 {
            return Err(HarnessError::Config("eval.every must be at least 1".into()));
        }
        if self.run.seeds.is_empty() {
            return Err(HarnessError::Config("run.seeds must list at least one seed".into()));
        }
        let episode_len = spec.total_horizon() + 1;
        if self.run.total_steps < episode_len {
            return Err(HarnessError::Config(format!(
                "run.total_steps = {} is shorter than one episode ({episode_len} steps)",
                self.run.total_steps
            )));
        }
        Ok(Experiment {
            spec,
            model,
            delays,
            timing,
            reward,
            input: self.run.input,
            input_shift,
            sac: self.sac.clone(),
            eval: self.eval,
            total_steps: self.run.total_steps,
        })
    }
}

/// A validated configuration with its parsed task and plant.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub spec: Spec,
    pub model: PlantModel,
    pub delays: DelayConfig,
    pub timing: Timing,
    pub reward: RewardParams,
    pub input: InputMode,
    pub input_shift: Vec<f64>,
    pub sac: SacConfig,
    pub eval: EvalSection,
    pub total_steps: usize,
}

impl Experiment {
    pub fn n_x(&self) -> usize {
        self.model.n_x()
    }

    pub fn n_u(&self) -> usize {
        self.model.n_u()
    }

    /// Episode length `T + 1`.
    pub fn episode_len(&self) -> usize {
        self.spec.total_horizon() + 1
    }

    pub fn episodes(&self) -> usize {
        self.total_steps / self.episode_len()
    }

    /// Width of the network input for the configured input mode.
    pub fn input_dim(&self) -> usize {
        let (n_x, n_u, d) = (self.n_x(), self.n_u(), self.delays.d());
        let m = self.spec.phi().num_subs();
        match self.input {
            InputMode::Preprocessed => n_x + m + d * n_u,
            InputMode::TauMdp => n_x + m,
            InputMode::NoPreprocess => self.spec.tau() * n_x + d * n_u,
        }
    }
}
