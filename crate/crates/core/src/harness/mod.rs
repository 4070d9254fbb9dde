//! End-to-end training and evaluation runs.

use std::path::PathBuf;

use thiserror::Error;

mod config;
mod metrics;
mod rollout;
mod train;

pub use config::{
    DelaySection, EvalSection, Experiment, InputMode, PlantKind, PlantSection, RunSection, SpecSection, TrainerConfig,
};
pub use metrics::{learning_curve_svg, mean_std, metrics_csv, read_metrics_csv, write_learning_curve, write_metrics_csv, MetricsRow};
pub use rollout::{
    encode, evaluate, initial_states, run_episode, window_rewards, write_trajectory, Decision, EpisodeDriver,
    EvalReport, Trajectory,
};
pub use train::{run_training, train, SeedArtifacts, TrainObserver, TrainOutcome};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: {msg}", path.display())]
    Csv { path: PathBuf, msg: String },
    #[error(transparent)]
    Stl(#[from] crate::stl::StlError),
    #[error(transparent)]
    Plant(#[from] crate::plant::PlantError),
    #[error(transparent)]
    Ncs(#[from] crate::ncs::NcsError),
    #[error(transparent)]
    Mdp(#[from] crate::mdp::MdpError),
    #[error(transparent)]
    Preprocess(#[from] crate::preprocess::PreprocessError),
    #[error(transparent)]
    Sac(#[from] crate::sac::SacError),
    #[error(transparent)]
    Neural(#[from] crate::neural::NeuralError),
    #[error("non-finite {what} at step {step}{}", checkpoint.as_ref().map(|p| format!("; diagnostic checkpoint in {}", p.display())).unwrap_or_default())]
    NonFinite { what: &'static str, step: usize, checkpoint: Option<PathBuf> },
}
