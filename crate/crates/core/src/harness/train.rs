//! The training loop: delayed episodes, experience storage, one learner
//! update per environment step, periodic evaluation.

use std::path::{Path, PathBuf};

use super::config::{Experiment, TrainerConfig};
use super::metrics::{write_metrics_csv, write_learning_curve, MetricsRow};
use super::rollout::{evaluate, initial_states, EpisodeDriver, EvalReport};
use super::HarnessError;
use crate::plant::RngStream;
use crate::sac::{ReplayBuffer, Sac, SacError};

/// Hooks into a training run; every method defaults to doing nothing.
pub trait TrainObserver {
    /// The controller computed `a_k` at wall-clock `t`.
    fn decision(&mut self, _episode: usize, _k: usize, _t: usize) {}
    /// A transition `(z_hat_k, a_k, z_hat_{k+1})` was stored at wall-clock `t`.
    fn transition(&mut self, _episode: usize, _k: usize, _t: usize) {}
    /// An evaluation finished.
    fn evaluation(&mut self, _row: &MetricsRow, _report: &EvalReport) {}
}

impl TrainObserver for () {}

#[derive(Debug)]
pub struct TrainOutcome {
    pub agent: Sac,
    pub metrics: Vec<MetricsRow>,
    pub final_report: EvalReport,
    pub steps: usize,
    pub episodes: usize,
    pub transitions: usize,
}

/// Evaluation bookkeeping of one run.
struct Evaluations {
    initial_rng: RngStream,
    noise_seed: u64,
    set: Vec<Vec<f64>>,
    rows: Vec<MetricsRow>,
}

impl Evaluations {
    fn new(exp: &Experiment, mut initial_rng: RngStream, noise_seed: u64) -> Self {
        let set = initial_states(exp, exp.eval.episodes, &mut initial_rng);
        Self { initial_rng, noise_seed, set, rows: Vec::new() }
    }

    fn run(
        &mut self,
        exp: &Experiment,
        step: usize,
        agent: &Sac,
        losses: &mut LossAverage,
        observer: &mut dyn TrainObserver,
    ) -> Result<EvalReport, HarnessError> {
        if exp.eval.resample && !self.rows.is_empty() {
            self.set = initial_states(exp, exp.eval.episodes, &mut self.initial_rng);
        }
        let report = evaluate(agent.actor(), exp, &self.set, self.noise_seed, step)?;
        let (critic_loss, actor_loss) = losses.take();
        let row = MetricsRow {
            step,
            mean_return: report.mean_return,
            success_rate: report.success_rate,
            alpha: agent.alpha(),
            critic_loss,
            actor_loss,
        };
        log::info!(
            "step {step}: return {:.4} success {:.2} alpha {:.4}",
            row.mean_return,
            row.success_rate,
            row.alpha
        );
        observer.evaluation(&row, &report);
        self.rows.push(row);
        Ok(report)
    }
}

#[derive(Default)]
struct LossAverage {
    critic: f64,
    actor: f64,
    n: usize,
}

impl LossAverage {
    fn take(&mut self) -> (f64, f64) {
        let out = if self.n == 0 {
            (f64::NAN, f64::NAN)
        } else {
            (self.critic / self.n as f64, self.actor / self.n as f64)
        };
        *self = Self::default();
        out
    }
}

/// Trains one seed. When `diagnostic_dir` is set, a non-finite update
/// leaves a checkpoint there before the error is returned.
pub fn train(
    exp: &Experiment,
    seed: u64,
    diagnostic_dir: Option<&Path>,
    observer: &mut dyn TrainObserver,
) -> Result<TrainOutcome, HarnessError> {
    let mut init_rng = RngStream::derive(seed, 0);
    let mut env_rng = RngStream::derive(seed, 1);
    let mut learner_rng = RngStream::derive(seed, 2);
    let mut evals = Evaluations::new(exp, RngStream::derive(seed, 3), RngStream::derive(seed, 4).next_u64());
    let mut agent = Sac::new(
        exp.sac.clone(),
        exp.input_dim(),
        exp.model.action_low(),
        exp.model.action_high(),
        &mut init_rng,
    )?;
    let mut buffer = ReplayBuffer::new(exp.sac.buffer_capacity, exp.input_dim(), exp.n_u());
    let mut losses = LossAverage::default();
    let mut last_report = None;
    let mut step = 0;
    let mut transitions = 0;
    let episodes = exp.episodes();

    for episode in 0..episodes {
        let mut driver = EpisodeDriver::begin(exp, &mut env_rng);
        let mut pending: Option<(Vec<f64>, Vec<f64>, f64)> = None;
        for t in 0..exp.episode_len() {
            if let Some(dec) = driver.observe(exp)? {
                if let Some((input, action, r)) = pending.take() {
                    buffer.push(&input, &action, &dec.input, r)?;
                    transitions += 1;
                    observer.transition(episode, dec.k - 1, t);
                }
                let (a, _) = agent.act(&dec.input, &mut learner_rng, false)?;
                observer.decision(episode, dec.k, t);
                driver.act(dec.k, &a)?;
                pending = Some((dec.input, a, dec.reward));
            }
            if let Some(batch) = buffer.sample(exp.sac.batch_size, &mut learner_rng) {
                match agent.update(&batch, &mut learner_rng) {
                    Ok(stats) => {
                        losses.critic += stats.critic_loss;
                        losses.actor += stats.actor_loss;
                        losses.n += 1;
                    }
                    Err(SacError::NonFinite(what)) => {
                        let checkpoint = diagnostic_dir.map(|d| d.join("diagnostic"));
                        if let Some(dir) = &checkpoint {
                            agent.save(dir)?;
                        }
                        return Err(HarnessError::NonFinite { what, step, checkpoint });
                    }
                    Err(e) => return Err(e.into()),
                }
            }
            driver.advance(&mut env_rng)?;
            step += 1;
            if step % exp.eval.every == 0 {
                last_report = Some(evals.run(exp, step, &agent, &mut losses, observer)?);
            }
        }
    }
    let final_report = match last_report {
        Some(r) if r.step == step => r,
        _ => evals.run(exp, step, &agent, &mut losses, observer)?,
    };
    Ok(TrainOutcome { agent, metrics: evals.rows, final_report, steps: step, episodes, transitions })
}

/// Artifacts of one seed written by [`run_training`].
#[derive(Debug)]
pub struct SeedArtifacts {
    pub seed: u64,
    pub dir: PathBuf,
    pub outcome: TrainOutcome,
}

/// Trains every configured seed into `out/seed_<n>/` (metrics CSV, learning
/// curve, checkpoint, resolved config) and writes an aggregated curve to
/// `out/learning_curve.svg`.
pub fn run_training(config: &TrainerConfig, out: &Path) -> Result<Vec<SeedArtifacts>, HarnessError> {
    let exp = config.resolve()?;
    let mkdir = |p: &Path| std::fs::create_dir_all(p).map_err(|source| HarnessError::Io { path: p.into(), source });
    mkdir(out)?;
    let config_path = out.join("config.toml");
    std::fs::write(&config_path, config.to_toml()).map_err(|source| HarnessError::Io { path: config_path, source })?;
    let mut runs = Vec::new();
    for &seed in &config.run.seeds {
        let dir = out.join(format!("seed_{seed}"));
        mkdir(&dir)?;
        let outcome = train(&exp, seed, Some(&dir), &mut ())?;
        write_metrics_csv(&dir.join("metrics.csv"), &outcome.metrics)?;
        write_learning_curve(&dir.join("learning_curve.svg"), &[(format!("seed {seed}"), outcome.metrics.clone())])?;
        outcome.agent.save(&dir.join("checkpoint"))?;
        runs.push(SeedArtifacts { seed, dir, outcome });
    }
    let series: Vec<_> = runs.iter().map(|r| (format!("seed {}", r.seed), r.outcome.metrics.clone())).collect();
    write_learning_curve(&out.join("learning_curve.svg"), &series)?;
    Ok(runs)
}
