//! Controller-side episode plumbing shared by training and evaluation.

use std::path::Path;

use serde::Serialize;

use super::config::{Experiment, InputMode};
use super::HarnessError;
use crate::mdp::{reward, window_reward, ExtendedState};
use crate::ncs::LoopState;
use crate::plant::RngStream;
use crate::preprocess::FlagVector;
use crate::sac::Actor;
use crate::stl::Formula;

/// Network input for an extended state under the experiment's input mode.
pub fn encode(z: &ExtendedState, exp: &Experiment) -> Result<Vec<f64>, HarnessError> {
    let shift = &exp.input_shift;
    let shifted = |x: &[f64], out: &mut Vec<f64>| out.extend(x.iter().zip(shift).map(|(v, s)| v - s));
    let mut out = Vec::with_capacity(exp.input_dim());
    match exp.input {
        InputMode::Preprocessed | InputMode::TauMdp => {
            shifted(z.current(), &mut out);
            out.extend(FlagVector::compute(z.window(), exp.spec.subs())?.transformed);
            if exp.input == InputMode::Preprocessed {
                z.history().iter().for_each(|a| out.extend_from_slice(a));
            }
        }
        InputMode::NoPreprocess => {
            z.window().iter().for_each(|x| shifted(x, &mut out));
            z.history().iter().for_each(|a| out.extend_from_slice(a));
        }
    }
    Ok(out)
}

/// An observation turned into a decision point.
#[derive(Debug, Clone)]
pub struct Decision {
    pub k: usize,
    pub input: Vec<f64>,
    pub reward: f64,
}

/// One delayed control loop together with the controller's extended state.
#[derive(Debug, Clone)]
pub struct EpisodeDriver {
    loop_state: LoopState,
    z: Option<ExtendedState>,
    last_action: Option<Vec<f64>>,
}

impl EpisodeDriver {
    pub fn begin(exp: &Experiment, rng: &mut RngStream) -> Self {
        let x0 = exp.model.sample_initial(rng);
        Self::begin_at(exp, x0)
    }

    pub fn begin_at(exp: &Experiment, x0: Vec<f64>) -> Self {
        Self { loop_state: LoopState::begin_at(&exp.model, &exp.delays, exp.timing, x0), z: None, last_action: None }
    }

    pub fn loop_state(&self) -> &LoopState {
        &self.loop_state
    }

    pub fn extended_state(&self) -> Option<&ExtendedState> {
        self.z.as_ref()
    }

    /// Polls the sensor channel; on arrival of `x_k` extends `z` and returns
    /// the network input and `R(z_k)`.
    pub fn observe(&mut self, exp: &Experiment) -> Result<Option<Decision>, HarnessError> {
        let Some((k, x)) = self.loop_state.poll_observation() else {
            return Ok(None);
        };
        let z = match (&self.z, &self.last_action) {
            (None, _) => ExtendedState::init(&x, exp.spec.tau(), exp.delays.d(), exp.n_u()),
            (Some(z), Some(a)) => z.advance(&x, a)?,
            (Some(_), None) => unreachable!("observation {k} arrived before any action was taken"),
        };
        let r = reward(&z, exp.spec.phi(), &exp.reward)?;
        let input = encode(&z, exp)?;
        self.z = Some(z);
        Ok(Some(Decision { k, input, reward: r }))
    }

    pub fn act(&mut self, k: usize, action: &[f64]) -> Result<(), HarnessError> {
        self.loop_state.send_action(k, action)?;
        self.last_action = Some(action.to_vec());
        Ok(())
    }

    pub fn advance(&mut self, rng: &mut RngStream) -> Result<(), HarnessError> {
        self.loop_state.advance(rng)?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub step: usize,
    pub mean_return: f64,
    pub success_rate: f64,
    pub returns: Vec<f64>,
    pub satisfied: Vec<bool>,
}

/// Result of one deterministic-policy episode.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub states: Vec<Vec<f64>>,
    pub inputs: Vec<Vec<f64>>,
    pub rewards: Vec<f64>,
    pub discounted_return: f64,
    pub satisfied: bool,
}

/// Runs `t = 0..=T` with the deterministic policy. The return sums
/// `gamma^k R(z_k)` for `k = 0..=T - d_sc - d_ca`.
pub fn run_episode(actor: &Actor, exp: &Experiment, x0: Vec<f64>, rng: &mut RngStream) -> Result<Trajectory, HarnessError> {
    let mut driver = EpisodeDriver::begin_at(exp, x0);
    let mut rewards = Vec::new();
    for _ in 0..exp.episode_len() {
        if let Some(dec) = driver.observe(exp)? {
            rewards.push(dec.reward);
            let a = actor.act_deterministic(&dec.input)?;
            driver.act(dec.k, &a)?;
        }
        driver.advance(rng)?;
    }
    let (sc, ca) = exp.timing.effective(&exp.delays);
    let terms = (exp.episode_len()).saturating_sub(sc + ca).min(rewards.len());
    let gamma = exp.sac.gamma;
    let mut discounted_return = 0.0;
    let mut w = 1.0;
    for r in &rewards[..terms] {
        discounted_return += w * r;
        w *= gamma;
    }
    let states = driver.loop_state.states()[..exp.episode_len()].to_vec();
    let satisfied = exp.spec.satisfies(&states, 0)?;
    Ok(Trajectory { states, inputs: driver.loop_state.inputs().to_vec(), rewards, discounted_return, satisfied })
}

/// Initial states for evaluation, drawn from the plant's start box.
pub fn initial_states(exp: &Experiment, n: usize, rng: &mut RngStream) -> Vec<Vec<f64>> {
    (0..n).map(|_| exp.model.sample_initial(rng)).collect()
}

/// Evaluates `actor` from each initial state; trajectory `i` uses the noise
/// stream `(noise_seed, i)`.
pub fn evaluate(
    actor: &Actor,
    exp: &Experiment,
    initial: &[Vec<f64>],
    noise_seed: u64,
    step: usize,
) -> Result<EvalReport, HarnessError> {
    if initial.is_empty() {
        return Err(HarnessError::Config("evaluation needs at least one episode".into()));
    }
    let mut returns = Vec::with_capacity(initial.len());
    let mut satisfied = Vec::with_capacity(initial.len());
    for (i, x0) in initial.iter().enumerate() {
        let mut rng = RngStream::derive(noise_seed, i as u64);
        let tr = run_episode(actor, exp, x0.clone(), &mut rng)?;
        returns.push(tr.discounted_return);
        satisfied.push(tr.satisfied);
    }
    let n = initial.len() as f64;
    Ok(EvalReport {
        step,
        mean_return: returns.iter().sum::<f64>() / n,
        success_rate: satisfied.iter().filter(|&&s| s).count() as f64 / n,
        returns,
        satisfied,
    })
}

/// `R` of the window ending at each `x_t`, padding before `x_0` with `x_0`.
pub fn window_rewards(states: &[Vec<f64>], exp: &Experiment) -> Vec<f64> {
    let tau = exp.spec.tau();
    (0..states.len())
        .map(|t| {
            let window: Vec<Vec<f64>> = (0..tau).map(|j| states[(t + 1 + j).saturating_sub(tau)].clone()).collect();
            window_reward(&window, exp.spec.phi(), &exp.reward)
        })
        .collect()
}

/// Writes `t, x0.., u0.., reward` for `t = 0..=T`.
pub fn write_trajectory(path: &Path, tr: &Trajectory, exp: &Experiment) -> Result<(), HarnessError> {
    let io = |e: csv::Error| HarnessError::Csv { path: path.into(), msg: e.to_string() };
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    let mut header = vec!["t".to_string()];
    header.extend((0..exp.n_x()).map(|i| format!("x{i}")));
    header.extend((0..exp.n_u()).map(|i| format!("u{i}")));
    header.push("reward".into());
    w.write_record(&header).map_err(io)?;
    let rewards = window_rewards(&tr.states, exp);
    for (t, x) in tr.states.iter().enumerate() {
        let mut row = vec![t.to_string()];
        row.extend(x.iter().map(|v| v.to_string()));
        row.extend(tr.inputs[t].iter().map(|v| v.to_string()));
        row.push(rewards[t].to_string());
        w.write_record(&row).map_err(io)?;
    }
    w.flush().map_err(|source| HarnessError::Io { path: path.into(), source })
}
