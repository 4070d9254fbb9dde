//! Soft actor-critic over preprocessed states: tanh-squashed Gaussian actor,
//! clipped double critics with soft-updated targets, uniform replay, and
//! automatic entropy temperature.
//!
//! The loss functions take their Gaussian noise as an explicit tape so that
//! they are deterministic functions of the parameters.

use std::path::Path;

use ndarray::{concatenate, s, Array1, Array2, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::neural::{Activation, AdamConfig, AdamState, ForwardCache, Gradients, Mlp, NeuralError, ScalarAdam};
use crate::plant::RngStream;

pub const LOG_STD_MIN: f64 = -20.0;
pub const LOG_STD_MAX: f64 = 2.0;
const HALF_LOG_2PI: f64 = 0.918_938_533_204_672_8;

#[derive(Debug, Error)]
pub enum SacError {
    #[error(transparent)]
    Neural(#[from] NeuralError),
    #[error("{what}: expected dimension {expected}, got {found}")]
    Dimension { what: &'static str, expected: usize, found: usize },
    #[error("batch is empty")]
    EmptyBatch,
    #[error("action bound {index}: low {low} must be below high {high}")]
    ActionBounds { index: usize, low: f64, high: f64 },
    #[error("invalid hyperparameter {name} = {value}")]
    Hyperparameter { name: &'static str, value: f64 },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("{path}: {msg}")]
    Checkpoint { path: String, msg: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SacConfig {
    pub gamma: f64,
    pub soft_update_rate: f64,
    pub learning_rate: f64,
    pub buffer_capacity: usize,
    pub batch_size: usize,
    pub target_entropy: f64,
    pub initial_alpha: f64,
    pub hidden: Vec<usize>,
}

impl Default for SacConfig {
    fn default() -> Self {
        Self {
            gamma: 0.99,
            soft_update_rate: 0.01,
            learning_rate: 3e-4,
            buffer_capacity: 100_000,
            batch_size: 64,
            target_entropy: -2.0,
            initial_alpha: 1.0,
            hidden: vec![256, 256],
        }
    }
}

impl SacConfig {
    pub fn validate(&self) -> Result<(), SacError> {
        let bad = |name, value| Err(SacError::Hyperparameter { name, value });
        if !(0.0..=1.0).contains(&self.gamma) {
            return bad("gamma", self.gamma);
        }
        if !(self.soft_update_rate > 0.0 && self.soft_update_rate <= 1.0) {
            return bad("soft_update_rate", self.soft_update_rate);
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate", self.learning_rate);
        }
        if self.buffer_capacity == 0 {
            return bad("buffer_capacity", 0.0);
        }
        if self.batch_size == 0 {
            return bad("batch_size", 0.0);
        }
        if !self.target_entropy.is_finite() {
            return bad("target_entropy", self.target_entropy);
        }
        if !(self.initial_alpha > 0.0 && self.initial_alpha.is_finite()) {
            return bad("initial_alpha", self.initial_alpha);
        }
        if let Some(&h) = self.hidden.iter().find(|&&h| h == 0) {
            return bad("hidden", h as f64);
        }
        Ok(())
    }
}

/// `log(1 - tanh(u)^2)`, stable for large `|u|`.
fn log1m_tanh2(u: f64) -> f64 {
    let a = u.abs();
    2.0 * (std::f64::consts::LN_2 - a - (-2.0 * a).exp().ln_1p())
}

/// Squashed-Gaussian policy head. The network output holds the means in the
/// first `n_u` columns and the unclamped log standard deviations after them.
#[derive(Debug, Clone, PartialEq)]
pub struct Actor {
    net: Mlp,
    scale: Vec<f64>,
    offset: Vec<f64>,
}

/// A batch of reparameterized actions with everything the backward pass needs.
#[derive(Debug, Clone)]
pub struct PolicySample {
    pub actions: Array2<f64>,
    pub log_probs: Array1<f64>,
    squashed: Array2<f64>,
    std: Array2<f64>,
    noise: Array2<f64>,
    in_clamp: Array2<bool>,
    cache: ForwardCache,
}

impl PolicySample {
    /// Standard deviations after clamping the log-std head.
    pub fn std_devs(&self) -> &Array2<f64> {
        &self.std
    }
}

fn bounds_to_affine(low: &[f64], high: &[f64]) -> Result<(Vec<f64>, Vec<f64>), SacError> {
    if low.len() != high.len() {
        return Err(SacError::Dimension { what: "action bounds", expected: low.len(), found: high.len() });
    }
    for (i, (&l, &h)) in low.iter().zip(high).enumerate() {
        if !(l < h && l.is_finite() && h.is_finite()) {
            return Err(SacError::ActionBounds { index: i, low: l, high: h });
        }
    }
    let scale = low.iter().zip(high).map(|(l, h)| (h - l) / 2.0).collect();
    let offset = low.iter().zip(high).map(|(l, h)| (h + l) / 2.0).collect();
    Ok((scale, offset))
}

impl Actor {
    pub fn new(
        state_dim: usize,
        hidden: &[usize],
        action_low: &[f64],
        action_high: &[f64],
        rng: &mut RngStream,
    ) -> Result<Self, SacError> {
        let (scale, offset) = bounds_to_affine(action_low, action_high)?;
        let mut sizes = vec![state_dim];
        sizes.extend_from_slice(hidden);
        sizes.push(2 * scale.len());
        Ok(Self { net: Mlp::init(&sizes, Activation::Identity, rng), scale, offset })
    }

    pub fn from_net(net: Mlp, action_low: &[f64], action_high: &[f64]) -> Result<Self, SacError> {
        let (scale, offset) = bounds_to_affine(action_low, action_high)?;
        if net.output_dim() != 2 * scale.len() {
            return Err(SacError::Dimension {
                what: "actor output",
                expected: 2 * scale.len(),
                found: net.output_dim(),
            });
        }
        Ok(Self { net, scale, offset })
    }

    pub fn net(&self) -> &Mlp {
        &self.net
    }

    pub fn net_mut(&mut self) -> &mut Mlp {
        &mut self.net
    }

    pub fn state_dim(&self) -> usize {
        self.net.input_dim()
    }

    pub fn n_u(&self) -> usize {
        self.scale.len()
    }

    pub fn scale(&self) -> &[f64] {
        &self.scale
    }

    pub fn offset(&self) -> &[f64] {
        &self.offset
    }

    /// `a = scale * tanh(mu + sigma * noise) + offset` for each row.
    pub fn sample_batch(&self, states: ArrayView2<f64>, noise: ArrayView2<f64>) -> Result<PolicySample, SacError> {
        let n_u = self.n_u();
        if noise.dim() != (states.nrows(), n_u) {
            return Err(SacError::Dimension { what: "noise columns", expected: n_u, found: noise.ncols() });
        }
        let (out, cache) = self.net.forward(states)?;
        let n = states.nrows();
        let mut actions = Array2::zeros((n, n_u));
        let mut squashed = Array2::zeros((n, n_u));
        let mut std = Array2::zeros((n, n_u));
        let mut in_clamp = Array2::from_elem((n, n_u), true);
        let mut log_probs = Array1::zeros(n);
        let log_scale: f64 = self.scale.iter().map(|s| s.ln()).sum();
        for i in 0..n {
            let mut lp = -log_scale;
            for j in 0..n_u {
                let raw = out[[i, n_u + j]];
                let ls = raw.clamp(LOG_STD_MIN, LOG_STD_MAX);
                in_clamp[[i, j]] = raw > LOG_STD_MIN && raw < LOG_STD_MAX;
                let sigma = ls.exp();
                let e = noise[[i, j]];
                let u = out[[i, j]] + sigma * e;
                let t = u.tanh();
                actions[[i, j]] = self.scale[j] * t + self.offset[j];
                squashed[[i, j]] = t;
                std[[i, j]] = sigma;
                lp += -0.5 * e * e - HALF_LOG_2PI - ls - log1m_tanh2(u);
            }
            log_probs[i] = lp;
        }
        Ok(PolicySample { actions, log_probs, squashed, std, noise: noise.to_owned(), in_clamp, cache })
    }

    /// Parameter gradients given `dL/d(actions)` and `dL/d(log_probs)`.
    pub fn backward(
        &self,
        sample: &PolicySample,
        grad_actions: ArrayView2<f64>,
        grad_log_probs: ArrayView1<f64>,
    ) -> Result<Gradients, SacError> {
        let (n, n_u) = sample.actions.dim();
        let mut grad_out = Array2::zeros((n, 2 * n_u));
        for i in 0..n {
            let gl = grad_log_probs[i];
            for j in 0..n_u {
                let t = sample.squashed[[i, j]];
                let du = grad_actions[[i, j]] * self.scale[j] * (1.0 - t * t) + gl * 2.0 * t;
                grad_out[[i, j]] = du;
                if sample.in_clamp[[i, j]] {
                    grad_out[[i, n_u + j]] = du * sample.std[[i, j]] * sample.noise[[i, j]] - gl;
                }
            }
        }
        Ok(self.net.backward(&sample.cache, grad_out.view())?.0)
    }

    /// One action and its log-density. Deterministic mode returns
    /// `scale * tanh(mu) + offset` and draws no noise.
    pub fn sample_action(
        &self,
        state: &[f64],
        rng: &mut RngStream,
        deterministic: bool,
    ) -> Result<(Vec<f64>, f64), SacError> {
        if state.len() != self.state_dim() {
            return Err(SacError::Dimension { what: "state", expected: self.state_dim(), found: state.len() });
        }
        let x = ArrayView2::from_shape((1, state.len()), state).expect("row");
        let noise = if deterministic {
            Array2::zeros((1, self.n_u()))
        } else {
            Array2::from_shape_simple_fn((1, self.n_u()), || rng.normal())
        };
        let s = self.sample_batch(x, noise.view())?;
        Ok((s.actions.row(0).to_vec(), s.log_probs[0]))
    }

    /// Deterministic action without touching any random stream.
    pub fn act_deterministic(&self, state: &[f64]) -> Result<Vec<f64>, SacError> {
        if state.len() != self.state_dim() {
            return Err(SacError::Dimension { what: "state", expected: self.state_dim(), found: state.len() });
        }
        let out = self.net.predict_one(state)?;
        Ok((0..self.n_u()).map(|j| self.scale[j] * out[j].tanh() + self.offset[j]).collect())
    }
}

/// Uniformly sampled mini-batch, one row per transition.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    pub states: Array2<f64>,
    pub actions: Array2<f64>,
    pub rewards: Array1<f64>,
    pub next_states: Array2<f64>,
}

impl Batch {
    pub fn len(&self) -> usize {
        self.rewards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rewards.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub state: Vec<f64>,
    pub action: Vec<f64>,
    pub next_state: Vec<f64>,
    pub reward: f64,
}

/// Fixed-capacity ring of transitions stored in flat row-major arrays.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    state_dim: usize,
    action_dim: usize,
    states: Vec<f64>,
    actions: Vec<f64>,
    next_states: Vec<f64>,
    rewards: Vec<f64>,
    head: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize, state_dim: usize, action_dim: usize) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        Self {
            capacity,
            state_dim,
            action_dim,
            states: Vec::new(),
            actions: Vec::new(),
            next_states: Vec::new(),
            rewards: Vec::new(),
            head: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.rewards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rewards.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn push(&mut self, state: &[f64], action: &[f64], next_state: &[f64], reward: f64) -> Result<(), SacError> {
        let check = |what, expected: usize, found: usize| {
            if expected == found {
                Ok(())
            } else {
                Err(SacError::Dimension { what, expected, found })
            }
        };
        check("state", self.state_dim, state.len())?;
        check("action", self.action_dim, action.len())?;
        check("next state", self.state_dim, next_state.len())?;
        if self.len() < self.capacity {
            self.states.extend_from_slice(state);
            self.actions.extend_from_slice(action);
            self.next_states.extend_from_slice(next_state);
            self.rewards.push(reward);
        } else {
            let slot = self.head;
            let (sd, ad) = (self.state_dim, self.action_dim);
            self.states[slot * sd..(slot + 1) * sd].copy_from_slice(state);
            self.actions[slot * ad..(slot + 1) * ad].copy_from_slice(action);
            self.next_states[slot * sd..(slot + 1) * sd].copy_from_slice(next_state);
            self.rewards[slot] = reward;
            self.head = (self.head + 1) % self.capacity;
        }
        Ok(())
    }

    /// The `i`-th stored transition, oldest first.
    pub fn get(&self, i: usize) -> Option<Transition> {
        if i >= self.len() {
            return None;
        }
        Some(self.slot(if self.len() < self.capacity { i } else { (self.head + i) % self.capacity }))
    }

    fn slot(&self, k: usize) -> Transition {
        let (sd, ad) = (self.state_dim, self.action_dim);
        Transition {
            state: self.states[k * sd..(k + 1) * sd].to_vec(),
            action: self.actions[k * ad..(k + 1) * ad].to_vec(),
            next_state: self.next_states[k * sd..(k + 1) * sd].to_vec(),
            reward: self.rewards[k],
        }
    }

    /// Storage slots drawn uniformly with replacement; `None` while fewer
    /// than `n` transitions are stored.
    pub fn sample_slots(&self, n: usize, rng: &mut RngStream) -> Option<Vec<usize>> {
        if n == 0 || self.len() < n {
            return None;
        }
        Some((0..n).map(|_| rng.below(self.len())).collect())
    }

    pub fn sample(&self, n: usize, rng: &mut RngStream) -> Option<Batch> {
        let slots = self.sample_slots(n, rng)?;
        let (sd, ad) = (self.state_dim, self.action_dim);
        let mut states = Array2::zeros((n, sd));
        let mut actions = Array2::zeros((n, ad));
        let mut next_states = Array2::zeros((n, sd));
        let mut rewards = Array1::zeros(n);
        for (row, &k) in slots.iter().enumerate() {
            states.row_mut(row).assign(&ArrayView1::from(&self.states[k * sd..(k + 1) * sd]));
            actions.row_mut(row).assign(&ArrayView1::from(&self.actions[k * ad..(k + 1) * ad]));
            next_states.row_mut(row).assign(&ArrayView1::from(&self.next_states[k * sd..(k + 1) * sd]));
            rewards[row] = self.rewards[k];
        }
        Some(Batch { states, actions, rewards, next_states })
    }
}

/// `alpha = exp(log_alpha)` with its own scalar Adam.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyTemp {
    pub log_alpha: f64,
    pub target_entropy: f64,
    pub optimizer: ScalarAdam,
}

impl EntropyTemp {
    pub fn new(initial_alpha: f64, target_entropy: f64, config: AdamConfig) -> Self {
        Self { log_alpha: initial_alpha.ln(), target_entropy, optimizer: ScalarAdam::new(config) }
    }

    pub fn alpha(&self) -> f64 {
        self.log_alpha.exp()
    }

    /// One Adam step on `log_alpha`; returns the loss before the step.
    pub fn update(&mut self, log_probs: ArrayView1<f64>) -> f64 {
        let (loss, grad) = alpha_loss_and_grad(self.log_alpha, log_probs, self.target_entropy);
        self.optimizer.step(&mut self.log_alpha, grad);
        loss
    }
}

/// `exp(log_alpha) * mean(-log_prob - target_entropy)` and its derivative
/// in `log_alpha`.
pub fn alpha_loss_and_grad(log_alpha: f64, log_probs: ArrayView1<f64>, target_entropy: f64) -> (f64, f64) {
    if log_probs.is_empty() {
        return (0.0, 0.0);
    }
    let gap = log_probs.iter().map(|lp| -lp - target_entropy).sum::<f64>() / log_probs.len() as f64;
    let loss = log_alpha.exp() * gap;
    (loss, loss)
}

fn critic_input(states: ArrayView2<f64>, actions: ArrayView2<f64>) -> Array2<f64> {
    concatenate![Axis(1), states, actions].as_standard_layout().into_owned()
}

/// Elementwise minimum of the two critics.
pub fn min_q(critics: [&Mlp; 2], states: ArrayView2<f64>, actions: ArrayView2<f64>) -> Result<Array1<f64>, SacError> {
    let x = critic_input(states, actions);
    let q1 = critics[0].predict(x.view())?;
    let q2 = critics[1].predict(x.view())?;
    Ok(q1.column(0).iter().zip(q2.column(0)).map(|(a, b)| a.min(*b)).collect())
}

/// Soft state value `min_q - alpha * log_prob`.
pub fn soft_value(min_q: f64, log_prob: f64, alpha: f64) -> f64 {
    min_q - alpha * log_prob
}

/// Single-sample soft value of `next_state` under the target critics.
pub fn target_value(
    actor: &Actor,
    targets: [&Mlp; 2],
    alpha: f64,
    next_state: &[f64],
    rng: &mut RngStream,
) -> Result<f64, SacError> {
    let x = ArrayView2::from_shape((1, next_state.len()), next_state).expect("row");
    let noise = Array2::from_shape_simple_fn((1, actor.n_u()), || rng.normal());
    Ok(soft_targets(actor, targets, alpha, 1.0, Array1::zeros(1).view(), x, noise.view())?[0])
}

/// Bellman targets `r + gamma * (min_k Q_k^-(s', a') - alpha log pi(a'|s'))`
/// with `a'` reparameterized by `noise`.
pub fn soft_targets(
    actor: &Actor,
    targets: [&Mlp; 2],
    alpha: f64,
    gamma: f64,
    rewards: ArrayView1<f64>,
    next_states: ArrayView2<f64>,
    noise: ArrayView2<f64>,
) -> Result<Array1<f64>, SacError> {
    let next = actor.sample_batch(next_states, noise)?;
    let q = min_q(targets, next_states, next.actions.view())?;
    Ok(rewards
        .iter()
        .zip(q.iter().zip(next.log_probs.iter()))
        .map(|(r, (q, lp))| r + gamma * soft_value(*q, *lp, alpha))
        .collect())
}

/// Bellman targets for a batch.
pub fn batch_targets(
    actor: &Actor,
    targets: [&Mlp; 2],
    alpha: f64,
    gamma: f64,
    batch: &Batch,
    noise: ArrayView2<f64>,
) -> Result<Array1<f64>, SacError> {
    soft_targets(actor, targets, alpha, gamma, batch.rewards.view(), batch.next_states.view(), noise)
}

/// `mean((Q(s, a) - y)^2)` and its parameter gradient; `y` is a constant.
pub fn critic_loss_and_grads(
    critic: &Mlp,
    states: ArrayView2<f64>,
    actions: ArrayView2<f64>,
    y: ArrayView1<f64>,
) -> Result<(f64, Gradients), SacError> {
    let n = states.nrows();
    if n == 0 {
        return Err(SacError::EmptyBatch);
    }
    let x = critic_input(states, actions);
    let (q, cache) = critic.forward(x.view())?;
    let mut grad = Array2::zeros((n, 1));
    let mut loss = 0.0;
    for i in 0..n {
        let e = q[[i, 0]] - y[i];
        loss += e * e;
        grad[[i, 0]] = 2.0 * e / n as f64;
    }
    let (g, _) = critic.backward(&cache, grad.view())?;
    Ok((loss / n as f64, g))
}

#[derive(Debug, Clone)]
pub struct ActorLoss {
    pub loss: f64,
    pub grads: Gradients,
    pub log_probs: Array1<f64>,
}

/// `mean(alpha log pi(a|s) - min(Q1, Q2)(s, a))` with `a` reparameterized by
/// `noise`; gradients reach the actor only.
pub fn actor_loss_and_grads(
    actor: &Actor,
    critics: [&Mlp; 2],
    alpha: f64,
    states: ArrayView2<f64>,
    noise: ArrayView2<f64>,
) -> Result<ActorLoss, SacError> {
    let n = states.nrows();
    if n == 0 {
        return Err(SacError::EmptyBatch);
    }
    let sample = actor.sample_batch(states, noise)?;
    let x = critic_input(states, sample.actions.view());
    let (q1, c1) = critics[0].forward(x.view())?;
    let (q2, c2) = critics[1].forward(x.view())?;
    let mut g1 = Array2::zeros((n, 1));
    let mut g2 = Array2::zeros((n, 1));
    let mut loss = 0.0;
    for i in 0..n {
        let (a, b) = (q1[[i, 0]], q2[[i, 0]]);
        if a <= b {
            g1[[i, 0]] = -1.0 / n as f64;
        } else {
            g2[[i, 0]] = -1.0 / n as f64;
        }
        loss += alpha * sample.log_probs[i] - a.min(b);
    }
    let (_, in1) = critics[0].backward(&c1, g1.view())?;
    let (_, in2) = critics[1].backward(&c2, g2.view())?;
    let sd = states.ncols();
    let grad_actions = &in1.slice(s![.., sd..]) + &in2.slice(s![.., sd..]);
    let grad_lp = Array1::from_elem(n, alpha / n as f64);
    let grads = actor.backward(&sample, grad_actions.view(), grad_lp.view())?;
    Ok(ActorLoss { loss: loss / n as f64, grads, log_probs: sample.log_probs })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpdateStats {
    pub critic_loss: f64,
    pub actor_loss: f64,
    pub alpha_loss: f64,
    pub alpha: f64,
}

/// The complete learner state.
#[derive(Debug, Clone)]
pub struct Sac {
    config: SacConfig,
    actor: Actor,
    actor_opt: AdamState,
    critics: [Mlp; 2],
    targets: [Mlp; 2],
    critic_opts: [AdamState; 2],
    temp: EntropyTemp,
}

const CHECKPOINT_FILES: [&str; 5] = ["actor.bin", "critic1.bin", "critic2.bin", "critic1_target.bin", "critic2_target.bin"];

#[derive(Serialize, Deserialize)]
struct SacMeta {
    config: SacConfig,
    action_low: Vec<f64>,
    action_high: Vec<f64>,
    temperature: EntropyTemp,
}

impl Sac {
    pub fn new(
        config: SacConfig,
        state_dim: usize,
        action_low: &[f64],
        action_high: &[f64],
        rng: &mut RngStream,
    ) -> Result<Self, SacError> {
        config.validate()?;
        let adam = AdamConfig::with_lr(config.learning_rate);
        let actor = Actor::new(state_dim, &config.hidden, action_low, action_high, rng)?;
        let mut sizes = vec![state_dim + action_low.len()];
        sizes.extend_from_slice(&config.hidden);
        sizes.push(1);
        let c1 = Mlp::init(&sizes, Activation::Identity, rng);
        let c2 = Mlp::init(&sizes, Activation::Identity, rng);
        let actor_opt = AdamState::new(actor.net(), adam);
        let critic_opts = [AdamState::new(&c1, adam), AdamState::new(&c2, adam)];
        let temp = EntropyTemp::new(config.initial_alpha, config.target_entropy, adam);
        Ok(Self { targets: [c1.clone(), c2.clone()], critics: [c1, c2], actor, actor_opt, critic_opts, temp, config })
    }

    pub fn config(&self) -> &SacConfig {
        &self.config
    }

    pub fn actor(&self) -> &Actor {
        &self.actor
    }

    pub fn critics(&self) -> [&Mlp; 2] {
        [&self.critics[0], &self.critics[1]]
    }

    pub fn targets(&self) -> [&Mlp; 2] {
        [&self.targets[0], &self.targets[1]]
    }

    pub fn critics_mut(&mut self) -> &mut [Mlp; 2] {
        &mut self.critics
    }

    pub fn targets_mut(&mut self) -> &mut [Mlp; 2] {
        &mut self.targets
    }

    pub fn actor_mut(&mut self) -> &mut Actor {
        &mut self.actor
    }

    pub fn temperature(&self) -> &EntropyTemp {
        &self.temp
    }

    pub fn temperature_mut(&mut self) -> &mut EntropyTemp {
        &mut self.temp
    }

    pub fn alpha(&self) -> f64 {
        self.temp.alpha()
    }

    pub fn act(&self, state: &[f64], rng: &mut RngStream, deterministic: bool) -> Result<(Vec<f64>, f64), SacError> {
        self.actor.sample_action(state, rng, deterministic)
    }

    fn noise(&self, n: usize, rng: &mut RngStream) -> Array2<f64> {
        Array2::from_shape_simple_fn((n, self.actor.n_u()), || rng.normal())
    }

    /// One Adam step on each critic toward shared targets; returns the mean
    /// of the two losses.
    pub fn update_critics(&mut self, batch: &Batch, rng: &mut RngStream) -> Result<f64, SacError> {
        if batch.is_empty() {
            return Err(SacError::EmptyBatch);
        }
        let noise = self.noise(batch.len(), rng);
        let y = batch_targets(&self.actor, self.targets(), self.alpha(), self.config.gamma, batch, noise.view())?;
        let mut total = 0.0;
        for k in 0..2 {
            let (loss, g) = critic_loss_and_grads(&self.critics[k], batch.states.view(), batch.actions.view(), y.view())?;
            self.critic_opts[k].step(&mut self.critics[k], &g)?;
            total += loss;
        }
        Ok(total / 2.0)
    }

    /// One Adam step on the actor; returns the loss and the batch log-densities.
    pub fn update_actor(&mut self, batch: &Batch, rng: &mut RngStream) -> Result<(f64, Array1<f64>), SacError> {
        let noise = self.noise(batch.len(), rng);
        let out = actor_loss_and_grads(&self.actor, self.critics(), self.alpha(), batch.states.view(), noise.view())?;
        self.actor_opt.step(self.actor.net_mut(), &out.grads)?;
        Ok((out.loss, out.log_probs))
    }

    pub fn update_alpha(&mut self, log_probs: ArrayView1<f64>) -> f64 {
        self.temp.update(log_probs)
    }

    pub fn soft_update(&mut self) {
        let xi = self.config.soft_update_rate;
        for k in 0..2 {
            self.targets[k].soft_update_from(&self.critics[k], xi);
        }
    }

    /// Critics, actor, target networks, then temperature.
    pub fn update(&mut self, batch: &Batch, rng: &mut RngStream) -> Result<UpdateStats, SacError> {
        let critic_loss = self.update_critics(batch, rng)?;
        let (actor_loss, log_probs) = self.update_actor(batch, rng)?;
        self.soft_update();
        let alpha_loss = self.update_alpha(log_probs.view());
        if !critic_loss.is_finite() || !self.critics.iter().all(|c| c.params().is_finite()) {
            return Err(SacError::NonFinite("critic"));
        }
        if !actor_loss.is_finite() || !self.actor.net().params().is_finite() {
            return Err(SacError::NonFinite("actor"));
        }
        if !self.temp.log_alpha.is_finite() {
            return Err(SacError::NonFinite("entropy temperature"));
        }
        Ok(UpdateStats { critic_loss, actor_loss, alpha_loss, alpha: self.alpha() })
    }

    /// Writes every network, optimizer state, and the temperature into `dir`.
    pub fn save(&self, dir: &Path) -> Result<(), SacError> {
        std::fs::create_dir_all(dir).map_err(|e| ckpt_err(dir, e.to_string()))?;
        let nets = [self.actor.net(), &self.critics[0], &self.critics[1], &self.targets[0], &self.targets[1]];
        for (net, name) in nets.iter().zip(CHECKPOINT_FILES) {
            net.save(&dir.join(name))?;
        }
        self.actor_opt.save(&dir.join("actor.adam"))?;
        self.critic_opts[0].save(&dir.join("critic1.adam"))?;
        self.critic_opts[1].save(&dir.join("critic2.adam"))?;
        let (low, high) = action_bounds(&self.actor);
        let meta = SacMeta { config: self.config.clone(), action_low: low, action_high: high, temperature: self.temp.clone() };
        let path = dir.join("sac.json");
        let json = serde_json::to_string_pretty(&meta).expect("serializable");
        std::fs::write(&path, json).map_err(|e| ckpt_err(&path, e.to_string()))
    }

    pub fn load(dir: &Path) -> Result<Self, SacError> {
        let path = dir.join("sac.json");
        let text = std::fs::read_to_string(&path).map_err(|e| ckpt_err(&path, e.to_string()))?;
        let meta: SacMeta = serde_json::from_str(&text).map_err(|e| ckpt_err(&path, e.to_string()))?;
        let mut nets = CHECKPOINT_FILES
            .iter()
            .map(|name| Mlp::load(&dir.join(name)))
            .collect::<Result<Vec<_>, _>>()?
            .into_iter();
        let actor = Actor::from_net(nets.next().unwrap(), &meta.action_low, &meta.action_high)?;
        let critics = [nets.next().unwrap(), nets.next().unwrap()];
        let targets = [nets.next().unwrap(), nets.next().unwrap()];
        for k in 0..2 {
            if !critics[k].params().same_shape(targets[k].params()) {
                return Err(ckpt_err(dir, format!("target {} differs in shape from its critic", k + 1)));
            }
        }
        let actor_opt = AdamState::load(&dir.join("actor.adam"), actor.net())?;
        let critic_opts = [
            AdamState::load(&dir.join("critic1.adam"), &critics[0])?,
            AdamState::load(&dir.join("critic2.adam"), &critics[1])?,
        ];
        Ok(Self { config: meta.config, actor, actor_opt, critics, targets, critic_opts, temp: meta.temperature })
    }
}

/// Recovers the action box from an actor's affine map.
pub fn action_bounds(actor: &Actor) -> (Vec<f64>, Vec<f64>) {
    let low = actor.scale.iter().zip(&actor.offset).map(|(s, o)| o - s).collect();
    let high = actor.scale.iter().zip(&actor.offset).map(|(s, o)| o + s).collect();
    (low, high)
}

fn ckpt_err(path: &Path, msg: String) -> SacError {
    SacError::Checkpoint { path: path.display().to_string(), msg }
}
