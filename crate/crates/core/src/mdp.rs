//! Extended state over a window of past states and an action history, and
//! the indicator-based temporal-logic reward computed from it.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ncs::DelayConfig;
use crate::plant::{PlantError, PlantModel, RngStream};
use crate::stl::{Formula, Phi, TemporalOp};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MdpError {
    #[error("{what}: expected dimension {expected}, got {found}")]
    Dimension { what: &'static str, expected: usize, found: usize },
    #[error("window length {found} does not match tau = {expected}")]
    WindowLength { expected: usize, found: usize },
    #[error("reward parameter beta must be positive and finite, got {0}")]
    BadBeta(f64),
    #[error(transparent)]
    Plant(#[from] PlantError),
}

/// `z = (x^tau, a^d)`; both sequences are oldest-first.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtendedState {
    window: Vec<Vec<f64>>,
    history: Vec<Vec<f64>>,
    n_u: usize,
}

impl ExtendedState {
    /// `tau` copies of `x0` and `d` zero actions.
    pub fn init(x0: &[f64], tau: usize, d: usize, n_u: usize) -> Self {
        assert!(tau >= 1, "window length must be positive");
        Self { window: vec![x0.to_vec(); tau], history: vec![vec![0.0; n_u]; d], n_u }
    }

    pub fn from_parts(window: Vec<Vec<f64>>, history: Vec<Vec<f64>>, n_u: usize) -> Result<Self, MdpError> {
        let n_x = window.first().map(Vec::len).unwrap_or(0);
        if window.is_empty() {
            return Err(MdpError::WindowLength { expected: 1, found: 0 });
        }
        for w in &window {
            if w.len() != n_x {
                return Err(MdpError::Dimension { what: "window state", expected: n_x, found: w.len() });
            }
        }
        for a in &history {
            if a.len() != n_u {
                return Err(MdpError::Dimension { what: "history action", expected: n_u, found: a.len() });
            }
        }
        Ok(Self { window, history, n_u })
    }

    pub fn tau(&self) -> usize {
        self.window.len()
    }

    pub fn d(&self) -> usize {
        self.history.len()
    }

    pub fn n_x(&self) -> usize {
        self.window[0].len()
    }

    pub fn n_u(&self) -> usize {
        self.n_u
    }

    pub fn window(&self) -> &[Vec<f64>] {
        &self.window
    }

    pub fn history(&self) -> &[Vec<f64>] {
        &self.history
    }

    /// `x^tau[tau-1]`.
    pub fn current(&self) -> &[f64] {
        self.window.last().unwrap()
    }

    /// Shifts both sequences left, appending `new_x` and `new_a`.
    pub fn advance(&self, new_x: &[f64], new_a: &[f64]) -> Result<Self, MdpError> {
        if new_x.len() != self.n_x() {
            return Err(MdpError::Dimension { what: "state", expected: self.n_x(), found: new_x.len() });
        }
        if new_a.len() != self.n_u {
            return Err(MdpError::Dimension { what: "action", expected: self.n_u, found: new_a.len() });
        }
        let mut window = Vec::with_capacity(self.window.len());
        window.extend_from_slice(&self.window[1..]);
        window.push(new_x.to_vec());
        let history = if self.history.is_empty() {
            Vec::new()
        } else {
            let mut h = Vec::with_capacity(self.history.len());
            h.extend_from_slice(&self.history[1..]);
            h.push(new_a.to_vec());
            h
        };
        Ok(Self { window, history, n_u: self.n_u })
    }

    /// Input the plant sees while moving from this state under action `a`:
    /// the entry `d - (d_sc + d_ca)` of `[a^d, a]`.
    pub fn applied_input<'a>(&'a self, a: &'a [f64], delays: &DelayConfig) -> &'a [f64] {
        let idx = self.d() - delays.round_trip();
        if idx == self.d() {
            a
        } else {
            &self.history[idx]
        }
    }

    /// Model-side transition: draws the next plant state from the current
    /// one under the delayed input, then shifts.
    pub fn transition(
        &self,
        a: &[f64],
        model: &PlantModel,
        delays: &DelayConfig,
        rng: &mut RngStream,
    ) -> Result<Self, MdpError> {
        let u = self.applied_input(a, delays).to_vec();
        let next = model.step(self.current(), &u, rng)?;
        self.advance(&next, a)
    }

    /// `[x^tau[0], ..., x^tau[tau-1], a^d[0], ..., a^d[d-1]]`.
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.flat_len());
        for x in &self.window {
            out.extend_from_slice(x);
        }
        for a in &self.history {
            out.extend_from_slice(a);
        }
        out
    }

    pub fn flat_len(&self) -> usize {
        self.tau() * self.n_x() + self.d() * self.n_u
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardParams {
    beta: f64,
    outer: TemporalOp,
}

impl RewardParams {
    pub fn new(beta: f64, outer: TemporalOp) -> Result<Self, MdpError> {
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(MdpError::BadBeta(beta));
        }
        if outer == TemporalOp::Finally && beta > 30.0 {
            log::warn!("beta = {beta} with an eventually-type task gives rewards up to e^{beta}");
        }
        Ok(Self { beta, outer })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn outer(&self) -> TemporalOp {
        self.outer
    }

    /// The two values the reward can take: `(violated, satisfied)`.
    pub fn levels(&self) -> (f64, f64) {
        match self.outer {
            TemporalOp::Globally => (-1.0, -(-self.beta).exp()),
            TemporalOp::Finally => (1.0, self.beta.exp()),
        }
    }
}

/// Reward from the window robustness at its first instant.
pub fn reward(z: &ExtendedState, phi: &Phi, params: &RewardParams) -> Result<f64, MdpError> {
    let tau = phi.horizon() + 1;
    if z.tau() != tau {
        return Err(MdpError::WindowLength { expected: tau, found: z.tau() });
    }
    Ok(window_reward(z.window(), phi, params))
}

pub(crate) fn window_reward(window: &[Vec<f64>], phi: &Phi, params: &RewardParams) -> f64 {
    let rho = phi.robustness_unchecked(window, 0);
    let (violated, satisfied) = params.levels();
    if rho >= 0.0 {
        satisfied
    } else {
        violated
    }
}
