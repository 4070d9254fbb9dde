//! Flag-state compression of the extended state.
//!
//! Each sub-formula `G[ts,te] v` or `F[ts,te] v` is summarized by one flag
//! in `(0, 1]`, or `-inf` when no instant qualifies:
//!
//! * `G`: the longest satisfied suffix of `[ts, te]`, normalized by the
//!   interval width. `v` must hold at `te` for the flag to be finite.
//! * `F`: the latest instant in `[ts, te]` at which `v` holds, measured from
//!   `ts` and normalized the same way.
//!
//! Flags are shifted by `-1/2` (and `-inf` mapped to `-1/2`) before they
//! are fed to the networks.

use thiserror::Error;

use crate::mdp::ExtendedState;
use crate::stl::{Signal, SubFormula, TemporalOp};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PreprocessError {
    #[error("window of length {len} is too short for a sub-formula ending at {t_end}")]
    WindowTooShort { len: usize, t_end: usize },
    #[error("at least one sub-formula is required")]
    NoSubFormulas,
}

/// Raw flag of `sub` on `window`.
pub fn flag_value<S: Signal + ?Sized>(window: &S, sub: &SubFormula) -> Result<f64, PreprocessError> {
    if window.len() <= sub.t_end {
        return Err(PreprocessError::WindowTooShort { len: window.len(), t_end: sub.t_end });
    }
    let width = sub.width() as f64;
    let holds = |l: usize| sub.body.holds_at(window.state(l));
    let flag = match sub.op {
        TemporalOp::Globally => {
            let mut earliest = None;
            for l in (sub.t_start..=sub.t_end).rev() {
                if !holds(l) {
                    break;
                }
                earliest = Some(l);
            }
            earliest.map(|l| (sub.t_end - l + 1) as f64 / width)
        }
        TemporalOp::Finally => (sub.t_start..=sub.t_end)
            .rev()
            .find(|&l| holds(l))
            .map(|l| (l - sub.t_start + 1) as f64 / width),
    };
    Ok(flag.unwrap_or(f64::NEG_INFINITY))
}

pub fn transform_flag(f: f64) -> f64 {
    if f == f64::NEG_INFINITY {
        -0.5
    } else {
        f - 0.5
    }
}

/// Raw and transformed flags in sub-formula order.
#[derive(Debug, Clone, PartialEq)]
pub struct FlagVector {
    pub raw: Vec<f64>,
    pub transformed: Vec<f64>,
}

impl FlagVector {
    pub fn compute<S: Signal + ?Sized>(window: &S, subs: &[SubFormula]) -> Result<Self, PreprocessError> {
        let raw = subs.iter().map(|s| flag_value(window, s)).collect::<Result<Vec<_>, _>>()?;
        let transformed = raw.iter().copied().map(transform_flag).collect();
        Ok(Self { raw, transformed })
    }
}

/// `z_hat = (x^tau[tau-1], f_hat, a^d)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PreprocessedState {
    pub current: Vec<f64>,
    pub flags: Vec<f64>,
    pub history: Vec<Vec<f64>>,
}

impl PreprocessedState {
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.flat_len());
        out.extend_from_slice(&self.current);
        out.extend_from_slice(&self.flags);
        for a in &self.history {
            out.extend_from_slice(a);
        }
        out
    }

    pub fn flat_len(&self) -> usize {
        self.current.len() + self.flags.len() + self.history.iter().map(Vec::len).sum::<usize>()
    }
}

pub fn preprocess_state(z: &ExtendedState, subs: &[SubFormula]) -> Result<PreprocessedState, PreprocessError> {
    if subs.is_empty() {
        return Err(PreprocessError::NoSubFormulas);
    }
    let flags = FlagVector::compute(z.window(), subs)?;
    Ok(PreprocessedState {
        current: z.current().to_vec(),
        flags: flags.transformed,
        history: z.history().to_vec(),
    })
}

/// Flattened dimension `n_x + M + d n_u`.
pub fn preprocessed_dim(n_x: usize, m: usize, d: usize, n_u: usize) -> usize {
    n_x + m + d * n_u
}
