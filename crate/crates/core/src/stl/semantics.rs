//! Boolean and quantitative semantics over discrete-time traces.

use std::collections::VecDeque;

use super::ast::{Inner, Phi, PhiNode, Predicate, Spec, SubFormula, TemporalOp};
use super::StlError;

/// Read access to a finite sequence of equally sized state vectors.
pub trait Signal {
    fn len(&self) -> usize;
    fn state(&self, t: usize) -> &[f64];

    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl Signal for [Vec<f64>] {
    fn len(&self) -> usize {
        <[Vec<f64>]>::len(self)
    }
    fn state(&self, t: usize) -> &[f64] {
        &self[t]
    }
}

impl Signal for Vec<Vec<f64>> {
    fn len(&self) -> usize {
        Vec::len(self)
    }
    fn state(&self, t: usize) -> &[f64] {
        &self[t]
    }
}

impl Signal for VecDeque<Vec<f64>> {
    fn len(&self) -> usize {
        VecDeque::len(self)
    }
    fn state(&self, t: usize) -> &[f64] {
        &self[t]
    }
}

/// An owned trajectory `x_0, x_1, ...` with a fixed state dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    states: Vec<Vec<f64>>,
}

impl Trace {
    pub fn new(states: Vec<Vec<f64>>) -> Result<Self, StlError> {
        let Some(first) = states.first() else {
            return Err(StlError::EmptyTrace);
        };
        let n_x = first.len();
        if let Some((t, bad)) = states.iter().enumerate().find(|(_, s)| s.len() != n_x) {
            return Err(StlError::RaggedTrace { t, expected: n_x, found: bad.len() });
        }
        Ok(Self { states })
    }

    /// Scalar trace, one coordinate per instant.
    pub fn scalar(values: &[f64]) -> Result<Self, StlError> {
        Self::new(values.iter().map(|&v| vec![v]).collect())
    }

    pub fn n_x(&self) -> usize {
        self.states[0].len()
    }

    pub fn states(&self) -> &[Vec<f64>] {
        &self.states
    }
}

impl Signal for Trace {
    fn len(&self) -> usize {
        self.states.len()
    }
    fn state(&self, t: usize) -> &[f64] {
        &self.states[t]
    }
}

/// Common interface of every level of the fragment.
pub trait Formula {
    /// Number of future steps needed beyond the evaluation instant.
    fn horizon(&self) -> usize;

    /// Robustness without the window check; callers guarantee the fit.
    fn robustness_unchecked<S: Signal + ?Sized>(&self, trace: &S, t: usize) -> f64;

    fn satisfies_unchecked<S: Signal + ?Sized>(&self, trace: &S, t: usize) -> bool;

    fn check_window<S: Signal + ?Sized>(&self, trace: &S, t: usize) -> Result<(), StlError> {
        let needed = t + self.horizon();
        if needed >= trace.len() {
            return Err(StlError::WindowUnderrun { t, horizon: self.horizon(), len: trace.len() });
        }
        Ok(())
    }

    fn robustness<S: Signal + ?Sized>(&self, trace: &S, t: usize) -> Result<f64, StlError> {
        self.check_window(trace, t)?;
        Ok(self.robustness_unchecked(trace, t))
    }

    fn satisfies<S: Signal + ?Sized>(&self, trace: &S, t: usize) -> Result<bool, StlError> {
        self.check_window(trace, t)?;
        Ok(self.satisfies_unchecked(trace, t))
    }
}

impl Formula for Predicate {
    fn horizon(&self) -> usize {
        0
    }
    fn robustness_unchecked<S: Signal + ?Sized>(&self, trace: &S, t: usize) -> f64 {
        self.margin(trace.state(t))
    }
    fn satisfies_unchecked<S: Signal + ?Sized>(&self, trace: &S, t: usize) -> bool {
        self.holds(trace.state(t))
    }
}

impl Formula for Inner {
    fn horizon(&self) -> usize {
        0
    }
    fn robustness_unchecked<S: Signal + ?Sized>(&self, trace: &S, t: usize) -> f64 {
        self.robustness_at(trace.state(t))
    }
    fn satisfies_unchecked<S: Signal + ?Sized>(&self, trace: &S, t: usize) -> bool {
        self.holds_at(trace.state(t))
    }
}

impl Formula for SubFormula {
    fn horizon(&self) -> usize {
        self.t_end
    }

    fn robustness_unchecked<S: Signal + ?Sized>(&self, trace: &S, t: usize) -> f64 {
        let points = (t + self.t_start..=t + self.t_end).map(|s| self.body.robustness_at(trace.state(s)));
        match self.op {
            TemporalOp::Globally => points.fold(f64::INFINITY, f64::min),
            TemporalOp::Finally => points.fold(f64::NEG_INFINITY, f64::max),
        }
    }

    fn satisfies_unchecked<S: Signal + ?Sized>(&self, trace: &S, t: usize) -> bool {
        let mut points = t + self.t_start..=t + self.t_end;
        match self.op {
            TemporalOp::Globally => points.all(|s| self.body.holds_at(trace.state(s))),
            TemporalOp::Finally => points.any(|s| self.body.holds_at(trace.state(s))),
        }
    }
}

pub(crate) fn phi_horizon(phi: &Phi) -> usize {
    phi.subs().iter().map(|s| s.t_end).max().unwrap_or(0)
}

fn node_robustness<S: Signal + ?Sized>(phi: &Phi, node: &PhiNode, trace: &S, t: usize) -> f64 {
    match node {
        PhiNode::Leaf(i) => phi.subs()[*i].robustness_unchecked(trace, t),
        PhiNode::And(v) => v
            .iter()
            .map(|c| node_robustness(phi, c, trace, t))
            .fold(f64::INFINITY, f64::min),
        PhiNode::Or(v) => v
            .iter()
            .map(|c| node_robustness(phi, c, trace, t))
            .fold(f64::NEG_INFINITY, f64::max),
    }
}

fn node_satisfies<S: Signal + ?Sized>(phi: &Phi, node: &PhiNode, trace: &S, t: usize) -> bool {
    match node {
        PhiNode::Leaf(i) => phi.subs()[*i].satisfies_unchecked(trace, t),
        PhiNode::And(v) => v.iter().all(|c| node_satisfies(phi, c, trace, t)),
        PhiNode::Or(v) => v.iter().any(|c| node_satisfies(phi, c, trace, t)),
    }
}

impl Formula for Phi {
    fn horizon(&self) -> usize {
        phi_horizon(self)
    }
    fn robustness_unchecked<S: Signal + ?Sized>(&self, trace: &S, t: usize) -> f64 {
        node_robustness(self, self.root(), trace, t)
    }
    fn satisfies_unchecked<S: Signal + ?Sized>(&self, trace: &S, t: usize) -> bool {
        node_satisfies(self, self.root(), trace, t)
    }
}

impl Formula for Spec {
    fn horizon(&self) -> usize {
        self.total_horizon()
    }

    fn robustness_unchecked<S: Signal + ?Sized>(&self, trace: &S, t: usize) -> f64 {
        let points =
            (t..=t + self.horizon_end()).map(|s| self.phi().robustness_unchecked(trace, s));
        match self.outer() {
            TemporalOp::Globally => points.fold(f64::INFINITY, f64::min),
            TemporalOp::Finally => points.fold(f64::NEG_INFINITY, f64::max),
        }
    }

    fn satisfies_unchecked<S: Signal + ?Sized>(&self, trace: &S, t: usize) -> bool {
        let mut points = t..=t + self.horizon_end();
        match self.outer() {
            TemporalOp::Globally => points.all(|s| self.phi().satisfies_unchecked(trace, s)),
            TemporalOp::Finally => points.any(|s| self.phi().satisfies_unchecked(trace, s)),
        }
    }
}

/// The distinct sub-formulae of `phi` in document order.
pub fn decompose(phi: &Phi) -> &[SubFormula] {
    phi.subs()
}
