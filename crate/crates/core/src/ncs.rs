//! Networked control loop with constant sensor-to-controller and
//! controller-to-actuator delays.
//!
//! Time advances in lockstep: at each step the controller may receive one
//! delayed observation and send one action, then the actuator applies the
//! input due at that step and the plant moves on. The actuator outputs the
//! zero vector until the first action arrives and holds the last delivered
//! action afterwards.

use std::collections::VecDeque;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::plant::{PlantError, PlantModel, RngStream};

#[derive(Debug, Error)]
pub enum NcsError {
    #[error("true delay {actual} exceeds its bound {bound} ({which})")]
    DelayAboveBound { which: &'static str, actual: usize, bound: usize },
    #[error("action for index {k} sent after index {last}")]
    DuplicateAction { k: usize, last: usize },
    #[error(transparent)]
    Plant(#[from] PlantError),
    #[error("writing loop trace to {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

/// True delays and their known bounds, in steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DelayConfig {
    d_sc: usize,
    d_ca: usize,
    d_sc_max: usize,
    d_ca_max: usize,
}

impl DelayConfig {
    pub fn new(d_sc: usize, d_ca: usize, d_sc_max: usize, d_ca_max: usize) -> Result<Self, NcsError> {
        if d_sc > d_sc_max {
            return Err(NcsError::DelayAboveBound { which: "sensor-to-controller", actual: d_sc, bound: d_sc_max });
        }
        if d_ca > d_ca_max {
            return Err(NcsError::DelayAboveBound { which: "controller-to-actuator", actual: d_ca, bound: d_ca_max });
        }
        Ok(Self { d_sc, d_ca, d_sc_max, d_ca_max })
    }

    pub fn none() -> Self {
        Self { d_sc: 0, d_ca: 0, d_sc_max: 0, d_ca_max: 0 }
    }

    pub fn d_sc(&self) -> usize {
        self.d_sc
    }

    pub fn d_ca(&self) -> usize {
        self.d_ca
    }

    pub fn d_sc_max(&self) -> usize {
        self.d_sc_max
    }

    pub fn d_ca_max(&self) -> usize {
        self.d_ca_max
    }

    /// Action-history length `d = d_sc_max + d_ca_max`.
    pub fn d(&self) -> usize {
        self.d_sc_max + self.d_ca_max
    }

    /// Round-trip delay actually experienced by an action.
    pub fn round_trip(&self) -> usize {
        self.d_sc + self.d_ca
    }
}

/// When the controller acts on an observation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Timing {
    /// Act as soon as `x_k` arrives, at `t = k + d_sc`.
    #[default]
    OnArrival,
    /// Worst-case schedule: act at `k + d_sc_max`, apply at `k + d`.
    HoldUntilMax,
}

impl Timing {
    /// Delays `(sensor, actuator)` the loop actually realizes.
    pub fn effective(self, delays: &DelayConfig) -> (usize, usize) {
        match self {
            Timing::OnArrival => (delays.d_sc, delays.d_ca),
            Timing::HoldUntilMax => (delays.d_sc_max, delays.d_ca_max),
        }
    }
}

#[derive(Debug, Clone)]
struct SensorMsg {
    k: usize,
    x: Vec<f64>,
    deliver_at: usize,
}

#[derive(Debug, Clone)]
struct ActuatorMsg {
    a: Vec<f64>,
    deliver_at: usize,
}

/// One row of the optional loop log.
#[derive(Debug, Clone, PartialEq)]
pub struct LoopTraceRow {
    pub t: usize,
    pub x: Vec<f64>,
    pub u: Vec<f64>,
    pub sensor_pending: usize,
    pub actuator_pending: usize,
}

/// Simulation state of one episode.
#[derive(Debug, Clone)]
pub struct LoopState {
    model: PlantModel,
    t: usize,
    x: Vec<f64>,
    sensor_delay: usize,
    actuator_delay: usize,
    sensor: VecDeque<SensorMsg>,
    actuator: VecDeque<ActuatorMsg>,
    held: Vec<f64>,
    last_k: Option<usize>,
    states: Vec<Vec<f64>>,
    inputs: Vec<Vec<f64>>,
    log: Option<Vec<LoopTraceRow>>,
}

impl LoopState {
    /// Samples `x_0` and queues it for the controller.
    pub fn begin(model: &PlantModel, delays: &DelayConfig, timing: Timing, rng: &mut RngStream) -> Self {
        let x0 = model.sample_initial(rng);
        Self::begin_at(model, delays, timing, x0)
    }

    /// Starts from a given initial state.
    pub fn begin_at(model: &PlantModel, delays: &DelayConfig, timing: Timing, x0: Vec<f64>) -> Self {
        let (sensor_delay, actuator_delay) = timing.effective(delays);
        let mut sensor = VecDeque::new();
        sensor.push_back(SensorMsg { k: 0, x: x0.clone(), deliver_at: sensor_delay });
        Self {
            model: model.clone(),
            t: 0,
            held: vec![0.0; model.n_u()],
            x: x0.clone(),
            sensor_delay,
            actuator_delay,
            sensor,
            actuator: VecDeque::new(),
            last_k: None,
            states: vec![x0],
            inputs: Vec::new(),
            log: None,
        }
    }

    pub fn with_log(mut self) -> Self {
        self.log = Some(Vec::new());
        self
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn plant_state(&self) -> &[f64] {
        &self.x
    }

    pub fn held_input(&self) -> &[f64] {
        &self.held
    }

    /// `x_0, ..., x_t`.
    pub fn states(&self) -> &[Vec<f64>] {
        &self.states
    }

    /// Inputs applied at steps `0..t`.
    pub fn inputs(&self) -> &[Vec<f64>] {
        &self.inputs
    }

    pub fn log(&self) -> Option<&[LoopTraceRow]> {
        self.log.as_deref()
    }

    pub fn sensor_pending(&self) -> usize {
        self.sensor.len()
    }

    pub fn actuator_pending(&self) -> usize {
        self.actuator.len()
    }

    /// The observation due at the current step, if any.
    pub fn poll_observation(&mut self) -> Option<(usize, Vec<f64>)> {
        match self.sensor.front() {
            Some(m) if m.deliver_at == self.t => {
                let m = self.sensor.pop_front().unwrap();
                Some((m.k, m.x))
            }
            _ => None,
        }
    }

    /// Sends `a_k` at the current step; it reaches the actuator after the
    /// actuator-side delay. Out-of-box components are clamped.
    pub fn send_action(&mut self, k: usize, a: &[f64]) -> Result<(), NcsError> {
        if let Some(last) = self.last_k {
            if k <= last {
                return Err(NcsError::DuplicateAction { k, last });
            }
        }
        self.last_k = Some(k);
        let a = self.model.clamp_action(a);
        self.actuator.push_back(ActuatorMsg { a, deliver_at: self.t + self.actuator_delay });
        Ok(())
    }

    /// Delivers the due action, steps the plant with the held input and
    /// queues the new state. Returns `(x_{t+1}, u_t)`.
    pub fn advance(&mut self, rng: &mut RngStream) -> Result<(Vec<f64>, Vec<f64>), NcsError> {
        while let Some(m) = self.actuator.front() {
            if m.deliver_at > self.t {
                break;
            }
            self.held = self.actuator.pop_front().unwrap().a;
        }
        let u = self.held.clone();
        let next = self.model.step(&self.x, &u, rng)?;
        if let Some(log) = self.log.as_mut() {
            log.push(LoopTraceRow {
                t: self.t,
                x: self.x.clone(),
                u: u.clone(),
                sensor_pending: self.sensor.len(),
                actuator_pending: self.actuator.len(),
            });
        }
        self.t += 1;
        self.sensor.push_back(SensorMsg {
            k: self.t,
            x: next.clone(),
            deliver_at: self.t + self.sensor_delay,
        });
        self.x = next.clone();
        self.states.push(next.clone());
        self.inputs.push(u.clone());
        Ok((next, u))
    }
}

/// Writes the loop log as CSV `t,x0..,u0..,sensor_pending,actuator_pending`.
pub fn write_loop_trace(path: &Path, rows: &[LoopTraceRow]) -> Result<(), NcsError> {
    let io = |source| NcsError::Io { path: path.display().to_string(), source };
    let mut out = std::io::BufWriter::new(std::fs::File::create(path).map_err(io)?);
    if let Some(first) = rows.first() {
        let mut header = vec!["t".to_string()];
        header.extend((0..first.x.len()).map(|i| format!("x{i}")));
        header.extend((0..first.u.len()).map(|i| format!("u{i}")));
        header.push("sensor_pending".into());
        header.push("actuator_pending".into());
        writeln!(out, "{}", header.join(",")).map_err(io)?;
    }
    for r in rows {
        let mut fields = vec![r.t.to_string()];
        fields.extend(r.x.iter().map(|v| v.to_string()));
        fields.extend(r.u.iter().map(|v| v.to_string()));
        fields.push(r.sensor_pending.to_string());
        fields.push(r.actuator_pending.to_string());
        writeln!(out, "{}", fields.join(",")).map_err(io)?;
    }
    out.flush().map_err(io)
}
