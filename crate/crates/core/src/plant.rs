//! Stochastic discrete-time plants `x' = f(x, u) + G w`, `w ~ N(0, I)`.

use std::fmt::Debug;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlantError {
    #[error("{what}: expected dimension {expected}, got {found}")]
    Dimension { what: &'static str, expected: usize, found: usize },
    #[error("noise gain must be invertible or identically zero")]
    SingularNoiseGain,
    #[error("{what} box has low > high at coordinate {index}")]
    InvertedBox { what: &'static str, index: usize },
}

/// Seeded deterministic random stream.
#[derive(Debug, Clone)]
pub struct RngStream(ChaCha8Rng);

impl RngStream {
    pub fn new(seed: u64) -> Self {
        Self(ChaCha8Rng::seed_from_u64(seed))
    }

    /// Independent stream identified by `(seed, stream)`.
    pub fn derive(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self(rng)
    }

    pub fn normal(&mut self) -> f64 {
        self.0.sample(StandardNormal)
    }

    /// Uniform on `[low, high]`; exactly `low` when the interval is degenerate.
    pub fn uniform(&mut self, low: f64, high: f64) -> f64 {
        if low == high {
            low
        } else {
            low + (high - low) * self.0.random::<f64>()
        }
    }

    pub fn below(&mut self, n: usize) -> usize {
        self.0.random_range(0..n)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0.random()
    }
}

/// Deterministic part `f(x, u)` of a plant.
pub trait Dynamics: Debug + Send + Sync {
    fn n_x(&self) -> usize;
    fn n_u(&self) -> usize;
    fn apply(&self, x: &[f64], u: &[f64]) -> Vec<f64>;
}

/// Two-wheeled robot: position, heading; inputs are speed and turn rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Unicycle {
    pub dt: f64,
}

impl Default for Unicycle {
    fn default() -> Self {
        Self { dt: 0.1 }
    }
}

impl Dynamics for Unicycle {
    fn n_x(&self) -> usize {
        3
    }
    fn n_u(&self) -> usize {
        2
    }
    fn apply(&self, x: &[f64], u: &[f64]) -> Vec<f64> {
        vec![
            x[0] + self.dt * u[0] * x[2].cos(),
            x[1] + self.dt * u[0] * x[2].sin(),
            x[2] + self.dt * u[1],
        ]
    }
}

/// Point mass on a line: `(position, velocity)` driven by acceleration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DoubleIntegrator {
    pub dt: f64,
}

impl Default for DoubleIntegrator {
    fn default() -> Self {
        Self { dt: 0.1 }
    }
}

impl Dynamics for DoubleIntegrator {
    fn n_x(&self) -> usize {
        2
    }
    fn n_u(&self) -> usize {
        1
    }
    fn apply(&self, x: &[f64], u: &[f64]) -> Vec<f64> {
        vec![x[0] + self.dt * x[1], x[1] + self.dt * u[0]]
    }
}

/// `x' = A x + B u`, row-major matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct Linear {
    n_x: usize,
    n_u: usize,
    a: Vec<f64>,
    b: Vec<f64>,
}

impl Linear {
    pub fn new(n_x: usize, n_u: usize, a: Vec<f64>, b: Vec<f64>) -> Result<Self, PlantError> {
        if a.len() != n_x * n_x {
            return Err(PlantError::Dimension { what: "A", expected: n_x * n_x, found: a.len() });
        }
        if b.len() != n_x * n_u {
            return Err(PlantError::Dimension { what: "B", expected: n_x * n_u, found: b.len() });
        }
        Ok(Self { n_x, n_u, a, b })
    }

    pub fn identity(n_x: usize, n_u: usize) -> Self {
        Self { n_x, n_u, a: identity(n_x, 1.0), b: vec![0.0; n_x * n_u] }
    }
}

impl Dynamics for Linear {
    fn n_x(&self) -> usize {
        self.n_x
    }
    fn n_u(&self) -> usize {
        self.n_u
    }
    fn apply(&self, x: &[f64], u: &[f64]) -> Vec<f64> {
        (0..self.n_x)
            .map(|i| {
                let ax: f64 = (0..self.n_x).map(|j| self.a[i * self.n_x + j] * x[j]).sum();
                let bu: f64 = (0..self.n_u).map(|j| self.b[i * self.n_u + j] * u[j]).sum();
                ax + bu
            })
            .collect()
    }
}

/// Row-major `scale * I_n`.
pub fn identity(n: usize, scale: f64) -> Vec<f64> {
    let mut m = vec![0.0; n * n];
    for i in 0..n {
        m[i * n + i] = scale;
    }
    m
}

/// A plant together with its noise gain, initial-state box and input box.
#[derive(Debug, Clone)]
pub struct PlantModel {
    dynamics: Arc<dyn Dynamics>,
    noise_gain: Vec<f64>,
    init_low: Vec<f64>,
    init_high: Vec<f64>,
    action_low: Vec<f64>,
    action_high: Vec<f64>,
}

impl PlantModel {
    /// `noise_gain` is row-major `n_x x n_x`; it must be invertible, or all
    /// zeros for a noise-free plant.
    pub fn new(
        dynamics: Arc<dyn Dynamics>,
        noise_gain: Vec<f64>,
        init_low: Vec<f64>,
        init_high: Vec<f64>,
        action_low: Vec<f64>,
        action_high: Vec<f64>,
    ) -> Result<Self, PlantError> {
        let n_x = dynamics.n_x();
        let n_u = dynamics.n_u();
        let check = |what, v: &[f64], n: usize| {
            if v.len() != n {
                Err(PlantError::Dimension { what, expected: n, found: v.len() })
            } else {
                Ok(())
            }
        };
        check("noise gain", &noise_gain, n_x * n_x)?;
        check("init_low", &init_low, n_x)?;
        check("init_high", &init_high, n_x)?;
        check("action_low", &action_low, n_u)?;
        check("action_high", &action_high, n_u)?;
        for (what, lo, hi) in [("init", &init_low, &init_high), ("action", &action_low, &action_high)] {
            if let Some(index) = lo.iter().zip(hi.iter()).position(|(l, h)| l > h) {
                return Err(PlantError::InvertedBox { what, index });
            }
        }
        let zero = noise_gain.iter().all(|&g| g == 0.0);
        if !zero && determinant(&noise_gain, n_x).abs() < 1e-300 {
            return Err(PlantError::SingularNoiseGain);
        }
        Ok(Self { dynamics, noise_gain, init_low, init_high, action_low, action_high })
    }

    /// The robot of the reference experiment: unicycle, `dt = 0.1`,
    /// `G = 0.01 I`, start box `[0,2.5]^2 x [-pi/2, pi/2]`, inputs in `[-1,1]^2`.
    pub fn unicycle() -> Self {
        use std::f64::consts::FRAC_PI_2;
        Self::new(
            Arc::new(Unicycle::default()),
            identity(3, 0.01),
            vec![0.0, 0.0, -FRAC_PI_2],
            vec![2.5, 2.5, FRAC_PI_2],
            vec![-1.0, -1.0],
            vec![1.0, 1.0],
        )
        .expect("valid defaults")
    }

    pub fn with_noise_gain(mut self, gain: Vec<f64>) -> Result<Self, PlantError> {
        self.noise_gain = gain;
        Self::new(
            self.dynamics,
            self.noise_gain,
            self.init_low,
            self.init_high,
            self.action_low,
            self.action_high,
        )
    }

    pub fn dynamics(&self) -> &dyn Dynamics {
        self.dynamics.as_ref()
    }

    pub fn n_x(&self) -> usize {
        self.dynamics.n_x()
    }

    pub fn n_u(&self) -> usize {
        self.dynamics.n_u()
    }

    pub fn noise_gain(&self) -> &[f64] {
        &self.noise_gain
    }

    pub fn init_low(&self) -> &[f64] {
        &self.init_low
    }

    pub fn init_high(&self) -> &[f64] {
        &self.init_high
    }

    pub fn action_low(&self) -> &[f64] {
        &self.action_low
    }

    pub fn action_high(&self) -> &[f64] {
        &self.action_high
    }

    pub fn sample_initial(&self, rng: &mut RngStream) -> Vec<f64> {
        self.init_low
            .iter()
            .zip(&self.init_high)
            .map(|(&lo, &hi)| rng.uniform(lo, hi))
            .collect()
    }

    pub fn clamp_action(&self, u: &[f64]) -> Vec<f64> {
        u.iter()
            .zip(self.action_low.iter().zip(&self.action_high))
            .map(|(&v, (&lo, &hi))| v.clamp(lo, hi))
            .collect()
    }

    /// `f(clamp(u)) + G w`. Always draws `n_x` normals so streams stay aligned
    /// regardless of the gain.
    pub fn step(&self, x: &[f64], u: &[f64], rng: &mut RngStream) -> Result<Vec<f64>, PlantError> {
        let n_x = self.n_x();
        if x.len() != n_x {
            return Err(PlantError::Dimension { what: "state", expected: n_x, found: x.len() });
        }
        if u.len() != self.n_u() {
            return Err(PlantError::Dimension { what: "input", expected: self.n_u(), found: u.len() });
        }
        let u = self.clamp_action(u);
        let mut next = self.dynamics.apply(x, &u);
        let w: Vec<f64> = (0..n_x).map(|_| rng.normal()).collect();
        for (i, xi) in next.iter_mut().enumerate() {
            let row = &self.noise_gain[i * n_x..(i + 1) * n_x];
            *xi += row.iter().zip(&w).map(|(g, wj)| g * wj).sum::<f64>();
        }
        Ok(next)
    }
}

fn determinant(m: &[f64], n: usize) -> f64 {
    let mut a = m.to_vec();
    let mut det = 1.0;
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i * n + col].abs().total_cmp(&a[j * n + col].abs()))
            .unwrap();
        if a[pivot * n + col] == 0.0 {
            return 0.0;
        }
        if pivot != col {
            for k in 0..n {
                a.swap(pivot * n + k, col * n + k);
            }
            det = -det;
        }
        let p = a[col * n + col];
        det *= p;
        for r in col + 1..n {
            let f = a[r * n + col] / p;
            for k in col..n {
                a[r * n + k] -= f * a[col * n + k];
            }
        }
    }
    det
}
