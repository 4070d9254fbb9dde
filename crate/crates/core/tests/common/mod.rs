//! Independent formula model: generated here, printed to text, parsed by the
//! library, and evaluated by literal recursion.

#![allow(dead_code)]

use std::fmt;

use taud::plant::RngStream;

#[derive(Debug, Clone)]
pub enum Body {
    Pred { coeffs: Vec<f64>, le: bool, bound: f64 },
    Not(Box<Body>),
    And(Vec<Body>),
    Or(Vec<Body>),
}

#[derive(Debug, Clone)]
pub struct Sub {
    pub always: bool,
    pub a: usize,
    pub b: usize,
    pub body: Body,
}

#[derive(Debug, Clone)]
pub enum Comb {
    Leaf(Sub),
    And(Vec<Comb>),
    Or(Vec<Comb>),
}

#[derive(Debug, Clone)]
pub struct Task {
    pub always: bool,
    pub end: usize,
    pub comb: Comb,
}

fn op(always: bool) -> &'static str {
    if always {
        "G"
    } else {
        "F"
    }
}

impl fmt::Display for Body {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Body::Pred { coeffs, le, bound } => {
                let mut first = true;
                for (i, &c) in coeffs.iter().enumerate().filter(|(_, c)| **c != 0.0) {
                    if first {
                        write!(f, "{c}*x{i}")?;
                        first = false;
                    } else if c < 0.0 {
                        write!(f, " - {}*x{i}", -c)?;
                    } else {
                        write!(f, " + {c}*x{i}")?;
                    }
                }
                write!(f, " {} {bound}", if *le { "<=" } else { ">=" })
            }
            Body::Not(b) => write!(f, "!({b})"),
            Body::And(parts) | Body::Or(parts) => {
                let sep = if matches!(self, Body::And(_)) { " && " } else { " || " };
                let text: Vec<String> = parts.iter().map(|p| format!("({p})")).collect();
                write!(f, "{}", text.join(sep))
            }
        }
    }
}

impl fmt::Display for Sub {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}[{},{}]({})", op(self.always), self.a, self.b, self.body)
    }
}

impl fmt::Display for Comb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Comb::Leaf(s) => write!(f, "{s}"),
            Comb::And(parts) | Comb::Or(parts) => {
                let sep = if matches!(self, Comb::And(_)) { " && " } else { " || " };
                let text: Vec<String> = parts
                    .iter()
                    .map(|p| match p {
                        Comb::Leaf(s) => s.to_string(),
                        other => format!("({other})"),
                    })
                    .collect();
                write!(f, "{}", text.join(sep))
            }
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}[0,{}]({})", op(self.always), self.end, self.comb)
    }
}

pub fn body_holds(b: &Body, x: &[f64]) -> bool {
    match b {
        Body::Pred { coeffs, le, bound } => {
            let mut s = 0.0;
            for (i, &c) in coeffs.iter().enumerate() {
                if c != 0.0 {
                    s += c * x[i];
                }
            }
            if *le {
                s <= *bound
            } else {
                s >= *bound
            }
        }
        Body::Not(inner) => !body_holds(inner, x),
        Body::And(parts) => parts.iter().all(|p| body_holds(p, x)),
        Body::Or(parts) => parts.iter().any(|p| body_holds(p, x)),
    }
}

pub fn sub_holds(s: &Sub, trace: &[Vec<f64>], t: usize) -> bool {
    let mut instants = (t + s.a..=t + s.b).map(|l| body_holds(&s.body, &trace[l]));
    if s.always {
        instants.all(|v| v)
    } else {
        instants.any(|v| v)
    }
}

pub fn comb_holds(c: &Comb, trace: &[Vec<f64>], t: usize) -> bool {
    match c {
        Comb::Leaf(s) => sub_holds(s, trace, t),
        Comb::And(parts) => parts.iter().all(|p| comb_holds(p, trace, t)),
        Comb::Or(parts) => parts.iter().any(|p| comb_holds(p, trace, t)),
    }
}

pub fn task_holds(task: &Task, trace: &[Vec<f64>]) -> bool {
    let mut instants = (0..=task.end).map(|t| comb_holds(&task.comb, trace, t));
    if task.always {
        instants.all(|v| v)
    } else {
        instants.any(|v| v)
    }
}

pub fn comb_horizon(c: &Comb) -> usize {
    match c {
        Comb::Leaf(s) => s.b,
        Comb::And(parts) | Comb::Or(parts) => parts.iter().map(comb_horizon).max().unwrap(),
    }
}

pub struct Gen {
    pub rng: RngStream,
    pub n_x: usize,
}

impl Gen {
    pub fn pred(&mut self) -> Body {
        let mut coeffs = vec![0.0; self.n_x];
        let lead = self.rng.below(self.n_x);
        for (i, c) in coeffs.iter_mut().enumerate() {
            if i == lead || self.rng.uniform(0.0, 1.0) < 0.3 {
                *c = self.rng.uniform(-2.0, 2.0);
            }
        }
        let le = self.rng.below(2) == 0;
        Body::Pred { coeffs, le, bound: self.rng.uniform(-1.0, 1.0) }
    }

    pub fn body(&mut self, depth: usize) -> Body {
        match if depth == 0 { 0 } else { self.rng.below(4) } {
            0 => self.pred(),
            1 => Body::Not(Box::new(self.body(depth - 1))),
            k => {
                let parts = (0..2 + self.rng.below(2)).map(|_| self.body(depth - 1)).collect();
                if k == 2 {
                    Body::And(parts)
                } else {
                    Body::Or(parts)
                }
            }
        }
    }

    pub fn sub(&mut self) -> Sub {
        let a = self.rng.below(4);
        let b = a + self.rng.below(4);
        Sub { always: self.rng.below(2) == 0, a, b, body: self.body(2) }
    }

    pub fn comb(&mut self, depth: usize) -> Comb {
        match if depth == 0 { 0 } else { self.rng.below(3) } {
            0 => Comb::Leaf(self.sub()),
            k => {
                let parts = (0..2 + self.rng.below(2)).map(|_| self.comb(depth - 1)).collect();
                if k == 1 {
                    Comb::And(parts)
                } else {
                    Comb::Or(parts)
                }
            }
        }
    }

    pub fn task(&mut self, always: Option<bool>) -> Task {
        let always = always.unwrap_or_else(|| self.rng.below(2) == 0);
        Task { always, end: self.rng.below(8), comb: self.comb(2) }
    }

    pub fn trace(&mut self, len: usize) -> Vec<Vec<f64>> {
        (0..len).map(|_| (0..self.n_x).map(|_| self.rng.uniform(-1.5, 1.5)).collect()).collect()
    }
}

pub fn oracle_flag(sub: &Sub, window: &[Vec<f64>]) -> f64 {
    let (ts, te) = (sub.a, sub.b);
    let width = (te - ts + 1) as f64;
    let mut candidates = Vec::new();
    for l in ts..=te {
        if sub.always {
            if (l..=te).all(|lp| body_holds(&sub.body, &window[lp])) {
                candidates.push((te - l + 1) as f64 / width);
            }
        } else if body_holds(&sub.body, &window[l]) {
            candidates.push((l - ts + 1) as f64 / width);
        }
    }
    candidates.into_iter().fold(f64::NEG_INFINITY, f64::max)
}
