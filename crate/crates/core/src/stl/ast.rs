use std::fmt;

/// Temporal operator of a bounded `G`/`F` node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum TemporalOp {
    Globally,
    Finally,
}

impl TemporalOp {
    pub fn symbol(self) -> &'static str {
        match self {
            TemporalOp::Globally => "G",
            TemporalOp::Finally => "F",
        }
    }
}

/// Affine predicate `coeffs · x <= bound`.
#[derive(Debug, Clone, PartialEq)]
pub struct Predicate {
    coeffs: Vec<f64>,
    bound: f64,
}

impl Predicate {
    /// Returns `None` when every coefficient is zero or a value is not finite.
    pub fn new(coeffs: Vec<f64>, bound: f64) -> Option<Self> {
        let finite = bound.is_finite() && coeffs.iter().all(|c| c.is_finite());
        if !finite || coeffs.iter().all(|&c| c == 0.0) {
            return None;
        }
        Some(Self { coeffs, bound })
    }

    /// `x_index <= bound`.
    pub fn upper(n_x: usize, index: usize, bound: f64) -> Self {
        let mut coeffs = vec![0.0; n_x];
        coeffs[index] = 1.0;
        Self { coeffs, bound }
    }

    /// `x_index >= bound`, stored as `-x_index <= -bound`.
    pub fn lower(n_x: usize, index: usize, bound: f64) -> Self {
        let mut coeffs = vec![0.0; n_x];
        coeffs[index] = -1.0;
        Self { coeffs, bound: -bound }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn n_x(&self) -> usize {
        self.coeffs.len()
    }

    /// `h(x) = coeffs · x`.
    pub fn h(&self, x: &[f64]) -> f64 {
        self.coeffs.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    /// Robustness `y - h(x)`.
    pub fn margin(&self, x: &[f64]) -> f64 {
        self.bound - self.h(x)
    }

    pub fn holds(&self, x: &[f64]) -> bool {
        self.h(x) <= self.bound
    }
}

/// State formula without temporal operators.
#[derive(Debug, Clone, PartialEq)]
pub enum Inner {
    Pred(Predicate),
    Not(Box<Inner>),
    And(Vec<Inner>),
    Or(Vec<Inner>),
}

impl Inner {
    /// Builds an n-ary conjunction, splicing nested conjunctions.
    pub fn and(parts: Vec<Inner>) -> Inner {
        let mut flat = Vec::with_capacity(parts.len());
        for p in parts {
            match p {
                Inner::And(children) => flat.extend(children),
                other => flat.push(other),
            }
        }
        if flat.len() == 1 {
            flat.pop().unwrap()
        } else {
            Inner::And(flat)
        }
    }

    pub fn or(parts: Vec<Inner>) -> Inner {
        let mut flat = Vec::with_capacity(parts.len());
        for p in parts {
            match p {
                Inner::Or(children) => flat.extend(children),
                other => flat.push(other),
            }
        }
        if flat.len() == 1 {
            flat.pop().unwrap()
        } else {
            Inner::Or(flat)
        }
    }

    pub fn negate(self) -> Inner {
        Inner::Not(Box::new(self))
    }

    /// Largest state index referenced plus one.
    pub fn n_x(&self) -> usize {
        match self {
            Inner::Pred(p) => p.n_x(),
            Inner::Not(b) => b.n_x(),
            Inner::And(v) | Inner::Or(v) => v.iter().map(Inner::n_x).max().unwrap_or(0),
        }
    }

    pub fn robustness_at(&self, x: &[f64]) -> f64 {
        match self {
            Inner::Pred(p) => p.margin(x),
            Inner::Not(b) => -b.robustness_at(x),
            Inner::And(v) => v
                .iter()
                .map(|c| c.robustness_at(x))
                .fold(f64::INFINITY, f64::min),
            Inner::Or(v) => v
                .iter()
                .map(|c| c.robustness_at(x))
                .fold(f64::NEG_INFINITY, f64::max),
        }
    }

    pub fn holds_at(&self, x: &[f64]) -> bool {
        match self {
            Inner::Pred(p) => p.holds(x),
            Inner::Not(b) => !b.holds_at(x),
            Inner::And(v) => v.iter().all(|c| c.holds_at(x)),
            Inner::Or(v) => v.iter().any(|c| c.holds_at(x)),
        }
    }
}

/// A bounded temporal operator applied to a state formula.
#[derive(Debug, Clone, PartialEq)]
pub struct SubFormula {
    pub op: TemporalOp,
    pub t_start: usize,
    pub t_end: usize,
    pub body: Inner,
}

impl SubFormula {
    /// Returns `None` when `t_start > t_end`.
    pub fn new(op: TemporalOp, t_start: usize, t_end: usize, body: Inner) -> Option<Self> {
        (t_start <= t_end).then_some(Self { op, t_start, t_end, body })
    }

    /// Number of instants in `[t_start, t_end]`.
    pub fn width(&self) -> usize {
        self.t_end - self.t_start + 1
    }
}

/// Combiner tree over sub-formula leaves; leaves index into [`Phi::subs`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PhiNode {
    Leaf(usize),
    And(Vec<PhiNode>),
    Or(Vec<PhiNode>),
}

impl PhiNode {
    fn and(parts: Vec<PhiNode>) -> PhiNode {
        let mut flat = Vec::with_capacity(parts.len());
        for p in parts {
            match p {
                PhiNode::And(children) => flat.extend(children),
                other => flat.push(other),
            }
        }
        if flat.len() == 1 {
            flat.pop().unwrap()
        } else {
            PhiNode::And(flat)
        }
    }

    fn or(parts: Vec<PhiNode>) -> PhiNode {
        let mut flat = Vec::with_capacity(parts.len());
        for p in parts {
            match p {
                PhiNode::Or(children) => flat.extend(children),
                other => flat.push(other),
            }
        }
        if flat.len() == 1 {
            flat.pop().unwrap()
        } else {
            PhiNode::Or(flat)
        }
    }
}

/// Boolean combination of temporal sub-formulae.
///
/// `subs` holds the distinct leaves in document order. That order is the
/// flag-vector layout used by the preprocessing stage.
#[derive(Debug, Clone, PartialEq)]
pub struct Phi {
    root: PhiNode,
    subs: Vec<SubFormula>,
}

/// Builder-side tree used before leaves are interned.
#[derive(Debug, Clone, PartialEq)]
pub enum PhiExpr {
    Sub(SubFormula),
    And(Vec<PhiExpr>),
    Or(Vec<PhiExpr>),
}

impl Phi {
    pub fn from_expr(expr: PhiExpr) -> Phi {
        let mut subs = Vec::new();
        let root = Self::intern(expr, &mut subs);
        Phi { root, subs }
    }

    pub fn single(sub: SubFormula) -> Phi {
        Phi { root: PhiNode::Leaf(0), subs: vec![sub] }
    }

    fn intern(expr: PhiExpr, subs: &mut Vec<SubFormula>) -> PhiNode {
        match expr {
            PhiExpr::Sub(s) => {
                let idx = match subs.iter().position(|e| *e == s) {
                    Some(i) => i,
                    None => {
                        subs.push(s);
                        subs.len() - 1
                    }
                };
                PhiNode::Leaf(idx)
            }
            PhiExpr::And(v) => {
                PhiNode::and(v.into_iter().map(|e| Self::intern(e, subs)).collect())
            }
            PhiExpr::Or(v) => PhiNode::or(v.into_iter().map(|e| Self::intern(e, subs)).collect()),
        }
    }

    pub fn root(&self) -> &PhiNode {
        &self.root
    }

    pub fn subs(&self) -> &[SubFormula] {
        &self.subs
    }

    /// Number of distinct sub-formulae `M`.
    pub fn num_subs(&self) -> usize {
        self.subs.len()
    }
}

/// Top-level task `G[0,T_e] phi` or `F[0,T_e] phi` with derived horizons.
#[derive(Debug, Clone, PartialEq)]
pub struct Spec {
    outer: TemporalOp,
    horizon_end: usize,
    phi: Phi,
    tau: usize,
    total_horizon: usize,
}

impl Spec {
    pub fn new(outer: TemporalOp, horizon_end: usize, phi: Phi) -> Self {
        let tau = super::semantics::phi_horizon(&phi) + 1;
        Self { outer, horizon_end, phi, tau, total_horizon: horizon_end + tau - 1 }
    }

    pub fn outer(&self) -> TemporalOp {
        self.outer
    }

    /// `T_e`.
    pub fn horizon_end(&self) -> usize {
        self.horizon_end
    }

    pub fn phi(&self) -> &Phi {
        &self.phi
    }

    /// Window length `hrz(phi) + 1`.
    pub fn tau(&self) -> usize {
        self.tau
    }

    /// `T = T_e + tau - 1`, the last time index of a full trajectory.
    pub fn total_horizon(&self) -> usize {
        self.total_horizon
    }

    pub fn subs(&self) -> &[SubFormula] {
        self.phi.subs()
    }
}

// Pretty printing emits the surface grammar accepted by `parse_spec`.

fn fmt_num(v: f64) -> String {
    format!("{v:?}")
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let nz: Vec<(usize, f64)> = self
            .coeffs
            .iter()
            .copied()
            .enumerate()
            .filter(|(_, c)| *c != 0.0)
            .collect();
        if let [(i, c)] = nz.as_slice() {
            if *c == 1.0 {
                return write!(f, "x{i} <= {}", fmt_num(self.bound));
            }
            if *c == -1.0 {
                return write!(f, "x{i} >= {}", fmt_num(-self.bound));
            }
        }
        let terms: Vec<String> = nz.iter().map(|(i, c)| format!("{}*x{i}", fmt_num(*c))).collect();
        write!(f, "{} <= {}", terms.join(" + "), fmt_num(self.bound))
    }
}

impl fmt::Display for Inner {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Inner::Pred(p) => write!(f, "{p}"),
            Inner::Not(b) => match b.as_ref() {
                Inner::Pred(p) => write!(f, "!{p}"),
                other => write!(f, "!({other})"),
            },
            Inner::And(v) => {
                let parts: Vec<String> = v
                    .iter()
                    .map(|c| match c {
                        Inner::Or(_) => format!("({c})"),
                        _ => c.to_string(),
                    })
                    .collect();
                write!(f, "{}", parts.join(" && "))
            }
            Inner::Or(v) => {
                let parts: Vec<String> = v.iter().map(|c| c.to_string()).collect();
                write!(f, "{}", parts.join(" || "))
            }
        }
    }
}

impl fmt::Display for SubFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}[{},{}]({})", self.op.symbol(), self.t_start, self.t_end, self.body)
    }
}

impl Phi {
    fn fmt_node(&self, node: &PhiNode, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match node {
            PhiNode::Leaf(i) => write!(f, "{}", self.subs[*i]),
            PhiNode::And(v) => {
                for (n, c) in v.iter().enumerate() {
                    if n > 0 {
                        write!(f, " && ")?;
                    }
                    if matches!(c, PhiNode::Or(_)) {
                        write!(f, "(")?;
                        self.fmt_node(c, f)?;
                        write!(f, ")")?;
                    } else {
                        self.fmt_node(c, f)?;
                    }
                }
                Ok(())
            }
            PhiNode::Or(v) => {
                for (n, c) in v.iter().enumerate() {
                    if n > 0 {
                        write!(f, " || ")?;
                    }
                    self.fmt_node(c, f)?;
                }
                Ok(())
            }
        }
    }
}

impl fmt::Display for Phi {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_node(&self.root, f)
    }
}

impl fmt::Display for Spec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}[0,{}]({})", self.outer.symbol(), self.horizon_end, self.phi)
    }
}
