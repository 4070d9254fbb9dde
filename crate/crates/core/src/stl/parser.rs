//! Recursive-descent parser for the three-level fragment.
//!
//! ```text
//! spec     := ("G"|"F") interval "(" phi ")"
//! phi      := conj ("||" conj)*
//! conj     := term ("&&" term)*
//! term     := ("G"|"F") interval "(" inner ")" | "(" phi ")"
//! inner    := iconj ("||" iconj)*
//! iconj    := atom ("&&" atom)*
//! atom     := "!"? ( "(" inner ")" | pred )
//! pred     := lin ("<="|">=") NUMBER
//! lin      := lterm (("+"|"-") lterm)*
//! lterm    := [NUMBER "*"] "x" INT
//! interval := "[" INT "," INT "]"
//! ```

use super::ast::{Inner, Phi, PhiExpr, Predicate, Spec, SubFormula, TemporalOp};
use super::StlError;

/// Parses `text` as a top-level task over states of dimension `n_x`.
pub fn parse_spec(text: &str, n_x: usize) -> Result<Spec, StlError> {
    let mut p = Parser { src: text.as_bytes(), pos: 0, n_x };
    let spec = p.spec()?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return Err(p.syntax("trailing input"));
    }
    Ok(spec)
}

/// Parses a bare state formula (no temporal operators).
pub fn parse_inner(text: &str, n_x: usize) -> Result<Inner, StlError> {
    let mut p = Parser { src: text.as_bytes(), pos: 0, n_x };
    let inner = p.inner()?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return Err(p.syntax("trailing input"));
    }
    Ok(inner)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    n_x: usize,
}

fn error_pos(e: &StlError) -> usize {
    match e {
        StlError::Syntax { pos, .. }
        | StlError::Nesting { pos }
        | StlError::BadInterval { pos, .. }
        | StlError::VariableOutOfRange { pos, .. }
        | StlError::DegeneratePredicate { pos } => *pos,
        _ => 0,
    }
}

impl Parser<'_> {
    fn syntax(&self, msg: impl Into<String>) -> StlError {
        StlError::Syntax { pos: self.pos, msg: msg.into() }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn peek_str(&mut self, s: &str) -> bool {
        self.skip_ws();
        self.src[self.pos..].starts_with(s.as_bytes())
    }

    fn eat(&mut self, s: &str) -> bool {
        if self.peek_str(s) {
            self.pos += s.len();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, s: &str) -> Result<(), StlError> {
        if self.eat(s) {
            Ok(())
        } else {
            Err(self.syntax(format!("expected `{s}`")))
        }
    }

    fn temporal_op(&mut self) -> Option<TemporalOp> {
        match self.peek() {
            Some(b'G') => {
                self.pos += 1;
                Some(TemporalOp::Globally)
            }
            Some(b'F') => {
                self.pos += 1;
                Some(TemporalOp::Finally)
            }
            _ => None,
        }
    }

    fn uint(&mut self) -> Result<usize, StlError> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.syntax("expected a non-negative integer"));
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        text.parse().map_err(|_| StlError::Syntax { pos: start, msg: "integer out of range".into() })
    }

    fn number(&mut self) -> Result<f64, StlError> {
        self.skip_ws();
        let start = self.pos;
        let bytes = self.src;
        let mut i = self.pos;
        if i < bytes.len() && (bytes[i] == b'-' || bytes[i] == b'+') {
            i += 1;
        }
        let digits_start = i;
        while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
            i += 1;
        }
        if i == digits_start {
            return Err(self.syntax("expected a number"));
        }
        if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
            let mut j = i + 1;
            if j < bytes.len() && (bytes[j] == b'-' || bytes[j] == b'+') {
                j += 1;
            }
            let exp_digits = j;
            while j < bytes.len() && bytes[j].is_ascii_digit() {
                j += 1;
            }
            if j > exp_digits {
                i = j;
            }
        }
        let text = std::str::from_utf8(&bytes[start..i]).unwrap();
        let v: f64 = text
            .parse()
            .map_err(|_| StlError::Syntax { pos: start, msg: format!("invalid number `{text}`") })?;
        self.pos = i;
        Ok(v)
    }

    fn interval(&mut self) -> Result<(usize, usize), StlError> {
        self.expect("[")?;
        let start_pos = self.pos;
        let a = self.uint()?;
        self.expect(",")?;
        let b = self.uint()?;
        self.expect("]")?;
        if a > b {
            return Err(StlError::BadInterval { pos: start_pos, start: a, end: b });
        }
        Ok((a, b))
    }

    fn spec(&mut self) -> Result<Spec, StlError> {
        let op_pos = {
            self.skip_ws();
            self.pos
        };
        let op = self.temporal_op().ok_or_else(|| self.syntax("expected `G` or `F`"))?;
        let (a, b) = self.interval()?;
        if a != 0 {
            return Err(StlError::Syntax {
                pos: op_pos,
                msg: "outer interval must start at 0".into(),
            });
        }
        self.expect("(")?;
        let body_start = self.pos;
        let phi = match self.phi() {
            Ok(phi) => phi,
            Err(err @ StlError::Nesting { .. }) => {
                // A bare state formula under the outer operator is read as
                // the instantaneous sub-formula G[0,0](...).
                self.pos = body_start;
                match self.inner() {
                    Ok(inner) => PhiExpr::Sub(SubFormula::new(TemporalOp::Globally, 0, 0, inner).unwrap()),
                    Err(inner_err) if error_pos(&inner_err) > error_pos(&err) => return Err(inner_err),
                    Err(_) => return Err(err),
                }
            }
            Err(err) => return Err(err),
        };
        self.expect(")")?;
        Ok(Spec::new(op, b, Phi::from_expr(phi)))
    }

    fn phi(&mut self) -> Result<PhiExpr, StlError> {
        let mut parts = vec![self.phi_conj()?];
        while self.eat("||") {
            parts.push(self.phi_conj()?);
        }
        Ok(flatten_phi(parts, false))
    }

    fn phi_conj(&mut self) -> Result<PhiExpr, StlError> {
        let mut parts = vec![self.term()?];
        while self.eat("&&") {
            parts.push(self.term()?);
        }
        Ok(flatten_phi(parts, true))
    }

    fn term(&mut self) -> Result<PhiExpr, StlError> {
        if let Some(op) = self.temporal_op() {
            let (a, b) = self.interval()?;
            self.expect("(")?;
            if self.peek_temporal() {
                return Err(StlError::Nesting { pos: self.pos });
            }
            let body = self.inner()?;
            self.expect(")")?;
            let sub = SubFormula::new(op, a, b, body).expect("interval checked");
            return Ok(PhiExpr::Sub(sub));
        }
        if self.eat("(") {
            let inner = self.phi()?;
            self.expect(")")?;
            return Ok(inner);
        }
        match self.peek() {
            Some(b'x') | Some(b'!') => Err(StlError::Nesting { pos: self.pos }),
            Some(c) if c == b'-' || c == b'+' || c.is_ascii_digit() => {
                Err(StlError::Nesting { pos: self.pos })
            }
            _ => Err(self.syntax("expected a temporal sub-formula")),
        }
    }

    fn peek_temporal(&mut self) -> bool {
        matches!(self.peek(), Some(b'G') | Some(b'F'))
    }

    fn inner(&mut self) -> Result<Inner, StlError> {
        let mut parts = vec![self.inner_conj()?];
        while self.eat("||") {
            parts.push(self.inner_conj()?);
        }
        Ok(Inner::or(parts))
    }

    fn inner_conj(&mut self) -> Result<Inner, StlError> {
        let mut parts = vec![self.atom()?];
        while self.eat("&&") {
            parts.push(self.atom()?);
        }
        Ok(Inner::and(parts))
    }

    fn atom(&mut self) -> Result<Inner, StlError> {
        let negated = self.eat("!");
        if self.peek_temporal() {
            return Err(StlError::Nesting { pos: self.pos });
        }
        let a = if self.eat("(") {
            let i = self.inner()?;
            self.expect(")")?;
            i
        } else {
            Inner::Pred(self.predicate()?)
        };
        Ok(if negated { a.negate() } else { a })
    }

    fn var(&mut self) -> Result<usize, StlError> {
        self.expect("x")?;
        let pos = self.pos;
        let idx = self.uint()?;
        if idx >= self.n_x {
            return Err(StlError::VariableOutOfRange { pos, index: idx, n_x: self.n_x });
        }
        Ok(idx)
    }

    fn lin_term(&mut self, sign: f64, coeffs: &mut [f64]) -> Result<(), StlError> {
        let c = if self.peek() == Some(b'x') {
            1.0
        } else {
            let c = self.number()?;
            self.expect("*")?;
            c
        };
        let i = self.var()?;
        coeffs[i] += sign * c;
        Ok(())
    }

    fn predicate(&mut self) -> Result<Predicate, StlError> {
        let start = {
            self.skip_ws();
            self.pos
        };
        let mut coeffs = vec![0.0; self.n_x];
        self.lin_term(1.0, &mut coeffs)?;
        loop {
            if self.eat("+") {
                self.lin_term(1.0, &mut coeffs)?;
            } else if self.peek() == Some(b'-') {
                self.pos += 1;
                self.lin_term(-1.0, &mut coeffs)?;
            } else {
                break;
            }
        }
        let flip = if self.eat("<=") {
            false
        } else if self.eat(">=") {
            true
        } else {
            return Err(self.syntax("expected `<=` or `>=`"));
        };
        let bound = self.number()?;
        let (coeffs, bound) = if flip {
            (coeffs.into_iter().map(|c| -c).collect(), -bound)
        } else {
            (coeffs, bound)
        };
        Predicate::new(coeffs, bound).ok_or(StlError::DegeneratePredicate { pos: start })
    }
}

fn flatten_phi(parts: Vec<PhiExpr>, conj: bool) -> PhiExpr {
    let mut flat = Vec::with_capacity(parts.len());
    for p in parts {
        match (conj, p) {
            (true, PhiExpr::And(children)) => flat.extend(children),
            (false, PhiExpr::Or(children)) => flat.extend(children),
            (_, other) => flat.push(other),
        }
    }
    if flat.len() == 1 {
        flat.pop().unwrap()
    } else if conj {
        PhiExpr::And(flat)
    } else {
        PhiExpr::Or(flat)
    }
}
