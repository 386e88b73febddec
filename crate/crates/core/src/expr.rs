//! Closed-form expressions in the two time variables `tp` (left) and `t` (right).
//!
//! Grammar:
//!
//! ```text
//! expr  := term (('+' | '-') term)*
//! term  := unary (('*' | '/') unary)*
//! unary := '-' unary | power
//! power := atom ('^' unary)?
//! atom  := number | 'tp' | 't' | 'pi' | 'e' | func '(' expr ')' | '(' expr ')'
//! func  := sin | cos | tan | exp | log | sqrt
//! ```

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Var {
    Tp,
    T,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Log,
    Sqrt,
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
        }
    }

    fn from_name(s: &str) -> Option<Func> {
        Some(match s {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tan" => Func::Tan,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            _ => return None,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Node {
    Const(f64),
    Var(Var),
    Neg(TimeExpr),
    Bin(BinOp, TimeExpr, TimeExpr),
    Call(Func, TimeExpr),
}

/// Immutable, cheaply clonable expression handle.
#[derive(Clone, PartialEq)]
pub struct TimeExpr(Arc<Node>);

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier `{name}` at offset {offset}")]
    UnknownIdentifier { offset: usize, name: String },
}

impl ParseError {
    pub fn offset(&self) -> usize {
        match self {
            ParseError::Syntax { offset, .. } | ParseError::UnknownIdentifier { offset, .. } => *offset,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("domain fault ({reason}) in `{subexpr}` at tp={tp}, t={t}")]
pub struct EvalError {
    pub reason: &'static str,
    pub subexpr: String,
    pub tp: f64,
    pub t: f64,
}

pub fn parse(text: &str) -> Result<TimeExpr, ParseError> {
    let mut p = Parser { src: text.as_bytes(), pos: 0 };
    p.skip_ws();
    if p.pos == p.src.len() {
        return Err(p.err("empty expression"));
    }
    let e = p.expr()?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return Err(p.err("unexpected trailing input"));
    }
    Ok(e)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn err(&self, message: &str) -> ParseError {
        ParseError::Syntax { offset: self.pos, message: message.to_string() }
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

    fn expr(&mut self) -> Result<TimeExpr, ParseError> {
        let mut lhs = self.term()?;
        while let Some(c @ (b'+' | b'-')) = self.peek() {
            self.pos += 1;
            let rhs = self.term()?;
            let op = if c == b'+' { BinOp::Add } else { BinOp::Sub };
            lhs = TimeExpr::raw_bin(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<TimeExpr, ParseError> {
        let mut lhs = self.unary()?;
        while let Some(c @ (b'*' | b'/')) = self.peek() {
            self.pos += 1;
            let rhs = self.unary()?;
            let op = if c == b'*' { BinOp::Mul } else { BinOp::Div };
            lhs = TimeExpr::raw_bin(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<TimeExpr, ParseError> {
        if self.peek() == Some(b'-') {
            self.pos += 1;
            let inner = self.unary()?;
            return Ok(match *inner.0 {
                Node::Const(c) => TimeExpr::constant(-c),
                _ => TimeExpr::new(Node::Neg(inner)),
            });
        }
        self.power()
    }

    fn power(&mut self) -> Result<TimeExpr, ParseError> {
        let base = self.atom()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            let exp = self.unary()?;
            return Ok(TimeExpr::raw_bin(BinOp::Pow, base, exp));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<TimeExpr, ParseError> {
        match self.peek() {
            None => Err(self.err("expected an expression")),
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err(self.err("expected `)`"));
                }
                self.pos += 1;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => self.ident(),
            Some(_) => Err(self.err("unexpected character")),
        }
    }

    fn number(&mut self) -> Result<TimeExpr, ParseError> {
        let start = self.pos;
        let s = self.src;
        let mut i = self.pos;
        while i < s.len() && (s[i].is_ascii_digit() || s[i] == b'.') {
            i += 1;
        }
        if i < s.len() && (s[i] == b'e' || s[i] == b'E') {
            let mut j = i + 1;
            if j < s.len() && (s[j] == b'+' || s[j] == b'-') {
                j += 1;
            }
            if j < s.len() && s[j].is_ascii_digit() {
                while j < s.len() && s[j].is_ascii_digit() {
                    j += 1;
                }
                i = j;
            }
        }
        let text = std::str::from_utf8(&s[start..i]).expect("ascii");
        match text.parse::<f64>() {
            Ok(v) => {
                self.pos = i;
                Ok(TimeExpr::constant(v))
            }
            Err(_) => Err(ParseError::Syntax { offset: start, message: format!("malformed number `{text}`") }),
        }
    }

    fn ident(&mut self) -> Result<TimeExpr, ParseError> {
        let start = self.pos;
        let s = self.src;
        let mut i = self.pos;
        while i < s.len() && (s[i].is_ascii_alphanumeric() || s[i] == b'_') {
            i += 1;
        }
        let name = std::str::from_utf8(&s[start..i]).expect("ascii");
        self.pos = i;
        match name {
            "tp" => return Ok(TimeExpr::var(Var::Tp)),
            "t" => return Ok(TimeExpr::var(Var::T)),
            "pi" => return Ok(TimeExpr::constant(std::f64::consts::PI)),
            "e" => return Ok(TimeExpr::constant(std::f64::consts::E)),
            _ => {}
        }
        let Some(f) = Func::from_name(name) else {
            return Err(ParseError::UnknownIdentifier { offset: start, name: name.to_string() });
        };
        if self.peek() != Some(b'(') {
            return Err(self.err("expected `(` after function name"));
        }
        self.pos += 1;
        let arg = self.expr()?;
        if self.peek() != Some(b')') {
            return Err(self.err("expected `)`"));
        }
        self.pos += 1;
        Ok(TimeExpr::new(Node::Call(f, arg)))
    }
}

impl TimeExpr {
    fn new(n: Node) -> Self {
        TimeExpr(Arc::new(n))
    }

    fn raw_bin(op: BinOp, a: TimeExpr, b: TimeExpr) -> Self {
        TimeExpr::new(Node::Bin(op, a, b))
    }

    pub fn node(&self) -> &Node {
        &self.0
    }

    pub fn constant(c: f64) -> Self {
        TimeExpr::new(Node::Const(c))
    }

    pub fn var(v: Var) -> Self {
        TimeExpr::new(Node::Var(v))
    }

    pub fn tp() -> Self {
        Self::var(Var::Tp)
    }

    pub fn t() -> Self {
        Self::var(Var::T)
    }

    pub fn as_const(&self) -> Option<f64> {
        match *self.0 {
            Node::Const(c) => Some(c),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_const() == Some(0.0)
    }

    fn is_one(&self) -> bool {
        self.as_const() == Some(1.0)
    }

    pub fn neg(&self) -> TimeExpr {
        match &*self.0 {
            Node::Const(c) => TimeExpr::constant(-c),
            Node::Neg(inner) => inner.clone(),
            _ => TimeExpr::new(Node::Neg(self.clone())),
        }
    }

    pub fn add(&self, o: &TimeExpr) -> TimeExpr {
        if let (Some(a), Some(b)) = (self.as_const(), o.as_const()) {
            return TimeExpr::constant(a + b);
        }
        if self.is_zero() {
            return o.clone();
        }
        if o.is_zero() {
            return self.clone();
        }
        if let Node::Neg(inner) = &*o.0 {
            return self.sub(inner);
        }
        TimeExpr::raw_bin(BinOp::Add, self.clone(), o.clone())
    }

    pub fn sub(&self, o: &TimeExpr) -> TimeExpr {
        if let (Some(a), Some(b)) = (self.as_const(), o.as_const()) {
            return TimeExpr::constant(a - b);
        }
        if o.is_zero() {
            return self.clone();
        }
        if self.is_zero() {
            return o.neg();
        }
        if let Node::Neg(inner) = &*o.0 {
            return self.add(inner);
        }
        TimeExpr::raw_bin(BinOp::Sub, self.clone(), o.clone())
    }

    pub fn mul(&self, o: &TimeExpr) -> TimeExpr {
        if let (Some(a), Some(b)) = (self.as_const(), o.as_const()) {
            return TimeExpr::constant(a * b);
        }
        if self.is_zero() || o.is_zero() {
            return TimeExpr::constant(0.0);
        }
        if self.is_one() {
            return o.clone();
        }
        if o.is_one() {
            return self.clone();
        }
        if self.as_const() == Some(-1.0) {
            return o.neg();
        }
        if o.as_const() == Some(-1.0) {
            return self.neg();
        }
        TimeExpr::raw_bin(BinOp::Mul, self.clone(), o.clone())
    }

    pub fn div(&self, o: &TimeExpr) -> TimeExpr {
        if let (Some(a), Some(b)) = (self.as_const(), o.as_const()) {
            let q = a / b;
            if q.is_finite() {
                return TimeExpr::constant(q);
            }
        }
        if self.is_zero() && o.as_const() != Some(0.0) {
            return TimeExpr::constant(0.0);
        }
        if o.is_one() {
            return self.clone();
        }
        TimeExpr::raw_bin(BinOp::Div, self.clone(), o.clone())
    }

    pub fn pow(&self, o: &TimeExpr) -> TimeExpr {
        if let (Some(a), Some(b)) = (self.as_const(), o.as_const()) {
            let p = a.powf(b);
            if p.is_finite() {
                return TimeExpr::constant(p);
            }
        }
        if o.is_zero() {
            return TimeExpr::constant(1.0);
        }
        if o.is_one() {
            return self.clone();
        }
        TimeExpr::raw_bin(BinOp::Pow, self.clone(), o.clone())
    }

    pub fn powi(&self, n: i32) -> TimeExpr {
        self.pow(&TimeExpr::constant(n as f64))
    }

    pub fn call(f: Func, arg: &TimeExpr) -> TimeExpr {
        if let Some(c) = arg.as_const() {
            let in_domain = match f {
                Func::Log => c > 0.0,
                Func::Sqrt => c >= 0.0,
                _ => true,
            };
            let v = apply_func(f, c);
            if in_domain && v.is_finite() {
                return TimeExpr::constant(v);
            }
        }
        TimeExpr::new(Node::Call(f, arg.clone()))
    }

    pub fn depends_on(&self, v: Var) -> bool {
        match &*self.0 {
            Node::Const(_) => false,
            Node::Var(w) => *w == v,
            Node::Neg(a) | Node::Call(_, a) => a.depends_on(v),
            Node::Bin(_, a, b) => a.depends_on(v) || b.depends_on(v),
        }
    }

    pub fn eval(&self, tp: f64, t: f64) -> Result<f64, EvalError> {
        let fault = |reason: &'static str, e: &TimeExpr| EvalError { reason, subexpr: e.to_string(), tp, t };
        Ok(match &*self.0 {
            Node::Const(c) => *c,
            Node::Var(Var::Tp) => tp,
            Node::Var(Var::T) => t,
            Node::Neg(a) => -a.eval(tp, t)?,
            Node::Bin(op, a, b) => {
                let x = a.eval(tp, t)?;
                let y = b.eval(tp, t)?;
                match op {
                    BinOp::Add => x + y,
                    BinOp::Sub => x - y,
                    BinOp::Mul => x * y,
                    BinOp::Div => {
                        if y == 0.0 {
                            return Err(fault("division by zero", self));
                        }
                        x / y
                    }
                    BinOp::Pow => {
                        if x < 0.0 && y.fract() != 0.0 {
                            return Err(fault("negative base with fractional exponent", self));
                        }
                        if x == 0.0 && y < 0.0 {
                            return Err(fault("zero to a negative power", self));
                        }
                        if y.fract() == 0.0 && y.abs() <= 64.0 {
                            x.powi(y as i32)
                        } else {
                            x.powf(y)
                        }
                    }
                }
            }
            Node::Call(f, a) => {
                let x = a.eval(tp, t)?;
                match f {
                    Func::Log if x <= 0.0 => return Err(fault("log of non-positive value", self)),
                    Func::Sqrt if x < 0.0 => return Err(fault("sqrt of negative value", self)),
                    _ => {}
                }
                let v = apply_func(*f, x);
                if !v.is_finite() {
                    return Err(fault("non-finite result", self));
                }
                v
            }
        })
    }

    /// Exact derivative of the given order with respect to `v`.
    pub fn diff(&self, v: Var, order: usize) -> TimeExpr {
        let mut e = self.clone();
        for _ in 0..order {
            e = e.diff1(v);
        }
        e
    }

    fn diff1(&self, v: Var) -> TimeExpr {
        if !self.depends_on(v) {
            return TimeExpr::constant(0.0);
        }
        match &*self.0 {
            Node::Const(_) => TimeExpr::constant(0.0),
            Node::Var(w) => TimeExpr::constant(if *w == v { 1.0 } else { 0.0 }),
            Node::Neg(a) => a.diff1(v).neg(),
            Node::Bin(op, a, b) => {
                let da = a.diff1(v);
                let db = b.diff1(v);
                match op {
                    BinOp::Add => da.add(&db),
                    BinOp::Sub => da.sub(&db),
                    BinOp::Mul => da.mul(b).add(&a.mul(&db)),
                    BinOp::Div => {
                        if db.is_zero() {
                            da.div(b)
                        } else {
                            da.mul(b).sub(&a.mul(&db)).div(&b.powi(2))
                        }
                    }
                    BinOp::Pow => {
                        if let Some(c) = b.as_const() {
                            TimeExpr::constant(c).mul(&a.pow(&TimeExpr::constant(c - 1.0))).mul(&da)
                        } else if !a.depends_on(v) {
                            self.mul(&TimeExpr::call(Func::Log, a)).mul(&db)
                        } else {
                            let log_a = TimeExpr::call(Func::Log, a);
                            self.mul(&db.mul(&log_a).add(&b.mul(&da).div(a)))
                        }
                    }
                }
            }
            Node::Call(f, a) => {
                let da = a.diff1(v);
                let outer = match f {
                    Func::Sin => TimeExpr::call(Func::Cos, a),
                    Func::Cos => TimeExpr::call(Func::Sin, a).neg(),
                    Func::Tan => TimeExpr::constant(1.0).div(&TimeExpr::call(Func::Cos, a).powi(2)),
                    Func::Exp => self.clone(),
                    Func::Log => return da.div(a),
                    Func::Sqrt => return da.div(&TimeExpr::constant(2.0).mul(self)),
                };
                outer.mul(&da)
            }
        }
    }

    /// Replaces every occurrence of `v` by `with`.
    pub fn substitute(&self, v: Var, with: &TimeExpr) -> TimeExpr {
        match &*self.0 {
            Node::Const(_) => self.clone(),
            Node::Var(w) => {
                if *w == v {
                    with.clone()
                } else {
                    self.clone()
                }
            }
            Node::Neg(a) => a.substitute(v, with).neg(),
            Node::Bin(op, a, b) => {
                let a = a.substitute(v, with);
                let b = b.substitute(v, with);
                match op {
                    BinOp::Add => a.add(&b),
                    BinOp::Sub => a.sub(&b),
                    BinOp::Mul => a.mul(&b),
                    BinOp::Div => a.div(&b),
                    BinOp::Pow => a.pow(&b),
                }
            }
            Node::Call(f, a) => TimeExpr::call(*f, &a.substitute(v, with)),
        }
    }

    /// f(t, t) written as a function of `tp`.
    pub fn diagonal(&self) -> TimeExpr {
        self.substitute(Var::T, &TimeExpr::tp())
    }

    /// Renames `t` to `tp`; for expressions that depend on `t` only.
    pub fn t_as_tp(&self) -> TimeExpr {
        self.substitute(Var::T, &TimeExpr::tp())
    }

    /// Renames `tp` to `t`.
    pub fn tp_as_t(&self) -> TimeExpr {
        self.substitute(Var::Tp, &TimeExpr::t())
    }

    /// Degree in `v` when the expression is a polynomial in it, up to `max`.
    pub fn degree_in(&self, v: Var, max: usize) -> Option<usize> {
        let mut e = self.clone();
        for d in 0..=max {
            let next = e.diff1(v);
            if next.is_zero() {
                return Some(d);
            }
            e = next;
        }
        None
    }
}

fn apply_func(f: Func, x: f64) -> f64 {
    match f {
        Func::Sin => x.sin(),
        Func::Cos => x.cos(),
        Func::Tan => x.tan(),
        Func::Exp => x.exp(),
        Func::Log => x.ln(),
        Func::Sqrt => x.sqrt(),
    }
}

const PREC_ADD: u8 = 1;
const PREC_MUL: u8 = 2;
const PREC_UNARY: u8 = 3;
const PREC_POW: u8 = 4;
const PREC_ATOM: u8 = 5;

fn prec(e: &TimeExpr) -> u8 {
    match &*e.0 {
        Node::Const(c) if *c < 0.0 || (*c == 0.0 && c.is_sign_negative()) => PREC_UNARY,
        Node::Const(_) | Node::Var(_) | Node::Call(..) => PREC_ATOM,
        Node::Neg(_) => PREC_UNARY,
        Node::Bin(BinOp::Add | BinOp::Sub, ..) => PREC_ADD,
        Node::Bin(BinOp::Mul | BinOp::Div, ..) => PREC_MUL,
        Node::Bin(BinOp::Pow, ..) => PREC_POW,
    }
}

fn write_operand(f: &mut fmt::Formatter<'_>, e: &TimeExpr, paren: bool) -> fmt::Result {
    if paren {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

impl fmt::Display for TimeExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &*self.0 {
            Node::Const(c) => write!(f, "{c:?}"),
            Node::Var(Var::Tp) => write!(f, "tp"),
            Node::Var(Var::T) => write!(f, "t"),
            Node::Neg(a) => {
                write!(f, "-")?;
                write_operand(f, a, prec(a) < PREC_POW)
            }
            Node::Call(func, a) => write!(f, "{}({a})", func.name()),
            Node::Bin(op, a, b) => {
                let (sym, p) = match op {
                    BinOp::Add => (" + ", PREC_ADD),
                    BinOp::Sub => (" - ", PREC_ADD),
                    BinOp::Mul => (" * ", PREC_MUL),
                    BinOp::Div => (" / ", PREC_MUL),
                    BinOp::Pow => ("^", PREC_POW),
                };
                let (pa, pb) = (prec(a), prec(b));
                let (lp, rp) = match op {
                    BinOp::Pow => (pa <= PREC_POW, pb < PREC_POW && pb != PREC_UNARY),
                    _ => (pa < p || pa == PREC_UNARY, pb <= p || pb == PREC_UNARY),
                };
                write_operand(f, a, lp)?;
                write!(f, "{sym}")?;
                write_operand(f, b, rp)
            }
        }
    }
}

impl fmt::Debug for TimeExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TimeExpr({self})")
    }
}

impl std::str::FromStr for TimeExpr {
    type Err = ParseError;
    fn from_str(s: &str) -> Result<Self, ParseError> {
        parse(s)
    }
}

impl serde::Serialize for TimeExpr {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> serde::Deserialize<'de> for TimeExpr {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        parse(&s).map_err(serde::de::Error::custom)
    }
}
