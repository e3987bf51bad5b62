//! Expression trees and the recursive-descent parser for the field grammar.
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := factor (('*' | '/') factor)*
//! factor := base ('^' integer)?
//! base   := number | var | func '(' expr ')' | '(' expr ')' | '-' factor
//! var    := 'x' digits            (x1 .. xN, one-based)
//! func   := 'sin' | 'cos' | 'exp' | 'log'
//! ```
//!
//! A leading minus binds looser than `^`, so `-x1^2` is `-(x1^2)`.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Log,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Log => "log",
        }
    }

    fn from_name(name: &str) -> Option<Func> {
        match name {
            "sin" => Some(Func::Sin),
            "cos" => Some(Func::Cos),
            "exp" => Some(Func::Exp),
            "log" => Some(Func::Log),
            _ => None,
        }
    }
}

/// Expression AST. Variables are stored zero-based; `Var(0)` prints as `x1`.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(usize),
    Neg(Box<Expr>),
    Call(Func, Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, i32),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseError {
    #[error("syntax error at byte {pos}: {message}")]
    Syntax { pos: usize, message: String },
    #[error("unknown identifier `{name}` at byte {pos}")]
    UnknownIdentifier { pos: usize, name: String },
    #[error("variable x{index} at byte {pos} exceeds dimension {dim}")]
    VariableOutOfRange { pos: usize, index: usize, dim: usize },
}

#[allow(clippy::should_implement_trait)]
impl Expr {
    pub fn constant(v: f64) -> Expr {
        Expr::Const(v)
    }

    pub fn var(i: usize) -> Expr {
        Expr::Var(i)
    }

    pub fn neg(e: Expr) -> Expr {
        Expr::Neg(Box::new(e))
    }

    pub fn add(a: Expr, b: Expr) -> Expr {
        Expr::Add(Box::new(a), Box::new(b))
    }

    pub fn sub(a: Expr, b: Expr) -> Expr {
        Expr::Sub(Box::new(a), Box::new(b))
    }

    pub fn mul(a: Expr, b: Expr) -> Expr {
        Expr::Mul(Box::new(a), Box::new(b))
    }

    pub fn div(a: Expr, b: Expr) -> Expr {
        Expr::Div(Box::new(a), Box::new(b))
    }

    pub fn pow(a: Expr, k: i32) -> Expr {
        Expr::Pow(Box::new(a), k)
    }

    pub fn call(f: Func, a: Expr) -> Expr {
        Expr::Call(f, Box::new(a))
    }

    /// Largest zero-based variable index referenced, if any.
    pub fn max_var(&self) -> Option<usize> {
        match self {
            Expr::Const(_) => None,
            Expr::Var(i) => Some(*i),
            Expr::Neg(a) | Expr::Call(_, a) | Expr::Pow(a, _) => a.max_var(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => a.max_var().max(b.max_var()),
        }
    }

    /// Symbolic partial derivative with respect to the zero-based variable
    /// `var`. Only zero terms are folded; no further simplification.
    pub fn derivative(&self, var: usize) -> Expr {
        fn is_zero(e: &Expr) -> bool {
            matches!(e, Expr::Const(c) if *c == 0.0)
        }
        fn is_one(e: &Expr) -> bool {
            matches!(e, Expr::Const(c) if *c == 1.0)
        }
        fn add(a: Expr, b: Expr) -> Expr {
            match (is_zero(&a), is_zero(&b)) {
                (true, _) => b,
                (_, true) => a,
                _ => Expr::add(a, b),
            }
        }
        fn sub(a: Expr, b: Expr) -> Expr {
            match (is_zero(&a), is_zero(&b)) {
                (_, true) => a,
                (true, _) => Expr::neg(b),
                _ => Expr::sub(a, b),
            }
        }
        fn mul(a: Expr, b: Expr) -> Expr {
            if is_zero(&a) || is_zero(&b) {
                Expr::Const(0.0)
            } else if is_one(&a) {
                b
            } else if is_one(&b) {
                a
            } else {
                Expr::mul(a, b)
            }
        }

        match self {
            Expr::Const(_) => Expr::Const(0.0),
            Expr::Var(i) => Expr::Const(if *i == var { 1.0 } else { 0.0 }),
            Expr::Neg(a) => {
                let da = a.derivative(var);
                if is_zero(&da) {
                    da
                } else {
                    Expr::neg(da)
                }
            }
            Expr::Add(a, b) => add(a.derivative(var), b.derivative(var)),
            Expr::Sub(a, b) => sub(a.derivative(var), b.derivative(var)),
            Expr::Mul(a, b) => add(mul(a.derivative(var), (**b).clone()), mul((**a).clone(), b.derivative(var))),
            Expr::Div(a, b) => {
                let da = a.derivative(var);
                let db = b.derivative(var);
                let num = sub(mul(da, (**b).clone()), mul((**a).clone(), db));
                if is_zero(&num) {
                    num
                } else {
                    Expr::div(num, Expr::pow((**b).clone(), 2))
                }
            }
            Expr::Pow(a, k) => {
                let da = a.derivative(var);
                match *k {
                    0 => Expr::Const(0.0),
                    1 => da,
                    k => mul(mul(Expr::Const(k as f64), Expr::pow((**a).clone(), k - 1)), da),
                }
            }
            Expr::Call(f, a) => {
                let da = a.derivative(var);
                if is_zero(&da) {
                    return da;
                }
                let inner = (**a).clone();
                let outer = match f {
                    Func::Sin => Expr::call(Func::Cos, inner),
                    Func::Cos => Expr::neg(Expr::call(Func::Sin, inner)),
                    Func::Exp => Expr::call(Func::Exp, inner),
                    Func::Log => return Expr::div(da, inner),
                };
                mul(outer, da)
            }
        }
    }
}

/// Binding strength used by the printer; higher binds tighter.
fn precedence(e: &Expr) -> u8 {
    match e {
        Expr::Add(..) | Expr::Sub(..) => 1,
        Expr::Mul(..) | Expr::Div(..) => 2,
        Expr::Neg(_) => 3,
        Expr::Pow(..) => 4,
        Expr::Const(c) if c.is_sign_negative() => 3,
        Expr::Const(_) | Expr::Var(_) | Expr::Call(..) => 5,
    }
}

fn write_wrapped(f: &mut fmt::Formatter<'_>, e: &Expr, wrap: bool) -> fmt::Result {
    if wrap {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) => write!(f, "{c}"),
            Expr::Var(i) => write!(f, "x{}", i + 1),
            Expr::Neg(a) => {
                f.write_str("-")?;
                write_wrapped(f, a, precedence(a) < 3)
            }
            Expr::Call(func, a) => write!(f, "{}({a})", func.name()),
            Expr::Pow(a, k) => {
                write_wrapped(f, a, precedence(a) < 5)?;
                write!(f, "^{k}")
            }
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                let (op, prec) = match self {
                    Expr::Add(..) => (" + ", 1),
                    Expr::Sub(..) => (" - ", 1),
                    Expr::Mul(..) => ("*", 2),
                    _ => ("/", 2),
                };
                // A leading minus may only start a sum, never a product operand.
                let left_wrap = precedence(a) < prec || (prec == 2 && precedence(a) == 3);
                write_wrapped(f, a, left_wrap)?;
                f.write_str(op)?;
                write_wrapped(f, b, precedence(b) <= prec || precedence(b) == 3)
            }
        }
    }
}

struct Parser<'a> {
    src: &'a str,
    bytes: &'a [u8],
    pos: usize,
    dim: usize,
}

/// Parses `text` as an expression over the variables `x1..x{dim}`.
pub fn parse_expression(text: &str, dim: usize) -> Result<Expr, ParseError> {
    let mut p = Parser { src: text, bytes: text.as_bytes(), pos: 0, dim };
    let e = p.expr()?;
    p.skip_ws();
    if p.pos < p.bytes.len() {
        return Err(p.error(format!("unexpected `{}`", p.rest_char())));
    }
    Ok(e)
}

impl Parser<'_> {
    fn error(&self, message: String) -> ParseError {
        ParseError::Syntax { pos: self.pos, message }
    }

    fn rest_char(&self) -> char {
        self.src[self.pos..].chars().next().unwrap_or(' ')
    }

    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.bytes.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: u8) -> Result<(), ParseError> {
        if self.eat(c) {
            Ok(())
        } else if self.pos >= self.bytes.len() {
            Err(self.error(format!("expected `{}`, found end of input", c as char)))
        } else {
            Err(self.error(format!("expected `{}`, found `{}`", c as char, self.rest_char())))
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            if self.eat(b'+') {
                lhs = Expr::add(lhs, self.term()?);
            } else if self.eat(b'-') {
                lhs = Expr::sub(lhs, self.term()?);
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.factor()?;
        loop {
            if self.eat(b'*') {
                lhs = Expr::mul(lhs, self.factor()?);
            } else if self.eat(b'/') {
                lhs = Expr::div(lhs, self.factor()?);
            } else {
                return Ok(lhs);
            }
        }
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        if self.eat(b'-') {
            return Ok(Expr::neg(self.factor()?));
        }
        let base = self.base()?;
        if self.eat(b'^') {
            let k = self.integer()?;
            return Ok(Expr::pow(base, k));
        }
        Ok(base)
    }

    fn integer(&mut self) -> Result<i32, ParseError> {
        self.skip_ws();
        let start = self.pos;
        let negative = self.eat(b'-');
        self.skip_ws();
        let digits_start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if self.pos == digits_start {
            self.pos = start;
            return Err(self.error("expected an integer exponent".into()));
        }
        let magnitude: i32 = self.src[digits_start..self.pos]
            .parse()
            .map_err(|_| ParseError::Syntax { pos: digits_start, message: "exponent out of range".into() })?;
        Ok(if negative { -magnitude } else { magnitude })
    }

    fn base(&mut self) -> Result<Expr, ParseError> {
        match self.peek() {
            None => Err(self.error("unexpected end of input".into())),
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(b')')?;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => self.identifier(),
            Some(_) => Err(self.error(format!("unexpected `{}`", self.rest_char()))),
        }
    }

    fn number(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        let digits = |p: &mut Self| {
            let s = p.pos;
            while p.pos < p.bytes.len() && p.bytes[p.pos].is_ascii_digit() {
                p.pos += 1;
            }
            p.pos - s
        };
        let mut count = digits(self);
        if self.pos < self.bytes.len() && self.bytes[self.pos] == b'.' {
            self.pos += 1;
            count += digits(self);
        }
        if count == 0 {
            return Err(ParseError::Syntax { pos: start, message: "malformed number".into() });
        }
        if self.pos < self.bytes.len() && matches!(self.bytes[self.pos], b'e' | b'E') {
            let save = self.pos;
            self.pos += 1;
            if self.pos < self.bytes.len() && matches!(self.bytes[self.pos], b'+' | b'-') {
                self.pos += 1;
            }
            if digits(self) == 0 {
                self.pos = save;
            }
        }
        self.src[start..self.pos]
            .parse::<f64>()
            .map(Expr::Const)
            .map_err(|_| ParseError::Syntax { pos: start, message: "malformed number".into() })
    }

    fn identifier(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_alphanumeric() {
            self.pos += 1;
        }
        let name = &self.src[start..self.pos];
        if let Some(func) = Func::from_name(name) {
            self.expect(b'(')?;
            let arg = self.expr()?;
            self.expect(b')')?;
            return Ok(Expr::call(func, arg));
        }
        if let Some(digits) = name.strip_prefix('x') {
            if !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit()) {
                let index: usize =
                    digits.parse().map_err(|_| ParseError::UnknownIdentifier { pos: start, name: name.to_string() })?;
                if index == 0 {
                    return Err(ParseError::UnknownIdentifier { pos: start, name: name.to_string() });
                }
                if index > self.dim {
                    return Err(ParseError::VariableOutOfRange { pos: start, index, dim: self.dim });
                }
                return Ok(Expr::Var(index - 1));
            }
        }
        Err(ParseError::UnknownIdentifier { pos: start, name: name.to_string() })
    }
}

impl std::str::FromStr for Func {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Func::from_name(s).ok_or_else(|| ParseError::UnknownIdentifier { pos: 0, name: s.to_string() })
    }
}
