//! Closed-form scalar expressions in the spatial variable `x` and the
//! state variable `xi`.
//!
//! The grammar is deliberately small: numbers, `pi`, `e`, the variables,
//! `+ - * / ^`, unary minus, and the functions `sin`, `cos`, `exp`, `ln`,
//! `sqrt`, `pow(a, b)`. Expressions are constant-folded at construction so
//! constant coefficients evaluate without walking a tree.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Var {
    X,
    Xi,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(Var),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Sin(Box<Expr>),
    Cos(Box<Expr>),
    Exp(Box<Expr>),
    Ln(Box<Expr>),
}

use Expr::*;

fn b(e: Expr) -> Box<Expr> {
    Box::new(e)
}

impl Expr {
    pub fn constant(v: f64) -> Self {
        Const(v)
    }

    pub fn x() -> Self {
        Var(Var::X)
    }

    pub fn xi() -> Self {
        Var(Var::Xi)
    }

    pub fn parse(src: &str) -> Result<Self> {
        let mut p = Parser { src, pos: 0 };
        let e = p.expr()?;
        p.skip_ws();
        if p.pos != src.len() {
            return Err(p.error("unexpected trailing input"));
        }
        Ok(e.simplify())
    }

    pub fn eval(&self, x: f64, xi: f64) -> f64 {
        match self {
            Const(c) => *c,
            Var(Var::X) => x,
            Var(Var::Xi) => xi,
            Neg(a) => -a.eval(x, xi),
            Add(a, c) => a.eval(x, xi) + c.eval(x, xi),
            Sub(a, c) => a.eval(x, xi) - c.eval(x, xi),
            Mul(a, c) => a.eval(x, xi) * c.eval(x, xi),
            Div(a, c) => a.eval(x, xi) / c.eval(x, xi),
            Pow(a, c) => pow(a.eval(x, xi), c.eval(x, xi)),
            Sin(a) => a.eval(x, xi).sin(),
            Cos(a) => a.eval(x, xi).cos(),
            Exp(a) => a.eval(x, xi).exp(),
            Ln(a) => a.eval(x, xi).ln(),
        }
    }

    pub fn depends_on(&self, v: Var) -> bool {
        match self {
            Const(_) => false,
            Var(w) => *w == v,
            Neg(a) | Sin(a) | Cos(a) | Exp(a) | Ln(a) => a.depends_on(v),
            Add(a, c) | Sub(a, c) | Mul(a, c) | Div(a, c) | Pow(a, c) => a.depends_on(v) || c.depends_on(v),
        }
    }

    pub fn as_const(&self) -> Option<f64> {
        match self {
            Const(c) => Some(*c),
            _ => None,
        }
    }

    /// Symbolic partial derivative with respect to `v`.
    pub fn derivative(&self, v: Var) -> Expr {
        self.diff(v).simplify()
    }

    fn diff(&self, v: Var) -> Expr {
        if !self.depends_on(v) {
            return Const(0.0);
        }
        match self {
            Const(_) => Const(0.0),
            Var(w) => Const(if *w == v { 1.0 } else { 0.0 }),
            Neg(a) => Neg(b(a.diff(v))),
            Add(a, c) => Add(b(a.diff(v)), b(c.diff(v))),
            Sub(a, c) => Sub(b(a.diff(v)), b(c.diff(v))),
            Mul(a, c) => Add(b(Mul(b(a.diff(v)), c.clone())), b(Mul(a.clone(), b(c.diff(v))))),
            Div(a, c) => Div(
                b(Sub(b(Mul(b(a.diff(v)), c.clone())), b(Mul(a.clone(), b(c.diff(v)))))),
                b(Pow(c.clone(), b(Const(2.0)))),
            ),
            Pow(base, ex) if !ex.depends_on(v) => {
                Mul(b(Mul(ex.clone(), b(Pow(base.clone(), b(Sub(ex.clone(), b(Const(1.0)))))))), b(base.diff(v)))
            }
            Pow(base, ex) => Mul(
                b(self.clone()),
                b(Add(
                    b(Mul(b(ex.diff(v)), b(Ln(base.clone())))),
                    b(Div(b(Mul(ex.clone(), b(base.diff(v)))), base.clone())),
                )),
            ),
            Sin(a) => Mul(b(Cos(a.clone())), b(a.diff(v))),
            Cos(a) => Neg(b(Mul(b(Sin(a.clone())), b(a.diff(v))))),
            Exp(a) => Mul(b(self.clone()), b(a.diff(v))),
            Ln(a) => Div(b(a.diff(v)), a.clone()),
        }
    }

    /// Constant folding plus the additive/multiplicative identities.
    pub fn simplify(self) -> Expr {
        match self {
            Const(_) | Var(_) => self,
            Neg(a) => match a.simplify() {
                Const(c) => Const(-c),
                Neg(inner) => *inner,
                s => Neg(b(s)),
            },
            Add(a, c) => match (a.simplify(), c.simplify()) {
                (Const(x), Const(y)) => Const(x + y),
                (Const(z), s) | (s, Const(z)) if z == 0.0 => s,
                (s, Neg(t)) => Sub(b(s), t),
                (s, t) => Add(b(s), b(t)),
            },
            Sub(a, c) => match (a.simplify(), c.simplify()) {
                (Const(x), Const(y)) => Const(x - y),
                (s, Const(z)) if z == 0.0 => s,
                (Const(z), t) if z == 0.0 => Neg(b(t)),
                (s, t) => Sub(b(s), b(t)),
            },
            Mul(a, c) => match (a.simplify(), c.simplify()) {
                (Const(x), Const(y)) => Const(x * y),
                (Const(z), _) | (_, Const(z)) if z == 0.0 => Const(0.0),
                (Const(o), s) | (s, Const(o)) if o == 1.0 => s,
                (Const(o), s) | (s, Const(o)) if o == -1.0 => Neg(b(s)),
                (s, t) => Mul(b(s), b(t)),
            },
            Div(a, c) => match (a.simplify(), c.simplify()) {
                (Const(x), Const(y)) => Const(x / y),
                (s, Const(o)) if o == 1.0 => s,
                (Const(z), _) if z == 0.0 => Const(0.0),
                (s, t) => Div(b(s), b(t)),
            },
            Pow(a, c) => match (a.simplify(), c.simplify()) {
                (Const(x), Const(y)) => Const(pow(x, y)),
                (_, Const(z)) if z == 0.0 => Const(1.0),
                (s, Const(o)) if o == 1.0 => s,
                (s, t) => Pow(b(s), b(t)),
            },
            Sin(a) => fold(a.simplify(), f64::sin, Sin),
            Cos(a) => fold(a.simplify(), f64::cos, Cos),
            Exp(a) => fold(a.simplify(), f64::exp, Exp),
            Ln(a) => fold(a.simplify(), f64::ln, Ln),
        }
    }
}

fn fold(a: Expr, f: fn(f64) -> f64, ctor: fn(Box<Expr>) -> Expr) -> Expr {
    match a {
        Const(c) => Const(f(c)),
        s => ctor(b(s)),
    }
}

/// `powf` with integer exponents routed through `powi`, so negative bases
/// with integral exponents stay real.
fn pow(base: f64, ex: f64) -> f64 {
    if ex.fract() == 0.0 && ex.abs() <= i32::MAX as f64 {
        base.powi(ex as i32)
    } else {
        base.powf(ex)
    }
}

impl FromStr for Expr {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Expr::parse(s)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Const(c) => write!(f, "{c:?}"),
            Var(Var::X) => write!(f, "x"),
            Var(Var::Xi) => write!(f, "xi"),
            Neg(a) => write!(f, "(-{a})"),
            Add(a, c) => write!(f, "({a} + {c})"),
            Sub(a, c) => write!(f, "({a} - {c})"),
            Mul(a, c) => write!(f, "({a} * {c})"),
            Div(a, c) => write!(f, "({a} / {c})"),
            Pow(a, c) => write!(f, "({a} ^ {c})"),
            Sin(a) => write!(f, "sin({a})"),
            Cos(a) => write!(f, "cos({a})"),
            Exp(a) => write!(f, "exp({a})"),
            Ln(a) => write!(f, "ln({a})"),
        }
    }
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn error(&self, msg: &str) -> Error {
        Error::Config(format!("expression '{}': {msg} at column {}", self.src, self.pos + 1))
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.peek() {
            if c.is_whitespace() {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
    }

    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn eat(&mut self, c: char) -> bool {
        self.skip_ws();
        if self.peek() == Some(c) {
            self.pos += c.len_utf8();
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            if self.eat('+') {
                lhs = Add(b(lhs), b(self.term()?));
            } else if self.eat('-') {
                lhs = Sub(b(lhs), b(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat('*') {
                lhs = Mul(b(lhs), b(self.unary()?));
            } else if self.eat('/') {
                lhs = Div(b(lhs), b(self.unary()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.eat('-') {
            Ok(Neg(b(self.unary()?)))
        } else if self.eat('+') {
            self.unary()
        } else {
            self.power()
        }
    }

    // `^` binds tighter than unary minus and is right-associative.
    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if self.eat('^') {
            Ok(Pow(b(base), b(self.unary()?)))
        } else {
            Ok(base)
        }
    }

    fn atom(&mut self) -> Result<Expr> {
        self.skip_ws();
        let start = self.pos;
        match self.peek() {
            Some('(') => {
                self.pos += 1;
                let e = self.expr()?;
                if !self.eat(')') {
                    return Err(self.error("expected ')'"));
                }
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == '.' => {
                while let Some(c) = self.peek() {
                    let exp_sign =
                        (c == '+' || c == '-') && matches!(self.src[..self.pos].chars().last(), Some('e' | 'E'));
                    if c.is_ascii_digit() || c == '.' || c == 'e' || c == 'E' || exp_sign {
                        self.pos += 1;
                    } else {
                        break;
                    }
                }
                self.src[start..self.pos].parse::<f64>().map(Const).map_err(|_| self.error("malformed number"))
            }
            Some(c) if c.is_ascii_alphabetic() || c == '_' => {
                while let Some(c) = self.peek() {
                    if c.is_ascii_alphanumeric() || c == '_' {
                        self.pos += 1;
                    } else {
                        break;
                    }
                }
                let ident = &self.src[start..self.pos];
                self.skip_ws();
                if self.peek() == Some('(') {
                    self.pos += 1;
                    let first = self.expr()?;
                    let second = if self.eat(',') { Some(self.expr()?) } else { None };
                    if !self.eat(')') {
                        return Err(self.error("expected ')'"));
                    }
                    return match (ident, second) {
                        ("sin", None) => Ok(Sin(b(first))),
                        ("cos", None) => Ok(Cos(b(first))),
                        ("exp", None) => Ok(Exp(b(first))),
                        ("ln", None) => Ok(Ln(b(first))),
                        ("sqrt", None) => Ok(Pow(b(first), b(Const(0.5)))),
                        ("pow", Some(ex)) => Ok(Pow(b(first), b(ex))),
                        _ => Err(self.error(&format!("unknown function '{ident}'"))),
                    };
                }
                match ident {
                    "x" | "rho" => Ok(Var(Var::X)),
                    "xi" => Ok(Var(Var::Xi)),
                    "pi" => Ok(Const(std::f64::consts::PI)),
                    "e" => Ok(Const(std::f64::consts::E)),
                    _ => Err(self.error(&format!("unknown identifier '{ident}'"))),
                }
            }
            _ => Err(self.error("expected a number, variable, function or '('")),
        }
    }
}
