//! Arithmetic expressions for problem data.
//!
//! Grammar, lowest precedence first:
//!
//! ```text
//! sum     := product (("+" | "-") product)*
//! product := unary (("*" | "/") unary)*
//! unary   := "-" unary | power
//! power   := atom ("^" unary)?
//! atom    := number | variable | func "(" sum ")" | "(" sum ")"
//! ```
//!
//! Variables are `x1..x3`, `u` and `g1..g3`; functions are `exp`, `sin`,
//! `cos` and `sqrt`. `^` is right-associative and binds tighter than unary
//! minus, so `-x1^2` is `-(x1^2)`.

use std::fmt;
use std::sync::Arc;

use convexshape::fem::SpatialFunction;
use convexshape::shapecalc::Integrand;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExprError {
    #[error("syntax error at position {position}: {message}")]
    Syntax { position: usize, message: String },

    #[error("unknown identifier `{name}` at position {position}")]
    UnknownIdentifier { name: String, position: usize },

    #[error("`{0}` may not appear in a right-hand side")]
    StateVariable(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Var {
    /// Coordinate `x1..x3`, zero-based.
    X(usize),
    U,
    /// State gradient component `g1..g3`, zero-based.
    G(usize),
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Var::X(i) => write!(f, "x{}", i + 1),
            Var::U => f.write_str("u"),
            Var::G(i) => write!(f, "g{}", i + 1),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Exp,
    Sin,
    Cos,
    Sqrt,
    /// Only produced by differentiating `a^b` with non-constant `b`.
    Ln,
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Sqrt => "sqrt",
            Func::Ln => "ln",
        }
    }

    fn apply(self, v: f64) -> f64 {
        match self {
            Func::Exp => v.exp(),
            Func::Sin => v.sin(),
            Func::Cos => v.cos(),
            Func::Sqrt => v.sqrt(),
            Func::Ln => v.ln(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(Var),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

/// Values of the variables an expression may reference.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Env {
    pub x: [f64; 3],
    pub u: f64,
    pub g: [f64; 3],
}

impl Env {
    pub fn at(x: &[f64], u: f64, g: &[f64]) -> Self {
        let mut env = Env { u, ..Default::default() };
        env.x[..x.len()].copy_from_slice(x);
        env.g[..g.len()].copy_from_slice(g);
        env
    }
}

pub fn parse_expression(text: &str) -> Result<Expr, ExprError> {
    let mut p = Parser { src: text, pos: 0 };
    let e = p.sum()?;
    p.skip_ws();
    if p.pos < text.len() {
        return Err(p.syntax(p.pos, format!("unexpected `{}`", p.peek_char().unwrap())));
    }
    Ok(e)
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl Parser<'_> {
    fn syntax(&self, byte: usize, message: impl Into<String>) -> ExprError {
        ExprError::Syntax {
            position: self.column(byte),
            message: message.into(),
        }
    }

    /// One-based character column of a byte offset.
    fn column(&self, byte: usize) -> usize {
        self.src[..byte].chars().count() + 1
    }

    fn skip_ws(&mut self) {
        let rest = &self.src[self.pos..];
        self.pos += rest.len() - rest.trim_start().len();
    }

    fn peek_char(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn eat(&mut self, c: char) -> bool {
        self.skip_ws();
        if self.peek_char() == Some(c) {
            self.pos += c.len_utf8();
            true
        } else {
            false
        }
    }

    fn sum(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.product()?;
        loop {
            if self.eat('+') {
                lhs = Expr::Add(Box::new(lhs), Box::new(self.product()?));
            } else if self.eat('-') {
                lhs = Expr::Sub(Box::new(lhs), Box::new(self.product()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn product(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat('*') {
                lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.eat('/') {
                lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        if self.eat('-') {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        let base = self.atom()?;
        if self.eat('^') {
            return Ok(Expr::Pow(Box::new(base), Box::new(self.unary()?)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ExprError> {
        self.skip_ws();
        let start = self.pos;
        match self.peek_char() {
            None => Err(self.syntax(start, "unexpected end of input")),
            Some('(') => {
                self.pos += 1;
                let e = self.sum()?;
                if !self.eat(')') {
                    return Err(self.syntax(self.pos, "expected `)`"));
                }
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == '.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => self.identifier(),
            Some(c) => Err(self.syntax(start, format!("unexpected `{c}`"))),
        }
    }

    fn number(&mut self) -> Result<Expr, ExprError> {
        let start = self.pos;
        let bytes = self.src.as_bytes();
        let mut i = start;
        while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
            i += 1;
        }
        if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
            let mut j = i + 1;
            if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                j += 1;
            }
            if j < bytes.len() && bytes[j].is_ascii_digit() {
                while j < bytes.len() && bytes[j].is_ascii_digit() {
                    j += 1;
                }
                i = j;
            }
        }
        let text = &self.src[start..i];
        let v = text
            .parse::<f64>()
            .map_err(|_| self.syntax(start, format!("malformed number `{text}`")))?;
        self.pos = i;
        Ok(Expr::Num(v))
    }

    fn identifier(&mut self) -> Result<Expr, ExprError> {
        let start = self.pos;
        let len = self.src[start..]
            .find(|c: char| !c.is_ascii_alphanumeric() && c != '_')
            .unwrap_or(self.src.len() - start);
        let name = &self.src[start..start + len];
        self.pos += len;
        let var = match name {
            "x1" => Some(Var::X(0)),
            "x2" => Some(Var::X(1)),
            "x3" => Some(Var::X(2)),
            "u" => Some(Var::U),
            "g1" => Some(Var::G(0)),
            "g2" => Some(Var::G(1)),
            "g3" => Some(Var::G(2)),
            _ => None,
        };
        if let Some(v) = var {
            return Ok(Expr::Var(v));
        }
        let func = match name {
            "exp" => Func::Exp,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "sqrt" => Func::Sqrt,
            _ => {
                return Err(ExprError::UnknownIdentifier {
                    name: name.to_string(),
                    position: self.column(start),
                })
            }
        };
        if !self.eat('(') {
            return Err(self.syntax(self.pos, format!("expected `(` after `{name}`")));
        }
        let arg = self.sum()?;
        if !self.eat(')') {
            return Err(self.syntax(self.pos, "expected `)`"));
        }
        Ok(Expr::Call(func, Box::new(arg)))
    }
}

fn num(v: f64) -> Expr {
    Expr::Num(v)
}

fn as_num(e: &Expr) -> Option<f64> {
    match e {
        Expr::Num(v) => Some(*v),
        _ => None,
    }
}

// Smart constructors fold constants and drop neutral elements so that
// derivatives stay small.
fn add(a: Expr, b: Expr) -> Expr {
    match (as_num(&a), as_num(&b)) {
        (Some(x), Some(y)) => num(x + y),
        (Some(x), _) if x == 0.0 => b,
        (_, Some(y)) if y == 0.0 => a,
        _ => Expr::Add(Box::new(a), Box::new(b)),
    }
}

fn sub(a: Expr, b: Expr) -> Expr {
    match (as_num(&a), as_num(&b)) {
        (Some(x), Some(y)) => num(x - y),
        (Some(x), _) if x == 0.0 => neg(b),
        (_, Some(y)) if y == 0.0 => a,
        _ => Expr::Sub(Box::new(a), Box::new(b)),
    }
}

fn mul(a: Expr, b: Expr) -> Expr {
    match (as_num(&a), as_num(&b)) {
        (Some(x), Some(y)) => num(x * y),
        (Some(x), _) | (_, Some(x)) if x == 0.0 => num(0.0),
        (Some(x), _) if x == 1.0 => b,
        (_, Some(y)) if y == 1.0 => a,
        _ => Expr::Mul(Box::new(a), Box::new(b)),
    }
}

fn div(a: Expr, b: Expr) -> Expr {
    match (as_num(&a), as_num(&b)) {
        (Some(x), _) if x == 0.0 => num(0.0),
        (_, Some(y)) if y == 1.0 => a,
        _ => Expr::Div(Box::new(a), Box::new(b)),
    }
}

fn neg(a: Expr) -> Expr {
    match a {
        Expr::Num(v) => num(-v),
        Expr::Neg(inner) => *inner,
        other => Expr::Neg(Box::new(other)),
    }
}

fn pow(a: Expr, b: Expr) -> Expr {
    match as_num(&b) {
        Some(y) if y == 0.0 => num(1.0),
        Some(y) if y == 1.0 => a,
        _ => Expr::Pow(Box::new(a), Box::new(b)),
    }
}

fn call(f: Func, a: Expr) -> Expr {
    Expr::Call(f, Box::new(a))
}

impl Expr {
    pub fn eval(&self, env: &Env) -> f64 {
        match self {
            Expr::Num(v) => *v,
            Expr::Var(Var::X(i)) => env.x[*i],
            Expr::Var(Var::U) => env.u,
            Expr::Var(Var::G(i)) => env.g[*i],
            Expr::Neg(a) => -a.eval(env),
            Expr::Add(a, b) => a.eval(env) + b.eval(env),
            Expr::Sub(a, b) => a.eval(env) - b.eval(env),
            Expr::Mul(a, b) => a.eval(env) * b.eval(env),
            Expr::Div(a, b) => a.eval(env) / b.eval(env),
            Expr::Pow(a, b) => {
                let base = a.eval(env);
                match as_num(b) {
                    Some(e) if e.fract() == 0.0 && e.abs() <= 64.0 => base.powi(e as i32),
                    _ => base.powf(b.eval(env)),
                }
            }
            Expr::Call(f, a) => f.apply(a.eval(env)),
        }
    }

    pub fn depends_on(&self, v: Var) -> bool {
        match self {
            Expr::Num(_) => false,
            Expr::Var(w) => *w == v,
            Expr::Neg(a) | Expr::Call(_, a) => a.depends_on(v),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) | Expr::Pow(a, b) => {
                a.depends_on(v) || b.depends_on(v)
            }
        }
    }

    /// Symbolic partial derivative.
    pub fn derivative(&self, v: Var) -> Expr {
        if !self.depends_on(v) {
            return num(0.0);
        }
        match self {
            Expr::Num(_) => num(0.0),
            Expr::Var(w) => num(if *w == v { 1.0 } else { 0.0 }),
            Expr::Neg(a) => neg(a.derivative(v)),
            Expr::Add(a, b) => add(a.derivative(v), b.derivative(v)),
            Expr::Sub(a, b) => sub(a.derivative(v), b.derivative(v)),
            Expr::Mul(a, b) => add(
                mul(a.derivative(v), (**b).clone()),
                mul((**a).clone(), b.derivative(v)),
            ),
            Expr::Div(a, b) => sub(
                div(a.derivative(v), (**b).clone()),
                div(
                    mul((**a).clone(), b.derivative(v)),
                    pow((**b).clone(), num(2.0)),
                ),
            ),
            Expr::Pow(a, b) => {
                if !b.depends_on(v) {
                    // d(a^c) = c a^(c-1) a'
                    let c = (**b).clone();
                    let cm1 = sub(c.clone(), num(1.0));
                    mul(mul(c, pow((**a).clone(), cm1)), a.derivative(v))
                } else {
                    // d(a^b) = a^b (b' ln a + b a' / a)
                    let inner = add(
                        mul(b.derivative(v), call(Func::Ln, (**a).clone())),
                        div(mul((**b).clone(), a.derivative(v)), (**a).clone()),
                    );
                    mul(self.clone(), inner)
                }
            }
            Expr::Call(f, a) => {
                let da = a.derivative(v);
                let outer = match f {
                    Func::Exp => self.clone(),
                    Func::Sin => call(Func::Cos, (**a).clone()),
                    Func::Cos => neg(call(Func::Sin, (**a).clone())),
                    Func::Sqrt => div(num(0.5), self.clone()),
                    Func::Ln => div(num(1.0), (**a).clone()),
                };
                mul(outer, da)
            }
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) if *v < 0.0 => write!(f, "({v:?})"),
            Expr::Num(v) => write!(f, "{v:?}"),
            Expr::Var(v) => write!(f, "{v}"),
            Expr::Neg(a) => write!(f, "(-{a})"),
            Expr::Add(a, b) => write!(f, "({a} + {b})"),
            Expr::Sub(a, b) => write!(f, "({a} - {b})"),
            Expr::Mul(a, b) => write!(f, "({a} * {b})"),
            Expr::Div(a, b) => write!(f, "({a} / {b})"),
            Expr::Pow(a, b) => write!(f, "({a} ^ {b})"),
            Expr::Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}

/// Right-hand side `f(x)` with symbolic gradient.
#[derive(Debug, Clone)]
pub struct ExprFunction {
    expr: Expr,
    grad: [Expr; 3],
}

impl ExprFunction {
    /// Fails if the expression references `u` or `g1..g3`.
    pub fn new(expr: Expr) -> Result<Self, ExprError> {
        for v in [Var::U, Var::G(0), Var::G(1), Var::G(2)] {
            if expr.depends_on(v) {
                return Err(ExprError::StateVariable(v.to_string()));
            }
        }
        let grad = [0, 1, 2].map(|i| expr.derivative(Var::X(i)));
        Ok(Self { expr, grad })
    }

    pub fn parse(text: &str) -> Result<Self, ExprError> {
        Self::new(parse_expression(text)?)
    }

    pub fn expr(&self) -> &Expr {
        &self.expr
    }
}

impl SpatialFunction for ExprFunction {
    fn value(&self, x: &[f64]) -> f64 {
        self.expr.eval(&Env::at(x, 0.0, &[]))
    }

    fn gradient(&self, x: &[f64]) -> Option<[f64; 3]> {
        let env = Env::at(x, 0.0, &[]);
        Some([0, 1, 2].map(|i| self.grad[i].eval(&env)))
    }
}

/// Objective integrand `j(x, u, g)` with symbolic partials.
#[derive(Debug, Clone)]
pub struct ExprIntegrand {
    expr: Expr,
    d_x: Arc<[Expr; 3]>,
    d_u: Expr,
    d_g: Arc<[Expr; 3]>,
}

impl ExprIntegrand {
    pub fn new(expr: Expr) -> Self {
        Self {
            d_x: Arc::new([0, 1, 2].map(|i| expr.derivative(Var::X(i)))),
            d_u: expr.derivative(Var::U),
            d_g: Arc::new([0, 1, 2].map(|i| expr.derivative(Var::G(i)))),
            expr,
        }
    }

    pub fn parse(text: &str) -> Result<Self, ExprError> {
        Ok(Self::new(parse_expression(text)?))
    }

    pub fn expr(&self) -> &Expr {
        &self.expr
    }
}

impl Integrand for ExprIntegrand {
    fn value(&self, x: &[f64], u: f64, g: &[f64]) -> f64 {
        self.expr.eval(&Env::at(x, u, g))
    }

    fn d_x(&self, x: &[f64], u: f64, g: &[f64]) -> [f64; 3] {
        let env = Env::at(x, u, g);
        [0, 1, 2].map(|i| self.d_x[i].eval(&env))
    }

    fn d_u(&self, x: &[f64], u: f64, g: &[f64]) -> f64 {
        self.d_u.eval(&Env::at(x, u, g))
    }

    fn d_g(&self, x: &[f64], u: f64, g: &[f64]) -> [f64; 3] {
        let env = Env::at(x, u, g);
        [0, 1, 2].map(|i| self.d_g[i].eval(&env))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eval(text: &str, x: [f64; 3]) -> f64 {
        parse_expression(text).unwrap().eval(&Env { x, ..Default::default() })
    }

    #[test]
    fn precedence() {
        assert_eq!(eval("2+3*4", [0.0; 3]), 14.0);
        assert_eq!(eval("2^3^2", [0.0; 3]), 512.0);
        assert_eq!(eval("-2^2", [0.0; 3]), -4.0);
        assert_eq!(eval("2^-1", [0.0; 3]), 0.5);
        assert_eq!(eval("8/4/2", [0.0; 3]), 1.0);
        assert_eq!(eval("1-2-3", [0.0; 3]), -4.0);
        assert_eq!(eval("(1 - 2) * -3", [0.0; 3]), 3.0);
        assert_eq!(eval("1.5e2 + .5", [0.0; 3]), 150.5);
    }

    #[test]
    fn first_example_rhs_at_origin() {
        let v = eval("20*(x1 + 0.4 - x2^2)^2 + x1^2 + x2^2 - 1", [0.0; 3]);
        assert!((v - 2.2).abs() < 1e-14);
    }

    #[test]
    fn power_rule() {
        let d = parse_expression("x1^2").unwrap().derivative(Var::X(0));
        assert_eq!(d.eval(&Env { x: [3.0, 0.0, 0.0], ..Default::default() }), 6.0);
    }

    #[test]
    fn functions_and_chain_rule() {
        let e = parse_expression("exp(sin(x1)) * sqrt(x2) + cos(x3)").unwrap();
        let env = Env { x: [0.3, 2.0, 0.7], ..Default::default() };
        let want = [
            0.3f64.cos() * 0.3f64.sin().exp() * 2.0f64.sqrt(),
            0.3f64.sin().exp() * 0.5 / 2.0f64.sqrt(),
            -0.7f64.sin(),
        ];
        for (i, w) in want.iter().enumerate() {
            assert!((e.derivative(Var::X(i)).eval(&env) - w).abs() < 1e-14);
        }
    }

    #[test]
    fn variable_exponent() {
        let e = parse_expression("x1^x2").unwrap();
        let env = Env { x: [2.0, 3.0, 0.0], ..Default::default() };
        assert!((e.derivative(Var::X(0)).eval(&env) - 12.0).abs() < 1e-12);
        assert!((e.derivative(Var::X(1)).eval(&env) - 8.0 * 2.0f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn second_derivative() {
        let e = parse_expression("x1^3 * u").unwrap();
        let d2 = e.derivative(Var::X(0)).derivative(Var::X(0));
        let env = Env { x: [2.0, 0.0, 0.0], u: 5.0, ..Default::default() };
        assert_eq!(d2.eval(&env), 60.0);
        assert_eq!(e.derivative(Var::U).derivative(Var::U).eval(&env), 0.0);
    }

    #[test]
    fn display_reparses_to_same_values() {
        let e = parse_expression("-x1^2 / (1 + g2) - 3*u").unwrap();
        let again = parse_expression(&e.to_string()).unwrap();
        let env = Env::at(&[0.4, -1.1, 0.0], 0.7, &[0.2, 0.9, 0.0]);
        assert_eq!(e.eval(&env), again.eval(&env));
    }

    #[test]
    fn error_positions() {
        assert_eq!(
            parse_expression("1 + y"),
            Err(ExprError::UnknownIdentifier { name: "y".into(), position: 5 })
        );
        assert!(matches!(parse_expression("(1 + 2"), Err(ExprError::Syntax { position: 7, .. })));
        assert!(matches!(parse_expression("2 * * 3"), Err(ExprError::Syntax { position: 5, .. })));
        assert!(matches!(parse_expression("1 2"), Err(ExprError::Syntax { position: 3, .. })));
        assert!(matches!(parse_expression(""), Err(ExprError::Syntax { position: 1, .. })));
        assert!(matches!(parse_expression("sin x1"), Err(ExprError::Syntax { .. })));
    }

    #[test]
    fn rhs_rejects_state_variables() {
        assert!(ExprFunction::parse("x1 + u").is_err());
        assert!(ExprFunction::parse("x1 + x2").is_ok());
    }
}
