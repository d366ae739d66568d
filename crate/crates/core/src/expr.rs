//! A small expression language for chart maps and section coefficients.
//!
//! Grammar (whitespace-insensitive, LL(1)):
//!
//! ```text
//! expr  := term (('+' | '-') term)*              left-associative
//! term  := unary (('*' | '/') unary)*            left-associative
//! unary := '-' unary | power
//! power := atom ('^' nonnegative-integer)?
//! atom  := number | variable | func '(' expr ')' | '(' expr ')'
//! ```
//!
//! `^` binds tighter than unary minus, which binds tighter than `*` and `/`.
//! Exponents are nonnegative integer literals only, so every parsed
//! expression is smooth and can be evaluated over jets as well as plain
//! reals. Numbers are decimal literals with an optional exponent; there is
//! no implicit multiplication.

use crate::jet::{ElementaryFn, Jet, JetSpec, JetTable};
use crate::{Error, Result};

/// An ordered list of distinct variable names. The position of a name fixes
/// the binding slot (and hence the jet direction) of that variable.
///
/// Chart files use the convention `u1..un`, `v1..vm`, `w1..wm`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VariableEnv {
    names: Vec<String>,
}

fn numbered(prefix: &str, count: usize) -> impl Iterator<Item = String> + '_ {
    (1..=count).map(move |i| format!("{prefix}{i}"))
}

impl VariableEnv {
    pub fn new(names: Vec<String>) -> Result<Self> {
        for (i, name) in names.iter().enumerate() {
            if names[..i].contains(name) {
                return Err(Error::DuplicateVariable { name: name.clone() });
            }
        }
        Ok(VariableEnv { names })
    }

    /// `u1..un, v1..vm`: the inputs of a source map.
    pub fn chart_source(n: usize, m: usize) -> Self {
        let names = numbered("u", n).chain(numbered("v", m)).collect();
        VariableEnv { names }
    }

    /// `u1..un, v1..vm, w1..wm`: the inputs of a product map.
    pub fn chart_product(n: usize, m: usize) -> Self {
        let names = numbered("u", n)
            .chain(numbered("v", m))
            .chain(numbered("w", m))
            .collect();
        VariableEnv { names }
    }

    /// `u1..un`: the inputs of a section coefficient.
    pub fn base_only(n: usize) -> Self {
        VariableEnv {
            names: numbered("u", n).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn name(&self, index: usize) -> &str {
        &self.names[index]
    }
}

/// Abstract scalars the expression language evaluates over. Implemented for
/// `f64` and [`Jet`]; both follow the same arithmetic path and the same
/// domain rules (`log` and `sqrt` require strictly positive arguments,
/// division requires a nonzero constant term).
pub trait Scalar: Clone + std::fmt::Debug {
    fn add(&self, other: &Self) -> Self;
    fn sub(&self, other: &Self) -> Self;
    fn mul(&self, other: &Self) -> Self;
    fn neg(&self) -> Self;
    fn div(&self, other: &Self) -> Result<Self>;
    fn apply(&self, f: ElementaryFn) -> Result<Self>;
    /// A constant with the same shape as `self`.
    fn constant_like(&self, value: f64) -> Self;
    /// The underlying base-point value.
    fn constant_part(&self) -> f64;

    fn powi(&self, n: u32) -> Self {
        if n == 0 {
            return self.constant_like(1.0);
        }
        let mut acc = self.clone();
        for _ in 1..n {
            acc = acc.mul(self);
        }
        acc
    }
}

impl Scalar for f64 {
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn sub(&self, other: &Self) -> Self {
        self - other
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn neg(&self) -> Self {
        -self
    }
    fn div(&self, other: &Self) -> Result<Self> {
        if *other == 0.0 {
            return Err(Error::DivisionByZero);
        }
        Ok(self / other)
    }
    fn apply(&self, f: ElementaryFn) -> Result<Self> {
        match f {
            ElementaryFn::Exp => Ok(self.exp()),
            ElementaryFn::Log => {
                if *self <= 0.0 {
                    Err(Error::Domain {
                        func: f.name(),
                        value: *self,
                    })
                } else {
                    Ok(self.ln())
                }
            }
            ElementaryFn::Sin => Ok(self.sin()),
            ElementaryFn::Cos => Ok(self.cos()),
            ElementaryFn::Sqrt => {
                if *self <= 0.0 {
                    Err(Error::Domain {
                        func: f.name(),
                        value: *self,
                    })
                } else {
                    Ok(self.sqrt())
                }
            }
        }
    }
    fn constant_like(&self, value: f64) -> Self {
        value
    }
    fn constant_part(&self) -> f64 {
        *self
    }
}

impl Scalar for Jet {
    fn add(&self, other: &Self) -> Self {
        Jet::add(self, other)
    }
    fn sub(&self, other: &Self) -> Self {
        Jet::sub(self, other)
    }
    fn mul(&self, other: &Self) -> Self {
        Jet::mul(self, other)
    }
    fn neg(&self) -> Self {
        Jet::neg(self)
    }
    fn div(&self, other: &Self) -> Result<Self> {
        Jet::div(self, other)
    }
    fn apply(&self, f: ElementaryFn) -> Result<Self> {
        Jet::apply(self, f)
    }
    fn constant_like(&self, value: f64) -> Self {
        Jet::constant_like(self, value)
    }
    fn constant_part(&self) -> f64 {
        self.value()
    }
}

/// Parsed expression tree. Variables are stored as indices into the
/// [`VariableEnv`] the source was parsed against.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(usize),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, u32),
    Call(ElementaryFn, Box<Expr>),
}

impl Expr {
    pub fn parse(source: &str, env: &VariableEnv) -> Result<Expr> {
        Parser::new(source, env)?.parse_all()
    }

    /// Evaluate over any [`Scalar`]; `lit` lifts numeric literals into the
    /// scalar type.
    pub fn eval<S: Scalar>(&self, bindings: &[S], lit: &dyn Fn(f64) -> S) -> Result<S> {
        match self {
            Expr::Num(v) => Ok(lit(*v)),
            Expr::Var(i) => bindings.get(*i).cloned().ok_or(Error::MissingBinding {
                index: *i,
                bound: bindings.len(),
            }),
            Expr::Neg(a) => Ok(a.eval(bindings, lit)?.neg()),
            Expr::Add(a, b) => Ok(a.eval(bindings, lit)?.add(&b.eval(bindings, lit)?)),
            Expr::Sub(a, b) => Ok(a.eval(bindings, lit)?.sub(&b.eval(bindings, lit)?)),
            Expr::Mul(a, b) => Ok(a.eval(bindings, lit)?.mul(&b.eval(bindings, lit)?)),
            Expr::Div(a, b) => a.eval(bindings, lit)?.div(&b.eval(bindings, lit)?),
            Expr::Pow(a, n) => Ok(a.eval(bindings, lit)?.powi(*n)),
            Expr::Call(f, a) => a.eval(bindings, lit)?.apply(*f),
        }
    }

    pub fn eval_f64(&self, bindings: &[f64]) -> Result<f64> {
        self.eval(bindings, &|v| v)
    }

    pub fn eval_jets(&self, bindings: &[Jet], spec: JetSpec) -> Result<Jet> {
        let table = JetTable::shared(spec);
        self.eval(bindings, &|v| Jet::constant_from(table, v))
    }

    /// Render back to source form. Reparsing the result against the same
    /// environment yields a structurally identical tree.
    pub fn unparse(&self, env: &VariableEnv) -> String {
        let mut out = String::new();
        self.render(env, 0, &mut out);
        out
    }

    fn level(&self) -> u8 {
        match self {
            Expr::Add(..) | Expr::Sub(..) => 1,
            Expr::Mul(..) | Expr::Div(..) => 2,
            Expr::Neg(..) => 3,
            Expr::Pow(..) => 4,
            Expr::Num(..) | Expr::Var(..) | Expr::Call(..) => 5,
        }
    }

    fn render(&self, env: &VariableEnv, min_level: u8, out: &mut String) {
        let needs_parens = self.level() < min_level;
        if needs_parens {
            out.push('(');
        }
        match self {
            Expr::Num(v) => out.push_str(&format!("{v}")),
            Expr::Var(i) => out.push_str(env.name(*i)),
            Expr::Neg(a) => {
                out.push('-');
                a.render(env, 3, out);
            }
            Expr::Add(a, b) => {
                a.render(env, 1, out);
                out.push_str(" + ");
                b.render(env, 2, out);
            }
            Expr::Sub(a, b) => {
                a.render(env, 1, out);
                out.push_str(" - ");
                b.render(env, 2, out);
            }
            Expr::Mul(a, b) => {
                a.render(env, 2, out);
                out.push_str(" * ");
                b.render(env, 3, out);
            }
            Expr::Div(a, b) => {
                a.render(env, 2, out);
                out.push_str(" / ");
                b.render(env, 3, out);
            }
            Expr::Pow(a, n) => {
                a.render(env, 5, out);
                out.push('^');
                out.push_str(&n.to_string());
            }
            Expr::Call(f, a) => {
                out.push_str(f.name());
                out.push('(');
                a.render(env, 0, out);
                out.push(')');
            }
        }
        if needs_parens {
            out.push(')');
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Num(f64, bool), // value, is plain nonnegative integer literal
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
}

struct Parser<'e> {
    tokens: Vec<(Token, usize)>,
    pos: usize,
    end: usize,
    env: &'e VariableEnv,
}

fn syntax(offset: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        offset,
        message: message.into(),
    }
}

fn tokenize(source: &str) -> Result<Vec<(Token, usize)>> {
    let bytes = source.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        match c {
            b' ' | b'\t' | b'\r' | b'\n' => i += 1,
            b'+' => {
                tokens.push((Token::Plus, i));
                i += 1;
            }
            b'-' => {
                tokens.push((Token::Minus, i));
                i += 1;
            }
            b'*' => {
                tokens.push((Token::Star, i));
                i += 1;
            }
            b'/' => {
                tokens.push((Token::Slash, i));
                i += 1;
            }
            b'^' => {
                tokens.push((Token::Caret, i));
                i += 1;
            }
            b'(' => {
                tokens.push((Token::LParen, i));
                i += 1;
            }
            b')' => {
                tokens.push((Token::RParen, i));
                i += 1;
            }
            b',' => {
                tokens.push((Token::Comma, i));
                i += 1;
            }
            b'0'..=b'9' => {
                let start = i;
                let mut integral = true;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                if i < bytes.len() && bytes[i] == b'.' {
                    integral = false;
                    i += 1;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    // Exponent only when digits (with optional sign) follow;
                    // otherwise the `e` starts an identifier.
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        integral = false;
                        i = j;
                        while i < bytes.len() && bytes[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let text = &source[start..i];
                let value: f64 = text
                    .parse()
                    .map_err(|e| syntax(start, format!("bad number `{text}`: {e}")))?;
                if !value.is_finite() {
                    return Err(syntax(start, format!("number `{text}` overflows")));
                }
                tokens.push((Token::Num(value, integral), start));
            }
            b'a'..=b'z' | b'A'..=b'Z' | b'_' => {
                let start = i;
                while i < bytes.len()
                    && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_')
                {
                    i += 1;
                }
                tokens.push((Token::Ident(source[start..i].to_string()), start));
            }
            other => {
                return Err(syntax(i, format!("unexpected character `{}`", other as char)));
            }
        }
    }
    Ok(tokens)
}

impl<'e> Parser<'e> {
    fn new(source: &str, env: &'e VariableEnv) -> Result<Self> {
        Ok(Parser {
            tokens: tokenize(source)?,
            pos: 0,
            end: source.len(),
            env,
        })
    }

    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos).map(|(t, _)| t)
    }

    fn offset(&self) -> usize {
        self.tokens.get(self.pos).map_or(self.end, |(_, o)| *o)
    }

    fn bump(&mut self) -> Option<(Token, usize)> {
        let t = self.tokens.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn parse_all(&mut self) -> Result<Expr> {
        let e = self.parse_expr()?;
        if let Some((tok, off)) = self.tokens.get(self.pos) {
            return Err(syntax(*off, format!("unexpected trailing token {tok:?}")));
        }
        Ok(e)
    }

    fn parse_expr(&mut self) -> Result<Expr> {
        let mut lhs = self.parse_term()?;
        loop {
            match self.peek() {
                Some(Token::Plus) => {
                    self.bump();
                    let rhs = self.parse_term()?;
                    lhs = Expr::Add(Box::new(lhs), Box::new(rhs));
                }
                Some(Token::Minus) => {
                    self.bump();
                    let rhs = self.parse_term()?;
                    lhs = Expr::Sub(Box::new(lhs), Box::new(rhs));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn parse_term(&mut self) -> Result<Expr> {
        let mut lhs = self.parse_unary()?;
        loop {
            match self.peek() {
                Some(Token::Star) => {
                    self.bump();
                    let rhs = self.parse_unary()?;
                    lhs = Expr::Mul(Box::new(lhs), Box::new(rhs));
                }
                Some(Token::Slash) => {
                    self.bump();
                    let rhs = self.parse_unary()?;
                    lhs = Expr::Div(Box::new(lhs), Box::new(rhs));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn parse_unary(&mut self) -> Result<Expr> {
        if matches!(self.peek(), Some(Token::Minus)) {
            self.bump();
            let inner = self.parse_unary()?;
            return Ok(Expr::Neg(Box::new(inner)));
        }
        self.parse_power()
    }

    fn parse_power(&mut self) -> Result<Expr> {
        let base = self.parse_atom()?;
        if matches!(self.peek(), Some(Token::Caret)) {
            self.bump();
            let off = self.offset();
            match self.bump() {
                Some((Token::Num(v, true), _)) if v >= 0.0 && v <= u32::MAX as f64 => {
                    return Ok(Expr::Pow(Box::new(base), v as u32));
                }
                _ => {
                    return Err(syntax(
                        off,
                        "exponent must be a nonnegative integer literal",
                    ))
                }
            }
        }
        Ok(base)
    }

    fn parse_atom(&mut self) -> Result<Expr> {
        let off = self.offset();
        match self.bump() {
            Some((Token::Num(v, _), _)) => Ok(Expr::Num(v)),
            Some((Token::Ident(name), ident_off)) => {
                if matches!(self.peek(), Some(Token::LParen)) {
                    let Some(func) = ElementaryFn::from_name(&name) else {
                        return Err(Error::UnknownIdentifier {
                            name,
                            offset: ident_off,
                        });
                    };
                    self.bump(); // '('
                    let arg = self.parse_expr()?;
                    match self.bump() {
                        Some((Token::RParen, _)) => Ok(Expr::Call(func, Box::new(arg))),
                        Some((Token::Comma, comma_off)) => Err(syntax(
                            comma_off,
                            format!("{name} takes exactly one argument"),
                        )),
                        other => Err(syntax(
                            other.map_or(self.end, |(_, o)| o),
                            format!("unclosed call to {name}"),
                        )),
                    }
                } else {
                    match self.env.index_of(&name) {
                        Some(i) => Ok(Expr::Var(i)),
                        None => Err(Error::UnknownIdentifier {
                            name,
                            offset: ident_off,
                        }),
                    }
                }
            }
            Some((Token::LParen, _)) => {
                let inner = self.parse_expr()?;
                match self.bump() {
                    Some((Token::RParen, _)) => Ok(inner),
                    other => Err(syntax(
                        other.map_or(self.end, |(_, o)| o),
                        "expected closing parenthesis",
                    )),
                }
            }
            Some((tok, o)) => Err(syntax(o, format!("unexpected token {tok:?}"))),
            None => Err(syntax(off, "unexpected end of input")),
        }
    }
}
