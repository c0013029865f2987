//! Textual grammar for total functions `ω → ω` and decidable sets.
//!
//! ```text
//! spec  := table | expr
//! table := "[" nat ("," nat)* "]" "then" expr
//! expr  := term ("+" term)*
//! term  := atom ("*" atom | "/" nat⁺ | "%" nat⁺)*
//! atom  := "x" | nat | "(" expr ")"
//!        | "min(" expr "," expr ")" | "max(" expr "," expr ")"
//!        | "compose(" expr ";" expr ")"
//! ```
//!
//! `/` is floor division, `compose(f; g)` is `f(g(x))`, and a table answers
//! `x < len` from its entries and hands larger `x` to the tail expression
//! (evaluated at `x` itself). Every construct is total. Arithmetic saturates
//! at `u64::MAX`, so evaluation is exact whenever intermediate values stay
//! below `2^64`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("{message} at column {column} in {source_text:?}")]
pub struct SpecError {
    pub message: String,
    /// 1-based character column.
    pub column: usize,
    pub source_text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Expr {
    Var,
    Const(u64),
    Add(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, u64),
    Rem(Box<Expr>, u64),
    Min(Box<Expr>, Box<Expr>),
    Max(Box<Expr>, Box<Expr>),
    /// `Compose(f, g)` is `f ∘ g`.
    Compose(Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn eval(&self, x: u64) -> u64 {
        match self {
            Expr::Var => x,
            Expr::Const(c) => *c,
            Expr::Add(a, b) => a.eval(x).saturating_add(b.eval(x)),
            Expr::Mul(a, b) => a.eval(x).saturating_mul(b.eval(x)),
            Expr::Div(a, d) => a.eval(x) / d,
            Expr::Rem(a, d) => a.eval(x) % d,
            Expr::Min(a, b) => a.eval(x).min(b.eval(x)),
            Expr::Max(a, b) => a.eval(x).max(b.eval(x)),
            Expr::Compose(f, g) => f.eval(g.eval(x)),
        }
    }

    /// Conservative `[lo, hi]` of the value when the variable ranges over
    /// `input`; `hi = None` means unbounded.
    fn range(&self, input: (u64, Option<u64>)) -> (u64, Option<u64>) {
        let both = |a: Option<u64>, b: Option<u64>, f: fn(u64, u64) -> u64| a.zip(b).map(|(a, b)| f(a, b));
        match self {
            Expr::Var => input,
            Expr::Const(c) => (*c, Some(*c)),
            Expr::Add(a, b) => {
                let (al, ah) = a.range(input);
                let (bl, bh) = b.range(input);
                (al.saturating_add(bl), both(ah, bh, u64::saturating_add))
            }
            Expr::Mul(a, b) => {
                let (al, ah) = a.range(input);
                let (bl, bh) = b.range(input);
                let hi = match (ah, bh) {
                    (Some(0), _) | (_, Some(0)) => Some(0),
                    _ => both(ah, bh, u64::saturating_mul),
                };
                (al.saturating_mul(bl), hi)
            }
            Expr::Div(a, d) => {
                let (l, h) = a.range(input);
                (l / d, h.map(|h| h / d))
            }
            Expr::Rem(a, d) => match a.range(input) {
                (l, Some(h)) if h < *d => (l, Some(h)),
                _ => (0, Some(d - 1)),
            },
            Expr::Min(a, b) => {
                let (al, ah) = a.range(input);
                let (bl, bh) = b.range(input);
                let hi = match (ah, bh) {
                    (Some(x), Some(y)) => Some(x.min(y)),
                    (Some(x), None) | (None, Some(x)) => Some(x),
                    (None, None) => None,
                };
                (al.min(bl), hi)
            }
            Expr::Max(a, b) => {
                let (al, ah) = a.range(input);
                let (bl, bh) = b.range(input);
                (al.max(bl), both(ah, bh, u64::max))
            }
            Expr::Compose(f, g) => f.range(g.range(input)),
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Var => write!(f, "x"),
            Expr::Const(c) => write!(f, "{c}"),
            Expr::Add(a, b) => write!(f, "({a} + {b})"),
            Expr::Mul(a, b) => write!(f, "({a} * {b})"),
            Expr::Div(a, d) => write!(f, "({a} / {d})"),
            Expr::Rem(a, d) => write!(f, "({a} % {d})"),
            Expr::Min(a, b) => write!(f, "min({a}, {b})"),
            Expr::Max(a, b) => write!(f, "max({a}, {b})"),
            Expr::Compose(a, b) => write!(f, "compose({a}; {b})"),
        }
    }
}

/// A total function `ω → ω`: an optional finite table followed by an expression.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ReductionSpec {
    table: Vec<u64>,
    body: Expr,
}

impl ReductionSpec {
    pub fn identity() -> Self {
        Self { table: Vec::new(), body: Expr::Var }
    }

    pub fn constant(c: u64) -> Self {
        Self { table: Vec::new(), body: Expr::Const(c) }
    }

    pub fn from_parts(table: Vec<u64>, body: Expr) -> Self {
        Self { table, body }
    }

    pub fn parse(text: &str) -> Result<Self, SpecError> {
        Parser::new(text).parse_spec()
    }

    pub fn eval(&self, x: u64) -> u64 {
        match usize::try_from(x).ok().and_then(|i| self.table.get(i)) {
            Some(v) => *v,
            None => self.body.eval(x),
        }
    }

    pub fn is_identity(&self) -> bool {
        self.table.iter().enumerate().all(|(i, v)| *v == i as u64) && self.body == Expr::Var
    }

    pub fn table(&self) -> &[u64] {
        &self.table
    }

    pub fn body(&self) -> &Expr {
        &self.body
    }

    /// Largest value the function can take, if statically bounded.
    pub fn upper_bound(&self) -> Option<u64> {
        let (_, hi) = self.body.range((0, None));
        let table_max = self.table.iter().copied().max().unwrap_or(0);
        hi.map(|h| h.max(table_max))
    }
}

impl fmt::Display for ReductionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.table.is_empty() {
            let entries: Vec<String> = self.table.iter().map(u64::to_string).collect();
            write!(f, "[{}] then ", entries.join(", "))?;
        }
        // Top-level parentheses are redundant.
        let body = self.body.to_string();
        let trimmed = match (&self.body, body.strip_prefix('(').and_then(|b| b.strip_suffix(')'))) {
            (Expr::Add(..) | Expr::Mul(..) | Expr::Div(..) | Expr::Rem(..), Some(inner)) => inner.to_string(),
            _ => body,
        };
        f.write_str(&trimmed)
    }
}

impl FromStr for ReductionSpec {
    type Err = SpecError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::parse(s)
    }
}

impl Serialize for ReductionSpec {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for ReductionSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        Self::parse(&text).map_err(serde::de::Error::custom)
    }
}

/// A decidable set: a [`ReductionSpec`] whose every value is statically in `{0, 1}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SetSpec(ReductionSpec);

impl SetSpec {
    pub fn empty() -> Self {
        Self(ReductionSpec::constant(0))
    }

    pub fn everything() -> Self {
        Self(ReductionSpec::constant(1))
    }

    pub fn parse(text: &str) -> Result<Self, SpecError> {
        let spec = ReductionSpec::parse(text)?;
        Self::try_from_spec(spec, text)
    }

    fn try_from_spec(spec: ReductionSpec, text: &str) -> Result<Self, SpecError> {
        if let Some(i) = spec.table.iter().position(|v| *v > 1) {
            return Err(SpecError {
                message: format!("set table entry {} is {}, not 0 or 1", i, spec.table[i]),
                column: 1,
                source_text: text.to_string(),
            });
        }
        match spec.body.range((0, None)) {
            (_, Some(hi)) if hi <= 1 => Ok(Self(spec)),
            _ => Err(SpecError {
                message: "set expression is not provably 0/1-valued".into(),
                column: 1,
                source_text: text.to_string(),
            }),
        }
    }

    pub fn contains(&self, x: u64) -> bool {
        self.0.eval(x) == 1
    }

    pub fn as_reduction(&self) -> &ReductionSpec {
        &self.0
    }
}

impl fmt::Display for SetSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl FromStr for SetSpec {
    type Err = SpecError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::parse(s)
    }
}

impl Serialize for SetSpec {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.0.serialize(s)
    }
}

impl<'de> Deserialize<'de> for SetSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        Self::parse(&text).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Num(u64),
    Ident(String),
    Sym(char),
    End,
}

struct Parser<'a> {
    text: &'a str,
    toks: Vec<(Tok, usize)>,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn new(text: &'a str) -> Self {
        Self { text, toks: Vec::new(), pos: 0 }
    }

    fn err(&self, column: usize, message: impl Into<String>) -> SpecError {
        SpecError { message: message.into(), column, source_text: self.text.to_string() }
    }

    fn lex(&mut self) -> Result<(), SpecError> {
        let chars: Vec<char> = self.text.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            let col = i + 1;
            if c.is_whitespace() {
                i += 1;
            } else if c.is_ascii_digit() {
                let start = i;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                let digits: String = chars[start..i].iter().collect();
                let v = digits
                    .parse::<u64>()
                    .map_err(|_| self.err(col, format!("number {digits} does not fit in 64 bits")))?;
                self.toks.push((Tok::Num(v), col));
            } else if c.is_ascii_alphabetic() {
                let start = i;
                while i < chars.len() && chars[i].is_ascii_alphanumeric() {
                    i += 1;
                }
                self.toks.push((Tok::Ident(chars[start..i].iter().collect()), col));
            } else if "+*/%(),;[]".contains(c) {
                self.toks.push((Tok::Sym(c), col));
                i += 1;
            } else {
                return Err(self.err(col, format!("unknown operator {c:?}")));
            }
        }
        self.toks.push((Tok::End, chars.len() + 1));
        Ok(())
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn col(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> (Tok, usize) {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn expect_sym(&mut self, c: char) -> Result<(), SpecError> {
        match self.bump() {
            (Tok::Sym(s), _) if s == c => Ok(()),
            (t, col) => Err(self.err(col, format!("expected {c:?}, found {}", describe(&t)))),
        }
    }

    fn nat(&mut self) -> Result<(u64, usize), SpecError> {
        match self.bump() {
            (Tok::Num(v), col) => Ok((v, col)),
            (t, col) => Err(self.err(col, format!("expected a natural number, found {}", describe(&t)))),
        }
    }

    fn positive(&mut self, what: &str) -> Result<u64, SpecError> {
        let (v, col) = self.nat()?;
        if v == 0 {
            return Err(self.err(col, format!("{what} must be positive")));
        }
        Ok(v)
    }

    fn parse_spec(mut self) -> Result<ReductionSpec, SpecError> {
        self.lex()?;
        let mut table = Vec::new();
        if *self.peek() == Tok::Sym('[') {
            self.bump();
            loop {
                table.push(self.nat()?.0);
                match self.bump() {
                    (Tok::Sym(','), _) => continue,
                    (Tok::Sym(']'), _) => break,
                    (t, col) => return Err(self.err(col, format!("expected ',' or ']', found {}", describe(&t)))),
                }
            }
            match self.bump() {
                (Tok::Ident(w), _) if w == "then" => {}
                (t, col) => return Err(self.err(col, format!("expected 'then', found {}", describe(&t)))),
            }
        }
        let body = self.expr()?;
        if *self.peek() != Tok::End {
            let col = self.col();
            let t = self.peek().clone();
            return Err(self.err(col, format!("unexpected {}", describe(&t))));
        }
        Ok(ReductionSpec { table, body })
    }

    fn expr(&mut self) -> Result<Expr, SpecError> {
        let mut lhs = self.term()?;
        while *self.peek() == Tok::Sym('+') {
            self.bump();
            let rhs = self.term()?;
            lhs = Expr::Add(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr, SpecError> {
        let mut lhs = self.atom()?;
        loop {
            match self.peek() {
                Tok::Sym('*') => {
                    self.bump();
                    let rhs = self.atom()?;
                    lhs = Expr::Mul(Box::new(lhs), Box::new(rhs));
                }
                Tok::Sym('/') => {
                    self.bump();
                    let d = self.positive("divisor")?;
                    lhs = Expr::Div(Box::new(lhs), d);
                }
                Tok::Sym('%') => {
                    self.bump();
                    let d = self.positive("modulus")?;
                    lhs = Expr::Rem(Box::new(lhs), d);
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn atom(&mut self) -> Result<Expr, SpecError> {
        match self.bump() {
            (Tok::Num(v), _) => Ok(Expr::Const(v)),
            (Tok::Sym('('), _) => {
                let e = self.expr()?;
                self.expect_sym(')')?;
                Ok(e)
            }
            (Tok::Ident(w), col) => match w.as_str() {
                "x" => Ok(Expr::Var),
                "min" | "max" | "compose" => {
                    self.expect_sym('(')?;
                    let a = self.expr()?;
                    self.expect_sym(if w == "compose" { ';' } else { ',' })?;
                    let b = self.expr()?;
                    self.expect_sym(')')?;
                    let (a, b) = (Box::new(a), Box::new(b));
                    Ok(match w.as_str() {
                        "min" => Expr::Min(a, b),
                        "max" => Expr::Max(a, b),
                        _ => Expr::Compose(a, b),
                    })
                }
                _ => Err(self.err(col, format!("unknown operator {w:?}"))),
            },
            (t, col) => Err(self.err(col, format!("unexpected {}", describe(&t)))),
        }
    }
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Num(v) => format!("number {v}"),
        Tok::Ident(w) => format!("{w:?}"),
        Tok::Sym(c) => format!("{c:?}"),
        Tok::End => "end of input".into(),
    }
}
