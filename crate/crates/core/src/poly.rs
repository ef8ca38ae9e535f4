//! Real polynomials in the coordinates `x1, x2, x3` and time `t`, with a
//! small parser for expressions such as `(x1^2 + x2^2 + 10) * t`.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::geometry::Point;

/// Exponents of `(x1, x2, x3, t)`.
type Monomial = [u8; 4];

const VARS: [&str; 4] = ["x1", "x2", "x3", "t"];

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Polynomial {
    terms: BTreeMap<Monomial, f64>,
}

impl Polynomial {
    pub fn zero() -> Self {
        Polynomial::default()
    }

    pub fn constant(c: f64) -> Self {
        let mut p = Polynomial::zero();
        p.insert([0; 4], c);
        p
    }

    /// The variable `x1`, `x2`, `x3` (index 0..3) or `t` (index 3).
    pub fn variable(index: usize) -> Self {
        let mut m = [0u8; 4];
        m[index] = 1;
        let mut p = Polynomial::zero();
        p.insert(m, 1.0);
        p
    }

    fn insert(&mut self, m: Monomial, c: f64) {
        if c != 0.0 {
            *self.terms.entry(m).or_insert(0.0) += c;
            if self.terms[&m] == 0.0 {
                self.terms.remove(&m);
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Highest exponent of variable `index` over all terms.
    pub fn degree_in(&self, index: usize) -> u32 {
        self.terms.keys().map(|m| m[index] as u32).max().unwrap_or(0)
    }

    pub fn add(&self, other: &Polynomial) -> Polynomial {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.insert(*m, *c);
        }
        out
    }

    pub fn scale(&self, s: f64) -> Polynomial {
        let mut out = Polynomial::zero();
        for (m, c) in &self.terms {
            out.insert(*m, c * s);
        }
        out
    }

    pub fn mul(&self, other: &Polynomial) -> Polynomial {
        let mut out = Polynomial::zero();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                let m = [ma[0] + mb[0], ma[1] + mb[1], ma[2] + mb[2], ma[3] + mb[3]];
                out.insert(m, ca * cb);
            }
        }
        out
    }

    pub fn pow(&self, e: u32) -> Polynomial {
        (0..e).fold(Polynomial::constant(1.0), |acc, _| acc.mul(self))
    }

    pub fn eval(&self, x: &Point, t: f64) -> f64 {
        let v = [x[0], x[1], x[2], t];
        self.terms
            .iter()
            .map(|(m, c)| {
                c * m
                    .iter()
                    .zip(v.iter())
                    .map(|(&e, &x)| x.powi(e as i32))
                    .product::<f64>()
            })
            .sum()
    }

    /// Splits `F(x, t) = Σ_j a_j(x) t^j` into the spatial coefficients
    /// `a_0, ..., a_{deg}`.
    pub fn split_time(&self) -> Vec<Polynomial> {
        let deg = self.degree_in(3) as usize;
        let mut out = vec![Polynomial::zero(); deg + 1];
        for (m, c) in &self.terms {
            let mut sm = *m;
            sm[3] = 0;
            out[m[3] as usize].insert(sm, *c);
        }
        out
    }

    /// Translates the spatial argument: returns `p(x − d, t)`.
    pub fn shifted(&self, d: &Point) -> Polynomial {
        let mut out = Polynomial::zero();
        for (m, c) in &self.terms {
            let mut term = Polynomial::constant(*c);
            for (i, &e) in m.iter().enumerate().take(3) {
                let lin = Polynomial::variable(i).add(&Polynomial::constant(-d[i]));
                term = term.mul(&lin.pow(e as u32));
            }
            let mut tm = [0u8; 4];
            tm[3] = m[3];
            let mut tp = Polynomial::zero();
            tp.insert(tm, 1.0);
            out = out.add(&term.mul(&tp));
        }
        out
    }

    /// Parses an expression over the variables in `allowed` (subset of
    /// `x1, x2, x3, t`). Supports `+ - * ^`, parentheses and decimal
    /// literals; exponents must be nonnegative integer literals.
    pub fn parse(src: &str, allowed: &[&str]) -> Result<Polynomial> {
        let tokens = tokenize(src)?;
        let mut p = Parser {
            tokens,
            pos: 0,
            allowed,
        };
        let poly = p.expr()?;
        if p.pos != p.tokens.len() {
            return Err(Error::InvalidSource(format!(
                "unexpected trailing input in `{src}`"
            )));
        }
        Ok(poly)
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (m, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{c}")?;
            for (v, &e) in VARS.iter().zip(m.iter()) {
                match e {
                    0 => {}
                    1 => write!(f, "*{v}")?,
                    _ => write!(f, "*{v}^{e}")?,
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Num(f64),
    Var(String),
    Op(char),
}

fn tokenize(src: &str) -> Result<Vec<Token>> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let s: String = chars[start..i].iter().collect();
            let v = s
                .parse::<f64>()
                .map_err(|_| Error::InvalidSource(format!("bad number `{s}`")))?;
            out.push(Token::Num(v));
        } else if c.is_ascii_alphabetic() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_alphanumeric() {
                i += 1;
            }
            out.push(Token::Var(chars[start..i].iter().collect()));
        } else if "+-*^()".contains(c) {
            out.push(Token::Op(c));
            i += 1;
        } else {
            return Err(Error::InvalidSource(format!("unexpected character `{c}`")));
        }
    }
    Ok(out)
}

struct Parser<'a> {
    tokens: Vec<Token>,
    pos: usize,
    allowed: &'a [&'a str],
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn eat(&mut self, op: char) -> bool {
        if self.peek() == Some(&Token::Op(op)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Polynomial> {
        let mut acc = self.term()?;
        loop {
            if self.eat('+') {
                acc = acc.add(&self.term()?);
            } else if self.eat('-') {
                acc = acc.add(&self.term()?.scale(-1.0));
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self) -> Result<Polynomial> {
        let mut acc = self.unary()?;
        while self.eat('*') {
            acc = acc.mul(&self.unary()?);
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<Polynomial> {
        if self.eat('-') {
            return Ok(self.unary()?.scale(-1.0));
        }
        if self.eat('+') {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Polynomial> {
        let base = self.primary()?;
        if self.eat('^') {
            match self.peek().cloned() {
                Some(Token::Num(e)) if e >= 0.0 && e.fract() == 0.0 && e <= 16.0 => {
                    self.pos += 1;
                    Ok(base.pow(e as u32))
                }
                _ => Err(Error::InvalidSource(
                    "exponent must be an integer literal in 0..=16".into(),
                )),
            }
        } else {
            Ok(base)
        }
    }

    fn primary(&mut self) -> Result<Polynomial> {
        match self.peek().cloned() {
            Some(Token::Num(v)) => {
                self.pos += 1;
                Ok(Polynomial::constant(v))
            }
            Some(Token::Var(name)) => {
                self.pos += 1;
                if !self.allowed.contains(&name.as_str()) {
                    return Err(Error::InvalidSource(format!(
                        "variable `{name}` not allowed here (expected one of {:?})",
                        self.allowed
                    )));
                }
                let idx = VARS.iter().position(|v| *v == name).expect("allowed ⊂ VARS");
                Ok(Polynomial::variable(idx))
            }
            Some(Token::Op('(')) => {
                self.pos += 1;
                let inner = self.expr()?;
                if !self.eat(')') {
                    return Err(Error::InvalidSource("missing `)`".into()));
                }
                Ok(inner)
            }
            other => Err(Error::InvalidSource(format!("unexpected token {other:?}"))),
        }
    }
}
