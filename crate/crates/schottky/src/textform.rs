//! Canonical textual and JSON forms.
//!
//! Series print as `t^v * (c0 + c1*t + ...) + O(t^P)` with field-element
//! coefficients written as polynomials in the generator `x`; the JSON form
//! is `{var, valuation, precision, coeffs, field}`. The same grammar is
//! accepted on the command line for rational-function inputs.

use crate::field::{FieldDescriptor, FqElement, Scalar};
use crate::poly::{Polynomial, RationalFunction};
use crate::series::LaurentSeries;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Wrap compound coefficient strings in parentheses for use inside a sum.
fn coeff_token(s: &str) -> String {
    if s[1..].contains(['+', '-']) || s.contains('/') {
        format!("({s})")
    } else {
        s.to_string()
    }
}

fn mono_string(coeff: &str, var: &str, k: i64) -> String {
    let c = coeff_token(coeff);
    match (c.as_str(), k) {
        (_, 0) => c,
        ("1", 1) => var.to_string(),
        ("1", _) => format!("{var}^{k}"),
        (_, 1) => format!("{c}*{var}"),
        (_, _) => format!("{c}*{var}^{k}"),
    }
}

/// Compact polynomial string, highest degree first.
pub fn poly_string<C: Scalar>(p: &Polynomial<C>, var: &str) -> String {
    if p.is_zero() {
        return "0".to_string();
    }
    let terms: Vec<String> = p
        .coeffs()
        .iter()
        .enumerate()
        .rev()
        .filter(|(_, c)| !c.is_zero())
        .map(|(k, c)| mono_string(&c.to_string(), var, k as i64))
        .collect();
    terms.join("+")
}

/// Compact `num/den` string; the denominator is omitted when it is 1.
pub fn rational_string<C: Scalar>(r: &RationalFunction<C>, var: &str) -> String {
    let num = poly_string(r.num(), var);
    if r.den().is_one() {
        return num;
    }
    let den = poly_string(r.den(), var);
    let wrap = |s: String| {
        if s.contains(['+', '-']) {
            format!("({s})")
        } else {
            s
        }
    };
    format!("{}/{}", wrap(num), wrap(den))
}

/// Canonical series form `t^v * (c0 + c1*t + ...) + O(t^P)`.
pub fn series_string<C: Scalar>(s: &LaurentSeries<C>) -> String {
    let var = s.var();
    let prec = s.precision();
    let Some(val) = s.valuation() else {
        return format!("0 + O({var}^{prec})");
    };
    let mut terms: Vec<String> = Vec::new();
    for (k, c) in s.terms() {
        terms.push(mono_string(&c.to_string(), var, k - val));
    }
    let unit = terms.join(" + ");
    if val == 0 {
        format!("{unit} + O({var}^{prec})")
    } else {
        format!("{var}^{val} * ({unit}) + O({var}^{prec})")
    }
}

// ---------------------------------------------------------------------------
// JSON forms.
// ---------------------------------------------------------------------------

/// Coefficient-field header of a serialized series.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldJson {
    pub p: u64,
    pub m: u32,
    pub modulus: Option<String>,
}

impl FieldJson {
    pub fn rational() -> Self {
        FieldJson { p: 0, m: 1, modulus: None }
    }

    pub fn of(field: &FieldDescriptor) -> Self {
        FieldJson { p: field.p(), m: field.m(), modulus: field.modulus_string() }
    }
}

/// JSON form of a Laurent series: coefficients are listed from the
/// valuation upward, including interior zeros, as canonical strings.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeriesJson {
    pub var: String,
    pub valuation: i64,
    pub precision: i64,
    pub coeffs: Vec<String>,
    pub field: FieldJson,
}

pub fn series_to_json_fq(s: &LaurentSeries<FqElement>) -> SeriesJson {
    let field = s
        .sample()
        .map(|c| FieldJson::of(c.field()))
        .unwrap_or_else(FieldJson::rational);
    let val = s.valuation().unwrap_or(s.precision());
    let coeffs = (val..s.precision())
        .map(|k| s.coefficient(k).map(|c| c.to_string()).unwrap_or_else(|| "0".into()))
        .collect();
    SeriesJson {
        var: s.var().to_string(),
        valuation: val,
        precision: s.precision(),
        coeffs,
        field,
    }
}

pub fn series_to_json_rational(s: &LaurentSeries<num::BigRational>) -> SeriesJson {
    let val = s.valuation().unwrap_or(s.precision());
    let coeffs = (val..s.precision())
        .map(|k| s.coefficient(k).map(|c| c.to_string()).unwrap_or_else(|| "0".into()))
        .collect();
    SeriesJson {
        var: s.var().to_string(),
        valuation: val,
        precision: s.precision(),
        coeffs,
        field: FieldJson::rational(),
    }
}

pub fn series_from_json_fq(json: &SeriesJson) -> Result<LaurentSeries<FqElement>> {
    if json.field.p == 0 {
        return Err(Error::Parse("expected a finite coefficient field".into()));
    }
    let field = crate::field::fq_make(json.field.p, json.field.m)?;
    if field.modulus_string() != json.field.modulus {
        return Err(Error::Parse(format!(
            "modulus mismatch: expected {:?}, found {:?}",
            field.modulus_string(),
            json.field.modulus
        )));
    }
    let coeffs = json
        .coeffs
        .iter()
        .map(|s| parse_element(&field, s))
        .collect::<Result<Vec<_>>>()?;
    Ok(LaurentSeries::from_coeffs(&json.var, json.valuation, coeffs, json.precision))
}

// ---------------------------------------------------------------------------
// Parsing (command-line rational functions over F_q).
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Int(i64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

fn tokenize(input: &str) -> Result<Vec<Token>> {
    let mut out = Vec::new();
    let mut chars = input.chars().peekable();
    while let Some(&ch) = chars.peek() {
        match ch {
            ' ' | '\t' => {
                chars.next();
            }
            '+' => {
                chars.next();
                out.push(Token::Plus);
            }
            '-' => {
                chars.next();
                out.push(Token::Minus);
            }
            '*' => {
                chars.next();
                out.push(Token::Star);
            }
            '/' => {
                chars.next();
                out.push(Token::Slash);
            }
            '^' => {
                chars.next();
                out.push(Token::Caret);
            }
            '(' => {
                chars.next();
                out.push(Token::LParen);
            }
            ')' => {
                chars.next();
                out.push(Token::RParen);
            }
            '0'..='9' => {
                let mut n = 0i64;
                while let Some(d) = chars.peek().and_then(|c| c.to_digit(10)) {
                    n = n
                        .checked_mul(10)
                        .and_then(|n| n.checked_add(d as i64))
                        .ok_or_else(|| Error::Parse("integer literal overflow".into()))?;
                    chars.next();
                }
                out.push(Token::Int(n));
            }
            c if c.is_alphabetic() => {
                let mut ident = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_alphanumeric() || c == '_' {
                        ident.push(c);
                        chars.next();
                    } else {
                        break;
                    }
                }
                out.push(Token::Ident(ident));
            }
            other => return Err(Error::Parse(format!("unexpected character {other:?}"))),
        }
    }
    Ok(out)
}

struct Parser<'a> {
    tokens: Vec<Token>,
    pos: usize,
    field: &'a Arc<FieldDescriptor>,
    var: &'a str,
}

type Rf = RationalFunction<FqElement>;

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expr(&mut self) -> Result<Rf> {
        let mut acc = self.term()?;
        while let Some(tok) = self.peek() {
            match tok {
                Token::Plus => {
                    self.pos += 1;
                    acc = acc.add(&self.term()?);
                }
                Token::Minus => {
                    self.pos += 1;
                    acc = acc.sub(&self.term()?);
                }
                _ => break,
            }
        }
        Ok(acc)
    }

    fn term(&mut self) -> Result<Rf> {
        let mut acc = self.power()?;
        while let Some(tok) = self.peek() {
            match tok {
                Token::Star => {
                    self.pos += 1;
                    acc = acc.mul(&self.power()?);
                }
                Token::Slash => {
                    self.pos += 1;
                    acc = acc.div(&self.power()?)?;
                }
                _ => break,
            }
        }
        Ok(acc)
    }

    fn power(&mut self) -> Result<Rf> {
        let base = self.atom()?;
        if self.peek() == Some(&Token::Caret) {
            self.pos += 1;
            let negative = if self.peek() == Some(&Token::Minus) {
                self.pos += 1;
                true
            } else {
                false
            };
            match self.next() {
                Some(Token::Int(k)) => {
                    let e = if negative { -k } else { k };
                    return base.pow_i64(e);
                }
                other => return Err(Error::Parse(format!("expected exponent, got {other:?}"))),
            }
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Rf> {
        match self.next() {
            Some(Token::Int(n)) => Ok(Rf::constant(self.field.from_int(n))),
            Some(Token::Ident(name)) => {
                if name == self.var {
                    Ok(Rf::var(&self.field.one()))
                } else if name == "x" && self.field.m() >= 2 {
                    Ok(Rf::constant(self.field.algebra_generator()))
                } else {
                    Err(Error::Parse(format!("unknown symbol {name:?}")))
                }
            }
            Some(Token::Minus) => Ok(self.atom()?.neg()),
            Some(Token::LParen) => {
                let inner = self.expr()?;
                match self.next() {
                    Some(Token::RParen) => Ok(inner),
                    other => Err(Error::Parse(format!("expected ')', got {other:?}"))),
                }
            }
            other => Err(Error::Parse(format!("unexpected token {other:?}"))),
        }
    }
}

/// Parse a rational function in `var` over `F_q`; field elements may be
/// written as polynomials in the generator `x`.
pub fn parse_rational(
    field: &Arc<FieldDescriptor>,
    input: &str,
    var: &str,
) -> Result<RationalFunction<FqElement>> {
    let tokens = tokenize(input)?;
    if tokens.is_empty() {
        return Err(Error::Parse("empty input".into()));
    }
    let mut parser = Parser { tokens, pos: 0, field, var };
    let value = parser.expr()?;
    if parser.pos != parser.tokens.len() {
        return Err(Error::Parse(format!(
            "trailing input after position {}",
            parser.pos
        )));
    }
    Ok(value)
}

/// Parse a single field element (a polynomial in `x`).
pub fn parse_element(field: &Arc<FieldDescriptor>, input: &str) -> Result<FqElement> {
    let r = parse_rational(field, input, "")?;
    if r.is_zero() {
        return Ok(field.zero());
    }
    r.constant_value()
        .cloned()
        .ok_or_else(|| Error::Parse(format!("{input:?} is not a field element")))
}
