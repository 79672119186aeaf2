//! Text form of polynomials.
//!
//! Output lists terms in decreasing graded-lexicographic order as
//! `coeff * p1^a1 p2^a2`, joined by ` + ` / ` - `. Variables are the free
//! labels of the chart. The parser accepts that form and, more generally,
//! sums, products (explicit or by juxtaposition), integer powers,
//! parentheses, decimal or fractional constants, and division by constants.
//! The dependent label may appear and stands for one minus the others.

use std::fmt::Write as _;

use num_bigint::BigInt;
use num_traits::{Signed, Zero};

use super::poly::MultiPoly;
use super::{Coeff, DEGREE_CAP};
use crate::error::{Error, Result};
use crate::simplex::Chart;

fn format_coeff(c: &Coeff) -> String {
    if c.is_integer() {
        c.numer().to_string()
    } else {
        format!("{}/{}", c.numer(), c.denom())
    }
}

/// Serializes a polynomial; `"0"` for the zero polynomial.
pub fn format_poly(p: &MultiPoly) -> String {
    if p.is_zero() {
        return "0".to_string();
    }
    let labels: Vec<usize> = p.chart().free_labels().collect();
    let mut out = String::new();
    for (i, (m, c)) in p.terms().rev().enumerate() {
        let mag = if i == 0 {
            format_coeff(c)
        } else {
            out.push_str(if c.is_negative() { " - " } else { " + " });
            format_coeff(&c.abs())
        };
        out.push_str(&mag);
        if m.degree() == 0 {
            continue;
        }
        out.push_str(" *");
        for (v, &l) in labels.iter().enumerate() {
            match m.exp(v) {
                0 => {}
                1 => {
                    let _ = write!(out, " p{l}");
                }
                e => {
                    let _ = write!(out, " p{l}^{e}");
                }
            }
        }
    }
    out
}

/// Parses a polynomial on `chart`. Total degree is limited to
/// [`DEGREE_CAP`].
pub fn parse_poly(text: &str, chart: Chart) -> Result<MultiPoly> {
    let mut p = Parser {
        src: text.as_bytes(),
        pos: 0,
        chart,
    };
    p.skip_ws();
    let out = p.expr()?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return Err(p.err("unexpected trailing input"));
    }
    if let Some(d) = out.degree() {
        if d > DEGREE_CAP {
            return Err(Error::Range(format!(
                "polynomial degree {d} exceeds the cap {DEGREE_CAP}"
            )));
        }
    }
    Ok(out)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    chart: Chart,
}

impl Parser<'_> {
    fn err(&self, msg: &str) -> Error {
        Error::Parse {
            pos: self.pos,
            msg: msg.to_string(),
        }
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

    fn expr(&mut self) -> Result<MultiPoly> {
        let mut acc = self.term()?;
        loop {
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    acc = &acc + &self.term()?;
                }
                Some(b'-') => {
                    self.pos += 1;
                    acc = &acc - &self.term()?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<MultiPoly> {
        let mut acc = self.unary()?;
        loop {
            match self.peek() {
                Some(b'*') => {
                    self.pos += 1;
                    acc = &acc * &self.unary()?;
                }
                Some(b'/') => {
                    self.pos += 1;
                    let at = self.pos;
                    let d = self.unary()?;
                    let c = d.as_constant().ok_or(Error::Parse {
                        pos: at,
                        msg: "division is only allowed by constants".into(),
                    })?;
                    if c.is_zero() {
                        return Err(Error::Parse {
                            pos: at,
                            msg: "division by zero".into(),
                        });
                    }
                    acc = acc.scale(&c.recip());
                }
                Some(b) if b.is_ascii_digit() || b == b'.' || b == b'p' || b == b'(' => {
                    acc = &acc * &self.unary()?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn unary(&mut self) -> Result<MultiPoly> {
        match self.peek() {
            Some(b'-') => {
                self.pos += 1;
                Ok(-&self.unary()?)
            }
            Some(b'+') => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<MultiPoly> {
        let base = self.atom()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            self.skip_ws();
            let e = self.integer()?;
            let e: u32 = e
                .try_into()
                .ok()
                .filter(|&e| e <= DEGREE_CAP)
                .ok_or_else(|| self.err("exponent too large"))?;
            return Ok(base.pow(e));
        }
        Ok(base)
    }

    fn integer(&mut self) -> Result<BigInt> {
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.err("expected an integer"));
        }
        let s = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii digits");
        Ok(s.parse().expect("digits parse"))
    }

    fn atom(&mut self) -> Result<MultiPoly> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let inner = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err(self.err("expected ')'"));
                }
                self.pos += 1;
                Ok(inner)
            }
            Some(b'p') => {
                self.pos += 1;
                let l = self.integer()?;
                let label: usize = l
                    .try_into()
                    .ok()
                    .filter(|&l| self.chart.face().contains(l))
                    .ok_or_else(|| self.err("variable label is not on the face"))?;
                MultiPoly::coord(self.chart, label)
            }
            Some(b) if b.is_ascii_digit() || b == b'.' => {
                let c = self.number()?;
                Ok(MultiPoly::constant(self.chart, c))
            }
            _ => Err(self.err("expected a number, variable or '('")),
        }
    }

    fn number(&mut self) -> Result<Coeff> {
        let int_part = if self.src[self.pos] == b'.' {
            BigInt::zero()
        } else {
            self.integer()?
        };
        let mut value = Coeff::from_integer(int_part);
        if self.pos < self.src.len() && self.src[self.pos] == b'.' {
            self.pos += 1;
            let start = self.pos;
            let frac = if self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                self.integer()?
            } else {
                BigInt::zero()
            };
            let digits = (self.pos - start) as u32;
            let scale = num_traits::pow::pow(BigInt::from(10), digits as usize);
            value += Coeff::new(frac, scale);
        }
        if self.pos < self.src.len() && matches!(self.src[self.pos], b'e' | b'E') {
            return Err(self.err("exponent notation is not supported"));
        }
        Ok(value)
    }
}
