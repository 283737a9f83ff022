//! Text form of formal sums, e.g. `(|0>,|1>) + (|-1>,|0>)` or
//! `3|0> - 2|0> + |1>`.
//!
//! Grammar (whitespace between tokens is ignored):
//!
//! ```text
//! sum    := "0" | ["-"] term (("+" | "-") term)*
//! term   := [coeff] symbol
//! coeff  := real | "(" real ("+"|"-") real "i" ")"
//! symbol := sub | "(" sub "," sub ")"
//! sub    := "|" [phase] ("0"|"1") primes ">"
//! phase  := "-" | "i" | "-i" | "{" real "," real "}"
//! primes := "" | "'" | "''"
//! ```
//!
//! Numbers are printed with the shortest representation that parses back to
//! the same `f64`, so printing and parsing an as-written sum is lossless.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use num_complex::Complex64;

use super::{FormalSum, Pair, PairSymbol, SubSymbol, Term};
use crate::error::{Error, Result};
use crate::hilbert::{Frame, Scalar, I, ONE};

fn write_phase(out: &mut String, phase: Scalar) {
    if phase == ONE {
    } else if phase == -ONE {
        out.push('-');
    } else if phase == I {
        out.push('i');
    } else if phase == -I {
        out.push_str("-i");
    } else {
        let _ = write!(out, "{{{},{}}}", phase.re, phase.im);
    }
}

fn write_sub(out: &mut String, s: &SubSymbol) {
    out.push('|');
    write_phase(out, s.phase());
    let _ = write!(out, "{}", s.index());
    for _ in 0..s.frame().primes() {
        out.push('\'');
    }
    out.push('>');
}

fn write_pair(out: &mut String, p: &PairSymbol) {
    out.push('(');
    write_sub(out, &p.a);
    out.push(',');
    write_sub(out, &p.b);
    out.push(')');
}

/// Writes a coefficient magnitude prefix; a coefficient of exactly 1 is
/// omitted.
fn write_coeff(out: &mut String, c: Scalar) {
    if c == ONE {
        return;
    }
    if c.im == 0.0 {
        let _ = write!(out, "{}", c.re);
    } else {
        let _ = write!(out, "({}{:+}i)", c.re, c.im);
    }
}

fn write_sum<S>(f: &FormalSum<S>, out: &mut String, write_sym: fn(&mut String, &S)) {
    if f.terms.is_empty() {
        out.push('0');
        return;
    }
    for (k, t) in f.terms.iter().enumerate() {
        let negative_real = t.coeff.im == 0.0 && t.coeff.re.is_sign_negative();
        let shown = if negative_real { -t.coeff } else { t.coeff };
        match (k, negative_real) {
            (0, true) => out.push('-'),
            (0, false) => {}
            (_, true) => out.push_str(" - "),
            (_, false) => out.push_str(" + "),
        }
        write_coeff(out, shown);
        write_sym(out, &t.sym);
    }
}

impl fmt::Display for SubSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        write_sub(&mut s, self);
        f.write_str(&s)
    }
}

impl fmt::Display for Pair<SubSymbol> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        write_pair(&mut s, self);
        f.write_str(&s)
    }
}

impl fmt::Display for FormalSum<SubSymbol> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        write_sum(self, &mut s, write_sub);
        f.write_str(&s)
    }
}

impl fmt::Display for FormalSum<PairSymbol> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        write_sum(self, &mut s, write_pair);
        f.write_str(&s)
    }
}

struct Cursor<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn new(src: &'a str) -> Self {
        Cursor { src, pos: 0 }
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T> {
        Err(Error::Parse {
            pos: self.pos,
            msg: msg.into(),
        })
    }

    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn skip_ws(&mut self) {
        let trimmed = self.rest().trim_start();
        self.pos = self.src.len() - trimmed.len();
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.rest().chars().next()
    }

    /// The character after the next one, whitespace skipped on both.
    fn peek2(&mut self) -> Option<char> {
        self.skip_ws();
        let mut it = self.rest().chars();
        it.next()?;
        it.as_str().trim_start().chars().next()
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.pos += c.len_utf8();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<()> {
        if self.eat(c) {
            Ok(())
        } else {
            self.err(format!("expected `{c}`"))
        }
    }

    fn at_end(&mut self) -> bool {
        self.peek().is_none()
    }

    fn number(&mut self) -> Result<f64> {
        self.skip_ws();
        let rest = self.rest();
        let mut end = 0;
        let bytes = rest.as_bytes();
        while end < bytes.len() {
            let b = bytes[end];
            let sign_ok = (b == b'+' || b == b'-')
                && (end == 0 || bytes[end - 1] == b'e' || bytes[end - 1] == b'E');
            if b.is_ascii_digit() || b == b'.' || b == b'e' || b == b'E' || sign_ok {
                end += 1;
            } else {
                break;
            }
        }
        if end == 0 {
            return self.err("expected a number");
        }
        match rest[..end].parse::<f64>() {
            Ok(v) if v.is_finite() => {
                self.pos += end;
                Ok(v)
            }
            _ => self.err(format!("invalid number `{}`", &rest[..end])),
        }
    }

    fn coeff(&mut self) -> Result<Option<Scalar>> {
        match self.peek() {
            Some(c) if c.is_ascii_digit() || c == '.' => {
                Ok(Some(Complex64::new(self.number()?, 0.0)))
            }
            Some('(') if self.peek2() != Some('|') => {
                self.expect('(')?;
                let re = self.number()?;
                // the sign of the imaginary part is part of the number
                let im = self.number()?;
                self.expect('i')?;
                self.expect(')')?;
                Ok(Some(Complex64::new(re, im)))
            }
            _ => Ok(None),
        }
    }

    fn phase(&mut self) -> Result<Scalar> {
        match self.peek() {
            Some('-') => {
                self.pos += 1;
                if self.eat('i') {
                    Ok(-I)
                } else {
                    Ok(-ONE)
                }
            }
            Some('i') => {
                self.pos += 1;
                Ok(I)
            }
            Some('{') => {
                self.pos += 1;
                let re = self.number()?;
                self.expect(',')?;
                let im = self.number()?;
                self.expect('}')?;
                Ok(Complex64::new(re, im))
            }
            _ => Ok(ONE),
        }
    }

    fn sub(&mut self) -> Result<SubSymbol> {
        self.expect('|')?;
        let phase = self.phase()?;
        let index = match self.peek() {
            Some('0') => 0,
            Some('1') => 1,
            _ => return self.err("expected basis index 0 or 1"),
        };
        self.pos += 1;
        let mut primes = 0;
        while self.eat('\'') {
            primes += 1;
        }
        let frame = match primes {
            0 => Frame::Z,
            1 => Frame::X,
            2 => Frame::Y,
            _ => return self.err("at most two primes are allowed"),
        };
        self.expect('>')?;
        SubSymbol::new(frame, index, phase).map_err(|e| Error::Parse {
            pos: self.pos,
            msg: e.to_string(),
        })
    }

    fn pair(&mut self) -> Result<PairSymbol> {
        self.expect('(')?;
        let a = self.sub()?;
        self.expect(',')?;
        let b = self.sub()?;
        self.expect(')')?;
        Ok(Pair::new(a, b))
    }

    fn sum<S>(&mut self, sym: fn(&mut Self) -> Result<S>) -> Result<Vec<Term<S>>> {
        if self.peek() == Some('0') && self.peek2().is_none() {
            self.pos += 1;
            return Ok(Vec::new());
        }
        let mut terms = Vec::new();
        let mut negate = self.eat('-');
        loop {
            let coeff = self.coeff()?.unwrap_or(ONE);
            let s = sym(self)?;
            terms.push(Term::new(if negate { -coeff } else { coeff }, s));
            if self.at_end() {
                break;
            }
            negate = if self.eat('+') {
                false
            } else if self.eat('-') {
                true
            } else {
                return self.err("expected `+` or `-`");
            };
        }
        Ok(terms)
    }
}

pub fn parse_sub_symbol(s: &str) -> Result<SubSymbol> {
    let mut c = Cursor::new(s);
    let sym = c.sub()?;
    if !c.at_end() {
        return c.err("trailing input");
    }
    Ok(sym)
}

pub fn parse_pair_symbol(s: &str) -> Result<PairSymbol> {
    let mut c = Cursor::new(s);
    let sym = c.pair()?;
    if !c.at_end() {
        return c.err("trailing input");
    }
    Ok(sym)
}

impl FromStr for FormalSum<SubSymbol> {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut c = Cursor::new(s);
        Ok(FormalSum::from_terms(c.sum(Cursor::sub)?))
    }
}

impl FromStr for FormalSum<PairSymbol> {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut c = Cursor::new(s);
        Ok(FormalSum::from_terms(c.sum(Cursor::pair)?))
    }
}
