//! Parser for rational-function expressions in one variable `t`.
//!
//! Grammar: sums and differences of products and quotients of powers of
//! atoms; atoms are `t`, decimal integers, `a/b` via division, and
//! parenthesised expressions. Exponents are nonnegative integers.

use super::{AlgebraError, Polynomial, Rational, RationalFunction};
use num_bigint::BigInt;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("unexpected {found} at position {pos}")]
    Unexpected { pos: usize, found: String },
    #[error("exponent at position {pos} must be a nonnegative integer")]
    BadExponent { pos: usize },
    #[error("{0}")]
    Algebra(#[from] AlgebraError),
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn unexpected(&self) -> ParseError {
        let found = match self.src.get(self.pos) {
            Some(&c) => format!("'{}'", c as char),
            None => "end of input".to_string(),
        };
        ParseError::Unexpected { pos: self.pos, found }
    }

    fn expr(&mut self) -> Result<RationalFunction, ParseError> {
        let mut acc = self.term()?;
        loop {
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    acc = acc.add(&self.term()?);
                }
                Some(b'-') => {
                    self.pos += 1;
                    acc = acc.sub(&self.term()?);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<RationalFunction, ParseError> {
        let mut acc = self.unary()?;
        loop {
            match self.peek() {
                Some(b'*') => {
                    self.pos += 1;
                    acc = acc.mul(&self.unary()?);
                }
                Some(b'/') => {
                    self.pos += 1;
                    acc = acc.div(&self.unary()?)?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn unary(&mut self) -> Result<RationalFunction, ParseError> {
        match self.peek() {
            Some(b'-') => {
                self.pos += 1;
                Ok(self.unary()?.neg())
            }
            Some(b'+') => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<RationalFunction, ParseError> {
        let base = self.atom()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            self.skip_ws();
            let at = self.pos;
            let e = self.integer().ok_or(ParseError::BadExponent { pos: at })?;
            let e: u32 = e.try_into().map_err(|_| ParseError::BadExponent { pos: at })?;
            return Ok(base.pow(e));
        }
        Ok(base)
    }

    fn integer(&mut self) -> Option<BigInt> {
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return None;
        }
        std::str::from_utf8(&self.src[start..self.pos]).ok()?.parse().ok()
    }

    fn atom(&mut self) -> Result<RationalFunction, ParseError> {
        match self.peek() {
            Some(b't') => {
                self.pos += 1;
                Ok(RationalFunction::from_polynomial(Polynomial::x()))
            }
            Some(b'(') => {
                self.pos += 1;
                let inner = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err(self.unexpected());
                }
                self.pos += 1;
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() => {
                let n = self.integer().expect("digit present");
                Ok(RationalFunction::constant(Rational::from_integer(n)))
            }
            _ => Err(self.unexpected()),
        }
    }
}

pub fn parse_rational_function(src: &str) -> Result<RationalFunction, ParseError> {
    let mut p = Parser { src: src.as_bytes(), pos: 0 };
    let r = p.expr()?;
    if p.peek().is_some() {
        return Err(p.unexpected());
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_normalizes() {
        let r = parse_rational_function("(2*t + 2) / (2*t^2 - 2)").unwrap();
        assert_eq!(r.to_string(), "(1) / (t - 1)");
        let r = parse_rational_function("t^2 - 1/(4*(t+1)^2)").unwrap();
        assert_eq!(r.den(), &Polynomial::from_ints(&[1, 2, 1]));
        let r = parse_rational_function("-3/4").unwrap();
        assert_eq!(r.to_string(), "-3/4");
    }

    #[test]
    fn reports_positions() {
        assert_eq!(
            parse_rational_function("t + * 2"),
            Err(ParseError::Unexpected { pos: 4, found: "'*'".into() })
        );
        assert_eq!(parse_rational_function("t^x"), Err(ParseError::BadExponent { pos: 2 }));
        assert!(matches!(
            parse_rational_function("1/(t-t)"),
            Err(ParseError::Algebra(AlgebraError::DivisionByZero))
        ));
        assert!(matches!(parse_rational_function("(t"), Err(ParseError::Unexpected { pos: 2, .. })));
    }
}
