//! Canonical rational functions over Q.

use super::{AlgebraError, Polynomial, Rational};
use num_bigint::BigInt;
use num_traits::{One, Zero};
use std::fmt;

/// `num / den` with `gcd(num, den) = 1` and `den` monic.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct RationalFunction {
    num: Polynomial,
    den: Polynomial,
}

impl RationalFunction {
    pub fn new(num: Polynomial, den: Polynomial) -> Result<Self, AlgebraError> {
        if den.is_zero() {
            return Err(AlgebraError::ZeroDenominator);
        }
        if num.is_zero() {
            return Ok(Self { num, den: Polynomial::one() });
        }
        let g = num.gcd(&den);
        let num = num.divmod(&g)?.0;
        let den = den.divmod(&g)?.0;
        let lead = den.leading().recip();
        Ok(Self { num: num.scale(&lead), den: den.scale(&lead) })
    }

    pub fn from_polynomial(p: Polynomial) -> Self {
        Self { num: p, den: Polynomial::one() }
    }

    pub fn constant(c: Rational) -> Self {
        Self::from_polynomial(Polynomial::constant(c))
    }

    pub fn num(&self) -> &Polynomial {
        &self.num
    }

    pub fn den(&self) -> &Polynomial {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_polynomial(&self) -> bool {
        self.den.degree() == Some(0)
    }

    /// `deg(den) - deg(num)`; positive when r vanishes at infinity.
    pub fn order_at_infinity(&self) -> Result<i64, AlgebraError> {
        let dn = self.num.degree().ok_or(AlgebraError::ZeroFunction)? as i64;
        let dd = self.den.degree().expect("nonzero denominator") as i64;
        Ok(dd - dn)
    }

    /// Polynomial part and proper remainder numerator.
    pub fn polynomial_part(&self) -> (Polynomial, Polynomial) {
        self.num.divmod(&self.den).expect("nonzero denominator")
    }

    pub fn add(&self, other: &Self) -> Self {
        let num = &(&self.num * &other.den) + &(&other.num * &self.den);
        Self::new(num, &self.den * &other.den).expect("product of nonzero denominators")
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Self) -> Self {
        Self::new(&self.num * &other.num, &self.den * &other.den)
            .expect("product of nonzero denominators")
    }

    pub fn div(&self, other: &Self) -> Result<Self, AlgebraError> {
        if other.is_zero() {
            return Err(AlgebraError::DivisionByZero);
        }
        Self::new(&self.num * &other.den, &self.den * &other.num)
    }

    pub fn neg(&self) -> Self {
        Self { num: -&self.num, den: self.den.clone() }
    }

    pub fn pow(&self, e: u32) -> Self {
        Self::new(self.num.pow(e), self.den.pow(e)).expect("nonzero denominator")
    }

    pub fn derivative(&self) -> Self {
        let num = &(&self.num.derivative() * &self.den) - &(&self.num * &self.den.derivative());
        Self::new(num, &self.den * &self.den).expect("nonzero denominator")
    }

    /// `r(t + c)`.
    pub fn shift(&self, c: &Rational) -> Self {
        let sub = Polynomial::new(vec![c.clone(), Rational::one()]);
        let compose = |p: &Polynomial| {
            p.coeffs()
                .iter()
                .rev()
                .fold(Polynomial::zero(), |acc, k| &(&acc * &sub) + &Polynomial::constant(k.clone()))
        };
        Self::new(compose(&self.num), compose(&self.den)).expect("shift keeps den nonzero")
    }

    /// `None` at a pole.
    pub fn eval(&self, x: &Rational) -> Option<Rational> {
        let d = self.den.eval(x);
        if d.is_zero() {
            None
        } else {
            Some(self.num.eval(x) / d)
        }
    }

    pub fn eval_f64(&self, x: f64) -> f64 {
        self.num.eval_f64(x) / self.den.eval_f64(x)
    }

    pub fn from_int(n: i64) -> Self {
        Self::constant(Rational::from_integer(BigInt::from(n)))
    }

    pub fn one() -> Self {
        Self::constant(Rational::one())
    }

    pub fn zero() -> Self {
        Self::constant(Rational::zero())
    }
}

impl fmt::Display for RationalFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_polynomial() {
            write!(f, "{}", self.num)
        } else {
            write!(f, "({}) / ({})", self.num, self.den)
        }
    }
}

impl fmt::Debug for RationalFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "RationalFunction({self})")
    }
}
