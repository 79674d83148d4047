//! Q-linear combinations of square roots of distinct squarefree integers.
//!
//! A radicand key `d` is a squarefree integer with `|d| >= 2`, or `-1`. The
//! square root of a negative radicand is taken as `i * sqrt(|d|)`, so values
//! such as `sqrt(-3)` stay exact. Key `1` holds the rational part. Distinct
//! keys are linearly independent over Q, which makes the stored form
//! canonical and equality structural.

use super::{rational_to_f64, AlgebraError, Rational};
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

const TRIAL_DIVISION_LIMIT: u64 = 200_000;

/// Splits `n > 0` as `n = s^2 * f` with `f` squarefree.
///
/// Trial division runs up to a fixed bound; a leftover cofactor is folded
/// into `s` when it is a perfect square and otherwise kept in `f`.
pub fn squarefree_decompose(n: &BigInt) -> (BigInt, BigInt) {
    assert!(n.is_positive(), "squarefree_decompose needs a positive integer");
    let mut rest = n.clone();
    let mut square = BigInt::one();
    let mut free = BigInt::one();
    let mut p = 2u64;
    while p <= TRIAL_DIVISION_LIMIT {
        let bp = BigInt::from(p);
        if &bp * &bp > rest {
            break;
        }
        let mut e = 0u32;
        while (&rest % &bp).is_zero() {
            rest /= &bp;
            e += 1;
        }
        if e > 0 {
            square *= bp.pow(e / 2);
            if e % 2 == 1 {
                free *= &bp;
            }
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if !rest.is_one() {
        let r = rest.sqrt();
        if &r * &r == rest {
            square *= r;
        } else {
            free *= rest;
        }
    }
    (square, free)
}

/// `sqrt(a) * sqrt(b)` for radicand keys, as `coefficient * sqrt(key)`.
fn mul_keys(a: &BigInt, b: &BigInt) -> (BigInt, BigInt) {
    if a.is_one() {
        return (BigInt::one(), b.clone());
    }
    if b.is_one() {
        return (BigInt::one(), a.clone());
    }
    let both_negative = a.is_negative() && b.is_negative();
    let negative_key = a.is_negative() ^ b.is_negative();
    let (aa, bb) = (a.abs(), b.abs());
    let g = aa.gcd(&bb);
    let abs_key = (&aa / &g) * (&bb / &g);
    let coef = if both_negative { -g } else { g };
    let key = if negative_key { -abs_key } else { abs_key };
    (coef, key)
}

#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct SurdSum {
    terms: BTreeMap<BigInt, Rational>,
}

impl SurdSum {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::from_rational(Rational::one())
    }

    pub fn from_rational(q: Rational) -> Self {
        let mut s = Self::zero();
        s.add_term(BigInt::one(), q);
        s
    }

    pub fn from_integer(n: i64) -> Self {
        Self::from_rational(Rational::from_integer(BigInt::from(n)))
    }

    /// `coef * sqrt(radicand)` for an arbitrary nonzero integer radicand.
    pub fn radical(coef: Rational, radicand: &BigInt) -> Self {
        if radicand.is_zero() || coef.is_zero() {
            return Self::zero();
        }
        let (sq, free) = squarefree_decompose(&radicand.abs());
        let key = if radicand.is_negative() { -free } else { free };
        let mut s = Self::zero();
        s.add_term(key, coef * Rational::from_integer(sq));
        s
    }

    /// Principal square root of a rational; negative inputs map to `i*sqrt(|q|)`.
    pub fn sqrt_rational(q: &Rational) -> Self {
        if q.is_zero() {
            return Self::zero();
        }
        // sqrt(n/d) = sqrt(n*d) / d
        let radicand = q.numer() * q.denom();
        let coef = Rational::new(BigInt::one(), q.denom().clone());
        Self::radical(coef, &radicand)
    }

    fn add_term(&mut self, key: BigInt, coef: Rational) {
        if coef.is_zero() {
            return;
        }
        let entry = self.terms.entry(key.clone()).or_insert_with(Rational::zero);
        *entry += coef;
        if entry.is_zero() {
            self.terms.remove(&key);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn rational_part(&self) -> Rational {
        self.terms.get(&BigInt::one()).cloned().unwrap_or_else(Rational::zero)
    }

    /// Radicand/coefficient pairs, excluding the rational part.
    pub fn radical_terms(&self) -> impl Iterator<Item = (&BigInt, &Rational)> {
        self.terms.iter().filter(|(k, _)| !k.is_one())
    }

    pub fn as_rational(&self) -> Option<Rational> {
        match self.terms.len() {
            0 => Some(Rational::zero()),
            1 => self.terms.get(&BigInt::one()).cloned(),
            _ => None,
        }
    }

    pub fn as_integer(&self) -> Option<BigInt> {
        self.as_rational().filter(|q| q.is_integer()).map(|q| q.to_integer())
    }

    pub fn is_integer(&self) -> bool {
        self.as_integer().is_some()
    }

    /// Membership in the nonnegative integers.
    pub fn is_nonneg_integer(&self) -> bool {
        self.as_integer().is_some_and(|n| !n.is_negative())
    }

    pub fn scale(&self, q: &Rational) -> Self {
        if q.is_zero() {
            return Self::zero();
        }
        Self {
            terms: self.terms.iter().map(|(k, c)| (k.clone(), c * q)).collect(),
        }
    }

    /// Real and imaginary parts as floats.
    pub fn to_complex(&self) -> (f64, f64) {
        let mut re = 0.0;
        let mut im = 0.0;
        for (k, c) in &self.terms {
            let c = rational_to_f64(c);
            if k.is_negative() {
                im += c * rational_to_f64(&Rational::from_integer(k.abs())).sqrt();
            } else {
                re += c * rational_to_f64(&Rational::from_integer(k.clone())).sqrt();
            }
        }
        (re, im)
    }

    /// Real value; NaN when the sum has an imaginary component.
    pub fn to_f64(&self) -> f64 {
        let (re, im) = self.to_complex();
        if im != 0.0 {
            f64::NAN
        } else {
            re
        }
    }

    fn flip(&self, pred: impl Fn(&BigInt) -> bool) -> Self {
        Self {
            terms: self
                .terms
                .iter()
                .map(|(k, c)| (k.clone(), if pred(k) { -c } else { c.clone() }))
                .collect(),
        }
    }

    /// Pairwise coprime integers generating every |radicand| multiplicatively.
    fn coprime_base(&self) -> Vec<BigInt> {
        let mut base: Vec<BigInt> = self
            .terms
            .keys()
            .map(|k| k.abs())
            .filter(|k| !k.is_one())
            .collect();
        loop {
            base.sort();
            base.dedup();
            let mut split = None;
            'outer: for i in 0..base.len() {
                for j in (i + 1)..base.len() {
                    let g = base[i].gcd(&base[j]);
                    if !g.is_one() {
                        split = Some((i, j, g));
                        break 'outer;
                    }
                }
            }
            match split {
                None => return base,
                Some((i, j, g)) => {
                    let (a, b) = (&base[i] / &g, &base[j] / &g);
                    base.remove(j);
                    base.remove(i);
                    base.extend([a, b, g].into_iter().filter(|x| !x.is_one()));
                }
            }
        }
    }

    /// Multiplicative inverse, computed by multiplying through by Galois
    /// conjugates until the product is rational.
    pub fn inverse(&self) -> Result<Self, AlgebraError> {
        if self.is_zero() {
            return Err(AlgebraError::NotInvertible { value: self.to_string() });
        }
        let mut numerator = Self::one();
        let mut current = self.clone();
        if current.terms.keys().any(|k| k.is_negative()) {
            let conj = current.flip(|k| k.is_negative());
            numerator = &numerator * &conj;
            current = &current * &conj;
        }
        for g in self.coprime_base() {
            if current.as_rational().is_some() {
                break;
            }
            let conj = current.flip(|k| (k.abs() % &g).is_zero());
            numerator = &numerator * &conj;
            current = &current * &conj;
        }
        match current.as_rational() {
            Some(q) if !q.is_zero() => Ok(numerator.scale(&q.recip())),
            _ => Err(AlgebraError::NotInvertible { value: self.to_string() }),
        }
    }

    pub fn checked_div(&self, other: &Self) -> Result<Self, AlgebraError> {
        Ok(self * &other.inverse()?)
    }

    /// Square root; only rational radicands stay within depth-one surds.
    pub fn sqrt(&self) -> Result<Self, AlgebraError> {
        match self.as_rational() {
            Some(q) => Ok(Self::sqrt_rational(&q)),
            None => Err(AlgebraError::NestedRadical { value: self.to_string() }),
        }
    }
}

impl fmt::Display for SurdSum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        // Rational part first, then radicals by key.
        let ordered = self
            .terms
            .get_key_value(&BigInt::one())
            .into_iter()
            .chain(self.terms.iter().filter(|(k, _)| !k.is_one()));
        for (k, c) in ordered {
            let (sign, mag) = if c.is_negative() { ("-", -c) } else { ("+", c.clone()) };
            if first {
                if sign == "-" {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            first = false;
            if k.is_one() {
                write!(f, "{mag}")?;
            } else {
                if !mag.is_one() {
                    write!(f, "{mag}*")?;
                }
                if k.is_negative() {
                    if (-k).is_one() {
                        write!(f, "i")?;
                    } else {
                        write!(f, "i*sqrt({})", -k)?;
                    }
                } else {
                    write!(f, "sqrt({k})")?;
                }
            }
        }
        Ok(())
    }
}

impl fmt::Debug for SurdSum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SurdSum({self})")
    }
}

impl From<Rational> for SurdSum {
    fn from(q: Rational) -> Self {
        Self::from_rational(q)
    }
}

impl Add for &SurdSum {
    type Output = SurdSum;
    fn add(self, rhs: &SurdSum) -> SurdSum {
        let mut out = self.clone();
        for (k, c) in &rhs.terms {
            out.add_term(k.clone(), c.clone());
        }
        out
    }
}

impl Sub for &SurdSum {
    type Output = SurdSum;
    fn sub(self, rhs: &SurdSum) -> SurdSum {
        let mut out = self.clone();
        for (k, c) in &rhs.terms {
            out.add_term(k.clone(), -c.clone());
        }
        out
    }
}

impl Mul for &SurdSum {
    type Output = SurdSum;
    fn mul(self, rhs: &SurdSum) -> SurdSum {
        let mut out = SurdSum::zero();
        for (ka, ca) in &self.terms {
            for (kb, cb) in &rhs.terms {
                let (coef, key) = mul_keys(ka, kb);
                out.add_term(key, ca * cb * Rational::from_integer(coef));
            }
        }
        out
    }
}

impl Neg for &SurdSum {
    type Output = SurdSum;
    fn neg(self) -> SurdSum {
        self.scale(&-Rational::one())
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr for SurdSum {
            type Output = SurdSum;
            fn $m(self, rhs: SurdSum) -> SurdSum {
                (&self).$m(&rhs)
            }
        }
        impl $tr<&SurdSum> for SurdSum {
            type Output = SurdSum;
            fn $m(self, rhs: &SurdSum) -> SurdSum {
                (&self).$m(rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl Neg for SurdSum {
    type Output = SurdSum;
    fn neg(self) -> SurdSum {
        -&self
    }
}
