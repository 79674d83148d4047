//! Exact arithmetic: big rationals, surd sums, univariate polynomials,
//! rational functions, pole data and Laurent expansions.
//!
//! Everything here is immutable-value arithmetic over arbitrary precision
//! integers; nothing in this module touches floating point except the
//! explicit `to_f64` conversions.

mod parse;
mod poly;
mod ratfunc;
mod series;
mod surd;

pub use parse::{parse_rational_function, ParseError};
pub use poly::Polynomial;
pub use ratfunc::RationalFunction;
pub use series::{find_poles, laurent_at, laurent_sqrt_at, Anchor, LaurentSeries, PoleDatum};
pub use surd::{squarefree_decompose, SurdSum};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

/// Exact rational number with a positive, coprime denominator.
pub type Rational = BigRational;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AlgebraError {
    #[error("division by the zero polynomial")]
    DivisionByZero,
    #[error("rational function with zero denominator")]
    ZeroDenominator,
    #[error("operation undefined for the zero function")]
    ZeroFunction,
    #[error("unsupported denominator factor {factor}: only linear factors over Q(sqrt d) are handled")]
    UnsupportedDenominator { factor: String },
    #[error("square root has no Laurent expansion at {anchor}: leading exponent {exponent} is odd")]
    OddOrderPole { anchor: String, exponent: i64 },
    #[error("square root of {value} is a nested radical")]
    NestedRadical { value: String },
    #[error("{value} is not invertible in a single quadratic extension")]
    NotInvertible { value: String },
}

/// `n / d` as an exact rational. Panics if `d == 0`.
pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn rational_to_f64(q: &Rational) -> f64 {
    match (q.numer().to_f64(), q.denom().to_f64()) {
        (Some(n), Some(d)) if n.is_finite() && d.is_finite() => n / d,
        // Huge operands: scale both down by the same power of two first.
        _ => {
            let shift = q.numer().bits().max(q.denom().bits()).saturating_sub(1000);
            let n = (q.numer() >> shift).to_f64().unwrap_or(f64::NAN);
            let d = (q.denom() >> shift).to_f64().unwrap_or(f64::NAN);
            if d == 0.0 {
                if q.is_negative() {
                    f64::NEG_INFINITY
                } else {
                    f64::INFINITY
                }
            } else {
                n / d
            }
        }
    }
}

/// Best rational approximation of `x` with denominator at most `max_den`
/// (continued-fraction convergents and semiconvergents).
pub fn rational_from_f64(x: f64, max_den: u64) -> Option<Rational> {
    if !x.is_finite() {
        return None;
    }
    let neg = x < 0.0;
    let exact = Rational::from_float(x.abs())?;
    // Convergents p/q of the exact binary value.
    let (mut p0, mut q0) = (BigInt::zero(), BigInt::one());
    let (mut p1, mut q1) = (BigInt::one(), BigInt::zero());
    let mut rem = exact.clone();
    let limit = BigInt::from(max_den);
    let mut best;
    loop {
        let a = rem.floor().to_integer();
        let p2 = &a * &p1 + &p0;
        let q2 = &a * &q1 + &q0;
        if q2 > limit {
            // Best semiconvergent with the largest admissible multiplier.
            let k = (&limit - &q0) / &q1;
            if k > BigInt::zero() {
                let semi = Rational::new(&k * &p1 + &p0, &k * &q1 + &q0);
                let conv = Rational::new(p1.clone(), q1.clone());
                let err_semi = (&semi - &exact).abs();
                let err_conv = (&conv - &exact).abs();
                best = if err_semi < err_conv { semi } else { conv };
            } else {
                best = Rational::new(p1.clone(), q1.clone());
            }
            break;
        }
        best = Rational::new(p2.clone(), q2.clone());
        let frac = &rem - Rational::from_integer(a);
        if frac.is_zero() {
            break;
        }
        rem = frac.recip();
        p0 = std::mem::replace(&mut p1, p2);
        q0 = std::mem::replace(&mut q1, q2);
    }
    Some(if neg { -best } else { best })
}
