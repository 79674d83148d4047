//! Dense univariate polynomials over Q.

use super::{rational_to_f64, AlgebraError, Rational, SurdSum};
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

/// Coefficients in ascending degree; no trailing zeros, so the zero
/// polynomial is the empty vector.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Polynomial {
    coeffs: Vec<Rational>,
}

impl Polynomial {
    pub fn new(mut coeffs: Vec<Rational>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn from_ints(coeffs: &[i64]) -> Self {
        Self::new(coeffs.iter().map(|&c| Rational::from_integer(BigInt::from(c))).collect())
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::constant(Rational::one())
    }

    pub fn constant(c: Rational) -> Self {
        Self::new(vec![c])
    }

    /// The monomial `x`.
    pub fn x() -> Self {
        Self::new(vec![Rational::zero(), Rational::one()])
    }

    /// `x - root`.
    pub fn linear(root: &Rational) -> Self {
        Self::new(vec![-root.clone(), Rational::one()])
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// `None` encodes the degree of the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn coeffs(&self) -> &[Rational] {
        &self.coeffs
    }

    pub fn coeff(&self, i: usize) -> Rational {
        self.coeffs.get(i).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn leading(&self) -> Rational {
        self.coeffs.last().cloned().unwrap_or_else(Rational::zero)
    }

    pub fn scale(&self, q: &Rational) -> Self {
        Self::new(self.coeffs.iter().map(|c| c * q).collect())
    }

    pub fn monic(&self) -> Self {
        if self.is_zero() {
            return Self::zero();
        }
        self.scale(&self.leading().recip())
    }

    pub fn pow(&self, e: u32) -> Self {
        (0..e).fold(Self::one(), |acc, _| &acc * self)
    }

    pub fn derivative(&self) -> Self {
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, c)| c * Rational::from_integer(BigInt::from(i)))
                .collect(),
        )
    }

    pub fn eval(&self, x: &Rational) -> Rational {
        self.coeffs.iter().rev().fold(Rational::zero(), |acc, c| acc * x + c)
    }

    pub fn eval_surd(&self, x: &SurdSum) -> SurdSum {
        self.coeffs
            .iter()
            .rev()
            .fold(SurdSum::zero(), |acc, c| &acc * x + SurdSum::from_rational(c.clone()))
    }

    pub fn eval_f64(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * x + rational_to_f64(c))
    }

    /// Coefficients of `p(c + h)` as a polynomial in `h`.
    pub fn taylor_shift(&self, c: &SurdSum) -> Vec<SurdSum> {
        let mut out: Vec<SurdSum> = Vec::new();
        for coef in self.coeffs.iter().rev() {
            // out <- out * (c + h) + coef
            let mut next = vec![SurdSum::zero(); out.len() + 1];
            for (i, o) in out.iter().enumerate() {
                next[i] = &next[i] + &(o * c);
                next[i + 1] = &next[i + 1] + o;
            }
            next[0] = &next[0] + &SurdSum::from_rational(coef.clone());
            out = next;
        }
        out
    }

    pub fn divmod(&self, divisor: &Self) -> Result<(Self, Self), AlgebraError> {
        let dd = divisor.degree().ok_or(AlgebraError::DivisionByZero)?;
        let lead_inv = divisor.leading().recip();
        let mut rem = self.coeffs.clone();
        let n = self.coeffs.len();
        if n <= dd {
            return Ok((Self::zero(), self.clone()));
        }
        let mut quot = vec![Rational::zero(); n - dd];
        for i in (0..quot.len()).rev() {
            let q = &rem[i + dd] * &lead_inv;
            if !q.is_zero() {
                for (j, d) in divisor.coeffs.iter().enumerate() {
                    rem[i + j] -= &q * d;
                }
            }
            quot[i] = q;
        }
        rem.truncate(dd);
        Ok((Self::new(quot), Self::new(rem)))
    }

    /// Monic greatest common divisor; `gcd(0, 0) = 0`.
    pub fn gcd(&self, other: &Self) -> Self {
        let (mut a, mut b) = (self.clone(), other.clone());
        while !b.is_zero() {
            let (_, r) = a.divmod(&b).expect("nonzero divisor");
            a = b;
            b = r;
        }
        a.monic()
    }

    /// Yun's algorithm: `self = c * prod f_i^i` with each `f_i` squarefree
    /// and monic. Returns the non-constant `(f_i, i)` pairs.
    pub fn squarefree_factorization(&self) -> Vec<(Self, usize)> {
        let mut out = Vec::new();
        if self.degree().is_none_or(|d| d == 0) {
            return out;
        }
        let f = self.monic();
        let df = f.derivative();
        let a0 = f.gcd(&df);
        let mut b = f.divmod(&a0).expect("gcd divides").0;
        let mut c = df.divmod(&a0).expect("gcd divides").0;
        let mut d = &c - &b.derivative();
        let mut i = 1;
        loop {
            let a = b.gcd(&d);
            if a.degree().is_some_and(|k| k > 0) {
                out.push((a.clone(), i));
            }
            b = b.divmod(&a).expect("gcd divides").0;
            if b.degree().is_none_or(|k| k == 0) {
                break;
            }
            c = d.divmod(&a).expect("gcd divides").0;
            d = &c - &b.derivative();
            i += 1;
        }
        out
    }

    /// Distinct rational roots.
    pub fn rational_roots(&self) -> Vec<Rational> {
        let mut roots = Vec::new();
        if self.degree().is_none_or(|d| d == 0) {
            return roots;
        }
        // Integer primitive form.
        let lcm = self
            .coeffs
            .iter()
            .fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
        let ints: Vec<BigInt> = self
            .coeffs
            .iter()
            .map(|c| (c * Rational::from_integer(lcm.clone())).to_integer())
            .collect();
        let low = ints.iter().position(|c| !c.is_zero()).expect("nonzero polynomial");
        if low > 0 {
            roots.push(Rational::zero());
        }
        let trimmed = &ints[low..];
        if trimmed.len() < 2 {
            return roots;
        }
        let ps = divisors(&trimmed[0].abs());
        let qs = divisors(&trimmed[trimmed.len() - 1].abs());
        let reduced = Polynomial::new(
            trimmed.iter().map(|c| Rational::from_integer(c.clone())).collect(),
        );
        let mut cands: Vec<Rational> = Vec::new();
        for p in &ps {
            for q in &qs {
                let r = Rational::new(p.clone(), q.clone());
                cands.push(r.clone());
                cands.push(-r);
            }
        }
        cands.sort();
        cands.dedup();
        for r in cands {
            if reduced.eval(&r).is_zero() {
                roots.push(r);
            }
        }
        roots.sort();
        roots
    }

    /// Renders with the given variable name, highest degree first.
    pub fn render(&self, var: &str) -> String {
        if self.is_zero() {
            return "0".into();
        }
        let mut s = String::new();
        for (i, c) in self.coeffs.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            let neg = c.is_negative();
            let mag = c.abs();
            if s.is_empty() {
                if neg {
                    s.push('-');
                }
            } else {
                s.push_str(if neg { " - " } else { " + " });
            }
            let mono = match i {
                0 => String::new(),
                1 => var.to_string(),
                _ => format!("{var}^{i}"),
            };
            if i == 0 {
                s.push_str(&mag.to_string());
            } else if mag.is_one() {
                s.push_str(&mono);
            } else if mag.is_integer() {
                s.push_str(&format!("{mag}*{mono}"));
            } else {
                s.push_str(&format!("({mag})*{mono}"));
            }
        }
        s
    }
}

fn divisors(n: &BigInt) -> Vec<BigInt> {
    let mut factors: Vec<(BigInt, u32)> = Vec::new();
    let mut rest = n.clone();
    let mut p = BigInt::from(2);
    let limit = BigInt::from(1_000_000u64);
    while &p * &p <= rest && p <= limit {
        let mut e = 0;
        while (&rest % &p).is_zero() {
            rest /= &p;
            e += 1;
        }
        if e > 0 {
            factors.push((p.clone(), e));
        }
        p += 1;
    }
    if rest > BigInt::one() {
        factors.push((rest, 1));
    }
    let mut divs = vec![BigInt::one()];
    for (f, e) in factors {
        let mut next = Vec::new();
        for d in &divs {
            let mut pw = BigInt::one();
            for _ in 0..=e {
                next.push(d * &pw);
                pw *= &f;
            }
        }
        divs = next;
    }
    divs
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render("t"))
    }
}

impl fmt::Debug for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Polynomial({self})")
    }
}

impl Add for &Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: &Polynomial) -> Polynomial {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        Polynomial::new((0..n).map(|i| self.coeff(i) + rhs.coeff(i)).collect())
    }
}

impl Sub for &Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: &Polynomial) -> Polynomial {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        Polynomial::new((0..n).map(|i| self.coeff(i) - rhs.coeff(i)).collect())
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: &Polynomial) -> Polynomial {
        if self.is_zero() || rhs.is_zero() {
            return Polynomial::zero();
        }
        let mut out = vec![Rational::zero(); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in rhs.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Polynomial::new(out)
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        Polynomial::new(self.coeffs.iter().map(|c| -c).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{int, rat};

    fn p(c: &[i64]) -> Polynomial {
        Polynomial::from_ints(c)
    }

    #[test]
    fn gcd_extracts_common_factor() {
        assert_eq!(p(&[-1, 0, 1]).gcd(&p(&[-1, 1])), p(&[-1, 1]));
        // gcd is returned monic
        assert_eq!(p(&[-2, 0, 2]).gcd(&p(&[3, 3])), p(&[1, 1]));
    }

    #[test]
    fn divmod_by_x() {
        let (q, r) = p(&[1, 0, 1]).divmod(&Polynomial::x()).unwrap();
        assert_eq!(q, Polynomial::x());
        assert_eq!(r, Polynomial::one());
        assert_eq!(p(&[1]).divmod(&Polynomial::zero()), Err(AlgebraError::DivisionByZero));
    }

    #[test]
    fn product_of_linears() {
        assert_eq!(&p(&[1, 1]) * &p(&[-1, 1]), p(&[-1, 0, 1]));
        assert_eq!(Polynomial::zero().degree(), None);
        assert_eq!(p(&[0, 0, 0]), Polynomial::zero());
    }

    #[test]
    fn squarefree_factorization_of_t2_t_plus_1() {
        // t^2 (t+1)
        let f = p(&[0, 0, 1, 1]);
        let sf = f.squarefree_factorization();
        assert_eq!(sf, vec![(p(&[1, 1]), 1), (Polynomial::x(), 2)]);
        // (t-1)^3 (t^2-2)
        let g = &p(&[-1, 1]).pow(3) * &p(&[-2, 0, 1]);
        let sf = g.squarefree_factorization();
        assert_eq!(sf, vec![(p(&[-2, 0, 1]), 1), (p(&[-1, 1]), 3)]);
    }

    #[test]
    fn rational_root_search() {
        // (2t - 1)(t + 3) t
        let f = &(&p(&[-1, 2]) * &p(&[3, 1])) * &Polynomial::x();
        assert_eq!(f.rational_roots(), vec![int(-3), int(0), rat(1, 2)]);
        assert!(p(&[-2, 0, 1]).rational_roots().is_empty());
    }

    #[test]
    fn taylor_shift_matches_expansion() {
        // (c + h)^2 at c = 3: 9 + 6h + h^2
        let sh = p(&[0, 0, 1]).taylor_shift(&SurdSum::from_integer(3));
        let ints: Vec<_> = sh.iter().map(|s| s.as_integer().unwrap()).collect();
        assert_eq!(ints, vec![BigInt::from(9), BigInt::from(6), BigInt::from(1)]);
    }

    #[test]
    fn render_is_readable() {
        assert_eq!(p(&[-1, 0, 2]).to_string(), "2*t^2 - 1");
        assert_eq!(Polynomial::new(vec![rat(1, 2), int(-1)]).to_string(), "-t + 1/2");
    }
}
