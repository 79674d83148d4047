//! Laurent expansions at finite points and at infinity, square roots of
//! Laurent series, and pole / partial-fraction data.

use super::{AlgebraError, Polynomial, Rational, RationalFunction, SurdSum};
use std::fmt;

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Anchor {
    Finite(SurdSum),
    Infinity,
}

impl fmt::Display for Anchor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Anchor::Finite(c) => write!(f, "{c}"),
            Anchor::Infinity => write!(f, "infinity"),
        }
    }
}

/// Truncated Laurent series `sum_k coefficients[k] * h^(lowest_exponent + k)`.
///
/// At a finite anchor `c`, `h = x - c`. At infinity, `h = 1/x`, so the
/// lowest exponent equals the order at infinity.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct LaurentSeries {
    pub anchor: Anchor,
    pub lowest_exponent: i64,
    pub coefficients: Vec<SurdSum>,
}

impl LaurentSeries {
    /// Coefficient of `h^exp`; zero below the leading term and past the truncation.
    pub fn coeff(&self, exp: i64) -> SurdSum {
        let k = exp - self.lowest_exponent;
        if k < 0 {
            return SurdSum::zero();
        }
        self.coefficients.get(k as usize).cloned().unwrap_or_else(SurdSum::zero)
    }

    pub fn highest_exponent(&self) -> i64 {
        self.lowest_exponent + self.coefficients.len() as i64 - 1
    }

    /// Cauchy product, truncated to the shorter known range.
    pub fn square(&self) -> LaurentSeries {
        let n = self.coefficients.len();
        let mut out = vec![SurdSum::zero(); n];
        for i in 0..n {
            for j in 0..n - i {
                out[i + j] = &out[i + j] + &(&self.coefficients[i] * &self.coefficients[j]);
            }
        }
        LaurentSeries {
            anchor: self.anchor.clone(),
            lowest_exponent: 2 * self.lowest_exponent,
            coefficients: out,
        }
    }
}

fn strip_valuation(c: Vec<SurdSum>) -> (i64, Vec<SurdSum>) {
    let v = c.iter().take_while(|x| x.is_zero()).count();
    (v as i64, c.into_iter().skip(v).collect())
}

/// Power series quotient `n / d` to `terms` coefficients; `d[0]` must be nonzero.
fn series_div(n: &[SurdSum], d: &[SurdSum], terms: usize) -> Result<Vec<SurdSum>, AlgebraError> {
    let inv0 = d[0].inverse()?;
    let mut q: Vec<SurdSum> = Vec::with_capacity(terms);
    for k in 0..terms {
        let mut acc = n.get(k).cloned().unwrap_or_else(SurdSum::zero);
        for i in 1..=k.min(d.len().saturating_sub(1)) {
            acc = &acc - &(&d[i] * &q[k - i]);
        }
        q.push(&acc * &inv0);
    }
    Ok(q)
}

fn to_surds(p: &Polynomial) -> Vec<SurdSum> {
    p.coeffs().iter().cloned().map(SurdSum::from_rational).collect()
}

/// First `n_terms` nonzero-leading Laurent coefficients of `r` at `anchor`.
pub fn laurent_at(
    r: &RationalFunction,
    anchor: &Anchor,
    n_terms: usize,
) -> Result<LaurentSeries, AlgebraError> {
    if r.is_zero() {
        return Err(AlgebraError::ZeroFunction);
    }
    let (num, den, shift) = match anchor {
        Anchor::Finite(c) => {
            let (vn, n) = strip_valuation(r.num().taylor_shift(c));
            let (vd, d) = strip_valuation(r.den().taylor_shift(c));
            (n, d, vn - vd)
        }
        Anchor::Infinity => {
            let mut n = to_surds(r.num());
            let mut d = to_surds(r.den());
            n.reverse();
            d.reverse();
            (n, d, r.order_at_infinity()?)
        }
    };
    Ok(LaurentSeries {
        anchor: anchor.clone(),
        lowest_exponent: shift,
        coefficients: series_div(&num, &den, n_terms)?,
    })
}

/// Laurent series of the principal branch of `sqrt(r)` at `anchor`, with
/// `depth` coefficients. The leading coefficient is the canonical square
/// root of the leading coefficient of `r`.
pub fn laurent_sqrt_at(
    r: &RationalFunction,
    anchor: &Anchor,
    depth: usize,
) -> Result<LaurentSeries, AlgebraError> {
    let l = laurent_at(r, anchor, depth.max(1))?;
    if l.lowest_exponent % 2 != 0 {
        return Err(AlgebraError::OddOrderPole {
            anchor: anchor.to_string(),
            exponent: l.lowest_exponent,
        });
    }
    let s0 = l.coefficients[0].sqrt()?;
    let two_s0_inv = (&s0 + &s0).inverse()?;
    let mut s = vec![s0];
    for k in 1..depth {
        let mut acc = l.coefficients[k].clone();
        for i in 1..k {
            acc = &acc - &(&s[i] * &s[k - i]);
        }
        s.push(&acc * &two_s0_inv);
    }
    Ok(LaurentSeries {
        anchor: anchor.clone(),
        lowest_exponent: l.lowest_exponent / 2,
        coefficients: s,
    })
}

/// A finite pole with its principal part:
/// `sum_j pf_coefficients[j-1] / (x - location)^j` for `j = 1..=order`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct PoleDatum {
    pub location: SurdSum,
    pub order: usize,
    pub pf_coefficients: Vec<SurdSum>,
}

fn quadratic_roots(f: &Polynomial) -> Vec<SurdSum> {
    let (c, b, a) = (f.coeff(0), f.coeff(1), f.coeff(2));
    let disc = &b * &b - Rational::from_integer(4.into()) * &a * &c;
    let two_a_inv = (&a + &a).recip();
    let centre = SurdSum::from_rational(-&b * &two_a_inv);
    let half = SurdSum::sqrt_rational(&disc).scale(&two_a_inv);
    vec![&centre - &half, &centre + &half]
}

/// All finite poles of `r`, sorted by (real part, imaginary part).
///
/// Denominator factors are split over Q and over a single quadratic
/// extension; anything of higher degree is reported as unsupported.
pub fn find_poles(r: &RationalFunction) -> Result<Vec<PoleDatum>, AlgebraError> {
    let mut out = Vec::new();
    for (factor, mult) in r.den().squarefree_factorization() {
        let mut rest = factor.clone();
        let mut roots: Vec<SurdSum> = Vec::new();
        for q in factor.rational_roots() {
            rest = rest.divmod(&Polynomial::linear(&q))?.0;
            roots.push(SurdSum::from_rational(q));
        }
        match rest.degree() {
            Some(0) => {}
            Some(2) => roots.extend(quadratic_roots(&rest)),
            _ => return Err(AlgebraError::UnsupportedDenominator { factor: rest.monic().to_string() }),
        }
        for c in roots {
            let series = laurent_at(r, &Anchor::Finite(c.clone()), mult)?;
            debug_assert_eq!(series.lowest_exponent, -(mult as i64));
            let pf = (1..=mult as i64).map(|j| series.coeff(-j)).collect();
            out.push(PoleDatum { location: c, order: mult, pf_coefficients: pf });
        }
    }
    out.sort_by(|a, b| {
        let (ar, ai) = a.location.to_complex();
        let (br, bi) = b.location.to_complex();
        ar.total_cmp(&br).then(ai.total_cmp(&bi))
    });
    Ok(out)
}

/// Principal part evaluated at a real point, as (re, im).
#[cfg(test)]
fn principal_part_f64(p: &PoleDatum, x: f64) -> (f64, f64) {
    let (cr, ci) = p.location.to_complex();
    let (dr, di) = (x - cr, -ci);
    let mut acc = (0.0, 0.0);
    let norm = dr * dr + di * di;
    let inv = (dr / norm, -di / norm);
    let mut pw = (1.0, 0.0);
    for a in &p.pf_coefficients {
        pw = (pw.0 * inv.0 - pw.1 * inv.1, pw.0 * inv.1 + pw.1 * inv.0);
        let (ar, ai) = a.to_complex();
        acc.0 += ar * pw.0 - ai * pw.1;
        acc.1 += ar * pw.1 + ai * pw.0;
    }
    acc
}
