//! Coefficients of the `(eps_w1, eps_b1)` block in `tau = e^{-omega t}`,
//! its second-order reduction and the normal form `y'' = r(tau) y`.

use super::{CertifyError, IntegralCurveParams};
use crate::flow::{CriticalPoint, Moments};
use nalgebra::{DMatrix, DVector};
use serde::Serialize;

/// `d eps / d tau = (A tau + B) eps` for the first-layer perturbations.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CoefficientSet {
    pub a11: f64,
    pub b11: f64,
    pub a12: f64,
    pub b12: f64,
    pub a22: f64,
    pub b22: f64,
}

impl CoefficientSet {
    /// `A12^{-1} B12`; the finite pole of the normal form sits at `-delta`.
    pub fn delta(&self) -> f64 {
        self.b12 / self.a12
    }

    pub fn linear(&self) -> LinearCoefficients {
        LinearCoefficients {
            a: [[self.a11, self.a12], [self.a12, self.a22]],
            b: [[self.b11, self.b12], [self.b12, self.b22]],
        }
    }

    /// `A -> s^2 A`, `B -> s B`: the effect of scaling the amplitude `a` by `s`.
    pub fn scaled_amplitude(&self, s: f64) -> Self {
        let q = s * s;
        Self {
            a11: q * self.a11,
            b11: s * self.b11,
            a12: q * self.a12,
            b12: s * self.b12,
            a22: q * self.a22,
            b22: s * self.b22,
        }
    }
}

/// General `eps' = (A x + B) eps` with 2x2 `A`, `B`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LinearCoefficients {
    pub a: [[f64; 2]; 2],
    pub b: [[f64; 2]; 2],
}

impl LinearCoefficients {
    pub fn entry(&self, i: usize, j: usize, x: f64) -> f64 {
        self.a[i][j] * x + self.b[i][j]
    }
}

pub fn assemble_coefficients(
    m: &Moments,
    crit: &CriticalPoint,
    p: &IntegralCurveParams,
) -> Result<CoefficientSet, CertifyError> {
    if m.xbar_zero {
        return Err(CertifyError::XbarZero { xbar: m.xbar });
    }
    let ss2 = crit.sigma_at * crit.sigma2_at;
    let kappa = p.a * p.a * ss2;
    let beta = m.n as f64 / p.omega * p.a * ss2;
    Ok(CoefficientSet {
        a11: kappa * m.x2bar,
        b11: beta * (m.x2bar * m.ybar - m.x2ybar),
        a12: kappa * m.xbar,
        b12: beta * (m.xbar * m.ybar - m.xybar),
        a22: kappa,
        b22: 0.0,
    })
}

/// `g'' = P1 g' + P2 g` for the first component of a [`LinearCoefficients`] system.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReducedODE {
    pub lin: LinearCoefficients,
}

pub fn reduce_to_second_order(lin: &LinearCoefficients) -> Result<ReducedODE, CertifyError> {
    if lin.a[0][1] == 0.0 && lin.b[0][1] == 0.0 {
        return Err(CertifyError::DegenerateCoupling);
    }
    Ok(ReducedODE { lin: *lin })
}

impl ReducedODE {
    fn parts(&self, x: f64) -> (f64, f64, f64, f64) {
        let l = &self.lin;
        let (a11, a12, a22) = (l.entry(0, 0, x), l.entry(0, 1, x), l.entry(1, 1, x));
        (a11, a12, a22, l.a[0][1] + a12 * a22)
    }

    pub fn p1(&self, x: f64) -> f64 {
        let (a11, a12, _, m) = self.parts(x);
        a11 + m / a12
    }

    pub fn p2(&self, x: f64) -> f64 {
        let l = &self.lin;
        let (a11, a12, _, m) = self.parts(x);
        l.a[0][0] + a12 * l.entry(1, 0, x) - m * a11 / a12
    }

    pub fn p1_prime(&self, x: f64) -> f64 {
        let l = &self.lin;
        let a12 = l.entry(0, 1, x);
        l.a[0][0] + l.a[1][1] - l.a[0][1] * l.a[0][1] / (a12 * a12)
    }

    /// `-P1'/2 + P1^2/4 + P2`.
    pub fn invariant(&self, x: f64) -> f64 {
        let p1 = self.p1(x);
        -0.5 * self.p1_prime(x) + 0.25 * p1 * p1 + self.p2(x)
    }

    /// Sum of absolute values of the three terms of [`Self::invariant`].
    pub fn invariant_scale(&self, x: f64) -> f64 {
        let p1 = self.p1(x);
        0.5 * self.p1_prime(x).abs() + 0.25 * p1 * p1 + self.p2(x).abs()
    }

    /// Zero of `A12 x + B12`, if any.
    pub fn pole(&self) -> Option<f64> {
        let l = &self.lin;
        (l.a[0][1] != 0.0).then(|| -l.b[0][1] / l.a[0][1])
    }

    /// `int_{x0}^{x1} P1`; `None` when the interval contains the pole.
    pub fn p1_integral(&self, x0: f64, x1: f64) -> Option<f64> {
        let l = &self.lin;
        let (lo, hi) = (x0.min(x1), x0.max(x1));
        if self.pole().is_some_and(|c| lo <= c && c <= hi) {
            return None;
        }
        let quad = 0.5 * (l.a[0][0] + l.a[1][1]) * (x1 * x1 - x0 * x0) + (l.b[0][0] + l.b[1][1]) * (x1 - x0);
        let log = if l.a[0][1] != 0.0 { (l.entry(0, 1, x1) / l.entry(0, 1, x0)).abs().ln() } else { 0.0 };
        Some(quad + log)
    }
}

/// `r = r2 tau^2 + r1 tau + r0 + rm1/(tau + d) + rm2/(tau + d)^2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NormalFormCoeffs {
    pub r2: f64,
    pub r1: f64,
    pub r0: f64,
    pub rm1: f64,
    pub rm2: f64,
    pub pole_d: f64,
}

/// Double-pole coefficient, `(numerator, denominator)`. The simple pole of
/// `P1` with residue 1 gives `+1/2` from `-P1'/2` and `+1/4` from `P1^2/4`.
pub const RM2: (i64, i64) = (3, 4);

impl NormalFormCoeffs {
    pub fn eval(&self, x: f64) -> f64 {
        let u = x + self.pole_d;
        (self.r2 * x + self.r1) * x + self.r0 + self.rm1 / u + self.rm2 / (u * u)
    }

    pub fn as_array(&self) -> [f64; 5] {
        [self.r2, self.r1, self.r0, self.rm1, self.rm2]
    }
}

pub fn normal_form(c: &CoefficientSet) -> Result<NormalFormCoeffs, CertifyError> {
    if c.a12 == 0.0 {
        return Err(CertifyError::A12Zero);
    }
    let d = c.delta();
    Ok(NormalFormCoeffs {
        r2: 0.25 * c.a11 * c.a11 - 0.5 * c.a11 * c.a22 + 0.25 * c.a22 * c.a22 + c.a12 * c.a12,
        r1: 0.5 * c.a11 * c.b11 - 0.5 * c.a22 * c.b11 + 2.0 * c.a12 * c.b12,
        r0: 0.25 * c.b11 * c.b11 + c.b12 * c.b12,
        rm1: 0.5 * d * (c.a11 - c.a22) - 0.5 * c.b11,
        rm2: RM2.0 as f64 / RM2.1 as f64,
        pole_d: d,
    })
}

/// Alternative coefficient list with `A22/4` in `r2`, a `-1` in `r1` and
/// `rm2 = -1/4`. Kept only to report its distance from the invariant.
pub fn printed_normal_form(c: &CoefficientSet) -> NormalFormCoeffs {
    let d = c.delta();
    NormalFormCoeffs {
        r2: 0.25 * c.a11 * c.a11 + c.a12 * c.a12 + 0.25 * c.a22 - 0.5 * c.a11 * c.a22,
        r1: 0.5 * c.a11 * c.b11 + 2.0 * c.a12 * c.b12 - 0.5 * c.b11 * c.a22 - 1.0,
        r0: 0.25 * c.b11 * c.b11 + c.b12 * c.b12,
        rm1: 0.5 * d * (c.a11 - c.a22) - 0.5 * c.b11,
        rm2: -0.25,
        pole_d: d,
    }
}

/// Terms of `r2` as derived here; they sum to `(A11 - A22)^2/4 + A12^2`.
pub fn r2_terms(c: &CoefficientSet) -> Vec<f64> {
    vec![0.25 * c.a11 * c.a11, -0.5 * c.a11 * c.a22, 0.25 * c.a22 * c.a22, c.a12 * c.a12]
}

/// Terms of the alternative `r2 = A11^2/4 + A12^2 + A22/4 - A11 A22/2`.
pub fn r2_terms_printed(c: &CoefficientSet) -> Vec<f64> {
    vec![0.25 * c.a11 * c.a11, c.a12 * c.a12, 0.25 * c.a22, -0.5 * c.a11 * c.a22]
}

/// Terms of the expanded form `A11^2 + 4 A12^2 + A22 - 2 A11 A12`; it equals
/// `kappa^2` times [`r2_zero_locus`].
pub fn r2_terms_expanded(c: &CoefficientSet) -> Vec<f64> {
    vec![c.a11 * c.a11, 4.0 * c.a12 * c.a12, c.a22, -2.0 * c.a11 * c.a12]
}

/// `(x2bar)^2 + 4 xbar^2 - 2 x2bar xbar + 1/(a^2 sigma sigma'')`.
pub fn r2_zero_locus(m: &Moments, crit: &CriticalPoint, a: f64) -> f64 {
    m.x2bar * m.x2bar + 4.0 * m.xbar * m.xbar - 2.0 * m.x2bar * m.xbar
        + 1.0 / (a * a * crit.sigma_at * crit.sigma2_at)
}

/// Offsets tried, in order, for `b2_hat - ybar`.
pub const B2_OFFSETS: [f64; 10] = [1.0, -1.0, 2.0, -2.0, 3.0, -3.0, 4.0, -4.0, 5.0, -5.0];

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct B2Choice {
    pub b2_hat: f64,
    pub r2: f64,
    pub r2_scale: f64,
    /// Candidates rejected before `b2_hat`, with their `r2`.
    pub rejected: Vec<(f64, f64)>,
}

/// First `b2_hat` in `ybar + B2_OFFSETS` with `|r2| > 0` and
/// `|r2| >= threshold * max |term|`.
pub fn choose_b2hat<F>(m: &Moments, crit: &CriticalPoint, threshold: f64, r2_eval: F) -> Result<B2Choice, CertifyError>
where
    F: Fn(&CoefficientSet) -> Vec<f64>,
{
    let mut rejected = Vec::new();
    for off in B2_OFFSETS {
        let b2_hat = m.ybar + off;
        let p = IntegralCurveParams::new(*crit, b2_hat, m)?;
        let c = assemble_coefficients(m, crit, &p)?;
        let terms = r2_eval(&c);
        let r2: f64 = terms.iter().sum();
        let scale = terms.iter().fold(0.0f64, |s, t| s.max(t.abs()));
        if r2 != 0.0 && r2.abs() >= threshold * scale {
            return Ok(B2Choice { b2_hat, r2, r2_scale: scale, rejected });
        }
        rejected.push((b2_hat, r2));
    }
    Err(CertifyError::ScanExhausted { tried: B2_OFFSETS.len() })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NormalFormOracle {
    /// Least-squares fit of the five coefficients to the invariant.
    pub fitted: [f64; 5],
    pub closed_form: [f64; 5],
    pub printed: [f64; 5],
    /// Max over the sample of `|invariant - r(tau)| / scale(tau)`.
    pub closed_form_residual: f64,
    pub fitted_residual: f64,
    pub printed_residual: f64,
    pub samples: usize,
}

/// Evaluate `-P1'/2 + P1^2/4 + P2` at `taus` and compare it with the
/// closed-form, fitted and printed coefficient lists.
pub fn normal_form_oracle(c: &CoefficientSet, taus: &[f64]) -> Result<NormalFormOracle, CertifyError> {
    let nf = normal_form(c)?;
    let red = reduce_to_second_order(&c.linear())?;
    let printed = printed_normal_form(c);
    let d = nf.pole_d;
    let basis = |x: f64| {
        let u = x + d;
        [x * x, x, 1.0, 1.0 / u, 1.0 / (u * u)]
    };
    // Weighted rows so every sample counts relative to its own magnitude.
    let rows: Vec<(f64, [f64; 5], f64)> = taus
        .iter()
        .map(|&x| (red.invariant(x), basis(x), red.invariant_scale(x).max(f64::MIN_POSITIVE)))
        .collect();
    let m = DMatrix::from_fn(rows.len(), 5, |i, j| rows[i].1[j] / rows[i].2);
    let rhs = DVector::from_iterator(rows.len(), rows.iter().map(|r| r.0 / r.2));
    let sol = m.svd(true, true).solve(&rhs, 1e-300).map_err(|_| CertifyError::OracleFit)?;
    let fitted = [sol[0], sol[1], sol[2], sol[3], sol[4]];
    let residual = |k: &[f64; 5]| {
        rows.iter()
            .map(|(v, b, s)| (v - b.iter().zip(k).map(|(x, y)| x * y).sum::<f64>()).abs() / s)
            .fold(0.0, f64::max)
    };
    Ok(NormalFormOracle {
        fitted,
        closed_form: nf.as_array(),
        printed: printed.as_array(),
        closed_form_residual: residual(&nf.as_array()),
        fitted_residual: residual(&fitted),
        printed_residual: residual(&printed.as_array()),
        samples: taus.len(),
    })
}

// Dense f64 polynomials, lowest degree first.
fn padd(p: &[f64], q: &[f64]) -> Vec<f64> {
    (0..p.len().max(q.len())).map(|i| p.get(i).unwrap_or(&0.0) + q.get(i).unwrap_or(&0.0)).collect()
}

fn pmul(p: &[f64], q: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; p.len() + q.len() - 1];
    for (i, a) in p.iter().enumerate() {
        for (j, b) in q.iter().enumerate() {
            out[i + j] += a * b;
        }
    }
    out
}

fn pscale(p: &[f64], s: f64) -> Vec<f64> {
    p.iter().map(|a| a * s).collect()
}

fn peval(p: &[f64], x: f64) -> f64 {
    p.iter().rev().fold(0.0, |acc, a| acc * x + a)
}

/// Quotient of `p / (x + d)`, remainder dropped.
fn pdiv_linear(p: &[f64], d: f64) -> Vec<f64> {
    let mut q = vec![0.0; p.len().saturating_sub(1)];
    let mut carry = 0.0;
    for i in (1..p.len()).rev() {
        carry = p[i] - d * carry;
        q[i - 1] = carry;
    }
    q
}

fn pderiv(p: &[f64]) -> Vec<f64> {
    p.iter().enumerate().skip(1).map(|(i, a)| i as f64 * a).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NTauReport {
    /// Max of `|N - (N2 u^2 + N1 u + N0)| / scale` with `u = tau + delta`.
    pub max_rel_discrepancy: f64,
    /// `N(-delta)` and `N'(-delta)` of the printed `N`: the values `N0` and `N1` must take.
    pub corrected_n0: f64,
    pub corrected_n1: f64,
    /// Quotient `(N - N1 u - N0) / u^2`, lowest degree first.
    pub corrected_n2: Vec<f64>,
    pub printed_n0: f64,
    pub printed_n1: f64,
    pub n0_matches: bool,
    pub samples: usize,
}

/// The printed `N(tau)` as a polynomial.
fn n_tau_poly(c: &CoefficientSet) -> Vec<f64> {
    let (ia, ia2) = (1.0 / c.a12, 1.0 / (c.a12 * c.a12));
    let a12t = [c.b12, c.a12];
    let a11t = [c.b11, c.a11];
    let l = padd(&[c.a12], &pmul(&a12t, &[0.0, c.a22]));
    let mut n = pscale(&l, -0.5 * ia);
    n = padd(&n, &pscale(&pmul(&a12t, &[c.b12 * c.a22, 2.0 * (c.a12 + c.a22)]), -0.5 * ia2));
    n = padd(&n, &pscale(&pmul(&pmul(&a11t, &a12t), &l), 0.5 * ia2));
    n = padd(&n, &pscale(&pmul(&l, &l), 0.25 * ia2));
    padd(&n, &pscale(&pmul(&pmul(&a12t, &a11t), &l), -ia2))
}

/// Compare the printed `N(tau)` with its printed three-term decomposition.
pub fn n_tau_expansion_check(c: &CoefficientSet, taus: &[f64]) -> Result<NTauReport, CertifyError> {
    if c.a12 == 0.0 {
        return Err(CertifyError::A12Zero);
    }
    let d = c.delta();
    let n = n_tau_poly(c);
    let n2 = |x: f64| (0.25 * c.a22 - 0.5 * c.a11 * c.a22) * x * x - (0.5 * c.b11 * c.a22 + 1.0) * x - 0.5 * c.a11;
    let n1 = 0.5 * d * (c.a11 - c.a22) - 0.5 * c.b11;
    let n0 = -0.25;
    let mut worst = 0.0f64;
    for &x in taus {
        let u = x + d;
        let lhs = peval(&n, x);
        let rhs = n2(x) * u * u + n1 * u + n0;
        let scale = lhs.abs().max(rhs.abs()).max(1.0);
        worst = worst.max((lhs - rhs).abs() / scale);
    }
    let c0 = peval(&n, -d);
    let c1 = peval(&pderiv(&n), -d);
    // N - c1 u - c0 is divisible by u^2 = (x + d)^2.
    let rest = padd(&n, &[-c0 - c1 * d, -c1]);
    let quotient = pdiv_linear(&pdiv_linear(&rest, d), d);
    Ok(NTauReport {
        max_rel_discrepancy: worst,
        corrected_n0: c0,
        corrected_n1: c1,
        corrected_n2: quotient,
        printed_n0: n0,
        printed_n1: n1,
        n0_matches: (c0 - n0).abs() <= 1e-9 * (1.0 + c0.abs()),
        samples: taus.len(),
    })
}
