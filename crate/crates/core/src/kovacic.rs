//! Necessary conditions of Kovacic's algorithm for `y'' = r y`.
//!
//! Each of the three cases is first tested for structural applicability
//! (pole orders and the order at infinity), then against its arithmetic
//! condition. When every case is ruled out the differential Galois group is
//! SL2(C). A surviving case only means the test could not rule it out.

use crate::exact::{
    find_poles, laurent_at, laurent_sqrt_at, parse_rational_function, rat, rational_from_f64,
    AlgebraError, Anchor, ParseError, PoleDatum, Rational, RationalFunction, SurdSum,
};
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, Zero};
use serde::Serialize;
use std::collections::BTreeSet;
use thiserror::Error;

/// The equation `y'' = r y`, with `r` in canonical form.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NormalFormODE {
    pub r: RationalFunction,
}

impl NormalFormODE {
    pub fn new(r: RationalFunction) -> Self {
        Self { r }
    }

    pub fn parse(src: &str) -> Result<Self, ParseError> {
        parse_rational_function(src).map(Self::new)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Scalar {
    Exact(Rational),
    Float(f64),
}

impl Scalar {
    pub fn to_f64(&self) -> f64 {
        match self {
            Scalar::Exact(q) => crate::exact::rational_to_f64(q),
            Scalar::Float(x) => *x,
        }
    }

    fn is_nonzero(&self, tol: f64) -> bool {
        match self {
            Scalar::Exact(q) => !q.is_zero(),
            Scalar::Float(x) => x.abs() > tol,
        }
    }
}

impl From<Rational> for Scalar {
    fn from(q: Rational) -> Self {
        Scalar::Exact(q)
    }
}

impl From<f64> for Scalar {
    fn from(x: f64) -> Self {
        Scalar::Float(x)
    }
}

/// `r = a2 t^2 + a1 t + a0 + am1/(t+d) + b/(t+d)^2`.
#[derive(Clone, Debug, PartialEq)]
pub struct Lemma1Coeffs {
    pub a2: Scalar,
    pub a1: Scalar,
    pub a0: Scalar,
    pub am1: Scalar,
    pub b: Scalar,
    pub d: Scalar,
}

impl Lemma1Coeffs {
    /// The rational function, when every coefficient is exact.
    pub fn to_rational_function(&self) -> Option<RationalFunction> {
        let q = |s: &Scalar| match s {
            Scalar::Exact(q) => Some(q.clone()),
            Scalar::Float(_) => None,
        };
        let (a2, a1, a0, am1, b, d) =
            (q(&self.a2)?, q(&self.a1)?, q(&self.a0)?, q(&self.am1)?, q(&self.b)?, q(&self.d)?);
        use crate::exact::Polynomial;
        let poly = RationalFunction::from_polynomial(Polynomial::new(vec![a0, a1, a2]));
        let lin = Polynomial::new(vec![d, Rational::from_integer(1.into())]);
        let p1 = RationalFunction::new(Polynomial::constant(am1), lin.clone()).ok()?;
        let p2 = RationalFunction::new(Polynomial::constant(b), lin.pow(2)).ok()?;
        Some(poly.add(&p1).add(&p2))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Verdict {
    CertifiedSL2,
    Inconclusive,
    PreconditionFailed,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CaseReport {
    pub case_id: u8,
    pub structurally_applicable: bool,
    pub condition_excludes: bool,
    pub evidence: Vec<String>,
}

impl CaseReport {
    /// Ruled out, either structurally or by its condition.
    pub fn ruled_out(&self) -> bool {
        !self.structurally_applicable || self.condition_excludes
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GaloisVerdict {
    pub verdict: Verdict,
    pub reports: Vec<CaseReport>,
    pub narrative: String,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct KovacicOptions {
    /// Quantify Case 1 signs independently per pole instead of one shared sign.
    pub strict_signs: bool,
    /// Read the Case 3 set at infinity as a union with Z (never excludes).
    pub condition3_literal: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum KovacicError {
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error("case {0} is not structurally applicable")]
    NotApplicable(u8),
}

/// Alpha values of Case 1 at one finite pole.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PoleAlpha {
    pub location: SurdSum,
    pub order: usize,
    pub plus: SurdSum,
    pub minus: SurdSum,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Case1Data {
    pub poles: Vec<PoleAlpha>,
    pub infinity_plus: SurdSum,
    pub infinity_minus: SurdSum,
}

struct Structure {
    r: RationalFunction,
    poles: Vec<PoleDatum>,
    ord_inf: i64,
}

impl Structure {
    fn of(ode: &NormalFormODE) -> Result<Self, AlgebraError> {
        let ord_inf = ode.r.order_at_infinity()?;
        let poles = find_poles(&ode.r)?;
        Ok(Self { r: ode.r.clone(), poles, ord_inf })
    }

    fn case1_applicable(&self) -> bool {
        let poles_ok = self.poles.iter().all(|p| p.order == 1 || p.order % 2 == 0);
        let inf_ok = self.ord_inf % 2 == 0 || self.ord_inf > 2;
        poles_ok && inf_ok
    }

    fn case2_applicable(&self) -> bool {
        self.poles.iter().any(|p| p.order >= 2)
    }

    fn case3_applicable(&self) -> bool {
        self.poles.iter().any(|p| p.order <= 2) && self.ord_inf >= 2
    }

    /// Coefficient of `x^-2` at infinity.
    fn gamma_inf(&self) -> Result<SurdSum, AlgebraError> {
        if self.ord_inf > 2 {
            return Ok(SurdSum::zero());
        }
        Ok(laurent_at(&self.r, &Anchor::Infinity, 3)?.coeff(2))
    }
}

fn one_plus_four(b: &SurdSum) -> SurdSum {
    &SurdSum::one() + &b.scale(&Rational::from_integer(4.into()))
}

/// `((1 + s)/2, (1 - s)/2)` with `s = sqrt(1 + 4b)`.
fn regular_alphas(b: &SurdSum) -> Result<(SurdSum, SurdSum), AlgebraError> {
    let s = one_plus_four(b).sqrt()?;
    let half = rat(1, 2);
    Ok(((&SurdSum::one() + &s).scale(&half), (&SurdSum::one() - &s).scale(&half)))
}

/// Sum of `s_i s_j` over `i + j = k` with both indices at most `max`.
fn truncated_square_coeff(s: &[SurdSum], k: usize, max: usize) -> SurdSum {
    let mut acc = SurdSum::zero();
    for i in 0..=k.min(max) {
        let j = k - i;
        if j <= max {
            acc = &acc + &(&s[i] * &s[j]);
        }
    }
    acc
}

fn irregular_alphas(
    r: &RationalFunction,
    anchor: &Anchor,
    v: usize,
    at_infinity: bool,
) -> Result<(SurdSum, SurdSum), AlgebraError> {
    // [sqrt r] keeps sqrt-series indices 0..=max.
    let max = if at_infinity { v } else { v.saturating_sub(2) };
    let sq = laurent_sqrt_at(r, anchor, max + 1)?;
    let rs = laurent_at(r, anchor, v + 2)?;
    let a = sq.coefficients[0].clone();
    // Target exponent one above the sqrt leading term: index v+1 at
    // infinity (x^(v-1)), index v-1 at a finite pole ((x-c)^-(v+1)).
    let k = if at_infinity { v + 1 } else { v - 1 };
    let b = &rs.coefficients[k] - &truncated_square_coeff(&sq.coefficients, k, max);
    let ratio = b.checked_div(&a)?;
    let half = rat(1, 2);
    let vv = SurdSum::from_integer(v as i64);
    let (p, m) = if at_infinity {
        (&ratio - &vv, &(-&ratio) - &vv)
    } else {
        (&ratio + &vv, &(-&ratio) + &vv)
    };
    Ok((p.scale(&half), m.scale(&half)))
}

fn case1_from(st: &Structure) -> Result<Case1Data, KovacicError> {
    if !st.case1_applicable() {
        return Err(KovacicError::NotApplicable(1));
    }
    let mut poles = Vec::new();
    for p in &st.poles {
        let (plus, minus) = match p.order {
            1 => (SurdSum::one(), SurdSum::one()),
            2 => regular_alphas(&p.pf_coefficients[1])?,
            n => irregular_alphas(&st.r, &Anchor::Finite(p.location.clone()), n / 2, false)?,
        };
        poles.push(PoleAlpha { location: p.location.clone(), order: p.order, plus, minus });
    }
    let (infinity_plus, infinity_minus) = if st.ord_inf > 2 {
        (SurdSum::zero(), SurdSum::one())
    } else if st.ord_inf == 2 {
        regular_alphas(&laurent_at(&st.r, &Anchor::Infinity, 1)?.coefficients[0])?
    } else {
        irregular_alphas(&st.r, &Anchor::Infinity, (-st.ord_inf / 2) as usize, true)?
    };
    Ok(Case1Data { poles, infinity_plus, infinity_minus })
}

pub fn case1_data(ode: &NormalFormODE) -> Result<Case1Data, KovacicError> {
    case1_from(&Structure::of(ode)?)
}

/// Every attainable `sum_c choice(c)`, deduplicated.
fn sums<T: Clone + PartialEq>(
    choices: &[Vec<T>],
    zero: T,
    add: impl Fn(&T, &T) -> T,
) -> Vec<T> {
    let mut acc = vec![zero];
    for set in choices {
        let mut next: Vec<T> = Vec::new();
        for a in &acc {
            for e in set {
                let s = add(a, e);
                if !next.contains(&s) {
                    next.push(s);
                }
            }
        }
        acc = next;
    }
    acc
}

fn condition1(st: &Structure, opts: KovacicOptions, ev: &mut Vec<String>) -> Result<bool, KovacicError> {
    let data = case1_from(st)?;
    for p in &data.poles {
        ev.push(format!("pole {} (order {}): alpha = {{{}, {}}}", p.location, p.order, p.plus, p.minus));
    }
    ev.push(format!("infinity (order {}): alpha = {{{}, {}}}", st.ord_inf, data.infinity_plus, data.infinity_minus));
    let pole_sums: Vec<SurdSum> = if opts.strict_signs {
        let choices: Vec<Vec<SurdSum>> =
            data.poles.iter().map(|p| vec![p.plus.clone(), p.minus.clone()]).collect();
        sums(&choices, SurdSum::zero(), |a, b| a + b)
    } else {
        let plus = data.poles.iter().fold(SurdSum::zero(), |a, p| &a + &p.plus);
        let minus = data.poles.iter().fold(SurdSum::zero(), |a, p| &a + &p.minus);
        vec![plus, minus]
    };
    let mut excluded = true;
    for ai in [&data.infinity_plus, &data.infinity_minus] {
        for s in &pole_sums {
            let d = ai - s;
            if d.is_nonneg_integer() {
                ev.push(format!("difference {d} is a nonnegative integer"));
                excluded = false;
            }
        }
    }
    Ok(excluded)
}

fn int_members(candidates: impl IntoIterator<Item = SurdSum>) -> Vec<BigInt> {
    let set: BTreeSet<BigInt> = candidates.into_iter().filter_map(|s| s.as_integer()).collect();
    set.into_iter().collect()
}

fn e_set_case2(b: &SurdSum) -> Result<Vec<BigInt>, AlgebraError> {
    let s = one_plus_four(b).sqrt()?;
    let two = SurdSum::from_integer(2);
    let two_s = s.scale(&Rational::from_integer(2.into()));
    Ok(int_members([two.clone(), &two + &two_s, &two - &two_s]))
}

fn render_set(s: &[BigInt]) -> String {
    let items: Vec<String> = s.iter().map(|x| x.to_string()).collect();
    format!("{{{}}}", items.join(", "))
}

fn condition2(st: &Structure, ev: &mut Vec<String>) -> Result<bool, KovacicError> {
    if !st.case2_applicable() {
        return Err(KovacicError::NotApplicable(2));
    }
    let mut choices = Vec::new();
    for p in &st.poles {
        let e = match p.order {
            1 => vec![BigInt::from(4)],
            2 => e_set_case2(&p.pf_coefficients[1])?,
            n => vec![BigInt::from(n)],
        };
        ev.push(format!("E at {} (order {}) = {}", p.location, p.order, render_set(&e)));
        choices.push(e);
    }
    let e_inf = if st.ord_inf > 2 {
        vec![BigInt::from(0), BigInt::from(2), BigInt::from(4)]
    } else if st.ord_inf == 2 {
        e_set_case2(&laurent_at(&st.r, &Anchor::Infinity, 1)?.coefficients[0])?
    } else {
        vec![BigInt::from(st.ord_inf)]
    };
    ev.push(format!("E at infinity = {}", render_set(&e_inf)));
    Ok(excludes(&e_inf, &choices, 2, ev))
}

/// True iff no `(e_inf - sum e_c) / m` is a nonnegative integer.
fn excludes(e_inf: &[BigInt], choices: &[Vec<BigInt>], m: i64, ev: &mut Vec<String>) -> bool {
    let m = BigInt::from(m);
    let all = sums(choices, BigInt::zero(), |a, b| a + b);
    let mut excluded = true;
    for ei in e_inf {
        for s in &all {
            let d = ei - s;
            if !d.is_negative() && d.is_multiple_of(&m) {
                ev.push(format!("({ei} - {s}) / {m} = {} is a nonnegative integer", &d / &m));
                excluded = false;
            }
        }
    }
    excluded
}

fn e_set_case3(b: &SurdSum) -> Result<Vec<BigInt>, AlgebraError> {
    let s = one_plus_four(b).sqrt()?;
    let mut cands = Vec::new();
    for n in [4i64, 6, 12] {
        for k in -(n / 2)..=(n / 2) {
            cands.push(&SurdSum::from_integer(6) + &s.scale(&rat(12 * k, n)));
        }
    }
    Ok(int_members(cands))
}

fn condition3(st: &Structure, opts: KovacicOptions, ev: &mut Vec<String>) -> Result<bool, KovacicError> {
    if !st.case3_applicable() {
        return Err(KovacicError::NotApplicable(3));
    }
    if let Some(p) = st.poles.iter().find(|p| p.order > 2) {
        ev.push(format!("pole {} has order {} > 2, which Case 3 does not admit", p.location, p.order));
        return Ok(true);
    }
    let mut choices = Vec::new();
    for p in &st.poles {
        let e = match p.order {
            1 => vec![BigInt::from(12)],
            _ => e_set_case3(&p.pf_coefficients[1])?,
        };
        ev.push(format!("E at {} (order {}) = {}", p.location, p.order, render_set(&e)));
        choices.push(e);
    }
    if opts.condition3_literal {
        ev.push("E at infinity contains every integer (literal reading)".to_string());
        return Ok(false);
    }
    let gamma = st.gamma_inf()?;
    let e_inf = e_set_case3(&gamma)?;
    ev.push(format!("gamma = {gamma}, E at infinity = {}", render_set(&e_inf)));
    Ok(excludes(&e_inf, &choices, 12, ev))
}

fn run_check(
    ode: &NormalFormODE,
    f: impl FnOnce(&Structure, &mut Vec<String>) -> Result<bool, KovacicError>,
) -> Result<bool, KovacicError> {
    let st = Structure::of(ode)?;
    f(&st, &mut Vec::new())
}

pub fn check_condition1(ode: &NormalFormODE) -> Result<bool, KovacicError> {
    run_check(ode, |st, ev| condition1(st, KovacicOptions::default(), ev))
}

pub fn check_condition2(ode: &NormalFormODE) -> Result<bool, KovacicError> {
    run_check(ode, condition2)
}

pub fn check_condition3(ode: &NormalFormODE) -> Result<bool, KovacicError> {
    run_check(ode, |st, ev| condition3(st, KovacicOptions::default(), ev))
}

fn report(
    case_id: u8,
    applicable: bool,
    check: impl FnOnce(&mut Vec<String>) -> Result<bool, KovacicError>,
) -> Result<CaseReport, AlgebraError> {
    let mut evidence = Vec::new();
    let condition_excludes = if applicable {
        match check(&mut evidence) {
            Ok(x) => x,
            Err(KovacicError::Algebra(e)) => return Err(e),
            Err(KovacicError::NotApplicable(_)) => unreachable!("applicability checked"),
        }
    } else {
        evidence.push("pole structure does not admit this case".to_string());
        false
    };
    Ok(CaseReport { case_id, structurally_applicable: applicable, condition_excludes, evidence })
}

const INCONCLUSIVE_NOTE: &str = "Only necessary conditions are checked, so a surviving case is not \
a claim that a Liouvillian solution exists.";

fn verdict_from(reports: Vec<CaseReport>, subject: &str) -> GaloisVerdict {
    let survivors: Vec<String> =
        reports.iter().filter(|c| !c.ruled_out()).map(|c| c.case_id.to_string()).collect();
    if survivors.is_empty() {
        GaloisVerdict {
            verdict: Verdict::CertifiedSL2,
            reports,
            narrative: format!(
                "All three cases of Kovacic's algorithm are ruled out for {subject}. The differential \
                 Galois group is SL2(C) and the equation has no Liouvillian solution."
            ),
        }
    } else {
        GaloisVerdict {
            verdict: Verdict::Inconclusive,
            reports,
            narrative: format!(
                "Case(s) {} of Kovacic's algorithm could not be ruled out for {subject}. {INCONCLUSIVE_NOTE}",
                survivors.join(", ")
            ),
        }
    }
}

fn precondition_failed(reason: String) -> GaloisVerdict {
    GaloisVerdict {
        verdict: Verdict::PreconditionFailed,
        reports: Vec::new(),
        narrative: format!("Input outside the supported class: {reason}. No claim is made."),
    }
}

pub fn classify(ode: &NormalFormODE) -> GaloisVerdict {
    classify_with(ode, KovacicOptions::default())
}

pub fn classify_with(ode: &NormalFormODE, opts: KovacicOptions) -> GaloisVerdict {
    let st = match Structure::of(ode) {
        Ok(st) => st,
        Err(e) => return precondition_failed(e.to_string()),
    };
    let reports = (|| -> Result<Vec<CaseReport>, AlgebraError> {
        Ok(vec![
            report(1, st.case1_applicable(), |ev| condition1(&st, opts, ev))?,
            report(2, st.case2_applicable(), |ev| condition2(&st, ev))?,
            report(3, st.case3_applicable(), |ev| condition3(&st, opts, ev))?,
        ])
    })();
    match reports {
        Ok(reports) => verdict_from(reports, &format!("r = {}", ode.r)),
        Err(e) => precondition_failed(e.to_string()),
    }
}

enum Root {
    /// `-2 + sqrt(1 + 4b)` computed exactly.
    Exact(SurdSum),
    /// Floating value; `None` when `1 + 4b < 0`.
    Float(Option<f64>),
}

fn lemma1_root(b: &Scalar, tol: f64) -> Root {
    let exact = |q: Rational| {
        let s = SurdSum::sqrt_rational(&(Rational::from_integer(1.into()) + q * Rational::from_integer(4.into())));
        Root::Exact(&s - &SurdSum::from_integer(2))
    };
    match b {
        Scalar::Exact(q) => exact(q.clone()),
        Scalar::Float(x) => match rational_from_f64(*x, 1_000_000) {
            Some(q) if (crate::exact::rational_to_f64(&q) - x).abs() < tol => exact(q),
            _ => {
                let disc = 1.0 + 4.0 * x;
                Root::Float((disc >= 0.0).then(|| disc.sqrt() - 2.0))
            }
        },
    }
}

/// Sufficient test for the special family `a2 t^2 + a1 t + a0 + am1/(t+d) + b/(t+d)^2`.
///
/// Certifies when `a2 != 0`, `b != 0` and `-2 + sqrt(1 + 4b)` is not a
/// nonnegative integer. Float inputs are compared against `tol`; `b` is
/// snapped to a nearby rational with denominator at most 10^6 first.
pub fn lemma1_check(c: &Lemma1Coeffs, tol: f64) -> GaloisVerdict {
    let subject = "the quadratic-plus-double-pole family";
    let mut failed = Vec::new();
    if !c.a2.is_nonzero(tol) {
        failed.push("a2 vanishes");
    }
    if !c.b.is_nonzero(tol) {
        failed.push("b vanishes");
    }
    let (root_text, in_n) = match lemma1_root(&c.b, tol) {
        Root::Exact(s) => (s.to_string(), s.is_nonneg_integer()),
        Root::Float(None) => ("non-real".to_string(), false),
        Root::Float(Some(v)) => (format!("{v:.12}"), v > -tol && (v - v.round()).abs() < tol),
    };
    if in_n {
        failed.push("-2 + sqrt(1 + 4b) is a nonnegative integer");
    }
    let evidence = vec![
        format!("a2 = {:.12e}, b = {:.12e}", c.a2.to_f64(), c.b.to_f64()),
        format!("-2 + sqrt(1 + 4b) = {root_text}"),
    ];
    let ok = failed.is_empty();
    let case = |id| CaseReport {
        case_id: id,
        structurally_applicable: true,
        condition_excludes: ok,
        evidence: evidence.clone(),
    };
    let reports = vec![
        case(1),
        case(2),
        CaseReport {
            case_id: 3,
            structurally_applicable: false,
            condition_excludes: false,
            evidence: vec!["order at infinity is -2 < 2".to_string()],
        },
    ];
    let mut v = verdict_from(reports, subject);
    if !ok {
        v.narrative = format!(
            "The sufficient test for {subject} does not apply: {}. {INCONCLUSIVE_NOTE}",
            failed.join("; ")
        );
    }
    v
}
