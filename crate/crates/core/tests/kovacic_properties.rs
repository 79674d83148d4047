use gflow_core::exact::{int, rat, parse_rational_function, Rational, RationalFunction};
use gflow_core::kovacic::{classify, lemma1_check, Lemma1Coeffs, NormalFormODE, Scalar, Verdict};
use proptest::prelude::*;

fn ode(s: &str) -> NormalFormODE {
    NormalFormODE::parse(s).unwrap()
}

#[test]
fn known_liouvillian_equations_are_never_certified() {
    // Solutions, in order: e^t, t^2, sqrt(t), e^{t^2/2}, e^{2t}, t^3, t^{1/4},
    // (1 - 1/t) e^t.
    for s in ["1", "2/t^2", "-1/(4*t^2)", "t^2 + 1", "4", "6/t^2", "-3/(16*t^2)", "1 + 2/t^2"] {
        let v = classify(&ode(s));
        assert_ne!(v.verdict, Verdict::CertifiedSL2, "{s}: {}", v.narrative);
    }
}

/// Exact check that `y = exp(int u)` solves `y'' = r y`, i.e. `u' + u^2 = r`.
fn riccati_residual(u: &RationalFunction, r: &RationalFunction) -> RationalFunction {
    u.derivative().add(&u.mul(u)).sub(r)
}

#[test]
fn fast_path_certifies_an_equation_with_a_liouvillian_solution() {
    // r = t^2 + 2 - 1/(t+1) - 1/(4 (t+1)^2) has y = sqrt(t+1) exp(t^2/2).
    let r = parse_rational_function("t^2 + 2 - 1/(t+1) - 1/(4*(t+1)^2)").unwrap();
    let u = parse_rational_function("t + 1/(2*(t+1))").unwrap();
    assert!(riccati_residual(&u, &r).is_zero());

    let c = Lemma1Coeffs {
        a2: int(1).into(),
        a1: int(0).into(),
        a0: int(2).into(),
        am1: int(-1).into(),
        b: rat(-1, 4).into(),
        d: int(1).into(),
    };
    assert_eq!(c.to_rational_function().unwrap(), r);
    // The fast path only inspects a2 and b, and so misses the nonzero
    // constant b_inf = a0 - a1^2/(4 a2) at infinity.
    assert_eq!(lemma1_check(&c, 1e-12).verdict, Verdict::CertifiedSL2);
    // The full condition check keeps Case 1 alive, as it must.
    let full = classify(&NormalFormODE::new(r));
    assert_eq!(full.verdict, Verdict::Inconclusive);
    assert!(!full.reports[0].ruled_out());
}

fn small_rational() -> impl Strategy<Value = Rational> {
    (-12i64..12, 1i64..6).prop_map(|(n, d)| rat(n, d))
}

/// Leading coefficients whose square root is irrational or imaginary.
fn non_square() -> impl Strategy<Value = Rational> {
    prop::sample::select(vec![2i64, 3, 5, 6, 7, 10, -1, -2, -3]).prop_map(int)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, ..ProptestConfig::default() })]

    #[test]
    fn double_pole_family_is_certified_for_every_shift(d in small_rational()) {
        let r = parse_rational_function("t^2").unwrap().add(
            &RationalFunction::new(
                gflow_core::exact::Polynomial::constant(rat(-1, 4)),
                gflow_core::exact::Polynomial::linear(&-d.clone()).pow(2),
            ).unwrap(),
        );
        prop_assert_eq!(classify(&NormalFormODE::new(r)).verdict, Verdict::CertifiedSL2);
    }

    #[test]
    fn verdicts_are_translation_invariant(
        idx in 0usize..8,
        c in small_rational(),
    ) {
        let samples = [
            "t", "1", "2/t^2", "t^2 - 1/(4*(t+1)^2)", "t^2 + 3/(t-2)^2",
            "1/t^4 + 2/t^3 + 1/t^2", "3/(16*t^2) + 1/(t*(t-1))", "t^3 + 1/t",
        ];
        let r = parse_rational_function(samples[idx]).unwrap();
        let a = classify(&NormalFormODE::new(r.clone()));
        let b = classify(&NormalFormODE::new(r.shift(&c)));
        prop_assert_eq!(a.verdict, b.verdict);
        for (x, y) in a.reports.iter().zip(&b.reports) {
            prop_assert_eq!(x.structurally_applicable, y.structurally_applicable);
            prop_assert_eq!(x.condition_excludes, y.condition_excludes);
        }
    }

    #[test]
    fn fast_path_agrees_with_full_check(
        a2 in non_square(),
        a1 in small_rational(),
        a0 in small_rational(),
        am1 in small_rational(),
        b in small_rational(),
        d in small_rational(),
    ) {
        prop_assume!(b != int(0));
        let c = Lemma1Coeffs {
            a2: Scalar::Exact(a2),
            a1: Scalar::Exact(a1),
            a0: Scalar::Exact(a0),
            am1: Scalar::Exact(am1),
            b: Scalar::Exact(b),
            d: Scalar::Exact(d),
        };
        let fast = lemma1_check(&c, 1e-12);
        let full = classify(&NormalFormODE::new(c.to_rational_function().unwrap()));
        prop_assert_eq!(fast.verdict, full.verdict, "{}", full.narrative);
    }
}
