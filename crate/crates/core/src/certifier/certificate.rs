use super::{
    assemble_coefficients, choose_b2hat, cross_validate, normal_form, normal_form_oracle, printed_normal_form,
    r2_terms, reduce_to_second_order, validate_integral_curve, B2Choice, CertifyError, CoefficientSet,
    CriticalPointRecord, CrossValidation, IntegralCurveParams, NormalFormCoeffs, NormalFormOracle, RM2,
};
use crate::exact::{rat, rational_from_f64, Rational};
use crate::flow::{find_critical_point, ActivationProfile, CriticalPoint, Dataset, FlowError, Moments};
use crate::kovacic::{classify_with, lemma1_check, GaloisVerdict, KovacicOptions, Lemma1Coeffs, NormalFormODE, Verdict};
use serde::Serialize;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CertifyConfig {
    pub crit_bracket: (f64, f64),
    /// Relative `|r2|` threshold for the `b2_hat` scan.
    pub r2_threshold: f64,
    pub b2_hat: Option<f64>,
    pub lemma1_tol: f64,
    pub rationalize: bool,
    pub condition3_literal: bool,
    /// Horizon in `t` for the cross-validation.
    pub crossval_t_end: f64,
    pub crossval_max_residual: f64,
    pub curve_max_residual: f64,
}

impl Default for CertifyConfig {
    fn default() -> Self {
        Self {
            crit_bracket: (-10.0, 10.0),
            r2_threshold: 1e-8,
            b2_hat: None,
            lemma1_tol: 1e-12,
            rationalize: false,
            condition3_literal: false,
            crossval_t_end: 5.0,
            crossval_max_residual: 1e-6,
            curve_max_residual: 1e-8,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Gate {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

/// Exact second opinion on the snapped normal form.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RationalizedCheck {
    pub r: String,
    pub kovacic: GaloisVerdict,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GaloisCertificate {
    pub schema_version: u32,
    pub tool: &'static str,
    pub tool_version: &'static str,
    pub verdict: Verdict,
    pub failed_gate: Option<String>,
    pub activation: String,
    pub dataset_digest: String,
    pub moments: Moments,
    pub critical_point: Option<CriticalPointRecord>,
    pub b2_hat: Option<f64>,
    pub b2_scan: Option<B2Choice>,
    pub curve: Option<IntegralCurveParams>,
    pub curve_residual: Option<f64>,
    pub coefficients: Option<CoefficientSet>,
    pub normal_form: Option<NormalFormCoeffs>,
    /// Alternative coefficient list, recorded for comparison only.
    pub printed_normal_form: Option<NormalFormCoeffs>,
    pub normal_form_oracle: Option<NormalFormOracle>,
    pub lemma1: Option<GaloisVerdict>,
    pub rationalized: Option<RationalizedCheck>,
    pub cross_validation: Option<CrossValidation>,
    pub gates: Vec<Gate>,
    pub narrative: String,
}

impl GaloisCertificate {
    /// Pretty JSON with keys in declaration order and a trailing newline.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("certificate is serializable");
        s.push('\n');
        s
    }
}

const CERTIFIED_TEXT: &str = "The variational equation along the explicit integral curve reduces to y'' = r(tau) y \
whose differential Galois group is SL2(C). SL2(C) is not abelian, so the gradient flow is not B-integrable in the \
meromorphic category, and no Liouvillian function describes its full dynamics.";

const NOT_CLAIMED: &str = "This is not a claim that the flow is integrable or that a Liouvillian solution exists.";

/// Sample points in `(0, 1]` for the normal-form oracle, nudged away from the pole.
fn oracle_taus(delta: f64) -> Vec<f64> {
    (0..20)
        .map(|k| {
            let x = 0.05 + 0.95 * k as f64 / 19.0;
            if (x + delta).abs() < 1e-3 {
                x + 2e-3
            } else {
                x
            }
        })
        .collect()
}

struct Builder {
    cert: GaloisCertificate,
}

impl Builder {
    fn gate(&mut self, name: &'static str, passed: bool, detail: impl Into<String>) {
        self.cert.gates.push(Gate { name, passed, detail: detail.into() });
    }

    fn fail(mut self, gate: &str, reason: String) -> GaloisCertificate {
        self.cert.verdict = Verdict::PreconditionFailed;
        self.cert.failed_gate = Some(gate.to_string());
        self.cert.narrative = format!("Precondition {gate} failed: {reason}. No claim is made.");
        self.cert
    }
}

fn snap(x: f64) -> Rational {
    rational_from_f64(x, 1_000_000).unwrap_or_else(|| rat(0, 1))
}

fn rationalized(nf: &NormalFormCoeffs, opts: KovacicOptions) -> Option<RationalizedCheck> {
    let c = Lemma1Coeffs {
        a2: snap(nf.r2).into(),
        a1: snap(nf.r1).into(),
        a0: snap(nf.r0).into(),
        am1: snap(nf.rm1).into(),
        b: rat(RM2.0, RM2.1).into(),
        d: snap(nf.pole_d).into(),
    };
    let r = c.to_rational_function()?;
    let ode = NormalFormODE::new(r);
    Some(RationalizedCheck { r: ode.r.to_string(), kovacic: classify_with(&ode, opts) })
}

fn flow_gate_name(e: &FlowError) -> &'static str {
    match e {
        FlowError::DegenerateCritical { .. } => "DegenerateCritical",
        _ => "NoCriticalPoint",
    }
}

pub fn certify(ds: &Dataset, act: &ActivationProfile, cfg: &CertifyConfig) -> GaloisCertificate {
    let m = ds.moments();
    let mut b = Builder {
        cert: GaloisCertificate {
            schema_version: SCHEMA_VERSION,
            tool: "gflow",
            tool_version: env!("CARGO_PKG_VERSION"),
            verdict: Verdict::Inconclusive,
            failed_gate: None,
            activation: act.name.to_string(),
            dataset_digest: ds.digest(),
            moments: m,
            critical_point: None,
            b2_hat: None,
            b2_scan: None,
            curve: None,
            curve_residual: None,
            coefficients: None,
            normal_form: None,
            printed_normal_form: None,
            normal_form_oracle: None,
            lemma1: None,
            rationalized: None,
            cross_validation: None,
            gates: Vec::new(),
            narrative: String::new(),
        },
    };

    let crit: CriticalPoint = match find_critical_point(act, cfg.crit_bracket) {
        Ok(c) => c,
        Err(e) => {
            b.gate("critical_point", false, e.to_string());
            return b.fail(flow_gate_name(&e), e.to_string());
        }
    };
    b.cert.critical_point = Some(crit.into());
    b.gate("critical_point", true, format!("sigma'({}) = 0, sigma = {}, sigma'' = {}", crit.b_hat, crit.sigma_at, crit.sigma2_at));

    if m.xbar_zero {
        b.gate("xbar_nonzero", false, format!("xbar = {}", m.xbar));
        return b.fail("XbarZero", format!("the inputs sum to zero (xbar = {})", m.xbar));
    }
    b.gate("xbar_nonzero", true, format!("xbar = {}", m.xbar));

    let b2_hat = match cfg.b2_hat {
        Some(v) => v,
        None => match choose_b2hat(&m, &crit, cfg.r2_threshold, r2_terms) {
            Ok(choice) => {
                let v = choice.b2_hat;
                b.cert.b2_scan = Some(choice);
                v
            }
            Err(e) => {
                b.gate("r2_nonzero", false, e.to_string());
                return b.fail("R2Vanishes", e.to_string());
            }
        },
    };
    b.cert.b2_hat = Some(b2_hat);
    let params = match IntegralCurveParams::new(crit, b2_hat, &m) {
        Ok(p) => p,
        Err(e) => {
            b.gate("amplitude_nonzero", false, e.to_string());
            return b.fail("ZeroAmplitude", e.to_string());
        }
    };
    b.cert.curve = Some(params);

    let tgrid: Vec<f64> = (0..=100).map(|i| 0.05 * i as f64).collect();
    let curve_res = validate_integral_curve(&params, ds, act, &tgrid);
    b.cert.curve_residual = Some(curve_res);
    b.gate("integral_curve", curve_res <= cfg.curve_max_residual, format!("max residual {curve_res:e} on t in [0, 5]"));

    let pipeline = (|| -> Result<_, CertifyError> {
        let coeffs = assemble_coefficients(&m, &crit, &params)?;
        let nf = normal_form(&coeffs)?;
        let red = reduce_to_second_order(&coeffs.linear())?;
        Ok((coeffs, nf, red))
    })();
    let (coeffs, nf, red) = match pipeline {
        Ok(v) => v,
        Err(e) => {
            b.gate("normal_form", false, e.to_string());
            return b.fail("A12Zero", e.to_string());
        }
    };
    b.cert.coefficients = Some(coeffs);
    b.cert.normal_form = Some(nf);
    b.cert.printed_normal_form = Some(printed_normal_form(&coeffs));
    b.cert.normal_form_oracle = normal_form_oracle(&coeffs, &oracle_taus(nf.pole_d)).ok();

    let terms = r2_terms(&coeffs);
    let scale = terms.iter().fold(0.0f64, |s, t| s.max(t.abs()));
    if nf.r2 == 0.0 || nf.r2.abs() < cfg.r2_threshold * scale {
        b.gate("r2_nonzero", false, format!("r2 = {:e}, scale {:e}", nf.r2, scale));
        return b.fail("R2Vanishes", format!("r2 = {:e} is below the threshold", nf.r2));
    }
    b.gate("r2_nonzero", true, format!("r2 = {:e}, scale {:e}", nf.r2, scale));

    let l1 = lemma1_check(
        &Lemma1Coeffs {
            a2: nf.r2.into(),
            a1: nf.r1.into(),
            a0: nf.r0.into(),
            am1: nf.rm1.into(),
            b: rat(RM2.0, RM2.1).into(),
            d: nf.pole_d.into(),
        },
        cfg.lemma1_tol,
    );
    let l1_ok = l1.verdict == Verdict::CertifiedSL2;
    b.gate("lemma1", l1_ok, l1.narrative.clone());
    let l1_narrative = l1.narrative.clone();
    b.cert.lemma1 = Some(l1);

    if cfg.rationalize {
        let opts = KovacicOptions { condition3_literal: cfg.condition3_literal, ..KovacicOptions::default() };
        let rc = rationalized(&nf, opts);
        match &rc {
            Some(rc) => b.gate(
                "rationalized_kovacic",
                rc.kovacic.verdict == Verdict::CertifiedSL2,
                format!("{:?} for r = {}", rc.kovacic.verdict, rc.r),
            ),
            None => b.gate("rationalized_kovacic", false, "normal form could not be rationalized"),
        }
        b.cert.rationalized = rc;
    }

    let cv = cross_validate(&params, ds, act, &coeffs, &red, &nf, cfg.crossval_t_end, 200);
    let cv_ok = match &cv {
        Ok(c) => {
            let ok = c.max_rel_residual <= cfg.crossval_max_residual;
            b.gate("cross_validation", ok, format!("max relative residual {:e}", c.max_rel_residual));
            ok
        }
        Err(e) => {
            b.gate("cross_validation", false, e.to_string());
            false
        }
    };
    b.cert.cross_validation = cv.ok();

    let all_ok = b.cert.gates.iter().all(|g| g.passed);
    if all_ok && l1_ok && cv_ok {
        b.cert.verdict = Verdict::CertifiedSL2;
        b.cert.narrative = CERTIFIED_TEXT.to_string();
    } else {
        let failed: Vec<&str> = b.cert.gates.iter().filter(|g| !g.passed).map(|g| g.name).collect();
        let tail = if l1_ok { NOT_CLAIMED } else { l1_narrative.as_str() };
        b.cert.narrative = format!("Inconclusive: gate(s) {} did not pass. {tail}", failed.join(", "));
    }
    b.cert
}
