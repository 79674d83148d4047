//! Numerical checks of the reduction and of the normal form against the
//! variational equation integrated in `t`.

use super::{CertifyError, CoefficientSet, IntegralCurveParams, LinearCoefficients, NormalFormCoeffs, ReducedODE};
use crate::flow::{integrate, ActivationProfile, Dataset, IntegrateOptions};
use crate::variational::{ve_along_curve, VEState};
use serde::Serialize;

fn tight() -> IntegrateOptions {
    IntegrateOptions::tolerances(1e-11, 1e-13)
}

fn grid(x0: f64, x1: f64, n: usize) -> impl Iterator<Item = f64> {
    (0..=n).map(move |i| x0 + (x1 - x0) * i as f64 / n as f64)
}

/// Integrate `eps' = (A x + B) eps` and `g'' = P1 g' + P2 g` from matched data
/// at `span.0`; returns `max |g - eps_1| / max |eps_1|` over a grid.
pub fn reduction_check(
    lin: &LinearCoefficients,
    red: &ReducedODE,
    span: (f64, f64),
    eps0: [f64; 2],
) -> Result<f64, CertifyError> {
    let (lo, hi) = (span.0.min(span.1), span.0.max(span.1));
    if red.pole().is_some_and(|c| lo <= c && c <= hi) {
        return Err(CertifyError::PoleInSpan);
    }
    let first = integrate(
        |x, y, dy| {
            dy[0] = lin.entry(0, 0, x) * y[0] + lin.entry(0, 1, x) * y[1];
            dy[1] = lin.entry(1, 0, x) * y[0] + lin.entry(1, 1, x) * y[1];
        },
        &eps0,
        span,
        tight(),
    )?;
    let x0 = span.0;
    let g0 = [eps0[0], lin.entry(0, 0, x0) * eps0[0] + lin.entry(0, 1, x0) * eps0[1]];
    let second = integrate(
        |x, y, dy| {
            dy[0] = y[1];
            dy[1] = red.p1(x) * y[1] + red.p2(x) * y[0];
        },
        &g0,
        span,
        tight(),
    )?;
    let (mut diff, mut size) = (0.0f64, 0.0f64);
    for x in grid(span.0, span.1, 50) {
        let (a, b) = (first.eval(x).ok_or(CertifyError::PoleInSpan)?, second.eval(x).ok_or(CertifyError::PoleInSpan)?);
        diff = diff.max((a[0] - b[0]).abs());
        size = size.max(a[0].abs());
    }
    Ok(diff / size)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CrossValidation {
    /// `tau` interval compared, from 1 downward.
    pub tau_range: (f64, f64),
    pub t_range: (f64, f64),
    /// Shortened to stay clear of `tau = -delta` when it falls inside.
    pub truncated_at_pole: bool,
    pub samples: usize,
    pub max_rel_residual: f64,
}

/// Initial perturbation for the cross-validation.
pub const CROSSVAL_ETA0: [f64; 4] = [1.0, 0.5, 0.0, 0.0];

/// Integrate the full VE along the curve in `t`, map `eps_w1` to
/// `y = g exp(-1/2 int P1)` in `tau = e^{-omega t}`, and compare with a direct
/// integration of `y'' = r(tau) y` over `tau in [e^{-omega t_end}, 1]`.
#[allow(clippy::too_many_arguments)]
pub fn cross_validate(
    params: &IntegralCurveParams,
    ds: &Dataset,
    act: &ActivationProfile,
    coeffs: &CoefficientSet,
    red: &ReducedODE,
    nf: &NormalFormCoeffs,
    t_end: f64,
    samples: usize,
) -> Result<CrossValidation, CertifyError> {
    let w = params.omega;
    let mut tau_lo = (-w * t_end).exp();
    let mut truncated = false;
    if let Some(c) = red.pole() {
        if c >= tau_lo && c < 1.0 {
            tau_lo = c + 0.05 * (1.0 - c);
            truncated = true;
        } else if (c - 1.0).abs() < 1e-12 {
            return Err(CertifyError::PoleInSpan);
        }
    }
    let t_stop = -tau_lo.ln() / w;

    let ve = ve_along_curve(params, ds, act, VEState::from_slice(&CROSSVAL_ETA0), (0.0, t_stop), tight())
        .map_err(CertifyError::from)?;

    let lin = coeffs.linear();
    let (g, h) = (CROSSVAL_ETA0[0], CROSSVAL_ETA0[1]);
    let dg = lin.entry(0, 0, 1.0) * g + lin.entry(0, 1, 1.0) * h;
    let y0 = [g, dg - 0.5 * red.p1(1.0) * g];
    let ys = integrate(
        |x, y, dy| {
            dy[0] = y[1];
            dy[1] = nf.eval(x) * y[0];
        },
        &y0,
        (1.0, tau_lo),
        tight(),
    )?;

    let (mut diff, mut size) = (0.0f64, 0.0f64);
    for t in grid(0.0, t_stop, samples) {
        let tau = (-w * t).exp().max(tau_lo);
        let eps_w1 = ve.eval(t).ok_or(CertifyError::PoleInSpan)?[0];
        let mapped = eps_w1 * (-0.5 * red.p1_integral(1.0, tau).ok_or(CertifyError::PoleInSpan)?).exp();
        let direct = ys.eval(tau).ok_or(CertifyError::PoleInSpan)?[0];
        diff = diff.max((mapped - direct).abs());
        size = size.max(mapped.abs());
    }
    Ok(CrossValidation {
        tau_range: (tau_lo, 1.0),
        t_range: (0.0, t_stop),
        truncated_at_pole: truncated,
        samples: samples + 1,
        max_rel_residual: diff / size,
    })
}
