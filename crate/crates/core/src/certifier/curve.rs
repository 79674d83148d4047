//! The explicit integral curve through a critical point of the activation.

use super::CertifyError;
use crate::flow::{flow_field, ActivationProfile, CriticalPoint, Dataset, FlowState, Moments};
use serde::Serialize;

/// `gamma(t) = (0, b_hat, a sigma(b_hat) e^{-omega t}, a e^{-omega t} + ybar)`
/// with `a = b2_hat - ybar` and `omega = N (sigma(b_hat)^2 + 1)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct IntegralCurveParams {
    pub crit: CriticalPointRecord,
    pub b2_hat: f64,
    pub ybar: f64,
    pub a: f64,
    pub omega: f64,
    pub n: usize,
}

/// Serializable copy of a [`CriticalPoint`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CriticalPointRecord {
    pub b_hat: f64,
    pub sigma_at: f64,
    pub sigma2_at: f64,
}

impl From<CriticalPoint> for CriticalPointRecord {
    fn from(c: CriticalPoint) -> Self {
        Self { b_hat: c.b_hat, sigma_at: c.sigma_at, sigma2_at: c.sigma2_at }
    }
}

impl IntegralCurveParams {
    pub fn new(crit: CriticalPoint, b2_hat: f64, m: &Moments) -> Result<Self, CertifyError> {
        let a = b2_hat - m.ybar;
        if a == 0.0 || !a.is_finite() {
            return Err(CertifyError::ZeroAmplitude);
        }
        let s = crit.sigma_at;
        Ok(Self {
            crit: crit.into(),
            b2_hat,
            ybar: m.ybar,
            a,
            omega: m.n as f64 * (s * s + 1.0),
            n: m.n,
        })
    }

    pub fn sigma(&self) -> f64 {
        self.crit.sigma_at
    }

    pub fn sigma2(&self) -> f64 {
        self.crit.sigma2_at
    }
}

pub fn integral_curve(p: &IntegralCurveParams, t: f64) -> FlowState {
    let e = (-p.omega * t).exp();
    FlowState::new(0.0, p.crit.b_hat, p.a * p.sigma() * e, p.a * e + p.ybar)
}

/// Analytic time derivative of the curve.
pub fn integral_curve_derivative(p: &IntegralCurveParams, t: f64) -> [f64; 4] {
    let e = (-p.omega * t).exp();
    [0.0, 0.0, -p.omega * p.a * p.sigma() * e, -p.omega * p.a * e]
}

/// Max over `tgrid` of the sup-norm of `gamma'(t) - field(gamma(t))`.
pub fn validate_integral_curve(
    p: &IntegralCurveParams,
    ds: &Dataset,
    act: &ActivationProfile,
    tgrid: &[f64],
) -> f64 {
    tgrid
        .iter()
        .map(|&t| {
            let d = integral_curve_derivative(p, t);
            let f = flow_field(&integral_curve(p, t), ds, act);
            d.iter().zip(&f).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::{activation, find_critical_point};

    fn setup() -> (IntegralCurveParams, Dataset, ActivationProfile) {
        let act = activation("silu").unwrap();
        let ds = Dataset::new(vec![1.0, 2.0], vec![1.0, 0.0]).unwrap();
        let m = ds.moments();
        let crit = find_critical_point(&act, (-10.0, 0.0)).unwrap();
        (IntegralCurveParams::new(crit, m.ybar + 1.0, &m).unwrap(), ds, act)
    }

    #[test]
    fn endpoints_and_ratio() {
        let (p, ..) = setup();
        let g0 = integral_curve(&p, 0.0);
        assert_eq!(g0, FlowState::new(0.0, p.crit.b_hat, p.a * p.sigma(), p.b2_hat));
        let far = integral_curve(&p, 1e3);
        assert_eq!(far, FlowState::new(0.0, p.crit.b_hat, 0.0, p.ybar));
        for t in [0.0, 0.3, 1.7] {
            let g = integral_curve(&p, t);
            assert!((g.w2 / (g.b2 - p.ybar) - p.sigma()).abs() < 1e-12);
        }
    }

    #[test]
    fn curve_solves_the_flow() {
        let (p, ds, act) = setup();
        let grid: Vec<f64> = (0..=100).map(|i| 0.05 * i as f64).collect();
        assert!(validate_integral_curve(&p, &ds, &act, &grid) <= 1e-8);
    }

    #[test]
    fn zero_amplitude_rejected() {
        let (p, ds, _) = setup();
        let m = ds.moments();
        let crit = CriticalPoint { b_hat: p.crit.b_hat, sigma_at: p.sigma(), sigma2_at: p.sigma2() };
        assert!(matches!(IntegralCurveParams::new(crit, m.ybar, &m), Err(CertifyError::ZeroAmplitude)));
    }
}
