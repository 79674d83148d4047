//! Variational equations `eta' = J(x(t)) eta` along a base trajectory, the
//! first-order perturbation law, and the tail-block identities on the
//! explicit integral curve.

use crate::certifier::{integral_curve, IntegralCurveParams};
use crate::flow::{
    flow_field, flow_jacobian, integrate, ActivationProfile, Dataset, FlowState, IntegrateError, IntegrateOptions,
    Trajectory,
};
use nalgebra::{DMatrix, DVector, Matrix4, Vector4};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VariationalError {
    #[error("t = {t} is outside the base trajectory")]
    OutsideSpan { t: f64 },
    #[error(transparent)]
    Integrate(#[from] IntegrateError),
}

/// Perturbation `(eps_w1, eps_b1, eps_w2, eps_b2)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct VEState {
    pub eps_w1: f64,
    pub eps_b1: f64,
    pub eps_w2: f64,
    pub eps_b2: f64,
}

impl VEState {
    pub fn new(eps_w1: f64, eps_b1: f64, eps_w2: f64, eps_b2: f64) -> Self {
        Self { eps_w1, eps_b1, eps_w2, eps_b2 }
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.eps_w1, self.eps_b1, self.eps_w2, self.eps_b2]
    }

    pub fn from_slice(v: &[f64]) -> Self {
        Self::new(v[0], v[1], v[2], v[3])
    }
}

/// Anything that yields the base state at time `t`.
pub trait BaseCurve {
    fn state_at(&self, t: f64) -> Option<FlowState>;
}

impl BaseCurve for Trajectory {
    fn state_at(&self, t: f64) -> Option<FlowState> {
        self.eval(t).map(|v| FlowState::from_slice(&v))
    }
}

impl BaseCurve for IntegralCurveParams {
    fn state_at(&self, t: f64) -> Option<FlowState> {
        Some(integral_curve(self, t))
    }
}

pub fn ve_field(
    t: f64,
    eta: &VEState,
    base: &dyn BaseCurve,
    ds: &Dataset,
    act: &ActivationProfile,
) -> Result<VEState, VariationalError> {
    let w = base.state_at(t).ok_or(VariationalError::OutsideSpan { t })?;
    let d = flow_jacobian(&w, ds, act) * Vector4::from(eta.to_array());
    Ok(VEState::from_slice(d.as_slice()))
}

/// Integrate the VE along `base` over `tspan`.
pub fn ve_along_curve(
    base: &dyn BaseCurve,
    ds: &Dataset,
    act: &ActivationProfile,
    eta0: VEState,
    tspan: (f64, f64),
    opts: IntegrateOptions,
) -> Result<Trajectory, VariationalError> {
    for t in [tspan.0, tspan.1] {
        base.state_at(t).ok_or(VariationalError::OutsideSpan { t })?;
    }
    let field = |t: f64, y: &[f64], dy: &mut [f64]| {
        let j = base.state_at(t).map(|w| flow_jacobian(&w, ds, act)).unwrap_or_else(|| Matrix4::from_element(f64::NAN));
        let d = j * Vector4::from_column_slice(y);
        dy.copy_from_slice(d.as_slice());
    };
    Ok(integrate(field, &eta0.to_array(), tspan, opts)?)
}

/// An autonomous vector field with its Jacobian.
pub trait FlowSystem {
    fn dim(&self) -> usize;
    fn field(&self, x: &[f64], out: &mut [f64]);
    fn jacobian(&self, x: &[f64]) -> DMatrix<f64>;
}

/// The network gradient flow on a fixed dataset.
pub struct NetworkFlow<'a> {
    pub ds: &'a Dataset,
    pub act: &'a ActivationProfile,
}

impl FlowSystem for NetworkFlow<'_> {
    fn dim(&self) -> usize {
        4
    }

    fn field(&self, x: &[f64], out: &mut [f64]) {
        out.copy_from_slice(&flow_field(&FlowState::from_slice(x), self.ds, self.act));
    }

    fn jacobian(&self, x: &[f64]) -> DMatrix<f64> {
        let j = flow_jacobian(&FlowState::from_slice(x), self.ds, self.act);
        DMatrix::from_iterator(4, 4, j.iter().copied())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PerturbationReport {
    pub epsilons: Vec<f64>,
    pub errors: Vec<f64>,
    /// Least-squares slope of `log error` against `log epsilon`; absent when
    /// the errors sit at the integration noise floor.
    pub fitted_slope: Option<f64>,
    pub exact_linear: bool,
    pub passed: bool,
}

pub const DEFAULT_EPSILONS: [f64; 4] = [1e-2, 3.162_277_660_168_379_4e-3, 1e-3, 3.162_277_660_168_379_4e-4];
pub const SLOPE_BAND: (f64, f64) = (1.9, 2.1);

fn perturbation_tolerances() -> IntegrateOptions {
    IntegrateOptions::tolerances(1e-12, 1e-14)
}

fn log_log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

/// Compare `gamma~(t*) - gamma(t*)` with `eps eta(t*)` for shrinking `eps`.
pub fn perturbation_order_test(
    sys: &dyn FlowSystem,
    p: &[f64],
    u: &[f64],
    t_star: f64,
    epsilons: &[f64],
) -> Result<PerturbationReport, VariationalError> {
    let n = sys.dim();
    let opts = perturbation_tolerances();
    let base = integrate(|_, y, dy| sys.field(y, dy), p, (0.0, t_star), opts)?;
    // VE coefficients come from the base trajectory's dense output.
    let ve = |t: f64, y: &[f64], dy: &mut [f64]| match base.eval(t) {
        Some(x) => dy.copy_from_slice((sys.jacobian(&x) * DVector::from_column_slice(y)).as_slice()),
        None => dy.fill(f64::NAN),
    };
    let eta_sol = integrate(ve, u, (0.0, t_star), opts)?;
    let (g, eta) = (base.final_state(), eta_sol.final_state());

    let mut errors = Vec::with_capacity(epsilons.len());
    for &eps in epsilons {
        let start: Vec<f64> = p.iter().zip(u).map(|(a, b)| a + eps * b).collect();
        let pert = integrate(|_, y, dy| sys.field(y, dy), &start, (0.0, t_star), opts)?;
        let gt = pert.final_state();
        let err = (0..n).map(|i| (gt[i] - g[i] - eps * eta[i]).powi(2)).sum::<f64>().sqrt();
        errors.push(err);
    }
    let scale = 1.0 + g.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let noise = 1e-9 * scale;
    let exact_linear = errors.iter().all(|&e| e <= noise);
    let fitted_slope = if exact_linear || errors.iter().any(|&e| e <= 0.0) {
        None
    } else {
        Some(log_log_slope(epsilons, &errors))
    };
    let passed = exact_linear || fitted_slope.is_some_and(|s| (SLOPE_BAND.0..=SLOPE_BAND.1).contains(&s));
    Ok(PerturbationReport { epsilons: epsilons.to_vec(), errors, fitted_slope, exact_linear, passed })
}

/// Residuals of the decoupled `(eps_w2, eps_b2)` relations along the curve.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TailBlockReport {
    /// `max |eps_w2' - sigma eps_b2'|`.
    pub identity_residual: f64,
    /// `max |eps_b2' + c|` and `|eps_w2' + sigma c|` with `c = N sigma eps_w2 + N eps_b2`.
    pub combination_residual: f64,
    /// `max |eps_w2'' + N (sigma^2 + 1) eps_w2'|`.
    pub second_order_residual: f64,
    /// `max |eps_w2''|`, which would vanish if the second derivative were zero.
    pub second_derivative_max: f64,
    /// Cross-block Jacobian entries, max over the grid.
    pub cross_block_max: f64,
    pub samples: usize,
}

pub fn tail_block_check(
    params: &IntegralCurveParams,
    ds: &Dataset,
    act: &ActivationProfile,
    eta0: VEState,
    tspan: (f64, f64),
) -> Result<TailBlockReport, VariationalError> {
    let sol = ve_along_curve(params, ds, act, eta0, tspan, IntegrateOptions::default())?;
    let n = params.n as f64;
    let s = params.sigma();
    let mut rep = TailBlockReport {
        identity_residual: 0.0,
        combination_residual: 0.0,
        second_order_residual: 0.0,
        second_derivative_max: 0.0,
        cross_block_max: 0.0,
        samples: 0,
    };
    let samples = 200;
    for i in 0..=samples {
        let t = tspan.0 + (tspan.1 - tspan.0) * i as f64 / samples as f64;
        let j = flow_jacobian(&integral_curve(params, t), ds, act);
        let eta = Vector4::from_column_slice(&sol.eval(t).ok_or(VariationalError::OutsideSpan { t })?);
        let d1 = j * eta;
        let d2 = j * d1;
        let c = n * s * eta[2] + n * eta[3];
        rep.identity_residual = rep.identity_residual.max((d1[2] - s * d1[3]).abs());
        rep.combination_residual =
            rep.combination_residual.max((d1[3] + c).abs()).max((d1[2] + s * c).abs());
        rep.second_order_residual = rep.second_order_residual.max((d2[2] + n * (s * s + 1.0) * d1[2]).abs());
        rep.second_derivative_max = rep.second_derivative_max.max(d2[2].abs());
        for (r, cc) in [(0, 2), (0, 3), (1, 2), (1, 3)] {
            rep.cross_block_max = rep.cross_block_max.max(j[(r, cc)].abs()).max(j[(cc, r)].abs());
        }
        rep.samples += 1;
    }
    Ok(rep)
}
