//! Integrable control systems with known first integrals and closed forms,
//! a first-integral drift checker, and a quadratic-integral search.

use crate::flow::{integrate, IntegrateError, IntegrateOptions};
use crate::variational::FlowSystem;
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ReferenceError {
    #[error("oscillator frequency must be nonzero")]
    ZeroFrequency,
    #[error("X X^T is singular")]
    SingularGram,
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("unknown system {name:?}; available: {}", SYSTEM_NAMES.join(", "))]
    UnknownSystem { name: String },
    #[error(transparent)]
    Integrate(#[from] IntegrateError),
}

pub const SYSTEM_NAMES: [&str; 4] = ["rotation", "scaling", "oscillator", "linreg"];

type FieldFn = Box<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;
type JacobianFn = Box<dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync>;
type ClosedFn = Box<dyn Fn(&[f64], f64) -> Vec<f64> + Send + Sync>;
type IntegralFn = Box<dyn Fn(&[f64]) -> Option<f64> + Send + Sync>;

/// A function of the state; `None` outside its domain.
pub struct FirstIntegral {
    pub name: String,
    pub eval: IntegralFn,
}

pub struct ClosedForm {
    /// `x(t)` from `x(0) = x0`.
    pub state: ClosedFn,
    pub derivative: ClosedFn,
}

pub struct NamedSystem {
    pub name: String,
    pub dim: usize,
    pub field: FieldFn,
    pub jacobian: JacobianFn,
    pub integrals: Vec<FirstIntegral>,
    pub closed_form: Option<ClosedForm>,
}

impl FlowSystem for NamedSystem {
    fn dim(&self) -> usize {
        self.dim
    }

    fn field(&self, x: &[f64], out: &mut [f64]) {
        (self.field)(x, out)
    }

    fn jacobian(&self, x: &[f64]) -> DMatrix<f64> {
        (self.jacobian)(x)
    }
}

impl NamedSystem {
    /// `x' = M x + c`.
    pub fn affine(name: &str, m: DMatrix<f64>, c: DVector<f64>) -> Self {
        let dim = m.nrows();
        let jm = m.clone();
        NamedSystem {
            name: name.to_string(),
            dim,
            field: Box::new(move |x, out| {
                let v = &m * DVector::from_column_slice(x) + &c;
                out.copy_from_slice(v.as_slice());
            }),
            jacobian: Box::new(move |_| jm.clone()),
            integrals: Vec::new(),
            closed_form: None,
        }
    }

    fn with_integral(mut self, name: &str, f: impl Fn(&[f64]) -> Option<f64> + Send + Sync + 'static) -> Self {
        self.integrals.push(FirstIntegral { name: name.to_string(), eval: Box::new(f) });
        self
    }

    fn with_closed_form(
        mut self,
        state: impl Fn(&[f64], f64) -> Vec<f64> + Send + Sync + 'static,
        derivative: impl Fn(&[f64], f64) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        self.closed_form = Some(ClosedForm { state: Box::new(state), derivative: Box::new(derivative) });
        self
    }
}

pub fn rotation_system() -> NamedSystem {
    NamedSystem::affine("rotation", DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]), DVector::zeros(2))
        .with_integral("x^2 + y^2", |v| Some(v[0] * v[0] + v[1] * v[1]))
        .with_closed_form(
            |p, t| {
                let (s, c) = t.sin_cos();
                vec![p[0] * c - p[1] * s, p[0] * s + p[1] * c]
            },
            |p, t| {
                let (s, c) = t.sin_cos();
                vec![-p[0] * s - p[1] * c, p[0] * c - p[1] * s]
            },
        )
}

pub fn scaling_system() -> NamedSystem {
    NamedSystem::affine("scaling", DMatrix::identity(2, 2), DVector::zeros(2))
        .with_integral("y / x", |v| (v[0] != 0.0).then(|| v[1] / v[0]))
        .with_closed_form(|p, t| vec![p[0] * t.exp(), p[1] * t.exp()], |p, t| vec![p[0] * t.exp(), p[1] * t.exp()])
}

/// `x' = y`, `y' = -omega0^2 x`, state `(x, v)`.
pub fn harmonic_oscillator(omega0: f64) -> Result<NamedSystem, ReferenceError> {
    if omega0 == 0.0 || !omega0.is_finite() {
        return Err(ReferenceError::ZeroFrequency);
    }
    let w2 = omega0 * omega0;
    Ok(NamedSystem::affine("oscillator", DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -w2, 0.0]), DVector::zeros(2))
        .with_integral("omega0^2 x^2 + y^2", move |v| Some(w2 * v[0] * v[0] + v[1] * v[1]))
        .with_closed_form(
            move |p, t| {
                let (s, c) = (omega0 * t).sin_cos();
                vec![p[1] / omega0 * s + p[0] * c, p[1] * c - p[0] * omega0 * s]
            },
            move |p, t| {
                let (s, c) = (omega0 * t).sin_cos();
                vec![p[1] * c - p[0] * omega0 * s, -p[1] * omega0 * s - p[0] * w2 * c]
            },
        ))
}

/// Gradient flow of `1/2 |X^T W - y|^2` for a `d x n` design matrix `X`.
pub struct LinearRegression {
    pub x: DMatrix<f64>,
    pub y: DVector<f64>,
    gram_inv: DMatrix<f64>,
    eig: SymmetricEigen<f64, nalgebra::Dyn>,
}

impl LinearRegression {
    pub fn new(x: DMatrix<f64>, y: DVector<f64>) -> Result<Self, ReferenceError> {
        if x.ncols() != y.len() {
            return Err(ReferenceError::Shape(format!("X has {} columns, y has {} entries", x.ncols(), y.len())));
        }
        let gram = &x * x.transpose();
        let gram_inv = gram.clone().try_inverse().ok_or(ReferenceError::SingularGram)?;
        let cond = gram.singular_values();
        if cond.min() <= 1e-12 * cond.max() {
            return Err(ReferenceError::SingularGram);
        }
        let eig = SymmetricEigen::new(x.transpose() * &x);
        Ok(Self { x, y, gram_inv, eig })
    }

    /// `(X X^T)^{-1} X y`.
    pub fn minimizer(&self) -> DVector<f64> {
        &self.gram_inv * &self.x * &self.y
    }

    /// `exp(-X^T X t)` applied to `v`.
    fn heat(&self, v: &DVector<f64>, t: f64) -> DVector<f64> {
        let q = &self.eig.eigenvectors;
        let d = self.eig.eigenvalues.map(|l| (-l * t).exp());
        q * DMatrix::from_diagonal(&d) * q.transpose() * v
    }

    pub fn closed_form(&self, w0: &DVector<f64>, t: f64) -> DVector<f64> {
        let r = self.x.transpose() * w0 - &self.y;
        let decayed = &r - self.heat(&r, t);
        w0 - &self.gram_inv * &self.x * decayed
    }

    pub fn closed_form_derivative(&self, w0: &DVector<f64>, t: f64) -> DVector<f64> {
        let r = self.x.transpose() * w0 - &self.y;
        let xtx = self.x.transpose() * &self.x;
        -(&self.gram_inv * &self.x * xtx * self.heat(&r, t))
    }

    pub fn system(self) -> NamedSystem {
        let m = -(&self.x * self.x.transpose());
        let c = &self.x * &self.y;
        let this = std::sync::Arc::new(self);
        let (a, b) = (this.clone(), this);
        NamedSystem::affine("linreg", m, c).with_closed_form(
            move |p, t| a.closed_form(&DVector::from_column_slice(p), t).as_slice().to_vec(),
            move |p, t| b.closed_form_derivative(&DVector::from_column_slice(p), t).as_slice().to_vec(),
        )
    }
}

/// Default `3 x 5` regression control used by the CLI.
pub fn default_linreg() -> LinearRegression {
    let x = DMatrix::from_row_slice(
        3,
        5,
        &[1.0, 0.5, -0.3, 0.8, 0.2, -0.4, 1.1, 0.6, 0.1, -0.7, 0.3, -0.2, 0.9, 0.5, 1.2],
    );
    let y = DVector::from_column_slice(&[0.4, -1.0, 0.7, 0.2, 1.5]);
    LinearRegression::new(x, y).expect("default design has full row rank")
}

pub fn default_linreg_start() -> Vec<f64> {
    vec![0.3, -0.2, 0.5]
}

/// Look up a control system with its default parameters and start point.
pub fn named_system(name: &str) -> Result<(NamedSystem, Vec<f64>), ReferenceError> {
    Ok(match name {
        "rotation" => (rotation_system(), vec![1.0, 0.0]),
        "scaling" => (scaling_system(), vec![1.0, 2.0]),
        "oscillator" => (harmonic_oscillator(2.0)?, vec![1.0, 0.0]),
        "linreg" => (default_linreg().system(), default_linreg_start()),
        _ => return Err(ReferenceError::UnknownSystem { name: name.to_string() }),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IntegralDrift {
    pub name: String,
    /// `max |Phi(x(t)) - Phi(x(0))|`; absent when `Phi` left its domain.
    pub max_drift: Option<f64>,
    pub domain_error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DriftReport {
    pub system: String,
    pub tspan: (f64, f64),
    pub samples: usize,
    pub integrals: Vec<IntegralDrift>,
}

pub const DRIFT_SAMPLES: usize = 1000;

pub fn first_integral_drift(
    sys: &NamedSystem,
    x0: &[f64],
    tspan: (f64, f64),
    opts: IntegrateOptions,
) -> Result<DriftReport, ReferenceError> {
    let traj = integrate(|_, x, dx| (sys.field)(x, dx), x0, tspan, opts)?;
    let times: Vec<f64> =
        (0..=DRIFT_SAMPLES).map(|i| tspan.0 + (tspan.1 - tspan.0) * i as f64 / DRIFT_SAMPLES as f64).collect();
    let states: Vec<Vec<f64>> = times.iter().map(|&t| traj.eval(t).expect("sample inside span")).collect();
    let integrals = sys
        .integrals
        .iter()
        .map(|phi| {
            let mut worst = 0.0f64;
            let mut base = None;
            for (t, x) in times.iter().zip(&states) {
                match (phi.eval)(x) {
                    Some(v) => {
                        let b = *base.get_or_insert(v);
                        worst = worst.max((v - b).abs());
                    }
                    None => {
                        return IntegralDrift {
                            name: phi.name.clone(),
                            max_drift: None,
                            domain_error: Some(format!("undefined at t = {t}, state {x:?}")),
                        }
                    }
                }
            }
            IntegralDrift { name: phi.name.clone(), max_drift: Some(worst), domain_error: None }
        })
        .collect();
    Ok(DriftReport { system: sys.name.clone(), tspan, samples: times.len(), integrals })
}

/// Max over `tgrid` of `|d/dt closed(t) - field(closed(t))|`; `None` without a closed form.
pub fn closed_form_field_residual(sys: &NamedSystem, x0: &[f64], tgrid: &[f64]) -> Option<f64> {
    let cf = sys.closed_form.as_ref()?;
    let mut out = vec![0.0; sys.dim];
    Some(tgrid.iter().fold(0.0f64, |acc, &t| {
        (sys.field)(&(cf.state)(x0, t), &mut out);
        let d = (cf.derivative)(x0, t);
        d.iter().zip(&out).fold(acc, |a, (p, q)| a.max((p - q).abs()))
    }))
}

/// Max over `times` of `|closed(t) - numeric(t)|`.
pub fn closed_form_vs_numeric(
    sys: &NamedSystem,
    x0: &[f64],
    times: &[f64],
    opts: IntegrateOptions,
) -> Result<Option<f64>, ReferenceError> {
    let Some(cf) = sys.closed_form.as_ref() else { return Ok(None) };
    let t_max = times.iter().copied().fold(0.0, f64::max);
    let traj = integrate(|_, x, dx| (sys.field)(x, dx), x0, (0.0, t_max), opts)?;
    Ok(Some(times.iter().fold(0.0f64, |acc, &t| {
        let num = traj.eval(t).expect("inside span");
        (cf.state)(x0, t).iter().zip(&num).fold(acc, |a, (p, q)| a.max((p - q).abs()))
    })))
}

/// Exponent vectors of all monomials of degree 1 and 2 in `dim` variables.
pub fn quadratic_monomials(dim: usize) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = (0..dim).map(|i| vec![i]).collect();
    for i in 0..dim {
        for j in i..dim {
            out.push(vec![i, j]);
        }
    }
    out
}

fn monomial(m: &[usize], x: &[f64]) -> f64 {
    m.iter().map(|&i| x[i]).product()
}

/// `d/dt` of a monomial along `x' = f`.
fn monomial_rate(m: &[usize], x: &[f64], f: &[f64]) -> f64 {
    match m {
        [i] => f[*i],
        [i, j] => f[*i] * x[*j] + x[*i] * f[*j],
        _ => unreachable!("degree at most two"),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QuadraticScanReport {
    pub monomials: usize,
    /// Smallest singular value of the rate matrix, relative to the largest.
    pub relative_singular_value: f64,
    /// Unit-norm coefficients of the best candidate.
    pub coefficients: Vec<f64>,
    pub train_drift: f64,
    pub heldout_drift: Vec<f64>,
    /// Whether the candidate stayed within the bound on every trajectory.
    pub conserved: bool,
}

fn candidate_drift(
    sys: &dyn FlowSystem,
    mons: &[Vec<usize>],
    c: &[f64],
    x0: &[f64],
    t_end: f64,
    opts: IntegrateOptions,
) -> Result<f64, ReferenceError> {
    let traj = integrate(|_, x, dx| sys.field(x, dx), x0, (0.0, t_end), opts)?;
    let phi = |x: &[f64]| mons.iter().zip(c).map(|(m, k)| k * monomial(m, x)).sum::<f64>();
    let start = phi(x0);
    Ok((0..=200)
        .map(|i| phi(&traj.eval(t_end * i as f64 / 200.0).expect("inside span")))
        .fold(0.0f64, |a, v| a.max((v - start).abs())))
}

/// Least-squares fit of `d Phi / dt = 0` over degree-2 polynomials `Phi`
/// along the trajectory from `train`, validated on `heldout` starts.
pub fn quadratic_integral_scan(
    sys: &dyn FlowSystem,
    train: &[f64],
    heldout: &[Vec<f64>],
    t_end: f64,
    bound: f64,
) -> Result<QuadraticScanReport, ReferenceError> {
    let dim = sys.dim();
    let mons = quadratic_monomials(dim);
    let opts = IntegrateOptions::tolerances(1e-10, 1e-12);
    let traj = integrate(|_, x, dx| sys.field(x, dx), train, (0.0, t_end), opts)?;
    let samples = 4 * mons.len().max(50);
    let mut rows = DMatrix::zeros(samples, mons.len());
    let mut f = vec![0.0; dim];
    for s in 0..samples {
        let x = traj.eval(t_end * s as f64 / (samples - 1) as f64).expect("inside span");
        sys.field(&x, &mut f);
        for (k, m) in mons.iter().enumerate() {
            rows[(s, k)] = monomial_rate(m, &x, &f);
        }
    }
    let svd = rows.svd(false, true);
    let v_t = svd.v_t.expect("requested");
    let (imin, smin) = svd.singular_values.argmin();
    let smax = svd.singular_values.max();
    let coefficients: Vec<f64> = v_t.row(imin).iter().copied().collect();
    let train_drift = candidate_drift(sys, &mons, &coefficients, train, t_end, opts)?;
    let heldout_drift = heldout
        .iter()
        .map(|x0| candidate_drift(sys, &mons, &coefficients, x0, t_end, opts))
        .collect::<Result<Vec<_>, _>>()?;
    let conserved = train_drift <= bound && heldout_drift.iter().all(|&d| d <= bound);
    Ok(QuadraticScanReport {
        monomials: mons.len(),
        relative_singular_value: if smax > 0.0 { smin / smax } else { 0.0 },
        coefficients,
        train_drift,
        heldout_drift,
        conserved,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn closed_forms_at_known_times() {
        let rot = rotation_system();
        let cf = rot.closed_form.as_ref().unwrap();
        assert!(close(&(cf.state)(&[1.0, 0.0], PI / 2.0), &[0.0, 1.0], 1e-15));
        assert_eq!((cf.state)(&[0.3, -0.8], 0.0), vec![0.3, -0.8]);

        let sc = scaling_system();
        let e = 1f64.exp();
        let cf = sc.closed_form.as_ref().unwrap();
        let v = (cf.state)(&[1.0, 2.0], 1.0);
        assert!(close(&v, &[e, 2.0 * e], 1e-15));
        assert_eq!((sc.integrals[0].eval)(&v), Some(2.0));
        assert_eq!((cf.state)(&[1.0, 2.0], 0.0), vec![1.0, 2.0]);

        let osc = harmonic_oscillator(3.0).unwrap();
        let cf = osc.closed_form.as_ref().unwrap();
        assert!(close(&(cf.state)(&[1.0, 0.0], PI / 3.0), &[-1.0, 0.0], 1e-14));
        let unit = harmonic_oscillator(1.0).unwrap();
        assert!(close(&(unit.closed_form.as_ref().unwrap().state)(&[1.0, 0.0], PI / 2.0), &[0.0, -1.0], 1e-15));
        assert_eq!(harmonic_oscillator(0.0).err(), Some(ReferenceError::ZeroFrequency));
    }

    #[test]
    fn closed_forms_satisfy_their_fields() {
        let grid: Vec<f64> = (0..=50).map(|i| 0.1 * i as f64).collect();
        for name in SYSTEM_NAMES {
            let (sys, x0) = named_system(name).unwrap();
            let r = closed_form_field_residual(&sys, &x0, &grid).unwrap();
            let scale = if name == "scaling" { 2.0 * 5f64.exp() } else { 1.0 };
            assert!(r <= 1e-9 * scale, "{name}: {r}");
        }
    }

    #[test]
    fn drift_of_declared_integrals() {
        let opts = IntegrateOptions::default();
        let rot = first_integral_drift(&rotation_system(), &[1.0, 0.0], (0.0, 20.0), opts).unwrap();
        assert!(rot.integrals[0].max_drift.unwrap() <= 1e-6);
        let osc = first_integral_drift(&harmonic_oscillator(2.0).unwrap(), &[1.0, 0.5], (0.0, 20.0), opts).unwrap();
        assert!(osc.integrals[0].max_drift.unwrap() <= 1e-6);
        let sc = first_integral_drift(&scaling_system(), &[1.0, 2.0], (0.0, 3.0), opts).unwrap();
        assert!(sc.integrals[0].max_drift.unwrap() <= 1e-6);

        let off = first_integral_drift(&scaling_system(), &[0.0, 2.0], (0.0, 1.0), opts).unwrap();
        assert_eq!(off.integrals[0].max_drift, None);
        assert!(off.integrals[0].domain_error.is_some());

        let still = NamedSystem::affine("zero", DMatrix::zeros(2, 2), DVector::zeros(2))
            .with_integral("x", |v| Some(v[0]))
            .with_integral("xy", |v| Some(v[0] * v[1]));
        let rep = first_integral_drift(&still, &[0.7, -1.3], (0.0, 5.0), opts).unwrap();
        assert!(rep.integrals.iter().all(|d| d.max_drift == Some(0.0)));
    }

    #[test]
    fn unknown_system_lists_names() {
        let err = named_system("nosuch").err().unwrap().to_string();
        for n in SYSTEM_NAMES {
            assert!(err.contains(n));
        }
    }

    #[test]
    fn linear_regression_closed_form() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        let x = DMatrix::from_fn(3, 5, |_, _| rng.gen_range(-1.0..1.0));
        let y = DVector::from_fn(5, |_, _| rng.gen_range(-1.0..1.0));
        let lr = LinearRegression::new(x, y).unwrap();
        let w_hat = lr.minimizer();
        let w0 = DVector::from_column_slice(&[0.5, -0.4, 1.0]);
        assert!((lr.closed_form(&w0, 1e4) - &w_hat).amax() <= 1e-8);
        assert!((lr.closed_form(&w_hat, 3.0) - &w_hat).amax() <= 1e-12);
        assert!((lr.closed_form(&w0, 0.0) - &w0).amax() <= 1e-12);
        let sys = lr.system();
        let err = closed_form_vs_numeric(&sys, w0.as_slice(), &[0.1, 1.0], IntegrateOptions::default()).unwrap();
        assert!(err.unwrap() <= 1e-6);

        let singular = DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 3.0, 2.0, 4.0, 6.0]);
        assert_eq!(LinearRegression::new(singular, DVector::zeros(3)).err(), Some(ReferenceError::SingularGram));
    }

    #[test]
    fn quadratic_scan_recovers_rotation_invariant() {
        let rep = quadratic_integral_scan(&rotation_system(), &[1.0, 0.3], &[vec![-0.5, 2.0]], 10.0, 1e-6).unwrap();
        assert!(rep.conserved, "{rep:?}");
        // x^2 + y^2 up to sign and scale: monomials x, y, x^2, xy, y^2.
        let c = &rep.coefficients;
        assert!(c[0].abs() < 1e-6 && c[1].abs() < 1e-6 && c[3].abs() < 1e-6);
        assert!((c[2] - c[4]).abs() < 1e-6);
    }
}
