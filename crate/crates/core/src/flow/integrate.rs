//! Dormand-Prince 5(4) with the standard fifth-order dense output.

use thiserror::Error;

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];
const D: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IntegrateError {
    #[error("step size underflow at t = {t} (solution likely blows up)")]
    StepSizeUnderflow { t: f64 },
    #[error("exceeded {max_steps} steps at t = {t}")]
    MaxStepsExceeded { t: f64, max_steps: usize },
    #[error("initial state or field is not finite")]
    NonFiniteStart,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntegrateOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    /// Upper bound on `|h|`; unbounded when `None`.
    pub h_max: Option<f64>,
}

impl Default for IntegrateOptions {
    fn default() -> Self {
        Self { rtol: 1e-9, atol: 1e-12, max_steps: 1_000_000, h_max: None }
    }
}

impl IntegrateOptions {
    pub fn tolerances(rtol: f64, atol: f64) -> Self {
        Self { rtol, atol, ..Self::default() }
    }
}

#[derive(Clone, Debug)]
struct Segment {
    t0: f64,
    h: f64,
    // y(t0 + s h) = c0 + s (c1 + (1-s) (c2 + s (c3 + (1-s) c4)))
    c: [Vec<f64>; 5],
}

/// Accepted steps with dense output. Times run from `tspan.0` towards
/// `tspan.1` and are strictly monotone in that direction.
#[derive(Clone, Debug)]
pub struct Trajectory {
    times: Vec<f64>,
    states: Vec<Vec<f64>>,
    segments: Vec<Segment>,
}

impl Trajectory {
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[Vec<f64>] {
        &self.states
    }

    pub fn final_state(&self) -> &[f64] {
        self.states.last().expect("trajectory has its initial state")
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().expect("trajectory has its initial time")
    }

    pub fn steps(&self) -> usize {
        self.segments.len()
    }

    fn forward(&self) -> bool {
        self.times.len() < 2 || self.times[1] > self.times[0]
    }

    /// Dense-output state at `t`; stored knots are returned exactly.
    /// Returns `None` outside the integrated interval.
    pub fn eval(&self, t: f64) -> Option<Vec<f64>> {
        let sign = if self.forward() { 1.0 } else { -1.0 };
        let key = |x: f64| sign * x;
        let (first, last) = (key(self.times[0]), key(self.final_time()));
        if !(first..=last).contains(&key(t)) {
            return None;
        }
        match self.times.binary_search_by(|p| key(*p).total_cmp(&key(t))) {
            Ok(i) => Some(self.states[i].clone()),
            Err(i) => {
                let seg = &self.segments[i - 1];
                let s = (t - seg.t0) / seg.h;
                let s1 = 1.0 - s;
                let [c0, c1, c2, c3, c4] = &seg.c;
                Some(
                    (0..c0.len())
                        .map(|k| c0[k] + s * (c1[k] + s1 * (c2[k] + s * (c3[k] + s1 * c4[k]))))
                        .collect(),
                )
            }
        }
    }
}

fn weighted_rms(v: &[f64], scale: impl Fn(usize) -> f64) -> f64 {
    let n = v.len().max(1) as f64;
    (v.iter().enumerate().map(|(i, x)| (x / scale(i)).powi(2)).sum::<f64>() / n).sqrt()
}

fn initial_step<F>(f: &mut F, t0: f64, y0: &[f64], f0: &[f64], dir: f64, span: f64, o: &IntegrateOptions) -> f64
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    let sk = |i: usize| o.atol + o.rtol * y0[i].abs();
    let d0 = weighted_rms(y0, sk);
    let d1 = weighted_rms(f0, sk);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 }.min(span);
    let y1: Vec<f64> = y0.iter().zip(f0).map(|(y, k)| y + dir * h0 * k).collect();
    let mut f1 = vec![0.0; y0.len()];
    f(t0 + dir * h0, &y1, &mut f1);
    let diff: Vec<f64> = f1.iter().zip(f0).map(|(a, b)| a - b).collect();
    let d2 = weighted_rms(&diff, sk) / h0;
    let h1 = if d1.max(d2) <= 1e-15 { (h0 * 1e-3).max(1e-6) } else { (0.01 / d1.max(d2)).powf(0.2) };
    let h = (100.0 * h0).min(h1).min(span);
    if h.is_finite() && h > 0.0 {
        h
    } else {
        span.min(1e-6)
    }
}

/// Integrate `y' = f(t, y)` from `tspan.0` to `tspan.1` (either direction).
pub fn integrate<F>(
    mut f: F,
    y0: &[f64],
    tspan: (f64, f64),
    opts: IntegrateOptions,
) -> Result<Trajectory, IntegrateError>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    let n = y0.len();
    let (t0, t1) = tspan;
    let mut traj = Trajectory { times: vec![t0], states: vec![y0.to_vec()], segments: Vec::new() };
    if t0 == t1 {
        return Ok(traj);
    }
    let dir = (t1 - t0).signum();
    let span = (t1 - t0).abs();
    let h_max = opts.h_max.unwrap_or(span).min(span);

    let mut k: Vec<Vec<f64>> = vec![vec![0.0; n]; 7];
    f(t0, y0, &mut k[0]);
    if !y0.iter().chain(&k[0]).all(|v| v.is_finite()) {
        return Err(IntegrateError::NonFiniteStart);
    }
    let mut h = initial_step(&mut f, t0, y0, &k[0].clone(), dir, span, &opts).min(h_max);
    let mut t = t0;
    let mut y = y0.to_vec();
    let mut ytmp = vec![0.0; n];
    let mut y5 = vec![0.0; n];
    let mut rejected = false;

    for _ in 0..opts.max_steps {
        let remaining = (t1 - t).abs();
        let last = h >= remaining;
        if last {
            h = remaining;
        }
        if h < 16.0 * f64::EPSILON * t.abs().max(1.0) {
            return Err(IntegrateError::StepSizeUnderflow { t });
        }
        let hs = dir * h;
        for s in 1..7 {
            for i in 0..n {
                let mut acc = y[i];
                for j in 0..s {
                    acc += hs * A[s][j] * k[j][i];
                }
                ytmp[i] = acc;
            }
            f(t + C[s] * hs, &ytmp, &mut k[s]);
            if s == 6 {
                y5.copy_from_slice(&ytmp);
            }
        }
        let errv: Vec<f64> = (0..n).map(|i| hs * (0..7).map(|j| E[j] * k[j][i]).sum::<f64>()).collect();
        let err = weighted_rms(&errv, |i| opts.atol + opts.rtol * y[i].abs().max(y5[i].abs()));
        let finite = err.is_finite() && y5.iter().all(|v| v.is_finite());

        if finite && err <= 1.0 {
            let t_new = if last { t1 } else { t + hs };
            let c0 = y.clone();
            let c1: Vec<f64> = (0..n).map(|i| y5[i] - y[i]).collect();
            let c2: Vec<f64> = (0..n).map(|i| hs * k[0][i] - c1[i]).collect();
            let c3: Vec<f64> = (0..n).map(|i| c1[i] - hs * k[6][i] - c2[i]).collect();
            let c4: Vec<f64> = (0..n).map(|i| hs * (0..7).map(|j| D[j] * k[j][i]).sum::<f64>()).collect();
            traj.segments.push(Segment { t0: t, h: hs, c: [c0, c1, c2, c3, c4] });
            traj.times.push(t_new);
            traj.states.push(y5.clone());
            t = t_new;
            y.copy_from_slice(&y5);
            let k6 = k[6].clone();
            k[0] = k6;
            if last {
                return Ok(traj);
            }
            let mut fac = (0.9 * err.max(1e-10).powf(-0.2)).clamp(0.2, 10.0);
            if rejected {
                fac = fac.min(1.0);
            }
            rejected = false;
            h = (h * fac).min(h_max);
        } else {
            rejected = true;
            let fac = if finite { (0.9 * err.powf(-0.2)).clamp(0.2, 1.0) } else { 0.2 };
            h *= fac;
        }
    }
    Err(IntegrateError::MaxStepsExceeded { t, max_steps: opts.max_steps })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_growth() {
        let tr = integrate(|_, y, dy| dy[0] = y[0], &[1.0], (0.0, 1.0), IntegrateOptions::default()).unwrap();
        assert!((tr.final_state()[0] - std::f64::consts::E).abs() < 1e-8);
        assert_eq!(tr.final_time(), 1.0);
    }

    #[test]
    fn backward_integration() {
        let tr = integrate(|_, y, dy| dy[0] = y[0], &[1.0], (0.0, -2.0), IntegrateOptions::default()).unwrap();
        assert!((tr.final_state()[0] - (-2.0f64).exp()).abs() < 1e-10);
        let mid = tr.eval(-1.0).unwrap()[0];
        assert!((mid - (-1.0f64).exp()).abs() < 1e-8);
        assert!(tr.eval(0.5).is_none());
    }

    #[test]
    fn oscillator_conserves_energy() {
        let w0 = 1.7;
        let opts = IntegrateOptions::tolerances(1e-10, 1e-12);
        let osc = |_: f64, y: &[f64], dy: &mut [f64]| {
            dy[0] = y[1];
            dy[1] = -w0 * w0 * y[0];
        };
        let tr = integrate(osc, &[0.4, -0.3], (0.0, 20.0), opts).unwrap();
        let energy = |y: &[f64]| w0 * w0 * y[0] * y[0] + y[1] * y[1];
        let e0 = energy(&[0.4, -0.3]);
        for s in tr.states() {
            assert!((energy(s) - e0).abs() <= 1e-8, "{}", energy(s) - e0);
        }
        // closed form
        let t = 13.3;
        let exact = 0.4 * (w0 * t).cos() - 0.3 / w0 * (w0 * t).sin();
        assert!((tr.eval(t).unwrap()[0] - exact).abs() < 1e-8);
    }

    #[test]
    fn dense_output_reproduces_knots() {
        let tr = integrate(
            |t, y, dy| dy[0] = t.cos() * y[0],
            &[2.0],
            (0.0, 6.0),
            IntegrateOptions::tolerances(1e-11, 1e-13),
        )
        .unwrap();
        for (t, s) in tr.times().iter().zip(tr.states()) {
            assert_eq!(&tr.eval(*t).unwrap(), s);
        }
        assert!(tr.times().windows(2).all(|w| w[1] > w[0]));
        for i in 0..50 {
            let t = 0.12 * i as f64;
            let exact = 2.0 * t.sin().exp();
            assert!((tr.eval(t).unwrap()[0] - exact).abs() < 1e-9);
        }
    }

    #[test]
    fn blow_up_is_reported() {
        // y' = y^2, y(0) = 1 blows up at t = 1
        let r = integrate(|_, y, dy| dy[0] = y[0] * y[0], &[1.0], (0.0, 2.0), IntegrateOptions::default());
        match r {
            Err(IntegrateError::StepSizeUnderflow { t }) => assert!((t - 1.0).abs() < 1e-3, "{t}"),
            other => panic!("{other:?}"),
        }
    }
}
