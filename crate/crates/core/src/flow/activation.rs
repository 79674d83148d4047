use super::FlowError;
use statrs::function::erf::erf;
use std::f64::consts::{FRAC_1_SQRT_2, PI};

/// An activation with closed-form first and second derivatives.
#[derive(Clone, Copy)]
pub struct ActivationProfile {
    pub name: &'static str,
    pub eval0: fn(f64) -> f64,
    pub eval1: fn(f64) -> f64,
    pub eval2: fn(f64) -> f64,
    pub analytic: bool,
}

impl std::fmt::Debug for ActivationProfile {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ActivationProfile").field("name", &self.name).finish()
    }
}

pub const ACTIVATION_NAMES: [&str; 6] = ["silu", "gelu", "softplus", "swish", "mish", "tanh"];

/// Slope parameter of the `swish` profile, `x * logistic(beta x)`.
pub const SWISH_BETA: f64 = 1.5;

fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn softplus(x: f64) -> f64 {
    // log(1 + e^x) without overflow
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

fn silu0(x: f64) -> f64 {
    x * logistic(x)
}
fn silu1(x: f64) -> f64 {
    let s = logistic(x);
    s + x * s * (1.0 - s)
}
fn silu2(x: f64) -> f64 {
    let s = logistic(x);
    s * (1.0 - s) * (2.0 + x * (1.0 - 2.0 * s))
}

fn swish0(x: f64) -> f64 {
    x * logistic(SWISH_BETA * x)
}
fn swish1(x: f64) -> f64 {
    let s = logistic(SWISH_BETA * x);
    s + SWISH_BETA * x * s * (1.0 - s)
}
fn swish2(x: f64) -> f64 {
    let b = SWISH_BETA;
    let s = logistic(b * x);
    b * s * (1.0 - s) * (2.0 + b * x * (1.0 - 2.0 * s))
}

fn phi(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}
fn cdf(x: f64) -> f64 {
    0.5 * (1.0 + erf(x * FRAC_1_SQRT_2))
}
fn gelu0(x: f64) -> f64 {
    x * cdf(x)
}
fn gelu1(x: f64) -> f64 {
    cdf(x) + x * phi(x)
}
fn gelu2(x: f64) -> f64 {
    phi(x) * (2.0 - x * x)
}

fn softplus1(x: f64) -> f64 {
    logistic(x)
}
fn softplus2(x: f64) -> f64 {
    let s = logistic(x);
    s * (1.0 - s)
}

// Mish: x * T with T = tanh(softplus(x)), T' = (1 - T^2) s.
fn mish_parts(x: f64) -> (f64, f64, f64) {
    let s = logistic(x);
    let t = softplus(x).tanh();
    let t1 = (1.0 - t * t) * s;
    let t2 = (1.0 - t * t) * s * ((1.0 - s) - 2.0 * t * s);
    (t, t1, t2)
}
fn mish0(x: f64) -> f64 {
    x * mish_parts(x).0
}
fn mish1(x: f64) -> f64 {
    let (t, t1, _) = mish_parts(x);
    t + x * t1
}
fn mish2(x: f64) -> f64 {
    let (_, t1, t2) = mish_parts(x);
    2.0 * t1 + x * t2
}

fn tanh1(x: f64) -> f64 {
    let t = x.tanh();
    1.0 - t * t
}
fn tanh2(x: f64) -> f64 {
    let t = x.tanh();
    -2.0 * t * (1.0 - t * t)
}

/// Look up a built-in activation by name.
pub fn activation(name: &str) -> Option<ActivationProfile> {
    let p = |name, eval0, eval1, eval2| ActivationProfile { name, eval0, eval1, eval2, analytic: true };
    Some(match name {
        "silu" => p("silu", silu0 as fn(f64) -> f64, silu1 as fn(f64) -> f64, silu2 as fn(f64) -> f64),
        "gelu" => p("gelu", gelu0, gelu1, gelu2),
        "softplus" => p("softplus", softplus, softplus1, softplus2),
        "swish" => p("swish", swish0, swish1, swish2),
        "mish" => p("mish", mish0, mish1, mish2),
        "tanh" => p("tanh", f64::tanh, tanh1, tanh2),
        _ => return None,
    })
}

/// A point with `sigma'(b_hat) = 0` and `sigma(b_hat)`, `sigma''(b_hat)` nonzero.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CriticalPoint {
    pub b_hat: f64,
    pub sigma_at: f64,
    pub sigma2_at: f64,
}

const GRID: usize = 4000;
const DERIV_TOL: f64 = 1e-12;
const NONDEGENERATE: f64 = 1e-8;

fn newton_polish(act: &ActivationProfile, mut x: f64, lo: f64, hi: f64) -> f64 {
    for _ in 0..8 {
        let d2 = (act.eval2)(x);
        if d2 == 0.0 {
            break;
        }
        let next = x - (act.eval1)(x) / d2;
        if !(lo..=hi).contains(&next) || (act.eval1)(next).abs() >= (act.eval1)(x).abs() {
            break;
        }
        x = next;
    }
    x
}

/// Locate a zero of `sigma'` in `[lo, hi]`: grid scan for a sign change,
/// bisection, then Newton on `sigma'` using `sigma''`.
pub fn find_critical_point(act: &ActivationProfile, bracket: (f64, f64)) -> Result<CriticalPoint, FlowError> {
    let (lo, hi) = bracket;
    let d1 = act.eval1;
    let none = FlowError::NoCriticalPoint { lo, hi };
    let xs: Vec<f64> = (0..=GRID).map(|i| lo + (hi - lo) * i as f64 / GRID as f64).collect();
    let vals: Vec<f64> = xs.iter().map(|&x| d1(x)).collect();

    let b_hat = if let Some(i) = (0..GRID).find(|&i| vals[i] == 0.0 || vals[i].signum() != vals[i + 1].signum()) {
        let (mut a, mut b) = (xs[i], xs[i + 1]);
        let fa_sign = d1(a).signum();
        if d1(a) == 0.0 {
            b = a;
        }
        while b - a > 1e-15 * (1.0 + a.abs()) {
            let m = 0.5 * (a + b);
            let fm = d1(m);
            if fm == 0.0 {
                a = m;
                b = m;
            } else if fm.signum() == fa_sign {
                a = m;
            } else {
                b = m;
            }
        }
        newton_polish(act, 0.5 * (a + b), lo, hi)
    } else {
        // No sign change: accept only an interior tangential zero.
        let i = (0..=GRID)
            .min_by(|&i, &j| vals[i].abs().total_cmp(&vals[j].abs()))
            .ok_or(none.clone())?;
        if i == 0 || i == GRID {
            return Err(none);
        }
        newton_polish(act, xs[i], lo, hi)
    };
    if d1(b_hat).abs() > DERIV_TOL {
        return Err(none);
    }
    let sigma_at = (act.eval0)(b_hat);
    let sigma2_at = (act.eval2)(b_hat);
    if sigma_at.abs() <= NONDEGENERATE || sigma2_at.abs() <= NONDEGENERATE {
        return Err(FlowError::DegenerateCritical { b_hat, sigma: sigma_at, sigma2: sigma2_at });
    }
    Ok(CriticalPoint { b_hat, sigma_at, sigma2_at })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel_err(a: f64, b: f64) -> f64 {
        (a - b).abs() / (1.0 + b.abs())
    }

    #[test]
    fn derivatives_match_central_differences() {
        let h = 1e-5;
        for name in ACTIVATION_NAMES {
            let a = activation(name).unwrap();
            for i in 0..=80 {
                let x = -8.0 + 0.2 * i as f64;
                let fd1 = ((a.eval0)(x + h) - (a.eval0)(x - h)) / (2.0 * h);
                let fd2 = ((a.eval1)(x + h) - (a.eval1)(x - h)) / (2.0 * h);
                assert!(rel_err((a.eval1)(x), fd1) < 1e-6, "{name} sigma' at {x}");
                assert!(rel_err((a.eval2)(x), fd2) < 1e-6, "{name} sigma'' at {x}");
            }
        }
    }

    #[test]
    fn silu_critical_point() {
        let c = find_critical_point(&activation("silu").unwrap(), (-5.0, 0.0)).unwrap();
        assert!((c.b_hat + 1.278_464_542_761_074).abs() < 1e-9, "{}", c.b_hat);
        assert!(c.sigma_at < 0.0 && c.sigma2_at > 0.0);
        assert!(silu1(c.b_hat).abs() <= 1e-12);
    }

    #[test]
    fn gelu_and_mish_and_swish_have_critical_points() {
        let g = find_critical_point(&activation("gelu").unwrap(), (-3.0, 0.0)).unwrap();
        assert!((g.b_hat + 0.7518).abs() < 1e-3, "{}", g.b_hat);
        assert!(g.sigma_at < 0.0);
        for name in ["mish", "swish"] {
            let c = find_critical_point(&activation(name).unwrap(), (-10.0, 0.0)).unwrap();
            assert!(c.sigma_at < 0.0 && c.sigma2_at > 0.0, "{name}");
        }
    }

    #[test]
    fn monotone_activations_have_none() {
        for (name, br) in [("softplus", (-50.0, 50.0)), ("tanh", (-10.0, 10.0)), ("softplus", (-10.0, 0.0))] {
            let r = find_critical_point(&activation(name).unwrap(), br);
            assert!(matches!(r, Err(FlowError::NoCriticalPoint { .. })), "{name}: {r:?}");
        }
    }

    #[test]
    fn unknown_names_are_rejected() {
        assert!(activation("relu").is_none());
    }
}
