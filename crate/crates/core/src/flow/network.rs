//! `F(x) = w2 sigma(w1 x + b1) + b2` with loss `R = 1/2 sum (F(x_i) - y_i)^2`.

use super::{ActivationProfile, Dataset};
use nalgebra::Matrix4;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowState {
    pub w1: f64,
    pub b1: f64,
    pub w2: f64,
    pub b2: f64,
}

impl FlowState {
    pub fn new(w1: f64, b1: f64, w2: f64, b2: f64) -> Self {
        Self { w1, b1, w2, b2 }
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.w1, self.b1, self.w2, self.b2]
    }

    pub fn from_slice(v: &[f64]) -> Self {
        Self::new(v[0], v[1], v[2], v[3])
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }
}

/// Per-sample quantities: `(x, residual, sigma, sigma', sigma'')`.
fn samples<'a>(
    w: &'a FlowState,
    ds: &'a Dataset,
    act: &'a ActivationProfile,
) -> impl Iterator<Item = (f64, f64, f64, f64, f64)> + 'a {
    ds.iter().map(move |(x, y)| {
        let z = w.w1 * x + w.b1;
        let s = (act.eval0)(z);
        (x, w.w2 * s + w.b2 - y, s, (act.eval1)(z), (act.eval2)(z))
    })
}

pub fn loss(w: &FlowState, ds: &Dataset, act: &ActivationProfile) -> f64 {
    0.5 * samples(w, ds, act).map(|(_, e, ..)| e * e).sum::<f64>()
}

/// `W' = -grad R(W)`.
pub fn flow_field(w: &FlowState, ds: &Dataset, act: &ActivationProfile) -> [f64; 4] {
    let mut out = [0.0; 4];
    for (x, e, s, s1, _) in samples(w, ds, act) {
        out[0] -= e * w.w2 * s1 * x;
        out[1] -= e * w.w2 * s1;
        out[2] -= e * s;
        out[3] -= e;
    }
    out
}

/// Jacobian of the flow field, i.e. `-Hess R(W)`.
pub fn flow_jacobian(w: &FlowState, ds: &Dataset, act: &ActivationProfile) -> Matrix4<f64> {
    let mut h = Matrix4::zeros();
    let w2 = w.w2;
    for (x, e, s, s1, s2) in samples(w, ds, act) {
        let g = w2 * s1;
        let c = e * w2 * s2;
        h[(0, 0)] += g * g * x * x + c * x * x;
        h[(0, 1)] += g * g * x + c * x;
        h[(0, 2)] += (s * g + e * s1) * x;
        h[(0, 3)] += g * x;
        h[(1, 1)] += g * g + c;
        h[(1, 2)] += s * g + e * s1;
        h[(1, 3)] += g;
        h[(2, 2)] += s * s;
        h[(2, 3)] += s;
        h[(3, 3)] += 1.0;
    }
    for i in 0..4 {
        for j in 0..i {
            h[(i, j)] = h[(j, i)];
        }
    }
    -h
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::activation;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_case(rng: &mut ChaCha8Rng) -> (FlowState, Dataset) {
        let n = rng.gen_range(1..6);
        let xs = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let ys = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let w = FlowState::new(
            rng.gen_range(-1.5..1.5),
            rng.gen_range(-1.5..1.5),
            rng.gen_range(-1.5..1.5),
            rng.gen_range(-1.5..1.5),
        );
        (w, Dataset::new(xs, ys).unwrap())
    }

    fn perturbed(w: &FlowState, k: usize, h: f64) -> FlowState {
        let mut a = w.to_array();
        a[k] += h;
        FlowState::from_slice(&a)
    }

    #[test]
    fn field_is_negative_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for name in ["silu", "gelu", "mish", "tanh"] {
            let act = activation(name).unwrap();
            for _ in 0..100 {
                let (w, ds) = random_case(&mut rng);
                let f = flow_field(&w, &ds, &act);
                let scale = f.iter().fold(1.0f64, |m, v| m.max(v.abs()));
                for (k, fk) in f.iter().enumerate() {
                    let h = 1e-6;
                    let fd = -(loss(&perturbed(&w, k, h), &ds, &act) - loss(&perturbed(&w, k, -h), &ds, &act))
                        / (2.0 * h);
                    assert!((fk - fd).abs() <= 1e-6 * scale, "{name} k={k}: {fk} vs {fd}");
                }
            }
        }
    }

    #[test]
    fn jacobian_matches_field_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for name in ["silu", "gelu", "swish", "softplus"] {
            let act = activation(name).unwrap();
            for _ in 0..100 {
                let (w, ds) = random_case(&mut rng);
                let j = flow_jacobian(&w, &ds, &act);
                assert_eq!(j, j.transpose());
                let scale = j.amax().max(1.0);
                for k in 0..4 {
                    let h = 1e-6;
                    let fp = flow_field(&perturbed(&w, k, h), &ds, &act);
                    let fm = flow_field(&perturbed(&w, k, -h), &ds, &act);
                    for i in 0..4 {
                        let fd = (fp[i] - fm[i]) / (2.0 * h);
                        assert!((j[(i, k)] - fd).abs() <= 1e-5 * scale, "{name} ({i},{k})");
                    }
                }
            }
        }
    }

    #[test]
    fn zero_output_weight_freezes_first_layer() {
        let act = activation("silu").unwrap();
        let ds = Dataset::new(vec![0.3, -1.0, 2.0], vec![1.0, 0.5, -0.2]).unwrap();
        let f = flow_field(&FlowState::new(0.7, -0.4, 0.0, 0.1), &ds, &act);
        assert_eq!((f[0], f[1]), (0.0, 0.0));
    }

    #[test]
    fn constant_predictor_loss() {
        let act = activation("gelu").unwrap();
        let ds = Dataset::new(vec![1.0, 2.0, 3.0], vec![1.0, 2.0, 6.0]).unwrap();
        let w = FlowState::new(0.3, 0.2, 0.0, 3.0);
        assert!((loss(&w, &ds, &act) - 0.5 * (4.0 + 1.0 + 9.0)).abs() < 1e-14);
        let exact = Dataset::new(vec![1.0, 2.0], vec![3.0, 3.0]).unwrap();
        assert_eq!(loss(&w, &exact, &act), 0.0);
    }
}
