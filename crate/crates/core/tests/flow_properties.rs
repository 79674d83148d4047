use gflow_core::flow::{activation, flow_field, integrate, loss, Dataset, FlowState, IntegrateOptions};
use gflow_core::reference::quadratic_integral_scan;
use gflow_core::variational::NetworkFlow;
use proptest::prelude::*;

fn dataset() -> impl Strategy<Value = Dataset> {
    (2usize..6)
        .prop_flat_map(|n| (prop::collection::vec(-2.0..2.0f64, n), prop::collection::vec(-2.0..2.0f64, n)))
        .prop_map(|(xs, ys)| Dataset::new(xs, ys).unwrap())
}

fn state() -> impl Strategy<Value = [f64; 4]> {
    prop::array::uniform4(-1.5..1.5f64)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn loss_never_increases(ds in dataset(), w0 in state(), name in prop::sample::select(vec!["silu", "gelu", "tanh", "mish"])) {
        let act = activation(name).unwrap();
        let traj = integrate(
            |_, y, dy| dy.copy_from_slice(&flow_field(&FlowState::from_slice(y), &ds, &act)),
            &w0,
            (0.0, 5.0),
            IntegrateOptions::default(),
        ).unwrap();
        let losses: Vec<f64> = traj.states().iter().map(|s| loss(&FlowState::from_slice(s), &ds, &act)).collect();
        for pair in losses.windows(2) {
            prop_assert!(pair[1] <= pair[0] * (1.0 + 1e-9) + 1e-12);
        }
    }

    #[test]
    fn dissipation_equals_squared_field(ds in dataset(), w in state()) {
        // dR/dt = -|grad R|^2 along the flow.
        let act = activation("silu").unwrap();
        let f = flow_field(&FlowState::from_slice(&w), &ds, &act);
        let h = 1e-6;
        let step = |s: f64| FlowState::from_slice(&[w[0] + s * f[0], w[1] + s * f[1], w[2] + s * f[2], w[3] + s * f[3]]);
        let rate = (loss(&step(h), &ds, &act) - loss(&step(-h), &ds, &act)) / (2.0 * h);
        let norm2: f64 = f.iter().map(|v| v * v).sum();
        prop_assert!((rate + norm2).abs() <= 1e-5 * (1.0 + norm2));
    }
}

#[test]
fn network_flow_has_no_quadratic_first_integral() {
    let ds = Dataset::new(vec![1.0, 2.0, -0.7], vec![0.5, -1.0, 0.8]).unwrap();
    let act = activation("silu").unwrap();
    let net = NetworkFlow { ds: &ds, act: &act };
    let heldout = vec![vec![-0.4, 0.9, 0.2, -0.6], vec![1.1, -0.3, -0.8, 0.4]];
    let rep = quadratic_integral_scan(&net, &[0.6, -0.2, 0.9, 0.1], &heldout, 3.0, 1e-6).unwrap();
    assert_eq!(rep.monomials, 14);
    assert!(!rep.conserved, "{rep:?}");
    assert!(rep.heldout_drift.iter().any(|&d| d > 1e-4), "{rep:?}");
}
