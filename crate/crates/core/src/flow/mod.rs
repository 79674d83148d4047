//! The two-layer one-neuron network, its gradient flow, activation
//! profiles, datasets, and a generic adaptive integrator.

mod activation;
mod dataset;
mod integrate;
mod network;

pub use activation::{activation, find_critical_point, ActivationProfile, CriticalPoint, ACTIVATION_NAMES};
pub use dataset::{Dataset, Moments};
pub use integrate::{integrate, IntegrateError, IntegrateOptions, Trajectory};
pub use network::{flow_field, flow_jacobian, loss, FlowState};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FlowError {
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("dataset columns differ in length ({xs} x values, {ys} y values)")]
    LengthMismatch { xs: usize, ys: usize },
    #[error("dataset value at row {row} is not finite")]
    NonFiniteData { row: usize },
    #[error("sigma' has no zero in [{lo}, {hi}]")]
    NoCriticalPoint { lo: f64, hi: f64 },
    #[error("critical point {b_hat} is degenerate: sigma = {sigma}, sigma'' = {sigma2}")]
    DegenerateCritical { b_hat: f64, sigma: f64, sigma2: f64 },
}
