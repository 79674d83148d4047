//! Non-integrability certificates for the one-neuron gradient flow.

mod certificate;
mod coefficients;
mod crossval;
mod curve;

pub use certificate::{certify, CertifyConfig, Gate, GaloisCertificate, RationalizedCheck, SCHEMA_VERSION};
pub use coefficients::{
    assemble_coefficients, choose_b2hat, n_tau_expansion_check, normal_form, normal_form_oracle, printed_normal_form,
    r2_terms, r2_terms_expanded, r2_terms_printed, r2_zero_locus, reduce_to_second_order, B2Choice, CoefficientSet,
    LinearCoefficients, NTauReport, NormalFormCoeffs, NormalFormOracle, ReducedODE, B2_OFFSETS, RM2,
};
pub use crossval::{cross_validate, reduction_check, CrossValidation, CROSSVAL_ETA0};
pub use curve::{
    integral_curve, integral_curve_derivative, validate_integral_curve, CriticalPointRecord, IntegralCurveParams,
};

use crate::flow::{FlowError, IntegrateError};
use crate::variational::VariationalError;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CertifyError {
    #[error("amplitude b2_hat - ybar is zero")]
    ZeroAmplitude,
    #[error("sum of inputs vanishes (xbar = {xbar})")]
    XbarZero { xbar: f64 },
    #[error("A12 is zero")]
    A12Zero,
    #[error("coupling row A12 x + B12 vanishes identically")]
    DegenerateCoupling,
    #[error("no b2_hat among {tried} candidates gives a nonvanishing r2")]
    ScanExhausted { tried: usize },
    #[error("least-squares fit of the normal form failed")]
    OracleFit,
    #[error("integration interval contains the pole of the reduced equation")]
    PoleInSpan,
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error(transparent)]
    Integrate(#[from] IntegrateError),
    #[error(transparent)]
    Variational(#[from] VariationalError),
}
