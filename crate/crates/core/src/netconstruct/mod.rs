//! Explicit layered networks and the constructions relating ReLU and
//! PolyReLU expressivity: exact lifts, exact polynomial, power and
//! piecewise-linear nets, ReLU approximations of PolyReLU, and a Taylor
//! grid approximator for smooth functions.

use thiserror::Error;

pub mod audit;
pub mod builder;
pub mod combine;
pub mod grid;
pub mod lift;
pub mod net;
pub mod power;
pub mod relu_approx;
pub mod serialize;

pub use audit::{run_audit, Audit, AuditOptions, AuditRow, AuditTable};
pub use builder::Family;
pub use combine::{compose, pad_depth, post_affine, pre_affine, stack};
pub use grid::{error_bound, phi, resolution_for, GridApproximator};
pub use lift::{lift_relu_to_polyrelu, poly_net, poly_to_polyrelu_pair, pwl_net, pwl_to_polyrelu, PiecewiseLinear};
pub use net::{random_relu_net, Act, Layer, LayeredNet, Scalar};
pub use power::power_net;
pub use relu_approx::{
    check_normalized, polyrelu_lipschitz, random_normalized_polyrelu_net, relu_approx_polyrelu,
    relu_approx_polyrelu_net, relu_approx_square, square_stages, tolerance_schedule,
};
pub use serialize::{load_net, save_net};

#[derive(Debug, Error)]
pub enum NetError {
    #[error("invalid network: {0}")]
    Invalid(String),
    #[error("expected {expected} inputs, got {got}")]
    InputDim { expected: usize, got: usize },
    #[error("input outside domain: {0}")]
    Domain(String),
    #[error("unknown audit {0:?}; expected one of square-rate, polyrelu-rate, polyrelu-net, power-rate, grid-rate")]
    UnknownAudit(String),
    #[error("malformed net file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
