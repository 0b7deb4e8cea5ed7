//! Minimal dense tensors with reverse-mode differentiation.

mod gradcheck;
mod nn;
mod params;
mod scalar;
mod sgd;
mod tape;
mod tensor;

use thiserror::Error;

pub use gradcheck::{grad_check, GradCheckConfig, GradCheckReport};
pub use nn::{lstm_step, LstmParams};
pub use params::{Gradients, Init, ParamId, ParamSet, Parameter};
pub use scalar::Scalar;
pub use sgd::sgd_step;
pub use tape::{NodeId, Tape};
pub use tensor::Tensor;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NumError {
    #[error("shape mismatch in {op}: {detail}")]
    ShapeMismatch { op: &'static str, detail: String },
    #[error("non-finite value produced by {op}")]
    Numerical { op: &'static str },
    #[error("expected a scalar, got shape {0:?}")]
    NotScalar(Vec<usize>),
    #[error("{0}")]
    InvalidArgument(String),
}

impl NumError {
    pub fn shape(op: &'static str, detail: String) -> Self {
        NumError::ShapeMismatch { op, detail }
    }
}
