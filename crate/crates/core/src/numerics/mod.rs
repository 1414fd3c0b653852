//! fp64 tensors, a reverse-mode tape, parameters, and a finite-difference oracle.

mod adam;
pub mod catalog;
mod dropout;
mod fdcheck;
mod gru;
mod params;
mod tape;
mod tensor;

pub use adam::Adam;
pub use dropout::{maybe_dropout, Dropout};
pub use fdcheck::{finite_difference_check, relative_error, Coordinate, FdConfig, FdReport};
pub use gru::{init_linear, linear, GruCell};
pub use params::{
    named_rng, stream_id, Binding, GradMap, ParamStore, Perturbation, WireParams, WireTensor, CHECKPOINT_VERSION,
};
pub use tape::{Gradients, Tape, Var};
pub use tensor::Tensor;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NumericsError {
    #[error("dimension error in {op}: {detail}")]
    Shape { op: &'static str, detail: String },
    #[error("unknown parameter {0}")]
    MissingParameter(String),
    #[error("non-finite value: {0}")]
    NonFinite(String),
    #[error("objective failed: {0}")]
    Objective(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
}

impl NumericsError {
    pub fn shape(op: &'static str, detail: impl Into<String>) -> Self {
        NumericsError::Shape { op, detail: detail.into() }
    }
}
