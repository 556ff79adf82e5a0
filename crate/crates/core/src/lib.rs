#![allow(clippy::neg_cmp_op_on_partial_ord)]
pub mod baseline;
pub mod error;
pub mod evolve;
pub mod io;
pub mod metrics;
pub mod model;
pub mod noise;
pub mod optim;
pub mod siren;
pub mod synthetic;
pub mod tasks;
pub mod tensor;
pub mod theory;
pub mod wavelet;

pub use error::{CfError, Result};
pub use tensor::{DenseMatrix, DenseTensor3, Mode};
