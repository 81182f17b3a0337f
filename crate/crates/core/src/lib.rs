//! Calibration benchmarking for chemical multisensor arrays: dataset
//! ingestion, five regression families, tapped-delay expansion, a
//! grid-search harness and accuracy / dynamics / footprint reports.

pub mod bench;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod kernel;
pub mod linalg;
pub mod linear;
pub mod model;
pub mod neural;
pub mod rng;
pub mod textfmt;

pub use error::{Error, Result};
pub use linalg::Matrix;
pub use model::{MethodKind, TrainedModel};
