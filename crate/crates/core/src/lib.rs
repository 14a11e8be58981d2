//! Spectral flow of paths of Hermitian operators at matrix truncation scale.

pub mod cli;
pub mod error;
pub mod fixtures;
pub mod flow;
pub mod linalg;
pub mod operator;
pub mod paths;
pub mod projection;
pub mod random;
pub mod scalar;
pub mod winding;

pub use error::{Error, Result};
pub use flow::{spectral_flow, spectral_flow_oracle, FlowOptions, SpectralFlowResult};
pub use operator::{EigenDecomposition, HermitianOperator};
pub use paths::{OperatorPath, OperatorRectangle, UnitaryPath};
pub use projection::Projection;
