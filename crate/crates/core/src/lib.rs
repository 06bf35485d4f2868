pub mod bitcode;
pub mod cli;
pub mod data;
pub mod encoder;
pub mod error;
pub mod eval;
pub mod index;
pub mod nn;
pub mod pipeline;
pub mod regime;
pub mod training;

pub use bitcode::Bitcode;
pub use error::{Error, Result};
pub use regime::Regime;
