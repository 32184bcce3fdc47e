//! Symbol calculus, structural classification, slicing and BV verification
//! for homogeneous constant-coefficient linear differential operators.

pub mod bv;
pub mod catalog;
pub mod classify;
pub mod cli;
pub mod error;
pub mod linearize;
pub mod linalg;
pub mod operator;
pub mod sampling;
pub mod slicing;
pub mod subspace;
pub mod tensor;

pub use error::{Error, Result};
pub use operator::Operator;
pub use subspace::Subspace;
