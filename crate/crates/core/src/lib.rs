//! Block Lanczos quadratures for transfer functions of diffusion operators.

pub mod cli;
pub mod error;
pub mod lanczos;
pub mod linalg;
pub mod optimizer;
pub mod problems;
pub mod quadratures;
pub mod sparse;
pub mod statefield;
pub mod stieltjes;
pub mod tridiag;

pub use error::{Error, Result};
