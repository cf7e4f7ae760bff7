pub mod cli;
pub mod delayed;
pub mod error;
pub mod interp;
pub mod linear;
pub mod matrix;
pub mod nonlinear;
pub mod oracle;
pub mod quadrature;
pub mod special;

pub use error::{Error, Result};
pub use matrix::SquareMatrix;
