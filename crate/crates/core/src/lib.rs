pub mod boundary;
pub mod dilation;
pub mod error;
pub mod json;
pub mod matrix_convex;
pub mod numerics;
pub mod pipeline;
pub mod verify;

pub use error::{Error, Result};
pub use numerics::{CMatrix, Tolerances};
