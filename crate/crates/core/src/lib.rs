//! Symplectic matrices, metaplectic operators on sampled functions, Wigner
//! distributions and Hardy-type uncertainty checks for quadratic flows.

pub mod config;
pub mod corpus;
pub mod error;
mod fiber;
pub mod flow;
pub mod grid;
pub mod hardy;
pub mod interp;
pub mod io;
pub mod linalg;
pub mod metaplectic;
pub mod symplectic;
pub mod wigner;

pub use config::Tolerances;
pub use error::{MpkError, Result};
pub use grid::{fourier_transform, GridFunction};
pub use num_complex::Complex64;
pub use symplectic::{Generator, SymplecticMatrix};
