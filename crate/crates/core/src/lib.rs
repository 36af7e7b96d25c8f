//! Exact statevector simulation of the HHL linear-systems algorithm.

pub mod amplify;
pub mod clock;
pub mod error;
pub mod filters;
pub mod hhl;
pub mod io;
pub mod linalg;
pub mod observables;
pub mod phase_est;
pub mod qstate;
pub mod random;

pub use error::{Error, Result};
pub use num_complex::Complex64;
