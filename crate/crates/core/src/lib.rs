pub mod dg;
pub mod error;
pub mod error_norms;
pub mod exact;
pub mod linsolve;
pub mod mesh;
pub mod quadrature;
pub mod recovery;

pub use error::{Error, Result};

pub type C64 = num_complex::Complex64;
