//! Numerics for the Drury–Arveson space `H²_d` and the uniform Smirnov class
//! on the unit ball of `ℂ^d`.

pub mod dafunc;
pub mod disk_tools;
pub mod duality;
pub mod embeddings;
pub mod error;
pub mod metrics;
pub mod multiindex;
pub mod par;
pub mod series;
pub mod sphere;
pub mod suite;

pub use error::{Error, Result};
pub use multiindex::{enumerate_degree, log_omega, omega, DegreeLayer, MultiIndex};
pub use num_complex::Complex64;
pub use series::TruncatedSeries;
