//! Numerical laboratory for the Hermitian-Yang-Mills metric flow and the
//! Yang-Mills connection flow on hermitian bundles over flat Kähler tori.

pub mod bundle;
pub mod checkpoint;
pub mod config;
pub mod curvature;
pub mod error;
pub mod field;
pub mod flow;
pub mod functionals;
pub mod hn;
pub mod lattice;
pub mod linalg;
pub mod props;
pub mod sample;
pub mod scenario;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
