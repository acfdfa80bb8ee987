//! Hardy space infinite elements for Helmholtz scattering and resonance
//! problems on convex polygonal domains.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod assembly;
pub mod basis;
pub mod dense;
pub mod error;
pub mod exterior;
pub mod fem;
pub mod hardy;
pub mod mesh;
pub mod quadrature;
pub mod segmentation;
pub mod scalar;
pub mod solver_1d;
pub mod solvers;
pub mod sparse;
pub mod waveguide;

pub use error::{HsieError, Result};
pub use scalar::{Cplx, Real};

/// Double precision complex scalar used by assembly and the solvers.
pub type C64 = num_complex::Complex<f64>;
pub type DenseMatrix64 = dense::DenseMatrix<f64>;
pub type HardyParams64 = hardy::HardyParams<f64>;
