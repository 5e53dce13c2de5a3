//! Weighted spherical cap averages, their spectral multipliers, and the
//! square functions that characterize Sobolev spaces on `S^{d-1}`.

pub mod caps;
pub mod coeffs;
pub mod error;
pub mod legendre;
pub mod quadrature;
pub mod remainders;
pub mod sobolev;
pub mod sphere2;
pub mod weights;

pub use error::{Error, Result};
