//! CHSH Bell operators for two qutrits measured with spin-1 observables.
//!
//! The crate builds `B(a, a', b, b')`, reduces it by special-orthogonal SVD
//! to `H_{s,t} = s S_x (x) S_x + t S_z (x) S_z`, computes spectra in closed
//! form and numerically, and certifies `|tr(rho B)| <= 2` by search.

pub mod bell;
pub mod cli;
pub mod error;
pub mod linalg;
pub mod reduction;
pub mod search;
pub mod spectrum;
pub mod spin;
pub mod tolerance;

pub use error::{Error, Result};
