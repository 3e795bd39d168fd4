//! Transmission through super periodic potentials.
//!
//! A super periodic potential is built by repeating a unit cell `N_1` times
//! with period `s_1`, repeating that block `N_2` times with period `s_2`, and
//! so on. Its transfer matrix has a closed form in terms of Chebyshev
//! polynomials of the second kind, evaluated here without multiplying
//! matrices. Cantor-family fractal potentials are the special case where
//! every tier repeats twice.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod error;
pub mod fractal;
pub mod oracle;
pub mod spp;
pub mod tmcore;
pub mod unitcell;

pub use analysis::{Axis, SweepGrid, System};
pub use error::{Error, Result};
pub use fractal::{FractalKind, FractalSpec};
pub use spp::{OverlapPolicy, Spp, SppMatrix, SppSpec, TierSpec, TierState};
pub use tmcore::{cheb_u, ln_abs_cheb_u, PolarM22, ScatteringResult, TransferMatrix};
pub use unitcell::{EnergyPoint, UnitCell, Units};
