//! Polarizations (two-point rearrangements), discrete Schwarz symmetrization
//! and a constrained symmetric minimizer on uniform Cartesian grids.
//!
//! Fields live on a centred box `[-L, L]^N` (`N <= 3`) with an odd number of
//! points per axis, so the origin and every reflection used by a polarization
//! map grid points onto grid points. Everything in this crate is pure
//! computation; file formats, the FFT convolution backend and the command-line
//! front end live in the `polsym` crate.
#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod energy;
pub mod error;
pub mod grid;
pub mod minimize;
pub mod rearrange;
pub mod verify;

mod math;

pub use error::{Error, Result};
pub use grid::{GridSpec, MultiField, ScalarField};
pub use rearrange::HalfSpace;
