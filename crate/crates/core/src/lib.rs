//! Homogenized spectral data of indefinite-weight eigenproblems on thin
//! periodic rods.
//!
//! The pipeline runs from coefficient expressions ([`expr`]) through finite
//! element assembly ([`fem`]) and sparse eigensolvers ([`eigen`]) to the cell
//! quantities ([`cell`]), the limit oscillator ([`oscillator`]) and direct
//! fine-scale verification ([`finescale`]).

pub mod error;
pub mod expr;
pub mod cell;
pub mod cli;
pub mod eigen;
pub mod fem;
pub mod finescale;
pub mod oscillator;

pub use error::{Error, Result};
