//! Quasiregular dynamics in dimensions 2 and 3.
//!
//! The crate builds the classical quasiregular analogues of the exponential,
//! sine, power, and Chebyshev maps from crystallographic data, exposes their
//! functional equations and inverse branches, and provides the dynamical
//! toolkit (escape classification, Julia-set rasters, Denjoy–Wolff limits,
//! distortion estimates) used by the `uqr` command-line tool.

pub mod automorphic;
pub mod crystal;
pub mod dynamics;
pub mod error;
pub mod exec;
pub mod geometry;
pub mod sampling;
pub mod scene;
pub mod schroeder;

pub use error::{Error, Result};
