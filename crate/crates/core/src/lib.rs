#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! Default intensities and compensators of first-passage and chain-hitting
//! times, with Monte Carlo verification.

pub mod cli;
pub mod compensator;
pub mod config;
pub mod error;
pub mod gaussian;
pub mod levy;
pub mod markov;
pub mod quadrature;
pub mod verification;

pub use error::{HazardError, Result};
