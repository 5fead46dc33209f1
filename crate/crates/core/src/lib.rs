//! Numerical toolkit for the arithmetic "spectrum of factoring": prime
//! counting, semiprime ensembles, a semiclassical line spectrum, level-spacing
//! statistics, spectrum-inversion factoring and a classical trap simulator.

// `!(a >= b)` is used on purpose so that NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod ensemble;
pub mod error;
pub mod inversion;
pub mod io;
pub mod par;
pub mod primes;
pub mod spacing_stats;
pub mod spectrum;
pub mod trap_sim;

pub use error::{Error, Result};
