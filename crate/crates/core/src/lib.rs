//! Spectral solvers for the stationary Stokes-Coriolis system
//! −Δu + e₃×u + ∇p = 0, ∇·u = 0 above a periodic bottom.

pub mod channel_solver;
pub mod cli;
pub mod dtn_operator;
pub mod error;
pub mod grid;
pub mod halfspace_solver;
pub mod kernel_estimates;
pub mod numerics;
pub mod singular_integral;
pub mod spectral_core;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
