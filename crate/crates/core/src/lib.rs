//! Variational (minmax) and viscosity solutions of `u_t + H(t, x, u_x) = 0`
//! on the 1-D/2-D torus and the line.

pub mod cli;
pub mod domain;
pub mod error;
pub mod flow;
pub mod gfqi;
pub mod minmax;
pub mod optim;
pub mod semigroup;
pub mod settings;
pub mod viscosity;

pub use error::{Error, Result};
