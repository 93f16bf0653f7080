//! Polarization analysis for birefringent optical fibers.
//!
//! Stokes and Mueller calculus, a two-LCVR polarization state generator,
//! least-squares Mueller retrieval with uncertainty, Lu-Chipman polar
//! decomposition with retardance unwrapping, and simulators for random,
//! polarization-maintaining, twisted and spun fibers.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod decomposition;
pub mod error;
pub mod fiber;
pub mod fixture;
pub mod io;
pub mod jones;
pub mod mueller;
pub mod psg;
pub mod report;
pub mod retrieval;
pub mod rng;
pub mod stokes;

pub use error::{Error, Result};
pub use mueller::MuellerMatrix;
pub use stokes::{PoincarePoint, StokesVector};
