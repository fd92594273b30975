//! Qutrit circuit synthesis and simulation of three-state quantum walks on
//! cycle and dihedral Cayley graphs.

pub mod analysis;
pub mod blockdiag;
pub mod circuit;
pub mod error;
pub mod experiment;
pub mod kernel;
pub mod noise;
pub mod su3;
pub mod walk;

pub use error::{Error, Result};
