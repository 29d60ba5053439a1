//! Exact experiments on spin systems over small graphs: influence matrices and
//! spectral independence, local spectral expansion of the associated simplicial
//! complex, entropy factorization constants, Glauber and block dynamics, and
//! monomer-dimer influence bounds through self-avoiding-walk trees.

#[cfg(feature = "cli")]
pub mod cli;
pub mod dynamics;
pub mod error;
pub mod exact;
pub mod factorization;
pub mod graph;
pub mod linalg;
pub mod matching;
pub mod models;
pub mod optimize;
pub mod simplicial;
pub mod util;

pub use error::{Error, Result};
