//! Fully entangled fraction, conditional entropies and thermodynamic work
//! bounds for bipartite quantum states on `C^d ⊗ C^d`.
//!
//! Index convention: the basis vector `|i⟩ ⊗ |m⟩` sits at `i * d + m`
//! (Alice is the slow index). See [`linalg`].

pub mod cli;
pub mod entropy;
pub mod error;
pub mod fef;
pub mod linalg;
pub mod process;
pub mod qsdp;
pub mod random;
pub mod report;
pub mod state;
pub mod statefile;
pub mod thermo;

pub use error::{Error, Result};
