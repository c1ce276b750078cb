//! Entanglement detection with quantum 2-designs.
//!
//! The crate provides the PPT, CCNR, ESIC/E2D, LUR and LSIC/L2D separability
//! tests on dense bipartite density matrices, the SIC POVMs and general
//! equal-weight 2-designs those tests measure with, and a harness that
//! locates detection thresholds and runs seeded random-state sweeps.
//!
//! Module map:
//! - [`matcore`]: complex matrix kernels (Kronecker products, partial
//!   trace/transpose, realignment, Jacobi SVD and Hermitian eigenvalues).
//! - [`designs`]: SIC construction, frame-potential optimization,
//!   certification and the normalized design operators.
//! - [`states`]: Bell mixtures, bound entangled families, random ensembles.
//! - [`criteria`]: the separability tests and operator Schmidt decomposition.
//! - [`harness`]: thresholds, sweeps and the reproducible reports behind the CLI.

pub mod criteria;
pub mod designs;
pub mod error;
pub mod harness;
pub mod matcore;
pub mod states;

pub use error::{Error, Result};
