//! Sparse storage, direct factorization and eigensolvers.

pub mod eigen;
pub mod envelope;
pub mod sparse;

pub use eigen::{cluster, smallest_generalized, Cluster, EigenOptions, EigenResult, SolverMethod};
pub use envelope::EnvelopeCholesky;
pub use sparse::{CsrMatrix, TripletBuilder};
