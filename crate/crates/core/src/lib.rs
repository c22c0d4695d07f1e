//! Learn the unitary of a quantum circuit from input/output statevector pairs
//! with a single-layer network whose weights are kept unitary, then turn the
//! learned matrix back into elementary gates.
//!
//! Qubit 0 is the most significant bit of a basis index everywhere in this
//! crate: for `n` qubits, basis state `|q0 q1 ... q(n-1)>` has index
//! `q0 * 2^(n-1) + ... + q(n-1)`.

pub mod dataset;
pub mod error;
pub mod linalg;
pub mod qsim;
pub mod synth;
pub mod trainer;

pub use error::{Error, Result};
pub use linalg::{ComplexMatrix, ComplexScalar, StateVector};
