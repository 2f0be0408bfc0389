//! Probabilistic teleportation of an unknown two-qubit state through a partly
//! entangled four-qubit channel.
//!
//! Alice holds the payload on qubits 1,2 and channel qubits 3,4; Bob holds 5,6.
//! Two Bell measurements (on 2,3 and 1,4) collapse Bob's pair onto a distorted
//! copy of the payload. Bob attaches two ancillas, entangles them with two
//! CNOTs and performs a five-outcome POVM on the ancillas. Four outcomes
//! identify a Pauli correction that recovers the payload exactly; the fifth is
//! inconclusive. The protocol never returns a wrong state.
//!
//! Module map:
//!
//! * [`statevec`]: dense labelled statevectors and small operators.
//! * [`eigen`]: cyclic Jacobi eigensolver for small Hermitian matrices.
//! * [`protocol`]: payload/channel types, the six-qubit world state, Bell
//!   measurements, closed-form collapsed states and Bob's CNOT stage.
//! * [`povm`]: the discrimination POVM, its feasibility parameter, sampling,
//!   corrections and per-branch plans.
//! * [`analysis`]: fidelity, closed-form success probabilities and the exact
//!   branch enumeration oracle.
//! * [`harness`]: seeded Monte Carlo trials, CSV/JSON persistence and the CLI.

pub mod analysis;
pub mod eigen;
pub mod error;
pub mod harness;
pub mod povm;
pub mod protocol;
pub mod statevec;

pub use error::{Error, Result};
pub use num_complex::Complex64;
