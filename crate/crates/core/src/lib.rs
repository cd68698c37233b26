//! Variational solver for generalized eigenvalue problems `A v = λ B v`.
//!
//! Candidate eigenvectors are the outputs of a simulated parameterized circuit
//! of single-qubit gates (each a unit quaternion) and CZ entanglers. The
//! objective `⟨A⟩/⟨B⟩` is a ratio of quadratic forms in any one gate's
//! quaternion, so each gate can be set to its exact optimum by a 4×4 pencil
//! eigenproblem. Sweeping over the gates gives a sequential optimizer that
//! runs with exact expectations or with finite-shot estimates.
//!
//! Basis convention: qubit 0 is the most significant bit of a basis index.

pub mod analysis;
pub mod error;
pub mod fem;
pub mod gep;
pub mod operators;
pub mod seqopt;
pub mod statevector;

pub use error::{Error, Result};
pub use gep::{ClassicalSolution, EigenPair, GEProblem, PadRegime, SleProblem};
pub use operators::{HermitianOperator, Observable, Rank1Projector, ShotPlan, XbmGrouping};
pub use seqopt::{
    GateUpdate, InitStrategy, OptimizeOptions, OptimizeTrace, OptimizerKind, SMatrixPair, Sense,
};
pub use statevector::{AnsatzKind, CircuitLayout, GateQuaternion, StateVector};
