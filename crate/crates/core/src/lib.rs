//! Multimodal, multiway data association.
//!
//! Similarity scores from several modalities, observed between elements of
//! `n` sets, are fused into one binary element-to-universe assignment that is
//! one-to-one, respects within-set distinctness and is cycle consistent by
//! construction.
//!
//! The crate is organised as:
//!
//! - [`problem`]: instances, score matrices, assignments, feasibility and
//!   cycle-consistency checks.
//! - [`relax`]: the penalised continuous relaxation, its gradient and the
//!   original Frobenius objective.
//! - [`solver`]: projected gradient descent with Armijo backtracking under a
//!   continuation schedule on the penalty weight.
//! - [`oracle`]: exact minimisation by enumeration on small instances.
//! - [`synth`]: synthetic instances with ground truth.
//! - [`bench`]: precision/recall, optimality gap, Monte-Carlo harnesses.
//! - [`io`]: JSON instance, truth and result files.

pub mod bench;
pub mod error;
pub mod io;
pub mod oracle;
pub mod problem;
pub mod relax;
pub mod solver;
pub mod synth;

pub use error::{Error, Result};
pub use problem::{Assignment, ClusterLabeling, Instance, ModalityMatrices};
pub use relax::{PenaltyWeight, RelaxationData};
pub use solver::{solve, SolverConfig, SolverResult};
