//! Small dense convex programs over Hermitian PSD matrices, complex vectors
//! and real scalars, solved by a log-barrier interior-point method.
//!
//! The IRS charging probe, WD charging covariance, detector and reflection
//! QCQPs are each built as a [`ConicProgram`] and handed to [`solve_conic`].

mod barrier;
mod program;
mod rank;

pub use barrier::{solve_conic, SolverSettings};
pub use program::{
    ConicProgram, ConicSolution, LinExpr, MatVar, RealVar, Sense, SolveStatus, VecVar,
};
pub use rank::{dc_rank_step, rank_one_extract, rank_residual, DcMinorant, RankOne};
