//! Convex relaxation hierarchies for polynomial optimization over
//! `K = {x : g_j(x) ≥ 0}`.
//!
//! The crate builds the Krivine–Stengle LP hierarchy, the bounded-degree SOS
//! hierarchy with a fixed-size PSD block, the Putinar SDP hierarchy and their
//! 0/1 (Sherali–Adams style) counterparts as one conic standard form, solves
//! them with a dense primal-dual interior-point method, and checks the
//! resulting positivity certificates coefficient by coefficient. The
//! [`lagrange`] module evaluates and maximizes the Lagrangian dual of the
//! lifted problem at desk scale.

pub mod certify;
pub mod error;
pub mod lagrange;
pub mod polycore;
pub mod problem;
pub mod relax;
pub mod report;
pub mod solver;

pub use error::{Error, Result};
pub use polycore::{Monomial, Polynomial};
pub use problem::{normalize, parse_problem, serialize_problem, ProblemInstance, VarKind};
pub use relax::{Certificate, ConicProgram, Hierarchy};
pub use report::{evaluate, BoundReport, BoundRow, Evaluation};
pub use solver::{solve, SolveResult, SolveStatus, SolverConfig};
