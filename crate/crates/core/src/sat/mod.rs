//! From-scratch CDCL satisfiability engine and its DIMACS surface.

pub mod dimacs;
mod heap;
mod lit;
mod solver;

pub use lit::{Lit, Var};
pub use solver::{ConflictAtLevelZero, SolveResult, Solver, SolverConfig, SolverStats};
