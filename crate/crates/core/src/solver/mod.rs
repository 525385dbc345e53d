//! LP engine, branch-and-bound MILP solver and brute-force oracle.

pub mod bnb;
pub mod brute;
pub mod lp;
pub mod relax;
pub mod verify;

pub use bnb::{solve_milp, BnBConfig, Branching, LpUsage, NodeSelection, SolveResult, SolveStatus};
pub use brute::{brute_force_maxmin, BruteForceResult};
pub use verify::{run_equivalence_suite, verify_equivalence, EquivalenceReport, SuiteReport};
