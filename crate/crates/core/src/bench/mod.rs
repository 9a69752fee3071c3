//! Benchmark harness: built-in problems, the seeded multistart comparison of
//! the three solvers, and the counterexample certification.

mod functions;
mod harness;

pub use functions::{builtin_problem, UnknownProblem, BENCHMARK_FUNCTIONS};
pub use harness::*;
