//! Exact asymptotics for joint exceedances of products of independent
//! heavy-tailed factors.
//!
//! Given a rational exponent matrix `A`, thresholds `c` and factor laws, the
//! probability `P(prod_j X_j^{a_ij} > c_i x  for all i)` is regularly varying
//! in `x`; this crate computes its index and the exact limit constant by
//! solving `min sum x_j  s.t.  A x >= 1, x >= 0` in exact rational
//! arithmetic, certifying the uniqueness and non-degeneracy hypotheses, and
//! evaluating the resulting closed form. Monte Carlo simulation and a
//! low-dimensional quadrature oracle cross-check the result numerically.

pub mod lp;
pub mod marginals;
pub mod problem;
pub mod rational;
pub mod tail;
pub mod verify;

pub use lp::{
    certify_uniqueness, dual_info, enumerate_vertices, solve_primal, DualInfo, LpError,
    PrimalSolution, RationalMatrix, SolveStatus, Uniqueness, UniquenessReport, Vertex,
    DEFAULT_ENUM_BUDGET,
};
pub use marginals::{MarginalError, MarginalModel};
pub use problem::ProblemFile;
pub use rational::{format_rational, human_rational, parse_rational, Value};
pub use tail::{
    analyze, analyze_with_budget, positivize, rescale_column, AnalyzeError, ProblemSpec,
    TailError, TailReport,
};
pub use verify::{estimate_ratio, slope_fit, SimulationConfig, SimulationResult};
