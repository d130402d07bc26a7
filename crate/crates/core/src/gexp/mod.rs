//! g-expectations on binomial trees: the driver catalogue and its audit, the
//! explicit backward scheme, max-min recursion, entropic routes and
//! refinement studies.

mod bsde;
mod convergence;
mod entropy;
mod falsify;
mod generator;

pub use bsde::{g_risk, maxmin_dp, solve_bsde, BsdeSolution, ComparisonStatus, MaxminMode, SLOPE_INFLATION};
pub use convergence::{
    convergence_study, lattice_backward, lattice_bsde, lattice_terminal, ConvergenceRow, ConvergenceTable, MAX_LATTICE_STEPS,
};
pub use entropy::{
    entropic_bsde, entropic_maximizer, relative_entropy, relative_entropy_chain, variational_gap, zero_base, EntropicRoutes,
};
pub use falsify::{find_star_violation, star_sample_violations, StarViolation};
pub use generator::{
    check_generator, default_grids, symmetric_grid, FlagCheck, Generator, GeneratorFlags, GeneratorReport, GeneratorSpec,
    GridWitness,
};
