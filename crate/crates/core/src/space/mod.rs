//! Finite filtered probability spaces and their conditional calculus.

mod calculus;
mod measure;
mod payoff;
mod tree;
mod variable;

pub use calculus::{backward, cond_ess_extrema, cond_expect, lift, subtree_law, Extremum};
pub use measure::MeasureChange;
pub use payoff::{FunctionalParams, PathFunctional, PayoffSpec, Transform};
pub use tree::{NodeId, NodeRecord, ScenarioTree, TreeDocument, TreeKind, DEFAULT_MAX_LEVELS, STOCHASTIC_TOL};
pub use variable::{AdaptedProcess, Profile, RandomVariable};
