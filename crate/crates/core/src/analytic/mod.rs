//! Exact and numerical solutions: the Kaufman-Roberts recursion for
//! complete sharing, generator-matrix steady state, and transient
//! probabilities by uniformization.

mod ctmc;
mod kaufman_roberts;

pub use ctmc::{
    blocking_probabilities, build_generator, feasible_state_count, mean_counts,
    occupancy_distribution, steady_state, steady_state_with_tolerance, transient,
    transient_with_epsilon, GeneratorMatrix, StateSpace, DEFAULT_STATE_LIMIT,
    DEFAULT_STEADY_TOLERANCE, DEFAULT_TRANSIENT_EPSILON, DENSE_SOLVE_LIMIT,
};
pub use kaufman_roberts::{
    kaufman_roberts, kaufman_roberts_loads, KaufmanRoberts, OccupancyDistribution,
};
