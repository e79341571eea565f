//! Run metrics, welfare optimum and exact small-instance oracles.

pub mod metrics;
pub mod oracle;
pub mod welfare;

pub use metrics::{compute_metrics, partition_by_reliability, ClassMetrics, FieldValue, MetricsReport, Rho};
pub use oracle::{
    build_transition_matrix, completion_analysis, detailed_balance_residual, empirical_distribution,
    enumerate_states, estimate_state_count, is_irreducible, max_global_utility_bruteforce,
    max_potential_bruteforce, stationarity_residual, stationary_exact, total_variation, CompletionAnalysis,
    EmpiricalReport, SpaceKind, StateSpace, StationaryLaw, TransitionMatrix, STATE_SPACE_LIMIT,
};
pub use welfare::{max_load_welfare, welfare_optimum_bound, welfare_ratio, OptimumTag, WelfareOptimum};

use crate::game::GameParams;
use crate::topology::Instance;

/// Largest full-state space scanned for an exact optimum when `k_a > 0`.
pub const EXACT_OPTIMUM_STATE_LIMIT: u128 = 200_000;

/// Best available `F*`: exact when `k_a = 0` or when the full states can be
/// scanned, otherwise the upper bound of [`welfare_optimum_bound`].
pub fn welfare_optimum(inst: &Instance, params: &GameParams) -> Option<WelfareOptimum> {
    if params.k_a > 0.0 {
        if let Ok(space) = enumerate_states(inst, SpaceKind::Full, EXACT_OPTIMUM_STATE_LIMIT) {
            return max_global_utility_bruteforce(inst, params, &space).map(|(value, _)| WelfareOptimum {
                value,
                tag: OptimumTag::Exact,
            });
        }
    }
    welfare_optimum_bound(inst, params)
}
