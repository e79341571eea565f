#![allow(dead_code)]

use storalloc::dynamics::MoveVariant;
use storalloc::{GameParams, Instance, Topology};

#[allow(unused_imports)]
pub use storalloc::game::legal_moves;
#[allow(unused_imports)]
pub use storalloc::sample::{desk_instances, random_instance, random_params, random_state};

pub const VARIANTS: [MoveVariant; 2] = [MoveVariant::Proportional, MoveVariant::AllocateFirst];

/// Proptest strategy for small instances: `n` units, random directed edge set,
/// demand and capacity up to the given bounds.
pub fn instance_strategy(
    max_n: usize,
    max_alpha: u32,
    max_beta: u32,
) -> impl proptest::strategy::Strategy<Value = Instance> {
    use proptest::prelude::*;
    (1..=max_n)
        .prop_flat_map(move |n| {
            (
                Just(n),
                proptest::collection::vec(any::<bool>(), n * n),
                proptest::collection::vec(0..=max_alpha, n),
                proptest::collection::vec(0..=max_beta, n),
                proptest::collection::vec(0.0f64..2.0, n),
            )
        })
        .prop_map(|(n, mask, alpha, beta, lambda)| {
            let edges = (0..n * n)
                .filter(|&i| mask[i] && i / n != i % n)
                .map(|i| (i / n, i % n));
            Instance::new(Topology::from_edges(n, edges).unwrap(), alpha, beta, lambda).unwrap()
        })
}

pub fn params_strategy() -> impl proptest::strategy::Strategy<Value = GameParams> {
    use proptest::prelude::*;
    (0.0f64..2.0, prop_oneof![Just(0.0), 0.0f64..1.0]).prop_map(|(k_c, k_a)| GameParams::new(k_c, k_a).unwrap())
}
