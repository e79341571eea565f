//! Random small instances and states, for property tests and exploratory
//! experiments.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::analysis::{enumerate_states, SpaceKind, StateSpace};
use crate::feasibility::check_strict;
use crate::game::{apply_move, available_resources, AllocationState, GameParams, Move};
use crate::topology::{Instance, Topology, UnitId};

/// Directed graph on `n` units with each ordered pair present with probability `p`.
pub fn random_topology<R: Rng>(rng: &mut R, n: usize, p: f64) -> Topology {
    let edges: Vec<(UnitId, UnitId)> = (0..n)
        .flat_map(|x| (0..n).map(move |y| (x, y)))
        .filter(|&(x, y)| x != y)
        .filter(|_| rng.gen_bool(p))
        .collect();
    Topology::from_edges(n, edges).expect("pairs are in range")
}

/// Random graph as in [`random_topology`], demand in `0..=max_alpha`,
/// capacity in `0..=max_beta`, reliability in `[0, 2)`.
pub fn random_instance<R: Rng>(rng: &mut R, n: usize, p: f64, max_alpha: u32, max_beta: u32) -> Instance {
    let topo = random_topology(rng, n, p);
    let alpha = (0..n).map(|_| rng.gen_range(0..=max_alpha)).collect();
    let beta = (0..n).map(|_| rng.gen_range(0..=max_beta)).collect();
    let lambda = (0..n).map(|_| rng.gen_range(0.0..2.0)).collect();
    Instance::new(topo, alpha, beta, lambda).expect("generated values are valid")
}

/// `k_c` in `[0, 2)`; `k_a` is zero half of the time, otherwise in `[0, 1)`.
pub fn random_params<R: Rng>(rng: &mut R) -> GameParams {
    let k_a = if rng.gen_bool(0.5) { 0.0 } else { rng.gen_range(0.0..1.0) };
    GameParams::new(rng.gen_range(0.0..2.0), k_a).expect("generated values are valid")
}

/// Partial state built by `budget` attempts to place an atom of a random unit
/// on a random open neighbor.
pub fn random_state<R: Rng>(rng: &mut R, inst: &Instance, budget: usize) -> AllocationState {
    let mut state = AllocationState::empty(inst.len());
    if inst.is_empty() {
        return state;
    }
    for _ in 0..budget {
        let x = rng.gen_range(0..inst.len());
        if state.allocated(x) >= inst.alpha()[x] {
            continue;
        }
        let open = available_resources(inst, &state, x);
        if let Some(&y) = open.choose(rng) {
            apply_move(inst, &mut state, Move::Allocation { unit: x, dest: y }).expect("move is legal");
        }
    }
    state
}

/// Draws instances with 2 to 5 units, demand at most 3 and capacity at most
/// 4 until `count` have a nonempty full-state space of at most `max_states`
/// states. Returns them with their enumeration.
pub fn desk_instances<R: Rng>(
    rng: &mut R,
    count: usize,
    max_states: usize,
    require_strict: bool,
) -> Vec<(Instance, StateSpace)> {
    let mut out = Vec::new();
    while out.len() < count {
        let n = rng.gen_range(2..=5);
        let p = rng.gen_range(0.4..1.0);
        let inst = random_instance(rng, n, p, 3, 4);
        if inst.total_alpha() == 0 || (require_strict && !check_strict(&inst).feasible) {
            continue;
        }
        let Ok(space) = enumerate_states(&inst, SpaceKind::Full, max_states as u128 * 50) else {
            continue;
        };
        if space.is_empty() || space.len() > max_states {
            continue;
        }
        out.push((inst, space));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn states_are_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let inst = random_instance(&mut rng, 5, 0.5, 3, 3);
            random_state(&mut rng, &inst, 20).validate(&inst).unwrap();
        }
    }

    #[test]
    fn desk_sizes() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for (inst, space) in desk_instances(&mut rng, 10, 100, true) {
            assert!(!space.is_empty() && space.len() <= 100);
            assert!(check_strict(&inst).feasible);
        }
    }
}
