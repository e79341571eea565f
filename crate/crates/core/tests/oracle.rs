mod common;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use storalloc::analysis::*;
use storalloc::dynamics::MoveVariant;
use storalloc::feasibility::check_strict;
use storalloc::presets::{line_deadlock_instance, line_deadlock_params, line_deadlock_state};
use storalloc::{AllocationState, GameParams, Gamma, Instance};

use common::{desk_instances, random_params, VARIANTS};

#[test]
fn closed_form_law_is_stationary_and_reversible() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for (inst, space) in desk_instances(&mut rng, 25, 400, false) {
        let params = random_params(&mut rng);
        let gamma = rng.gen_range(0.1..3.0);
        let law = stationary_exact(&inst, &params, &space, gamma).unwrap();
        assert!((law.mu.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        for variant in VARIANTS {
            let full = build_transition_matrix(&inst, &params, &space, Gamma::Finite(gamma), variant).unwrap();
            assert!(full.row_sum_error() < 1e-12);
            assert!(detailed_balance_residual(&law.mu, &full) < 1e-10);
            assert!(stationarity_residual(&law.mu, &full) < 1e-10);
            if law.strict {
                assert!(is_irreducible(&full));
            }
        }
    }
}

#[test]
fn greedy_optimum_matches_scan_without_aggregation() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    for (inst, space) in desk_instances(&mut rng, 150, 3000, false) {
        let k_c = if rng.gen_bool(0.3) { 0.0 } else { rng.gen_range(0.0..2.0) };
        let params = GameParams::new(k_c, 0.0).unwrap();
        let (scan, _) = max_global_utility_bruteforce(&inst, &params, &space).unwrap();
        let (greedy, loads) = max_load_welfare(&inst, &params).unwrap();
        assert!((scan - greedy).abs() < 1e-9 * scan.abs().max(1.0), "{scan} vs {greedy}");
        assert_eq!(loads.iter().map(|&l| l as u64).sum::<u64>(), inst.total_alpha());
        let opt = welfare_optimum(&inst, &params).unwrap();
        assert_eq!(opt.tag, OptimumTag::Exact);
    }
}

#[test]
fn surrogate_bounds_the_optimum() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for (inst, space) in desk_instances(&mut rng, 100, 3000, false) {
        let params = GameParams::new(rng.gen_range(0.0..2.0), rng.gen_range(0.01..1.0)).unwrap();
        let (scan, _) = max_global_utility_bruteforce(&inst, &params, &space).unwrap();
        let bound = welfare_optimum_bound(&inst, &params).unwrap();
        assert_eq!(bound.tag, OptimumTag::Surrogate);
        assert!(bound.value >= scan - 1e-9);
        assert_eq!(welfare_optimum(&inst, &params).unwrap().value, scan);
    }
}

#[test]
fn pure_reliability_optimum() {
    // k_c = k_a = 0: fill the most reliable resources first
    let inst = Instance::new(
        storalloc::topology::build_complete(4).unwrap(),
        vec![3, 2, 2, 1],
        vec![2, 3, 1, 4],
        vec![0.2, 0.9, 0.5, 0.1],
    )
    .unwrap();
    let params = GameParams::new(0.0, 0.0).unwrap();
    let (value, loads) = max_load_welfare(&inst, &params).unwrap();
    assert_eq!(loads, vec![2, 3, 1, 2]);
    assert!((value - (0.4 + 2.7 + 0.5 + 0.2)).abs() < 1e-12);
}

#[test]
fn best_response_line_deadlocks() {
    let inst = line_deadlock_instance();
    let params = line_deadlock_params();
    let space = enumerate_states(&inst, SpaceKind::Partial, STATE_SPACE_LIMIT).unwrap();
    let empty = AllocationState::empty(inst.len());
    let stuck = line_deadlock_state(&inst);
    let p = build_transition_matrix(&inst, &params, &space, Gamma::Infinite, MoveVariant::AllocateFirst).unwrap();
    let from_empty = completion_analysis(&inst, &space, &p, &empty).unwrap();
    assert!(from_empty.can_deadlock());
    let idx = space.index_of(&inst, &stuck).unwrap();
    assert!(from_empty.stuck.contains(&idx));
    for gamma in [0.5, 5.0] {
        let p = build_transition_matrix(&inst, &params, &space, Gamma::Finite(gamma), MoveVariant::AllocateFirst).unwrap();
        assert!(!completion_analysis(&inst, &space, &p, &stuck).unwrap().can_deadlock());
    }
}

#[test]
fn finite_gamma_never_deadlocks_on_strict_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(24);
    let mut checked = 0;
    while checked < 40 {
        let inst = common::random_instance(&mut rng, 4, 0.6, 2, 3);
        if inst.total_alpha() == 0 || !check_strict(&inst).feasible {
            continue;
        }
        let Ok(space) = enumerate_states(&inst, SpaceKind::Partial, 20_000) else {
            continue;
        };
        let params = random_params(&mut rng);
        for variant in VARIANTS {
            let p = build_transition_matrix(&inst, &params, &space, Gamma::Finite(1.0), variant).unwrap();
            let report = completion_analysis(&inst, &space, &p, &AllocationState::empty(inst.len())).unwrap();
            assert!(!report.can_deadlock());
            assert!(report.reachable >= 1);
        }
        checked += 1;
    }
}

#[test]
fn sampled_occupancy_matches_law() {
    let inst = Instance::uniform(storalloc::topology::build_complete(3).unwrap(), 1, 2, 1.0).unwrap();
    let params = GameParams::new(1.0, 0.0).unwrap();
    let space = enumerate_states(&inst, SpaceKind::Full, STATE_SPACE_LIMIT).unwrap();
    assert_eq!(space.len(), 8);
    let law = stationary_exact(&inst, &params, &space, 1.0).unwrap();
    let report = empirical_distribution(&inst, &params, &space, &law.mu, 1.0, 1000, 200_000, 7).unwrap();
    assert!(report.total_variation < 0.01, "TV {}", report.total_variation);
    assert_eq!(report.unvisited, 0);
}
