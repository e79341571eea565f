mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use storalloc::analysis::{enumerate_states, max_potential_bruteforce, SpaceKind, STATE_SPACE_LIMIT};
use storalloc::game::*;
use storalloc::{Error, Gamma, Move};

use common::{instance_strategy, legal_moves, params_strategy, random_state};

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn potential_tracks_mover_utility(
        inst in instance_strategy(6, 4, 5),
        params in params_strategy(),
        seed in any::<u64>(),
        budget in 0usize..30,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let state = random_state(&mut rng, &inst, budget);
        let before = potential(&inst, &params, &state);
        for mv in legal_moves(&inst, &state) {
            let mut next = state.clone();
            apply_move(&inst, &mut next, mv).unwrap();
            let delta = potential(&inst, &params, &next) - before;
            let gain = match mv {
                Move::Allocation { unit, dest } => utility(&inst, &params, &next, unit, dest).unwrap(),
                Move::Distribution { unit, source, dest } => {
                    if source == dest {
                        0.0
                    } else {
                        utility(&inst, &params, &next, unit, dest).unwrap()
                            - utility(&inst, &params, &state, unit, source).unwrap()
                    }
                }
            };
            prop_assert!(close(delta, gain), "{mv:?}: dPsi {delta} vs df {gain}");
        }
    }

    #[test]
    fn moves_keep_invariants(inst in instance_strategy(6, 4, 4), seed in any::<u64>(), budget in 0usize..30) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let state = random_state(&mut rng, &inst, budget);
        state.validate(&inst).unwrap();
        for x in 0..inst.len() {
            for y in 0..inst.len() {
                for mv in [
                    Move::Allocation { unit: x, dest: y },
                    Move::Distribution { unit: x, source: y, dest: (y + 1) % inst.len() },
                ] {
                    let mut next = state.clone();
                    match apply_move(&inst, &mut next, mv) {
                        Ok(()) => next.validate(&inst).unwrap(),
                        Err(e) => {
                            prop_assert!(matches!(e, Error::RejectedMove(_)));
                            prop_assert_eq!(&next, &state);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn gibbs_is_a_distribution(
        inst in instance_strategy(6, 3, 4),
        params in params_strategy(),
        gamma in 0.01f64..50.0,
        shift in 0.0f64..5.0,
    ) {
        let state = AllocationState::empty(inst.len());
        for x in 0..inst.len() {
            let open = available_resources(&inst, &state, x);
            if open.is_empty() {
                prop_assert!(gibbs_choice_distribution(&inst, &params, &state, x, &open, Gamma::Finite(gamma)).is_err());
                continue;
            }
            let p = gibbs_choice_distribution(&inst, &params, &state, x, &open, Gamma::Finite(gamma)).unwrap();
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            prop_assert!(p.iter().all(|&q| q >= 0.0));
            // adding a constant to every reliability changes nothing
            let lifted = inst.with_lambda(inst.lambda().iter().map(|l| l + shift).collect()).unwrap();
            let q = gibbs_choice_distribution(&lifted, &params, &state, x, &open, Gamma::Finite(gamma)).unwrap();
            for (a, b) in p.iter().zip(&q) {
                prop_assert!((a - b).abs() < 1e-9);
            }
        }
    }
}

#[test]
fn gibbs_concentrates_on_best_response() {
    let inst = storalloc::Instance::new(
        storalloc::topology::build_complete(4).unwrap(),
        vec![1; 4],
        vec![2; 4],
        vec![0.1, 0.5, 0.9, 0.9],
    )
    .unwrap();
    let params = GameParams::new(1.0, 0.0).unwrap();
    let state = AllocationState::empty(4);
    let open = available_resources(&inst, &state, 0);
    assert_eq!(open, vec![1, 2, 3]);
    let mut prev = 0.0;
    for g in [0.1, 1.0, 10.0, 100.0] {
        let p = gibbs_choice_distribution(&inst, &params, &state, 0, &open, Gamma::Finite(g)).unwrap();
        let top = p[1] + p[2];
        assert!(top > prev);
        prev = top;
    }
    assert!(prev > 1.0 - 1e-12);
    let best = gibbs_choice_distribution(&inst, &params, &state, 0, &open, Gamma::Infinite).unwrap();
    assert_eq!(best, vec![0.0, 0.5, 0.5]);
    let full = AllocationState::from_triples(&inst, &[(1, 2, 1), (3, 2, 1)]).unwrap();
    assert!(matches!(
        gibbs_choice_distribution(&inst, &params, &full, 0, &[2], Gamma::Infinite),
        Err(Error::InvalidCall(_))
    ));
}

#[test]
fn potential_maximizers_are_nash() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut checked = 0;
    for (inst, space) in common::desk_instances(&mut rng, 60, 1500, false) {
        let params = common::random_params(&mut rng);
        let (_, argmax) = max_potential_bruteforce(&inst, &params, &space).unwrap();
        for i in argmax {
            assert!(is_nash(&inst, &params, &space.states()[i]).unwrap());
            checked += 1;
        }
    }
    assert!(checked >= 60);
}

#[test]
fn multinomial_weight_matches_log() {
    let inst = storalloc::Instance::uniform(storalloc::topology::build_complete(3).unwrap(), 3, 6, 1.0).unwrap();
    let space = enumerate_states(&inst, SpaceKind::Full, STATE_SPACE_LIMIT).unwrap();
    for s in space.states() {
        let exact: f64 = multinomial_weight(&inst, s).to_string().parse().unwrap();
        assert!((exact.ln() - log_multinomial_weight(&inst, s)).abs() < 1e-12);
    }
    // total count of atom assignments: 2^3 per unit
    let total: u64 = space
        .states()
        .iter()
        .map(|s| multinomial_weight(&inst, s).to_string().parse::<u64>().unwrap())
        .sum();
    assert_eq!(total, 8 * 8 * 8);
}

#[test]
fn nash_needs_full_state() {
    let inst = storalloc::presets::line_deadlock_instance();
    let s = storalloc::presets::line_deadlock_state(&inst);
    assert!(is_nash(&inst, &storalloc::presets::line_deadlock_params(), &s).is_err());
}
