//! Exact small-instance oracles: enumeration of allocation states, the one-step
//! kernel of the dynamics, the closed-form stationary law, and comparisons
//! against simulated occupancy.

use std::collections::{HashMap, VecDeque};

use serde::Serialize;

use crate::dynamics::{move_kind_probabilities, MoveVariant, SimConfig, Simulator};
use crate::error::{Error, Result};
use crate::feasibility::check_strict;
use crate::game::{
    gibbs_weights, global_utility, log_multinomial_weight, potential, post_placement_utility, AllocationState,
    GameParams, Gamma,
};
use crate::topology::{Instance, UnitId};

/// Default cap on the estimated number of states.
pub const STATE_SPACE_LIMIT: u128 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SpaceKind {
    /// Every unit has placed all of its atoms.
    Full,
    /// Any state satisfying the support and capacity constraints.
    Partial,
}

/// Enumerated states with a lookup from [`AllocationState::edge_key`].
#[derive(Debug, Clone)]
pub struct StateSpace {
    pub kind: SpaceKind,
    states: Vec<AllocationState>,
    index: HashMap<Vec<u32>, usize>,
}

impl StateSpace {
    pub fn states(&self) -> &[AllocationState] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn index_of(&self, inst: &Instance, state: &AllocationState) -> Option<usize> {
        self.index.get(&state.edge_key(inst)).copied()
    }
}

fn binomial(n: u128, k: u128) -> u128 {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul(n - i) / (i + 1);
    }
    acc
}

/// Product over units of the number of ways to spread their atoms over their
/// out-neighbors, ignoring capacities. Upper bound on the state count.
pub fn estimate_state_count(inst: &Instance, kind: SpaceKind) -> u128 {
    let mut total: u128 = 1;
    for x in 0..inst.len() {
        let a = inst.alpha()[x] as u128;
        let d = inst.topology().out_degree(x) as u128;
        let ways = match kind {
            // compositions of exactly a into d parts
            SpaceKind::Full if d == 0 => (a == 0) as u128,
            SpaceKind::Full => binomial(a + d - 1, d - 1),
            // compositions of at most a into d parts
            SpaceKind::Partial => binomial(a + d, d),
        };
        total = total.saturating_mul(ways);
    }
    total
}

/// Enumerates the full (or all partial) allocation states, depth-first over
/// units in index order.
pub fn enumerate_states(inst: &Instance, kind: SpaceKind, limit: u128) -> Result<StateSpace> {
    let estimate = estimate_state_count(inst, kind);
    if estimate > limit {
        return Err(Error::SizeLimit {
            what: "state space estimate",
            size: estimate,
            limit,
            hint: "use a smaller instance",
        });
    }
    let mut states = Vec::new();
    let mut current = AllocationState::empty(inst.len());
    fill_unit(inst, kind, 0, &mut current, &mut states);
    let index = states.iter().enumerate().map(|(i, s)| (s.edge_key(inst), i)).collect();
    Ok(StateSpace { kind, states, index })
}

fn fill_unit(inst: &Instance, kind: SpaceKind, x: UnitId, current: &mut AllocationState, out: &mut Vec<AllocationState>) {
    if x == inst.len() {
        out.push(current.clone());
        return;
    }
    let targets: &[UnitId] = inst.topology().out_neighbors(x);
    let alpha = inst.alpha()[x];
    place(inst, kind, x, targets, 0, alpha, current, out);
}

#[allow(clippy::too_many_arguments)]
fn place(
    inst: &Instance,
    kind: SpaceKind,
    x: UnitId,
    targets: &[UnitId],
    pos: usize,
    left: u32,
    current: &mut AllocationState,
    out: &mut Vec<AllocationState>,
) {
    if pos == targets.len() {
        if left == 0 || kind == SpaceKind::Partial {
            fill_unit(inst, kind, x + 1, current, out);
        }
        return;
    }
    let y = targets[pos];
    let room = inst.beta()[y] - current.load(y);
    let most = left.min(room);
    let mut c = 0;
    loop {
        place(inst, kind, x, targets, pos + 1, left - c, current, out);
        if c == most {
            break;
        }
        current.inc(x, y);
        c += 1;
    }
    for _ in 0..c {
        current.dec(x, y);
    }
}

/// Sparse row-stochastic matrix; each row sorted by column, diagonal included.
#[derive(Debug, Clone)]
pub struct TransitionMatrix {
    rows: Vec<Vec<(usize, f64)>>,
}

impl TransitionMatrix {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn row(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let row = &self.rows[i];
        row.binary_search_by_key(&j, |&(c, _)| c).map(|k| row[k].1).unwrap_or(0.0)
    }

    /// Largest `|1 - row sum|`.
    pub fn row_sum_error(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| (1.0 - r.iter().map(|&(_, p)| p).sum::<f64>()).abs())
            .fold(0.0, f64::max)
    }

    /// `mu P`.
    pub fn left_multiply(&self, mu: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; mu.len()];
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, p) in row {
                out[j] += mu[i] * p;
            }
        }
        out
    }
}

/// Exact one-step kernel of the discrete-time dynamics on the enumerated
/// space. Blocked activations and distribution moves that land on their
/// source contribute to the diagonal. Only positive entries are stored.
pub fn build_transition_matrix(
    inst: &Instance,
    params: &GameParams,
    space: &StateSpace,
    gamma: Gamma,
    variant: MoveVariant,
) -> Result<TransitionMatrix> {
    let total = inst.total_alpha();
    if total == 0 {
        return Err(Error::DegenerateInstance);
    }
    let mut rows = Vec::with_capacity(space.len());
    let mut candidates = Vec::new();
    let mut utilities = Vec::new();
    let mut weights = Vec::new();
    for (i, state) in space.states.iter().enumerate() {
        let mut row: HashMap<usize, f64> = HashMap::new();
        let mut scratch = state.clone();
        for x in 0..inst.len() {
            if inst.alpha()[x] == 0 {
                continue;
            }
            let nu = inst.alpha()[x] as f64 / total as f64;
            let (p_all, p_dis) = move_kind_probabilities(inst, state, x, variant);
            if p_all > 0.0 {
                gibbs_targets(inst, params, &scratch, x, gamma, &mut candidates, &mut utilities, &mut weights);
                if candidates.is_empty() {
                    *row.entry(i).or_default() += nu * p_all;
                }
                for (&y, &w) in candidates.iter().zip(&weights).filter(|(_, &w)| w > 0.0) {
                    scratch.inc(x, y);
                    let j = lookup(inst, space, &scratch)?;
                    scratch.dec(x, y);
                    *row.entry(j).or_default() += nu * p_all * w;
                }
            }
            if p_dis > 0.0 {
                let placed = state.allocated(x) as f64;
                for &src in inst.topology().out_neighbors(x) {
                    let c = state.get(x, src);
                    if c == 0 {
                        continue;
                    }
                    let q = c as f64 / placed;
                    scratch.dec(x, src);
                    gibbs_targets(inst, params, &scratch, x, gamma, &mut candidates, &mut utilities, &mut weights);
                    for (&y, &w) in candidates.iter().zip(&weights).filter(|(_, &w)| w > 0.0) {
                        scratch.inc(x, y);
                        let j = lookup(inst, space, &scratch)?;
                        scratch.dec(x, y);
                        *row.entry(j).or_default() += nu * p_dis * q * w;
                    }
                    scratch.inc(x, src);
                }
            }
        }
        let mut row: Vec<(usize, f64)> = row.into_iter().collect();
        row.sort_unstable_by_key(|&(j, _)| j);
        rows.push(row);
    }
    Ok(TransitionMatrix { rows })
}

fn lookup(inst: &Instance, space: &StateSpace, state: &AllocationState) -> Result<usize> {
    space
        .index_of(inst, state)
        .ok_or_else(|| Error::InvalidState("transition leaves the enumerated space".into()))
}

#[allow(clippy::too_many_arguments)]
fn gibbs_targets(
    inst: &Instance,
    params: &GameParams,
    state: &AllocationState,
    x: UnitId,
    gamma: Gamma,
    candidates: &mut Vec<UnitId>,
    utilities: &mut Vec<f64>,
    weights: &mut Vec<f64>,
) {
    candidates.clear();
    utilities.clear();
    weights.clear();
    for &y in inst.topology().out_neighbors(x) {
        if state.load(y) < inst.beta()[y] {
            candidates.push(y);
            utilities.push(post_placement_utility(inst, params, state, x, y));
        }
    }
    if !candidates.is_empty() {
        gibbs_weights(utilities, gamma, weights);
    }
}

/// Log of the unnormalized stationary weight, `ln(alpha choose W) + gamma * Psi(W)`.
pub fn log_stationary_weight(inst: &Instance, params: &GameParams, state: &AllocationState, gamma: f64) -> f64 {
    log_multinomial_weight(inst, state) + gamma * potential(inst, params, state)
}

#[derive(Debug, Clone)]
pub struct StationaryLaw {
    pub mu: Vec<f64>,
    /// Whether the strict subset condition holds, which guarantees the chain
    /// on full states is irreducible.
    pub strict: bool,
}

/// Closed-form stationary law on full states,
/// `mu(W) ~ (alpha choose W) exp(gamma Psi(W))`.
pub fn stationary_exact(inst: &Instance, params: &GameParams, space: &StateSpace, gamma: f64) -> Result<StationaryLaw> {
    if space.kind != SpaceKind::Full {
        return Err(Error::InvalidCall("stationary law is defined on full states".into()));
    }
    if space.is_empty() {
        return Err(Error::InvalidState("no full allocation state exists".into()));
    }
    let logs: Vec<f64> = space
        .states
        .iter()
        .map(|s| log_stationary_weight(inst, params, s, gamma))
        .collect();
    Ok(StationaryLaw {
        mu: normalize_logs(&logs),
        strict: check_strict(inst).feasible,
    })
}

fn normalize_logs(logs: &[f64]) -> Vec<f64> {
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = logs.iter().map(|l| (l - max).exp()).collect();
    let z: f64 = w.iter().sum();
    w.into_iter().map(|v| v / z).collect()
}

/// `max |mu P - mu|`.
pub fn stationarity_residual(mu: &[f64], p: &TransitionMatrix) -> f64 {
    p.left_multiply(mu)
        .iter()
        .zip(mu)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
}

/// `max |mu_i P_ij - mu_j P_ji|` over all pairs with a positive entry.
pub fn detailed_balance_residual(mu: &[f64], p: &TransitionMatrix) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..p.len() {
        for &(j, pij) in p.row(i) {
            if i != j {
                worst = worst.max((mu[i] * pij - mu[j] * p.get(j, i)).abs());
            }
        }
    }
    worst
}

/// True if the support graph of `p` (edges `i -> j` with `P_ij > 0`) is
/// strongly connected.
pub fn is_irreducible(p: &TransitionMatrix) -> bool {
    let n = p.len();
    if n == 0 {
        return true;
    }
    let forward = reach(n, 0, |i| p.row(i).iter().map(|&(j, _)| j).collect());
    let mut reverse: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        for &(j, _) in p.row(i) {
            reverse[j].push(i);
        }
    }
    let backward = reach(n, 0, |i| reverse[i].clone());
    forward.iter().all(|&r| r) && backward.iter().all(|&r| r)
}

fn reach(n: usize, start: usize, next: impl Fn(usize) -> Vec<usize>) -> Vec<bool> {
    let mut seen = vec![false; n];
    seen[start] = true;
    let mut queue = VecDeque::from([start]);
    while let Some(i) = queue.pop_front() {
        for j in next(i) {
            if !seen[j] {
                seen[j] = true;
                queue.push_back(j);
            }
        }
    }
    seen
}

/// Connected components of the undirected support graph.
pub fn support_components(p: &TransitionMatrix) -> Vec<usize> {
    let n = p.len();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        for &(j, _) in p.row(i) {
            if i != j {
                adj[i].push(j);
                adj[j].push(i);
            }
        }
    }
    let mut comp = vec![usize::MAX; n];
    let mut next = 0;
    for s in 0..n {
        if comp[s] != usize::MAX {
            continue;
        }
        comp[s] = next;
        let mut stack = vec![s];
        while let Some(i) = stack.pop() {
            for &j in &adj[i] {
                if comp[j] == usize::MAX {
                    comp[j] = next;
                    stack.push(j);
                }
            }
        }
        next += 1;
    }
    comp
}

/// Result of checking whether the dynamics can get stuck before completing.
#[derive(Debug, Clone, Serialize)]
pub struct CompletionAnalysis {
    /// Partial states reachable from the start.
    pub reachable: usize,
    /// Reachable states from which no full state can be reached.
    pub stuck: Vec<usize>,
}

impl CompletionAnalysis {
    pub fn can_deadlock(&self) -> bool {
        !self.stuck.is_empty()
    }
}

/// On a partial space: which states reachable from `start` can no longer reach
/// any full state.
pub fn completion_analysis(
    inst: &Instance,
    space: &StateSpace,
    p: &TransitionMatrix,
    start: &AllocationState,
) -> Result<CompletionAnalysis> {
    let n = p.len();
    let s = lookup(inst, space, start)?;
    let forward = reach(n, s, |i| p.row(i).iter().map(|&(j, _)| j).collect());
    let mut reverse: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        for &(j, _) in p.row(i) {
            reverse[j].push(i);
        }
    }
    let mut can_finish = vec![false; n];
    let mut queue: VecDeque<usize> = (0..n).filter(|&i| space.states[i].is_full(inst)).collect();
    for &i in &queue {
        can_finish[i] = true;
    }
    while let Some(i) = queue.pop_front() {
        for &j in &reverse[i] {
            if !can_finish[j] {
                can_finish[j] = true;
                queue.push_back(j);
            }
        }
    }
    Ok(CompletionAnalysis {
        reachable: forward.iter().filter(|&&r| r).count(),
        stuck: (0..n).filter(|&i| forward[i] && !can_finish[i]).collect(),
    })
}

/// `(1/2) sum |p - q|`.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

#[derive(Debug, Clone)]
pub struct EmpiricalReport {
    pub frequencies: Vec<f64>,
    pub total_variation: f64,
    /// Full states never visited during sampling.
    pub unvisited: usize,
    /// Samples taken while the allocation was still incomplete.
    pub partial_samples: u64,
}

/// Runs the dynamics at fixed `gamma` from the empty state, discards
/// `burn_in` steps, then records the state after each of `samples` further
/// steps. Frequencies are over full states only.
#[allow(clippy::too_many_arguments)]
pub fn empirical_distribution(
    inst: &Instance,
    params: &GameParams,
    space: &StateSpace,
    target: &[f64],
    gamma: f64,
    burn_in: u64,
    samples: u64,
    seed: u64,
) -> Result<EmpiricalReport> {
    if space.kind != SpaceKind::Full {
        return Err(Error::InvalidCall("occupancy is measured on full states".into()));
    }
    let config = SimConfig {
        params: *params,
        schedule: crate::dynamics::GammaSchedule::Fixed { gamma },
        variant: MoveVariant::AllocateFirst,
        horizon: burn_in + samples,
        seed,
        record_trace: false,
        initial: None,
    };
    let mut sim = Simulator::new(inst, &config)?;
    let mut state = AllocationState::empty(inst.len());
    for t in 0..burn_in {
        sim.step(&mut state, t);
    }
    let mut counts = vec![0u64; space.len()];
    let mut partial = 0u64;
    let mut key_cache: Option<(Vec<u32>, usize)> = None;
    for t in burn_in..burn_in + samples {
        let out = sim.step(&mut state, t);
        let changed = out.performed.is_some_and(|m| m.relocates());
        if !state.is_full(inst) {
            partial += 1;
            key_cache = None;
            continue;
        }
        let idx = match (&key_cache, changed) {
            (Some((_, i)), false) => *i,
            _ => {
                let key = state.edge_key(inst);
                let i = *space
                    .index
                    .get(&key)
                    .ok_or_else(|| Error::InvalidState("visited state missing from space".into()))?;
                key_cache = Some((key, i));
                i
            }
        };
        counts[idx] += 1;
    }
    let full = samples - partial;
    let frequencies: Vec<f64> = counts
        .iter()
        .map(|&c| if full == 0 { 0.0 } else { c as f64 / full as f64 })
        .collect();
    Ok(EmpiricalReport {
        total_variation: total_variation(&frequencies, target),
        unvisited: counts.iter().filter(|&&c| c == 0).count(),
        partial_samples: partial,
        frequencies,
    })
}

/// Maximum value of `score` over the space and every index attaining it
/// (relative tolerance 1e-12).
fn argmax_by(space: &StateSpace, score: impl Fn(&AllocationState) -> f64) -> Option<(f64, Vec<usize>)> {
    let values: Vec<f64> = space.states.iter().map(score).collect();
    let best = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if values.is_empty() {
        return None;
    }
    let tol = 1e-12 * best.abs().max(1.0);
    let arg = (0..values.len()).filter(|&i| values[i] >= best - tol).collect();
    Some((best, arg))
}

/// `(max Psi, argmax)` over an enumerated space.
pub fn max_potential_bruteforce(inst: &Instance, params: &GameParams, space: &StateSpace) -> Option<(f64, Vec<usize>)> {
    argmax_by(space, |s| potential(inst, params, s))
}

/// `(max F, argmax)` over an enumerated space.
pub fn max_global_utility_bruteforce(
    inst: &Instance,
    params: &GameParams,
    space: &StateSpace,
) -> Option<(f64, Vec<usize>)> {
    argmax_by(space, |s| global_utility(inst, params, s))
}
