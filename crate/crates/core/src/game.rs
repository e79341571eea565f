//! Allocation state, utilities, potential and the Gibbs choice rule.

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::topology::{Instance, UnitId};

/// Relative tolerance used when comparing utilities for ties and in the Nash test.
pub const UTILITY_TOLERANCE: f64 = 1e-9;

/// Atom counts `W[x][y]` of unit `x` stored on resource `y`, with cached row
/// sums (allocated atoms per unit) and column sums (load per resource).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AllocationState {
    n: usize,
    cells: Vec<u32>,
    row: Vec<u32>,
    col: Vec<u32>,
}

impl AllocationState {
    pub fn empty(n: usize) -> Self {
        AllocationState {
            n,
            cells: vec![0; n * n],
            row: vec![0; n],
            col: vec![0; n],
        }
    }

    /// Builds a state from `(x, y, count)` triples and checks it against `inst`.
    pub fn from_triples(inst: &Instance, triples: &[(UnitId, UnitId, u32)]) -> Result<Self> {
        let n = inst.len();
        let mut s = AllocationState::empty(n);
        for &(x, y, c) in triples {
            if x >= n || y >= n {
                return Err(Error::InvalidState(format!("entry ({x}, {y}) out of range")));
            }
            s.cells[x * n + y] += c;
            s.row[x] += c;
            s.col[y] += c;
        }
        s.validate(inst)?;
        Ok(s)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, x: UnitId, y: UnitId) -> u32 {
        self.cells[x * self.n + y]
    }

    /// Atoms of unit `x` already placed.
    #[inline]
    pub fn allocated(&self, x: UnitId) -> u32 {
        self.row[x]
    }

    /// Atoms currently stored on resource `y`.
    #[inline]
    pub fn load(&self, y: UnitId) -> u32 {
        self.col[y]
    }

    pub fn total_allocated(&self) -> u64 {
        self.row.iter().map(|&r| r as u64).sum()
    }

    /// Nonzero entries in row-major order.
    pub fn triples(&self) -> Vec<(UnitId, UnitId, u32)> {
        let n = self.n;
        self.cells
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(i, &c)| (i / n, i % n, c))
            .collect()
    }

    /// Every unit has placed all of its atoms.
    pub fn is_full(&self, inst: &Instance) -> bool {
        self.row.iter().zip(inst.alpha()).all(|(r, a)| r == a)
    }

    /// Checks edge support, row and column bounds, and the caches.
    pub fn validate(&self, inst: &Instance) -> Result<()> {
        let n = self.n;
        if n != inst.len() {
            return Err(Error::InvalidState(format!("state has {n} units, instance {}", inst.len())));
        }
        let mut row = vec![0u32; n];
        let mut col = vec![0u32; n];
        #[allow(clippy::needless_range_loop)]
        for x in 0..n {
            for y in 0..n {
                let c = self.get(x, y);
                if c > 0 && !inst.topology().has_edge(x, y) {
                    return Err(Error::InvalidState(format!("atoms on non-edge ({x}, {y})")));
                }
                row[x] += c;
                col[y] += c;
            }
        }
        if row != self.row || col != self.col {
            return Err(Error::InvalidState("cached sums out of date".into()));
        }
        for x in 0..n {
            if row[x] > inst.alpha()[x] {
                return Err(Error::InvalidState(format!("unit {x} placed {} > alpha {}", row[x], inst.alpha()[x])));
            }
            if col[x] > inst.beta()[x] {
                return Err(Error::InvalidState(format!("resource {x} holds {} > beta {}", col[x], inst.beta()[x])));
            }
        }
        Ok(())
    }

    // Raw mutators; callers are responsible for the invariants.
    #[inline]
    pub(crate) fn inc(&mut self, x: UnitId, y: UnitId) {
        self.cells[x * self.n + y] += 1;
        self.row[x] += 1;
        self.col[y] += 1;
    }

    #[inline]
    pub(crate) fn dec(&mut self, x: UnitId, y: UnitId) {
        self.cells[x * self.n + y] -= 1;
        self.row[x] -= 1;
        self.col[y] -= 1;
    }

    /// Entries restricted to the topology edges, in edge order. Compact key
    /// for hashing states of one instance.
    pub fn edge_key(&self, inst: &Instance) -> Vec<u32> {
        inst.topology().edges().map(|(x, y)| self.get(x, y)).collect()
    }
}

/// Congestion weight `k_c` and aggregation weight `k_a` of the utility.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GameParams {
    pub k_c: f64,
    pub k_a: f64,
}

impl GameParams {
    pub fn new(k_c: f64, k_a: f64) -> Result<Self> {
        if !(k_c >= 0.0 && k_a >= 0.0 && k_c.is_finite() && k_a.is_finite()) {
            return Err(Error::invalid(format!("k_c and k_a must be finite and >= 0 (got {k_c}, {k_a})")));
        }
        Ok(GameParams { k_c, k_a })
    }
}

/// Inverse noise of the Gibbs rule. `Infinite` is pure best response with
/// uniform tie breaking.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gamma {
    Finite(f64),
    Infinite,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Move {
    /// Place one not-yet-allocated atom of `unit` on `dest`.
    Allocation { unit: UnitId, dest: UnitId },
    /// Take one atom of `unit` off `source` and place it on `dest`. `dest ==
    /// source` is legal and leaves the state unchanged.
    Distribution { unit: UnitId, source: UnitId, dest: UnitId },
}

impl Move {
    pub fn unit(&self) -> UnitId {
        match *self {
            Move::Allocation { unit, .. } | Move::Distribution { unit, .. } => unit,
        }
    }

    pub fn dest(&self) -> UnitId {
        match *self {
            Move::Allocation { dest, .. } | Move::Distribution { dest, .. } => dest,
        }
    }

    /// True if applying the move changes the state.
    pub fn relocates(&self) -> bool {
        match *self {
            Move::Allocation { .. } => true,
            Move::Distribution { source, dest, .. } => source != dest,
        }
    }
}

/// `f_xy(W) = lambda_y - k_c * W_y / beta_y + k_a * W_xy`.
pub fn utility(inst: &Instance, params: &GameParams, state: &AllocationState, x: UnitId, y: UnitId) -> Result<f64> {
    if inst.beta()[y] == 0 {
        return Err(Error::UndefinedUtility(y));
    }
    Ok(raw_utility(inst, params, state.load(y), state.get(x, y), y))
}

#[inline]
fn raw_utility(inst: &Instance, params: &GameParams, load: u32, own: u32, y: UnitId) -> f64 {
    inst.lambda()[y] - params.k_c * load as f64 / inst.beta()[y] as f64 + params.k_a * own as f64
}

/// Utility of `x` for `y` evaluated as if one more atom of `x` were placed on
/// `y`, i.e. `f_xy(W + e_xy)`. Requires `beta_y > 0`.
#[inline]
pub(crate) fn post_placement_utility(
    inst: &Instance,
    params: &GameParams,
    state: &AllocationState,
    x: UnitId,
    y: UnitId,
) -> f64 {
    raw_utility(inst, params, state.load(y) + 1, state.get(x, y) + 1, y)
}

/// Potential
/// `sum_y sum_{s=0}^{W_y} (lambda_y - k_c s / beta_y) + k_a sum_{x,y} sum_{s=0}^{W_xy} s`,
/// in closed form.
pub fn potential(inst: &Instance, params: &GameParams, state: &AllocationState) -> f64 {
    let n = inst.len();
    let mut psi = 0.0;
    for y in 0..n {
        let w = state.load(y) as f64;
        psi += (w + 1.0) * inst.lambda()[y];
        if state.load(y) > 0 {
            psi -= params.k_c * w * (w + 1.0) / (2.0 * inst.beta()[y] as f64);
        }
    }
    if params.k_a != 0.0 {
        let agg: f64 = state
            .cells
            .iter()
            .map(|&c| {
                let c = c as f64;
                c * (c + 1.0) / 2.0
            })
            .sum();
        psi += params.k_a * agg;
    }
    psi
}

/// Out-neighbors of `x` with spare capacity.
pub fn available_resources(inst: &Instance, state: &AllocationState, x: UnitId) -> Vec<UnitId> {
    inst.topology()
        .out_neighbors(x)
        .iter()
        .copied()
        .filter(|&y| state.load(y) < inst.beta()[y])
        .collect()
}

/// Gibbs probabilities over `candidates`, proportional to
/// `exp(gamma * f_xy(W + e_xy))`. With `Gamma::Infinite` the mass is uniform on
/// the argmax set.
pub fn gibbs_choice_distribution(
    inst: &Instance,
    params: &GameParams,
    state: &AllocationState,
    x: UnitId,
    candidates: &[UnitId],
    gamma: Gamma,
) -> Result<Vec<f64>> {
    if candidates.is_empty() {
        return Err(Error::NoAvailableResource(x));
    }
    if let Some(&y) = candidates.iter().find(|&&y| state.load(y) >= inst.beta()[y]) {
        return Err(Error::InvalidCall(format!("candidate {y} has no spare capacity")));
    }
    let utilities: Vec<f64> = candidates
        .iter()
        .map(|&y| post_placement_utility(inst, params, state, x, y))
        .collect();
    let mut probs = Vec::with_capacity(candidates.len());
    gibbs_weights(&utilities, gamma, &mut probs);
    Ok(probs)
}

/// Normalized Gibbs weights of `utilities` written into `out`.
pub(crate) fn gibbs_weights(utilities: &[f64], gamma: Gamma, out: &mut Vec<f64>) {
    out.clear();
    let max = utilities.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    match gamma {
        Gamma::Finite(g) => {
            out.extend(utilities.iter().map(|&u| (g * (u - max)).exp()));
        }
        Gamma::Infinite => {
            let tol = UTILITY_TOLERANCE * max.abs().max(1.0);
            out.extend(utilities.iter().map(|&u| if u >= max - tol { 1.0 } else { 0.0 }));
        }
    }
    let z: f64 = out.iter().sum();
    out.iter_mut().for_each(|p| *p /= z);
}

/// No unit can strictly gain by relocating a single atom. Defined on full
/// states only.
pub fn is_nash(inst: &Instance, params: &GameParams, state: &AllocationState) -> Result<bool> {
    if !state.is_full(inst) {
        return Err(Error::InvalidState("Nash test needs a full allocation state".into()));
    }
    let mut scratch = state.clone();
    for x in 0..inst.len() {
        let open = available_resources(inst, state, x);
        for &y in inst.topology().out_neighbors(x) {
            if state.get(x, y) == 0 {
                continue;
            }
            let current = utility(inst, params, state, x, y)?;
            for &z in open.iter().filter(|&&z| z != y) {
                scratch.dec(x, y);
                scratch.inc(x, z);
                let deviated = utility(inst, params, &scratch, x, z)?;
                scratch.dec(x, z);
                scratch.inc(x, y);
                if deviated > current + UTILITY_TOLERANCE * current.abs().max(1.0) {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

/// `F(W) = sum_{x,y} W_xy f_xy(W)`.
pub fn global_utility(inst: &Instance, params: &GameParams, state: &AllocationState) -> f64 {
    let n = inst.len();
    let mut total = 0.0;
    for y in 0..n {
        if state.load(y) == 0 {
            continue;
        }
        let w = state.load(y) as f64;
        total += w * (inst.lambda()[y] - params.k_c * w / inst.beta()[y] as f64);
    }
    if params.k_a != 0.0 {
        let sq: f64 = state.cells.iter().map(|&c| (c as f64) * (c as f64)).sum();
        total += params.k_a * sq;
    }
    total
}

/// `prod_x alpha_x! / prod_{x,y} W_xy!`, exactly.
pub fn multinomial_weight(inst: &Instance, state: &AllocationState) -> BigUint {
    let mut num = BigUint::from(1u32);
    for &a in inst.alpha() {
        num *= factorial(a);
    }
    let mut den = BigUint::from(1u32);
    for &c in &state.cells {
        if c > 1 {
            den *= factorial(c);
        }
    }
    num / den
}

/// Natural log of [`multinomial_weight`].
pub fn log_multinomial_weight(inst: &Instance, state: &AllocationState) -> f64 {
    let num: f64 = inst.alpha().iter().map(|&a| ln_factorial(a)).sum();
    let den: f64 = state.cells.iter().filter(|&&c| c > 1).map(|&c| ln_factorial(c)).sum();
    num - den
}

fn factorial(k: u32) -> BigUint {
    (2..=k).fold(BigUint::from(1u32), |acc, i| acc * i)
}

fn ln_factorial(k: u32) -> f64 {
    (2..=k).map(|i| (i as f64).ln()).sum()
}

/// Every move `apply_move` accepts from `state`, including distribution moves
/// back onto their source.
pub fn legal_moves(inst: &Instance, state: &AllocationState) -> Vec<Move> {
    let mut out = Vec::new();
    for x in 0..inst.len() {
        let open = available_resources(inst, state, x);
        if state.allocated(x) < inst.alpha()[x] {
            out.extend(open.iter().map(|&y| Move::Allocation { unit: x, dest: y }));
        }
        for &s in inst.topology().out_neighbors(x) {
            if state.get(x, s) == 0 {
                continue;
            }
            out.push(Move::Distribution { unit: x, source: s, dest: s });
            out.extend(open.iter().map(|&y| Move::Distribution { unit: x, source: s, dest: y }));
        }
    }
    out
}

/// Applies `mv`, or returns `RejectedMove` and leaves the state untouched.
pub fn apply_move(inst: &Instance, state: &mut AllocationState, mv: Move) -> Result<()> {
    let topo = inst.topology();
    let unit = mv.unit();
    let dest = mv.dest();
    if unit >= inst.len() || dest >= inst.len() {
        return Err(Error::RejectedMove(format!("unit or destination out of range in {mv:?}")));
    }
    if !topo.has_edge(unit, dest) {
        return Err(Error::RejectedMove(format!("({unit}, {dest}) is not an edge")));
    }
    match mv {
        Move::Allocation { .. } => {
            if state.allocated(unit) >= inst.alpha()[unit] {
                return Err(Error::RejectedMove(format!("unit {unit} has nothing left to allocate")));
            }
            if state.load(dest) >= inst.beta()[dest] {
                return Err(Error::RejectedMove(format!("resource {dest} is full")));
            }
            state.inc(unit, dest);
        }
        Move::Distribution { source, .. } => {
            if source >= inst.len() || state.get(unit, source) == 0 {
                return Err(Error::RejectedMove(format!("unit {unit} has no atom on {source}")));
            }
            if source != dest && state.load(dest) >= inst.beta()[dest] {
                return Err(Error::RejectedMove(format!("resource {dest} is full")));
            }
            state.dec(unit, source);
            state.inc(unit, dest);
        }
    }
    Ok(())
}
