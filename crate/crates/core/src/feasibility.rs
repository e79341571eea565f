//! Existence of a full allocation (the Hall-type subset condition) and its
//! strict variant, decided three independent ways: max-flow on the aggregated
//! capacity network, exhaustive subset enumeration, and maximum matching on the
//! atom-level bipartite graph.

use std::collections::VecDeque;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::flow::FlowNetwork;
use crate::topology::{Instance, UnitId};

/// Largest `n` accepted by subset enumeration.
pub const EXHAUSTIVE_MAX_UNITS: usize = 25;
/// Largest `n` accepted by the maximal-irreducible enumeration.
pub const IRREDUCIBLE_MAX_UNITS: usize = 20;
/// Largest `sum(alpha) + sum(beta)` accepted by the atom-level oracle.
pub const ATOM_GRAPH_MAX_NODES: u64 = 10_000;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FeasibilityVerdict {
    pub feasible: bool,
    /// A subset of units violating the condition; present iff `!feasible`.
    pub witness: Option<Vec<UnitId>>,
}

impl FeasibilityVerdict {
    fn ok() -> Self {
        FeasibilityVerdict {
            feasible: true,
            witness: None,
        }
    }

    fn violated(witness: Vec<UnitId>) -> Self {
        FeasibilityVerdict {
            feasible: false,
            witness: Some(witness),
        }
    }
}

/// `(sum of alpha over D, sum of beta over N(D))`.
pub fn hall_sums(inst: &Instance, set: &[UnitId]) -> (u64, u64) {
    let demand = set.iter().map(|&x| inst.alpha()[x] as u64).sum();
    let supply = inst
        .topology()
        .neighborhood_of_set(set)
        .iter()
        .map(|&y| inst.beta()[y] as u64)
        .sum();
    (demand, supply)
}

/// Does `set` violate the condition (`strict` selects `<` instead of `<=`)?
pub fn violates(inst: &Instance, set: &[UnitId], strict: bool) -> bool {
    let (demand, supply) = hall_sums(inst, set);
    if strict {
        demand >= supply
    } else {
        demand > supply
    }
}

struct CapacityNetwork {
    net: FlowNetwork,
    source: usize,
    sink: usize,
}

// source -> x (alpha_x) -> y for (x, y) in E (unbounded) -> sink (beta_y)
fn capacity_network(inst: &Instance) -> CapacityNetwork {
    let n = inst.len();
    let source = 2 * n;
    let sink = 2 * n + 1;
    let unbounded = inst.total_alpha() as i64;
    let mut net = FlowNetwork::new(2 * n + 2);
    for x in 0..n {
        net.add_arc(source, x, inst.alpha()[x] as i64);
        net.add_arc(n + x, sink, inst.beta()[x] as i64);
    }
    for (x, y) in inst.topology().edges() {
        net.add_arc(x, n + y, unbounded);
    }
    CapacityNetwork { net, source, sink }
}

/// Max-flow decision. On failure the witness is the set of units reachable
/// from the source in the residual network, which is always a violator.
pub fn check_feasible_flow(inst: &Instance) -> FeasibilityVerdict {
    let mut cn = capacity_network(inst);
    let flow = cn.net.max_flow(cn.source, cn.sink);
    if flow as u64 == inst.total_alpha() {
        return FeasibilityVerdict::ok();
    }
    let reach = cn.net.residual_reachable(cn.source);
    let witness = (0..inst.len()).filter(|&x| reach[x]).collect();
    FeasibilityVerdict::violated(witness)
}

/// Subset enumeration over every nonempty `D`. Returns the first violator in
/// depth-first order.
pub fn check_feasible_exhaustive(inst: &Instance) -> Result<FeasibilityVerdict> {
    hall_scan(inst, false)
}

/// Strict condition decided by `n` max-flows: it holds iff bumping any single
/// `alpha_x` by one keeps the instance feasible.
pub fn check_strict(inst: &Instance) -> FeasibilityVerdict {
    for x in 0..inst.len() {
        let bumped = inst.with_alpha_at(x, inst.alpha()[x] + 1);
        let v = check_feasible_flow(&bumped);
        if !v.feasible {
            return v;
        }
    }
    FeasibilityVerdict::ok()
}

/// Strict condition by subset enumeration.
pub fn check_strict_exhaustive(inst: &Instance) -> Result<FeasibilityVerdict> {
    hall_scan(inst, true)
}

fn size_guard(n: usize, limit: usize, what: &'static str, hint: &'static str) -> Result<()> {
    if n > limit {
        return Err(Error::SizeLimit {
            what,
            size: n as u128,
            limit: limit as u128,
            hint,
        });
    }
    Ok(())
}

fn neighbor_masks(inst: &Instance) -> Vec<u32> {
    (0..inst.len())
        .map(|x| {
            inst.topology()
                .out_neighbors(x)
                .iter()
                .fold(0u32, |m, &y| m | (1 << y))
        })
        .collect()
}

fn hall_scan(inst: &Instance, strict: bool) -> Result<FeasibilityVerdict> {
    let n = inst.len();
    size_guard(
        n,
        EXHAUSTIVE_MAX_UNITS,
        "unit count",
        "use check_feasible_flow for large instances",
    )?;
    let masks = neighbor_masks(inst);
    let mut scan = Scan {
        masks: &masks,
        alpha: inst.alpha(),
        beta: inst.beta(),
        strict,
        chosen: Vec::with_capacity(n),
    };
    Ok(match scan.descend(0, 0, 0, 0) {
        Some(w) => FeasibilityVerdict::violated(w),
        None => FeasibilityVerdict::ok(),
    })
}

struct Scan<'a> {
    masks: &'a [u32],
    alpha: &'a [u32],
    beta: &'a [u32],
    strict: bool,
    chosen: Vec<UnitId>,
}

impl Scan<'_> {
    // Visits every nonempty subset containing `chosen` plus elements >= `next`.
    fn descend(&mut self, next: usize, nbhd: u32, demand: u64, supply: u64) -> Option<Vec<UnitId>> {
        for x in next..self.masks.len() {
            let fresh = self.masks[x] & !nbhd;
            let mut extra = 0u64;
            let mut bits = fresh;
            while bits != 0 {
                let y = bits.trailing_zeros() as usize;
                extra += self.beta[y] as u64;
                bits &= bits - 1;
            }
            let (d, s) = (demand + self.alpha[x] as u64, supply + extra);
            self.chosen.push(x);
            let bad = if self.strict { d >= s } else { d > s };
            if bad {
                return Some(self.chosen.clone());
            }
            if let Some(w) = self.descend(x + 1, nbhd | fresh, d, s) {
                return Some(w);
            }
            self.chosen.pop();
        }
        None
    }
}

/// Subsets `D` such that every strict superset has a strictly larger
/// neighborhood and `D` does not split into two nonempty parts with disjoint
/// neighborhoods. Sorted by bitmask.
pub fn maximal_irreducible_subsets(inst: &Instance) -> Result<Vec<Vec<UnitId>>> {
    let n = inst.len();
    size_guard(n, IRREDUCIBLE_MAX_UNITS, "unit count", "subset enumeration is exponential")?;
    let masks = neighbor_masks(inst);
    let full = (1u32 << n) - 1;
    let mut nbhd = vec![0u32; 1 << n];
    let mut out = Vec::new();
    for set in 1..=full {
        let low = set.trailing_zeros() as usize;
        nbhd[set as usize] = nbhd[(set & (set - 1)) as usize] | masks[low];
        let covered = nbhd[set as usize];
        let maximal = (0..n).all(|x| set & (1 << x) != 0 || masks[x] & !covered != 0);
        if maximal && overlap_connected(set, &masks) {
            out.push((0..n).filter(|&x| set & (1 << x) != 0).collect());
        }
    }
    Ok(out)
}

fn overlap_connected(set: u32, masks: &[u32]) -> bool {
    let mut reached = 1u32 << set.trailing_zeros();
    loop {
        let covered = bits(reached).fold(0, |m, x| m | masks[x]);
        let grow = bits(set & !reached).filter(|&x| masks[x] & covered != 0).fold(0u32, |m, x| m | (1 << x));
        if grow == 0 {
            return reached == set;
        }
        reached |= grow;
    }
}

fn bits(mut m: u32) -> impl Iterator<Item = usize> {
    std::iter::from_fn(move || {
        if m == 0 {
            return None;
        }
        let b = m.trailing_zeros() as usize;
        m &= m - 1;
        Some(b)
    })
}

/// Verdict from checking only the given subsets.
pub fn check_on_subsets(inst: &Instance, subsets: &[Vec<UnitId>]) -> FeasibilityVerdict {
    match subsets.iter().find(|d| violates(inst, d, false)) {
        Some(d) => FeasibilityVerdict::violated(d.clone()),
        None => FeasibilityVerdict::ok(),
    }
}

/// Bipartite graph between data atoms `(x, a)` and storage slots `(y, b)`,
/// with an edge iff `(x, y)` is a topology edge. Adjacency is shared by all
/// atoms of one unit, so edges are not materialized.
#[derive(Debug, Clone)]
pub struct AtomBipartite {
    atoms: Vec<(UnitId, u32)>,
    slots: Vec<(UnitId, u32)>,
    slot_start: Vec<usize>,
    out: Vec<Vec<UnitId>>,
    beta: Vec<u32>,
}

pub fn build_atom_bipartite(inst: &Instance) -> Result<AtomBipartite> {
    let size = inst.total_alpha() + inst.total_beta();
    if size > ATOM_GRAPH_MAX_NODES {
        return Err(Error::SizeLimit {
            what: "atom graph node count",
            size: size as u128,
            limit: ATOM_GRAPH_MAX_NODES as u128,
            hint: "use check_feasible_flow",
        });
    }
    let n = inst.len();
    let atoms = (0..n).flat_map(|x| (0..inst.alpha()[x]).map(move |a| (x, a))).collect();
    let mut slot_start = Vec::with_capacity(n);
    let mut slots = Vec::new();
    for y in 0..n {
        slot_start.push(slots.len());
        slots.extend((0..inst.beta()[y]).map(|b| (y, b)));
    }
    Ok(AtomBipartite {
        atoms,
        slots,
        slot_start,
        out: (0..n).map(|x| inst.topology().out_neighbors(x).to_vec()).collect(),
        beta: inst.beta().to_vec(),
    })
}

impl AtomBipartite {
    pub fn atoms(&self) -> &[(UnitId, u32)] {
        &self.atoms
    }

    pub fn slots(&self) -> &[(UnitId, u32)] {
        &self.slots
    }

    pub fn edge_count(&self) -> usize {
        self.atoms
            .iter()
            .map(|&(x, _)| self.out[x].iter().map(|&y| self.beta[y] as usize).sum::<usize>())
            .sum()
    }

    /// Slots adjacent to atom index `i`.
    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        let x = self.atoms[i].0;
        self.out[x]
            .iter()
            .flat_map(move |&y| self.slot_start[y]..self.slot_start[y] + self.beta[y] as usize)
    }

    /// Maximum matching by repeated BFS augmenting paths. Returns
    /// `mate[atom] = Some(slot)`.
    pub fn maximum_matching(&self) -> Vec<Option<usize>> {
        let mut atom_mate: Vec<Option<usize>> = vec![None; self.atoms.len()];
        let mut slot_mate: Vec<Option<usize>> = vec![None; self.slots.len()];
        for root in 0..self.atoms.len() {
            // parent[slot] = atom that reached it
            let mut parent: Vec<Option<usize>> = vec![None; self.slots.len()];
            let mut queue = VecDeque::from([root]);
            let mut end = None;
            'bfs: while let Some(a) = queue.pop_front() {
                for s in self.neighbors(a) {
                    if parent[s].is_some() {
                        continue;
                    }
                    parent[s] = Some(a);
                    match slot_mate[s] {
                        None => {
                            end = Some(s);
                            break 'bfs;
                        }
                        Some(next) => queue.push_back(next),
                    }
                }
            }
            let mut s = match end {
                Some(s) => s,
                None => continue,
            };
            loop {
                let a = parent[s].expect("augmenting path");
                let prev = atom_mate[a];
                atom_mate[a] = Some(s);
                slot_mate[s] = Some(a);
                match prev {
                    Some(p) if a != root => s = p,
                    _ => break,
                }
            }
        }
        atom_mate
    }

    /// Verdict from the maximum matching. On failure the witness collects the
    /// units owning atoms reachable by alternating paths from an unmatched atom.
    pub fn verdict(&self) -> (usize, FeasibilityVerdict) {
        let mate = self.maximum_matching();
        let size = mate.iter().filter(|m| m.is_some()).count();
        let Some(root) = mate.iter().position(Option::is_none) else {
            return (size, FeasibilityVerdict::ok());
        };
        let mut slot_owner: Vec<Option<usize>> = vec![None; self.slots.len()];
        for (a, m) in mate.iter().enumerate() {
            if let Some(s) = m {
                slot_owner[*s] = Some(a);
            }
        }
        let mut seen_atom = vec![false; self.atoms.len()];
        let mut seen_slot = vec![false; self.slots.len()];
        seen_atom[root] = true;
        let mut queue = VecDeque::from([root]);
        while let Some(a) = queue.pop_front() {
            for s in self.neighbors(a) {
                if seen_slot[s] {
                    continue;
                }
                seen_slot[s] = true;
                if let Some(b) = slot_owner[s] {
                    if !seen_atom[b] {
                        seen_atom[b] = true;
                        queue.push_back(b);
                    }
                }
            }
        }
        let mut units: Vec<UnitId> = seen_atom
            .iter()
            .enumerate()
            .filter(|(_, &s)| s)
            .map(|(a, _)| self.atoms[a].0)
            .collect();
        units.sort_unstable();
        units.dedup();
        (size, FeasibilityVerdict::violated(units))
    }
}

/// Feasibility via the atom-level matching oracle.
pub fn check_feasible_matching(inst: &Instance) -> Result<FeasibilityVerdict> {
    Ok(build_atom_bipartite(inst)?.verdict().1)
}
