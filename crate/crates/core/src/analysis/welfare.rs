//! Maximum of the global utility `F` over full allocation states.
//!
//! Without the aggregation term, `F` depends only on the resource loads and is
//! a sum of concave functions of them. Load vectors of full allocations are the
//! bases of the polymatroid "max flow into a set of resources", so placing
//! atoms one at a time on the resource with the best marginal gain, as long as
//! one more atom can be routed there, reaches the exact optimum. With
//! aggregation only an upper bound is available at scale.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};

use serde::Serialize;

use crate::game::GameParams;
use crate::topology::{Instance, UnitId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimumTag {
    /// The true maximum.
    Exact,
    /// An upper bound standing in for the maximum.
    Surrogate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WelfareOptimum {
    pub value: f64,
    pub tag: OptimumTag,
}

/// Ratio of achieved to optimal welfare, oriented so that 1 means optimal and
/// smaller is worse whatever the sign of the optimum: `F / F*` when `F* > 0`,
/// `F* / F` when `F* < 0`. With a `Surrogate` optimum the result is a lower bound
/// on the true ratio.
pub fn welfare_ratio(achieved: f64, optimum: f64) -> f64 {
    let tol = 1e-12 * optimum.abs().max(1.0);
    if optimum.abs() <= tol {
        if achieved.abs() <= tol {
            1.0
        } else {
            f64::NEG_INFINITY
        }
    } else if optimum > 0.0 {
        achieved / optimum
    } else if achieved < 0.0 {
        optimum / achieved
    } else {
        // achieved >= 0 > optimum cannot happen for a true optimum
        1.0
    }
}

/// Congestion-only part of `F` for given loads.
pub fn load_welfare(inst: &Instance, params: &GameParams, loads: &[u32]) -> f64 {
    loads
        .iter()
        .enumerate()
        .filter(|(_, &l)| l > 0)
        .map(|(y, &l)| {
            let l = l as f64;
            l * (inst.lambda()[y] - params.k_c * l / inst.beta()[y] as f64)
        })
        .sum()
}

#[derive(PartialEq)]
struct Candidate {
    gain: f64,
    resource: UnitId,
}

impl Eq for Candidate {}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.gain
            .total_cmp(&other.gain)
            .then_with(|| other.resource.cmp(&self.resource))
    }
}

/// Incremental flow from units to resources where loads only grow.
struct LoadRouter<'a> {
    inst: &'a Instance,
    spare: Vec<u32>,
    flow: Vec<u32>,
    loads: Vec<u32>,
}

impl<'a> LoadRouter<'a> {
    fn new(inst: &'a Instance) -> Self {
        let n = inst.len();
        LoadRouter {
            inst,
            spare: inst.alpha().to_vec(),
            flow: vec![0; n * n],
            loads: vec![0; n],
        }
    }

    /// Routes one more atom into `target` leaving every other load unchanged.
    fn push_into(&mut self, target: UnitId) -> bool {
        let n = self.inst.len();
        let topo = self.inst.topology();
        // unit_parent[x] = resource x was reached from; res_parent[y] = unit that reached y
        let mut unit_parent: Vec<Option<UnitId>> = vec![None; n];
        let mut res_parent: Vec<Option<UnitId>> = vec![None; n];
        let mut res_seen = vec![false; n];
        res_seen[target] = true;
        let mut queue = VecDeque::from([target]);
        let mut found = None;
        'search: while let Some(y) = queue.pop_front() {
            for &x in topo.in_neighbors(y) {
                if unit_parent[x].is_some() {
                    continue;
                }
                unit_parent[x] = Some(y);
                if self.spare[x] > 0 {
                    found = Some(x);
                    break 'search;
                }
                for &z in topo.out_neighbors(x) {
                    if !res_seen[z] && self.flow[x * n + z] > 0 {
                        res_seen[z] = true;
                        res_parent[z] = Some(x);
                        queue.push_back(z);
                    }
                }
            }
        }
        let Some(mut x) = found else {
            return false;
        };
        self.spare[x] -= 1;
        loop {
            let y = unit_parent[x].expect("path");
            self.flow[x * n + y] += 1;
            if y == target {
                break;
            }
            let prev = res_parent[y].expect("path");
            self.flow[prev * n + y] -= 1;
            x = prev;
        }
        self.loads[target] += 1;
        true
    }
}

/// Exact maximum of the congestion part of `F` over full states, with the
/// optimal loads. `None` if no full allocation exists.
pub fn max_load_welfare(inst: &Instance, params: &GameParams) -> Option<(f64, Vec<u32>)> {
    let n = inst.len();
    let gain = |y: UnitId, l: u32| inst.lambda()[y] - params.k_c * (2 * l + 1) as f64 / inst.beta()[y] as f64;
    let mut router = LoadRouter::new(inst);
    let mut heap: BinaryHeap<Candidate> = (0..n)
        .filter(|&y| inst.beta()[y] > 0 && inst.topology().in_degree(y) > 0)
        .map(|y| Candidate { gain: gain(y, 0), resource: y })
        .collect();
    let mut remaining = inst.total_alpha();
    while remaining > 0 {
        let Candidate { resource: y, .. } = heap.pop()?;
        if router.push_into(y) {
            remaining -= 1;
            let l = router.loads[y];
            if l < inst.beta()[y] {
                heap.push(Candidate { gain: gain(y, l), resource: y });
            }
        }
    }
    let loads = router.loads;
    Some((load_welfare(inst, params, &loads), loads))
}

/// `F*` when `k_a = 0`, otherwise an upper bound adding the largest possible
/// aggregation term `k_a * sum_x alpha_x * min(alpha_x, max beta over N_x)`.
pub fn welfare_optimum_bound(inst: &Instance, params: &GameParams) -> Option<WelfareOptimum> {
    let (base, _) = max_load_welfare(inst, params)?;
    if params.k_a == 0.0 {
        return Some(WelfareOptimum {
            value: base,
            tag: OptimumTag::Exact,
        });
    }
    let agg: f64 = (0..inst.len())
        .map(|x| {
            let a = inst.alpha()[x];
            let cap = inst
                .topology()
                .out_neighbors(x)
                .iter()
                .map(|&y| inst.beta()[y])
                .max()
                .unwrap_or(0);
            a as f64 * a.min(cap) as f64
        })
        .sum();
    Some(WelfareOptimum {
        value: base + params.k_a * agg,
        tag: OptimumTag::Surrogate,
    })
}
