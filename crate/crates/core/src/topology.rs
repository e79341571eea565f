//! Unit network, generators for the standard topologies, and the problem
//! instance (graph plus per-unit demand, capacity and reliability).

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense 0-based unit index.
pub type UnitId = usize;

/// Restarts allowed before random regular generation gives up.
pub const REGULAR_MAX_ATTEMPTS: usize = 1000;

/// Directed graph over units. An edge `(x, y)` means `x` may store data on `y`.
///
/// Adjacency lists are kept sorted; both directions are cached.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "EdgeListRepr", try_from = "EdgeListRepr")]
pub struct Topology {
    n: usize,
    out: Vec<Vec<UnitId>>,
    inc: Vec<Vec<UnitId>>,
}

#[derive(Serialize, Deserialize)]
struct EdgeListRepr {
    n: usize,
    edges: Vec<[UnitId; 2]>,
}

impl From<Topology> for EdgeListRepr {
    fn from(t: Topology) -> Self {
        EdgeListRepr {
            n: t.n,
            edges: t.edges().map(|(x, y)| [x, y]).collect(),
        }
    }
}

impl TryFrom<EdgeListRepr> for Topology {
    type Error = Error;

    fn try_from(r: EdgeListRepr) -> Result<Self> {
        Topology::from_edges(r.n, r.edges.iter().map(|e| (e[0], e[1])))
    }
}

impl Topology {
    /// Builds a topology from an edge list. Duplicate edges collapse; self-loops
    /// and out-of-range endpoints are rejected.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (UnitId, UnitId)>) -> Result<Self> {
        let mut out = vec![Vec::new(); n];
        for (x, y) in edges {
            if x >= n || y >= n {
                return Err(Error::invalid(format!("edge ({x}, {y}) out of range for n={n}")));
            }
            if x == y {
                return Err(Error::invalid(format!("self-loop ({x}, {x})")));
            }
            out[x].push(y);
        }
        for list in &mut out {
            list.sort_unstable();
            list.dedup();
        }
        let mut inc = vec![Vec::new(); n];
        for (x, list) in out.iter().enumerate() {
            for &y in list {
                inc[y].push(x);
            }
        }
        Ok(Topology { n, out, inc })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Resources unit `x` may use.
    pub fn out_neighbors(&self, x: UnitId) -> &[UnitId] {
        &self.out[x]
    }

    /// Units that may use resource `y`.
    pub fn in_neighbors(&self, y: UnitId) -> &[UnitId] {
        &self.inc[y]
    }

    pub fn has_edge(&self, x: UnitId, y: UnitId) -> bool {
        x < self.n && self.out[x].binary_search(&y).is_ok()
    }

    pub fn edge_count(&self) -> usize {
        self.out.iter().map(Vec::len).sum()
    }

    /// Edges in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (UnitId, UnitId)> + '_ {
        self.out
            .iter()
            .enumerate()
            .flat_map(|(x, list)| list.iter().map(move |&y| (x, y)))
    }

    pub fn out_degree(&self, x: UnitId) -> usize {
        self.out[x].len()
    }

    pub fn in_degree(&self, y: UnitId) -> usize {
        self.inc[y].len()
    }

    /// Union of the out-neighborhoods of the units in `set`, sorted.
    pub fn neighborhood_of_set(&self, set: &[UnitId]) -> Vec<UnitId> {
        let mut mark = vec![false; self.n];
        for &x in set {
            for &y in &self.out[x] {
                mark[y] = true;
            }
        }
        (0..self.n).filter(|&y| mark[y]).collect()
    }

    /// True if every edge has its reverse.
    pub fn is_symmetric(&self) -> bool {
        self.edges().all(|(x, y)| self.has_edge(y, x))
    }
}

/// Complete directed graph on `n` units.
pub fn build_complete(n: usize) -> Result<Topology> {
    if n == 0 {
        return Err(Error::invalid("complete graph needs n >= 1"));
    }
    let edges = (0..n).flat_map(|x| (0..n).filter(move |&y| y != x).map(move |y| (x, y)));
    Topology::from_edges(n, edges)
}

/// Bidirectional chain `0 - 1 - ... - (n-1)`.
pub fn build_line(n: usize) -> Result<Topology> {
    if n < 2 {
        return Err(Error::invalid("line graph needs n >= 2"));
    }
    let edges = (0..n - 1).flat_map(|i| [(i, i + 1), (i + 1, i)]);
    Topology::from_edges(n, edges)
}

/// Random simple `d`-regular undirected graph, stored as symmetric directed
/// edges. Deterministic for a fixed seed.
///
/// Uses the pairing model, rejecting individual pairs that would create a loop
/// or a repeated edge and restarting when no admissible pair is left. Whole-graph
/// rejection is hopeless for moderate `d` (the acceptance rate decays like
/// `exp(-(d^2 - 1) / 4)`). Dense requests (`2d > n - 1`) are built as the
/// complement of a sparse `(n - 1 - d)`-regular graph.
pub fn build_random_regular(n: usize, d: usize, seed: u64) -> Result<Topology> {
    if d >= n {
        return Err(Error::invalid(format!("degree {d} must be below n={n}")));
    }
    if (n * d) % 2 == 1 {
        return Err(Error::invalid(format!("n*d must be even (n={n}, d={d})")));
    }
    let dense = 2 * d > n - 1;
    let sparse_d = if dense { n - 1 - d } else { d };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..REGULAR_MAX_ATTEMPTS {
        if let Some(adj) = try_pairing(n, sparse_d, &mut rng) {
            let edges = if dense {
                let mut mark = vec![false; n];
                let mut edges = Vec::with_capacity(n * d);
                for (x, list) in adj.iter().enumerate() {
                    list.iter().for_each(|&y| mark[y] = true);
                    edges.extend((0..n).filter(|&y| y != x && !mark[y]).map(|y| (x, y)));
                    list.iter().for_each(|&y| mark[y] = false);
                }
                edges
            } else {
                adj.iter()
                    .enumerate()
                    .flat_map(|(x, list)| list.iter().map(move |&y| (x, y)))
                    .collect()
            };
            return Topology::from_edges(n, edges);
        }
    }
    Err(Error::GenerationFailed {
        n,
        d,
        attempts: REGULAR_MAX_ATTEMPTS,
    })
}

fn try_pairing(n: usize, d: usize, rng: &mut ChaCha8Rng) -> Option<Vec<Vec<UnitId>>> {
    let mut points: Vec<UnitId> = (0..n).flat_map(|v| std::iter::repeat_n(v, d)).collect();
    points.shuffle(rng);
    let mut adj: Vec<Vec<UnitId>> = vec![Vec::with_capacity(d); n];
    let admissible = |adj: &[Vec<UnitId>], u: UnitId, v: UnitId| u != v && !adj[u].contains(&v);

    let mut misses = 0usize;
    while !points.is_empty() {
        let m = points.len();
        let i = rng.gen_range(0..m);
        let mut j = rng.gen_range(0..m - 1);
        if j >= i {
            j += 1;
        }
        let (u, v) = (points[i], points[j]);
        if admissible(&adj, u, v) {
            adj[u].push(v);
            adj[v].push(u);
            let (hi, lo) = if i > j { (i, j) } else { (j, i) };
            points.swap_remove(hi);
            points.swap_remove(lo);
            misses = 0;
            continue;
        }
        misses += 1;
        if misses > 64 {
            let any = (0..m).any(|a| (a + 1..m).any(|b| admissible(&adj, points[a], points[b])));
            if !any {
                return None;
            }
            misses = 0;
        }
    }
    Some(adj)
}

/// A problem instance: topology plus per-unit demand `alpha` (atoms to back
/// up), capacity `beta` (atom slots offered) and reliability `lambda`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Instance {
    topology: Topology,
    alpha: Vec<u32>,
    beta: Vec<u32>,
    lambda: Vec<f64>,
}

impl Instance {
    pub fn new(topology: Topology, alpha: Vec<u32>, beta: Vec<u32>, lambda: Vec<f64>) -> Result<Self> {
        let n = topology.len();
        for (name, len) in [("alpha", alpha.len()), ("beta", beta.len()), ("lambda", lambda.len())] {
            if len != n {
                return Err(Error::invalid(format!("{name} has length {len}, expected {n}")));
            }
        }
        if let Some(bad) = lambda.iter().find(|l| !l.is_finite() || **l < 0.0) {
            return Err(Error::invalid(format!("lambda entries must be finite and >= 0, got {bad}")));
        }
        Ok(Instance {
            topology,
            alpha,
            beta,
            lambda,
        })
    }

    /// Instance with the same demand, capacity and reliability for every unit.
    pub fn uniform(topology: Topology, alpha: u32, beta: u32, lambda: f64) -> Result<Self> {
        let n = topology.len();
        Instance::new(topology, vec![alpha; n], vec![beta; n], vec![lambda; n])
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    pub fn len(&self) -> usize {
        self.topology.len()
    }

    pub fn is_empty(&self) -> bool {
        self.topology.is_empty()
    }

    pub fn alpha(&self) -> &[u32] {
        &self.alpha
    }

    pub fn beta(&self) -> &[u32] {
        &self.beta
    }

    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    pub fn total_alpha(&self) -> u64 {
        self.alpha.iter().map(|&a| a as u64).sum()
    }

    pub fn total_beta(&self) -> u64 {
        self.beta.iter().map(|&b| b as u64).sum()
    }

    pub fn lambda_max(&self) -> f64 {
        self.lambda.iter().copied().fold(0.0, f64::max)
    }

    /// Copy with `alpha[x]` replaced.
    pub fn with_alpha_at(&self, x: UnitId, value: u32) -> Instance {
        let mut out = self.clone();
        out.alpha[x] = value;
        out
    }

    /// Copy with a new reliability vector.
    pub fn with_lambda(&self, lambda: Vec<f64>) -> Result<Instance> {
        Instance::new(self.topology.clone(), self.alpha.clone(), self.beta.clone(), lambda)
    }
}
