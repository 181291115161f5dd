//! Causal-graph representation shared by every algorithm and metric.
//!
//! A graph over `k` variables is a `k x k` adjacency matrix with entries in
//! `{0, 1}`. `adj[i][j] = 1` together with `adj[j][i] = 0` encodes the
//! directed edge `i -> j`; a symmetric pair `adj[i][j] = adj[j][i] = 1`
//! encodes the undirected edge `i -- j`. No algorithm in this crate can
//! produce a genuinely bidirected edge, so no separate encoding exists.

use std::collections::BTreeMap;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Immutable causal graph: DAG, CPDAG or skeleton depending on provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct CausalGraph {
    labels: Vec<String>,
    adj: Array2<u8>,
}

/// Category of a 2-variable causal graph, used for outcome-frequency tallies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PairwiseOutcome {
    Empty,
    X1ToX2,
    X2ToX1,
    Undirected,
    /// Catch-all; unreachable for well-formed graphs under the
    /// symmetric-pair-means-undirected convention, kept for exhaustiveness.
    Other,
}

impl std::fmt::Display for PairwiseOutcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            PairwiseOutcome::Empty => "empty",
            PairwiseOutcome::X1ToX2 => "x1->x2",
            PairwiseOutcome::X2ToX1 => "x2->x1",
            PairwiseOutcome::Undirected => "undirected",
            PairwiseOutcome::Other => "other",
        };
        f.write_str(s)
    }
}

impl PairwiseOutcome {
    pub const ALL: [PairwiseOutcome; 5] = [
        PairwiseOutcome::Empty,
        PairwiseOutcome::X1ToX2,
        PairwiseOutcome::X2ToX1,
        PairwiseOutcome::Undirected,
        PairwiseOutcome::Other,
    ];
}

/// Separating sets recorded while removing edges, keyed by unordered pair.
pub type SepsetMap = BTreeMap<(usize, usize), Vec<usize>>;

/// Normalizes an unordered pair key for a [`SepsetMap`].
pub fn pair_key(i: usize, j: usize) -> (usize, usize) {
    if i <= j {
        (i, j)
    } else {
        (j, i)
    }
}

/// JSON wire format: `{"labels": [...], "adj": [[...]]}`.
#[derive(Serialize, Deserialize)]
struct GraphJson {
    labels: Vec<String>,
    adj: Vec<Vec<u8>>,
}

impl CausalGraph {
    /// Builds a graph after validating the adjacency matrix: square, matching
    /// label count, entries in `{0,1}`, zero diagonal.
    pub fn try_new(labels: Vec<String>, adj: Array2<u8>) -> Result<Self> {
        let k = labels.len();
        if adj.nrows() != k || adj.ncols() != k {
            return Err(Error::Structure(format!(
                "adjacency is {}x{} but there are {} labels",
                adj.nrows(),
                adj.ncols(),
                k
            )));
        }
        for i in 0..k {
            for j in 0..k {
                let v = adj[(i, j)];
                if v > 1 {
                    return Err(Error::Structure(format!(
                        "adjacency entry ({i},{j}) = {v} is not in {{0,1}}"
                    )));
                }
                if i == j && v != 0 {
                    return Err(Error::Structure(format!("self-loop at node {i}")));
                }
            }
        }
        Ok(Self { labels, adj })
    }

    /// Graph with no edges.
    pub fn empty(labels: Vec<String>) -> Self {
        let k = labels.len();
        Self {
            labels,
            adj: Array2::zeros((k, k)),
        }
    }

    /// DAG from a directed edge list; errors on invalid indices or self-loops.
    pub fn from_edges(labels: Vec<String>, edges: &[(usize, usize)]) -> Result<Self> {
        let k = labels.len();
        let mut adj = Array2::zeros((k, k));
        for &(i, j) in edges {
            if i >= k || j >= k {
                return Err(Error::Structure(format!(
                    "edge ({i},{j}) out of range for k={k}"
                )));
            }
            adj[(i, j)] = 1;
        }
        Self::try_new(labels, adj)
    }

    pub fn k(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn adj(&self) -> &Array2<u8> {
        &self.adj
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.adj[(i, j)] == 1
    }

    /// True when i and j are connected by any edge.
    pub fn adjacent(&self, i: usize, j: usize) -> bool {
        self.adj[(i, j)] == 1 || self.adj[(j, i)] == 1
    }

    pub fn is_directed_edge(&self, i: usize, j: usize) -> bool {
        self.adj[(i, j)] == 1 && self.adj[(j, i)] == 0
    }

    pub fn is_undirected_edge(&self, i: usize, j: usize) -> bool {
        self.adj[(i, j)] == 1 && self.adj[(j, i)] == 1
    }

    /// Directed edges (i, j) with i -> j.
    pub fn directed_edges(&self) -> Vec<(usize, usize)> {
        let k = self.k();
        let mut out = Vec::new();
        for i in 0..k {
            for j in 0..k {
                if self.is_directed_edge(i, j) {
                    out.push((i, j));
                }
            }
        }
        out
    }

    /// Undirected edges as (i, j) with i < j.
    pub fn undirected_edges(&self) -> Vec<(usize, usize)> {
        let k = self.k();
        let mut out = Vec::new();
        for i in 0..k {
            for j in (i + 1)..k {
                if self.is_undirected_edge(i, j) {
                    out.push((i, j));
                }
            }
        }
        out
    }

    /// Number of adjacencies (undirected pairs counted once).
    pub fn edge_count(&self) -> usize {
        let k = self.k();
        let mut c = 0;
        for i in 0..k {
            for j in (i + 1)..k {
                if self.adjacent(i, j) {
                    c += 1;
                }
            }
        }
        c
    }

    /// True iff the directed sub-relation has no directed cycle. Undirected
    /// edges are ignored.
    pub fn is_acyclic(&self) -> bool {
        directed_part_is_acyclic(&self.adj)
    }

    /// True iff the graph has no undirected edges and no directed cycles, so
    /// it can be flagged as a DAG result.
    pub fn is_dag(&self) -> bool {
        self.undirected_edges().is_empty() && self.is_acyclic()
    }

    /// Undirected version: `adj'[i][j] = adj'[j][i] = max(adj[i][j], adj[j][i])`.
    /// Idempotent.
    pub fn skeleton(&self) -> CausalGraph {
        let k = self.k();
        let mut adj = Array2::zeros((k, k));
        for i in 0..k {
            for j in 0..k {
                if i != j {
                    adj[(i, j)] = self.adj[(i, j)].max(self.adj[(j, i)]);
                }
            }
        }
        CausalGraph {
            labels: self.labels.clone(),
            adj,
        }
    }

    /// Entrywise adjacency equality; errors on dimension or label mismatch.
    pub fn structural_eq(&self, other: &CausalGraph) -> Result<bool> {
        if self.k() != other.k() {
            return Err(Error::Comparison(format!(
                "variable counts differ: {} vs {}",
                self.k(),
                other.k()
            )));
        }
        if self.labels != other.labels {
            return Err(Error::Comparison("label order differs".into()));
        }
        Ok(self.adj == other.adj)
    }

    /// Maps a 2-variable graph to its unique outcome category.
    pub fn pairwise_outcome(&self) -> Result<PairwiseOutcome> {
        if self.k() != 2 {
            return Err(Error::Arity(self.k()));
        }
        Ok(match (self.adj[(0, 1)], self.adj[(1, 0)]) {
            (0, 0) => PairwiseOutcome::Empty,
            (1, 0) => PairwiseOutcome::X1ToX2,
            (0, 1) => PairwiseOutcome::X2ToX1,
            (1, 1) => PairwiseOutcome::Undirected,
            _ => PairwiseOutcome::Other,
        })
    }

    pub fn to_json(&self) -> serde_json::Value {
        let rows: Vec<Vec<u8>> = (0..self.k())
            .map(|i| self.adj.row(i).to_vec())
            .collect();
        serde_json::json!({ "labels": self.labels, "adj": rows })
    }

    pub fn from_json(value: &serde_json::Value) -> Result<Self> {
        let parsed: GraphJson = serde_json::from_value(value.clone())?;
        let k = parsed.labels.len();
        let mut adj = Array2::zeros((k, k));
        if parsed.adj.len() != k {
            return Err(Error::Structure(format!(
                "adjacency has {} rows for {} labels",
                parsed.adj.len(),
                k
            )));
        }
        for (i, row) in parsed.adj.iter().enumerate() {
            if row.len() != k {
                return Err(Error::Structure(format!("row {i} has {} entries", row.len())));
            }
            for (j, &v) in row.iter().enumerate() {
                adj[(i, j)] = v;
            }
        }
        Self::try_new(parsed.labels, adj)
    }
}

fn directed_part_is_acyclic(adj: &Array2<u8>) -> bool {
    // Kahn's algorithm over the directed sub-relation.
    let k = adj.nrows();
    let mut indeg = vec![0usize; k];
    for i in 0..k {
        for j in 0..k {
            if adj[(i, j)] == 1 && adj[(j, i)] == 0 {
                indeg[j] += 1;
            }
        }
    }
    let mut stack: Vec<usize> = (0..k).filter(|&v| indeg[v] == 0).collect();
    let mut seen = 0;
    while let Some(v) = stack.pop() {
        seen += 1;
        for j in 0..k {
            if adj[(v, j)] == 1 && adj[(j, v)] == 0 {
                indeg[j] -= 1;
                if indeg[j] == 0 {
                    stack.push(j);
                }
            }
        }
    }
    seen == k
}

/// Would orienting `from -> to` (on top of the current directed part) close a
/// directed cycle? True when a directed path to -> ... -> from already exists.
fn creates_cycle(adj: &Array2<u8>, from: usize, to: usize) -> bool {
    let k = adj.nrows();
    let mut visited = vec![false; k];
    let mut stack = vec![to];
    while let Some(v) = stack.pop() {
        if v == from {
            return true;
        }
        if visited[v] {
            continue;
        }
        visited[v] = true;
        for j in 0..k {
            if adj[(v, j)] == 1 && adj[(j, v)] == 0 && !visited[j] {
                stack.push(j);
            }
        }
    }
    false
}

/// Orients a skeleton into a CPDAG: v-structures from the separating sets,
/// then closure under the four Meek propagation rules.
///
/// Two conflicting v-structure demands on one edge leave that edge
/// undirected; the collection pass gathers all demands before any edge is
/// oriented, so the outcome does not depend on triple enumeration order.
/// A Meek orientation that would close a directed cycle (possible only for
/// inconsistent sepset inputs) is skipped rather than applied.
pub fn orient_cpdag(skeleton: &CausalGraph, sepsets: &SepsetMap) -> CausalGraph {
    let k = skeleton.k();
    let mut adj = skeleton.skeleton().adj;

    // Collect v-structure orientation demands a -> c <- b.
    let mut demands: BTreeMap<(usize, usize), bool> = BTreeMap::new(); // (from,to) -> demanded
    for a in 0..k {
        for b in (a + 1)..k {
            if adj[(a, b)] == 1 || adj[(b, a)] == 1 {
                continue; // adjacent pairs form no v-structure
            }
            let Some(sepset) = sepsets.get(&pair_key(a, b)) else {
                continue;
            };
            for c in 0..k {
                if c == a || c == b {
                    continue;
                }
                let c_adj_a = adj[(a, c)] == 1 || adj[(c, a)] == 1;
                let c_adj_b = adj[(b, c)] == 1 || adj[(c, b)] == 1;
                if c_adj_a && c_adj_b && !sepset.contains(&c) {
                    demands.insert((a, c), true);
                    demands.insert((b, c), true);
                }
            }
        }
    }
    for (&(from, to), _) in demands.iter() {
        if demands.contains_key(&(to, from)) {
            continue; // conflicting demands: keep undirected
        }
        adj[(to, from)] = 0;
    }

    meek_closure(&mut adj);

    CausalGraph {
        labels: skeleton.labels.clone(),
        adj,
    }
}

/// The CPDAG of a DAG: skeleton plus the DAG's own v-structures, closed under
/// the Meek rules.
pub fn cpdag_of_dag(dag: &CausalGraph) -> Result<CausalGraph> {
    if !dag.is_dag() {
        return Err(Error::Structure("input is not a DAG".into()));
    }
    let k = dag.k();
    let mut adj = dag.skeleton().adj;
    for c in 0..k {
        for a in 0..k {
            for b in (a + 1)..k {
                if a == c || b == c {
                    continue;
                }
                if dag.has_edge(a, c) && dag.has_edge(b, c) && !dag.adjacent(a, b) {
                    adj[(c, a)] = 0;
                    adj[(c, b)] = 0;
                }
            }
        }
    }
    meek_closure(&mut adj);
    Ok(CausalGraph {
        labels: dag.labels().to_vec(),
        adj,
    })
}

/// Applies Meek rules 1-4 until no rule fires. Only undirected edges are ever
/// oriented, and an orientation that would close a directed cycle is skipped.
fn meek_closure(adj: &mut Array2<u8>) {
    let k = adj.nrows();
    let undirected = |adj: &Array2<u8>, x: usize, y: usize| adj[(x, y)] == 1 && adj[(y, x)] == 1;
    let directed = |adj: &Array2<u8>, x: usize, y: usize| adj[(x, y)] == 1 && adj[(y, x)] == 0;
    let adjacent = |adj: &Array2<u8>, x: usize, y: usize| adj[(x, y)] == 1 || adj[(y, x)] == 1;

    loop {
        let mut changed = false;
        for x in 0..k {
            for y in 0..k {
                if x == y || !undirected(adj, x, y) {
                    continue;
                }
                let mut orient = false;

                // R1: a -> x, x -- y, a and y nonadjacent  =>  x -> y.
                for a in 0..k {
                    if a != y && directed(adj, a, x) && !adjacent(adj, a, y) {
                        orient = true;
                        break;
                    }
                }

                // R2: x -> c -> y with x -- y  =>  x -> y.
                if !orient {
                    for c in 0..k {
                        if c != x && c != y && directed(adj, x, c) && directed(adj, c, y) {
                            orient = true;
                            break;
                        }
                    }
                }

                // R3: x -- c -> y, x -- d -> y, c and d nonadjacent  =>  x -> y.
                if !orient {
                    'r3: for c in 0..k {
                        if c == x || c == y || !undirected(adj, x, c) || !directed(adj, c, y) {
                            continue;
                        }
                        for d in (c + 1)..k {
                            if d == x || d == y || !undirected(adj, x, d) || !directed(adj, d, y) {
                                continue;
                            }
                            if !adjacent(adj, c, d) {
                                orient = true;
                                break 'r3;
                            }
                        }
                    }
                }

                // R4: d -> c -> y, x adjacent to d, y and d nonadjacent  =>  x -> y.
                if !orient {
                    'r4: for c in 0..k {
                        if c == x || c == y || !directed(adj, c, y) {
                            continue;
                        }
                        for d in 0..k {
                            if d == x || d == y || d == c {
                                continue;
                            }
                            if directed(adj, d, c) && adjacent(adj, x, d) && !adjacent(adj, y, d) {
                                orient = true;
                                break 'r4;
                            }
                        }
                    }
                }

                if orient && !creates_cycle(adj, x, y) {
                    adj[(y, x)] = 0;
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
}
