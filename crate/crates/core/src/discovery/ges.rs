//! Greedy equivalence search over CPDAGs with the Gaussian BIC local score.
//!
//! The forward phase greedily applies the best valid single-edge insertion
//! while any insertion improves the score; the backward phase then applies
//! the best valid deletion while any deletion improves it. Operator validity
//! follows the classical formulation: an insertion Insert(x, y, T) requires
//! NA(y,x) + T to be a clique and every semi-directed path from y to x to
//! pass through it; a deletion Delete(x, y, H) requires NA(y,x) - H to be a
//! clique. After each applied operator the state is re-completed into a
//! CPDAG via a consistent DAG extension.

use std::collections::HashMap;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::graph::{cpdag_of_dag, CausalGraph};
use crate::stats::bic_local_score;
use crate::strategy::DataMatrix;

use super::config::GesConfig;

pub fn ges(m: &DataMatrix, _cfg: &GesConfig) -> Result<CausalGraph> {
    let k = m.ncols();
    let rows = m.nrows();
    if rows <= k + 3 {
        return Err(Error::TestInfeasible(format!(
            "{rows} rows are too few for {k} variables"
        )));
    }

    let mut state = Array2::<u8>::zeros((k, k));
    let mut cache: ScoreCache = HashMap::new();
    let iteration_cap = 10 * k * k + 100;

    // Forward phase.
    let mut steps = 0;
    while let Some(op) = best_insertion(m, &state, &mut cache)? {
        apply_insertion(&mut state, &op);
        state = complete(&state, m.labels())?;
        steps += 1;
        if steps > iteration_cap {
            return Err(Error::Convergence("forward phase did not terminate".into()));
        }
    }

    // Backward phase.
    steps = 0;
    while let Some(op) = best_deletion(m, &state, &mut cache)? {
        apply_deletion(&mut state, &op);
        state = complete(&state, m.labels())?;
        steps += 1;
        if steps > iteration_cap {
            return Err(Error::Convergence("backward phase did not terminate".into()));
        }
    }

    CausalGraph::try_new(m.labels().to_vec(), state)
}

type ScoreCache = HashMap<(usize, Vec<usize>), f64>;

fn local_score(m: &DataMatrix, cache: &mut ScoreCache, child: usize, parents: &[usize]) -> Result<f64> {
    let mut key: Vec<usize> = parents.to_vec();
    key.sort_unstable();
    key.dedup();
    if let Some(&v) = cache.get(&(child, key.clone())) {
        return Ok(v);
    }
    let v = bic_local_score(m, child, &key)?;
    cache.insert((child, key), v);
    Ok(v)
}

fn directed(adj: &Array2<u8>, x: usize, y: usize) -> bool {
    adj[(x, y)] == 1 && adj[(y, x)] == 0
}

fn undirected(adj: &Array2<u8>, x: usize, y: usize) -> bool {
    adj[(x, y)] == 1 && adj[(y, x)] == 1
}

fn adjacent(adj: &Array2<u8>, x: usize, y: usize) -> bool {
    adj[(x, y)] == 1 || adj[(y, x)] == 1
}

fn parents(adj: &Array2<u8>, y: usize) -> Vec<usize> {
    (0..adj.nrows()).filter(|&x| directed(adj, x, y)).collect()
}

fn undirected_neighbors(adj: &Array2<u8>, y: usize) -> Vec<usize> {
    (0..adj.nrows()).filter(|&x| undirected(adj, x, y)).collect()
}

/// Undirected neighbors of y that are adjacent to x.
fn na_set(adj: &Array2<u8>, y: usize, x: usize) -> Vec<usize> {
    undirected_neighbors(adj, y)
        .into_iter()
        .filter(|&v| v != x && adjacent(adj, v, x))
        .collect()
}

fn is_clique(adj: &Array2<u8>, nodes: &[usize]) -> bool {
    for (i, &a) in nodes.iter().enumerate() {
        for &b in &nodes[i + 1..] {
            if !adjacent(adj, a, b) {
                return false;
            }
        }
    }
    true
}

/// Is there a semi-directed path (following undirected edges or directed
/// edges forward) from `from` to `to` that avoids `blocked`?
fn semi_directed_path_avoiding(
    adj: &Array2<u8>,
    from: usize,
    to: usize,
    blocked: &[usize],
) -> bool {
    let k = adj.nrows();
    let mut visited = vec![false; k];
    for &b in blocked {
        visited[b] = true;
    }
    if visited[from] {
        return false;
    }
    let mut stack = vec![from];
    visited[from] = true;
    while let Some(v) = stack.pop() {
        if v == to {
            return true;
        }
        for w in 0..k {
            if !visited[w] && (directed(adj, v, w) || undirected(adj, v, w)) {
                visited[w] = true;
                stack.push(w);
            }
        }
    }
    false
}

struct Insertion {
    x: usize,
    y: usize,
    t: Vec<usize>,
}

struct Deletion {
    x: usize,
    y: usize,
    h: Vec<usize>,
}

fn subsets_of(items: &[usize]) -> Vec<Vec<usize>> {
    let mut out = Vec::with_capacity(1 << items.len());
    for mask in 0u32..(1u32 << items.len()) {
        let mut s = Vec::new();
        for (idx, &v) in items.iter().enumerate() {
            if mask & (1 << idx) != 0 {
                s.push(v);
            }
        }
        out.push(s);
    }
    out
}

fn best_insertion(
    m: &DataMatrix,
    adj: &Array2<u8>,
    cache: &mut ScoreCache,
) -> Result<Option<Insertion>> {
    let k = adj.nrows();
    let rows = m.nrows();
    let mut best: Option<(f64, Insertion)> = None;
    for x in 0..k {
        for y in 0..k {
            if x == y || adjacent(adj, x, y) {
                continue;
            }
            let na = na_set(adj, y, x);
            let pa = parents(adj, y);
            let t_candidates: Vec<usize> = undirected_neighbors(adj, y)
                .into_iter()
                .filter(|&v| v != x && !adjacent(adj, v, x))
                .collect();
            for t in subsets_of(&t_candidates) {
                let mut na_t = na.clone();
                na_t.extend_from_slice(&t);
                if !is_clique(adj, &na_t) {
                    continue;
                }
                if semi_directed_path_avoiding(adj, y, x, &na_t) {
                    continue;
                }
                let mut before: Vec<usize> = pa.clone();
                before.extend_from_slice(&na_t);
                before.sort_unstable();
                before.dedup();
                // Parent sets beyond what the sample can support are skipped
                // rather than failing the whole search.
                if rows <= before.len() + 3 {
                    continue;
                }
                let mut after = before.clone();
                after.push(x);
                let delta = local_score(m, cache, y, &after)? - local_score(m, cache, y, &before)?;
                if delta > 0.0 && best.as_ref().map_or(true, |(b, _)| delta > *b) {
                    best = Some((delta, Insertion { x, y, t }));
                }
            }
        }
    }
    Ok(best.map(|(_, op)| op))
}

fn apply_insertion(adj: &mut Array2<u8>, op: &Insertion) {
    adj[(op.x, op.y)] = 1;
    adj[(op.y, op.x)] = 0;
    for &t in &op.t {
        adj[(t, op.y)] = 1;
        adj[(op.y, t)] = 0;
    }
}

fn best_deletion(
    m: &DataMatrix,
    adj: &Array2<u8>,
    cache: &mut ScoreCache,
) -> Result<Option<Deletion>> {
    let k = adj.nrows();
    let mut best: Option<(f64, Deletion)> = None;
    for x in 0..k {
        for y in 0..k {
            if x == y || !(directed(adj, x, y) || undirected(adj, x, y)) {
                continue;
            }
            let na = na_set(adj, y, x);
            let pa = parents(adj, y);
            for h in subsets_of(&na) {
                let keep: Vec<usize> = na.iter().copied().filter(|v| !h.contains(v)).collect();
                if !is_clique(adj, &keep) {
                    continue;
                }
                let mut before: Vec<usize> = pa.iter().copied().filter(|&v| v != x).collect();
                before.extend_from_slice(&keep);
                before.sort_unstable();
                before.dedup();
                let mut after = before.clone();
                after.push(x);
                let delta = local_score(m, cache, y, &before)? - local_score(m, cache, y, &after)?;
                if delta > 0.0 && best.as_ref().map_or(true, |(b, _)| delta > *b) {
                    best = Some((delta, Deletion { x, y, h }));
                }
            }
        }
    }
    Ok(best.map(|(_, op)| op))
}

fn apply_deletion(adj: &mut Array2<u8>, op: &Deletion) {
    adj[(op.x, op.y)] = 0;
    adj[(op.y, op.x)] = 0;
    for &h in &op.h {
        adj[(op.y, h)] = 1;
        adj[(h, op.y)] = 0;
        if undirected(adj, op.x, h) {
            adj[(op.x, h)] = 1;
            adj[(h, op.x)] = 0;
        }
    }
}

/// Re-completes a PDAG into a CPDAG: extend to a consistent DAG, then reduce
/// the DAG to its equivalence-class representative.
fn complete(adj: &Array2<u8>, labels: &[String]) -> Result<Array2<u8>> {
    let dag_adj = pdag_to_dag(adj)?;
    let dag = CausalGraph::try_new(labels.to_vec(), dag_adj)?;
    Ok(cpdag_of_dag(&dag)?.adj().clone())
}

/// Dor-Tarsi consistent extension: repeatedly find a node with no outgoing
/// directed edges whose undirected neighbors are adjacent to all its other
/// neighbors, orient its undirected edges inward, and retire it.
fn pdag_to_dag(adj: &Array2<u8>) -> Result<Array2<u8>> {
    let k = adj.nrows();
    let mut work = adj.clone();
    let mut result = adj.clone();
    let mut remaining: Vec<bool> = vec![true; k];
    for _ in 0..k {
        let mut found = None;
        'candidates: for x in 0..k {
            if !remaining[x] {
                continue;
            }
            for y in 0..k {
                if remaining[y] && y != x && directed(&work, x, y) {
                    continue 'candidates;
                }
            }
            let nbrs: Vec<usize> = (0..k)
                .filter(|&y| remaining[y] && y != x && adjacent(&work, x, y))
                .collect();
            let und: Vec<usize> = nbrs
                .iter()
                .copied()
                .filter(|&y| undirected(&work, x, y))
                .collect();
            for &u in &und {
                for &v in &nbrs {
                    if v != u && !adjacent(&work, u, v) {
                        continue 'candidates;
                    }
                }
            }
            found = Some((x, und));
            break;
        }
        let Some((x, und)) = found else {
            return Err(Error::Numerical("PDAG admits no consistent DAG extension".into()));
        };
        for u in und {
            result[(x, u)] = 0; // keep u -> x
            work[(x, u)] = 0;
        }
        for y in 0..k {
            work[(x, y)] = 0;
            work[(y, x)] = 0;
        }
        remaining[x] = false;
    }
    Ok(result)
}
