//! Stable-PC: order-independent constraint-based search.
//!
//! Starting from the complete undirected graph, edges are removed level by
//! level: at conditioning-set size `s` every test draws its candidate sets
//! from the neighborhoods recorded at the start of the level, so removals
//! within a level cannot influence each other and the result does not depend
//! on variable input order. Removed pairs record their separating set; the
//! skeleton is then oriented into a CPDAG.

use itertools::Itertools;

use crate::error::{Error, Result};
use crate::graph::{orient_cpdag, pair_key, CausalGraph, SepsetMap};
use crate::stats::{fisher_z_test, partial_correlation};
use crate::strategy::DataMatrix;

use super::config::StablePcConfig;

pub fn stable_pc(m: &DataMatrix, cfg: &StablePcConfig) -> Result<CausalGraph> {
    let k = m.ncols();
    let rows = m.nrows();
    if rows <= k + 3 {
        return Err(Error::TestInfeasible(format!(
            "{rows} rows are too few for {k} variables"
        )));
    }

    let mut adj = vec![vec![false; k]; k];
    for i in 0..k {
        for j in 0..k {
            adj[i][j] = i != j;
        }
    }
    let mut sepsets = SepsetMap::new();

    let mut s = 0usize;
    loop {
        // Neighborhood snapshot taken once per level.
        let snapshot: Vec<Vec<usize>> = (0..k)
            .map(|i| (0..k).filter(|&j| adj[i][j]).collect())
            .collect();

        for i in 0..k {
            for j in (i + 1)..k {
                if !adj[i][j] {
                    continue;
                }
                'pair: for (a, b) in [(i, j), (j, i)] {
                    let cands: Vec<usize> = snapshot[a]
                        .iter()
                        .copied()
                        .filter(|&v| v != b)
                        .collect();
                    if cands.len() < s {
                        continue;
                    }
                    for combo in cands.into_iter().combinations(s) {
                        let r = partial_correlation(m, a, b, &combo)?;
                        let test = fisher_z_test(r, rows, s, cfg.alpha)?;
                        if test.independent {
                            adj[i][j] = false;
                            adj[j][i] = false;
                            sepsets.insert(pair_key(a, b), combo);
                            break 'pair;
                        }
                    }
                }
            }
        }

        s += 1;
        // Stop once no still-connected pair has a large enough neighborhood
        // to supply conditioning sets of the next size.
        let mut testable = false;
        'scan: for i in 0..k {
            for j in 0..k {
                if i != j && adj[i][j] {
                    let deg = (0..k).filter(|&v| adj[i][v]).count();
                    if deg - 1 >= s {
                        testable = true;
                        break 'scan;
                    }
                }
            }
        }
        if !testable {
            break;
        }
    }

    let mut edges = Vec::new();
    for i in 0..k {
        for j in (i + 1)..k {
            if adj[i][j] {
                edges.push((i, j));
                edges.push((j, i));
            }
        }
    }
    let skeleton = CausalGraph::from_edges(m.labels().to_vec(), &edges)?;
    Ok(orient_cpdag(&skeleton, &sepsets))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::PairwiseOutcome;
    use crate::strategy::Strategy;
    use ndarray::Array2;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn matrix(values: Array2<f64>) -> DataMatrix {
        let k = values.ncols();
        let labels = (1..=k).map(|i| format!("X{i}")).collect();
        DataMatrix::from_parts(labels, Strategy::S1, values).unwrap()
    }

    #[test]
    fn independent_columns_give_empty_graph() {
        // Type-I error oracle: the false-positive rate over seeds should sit
        // near the significance level.
        let d = Normal::new(0.0, 1.0).unwrap();
        let mut empty = 0;
        let total = 40;
        for seed in 0..total {
            let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
            let mut values = Array2::zeros((500, 2));
            for i in 0..500 {
                values[(i, 0)] = d.sample(&mut rng);
                values[(i, 1)] = d.sample(&mut rng);
            }
            let g = stable_pc(&matrix(values), &StablePcConfig::default()).unwrap();
            if g.pairwise_outcome().unwrap() == PairwiseOutcome::Empty {
                empty += 1;
            }
        }
        // alpha = 0.05: expect ~38/40 empty.
        assert!(empty >= 34, "only {empty}/{total} empty");
    }

    #[test]
    fn recovers_collider() {
        let d = Normal::new(0.0, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 1000;
        let mut values = Array2::zeros((n, 3));
        for i in 0..n {
            let x = d.sample(&mut rng);
            let y = d.sample(&mut rng);
            let z = x + y + 0.5 * d.sample(&mut rng);
            values[(i, 0)] = x;
            values[(i, 1)] = y;
            values[(i, 2)] = z;
        }
        let g = stable_pc(&matrix(values), &StablePcConfig::default()).unwrap();
        assert!(g.is_directed_edge(0, 2));
        assert!(g.is_directed_edge(1, 2));
        assert!(!g.adjacent(0, 1));
    }

    #[test]
    fn correlated_pair_is_undirected() {
        // No v-structure is possible with two variables.
        let d = Normal::new(0.0, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let n = 500;
        let mut values = Array2::zeros((n, 2));
        for i in 0..n {
            let x = d.sample(&mut rng);
            values[(i, 0)] = x;
            values[(i, 1)] = 0.8 * x + 0.5 * d.sample(&mut rng);
        }
        let g = stable_pc(&matrix(values), &StablePcConfig::default()).unwrap();
        assert_eq!(g.pairwise_outcome().unwrap(), PairwiseOutcome::Undirected);
    }

    #[test]
    fn too_few_rows_is_infeasible() {
        let values = Array2::zeros((4, 2));
        let m = DataMatrix::from_parts(
            vec!["a".into(), "b".into()],
            Strategy::S1,
            values,
        )
        .unwrap();
        assert!(matches!(
            stable_pc(&m, &StablePcConfig::default()),
            Err(Error::TestInfeasible(_))
        ));
    }
}
