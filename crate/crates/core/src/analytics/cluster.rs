//! Agglomerative hierarchical clustering with average linkage on the
//! dissimilarity d = 1 - rho.
//!
//! Leaves are numbered 0..n-1; the cluster created by merge `m` gets id
//! n + m. Merge candidates tie-break on the smallest (a, b) id pair, so
//! the merge order is deterministic.

use serde::{Deserialize, Serialize};

use super::SimilarityMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Merge {
    pub cluster_a: usize,
    pub cluster_b: usize,
    pub height: f64,
    pub size: usize,
}

/// Stepwise dendrogram: exactly n-1 merges with nondecreasing heights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dendrogram {
    pub linkage: String,
    pub labels: Vec<String>,
    pub merges: Vec<Merge>,
}

impl Dendrogram {
    /// Groups of leaf indices obtained by cutting at `height` (merges with
    /// height <= cut are applied).
    pub fn cut(&self, height: f64) -> Vec<Vec<usize>> {
        let n = self.labels.len();
        let mut members: Vec<Option<Vec<usize>>> =
            (0..n).map(|i| Some(vec![i])).collect();
        members.resize_with(n + self.merges.len(), || None);
        for (step, merge) in self.merges.iter().enumerate() {
            if merge.height <= height {
                let a = members[merge.cluster_a].take().expect("active cluster");
                let b = members[merge.cluster_b].take().expect("active cluster");
                let mut joined = a;
                joined.extend(b);
                joined.sort_unstable();
                members[n + step] = Some(joined);
            }
        }
        let mut groups: Vec<Vec<usize>> = members.into_iter().flatten().collect();
        groups.sort();
        groups
    }
}

struct Active {
    id: usize,
    size: usize,
}

/// Average-linkage clustering of 1 - similarity.
pub fn hierarchical_cluster(sim: &SimilarityMatrix) -> Dendrogram {
    let n = sim.n();
    let mut merges = Vec::new();
    if n == 0 {
        return Dendrogram {
            linkage: "average".into(),
            labels: sim.labels.clone(),
            merges,
        };
    }
    let mut active: Vec<Active> = (0..n).map(|id| Active { id, size: 1 }).collect();
    // dist[i][j] between active clusters (positional indices).
    let mut dist: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| 1.0 - sim.get(i, j)).collect())
        .collect();

    for step in 0..n.saturating_sub(1) {
        let m = active.len();
        let mut best: Option<(usize, usize, f64)> = None;
        for i in 0..m {
            for j in (i + 1)..m {
                let d = dist[i][j];
                let better = match &best {
                    None => true,
                    Some((bi, bj, bd)) => {
                        d < *bd
                            || (d == *bd
                                && pair_ids(&active, i, j) < pair_ids(&active, *bi, *bj))
                    }
                };
                if better {
                    best = Some((i, j, d));
                }
            }
        }
        let (i, j, height) = best.expect("at least one pair");
        let (low, high) = (active[i].id.min(active[j].id), active[i].id.max(active[j].id));
        let new_size = active[i].size + active[j].size;
        merges.push(Merge {
            cluster_a: low,
            cluster_b: high,
            height,
            size: new_size,
        });

        // Lance-Williams update for average linkage.
        let (si, sj) = (active[i].size as f64, active[j].size as f64);
        let merged_dists: Vec<f64> = (0..m)
            .filter(|&k| k != i && k != j)
            .map(|k| (si * dist[i][k] + sj * dist[j][k]) / (si + sj))
            .collect();

        // Remove positions j then i (j > i), append the merged cluster.
        let remove = |rows: &mut Vec<Vec<f64>>, pos: usize| {
            rows.remove(pos);
            for row in rows.iter_mut() {
                row.remove(pos);
            }
        };
        remove(&mut dist, j);
        remove(&mut dist, i);
        active.remove(j);
        active.remove(i);
        for (row, &d) in dist.iter_mut().zip(&merged_dists) {
            row.push(d);
        }
        let mut new_row = merged_dists;
        new_row.push(0.0);
        dist.push(new_row);
        active.push(Active {
            id: n + step,
            size: new_size,
        });
    }
    Dendrogram {
        linkage: "average".into(),
        labels: sim.labels.clone(),
        merges,
    }
}

fn pair_ids(active: &[Active], i: usize, j: usize) -> (usize, usize) {
    let (a, b) = (active[i].id, active[j].id);
    (a.min(b), a.max(b))
}
