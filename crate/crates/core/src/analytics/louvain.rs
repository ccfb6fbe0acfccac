//! Louvain community detection on a weighted undirected graph, with a
//! fixed node sweep order for reproducibility.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{AnalyticsError, SimilarityMatrix};

const GAIN_EPSILON: f64 = 1e-12;

/// Undirected weighted graph. Self-loops are stored once and count twice
/// toward a node's degree, matching the usual modularity conventions so
/// that aggregated graphs keep the same modularity value.
#[derive(Debug, Clone)]
pub struct WeightedGraph {
    adj: Vec<Vec<(usize, f64)>>,
}

impl WeightedGraph {
    pub fn new(n: usize) -> Self {
        WeightedGraph {
            adj: vec![Vec::new(); n],
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.adj.len()
    }

    pub fn add_edge(&mut self, a: usize, b: usize, weight: f64) {
        assert!(weight >= 0.0, "edge weights must be nonnegative");
        if a == b {
            self.adj[a].push((a, weight));
        } else {
            self.adj[a].push((b, weight));
            self.adj[b].push((a, weight));
        }
    }

    /// Weighted degree; self-loops count twice.
    pub fn degree(&self, node: usize) -> f64 {
        self.adj[node]
            .iter()
            .map(|&(to, w)| if to == node { 2.0 * w } else { w })
            .sum()
    }

    /// Sum of all degrees (2m).
    pub fn total_degree(&self) -> f64 {
        (0..self.n_nodes()).map(|i| self.degree(i)).sum()
    }

    pub fn neighbors(&self, node: usize) -> &[(usize, f64)] {
        &self.adj[node]
    }
}

/// Node-to-community assignment with contiguous community ids and the
/// modularity of the partition on the original graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Partition {
    pub communities: Vec<usize>,
    pub modularity: f64,
}

impl Partition {
    pub fn n_communities(&self) -> usize {
        self.communities.iter().copied().max().map_or(0, |m| m + 1)
    }
}

/// Builds the analysis graph from a similarity matrix: keep pairs with
/// rho > min_rho as edges weighted by rho; the diagonal is ignored.
pub fn graph_from_similarity(sim: &SimilarityMatrix, min_rho: f64) -> WeightedGraph {
    let n = sim.n();
    let mut graph = WeightedGraph::new(n);
    for i in 0..n {
        for j in (i + 1)..n {
            let rho = sim.get(i, j);
            if rho > min_rho {
                graph.add_edge(i, j, rho);
            }
        }
    }
    graph
}

/// Newman modularity of an assignment (not necessarily contiguous ids).
pub fn modularity(graph: &WeightedGraph, communities: &[usize]) -> f64 {
    let two_m = graph.total_degree();
    if two_m == 0.0 {
        return 0.0;
    }
    let mut internal: BTreeMap<usize, f64> = BTreeMap::new();
    let mut degree: BTreeMap<usize, f64> = BTreeMap::new();
    for node in 0..graph.n_nodes() {
        let c = communities[node];
        *degree.entry(c).or_insert(0.0) += graph.degree(node);
        for &(to, w) in graph.neighbors(node) {
            if communities[to] == c {
                // Each non-loop edge is visited from both ends; a self-loop
                // is visited once and counts 2w internally.
                *internal.entry(c).or_insert(0.0) += if to == node { 2.0 * w } else { w };
            }
        }
    }
    let mut q = 0.0;
    for (c, d) in &degree {
        let inside = internal.get(c).copied().unwrap_or(0.0);
        q += inside / two_m - (d / two_m) * (d / two_m);
    }
    q
}

/// Two-phase Louvain at resolution 1. Local moves sweep nodes in label
/// order and accept only strictly positive modularity gains above 1e-12,
/// with ties going to the smallest community id; aggregation repeats until
/// a pass makes no move.
pub fn louvain(graph: &WeightedGraph) -> Result<Partition, AnalyticsError> {
    let n = graph.n_nodes();
    if n == 0 {
        return Err(AnalyticsError::EmptyGraph);
    }
    // membership[v] = community of original node v, expressed in the
    // current level's node ids.
    let mut membership: Vec<usize> = (0..n).collect();
    let mut level = graph.clone();
    loop {
        let (assignment, moved) = local_moves(&level);
        if !moved {
            break;
        }
        let (aggregated, renumber) = aggregate_graph(&level, &assignment);
        for slot in membership.iter_mut() {
            *slot = renumber[assignment[*slot]];
        }
        if aggregated.n_nodes() == level.n_nodes() {
            break;
        }
        level = aggregated;
    }
    // Contiguous ids in order of first appearance by node index.
    let mut remap: BTreeMap<usize, usize> = BTreeMap::new();
    let mut communities = Vec::with_capacity(n);
    for &c in &membership {
        let next = remap.len();
        let id = *remap.entry(c).or_insert(next);
        communities.push(id);
    }
    let q = modularity(graph, &communities);
    Ok(Partition {
        communities,
        modularity: q,
    })
}

/// Phase one: repeated sweeps of greedy single-node moves.
fn local_moves(graph: &WeightedGraph) -> (Vec<usize>, bool) {
    let n = graph.n_nodes();
    let two_m = graph.total_degree();
    let mut community: Vec<usize> = (0..n).collect();
    let mut comm_degree: Vec<f64> = (0..n).map(|i| graph.degree(i)).collect();
    let degree: Vec<f64> = comm_degree.clone();
    if two_m == 0.0 {
        return (community, false);
    }
    let mut any_move = false;
    loop {
        let mut moved_in_pass = false;
        for node in 0..n {
            let old_comm = community[node];
            // Weight from node to each adjacent community (self-loops are
            // internal regardless of the move and cancel out of gains).
            let mut to_comm: BTreeMap<usize, f64> = BTreeMap::new();
            for &(to, w) in graph.neighbors(node) {
                if to != node {
                    *to_comm.entry(community[to]).or_insert(0.0) += w;
                }
            }
            comm_degree[old_comm] -= degree[node];
            let base_gain = gain(
                to_comm.get(&old_comm).copied().unwrap_or(0.0),
                comm_degree[old_comm],
                degree[node],
                two_m,
            );
            // Candidates iterate in ascending community id; strict
            // improvement keeps the smallest id among tied maxima.
            let mut best_comm = old_comm;
            let mut best_gain = base_gain + GAIN_EPSILON;
            for (&cand, &k_in) in &to_comm {
                if cand == old_comm {
                    continue;
                }
                let g = gain(k_in, comm_degree[cand], degree[node], two_m);
                if g > best_gain {
                    best_comm = cand;
                    best_gain = g;
                }
            }
            comm_degree[best_comm] += degree[node];
            if best_comm != old_comm {
                community[node] = best_comm;
                moved_in_pass = true;
                any_move = true;
            }
        }
        if !moved_in_pass {
            break;
        }
    }
    (community, any_move)
}

/// Modularity gain of attaching an isolated node with degree `k` to a
/// community with degree sum `sigma_tot` (node excluded) through edges of
/// total weight `k_in`: 2*k_in/2m - 2*sigma_tot*k/(2m)^2.
fn gain(k_in: f64, sigma_tot: f64, k: f64, two_m: f64) -> f64 {
    (2.0 / two_m) * (k_in - sigma_tot * k / two_m)
}

/// Phase two: one node per community, internal edges become self-loops.
/// Returns the aggregated graph and the old-community -> new-node map.
fn aggregate_graph(graph: &WeightedGraph, community: &[usize]) -> (WeightedGraph, Vec<usize>) {
    let mut ids: Vec<usize> = community.to_vec();
    ids.sort_unstable();
    ids.dedup();
    let mut renumber = vec![usize::MAX; community.len()];
    for (new_id, &old) in ids.iter().enumerate() {
        renumber[old] = new_id;
    }
    let n_new = ids.len();
    let mut weights: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for node in 0..graph.n_nodes() {
        let a = renumber[community[node]];
        for &(to, w) in graph.neighbors(node) {
            let b = renumber[community[to]];
            if to == node {
                // Self-loop: visited once.
                *weights.entry((a, a)).or_insert(0.0) += w;
            } else if a == b {
                // Internal edge visited from both ends; halve into one loop.
                *weights.entry((a, a)).or_insert(0.0) += w / 2.0;
            } else if a < b {
                *weights.entry((a, b)).or_insert(0.0) += w;
            }
        }
    }
    let mut out = WeightedGraph::new(n_new);
    for ((a, b), w) in weights {
        out.add_edge(a, b, w);
    }
    (out, renumber)
}
