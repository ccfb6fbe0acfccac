//! Structure analytics over FOS skill profiles: rank-correlation
//! similarity, agglomerative clustering, Louvain communities, KL divergence
//! against labor-market profiles, and the subset-size sufficiency analysis
//! with elbow detection.

mod cluster;
mod kl;
mod louvain;
mod spearman;
mod sufficiency;

pub use cluster::{hierarchical_cluster, Dendrogram, Merge};
pub use kl::{
    kl_divergence, labor_profile, period_distribution, period_kl_matrix, Distribution, KlGrid,
    DEFAULT_EPSILON,
};
pub use louvain::{graph_from_similarity, louvain, modularity, Partition, WeightedGraph};
pub use spearman::{spearman_similarity, SimilarityMatrix};
pub use sufficiency::{elbow_detect, sufficiency_curve, DistanceMetric, SufficiencyPoint};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum AnalyticsError {
    #[error("need at least 2 skills per row for rank correlation, got {0}")]
    TooFewSkills(usize),
    #[error("graph has no nodes")]
    EmptyGraph,
    #[error("distribution lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("occupation filter is empty")]
    EmptyFilter,
    #[error("no occupation matched the filter, or total employment weight is zero")]
    ZeroWeight,
    #[error("employment weight for {0} is negative")]
    NegativeWeight(String),
    #[error("distribution contains a non-finite or negative entry")]
    BadDistribution,
    #[error("sufficiency needs a group of at least 2 syllabi, got {0}")]
    GroupTooSmall(usize),
    #[error("elbow detection needs at least 3 points, got {0}")]
    TooFewPoints(usize),
    #[error("curve points must be strictly ascending in k")]
    UnsortedCurve,
}
