//! Partition-quality metrics and fitted-model inspection.

use crate::model::{Matrix, ModelError, Partition, SparseGraph};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("partitions cover {truth} and {pred} nodes")]
    SizeMismatch { truth: usize, pred: usize },
    #[error("graph has no links")]
    EmptyGraph,
    #[error("partition covers {labels} nodes, graph has {nodes}")]
    PartitionGraphMismatch { labels: usize, nodes: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Co-occurrence table between two hard partitions of the same node set.
/// Rows index the first partition's communities, columns the second's; the
/// table may be rectangular and may contain empty rows or columns.
#[derive(Debug, Clone)]
pub struct ConfusionCounts {
    counts: Vec<usize>, // n_rows x n_cols, row-major
    row_sums: Vec<usize>,
    col_sums: Vec<usize>,
    total: usize,
}

impl ConfusionCounts {
    pub fn from_partitions(truth: &Partition, pred: &Partition) -> Result<Self, EvalError> {
        if truth.len() != pred.len() {
            return Err(EvalError::SizeMismatch { truth: truth.len(), pred: pred.len() });
        }
        let rows = truth.n_communities();
        let cols = pred.n_communities();
        let mut counts = vec![0usize; rows * cols];
        for (&a, &b) in truth.labels().iter().zip(pred.labels()) {
            counts[a as usize * cols + b as usize] += 1;
        }
        let row_sums = (0..rows).map(|r| counts[r * cols..(r + 1) * cols].iter().sum()).collect();
        let col_sums =
            (0..cols).map(|c| (0..rows).map(|r| counts[r * cols + c]).sum()).collect();
        Ok(ConfusionCounts { counts, row_sums, col_sums, total: truth.len() })
    }

    pub fn n_rows(&self) -> usize {
        self.row_sums.len()
    }

    pub fn n_cols(&self) -> usize {
        self.col_sums.len()
    }

    pub fn count(&self, r: usize, c: usize) -> usize {
        self.counts[r * self.n_cols() + c]
    }

    pub fn row_sum(&self, r: usize) -> usize {
        self.row_sums[r]
    }

    pub fn col_sum(&self, c: usize) -> usize {
        self.col_sums[c]
    }

    pub fn total(&self) -> usize {
        self.total
    }

    /// Row (first-partition community) holding the plurality of column `c`.
    pub fn dominant_row(&self, c: usize) -> usize {
        (0..self.n_rows()).max_by_key(|&r| self.count(r, c)).unwrap_or(0)
    }
}

/// Normalized mutual information between two partitions.
///
/// Natural logarithms, empty cells contribute nothing, and the mutual
/// information is normalized by the geometric mean of the two label
/// entropies, so identical partitions score 1 and independent ones 0. The
/// result is clamped to [0, 1] and is symmetric in its arguments. If either
/// partition lumps all nodes together its entropy vanishes; the score is
/// then 1 when the partitions are identical and 0 otherwise.
pub fn nmi(truth: &Partition, pred: &Partition) -> Result<f64, EvalError> {
    let conf = ConfusionCounts::from_partitions(truth, pred)?;
    let n = conf.total() as f64;
    let mut joint = 0.0;
    for r in 0..conf.n_rows() {
        for c in 0..conf.n_cols() {
            let n_rc = conf.count(r, c);
            if n_rc > 0 {
                let n_rc = n_rc as f64;
                joint += n_rc
                    * (n * n_rc / (conf.row_sum(r) as f64 * conf.col_sum(c) as f64)).ln();
            }
        }
    }
    let entropy_sum = |sums: &dyn Fn(usize) -> usize, len: usize| -> f64 {
        (0..len)
            .map(sums)
            .filter(|&s| s > 0)
            .map(|s| s as f64 * (s as f64 / n).ln())
            .sum()
    };
    let ht = entropy_sum(&|i| conf.row_sum(i), conf.n_rows());
    let hp = entropy_sum(&|i| conf.col_sum(i), conf.n_cols());
    if ht == 0.0 || hp == 0.0 {
        // A single-community side carries no information; score membership
        // identity instead of 0/0.
        return Ok(if ht == 0.0 && hp == 0.0 { 1.0 } else { 0.0 });
    }
    Ok((joint / (ht * hp).sqrt()).clamp(0.0, 1.0))
}

/// Newman-Girvan modularity of a hard partition on the undirected view of
/// the graph: the fraction of links inside communities minus the fraction
/// expected from degrees alone.
pub fn modularity(graph: &SparseGraph, partition: &Partition) -> Result<f64, EvalError> {
    if partition.len() != graph.n_nodes() {
        return Err(EvalError::PartitionGraphMismatch {
            labels: partition.len(),
            nodes: graph.n_nodes(),
        });
    }
    // Undirected view: each unordered pair once, whatever the input orientation.
    let mut pairs: Vec<(u32, u32)> =
        graph.edges().iter().map(|&(a, b)| (a.min(b), a.max(b))).collect();
    pairs.sort_unstable();
    pairs.dedup();
    let m = pairs.len();
    if m == 0 {
        return Err(EvalError::EmptyGraph);
    }

    let c = partition.n_communities();
    let mut degree = vec![0usize; graph.n_nodes()];
    let mut intra = vec![0usize; c];
    for &(a, b) in &pairs {
        degree[a as usize] += 1;
        degree[b as usize] += 1; // a self-loop counts twice toward its node
        if partition.label(a as usize) == partition.label(b as usize) {
            intra[partition.label(a as usize) as usize] += 1;
        }
    }
    let mut community_degree = vec![0usize; c];
    for (node, &d) in degree.iter().enumerate() {
        community_degree[partition.label(node) as usize] += d;
    }

    let m = m as f64;
    let mut q = 0.0;
    for r in 0..c {
        let within = intra[r] as f64 / m;
        let degree_share = community_degree[r] as f64 / (2.0 * m);
        q += within - degree_share * degree_share;
    }
    Ok(q)
}

/// Assign every node to its highest-membership community, breaking ties
/// toward the lowest community index. The community count is the matrix
/// width, so unused communities stay part of the partition.
pub fn hard_assign(membership: &Matrix) -> Partition {
    assert!(membership.rows() > 0 && membership.cols() > 0, "membership matrix is empty");
    let labels = (0..membership.rows())
        .map(|i| {
            let row = membership.row(i);
            let mut best = 0usize;
            for (r, &v) in row.iter().enumerate().skip(1) {
                if v > row[best] {
                    best = r;
                }
            }
            best as u32
        })
        .collect();
    Partition::new(labels, membership.cols()).expect("matrix rows form a valid partition")
}

/// Per-community attribute rankings extracted from a profile matrix.
#[derive(Debug, Clone)]
pub struct AttributeReport {
    rankings: Vec<Vec<(usize, f64)>>, // per community, (attribute, weight) descending
    threshold: f64,
}

impl AttributeReport {
    pub fn n_communities(&self) -> usize {
        self.rankings.len()
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    /// All attributes of community `r`, heaviest first; ties broken by
    /// attribute index so the order is reproducible.
    pub fn ranking(&self, r: usize) -> &[(usize, f64)] {
        &self.rankings[r]
    }

    /// Leading attributes whose weight strictly exceeds the threshold.
    pub fn strong(&self, r: usize) -> &[(usize, f64)] {
        let ranking = &self.rankings[r];
        let cut = ranking.iter().take_while(|(_, w)| *w > self.threshold).count();
        &ranking[..cut]
    }
}

/// Rank every community's attributes by profile weight. The conventional
/// threshold 0.1 marks attributes that dominate a community's profile.
pub fn top_attributes(profiles: &Matrix, threshold: f64) -> AttributeReport {
    let rankings = (0..profiles.rows())
        .map(|r| {
            let mut row: Vec<(usize, f64)> =
                profiles.row(r).iter().copied().enumerate().collect();
            row.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
            row
        })
        .collect();
    AttributeReport { rankings, threshold }
}
