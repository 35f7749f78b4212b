//! Core containers for the joint link/attribute community model.
//!
//! The model couples a sparse directed adjacency structure with a sparse
//! count matrix of node attributes. Parameters come in three row-stochastic
//! matrices: per-node community memberships (N x C), per-community
//! connectivity profiles over target nodes (C x N), and per-community
//! attribute profiles (C x K).

use thiserror::Error;

/// Errors from constructing or validating core containers.
#[derive(Debug, Error)]
pub enum ModelError {
    #[error("row {row} sums to zero, cannot normalize")]
    ZeroRowSum { row: usize },
    #[error("row {row} contains a negative or non-finite entry")]
    InvalidEntry { row: usize },
    #[error("node index {node} out of range for {n_nodes} nodes")]
    NodeOutOfRange { node: u32, n_nodes: usize },
    #[error("attribute index {attr} out of range for {n_attrs} attributes")]
    AttrOutOfRange { attr: u32, n_attrs: usize },
    #[error("duplicate attribute entry for node {node}, attribute {attr}")]
    DuplicateEntry { node: u32, attr: u32 },
    #[error("attribute entry for node {node}, attribute {attr} has value zero; omit absent entries")]
    ZeroValue { node: u32, attr: u32 },
    #[error("label {label} out of range for {n_communities} communities")]
    LabelOutOfRange { label: u32, n_communities: usize },
    #[error("partition must cover at least one node")]
    EmptyPartition,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("row {row} is not a probability vector (sum {sum})")]
    NotStochastic { row: usize, sum: f64 },
}

/// Dense row-major matrix of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "data length must equal rows*cols");
        Matrix { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == cols), "ragged rows");
        Matrix { rows: rows.len(), cols, data: rows.concat() }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Sum of each column; length equals `cols`.
    pub fn col_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.cols];
        for r in 0..self.rows {
            for (s, v) in sums.iter_mut().zip(self.row(r)) {
                *s += v;
            }
        }
        sums
    }

    /// Rescale every row to sum to one in place.
    fn normalize_rows_in_place(&mut self) -> Result<(), ModelError> {
        if self.cols == 0 {
            return Ok(()); // zero-width rows carry no mass; nothing to normalize
        }
        for r in 0..self.rows {
            let row = self.row_mut(r);
            if row.iter().any(|v| !v.is_finite() || *v < 0.0) {
                return Err(ModelError::InvalidEntry { row: r });
            }
            let sum: f64 = row.iter().sum();
            if sum <= 0.0 {
                return Err(ModelError::ZeroRowSum { row: r });
            }
            for v in row {
                *v /= sum;
            }
        }
        Ok(())
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;
    #[inline]
    fn index(&self, (r, c): (usize, usize)) -> &f64 {
        debug_assert!(r < self.rows && c < self.cols);
        &self.data[r * self.cols + c]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut f64 {
        debug_assert!(r < self.rows && c < self.cols);
        &mut self.data[r * self.cols + c]
    }
}

/// Rescale every row of a nonnegative matrix to sum to one.
///
/// Errors if any row sums to zero or contains a negative or non-finite
/// entry. A matrix with zero columns passes through unchanged.
pub fn normalize_rows(mut matrix: Matrix) -> Result<Matrix, ModelError> {
    matrix.normalize_rows_in_place()?;
    Ok(matrix)
}

// Row-sum slack scales with row width so long rows are not penalized for
// accumulated rounding.
fn check_stochastic(m: &Matrix, tol_scale: f64) -> Result<(), ModelError> {
    if m.cols == 0 {
        return Ok(());
    }
    let tol = 1e-12 * tol_scale.max(1.0);
    for r in 0..m.rows {
        let row = m.row(r);
        if row.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(ModelError::InvalidEntry { row: r });
        }
        let sum: f64 = row.iter().sum();
        if (sum - 1.0).abs() > tol {
            return Err(ModelError::NotStochastic { row: r, sum });
        }
    }
    Ok(())
}

/// The three row-stochastic parameter matrices of the model.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    membership: Matrix,    // N x C: how strongly each node belongs to each community
    connectivity: Matrix,  // C x N: where a community's outgoing links land
    attr_profiles: Matrix, // C x K: which attributes a community carries
}

impl ModelParams {
    /// Validate dimensions and row-stochasticity and wrap the matrices.
    pub fn new(
        membership: Matrix,
        connectivity: Matrix,
        attr_profiles: Matrix,
    ) -> Result<Self, ModelError> {
        let c = membership.cols();
        if connectivity.rows() != c || attr_profiles.rows() != c {
            return Err(ModelError::DimensionMismatch(format!(
                "membership has {c} communities but connectivity has {} and attribute profiles {}",
                connectivity.rows(),
                attr_profiles.rows()
            )));
        }
        if connectivity.cols() != membership.rows() {
            return Err(ModelError::DimensionMismatch(format!(
                "connectivity targets {} nodes but membership covers {}",
                connectivity.cols(),
                membership.rows()
            )));
        }
        check_stochastic(&membership, c as f64)?;
        check_stochastic(&connectivity, connectivity.cols() as f64)?;
        check_stochastic(&attr_profiles, attr_profiles.cols() as f64)?;
        Ok(ModelParams { membership, connectivity, attr_profiles })
    }

    pub fn n_nodes(&self) -> usize {
        self.membership.rows()
    }

    pub fn n_communities(&self) -> usize {
        self.membership.cols()
    }

    pub fn n_attrs(&self) -> usize {
        self.attr_profiles.cols()
    }

    /// N x C node-community membership matrix.
    pub fn membership(&self) -> &Matrix {
        &self.membership
    }

    /// C x N community connectivity profiles over target nodes.
    pub fn connectivity(&self) -> &Matrix {
        &self.connectivity
    }

    /// C x K community attribute profiles.
    pub fn attr_profiles(&self) -> &Matrix {
        &self.attr_profiles
    }
}

/// Sparse unweighted graph stored as a sorted, deduplicated list of
/// ordered (source, target) pairs.
///
/// Undirected input is symmetrized on construction, so every algorithm can
/// treat the edge list as directed; an undirected link between distinct
/// nodes occupies two ordered pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseGraph {
    n_nodes: usize,
    directed: bool,
    edges: Vec<(u32, u32)>,
}

impl SparseGraph {
    pub fn new(
        n_nodes: usize,
        edge_list: &[(u32, u32)],
        directed: bool,
    ) -> Result<Self, ModelError> {
        let mut edges = Vec::with_capacity(if directed {
            edge_list.len()
        } else {
            edge_list.len() * 2
        });
        for &(src, dst) in edge_list {
            for node in [src, dst] {
                if node as usize >= n_nodes {
                    return Err(ModelError::NodeOutOfRange { node, n_nodes });
                }
            }
            edges.push((src, dst));
            if !directed && src != dst {
                edges.push((dst, src));
            }
        }
        edges.sort_unstable();
        edges.dedup();
        Ok(SparseGraph { n_nodes, directed, edges })
    }

    pub fn empty(n_nodes: usize, directed: bool) -> Self {
        SparseGraph { n_nodes, directed, edges: Vec::new() }
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn directed(&self) -> bool {
        self.directed
    }

    /// Sorted ordered pairs; the adjacency entries equal to one.
    pub fn edges(&self) -> &[(u32, u32)] {
        &self.edges
    }

    /// Number of stored ordered pairs.
    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Number of links: ordered pairs if directed, unordered pairs if not.
    pub fn link_count(&self) -> usize {
        if self.directed {
            self.edges.len()
        } else {
            self.edges.iter().filter(|(s, d)| s <= d).count()
        }
    }

    /// Position of (src, dst) in the sorted edge list, if present.
    pub fn edge_index(&self, src: u32, dst: u32) -> Option<usize> {
        self.edges.binary_search(&(src, dst)).ok()
    }

    /// Out-degree of each node over the stored ordered pairs.
    pub fn out_degrees(&self) -> Vec<usize> {
        let mut deg = vec![0usize; self.n_nodes];
        for &(src, _) in &self.edges {
            deg[src as usize] += 1;
        }
        deg
    }
}

/// Sparse nonnegative integer attribute matrix stored as sorted
/// (node, attribute, count) triplets with strictly positive counts.
#[derive(Debug, Clone, PartialEq)]
pub struct AttributeMatrix {
    n_nodes: usize,
    n_attrs: usize,
    entries: Vec<(u32, u32, u32)>,
}

impl AttributeMatrix {
    pub fn new(
        n_nodes: usize,
        n_attrs: usize,
        mut entries: Vec<(u32, u32, u32)>,
    ) -> Result<Self, ModelError> {
        for &(node, attr, value) in &entries {
            if node as usize >= n_nodes {
                return Err(ModelError::NodeOutOfRange { node, n_nodes });
            }
            if attr as usize >= n_attrs {
                return Err(ModelError::AttrOutOfRange { attr, n_attrs });
            }
            if value == 0 {
                return Err(ModelError::ZeroValue { node, attr });
            }
        }
        entries.sort_unstable();
        for pair in entries.windows(2) {
            if pair[0].0 == pair[1].0 && pair[0].1 == pair[1].1 {
                return Err(ModelError::DuplicateEntry { node: pair[0].0, attr: pair[0].1 });
            }
        }
        Ok(AttributeMatrix { n_nodes, n_attrs, entries })
    }

    pub fn empty(n_nodes: usize, n_attrs: usize) -> Self {
        AttributeMatrix { n_nodes, n_attrs, entries: Vec::new() }
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn n_attrs(&self) -> usize {
        self.n_attrs
    }

    /// Sorted (node, attribute, count) triplets.
    pub fn entries(&self) -> &[(u32, u32, u32)] {
        &self.entries
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }
}

/// Per-observation community responsibilities produced by the expectation
/// step: one probability vector per present edge and per present attribute
/// entry, aligned with the owning containers' sorted orders.
#[derive(Debug, Clone, PartialEq)]
pub struct Responsibilities {
    n_communities: usize,
    edge_resp: Vec<f64>, // edge_count x C, row-major
    attr_resp: Vec<f64>, // nnz x C, row-major
}

impl Responsibilities {
    pub fn new(n_communities: usize, edge_resp: Vec<f64>, attr_resp: Vec<f64>) -> Self {
        assert!(n_communities > 0);
        assert_eq!(edge_resp.len() % n_communities, 0);
        assert_eq!(attr_resp.len() % n_communities, 0);
        Responsibilities { n_communities, edge_resp, attr_resp }
    }

    pub fn n_communities(&self) -> usize {
        self.n_communities
    }

    pub fn n_edges(&self) -> usize {
        self.edge_resp.len() / self.n_communities
    }

    pub fn n_entries(&self) -> usize {
        self.attr_resp.len() / self.n_communities
    }

    /// Responsibility vector of the edge at `idx` in the graph's sorted order.
    pub fn edge(&self, idx: usize) -> &[f64] {
        &self.edge_resp[idx * self.n_communities..(idx + 1) * self.n_communities]
    }

    pub fn edge_mut(&mut self, idx: usize) -> &mut [f64] {
        &mut self.edge_resp[idx * self.n_communities..(idx + 1) * self.n_communities]
    }

    /// Responsibility vector of the attribute entry at `idx` in sorted order.
    pub fn attr(&self, idx: usize) -> &[f64] {
        &self.attr_resp[idx * self.n_communities..(idx + 1) * self.n_communities]
    }

    pub fn attr_mut(&mut self, idx: usize) -> &mut [f64] {
        &mut self.attr_resp[idx * self.n_communities..(idx + 1) * self.n_communities]
    }

    /// Lookup by edge key rather than position.
    pub fn for_edge(&self, graph: &SparseGraph, src: u32, dst: u32) -> Option<&[f64]> {
        graph.edge_index(src, dst).map(|idx| self.edge(idx))
    }
}

/// Hard assignment of every node to one of `n_communities` groups.
/// Communities may be empty; every label is strictly below the count.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    labels: Vec<u32>,
    n_communities: usize,
}

impl Partition {
    pub fn new(labels: Vec<u32>, n_communities: usize) -> Result<Self, ModelError> {
        if labels.is_empty() {
            return Err(ModelError::EmptyPartition);
        }
        for &label in &labels {
            if label as usize >= n_communities {
                return Err(ModelError::LabelOutOfRange { label, n_communities });
            }
        }
        Ok(Partition { labels, n_communities })
    }

    /// Infer the community count as one past the largest label.
    pub fn from_labels(labels: Vec<u32>) -> Result<Self, ModelError> {
        let c = labels.iter().max().map_or(0, |&m| m as usize + 1);
        Partition::new(labels, c.max(1))
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_communities(&self) -> usize {
        self.n_communities
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn label(&self, node: usize) -> u32 {
        self.labels[node]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn normalize_rows_makes_rows_sum_to_one() {
        let m = Matrix::from_rows(&[vec![1.0, 3.0], vec![2.0, 2.0]]);
        let n = normalize_rows(m).unwrap();
        assert_eq!(n.row(0), &[0.25, 0.75]);
        assert_eq!(n.row(1), &[0.5, 0.5]);
    }

    #[test]
    fn normalize_rows_rejects_zero_row() {
        let m = Matrix::from_rows(&[vec![0.0, 0.0]]);
        assert!(matches!(normalize_rows(m), Err(ModelError::ZeroRowSum { row: 0 })));
    }

    #[test]
    fn normalize_rows_rejects_negative_and_non_finite() {
        let m = Matrix::from_rows(&[vec![1.0, -0.5]]);
        assert!(matches!(normalize_rows(m), Err(ModelError::InvalidEntry { row: 0 })));
        let m = Matrix::from_rows(&[vec![1.0, f64::NAN]]);
        assert!(matches!(normalize_rows(m), Err(ModelError::InvalidEntry { row: 0 })));
    }

    #[test]
    fn normalize_rows_passes_zero_width_matrix() {
        let m = Matrix::zeros(3, 0);
        assert!(normalize_rows(m).is_ok());
    }

    #[test]
    fn params_require_matching_dimensions() {
        let t = normalize_rows(Matrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 3.0]])).unwrap();
        let theta = normalize_rows(Matrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]])).unwrap();
        let phi = normalize_rows(Matrix::from_rows(&[vec![1.0], vec![1.0]])).unwrap();
        assert!(ModelParams::new(t.clone(), theta.clone(), phi.clone()).is_ok());

        let bad_phi = normalize_rows(Matrix::from_rows(&[vec![1.0]])).unwrap();
        assert!(ModelParams::new(t, theta, bad_phi).is_err());
    }

    #[test]
    fn params_reject_non_stochastic_rows() {
        let t = Matrix::from_rows(&[vec![0.7, 0.7]]);
        let theta = normalize_rows(Matrix::from_rows(&[vec![1.0], vec![1.0]])).unwrap();
        let phi = Matrix::zeros(2, 0);
        assert!(matches!(
            ModelParams::new(t, theta, phi),
            Err(ModelError::NotStochastic { row: 0, .. })
        ));
    }

    #[test]
    fn undirected_graph_is_symmetrized_and_deduplicated() {
        let g = SparseGraph::new(4, &[(0, 1), (1, 0), (2, 3)], false).unwrap();
        assert_eq!(g.edges(), &[(0, 1), (1, 0), (2, 3), (3, 2)]);
        assert_eq!(g.edge_count(), 4);
        assert_eq!(g.link_count(), 2);
    }

    #[test]
    fn directed_graph_keeps_orientation() {
        let g = SparseGraph::new(3, &[(2, 0), (0, 2), (2, 0)], true).unwrap();
        assert_eq!(g.edges(), &[(0, 2), (2, 0)]);
        assert_eq!(g.link_count(), 2);
        assert_eq!(g.edge_index(2, 0), Some(1));
        assert_eq!(g.edge_index(1, 0), None);
    }

    #[test]
    fn graph_rejects_out_of_range_node() {
        assert!(matches!(
            SparseGraph::new(2, &[(0, 5)], true),
            Err(ModelError::NodeOutOfRange { node: 5, .. })
        ));
    }

    #[test]
    fn attributes_reject_duplicates_and_zero_values() {
        assert!(matches!(
            AttributeMatrix::new(2, 2, vec![(0, 1, 1), (0, 1, 2)]),
            Err(ModelError::DuplicateEntry { node: 0, attr: 1 })
        ));
        assert!(matches!(
            AttributeMatrix::new(2, 2, vec![(0, 1, 0)]),
            Err(ModelError::ZeroValue { node: 0, attr: 1 })
        ));
    }

    #[test]
    fn attributes_sort_entries() {
        let x = AttributeMatrix::new(3, 2, vec![(2, 1, 4), (0, 0, 1), (0, 1, 2)]).unwrap();
        assert_eq!(x.entries(), &[(0, 0, 1), (0, 1, 2), (2, 1, 4)]);
        assert_eq!(x.nnz(), 3);
    }

    #[test]
    fn partition_checks_labels_and_allows_gaps() {
        assert!(Partition::new(vec![0, 2, 0], 3).is_ok()); // community 1 empty
        assert!(matches!(
            Partition::new(vec![0, 3], 3),
            Err(ModelError::LabelOutOfRange { label: 3, .. })
        ));
        assert!(matches!(Partition::new(vec![], 1), Err(ModelError::EmptyPartition)));
    }

    #[test]
    fn responsibilities_index_by_edge_key() {
        let g = SparseGraph::new(3, &[(0, 1), (1, 2)], true).unwrap();
        let r = Responsibilities::new(2, vec![0.3, 0.7, 0.9, 0.1], vec![]);
        assert_eq!(r.for_edge(&g, 1, 2), Some(&[0.9, 0.1][..]));
        assert_eq!(r.for_edge(&g, 2, 1), None);
    }

    proptest! {
        // Normalizing preserves within-row proportions and lands on the simplex.
        #[test]
        fn normalize_rows_preserves_proportions(
            raw in proptest::collection::vec(0.01f64..100.0, 6)
        ) {
            let m = Matrix::from_vec(2, 3, raw.clone());
            let n = normalize_rows(m).unwrap();
            for r in 0..2 {
                let sum: f64 = n.row(r).iter().sum();
                prop_assert!((sum - 1.0).abs() < 1e-12);
                let before = &raw[r * 3..(r + 1) * 3];
                let ratio_before = before[0] / before[1];
                let ratio_after = n.row(r)[0] / n.row(r)[1];
                prop_assert!((ratio_before - ratio_after).abs() <= 1e-9 * ratio_before.abs());
            }
        }
    }
}
