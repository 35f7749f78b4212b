//! Planted-partition benchmark generators.
//!
//! A [`BlockMatrix`] holds pairwise link probabilities between planted
//! blocks; a [`DependencyMatrix`] holds per-block attribute probabilities.
//! Sampling draws one Bernoulli variable per unordered node pair and per
//! (node, attribute) cell, in a fixed order, so a seeded generator
//! reproduces datasets exactly.

use crate::model::{AttributeMatrix, Matrix, ModelError, Partition, SparseGraph};
use rand::Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("probability {value} outside [0, 1]")]
    InvalidProbability { value: f64 },
    #[error("invalid generator parameter: {0}")]
    BadParameter(String),
    #[error("block sizes list {got} blocks, matrix has {expected}")]
    BlockCountMismatch { got: usize, expected: usize },
    #[error("block size list is empty or covers no nodes")]
    EmptyBlocks,
    #[error(transparent)]
    Model(#[from] ModelError),
}

fn check_prob(value: f64) -> Result<f64, SynthError> {
    if value.is_finite() && (0.0..=1.0).contains(&value) {
        Ok(value)
    } else {
        Err(SynthError::InvalidProbability { value })
    }
}

/// Symmetric matrix of link probabilities between planted blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockMatrix {
    probs: Matrix,
}

impl BlockMatrix {
    /// Wrap an arbitrary square probability matrix.
    pub fn new(probs: Matrix) -> Result<Self, SynthError> {
        if probs.rows() != probs.cols() || probs.rows() == 0 {
            return Err(SynthError::BadParameter(format!(
                "block matrix must be square and non-empty, got {}x{}",
                probs.rows(),
                probs.cols()
            )));
        }
        for v in probs.data() {
            check_prob(*v)?;
        }
        Ok(BlockMatrix { probs })
    }

    pub fn n_blocks(&self) -> usize {
        self.probs.rows()
    }

    pub fn prob(&self, r: usize, s: usize) -> f64 {
        self.probs[(r, s)]
    }

    pub fn matrix(&self) -> &Matrix {
        &self.probs
    }
}

/// Per-block attribute presence probabilities (blocks x attributes).
#[derive(Debug, Clone, PartialEq)]
pub struct DependencyMatrix {
    probs: Matrix,
}

impl DependencyMatrix {
    pub fn new(probs: Matrix) -> Result<Self, SynthError> {
        if probs.rows() == 0 {
            return Err(SynthError::BadParameter("need at least one block".into()));
        }
        for v in probs.data() {
            check_prob(*v)?;
        }
        Ok(DependencyMatrix { probs })
    }

    pub fn n_blocks(&self) -> usize {
        self.probs.rows()
    }

    pub fn n_attrs(&self) -> usize {
        self.probs.cols()
    }

    pub fn prob(&self, block: usize, attr: usize) -> f64 {
        self.probs[(block, attr)]
    }

    pub fn matrix(&self) -> &Matrix {
        &self.probs
    }
}

/// Assortative design: `within` on the diagonal, `between` elsewhere.
/// Requires 0 <= between <= within <= 1.
pub fn planted_community(
    n_blocks: usize,
    within: f64,
    between: f64,
) -> Result<BlockMatrix, SynthError> {
    check_prob(within)?;
    check_prob(between)?;
    if n_blocks == 0 {
        return Err(SynthError::BadParameter("need at least one block".into()));
    }
    if between > within {
        return Err(SynthError::BadParameter(format!(
            "between-block probability {between} exceeds within-block {within}"
        )));
    }
    let mut m = Matrix::zeros(n_blocks, n_blocks);
    for r in 0..n_blocks {
        for s in 0..n_blocks {
            m[(r, s)] = if r == s { within } else { between };
        }
    }
    BlockMatrix::new(m)
}

/// Disassortative three-block design: weak fixed diagonal (0.05, 0.03, 0.02)
/// and stronger off-diagonal couplings `l1`, `l1 + 0.1`, `l1 + 0.05`.
/// Requires l1 > 0.05 and l1 + 0.1 <= 1 so every off-diagonal entry exceeds
/// the diagonal and stays a probability.
pub fn planted_disassortative(l1: f64) -> Result<BlockMatrix, SynthError> {
    if !l1.is_finite() || l1 <= 0.05 || l1 + 0.1 > 1.0 {
        return Err(SynthError::BadParameter(format!(
            "off-diagonal base {l1} must lie in (0.05, 0.9]"
        )));
    }
    let m = Matrix::from_rows(&[
        vec![0.05, l1, l1 + 0.1],
        vec![l1, 0.03, l1 + 0.05],
        vec![l1 + 0.1, l1 + 0.05, 0.02],
    ]);
    BlockMatrix::new(m)
}

/// Five-block mixture design combining a bipartite pair (blocks 0-1 coupled
/// by `w1` with empty diagonals), two ordinary communities (`w2`, `w3`), a
/// core-periphery pair (blocks 3-4 coupled by `w4`, block 4 internally
/// empty), and background density `l` elsewhere. The three empty diagonals
/// stay zero whatever the parameters.
pub fn planted_mixture(
    w1: f64,
    w2: f64,
    w3: f64,
    w4: f64,
    l: f64,
) -> Result<BlockMatrix, SynthError> {
    for v in [w1, w2, w3, w4, l] {
        check_prob(v)?;
    }
    let m = Matrix::from_rows(&[
        vec![0.0, w1, l, l, l],
        vec![w1, 0.0, l, l, l],
        vec![l, l, w2, l, l],
        vec![l, l, l, w3, w4],
        vec![l, l, l, w4, 0.0],
    ]);
    BlockMatrix::new(m)
}

fn block_labels(block_sizes: &[usize]) -> Result<Vec<u32>, SynthError> {
    let total: usize = block_sizes.iter().sum();
    if block_sizes.is_empty() || total == 0 {
        return Err(SynthError::EmptyBlocks);
    }
    let mut labels = Vec::with_capacity(total);
    for (b, &size) in block_sizes.iter().enumerate() {
        labels.extend(std::iter::repeat(b as u32).take(size));
    }
    Ok(labels)
}

/// Sample an undirected graph: each unordered pair of distinct nodes links
/// with the probability of its block pair; no self-loops. Nodes are numbered
/// block-contiguously and the returned partition is the planted one.
pub fn sbm_sample(
    block_sizes: &[usize],
    blocks: &BlockMatrix,
    rng: &mut impl Rng,
) -> Result<(SparseGraph, Partition), SynthError> {
    if block_sizes.len() != blocks.n_blocks() {
        return Err(SynthError::BlockCountMismatch {
            got: block_sizes.len(),
            expected: blocks.n_blocks(),
        });
    }
    let labels = block_labels(block_sizes)?;
    let n = labels.len();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let p = blocks.prob(labels[i] as usize, labels[j] as usize);
            // One draw per pair regardless of p keeps the stream layout fixed.
            if rng.random::<f64>() < p {
                edges.push((i as u32, j as u32));
            }
        }
    }
    let graph = SparseGraph::new(n, &edges, false)?;
    let partition = Partition::new(labels, block_sizes.len())?;
    Ok((graph, partition))
}

/// Sample binary attributes: cell (i, k) is present with the probability the
/// dependency matrix assigns to node i's block. Cells are visited row-major.
pub fn attr_sample(
    block_sizes: &[usize],
    deps: &DependencyMatrix,
    rng: &mut impl Rng,
) -> Result<AttributeMatrix, SynthError> {
    if block_sizes.len() != deps.n_blocks() {
        return Err(SynthError::BlockCountMismatch {
            got: block_sizes.len(),
            expected: deps.n_blocks(),
        });
    }
    let labels = block_labels(block_sizes)?;
    let k = deps.n_attrs();
    let mut entries = Vec::new();
    for (i, &b) in labels.iter().enumerate() {
        for attr in 0..k {
            let p = deps.prob(b as usize, attr);
            if rng.random::<f64>() < p {
                entries.push((i as u32, attr as u32, 1));
            }
        }
    }
    Ok(AttributeMatrix::new(labels.len(), k, entries)?)
}

/// A rectangular region of the dependency matrix forced to probability `p`.
#[derive(Debug, Clone)]
pub struct StrongBlock {
    pub communities: std::ops::Range<usize>,
    pub attrs: std::ops::Range<usize>,
    pub p: f64,
}

/// Build a dependency matrix with `n_blocks * strong_per_block` designed
/// columns plus `extra_noise_attrs` all-noise columns. By default block `r`
/// is strong (probability `p_strong`) on its own column stripe and noisy
/// (`p_noise`) elsewhere. Non-empty `overrides` replace the default stripes
/// entirely, which allows several blocks to share one strong region; columns
/// no override touches stay at `p_noise`.
pub fn dependency_design(
    n_blocks: usize,
    strong_per_block: usize,
    p_strong: f64,
    p_noise: f64,
    extra_noise_attrs: usize,
    overrides: &[StrongBlock],
) -> Result<DependencyMatrix, SynthError> {
    check_prob(p_strong)?;
    check_prob(p_noise)?;
    if n_blocks == 0 {
        return Err(SynthError::BadParameter("need at least one block".into()));
    }
    let designed = n_blocks * strong_per_block;
    let k = designed + extra_noise_attrs;
    let mut m = Matrix::zeros(n_blocks, k);
    for r in 0..n_blocks {
        m.row_mut(r).fill(p_noise);
    }
    if overrides.is_empty() {
        for r in 0..n_blocks {
            for v in &mut m.row_mut(r)[r * strong_per_block..(r + 1) * strong_per_block] {
                *v = p_strong;
            }
        }
    } else {
        let mut painted = vec![false; n_blocks * k];
        for sb in overrides {
            check_prob(sb.p)?;
            if sb.communities.end > n_blocks || sb.attrs.end > designed {
                return Err(SynthError::BadParameter(format!(
                    "strong region blocks {:?} x attrs {:?} exceeds {n_blocks} blocks x {designed} designed columns",
                    sb.communities, sb.attrs
                )));
            }
            for r in sb.communities.clone() {
                for c in sb.attrs.clone() {
                    if std::mem::replace(&mut painted[r * k + c], true) {
                        return Err(SynthError::BadParameter(format!(
                            "strong regions overlap at block {r}, attribute {c}"
                        )));
                    }
                    m[(r, c)] = sb.p;
                }
            }
        }
    }
    DependencyMatrix::new(m)
}
