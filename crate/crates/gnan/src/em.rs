//! Expectation-maximization fitting of the joint link/attribute model.
//!
//! Each observed edge (i, j) and each observed attribute count (i, k) is
//! explained by a mixture over communities: the expected edge rate is
//! `sum_r membership[i][r] * connectivity[r][j]` and the expected attribute
//! rate is `sum_r membership[i][r] * attr_profiles[r][k]`. The E-step
//! distributes each observation over communities in proportion to the
//! per-community rates; the M-step row-normalizes the responsibility sums.
//! Everything is driven only by present edges and present attribute entries,
//! so one iteration costs O((edges + attribute entries) * communities).

use crate::model::{
    normalize_rows, AttributeMatrix, Matrix, ModelError, ModelParams, Responsibilities,
    SparseGraph,
};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_chacha::rand_core::SeedableRng;
use rayon::prelude::*;
use thiserror::Error;

/// Added to every parameter entry after each M-step (then renormalized) so
/// expected rates for present observations stay strictly positive. Small
/// enough to sit below all test tolerances.
pub const SMOOTHING: f64 = 1e-12;

/// Which data terms participate in the objective and the updates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Links and attributes jointly (the full model).
    Both,
    /// Links only; attribute profiles are frozen and attribute terms dropped.
    LinksOnly,
    /// Attributes only; connectivity is frozen and link terms dropped.
    AttrsOnly,
}

impl Mode {
    pub fn links_active(self) -> bool {
        !matches!(self, Mode::AttrsOnly)
    }

    pub fn attrs_active(self) -> bool {
        !matches!(self, Mode::LinksOnly)
    }
}

#[derive(Debug, Error)]
pub enum EmError {
    #[error("invalid fit configuration: {0}")]
    InvalidConfig(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("no observations to fit in the selected mode")]
    NothingToFit,
    #[error("zero mixture rate for {what} {index}; a parameter row has collapsed")]
    ZeroDenominator { what: &'static str, index: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Knobs for [`fit`]. Defaults: 500 iterations, absolute tolerance 1e-6 on
/// the bound, initialization jitter 0.1, 10 restarts, full mode.
#[derive(Debug, Clone)]
pub struct FitConfig {
    pub n_communities: usize,
    pub max_iters: usize,
    pub tolerance: f64,
    pub init_jitter: f64,
    pub n_restarts: usize,
    pub seed: u64,
    pub mode: Mode,
}

impl FitConfig {
    pub fn new(n_communities: usize, seed: u64) -> Self {
        FitConfig {
            n_communities,
            max_iters: 500,
            tolerance: 1e-6,
            init_jitter: 0.1,
            n_restarts: 10,
            seed,
            mode: Mode::Both,
        }
    }

    fn validate(&self) -> Result<(), EmError> {
        if self.n_communities == 0 {
            return Err(EmError::InvalidConfig("need at least one community".into()));
        }
        if self.max_iters == 0 {
            return Err(EmError::InvalidConfig("need at least one iteration".into()));
        }
        if !(self.tolerance > 0.0 && self.tolerance.is_finite()) {
            return Err(EmError::InvalidConfig("tolerance must be positive".into()));
        }
        if !(0.0..0.5).contains(&self.init_jitter) {
            return Err(EmError::InvalidConfig("jitter must lie in [0, 0.5)".into()));
        }
        if self.n_restarts == 0 {
            return Err(EmError::InvalidConfig("need at least one restart".into()));
        }
        Ok(())
    }
}

/// Outcome of a fit: the winning restart's parameters and bound history.
#[derive(Debug, Clone)]
pub struct FitResult {
    pub params: ModelParams,
    /// Objective lower bound after initialization and after every iteration.
    pub bound_trace: Vec<f64>,
    pub converged: bool,
    pub iterations_used: usize,
    pub restart_index: usize,
}

impl FitResult {
    pub fn final_bound(&self) -> f64 {
        *self.bound_trace.last().expect("trace is never empty")
    }
}

/// One splitmix64 round; decorrelates per-restart seeds from a base seed.
pub fn mix_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn jittered(rows: usize, cols: usize, jitter: f64, rng: &mut impl Rng) -> Matrix {
    let mut m = Matrix::zeros(rows, cols);
    for r in 0..rows {
        for v in m.row_mut(r) {
            *v = (0.5 - jitter) + rng.random::<f64>() * (2.0 * jitter);
        }
    }
    m
}

/// Draw all three parameter matrices entrywise from
/// [0.5 - jitter, 0.5 + jitter] and row-normalize. Entries are drawn in
/// row-major order, membership first, then connectivity, then attribute
/// profiles, so a given generator state fixes the result completely.
pub fn init_params(
    n_nodes: usize,
    n_communities: usize,
    n_attrs: usize,
    jitter: f64,
    rng: &mut impl Rng,
) -> Result<ModelParams, EmError> {
    if n_nodes == 0 || n_communities == 0 {
        return Err(EmError::InvalidConfig("need at least one node and one community".into()));
    }
    if !(0.0..0.5).contains(&jitter) {
        return Err(EmError::InvalidConfig("jitter must lie in [0, 0.5)".into()));
    }
    let membership = normalize_rows(jittered(n_nodes, n_communities, jitter, rng))?;
    let connectivity = normalize_rows(jittered(n_communities, n_nodes, jitter, rng))?;
    let attr_profiles = normalize_rows(jittered(n_communities, n_attrs, jitter, rng))?;
    Ok(ModelParams::new(membership, connectivity, attr_profiles)?)
}

fn check_dims(
    params: &ModelParams,
    graph: &SparseGraph,
    attrs: &AttributeMatrix,
) -> Result<(), EmError> {
    if params.n_nodes() != graph.n_nodes() || graph.n_nodes() != attrs.n_nodes() {
        return Err(EmError::DimensionMismatch(format!(
            "params cover {} nodes, graph {}, attributes {}",
            params.n_nodes(),
            graph.n_nodes(),
            attrs.n_nodes()
        )));
    }
    if params.n_attrs() != attrs.n_attrs() {
        return Err(EmError::DimensionMismatch(format!(
            "params cover {} attributes, matrix has {}",
            params.n_attrs(),
            attrs.n_attrs()
        )));
    }
    Ok(())
}

/// Distribute every present observation over communities in proportion to
/// its per-community rate. Each returned vector sums to one.
pub fn e_step(
    params: &ModelParams,
    graph: &SparseGraph,
    attrs: &AttributeMatrix,
    mode: Mode,
) -> Result<Responsibilities, EmError> {
    check_dims(params, graph, attrs)?;
    let c = params.n_communities();
    let t = params.membership();
    let theta = params.connectivity();
    let phi = params.attr_profiles();

    let mut edge_resp = Vec::new();
    if mode.links_active() {
        edge_resp.reserve(graph.edge_count() * c);
        for (idx, &(i, j)) in graph.edges().iter().enumerate() {
            let ti = t.row(i as usize);
            let mut total = 0.0;
            let start = edge_resp.len();
            for (r, &tir) in ti.iter().enumerate() {
                let w = tir * theta[(r, j as usize)];
                edge_resp.push(w);
                total += w;
            }
            if total <= 0.0 || !total.is_finite() {
                return Err(EmError::ZeroDenominator { what: "edge", index: idx });
            }
            for w in &mut edge_resp[start..] {
                *w /= total;
            }
        }
    }

    let mut attr_resp = Vec::new();
    if mode.attrs_active() {
        attr_resp.reserve(attrs.nnz() * c);
        for (idx, &(i, k, _)) in attrs.entries().iter().enumerate() {
            let ti = t.row(i as usize);
            let mut total = 0.0;
            let start = attr_resp.len();
            for (r, &tir) in ti.iter().enumerate() {
                let w = tir * phi[(r, k as usize)];
                attr_resp.push(w);
                total += w;
            }
            if total <= 0.0 || !total.is_finite() {
                return Err(EmError::ZeroDenominator { what: "attribute entry", index: idx });
            }
            for w in &mut attr_resp[start..] {
                *w /= total;
            }
        }
    }

    Ok(Responsibilities::new(c, edge_resp, attr_resp))
}

// Row-normalize accumulated responsibility mass; a row with no mass carries
// no information and falls back to the uniform distribution.
fn normalize_or_uniform(m: &mut Matrix) {
    let cols = m.cols();
    if cols == 0 {
        return;
    }
    for r in 0..m.rows() {
        let row = m.row_mut(r);
        let sum: f64 = row.iter().sum();
        if sum > 0.0 {
            for v in row {
                *v /= sum;
            }
        } else {
            row.fill(1.0 / cols as f64);
        }
    }
}

fn smooth_rows(m: &mut Matrix) {
    let cols = m.cols();
    if cols == 0 {
        return;
    }
    for r in 0..m.rows() {
        let row = m.row_mut(r);
        let mut sum = 0.0;
        for v in row.iter_mut() {
            *v += SMOOTHING;
            sum += *v;
        }
        for v in row {
            *v /= sum;
        }
    }
}

/// Re-estimate all parameters from responsibilities. In an ablation mode the
/// unused profile matrix is carried over from `prev` unchanged, and the
/// absent data term is dropped from both the membership numerator and its
/// normalizer.
pub fn m_step(
    prev: &ModelParams,
    resp: &Responsibilities,
    graph: &SparseGraph,
    attrs: &AttributeMatrix,
    mode: Mode,
) -> Result<ModelParams, EmError> {
    check_dims(prev, graph, attrs)?;
    let n = graph.n_nodes();
    let k = attrs.n_attrs();
    let c = prev.n_communities();
    if resp.n_communities() != c {
        return Err(EmError::DimensionMismatch(format!(
            "responsibilities cover {} communities, params {c}",
            resp.n_communities()
        )));
    }
    let n_active_edges = if mode.links_active() { graph.edge_count() } else { 0 };
    let n_active_entries = if mode.attrs_active() { attrs.nnz() } else { 0 };
    if mode.links_active() && resp.n_edges() != graph.edge_count() {
        return Err(EmError::DimensionMismatch(format!(
            "responsibilities cover {} edges, graph has {}",
            resp.n_edges(),
            graph.edge_count()
        )));
    }
    if mode.attrs_active() && resp.n_entries() != attrs.nnz() {
        return Err(EmError::DimensionMismatch(format!(
            "responsibilities cover {} attribute entries, matrix has {}",
            resp.n_entries(),
            attrs.nnz()
        )));
    }
    if n_active_edges + n_active_entries == 0 {
        return Err(EmError::NothingToFit);
    }

    let mut membership = Matrix::zeros(n, c);
    let mut connectivity = Matrix::zeros(c, n);
    let mut attr_profiles = Matrix::zeros(c, k);

    if mode.links_active() {
        for (idx, &(i, j)) in graph.edges().iter().enumerate() {
            let q = resp.edge(idx);
            let ti = membership.row_mut(i as usize);
            for (v, &qr) in ti.iter_mut().zip(q) {
                *v += qr;
            }
            for (r, &qr) in q.iter().enumerate() {
                connectivity[(r, j as usize)] += qr;
            }
        }
    }
    if mode.attrs_active() {
        for (idx, &(i, k_idx, x)) in attrs.entries().iter().enumerate() {
            let h = resp.attr(idx);
            let xf = f64::from(x);
            let ti = membership.row_mut(i as usize);
            for (v, &hr) in ti.iter_mut().zip(h) {
                *v += xf * hr;
            }
            for (r, &hr) in h.iter().enumerate() {
                attr_profiles[(r, k_idx as usize)] += xf * hr;
            }
        }
    }

    normalize_or_uniform(&mut membership);
    smooth_rows(&mut membership);

    if mode.links_active() {
        normalize_or_uniform(&mut connectivity);
        smooth_rows(&mut connectivity);
    } else {
        connectivity = prev.connectivity().clone();
    }

    if mode.attrs_active() {
        normalize_or_uniform(&mut attr_profiles);
        smooth_rows(&mut attr_profiles);
    } else {
        attr_profiles = prev.attr_profiles().clone();
    }

    Ok(ModelParams::new(membership, connectivity, attr_profiles)?)
}

// sum_{i,j,r} membership[i][r] * connectivity[r][j] factors into
// sum_r (column sum of membership) * (row sum of connectivity);
// likewise for attribute profiles. Equals N exactly for stochastic rows.
fn rate_total(membership_col_sums: &[f64], profile: &Matrix) -> f64 {
    membership_col_sums
        .iter()
        .enumerate()
        .map(|(r, &cs)| cs * profile.row(r).iter().sum::<f64>())
        .sum()
}

/// Evidence lower bound for the given responsibilities, restricted to the
/// mode's data terms. Conventions: a zero-responsibility component
/// contributes nothing; a positive responsibility against a zero rate yields
/// negative infinity (smoothed M-steps keep rates positive).
pub fn lower_bound(
    params: &ModelParams,
    resp: &Responsibilities,
    graph: &SparseGraph,
    attrs: &AttributeMatrix,
    mode: Mode,
) -> f64 {
    check_dims(params, graph, attrs).expect("lower_bound: dimension mismatch");
    let t = params.membership();
    let theta = params.connectivity();
    let phi = params.attr_profiles();
    let col_sums = t.col_sums();
    let mut total = 0.0;

    if mode.links_active() {
        assert_eq!(resp.n_edges(), graph.edge_count(), "lower_bound: edge responsibilities");
        for (idx, &(i, j)) in graph.edges().iter().enumerate() {
            let ti = t.row(i as usize);
            for (r, &qr) in resp.edge(idx).iter().enumerate() {
                if qr > 0.0 {
                    total += qr * ((ti[r] * theta[(r, j as usize)]).ln() - qr.ln());
                }
            }
        }
        total -= rate_total(&col_sums, theta);
    }

    if mode.attrs_active() {
        assert_eq!(resp.n_entries(), attrs.nnz(), "lower_bound: attribute responsibilities");
        for (idx, &(i, k, x)) in attrs.entries().iter().enumerate() {
            let ti = t.row(i as usize);
            let xf = f64::from(x);
            for (r, &hr) in resp.attr(idx).iter().enumerate() {
                if hr > 0.0 {
                    total += xf * hr * ((ti[r] * phi[(r, k as usize)]).ln() - hr.ln());
                }
            }
        }
        total -= rate_total(&col_sums, phi);
    }

    total
}

/// Log-likelihood of the data (up to observation-count constants),
/// restricted to the mode's data terms. A present observation with zero
/// mixture rate yields negative infinity.
pub fn log_likelihood(
    params: &ModelParams,
    graph: &SparseGraph,
    attrs: &AttributeMatrix,
    mode: Mode,
) -> f64 {
    check_dims(params, graph, attrs).expect("log_likelihood: dimension mismatch");
    let t = params.membership();
    let theta = params.connectivity();
    let phi = params.attr_profiles();
    let col_sums = t.col_sums();
    let mut total = 0.0;

    if mode.links_active() {
        for &(i, j) in graph.edges() {
            let ti = t.row(i as usize);
            let rate: f64 =
                ti.iter().enumerate().map(|(r, &tir)| tir * theta[(r, j as usize)]).sum();
            total += rate.ln();
        }
        total -= rate_total(&col_sums, theta);
    }

    if mode.attrs_active() {
        for &(i, k, x) in attrs.entries() {
            let ti = t.row(i as usize);
            let rate: f64 =
                ti.iter().enumerate().map(|(r, &tir)| tir * phi[(r, k as usize)]).sum();
            total += f64::from(x) * rate.ln();
        }
        total -= rate_total(&col_sums, phi);
    }

    total
}

struct Chain {
    params: ModelParams,
    trace: Vec<f64>,
    converged: bool,
    iterations: usize,
}

fn run_chain(
    graph: &SparseGraph,
    attrs: &AttributeMatrix,
    config: &FitConfig,
    mut params: ModelParams,
) -> Result<Chain, EmError> {
    let mut resp = e_step(&params, graph, attrs, config.mode)?;
    let mut prev = lower_bound(&params, &resp, graph, attrs, config.mode);
    let mut trace = vec![prev];
    let mut converged = false;
    let mut iterations = 0;
    for t in 1..=config.max_iters {
        params = m_step(&params, &resp, graph, attrs, config.mode)?;
        resp = e_step(&params, graph, attrs, config.mode)?;
        let bound = lower_bound(&params, &resp, graph, attrs, config.mode);
        trace.push(bound);
        iterations = t;
        if (bound - prev).abs() < config.tolerance {
            converged = true;
            break;
        }
        prev = bound;
    }
    Ok(Chain { params, trace, converged, iterations })
}

fn check_fit_inputs(
    graph: &SparseGraph,
    attrs: &AttributeMatrix,
    config: &FitConfig,
) -> Result<(), EmError> {
    config.validate()?;
    if graph.n_nodes() != attrs.n_nodes() {
        return Err(EmError::DimensionMismatch(format!(
            "graph covers {} nodes, attributes {}",
            graph.n_nodes(),
            attrs.n_nodes()
        )));
    }
    if graph.n_nodes() == 0 {
        return Err(EmError::NothingToFit);
    }
    let active_edges = if config.mode.links_active() { graph.edge_count() } else { 0 };
    let active_entries = if config.mode.attrs_active() { attrs.nnz() } else { 0 };
    if active_edges + active_entries == 0 {
        return Err(EmError::NothingToFit);
    }
    Ok(())
}

/// Run one EM chain from caller-supplied starting parameters.
pub fn fit_with_init(
    graph: &SparseGraph,
    attrs: &AttributeMatrix,
    config: &FitConfig,
    init: ModelParams,
) -> Result<FitResult, EmError> {
    check_fit_inputs(graph, attrs, config)?;
    if init.n_communities() != config.n_communities {
        return Err(EmError::DimensionMismatch(format!(
            "initial params cover {} communities, config wants {}",
            init.n_communities(),
            config.n_communities
        )));
    }
    let chain = run_chain(graph, attrs, config, init)?;
    Ok(FitResult {
        params: chain.params,
        bound_trace: chain.trace,
        converged: chain.converged,
        iterations_used: chain.iterations,
        restart_index: 0,
    })
}

/// Multi-restart EM fit. Restart `i` draws its starting point from a
/// generator seeded with `mix_seed(config.seed, i)`; the restart with the
/// highest final bound wins, earliest index on ties. Restarts run in
/// parallel but the outcome is independent of scheduling.
pub fn fit(
    graph: &SparseGraph,
    attrs: &AttributeMatrix,
    config: &FitConfig,
) -> Result<FitResult, EmError> {
    check_fit_inputs(graph, attrs, config)?;
    let chains: Vec<Chain> = (0..config.n_restarts)
        .into_par_iter()
        .map(|restart| {
            let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(config.seed, restart as u64));
            let init = init_params(
                graph.n_nodes(),
                config.n_communities,
                attrs.n_attrs(),
                config.init_jitter,
                &mut rng,
            )?;
            run_chain(graph, attrs, config, init)
        })
        .collect::<Result<_, _>>()?;

    // Collected in restart order, so strict comparison keeps the earliest of
    // equal-bound restarts regardless of worker scheduling.
    let (restart_index, best) = chains
        .into_iter()
        .enumerate()
        .reduce(|best, cand| {
            let bb = *best.1.trace.last().expect("nonempty trace");
            let cb = *cand.1.trace.last().expect("nonempty trace");
            if cb > bb {
                cand
            } else {
                best
            }
        })
        .expect("at least one restart");

    Ok(FitResult {
        params: best.params,
        bound_trace: best.trace,
        converged: best.converged,
        iterations_used: best.iterations,
        restart_index,
    })
}
