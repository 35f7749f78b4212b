//! Plain-text file formats for graphs, attributes, labels, fitted models,
//! and benchmark curves.
//!
//! All writers emit canonical forms: sorted keys, tab-separated fields,
//! `\n` line endings, and floating-point values with 17 significant digits
//! so every `f64` survives a round trip exactly. Readers skip blank lines
//! and `#` comments and report malformed content with its line number.
//!
//! Formats:
//! - edge list: header `nodes=N directed=D`, then `src<TAB>dst` per line;
//!   undirected graphs store each link once with `src <= dst`.
//! - attributes: header `nodes=N attrs=K`, then `node<TAB>attr<TAB>value`
//!   with strictly positive values; absent cells are simply not listed.
//! - labels: header `nodes=N communities=C`, then one label per line in
//!   node order (community counts survive even when a community is empty).
//! - fitted model: version line `gnan-fit v1`, scalar fields, the bound
//!   trace, then the three parameter matrices row by row.
//! - curve: CSV with header `x,mean,stddev`.

use crate::em::FitResult;
use crate::model::{
    AttributeMatrix, Matrix, ModelError, ModelParams, Partition, SparseGraph,
};
use crate::synth::{BlockMatrix, DependencyMatrix};
use std::fmt::Write as _;
use std::path::Path;
use thiserror::Error;

/// Version tag on fitted-model files.
pub const FIT_FORMAT_VERSION: &str = "gnan-fit v1";

#[derive(Debug, Error)]
pub enum IoError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("unsupported format version {found:?}, expected {expected:?}")]
    VersionMismatch { found: String, expected: &'static str },
    #[error("non-finite value in record {record}")]
    NonFinite { record: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
}

fn parse_err(line: usize, msg: impl Into<String>) -> IoError {
    IoError::Parse { line, msg: msg.into() }
}

// 1-based significant lines: blank lines and '#' comments skipped.
fn significant_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn parse_field<T: std::str::FromStr>(token: &str, key: &str, line: usize) -> Result<T, IoError> {
    let value = token
        .strip_prefix(key)
        .and_then(|rest| rest.strip_prefix('='))
        .ok_or_else(|| parse_err(line, format!("expected `{key}=...`, found `{token}`")))?;
    value.parse().map_err(|_| parse_err(line, format!("cannot parse `{value}` for `{key}`")))
}

fn split2(line: &str, lineno: usize) -> Result<(&str, &str), IoError> {
    let mut it = line.split_whitespace();
    match (it.next(), it.next(), it.next()) {
        (Some(a), Some(b), None) => Ok((a, b)),
        _ => Err(parse_err(lineno, format!("expected two fields, found `{line}`"))),
    }
}

/// Read an edge list file into a graph (undirected input is symmetrized).
pub fn load_edge_list(path: &Path) -> Result<SparseGraph, IoError> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = significant_lines(&text);
    let (lineno, header) = lines.next().ok_or_else(|| parse_err(0, "missing header"))?;
    let (nodes_tok, directed_tok) = split2(header, lineno)?;
    let n_nodes: usize = parse_field(nodes_tok, "nodes", lineno)?;
    let directed_flag: u8 = parse_field(directed_tok, "directed", lineno)?;
    let directed = match directed_flag {
        0 => false,
        1 => true,
        other => return Err(parse_err(lineno, format!("directed must be 0 or 1, found {other}"))),
    };
    let mut edges = Vec::new();
    for (lineno, line) in lines {
        let (a, b) = split2(line, lineno)?;
        let src: u32 = a.parse().map_err(|_| parse_err(lineno, format!("bad node `{a}`")))?;
        let dst: u32 = b.parse().map_err(|_| parse_err(lineno, format!("bad node `{b}`")))?;
        edges.push((src, dst));
    }
    Ok(SparseGraph::new(n_nodes, &edges, directed)?)
}

/// Write a graph in canonical form: sorted edges, one unordered pair per
/// undirected link.
pub fn save_edge_list(graph: &SparseGraph, path: &Path) -> Result<(), IoError> {
    let mut out = String::new();
    writeln!(out, "nodes={} directed={}", graph.n_nodes(), u8::from(graph.directed())).unwrap();
    for &(src, dst) in graph.edges() {
        if graph.directed() || src <= dst {
            writeln!(out, "{src}\t{dst}").unwrap();
        }
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Read a sparse attribute file.
pub fn load_attributes(path: &Path) -> Result<AttributeMatrix, IoError> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = significant_lines(&text);
    let (lineno, header) = lines.next().ok_or_else(|| parse_err(0, "missing header"))?;
    let (nodes_tok, attrs_tok) = split2(header, lineno)?;
    let n_nodes: usize = parse_field(nodes_tok, "nodes", lineno)?;
    let n_attrs: usize = parse_field(attrs_tok, "attrs", lineno)?;
    let mut entries = Vec::new();
    for (lineno, line) in lines {
        let mut it = line.split_whitespace();
        let (a, b, c) = match (it.next(), it.next(), it.next(), it.next()) {
            (Some(a), Some(b), Some(c), None) => (a, b, c),
            _ => return Err(parse_err(lineno, format!("expected three fields, found `{line}`"))),
        };
        let node: u32 = a.parse().map_err(|_| parse_err(lineno, format!("bad node `{a}`")))?;
        let attr: u32 = b.parse().map_err(|_| parse_err(lineno, format!("bad attribute `{b}`")))?;
        let value: u32 = c.parse().map_err(|_| parse_err(lineno, format!("bad value `{c}`")))?;
        entries.push((node, attr, value));
    }
    Ok(AttributeMatrix::new(n_nodes, n_attrs, entries)?)
}

/// Write attributes in canonical sorted order.
pub fn save_attributes(attrs: &AttributeMatrix, path: &Path) -> Result<(), IoError> {
    let mut out = String::new();
    writeln!(out, "nodes={} attrs={}", attrs.n_nodes(), attrs.n_attrs()).unwrap();
    for &(node, attr, value) in attrs.entries() {
        writeln!(out, "{node}\t{attr}\t{value}").unwrap();
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Read a label file; the header's community count is authoritative, so
/// empty communities survive the round trip.
pub fn load_labels(path: &Path) -> Result<Partition, IoError> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = significant_lines(&text);
    let (lineno, header) = lines.next().ok_or_else(|| parse_err(0, "missing header"))?;
    let (nodes_tok, comm_tok) = split2(header, lineno)?;
    let n_nodes: usize = parse_field(nodes_tok, "nodes", lineno)?;
    let n_communities: usize = parse_field(comm_tok, "communities", lineno)?;
    let mut labels = Vec::with_capacity(n_nodes);
    let mut last_line = lineno;
    for (lineno, line) in lines {
        let label: u32 =
            line.parse().map_err(|_| parse_err(lineno, format!("bad label `{line}`")))?;
        labels.push(label);
        last_line = lineno;
    }
    if labels.len() != n_nodes {
        return Err(parse_err(
            last_line,
            format!("header promises {n_nodes} labels, found {}", labels.len()),
        ));
    }
    Ok(Partition::new(labels, n_communities)?)
}

pub fn save_labels(partition: &Partition, path: &Path) -> Result<(), IoError> {
    let mut out = String::new();
    writeln!(out, "nodes={} communities={}", partition.len(), partition.n_communities()).unwrap();
    for &label in partition.labels() {
        writeln!(out, "{label}").unwrap();
    }
    std::fs::write(path, out)?;
    Ok(())
}

// 17 significant digits: enough for any f64 to round-trip exactly.
fn push_float_row(out: &mut String, row: &[f64]) {
    for (i, v) in row.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        write!(out, "{v:.16e}").unwrap();
    }
    out.push('\n');
}

/// Write a fitted model with its bound trace and run metadata.
pub fn save_fit(fit: &FitResult, path: &Path) -> Result<(), IoError> {
    let params = &fit.params;
    let mut out = String::new();
    writeln!(out, "{FIT_FORMAT_VERSION}").unwrap();
    writeln!(out, "converged={}", u8::from(fit.converged)).unwrap();
    writeln!(out, "iterations={}", fit.iterations_used).unwrap();
    writeln!(out, "restart={}", fit.restart_index).unwrap();
    writeln!(out, "nodes={}", params.n_nodes()).unwrap();
    writeln!(out, "communities={}", params.n_communities()).unwrap();
    writeln!(out, "attrs={}", params.n_attrs()).unwrap();
    writeln!(out, "trace={}", fit.bound_trace.len()).unwrap();
    for v in &fit.bound_trace {
        writeln!(out, "{v:.16e}").unwrap();
    }
    out.push_str("membership\n");
    for i in 0..params.n_nodes() {
        push_float_row(&mut out, params.membership().row(i));
    }
    out.push_str("connectivity\n");
    for r in 0..params.n_communities() {
        push_float_row(&mut out, params.connectivity().row(r));
    }
    out.push_str("profiles\n");
    for r in 0..params.n_communities() {
        push_float_row(&mut out, params.attr_profiles().row(r));
    }
    std::fs::write(path, out)?;
    Ok(())
}

fn parse_float_row(line: &str, lineno: usize, expect: usize) -> Result<Vec<f64>, IoError> {
    let row: Result<Vec<f64>, _> = line.split_whitespace().map(str::parse).collect();
    let row = row.map_err(|_| parse_err(lineno, "bad floating-point value"))?;
    if row.len() != expect {
        return Err(parse_err(lineno, format!("expected {expect} values, found {}", row.len())));
    }
    Ok(row)
}

/// Read a fitted model saved by [`save_fit`].
pub fn load_fit(path: &Path) -> Result<FitResult, IoError> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = significant_lines(&text);
    let (_, version) = lines.next().ok_or_else(|| parse_err(0, "missing version line"))?;
    if version != FIT_FORMAT_VERSION {
        return Err(IoError::VersionMismatch {
            found: version.to_string(),
            expected: FIT_FORMAT_VERSION,
        });
    }
    let mut field = |key: &str| -> Result<usize, IoError> {
        let (lineno, line) = lines.next().ok_or_else(|| parse_err(0, format!("missing {key}")))?;
        parse_field(line, key, lineno)
    };
    let converged = field("converged")? != 0;
    let iterations_used = field("iterations")?;
    let restart_index = field("restart")?;
    let n_nodes = field("nodes")?;
    let n_communities = field("communities")?;
    let n_attrs = field("attrs")?;
    let trace_len = field("trace")?;

    let mut bound_trace = Vec::with_capacity(trace_len);
    for _ in 0..trace_len {
        let (lineno, line) =
            lines.next().ok_or_else(|| parse_err(0, "truncated bound trace"))?;
        bound_trace
            .push(line.parse::<f64>().map_err(|_| parse_err(lineno, "bad trace value"))?);
    }

    let mut read_block = |name: &str, rows: usize, cols: usize| -> Result<Matrix, IoError> {
        let (lineno, line) =
            lines.next().ok_or_else(|| parse_err(0, format!("missing `{name}` section")))?;
        if line != name {
            return Err(parse_err(lineno, format!("expected `{name}` section, found `{line}`")));
        }
        let mut m = Matrix::zeros(rows, cols);
        for r in 0..rows {
            if cols == 0 {
                continue;
            }
            let (lineno, line) =
                lines.next().ok_or_else(|| parse_err(0, format!("truncated `{name}`")))?;
            m.row_mut(r).copy_from_slice(&parse_float_row(line, lineno, cols)?);
        }
        Ok(m)
    };
    let membership = read_block("membership", n_nodes, n_communities)?;
    let connectivity = read_block("connectivity", n_communities, n_nodes)?;
    let profiles = read_block("profiles", n_communities, n_attrs)?;
    let params = ModelParams::new(membership, connectivity, profiles)?;
    Ok(FitResult { params, bound_trace, converged, iterations_used, restart_index })
}

/// One row of a benchmark curve: sweep coordinate, mean score, and sample
/// standard deviation over repetitions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub x: f64,
    pub mean: f64,
    pub stddev: f64,
}

impl CurvePoint {
    /// Aggregates repetition scores into one curve row. Uses the sample
    /// (n - 1) standard deviation; a single repetition reports 0 spread.
    pub fn from_samples(x: f64, samples: &[f64]) -> CurvePoint {
        assert!(!samples.is_empty(), "curve point needs at least one sample");
        let n = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / n;
        let stddev = if samples.len() < 2 {
            0.0
        } else {
            let ss = samples.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>();
            (ss / (n - 1.0)).sqrt()
        };
        CurvePoint { x, mean, stddev }
    }
}

/// Write a `x,mean,stddev` CSV file. Every value must be finite.
pub fn emit_curve(points: &[CurvePoint], path: &Path) -> Result<(), IoError> {
    let mut out = String::from("x,mean,stddev\n");
    for (record, p) in points.iter().enumerate() {
        if !(p.x.is_finite() && p.mean.is_finite() && p.stddev.is_finite()) {
            return Err(IoError::NonFinite { record });
        }
        writeln!(out, "{},{},{}", p.x, p.mean, p.stddev).unwrap();
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Write a block probability matrix (generation provenance).
pub fn save_block_matrix(blocks: &BlockMatrix, path: &Path) -> Result<(), IoError> {
    let mut out = String::new();
    writeln!(out, "blocks={}", blocks.n_blocks()).unwrap();
    for r in 0..blocks.n_blocks() {
        push_float_row(&mut out, blocks.matrix().row(r));
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Write a dependency probability matrix (generation provenance).
pub fn save_dependency_matrix(deps: &DependencyMatrix, path: &Path) -> Result<(), IoError> {
    let mut out = String::new();
    writeln!(out, "blocks={} attrs={}", deps.n_blocks(), deps.n_attrs()).unwrap();
    for r in 0..deps.n_blocks() {
        push_float_row(&mut out, deps.matrix().row(r));
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// A named on-disk dataset: `<name>.edges` plus optional `<name>.attrs` and
/// `<name>.labels` in one directory.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub name: String,
    pub graph: SparseGraph,
    pub attrs: AttributeMatrix,
    pub labels: Option<Partition>,
}

impl Dataset {
    pub fn new(
        name: impl Into<String>,
        graph: SparseGraph,
        attrs: AttributeMatrix,
        labels: Option<Partition>,
    ) -> Result<Self, IoError> {
        if attrs.n_nodes() != graph.n_nodes() {
            return Err(IoError::Model(ModelError::DimensionMismatch(format!(
                "graph covers {} nodes, attributes {}",
                graph.n_nodes(),
                attrs.n_nodes()
            ))));
        }
        if let Some(p) = &labels {
            if p.len() != graph.n_nodes() {
                return Err(IoError::Model(ModelError::DimensionMismatch(format!(
                    "graph covers {} nodes, labels {}",
                    graph.n_nodes(),
                    p.len()
                ))));
            }
        }
        Ok(Dataset { name: name.into(), graph, attrs, labels })
    }

    pub fn save(&self, dir: &Path) -> Result<(), IoError> {
        std::fs::create_dir_all(dir)?;
        save_edge_list(&self.graph, &dir.join(format!("{}.edges", self.name)))?;
        save_attributes(&self.attrs, &dir.join(format!("{}.attrs", self.name)))?;
        if let Some(labels) = &self.labels {
            save_labels(labels, &dir.join(format!("{}.labels", self.name)))?;
        }
        Ok(())
    }

    /// Load `<dir>/<name>.edges` plus the optional companion files. A
    /// missing attribute file yields an empty zero-column matrix.
    pub fn load(dir: &Path, name: &str) -> Result<Self, IoError> {
        let graph = load_edge_list(&dir.join(format!("{name}.edges")))?;
        let attrs_path = dir.join(format!("{name}.attrs"));
        let attrs = if attrs_path.exists() {
            load_attributes(&attrs_path)?
        } else {
            AttributeMatrix::empty(graph.n_nodes(), 0)
        };
        let labels_path = dir.join(format!("{name}.labels"));
        let labels = if labels_path.exists() { Some(load_labels(&labels_path)?) } else { None };
        Dataset::new(name, graph, attrs, labels)
    }
}
