//! Implementations of the CLI subcommands.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use gnan::em::{fit, mix_seed, FitConfig, FitResult};
use gnan::eval::{hard_assign, modularity, nmi, top_attributes};
use gnan::io::{
    emit_curve, load_edge_list, load_fit, load_labels, save_block_matrix,
    save_dependency_matrix, save_fit, CurvePoint, Dataset,
};
use gnan::synth::{attr_sample, sbm_sample};
use gnan::{AttributeMatrix, Mode, Partition, SparseGraph};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::spec::{fmt_knob, mode_label, ExperimentSpec, SweepPoint};

/// Domain separators for the seed chain, so datasets and fits never share
/// random streams even when their index tuples coincide.
const SEED_DATASET: u64 = 0x11;
const SEED_FIT: u64 = 0x22;

fn seed_chain(master: u64, parts: &[u64]) -> u64 {
    parts.iter().fold(master, |acc, &p| mix_seed(acc, p))
}

fn dataset_stem(spec: &ExperimentSpec, point: &SweepPoint, p_strong: f64) -> String {
    format!("{}_x{}_p{}", spec.name, fmt_knob(point.x), fmt_knob(p_strong))
}

/// Draws one benchmark dataset. The seed depends on the sweep point, the
/// attribute probability and the repetition — but never on the fit mode, so
/// every mode sees the identical dataset.
fn sample_dataset(
    spec: &ExperimentSpec,
    si: usize,
    pi: usize,
    rep: usize,
) -> Result<(SparseGraph, AttributeMatrix, Partition)> {
    let seed = seed_chain(spec.seed, &[SEED_DATASET, si as u64, pi as u64, rep as u64]);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (graph, labels) = sbm_sample(&spec.block_sizes, &spec.sweep[si].blocks, &mut rng)?;
    let deps = spec.dependency(spec.p_strong[pi])?;
    let attrs = attr_sample(&spec.block_sizes, &deps, &mut rng)?;
    Ok((graph, attrs, labels))
}

fn fit_config(spec: &ExperimentSpec, mode: Mode, seed: u64) -> FitConfig {
    let mut cfg = FitConfig::new(spec.communities, seed);
    cfg.mode = mode;
    cfg.n_restarts = spec.fit.restarts;
    cfg.max_iters = spec.fit.max_iters;
    cfg.tolerance = spec.fit.tol;
    cfg.init_jitter = spec.fit.jitter;
    cfg
}

/// `generate`: materialise every dataset of a spec on disk, plus the block and
/// dependency matrices used to draw them.
pub fn cmd_generate(spec_path: &Path, seed_override: Option<u64>, out: &Path) -> Result<()> {
    let mut spec = ExperimentSpec::load(spec_path)?;
    if let Some(seed) = seed_override {
        spec.seed = seed;
    }
    fs::create_dir_all(out)
        .with_context(|| format!("creating output directory {}", out.display()))?;
    println!(
        "spec {}: {} structure, {} nodes per dataset",
        spec.name,
        spec.structure,
        spec.n_nodes()
    );

    let mut written = 0usize;
    for (si, point) in spec.sweep.iter().enumerate() {
        for (pi, &p) in spec.p_strong.iter().enumerate() {
            let stem = dataset_stem(&spec, point, p);
            save_block_matrix(&point.blocks, &out.join(format!("{stem}.blocks")))?;
            save_dependency_matrix(&spec.dependency(p)?, &out.join(format!("{stem}.deps")))?;
            for rep in 0..spec.repetitions {
                let (graph, attrs, labels) = sample_dataset(&spec, si, pi, rep)?;
                let name = format!("{stem}_r{rep}");
                let dataset = Dataset::new(name.clone(), graph, attrs, Some(labels))?;
                dataset.save(out)?;
                println!("wrote {}", out.join(format!("{name}.edges")).display());
                written += 1;
            }
        }
    }
    println!(
        "generated {written} datasets ({} sweep points x {} attribute levels x {} repetitions)",
        spec.sweep.len(),
        spec.p_strong.len(),
        spec.repetitions
    );
    Ok(())
}

/// `benchmark`: run the full sweep in memory and emit one recovery curve per
/// (attribute level, mode) pair.
pub fn cmd_benchmark(spec_path: &Path, seed_override: Option<u64>, out: &Path) -> Result<()> {
    let mut spec = ExperimentSpec::load(spec_path)?;
    if let Some(seed) = seed_override {
        spec.seed = seed;
    }
    fs::create_dir_all(out)
        .with_context(|| format!("creating output directory {}", out.display()))?;

    // Flat job list in a fixed order; rayon preserves indices, so the output
    // is bitwise deterministic regardless of scheduling.
    let mut jobs = Vec::new();
    for pi in 0..spec.p_strong.len() {
        for mi in 0..spec.modes.len() {
            for si in 0..spec.sweep.len() {
                for rep in 0..spec.repetitions {
                    jobs.push((pi, mi, si, rep));
                }
            }
        }
    }

    let scores: Vec<f64> = jobs
        .par_iter()
        .map(|&(pi, mi, si, rep)| -> Result<f64> {
            let (graph, attrs, planted) = sample_dataset(&spec, si, pi, rep)?;
            let seed = seed_chain(
                spec.seed,
                &[SEED_FIT, si as u64, pi as u64, rep as u64, mi as u64],
            );
            let cfg = fit_config(&spec, spec.modes[mi], seed);
            let result = fit(&graph, &attrs, &cfg)?;
            let recovered = hard_assign(result.params.membership());
            Ok(nmi(&planted, &recovered)?)
        })
        .collect::<Result<_>>()?;

    let reps = spec.repetitions;
    let n_sweep = spec.sweep.len();
    for (pi, &p) in spec.p_strong.iter().enumerate() {
        for (mi, &mode) in spec.modes.iter().enumerate() {
            let points: Vec<CurvePoint> = (0..n_sweep)
                .map(|si| {
                    let base = ((pi * spec.modes.len() + mi) * n_sweep + si) * reps;
                    let slice = &scores[base..base + reps];
                    CurvePoint::from_samples(spec.sweep[si].x, slice)
                })
                .collect();
            let path = out.join(format!(
                "{}_p{}_{}.csv",
                spec.name,
                fmt_knob(p),
                mode_label(mode)
            ));
            emit_curve(&points, &path)?;
            println!("wrote {} ({} points, {} fits each)", path.display(), points.len(), reps);
        }
    }
    Ok(())
}

/// `fit`: load a dataset by path prefix, run the model, save the fit file.
/// Returns `false` when the run stopped on the iteration cap instead of the
/// convergence tolerance (the caller maps that to exit code 2).
pub struct FitOutcome {
    pub converged: bool,
}

pub fn cmd_fit(
    prefix: &Path,
    cfg: FitConfig,
    out: Option<&Path>,
) -> Result<FitOutcome> {
    let dir = prefix.parent().filter(|p| !p.as_os_str().is_empty());
    let dir = dir.map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("."));
    let name = prefix
        .file_name()
        .and_then(|n| n.to_str())
        .ok_or_else(|| anyhow!("dataset prefix {} has no file name", prefix.display()))?;

    let dataset = Dataset::load(&dir, name)?;
    let result = fit(&dataset.graph, &dataset.attrs, &cfg)?;

    let out_dir = out.map(Path::to_path_buf).unwrap_or(dir);
    fs::create_dir_all(&out_dir)
        .with_context(|| format!("creating output directory {}", out_dir.display()))?;
    let fit_path = out_dir.join(format!("{name}.fit"));
    save_fit(&result, &fit_path)?;

    println!(
        "fit {name}: bound={:.6} iterations={} converged={} restart={}",
        result.final_bound(),
        result.iterations_used,
        result.converged,
        result.restart_index
    );
    println!("wrote {}", fit_path.display());
    Ok(FitOutcome { converged: result.converged })
}

/// `eval`: score one fit file (or every fit file in a directory) against
/// ground-truth labels, optionally adding modularity on a given graph.
pub fn cmd_eval(target: &Path, labels_path: &Path, graph_path: Option<&Path>) -> Result<()> {
    let truth = load_labels(labels_path)?;
    let graph = graph_path.map(load_edge_list).transpose()?;

    let score_one = |fit_path: &Path| -> Result<(f64, Option<f64>)> {
        let result = load_fit(fit_path)?;
        let recovered = hard_assign(result.params.membership());
        let score = nmi(&truth, &recovered)?;
        let q = graph
            .as_ref()
            .map(|g| modularity(g, &recovered))
            .transpose()?;
        Ok((score, q))
    };

    if target.is_dir() {
        let mut paths: Vec<PathBuf> = fs::read_dir(target)
            .with_context(|| format!("reading directory {}", target.display()))?
            .filter_map(|entry| entry.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|ext| ext == "fit"))
            .collect();
        paths.sort();
        if paths.is_empty() {
            bail!("no .fit files in {}", target.display());
        }
        let mut scores = Vec::with_capacity(paths.len());
        for path in &paths {
            let (score, q) = score_one(path)
                .with_context(|| format!("evaluating {}", path.display()))?;
            let name = path.file_name().unwrap().to_string_lossy();
            match q {
                Some(q) => println!("{name}: nmi={score:.6} modularity={q:.6}"),
                None => println!("{name}: nmi={score:.6}"),
            }
            scores.push(score);
        }
        let point = CurvePoint::from_samples(0.0, &scores);
        println!("nmi_mean={:.6} nmi_stddev={:.6} n={}", point.mean, point.stddev, scores.len());
    } else {
        let (score, q) = score_one(target)?;
        println!("nmi={score:.6}");
        if let Some(q) = q {
            println!("modularity={q:.6}");
        }
    }
    Ok(())
}

/// `inspect`: print per-community attribute profiles, strongest first.
pub fn cmd_inspect(
    fit_path: &Path,
    threshold: f64,
    names_path: Option<&Path>,
    full: bool,
) -> Result<()> {
    let result: FitResult = load_fit(fit_path)?;
    let profiles = result.params.attr_profiles();
    if profiles.cols() == 0 {
        println!("fit has no attribute profiles (0 attributes)");
        return Ok(());
    }

    let names: Option<Vec<String>> = names_path
        .map(|p| -> Result<Vec<String>> {
            let text = fs::read_to_string(p)
                .with_context(|| format!("reading attribute names {}", p.display()))?;
            Ok(text
                .lines()
                .map(str::trim)
                .filter(|l| !l.is_empty())
                .map(str::to_string)
                .collect())
        })
        .transpose()?;
    if let Some(ref names) = names {
        if names.len() != profiles.cols() {
            bail!(
                "names file lists {} attributes but the fit has {}",
                names.len(),
                profiles.cols()
            );
        }
    }

    let report = top_attributes(profiles, threshold);
    for r in 0..profiles.rows() {
        let shown: Vec<(usize, f64)> = if full {
            report.ranking(r).to_vec()
        } else {
            report.strong(r).to_vec()
        };
        if full {
            println!("community {r}: full ranking ({} attributes)", shown.len());
        } else {
            println!(
                "community {r}: {} attributes with weight > {}",
                shown.len(),
                fmt_knob(threshold)
            );
        }
        for (k, w) in shown {
            match &names {
                Some(names) => println!("  {w:.4}  {k:>4}  {}", names[k]),
                None => println!("  {w:.4}  {k:>4}"),
            }
        }
    }
    Ok(())
}
