//! End-to-end tests for the `gnan` binary: exit codes, output files, and
//! determinism of the generate/fit/eval/benchmark/inspect pipeline.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use gnan::em::FitResult;
use gnan::io::{save_fit, Dataset};
use gnan::{AttributeMatrix, Matrix, ModelParams, Partition, SparseGraph};

fn gnan_bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_gnan"))
}

fn run(cmd: &mut Command) -> (i32, String, String) {
    let Output { status, stdout, stderr } = cmd.output().expect("spawning gnan");
    (
        status.code().expect("exit code"),
        String::from_utf8(stdout).unwrap(),
        String::from_utf8(stderr).unwrap(),
    )
}

/// Two disjoint 5-cliques with ground-truth labels; no attribute file.
fn write_two_cliques(dir: &Path) {
    let mut edges = Vec::new();
    for base in [0u32, 5] {
        for i in 0..5 {
            for j in (i + 1)..5 {
                edges.push((base + i, base + j));
            }
        }
    }
    let graph = SparseGraph::new(10, &edges, false).unwrap();
    let labels = Partition::new(vec![0, 0, 0, 0, 0, 1, 1, 1, 1, 1], 2).unwrap();
    let dataset =
        Dataset::new("cliques", graph, AttributeMatrix::empty(10, 0), Some(labels)).unwrap();
    dataset.save(dir).unwrap();
}

const TINY_SPEC: &str = "\
name = tiny
structure = community
block_sizes = 12, 12
lambda = 0.05
omega = 0.5, 0.9
p_strong = 0.9
p_noise = 0.1
strong_per_block = 3
repetitions = 2
modes = both, links
seed = 5
restarts = 2
max_iters = 60
";

#[test]
fn fit_then_eval_recovers_cliques() {
    let dir = tempfile::tempdir().unwrap();
    write_two_cliques(dir.path());

    let prefix = dir.path().join("cliques");
    let (code, stdout, stderr) = run(gnan_bin()
        .args(["fit"])
        .arg(&prefix)
        .args(["--communities", "2", "--restarts", "4", "--seed", "1"]));
    assert_eq!(code, 0, "stdout: {stdout}\nstderr: {stderr}");
    assert!(stdout.contains("converged=true"), "{stdout}");
    let fit_path = dir.path().join("cliques.fit");
    assert!(fit_path.exists());

    let labels = dir.path().join("cliques.labels");
    let edges = dir.path().join("cliques.edges");
    let (code, stdout, _) = run(gnan_bin()
        .arg("eval")
        .arg(&fit_path)
        .arg(&labels)
        .arg("--graph")
        .arg(&edges));
    assert_eq!(code, 0);
    assert!(stdout.contains("nmi=1.000000"), "{stdout}");
    // Two equal disjoint cliques split down the middle score modularity 1/2.
    assert!(stdout.contains("modularity=0.500000"), "{stdout}");
}

#[test]
fn fit_is_bitwise_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    write_two_cliques(dir.path());
    let prefix = dir.path().join("cliques");

    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    for out in [&out_a, &out_b] {
        let (code, _, stderr) = run(gnan_bin()
            .arg("fit")
            .arg(&prefix)
            .args(["--communities", "2", "--seed", "9"])
            .arg("--out")
            .arg(out));
        assert_eq!(code, 0, "{stderr}");
    }
    let bytes_a = fs::read(out_a.join("cliques.fit")).unwrap();
    let bytes_b = fs::read(out_b.join("cliques.fit")).unwrap();
    assert_eq!(bytes_a, bytes_b);
}

#[test]
fn fit_exits_2_when_iteration_cap_hits() {
    let dir = tempfile::tempdir().unwrap();
    write_two_cliques(dir.path());
    let prefix = dir.path().join("cliques");

    let (code, stdout, stderr) = run(gnan_bin()
        .arg("fit")
        .arg(&prefix)
        .args(["--communities", "2", "--max-iters", "1"]));
    assert_eq!(code, 2, "stdout: {stdout}\nstderr: {stderr}");
    assert!(stdout.contains("converged=false"), "{stdout}");
    assert!(stderr.contains("iteration cap"), "{stderr}");
    // The best fit so far is still written.
    assert!(dir.path().join("cliques.fit").exists());
}

#[test]
fn missing_dataset_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let prefix = dir.path().join("nope");
    let (code, _, stderr) = run(gnan_bin().arg("fit").arg(&prefix).args(["--communities", "2"]));
    assert_eq!(code, 1);
    assert!(stderr.contains("error"), "{stderr}");
}

#[test]
fn usage_errors_exit_1_but_help_exits_0() {
    let (code, _, _) = run(gnan_bin().arg("frobnicate"));
    assert_eq!(code, 1);

    let (code, _, _) = run(gnan_bin().arg("fit")); // missing required args
    assert_eq!(code, 1);

    let (code, stdout, _) = run(gnan_bin().arg("--help"));
    assert_eq!(code, 0);
    assert!(stdout.contains("generate"), "{stdout}");

    let (code, _, _) = run(gnan_bin().arg("--version"));
    assert_eq!(code, 0);
}

#[test]
fn generate_writes_every_dataset_with_provenance() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("tiny.spec");
    fs::write(&spec, TINY_SPEC).unwrap();
    let out = dir.path().join("data");

    let (code, stdout, stderr) =
        run(gnan_bin().arg("generate").arg(&spec).arg("--out").arg(&out));
    assert_eq!(code, 0, "{stderr}");
    assert!(stdout.contains("generated 4 datasets"), "{stdout}");

    // 2 sweep points x 1 attribute level x 2 repetitions.
    for x in ["0.5", "0.9"] {
        for r in 0..2 {
            for ext in ["edges", "attrs", "labels"] {
                let path = out.join(format!("tiny_x{x}_p0.9_r{r}.{ext}"));
                assert!(path.exists(), "missing {}", path.display());
            }
        }
        for ext in ["blocks", "deps"] {
            let path = out.join(format!("tiny_x{x}_p0.9.{ext}"));
            assert!(path.exists(), "missing {}", path.display());
        }
    }

    // Generated datasets load back and have the advertised shape.
    let ds = Dataset::load(&out, "tiny_x0.9_p0.9_r1").unwrap();
    assert_eq!(ds.graph.n_nodes(), 24);
    assert_eq!(ds.attrs.n_attrs(), 6);
    assert_eq!(ds.labels.unwrap().n_communities(), 2);
}

#[test]
fn benchmark_emits_deterministic_curves_per_mode() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("tiny.spec");
    fs::write(&spec, TINY_SPEC).unwrap();

    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    for out in [&out_a, &out_b] {
        let (code, stdout, stderr) =
            run(gnan_bin().arg("benchmark").arg(&spec).arg("--out").arg(out));
        assert_eq!(code, 0, "{stderr}");
        assert!(stdout.contains("2 points"), "{stdout}");
    }

    for mode in ["both", "links"] {
        let name = format!("tiny_p0.9_{mode}.csv");
        let text_a = fs::read_to_string(out_a.join(&name)).unwrap();
        let text_b = fs::read_to_string(out_b.join(&name)).unwrap();
        assert_eq!(text_a, text_b, "{name} differs between runs");
        let mut lines = text_a.lines();
        assert_eq!(lines.next(), Some("x,mean,stddev"));
        assert_eq!(lines.clone().count(), 2);
        assert!(lines.next().unwrap().starts_with("0.5,"), "{text_a}");
    }
}

#[test]
fn generate_seed_override_changes_data_and_repeats_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("tiny.spec");
    fs::write(&spec, TINY_SPEC).unwrap();

    let mut texts = Vec::new();
    for (out, seed) in [("a", None), ("b", Some("99")), ("c", Some("99"))] {
        let out = dir.path().join(out);
        let mut cmd = gnan_bin();
        cmd.arg("generate").arg(&spec).arg("--out").arg(&out);
        if let Some(seed) = seed {
            cmd.args(["--seed", seed]);
        }
        let (code, _, stderr) = run(&mut cmd);
        assert_eq!(code, 0, "{stderr}");
        texts.push(fs::read_to_string(out.join("tiny_x0.5_p0.9_r0.edges")).unwrap());
    }
    assert_ne!(texts[0], texts[1], "seed override should change the sampled graphs");
    assert_eq!(texts[1], texts[2], "equal seeds must reproduce identical files");
}

#[test]
fn malformed_spec_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("bad.spec");
    fs::write(&spec, format!("{TINY_SPEC}\nbogus_key = 1\n")).unwrap();
    let (code, _, stderr) = run(gnan_bin().arg("generate").arg(&spec));
    assert_eq!(code, 1);
    assert!(stderr.contains("unknown key"), "{stderr}");
}

fn write_fixture_fit(path: &Path) {
    let params = ModelParams::new(
        Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]),
        Matrix::from_rows(&[vec![0.5, 0.5], vec![0.5, 0.5]]),
        Matrix::from_rows(&[vec![0.6, 0.3, 0.1], vec![0.2, 0.2, 0.6]]),
    )
    .unwrap();
    let result = FitResult {
        params,
        bound_trace: vec![-10.0, -9.0],
        converged: true,
        iterations_used: 1,
        restart_index: 0,
    };
    save_fit(&result, path).unwrap();
}

#[test]
fn inspect_lists_strong_attributes_in_order() {
    let dir = tempfile::tempdir().unwrap();
    let fit_path = dir.path().join("toy.fit");
    write_fixture_fit(&fit_path);

    let (code, stdout, _) =
        run(gnan_bin().arg("inspect").arg(&fit_path).args(["--threshold", "0.25"]));
    assert_eq!(code, 0);
    let lines: Vec<&str> = stdout.lines().collect();
    assert_eq!(lines[0], "community 0: 2 attributes with weight > 0.25");
    assert!(lines[1].contains("0.6000") && lines[1].contains('0'), "{stdout}");
    assert!(lines[2].contains("0.3000"), "{stdout}");
    assert_eq!(lines[3], "community 1: 1 attributes with weight > 0.25");
    assert!(lines[4].contains("0.6000"), "{stdout}");

    // Named attributes appear next to the weights.
    let names = dir.path().join("names.txt");
    fs::write(&names, "alpha\nbeta\ngamma\n").unwrap();
    let (code, stdout, _) = run(gnan_bin()
        .arg("inspect")
        .arg(&fit_path)
        .args(["--threshold", "0.25"])
        .arg("--names")
        .arg(&names));
    assert_eq!(code, 0);
    assert!(stdout.contains("alpha"), "{stdout}");
    assert!(stdout.contains("gamma"), "{stdout}");

    // A names file of the wrong length is an error.
    fs::write(&names, "only_one\n").unwrap();
    let (code, _, stderr) = run(gnan_bin()
        .arg("inspect")
        .arg(&fit_path)
        .arg("--names")
        .arg(&names));
    assert_eq!(code, 1);
    assert!(stderr.contains("names file lists 1"), "{stderr}");

    // --full dumps the complete ranking.
    let (code, stdout, _) = run(gnan_bin().arg("inspect").arg(&fit_path).arg("--full"));
    assert_eq!(code, 0);
    assert!(stdout.contains("full ranking (3 attributes)"), "{stdout}");
}

#[test]
fn eval_scores_a_directory_of_fits() {
    let dir = tempfile::tempdir().unwrap();
    write_two_cliques(dir.path());
    let prefix = dir.path().join("cliques");

    let fits = dir.path().join("fits");
    for seed in ["1", "2"] {
        let out = fits.join(format!("s{seed}"));
        let (code, _, stderr) = run(gnan_bin()
            .arg("fit")
            .arg(&prefix)
            .args(["--communities", "2", "--seed", seed])
            .arg("--out")
            .arg(&out));
        assert_eq!(code, 0, "{stderr}");
        fs::rename(out.join("cliques.fit"), fits.join(format!("run{seed}.fit"))).unwrap();
    }

    let labels = dir.path().join("cliques.labels");
    let (code, stdout, stderr) = run(gnan_bin().arg("eval").arg(&fits).arg(&labels));
    assert_eq!(code, 0, "{stderr}");
    assert!(stdout.contains("run1.fit: nmi="), "{stdout}");
    assert!(stdout.contains("run2.fit: nmi="), "{stdout}");
    assert!(stdout.contains("nmi_mean=1.000000 nmi_stddev=0.000000 n=2"), "{stdout}");

    // An empty directory is an error, not a silent zero-mean report.
    let empty = dir.path().join("empty");
    fs::create_dir(&empty).unwrap();
    let (code, _, stderr) = run(gnan_bin().arg("eval").arg(&empty).arg(&labels));
    assert_eq!(code, 1);
    assert!(stderr.contains("no .fit files"), "{stderr}");
}

#[test]
fn threads_flag_is_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("tiny.spec");
    fs::write(&spec, TINY_SPEC).unwrap();
    let out = dir.path().join("o");
    let (code, _, stderr) = run(gnan_bin()
        .args(["--threads", "1"])
        .arg("benchmark")
        .arg(&spec)
        .arg("--out")
        .arg(&out));
    assert_eq!(code, 0, "{stderr}");
}

#[test]
fn shipped_experiment_specs_all_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../experiments");
    let mut seen = 0;
    let mut entries: Vec<_> = fs::read_dir(&dir)
        .expect("experiments directory")
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "spec"))
        .collect();
    entries.sort();
    for path in entries {
        let spec = gnan_cli::spec::ExperimentSpec::load(&path)
            .unwrap_or_else(|err| panic!("{}: {err:#}", path.display()));
        assert!(spec.n_nodes() > 0, "{}: empty network", path.display());
        assert!(!spec.sweep.is_empty(), "{}: empty sweep", path.display());
        assert!(spec.repetitions > 0, "{}: no repetitions", path.display());
        // Every sweep point carries a block matrix sized to the planted blocks,
        // and every attribute strength yields a valid dependency design.
        for point in &spec.sweep {
            assert_eq!(point.blocks.n_blocks(), spec.block_sizes.len());
        }
        for p in &spec.p_strong {
            spec.dependency(*p)
                .unwrap_or_else(|err| panic!("{}: {err:#}", path.display()));
        }
        seen += 1;
    }
    assert_eq!(seen, 8, "expected all shipped spec files to be exercised");
}
