mod common;

use std::path::{Path, PathBuf};

use apsl_core::apsl::{Algorithm, Depth};
use apsl_core::bnio::{true_neighborhood, NeighborhoodSpec};
use apsl_core::commands::{
    cmd_bench, cmd_eval, cmd_learn, cmd_sample, BenchArgs, CmdError, EvalArgs, LearnArgs, RunManifest, SampleArgs,
};
use apsl_core::{Pdag, VarId};
use common::{fixture, fixture_path, network, network_path};

fn sample(dir: &Path, bif: &str, n: usize, seed: u64) -> PathBuf {
    let out = dir.join("data.csv");
    cmd_sample(&SampleArgs { bif: bif.into(), n, seed, out: out.clone() }).unwrap();
    out
}

#[test]
fn sample_child_shape_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("child.csv");
    let s = cmd_sample(&SampleArgs { bif: network_path("child").into(), n: 1000, seed: 7, out: out.clone() }).unwrap();
    assert_eq!((s.rows, s.columns), (1000, 20));
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().count(), 1001);
    let m: RunManifest = serde_json::from_str(&std::fs::read_to_string(&s.manifest).unwrap()).unwrap();
    assert_eq!(m.command, "sample");
    assert_eq!((m.config.n, m.config.seed), (Some(1000), Some(7)));
    assert_eq!(m.inputs[0].sha256.len(), 64);
}

#[test]
fn sample_single_row() {
    let dir = tempfile::tempdir().unwrap();
    let out = sample(dir.path(), &fixture_path("fig2"), 1, 0);
    assert_eq!(std::fs::read_to_string(out).unwrap().lines().count(), 2);
}

#[test]
fn sample_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = std::fs::read(sample(dir.path(), &fixture_path("fig3"), 200, 5)).unwrap();
    let b = std::fs::read(sample(dir.path(), &fixture_path("fig3"), 200, 5)).unwrap();
    assert_eq!(a, b);
}

#[test]
fn sample_missing_file_is_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let err = cmd_sample(&SampleArgs {
        bif: "/no/such/net.bif".into(),
        n: 10,
        seed: 0,
        out: dir.path().join("x.csv"),
    })
    .unwrap_err();
    assert_eq!(err.exit_code(), 2);
    assert!(err.to_string().contains("/no/such/net.bif"));
}

#[test]
fn sample_parse_error_reports_line() {
    let dir = tempfile::tempdir().unwrap();
    let bif = dir.path().join("bad.bif");
    std::fs::write(&bif, "network x { }\nvariable A { type discrete [ 2 ] { a, b }; }\nprobability ( B ) { table 0.5, 0.5; }\n")
        .unwrap();
    let err = cmd_sample(&SampleArgs { bif, n: 1, seed: 0, out: dir.path().join("x.csv") }).unwrap_err();
    assert_eq!(err.exit_code(), 2);
    assert!(err.to_string().contains("line 3"), "{err}");
}

#[test]
fn learn_fig2_finds_parent_of_target() {
    let dir = tempfile::tempdir().unwrap();
    let data = sample(dir.path(), &fixture_path("fig2"), 20_000, 11);
    let s = cmd_learn(&LearnArgs::new(&data, "T")).unwrap();
    let edges = std::fs::read_to_string(&s.edge_list).unwrap();
    assert!(edges.lines().any(|l| l == "F -> T"), "{edges}");
    let (names, g) = Pdag::from_adjacency_csv(&std::fs::read_to_string(&s.adjacency).unwrap()).unwrap();
    assert_eq!(names, s.names);
    assert_eq!(g, s.graph);
    let m: RunManifest = serde_json::from_str(&std::fs::read_to_string(&s.manifest).unwrap()).unwrap();
    assert_eq!(m.config.backend.as_deref(), Some("hiton-mb"));
    assert_eq!(m.config.max_cond_size, Some(3));
}

#[test]
fn learn_isolated_target_writes_empty_edge_list() {
    let dir = tempfile::tempdir().unwrap();
    let bif = dir.path().join("two.bif");
    std::fs::write(
        &bif,
        "network t { }\nvariable A { type discrete [ 2 ] { a0, a1 }; }\nvariable B { type discrete [ 2 ] { b0, b1 }; }\n\
         probability ( A ) { table 0.5, 0.5; }\nprobability ( B ) { table 0.3, 0.7; }\n",
    )
    .unwrap();
    let data = sample(dir.path(), bif.to_str().unwrap(), 2000, 1);
    let mut args = LearnArgs::new(&data, "A");
    args.depth = Depth::Finite(1);
    let s = cmd_learn(&args).unwrap();
    assert_eq!(std::fs::read_to_string(&s.edge_list).unwrap(), "");
}

#[test]
fn learn_unknown_target_lists_nearest_names() {
    let dir = tempfile::tempdir().unwrap();
    let data = sample(dir.path(), &network_path("alarm"), 50, 1);
    let err = cmd_learn(&LearnArgs::new(&data, "HREKQ")).unwrap_err();
    assert!(matches!(err, CmdError::Usage(_)));
    assert_eq!(err.exit_code(), 2);
    assert!(err.to_string().contains("HREKG"), "{err}");
}

#[test]
fn learn_rejects_bad_alpha() {
    let dir = tempfile::tempdir().unwrap();
    let data = sample(dir.path(), &fixture_path("fig2"), 50, 1);
    let mut args = LearnArgs::new(&data, "T");
    args.test.alpha = 1.5;
    assert_eq!(cmd_learn(&args).unwrap_err().exit_code(), 2);
}

#[test]
fn apsl_fs_issues_fewer_conditional_pc_tests() {
    let dir = tempfile::tempdir().unwrap();
    let data = sample(dir.path(), &network_path("alarm"), 2000, 3);
    let target = "HR";
    let mut a = LearnArgs::new(&data, target);
    a.depth = Depth::Finite(2);
    a.out = Some(dir.path().join("a"));
    let mut f = a.clone();
    f.algorithm = Algorithm::ApslFs;
    f.out = Some(dir.path().join("f"));
    let (sa, sf) = (cmd_learn(&a).unwrap(), cmd_learn(&f).unwrap());
    assert!(sf.tests.pc_conditional < sa.tests.pc_conditional);
    assert_eq!(sf.tests.pc_conditional, 0);
}

fn write_graph(dir: &Path, name: &str, g: &Pdag, names: &[String]) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, g.to_edge_list(names)).unwrap();
    p
}

fn eval(graph: &Path, bif: &str, target: &str, depth: Depth) -> Result<apsl_core::eval::ArMetrics, CmdError> {
    cmd_eval(&EvalArgs { graph: graph.into(), bif: bif.into(), target: target.into(), depth, out: None })
}

#[test]
fn eval_perfect_and_empty_graphs() {
    let dir = tempfile::tempdir().unwrap();
    let bn = fixture("fig2");
    let perfect = write_graph(dir.path(), "p.txt", bn.dag(), bn.names());
    let empty = write_graph(dir.path(), "e.txt", &Pdag::new(bn.n_vars()), bn.names());
    let bif = fixture_path("fig2");
    assert_eq!(eval(&perfect, &bif, "T", Depth::Max).unwrap().ar_distance, 0.0);
    let m = eval(&empty, &bif, "T", Depth::Finite(2)).unwrap();
    assert_eq!(m.ar_distance, 2f64.sqrt());
}

#[test]
fn eval_reads_adjacency_csv_and_writes_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let bn = fixture("fig3");
    let p = dir.path().join("g.csv");
    std::fs::write(&p, bn.dag().to_adjacency_csv(bn.names())).unwrap();
    let out = dir.path().join("m.json");
    let m = cmd_eval(&EvalArgs {
        graph: p,
        bif: fixture_path("fig3").into(),
        target: "T".into(),
        depth: Depth::Finite(1),
        out: Some(out.clone()),
    })
    .unwrap();
    assert_eq!((m.n_true_edges, m.ar_distance), (4, 0.0));
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(json["ar_distance"], 0.0);
    assert!(out.with_extension("manifest.json").exists());
}

#[test]
fn eval_unknown_variable_is_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("g.txt");
    std::fs::write(&p, "A -> Nope\n").unwrap();
    let err = eval(&p, &fixture_path("fig2"), "T", Depth::Max).unwrap_err();
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn eval_scores_backtracking_error_worse() {
    // Node k is file variable k-1.
    let bn = network("alarm");
    let id = |k: usize| VarId(k - 1);
    let region = true_neighborhood(&bn, NeighborhoodSpec { target: id(10), depth: Depth::Finite(2) });
    let mut traced = Pdag::new(bn.n_vars());
    for e in bn.dag().edges() {
        if region.nodes.contains(&e.a) || region.nodes.contains(&e.b) {
            traced.add_undirected_if_new(e.a, e.b);
            traced.orient(e.a, e.b);
        }
    }
    assert!(traced.is_arc(id(11), id(12)));
    let mut backtracked = traced.clone();
    backtracked.orient(id(12), id(11));

    let dir = tempfile::tempdir().unwrap();
    let good = write_graph(dir.path(), "fig7a.txt", &traced, bn.names());
    let bad = write_graph(dir.path(), "fig4b.txt", &backtracked, bn.names());
    let bif = network_path("alarm");
    let target = bn.name(id(10)).to_string();
    let mg = eval(&good, &bif, &target, Depth::Finite(2)).unwrap();
    let mb = eval(&bad, &bif, &target, Depth::Finite(2)).unwrap();
    assert!(mg.ar_distance < mb.ar_distance, "{mg:?} vs {mb:?}");
}

fn write_spec(dir: &Path, body: &str) -> PathBuf {
    let p = dir.join("spec.toml");
    std::fs::write(&p, body).unwrap();
    p
}

#[test]
fn bench_minimal_spec_emits_rows_and_table() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(
        dir.path(),
        &format!(
            "runs = 1\nsizes = [300]\nalgorithms = [\"apsl\"]\n[[networks]]\npath = {:?}\n",
            fixture_path("fig3")
        ),
    );
    let o = cmd_bench(&BenchArgs { spec, out: None, jobs: None }).unwrap();
    assert_eq!(o.report.rows.len(), 6);
    let lines: Vec<serde_json::Value> = o.json.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.iter().filter(|v| v["kind"] == "row").count(), 6);
    assert_eq!(lines.iter().filter(|v| v["kind"] == "aggregate").count(), 1);
    assert!(o.table.contains("fig3"));
    assert!(dir.path().join("spec.jsonl").exists() && dir.path().join("spec.manifest.json").exists());
}

#[test]
fn bench_relative_network_paths_and_named_targets() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::copy(fixture_path("fig2"), dir.path().join("f.bif")).unwrap();
    let spec = write_spec(
        dir.path(),
        "runs = 2\nsizes = [200, 400]\ndepths = [\"max\"]\ntargets = [\"T\", \"A\"]\nseed = 3\n\
         [[networks]]\nname = \"fig2\"\npath = \"f.bif\"\n",
    );
    let o = cmd_bench(&BenchArgs { spec, out: Some(dir.path().join("r")), jobs: Some(2) }).unwrap();
    assert_eq!(o.report.rows.len(), 2 * 2 * 2 * 2);
    assert_eq!(o.report.aggregates.len(), 4);
}

#[test]
fn bench_invalid_specs_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let net = fixture_path("fig2");
    for body in [
        "sizes = [100]\n".to_string(),
        format!("sizes = []\n[[networks]]\npath = {net:?}\n"),
        format!("sizes = [100]\ndepths = [0]\n[[networks]]\npath = {net:?}\n"),
        format!("sizes = [100]\nalgorithms = [\"pc\"]\n[[networks]]\npath = {net:?}\n"),
        format!("sizes = [100]\ntargets = [\"Nope\"]\n[[networks]]\npath = {net:?}\n"),
        format!("sizes = [100]\ncolour = 3\n[[networks]]\npath = {net:?}\n"),
    ] {
        let spec = write_spec(dir.path(), &body);
        let err = cmd_bench(&BenchArgs { spec, out: None, jobs: None }).unwrap_err();
        assert_eq!(err.exit_code(), 2, "{body}: {err}");
    }
}
