//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use apsl_core::apsl::{apsl, apsl_fs, learn_with_oracle, run, Algorithm, ApslConfig, Depth};
use apsl_core::bnio::{forward_sample, split_seed, true_neighborhood, GroundTruthBn, NeighborhoodSpec};
use apsl_core::citest::g2_test;
use apsl_core::commands::{cmd_bench, BenchArgs};
use apsl_core::eval::{ar_metrics, bench, ArMetrics, BenchNetwork, BenchSpec, TargetSelection};
use apsl_core::graph::{dag_to_cpdag, v_structures};
use apsl_core::{Dataset, DsepOracle, Pdag, TestConfig, VarId};
use common::{all_dags, component, fixture, network, network_path};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn v(k: usize) -> VarId {
    VarId(k)
}

fn oracle_matches(dag: &Pdag) -> Result<(), String> {
    let cpdag = dag_to_cpdag(dag).map_err(|e| e.to_string())?;
    let oracle = DsepOracle::new(dag).map_err(|e| e.to_string())?;
    for t in dag.vars() {
        let learned = learn_with_oracle(&oracle, t, Depth::Max).map_err(|e| e.to_string())?.graph;
        let keep = component(dag, t);
        if learned.restricted_to(&keep) != cpdag.restricted_to(&keep) {
            return Err(format!("target {t} on {:?}", dag.edges()));
        }
    }
    Ok(())
}

fn criterion_1() -> Outcome {
    for name in ["fig2", "fig3"] {
        oracle_matches(fixture(name).dag()).map_err(|e| format!("{name}: {e}"))?;
    }
    let mut checked = 0;
    for n in 1..=5 {
        for dag in all_dags(n, 6) {
            oracle_matches(&dag)?;
            checked += 1;
        }
    }
    Ok(format!("fig2, fig3 and {checked} enumerated DAGs, every target"))
}

/// Union of the class: arcs shared by every member stay directed, other
/// adjacencies become undirected.
fn class_union(members: &[&Pdag]) -> Pdag {
    let n = members[0].n();
    let mut g = Pdag::new(n);
    for a in 0..n {
        for b in a + 1..n {
            if !members[0].is_adjacent(v(a), v(b)) {
                continue;
            }
            g.add_undirected_if_new(v(a), v(b));
            if members.iter().all(|m| m.is_arc(v(a), v(b))) {
                g.orient(v(a), v(b));
            } else if members.iter().all(|m| m.is_arc(v(b), v(a))) {
                g.orient(v(b), v(a));
            }
        }
    }
    g
}

fn criterion_2() -> Outcome {
    let mut total = 0;
    let mut classes_seen = 0;
    for n in 1..=4 {
        let dags = all_dags(n, usize::MAX);
        let mut classes: BTreeMap<(Vec<(VarId, VarId)>, Vec<(VarId, VarId, VarId)>), Vec<&Pdag>> = BTreeMap::new();
        for d in &dags {
            let skel = d.skeleton().edges().iter().map(|e| e.pair()).collect();
            let vs = v_structures(d).into_iter().collect();
            classes.entry((skel, vs)).or_default().push(d);
        }
        for members in classes.values() {
            let union = class_union(members);
            for d in members {
                let cpdag = dag_to_cpdag(d).map_err(|e| e.to_string())?;
                if cpdag != union {
                    return Err(format!("mismatch on {:?}", d.edges()));
                }
            }
        }
        total += dags.len();
        classes_seen += classes.len();
    }
    Ok(format!("{total} DAGs in {classes_seen} classes"))
}

fn criterion_3() -> Outcome {
    let bn = fixture("fig2");
    let data = forward_sample(&bn, 50_000, 2024);
    let t = bn.var_by_name("T").unwrap();
    let cfg = ApslConfig::default();
    let region = true_neighborhood(&bn, NeighborhoodSpec { target: t, depth: Depth::Max });
    let a = apsl(&data, t, &cfg).map_err(|e| e.to_string())?;
    let f = apsl_fs(&data, t, &cfg).map_err(|e| e.to_string())?;
    let (ma, mf) = (ar_metrics(&a, &bn, &region), ar_metrics(&f, &bn, &region));
    let detail = format!("apsl {:.3}, apsl-fs {:.3}", ma.ar_distance, mf.ar_distance);
    if ma.ar_distance == 0.0 && mf.ar_distance == 0.0 && &a == bn.dag() && &f == bn.dag() {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion_4() -> Outcome {
    let bn = network("alarm");
    let data = forward_sample(&bn, 50_000, 0);
    let mut cfg = ApslConfig { depth: Depth::Finite(2), pc_symmetry: false, ..Default::default() };
    cfg.test.adjust_dof = true;
    // Nodes are numbered from 1 in file order.
    let id = |k: usize| v(k - 1);
    let g10 = apsl(&data, id(10), &cfg).map_err(|e| e.to_string())?;
    let g26 = apsl(&data, id(26), &cfg).map_err(|e| e.to_string())?;
    let checks = [
        ("11->12<-35", g10.is_arc(id(11), id(12)) && g10.is_arc(id(35), id(12))),
        ("11->10<-35", g10.is_arc(id(11), id(10)) && g10.is_arc(id(35), id(10))),
        ("25->31<-17", g26.is_arc(id(25), id(31)) && g26.is_arc(id(17), id(31))),
        (
            "25,30,17->26",
            g26.is_arc(id(25), id(26)) && g26.is_arc(id(30), id(26)) && g26.is_arc(id(17), id(26)),
        ),
    ];
    let missing: Vec<&str> = checks.iter().filter(|c| !c.1).map(|c| c.0).collect();
    if missing.is_empty() {
        Ok("all traced arcs present".into())
    } else {
        Err(format!("missing {}", missing.join(", ")))
    }
}

fn jobs() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn criterion_5() -> Outcome {
    let test = TestConfig { adjust_dof: true, ..TestConfig::default() };
    let spec = BenchSpec {
        networks: vec![BenchNetwork { name: "child".into(), bn: network("child") }],
        sizes: vec![1000],
        depths: vec![Depth::Finite(1)],
        algorithms: vec![Algorithm::Apsl, Algorithm::ApslFs],
        runs: 10,
        seed: 2024,
        targets: TargetSelection::All,
        test,
        delta: 0.05,
        pc_symmetry: false,
        jobs: jobs(),
    };
    let report = bench(&spec)?;
    let mean = |a: Algorithm| report.aggregates.iter().find(|x| x.algorithm == a).unwrap().ar_distance.clone();
    let (ma, mf) = (mean(Algorithm::Apsl), mean(Algorithm::ApslFs));
    let ok_a = (ma.mean - 0.45).abs() <= 0.15;
    let ok_f = (mf.mean - 0.37).abs() <= 0.15;
    let detail = format!(
        "APSL {:.3}±{:.3} (target 0.45±0.15) {}, APSL-FS {:.3}±{:.3} (target 0.37±0.15) {}",
        ma.mean,
        ma.std,
        if ok_a { "ok" } else { "out of range" },
        mf.mean,
        mf.std,
        if ok_f { "ok" } else { "out of range" }
    );
    if ok_a && ok_f {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion_6() -> Outcome {
    let bn = network("alarm");
    let data = forward_sample(&bn, 1000, 2024);
    let mut totals = BTreeMap::new();
    for algorithm in [Algorithm::Apsl, Algorithm::ApslFs] {
        let cfg = ApslConfig { depth: Depth::Finite(1), algorithm, ..Default::default() };
        let start = Instant::now();
        let mut pc_conditional = 0;
        for t in bn.var_ids() {
            pc_conditional += run(&data, t, &cfg).map_err(|e| e.to_string())?.tests.pc_conditional;
        }
        totals.insert(algorithm, (pc_conditional, start.elapsed().as_secs_f64()));
    }
    let (a, f) = (totals[&Algorithm::Apsl], totals[&Algorithm::ApslFs]);
    let detail = format!(
        "conditional PC tests {} vs {}, wall {:.3}s vs {:.3}s (APSL-FS vs APSL)",
        f.0, a.0, f.1, a.1
    );
    if f.0 < a.0 && f.1 < a.1 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion_7() -> Outcome {
    let cfg = TestConfig::default();
    let mut rejections = 0;
    for trial in 0..1000u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(split_seed(7, trial));
        let cols: Vec<Vec<u32>> = (0..2).map(|_| (0..10_000).map(|_| rng.random_range(0..2)).collect()).collect();
        let d = Dataset::from_columns(vec!["x".into(), "y".into()], vec![2, 2], cols).unwrap();
        if !g2_test(&d, v(0), v(1), &[], &cfg).map_err(|e| e.to_string())?.independent {
            rejections += 1;
        }
    }
    let rate = rejections as f64 / 1000.0;
    let detail = format!("rejection rate {rate:.3}");
    if (0.003..=0.025).contains(&rate) {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion_8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..100_000 {
        let n_true = rng.random_range(0..50usize);
        let n_pred = rng.random_range(0..50usize);
        let correct = rng.random_range(0..=n_true.min(n_pred));
        let m = ArMetrics::from_counts(correct, n_true, n_pred);
        let closed = ((1.0 - m.ar_precision).powi(2) + (1.0 - m.ar_recall).powi(2)).sqrt();
        if (m.ar_distance - closed).abs() > 1e-12 {
            return Err(format!("counts ({correct}, {n_true}, {n_pred})"));
        }
    }
    let bn = fixture("fig2");
    let t = bn.var_by_name("T").unwrap();
    let region = true_neighborhood(&bn, NeighborhoodSpec { target: t, depth: Depth::Max });
    let perfect = ar_metrics(bn.dag(), &bn, &region);
    let empty = ar_metrics(&Pdag::new(bn.n_vars()), &bn, &region);
    let half = ArMetrics::from_counts(1, 2, 2);
    let ok = perfect.ar_distance == 0.0
        && (perfect.ar_precision, perfect.ar_recall) == (1.0, 1.0)
        && (empty.ar_precision, empty.ar_recall) == (0.0, 0.0)
        && empty.ar_distance == 2f64.sqrt()
        && (half.ar_precision, half.ar_recall) == (0.5, 0.5)
        && half.ar_distance == 0.5f64.sqrt();
    if ok {
        Ok("100000 fuzzed count triples and the three worked examples".into())
    } else {
        Err(format!("examples: {perfect:?} {empty:?} {half:?}"))
    }
}

fn root_tv(bn: &GroundTruthBn, seed: u64) -> f64 {
    let data = forward_sample(bn, 100_000, seed);
    let mut worst: f64 = 0.0;
    for r in bn.var_ids().filter(|&r| bn.parents(r).is_empty()) {
        let mut counts = vec![0usize; bn.cardinality(r)];
        for &c in data.column(r) {
            counts[c as usize] += 1;
        }
        let tv: f64 = bn
            .cpt(r)
            .iter()
            .zip(&counts)
            .map(|(p, &c)| (c as f64 / data.n_rows() as f64 - p).abs())
            .sum::<f64>()
            / 2.0;
        worst = worst.max(tv);
    }
    worst
}

fn criterion_9() -> Outcome {
    let mut worst: f64 = 0.0;
    for name in ["child", "insurance", "alarm"] {
        let bn = network(name);
        for seed in [1, 2, 3] {
            worst = worst.max(root_tv(&bn, seed));
        }
    }
    let detail = format!("largest root total variation {worst:.4}");
    if worst < 0.01 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion_10() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let spec = dir.path().join("spec.toml");
    let text = format!(
        "seed = 99\nruns = 2\nsizes = [300]\ndepths = [1, 2]\nalgorithms = [\"apsl\", \"apsl-fs\"]\njobs = 4\n\
         targets = {{ largest_pc = 4 }}\n[[networks]]\nname = \"child\"\npath = {:?}\n",
        network_path("child")
    );
    std::fs::write(&spec, text).map_err(|e| e.to_string())?;
    let mut outputs = Vec::new();
    for (i, jobs) in [None, None, Some(1)].into_iter().enumerate() {
        let out = dir.path().join(format!("run{i}"));
        let o = cmd_bench(&BenchArgs { spec: spec.clone(), out: Some(out), jobs }).map_err(|e| e.to_string())?;
        outputs.push(std::fs::read(&o.json_path).map_err(|e| e.to_string())?);
    }
    let identical: BTreeSet<&Vec<u8>> = outputs.iter().collect();
    if identical.len() == 1 {
        Ok(format!("{} bytes, identical across two runs and a single-threaded rerun", outputs[0].len()))
    } else {
        Err("JSON reports differ".into())
    }
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("oracle exactness", criterion_1),
        ("CPDAG brute-force equivalence", criterion_2),
        ("statistical recovery on fig2", criterion_3),
        ("ALARM V-structure traces", criterion_4),
        ("Child depth-1 ballpark", criterion_5),
        ("efficiency ordering on Alarm", criterion_6),
        ("G2 calibration", criterion_7),
        ("metric formula", criterion_8),
        ("sampler fidelity", criterion_9),
        ("bench determinism", criterion_10),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = f();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(d) => println!("criterion {:>2} PASS {name}: {d} [{secs:.1}s]", i + 1),
            Err(d) => {
                failed += 1;
                println!("criterion {:>2} FAIL {name}: {d} [{secs:.1}s]", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
