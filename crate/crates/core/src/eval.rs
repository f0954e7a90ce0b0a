//! Scoring of learned part-structures and benchmark sweeps.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::apsl::{run, Algorithm, ApslConfig, Depth};
use crate::bnio::{forward_sample, split_seed, top_pc_nodes, true_neighborhood, GroundTruthBn, NeighborhoodSpec, Region};
use crate::citest::{TestConfig, TestCounts};
use crate::dataset::VarId;
use crate::graph::{dag_to_cpdag, EdgeKind, Pdag};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ArMetrics {
    pub ar_precision: f64,
    pub ar_recall: f64,
    pub ar_distance: f64,
    pub n_true_edges: usize,
    pub n_predicted_edges: usize,
    pub n_correct_edges: usize,
}

impl ArMetrics {
    /// Precision is `correct / true`, recall is `correct / predicted`. A
    /// ratio with a zero denominator is 1 when both counts are 0, else 0.
    pub fn from_counts(n_correct: usize, n_true: usize, n_predicted: usize) -> Self {
        let both_empty = n_true == 0 && n_predicted == 0;
        let ratio = |num: usize, den: usize| {
            if den > 0 {
                num as f64 / den as f64
            } else if both_empty {
                1.0
            } else {
                0.0
            }
        };
        let p = ratio(n_correct, n_true);
        let r = ratio(n_correct, n_predicted);
        ArMetrics {
            ar_precision: p,
            ar_recall: r,
            ar_distance: ar_distance(p, r),
            n_true_edges: n_true,
            n_predicted_edges: n_predicted,
            n_correct_edges: n_correct,
        }
    }

    /// Score of a failed run.
    pub fn failed(n_true: usize) -> Self {
        ArMetrics {
            ar_precision: 0.0,
            ar_recall: 0.0,
            ar_distance: std::f64::consts::SQRT_2,
            n_true_edges: n_true,
            n_predicted_edges: 0,
            n_correct_edges: 0,
        }
    }
}

pub fn ar_distance(precision: f64, recall: f64) -> f64 {
    ((1.0 - precision).powi(2) + (1.0 - recall).powi(2)).sqrt()
}

/// Scores `learned` on `region` against the truth CPDAG `cpdag`.
pub fn ar_metrics_with_cpdag(learned: &Pdag, cpdag: &Pdag, region: &Region) -> ArMetrics {
    let mut predicted = 0;
    let mut correct = 0;
    for e in learned.edges() {
        if !(region.nodes.contains(&e.a) || region.nodes.contains(&e.b)) {
            continue;
        }
        predicted += 1;
        let ok = match e.kind {
            EdgeKind::Directed => region.edges.contains(&e),
            EdgeKind::Undirected => {
                cpdag.is_undirected(e.a, e.b) && region.edges.iter().any(|t| t.pair() == e.pair())
            }
        };
        correct += usize::from(ok);
    }
    ArMetrics::from_counts(correct, region.edges.len(), predicted)
}

pub fn ar_metrics(learned: &Pdag, truth: &GroundTruthBn, region: &Region) -> ArMetrics {
    let cpdag = dag_to_cpdag(truth.dag()).expect("network is a DAG");
    ar_metrics_with_cpdag(learned, &cpdag, region)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TargetSelection {
    /// Every node for depth 1, the five largest-PC nodes otherwise.
    Auto,
    All,
    LargestPc(usize),
    Named(Vec<String>),
}

#[derive(Debug, Clone)]
pub struct BenchNetwork {
    pub name: String,
    pub bn: GroundTruthBn,
}

#[derive(Debug, Clone)]
pub struct BenchSpec {
    pub networks: Vec<BenchNetwork>,
    pub sizes: Vec<usize>,
    pub depths: Vec<Depth>,
    pub algorithms: Vec<Algorithm>,
    pub runs: usize,
    pub seed: u64,
    pub targets: TargetSelection,
    pub test: TestConfig,
    pub delta: f64,
    pub pc_symmetry: bool,
    pub jobs: usize,
}

impl BenchSpec {
    /// Seed of dataset `run` for network `net` at `size`.
    pub fn dataset_seed(&self, net: usize, size: usize, run: usize) -> u64 {
        split_seed(split_seed(split_seed(self.seed, net as u64), size as u64), run as u64)
    }

    pub fn targets_for(&self, bn: &GroundTruthBn, depth: Depth) -> Result<Vec<VarId>, String> {
        Ok(match &self.targets {
            TargetSelection::Auto if depth == Depth::Finite(1) => bn.var_ids().collect(),
            TargetSelection::Auto => top_pc_nodes(bn, 5),
            TargetSelection::All => bn.var_ids().collect(),
            TargetSelection::LargestPc(k) => top_pc_nodes(bn, *k),
            TargetSelection::Named(names) => names
                .iter()
                .map(|n| bn.var_by_name(n).ok_or_else(|| format!("unknown target {n:?}")))
                .collect::<Result<_, _>>()?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub network: String,
    pub size: usize,
    pub depth: Depth,
    pub algorithm: Algorithm,
    pub run: usize,
    pub target: String,
    pub target_id: usize,
    #[serde(flatten)]
    pub metrics: ArMetrics,
    pub ci_tests: TestCounts,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip)]
    pub wall_secs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    /// Sample standard deviation; 0 for fewer than two values.
    pub fn of(xs: &[f64]) -> Self {
        let n = xs.len();
        if n == 0 {
            return MeanStd { mean: f64::NAN, std: f64::NAN };
        }
        let mean = xs.iter().sum::<f64>() / n as f64;
        let std = if n < 2 {
            0.0
        } else {
            (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        };
        MeanStd { mean, std }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchAggregate {
    pub network: String,
    pub size: usize,
    pub depth: Depth,
    pub algorithm: Algorithm,
    pub cells: usize,
    pub failures: usize,
    pub ar_distance: MeanStd,
    pub ar_precision: MeanStd,
    pub ar_recall: MeanStd,
    pub ci_tests: TestCounts,
    #[serde(skip)]
    pub wall_secs: MeanStd,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    pub aggregates: Vec<BenchAggregate>,
}

/// Groups rows by (network, size, depth, algorithm), preserving first
/// appearance order, and pools each group over every (target, dataset) cell.
pub fn aggregate(rows: &[BenchRow]) -> Vec<BenchAggregate> {
    let mut order: Vec<(String, usize, Depth, Algorithm)> = Vec::new();
    let mut groups: BTreeMap<(String, usize, Depth, Algorithm), Vec<&BenchRow>> = BTreeMap::new();
    for r in rows {
        let key = (r.network.clone(), r.size, r.depth, r.algorithm);
        if !groups.contains_key(&key) {
            order.push(key.clone());
        }
        groups.entry(key).or_default().push(r);
    }
    order
        .into_iter()
        .map(|key| {
            let g = &groups[&key];
            let col = |f: fn(&BenchRow) -> f64| g.iter().map(|r| f(r)).collect::<Vec<_>>();
            BenchAggregate {
                cells: g.len(),
                failures: g.iter().filter(|r| r.error.is_some()).count(),
                ar_distance: MeanStd::of(&col(|r| r.metrics.ar_distance)),
                ar_precision: MeanStd::of(&col(|r| r.metrics.ar_precision)),
                ar_recall: MeanStd::of(&col(|r| r.metrics.ar_recall)),
                ci_tests: g.iter().fold(TestCounts::default(), |acc, r| acc + r.ci_tests),
                wall_secs: MeanStd::of(&col(|r| r.wall_secs)),
                network: key.0,
                size: key.1,
                depth: key.2,
                algorithm: key.3,
            }
        })
        .collect()
}

impl BenchReport {
    /// One JSON object per line: rows first, then aggregates tagged with
    /// `"kind": "aggregate"`. Wall times are left out so the output is a pure
    /// function of the spec.
    pub fn to_json_lines(&self) -> String {
        let mut out = String::new();
        for r in &self.rows {
            let mut v = serde_json::to_value(r).expect("row serializes");
            v["kind"] = "row".into();
            out += &serde_json::to_string(&v).expect("json");
            out.push('\n');
        }
        for a in &self.aggregates {
            let mut v = serde_json::to_value(a).expect("aggregate serializes");
            v["kind"] = "aggregate".into();
            out += &serde_json::to_string(&v).expect("json");
            out.push('\n');
        }
        out
    }

    /// Aligned table, one line per aggregate, values as `mean±std`.
    pub fn to_table(&self) -> String {
        let mut s = String::from(
            "# mean±std pooled over all (target, dataset) cells; precision = correct/true, recall = correct/predicted\n",
        );
        let _ = writeln!(
            s,
            "{:<12} {:>6} {:>5} {:<8} {:>6} {:>12} {:>12} {:>12} {:>12} {:>10}",
            "network", "size", "depth", "algo", "cells", "Ar_Distance", "Ar_Precision", "Ar_Recall", "time(s)", "CI tests"
        );
        let pm = |m: &MeanStd| format!("{:.2}±{:.2}", m.mean, m.std);
        for a in &self.aggregates {
            let _ = writeln!(
                s,
                "{:<12} {:>6} {:>5} {:<8} {:>6} {:>12} {:>12} {:>12} {:>12} {:>10}",
                a.network,
                a.size,
                a.depth.to_string(),
                a.algorithm.to_string(),
                a.cells,
                pm(&a.ar_distance),
                pm(&a.ar_precision),
                pm(&a.ar_recall),
                format!("{:.3}±{:.3}", a.wall_secs.mean, a.wall_secs.std),
                a.ci_tests.total
            );
        }
        s
    }
}

struct Cell {
    net: usize,
    size: usize,
    run: usize,
    depth: Depth,
    algorithm: Algorithm,
    target: VarId,
}

/// Samples `runs` datasets per (network, size), runs every algorithm on every
/// target at every depth, and aggregates. Cells run on `jobs` threads; the
/// result does not depend on scheduling.
pub fn bench(spec: &BenchSpec) -> Result<BenchReport, String> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.jobs.max(1))
        .build()
        .map_err(|e| e.to_string())?;
    let mut cells = Vec::new();
    for (ni, net) in spec.networks.iter().enumerate() {
        for &depth in &spec.depths {
            let targets = spec.targets_for(&net.bn, depth)?;
            for &size in &spec.sizes {
                for run in 0..spec.runs {
                    for &algorithm in &spec.algorithms {
                        for &target in &targets {
                            cells.push(Cell { net: ni, size, run, depth, algorithm, target });
                        }
                    }
                }
            }
        }
    }
    let cpdags: Vec<Pdag> = spec
        .networks
        .iter()
        .map(|n| dag_to_cpdag(n.bn.dag()).expect("network is a DAG"))
        .collect();

    pool.install(|| {
        let mut keys: Vec<(usize, usize, usize)> = Vec::new();
        for (ni, _) in spec.networks.iter().enumerate() {
            for &size in &spec.sizes {
                for run in 0..spec.runs {
                    keys.push((ni, size, run));
                }
            }
        }
        let datasets: BTreeMap<(usize, usize, usize), crate::dataset::Dataset> = keys
            .par_iter()
            .map(|&(ni, size, run)| {
                let d = forward_sample(&spec.networks[ni].bn, size, spec.dataset_seed(ni, size, run));
                ((ni, size, run), d)
            })
            .collect();

        let mut rows: Vec<BenchRow> = cells
            .par_iter()
            .map(|c| {
                let net = &spec.networks[c.net];
                let data = &datasets[&(c.net, c.size, c.run)];
                let region = true_neighborhood(&net.bn, NeighborhoodSpec { target: c.target, depth: c.depth });
                let cfg = ApslConfig {
                    depth: c.depth,
                    algorithm: c.algorithm,
                    test: spec.test,
                    delta: spec.delta,
                    pc_symmetry: spec.pc_symmetry,
                };
                let start = Instant::now();
                let outcome = run(data, c.target, &cfg);
                let wall_secs = start.elapsed().as_secs_f64();
                let (metrics, ci_tests, error) = match outcome {
                    Ok(o) => (ar_metrics_with_cpdag(&o.run.graph, &cpdags[c.net], &region), o.tests, None),
                    Err(e) => (ArMetrics::failed(region.edges.len()), TestCounts::default(), Some(e.to_string())),
                };
                BenchRow {
                    network: net.name.clone(),
                    size: c.size,
                    depth: c.depth,
                    algorithm: c.algorithm,
                    run: c.run,
                    target: net.bn.name(c.target).to_string(),
                    target_id: c.target.0,
                    metrics,
                    ci_tests,
                    error,
                    wall_secs,
                }
            })
            .collect();
        let net_index: BTreeMap<&str, usize> =
            spec.networks.iter().enumerate().map(|(i, n)| (n.name.as_str(), i)).collect();
        rows.sort_by(|a, b| {
            (net_index[a.network.as_str()], a.size, a.depth, a.algorithm, a.run, a.target_id).cmp(&(
                net_index[b.network.as_str()],
                b.size,
                b.depth,
                b.algorithm,
                b.run,
                b.target_id,
            ))
        });
        let aggregates = aggregate(&rows);
        Ok(BenchReport { rows, aggregates })
    })
}
