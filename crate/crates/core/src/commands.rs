//! Command implementations behind the `apsl` binary.
//!
//! Every command writes its artifacts next to a JSON [`RunManifest`] holding
//! the configuration, SHA-256 digests of the inputs and the tool version.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::apsl::{run, Algorithm, ApslConfig, Depth};
use crate::bnio::{forward_sample, parse_bif, true_neighborhood, GroundTruthBn, NeighborhoodSpec};
use crate::citest::{TestConfig, TestCounts};
use crate::dataset::{Dataset, VarId};
use crate::eval::{ar_metrics, bench, ArMetrics, BenchNetwork, BenchReport, BenchSpec, TargetSelection};
use crate::graph::Pdag;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Error)]
pub enum CmdError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {msg}")]
    Input { path: PathBuf, msg: String },
    #[error("{0}")]
    Internal(String),
}

impl CmdError {
    /// 2 for usage and input errors, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CmdError::Usage(_) | CmdError::Input { .. } => 2,
            CmdError::Internal(_) => 1,
        }
    }

    fn input(path: &Path, msg: impl fmt::Display) -> Self {
        CmdError::Input { path: path.to_path_buf(), msg: msg.to_string() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ManifestConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_cond_size: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reliability_factor: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub adjust_dof: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pc_symmetry: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub depth: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub algorithm: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub backend: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub jobs: Option<usize>,
}

impl ManifestConfig {
    fn from_test(test: &TestConfig) -> Self {
        ManifestConfig {
            alpha: Some(test.alpha),
            max_cond_size: test.max_cond_size,
            reliability_factor: Some(test.reliability_factor),
            adjust_dof: Some(test.adjust_dof),
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config: ManifestConfig,
    pub inputs: Vec<InputDigest>,
    pub outputs: Vec<String>,
    pub tool_version: String,
    pub wall_secs: f64,
}

impl RunManifest {
    fn write(&self, path: &Path) -> Result<(), CmdError> {
        let text = serde_json::to_string_pretty(self).map_err(|e| CmdError::Internal(e.to_string()))?;
        write_file(path, &(text + "\n"))
    }
}

/// Manifest path for an artifact: `out.csv` becomes `out.manifest.json`.
pub fn manifest_path(artifact: &Path) -> PathBuf {
    artifact.with_extension("manifest.json")
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn read_input(path: &Path) -> Result<(String, InputDigest), CmdError> {
    let bytes = fs::read(path).map_err(|e| CmdError::input(path, e))?;
    let digest = InputDigest { path: path.display().to_string(), sha256: sha256_hex(&bytes) };
    let text = String::from_utf8(bytes).map_err(|e| CmdError::input(path, e))?;
    Ok((text, digest))
}

fn write_file(path: &Path, contents: &str) -> Result<(), CmdError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CmdError::Internal(format!("{}: {e}", dir.display())))?;
    }
    fs::write(path, contents).map_err(|e| CmdError::Internal(format!("{}: {e}", path.display())))
}

fn load_bif(path: &Path) -> Result<(GroundTruthBn, InputDigest), CmdError> {
    let (text, digest) = read_input(path)?;
    let bn = parse_bif(&text).map_err(|e| CmdError::input(path, e))?;
    Ok((bn, digest))
}

/// Up to three names closest to `query` by edit distance.
pub fn nearest_names<'a>(query: &str, names: impl IntoIterator<Item = &'a String>) -> Vec<String> {
    let q = query.to_lowercase();
    let mut scored: Vec<(usize, &String)> =
        names.into_iter().map(|n| (strsim::levenshtein(&q, &n.to_lowercase()), n)).collect();
    scored.sort();
    scored.into_iter().take(3).map(|(_, n)| n.clone()).collect()
}

fn resolve_target(name: &str, names: &[String], lookup: Option<VarId>) -> Result<VarId, CmdError> {
    lookup.ok_or_else(|| {
        CmdError::Usage(format!(
            "unknown target {name:?}; nearest names: {}",
            nearest_names(name, names).join(", ")
        ))
    })
}

fn backend_name(a: Algorithm) -> &'static str {
    match a {
        Algorithm::Apsl => "hiton-mb",
        Algorithm::ApslFs => "mb-fs",
    }
}

fn check_config(test: &TestConfig, delta: f64) -> Result<(), CmdError> {
    if !(test.alpha > 0.0 && test.alpha < 1.0) {
        return Err(CmdError::Usage(format!("alpha must lie in (0, 1), got {}", test.alpha)));
    }
    if !(0.0..=1.0).contains(&delta) {
        return Err(CmdError::Usage(format!("delta must lie in [0, 1], got {delta}")));
    }
    if !(test.reliability_factor >= 0.0) {
        return Err(CmdError::Usage("reliability factor must be non-negative".into()));
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct SampleArgs {
    pub bif: PathBuf,
    pub n: usize,
    pub seed: u64,
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleSummary {
    pub rows: usize,
    pub columns: usize,
    pub out: PathBuf,
    pub manifest: PathBuf,
}

impl fmt::Display for SampleSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "wrote {} rows x {} columns to {}", self.rows, self.columns, self.out.display())
    }
}

/// Samples `n` rows from a BIF network into a CSV file.
pub fn cmd_sample(args: &SampleArgs) -> Result<SampleSummary, CmdError> {
    let start = Instant::now();
    if args.n == 0 {
        return Err(CmdError::Usage("--n must be at least 1".into()));
    }
    let (bn, digest) = load_bif(&args.bif)?;
    let data = forward_sample(&bn, args.n, args.seed);
    write_file(&args.out, &data.to_csv())?;
    let manifest = manifest_path(&args.out);
    RunManifest {
        command: "sample".into(),
        config: ManifestConfig { n: Some(args.n), seed: Some(args.seed), ..Default::default() },
        inputs: vec![digest],
        outputs: vec![args.out.display().to_string()],
        tool_version: TOOL_VERSION.into(),
        wall_secs: start.elapsed().as_secs_f64(),
    }
    .write(&manifest)?;
    Ok(SampleSummary { rows: data.n_rows(), columns: data.n_vars(), out: args.out.clone(), manifest })
}

#[derive(Debug, Clone)]
pub struct LearnArgs {
    pub data: PathBuf,
    pub target: String,
    pub depth: Depth,
    pub algorithm: Algorithm,
    pub test: TestConfig,
    pub delta: f64,
    pub pc_symmetry: bool,
    pub seed: u64,
    /// Output prefix; defaults to the data path without extension plus the target name.
    pub out: Option<PathBuf>,
}

impl LearnArgs {
    pub fn new(data: impl Into<PathBuf>, target: impl Into<String>) -> Self {
        let d = ApslConfig::default();
        LearnArgs {
            data: data.into(),
            target: target.into(),
            depth: d.depth,
            algorithm: d.algorithm,
            test: d.test,
            delta: d.delta,
            pc_symmetry: d.pc_symmetry,
            seed: 0,
            out: None,
        }
    }

    fn prefix(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| {
            let stem = self.data.with_extension("");
            let mut s = stem.into_os_string();
            s.push(format!(".{}", self.target));
            PathBuf::from(s)
        })
    }
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LearnSummary {
    pub graph: Pdag,
    pub names: Vec<String>,
    pub algorithm: Algorithm,
    pub tests: TestCounts,
    pub wall_secs: f64,
    pub edge_list: PathBuf,
    pub adjacency: PathBuf,
    pub manifest: PathBuf,
}

impl fmt::Display for LearnSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{}: {} edges ({} directed, {} undirected)",
            self.algorithm,
            self.graph.n_edges(),
            self.graph.n_directed(),
            self.graph.n_undirected()
        )?;
        writeln!(
            f,
            "CI tests: {} total, {} conditional, {} conditional during PC discovery",
            self.tests.total, self.tests.conditional, self.tests.pc_conditional
        )?;
        writeln!(f, "wall time: {:.3}s", self.wall_secs)?;
        write!(f, "wrote {} and {}", self.edge_list.display(), self.adjacency.display())
    }
}

/// Learns the structure around a named target from a CSV dataset.
pub fn cmd_learn(args: &LearnArgs) -> Result<LearnSummary, CmdError> {
    let start = Instant::now();
    check_config(&args.test, args.delta)?;
    let (text, digest) = read_input(&args.data)?;
    let data = Dataset::load_csv(&text).map_err(|e| CmdError::input(&args.data, e))?;
    let t = resolve_target(&args.target, data.names(), data.var_by_name(&args.target))?;
    let cfg = ApslConfig {
        depth: args.depth,
        algorithm: args.algorithm,
        test: args.test,
        delta: args.delta,
        pc_symmetry: args.pc_symmetry,
    };
    let outcome = run(&data, t, &cfg).map_err(|e| CmdError::Internal(e.to_string()))?;
    let wall_secs = start.elapsed().as_secs_f64();

    let graph = outcome.run.graph;
    let prefix = args.prefix();
    let edge_list = with_suffix(&prefix, ".edges.txt");
    let adjacency = with_suffix(&prefix, ".adj.csv");
    let manifest = with_suffix(&prefix, ".manifest.json");
    write_file(&edge_list, &graph.to_edge_list(data.names()))?;
    write_file(&adjacency, &graph.to_adjacency_csv(data.names()))?;
    let mut config = ManifestConfig::from_test(&args.test);
    config.delta = Some(args.delta);
    config.pc_symmetry = Some(args.pc_symmetry);
    config.depth = Some(args.depth.to_string());
    config.algorithm = Some(args.algorithm.to_string());
    config.backend = Some(backend_name(args.algorithm).into());
    config.target = Some(args.target.clone());
    config.seed = Some(args.seed);
    RunManifest {
        command: "learn".into(),
        config,
        inputs: vec![digest],
        outputs: vec![edge_list.display().to_string(), adjacency.display().to_string()],
        tool_version: TOOL_VERSION.into(),
        wall_secs,
    }
    .write(&manifest)?;
    Ok(LearnSummary {
        graph,
        names: data.names().to_vec(),
        algorithm: args.algorithm,
        tests: outcome.tests,
        wall_secs,
        edge_list,
        adjacency,
        manifest,
    })
}

#[derive(Debug, Clone)]
pub struct EvalArgs {
    pub graph: PathBuf,
    pub bif: PathBuf,
    pub target: String,
    pub depth: Depth,
    /// Optional JSON output file; a manifest is written beside it.
    pub out: Option<PathBuf>,
}

/// Reads a learned graph as an edge list, or as an adjacency matrix when the
/// file ends in `.csv`, indexed by the network's variables.
pub fn read_graph(path: &Path, text: &str, names: &[String]) -> Result<Pdag, CmdError> {
    let is_csv = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    if !is_csv {
        return Pdag::from_edge_list(text, names).map_err(|e| CmdError::input(path, e));
    }
    let (file_names, g) = Pdag::from_adjacency_csv(text).map_err(|e| CmdError::input(path, e))?;
    let index: Vec<usize> = file_names
        .iter()
        .map(|n| {
            names
                .iter()
                .position(|m| m == n)
                .ok_or_else(|| CmdError::input(path, format!("unknown variable {n:?}")))
        })
        .collect::<Result<_, _>>()?;
    let mut out = Pdag::new(names.len());
    for e in g.edges() {
        let (a, b) = (VarId(index[e.a.0]), VarId(index[e.b.0]));
        out.add_undirected_if_new(a, b);
        if g.is_arc(e.a, e.b) {
            out.orient(a, b);
        }
    }
    Ok(out)
}

/// Scores a learned graph on the true depth-K region around a target.
pub fn cmd_eval(args: &EvalArgs) -> Result<ArMetrics, CmdError> {
    let start = Instant::now();
    let (bn, bif_digest) = load_bif(&args.bif)?;
    let (text, graph_digest) = read_input(&args.graph)?;
    let learned = read_graph(&args.graph, &text, bn.names())?;
    let t = resolve_target(&args.target, bn.names(), bn.var_by_name(&args.target))?;
    let region = true_neighborhood(&bn, NeighborhoodSpec { target: t, depth: args.depth });
    let metrics = ar_metrics(&learned, &bn, &region);
    if let Some(out) = &args.out {
        write_file(out, &(metrics_json(&metrics) + "\n"))?;
        RunManifest {
            command: "eval".into(),
            config: ManifestConfig {
                depth: Some(args.depth.to_string()),
                target: Some(args.target.clone()),
                ..Default::default()
            },
            inputs: vec![graph_digest, bif_digest],
            outputs: vec![out.display().to_string()],
            tool_version: TOOL_VERSION.into(),
            wall_secs: start.elapsed().as_secs_f64(),
        }
        .write(&manifest_path(out))?;
    }
    Ok(metrics)
}

pub fn metrics_json(m: &ArMetrics) -> String {
    serde_json::to_string_pretty(m).expect("metrics serialize")
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum DepthValue {
    Int(i64),
    Text(String),
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum CondSizeValue {
    Int(i64),
    Text(String),
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum TargetsValue {
    Keyword(String),
    Names(Vec<String>),
    Largest { largest_pc: usize },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct NetworkEntry {
    name: Option<String>,
    path: PathBuf,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecFile {
    networks: Vec<NetworkEntry>,
    sizes: Vec<usize>,
    #[serde(default)]
    depths: Option<Vec<DepthValue>>,
    #[serde(default)]
    algorithms: Option<Vec<String>>,
    #[serde(default)]
    runs: Option<usize>,
    #[serde(default)]
    seed: Option<u64>,
    #[serde(default)]
    targets: Option<TargetsValue>,
    #[serde(default)]
    alpha: Option<f64>,
    #[serde(default)]
    delta: Option<f64>,
    #[serde(default)]
    max_cond_size: Option<CondSizeValue>,
    #[serde(default)]
    reliability_factor: Option<f64>,
    #[serde(default)]
    adjust_dof: Option<bool>,
    #[serde(default)]
    pc_symmetry: Option<bool>,
    #[serde(default)]
    jobs: Option<usize>,
}

/// A parsed bench spec plus the digests of the networks it loaded.
#[derive(Debug, Clone)]
pub struct LoadedSpec {
    pub spec: BenchSpec,
    pub inputs: Vec<InputDigest>,
}

/// Parses a TOML bench spec. Network paths are resolved against `base`.
pub fn parse_bench_spec(text: &str, base: &Path) -> Result<LoadedSpec, CmdError> {
    let raw: SpecFile = toml::from_str(text).map_err(|e| CmdError::Usage(format!("invalid bench spec: {e}")))?;
    let usage = |m: String| CmdError::Usage(format!("invalid bench spec: {m}"));
    if raw.networks.is_empty() {
        return Err(usage("no networks".into()));
    }
    if raw.sizes.is_empty() || raw.sizes.contains(&0) {
        return Err(usage("sizes must be a non-empty list of positive counts".into()));
    }
    let depths = match raw.depths {
        None => vec![Depth::Finite(1)],
        Some(ds) => ds
            .into_iter()
            .map(|d| match d {
                DepthValue::Int(k) if k >= 1 => Ok(Depth::Finite(k as usize)),
                DepthValue::Int(k) => Err(usage(format!("depth {k} is not positive"))),
                DepthValue::Text(s) => s.parse::<Depth>().map_err(|e| usage(e.to_string())),
            })
            .collect::<Result<Vec<_>, _>>()?,
    };
    let algorithms = match raw.algorithms {
        None => vec![Algorithm::Apsl, Algorithm::ApslFs],
        Some(a) => a
            .iter()
            .map(|s| s.parse::<Algorithm>().map_err(|e| usage(e.to_string())))
            .collect::<Result<Vec<_>, _>>()?,
    };
    if depths.is_empty() || algorithms.is_empty() {
        return Err(usage("depths and algorithms must be non-empty".into()));
    }
    let targets = match raw.targets {
        None => TargetSelection::Auto,
        Some(TargetsValue::Keyword(k)) => match k.to_ascii_lowercase().as_str() {
            "auto" => TargetSelection::Auto,
            "all" => TargetSelection::All,
            _ => return Err(usage(format!("unknown targets keyword {k:?}"))),
        },
        Some(TargetsValue::Names(n)) => TargetSelection::Named(n),
        Some(TargetsValue::Largest { largest_pc }) => TargetSelection::LargestPc(largest_pc),
    };
    let defaults = ApslConfig::default();
    let mut test = defaults.test;
    if let Some(a) = raw.alpha {
        test.alpha = a;
    }
    if let Some(r) = raw.reliability_factor {
        test.reliability_factor = r;
    }
    if let Some(adj) = raw.adjust_dof {
        test.adjust_dof = adj;
    }
    match raw.max_cond_size {
        None => {}
        Some(CondSizeValue::Int(k)) if k >= 0 => test.max_cond_size = Some(k as usize),
        Some(CondSizeValue::Text(s)) if s.eq_ignore_ascii_case("none") => test.max_cond_size = None,
        Some(_) => return Err(usage("max_cond_size must be a non-negative integer or \"none\"".into())),
    }
    let delta = raw.delta.unwrap_or(defaults.delta);
    check_config(&test, delta)?;

    let mut networks = Vec::new();
    let mut inputs = Vec::new();
    for entry in raw.networks {
        let path = base.join(&entry.path);
        let (bn, digest) = load_bif(&path)?;
        let name = entry.name.unwrap_or_else(|| {
            entry.path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
        });
        if networks.iter().any(|n: &BenchNetwork| n.name == name) {
            return Err(usage(format!("duplicate network name {name:?}")));
        }
        networks.push(BenchNetwork { name, bn });
        inputs.push(digest);
    }
    let spec = BenchSpec {
        networks,
        sizes: raw.sizes,
        depths,
        algorithms,
        runs: raw.runs.unwrap_or(10),
        seed: raw.seed.unwrap_or(0),
        targets,
        test,
        delta,
        pc_symmetry: raw.pc_symmetry.unwrap_or(defaults.pc_symmetry),
        jobs: raw.jobs.unwrap_or(1),
    };
    if spec.runs == 0 {
        return Err(usage("runs must be at least 1".into()));
    }
    for net in &spec.networks {
        for &d in &spec.depths {
            spec.targets_for(&net.bn, d).map_err(|e| usage(format!("network {}: {e}", net.name)))?;
        }
    }
    Ok(LoadedSpec { spec, inputs })
}

#[derive(Debug, Clone)]
pub struct BenchArgs {
    pub spec: PathBuf,
    /// Output prefix; defaults to the spec path without extension.
    pub out: Option<PathBuf>,
    /// Overrides the spec's `jobs`.
    pub jobs: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct BenchOutcome {
    pub report: BenchReport,
    pub json: String,
    pub table: String,
    pub json_path: PathBuf,
    pub table_path: PathBuf,
    pub manifest: PathBuf,
}

/// Runs a bench spec and writes `<prefix>.jsonl`, `<prefix>.txt` and a manifest.
pub fn cmd_bench(args: &BenchArgs) -> Result<BenchOutcome, CmdError> {
    let start = Instant::now();
    let (text, spec_digest) = read_input(&args.spec)?;
    let base = args.spec.parent().unwrap_or(Path::new("."));
    let LoadedSpec { mut spec, inputs } = parse_bench_spec(&text, base)?;
    if let Some(j) = args.jobs {
        spec.jobs = j.max(1);
    }
    let report = bench(&spec).map_err(CmdError::Usage)?;
    let json = report.to_json_lines();
    let table = report.to_table();
    let prefix = args.out.clone().unwrap_or_else(|| args.spec.with_extension(""));
    let json_path = with_suffix(&prefix, ".jsonl");
    let table_path = with_suffix(&prefix, ".txt");
    let manifest = with_suffix(&prefix, ".manifest.json");
    write_file(&json_path, &json)?;
    write_file(&table_path, &table)?;
    let mut config = ManifestConfig::from_test(&spec.test);
    config.delta = Some(spec.delta);
    config.pc_symmetry = Some(spec.pc_symmetry);
    config.seed = Some(spec.seed);
    config.jobs = Some(spec.jobs);
    config.depth = Some(spec.depths.iter().map(Depth::to_string).collect::<Vec<_>>().join(","));
    config.algorithm = Some(spec.algorithms.iter().map(Algorithm::to_string).collect::<Vec<_>>().join(","));
    config.backend =
        Some(spec.algorithms.iter().map(|&a| backend_name(a)).collect::<Vec<_>>().join(","));
    let mut all_inputs = vec![spec_digest];
    all_inputs.extend(inputs);
    RunManifest {
        command: "bench".into(),
        config,
        inputs: all_inputs,
        outputs: vec![json_path.display().to_string(), table_path.display().to_string()],
        tool_version: TOOL_VERSION.into(),
        wall_secs: start.elapsed().as_secs_f64(),
    }
    .write(&manifest)?;
    Ok(BenchOutcome { report, json, table, json_path, table_path, manifest })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digest_of_empty_input() {
        assert_eq!(sha256_hex(b""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    }

    #[test]
    fn nearest_names_ranks_by_edit_distance() {
        let names: Vec<String> = ["HR", "HRBP", "HREKG", "PRESS"].iter().map(|s| s.to_string()).collect();
        assert_eq!(nearest_names("hrekq", &names), vec!["HREKG", "HR", "HRBP"]);
    }

    #[test]
    fn manifest_sits_beside_artifact() {
        assert_eq!(manifest_path(Path::new("out/child.csv")), PathBuf::from("out/child.manifest.json"));
    }

    #[test]
    fn exit_codes() {
        assert_eq!(CmdError::Usage("x".into()).exit_code(), 2);
        assert_eq!(CmdError::input(Path::new("a"), "b").exit_code(), 2);
        assert_eq!(CmdError::Internal("x".into()).exit_code(), 1);
    }
}
