//! The any-part learner.
//!
//! Starting from a target, Markov blankets are expanded breadth first. Each
//! popped node contributes its PC edges, orients the V-structures implied by
//! its spouses (it is a parent of the collider), tests pairs of its PC members
//! for V-structures at itself, and the Meek rules propagate. A layer countdown
//! tracks how far the expansion has gone; once the requested depth is passed
//! and every edge at the boundary layer is oriented, the run stops.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::citest::{CiError, CiTest, G2Test, Phase, TestConfig, TestCounts};
use crate::dataset::{Dataset, VarId};
use crate::graph::Pdag;
use crate::localdiscovery::{
    dependent_or_refused, FcbfBackend, HitonBackend, MbBackend, MbResult, PcCache, VarSet,
};

/// Expansion depth: a positive layer count or the whole network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Depth {
    Finite(usize),
    Max,
}

impl Depth {
    pub fn new(k: usize) -> Result<Depth, LearnError> {
        if k == 0 {
            Err(LearnError::Depth("depth must be at least 1".into()))
        } else {
            Ok(Depth::Finite(k))
        }
    }

    pub fn finite(self) -> Option<usize> {
        match self {
            Depth::Finite(k) => Some(k),
            Depth::Max => None,
        }
    }
}

impl fmt::Display for Depth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Depth::Finite(k) => write!(f, "{k}"),
            Depth::Max => f.write_str("max"),
        }
    }
}

impl FromStr for Depth {
    type Err = LearnError;

    fn from_str(s: &str) -> Result<Depth, LearnError> {
        if s.eq_ignore_ascii_case("max") {
            return Ok(Depth::Max);
        }
        let k: usize = s
            .parse()
            .map_err(|_| LearnError::Depth(format!("expected a positive integer or \"max\", got {s:?}")))?;
        Depth::new(k)
    }
}

impl serde::Serialize for Depth {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Depth::Finite(k) => s.serialize_u64(*k as u64),
            Depth::Max => s.serialize_str("max"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    /// HITON-MB backend.
    Apsl,
    /// FCBF / MB-FS backend.
    ApslFs,
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algorithm::Apsl => "apsl",
            Algorithm::ApslFs => "apsl-fs",
        })
    }
}

impl FromStr for Algorithm {
    type Err = LearnError;

    fn from_str(s: &str) -> Result<Algorithm, LearnError> {
        match s.to_ascii_lowercase().as_str() {
            "apsl" => Ok(Algorithm::Apsl),
            "apsl-fs" | "apsl_fs" | "apslfs" => Ok(Algorithm::ApslFs),
            _ => Err(LearnError::Usage(format!("unknown algorithm {s:?} (expected apsl or apsl-fs)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApslConfig {
    pub depth: Depth,
    pub algorithm: Algorithm,
    pub test: TestConfig,
    /// FCBF relevance threshold.
    pub delta: f64,
    /// Drop PC members whose own PC does not contain the queried node.
    pub pc_symmetry: bool,
}

impl Default for ApslConfig {
    fn default() -> Self {
        ApslConfig {
            depth: Depth::Max,
            algorithm: Algorithm::Apsl,
            test: TestConfig::default(),
            delta: 0.05,
            pc_symmetry: true,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LearnError {
    #[error("target {0} is out of range")]
    Target(VarId),
    #[error("invalid depth: {0}")]
    Depth(String),
    #[error("dataset has no rows")]
    EmptyData,
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Ci(#[from] CiError),
}

/// Layer bookkeeping of one run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayerState {
    /// 1-based.
    pub layer_num: usize,
    /// `layer_nodes[k - 1]` is layer `k`.
    pub layer_nodes: Vec<VarSet>,
    pub visited: Vec<VarId>,
    pub queue: VecDeque<VarId>,
    pub countdown: usize,
}

impl LayerState {
    fn new(t: VarId) -> Self {
        LayerState {
            layer_num: 1,
            layer_nodes: vec![BTreeSet::from([t])],
            visited: Vec::new(),
            queue: VecDeque::from([t]),
            countdown: 1,
        }
    }

    pub fn layer(&self, k: usize) -> Option<&VarSet> {
        k.checked_sub(1).and_then(|i| self.layer_nodes.get(i))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApslRun {
    pub graph: Pdag,
    pub layers: LayerState,
    /// Blanket found for every node that was expanded.
    pub blankets: BTreeMap<VarId, MbResult>,
}

/// Runs the learner with an arbitrary independence oracle and blanket
/// backend.
pub fn learn<T, B>(tester: &T, backend: &B, t: VarId, depth: Depth) -> Result<ApslRun, LearnError>
where
    T: CiTest + ?Sized,
    B: MbBackend + ?Sized,
{
    let n = tester.n_vars();
    if t.0 >= n {
        return Err(LearnError::Target(t));
    }
    if depth == Depth::Finite(0) {
        return Err(LearnError::Depth("depth must be at least 1".into()));
    }
    let mut g = Pdag::new(n);
    let mut st = LayerState::new(t);
    let mut seen = vec![false; n];
    let mut blankets = BTreeMap::new();
    let mut seps: HashMap<(VarId, VarId), Option<Vec<VarId>>> = HashMap::new();

    while st.visited.len() < n {
        let Some(a) = st.queue.pop_front() else { break };
        if seen[a.0] {
            continue;
        }

        // Step 1: PC edges and V-structures with `a` as a parent.
        let mb = backend.markov_blanket(a)?;
        seen[a.0] = true;
        st.visited.push(a);
        st.queue.extend(mb.pc.iter().copied());
        for &b in &mb.pc {
            g.add_undirected_if_new(a, b);
        }
        for (&b, spouses) in &mb.spouses {
            for &c in spouses {
                g.orient(a, b);
                g.orient(c, b);
            }
        }

        // Step 2: V-structures with `a` as the collider.
        {
            let _phase = tester.stats().enter(Phase::ColliderDiscovery);
            let members: Vec<VarId> = mb.pc.iter().copied().collect();
            for (i, &x) in members.iter().enumerate() {
                for &y in &members[i + 1..] {
                    let sep = match seps.get(&(x, y)) {
                        Some(s) => s.clone(),
                        None => {
                            let s = separating_set(tester, backend, x, y)?;
                            seps.insert((x, y), s.clone());
                            s
                        }
                    };
                    let Some(mut z) = sep else { continue };
                    if !z.contains(&a) {
                        z.push(a);
                    }
                    if dependent_or_refused(tester, x, y, &z)? {
                        g.orient(x, a);
                        g.orient(y, a);
                    }
                }
            }
        }
        blankets.insert(a, mb);

        // Step 3: propagation and layer bookkeeping.
        g.apply_meek_rules_partial(&|x, y| {
            seen[x.0] || seen[y.0] || matches!(seps.get(&(x.min(y), x.max(y))), Some(Some(_)))
        });
        st.countdown = st.countdown.saturating_sub(1);
        while st.countdown == 0 {
            let prev = st.layer_nodes.last().expect("layer 1 always exists");
            let next: VarSet = prev
                .iter()
                .filter_map(|x| blankets.get(x))
                .flat_map(|m| m.pc.iter().copied())
                .collect();
            if next.is_empty() {
                break;
            }
            st.countdown = next.iter().filter(|v| !seen[v.0]).count();
            st.layer_nodes.push(next);
            st.layer_num += 1;
            if st.layer_num > n + 1 {
                break;
            }
        }
        if let Depth::Finite(k) = depth {
            if st.layer_num > k + 1 {
                break;
            }
            if st.layer_num > k {
                let boundary = st.layer(k).expect("layer k exists once layer_num > k");
                if boundary.iter().all(|&x| g.undirected_neighbors(x).next().is_none()) {
                    break;
                }
            }
        }
    }
    Ok(ApslRun { graph: g, layers: st, blankets })
}

/// A set `z` with `x ⫫ y | z`, searched within the PC of `x` and then
/// within the PC of `y`.
fn separating_set<T, B>(
    tester: &T,
    backend: &B,
    x: VarId,
    y: VarId,
) -> Result<Option<Vec<VarId>>, CiError>
where
    T: CiTest + ?Sized,
    B: MbBackend + ?Sized,
{
    for (u, w) in [(x, y), (y, x)] {
        let scope = backend.pc_scope(u)?;
        if let Some(z) = scope.sepsets.get(&w) {
            return Ok(Some(z.clone()));
        }
        if backend.complete_sepsets() {
            continue;
        }
        let pool: Vec<VarId> = scope.pc.iter().copied().filter(|&v| v != w).collect();
        let cap = tester.max_cond_size().map_or(pool.len(), |m| m.min(pool.len()));
        for k in 0..=cap {
            for z in itertools::Itertools::combinations(pool.iter().copied(), k) {
                if tester.independent(u, w, &z)? {
                    return Ok(Some(z));
                }
            }
        }
    }
    Ok(None)
}

/// Result of a data-driven run with its test counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LearnOutcome {
    pub run: ApslRun,
    pub tests: TestCounts,
}

/// Runs the configured algorithm with the G² test on `data`.
pub fn run(data: &Dataset, t: VarId, cfg: &ApslConfig) -> Result<LearnOutcome, LearnError> {
    if data.n_rows() == 0 {
        return Err(LearnError::EmptyData);
    }
    if !(cfg.delta >= 0.0) {
        return Err(LearnError::Usage("delta must be non-negative".into()));
    }
    let tester = G2Test::new(data, cfg.test);
    let run = match cfg.algorithm {
        Algorithm::Apsl => {
            let cache = PcCache::new();
            let backend = HitonBackend { tester: &tester, cache: &cache, symmetry: cfg.pc_symmetry };
            learn(&tester, &backend, t, cfg.depth)?
        }
        Algorithm::ApslFs => {
            let backend = FcbfBackend::new(&tester, data, cfg.delta);
            learn(&tester, &backend, t, cfg.depth)?
        }
    };
    Ok(LearnOutcome { run, tests: tester.stats().snapshot() })
}

pub fn apsl(data: &Dataset, t: VarId, cfg: &ApslConfig) -> Result<Pdag, LearnError> {
    let cfg = ApslConfig { algorithm: Algorithm::Apsl, ..*cfg };
    Ok(run(data, t, &cfg)?.run.graph)
}

pub fn apsl_fs(data: &Dataset, t: VarId, cfg: &ApslConfig) -> Result<Pdag, LearnError> {
    let cfg = ApslConfig { algorithm: Algorithm::ApslFs, ..*cfg };
    Ok(run(data, t, &cfg)?.run.graph)
}

/// Oracle-driven run with the HITON backend, as used for exactness checks.
pub fn learn_with_oracle<T: CiTest + ?Sized>(tester: &T, t: VarId, depth: Depth) -> Result<ApslRun, LearnError> {
    let cache = PcCache::new();
    learn(tester, &HitonBackend { tester, cache: &cache, symmetry: true }, t, depth)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsep::DsepOracle;
    use crate::graph::dag_to_cpdag;

    fn v(i: usize) -> VarId {
        VarId(i)
    }

    // A=0 -> C=2 <- B=1, C -> D=3 -> F=4 -> T=5
    fn fig2() -> Pdag {
        Pdag::from_arcs(6, &[(0, 2), (1, 2), (2, 3), (3, 4), (4, 5)])
    }

    #[test]
    fn depth_parsing() {
        assert_eq!("max".parse::<Depth>().unwrap(), Depth::Max);
        assert_eq!("3".parse::<Depth>().unwrap(), Depth::Finite(3));
        assert!("0".parse::<Depth>().is_err());
        assert!("-1".parse::<Depth>().is_err());
        assert_eq!(Depth::Finite(2).to_string(), "2");
    }

    #[test]
    fn oracle_recovers_fig2_from_every_target() {
        let dag = fig2();
        let o = DsepOracle::new(&dag).unwrap();
        for t in 0..6 {
            let r = learn_with_oracle(&o, v(t), Depth::Max).unwrap();
            assert_eq!(r.graph, dag_to_cpdag(&dag).unwrap(), "target {t}");
            assert!(r.graph.conflicts().is_empty());
        }
    }

    #[test]
    fn depth_one_never_expands_past_layer_two() {
        // F -- T can only be oriented from the collider at C, four layers out.
        let o = DsepOracle::new(&fig2()).unwrap();
        let r = learn_with_oracle(&o, v(5), Depth::Finite(1)).unwrap();
        assert!(r.graph.is_undirected(v(4), v(5)));
        assert_eq!(r.layers.visited, vec![v(5), v(4)]);
        assert!(r.layers.layer_num <= 3);
        for &x in &r.layers.visited {
            let first_layer = r.layers.layer_nodes.iter().position(|l| l.contains(&x)).unwrap() + 1;
            assert!(first_layer <= 2);
        }
    }

    #[test]
    fn depth_one_stops_once_boundary_is_oriented() {
        // T=2 has parents A=0, B=1 and child D=3 -> E=4; expansion of T
        // orients everything incident to it.
        let o = DsepOracle::new(&Pdag::from_arcs(5, &[(0, 2), (1, 2), (2, 3), (3, 4)])).unwrap();
        let r = learn_with_oracle(&o, v(2), Depth::Finite(1)).unwrap();
        assert_eq!(r.layers.visited, vec![v(2)]);
        assert!(r.graph.is_arc(v(0), v(2)) && r.graph.is_arc(v(2), v(3)));
    }

    #[test]
    fn isolated_target_terminates_immediately() {
        let o = DsepOracle::new(&Pdag::from_arcs(3, &[(1, 2)])).unwrap();
        let r = learn_with_oracle(&o, v(0), Depth::Finite(1)).unwrap();
        assert_eq!(r.graph.n_edges(), 0);
        assert_eq!(r.layers.visited, vec![v(0)]);
    }

    #[test]
    fn bad_target_and_depth_rejected() {
        let o = DsepOracle::new(&fig2()).unwrap();
        assert_eq!(learn_with_oracle(&o, v(6), Depth::Max).unwrap_err(), LearnError::Target(v(6)));
        assert!(learn_with_oracle(&o, v(0), Depth::Finite(0)).is_err());
    }

    #[test]
    fn queue_never_expands_twice() {
        let o = DsepOracle::new(&fig2()).unwrap();
        let r = learn_with_oracle(&o, v(2), Depth::Max).unwrap();
        let uniq: BTreeSet<VarId> = r.layers.visited.iter().copied().collect();
        assert_eq!(uniq.len(), r.layers.visited.len());
        assert_eq!(uniq.len(), 6);
    }
}
