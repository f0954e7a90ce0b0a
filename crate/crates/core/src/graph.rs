//! Partially directed graphs in the learners' adjacency encoding.
//!
//! For a pair `(a, b)` the matrix holds
//!
//! | `m[a][b]`, `m[b][a]` | meaning        |
//! |----------------------|----------------|
//! | `0, 0`               | not adjacent   |
//! | `1, 1`               | `a -- b`       |
//! | `-1, 0`              | `a -> b`       |
//! | `0, -1`              | `b -> a`       |
//!
//! No other combination is ever stored.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt::Write as _;

use thiserror::Error;

use crate::dataset::VarId;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("graph has a directed cycle")]
    Cyclic,
    #[error("expected a fully directed graph, found undirected edge {0} -- {1}")]
    NotDirected(VarId, VarId),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("line {line}: unknown variable {name:?}")]
    UnknownVariable { line: usize, name: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EdgeKind {
    Undirected,
    /// `a -> b`
    Directed,
}

/// An edge between two distinct variables. Undirected edges are stored with
/// `a < b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Edge {
    pub a: VarId,
    pub b: VarId,
    pub kind: EdgeKind,
}

impl Edge {
    pub fn directed(a: VarId, b: VarId) -> Self {
        assert_ne!(a, b, "self loop");
        Edge { a, b, kind: EdgeKind::Directed }
    }

    pub fn undirected(a: VarId, b: VarId) -> Self {
        assert_ne!(a, b, "self loop");
        let (a, b) = if a < b { (a, b) } else { (b, a) };
        Edge { a, b, kind: EdgeKind::Undirected }
    }

    /// The unordered endpoint pair, smaller id first.
    pub fn pair(&self) -> (VarId, VarId) {
        if self.a < self.b {
            (self.a, self.b)
        } else {
            (self.b, self.a)
        }
    }

    pub fn touches(&self, v: VarId) -> bool {
        self.a == v || self.b == v
    }
}

/// State of a pair as seen from its first argument.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Link {
    None,
    Undirected,
    /// `a -> b`
    Out,
    /// `b -> a`
    In,
}

#[derive(Debug, Clone)]
pub struct Pdag {
    n: usize,
    m: Vec<i8>,
    conflicts: Vec<(VarId, VarId)>,
}

impl PartialEq for Pdag {
    /// Graph equality; the conflict log is not compared.
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.m == other.m
    }
}

impl Eq for Pdag {}

impl Pdag {
    pub fn new(n: usize) -> Self {
        Pdag { n, m: vec![0; n * n], conflicts: Vec::new() }
    }

    pub fn from_edges(n: usize, edges: &[Edge]) -> Self {
        let mut g = Pdag::new(n);
        for e in edges {
            match e.kind {
                EdgeKind::Undirected => g.set_undirected(e.a, e.b),
                EdgeKind::Directed => g.orient(e.a, e.b),
            }
        }
        g
    }

    /// Fully directed graph from `(parent, child)` index pairs.
    pub fn from_arcs(n: usize, arcs: &[(usize, usize)]) -> Self {
        let mut g = Pdag::new(n);
        for &(a, b) in arcs {
            g.orient(VarId(a), VarId(b));
        }
        g
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn raw(&self, a: VarId, b: VarId) -> i8 {
        self.m[a.0 * self.n + b.0]
    }

    #[inline]
    fn put(&mut self, a: VarId, b: VarId, v: i8) {
        self.m[a.0 * self.n + b.0] = v;
    }

    pub fn link(&self, a: VarId, b: VarId) -> Link {
        match (self.raw(a, b), self.raw(b, a)) {
            (0, 0) => Link::None,
            (1, 1) => Link::Undirected,
            (-1, 0) => Link::Out,
            (0, -1) => Link::In,
            (x, y) => unreachable!("invalid encoding ({x}, {y}) at ({a}, {b})"),
        }
    }

    #[inline]
    pub fn is_adjacent(&self, a: VarId, b: VarId) -> bool {
        self.raw(a, b) != 0 || self.raw(b, a) != 0
    }

    #[inline]
    pub fn is_undirected(&self, a: VarId, b: VarId) -> bool {
        self.raw(a, b) == 1
    }

    /// True iff `a -> b`.
    #[inline]
    pub fn is_arc(&self, a: VarId, b: VarId) -> bool {
        self.raw(a, b) == -1
    }

    /// Adds `a -- b` only if the pair is currently nonadjacent; existing
    /// edges, oriented or not, are left as they are.
    pub fn add_undirected_if_new(&mut self, a: VarId, b: VarId) {
        assert_ne!(a, b);
        if !self.is_adjacent(a, b) {
            self.set_undirected(a, b);
        }
    }

    fn set_undirected(&mut self, a: VarId, b: VarId) {
        assert_ne!(a, b);
        self.put(a, b, 1);
        self.put(b, a, 1);
    }

    /// Sets `a -> b` whatever the previous state. Overwriting `b -> a` is
    /// logged as a conflict.
    pub fn orient(&mut self, a: VarId, b: VarId) {
        assert_ne!(a, b);
        if self.is_arc(b, a) {
            self.conflicts.push((a, b));
        }
        self.put(a, b, -1);
        self.put(b, a, 0);
    }

    pub fn remove(&mut self, a: VarId, b: VarId) {
        self.put(a, b, 0);
        self.put(b, a, 0);
    }

    /// Every `orient(a, b)` that overwrote an existing `b -> a`, in order.
    pub fn conflicts(&self) -> &[(VarId, VarId)] {
        &self.conflicts
    }

    pub fn clear_conflicts(&mut self) {
        self.conflicts.clear();
    }

    pub fn vars(&self) -> impl Iterator<Item = VarId> {
        (0..self.n).map(VarId)
    }

    pub fn parents(&self, v: VarId) -> impl Iterator<Item = VarId> + '_ {
        self.vars().filter(move |&u| self.is_arc(u, v))
    }

    pub fn children(&self, v: VarId) -> impl Iterator<Item = VarId> + '_ {
        self.vars().filter(move |&u| self.is_arc(v, u))
    }

    pub fn undirected_neighbors(&self, v: VarId) -> impl Iterator<Item = VarId> + '_ {
        self.vars().filter(move |&u| self.is_undirected(v, u))
    }

    pub fn adjacent(&self, v: VarId) -> impl Iterator<Item = VarId> + '_ {
        self.vars().filter(move |&u| self.is_adjacent(v, u))
    }

    /// All edges, ordered by their smaller endpoint then larger endpoint.
    pub fn edges(&self) -> Vec<Edge> {
        let mut out = Vec::new();
        for i in 0..self.n {
            for j in i + 1..self.n {
                let (a, b) = (VarId(i), VarId(j));
                match self.link(a, b) {
                    Link::None => {}
                    Link::Undirected => out.push(Edge::undirected(a, b)),
                    Link::Out => out.push(Edge::directed(a, b)),
                    Link::In => out.push(Edge::directed(b, a)),
                }
            }
        }
        out
    }

    pub fn n_edges(&self) -> usize {
        self.edges().len()
    }

    pub fn n_directed(&self) -> usize {
        self.m.iter().filter(|&&v| v == -1).count()
    }

    pub fn n_undirected(&self) -> usize {
        self.m.iter().filter(|&&v| v == 1).count() / 2
    }

    /// Checks the encoding invariants: legal pair states and a zero diagonal.
    pub fn is_valid(&self) -> bool {
        (0..self.n).all(|i| {
            self.m[i * self.n + i] == 0
                && (i + 1..self.n).all(|j| {
                    matches!(
                        (self.m[i * self.n + j], self.m[j * self.n + i]),
                        (0, 0) | (1, 1) | (-1, 0) | (0, -1)
                    )
                })
        })
    }

    /// True when the directed part has no cycle.
    pub fn is_acyclic(&self) -> bool {
        self.topological_order().is_some()
    }

    /// Kahn order over the directed part, smallest ready index first.
    pub fn topological_order(&self) -> Option<Vec<VarId>> {
        let mut indeg: Vec<usize> = self.vars().map(|v| self.parents(v).count()).collect();
        let mut ready: BTreeSet<usize> = (0..self.n).filter(|&i| indeg[i] == 0).collect();
        let mut order = Vec::with_capacity(self.n);
        while let Some(&i) = ready.iter().next() {
            ready.remove(&i);
            order.push(VarId(i));
            for c in self.children(VarId(i)) {
                indeg[c.0] -= 1;
                if indeg[c.0] == 0 {
                    ready.insert(c.0);
                }
            }
        }
        (order.len() == self.n).then_some(order)
    }

    /// Errors unless the graph is a DAG (no undirected edges, no cycles).
    pub fn check_dag(&self) -> Result<(), GraphError> {
        if let Some(e) = self.edges().into_iter().find(|e| e.kind == EdgeKind::Undirected) {
            return Err(GraphError::NotDirected(e.a, e.b));
        }
        if !self.is_acyclic() {
            return Err(GraphError::Cyclic);
        }
        Ok(())
    }

    /// Same graph with every edge made undirected.
    pub fn skeleton(&self) -> Pdag {
        let mut g = Pdag::new(self.n);
        for e in self.edges() {
            g.set_undirected(e.a, e.b);
        }
        g
    }

    /// Undirected-graph distances from `from`; `None` for unreachable nodes.
    pub fn distances(&self, from: VarId) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.n];
        dist[from.0] = Some(0);
        let mut queue = VecDeque::from([from]);
        while let Some(u) = queue.pop_front() {
            let d = dist[u.0].unwrap();
            for v in self.adjacent(u) {
                if dist[v.0].is_none() {
                    dist[v.0] = Some(d + 1);
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    /// Induced subgraph on `keep` (other pairs cleared), same variable count.
    pub fn restricted_to(&self, keep: &BTreeSet<VarId>) -> Pdag {
        let mut g = self.clone();
        g.conflicts.clear();
        for a in self.vars() {
            for b in self.vars() {
                if !(keep.contains(&a) && keep.contains(&b)) {
                    g.put(a, b, 0);
                }
            }
        }
        g
    }

    /// Runs the Meek rules to their fixpoint in place.
    pub fn apply_meek_rules(&mut self) {
        let order: Vec<(VarId, VarId)> = self.pair_order();
        meek_fixpoint(self, &order, &|_, _| true);
    }

    /// Meek rules on a partially discovered skeleton: a missing edge counts
    /// as a nonadjacency only if `known_apart` confirms it.
    pub fn apply_meek_rules_partial(&mut self, known_apart: &dyn Fn(VarId, VarId) -> bool) {
        let order: Vec<(VarId, VarId)> = self.pair_order();
        meek_fixpoint(self, &order, known_apart);
    }

    fn pair_order(&self) -> Vec<(VarId, VarId)> {
        let mut order = Vec::with_capacity(self.n * self.n.saturating_sub(1) / 2);
        for i in 0..self.n {
            for j in i + 1..self.n {
                order.push((VarId(i), VarId(j)));
            }
        }
        order
    }

    /// `a -> b` lines for arcs, `a -- b` for undirected edges, by name.
    pub fn to_edge_list(&self, names: &[String]) -> String {
        let mut out = String::new();
        for e in self.edges() {
            let sep = match e.kind {
                EdgeKind::Directed => "->",
                EdgeKind::Undirected => "--",
            };
            let _ = writeln!(out, "{} {sep} {}", names[e.a.0], names[e.b.0]);
        }
        out
    }

    pub fn from_edge_list(text: &str, names: &[String]) -> Result<Pdag, GraphError> {
        let index: HashMap<&str, usize> =
            names.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
        let mut g = Pdag::new(names.len());
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            let lineno = lineno + 1;
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (lhs, rhs, directed) = if let Some((l, r)) = line.split_once("->") {
                (l, r, true)
            } else if let Some((l, r)) = line.split_once("--") {
                (l, r, false)
            } else {
                return Err(GraphError::Parse {
                    line: lineno,
                    msg: format!("expected `a -> b` or `a -- b`, found {line:?}"),
                });
            };
            let lookup = |s: &str| {
                let s = s.trim();
                index.get(s).map(|&i| VarId(i)).ok_or_else(|| GraphError::UnknownVariable {
                    line: lineno,
                    name: s.to_string(),
                })
            };
            let (a, b) = (lookup(lhs)?, lookup(rhs)?);
            if a == b {
                return Err(GraphError::Parse { line: lineno, msg: "self loop".into() });
            }
            if directed {
                g.orient(a, b);
            } else {
                g.set_undirected(a, b);
            }
        }
        g.conflicts.clear();
        Ok(g)
    }

    /// Header row of names, then the raw `{-1, 0, 1}` matrix row by row.
    pub fn to_adjacency_csv(&self, names: &[String]) -> String {
        let mut out = names.join(",");
        out.push('\n');
        for i in 0..self.n {
            let row: Vec<String> = (0..self.n).map(|j| self.m[i * self.n + j].to_string()).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    pub fn from_adjacency_csv(text: &str) -> Result<(Vec<String>, Pdag), GraphError> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) =
            lines.next().ok_or(GraphError::Parse { line: 1, msg: "empty input".into() })?;
        let names: Vec<String> = header.split(',').map(|s| s.trim().to_string()).collect();
        let n = names.len();
        let mut g = Pdag::new(n);
        let mut rows = 0;
        for (lineno, line) in lines {
            let lineno = lineno + 1;
            if rows == n {
                return Err(GraphError::Parse { line: lineno, msg: "too many rows".into() });
            }
            let vals: Vec<&str> = line.split(',').map(str::trim).collect();
            if vals.len() != n {
                return Err(GraphError::Parse {
                    line: lineno,
                    msg: format!("expected {n} entries, found {}", vals.len()),
                });
            }
            for (j, v) in vals.into_iter().enumerate() {
                let x: i8 = match v {
                    "-1" => -1,
                    "0" => 0,
                    "1" => 1,
                    _ => {
                        return Err(GraphError::Parse {
                            line: lineno,
                            msg: format!("entry {v:?} is not -1, 0 or 1"),
                        })
                    }
                };
                g.m[rows * n + j] = x;
            }
            rows += 1;
        }
        if rows != n {
            return Err(GraphError::Parse { line: rows + 2, msg: format!("expected {n} rows") });
        }
        if !g.is_valid() {
            return Err(GraphError::Parse { line: 0, msg: "invalid pair encoding".into() });
        }
        Ok((names, g))
    }
}

/// Meek rules R1–R3 to fixpoint on a copy of `g`.
pub fn meek_rules(g: &Pdag) -> Pdag {
    let mut out = g.clone();
    out.apply_meek_rules();
    out
}

/// Meek closure scanning undirected pairs in the given order on every sweep.
pub fn meek_rules_in_order(g: &Pdag, order: &[(VarId, VarId)]) -> Pdag {
    let mut out = g.clone();
    meek_fixpoint(&mut out, order, &|_, _| true);
    out
}

fn meek_fixpoint(g: &mut Pdag, order: &[(VarId, VarId)], known_apart: &dyn Fn(VarId, VarId) -> bool) {
    loop {
        let mut changed = false;
        for &(a, b) in order {
            if !g.is_undirected(a, b) {
                continue;
            }
            if meek_implies(g, a, b, known_apart) {
                g.orient(a, b);
                changed = true;
            } else if meek_implies(g, b, a, known_apart) {
                g.orient(b, a);
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
}

/// Whether R1, R2 or R3 orients the undirected edge `x -- y` as `x -> y`.
fn meek_implies(g: &Pdag, x: VarId, y: VarId, known_apart: &dyn Fn(VarId, VarId) -> bool) -> bool {
    let apart = |a: VarId, b: VarId| !g.is_adjacent(a, b) && known_apart(a, b);
    // R1: w -> x -- y with w, y nonadjacent
    if g.parents(x).any(|w| w != y && apart(w, y)) {
        return true;
    }
    // R2: x -> w -> y
    if g.children(x).any(|w| g.is_arc(w, y)) {
        return true;
    }
    // R3: x -- z -> y and x -- w -> y with z, w nonadjacent
    let mids: Vec<VarId> = g.undirected_neighbors(x).filter(|&z| g.is_arc(z, y)).collect();
    for (i, &z) in mids.iter().enumerate() {
        for &w in &mids[i + 1..] {
            if apart(z, w) {
                return true;
            }
        }
    }
    false
}

/// Unshielded colliders `a -> c <- b`, reported as `(a, c, b)` with `a < b`.
pub fn v_structures(g: &Pdag) -> BTreeSet<(VarId, VarId, VarId)> {
    let mut out = BTreeSet::new();
    for c in g.vars() {
        let parents: Vec<VarId> = g.parents(c).collect();
        for (i, &a) in parents.iter().enumerate() {
            for &b in &parents[i + 1..] {
                if !g.is_adjacent(a, b) {
                    out.insert((a.min(b), c, a.max(b)));
                }
            }
        }
    }
    out
}

/// The completed PDAG of a DAG's Markov equivalence class.
pub fn dag_to_cpdag(dag: &Pdag) -> Result<Pdag, GraphError> {
    dag.check_dag()?;
    let mut g = dag.skeleton();
    for (a, c, b) in v_structures(dag) {
        g.orient(a, c);
        g.orient(b, c);
    }
    g.apply_meek_rules();
    Ok(g)
}
