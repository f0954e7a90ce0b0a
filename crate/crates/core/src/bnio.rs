//! Ground-truth networks: BIF reading and writing, forward sampling, and the
//! true neighborhood of a target used for scoring.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::apsl::Depth;
use crate::dataset::{Dataset, VarId};
use crate::graph::{Edge, GraphError, Pdag};
use crate::localdiscovery::VarSet;

/// Rows whose sum is further than this from 1 are rejected.
pub const ROW_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BnError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("line {line}: unknown variable {name:?}")]
    UnknownVariable { line: usize, name: String },
    #[error("line {line}: probability row sums to {sum}")]
    RowSum { line: usize, sum: f64 },
    #[error("invalid network: {0}")]
    Invalid(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

fn perr(line: usize, msg: impl Into<String>) -> BnError {
    BnError::Parse { line, msg: msg.into() }
}

/// A discrete Bayesian network.
///
/// The CPT of a variable is stored row-major: one row per parent
/// configuration (first parent slowest), each row a distribution over the
/// variable's states.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruthBn {
    names: Vec<String>,
    states: Vec<Vec<String>>,
    parents: Vec<Vec<VarId>>,
    cpts: Vec<Vec<f64>>,
    dag: Pdag,
}

impl GroundTruthBn {
    /// Validates shapes, acyclicity and row sums; rows are renormalized.
    pub fn new(
        names: Vec<String>,
        states: Vec<Vec<String>>,
        parents: Vec<Vec<VarId>>,
        mut cpts: Vec<Vec<f64>>,
    ) -> Result<Self, BnError> {
        let n = names.len();
        if states.len() != n || parents.len() != n || cpts.len() != n {
            return Err(BnError::Invalid("component lengths differ".into()));
        }
        let mut arcs = Vec::new();
        for v in 0..n {
            let k = states[v].len();
            if k == 0 {
                return Err(BnError::Invalid(format!("{} has no states", names[v])));
            }
            let mut rows = 1usize;
            for &p in &parents[v] {
                if p.0 >= n || p.0 == v {
                    return Err(BnError::Invalid(format!("{} has an invalid parent", names[v])));
                }
                rows *= states[p.0].len();
                arcs.push((p.0, v));
            }
            if cpts[v].len() != rows * k {
                return Err(BnError::Invalid(format!(
                    "{} has {} probabilities, expected {}",
                    names[v],
                    cpts[v].len(),
                    rows * k
                )));
            }
            for row in cpts[v].chunks_mut(k) {
                let sum: f64 = row.iter().sum();
                if row.iter().any(|&p| !(p >= 0.0)) || (sum - 1.0).abs() > ROW_TOLERANCE {
                    return Err(BnError::Invalid(format!("{} has a row summing to {sum}", names[v])));
                }
                if (sum - 1.0).abs() > 1e-12 {
                    row.iter_mut().for_each(|p| *p /= sum);
                }
            }
        }
        let dag = Pdag::from_arcs(n, &arcs);
        dag.check_dag()?;
        Ok(GroundTruthBn { names, states, parents, cpts, dag })
    }

    pub fn n_vars(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, v: VarId) -> &str {
        &self.names[v.0]
    }

    pub fn var_by_name(&self, name: &str) -> Option<VarId> {
        self.names.iter().position(|n| n == name).map(VarId)
    }

    pub fn states(&self, v: VarId) -> &[String] {
        &self.states[v.0]
    }

    pub fn cardinality(&self, v: VarId) -> usize {
        self.states[v.0].len()
    }

    pub fn parents(&self, v: VarId) -> &[VarId] {
        &self.parents[v.0]
    }

    pub fn cpt(&self, v: VarId) -> &[f64] {
        &self.cpts[v.0]
    }

    /// Distribution of `v` given one state per parent, in parent order.
    pub fn cpt_row(&self, v: VarId, parent_states: &[usize]) -> &[f64] {
        let k = self.cardinality(v);
        let idx = self.parents[v.0]
            .iter()
            .zip(parent_states)
            .fold(0, |acc, (p, &s)| acc * self.cardinality(*p) + s);
        &self.cpts[v.0][idx * k..(idx + 1) * k]
    }

    pub fn dag(&self) -> &Pdag {
        &self.dag
    }

    pub fn var_ids(&self) -> impl Iterator<Item = VarId> {
        (0..self.n_vars()).map(VarId)
    }

    /// Number of parents plus children of `v`.
    pub fn pc_size(&self, v: VarId) -> usize {
        self.dag.adjacent(v).count()
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Word(String),
    Punct(char),
}

fn tokenize(text: &str) -> Result<Vec<(Tok, usize)>, BnError> {
    let mut out = Vec::new();
    let mut chars = text.chars().peekable();
    let mut line = 1;
    while let Some(c) = chars.next() {
        match c {
            '\n' => line += 1,
            c if c.is_whitespace() => {}
            '/' if chars.peek() == Some(&'/') => {
                while let Some(&d) = chars.peek() {
                    if d == '\n' {
                        break;
                    }
                    chars.next();
                }
            }
            '/' if chars.peek() == Some(&'*') => {
                let start = line;
                chars.next();
                let mut prev = ' ';
                loop {
                    let d = chars.next().ok_or_else(|| perr(start, "unterminated comment"))?;
                    if d == '\n' {
                        line += 1;
                    }
                    if prev == '*' && d == '/' {
                        break;
                    }
                    prev = d;
                }
            }
            '"' => {
                let start = line;
                let mut s = String::new();
                loop {
                    match chars.next() {
                        None => return Err(perr(start, "unterminated string")),
                        Some('"') => break,
                        Some(d) => {
                            if d == '\n' {
                                line += 1;
                            }
                            s.push(d);
                        }
                    }
                }
                out.push((Tok::Word(s), start));
            }
            '{' | '}' | '(' | ')' | '[' | ']' | ',' | ';' | '|' => out.push((Tok::Punct(c), line)),
            _ => {
                let mut s = String::from(c);
                while let Some(&d) = chars.peek() {
                    if d.is_whitespace() || "{}()[],;|\"".contains(d) {
                        break;
                    }
                    s.push(d);
                    chars.next();
                }
                out.push((Tok::Word(s), line));
            }
        }
    }
    Ok(out)
}

struct Cursor {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    last_line: usize,
}

impl Cursor {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.0)
    }

    fn line(&self) -> usize {
        self.toks.get(self.pos).map_or(self.last_line, |t| t.1)
    }

    fn next(&mut self) -> Result<(Tok, usize), BnError> {
        let t = self.toks.get(self.pos).cloned().ok_or_else(|| perr(self.last_line, "unexpected end of input"))?;
        self.pos += 1;
        Ok(t)
    }

    fn word(&mut self) -> Result<(String, usize), BnError> {
        match self.next()? {
            (Tok::Word(w), l) => Ok((w, l)),
            (Tok::Punct(c), l) => Err(perr(l, format!("expected a word, found '{c}'"))),
        }
    }

    fn expect(&mut self, p: char) -> Result<usize, BnError> {
        match self.next()? {
            (Tok::Punct(c), l) if c == p => Ok(l),
            (Tok::Punct(c), l) => Err(perr(l, format!("expected '{p}', found '{c}'"))),
            (Tok::Word(w), l) => Err(perr(l, format!("expected '{p}', found {w:?}"))),
        }
    }

    fn eat(&mut self, p: char) -> bool {
        if self.peek() == Some(&Tok::Punct(p)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    /// Skips a balanced `{ ... }` block; the opening brace is next.
    fn skip_block(&mut self) -> Result<(), BnError> {
        self.expect('{')?;
        let mut depth = 1;
        while depth > 0 {
            match self.next()? {
                (Tok::Punct('{'), _) => depth += 1,
                (Tok::Punct('}'), _) => depth -= 1,
                _ => {}
            }
        }
        Ok(())
    }

    fn skip_statement(&mut self) -> Result<(), BnError> {
        while !matches!(self.next()?.0, Tok::Punct(';')) {}
        Ok(())
    }

    /// Comma-separated words up to `close`.
    fn word_list(&mut self, close: char) -> Result<Vec<(String, usize)>, BnError> {
        let mut out = Vec::new();
        if self.eat(close) {
            return Ok(out);
        }
        loop {
            out.push(self.word()?);
            if self.eat(close) {
                return Ok(out);
            }
            self.expect(',')?;
        }
    }

    fn numbers_until_semicolon(&mut self) -> Result<Vec<f64>, BnError> {
        let mut out = Vec::new();
        loop {
            match self.next()? {
                (Tok::Punct(';'), _) => return Ok(out),
                (Tok::Punct(','), _) => {}
                (Tok::Word(w), l) => {
                    out.push(w.parse().map_err(|_| perr(l, format!("expected a probability, found {w:?}")))?)
                }
                (Tok::Punct(c), l) => return Err(perr(l, format!("unexpected '{c}' in probability list"))),
            }
        }
    }
}

struct RawCpt {
    line: usize,
    parents: Vec<VarId>,
    values: Vec<f64>,
}

/// Parses the discrete BIF subset: `network`, `variable` blocks with a
/// `type discrete` declaration, and `probability` blocks given either as a
/// `table` or as one row per parent configuration. Properties are ignored.
pub fn parse_bif(text: &str) -> Result<GroundTruthBn, BnError> {
    let toks = tokenize(text)?;
    let last_line = toks.last().map_or(1, |t| t.1);
    let mut c = Cursor { toks, pos: 0, last_line };
    let mut names: Vec<String> = Vec::new();
    let mut states: Vec<Vec<String>> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut raw: Vec<Option<RawCpt>> = Vec::new();

    while c.peek().is_some() {
        let (kw, line) = c.word()?;
        match kw.as_str() {
            "network" => {
                while !matches!(c.peek(), Some(Tok::Punct('{')) | None) {
                    c.next()?;
                }
                c.skip_block()?;
            }
            "variable" => {
                let (name, _) = c.word()?;
                if index.contains_key(&name) {
                    return Err(perr(line, format!("variable {name:?} declared twice")));
                }
                c.expect('{')?;
                let mut vals = None;
                while !c.eat('}') {
                    let (item, l) = c.word()?;
                    match item.as_str() {
                        "type" => {
                            let (kind, kl) = c.word()?;
                            if kind != "discrete" {
                                return Err(perr(kl, format!("unsupported variable type {kind:?}")));
                            }
                            c.expect('[')?;
                            let (k, kl) = c.word()?;
                            let k: usize = k.parse().map_err(|_| perr(kl, format!("bad state count {k:?}")))?;
                            c.expect(']')?;
                            c.expect('{')?;
                            let v: Vec<String> = c.word_list('}')?.into_iter().map(|w| w.0).collect();
                            if v.len() != k || k == 0 {
                                return Err(perr(kl, format!("{name}: declared {k} states, listed {}", v.len())));
                            }
                            c.expect(';')?;
                            vals = Some(v);
                        }
                        "property" => c.skip_statement()?,
                        other => return Err(perr(l, format!("unexpected {other:?} in variable block"))),
                    }
                }
                let vals = vals.ok_or_else(|| perr(line, format!("variable {name:?} has no type")))?;
                index.insert(name.clone(), names.len());
                names.push(name);
                states.push(vals);
                raw.push(None);
            }
            "probability" => {
                c.expect('(')?;
                let mut vars = Vec::new();
                loop {
                    let (w, l) = c.word()?;
                    let id = *index.get(&w).ok_or(BnError::UnknownVariable { line: l, name: w })?;
                    vars.push(VarId(id));
                    if c.eat(')') {
                        break;
                    }
                    if !c.eat('|') {
                        c.expect(',')?;
                    }
                }
                let child = vars[0];
                let parents = vars[1..].to_vec();
                if raw[child.0].is_some() {
                    return Err(perr(line, format!("second probability block for {}", names[child.0])));
                }
                let values = parse_probability_body(&mut c, child, &parents, &states, &index)?;
                raw[child.0] = Some(RawCpt { line, parents, values });
            }
            other => return Err(perr(line, format!("unexpected {other:?} at top level"))),
        }
    }

    let n = names.len();
    let mut parents = Vec::with_capacity(n);
    let mut cpts = Vec::with_capacity(n);
    for (v, r) in raw.into_iter().enumerate() {
        let r = r.ok_or_else(|| perr(last_line, format!("no probability block for {}", names[v])))?;
        let k = states[v].len();
        for row in r.values.chunks(k) {
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_TOLERANCE || row.iter().any(|&p| p < 0.0) {
                return Err(BnError::RowSum { line: r.line, sum });
            }
        }
        parents.push(r.parents);
        cpts.push(r.values);
    }
    GroundTruthBn::new(names, states, parents, cpts)
}

fn parse_probability_body(
    c: &mut Cursor,
    child: VarId,
    parents: &[VarId],
    states: &[Vec<String>],
    index: &HashMap<String, usize>,
) -> Result<Vec<f64>, BnError> {
    let k = states[child.0].len();
    let pcards: Vec<usize> = parents.iter().map(|p| states[p.0].len()).collect();
    let rows: usize = pcards.iter().product();
    let mut values: Vec<Option<f64>> = vec![None; rows * k];
    let mut default: Option<Vec<f64>> = None;
    let open = c.expect('{')?;
    while !c.eat('}') {
        let line = c.line();
        match c.peek().cloned() {
            Some(Tok::Punct('(')) => {
                c.next()?;
                let cfg = c.word_list(')')?;
                if cfg.len() != parents.len() {
                    return Err(perr(line, format!("row names {} parent states, expected {}", cfg.len(), parents.len())));
                }
                let mut idx = 0;
                for ((s, l), p) in cfg.iter().zip(parents) {
                    let pos = states[p.0].iter().position(|x| x == s).ok_or_else(|| {
                        perr(*l, format!("{s:?} is not a state of {}", index_name(index, p.0)))
                    })?;
                    idx = idx * states[p.0].len() + pos;
                }
                let row = c.numbers_until_semicolon()?;
                if row.len() != k {
                    return Err(perr(line, format!("row has {} entries, expected {k}", row.len())));
                }
                for (j, p) in row.into_iter().enumerate() {
                    values[idx * k + j] = Some(p);
                }
            }
            Some(Tok::Word(w)) if w == "table" => {
                c.next()?;
                let all = c.numbers_until_semicolon()?;
                if all.len() != rows * k {
                    return Err(perr(line, format!("table has {} entries, expected {}", all.len(), rows * k)));
                }
                // The variable's own state varies slowest.
                for (i, p) in all.into_iter().enumerate() {
                    let (state, cfg) = (i / rows, i % rows);
                    values[cfg * k + state] = Some(p);
                }
            }
            Some(Tok::Word(w)) if w == "default" => {
                c.next()?;
                let row = c.numbers_until_semicolon()?;
                if row.len() != k {
                    return Err(perr(line, format!("default row has {} entries, expected {k}", row.len())));
                }
                default = Some(row);
            }
            Some(Tok::Word(w)) if w == "property" => c.skip_statement()?,
            Some(Tok::Word(w)) => return Err(perr(line, format!("unexpected {w:?} in probability block"))),
            Some(Tok::Punct(p)) => return Err(perr(line, format!("unexpected '{p}' in probability block"))),
            None => return Err(perr(open, "unterminated probability block")),
        }
    }
    values
        .into_iter()
        .enumerate()
        .map(|(i, v)| {
            v.or_else(|| default.as_ref().map(|d| d[i % k]))
                .ok_or_else(|| perr(open, "probability block leaves parent configurations unspecified"))
        })
        .collect()
}

fn index_name(index: &HashMap<String, usize>, id: usize) -> String {
    index.iter().find(|(_, &v)| v == id).map_or_else(|| id.to_string(), |(k, _)| k.clone())
}

/// Writes the network in the same BIF subset `parse_bif` reads.
pub fn serialize_bif(bn: &GroundTruthBn) -> String {
    let mut s = String::from("network unknown {\n}\n");
    for v in bn.var_ids() {
        let st = bn.states(v);
        let _ = writeln!(s, "variable {} {{\n  type discrete [ {} ] {{ {} }};\n}}", bn.name(v), st.len(), st.join(", "));
    }
    for v in bn.var_ids() {
        let ps = bn.parents(v);
        let k = bn.cardinality(v);
        let fmt_row = |row: &[f64]| row.iter().map(|p| p.to_string()).collect::<Vec<_>>().join(", ");
        if ps.is_empty() {
            let _ = writeln!(s, "probability ( {} ) {{\n  table {};\n}}", bn.name(v), fmt_row(bn.cpt(v)));
            continue;
        }
        let pnames: Vec<&str> = ps.iter().map(|&p| bn.name(p)).collect();
        let _ = writeln!(s, "probability ( {} | {} ) {{", bn.name(v), pnames.join(", "));
        let cards: Vec<usize> = ps.iter().map(|&p| bn.cardinality(p)).collect();
        for (r, row) in bn.cpt(v).chunks(k).enumerate() {
            let mut rem = r;
            let mut cfg = vec![0; ps.len()];
            for j in (0..ps.len()).rev() {
                cfg[j] = rem % cards[j];
                rem /= cards[j];
            }
            let labels: Vec<&str> = cfg.iter().zip(ps).map(|(&c, &p)| bn.states(p)[c].as_str()).collect();
            let _ = writeln!(s, "  ({}) {};", labels.join(", "), fmt_row(row));
        }
        s.push_str("}\n");
    }
    s
}

/// Derives the `index`-th child seed of `seed` (SplitMix64 finalizer over a
/// golden-ratio stride).
pub fn split_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Ancestral sampling of `n` rows with a ChaCha8 stream seeded by `seed`.
/// Columns follow the network's variable order and state labels.
pub fn forward_sample(bn: &GroundTruthBn, n: usize, seed: u64) -> Dataset {
    assert!(n >= 1, "sample size must be positive");
    let p = bn.n_vars();
    let order = bn.dag().topological_order().expect("network is acyclic");
    let cumulative: Vec<Vec<f64>> = bn
        .var_ids()
        .map(|v| {
            let k = bn.cardinality(v);
            bn.cpt(v)
                .chunks(k)
                .flat_map(|row| {
                    let mut acc = 0.0;
                    row.iter()
                        .map(move |&x| {
                            acc += x;
                            acc
                        })
                        .collect::<Vec<_>>()
                })
                .collect()
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cols = vec![vec![0u32; n]; p];
    for r in 0..n {
        for &v in &order {
            let k = bn.cardinality(v);
            let cfg = bn.parents(v).iter().fold(0, |acc, &q| acc * bn.cardinality(q) + cols[q.0][r] as usize);
            let row = &cumulative[v.0][cfg * k..(cfg + 1) * k];
            let u: f64 = rng.random();
            let s = row.iter().position(|&c| u < c).unwrap_or_else(|| {
                // Rounding left the last cumulative value below 1: take the
                // last state with positive mass.
                let probs = &bn.cpt(v)[cfg * k..(cfg + 1) * k];
                probs.iter().rposition(|&x| x > 0.0).unwrap_or(k - 1)
            });
            cols[v.0][r] = s as u32;
        }
    }
    Dataset::from_parts(
        bn.names().to_vec(),
        bn.var_ids().map(|v| bn.cardinality(v)).collect(),
        cols,
        bn.var_ids().map(|v| bn.states(v).to_vec()).collect(),
    )
    .expect("sampled columns match the network schema")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NeighborhoodSpec {
    pub target: VarId,
    pub depth: Depth,
}

/// The scoring region around a target.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Region {
    /// True edges, directed as in the network.
    pub edges: BTreeSet<Edge>,
    /// Nodes within distance K-1 of the target.
    pub nodes: VarSet,
}

/// True edges with an endpoint within skeleton distance K-1 of the target.
pub fn true_neighborhood(bn: &GroundTruthBn, spec: NeighborhoodSpec) -> Region {
    let dag = bn.dag();
    let Depth::Finite(k) = spec.depth else {
        return Region { edges: dag.edges().into_iter().collect(), nodes: bn.var_ids().collect() };
    };
    let dist = dag.distances(spec.target);
    let core = |v: VarId| dist[v.0].is_some_and(|d| d + 1 <= k);
    Region {
        edges: dag.edges().into_iter().filter(|e| core(e.a) || core(e.b)).collect(),
        nodes: bn.var_ids().filter(|&v| core(v)).collect(),
    }
}

/// The `k` variables with the largest PC sets, ties to the lower id.
pub fn top_pc_nodes(bn: &GroundTruthBn, k: usize) -> Vec<VarId> {
    let mut ids: Vec<VarId> = bn.var_ids().collect();
    ids.sort_by_key(|&v| (std::cmp::Reverse(bn.pc_size(v)), v));
    ids.truncate(k);
    ids
}
