//! Local structure primitives: parents-and-children discovery (HITON-PC),
//! Markov blankets with spouses, and the feature-selection route (FCBF and
//! MB-FS).

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::{Arc, Mutex};

use itertools::Itertools;

use crate::citest::{symmetric_uncertainty, CiError, CiTest, Phase};
use crate::dataset::{Dataset, VarId};

pub type VarSet = BTreeSet<VarId>;
pub type SepSets = BTreeMap<VarId, Vec<VarId>>;

/// Parents-and-children set of one variable, with the separating set found
/// for each variable that was excluded.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PcResult {
    pub pc: VarSet,
    pub sepsets: SepSets,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct MbResult {
    pub pc: VarSet,
    /// Spouses keyed by the common child.
    pub spouses: BTreeMap<VarId, VarSet>,
    pub sepsets: SepSets,
}

impl MbResult {
    pub fn all_spouses(&self) -> VarSet {
        self.spouses.values().flatten().copied().collect()
    }

    /// Checks the structural invariants relative to target `t`.
    pub fn is_consistent(&self, t: VarId) -> bool {
        !self.pc.contains(&t)
            && self.spouses.keys().all(|k| self.pc.contains(k))
            && self.spouses.values().flatten().all(|s| !self.pc.contains(s) && *s != t)
            && self.sepsets.iter().all(|(y, z)| !z.contains(&t) && !z.contains(y))
    }
}

/// Per-run memo of PC results. Concurrent callers may compute the same entry
/// twice; the first insert wins and both see it.
#[derive(Debug, Default)]
pub struct PcCache {
    entries: Mutex<HashMap<VarId, Arc<PcResult>>>,
}

impl PcCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, v: VarId) -> Option<Arc<PcResult>> {
        self.entries.lock().unwrap().get(&v).cloned()
    }

    pub fn get_or_try_insert_with<E>(
        &self,
        v: VarId,
        compute: impl FnOnce() -> Result<PcResult, E>,
    ) -> Result<Arc<PcResult>, E> {
        if let Some(hit) = self.get(v) {
            return Ok(hit);
        }
        let fresh = Arc::new(compute()?);
        Ok(self.entries.lock().unwrap().entry(v).or_insert(fresh).clone())
    }

    pub fn len(&self) -> usize {
        self.entries.lock().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Subsets of `pool` of size `1..=max` in size-then-lexicographic order,
/// optionally only those containing `must`. Returns the first `z` for which
/// `indep(z)` holds.
fn first_separating<E>(
    pool: &[VarId],
    min_size: usize,
    max_size: Option<usize>,
    must: Option<VarId>,
    mut indep: impl FnMut(&[VarId]) -> Result<bool, E>,
) -> Result<Option<Vec<VarId>>, E> {
    let top = max_size.map_or(pool.len(), |m| m.min(pool.len()));
    for k in min_size..=top {
        for combo in pool.iter().copied().combinations(k) {
            if let Some(m) = must {
                if !combo.contains(&m) {
                    continue;
                }
            }
            if indep(&combo)? {
                return Ok(Some(combo));
            }
        }
    }
    Ok(None)
}

fn cached_or<T: CiTest + ?Sized>(
    tester: &T,
    t: VarId,
    cache: &PcCache,
) -> Result<Arc<PcResult>, CiError> {
    cache.get_or_try_insert_with(t, || hiton_pc_uncached(tester, t))
}

/// Interleaved HITON-PC.
///
/// Candidates dependent on `t` are admitted strongest first (by the
/// unconditional test statistic, ties to the lower id). After each admission
/// every admitted variable is re-tested against the subsets of the other
/// admitted variables, up to the tester's conditioning cap.
pub fn hiton_pc<T: CiTest + ?Sized>(
    tester: &T,
    t: VarId,
    cache: &PcCache,
) -> Result<Arc<PcResult>, CiError> {
    cached_or(tester, t, cache)
}

fn hiton_pc_uncached<T: CiTest + ?Sized>(tester: &T, t: VarId) -> Result<PcResult, CiError> {
    let _phase = tester.stats().enter(Phase::PcDiscovery);
    let mut sepsets = SepSets::new();
    let mut ranked = Vec::new();
    for v in (0..tester.n_vars()).map(VarId).filter(|&v| v != t) {
        let r = tester.test(t, v, &[])?;
        if r.independent {
            sepsets.insert(v, Vec::new());
        } else {
            ranked.push((v, r.statistic));
        }
    }
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));

    let cap = tester.max_cond_size();
    let mut cpc: Vec<VarId> = Vec::new();
    for (cand, _) in ranked {
        cpc.push(cand);
        // Subsets without `cand` were already tried on earlier passes.
        let admitted = cpc.clone();
        for x in admitted {
            if !cpc.contains(&x) {
                continue;
            }
            let mut others: Vec<VarId> = cpc.iter().copied().filter(|&o| o != x).collect();
            others.sort_unstable();
            let must = (x != cand).then_some(cand);
            let found = first_separating(&others, 1, cap, must, |z| tester.independent(t, x, z))?;
            if let Some(z) = found {
                cpc.retain(|&o| o != x);
                sepsets.insert(x, z);
            }
        }
    }
    Ok(PcResult { pc: cpc.into_iter().collect(), sepsets })
}

/// Markov blanket of `t` through HITON-PC: PC(t), then spouses among the PCs
/// of its members.
///
/// With `symmetry` set, a member `x` whose own PC does not contain `t` is
/// dropped from PC(t) and its separating set is taken from the search that
/// excluded `t`. The PCs of all members are needed for the spouse step
/// anyway, so the check costs no extra discovery.
pub fn get_mb<T: CiTest + ?Sized>(
    tester: &T,
    t: VarId,
    cache: &PcCache,
    symmetry: bool,
) -> Result<MbResult, CiError> {
    let own = hiton_pc(tester, t, cache)?;
    let mut pc = own.pc.clone();
    let mut sepsets = own.sepsets.clone();
    let mut member_pcs = BTreeMap::new();
    for &x in &own.pc {
        let px = hiton_pc(tester, x, cache)?;
        if symmetry && !px.pc.contains(&t) {
            pc.remove(&x);
            sepsets.insert(x, px.sepsets.get(&t).cloned().unwrap_or_default());
        }
        member_pcs.insert(x, px);
    }

    let _phase = tester.stats().enter(Phase::SpouseDiscovery);
    let mut spouses: BTreeMap<VarId, VarSet> = BTreeMap::new();
    for &x in &pc {
        for &y in &member_pcs[&x].pc {
            if y == t || pc.contains(&y) {
                continue;
            }
            let Some(z) = sepsets.get(&y) else { continue };
            let mut zx = z.clone();
            if !zx.contains(&x) {
                zx.push(x);
            }
            if dependent_or_refused(tester, t, y, &zx)? {
                spouses.entry(x).or_default().insert(y);
            }
        }
    }
    Ok(MbResult { pc, spouses, sepsets })
}

/// `t` dependent on `y` given `z`; a refused (oversized) test counts as
/// "dependence not established".
pub(crate) fn dependent_or_refused<T: CiTest + ?Sized>(
    tester: &T,
    t: VarId,
    y: VarId,
    z: &[VarId],
) -> Result<bool, CiError> {
    match tester.test(t, y, z) {
        Ok(r) => Ok(!r.independent),
        Err(CiError::ConditionTooLarge { .. }) => Ok(false),
        Err(e) => Err(e),
    }
}

/// Memoized symmetric uncertainty over one dataset.
pub struct SuTable<'a> {
    data: &'a Dataset,
    memo: Mutex<HashMap<(usize, usize), f64>>,
}

impl<'a> SuTable<'a> {
    pub fn new(data: &'a Dataset) -> Self {
        SuTable { data, memo: Mutex::default() }
    }

    pub fn data(&self) -> &'a Dataset {
        self.data
    }

    pub fn get(&self, x: VarId, y: VarId) -> f64 {
        let key = (x.0.min(y.0), x.0.max(y.0));
        if let Some(&v) = self.memo.lock().unwrap().get(&key) {
            return v;
        }
        let v = symmetric_uncertainty(self.data, VarId(key.0), VarId(key.1));
        self.memo.lock().unwrap().insert(key, v);
        v
    }
}

/// FCBF relevance/redundancy filter, strongest survivor first.
pub fn fcbf_ranked(su: &SuTable<'_>, t: VarId, delta: f64) -> Vec<VarId> {
    assert!(delta >= 0.0, "delta must be non-negative");
    let mut s: Vec<(VarId, f64)> = su
        .data()
        .var_ids()
        .filter(|&x| x != t)
        .map(|x| (x, su.get(x, t)))
        .filter(|&(_, r)| r > delta)
        .collect();
    s.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let mut i = 0;
    while i < s.len() {
        let head = s[i].0;
        let mut j = i + 1;
        while j < s.len() {
            if su.get(head, s[j].0) > s[j].1 {
                s.remove(j);
            } else {
                j += 1;
            }
        }
        i += 1;
    }
    s.into_iter().map(|(x, _)| x).collect()
}

pub fn fcbf(data: &Dataset, t: VarId, delta: f64) -> VarSet {
    fcbf_ranked(&SuTable::new(data), t, delta).into_iter().collect()
}

fn fcbf_cached(su: &SuTable<'_>, t: VarId, delta: f64, cache: &PcCache) -> Arc<PcResult> {
    cache
        .get_or_try_insert_with::<std::convert::Infallible>(t, || {
            Ok(PcResult { pc: fcbf_ranked(su, t, delta).into_iter().collect(), sepsets: SepSets::new() })
        })
        .unwrap_or_else(|e| match e {})
}

/// Markov blanket by feature selection: PC(t) = FCBF(t); candidate spouses
/// come from FCBF of each member, separated from `t` by subsets of PC(t).
pub fn mb_fs<T: CiTest + ?Sized>(
    tester: &T,
    su: &SuTable<'_>,
    t: VarId,
    delta: f64,
    cache: &PcCache,
) -> Result<MbResult, CiError> {
    let pc = fcbf_cached(su, t, delta, cache).pc.clone();
    let pool: Vec<VarId> = pc.iter().copied().collect();
    let cap = tester.max_cond_size();
    let _phase = tester.stats().enter(Phase::SpouseDiscovery);

    let mut searched: HashMap<VarId, Option<Vec<VarId>>> = HashMap::new();
    let mut sepsets = SepSets::new();
    let mut spouses: BTreeMap<VarId, VarSet> = BTreeMap::new();
    for &x in &pc {
        let px = fcbf_cached(su, x, delta, cache);
        for &y in &px.pc {
            if y == t || pc.contains(&y) {
                continue;
            }
            let sep = match searched.get(&y) {
                Some(s) => s.clone(),
                None => {
                    let s = first_separating(&pool, 0, cap, None, |z| tester.independent(t, y, z))?;
                    searched.insert(y, s.clone());
                    s
                }
            };
            let Some(z) = sep else { continue };
            let mut zx = z.clone();
            sepsets.insert(y, z);
            if !zx.contains(&x) {
                zx.push(x);
            }
            if dependent_or_refused(tester, t, y, &zx)? {
                spouses.entry(x).or_default().insert(y);
            }
        }
    }
    Ok(MbResult { pc, spouses, sepsets })
}

/// Markov blanket discovery as plugged into the any-part learner.
pub trait MbBackend {
    fn markov_blanket(&self, t: VarId) -> Result<MbResult, CiError>;

    /// The PC of `x` used as the separating-set scope, with any separating
    /// sets already recorded for it.
    fn pc_scope(&self, x: VarId) -> Result<Arc<PcResult>, CiError>;

    /// True when `pc_scope(x).sepsets` covers every variable outside the PC,
    /// so a missing entry means "not separable within the scope".
    fn complete_sepsets(&self) -> bool;
}

pub struct HitonBackend<'a, T: CiTest + ?Sized> {
    pub tester: &'a T,
    pub cache: &'a PcCache,
    pub symmetry: bool,
}

impl<T: CiTest + ?Sized> MbBackend for HitonBackend<'_, T> {
    fn markov_blanket(&self, t: VarId) -> Result<MbResult, CiError> {
        get_mb(self.tester, t, self.cache, self.symmetry)
    }

    fn pc_scope(&self, x: VarId) -> Result<Arc<PcResult>, CiError> {
        hiton_pc(self.tester, x, self.cache)
    }

    fn complete_sepsets(&self) -> bool {
        true
    }
}

pub struct FcbfBackend<'a, T: CiTest + ?Sized> {
    pub tester: &'a T,
    pub su: SuTable<'a>,
    pub delta: f64,
    pub cache: PcCache,
}

impl<'a, T: CiTest + ?Sized> FcbfBackend<'a, T> {
    pub fn new(tester: &'a T, data: &'a Dataset, delta: f64) -> Self {
        FcbfBackend { tester, su: SuTable::new(data), delta, cache: PcCache::new() }
    }
}

impl<T: CiTest + ?Sized> MbBackend for FcbfBackend<'_, T> {
    fn markov_blanket(&self, t: VarId) -> Result<MbResult, CiError> {
        mb_fs(self.tester, &self.su, t, self.delta, &self.cache)
    }

    fn pc_scope(&self, x: VarId) -> Result<Arc<PcResult>, CiError> {
        Ok(fcbf_cached(&self.su, x, self.delta, &self.cache))
    }

    fn complete_sepsets(&self) -> bool {
        false
    }
}
