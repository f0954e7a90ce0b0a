//! Conditional independence testing.
//!
//! The G² likelihood-ratio test on contingency tables is the statistical
//! backend; [`CiTest`] abstracts over it so exact oracles (d-separation on a
//! known DAG) can drive the same discovery code. Symmetric uncertainty is the
//! pairwise association score used by FCBF.

use std::sync::atomic::{AtomicU64, AtomicU8, Ordering};

use statrs::function::gamma::checked_gamma_ur;
use thiserror::Error;

use crate::dataset::{Dataset, VarId};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestConfig {
    pub alpha: f64,
    /// Minimum rows per degree of freedom for a test to count as reliable.
    pub reliability_factor: f64,
    /// `None` means unbounded conditioning sets.
    pub max_cond_size: Option<usize>,
    /// Count degrees of freedom per stratum over its non-empty rows and
    /// columns instead of the full table shape.
    pub adjust_dof: bool,
}

impl Default for TestConfig {
    fn default() -> Self {
        TestConfig { alpha: 0.01, reliability_factor: 5.0, max_cond_size: Some(3), adjust_dof: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CiResult {
    pub statistic: f64,
    pub dof: u64,
    pub p_value: f64,
    pub independent: bool,
    pub reliable: bool,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CiError {
    #[error("invalid CI query: {0}")]
    Usage(String),
    #[error("conditioning set of size {size} exceeds the limit {max}")]
    ConditionTooLarge { size: usize, max: usize },
}

/// Where a test was issued from; used only for instrumentation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum Phase {
    Other = 0,
    PcDiscovery = 1,
    SpouseDiscovery = 2,
    ColliderDiscovery = 3,
}

const N_PHASES: usize = 4;

/// Test counters split by phase and by whether the conditioning set was empty.
#[derive(Debug, Default)]
pub struct CiStats {
    phase: AtomicU8,
    counts: [[AtomicU64; 2]; N_PHASES],
}

impl CiStats {
    pub fn new() -> Self {
        Self::default()
    }

    /// Tags subsequent tests with `phase` until the guard drops.
    pub fn enter(&self, phase: Phase) -> PhaseGuard<'_> {
        let prev = self.phase.swap(phase as u8, Ordering::Relaxed);
        PhaseGuard { stats: self, prev }
    }

    pub fn record(&self, cond_size: usize) {
        let p = self.phase.load(Ordering::Relaxed) as usize;
        self.counts[p][usize::from(cond_size > 0)].fetch_add(1, Ordering::Relaxed);
    }

    pub fn unconditional(&self, phase: Phase) -> u64 {
        self.counts[phase as usize][0].load(Ordering::Relaxed)
    }

    pub fn conditional(&self, phase: Phase) -> u64 {
        self.counts[phase as usize][1].load(Ordering::Relaxed)
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().map(|c| c.load(Ordering::Relaxed)).sum()
    }

    pub fn total_conditional(&self) -> u64 {
        self.counts.iter().map(|c| c[1].load(Ordering::Relaxed)).sum()
    }

    pub fn snapshot(&self) -> TestCounts {
        TestCounts {
            total: self.total(),
            conditional: self.total_conditional(),
            pc_conditional: self.conditional(Phase::PcDiscovery),
        }
    }

    pub fn reset(&self) {
        for c in self.counts.iter().flatten() {
            c.store(0, Ordering::Relaxed);
        }
    }
}

/// Plain copy of the counters that matter for reporting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
pub struct TestCounts {
    pub total: u64,
    pub conditional: u64,
    /// Tests with a non-empty conditioning set issued during PC discovery.
    pub pc_conditional: u64,
}

impl std::ops::Add for TestCounts {
    type Output = TestCounts;

    fn add(self, o: TestCounts) -> TestCounts {
        TestCounts {
            total: self.total + o.total,
            conditional: self.conditional + o.conditional,
            pc_conditional: self.pc_conditional + o.pc_conditional,
        }
    }
}

pub struct PhaseGuard<'a> {
    stats: &'a CiStats,
    prev: u8,
}

impl Drop for PhaseGuard<'_> {
    fn drop(&mut self) {
        self.stats.phase.store(self.prev, Ordering::Relaxed);
    }
}

/// An independence oracle over `n_vars()` variables.
pub trait CiTest: Sync {
    fn n_vars(&self) -> usize;

    /// Cap on conditioning-set size for subset searches.
    fn max_cond_size(&self) -> Option<usize>;

    /// Uncounted test of `x ⫫ y | z`.
    fn evaluate(&self, x: VarId, y: VarId, z: &[VarId]) -> Result<CiResult, CiError>;

    fn stats(&self) -> &CiStats;

    fn test(&self, x: VarId, y: VarId, z: &[VarId]) -> Result<CiResult, CiError> {
        self.stats().record(z.len());
        self.evaluate(x, y, z)
    }

    fn independent(&self, x: VarId, y: VarId, z: &[VarId]) -> Result<bool, CiError> {
        Ok(self.test(x, y, z)?.independent)
    }
}

/// G² test over a dataset.
pub struct G2Test<'a> {
    data: &'a Dataset,
    cfg: TestConfig,
    stats: CiStats,
}

impl<'a> G2Test<'a> {
    pub fn new(data: &'a Dataset, cfg: TestConfig) -> Self {
        G2Test { data, cfg, stats: CiStats::new() }
    }

    pub fn data(&self) -> &'a Dataset {
        self.data
    }

    pub fn config(&self) -> &TestConfig {
        &self.cfg
    }
}

impl CiTest for G2Test<'_> {
    fn n_vars(&self) -> usize {
        self.data.n_vars()
    }

    fn max_cond_size(&self) -> Option<usize> {
        self.cfg.max_cond_size
    }

    fn evaluate(&self, x: VarId, y: VarId, z: &[VarId]) -> Result<CiResult, CiError> {
        g2_test(self.data, x, y, z, &self.cfg)
    }

    fn stats(&self) -> &CiStats {
        &self.stats
    }
}

pub(crate) fn check_query(n: usize, x: VarId, y: VarId, z: &[VarId]) -> Result<(), CiError> {
    if x.0 >= n || y.0 >= n || z.iter().any(|v| v.0 >= n) {
        return Err(CiError::Usage(format!("variable out of range (n = {n})")));
    }
    if x == y {
        return Err(CiError::Usage(format!("x and y are both {x}")));
    }
    if z.contains(&x) || z.contains(&y) {
        return Err(CiError::Usage("conditioning set contains x or y".into()));
    }
    for (i, v) in z.iter().enumerate() {
        if z[..i].contains(v) {
            return Err(CiError::Usage(format!("conditioning set repeats {v}")));
        }
    }
    Ok(())
}

/// Above this many cells the joint table is tallied by sorting row keys
/// instead of a dense array.
const DENSE_CELL_LIMIT: usize = 1 << 20;

/// G² test of `x ⫫ y | z`.
///
/// Empty cells contribute nothing and empty strata are skipped; unless
/// `adjust_dof` is set the degrees of freedom are not reduced for them. Tests with fewer than
/// `reliability_factor` rows per degree of freedom are reported unreliable and
/// independent.
pub fn g2_test(
    data: &Dataset,
    x: VarId,
    y: VarId,
    z: &[VarId],
    cfg: &TestConfig,
) -> Result<CiResult, CiError> {
    check_query(data.n_vars(), x, y, z)?;
    if let Some(max) = cfg.max_cond_size {
        if z.len() > max {
            return Err(CiError::ConditionTooLarge { size: z.len(), max });
        }
    }
    let kx = data.cardinality(x);
    let ky = data.cardinality(y);
    let strata: usize = z.iter().map(|&v| data.cardinality(v)).product();
    let dof = ((kx - 1) * (ky - 1)) as u64 * strata as u64;
    let dof = dof.max(1);

    let n = data.n_rows();
    let cell = kx * ky;
    let mut keys = vec![0usize; n];
    for &v in z {
        let k = data.cardinality(v);
        for (key, &c) in keys.iter_mut().zip(data.column(v)) {
            *key = *key * k + c as usize;
        }
    }
    for ((key, &cx), &cy) in keys.iter_mut().zip(data.column(x)).zip(data.column(y)) {
        *key = (*key * kx + cx as usize) * ky + cy as usize;
    }

    let (statistic, observed_dof) = if strata.saturating_mul(cell) <= DENSE_CELL_LIMIT {
        let mut counts = vec![0u64; strata * cell];
        for k in keys {
            counts[k] += 1;
        }
        counts
            .chunks(cell)
            .map(|t| stratum_g2(t, kx, ky))
            .fold((0.0, 0u64), |(g, d), (gs, ds)| (g + gs, d + ds))
    } else {
        keys.sort_unstable();
        let (mut total, mut dsum) = (0.0, 0u64);
        let mut table = vec![0u64; cell];
        let mut i = 0;
        while i < keys.len() {
            let s = keys[i] / cell;
            table.iter_mut().for_each(|c| *c = 0);
            while i < keys.len() && keys[i] / cell == s {
                table[keys[i] % cell] += 1;
                i += 1;
            }
            let (g, d) = stratum_g2(&table, kx, ky);
            total += g;
            dsum += d;
        }
        (total, dsum)
    };
    let dof = if cfg.adjust_dof { observed_dof.max(1) } else { dof };
    let statistic = statistic.max(0.0);
    let p_value = chi2_sf(statistic, dof);
    let reliable = n as f64 >= cfg.reliability_factor * dof as f64;
    let independent = !reliable || p_value > cfg.alpha;
    Ok(CiResult { statistic, dof, p_value, independent, reliable })
}

/// G² contribution of one stratum and its degrees of freedom over non-empty
/// rows and columns.
fn stratum_g2(table: &[u64], kx: usize, ky: usize) -> (f64, u64) {
    let total: u64 = table.iter().sum();
    if total == 0 {
        return (0.0, 0);
    }
    let mut rows = vec![0u64; kx];
    let mut cols = vec![0u64; ky];
    for i in 0..kx {
        for j in 0..ky {
            let c = table[i * ky + j];
            rows[i] += c;
            cols[j] += c;
        }
    }
    let nt = total as f64;
    let mut g = 0.0;
    for i in 0..kx {
        for j in 0..ky {
            let o = table[i * ky + j];
            if o > 0 {
                let o = o as f64;
                let e = rows[i] as f64 * cols[j] as f64 / nt;
                g += o * (o / e).ln();
            }
        }
    }
    let live = |m: &[u64]| m.iter().filter(|&&c| c > 0).count().saturating_sub(1) as u64;
    (2.0 * g, live(&rows) * live(&cols))
}

/// Upper tail of the chi-squared distribution, `Q(dof/2, stat/2)`.
pub fn chi2_sf(statistic: f64, dof: u64) -> f64 {
    if statistic <= 0.0 {
        return 1.0;
    }
    checked_gamma_ur(dof as f64 / 2.0, statistic / 2.0)
        .unwrap_or(0.0)
        .clamp(0.0, 1.0)
}

fn entropy_bits(counts: &[u64], total: f64) -> f64 {
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / total;
            -p * p.log2()
        })
        .sum()
}

/// `SU(X;Y) = 2·I(X;Y) / (H(X) + H(Y))` from empirical frequencies, in bits.
/// Zero when both variables are constant.
pub fn symmetric_uncertainty(data: &Dataset, x: VarId, y: VarId) -> f64 {
    assert_ne!(x, y, "symmetric uncertainty of a variable with itself");
    let joint = data.count(&[x, y]).expect("valid variable ids");
    let n = data.n_rows() as f64;
    let hx = entropy_bits(&joint.marginal(&[0]).counts, n);
    let hy = entropy_bits(&joint.marginal(&[1]).counts, n);
    let denom = hx + hy;
    if denom <= 0.0 {
        return 0.0;
    }
    let hxy = entropy_bits(&joint.counts, n);
    (2.0 * (denom - hxy) / denom).clamp(0.0, 1.0)
}
