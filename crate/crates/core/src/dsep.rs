//! Exact independence oracle: d-separation in a known DAG.

use std::collections::{HashMap, VecDeque};
use std::sync::Mutex;

use crate::citest::{check_query, CiError, CiResult, CiStats, CiTest};
use crate::dataset::VarId;
use crate::graph::{GraphError, Pdag};

pub struct DsepOracle {
    parents: Vec<Vec<usize>>,
    children: Vec<Vec<usize>>,
    stats: CiStats,
    memo: Mutex<HashMap<(usize, usize, Vec<usize>), bool>>,
}

impl DsepOracle {
    pub fn new(dag: &Pdag) -> Result<Self, GraphError> {
        dag.check_dag()?;
        let parents = dag.vars().map(|v| dag.parents(v).map(|p| p.0).collect()).collect();
        let children = dag.vars().map(|v| dag.children(v).map(|c| c.0).collect()).collect();
        Ok(DsepOracle { parents, children, stats: CiStats::new(), memo: Mutex::default() })
    }

    /// True iff every path between `x` and `y` is blocked by `z`.
    pub fn d_separated(&self, x: VarId, y: VarId, z: &[VarId]) -> bool {
        let mut key_z: Vec<usize> = z.iter().map(|v| v.0).collect();
        key_z.sort_unstable();
        let key = (x.0.min(y.0), x.0.max(y.0), key_z);
        if let Some(&hit) = self.memo.lock().unwrap().get(&key) {
            return hit;
        }
        let sep = !self.reachable(x.0, y.0, &key.2);
        self.memo.lock().unwrap().insert(key, sep);
        sep
    }

    // Bayes-ball style reachability over (node, arrived-from-child) states.
    fn reachable(&self, x: usize, y: usize, z: &[usize]) -> bool {
        let n = self.parents.len();
        let mut in_z = vec![false; n];
        for &v in z {
            in_z[v] = true;
        }
        // ancestors of z, z included
        let mut anc = in_z.clone();
        let mut stack: Vec<usize> = z.to_vec();
        while let Some(u) = stack.pop() {
            for &p in &self.parents[u] {
                if !anc[p] {
                    anc[p] = true;
                    stack.push(p);
                }
            }
        }
        let mut seen = vec![[false; 2]; n];
        let mut queue = VecDeque::from([(x, true)]);
        while let Some((u, up)) = queue.pop_front() {
            let dir = usize::from(up);
            if seen[u][dir] {
                continue;
            }
            seen[u][dir] = true;
            if u == y {
                return true;
            }
            if up {
                if !in_z[u] {
                    queue.extend(self.parents[u].iter().map(|&p| (p, true)));
                    queue.extend(self.children[u].iter().map(|&c| (c, false)));
                }
            } else {
                if !in_z[u] {
                    queue.extend(self.children[u].iter().map(|&c| (c, false)));
                }
                if anc[u] {
                    queue.extend(self.parents[u].iter().map(|&p| (p, true)));
                }
            }
        }
        false
    }
}

impl CiTest for DsepOracle {
    fn n_vars(&self) -> usize {
        self.parents.len()
    }

    fn max_cond_size(&self) -> Option<usize> {
        None
    }

    fn evaluate(&self, x: VarId, y: VarId, z: &[VarId]) -> Result<CiResult, CiError> {
        check_query(self.n_vars(), x, y, z)?;
        let sep = self.d_separated(x, y, z);
        Ok(CiResult {
            statistic: if sep { 0.0 } else { 1.0 },
            dof: 1,
            p_value: if sep { 1.0 } else { 0.0 },
            independent: sep,
            reliable: true,
        })
    }

    fn stats(&self) -> &CiStats {
        &self.stats
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(i: usize) -> VarId {
        VarId(i)
    }

    #[test]
    fn collider_opens_on_conditioning() {
        // A=0 -> C=2 <- B=1, C -> D=3
        let o = DsepOracle::new(&Pdag::from_arcs(4, &[(0, 2), (1, 2), (2, 3)])).unwrap();
        assert!(o.d_separated(v(0), v(1), &[]));
        assert!(!o.d_separated(v(0), v(1), &[v(2)]));
        assert!(!o.d_separated(v(0), v(1), &[v(3)]));
        assert!(!o.d_separated(v(0), v(3), &[]));
        assert!(o.d_separated(v(0), v(3), &[v(2)]));
    }

    #[test]
    fn fork_and_chain() {
        let o = DsepOracle::new(&Pdag::from_arcs(3, &[(1, 0), (1, 2)])).unwrap();
        assert!(!o.d_separated(v(0), v(2), &[]));
        assert!(o.d_separated(v(0), v(2), &[v(1)]));
    }
}
