#![allow(dead_code)]

use std::collections::BTreeSet;

use apsl_core::bnio::{parse_bif, GroundTruthBn};
use apsl_core::{Pdag, VarId};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn fixture(name: &str) -> GroundTruthBn {
    let path = format!("{}/fixtures/{name}.bif", env!("CARGO_MANIFEST_DIR"));
    parse_bif(&std::fs::read_to_string(path).unwrap()).unwrap()
}

pub fn network(name: &str) -> GroundTruthBn {
    let path = format!("{}/networks/{name}.bif", env!("CARGO_MANIFEST_DIR"));
    parse_bif(&std::fs::read_to_string(path).unwrap()).unwrap()
}

pub fn network_path(name: &str) -> String {
    format!("{}/networks/{name}.bif", env!("CARGO_MANIFEST_DIR"))
}

pub fn fixture_path(name: &str) -> String {
    format!("{}/fixtures/{name}.bif", env!("CARGO_MANIFEST_DIR"))
}

/// Every DAG on `n` labelled nodes with at most `max_edges` edges.
pub fn all_dags(n: usize, max_edges: usize) -> Vec<Pdag> {
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let total = 3usize.pow(pairs.len() as u32);
    let mut out = Vec::new();
    for code in 0..total {
        let mut c = code;
        let mut arcs = Vec::new();
        for &(i, j) in &pairs {
            match c % 3 {
                1 => arcs.push((i, j)),
                2 => arcs.push((j, i)),
                _ => {}
            }
            c /= 3;
        }
        if arcs.len() > max_edges {
            continue;
        }
        let g = Pdag::from_arcs(n, &arcs);
        if g.is_acyclic() {
            out.push(g);
        }
    }
    out
}

/// Nodes reachable from `t` over the skeleton.
pub fn component(g: &Pdag, t: VarId) -> BTreeSet<VarId> {
    g.distances(t)
        .iter()
        .enumerate()
        .filter(|(_, d)| d.is_some())
        .map(|(i, _)| VarId(i))
        .collect()
}

/// A random DAG (arcs only from lower to higher index, then relabelled)
/// with random CPTs bounded away from determinism.
pub fn random_bn(seed: u64, n: usize, max_card: usize, edge_prob: f64, max_parents: usize) -> GroundTruthBn {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut perm: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        perm.swap(i, rng.random_range(0..=i));
    }
    let cards: Vec<usize> = (0..n).map(|_| rng.random_range(2..=max_card.max(2))).collect();
    let mut parents: Vec<Vec<VarId>> = vec![Vec::new(); n];
    for j in 0..n {
        for i in 0..j {
            if parents[perm[j]].len() < max_parents && rng.random_bool(edge_prob) {
                parents[perm[j]].push(VarId(perm[i]));
            }
        }
        parents[perm[j]].sort();
    }
    let cpts = (0..n)
        .map(|v| {
            let rows: usize = parents[v].iter().map(|p| cards[p.0]).product();
            (0..rows)
                .flat_map(|_| {
                    let w: Vec<f64> = (0..cards[v]).map(|_| rng.random_range(0.05..1.0f64).powi(2)).collect();
                    let s: f64 = w.iter().sum();
                    w.into_iter().map(move |x| x / s).collect::<Vec<_>>()
                })
                .collect()
        })
        .collect();
    let names = (0..n).map(|i| format!("X{i}")).collect();
    let states = cards.iter().map(|&k| (0..k).map(|s| format!("s{s}")).collect()).collect();
    GroundTruthBn::new(names, states, parents, cpts).unwrap()
}
