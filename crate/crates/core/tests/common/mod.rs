//! Shared helpers for the integration suites: an independent from-scratch
//! permanence oracle and seeded random instance generators.
//!
//! The oracle deliberately takes its own route: it scans raw adjacency and
//! assignment lookups and counts internal-neighbor pairs by brute force, so
//! it shares no code path with the library's evaluation.

#![allow(dead_code)]

use dyperm_core::graph::{CommunityId, Graph, NodeId, Partition};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleBreakdown {
    pub internal: usize,
    pub degree: usize,
    pub e_max: usize,
    pub e_neig: usize,
    pub c_in: f64,
    pub perm: f64,
}

pub fn oracle_breakdown(g: &Graph, p: &Partition, u: NodeId) -> OracleBreakdown {
    let nbrs: Vec<NodeId> = g.neighbors(u).expect("node present").iter().copied().collect();
    let degree = nbrs.len();
    let home = p.community_of(u).expect("node assigned");

    let internal_nbrs: Vec<NodeId> = nbrs
        .iter()
        .copied()
        .filter(|&w| p.community_of(w).expect("assigned") == home)
        .collect();
    let internal = internal_nbrs.len();

    let mut e_max = 0usize;
    for (c, _) in p.communities() {
        if c == home {
            continue;
        }
        let pull = nbrs
            .iter()
            .filter(|&&w| p.community_of(w) == Some(c))
            .count();
        e_max = e_max.max(pull);
    }

    let mut e_neig = 0usize;
    for i in 0..internal_nbrs.len() {
        for j in (i + 1)..internal_nbrs.len() {
            if g.has_edge(internal_nbrs[i], internal_nbrs[j]) {
                e_neig += 1;
            }
        }
    }
    let c_in = if internal >= 2 {
        e_neig as f64 / (internal * (internal - 1) / 2) as f64
    } else {
        0.0
    };

    let perm = if degree == 0 {
        0.0
    } else if e_max == 0 {
        internal as f64 / degree as f64
    } else {
        internal as f64 / (e_max as f64 * degree as f64) - (1.0 - c_in)
    };

    OracleBreakdown {
        internal,
        degree,
        e_max,
        e_neig,
        c_in,
        perm,
    }
}

pub fn oracle_graph_perm(g: &Graph, p: &Partition) -> f64 {
    let total: f64 = g.nodes().map(|u| oracle_breakdown(g, p, u).perm).sum();
    total / g.node_count() as f64
}

/// Sum of oracle permanences over the members of `c`.
pub fn oracle_community_sum(g: &Graph, p: &Partition, c: CommunityId) -> f64 {
    p.members(c)
        .expect("community exists")
        .iter()
        .map(|&u| oracle_breakdown(g, p, u).perm)
        .sum()
}

/// Erdos-Renyi style graph over `1..=max_nodes` nodes with a random density,
/// isolated nodes included.
pub fn random_graph(rng: &mut ChaCha8Rng, max_nodes: usize) -> Graph {
    let n = rng.gen_range(1..=max_nodes) as u64;
    let density: f64 = rng.gen_range(0.02..0.5);
    let mut g = Graph::new();
    for u in 0..n {
        g.add_node(NodeId(u)).unwrap();
    }
    for u in 0..n {
        for v in (u + 1)..n {
            if rng.gen_bool(density) {
                g.add_edge(NodeId(u), NodeId(v)).unwrap();
            }
        }
    }
    g
}

/// Uniformly random assignment into at most `max_labels` communities.
pub fn random_partition(rng: &mut ChaCha8Rng, g: &Graph, max_labels: usize) -> Partition {
    let k = rng.gen_range(1..=max_labels.max(1)) as u64;
    let pairs: Vec<(NodeId, CommunityId)> = g
        .nodes()
        .map(|u| (u, CommunityId(rng.gen_range(0..k))))
        .collect();
    Partition::from_assignments(&pairs)
}

pub fn random_state(rng: &mut ChaCha8Rng, max_nodes: usize) -> (Graph, Partition) {
    let g = random_graph(rng, max_nodes);
    let k = (g.node_count() / 2).max(1);
    let p = random_partition(rng, &g, k);
    (g, p)
}

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
