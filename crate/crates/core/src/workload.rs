//! Synthetic dynamic-network generation and snapshot diffing.
//!
//! The generator draws an initial planted-partition graph (within/between
//! edge probabilities derived from the average degree, the mixing ratio and
//! the community count) and then emits one batch of events per step:
//!
//! 1. a churn-proportional number of nodes migrate to a new planted label,
//!    deleting all of their edges and resampling them against the new label;
//! 2. a churn-fraction of the surviving edges is deleted uniformly;
//! 3. the same number of fresh edges is sampled, respecting current labels.
//!
//! Every step also records the planted labels as that step's ground truth.
//! With `churn = 0` no events are emitted and the truth stays constant.
//! Everything is driven by a single seeded stream, so identical configs
//! reproduce identical workloads byte for byte.

use std::collections::BTreeSet;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::graph::{AtomicEvent, EventKind, NodeId};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WorkloadError {
    #[error("invalid generator config: {0}")]
    ConfigInvalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenConfig {
    pub n: usize,
    pub k: usize,
    /// Fraction of a node's edges expected to be external, in [0, 1).
    pub mu: f64,
    pub avg_degree: f64,
    pub steps: usize,
    /// Fraction of edges rewired per step, in [0, 1). Also scales the number
    /// of per-step label migrations (`round(n * churn / 2)`).
    pub churn: f64,
    pub seed: u64,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            n: 1000,
            k: 20,
            mu: 0.2,
            avg_degree: 10.0,
            steps: 20,
            churn: 0.02,
            seed: 1,
        }
    }
}

/// A generated dynamic network: initial snapshot, per-step ground truth
/// (index 0 is the base structure) and the event stream.
#[derive(Debug, Clone, PartialEq)]
pub struct Workload {
    pub initial_edges: Vec<(NodeId, NodeId)>,
    pub truths: Vec<Vec<(NodeId, u64)>>,
    pub events: Vec<AtomicEvent>,
}

const PARTNER_RETRIES: usize = 64;

struct GenState {
    labels: Vec<u32>,
    members: Vec<Vec<u32>>,
    edges: BTreeSet<(u32, u32)>,
    adjacency: Vec<BTreeSet<u32>>,
}

impl GenState {
    fn insert_edge(&mut self, a: u32, b: u32) {
        self.edges.insert((a.min(b), a.max(b)));
        self.adjacency[a as usize].insert(b);
        self.adjacency[b as usize].insert(a);
    }

    fn remove_edge(&mut self, a: u32, b: u32) {
        self.edges.remove(&(a.min(b), a.max(b)));
        self.adjacency[a as usize].remove(&b);
        self.adjacency[b as usize].remove(&a);
    }

    fn has_edge(&self, a: u32, b: u32) -> bool {
        self.edges.contains(&(a.min(b), a.max(b)))
    }

    fn relabel(&mut self, node: u32, to: u32) {
        let from = self.labels[node as usize];
        let bucket = &mut self.members[from as usize];
        let pos = bucket.iter().position(|&m| m == node).expect("member listed");
        bucket.swap_remove(pos);
        self.labels[node as usize] = to;
        self.members[to as usize].push(node);
    }
}

fn validate(cfg: &GenConfig) -> Result<(), WorkloadError> {
    let fail = |msg: String| Err(WorkloadError::ConfigInvalid(msg));
    if cfg.k == 0 || cfg.n < cfg.k {
        return fail(format!("need n >= k >= 1, got n={} k={}", cfg.n, cfg.k));
    }
    if !(0.0..1.0).contains(&cfg.mu) {
        return fail(format!("mu must lie in [0, 1), got {}", cfg.mu));
    }
    if !(0.0..1.0).contains(&cfg.churn) {
        return fail(format!("churn must lie in [0, 1), got {}", cfg.churn));
    }
    if cfg.avg_degree < 0.0 || cfg.avg_degree >= cfg.n as f64 {
        return fail(format!(
            "avg_degree must lie in [0, n), got {}",
            cfg.avg_degree
        ));
    }
    let mean_size = cfg.n as f64 / cfg.k as f64;
    let internal_target = (1.0 - cfg.mu) * cfg.avg_degree;
    if internal_target > 0.0 && (mean_size - 1.0) < internal_target {
        return fail(format!(
            "internal degree target {internal_target:.2} exceeds community capacity {:.2}",
            mean_size - 1.0
        ));
    }
    if cfg.k == 1 && cfg.mu * cfg.avg_degree > 0.0 {
        return fail("external edges impossible with a single community".into());
    }
    Ok(())
}

/// Uniform partner for `node` with a label equal (internal) or unequal
/// (external) to `label`, avoiding self-loops and existing edges.
fn sample_partner(
    state: &GenState,
    rng: &mut ChaCha8Rng,
    node: u32,
    label: u32,
    internal: bool,
    n: usize,
) -> Option<u32> {
    for _ in 0..PARTNER_RETRIES {
        let candidate = if internal {
            let bucket = &state.members[label as usize];
            if bucket.len() < 2 {
                return None;
            }
            bucket[rng.gen_range(0..bucket.len())]
        } else {
            rng.gen_range(0..n) as u32
        };
        if candidate == node {
            continue;
        }
        if internal != (state.labels[candidate as usize] == label) {
            continue;
        }
        if state.has_edge(node, candidate) {
            continue;
        }
        return Some(candidate);
    }
    None
}

pub fn generate(cfg: &GenConfig) -> Result<Workload, WorkloadError> {
    validate(cfg)?;
    let n = cfg.n;
    let k = cfg.k;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    // Contiguous planted blocks, sizes differing by at most one.
    let labels: Vec<u32> = (0..n).map(|i| ((i * k) / n) as u32).collect();
    let mut members = vec![Vec::new(); k];
    for (i, &l) in labels.iter().enumerate() {
        members[l as usize].push(i as u32);
    }
    let mut state = GenState {
        labels,
        members,
        edges: BTreeSet::new(),
        adjacency: vec![BTreeSet::new(); n],
    };

    let mean_size = n as f64 / k as f64;
    let p_in = if mean_size > 1.0 {
        ((1.0 - cfg.mu) * cfg.avg_degree / (mean_size - 1.0)).min(1.0)
    } else {
        0.0
    };
    let p_out = if n as f64 > mean_size {
        (cfg.mu * cfg.avg_degree / (n as f64 - mean_size)).min(1.0)
    } else {
        0.0
    };
    for u in 0..n as u32 {
        for v in (u + 1)..n as u32 {
            let p = if state.labels[u as usize] == state.labels[v as usize] {
                p_in
            } else {
                p_out
            };
            if p > 0.0 && rng.gen_bool(p) {
                state.insert_edge(u, v);
            }
        }
    }
    // The snapshot file format carries nodes only as edge endpoints, so give
    // every node at least one internal edge; otherwise replaying the stream
    // against the written snapshot could reference an unknown node.
    if cfg.avg_degree > 0.0 {
        for u in 0..n as u32 {
            if state.adjacency[u as usize].is_empty() {
                let label = state.labels[u as usize];
                if let Some(w) = sample_partner(&state, &mut rng, u, label, true, n) {
                    state.insert_edge(u, w);
                }
            }
        }
    }

    let initial_edges: Vec<(NodeId, NodeId)> = state
        .edges
        .iter()
        .map(|&(a, b)| (NodeId(a as u64), NodeId(b as u64)))
        .collect();
    let snapshot_truth = |state: &GenState| {
        state
            .labels
            .iter()
            .enumerate()
            .map(|(i, &l)| (NodeId(i as u64), l as u64))
            .collect::<Vec<_>>()
    };

    let mut truths = vec![snapshot_truth(&state)];
    let mut events = Vec::new();
    let migrations_per_step = (n as f64 * cfg.churn / 2.0).round() as usize;

    for step in 1..=cfg.steps as u64 {
        let mut push = |kind: EventKind| {
            events.push(AtomicEvent {
                timestamp: step,
                kind,
            })
        };

        // Label migrations with full rewiring.
        if migrations_per_step > 0 && k > 1 {
            let mut movers: Vec<usize> = index::sample(&mut rng, n, migrations_per_step).into_vec();
            movers.sort_unstable();
            for x in movers {
                let x = x as u32;
                let old = state.labels[x as usize];
                let mut fresh = rng.gen_range(0..k as u32 - 1);
                if fresh >= old {
                    fresh += 1;
                }
                state.relabel(x, fresh);

                let old_edges: Vec<u32> = state.adjacency[x as usize].iter().copied().collect();
                for &w in &old_edges {
                    state.remove_edge(x, w);
                    push(EventKind::RemoveEdge(NodeId(x as u64), NodeId(w as u64)));
                }
                for _ in 0..old_edges.len() {
                    let internal = !rng.gen_bool(cfg.mu);
                    if let Some(w) = sample_partner(&state, &mut rng, x, fresh, internal, n) {
                        state.insert_edge(x, w);
                        push(EventKind::NewEdge(NodeId(x as u64), NodeId(w as u64)));
                    }
                }
            }
        }

        // Uniform edge churn: deletions then matching additions.
        let rewires = (cfg.churn * state.edges.len() as f64).round() as usize;
        if rewires > 0 {
            let snapshot: Vec<(u32, u32)> = state.edges.iter().copied().collect();
            let mut picks: Vec<usize> = index::sample(&mut rng, snapshot.len(), rewires).into_vec();
            picks.sort_unstable();
            for i in picks {
                let (a, b) = snapshot[i];
                state.remove_edge(a, b);
                push(EventKind::RemoveEdge(NodeId(a as u64), NodeId(b as u64)));
            }
            for _ in 0..rewires {
                let u = rng.gen_range(0..n) as u32;
                let internal = !rng.gen_bool(cfg.mu);
                let label = state.labels[u as usize];
                if let Some(w) = sample_partner(&state, &mut rng, u, label, internal, n) {
                    state.insert_edge(u, w);
                    push(EventKind::NewEdge(NodeId(u as u64), NodeId(w as u64)));
                }
            }
        }

        truths.push(snapshot_truth(&state));
    }

    Ok(Workload {
        initial_edges,
        truths,
        events,
    })
}

/// Turns a pair of edge-list snapshots into the event stream that rewrites
/// the first into the second. Ordering: node additions, edge additions,
/// edge removals, node removals, each group ascending, so no event ever
/// references an absent node. All events carry timestamp 1.
pub fn snapshot_diff(
    a: &[(NodeId, NodeId)],
    b: &[(NodeId, NodeId)],
) -> Vec<AtomicEvent> {
    let normalize = |edges: &[(NodeId, NodeId)]| -> BTreeSet<(NodeId, NodeId)> {
        edges
            .iter()
            .map(|&(u, v)| (u.min(v), u.max(v)))
            .collect()
    };
    let nodes_of = |edges: &BTreeSet<(NodeId, NodeId)>| -> BTreeSet<NodeId> {
        edges.iter().flat_map(|&(u, v)| [u, v]).collect()
    };
    let ea = normalize(a);
    let eb = normalize(b);
    let na = nodes_of(&ea);
    let nb = nodes_of(&eb);

    let mut events = Vec::new();
    let mut push = |kind: EventKind| events.push(AtomicEvent { timestamp: 1, kind });
    for &u in nb.difference(&na) {
        push(EventKind::NewNode(u));
    }
    for &(u, v) in eb.difference(&ea) {
        push(EventKind::NewEdge(u, v));
    }
    for &(u, v) in ea.difference(&eb) {
        push(EventKind::RemoveEdge(u, v));
    }
    for &u in na.difference(&nb) {
        push(EventKind::RemoveNode(u));
    }
    events
}
