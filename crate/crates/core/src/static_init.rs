//! Greedy static permanence maximizer, used to produce the base community
//! structure when no ground truth is supplied.
//!
//! Starts from all-singletons and repeats local-moving sweeps: every node,
//! in seeded-shuffled order, moves to the neighboring community that most
//! improves its own permanence, provided the gain clears `min_gain`. Sweeps
//! stop when nothing moved or `max_sweeps` is reached. There is no
//! aggregation phase; the vertex-local acceptance rule mirrors the dynamic
//! engine's, which keeps the two phases consistent.
//!
//! The sweep runs over a compact index-based view of the graph, so repeated
//! invocations (the benchmark re-runs it after every event) stay cheap.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::graph::{CommunityId, Graph, NodeId, Partition};
use crate::permanence;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InitError {
    #[error("graph is empty")]
    EmptyGraph,
    #[error("max_sweeps must be at least 1")]
    NoSweeps,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitConfig {
    pub max_sweeps: usize,
    pub seed: u64,
    pub min_gain: f64,
}

impl Default for InitConfig {
    fn default() -> Self {
        InitConfig {
            max_sweeps: 20,
            seed: 0,
            min_gain: 1e-9,
        }
    }
}

struct IndexedView {
    ids: Vec<NodeId>,
    /// Sorted neighbor lists, by node index.
    adjacency: Vec<Vec<u32>>,
}

impl IndexedView {
    fn build(g: &Graph) -> Self {
        let ids: Vec<NodeId> = g.nodes().collect();
        let index: BTreeMap<NodeId, u32> = ids
            .iter()
            .enumerate()
            .map(|(i, &u)| (u, i as u32))
            .collect();
        let adjacency = ids
            .iter()
            .map(|u| {
                g.neighbors(*u)
                    .expect("present")
                    .iter()
                    .map(|v| index[v])
                    .collect()
            })
            .collect();
        IndexedView { ids, adjacency }
    }

    fn connected(&self, a: u32, b: u32) -> bool {
        self.adjacency[a as usize].binary_search(&b).is_ok()
    }
}

/// Permanence of node `i` under `labels`, evaluated as if it belonged to
/// `candidate`. `counts` are the label multiplicities of `i`'s neighbors.
fn perm_under(
    view: &IndexedView,
    labels: &[u32],
    i: usize,
    candidate: u32,
    counts: &[(u32, usize)],
) -> f64 {
    let nbrs = &view.adjacency[i];
    let degree = nbrs.len();
    if degree == 0 {
        return 0.0;
    }
    let mut internal = 0usize;
    let mut external_peak = 0usize;
    for &(label, count) in counts {
        if label == candidate {
            internal = count;
        } else {
            external_peak = external_peak.max(count);
        }
    }
    if external_peak == 0 {
        return internal as f64 / degree as f64;
    }
    let mut clustering = 0.0;
    if internal >= 2 {
        let inside: Vec<u32> = nbrs
            .iter()
            .copied()
            .filter(|&w| labels[w as usize] == candidate)
            .collect();
        let mut edges = 0usize;
        for (k, &a) in inside.iter().enumerate() {
            for &b in &inside[k + 1..] {
                if view.connected(a, b) {
                    edges += 1;
                }
            }
        }
        clustering = edges as f64 / (internal * (internal - 1) / 2) as f64;
    }
    internal as f64 / (external_peak as f64 * degree as f64) - (1.0 - clustering)
}

/// Runs the sweep scheme and returns a partition with canonical community
/// ids (numbered by ascending smallest member). Deterministic given the
/// seed; node order comes from ids, never from file order.
pub fn maximize(g: &Graph, cfg: &InitConfig) -> Result<Partition, InitError> {
    if g.is_empty() {
        return Err(InitError::EmptyGraph);
    }
    if cfg.max_sweeps == 0 {
        return Err(InitError::NoSweeps);
    }

    let view = IndexedView::build(g);
    let n = view.ids.len();
    let mut labels: Vec<u32> = (0..n as u32).collect();

    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    order.shuffle(&mut rng);

    let mut counts: Vec<(u32, usize)> = Vec::new();
    for _ in 0..cfg.max_sweeps {
        let mut moved = false;
        for &i in &order {
            let nbrs = &view.adjacency[i];
            if nbrs.is_empty() {
                continue;
            }
            counts.clear();
            for &w in nbrs {
                let label = labels[w as usize];
                match counts.iter_mut().find(|(l, _)| *l == label) {
                    Some((_, c)) => *c += 1,
                    None => counts.push((label, 1)),
                }
            }
            counts.sort_unstable_by_key(|&(l, _)| l);

            let current = labels[i];
            let held = perm_under(&view, &labels, i, current, &counts);
            let mut best_label = current;
            let mut best = held;
            for &(label, _) in &counts {
                if label == current {
                    continue;
                }
                let score = perm_under(&view, &labels, i, label, &counts);
                if score > best {
                    best = score;
                    best_label = label;
                }
            }
            if best_label != current && best - held > cfg.min_gain {
                labels[i] = best_label;
                moved = true;
            }
        }
        if !moved {
            break;
        }
    }

    Ok(canonicalize(&view.ids, &labels))
}

/// Best-of-k multi-start: runs `maximize` with seeds `cfg.seed .. +restarts`
/// and keeps the partition with the highest graph permanence (earliest seed
/// wins ties).
pub fn best_of(g: &Graph, cfg: &InitConfig, restarts: usize) -> Result<Partition, InitError> {
    let runs = restarts.max(1);
    let mut best: Option<(f64, Partition)> = None;
    for k in 0..runs {
        let attempt = maximize(
            g,
            &InitConfig {
                seed: cfg.seed.wrapping_add(k as u64),
                ..*cfg
            },
        )?;
        let score = permanence::graph_permanence(g, &attempt)
            .expect("non-empty graph")
            .graph_permanence;
        if best.as_ref().is_none_or(|(s, _)| score > *s) {
            best = Some((score, attempt));
        }
    }
    Ok(best.expect("at least one run").1)
}

/// Renumbers final labels to dense community ids ordered by each group's
/// smallest node id, detaching the output from the sweep history.
fn canonicalize(ids: &[NodeId], labels: &[u32]) -> Partition {
    let mut first_member: BTreeMap<u32, NodeId> = BTreeMap::new();
    for (i, &label) in labels.iter().enumerate() {
        let entry = first_member.entry(label).or_insert(ids[i]);
        if ids[i] < *entry {
            *entry = ids[i];
        }
    }
    let mut groups: Vec<(NodeId, u32)> = first_member.iter().map(|(&l, &m)| (m, l)).collect();
    groups.sort_unstable();
    let renumber: BTreeMap<u32, CommunityId> = groups
        .iter()
        .enumerate()
        .map(|(i, &(_, label))| (label, CommunityId(i as u64)))
        .collect();
    let mut partition = Partition::new();
    for (i, &u) in ids.iter().enumerate() {
        partition.insert(u, renumber[&labels[i]]);
    }
    partition
}
