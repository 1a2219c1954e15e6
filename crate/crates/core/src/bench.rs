//! Incremental-versus-static benchmark harness.
//!
//! Runs one event stream through two arms: the incremental engine, and a
//! full static re-initialization after every event. Reports per-event
//! latencies, totals, the speedup ratio and the final-partition agreement
//! between the arms. Each row also carries the edge count of the affected
//! communities before the event, which is what per-event latency is expected
//! to scale with.

use std::time::Instant;

use crate::engine::{Engine, EngineError};
use crate::evaluation;
use crate::graph::{AtomicEvent, EventKind, Graph, NodeId, Partition};
use crate::static_init::{self, InitConfig};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BenchRow {
    pub index: usize,
    pub timestamp: u64,
    pub kind: String,
    /// Edges with at least one endpoint in the pre-event communities of the
    /// nodes the event touches.
    pub affected_edges: usize,
    pub incremental_us: u128,
    pub static_us: u128,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    pub incremental_total_us: u128,
    pub static_total_us: u128,
    /// `static_total / incremental_total`; 1.0 for an empty stream.
    pub speedup: f64,
    /// NMI between the two arms' final partitions.
    pub final_agreement: f64,
}

/// Edges with at least one endpoint in the communities the event touches,
/// measured before the event is applied.
pub fn affected_edges(graph: &Graph, partition: &Partition, kind: &EventKind) -> usize {
    let seeds: Vec<NodeId> = match *kind {
        EventKind::NewNode(_) => return 0,
        EventKind::RemoveNode(u) => vec![u],
        EventKind::NewEdge(u, v) | EventKind::RemoveEdge(u, v) => vec![u, v],
    };
    let mut union = std::collections::BTreeSet::new();
    for s in seeds {
        if let Some(c) = partition.community_of(s) {
            if let Some(members) = partition.members(c) {
                union.extend(members.iter().copied());
            }
        }
    }
    let mut count = 0usize;
    for &u in &union {
        if let Some(nbrs) = graph.neighbors(u) {
            for &w in nbrs {
                if !union.contains(&w) || u < w {
                    count += 1;
                }
            }
        }
    }
    count
}

pub fn run(
    graph: &Graph,
    base: &Partition,
    events: &[AtomicEvent],
    init: &InitConfig,
) -> Result<BenchReport, EngineError> {
    let mut engine = Engine::new(graph.clone(), base.clone())?;
    let mut static_graph = graph.clone();
    let mut static_partition = base.clone();

    let mut rows = Vec::with_capacity(events.len());
    let mut incremental_total_us = 0u128;
    let mut static_total_us = 0u128;

    for (index, event) in events.iter().enumerate() {
        let affected = affected_edges(engine.graph(), engine.partition(), &event.kind);

        let started = Instant::now();
        engine.apply(event)?;
        let incremental_us = started.elapsed().as_micros();

        static_graph.apply_event(event.kind)?;
        let started = Instant::now();
        static_partition = static_init::maximize(&static_graph, init)
            .map_err(|e| EngineError::InvalidArgument(e.to_string()))?;
        let static_us = started.elapsed().as_micros();

        incremental_total_us += incremental_us;
        static_total_us += static_us;
        rows.push(BenchRow {
            index,
            timestamp: event.timestamp,
            kind: event.kind.to_string(),
            affected_edges: affected,
            incremental_us,
            static_us,
        });
    }

    let speedup = if incremental_total_us == 0 {
        1.0
    } else {
        static_total_us as f64 / incremental_total_us as f64
    };
    let final_agreement = evaluation::nmi(engine.partition(), &static_partition)
        .unwrap_or(0.0);

    Ok(BenchReport {
        rows,
        incremental_total_us,
        static_total_us,
        speedup,
        final_agreement,
    })
}
