//! Incremental community maintenance.
//!
//! The engine owns one `(Graph, Partition)` pair and mutates it one atomic
//! event at a time. Partition changes are only ever accepted when the summed
//! permanence of the affected communities strictly improves (with tolerance
//! [`EPSILON`]); ties keep the incumbent structure so symmetric instances do
//! not oscillate.
//!
//! Event handling:
//!
//! * node addition: the node starts as a fresh singleton; any incident
//!   edges are then replayed as ordinary edge additions in the given order.
//! * node deletion: incident edges are deleted one by one (ascending
//!   neighbor id), then the isolated node is dropped.
//! * edge addition: an intra-community edge never changes the partition.
//!   An inter-community edge triggers a migration proposal in both
//!   directions; the better one is applied if it beats the status quo.
//! * edge deletion: endpoints that drop to degree zero become fresh
//!   singletons; an inter-community deletion changes nothing else; an
//!   intra-community deletion runs a connectivity check and may split the
//!   community when the split's summed permanence wins.
//!
//! A per-vertex permanence cache is maintained incrementally: every mutation
//! marks the vertices whose score may have changed (the endpoints, their
//! common neighbors, and for membership moves the mover plus its neighbors)
//! and the cache is refreshed at the end of each public operation. The
//! [`Engine::audit`] walk reconciles the cache against a from-scratch
//! evaluation.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use thiserror::Error;

use crate::graph::{AtomicEvent, CommunityId, EventKind, Graph, GraphError, NodeId, Partition};
use crate::permanence::{self, PermanenceError, EPSILON};

/// Tolerance for reconciling the incremental cache against a from-scratch
/// recomputation.
pub const AUDIT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Permanence(#[from] PermanenceError),
    #[error("partition does not cover the graph: {0}")]
    PartitionMismatch(String),
    #[error("{0}")]
    InvalidArgument(String),
    #[error("audit failed: {0}")]
    AuditFailed(String),
}

/// One applied reassignment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MoveRecord {
    pub node: NodeId,
    pub from: CommunityId,
    pub to: CommunityId,
}

/// Outcome of a tentative migration, evaluated over the two affected
/// communities. The proposal is applied by the caller only when
/// `perm_after > perm_before + EPSILON`.
#[derive(Debug, Clone, PartialEq)]
pub struct MoveProposal {
    pub moves: Vec<MoveRecord>,
    pub perm_before: f64,
    pub perm_after: f64,
}

/// What one event changed: applied moves plus created/removed communities.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ChangeSummary {
    pub moves: Vec<MoveRecord>,
    pub created: Vec<CommunityId>,
    pub removed: Vec<CommunityId>,
}

impl ChangeSummary {
    fn merge(&mut self, other: ChangeSummary) {
        self.moves.extend(other.moves);
        self.created.extend(other.created);
        self.removed.extend(other.removed);
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EngineStats {
    pub events_processed: u64,
    pub nodes_moved: u64,
    pub communities_created: u64,
    pub communities_split: u64,
}

#[derive(Debug, Clone)]
pub struct Engine {
    graph: Graph,
    partition: Partition,
    next_community: u64,
    perm_cache: BTreeMap<NodeId, f64>,
    dirty: BTreeSet<NodeId>,
    stats: EngineStats,
}

impl Engine {
    /// Takes ownership of a base snapshot and its base community structure.
    /// The partition must cover exactly the graph's node set.
    pub fn new(graph: Graph, partition: Partition) -> Result<Self, EngineError> {
        for u in graph.nodes() {
            if partition.community_of(u).is_none() {
                return Err(EngineError::PartitionMismatch(format!(
                    "node {u} has no community"
                )));
            }
        }
        if partition.len() != graph.node_count() {
            return Err(EngineError::PartitionMismatch(format!(
                "partition assigns {} nodes, graph has {}",
                partition.len(),
                graph.node_count()
            )));
        }
        let next_community = partition.max_community_id().map_or(0, |c| c.0 + 1);
        let mut engine = Engine {
            graph,
            partition,
            next_community,
            perm_cache: BTreeMap::new(),
            dirty: BTreeSet::new(),
            stats: EngineStats::default(),
        };
        for u in engine.graph.nodes().collect::<Vec<_>>() {
            let b = permanence::vertex_breakdown(&engine.graph, &engine.partition, u)?;
            engine.perm_cache.insert(u, b.permanence);
        }
        Ok(engine)
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn stats(&self) -> EngineStats {
        self.stats
    }

    /// Incrementally maintained graph permanence: the cached per-vertex
    /// scores averaged over the current node count.
    pub fn maintained_graph_permanence(&self) -> f64 {
        if self.graph.is_empty() {
            return 0.0;
        }
        self.perm_cache.values().sum::<f64>() / self.graph.node_count() as f64
    }

    /// Dispatches one event to the matching handler.
    pub fn apply(&mut self, event: &AtomicEvent) -> Result<ChangeSummary, EngineError> {
        let summary = match event.kind {
            EventKind::NewNode(u) => self.add_node(u, &[]),
            EventKind::RemoveNode(u) => self.remove_node(u),
            EventKind::NewEdge(u, v) => self.add_edge(u, v),
            EventKind::RemoveEdge(u, v) => self.remove_edge(u, v),
        }?;
        Ok(summary)
    }

    /// Adds `u` as a fresh singleton, then replays its incident edges in the
    /// given order. All edges are validated up front, so either every edge
    /// applies or nothing does.
    pub fn add_node(
        &mut self,
        u: NodeId,
        incident: &[(NodeId, NodeId)],
    ) -> Result<ChangeSummary, EngineError> {
        if self.graph.has_node(u) {
            return Err(GraphError::DuplicateNode(u).into());
        }
        let mut seen = BTreeSet::new();
        for &(a, b) in incident {
            let other = if a == u {
                b
            } else if b == u {
                a
            } else {
                return Err(EngineError::InvalidArgument(format!(
                    "incident edge {a} {b} does not touch node {u}"
                )));
            };
            if other == u {
                return Err(GraphError::SelfLoop(u).into());
            }
            if !self.graph.has_node(other) {
                return Err(GraphError::MissingNode(other).into());
            }
            if !seen.insert(other) {
                return Err(GraphError::DuplicateEdge(u, other).into());
            }
        }

        let mut summary = ChangeSummary::default();
        self.graph.add_node(u)?;
        let home = self.fresh_community();
        self.partition.insert(u, home);
        summary.created.push(home);
        self.dirty.insert(u);
        for &(a, b) in incident {
            summary.merge(self.add_edge_inner(a, b)?);
        }
        self.flush_dirty();
        self.stats.events_processed += 1;
        Ok(summary)
    }

    /// Deletes `u`'s incident edges one by one (ascending neighbor id) and
    /// removes the then-isolated node. The final structure does not depend
    /// on the deletion order.
    pub fn remove_node(&mut self, u: NodeId) -> Result<ChangeSummary, EngineError> {
        if !self.graph.has_node(u) {
            return Err(GraphError::MissingNode(u).into());
        }
        let mut summary = ChangeSummary::default();
        let neighbors: Vec<NodeId> = self.graph.neighbors(u).expect("present").iter().copied().collect();
        for w in neighbors {
            summary.merge(self.remove_edge_inner(u, w)?);
        }
        let (home, emptied) = self.partition.remove(u)?;
        if emptied {
            summary.removed.push(home);
        }
        self.graph.remove_node(u)?;
        self.perm_cache.remove(&u);
        self.dirty.remove(&u);
        self.flush_dirty();
        self.stats.events_processed += 1;
        Ok(summary)
    }

    pub fn add_edge(&mut self, u: NodeId, v: NodeId) -> Result<ChangeSummary, EngineError> {
        let summary = self.add_edge_inner(u, v)?;
        self.flush_dirty();
        self.stats.events_processed += 1;
        Ok(summary)
    }

    pub fn remove_edge(&mut self, u: NodeId, v: NodeId) -> Result<ChangeSummary, EngineError> {
        let summary = self.remove_edge_inner(u, v)?;
        self.flush_dirty();
        self.stats.events_processed += 1;
        Ok(summary)
    }

    /// Evaluates the tentative migration of `mover` into `target`: the mover
    /// moves first, then a FIFO frontier seeded with its former internal
    /// neighbors lets each visited node follow iff its own score strictly
    /// improves. Movers recruit their own former internal neighbors into the
    /// frontier; every node is visited at most once. The state is left
    /// untouched; the returned proposal can be applied by the caller.
    pub fn propose_move(
        &mut self,
        mover: NodeId,
        target: CommunityId,
    ) -> Result<MoveProposal, EngineError> {
        if self.partition.community_of(mover).is_none() {
            return Err(GraphError::MissingNode(mover).into());
        }
        if self.partition.members(target).is_none() {
            return Err(PermanenceError::MissingCommunity(target).into());
        }
        let proposal = self.propose_inner(mover, target);
        self.flush_dirty();
        Ok(proposal)
    }

    /// Connectivity check and split evaluation for community `c` after the
    /// intra-community edge `(u, v)` has already been removed from the graph.
    pub fn resolve_intra_split(
        &mut self,
        c: CommunityId,
        u: NodeId,
        v: NodeId,
    ) -> Result<ChangeSummary, EngineError> {
        if self.partition.members(c).is_none() {
            return Err(PermanenceError::MissingCommunity(c).into());
        }
        if self.partition.community_of(u) != Some(c) {
            return Err(GraphError::MissingNode(u).into());
        }
        if self.partition.community_of(v) != Some(c) {
            return Err(GraphError::MissingNode(v).into());
        }
        let summary = self.split_inner(c, u, v);
        self.flush_dirty();
        Ok(summary)
    }

    /// From-scratch reconciliation of the incremental state: structural
    /// graph and partition audits, exact coverage, and per-vertex agreement
    /// between the cache and a fresh evaluation within [`AUDIT_TOLERANCE`].
    pub fn audit(&self) -> Result<(), EngineError> {
        self.graph.validate().map_err(EngineError::AuditFailed)?;
        self.partition.validate().map_err(EngineError::AuditFailed)?;
        if self.partition.len() != self.graph.node_count() {
            return Err(EngineError::AuditFailed(format!(
                "partition assigns {} nodes, graph has {}",
                self.partition.len(),
                self.graph.node_count()
            )));
        }
        if self.perm_cache.len() != self.graph.node_count() {
            return Err(EngineError::AuditFailed(format!(
                "cache holds {} entries, graph has {} nodes",
                self.perm_cache.len(),
                self.graph.node_count()
            )));
        }
        for u in self.graph.nodes() {
            if self.partition.community_of(u).is_none() {
                return Err(EngineError::AuditFailed(format!("node {u} unassigned")));
            }
            let fresh = permanence::vertex_breakdown(&self.graph, &self.partition, u)
                .map_err(|e| EngineError::AuditFailed(e.to_string()))?
                .permanence;
            let cached = *self.perm_cache.get(&u).unwrap_or(&f64::NAN);
            if (fresh - cached).abs() > AUDIT_TOLERANCE {
                return Err(EngineError::AuditFailed(format!(
                    "stale permanence for node {u}: cached {cached}, fresh {fresh}"
                )));
            }
        }
        Ok(())
    }

    fn fresh_community(&mut self) -> CommunityId {
        let c = CommunityId(self.next_community);
        self.next_community += 1;
        self.stats.communities_created += 1;
        c
    }

    fn mark_dirty_edge(&mut self, u: NodeId, v: NodeId) {
        self.dirty.insert(u);
        self.dirty.insert(v);
        if let (Some(nu), Some(nv)) = (self.graph.neighbors(u), self.graph.neighbors(v)) {
            let (small, large) = if nu.len() <= nv.len() { (nu, nv) } else { (nv, nu) };
            for &w in small {
                if large.contains(&w) {
                    self.dirty.insert(w);
                }
            }
        }
    }

    fn mark_dirty_move(&mut self, u: NodeId) {
        self.dirty.insert(u);
        if let Some(nbrs) = self.graph.neighbors(u) {
            self.dirty.extend(nbrs.iter().copied());
        }
    }

    fn flush_dirty(&mut self) {
        let dirty = std::mem::take(&mut self.dirty);
        for u in dirty {
            if self.graph.has_node(u) && self.partition.community_of(u).is_some() {
                let b = permanence::vertex_breakdown(&self.graph, &self.partition, u)
                    .expect("dirty node evaluable");
                self.perm_cache.insert(u, b.permanence);
            } else {
                self.perm_cache.remove(&u);
            }
        }
    }

    /// Sum of member permanences over a community pair, an emptied (hence
    /// deleted) community contributing zero.
    fn pair_sum(&self, a: CommunityId, b: CommunityId) -> f64 {
        let mut sum = 0.0;
        for c in [a, b] {
            if let Some(members) = self.partition.members(c) {
                for &v in members {
                    sum += permanence::vertex_breakdown(&self.graph, &self.partition, v)
                        .expect("member evaluable")
                        .permanence;
                }
            }
        }
        sum
    }

    fn tentative_move(&mut self, node: NodeId, to: CommunityId, journal: &mut Vec<MoveRecord>) {
        let from = self.partition.community_of(node).expect("assigned");
        self.partition.move_node(node, to).expect("present");
        self.mark_dirty_move(node);
        journal.push(MoveRecord { node, from, to });
    }

    fn rollback(&mut self, journal: &[MoveRecord]) {
        for m in journal.iter().rev() {
            self.partition.move_node(m.node, m.from).expect("present");
            self.mark_dirty_move(m.node);
        }
    }

    fn propose_inner(&mut self, mover: NodeId, target: CommunityId) -> MoveProposal {
        let source = self.partition.community_of(mover).expect("assigned");
        let perm_before = self.pair_sum(source, target);

        let mut journal = Vec::new();
        let mut visited = BTreeSet::from([mover]);
        let mut queue: VecDeque<NodeId> = self
            .graph
            .neighbors(mover)
            .expect("present")
            .iter()
            .copied()
            .filter(|&w| self.partition.community_of(w) == Some(source))
            .collect();
        self.tentative_move(mover, target, &mut journal);

        while let Some(i) = queue.pop_front() {
            if !visited.insert(i) {
                continue;
            }
            if self.partition.community_of(i) != Some(source) {
                continue;
            }
            let stay = permanence::breakdown_in(&self.graph, &self.partition, i, source)
                .expect("present")
                .permanence;
            let go = permanence::breakdown_in(&self.graph, &self.partition, i, target)
                .expect("present")
                .permanence;
            if go > stay + EPSILON {
                self.tentative_move(i, target, &mut journal);
                let followers: Vec<NodeId> = self
                    .graph
                    .neighbors(i)
                    .expect("present")
                    .iter()
                    .copied()
                    .filter(|&w| {
                        self.partition.community_of(w) == Some(source) && !visited.contains(&w)
                    })
                    .collect();
                queue.extend(followers);
            }
        }

        let perm_after = self.pair_sum(source, target);
        self.rollback(&journal);
        MoveProposal {
            moves: journal,
            perm_before,
            perm_after,
        }
    }

    fn apply_proposal(&mut self, proposal: &MoveProposal, summary: &mut ChangeSummary) {
        for m in &proposal.moves {
            let emptied = self.partition.move_node(m.node, m.to).expect("present");
            self.mark_dirty_move(m.node);
            if emptied {
                summary.removed.push(m.from);
            }
            summary.moves.push(*m);
            self.stats.nodes_moved += 1;
        }
    }

    fn add_edge_inner(&mut self, u: NodeId, v: NodeId) -> Result<ChangeSummary, EngineError> {
        self.graph.add_edge(u, v)?;
        self.mark_dirty_edge(u, v);
        let cu = self.partition.community_of(u).expect("covered");
        let cv = self.partition.community_of(v).expect("covered");
        let mut summary = ChangeSummary::default();
        if cu == cv {
            // Intra-community additions never change the partition.
            return Ok(summary);
        }
        let forward = self.propose_inner(u, cv);
        let backward = self.propose_inner(v, cu);
        let winner = if forward.perm_after > backward.perm_after + EPSILON {
            Some(forward)
        } else if backward.perm_after > forward.perm_after + EPSILON {
            Some(backward)
        } else {
            // Tie between the two directions keeps the incumbent structure.
            None
        };
        if let Some(proposal) = winner {
            if proposal.perm_after > proposal.perm_before + EPSILON {
                self.apply_proposal(&proposal, &mut summary);
            }
        }
        Ok(summary)
    }

    fn remove_edge_inner(&mut self, u: NodeId, v: NodeId) -> Result<ChangeSummary, EngineError> {
        self.graph.remove_edge(u, v)?;
        let cu = self.partition.community_of(u).expect("covered");
        let cv = self.partition.community_of(v).expect("covered");
        self.mark_dirty_edge(u, v);
        let du = self.graph.degree(u).expect("present");
        let dv = self.graph.degree(v).expect("present");

        let mut summary = ChangeSummary::default();
        if du == 0 && dv == 0 {
            // Sole edge of both endpoints: each forms a fresh singleton.
            self.detach_to_singleton(u, &mut summary);
            self.detach_to_singleton(v, &mut summary);
        } else if dv == 0 {
            // Unit-degree endpoint isolates; the survivor stays put.
            self.detach_to_singleton(v, &mut summary);
        } else if du == 0 {
            self.detach_to_singleton(u, &mut summary);
        } else if cu == cv {
            summary = self.split_inner(cu, u, v);
        }
        // Inter-community deletion with both degrees positive: no change.
        Ok(summary)
    }

    fn detach_to_singleton(&mut self, node: NodeId, summary: &mut ChangeSummary) {
        let from = self.partition.community_of(node).expect("covered");
        let home = self.fresh_community();
        let emptied = self.partition.move_node(node, home).expect("present");
        self.mark_dirty_move(node);
        summary.created.push(home);
        if emptied {
            summary.removed.push(from);
        }
        summary.moves.push(MoveRecord {
            node,
            from,
            to: home,
        });
        self.stats.nodes_moved += 1;
    }

    /// BFS over the members of `c` from `u`; if `v` is no longer reachable,
    /// compares the summed permanence of the unsplit community against the
    /// two candidate sides and splits only on strict improvement.
    fn split_inner(&mut self, c: CommunityId, u: NodeId, v: NodeId) -> ChangeSummary {
        let members = self.partition.members(c).expect("exists").clone();
        let mut component = BTreeSet::from([u]);
        let mut queue = VecDeque::from([u]);
        while let Some(x) = queue.pop_front() {
            for &w in self.graph.neighbors(x).expect("present") {
                if members.contains(&w) && component.insert(w) {
                    queue.push_back(w);
                }
            }
        }
        let mut summary = ChangeSummary::default();
        if component.contains(&v) {
            // Still internally connected: nothing to decide.
            return summary;
        }

        let detached: Vec<NodeId> = members.difference(&component).copied().collect();
        let unsplit: f64 = members
            .iter()
            .map(|&x| {
                permanence::vertex_breakdown(&self.graph, &self.partition, x)
                    .expect("member evaluable")
                    .permanence
            })
            .sum();
        let side = self.fresh_community();
        let mut journal = Vec::new();
        for &x in &detached {
            self.tentative_move(x, side, &mut journal);
        }
        let split = self.pair_sum(c, side);
        if split > unsplit + EPSILON {
            summary.created.push(side);
            summary.moves.extend(journal.iter().copied());
            self.stats.nodes_moved += journal.len() as u64;
            self.stats.communities_split += 1;
        } else {
            self.rollback(&journal);
        }
        summary
    }
}
