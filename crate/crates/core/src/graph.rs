//! Dynamic undirected simple graph and the community partition it carries.
//!
//! The graph is adjacency-set based and enforces simplicity (no self-loops,
//! no parallel edges). The partition keeps the node-to-community assignment
//! and its inverse member sets in lockstep. All collections are ordered so
//! that iteration, and therefore every downstream report, is deterministic.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

/// Identifier of a graph node. Unique within a graph at any instant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub u64);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl From<u64> for NodeId {
    fn from(id: u64) -> Self {
        NodeId(id)
    }
}

/// Identifier of a community. Fresh ids are allocated from a monotone
/// counter and never recycled within one engine run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CommunityId(pub u64);

impl fmt::Display for CommunityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl From<u64> for CommunityId {
    fn from(id: u64) -> Self {
        CommunityId(id)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("node {0} already present")]
    DuplicateNode(NodeId),
    #[error("node {0} not present")]
    MissingNode(NodeId),
    #[error("self-loop on node {0} is not allowed")]
    SelfLoop(NodeId),
    #[error("edge {0} {1} already present")]
    DuplicateEdge(NodeId, NodeId),
    #[error("edge {0} {1} not present")]
    MissingEdge(NodeId, NodeId),
}

/// One time-stamped change to the network.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AtomicEvent {
    pub timestamp: u64,
    pub kind: EventKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    NewNode(NodeId),
    RemoveNode(NodeId),
    NewEdge(NodeId, NodeId),
    RemoveEdge(NodeId, NodeId),
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EventKind::NewNode(u) => write!(f, "AN {u}"),
            EventKind::RemoveNode(u) => write!(f, "RN {u}"),
            EventKind::NewEdge(u, v) => write!(f, "AE {u} {v}"),
            EventKind::RemoveEdge(u, v) => write!(f, "RE {u} {v}"),
        }
    }
}

/// Undirected simple graph over adjacency sets.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Graph {
    adjacency: BTreeMap<NodeId, BTreeSet<NodeId>>,
    edge_count: usize,
}

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a graph from an undirected edge list, creating endpoints on
    /// first sight. Rejects self-loops and duplicate edges.
    pub fn from_edges(edges: &[(NodeId, NodeId)]) -> Result<Self, GraphError> {
        let mut g = Graph::new();
        for &(u, v) in edges {
            if !g.has_node(u) {
                g.add_node(u)?;
            }
            if !g.has_node(v) {
                g.add_node(v)?;
            }
            g.add_edge(u, v)?;
        }
        Ok(g)
    }

    pub fn node_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn is_empty(&self) -> bool {
        self.adjacency.is_empty()
    }

    pub fn has_node(&self, u: NodeId) -> bool {
        self.adjacency.contains_key(&u)
    }

    pub fn has_edge(&self, u: NodeId, v: NodeId) -> bool {
        self.adjacency.get(&u).is_some_and(|n| n.contains(&v))
    }

    pub fn degree(&self, u: NodeId) -> Option<usize> {
        self.adjacency.get(&u).map(BTreeSet::len)
    }

    pub fn neighbors(&self, u: NodeId) -> Option<&BTreeSet<NodeId>> {
        self.adjacency.get(&u)
    }

    /// Nodes in ascending id order.
    pub fn nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.adjacency.keys().copied()
    }

    /// Undirected edges, each reported once as (min, max), ascending.
    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.adjacency
            .iter()
            .flat_map(|(&u, nbrs)| nbrs.iter().copied().filter(move |&v| u < v).map(move |v| (u, v)))
    }

    pub fn add_node(&mut self, u: NodeId) -> Result<(), GraphError> {
        if self.has_node(u) {
            return Err(GraphError::DuplicateNode(u));
        }
        self.adjacency.insert(u, BTreeSet::new());
        Ok(())
    }

    /// Removes `u` together with its incident edges and returns them.
    pub fn remove_node(&mut self, u: NodeId) -> Result<Vec<(NodeId, NodeId)>, GraphError> {
        let nbrs = self.adjacency.remove(&u).ok_or(GraphError::MissingNode(u))?;
        let mut removed = Vec::with_capacity(nbrs.len());
        for v in nbrs {
            if let Some(set) = self.adjacency.get_mut(&v) {
                set.remove(&u);
            }
            self.edge_count -= 1;
            removed.push((u, v));
        }
        Ok(removed)
    }

    pub fn add_edge(&mut self, u: NodeId, v: NodeId) -> Result<(), GraphError> {
        if u == v {
            return Err(GraphError::SelfLoop(u));
        }
        if !self.has_node(u) {
            return Err(GraphError::MissingNode(u));
        }
        if !self.has_node(v) {
            return Err(GraphError::MissingNode(v));
        }
        if self.has_edge(u, v) {
            return Err(GraphError::DuplicateEdge(u, v));
        }
        self.adjacency.get_mut(&u).expect("checked").insert(v);
        self.adjacency.get_mut(&v).expect("checked").insert(u);
        self.edge_count += 1;
        Ok(())
    }

    pub fn remove_edge(&mut self, u: NodeId, v: NodeId) -> Result<(), GraphError> {
        if !self.has_node(u) {
            return Err(GraphError::MissingNode(u));
        }
        if !self.has_node(v) {
            return Err(GraphError::MissingNode(v));
        }
        if !self.has_edge(u, v) {
            return Err(GraphError::MissingEdge(u, v));
        }
        self.adjacency.get_mut(&u).expect("checked").remove(&v);
        self.adjacency.get_mut(&v).expect("checked").remove(&u);
        self.edge_count -= 1;
        Ok(())
    }

    /// Applies one event structurally, with no community bookkeeping.
    pub fn apply_event(&mut self, kind: EventKind) -> Result<(), GraphError> {
        match kind {
            EventKind::NewNode(u) => self.add_node(u),
            EventKind::RemoveNode(u) => self.remove_node(u).map(|_| ()),
            EventKind::NewEdge(u, v) => self.add_edge(u, v),
            EventKind::RemoveEdge(u, v) => self.remove_edge(u, v),
        }
    }

    /// Full structural audit: adjacency symmetry, simplicity and an exact
    /// edge count. Intended for tests and the engine's audit walk.
    pub fn validate(&self) -> Result<(), String> {
        let mut seen = 0usize;
        for (&u, nbrs) in &self.adjacency {
            for &v in nbrs {
                if u == v {
                    return Err(format!("self-loop on {u}"));
                }
                match self.adjacency.get(&v) {
                    Some(back) if back.contains(&u) => {}
                    _ => return Err(format!("asymmetric edge {u} {v}")),
                }
                if u < v {
                    seen += 1;
                }
            }
        }
        if seen != self.edge_count {
            return Err(format!(
                "edge count {} does not match adjacency ({seen})",
                self.edge_count
            ));
        }
        Ok(())
    }
}

/// Bidirectional node-to-community assignment. Every listed community is
/// non-empty; emptied communities are deleted eagerly.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Partition {
    assignment: BTreeMap<NodeId, CommunityId>,
    members: BTreeMap<CommunityId, BTreeSet<NodeId>>,
}

impl Partition {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a partition from explicit (node, community) pairs.
    pub fn from_assignments(pairs: &[(NodeId, CommunityId)]) -> Self {
        let mut p = Partition::new();
        for &(u, c) in pairs {
            p.insert(u, c);
        }
        p
    }

    /// Every node of `g` in its own community, ids 0..n.
    pub fn singletons(g: &Graph) -> Self {
        let mut p = Partition::new();
        for (i, u) in g.nodes().enumerate() {
            p.insert(u, CommunityId(i as u64));
        }
        p
    }

    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }

    pub fn community_count(&self) -> usize {
        self.members.len()
    }

    pub fn community_of(&self, u: NodeId) -> Option<CommunityId> {
        self.assignment.get(&u).copied()
    }

    pub fn members(&self, c: CommunityId) -> Option<&BTreeSet<NodeId>> {
        self.members.get(&c)
    }

    pub fn communities(&self) -> impl Iterator<Item = (CommunityId, &BTreeSet<NodeId>)> {
        self.members.iter().map(|(&c, m)| (c, m))
    }

    pub fn assignments(&self) -> impl Iterator<Item = (NodeId, CommunityId)> + '_ {
        self.assignment.iter().map(|(&u, &c)| (u, c))
    }

    /// Largest community id currently in use, if any.
    pub fn max_community_id(&self) -> Option<CommunityId> {
        self.members.keys().next_back().copied()
    }

    /// Assigns a previously unassigned node.
    pub fn insert(&mut self, u: NodeId, c: CommunityId) {
        debug_assert!(!self.assignment.contains_key(&u), "node {u} already assigned");
        self.assignment.insert(u, c);
        self.members.entry(c).or_default().insert(u);
    }

    /// Unassigns a node, deleting its community if emptied. Returns the
    /// community it was in and whether that community was deleted.
    pub fn remove(&mut self, u: NodeId) -> Result<(CommunityId, bool), GraphError> {
        let c = self.assignment.remove(&u).ok_or(GraphError::MissingNode(u))?;
        let emptied = {
            let set = self.members.get_mut(&c).expect("inverse map consistent");
            set.remove(&u);
            set.is_empty()
        };
        if emptied {
            self.members.remove(&c);
        }
        Ok((c, emptied))
    }

    /// Moves `u` to community `c`, creating `c` on demand. Moving a node to
    /// its own community is a no-op. Returns whether the previous community
    /// was deleted because it emptied.
    pub fn move_node(&mut self, u: NodeId, c: CommunityId) -> Result<bool, GraphError> {
        let current = self.community_of(u).ok_or(GraphError::MissingNode(u))?;
        if current == c {
            return Ok(false);
        }
        let (_, emptied) = self.remove(u)?;
        self.insert(u, c);
        Ok(emptied)
    }

    /// Audit walk: assignment and members must be exact inverses, with no
    /// empty community listed.
    pub fn validate(&self) -> Result<(), String> {
        for (&u, &c) in &self.assignment {
            match self.members.get(&c) {
                Some(set) if set.contains(&u) => {}
                _ => return Err(format!("node {u} missing from members of {c}")),
            }
        }
        let mut total = 0usize;
        for (&c, set) in &self.members {
            if set.is_empty() {
                return Err(format!("community {c} is empty"));
            }
            for &u in set {
                if self.assignment.get(&u) != Some(&c) {
                    return Err(format!("member {u} of {c} not assigned to it"));
                }
            }
            total += set.len();
        }
        if total != self.assignment.len() {
            return Err("member sets overlap".to_string());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn n(id: u64) -> NodeId {
        NodeId(id)
    }

    fn c(id: u64) -> CommunityId {
        CommunityId(id)
    }

    #[test]
    fn add_node_base_cases() {
        let mut g = Graph::new();
        g.add_node(n(0)).unwrap();
        assert_eq!(g.node_count(), 1);
        assert_eq!(g.edge_count(), 0);
        g.add_node(n(1)).unwrap();
        assert_eq!(g.node_count(), 2);
        assert_eq!(g.add_node(n(0)), Err(GraphError::DuplicateNode(n(0))));
    }

    #[test]
    fn remove_node_returns_incident_edges() {
        let mut g = Graph::from_edges(&[(n(0), n(1)), (n(1), n(2))]).unwrap();
        let removed = g.remove_node(n(1)).unwrap();
        assert_eq!(removed, vec![(n(1), n(0)), (n(1), n(2))]);
        assert_eq!(g.edge_count(), 0);
        assert!(g.has_node(n(0)) && g.has_node(n(2)));
        g.validate().unwrap();
    }

    #[test]
    fn remove_isolated_node() {
        let mut g = Graph::new();
        g.add_node(n(5)).unwrap();
        assert_eq!(g.remove_node(n(5)).unwrap(), vec![]);
        assert_eq!(g.remove_node(n(9)), Err(GraphError::MissingNode(n(9))));
    }

    #[test]
    fn add_edge_cases() {
        let mut g = Graph::new();
        g.add_node(n(0)).unwrap();
        g.add_node(n(1)).unwrap();
        g.add_edge(n(0), n(1)).unwrap();
        assert_eq!(g.degree(n(0)), Some(1));
        assert_eq!(g.degree(n(1)), Some(1));
        assert_eq!(g.add_edge(n(0), n(0)), Err(GraphError::SelfLoop(n(0))));
        assert_eq!(g.add_edge(n(0), n(1)), Err(GraphError::DuplicateEdge(n(0), n(1))));
        assert_eq!(g.add_edge(n(0), n(7)), Err(GraphError::MissingNode(n(7))));
    }

    #[test]
    fn remove_edge_and_readd_restores_adjacency() {
        let mut g = Graph::from_edges(&[(n(0), n(1)), (n(1), n(2)), (n(0), n(2))]).unwrap();
        let before = g.clone();
        g.remove_edge(n(0), n(1)).unwrap();
        assert!(!g.has_edge(n(1), n(0)));
        assert_eq!(g.remove_edge(n(0), n(1)), Err(GraphError::MissingEdge(n(0), n(1))));
        g.add_edge(n(0), n(1)).unwrap();
        assert_eq!(g, before);
    }

    #[test]
    fn remove_then_readd_node_restores_graph() {
        let g0 = Graph::from_edges(&[(n(0), n(1)), (n(1), n(2)), (n(0), n(2)), (n(2), n(3))]).unwrap();
        let mut g = g0.clone();
        let removed = g.remove_node(n(2)).unwrap();
        g.add_node(n(2)).unwrap();
        for (a, b) in removed {
            g.add_edge(a, b).unwrap();
        }
        assert_eq!(g, g0);
    }

    #[test]
    fn move_node_updates_both_maps() {
        let mut p = Partition::from_assignments(&[(n(0), c(0)), (n(1), c(0))]);
        p.move_node(n(1), c(1)).unwrap();
        assert_eq!(p.members(c(0)).unwrap().len(), 1);
        assert_eq!(p.members(c(1)).unwrap().len(), 1);
        assert_eq!(p.community_of(n(1)), Some(c(1)));
        p.validate().unwrap();
    }

    #[test]
    fn move_to_own_community_is_noop() {
        let mut p = Partition::from_assignments(&[(n(0), c(0))]);
        let before = p.clone();
        assert_eq!(p.move_node(n(0), c(0)), Ok(false));
        assert_eq!(p, before);
    }

    #[test]
    fn emptied_community_is_deleted() {
        let mut p = Partition::from_assignments(&[(n(0), c(0))]);
        assert_eq!(p.move_node(n(0), c(1)), Ok(true));
        assert!(p.members(c(0)).is_none());
        assert_eq!(p.community_count(), 1);
        assert_eq!(p.move_node(n(9), c(1)), Err(GraphError::MissingNode(n(9))));
    }

    #[test]
    fn invariants_hold_after_random_op_sequence() {
        // Audit walk after every single call.
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let mut g = Graph::new();
        let mut p = Partition::new();
        let mut next_comm = 0u64;
        for step in 0..2000 {
            let roll: f64 = rng.gen();
            if roll < 0.3 || g.is_empty() {
                let u = n(step as u64);
                if !g.has_node(u) {
                    g.add_node(u).unwrap();
                    p.insert(u, c(next_comm));
                    next_comm += 1;
                }
            } else if roll < 0.75 && g.node_count() >= 2 {
                let ids: Vec<NodeId> = g.nodes().collect();
                let a = ids[rng.gen_range(0..ids.len())];
                let b = ids[rng.gen_range(0..ids.len())];
                if a != b && !g.has_edge(a, b) {
                    g.add_edge(a, b).unwrap();
                } else if a != b {
                    g.remove_edge(a, b).unwrap();
                }
            } else {
                let ids: Vec<NodeId> = g.nodes().collect();
                let u = ids[rng.gen_range(0..ids.len())];
                if rng.gen_bool(0.5) {
                    g.remove_node(u).unwrap();
                    p.remove(u).unwrap();
                } else {
                    p.move_node(u, c(rng.gen_range(0..next_comm.max(1)))).unwrap();
                }
            }
            g.validate().unwrap();
            p.validate().unwrap();
        }
    }
}
