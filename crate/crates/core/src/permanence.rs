//! Vertex-centric permanence scoring.
//!
//! Permanence of a vertex combines its internal pull `I / (E_max * d)` with
//! a cohesion penalty `1 - C_in`, where `C_in` is the fraction of realized
//! edges among the vertex's internal neighbors. Degenerate cases:
//!
//! * `E_max = 0` (no external neighbors): the score is `I / d`.
//! * `d = 0` (isolated vertex): the score is 0, keeping graph averages
//!   bounded and matching the singleton-community outcome.
//! * `I <= 1`: `C_in = 0`, since no internal neighbor pair exists.
//!
//! Every score lies in `[-1, 1]`, as does the graph-level average. All
//! functions here are pure reads over a `(Graph, Partition)` pair.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::graph::{CommunityId, Graph, NodeId, Partition};

/// Absolute tolerance for permanence comparisons throughout the crate.
pub const EPSILON: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PermanenceError {
    #[error("node {0} not present or not assigned to a community")]
    MissingNode(NodeId),
    #[error("community {0} does not exist")]
    MissingCommunity(CommunityId),
    #[error("graph is empty")]
    EmptyGraph,
}

/// Per-vertex permanence together with the counts it was derived from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VertexBreakdown {
    /// Neighbors sharing the vertex's community.
    pub internal_degree: usize,
    pub degree: usize,
    /// Largest number of neighbors concentrated in any single other community.
    pub max_external_degree: usize,
    /// Realized edges among the internal neighbors.
    pub internal_neighbor_edges: usize,
    /// `internal_neighbor_edges / C(internal_degree, 2)`, zero when fewer
    /// than two internal neighbors exist.
    pub internal_clustering: f64,
    pub permanence: f64,
}

/// Breakdowns for every vertex plus the graph-level average.
#[derive(Debug, Clone, PartialEq)]
pub struct PermanenceReport {
    pub per_vertex: BTreeMap<NodeId, VertexBreakdown>,
    pub graph_permanence: f64,
}

/// Evaluates the breakdown of `u` as a member of its assigned community.
pub fn vertex_breakdown(
    g: &Graph,
    p: &Partition,
    u: NodeId,
) -> Result<VertexBreakdown, PermanenceError> {
    let home = p.community_of(u).ok_or(PermanenceError::MissingNode(u))?;
    breakdown_in(g, p, u, home)
}

/// Evaluates the breakdown of `u` as if it were assigned to community `c`,
/// with every other assignment unchanged. `c` may be a community `u` does
/// not currently belong to, including a not-yet-materialized fresh one.
pub fn breakdown_in(
    g: &Graph,
    p: &Partition,
    u: NodeId,
    c: CommunityId,
) -> Result<VertexBreakdown, PermanenceError> {
    let nbrs = g.neighbors(u).ok_or(PermanenceError::MissingNode(u))?;
    let degree = nbrs.len();

    let mut internal = Vec::new();
    let mut external: BTreeMap<CommunityId, usize> = BTreeMap::new();
    for &w in nbrs {
        let cw = p.community_of(w).ok_or(PermanenceError::MissingNode(w))?;
        if cw == c {
            internal.push(w);
        } else {
            *external.entry(cw).or_insert(0) += 1;
        }
    }
    let internal_degree = internal.len();
    let max_external_degree = external.values().copied().max().unwrap_or(0);

    let mut internal_neighbor_edges = 0usize;
    for (i, &a) in internal.iter().enumerate() {
        let adj_a = g.neighbors(a).expect("neighbor present");
        for &b in &internal[i + 1..] {
            if adj_a.contains(&b) {
                internal_neighbor_edges += 1;
            }
        }
    }
    let internal_clustering = if internal_degree >= 2 {
        let pairs = (internal_degree * (internal_degree - 1) / 2) as f64;
        internal_neighbor_edges as f64 / pairs
    } else {
        0.0
    };

    let permanence = if degree == 0 {
        0.0
    } else if max_external_degree == 0 {
        internal_degree as f64 / degree as f64
    } else {
        internal_degree as f64 / (max_external_degree as f64 * degree as f64)
            - (1.0 - internal_clustering)
    };

    Ok(VertexBreakdown {
        internal_degree,
        degree,
        max_external_degree,
        internal_neighbor_edges,
        internal_clustering,
        permanence,
    })
}

/// Largest count of `u`'s neighbors inside any single community other than
/// its own; zero when `u` has no external neighbor.
pub fn max_external_degree(g: &Graph, p: &Partition, u: NodeId) -> Result<usize, PermanenceError> {
    vertex_breakdown(g, p, u).map(|b| b.max_external_degree)
}

/// Sum of member permanences of community `c`. This is the quantity the
/// engine's move-acceptance rule compares; sums rather than averages keep
/// the comparison meaningful when community sizes change.
pub fn community_perm_sum(
    g: &Graph,
    p: &Partition,
    c: CommunityId,
) -> Result<f64, PermanenceError> {
    let members = p.members(c).ok_or(PermanenceError::MissingCommunity(c))?;
    let mut sum = 0.0;
    for &v in members {
        sum += vertex_breakdown(g, p, v)?.permanence;
    }
    Ok(sum)
}

/// Evaluates every vertex and averages the scores over `|V|`.
pub fn graph_permanence(g: &Graph, p: &Partition) -> Result<PermanenceReport, PermanenceError> {
    if g.is_empty() {
        return Err(PermanenceError::EmptyGraph);
    }
    let mut per_vertex = BTreeMap::new();
    let mut sum = 0.0;
    for u in g.nodes() {
        let b = vertex_breakdown(g, p, u)?;
        sum += b.permanence;
        per_vertex.insert(u, b);
    }
    let graph_permanence = sum / g.node_count() as f64;
    Ok(PermanenceReport {
        per_vertex,
        graph_permanence,
    })
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

    fn complete(k: u64) -> Graph {
        let mut edges = Vec::new();
        for i in 0..k {
            for j in (i + 1)..k {
                edges.push((n(i), n(j)));
            }
        }
        Graph::from_edges(&edges).unwrap()
    }

    #[test]
    fn clique_vertex_is_fully_internal() {
        let g = complete(4);
        let p = Partition::from_assignments(&[(n(0), c(0)), (n(1), c(0)), (n(2), c(0)), (n(3), c(0))]);
        let b = vertex_breakdown(&g, &p, n(0)).unwrap();
        assert_eq!(b.internal_degree, 3);
        assert_eq!(b.degree, 3);
        assert_eq!(b.max_external_degree, 0);
        assert_eq!(b.permanence, 1.0);
    }

    #[test]
    fn isolated_vertex_scores_zero() {
        let mut g = Graph::new();
        g.add_node(n(0)).unwrap();
        let p = Partition::from_assignments(&[(n(0), c(0))]);
        let b = vertex_breakdown(&g, &p, n(0)).unwrap();
        assert_eq!(b.permanence, 0.0);
        assert_eq!(vertex_breakdown(&g, &p, n(1)), Err(PermanenceError::MissingNode(n(1))));
    }

    #[test]
    fn mixed_vertex_matches_hand_evaluation() {
        // d=5, I=3, e_neig=2 (c_in=2/3), e_max=2 => 3/(2*5) - 1/3 = -1/30.
        let g = Graph::from_edges(&[
            (n(0), n(1)),
            (n(0), n(2)),
            (n(0), n(3)),
            (n(1), n(2)),
            (n(2), n(3)),
            (n(0), n(4)),
            (n(0), n(5)),
        ])
        .unwrap();
        let p = Partition::from_assignments(&[
            (n(0), c(0)),
            (n(1), c(0)),
            (n(2), c(0)),
            (n(3), c(0)),
            (n(4), c(1)),
            (n(5), c(1)),
        ]);
        let b = vertex_breakdown(&g, &p, n(0)).unwrap();
        assert_eq!(b.internal_degree, 3);
        assert_eq!(b.degree, 5);
        assert_eq!(b.max_external_degree, 2);
        assert_eq!(b.internal_neighbor_edges, 2);
        assert!((b.internal_clustering - 2.0 / 3.0).abs() < EPSILON);
        assert!((b.permanence - (-1.0 / 30.0)).abs() < EPSILON);
    }

    #[test]
    fn external_peak_takes_largest_single_community() {
        // 2 neighbors in one external community, 1 in another.
        let g = Graph::from_edges(&[(n(0), n(1)), (n(0), n(2)), (n(0), n(3))]).unwrap();
        let p = Partition::from_assignments(&[(n(0), c(0)), (n(1), c(1)), (n(2), c(1)), (n(3), c(2))]);
        assert_eq!(max_external_degree(&g, &p, n(0)).unwrap(), 2);

        // all internal
        let p_all = Partition::from_assignments(&[(n(0), c(0)), (n(1), c(0)), (n(2), c(0)), (n(3), c(0))]);
        assert_eq!(max_external_degree(&g, &p_all, n(0)).unwrap(), 0);
    }

    #[test]
    fn external_peak_with_three_communities() {
        // 1, 1 and 4 external neighbors across three communities.
        let mut edges = vec![(n(0), n(1)), (n(0), n(2))];
        for i in 3..7 {
            edges.push((n(0), n(i)));
        }
        let g = Graph::from_edges(&edges).unwrap();
        let mut pairs = vec![(n(0), c(0)), (n(1), c(1)), (n(2), c(2))];
        for i in 3..7 {
            pairs.push((n(i), c(3)));
        }
        let p = Partition::from_assignments(&pairs);
        assert_eq!(max_external_degree(&g, &p, n(0)).unwrap(), 4);
    }

    #[test]
    fn community_sums() {
        // Isolated triangle community: 3 * 1.
        let g = complete(3);
        let p = Partition::from_assignments(&[(n(0), c(0)), (n(1), c(0)), (n(2), c(0))]);
        assert!((community_perm_sum(&g, &p, c(0)).unwrap() - 3.0).abs() < EPSILON);
        assert_eq!(
            community_perm_sum(&g, &p, c(9)),
            Err(PermanenceError::MissingCommunity(c(9)))
        );

        // Isolated singleton community: 0.
        let mut g2 = Graph::new();
        g2.add_node(n(0)).unwrap();
        let p2 = Partition::from_assignments(&[(n(0), c(0))]);
        assert_eq!(community_perm_sum(&g2, &p2, c(0)).unwrap(), 0.0);
    }

    #[test]
    fn bridged_triangles_community_sums() {
        // Two triangles joined by one bridge; per-community sum is 8/3.
        let g = Graph::from_edges(&[
            (n(0), n(1)),
            (n(0), n(2)),
            (n(1), n(2)),
            (n(3), n(4)),
            (n(3), n(5)),
            (n(4), n(5)),
            (n(0), n(3)),
        ])
        .unwrap();
        let p = Partition::from_assignments(&[
            (n(0), c(0)),
            (n(1), c(0)),
            (n(2), c(0)),
            (n(3), c(1)),
            (n(4), c(1)),
            (n(5), c(1)),
        ]);
        assert!((community_perm_sum(&g, &p, c(0)).unwrap() - 8.0 / 3.0).abs() < EPSILON);
        assert!((community_perm_sum(&g, &p, c(1)).unwrap() - 8.0 / 3.0).abs() < EPSILON);
    }

    #[test]
    fn graph_level_average() {
        // Two disjoint triangles in two communities: every vertex fully internal.
        let g = Graph::from_edges(&[
            (n(0), n(1)),
            (n(0), n(2)),
            (n(1), n(2)),
            (n(3), n(4)),
            (n(3), n(5)),
            (n(4), n(5)),
        ])
        .unwrap();
        let p = Partition::from_assignments(&[
            (n(0), c(0)),
            (n(1), c(0)),
            (n(2), c(0)),
            (n(3), c(1)),
            (n(4), c(1)),
            (n(5), c(1)),
        ]);
        let report = graph_permanence(&g, &p).unwrap();
        assert_eq!(report.graph_permanence, 1.0);

        // One triangle split into three singletons: every vertex at -1.
        let g3 = complete(3);
        let p3 = Partition::from_assignments(&[(n(0), c(0)), (n(1), c(1)), (n(2), c(2))]);
        let report3 = graph_permanence(&g3, &p3).unwrap();
        for b in report3.per_vertex.values() {
            assert_eq!(b.internal_degree, 0);
            assert_eq!(b.max_external_degree, 1);
            assert_eq!(b.permanence, -1.0);
        }
        assert_eq!(report3.graph_permanence, -1.0);

        assert_eq!(
            graph_permanence(&Graph::new(), &Partition::new()),
            Err(PermanenceError::EmptyGraph)
        );
    }

    #[test]
    fn hypothetical_membership_does_not_mutate() {
        let g = Graph::from_edges(&[(n(0), n(1)), (n(1), n(2))]).unwrap();
        let p = Partition::from_assignments(&[(n(0), c(0)), (n(1), c(0)), (n(2), c(1))]);
        let snapshot = p.clone();
        let in_c1 = breakdown_in(&g, &p, n(1), c(1)).unwrap();
        assert_eq!(in_c1.internal_degree, 1);
        assert_eq!(in_c1.max_external_degree, 1);
        // Fresh, never-materialized target community.
        let fresh = breakdown_in(&g, &p, n(1), c(42)).unwrap();
        assert_eq!(fresh.internal_degree, 0);
        assert_eq!(fresh.max_external_degree, 1);
        assert_eq!(p, snapshot);
    }
}
