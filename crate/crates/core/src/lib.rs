//! Incremental community detection on dynamic graphs by local maximization
//! of the permanence metric, with a static initializer, clustering-agreement
//! metrics, a synthetic dynamic workload generator and a benchmark harness.

#![forbid(unsafe_code)]

pub mod bench;
pub mod engine;
pub mod evaluation;
pub mod graph;
pub mod io;
pub mod permanence;
pub mod static_init;
pub mod workload;

pub use engine::{ChangeSummary, Engine, EngineError, EngineStats, MoveProposal, MoveRecord};
pub use graph::{AtomicEvent, CommunityId, EventKind, Graph, GraphError, NodeId, Partition};
pub use permanence::{PermanenceError, PermanenceReport, VertexBreakdown};
