//! Flat-file formats: edge-list snapshots, community files and event streams.
//!
//! All three formats are line oriented, whitespace separated, with `#`
//! comment lines ignored. Ingestion is strict: self-loops, duplicate edges,
//! malformed integers and out-of-order timestamps are rejected with the
//! offending line number.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::graph::{AtomicEvent, EventKind, NodeId};

#[derive(Debug, Error)]
pub enum FileError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{path}: {message}")]
    Invalid { path: PathBuf, message: String },
}

/// One parsed event together with the stream line it came from, so that
/// apply-time failures can point back at the input.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EventRecord {
    pub event: AtomicEvent,
    pub line: usize,
}

fn read_to_string(path: &Path) -> Result<String, FileError> {
    fs::read_to_string(path).map_err(|source| FileError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> FileError {
    FileError::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn parse_id(path: &Path, line: usize, token: &str) -> Result<u64, FileError> {
    token
        .parse::<u64>()
        .map_err(|_| parse_err(path, line, format!("expected non-negative integer, got `{token}`")))
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

/// Reads an undirected edge list (`u v` per line). Duplicate edges, in
/// either orientation, and self-loops are rejected.
pub fn read_edge_list(path: &Path) -> Result<Vec<(NodeId, NodeId)>, FileError> {
    let text = read_to_string(path)?;
    let mut edges = Vec::new();
    let mut seen = std::collections::BTreeSet::new();
    for (line, content) in content_lines(&text) {
        let mut it = content.split_whitespace();
        let (a, b) = match (it.next(), it.next(), it.next()) {
            (Some(a), Some(b), None) => (a, b),
            _ => return Err(parse_err(path, line, "expected `u v`")),
        };
        let u = parse_id(path, line, a)?;
        let v = parse_id(path, line, b)?;
        if u == v {
            return Err(parse_err(path, line, format!("self-loop on node {u}")));
        }
        let key = (u.min(v), u.max(v));
        if !seen.insert(key) {
            return Err(parse_err(path, line, format!("duplicate edge {u} {v}")));
        }
        edges.push((NodeId(u), NodeId(v)));
    }
    Ok(edges)
}

pub fn write_edge_list(path: &Path, edges: &[(NodeId, NodeId)]) -> Result<(), FileError> {
    let mut out = String::new();
    for (u, v) in edges {
        writeln!(out, "{u} {v}").expect("string write");
    }
    fs::write(path, out).map_err(|source| FileError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Reads a community file (`node community` per line). Each node may appear
/// at most once; community ids are arbitrary non-negative integers.
pub fn read_communities(path: &Path) -> Result<Vec<(NodeId, u64)>, FileError> {
    let text = read_to_string(path)?;
    let mut pairs = Vec::new();
    let mut seen = std::collections::BTreeSet::new();
    for (line, content) in content_lines(&text) {
        let mut it = content.split_whitespace();
        let (a, b) = match (it.next(), it.next(), it.next()) {
            (Some(a), Some(b), None) => (a, b),
            _ => return Err(parse_err(path, line, "expected `node community`")),
        };
        let u = parse_id(path, line, a)?;
        let c = parse_id(path, line, b)?;
        if !seen.insert(u) {
            return Err(parse_err(path, line, format!("node {u} assigned twice")));
        }
        pairs.push((NodeId(u), c));
    }
    Ok(pairs)
}

pub fn write_communities(path: &Path, pairs: &[(NodeId, u64)]) -> Result<(), FileError> {
    let mut out = String::new();
    for (u, c) in pairs {
        writeln!(out, "{u} {c}").expect("string write");
    }
    fs::write(path, out).map_err(|source| FileError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Reads an event stream (`t AN u` | `t RN u` | `t AE u v` | `t RE u v`).
/// Timestamps must be non-decreasing; ties keep file order.
pub fn read_events(path: &Path) -> Result<Vec<EventRecord>, FileError> {
    let text = read_to_string(path)?;
    let mut records = Vec::new();
    let mut last_ts = 0u64;
    for (line, content) in content_lines(&text) {
        let tokens: Vec<&str> = content.split_whitespace().collect();
        if tokens.len() < 3 {
            return Err(parse_err(path, line, "expected `t OP args`"));
        }
        let timestamp = parse_id(path, line, tokens[0])?;
        if !records.is_empty() && timestamp < last_ts {
            return Err(parse_err(
                path,
                line,
                format!("timestamp {timestamp} goes backwards (previous {last_ts})"),
            ));
        }
        last_ts = timestamp;
        let kind = match (tokens[1], tokens.len()) {
            ("AN", 3) => EventKind::NewNode(NodeId(parse_id(path, line, tokens[2])?)),
            ("RN", 3) => EventKind::RemoveNode(NodeId(parse_id(path, line, tokens[2])?)),
            ("AE", 4) | ("RE", 4) => {
                let u = parse_id(path, line, tokens[2])?;
                let v = parse_id(path, line, tokens[3])?;
                if u == v {
                    return Err(parse_err(path, line, format!("self-loop on node {u}")));
                }
                if tokens[1] == "AE" {
                    EventKind::NewEdge(NodeId(u), NodeId(v))
                } else {
                    EventKind::RemoveEdge(NodeId(u), NodeId(v))
                }
            }
            (op, _) => {
                return Err(parse_err(
                    path,
                    line,
                    format!("unknown or malformed event `{op}`"),
                ))
            }
        };
        records.push(EventRecord {
            event: AtomicEvent { timestamp, kind },
            line,
        });
    }
    Ok(records)
}

pub fn events_to_string(events: &[AtomicEvent]) -> String {
    let mut out = String::new();
    for e in events {
        writeln!(out, "{} {}", e.timestamp, e.kind).expect("string write");
    }
    out
}

pub fn write_events(path: &Path, events: &[AtomicEvent]) -> Result<(), FileError> {
    fs::write(path, events_to_string(events)).map_err(|source| FileError::Io {
        path: path.to_path_buf(),
        source,
    })
}
