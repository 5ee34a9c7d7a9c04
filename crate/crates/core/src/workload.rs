//! Update streams: seeded generators, the text format, and a replay validator.
//!
//! ```text
//! n <vertex-count>
//! + <u> <v>
//! - <u> <v>
//! # comment
//! ```

use std::collections::{HashSet, VecDeque};
use std::fmt::{self, Write as _};

use indexmap::IndexSet;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{Edge, VertexId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OpKind {
    Insert,
    Delete,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StreamOp {
    pub kind: OpKind,
    pub edge: Edge,
}

impl StreamOp {
    pub fn insert(edge: Edge) -> Self {
        StreamOp { kind: OpKind::Insert, edge }
    }

    pub fn delete(edge: Edge) -> Self {
        StreamOp { kind: OpKind::Delete, edge }
    }
}

impl fmt::Display for StreamOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = match self.kind {
            OpKind::Insert => '+',
            OpKind::Delete => '-',
        };
        write!(f, "{sign} {} {}", self.edge.lo(), self.edge.hi())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stream {
    pub n: usize,
    pub ops: Vec<StreamOp>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WorkloadError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("op {index} ({op}) is infeasible: {reason}")]
    Infeasible { index: usize, op: StreamOp, reason: &'static str },
    #[error("invalid generator parameter: {0}")]
    Parameter(String),
}

/// The live edge set while generating, with uniform sampling of present and
/// absent edges.
struct EdgeSampler {
    n: u32,
    present: IndexSet<Edge>,
}

impl EdgeSampler {
    fn new(n: usize) -> Self {
        EdgeSampler { n: n as u32, present: IndexSet::new() }
    }

    fn max_edges(&self) -> usize {
        let n = self.n as usize;
        n * n.saturating_sub(1) / 2
    }

    fn is_full(&self) -> bool {
        self.present.len() >= self.max_edges()
    }

    fn random_absent(&self, rng: &mut ChaCha8Rng) -> Option<Edge> {
        if self.is_full() {
            return None;
        }
        if self.present.len() * 2 <= self.max_edges() {
            // At least half the pairs are free; rejection terminates quickly.
            loop {
                let u = rng.gen_range(1..=self.n);
                let v = rng.gen_range(1..=self.n);
                if u == v {
                    continue;
                }
                let e = Edge::new(VertexId(u), VertexId(v)).expect("distinct endpoints");
                if !self.present.contains(&e) {
                    return Some(e);
                }
            }
        }
        let absent: Vec<Edge> = (1..=self.n)
            .flat_map(|u| (u + 1..=self.n).map(move |v| (u, v)))
            .map(|(u, v)| Edge::new(VertexId(u), VertexId(v)).expect("distinct endpoints"))
            .filter(|e| !self.present.contains(e))
            .collect();
        Some(absent[rng.gen_range(0..absent.len())])
    }

    fn random_present(&self, rng: &mut ChaCha8Rng) -> Option<Edge> {
        if self.present.is_empty() {
            return None;
        }
        Some(self.present[rng.gen_range(0..self.present.len())])
    }

    fn insert(&mut self, e: Edge, ops: &mut Vec<StreamOp>) {
        self.present.insert(e);
        ops.push(StreamOp::insert(e));
    }

    fn delete(&mut self, e: Edge, ops: &mut Vec<StreamOp>) {
        self.present.swap_remove(&e);
        ops.push(StreamOp::delete(e));
    }
}

fn check_vertices(n: usize, ops: usize) -> Result<(), WorkloadError> {
    if n == 0 || (n < 2 && ops > 0) {
        return Err(WorkloadError::Parameter(format!("need at least two vertices to generate edges, got n = {n}")));
    }
    if n > u32::MAX as usize {
        return Err(WorkloadError::Parameter(format!("n = {n} is too large")));
    }
    Ok(())
}

/// Random insert/delete mix. Each step deletes a uniformly random present
/// edge with probability `p_delete` (if any edge exists), and otherwise
/// inserts a uniformly random absent edge. A complete graph forces a delete.
pub fn gen_random(n: usize, ops: usize, p_delete: f64, seed: u64) -> Result<Stream, WorkloadError> {
    if !(0.0..1.0).contains(&p_delete) {
        return Err(WorkloadError::Parameter(format!("p_delete must lie in [0, 1), got {p_delete}")));
    }
    check_vertices(n, ops)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = EdgeSampler::new(n);
    let mut out = Vec::with_capacity(ops);
    for _ in 0..ops {
        let want_delete = !edges.present.is_empty() && rng.gen_bool(p_delete);
        if want_delete || edges.is_full() {
            let e = edges.random_present(&mut rng).expect("non-empty edge set");
            edges.delete(e, &mut out);
        } else {
            let e = edges.random_absent(&mut rng).expect("graph not complete");
            edges.insert(e, &mut out);
        }
    }
    Ok(Stream { n, ops: out })
}

/// Inserts random absent edges while keeping at most `window` edges live:
/// once the window is full, the oldest live edge is deleted before each insert.
pub fn gen_sliding_window(n: usize, ops: usize, window: usize, seed: u64) -> Result<Stream, WorkloadError> {
    if window == 0 {
        return Err(WorkloadError::Parameter("window must be at least 1".into()));
    }
    check_vertices(n, ops)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = EdgeSampler::new(n);
    let window = window.min(edges.max_edges());
    let mut fifo: VecDeque<Edge> = VecDeque::new();
    let mut out = Vec::with_capacity(ops);
    while out.len() < ops {
        if fifo.len() >= window {
            let oldest = fifo.pop_front().expect("non-empty window");
            edges.delete(oldest, &mut out);
            continue;
        }
        let e = edges.random_absent(&mut rng).expect("window below the edge limit");
        edges.insert(e, &mut out);
        fifo.push_back(e);
    }
    Ok(Stream { n, ops: out })
}

/// Alternates between inserting random edges up to `target_edges` and
/// deleting random edges down to zero, so level densities drift both ways.
pub fn gen_densify(n: usize, ops: usize, target_edges: usize, seed: u64) -> Result<Stream, WorkloadError> {
    if target_edges == 0 {
        return Err(WorkloadError::Parameter("target edge count must be at least 1".into()));
    }
    check_vertices(n, ops)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = EdgeSampler::new(n);
    let target = target_edges.min(edges.max_edges());
    let mut filling = true;
    let mut out = Vec::with_capacity(ops);
    while out.len() < ops {
        if filling && edges.present.len() >= target {
            filling = false;
        } else if !filling && edges.present.is_empty() {
            filling = true;
        }
        if filling {
            let e = edges.random_absent(&mut rng).expect("below target");
            edges.insert(e, &mut out);
        } else {
            let e = edges.random_present(&mut rng).expect("non-empty");
            edges.delete(e, &mut out);
        }
    }
    Ok(Stream { n, ops: out })
}

pub fn serialize_stream(s: &Stream) -> String {
    let mut out = String::with_capacity(8 + s.ops.len() * 12);
    let _ = writeln!(out, "n {}", s.n);
    for op in &s.ops {
        let _ = writeln!(out, "{op}");
    }
    out
}

pub fn parse_stream(text: &str) -> Result<Stream, WorkloadError> {
    let err = |line: usize, message: String| WorkloadError::Parse { line, message };
    let mut n: Option<usize> = None;
    let mut ops = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split_whitespace();
        let tag = fields.next().expect("non-empty line");
        let rest: Vec<&str> = fields.collect();
        match tag {
            "n" => {
                if n.is_some() {
                    return Err(err(line_no, "duplicate vertex-count header".into()));
                }
                let [count] = rest[..] else {
                    return Err(err(line_no, "expected `n <vertex-count>`".into()));
                };
                let count: usize = count.parse().map_err(|_| err(line_no, format!("bad vertex count `{count}`")))?;
                if count == 0 {
                    return Err(err(line_no, "vertex count must be positive".into()));
                }
                n = Some(count);
            }
            "+" | "-" => {
                let n = n.ok_or_else(|| err(line_no, "edge before the `n` header".into()))?;
                let [a, b] = rest[..] else {
                    return Err(err(line_no, format!("expected `{tag} <u> <v>`")));
                };
                let parse_v = |s: &str| -> Result<u32, WorkloadError> {
                    let x: u32 = s.parse().map_err(|_| err(line_no, format!("bad vertex `{s}`")))?;
                    if x == 0 || x as usize > n {
                        return Err(err(line_no, format!("vertex {x} outside 1..={n}")));
                    }
                    Ok(x)
                };
                let (u, v) = (parse_v(a)?, parse_v(b)?);
                let edge = Edge::from_raw(u, v).map_err(|_| err(line_no, format!("self-loop on vertex {u}")))?;
                ops.push(StreamOp { kind: if tag == "+" { OpKind::Insert } else { OpKind::Delete }, edge });
            }
            other => return Err(err(line_no, format!("unknown record `{other}`"))),
        }
    }
    let n = n.ok_or_else(|| err(0, "missing `n <vertex-count>` header".into()))?;
    Ok(Stream { n, ops })
}

/// Parses and then rejects streams that delete absent or insert present edges.
pub fn parse_stream_strict(text: &str) -> Result<Stream, WorkloadError> {
    let s = parse_stream(text)?;
    validate_stream(&s)?;
    Ok(s)
}

/// Replays `s` against an empty graph, failing on the first infeasible op.
pub fn validate_stream(s: &Stream) -> Result<(), WorkloadError> {
    let mut present: HashSet<Edge> = HashSet::new();
    for (index, &op) in s.ops.iter().enumerate() {
        let ok = match op.kind {
            OpKind::Insert => present.insert(op.edge),
            OpKind::Delete => present.remove(&op.edge),
        };
        if !ok {
            let reason = match op.kind {
                OpKind::Insert => "edge already present",
                OpKind::Delete => "edge not present",
            };
            return Err(WorkloadError::Infeasible { index, op, reason });
        }
    }
    Ok(())
}
