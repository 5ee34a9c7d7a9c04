//! Fixed-vertex-set dynamic graph with neighbor-query accounting.
//!
//! Every read that the update algorithms perform against the adjacency goes
//! through [`DynamicGraph::neighbors`], [`DynamicGraph::degree`] or
//! [`DynamicGraph::has_edge`], each of which charges the graph's
//! [`QueryCounter`]. Verification code uses the `raw_*` accessors, which are
//! free.

use std::cell::Cell;
use std::fmt;

use indexmap::IndexSet;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A vertex, numbered `1..=n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VertexId(pub u32);

impl VertexId {
    #[inline]
    pub fn get(self) -> u32 {
        self.0
    }

    /// Zero-based slot used for per-vertex arrays.
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize - 1
    }

    #[inline]
    pub fn from_index(i: usize) -> Self {
        VertexId(i as u32 + 1)
    }
}

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// An undirected edge, stored with `lo < hi`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Edge {
    lo: VertexId,
    hi: VertexId,
}

impl Edge {
    pub fn new(u: VertexId, v: VertexId) -> Result<Self, GraphError> {
        if u == v {
            return Err(GraphError::SelfLoop(u));
        }
        Ok(if u < v { Edge { lo: u, hi: v } } else { Edge { lo: v, hi: u } })
    }

    /// Convenience constructor from raw ids.
    pub fn from_raw(u: u32, v: u32) -> Result<Self, GraphError> {
        Edge::new(VertexId(u), VertexId(v))
    }

    pub fn lo(self) -> VertexId {
        self.lo
    }

    pub fn hi(self) -> VertexId {
        self.hi
    }

    pub fn endpoints(self) -> (VertexId, VertexId) {
        (self.lo, self.hi)
    }
}

impl fmt::Display for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.lo, self.hi)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("a graph needs at least one vertex")]
    NoVertices,
    #[error("vertex {v} is outside 1..={n}")]
    VertexOutOfRange { v: VertexId, n: usize },
    #[error("self-loop on vertex {0}")]
    SelfLoop(VertexId),
    #[error("edge {0} is already present")]
    DuplicateEdge(Edge),
    #[error("edge {0} is not present")]
    MissingEdge(Edge),
}

/// Running total of neighbor queries, the cost measure of the update algorithms.
#[derive(Debug, Default)]
pub struct QueryCounter {
    total: Cell<u64>,
}

impl QueryCounter {
    #[inline]
    pub fn total(&self) -> u64 {
        self.total.get()
    }

    #[inline]
    pub fn charge(&self, units: u64) {
        self.total.set(self.total.get() + units);
    }

    /// Only called when a run is (re)initialized.
    pub fn reset(&self) {
        self.total.set(0);
    }
}

impl Clone for QueryCounter {
    fn clone(&self) -> Self {
        QueryCounter { total: Cell::new(self.total.get()) }
    }
}

#[derive(Debug, Clone)]
pub struct DynamicGraph {
    adjacency: Vec<IndexSet<VertexId>>,
    edge_count: usize,
    queries: QueryCounter,
}

impl DynamicGraph {
    pub fn new(n: usize) -> Result<Self, GraphError> {
        if n == 0 {
            return Err(GraphError::NoVertices);
        }
        Ok(DynamicGraph { adjacency: vec![IndexSet::new(); n], edge_count: 0, queries: QueryCounter::default() })
    }

    /// Builds a graph from an edge list, rejecting self-loops and duplicates.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = Edge>) -> Result<Self, GraphError> {
        let mut g = DynamicGraph::new(n)?;
        for e in edges {
            g.insert_edge(e)?;
        }
        Ok(g)
    }

    #[inline]
    pub fn vertex_count(&self) -> usize {
        self.adjacency.len()
    }

    #[inline]
    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn max_edges(&self) -> usize {
        let n = self.vertex_count();
        n * (n - 1) / 2
    }

    pub fn vertices(&self) -> impl ExactSizeIterator<Item = VertexId> + Clone {
        (0..self.vertex_count()).map(VertexId::from_index)
    }

    pub fn queries(&self) -> &QueryCounter {
        &self.queries
    }

    pub fn check_vertex(&self, v: VertexId) -> Result<(), GraphError> {
        if v.0 == 0 || v.index() >= self.vertex_count() {
            Err(GraphError::VertexOutOfRange { v, n: self.vertex_count() })
        } else {
            Ok(())
        }
    }

    fn check_edge(&self, e: Edge) -> Result<(), GraphError> {
        self.check_vertex(e.lo)?;
        self.check_vertex(e.hi)
    }

    pub fn insert_edge(&mut self, e: Edge) -> Result<(), GraphError> {
        self.check_edge(e)?;
        let (u, v) = e.endpoints();
        if !self.adjacency[u.index()].insert(v) {
            return Err(GraphError::DuplicateEdge(e));
        }
        self.adjacency[v.index()].insert(u);
        self.edge_count += 1;
        Ok(())
    }

    pub fn delete_edge(&mut self, e: Edge) -> Result<(), GraphError> {
        self.check_edge(e)?;
        let (u, v) = e.endpoints();
        // swap_remove keeps the order a deterministic function of the mutation history.
        if !self.adjacency[u.index()].swap_remove(&v) {
            return Err(GraphError::MissingEdge(e));
        }
        self.adjacency[v.index()].swap_remove(&u);
        self.edge_count -= 1;
        Ok(())
    }

    /// Lazily yields the neighbors of `v`, charging one query per neighbor yielded.
    pub fn neighbors(&self, v: VertexId) -> Neighbors<'_> {
        Neighbors { inner: self.adjacency[v.index()].iter(), counter: &self.queries }
    }

    /// Degree of `v`; one query.
    pub fn degree(&self, v: VertexId) -> usize {
        self.queries.charge(1);
        self.adjacency[v.index()].len()
    }

    /// Edge membership; one query.
    pub fn has_edge(&self, e: Edge) -> bool {
        self.queries.charge(1);
        self.raw_has_edge(e)
    }

    /// Uncounted adjacency, for verification only.
    pub fn raw_neighbors(&self, v: VertexId) -> &IndexSet<VertexId> {
        &self.adjacency[v.index()]
    }

    pub fn raw_has_edge(&self, e: Edge) -> bool {
        let (u, v) = e.endpoints();
        self.adjacency[u.index()].contains(&v)
    }

    /// Every edge once, uncounted.
    pub fn raw_edges(&self) -> impl Iterator<Item = Edge> + '_ {
        self.adjacency.iter().enumerate().flat_map(|(i, nbrs)| {
            let u = VertexId::from_index(i);
            nbrs.iter().filter(move |&&w| u < w).map(move |&w| Edge { lo: u, hi: w })
        })
    }
}

/// Counting iterator returned by [`DynamicGraph::neighbors`].
pub struct Neighbors<'a> {
    inner: indexmap::set::Iter<'a, VertexId>,
    counter: &'a QueryCounter,
}

impl Iterator for Neighbors<'_> {
    type Item = VertexId;

    #[inline]
    fn next(&mut self) -> Option<VertexId> {
        let w = *self.inner.next()?;
        self.counter.charge(1);
        Some(w)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        self.inner.size_hint()
    }
}

impl ExactSizeIterator for Neighbors<'_> {}
