//! Fully dynamic maximal independent set.
//!
//! A [`LevelSet`] partitions the vertices of a [`DynamicGraph`] into levels,
//! each holding an independent set and the vertices it dominates. The
//! [`dynamic`] engine keeps the union of the independent sets maximal under
//! edge insertions and deletions, the [`runs`] pool replicates the engine
//! under per-run query budgets, and [`oracle`] checks everything from scratch.

pub mod dynamic;
pub mod graph;
pub mod levels;
pub mod offline;
pub mod oracle;
pub mod runs;
pub mod workload;

pub use dynamic::{classify_insertion, DynamicMis, EngineStats, InsertionKind, UpdateKind, UpdateReport};
pub use graph::{DynamicGraph, Edge, GraphError, QueryCounter, VertexId};
pub use levels::{ceil_log2, Level, LevelSet, Role};
pub use offline::{build_rejection, build_subset, greedy_mis, rebuild_suffix, BuildConfig};
pub use oracle::{audit_levels, is_independent, is_maximal_independent, AuditReport, Invariant, Violation};
pub use runs::{PoolConfig, PoolError, PoolUpdate, RunPool};
pub use workload::{OpKind, Stream, StreamOp, WorkloadError};
