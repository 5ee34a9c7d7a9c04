//! Shared fixtures for the benchmarks.

use dynmis_core::workload::gen_random;
use dynmis_core::{DynamicGraph, Stream};

/// Graph reached by replaying a random stream of `ops` updates on `n` vertices.
pub fn replayed_graph(n: usize, ops: usize, seed: u64) -> DynamicGraph {
    let stream = gen_random(n, ops, 0.3, seed).expect("valid parameters");
    let mut g = DynamicGraph::new(n).expect("n > 0");
    for op in &stream.ops {
        match op.kind {
            dynmis_core::OpKind::Insert => g.insert_edge(op.edge).expect("feasible"),
            dynmis_core::OpKind::Delete => g.delete_edge(op.edge).expect("feasible"),
        }
    }
    g
}

pub fn stream(n: usize, ops: usize, seed: u64) -> Stream {
    gen_random(n, ops, 0.3, seed).expect("valid parameters")
}
