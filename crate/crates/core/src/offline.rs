//! Offline construction of the level set.
//!
//! Each epoch works on the residual graph of still-unassigned vertices,
//! picks an independent set there, settles its neighbors as dominated, and
//! freezes the epoch as the next level. Two samplers are provided:
//! rejection sampling (the default, used by the dynamic engine) and
//! independent subset sampling followed by greedy.

use std::collections::HashSet;

use indexmap::IndexSet;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::graph::{DynamicGraph, VertexId};
use crate::levels::{default_level_cap, Level, LevelSet, Role};

/// Retries of an epoch that sampled nothing before falling back to greedy.
pub const SUBSET_RETRIES: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct BuildConfig {
    /// Sampling constant; the target independent-set size of an epoch is `n_i^2 / (c * m_i)`.
    pub c: f64,
    pub seed: u64,
    /// Defaults to `4 * ceil(log2 n) + 1` when unset.
    pub level_cap: Option<usize>,
}

impl Default for BuildConfig {
    fn default() -> Self {
        BuildConfig { c: 34.0, seed: 0, level_cap: None }
    }
}

impl BuildConfig {
    pub fn with_seed(seed: u64) -> Self {
        BuildConfig { seed, ..Default::default() }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }

    pub fn cap_for(&self, n: usize) -> usize {
        self.level_cap.unwrap_or_else(|| default_level_cap(n)).max(1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sampler {
    Rejection,
    Subset,
}

/// Greedy maximal independent set over `order`: a vertex is kept unless an
/// already kept vertex is among its neighbors. Each vertex costs one scan of
/// its neighbors, cut short at the first conflict.
pub fn greedy_mis(g: &DynamicGraph, order: &[VertexId]) -> Vec<VertexId> {
    let mut chosen = Vec::new();
    let mut member: HashSet<VertexId> = HashSet::new();
    for &v in order {
        if g.neighbors(v).any(|w| member.contains(&w)) {
            continue;
        }
        member.insert(v);
        chosen.push(v);
    }
    chosen
}

/// Builds a level set from scratch with rejection sampling.
pub fn build_rejection<R: Rng + ?Sized>(g: &DynamicGraph, cfg: &BuildConfig, rng: &mut R) -> LevelSet {
    build(g, cfg, Sampler::Rejection, rng)
}

/// Builds a level set from scratch with subset sampling.
pub fn build_subset<R: Rng + ?Sized>(g: &DynamicGraph, cfg: &BuildConfig, rng: &mut R) -> LevelSet {
    build(g, cfg, Sampler::Subset, rng)
}

pub fn build<R: Rng + ?Sized>(g: &DynamicGraph, cfg: &BuildConfig, sampler: Sampler, rng: &mut R) -> LevelSet {
    let mut ls = LevelSet::new(g.vertex_count(), cfg.cap_for(g.vertex_count()));
    let residual: Vec<VertexId> = g.vertices().collect();
    build_epochs(&mut ls, g, residual, g.edge_count(), cfg.c, sampler, rng);
    ls
}

/// Discards levels `from..=k` and rebuilds them with rejection sampling on
/// the subgraph induced by their vertices.
pub fn rebuild_suffix<R: Rng + ?Sized>(
    ls: &mut LevelSet,
    g: &DynamicGraph,
    from: usize,
    cfg: &BuildConfig,
    rng: &mut R,
) {
    assert!(from >= 1 && from <= ls.k().max(1), "rebuild from level {from} with k = {}", ls.k());
    let m_from = ls.levels.get(from - 1).map_or(0, |l| l.live_m);
    let mut residual = ls.truncate(from);
    // Level order then insertion order; sort for a history-independent start.
    residual.sort_unstable();
    build_epochs(ls, g, residual, m_from, cfg.c, Sampler::Rejection, rng);
}

/// Runs epochs until every vertex of `residual` is settled. Residual
/// vertices are exactly the unassigned ones, and `m` is the number of edges
/// among them.
fn build_epochs<R: Rng + ?Sized>(
    ls: &mut LevelSet,
    g: &DynamicGraph,
    mut residual: Vec<VertexId>,
    m: usize,
    c: f64,
    sampler: Sampler,
    rng: &mut R,
) {
    let mut m_i = m;
    while !residual.is_empty() {
        let n_i = residual.len();
        ls.levels.push(Level::with_snapshot(n_i, m_i));
        let level = ls.k();

        if m_i == 0 {
            for &v in &residual {
                ls.place(v, level, Role::Independent);
            }
            return;
        }
        if level >= ls.cap() || m_i <= n_i {
            shuffle_greedy(ls, g, &mut residual, level, rng);
        } else {
            match sampler {
                Sampler::Rejection => rejection_epoch(ls, g, &residual, level, n_i, m_i, c, rng),
                Sampler::Subset => subset_epoch(ls, g, &mut residual, level, n_i, m_i, rng),
            }
        }
        let (settled, rest): (Vec<VertexId>, Vec<VertexId>) = residual.into_iter().partition(|&v| ls.slot(v).is_some());
        m_i -= settled_edges(ls, g, &settled, level);
        residual = rest;
    }
}

/// Edges of the residual graph with an endpoint in `settled`, all of which
/// were just placed at `level`. One neighbor scan per settled vertex.
fn settled_edges(ls: &LevelSet, g: &DynamicGraph, settled: &[VertexId], level: usize) -> usize {
    let (mut outward, mut inner) = (0, 0);
    for &v in settled {
        for w in g.neighbors(v) {
            match ls.slot(w) {
                None => outward += 1,
                Some(s) if s.level == level => inner += 1,
                Some(_) => {}
            }
        }
    }
    outward + inner / 2
}

/// Makes `v` independent at `level` and settles its unassigned neighbors
/// as dominated there.
fn settle<F: FnMut(VertexId)>(ls: &mut LevelSet, g: &DynamicGraph, v: VertexId, level: usize, mut on_dominated: F) {
    ls.place(v, level, Role::Independent);
    for w in g.neighbors(v) {
        if ls.slot(w).is_none() {
            ls.place(w, level, Role::Dominated);
            on_dominated(w);
        }
    }
}

/// Greedy over a uniformly random order of `order`; every vertex of it ends up settled.
fn shuffle_greedy<R: Rng + ?Sized>(
    ls: &mut LevelSet,
    g: &DynamicGraph,
    order: &mut [VertexId],
    level: usize,
    rng: &mut R,
) {
    order.shuffle(rng);
    greedy_settle(ls, g, order, level);
}

/// Greedy restricted to `order`, with the dominated set taken over the whole
/// residual graph. A vertex of `order` is kept iff no earlier kept vertex is
/// adjacent, exactly as [`greedy_mis`] decides.
fn greedy_settle(ls: &mut LevelSet, g: &DynamicGraph, order: &[VertexId], level: usize) -> usize {
    let mut kept = 0;
    for &v in order {
        if ls.slot(v).is_none() {
            settle(ls, g, v, level, |_| {});
            kept += 1;
        }
    }
    kept
}

#[allow(clippy::too_many_arguments)]
fn rejection_epoch<R: Rng + ?Sized>(
    ls: &mut LevelSet,
    g: &DynamicGraph,
    residual: &[VertexId],
    level: usize,
    n_i: usize,
    m_i: usize,
    c: f64,
    rng: &mut R,
) {
    let target = accepted_sample_target(n_i, m_i, c);
    // Sampling uniformly from V_i until the vertex can join I_i is the same
    // as sampling uniformly from the vertices not yet in I_i or N(I_i).
    let mut eligible: IndexSet<VertexId> = residual.iter().copied().collect();
    let mut accepted = 0;
    while accepted < target && !eligible.is_empty() {
        let idx = rng.gen_range(0..eligible.len());
        let v = eligible.swap_remove_index(idx).expect("index in range");
        settle(ls, g, v, level, |w| {
            eligible.swap_remove(&w);
        });
        accepted += 1;
    }
}

/// `max(ceil(n^2 / (c m)), 1)`.
pub fn accepted_sample_target(n: usize, m: usize, c: f64) -> usize {
    if m == 0 {
        return n.max(1);
    }
    let t = (n as f64) * (n as f64) / (c * m as f64);
    (t.ceil() as usize).max(1)
}

fn subset_epoch<R: Rng + ?Sized>(
    ls: &mut LevelSet,
    g: &DynamicGraph,
    residual: &mut [VertexId],
    level: usize,
    n_i: usize,
    m_i: usize,
    rng: &mut R,
) {
    let p = subset_probability(n_i, m_i);
    for _ in 0..SUBSET_RETRIES {
        let mut sample = sample_subset(residual, p, rng);
        sample.shuffle(rng);
        if greedy_settle(ls, g, &sample, level) > 0 {
            return;
        }
    }
    shuffle_greedy(ls, g, residual, level, rng);
}

/// `min(n / m, 1)`, and 1 on an edgeless graph.
pub fn subset_probability(n: usize, m: usize) -> f64 {
    if m == 0 {
        1.0
    } else {
        (n as f64 / m as f64).min(1.0)
    }
}

/// Keeps each vertex independently with probability `p`.
pub fn sample_subset<R: Rng + ?Sized>(vertices: &[VertexId], p: f64, rng: &mut R) -> Vec<VertexId> {
    if p >= 1.0 {
        return vertices.to_vec();
    }
    vertices.iter().copied().filter(|_| rng.gen_bool(p)).collect()
}

/// Quantities of one subset-sampling epoch on the whole graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubsetEpochStats {
    pub n: usize,
    pub m: usize,
    pub sample_size: usize,
    /// Edges of the subgraph induced by the sample.
    pub sample_edges: usize,
    /// Size of the greedy independent set on the induced sample subgraph.
    pub independent_size: usize,
}

/// Draws the first-epoch sample of the subset sampler on `g` and runs greedy
/// on the induced subgraph, reporting the sizes involved.
pub fn subset_epoch_stats<R: Rng + ?Sized>(g: &DynamicGraph, rng: &mut R) -> SubsetEpochStats {
    let (n, m) = (g.vertex_count(), g.edge_count());
    let all: Vec<VertexId> = g.vertices().collect();
    let mut sample = sample_subset(&all, subset_probability(n, m), rng);
    sample.shuffle(rng);
    let member: HashSet<VertexId> = sample.iter().copied().collect();
    let twice: usize = sample.iter().map(|&v| g.raw_neighbors(v).iter().filter(|w| member.contains(w)).count()).sum();
    let independent = greedy_mis(g, &sample);
    SubsetEpochStats { n, m, sample_size: sample.len(), sample_edges: twice / 2, independent_size: independent.len() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Edge;
    use crate::oracle::{audit_levels, is_maximal_independent};

    fn v(x: u32) -> VertexId {
        VertexId(x)
    }

    fn graph(n: usize, edges: &[(u32, u32)]) -> DynamicGraph {
        DynamicGraph::from_edges(n, edges.iter().map(|&(a, b)| Edge::from_raw(a, b).unwrap())).unwrap()
    }

    fn complete(n: u32) -> DynamicGraph {
        let mut edges = Vec::new();
        for a in 1..=n {
            for b in a + 1..=n {
                edges.push((a, b));
            }
        }
        graph(n as usize, &edges)
    }

    fn random_graph(n: usize, m: usize, seed: u64) -> DynamicGraph {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut g = DynamicGraph::new(n).unwrap();
        while g.edge_count() < m {
            let a = rng.gen_range(1..=n as u32);
            let b = rng.gen_range(1..=n as u32);
            if let Ok(e) = Edge::from_raw(a, b) {
                let _ = g.insert_edge(e);
            }
        }
        g
    }

    #[test]
    fn greedy_examples() {
        let path = graph(3, &[(1, 2), (2, 3)]);
        assert_eq!(greedy_mis(&path, &[v(1), v(2), v(3)]), vec![v(1), v(3)]);
        let star = graph(5, &[(1, 2), (1, 3), (1, 4), (1, 5)]);
        assert_eq!(greedy_mis(&star, &[v(1), v(2), v(3), v(4), v(5)]), vec![v(1)]);
        let k3 = complete(3);
        assert_eq!(greedy_mis(&k3, &[v(2), v(3), v(1)]).len(), 1);
    }

    #[test]
    fn edgeless_builds_one_level() {
        let g = DynamicGraph::new(5).unwrap();
        for sampler in [Sampler::Rejection, Sampler::Subset] {
            let ls = build(&g, &BuildConfig::default(), sampler, &mut ChaCha8Rng::seed_from_u64(1));
            assert_eq!(ls.k(), 1);
            assert_eq!(ls.mis().len(), 5);
            for x in g.vertices() {
                assert_eq!(ls.level_of(x), Ok(1));
                assert_eq!(ls.role_of(x), Ok(Role::Independent));
            }
        }
    }

    #[test]
    fn clique_builds_single_level() {
        let g = complete(5);
        for sampler in [Sampler::Rejection, Sampler::Subset] {
            let ls = build(&g, &BuildConfig::default(), sampler, &mut ChaCha8Rng::seed_from_u64(3));
            assert_eq!(ls.k(), 1);
            assert_eq!(ls.level(1).independent().len(), 1);
            assert_eq!(ls.level(1).dominated().len(), 4);
        }
    }

    #[test]
    fn dense_graph_takes_rejection_path() {
        // n = 12, m = 66 > n, so level 1 is sampled rather than shuffled.
        let g = complete(12);
        assert_eq!(accepted_sample_target(12, 66, 34.0), 1);
        let ls = build_rejection(&g, &BuildConfig::default(), &mut ChaCha8Rng::seed_from_u64(9));
        assert!(audit_levels(&g, &ls).passed);
    }

    #[test]
    fn sample_target() {
        assert_eq!(accepted_sample_target(512, 2048, 34.0), 4);
        assert_eq!(accepted_sample_target(512, 8192, 34.0), 1);
        assert_eq!(accepted_sample_target(100, 101, 1.0), 100);
        assert_eq!(subset_probability(10, 5), 1.0);
        assert_eq!(subset_probability(10, 40), 0.25);
        assert_eq!(subset_probability(10, 0), 1.0);
    }

    #[test]
    fn builders_produce_valid_mis_on_random_graphs() {
        for seed in 0..100 {
            let g = random_graph(50, 200, seed);
            for sampler in [Sampler::Rejection, Sampler::Subset] {
                let cfg = BuildConfig::with_seed(seed);
                let ls = build(&g, &cfg, sampler, &mut cfg.rng());
                assert!(is_maximal_independent(&g, &ls.mis()), "seed {seed} {sampler:?}");
                let report = audit_levels(&g, &ls);
                assert!(report.passed, "seed {seed} {sampler:?}: {report}");
            }
        }
    }

    #[test]
    fn builder_is_deterministic() {
        let g = random_graph(80, 400, 11);
        let cfg = BuildConfig::with_seed(5);
        let a = build_rejection(&g, &cfg, &mut cfg.rng());
        let b = build_rejection(&g, &cfg, &mut cfg.rng());
        assert_eq!(a.dump(), b.dump());
        assert_eq!(a.mis(), b.mis());
        let slots_a: Vec<_> = g.vertices().map(|x| a.slot(x)).collect();
        let slots_b: Vec<_> = g.vertices().map(|x| b.slot(x)).collect();
        assert_eq!(slots_a, slots_b);
    }

    #[test]
    fn level_cap_is_honored() {
        let g = random_graph(64, 1200, 4);
        let cfg = BuildConfig { level_cap: Some(2), ..BuildConfig::with_seed(4) };
        let ls = build_rejection(&g, &cfg, &mut cfg.rng());
        assert!(ls.k() <= 2);
        assert!(audit_levels(&g, &ls).passed);
    }

    #[test]
    fn rebuild_suffix_cases() {
        let g = random_graph(60, 500, 21);
        let cfg = BuildConfig::with_seed(21);
        let mut rng = cfg.rng();
        let mut ls = build_rejection(&g, &cfg, &mut rng);
        assert!(ls.k() >= 2, "fixture should have several levels");

        let before: Vec<_> = ls.levels()[..1].iter().map(|l| (l.n(), l.m())).collect();
        rebuild_suffix(&mut ls, &g, 2, &cfg, &mut rng);
        assert_eq!(ls.levels()[..1].iter().map(|l| (l.n(), l.m())).collect::<Vec<_>>(), before);
        assert!(audit_levels(&g, &ls).passed);
        for l in ls.levels() {
            assert_eq!((l.n(), l.m()), (l.snapshot_n(), l.snapshot_m()));
        }

        rebuild_suffix(&mut ls, &g, 1, &cfg, &mut rng);
        assert!(audit_levels(&g, &ls).passed);
        assert_eq!(ls.level(1).snapshot_n(), 60);
        assert_eq!(ls.level(1).snapshot_m(), 500);
    }

    #[test]
    fn rebuild_of_empty_suffix_truncates() {
        let g = complete(4);
        let cfg = BuildConfig::with_seed(2);
        let mut rng = cfg.rng();
        let mut ls = build_rejection(&g, &cfg, &mut rng);
        // Fabricate an empty trailing level.
        ls.levels.push(Level::with_snapshot(0, 0));
        rebuild_suffix(&mut ls, &g, 2, &cfg, &mut rng);
        assert_eq!(ls.k(), 1);
        assert!(audit_levels(&g, &ls).passed);
    }

    #[test]
    fn subset_stats_on_sparse_graph_sample_everything() {
        let g = random_graph(40, 30, 8);
        let s = subset_epoch_stats(&g, &mut ChaCha8Rng::seed_from_u64(8));
        assert_eq!(s.sample_size, 40);
        assert_eq!(s.sample_edges, 30);
        assert!(s.independent_size >= 1);
    }
}
