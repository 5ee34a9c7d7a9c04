//! The update engine: classification of inserted edges, light and heavy
//! promotion, demotion, and density-triggered suffix rebuilds.

use std::collections::VecDeque;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::graph::{DynamicGraph, Edge, GraphError, VertexId};
use crate::levels::{LevelSet, Role, Slot};
use crate::offline::{build_rejection, rebuild_suffix, BuildConfig};

/// How an inserted edge affects the level set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InsertionKind {
    LightInsertion,
    /// The dominated endpoint moves up to the independent endpoint's level.
    LightPromotion {
        level: usize,
    },
    /// Both endpoints are independent; the one at `deep` leaves the independent set.
    HeavyPromotion {
        shallow: usize,
        deep: usize,
    },
}

/// A classified insertion. For promotions `anchor` is the independent
/// endpoint that stays put and `moved` the endpoint that changes place.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Insertion {
    pub kind: InsertionKind,
    pub anchor: VertexId,
    pub moved: VertexId,
}

/// Classifies the insertion of `e` against the current level set.
pub fn classify_insertion(ls: &LevelSet, e: Edge) -> Insertion {
    let (a, b) = e.endpoints();
    let (sa, sb) = (ls.slot_of(a), ls.slot_of(b));
    use Role::*;
    match (sa.role, sb.role) {
        (Dominated, Dominated) => Insertion { kind: InsertionKind::LightInsertion, anchor: a, moved: b },
        (Independent, Dominated) | (Dominated, Independent) => {
            let (u, su, v, sv) = if sa.role == Independent { (a, sa, b, sb) } else { (b, sb, a, sa) };
            let kind = if su.level < sv.level {
                InsertionKind::LightPromotion { level: su.level }
            } else {
                InsertionKind::LightInsertion
            };
            Insertion { kind, anchor: u, moved: v }
        }
        (Independent, Independent) => {
            // The deeper endpoint gives way; on a tie, the larger id.
            let (u, su, v, sv) = if (sb.level, b) > (sa.level, a) { (a, sa, b, sb) } else { (b, sb, a, sa) };
            Insertion { kind: InsertionKind::HeavyPromotion { shallow: su.level, deep: sv.level }, anchor: u, moved: v }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NoOp;

impl fmt::Display for NoOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("target level is not above the vertex's level")
    }
}

impl std::error::Error for NoOp {}

/// Moves `v` up to `(r, Dominated)`. Orphans left behind when `v` was
/// independent are the caller's problem.
pub fn light_promotion(ls: &mut LevelSet, g: &DynamicGraph, v: VertexId, r: usize) -> Result<(), NoOp> {
    if r >= ls.slot_of(v).level {
        return Err(NoOp);
    }
    ls.assign(g, v, r, Role::Dominated);
    Ok(())
}

/// Counters of structural events, summed over the lifetime of an engine.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct EngineStats {
    pub updates: u64,
    pub light_insertions: u64,
    pub light_promotions: u64,
    pub heavy_promotions: u64,
    /// Queries spent inside heavy promotions, rebuilds excluded.
    pub heavy_promotion_queries: u64,
    pub deletion_demotions: u64,
    pub demotions: u64,
    /// Demotions that fell through every sampling level and were forced in.
    pub forced_insertions: u64,
    pub rebuilds: u64,
    pub max_update_queries: u64,
}

/// Re-settles vertices that lost their dominator, FIFO.
struct Cascade<'a, R: Rng + ?Sized> {
    ls: &'a mut LevelSet,
    g: &'a DynamicGraph,
    c: f64,
    rng: &'a mut R,
    stats: &'a mut EngineStats,
    queue: VecDeque<VertexId>,
}

impl<R: Rng + ?Sized> Cascade<'_, R> {
    /// Enqueues every dominated neighbor of `v` at level `j` that no longer
    /// has an independent neighbor at `j`. `v` must already be out of `I_j`.
    fn collect_orphans(&mut self, v: VertexId, j: usize) {
        for w in self.g.neighbors(v) {
            if self.ls.slot(w) != Some(Slot { level: j, role: Role::Dominated }) {
                continue;
            }
            let independent = self.ls.level(j).independent();
            if !self.g.neighbors(w).any(|x| independent.contains(&x)) {
                self.queue.push_back(w);
            }
        }
    }

    fn run(&mut self) {
        while let Some(w) = self.queue.pop_front() {
            self.demote(w);
        }
    }

    fn demote(&mut self, w: VertexId) {
        let slot = self.ls.slot_of(w);
        if slot.role == Role::Independent {
            // Already re-settled earlier in this cascade.
            return;
        }
        self.stats.demotions += 1;
        let lowest = self
            .g
            .neighbors(w)
            .filter_map(|x| match self.ls.slot(x) {
                Some(Slot { level, role: Role::Independent }) => Some(level),
                _ => None,
            })
            .min();
        if let Some(level) = lowest {
            self.ls.assign(self.g, w, level, Role::Dominated);
            return;
        }

        let k = self.ls.k();
        let mut target = None;
        for r in slot.level..=k {
            let l = self.ls.level(r);
            if self.rng.gen_bool(sampling_probability(l.n(), l.m(), self.c)) {
                target = Some(r);
                break;
            }
        }
        let r = target.unwrap_or_else(|| {
            self.stats.forced_insertions += 1;
            k
        });
        self.make_independent(w, r);
    }

    /// Puts `w` into `I_r` and pulls its deeper neighbors up under it.
    fn make_independent(&mut self, w: VertexId, r: usize) {
        self.ls.assign(self.g, w, r, Role::Independent);
        for z in self.g.neighbors(w) {
            let sz = self.ls.slot_of(z);
            match sz.role {
                Role::Dominated if sz.level > r => self.ls.assign(self.g, z, r, Role::Dominated),
                Role::Dominated => {}
                Role::Independent => {
                    debug_assert!(sz.level >= r, "independent neighbor above the sampled level");
                    self.ls.assign(self.g, z, r, Role::Dominated);
                    self.collect_orphans(z, sz.level);
                }
            }
        }
    }
}

/// `min(1, n / (c m))`, and 1 on an edgeless level.
pub fn sampling_probability(n: usize, m: usize, c: f64) -> f64 {
    if m == 0 {
        1.0
    } else {
        (n as f64 / (c * m as f64)).clamp(0.0, 1.0)
    }
}

/// Re-settles the orphans of `v`, which was independent at level `j` and has
/// already been moved out of `I_j`.
pub fn heavy_promotion<R: Rng + ?Sized>(
    ls: &mut LevelSet,
    g: &DynamicGraph,
    v: VertexId,
    j: usize,
    c: f64,
    rng: &mut R,
    stats: &mut EngineStats,
) {
    debug_assert!(!ls.level(j).independent().contains(&v));
    let mut cascade = Cascade { ls, g, c, rng, stats, queue: VecDeque::new() };
    cascade.collect_orphans(v, j);
    cascade.run();
}

/// Re-settles `w`, a dominated vertex whose domination may be stale: it
/// joins the dominated set of its shallowest independent neighbor, or else is
/// sampled into an independent set at its level or deeper.
pub fn demotion<R: Rng + ?Sized>(
    ls: &mut LevelSet,
    g: &DynamicGraph,
    w: VertexId,
    c: f64,
    rng: &mut R,
    stats: &mut EngineStats,
) {
    let mut cascade = Cascade { ls, g, c, rng, stats, queue: VecDeque::from([w]) };
    cascade.run();
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum UpdateKind {
    LightInsertion,
    LightPromotion,
    HeavyPromotion,
    Deletion,
    DeletionDemotion,
}

impl UpdateKind {
    pub fn as_str(self) -> &'static str {
        match self {
            UpdateKind::LightInsertion => "light_insertion",
            UpdateKind::LightPromotion => "light_promotion",
            UpdateKind::HeavyPromotion => "heavy_promotion",
            UpdateKind::Deletion => "deletion",
            UpdateKind::DeletionDemotion => "deletion_demotion",
        }
    }
}

impl fmt::Display for UpdateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// What one update did and what it cost.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UpdateReport {
    pub kind: UpdateKind,
    pub queries_before: u64,
    /// Counter after the structural update, before any rebuild.
    pub queries_structural: u64,
    pub queries_after: u64,
    pub rebuilt_from: Option<usize>,
}

impl UpdateReport {
    pub fn queries(&self) -> u64 {
        self.queries_after - self.queries_before
    }

    pub fn structural_queries(&self) -> u64 {
        self.queries_structural - self.queries_before
    }

    /// `t kind queries_before queries_after rebuilt?`
    pub fn log_line(&self, t: u64) -> String {
        format!(
            "{t} {} {} {} {}",
            self.kind,
            self.queries_before,
            self.queries_after,
            if self.rebuilt_from.is_some() { "rebuilt" } else { "-" }
        )
    }
}

/// One replica of the dynamic structure: its own graph, level set, and randomness.
#[derive(Debug, Clone)]
pub struct DynamicMis {
    graph: DynamicGraph,
    levels: LevelSet,
    cfg: BuildConfig,
    rng: ChaCha8Rng,
    stats: EngineStats,
}

impl DynamicMis {
    /// Builds the level set for `graph` from `cfg.seed`.
    pub fn new(graph: DynamicGraph, cfg: BuildConfig) -> Self {
        let mut rng = cfg.rng();
        let levels = build_rejection(&graph, &cfg, &mut rng);
        DynamicMis { graph, levels, cfg, rng, stats: EngineStats::default() }
    }

    /// Same as [`Self::new`] but with an explicit generator, for scripted tests.
    pub fn with_rng(graph: DynamicGraph, cfg: BuildConfig, mut rng: ChaCha8Rng) -> Self {
        let levels = build_rejection(&graph, &cfg, &mut rng);
        DynamicMis { graph, levels, cfg, rng, stats: EngineStats::default() }
    }

    pub fn graph(&self) -> &DynamicGraph {
        &self.graph
    }

    pub fn levels(&self) -> &LevelSet {
        &self.levels
    }

    pub fn config(&self) -> &BuildConfig {
        &self.cfg
    }

    pub fn stats(&self) -> &EngineStats {
        &self.stats
    }

    pub fn queries(&self) -> u64 {
        self.graph.queries().total()
    }

    pub fn reset_queries(&mut self) {
        self.graph.queries().reset();
    }

    pub fn mis(&self) -> Vec<VertexId> {
        self.levels.mis()
    }

    pub fn into_parts(self) -> (DynamicGraph, LevelSet) {
        (self.graph, self.levels)
    }

    pub fn classify(&self, e: Edge) -> Insertion {
        classify_insertion(&self.levels, e)
    }

    pub fn on_insert(&mut self, e: Edge) -> Result<UpdateReport, GraphError> {
        let before = self.queries();
        self.graph.insert_edge(e)?;
        let (a, b) = e.endpoints();
        self.levels.add_edge(a, b);

        let ins = classify_insertion(&self.levels, e);
        let kind = match ins.kind {
            InsertionKind::LightInsertion => {
                self.stats.light_insertions += 1;
                UpdateKind::LightInsertion
            }
            InsertionKind::LightPromotion { level } => {
                self.stats.light_promotions += 1;
                light_promotion(&mut self.levels, &self.graph, ins.moved, level)
                    .expect("classified as a strict promotion");
                UpdateKind::LightPromotion
            }
            InsertionKind::HeavyPromotion { shallow, deep } => {
                self.stats.heavy_promotions += 1;
                let hp_before = self.queries();
                // For shallow == deep this is a role change in place.
                self.levels.assign(&self.graph, ins.moved, shallow, Role::Dominated);
                heavy_promotion(
                    &mut self.levels,
                    &self.graph,
                    ins.moved,
                    deep,
                    self.cfg.c,
                    &mut self.rng,
                    &mut self.stats,
                );
                self.stats.heavy_promotion_queries += self.queries() - hp_before;
                UpdateKind::HeavyPromotion
            }
        };
        Ok(self.finish(kind, before))
    }

    pub fn on_delete(&mut self, e: Edge) -> Result<UpdateReport, GraphError> {
        let before = self.queries();
        self.graph.delete_edge(e)?;
        let (a, b) = e.endpoints();
        self.levels.remove_edge(a, b);

        let (sa, sb) = (self.levels.slot_of(a), self.levels.slot_of(b));
        let orphan = match (sa.role, sb.role) {
            (Role::Independent, Role::Dominated) if sa.level == sb.level => Some((b, sb.level)),
            (Role::Dominated, Role::Independent) if sa.level == sb.level => Some((a, sa.level)),
            _ => None,
        };
        let mut kind = UpdateKind::Deletion;
        if let Some((v, level)) = orphan {
            let independent = self.levels.level(level).independent();
            if !self.graph.neighbors(v).any(|x| independent.contains(&x)) {
                self.stats.deletion_demotions += 1;
                demotion(&mut self.levels, &self.graph, v, self.cfg.c, &mut self.rng, &mut self.stats);
                kind = UpdateKind::DeletionDemotion;
            }
        }
        Ok(self.finish(kind, before))
    }

    /// Rebuilds from the shallowest level whose density drifted by more than
    /// a factor of two. Returns the level rebuilt from, if any.
    pub fn check_density_and_rebuild(&mut self) -> Option<usize> {
        let from = self.levels.density_breach()?;
        rebuild_suffix(&mut self.levels, &self.graph, from, &self.cfg, &mut self.rng);
        self.stats.rebuilds += 1;
        Some(from)
    }

    /// Discards the level set and builds a fresh one with a new seed.
    pub fn rebuild_all(&mut self, seed: u64) {
        self.cfg.seed = seed;
        self.rng = self.cfg.rng();
        self.levels = build_rejection(&self.graph, &self.cfg, &mut self.rng);
    }

    fn finish(&mut self, kind: UpdateKind, before: u64) -> UpdateReport {
        let structural = self.queries();
        let rebuilt_from = self.check_density_and_rebuild();
        let after = self.queries();
        self.stats.updates += 1;
        self.stats.max_update_queries = self.stats.max_update_queries.max(after - before);
        UpdateReport {
            kind,
            queries_before: before,
            queries_structural: structural,
            queries_after: after,
            rebuilt_from,
        }
    }
}

/// Seeded engine from a plain edge list; handy in tests and benches.
pub fn engine_from_edges(n: usize, edges: impl IntoIterator<Item = Edge>, seed: u64) -> Result<DynamicMis, GraphError> {
    let g = DynamicGraph::from_edges(n, edges)?;
    Ok(DynamicMis::with_rng(g, BuildConfig::with_seed(seed), ChaCha8Rng::seed_from_u64(seed)))
}
