//! Independent replicas of the dynamic structure with per-run query budgets.
//!
//! Every replica applies the same updates with its own randomness. After each
//! update a replica whose total query count exceeds `3 c z ceil(log2 n)^e`
//! is stopped, and the reported set comes from the lowest-indexed replica
//! still alive.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::dynamic::{DynamicMis, UpdateReport};
use crate::graph::{DynamicGraph, Edge, GraphError, VertexId};
use crate::levels::ceil_log2;
use crate::offline::BuildConfig;
use crate::workload::{OpKind, StreamOp};

#[derive(Debug, Clone, PartialEq)]
pub struct PoolConfig {
    pub delta: f64,
    pub c: f64,
    pub y_override: Option<usize>,
    /// Updates between full rebuilds; `None` means `n^2`.
    pub reset_period: Option<u64>,
    pub budget_exponent: u32,
    pub seed: u64,
    pub level_cap: Option<usize>,
    /// Fan updates out to runs on the rayon pool.
    pub parallel: bool,
}

impl Default for PoolConfig {
    fn default() -> Self {
        PoolConfig {
            delta: 0.1,
            c: 34.0,
            y_override: None,
            reset_period: None,
            budget_exponent: 3,
            seed: 0,
            level_cap: None,
            parallel: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PoolError {
    #[error("delta must lie in (0, 1), got {0}")]
    BadDelta(String),
    #[error("c must be positive, got {0}")]
    BadC(String),
    #[error("budget exponent must be 2 or 3, got {0}")]
    BadExponent(u32),
    #[error("run count and reset period must be positive")]
    ZeroParameter,
    #[error("no run is alive")]
    AllRunsDead,
    #[error(transparent)]
    Graph(#[from] GraphError),
}

impl PoolConfig {
    pub fn validate(&self) -> Result<(), PoolError> {
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(PoolError::BadDelta(self.delta.to_string()));
        }
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(PoolError::BadC(self.c.to_string()));
        }
        if !matches!(self.budget_exponent, 2 | 3) {
            return Err(PoolError::BadExponent(self.budget_exponent));
        }
        if self.y_override == Some(0) || self.reset_period == Some(0) {
            return Err(PoolError::ZeroParameter);
        }
        Ok(())
    }

    /// `y = ceil(4 log2(n / delta))`, at least 1, unless overridden.
    pub fn run_count(&self, n: usize) -> usize {
        self.y_override.unwrap_or_else(|| ((4.0 * (n as f64 / self.delta).log2()).ceil() as usize).max(1))
    }

    /// Query budget after `z` updates: `3 c z ceil(log2 n)^e`.
    pub fn budget(&self, n: usize, z: u64) -> f64 {
        3.0 * self.c * z as f64 * (ceil_log2(n) as f64).powi(self.budget_exponent as i32)
    }

    pub fn reset_period_for(&self, n: usize) -> u64 {
        self.reset_period.unwrap_or((n as u64).saturating_mul(n as u64))
    }

    /// The builder's sampling constant is held at 1 or more; smaller `c` only
    /// shrinks the budget.
    fn build_config(&self, seed: u64) -> BuildConfig {
        BuildConfig { c: self.c.max(1.0), seed, level_cap: self.level_cap }
    }
}

#[derive(Debug, Clone)]
pub struct RunState {
    engine: Option<DynamicMis>,
    seed: u64,
    /// Queries of earlier generations of this run, before resets.
    past_queries: u64,
}

impl RunState {
    pub fn is_alive(&self) -> bool {
        self.engine.is_some()
    }

    pub fn engine(&self) -> Option<&DynamicMis> {
        self.engine.as_ref()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Queries of the current generation, counted from its last (re)build.
    pub fn queries(&self) -> u64 {
        self.engine.as_ref().map_or(0, DynamicMis::queries)
    }

    /// Queries over the whole stream, across resets.
    pub fn lifetime_queries(&self) -> u64 {
        self.past_queries + self.queries()
    }
}

/// Outcome of one pool update.
#[derive(Debug, Clone, PartialEq)]
pub struct PoolUpdate {
    pub z: u64,
    pub alive: usize,
    /// Zero-based index of the reporting run.
    pub survivor: usize,
    pub max_run_queries: u64,
    pub budget: f64,
    /// The survivor's own report, when it applied this update (not after a revive).
    pub survivor_report: Option<UpdateReport>,
    /// Every run died on this update and the pool was rebuilt.
    pub revived: bool,
    /// The periodic full rebuild fired on this update.
    pub reset: bool,
}

impl PoolUpdate {
    /// `z alive_count survivor_index max_run_queries budget`
    pub fn log_line(&self) -> String {
        format!("{} {} {} {} {:.0}", self.z, self.alive, self.survivor, self.max_run_queries, self.budget)
    }
}

#[derive(Debug, Clone)]
pub struct RunPool {
    cfg: PoolConfig,
    graph: DynamicGraph,
    runs: Vec<RunState>,
    z: u64,
    since_reset: u64,
    generation: u64,
    all_runs_dead: u64,
    resets: u64,
}

impl RunPool {
    pub fn new(n: usize, initial: impl IntoIterator<Item = Edge>, cfg: PoolConfig) -> Result<Self, PoolError> {
        cfg.validate()?;
        let graph = DynamicGraph::from_edges(n, initial)?;
        let y = cfg.run_count(n);
        let mut pool = RunPool {
            cfg,
            graph,
            runs: Vec::with_capacity(y),
            z: 0,
            since_reset: 0,
            generation: 0,
            all_runs_dead: 0,
            resets: 0,
        };
        pool.runs = (0..y).map(|r| RunState { engine: None, seed: pool.seed_for(r), past_queries: 0 }).collect();
        pool.rebuild_all();
        Ok(pool)
    }

    fn seed_for(&self, r: usize) -> u64 {
        let y = self.cfg.run_count(self.graph.vertex_count()) as u64;
        self.cfg.seed.wrapping_add(self.generation.wrapping_mul(y)).wrapping_add(r as u64 + 1)
    }

    /// Rebuilds every run from scratch on the current graph with the seeds of
    /// the current generation; query counters restart at zero.
    fn rebuild_all(&mut self) {
        let jobs: Vec<(u64, DynamicGraph)> = (0..self.runs.len())
            .map(|r| {
                let g = self.graph.clone();
                g.queries().reset();
                (self.seed_for(r), g)
            })
            .collect();
        let cfg = &self.cfg;
        let build = |(run, (seed, g)): (&mut RunState, (u64, DynamicGraph))| {
            run.past_queries += run.queries();
            let mut engine = DynamicMis::new(g, cfg.build_config(seed));
            engine.reset_queries();
            run.engine = Some(engine);
            run.seed = seed;
        };
        if self.cfg.parallel {
            self.runs.par_iter_mut().zip(jobs.into_par_iter()).for_each(build);
        } else {
            self.runs.iter_mut().zip(jobs).for_each(build);
        }
        self.since_reset = 0;
    }

    pub fn config(&self) -> &PoolConfig {
        &self.cfg
    }

    pub fn graph(&self) -> &DynamicGraph {
        &self.graph
    }

    pub fn runs(&self) -> &[RunState] {
        &self.runs
    }

    pub fn n(&self) -> usize {
        self.graph.vertex_count()
    }

    pub fn z(&self) -> u64 {
        self.z
    }

    pub fn all_runs_dead_count(&self) -> u64 {
        self.all_runs_dead
    }

    pub fn reset_count(&self) -> u64 {
        self.resets
    }

    pub fn alive_count(&self) -> usize {
        self.runs.iter().filter(|r| r.is_alive()).count()
    }

    pub fn survivor_index(&self) -> Option<usize> {
        self.runs.iter().position(RunState::is_alive)
    }

    pub fn survivor(&self) -> Result<&DynamicMis, PoolError> {
        self.runs.iter().find_map(|r| r.engine.as_ref()).ok_or(PoolError::AllRunsDead)
    }

    /// The set maintained by the lowest-indexed live run.
    pub fn survivor_mis(&self) -> Result<Vec<VertexId>, PoolError> {
        self.survivor().map(DynamicMis::mis)
    }

    pub fn current_budget(&self) -> f64 {
        self.cfg.budget(self.n(), self.since_reset)
    }

    /// Stops run `r` as if it had exceeded its budget.
    pub fn kill_run(&mut self, r: usize) {
        let run = &mut self.runs[r];
        run.past_queries += run.queries();
        run.engine = None;
    }

    pub fn apply_update(&mut self, op: StreamOp) -> Result<PoolUpdate, PoolError> {
        if self.alive_count() == 0 {
            return Err(PoolError::AllRunsDead);
        }
        match op.kind {
            OpKind::Insert => self.graph.insert_edge(op.edge)?,
            OpKind::Delete => self.graph.delete_edge(op.edge)?,
        }
        self.z += 1;
        self.since_reset += 1;

        let apply = |run: &mut RunState| -> Option<UpdateReport> {
            let engine = run.engine.as_mut()?;
            let rep = match op.kind {
                OpKind::Insert => engine.on_insert(op.edge),
                OpKind::Delete => engine.on_delete(op.edge),
            };
            Some(rep.expect("runs track the pool graph"))
        };
        let reports: Vec<Option<UpdateReport>> = if self.cfg.parallel {
            self.runs.par_iter_mut().map(apply).collect()
        } else {
            self.runs.iter_mut().map(apply).collect()
        };

        let budget = self.current_budget();
        let mut max_run_queries = 0;
        for r in 0..self.runs.len() {
            let q = self.runs[r].queries();
            if self.runs[r].is_alive() {
                max_run_queries = max_run_queries.max(q);
                if q as f64 > budget {
                    self.kill_run(r);
                }
            }
        }

        let mut revived = false;
        let mut reset = false;
        if self.alive_count() == 0 {
            log::warn!("all {} runs exceeded the query budget at z = {}; rebuilding", self.runs.len(), self.z);
            self.all_runs_dead += 1;
            self.generation += 1;
            self.rebuild_all();
            revived = true;
        } else if self.since_reset >= self.cfg.reset_period_for(self.n()) {
            self.resets += 1;
            self.generation += 1;
            self.rebuild_all();
            reset = true;
        }

        let survivor = self.survivor_index().expect("at least one run alive");
        Ok(PoolUpdate {
            z: self.z,
            alive: self.alive_count(),
            survivor,
            max_run_queries,
            budget,
            survivor_report: if revived { None } else { reports[survivor] },
            revived,
            reset,
        })
    }
}

/// Aggregate query figures of a pool, for reporting.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PoolQueries {
    pub survivor_index: Option<usize>,
    pub survivor_total: u64,
    pub max_run_total: u64,
    pub per_run_total: Vec<u64>,
}

impl RunPool {
    pub fn query_summary(&self) -> PoolQueries {
        let per_run_total: Vec<u64> = self.runs.iter().map(RunState::lifetime_queries).collect();
        let survivor_index = self.survivor_index();
        PoolQueries {
            survivor_index,
            survivor_total: survivor_index.map_or(0, |i| per_run_total[i]),
            max_run_total: per_run_total.iter().copied().max().unwrap_or(0),
            per_run_total,
        }
    }
}
