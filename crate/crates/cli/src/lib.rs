//! Stream replay, verification and statistics behind the `dynmis` binary.

use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use dynmis_core::oracle::Violation;
use dynmis_core::runs::PoolQueries;
use dynmis_core::workload::gen_random;
use dynmis_core::{
    audit_levels, ceil_log2, is_maximal_independent, AuditReport, PoolConfig, PoolError, RunPool, Stream, UpdateKind,
    WorkloadError,
};

pub const STATS_SCHEMA: u32 = 1;

/// Replay settings for [`run_stream`].
#[derive(Debug, Clone)]
pub struct RunOptions {
    pub pool: PoolConfig,
    /// Audit the survivor every this many applied updates; 0 disables.
    pub verify_every: u64,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { pool: PoolConfig::default(), verify_every: 100 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationRecord {
    pub every: u64,
    pub checks: u64,
    pub violations: u64,
    /// Update count of the most recent audit.
    pub last_z: Option<u64>,
    pub last: Option<AuditReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StreamStats {
    pub schema: u32,
    pub n: usize,
    pub z: u64,
    /// Ops dropped because they did not fit the current graph.
    pub skipped: u64,
    pub total_queries: PoolQueries,
    pub amortized_queries: f64,
    /// False when `z = 0`; `amortized_queries` is then reported as 0.
    pub amortized_defined: bool,
    pub max_single_update_queries: u64,
    pub rebuild_count: u64,
    pub heavy_promotion_count: u64,
    pub all_runs_dead_count: u64,
    pub reset_count: u64,
    pub runs: usize,
    pub final_mis_size: usize,
    pub verification: VerificationRecord,
    pub wall_time_secs: f64,
}

impl StreamStats {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("stats serialize")
    }

    pub fn summary(&self) -> String {
        let amortized = if self.amortized_defined {
            format!("{:.2}", self.amortized_queries)
        } else {
            "n/a (no updates)".to_string()
        };
        format!(
            "n={} z={} skipped={} runs={}\n\
             survivor queries={} amortized={} max single update={}\n\
             max run queries={} rebuilds={} heavy promotions={} all-runs-dead={} resets={}\n\
             mis size={} checks={} violations={} wall time={:.3}s",
            self.n,
            self.z,
            self.skipped,
            self.runs,
            self.total_queries.survivor_total,
            amortized,
            self.max_single_update_queries,
            self.total_queries.max_run_total,
            self.rebuild_count,
            self.heavy_promotion_count,
            self.all_runs_dead_count,
            self.reset_count,
            self.final_mis_size,
            self.verification.checks,
            self.verification.violations,
            self.wall_time_secs,
        )
    }
}

/// The survivor failed an audit.
#[derive(Debug, Clone)]
pub struct VerificationFailure {
    pub z: u64,
    pub violations: Vec<Violation>,
    pub maximal: bool,
    pub stats: StreamStats,
}

impl std::fmt::Display for VerificationFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "verification failed after update {}", self.z)?;
        if !self.maximal {
            write!(f, ": reported set is not a maximal independent set")?;
        }
        for v in &self.violations {
            write!(f, "\n  {v}")?;
        }
        Ok(())
    }
}

impl std::error::Error for VerificationFailure {}

#[derive(Debug)]
pub enum ReplayError {
    Config(PoolError),
    Workload(WorkloadError),
    Verification(Box<VerificationFailure>),
    Io(std::io::Error),
}

impl std::fmt::Display for ReplayError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ReplayError::Config(e) => write!(f, "{e}"),
            ReplayError::Workload(e) => write!(f, "{e}"),
            ReplayError::Verification(e) => write!(f, "{e}"),
            ReplayError::Io(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for ReplayError {}

impl From<std::io::Error> for ReplayError {
    fn from(e: std::io::Error) -> Self {
        ReplayError::Io(e)
    }
}

/// Optional per-update logs.
#[derive(Default)]
pub struct Sinks<'a> {
    /// Survivor update log: `t kind before after rebuilt`.
    pub events: Option<&'a mut dyn Write>,
    /// Pool log: `z alive survivor max_run_queries budget`.
    pub pool: Option<&'a mut dyn Write>,
}

/// Replays `stream` through a fresh pool on the empty graph.
pub fn run_stream(stream: &Stream, opts: &RunOptions, mut sinks: Sinks<'_>) -> Result<StreamStats, ReplayError> {
    let start = Instant::now();
    let mut pool = RunPool::new(stream.n, std::iter::empty(), opts.pool.clone()).map_err(ReplayError::Config)?;
    let mut skipped = 0u64;
    let mut max_single = 0u64;
    let mut rebuilds = 0u64;
    let mut heavy = 0u64;
    let mut record =
        VerificationRecord { every: opts.verify_every, checks: 0, violations: 0, last_z: None, last: None };

    for (i, &op) in stream.ops.iter().enumerate() {
        let upd = match pool.apply_update(op) {
            Ok(u) => u,
            Err(PoolError::Graph(e)) => {
                log::warn!("skipping op {} `{op}`: {e}", i + 1);
                skipped += 1;
                continue;
            }
            Err(e) => return Err(ReplayError::Config(e)),
        };
        if let Some(rep) = upd.survivor_report {
            max_single = max_single.max(rep.queries());
            rebuilds += u64::from(rep.rebuilt_from.is_some());
            heavy += u64::from(rep.kind == UpdateKind::HeavyPromotion);
            if let Some(w) = sinks.events.as_deref_mut() {
                writeln!(w, "{}", rep.log_line(upd.z))?;
            }
        }
        if let Some(w) = sinks.pool.as_deref_mut() {
            writeln!(w, "{}", upd.log_line())?;
        }
        if opts.verify_every > 0 && upd.z % opts.verify_every == 0 {
            record.checks += 1;
            let eng = pool.survivor().map_err(ReplayError::Config)?;
            let audit = audit_levels(eng.graph(), eng.levels());
            let maximal = is_maximal_independent(eng.graph(), &eng.mis());
            let failed = !audit.passed || !maximal;
            record.violations += u64::from(failed);
            record.last_z = Some(upd.z);
            record.last = Some(audit);
            if failed {
                let violations = record.last.as_ref().map(|a| a.violations.clone()).unwrap_or_default();
                let stats = finish(&pool, skipped, max_single, rebuilds, heavy, record, start);
                return Err(ReplayError::Verification(Box::new(VerificationFailure {
                    z: upd.z,
                    violations,
                    maximal,
                    stats,
                })));
            }
        }
    }
    Ok(finish(&pool, skipped, max_single, rebuilds, heavy, record, start))
}

fn finish(
    pool: &RunPool,
    skipped: u64,
    max_single: u64,
    rebuilds: u64,
    heavy: u64,
    verification: VerificationRecord,
    start: Instant,
) -> StreamStats {
    let total_queries = pool.query_summary();
    let z = pool.z();
    let amortized_defined = z > 0;
    let amortized_queries = if amortized_defined { total_queries.survivor_total as f64 / z as f64 } else { 0.0 };
    StreamStats {
        schema: STATS_SCHEMA,
        n: pool.n(),
        z,
        skipped,
        total_queries,
        amortized_queries,
        amortized_defined,
        max_single_update_queries: max_single,
        rebuild_count: rebuilds,
        heavy_promotion_count: heavy,
        all_runs_dead_count: pool.all_runs_dead_count(),
        reset_count: pool.reset_count(),
        runs: pool.runs().len(),
        final_mis_size: pool.survivor().map_or(0, |e| e.levels().mis_size()),
        verification,
        wall_time_secs: start.elapsed().as_secs_f64(),
    }
}

#[derive(Debug, Clone)]
pub struct ScalingOptions {
    pub n_list: Vec<usize>,
    pub ops_per_n: usize,
    pub trials: usize,
    pub p_delete: f64,
    pub seed: u64,
    pub pool: PoolConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingRow {
    pub n: usize,
    pub trials: usize,
    pub mean_amortized: f64,
    pub p95_amortized: f64,
    pub mean_ratio_log3: f64,
}

pub const SCALING_HEADER: &str = "n,trials,mean_amortized,p95_amortized,mean_ratio_log3";

impl ScalingRow {
    pub fn csv(&self) -> String {
        format!(
            "{},{},{:.4},{:.4},{:.6}",
            self.n, self.trials, self.mean_amortized, self.p95_amortized, self.mean_ratio_log3
        )
    }
}

/// Seed of trial `t` at size `n`, derived from the master seed.
pub fn trial_seed(master: u64, n: usize, t: usize) -> u64 {
    let mut x =
        master ^ (n as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ (t as u64).wrapping_mul(0xC2B2_AE3D_27D4_EB4F);
    // splitmix64 finalizer
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Random streams per `n`, replayed without verification. Trials run in parallel.
pub fn scaling(opts: &ScalingOptions) -> Result<Vec<ScalingRow>, ReplayError> {
    let mut rows = Vec::with_capacity(opts.n_list.len());
    for &n in &opts.n_list {
        let amortized: Vec<f64> = (0..opts.trials)
            .into_par_iter()
            .map(|t| {
                let seed = trial_seed(opts.seed, n, t);
                let stream = gen_random(n, opts.ops_per_n, opts.p_delete, seed).map_err(ReplayError::Workload)?;
                let run = RunOptions { pool: PoolConfig { seed, ..opts.pool.clone() }, verify_every: 0 };
                run_stream(&stream, &run, Sinks::default()).map(|s| s.amortized_queries)
            })
            .collect::<Result<_, _>>()?;
        let mean = if amortized.is_empty() { 0.0 } else { amortized.iter().sum::<f64>() / amortized.len() as f64 };
        let log3 = f64::from(ceil_log2(n).max(1)).powi(3);
        rows.push(ScalingRow {
            n,
            trials: opts.trials,
            mean_amortized: mean,
            p95_amortized: percentile(&amortized, 0.95),
            mean_ratio_log3: mean / log3,
        });
    }
    Ok(rows)
}

/// Nearest-rank percentile; 0 for an empty sample.
pub fn percentile(xs: &[f64], q: f64) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let rank = (q * v.len() as f64).ceil() as usize;
    v[rank.clamp(1, v.len()) - 1]
}

pub fn scaling_csv(rows: &[ScalingRow]) -> String {
    let mut out = String::from(SCALING_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&r.csv());
        out.push('\n');
    }
    out
}
