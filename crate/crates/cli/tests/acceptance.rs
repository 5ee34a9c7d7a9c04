//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::collections::{BTreeSet, HashSet};
use std::process::{Command, ExitCode};
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use dynmis_cli::{run_stream, scaling, RunOptions, ScalingOptions, Sinks};
use dynmis_core::offline::{build_rejection, build_subset, sample_subset, subset_probability, BuildConfig};
use dynmis_core::workload::{gen_random, serialize_stream};
use dynmis_core::{classify_insertion, DynamicGraph, Edge, InsertionKind, LevelSet, PoolConfig, VertexId};

const C: f64 = 34.0;

type Check<'a> = Box<dyn Fn() -> Outcome + 'a>;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn random_edges(n: usize, m: usize, rng: &mut ChaCha8Rng) -> Vec<(u32, u32)> {
    let mut set = BTreeSet::new();
    while set.len() < m {
        let u = rng.gen_range(1..=n as u32);
        let v = rng.gen_range(1..=n as u32);
        if u != v {
            set.insert((u.min(v), u.max(v)));
        }
    }
    set.into_iter().collect()
}

fn graph(n: usize, edges: &[(u32, u32)]) -> DynamicGraph {
    DynamicGraph::from_edges(n, edges.iter().map(|&(u, v)| Edge::from_raw(u, v).unwrap())).unwrap()
}

/// Plain adjacency lists rebuilt from an edge list.
fn adjacency(n: usize, edges: &[(u32, u32)]) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); n + 1];
    for &(u, v) in edges {
        adj[u as usize].push(v as usize);
        adj[v as usize].push(u as usize);
    }
    adj
}

fn is_mis(adj: &[Vec<usize>], set: &[VertexId]) -> bool {
    let mut member = vec![false; adj.len()];
    for v in set {
        member[v.0 as usize] = true;
    }
    (1..adj.len()).all(|v| {
        let covered = adj[v].iter().any(|&w| member[w]);
        if member[v] {
            !covered
        } else {
            covered
        }
    })
}

// 1. Per-step correctness through the CLI replay path.
fn per_step_correctness() -> Outcome {
    let mut checks = 0;
    for &n in &[32usize, 128, 512] {
        for seed in 0..10u64 {
            let stream = gen_random(n, 2000, 0.3, seed).unwrap();
            let opts = RunOptions { pool: PoolConfig { seed, ..Default::default() }, verify_every: 1 };
            match run_stream(&stream, &opts, Sinks::default()) {
                Ok(s) => {
                    if s.verification.checks != s.z || s.verification.violations != 0 {
                        return outcome(false, format!("n={n} seed={seed}: {:?}", s.verification));
                    }
                    checks += s.verification.checks;
                }
                Err(e) => return outcome(false, format!("n={n} seed={seed}: {e}")),
            }
        }
    }
    outcome(true, format!("{checks} audited updates, 0 violations"))
}

// 2. Both offline builders on sparse through dense graphs.
fn offline_validity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut failures = 0;
    for t in 0..200u64 {
        let n = rng.gen_range(8..=256usize);
        let lo = (n / 2).max(1);
        let hi = (n * n / 4).min(n * (n - 1) / 2);
        // Log-uniform density between m = n/2 and m = n^2/4.
        let m = ((lo as f64).ln() + rng.gen::<f64>() * ((hi as f64).ln() - (lo as f64).ln())).exp().round() as usize;
        let edges = random_edges(n, m.clamp(lo, hi), &mut rng);
        let g = graph(n, &edges);
        let adj = adjacency(n, &edges);
        let cfg = BuildConfig::with_seed(t);
        let a = build_rejection(&g, &cfg, &mut cfg.rng());
        let b = build_subset(&g, &cfg, &mut cfg.rng());
        for ls in [&a, &b] {
            if !is_mis(&adj, &ls.mis()) || !dynmis_core::audit_levels(&g, ls).passed {
                failures += 1;
            }
        }
    }
    outcome(failures == 0, format!("400 builds on 200 graphs, {failures} failures"))
}

struct SubsetTrial {
    event: bool,
    independent_ok: bool,
}

fn subset_trials() -> Vec<SubsetTrial> {
    let (n, m) = (512usize, 4096usize);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let edges = random_edges(n, m, &mut rng);
    let adj = adjacency(n, &edges);
    let vertices: Vec<VertexId> = (1..=n as u32).map(VertexId).collect();
    let p = subset_probability(n, m);
    (0..400)
        .map(|_| {
            let mut s = sample_subset(&vertices, p, &mut rng);
            s.shuffle(&mut rng);
            let mut member = vec![false; n + 1];
            for v in &s {
                member[v.0 as usize] = true;
            }
            let induced = edges.iter().filter(|&&(u, v)| member[u as usize] && member[v as usize]).count();
            // Greedy in sample order, adjacency restricted to the sample.
            let mut chosen = vec![false; n + 1];
            let mut size = 0;
            for v in &s {
                let v = v.0 as usize;
                if !adj[v].iter().any(|&w| chosen[w]) {
                    chosen[v] = true;
                    size += 1;
                }
            }
            let event = s.len() as f64 >= (n * n) as f64 / (4 * m) as f64 && induced <= 16 * s.len();
            SubsetTrial { event, independent_ok: size as f64 >= s.len() as f64 / 34.0 }
        })
        .collect()
}

// 3. Sample size and sparsity of the subset sampler.
fn sample_size_event(trials: &[SubsetTrial]) -> Outcome {
    let hits = trials.iter().filter(|t| t.event).count();
    let freq = hits as f64 / trials.len() as f64;
    outcome(freq >= 0.40, format!("joint event in {hits}/{} trials (freq {freq:.3}, need >= 0.40)", trials.len()))
}

// 4. Greedy on the sample keeps at least |S|/34 vertices.
fn sample_independent_size(trials: &[SubsetTrial]) -> Outcome {
    let cond: Vec<&SubsetTrial> = trials.iter().filter(|t| t.event).collect();
    let ok = cond.iter().filter(|t| t.independent_ok).count();
    outcome(!cond.is_empty() && ok == cond.len(), format!("|I| >= |S|/34 in {ok}/{} conditioned trials", cond.len()))
}

// 5. First-level neighborhood size.
fn first_level_neighborhood() -> Outcome {
    let (n, m) = (512usize, 2048usize);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let edges = random_edges(n, m, &mut rng);
    let g = graph(n, &edges);
    let adj = adjacency(n, &edges);
    let mut hits = 0;
    for t in 0..400u64 {
        let cfg = BuildConfig::with_seed(t);
        let ls = build_rejection(&g, &cfg, &mut cfg.rng());
        // N(I_1) recomputed from adjacency: vertices outside I_1 with a neighbor in it.
        let i1: HashSet<usize> = ls.level(1).independent().iter().map(|v| v.0 as usize).collect();
        let n_i1 = (1..=n).filter(|v| !i1.contains(v) && adj[*v].iter().any(|w| i1.contains(w))).count();
        if n_i1 != ls.level(1).dominated().len() {
            return outcome(
                false,
                format!("trial {t}: level 1 holds {} dominated, oracle {n_i1}", ls.level(1).dominated().len()),
            );
        }
        if n_i1 as f64 >= n as f64 / 900.0 {
            hits += 1;
        }
    }
    let freq = hits as f64 / 400.0;
    outcome(freq >= 0.55, format!("|N(I_1)| >= n/900 in {hits}/400 builds (freq {freq:.3}, need >= 0.55)"))
}

// 6. Residual degrees after the first level.
fn residual_degree_bound() -> Outcome {
    let (n, m) = (512usize, 8192usize);
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let edges = random_edges(n, m, &mut rng);
    let g = graph(n, &edges);
    let adj = adjacency(n, &edges);
    let bound = 3.0 * C * (n as f64).log2() * m as f64 / n as f64;
    let mut bad = 0;
    let mut worst = 0;
    for t in 0..100u64 {
        let cfg = BuildConfig::with_seed(t);
        let ls = build_rejection(&g, &cfg, &mut cfg.rng());
        let deep = |v: usize| ls.level_of(VertexId(v as u32)).unwrap() >= 2;
        let max_deg =
            (1..=n).filter(|&v| deep(v)).map(|v| adj[v].iter().filter(|&&w| deep(w)).count()).max().unwrap_or(0);
        worst = worst.max(max_deg);
        if max_deg as f64 > bound {
            bad += 1;
        }
    }
    let frac = bad as f64 / 100.0;
    outcome(frac <= 0.05, format!("{bad}/100 builds exceed {bound:.0} (max residual degree seen {worst})"))
}

// 7. Heavy-promotion rarity under random insertions.
fn heavy_promotion_rarity() -> Outcome {
    let (n, m) = (512usize, 8192usize);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let edges = random_edges(n, m, &mut rng);
    let g = graph(n, &edges);
    let cfg = BuildConfig::with_seed(7);
    let ls: LevelSet = build_rejection(&g, &cfg, &mut cfg.rng());
    let present: HashSet<(u32, u32)> = edges.iter().copied().collect();
    let mut heavy = 0;
    let mut drawn = 0;
    while drawn < 10_000 {
        let u = rng.gen_range(1..=n as u32);
        let v = rng.gen_range(1..=n as u32);
        if u == v || present.contains(&(u.min(v), u.max(v))) {
            continue;
        }
        drawn += 1;
        if matches!(classify_insertion(&ls, Edge::from_raw(u, v).unwrap()).kind, InsertionKind::HeavyPromotion { .. }) {
            heavy += 1;
        }
    }
    // Levels without edges would make the sum infinite; leaving them out only tightens it.
    let inv: Vec<f64> = ls.levels().iter().filter(|l| l.m() > 0).map(|l| l.n() as f64 / l.m() as f64).collect();
    let s: f64 = inv.iter().sum();
    let envelope = 10.0 * 2.0 / (C * C) * s * s;
    let frac = heavy as f64 / 10_000.0;
    outcome(frac <= envelope, format!("heavy fraction {frac:.4} vs envelope {envelope:.4} ({} levels)", ls.k()))
}

// 8. The pool keeps a survivor under default budgets.
fn budget_survival() -> Outcome {
    let mut clean = 0;
    let mut dead_total = 0;
    for t in 0..20u64 {
        let stream = gen_random(256, 5000, 0.3, 800 + t).unwrap();
        let opts = RunOptions { pool: PoolConfig { seed: t, ..Default::default() }, verify_every: 0 };
        let s = run_stream(&stream, &opts, Sinks::default()).expect("replay");
        dead_total += s.all_runs_dead_count;
        if s.all_runs_dead_count == 0 {
            clean += 1;
        }
    }
    outcome(clean >= 18, format!("{clean}/20 trials never lost every run ({dead_total} all-dead events overall)"))
}

// 9. Scaling envelope of amortized survivor queries against ceil(log2 n)^3.
fn scaling_envelope() -> Outcome {
    let opts = ScalingOptions {
        n_list: vec![256, 1024, 4096],
        ops_per_n: 20_000,
        trials: 5,
        p_delete: 0.3,
        seed: 9,
        pool: PoolConfig::default(),
    };
    let rows = scaling(&opts).expect("scaling");
    let ratios: Vec<f64> = rows.iter().map(|r| r.mean_ratio_log3).collect();
    let hi = ratios.iter().cloned().fold(f64::MIN, f64::max);
    let lo = ratios.iter().cloned().fold(f64::MAX, f64::min);
    let spread = hi / lo;
    let table: Vec<String> = rows
        .iter()
        .map(|r| format!("n={} amortized={:.2} ratio={:.5}", r.n, r.mean_amortized, r.mean_ratio_log3))
        .collect();
    outcome(spread < 8.0, format!("spread {spread:.2}x (need < 8x): {}", table.join("; ")))
}

fn strip_wall_time(json: &str) -> String {
    let mut v: serde_json::Value = serde_json::from_str(json).unwrap();
    v.as_object_mut().unwrap().remove("wall_time_secs");
    v.to_string()
}

// 10. Same master seed, same stats, through the binary.
fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let bin = env!("CARGO_BIN_EXE_dynmis");
    let stream_path = dir.path().join("s.txt");
    let stream = gen_random(256, 3000, 0.3, 10).unwrap();
    std::fs::write(&stream_path, serialize_stream(&stream)).unwrap();
    let mut outputs = Vec::new();
    for i in 0..2 {
        let stats = dir.path().join(format!("stats{i}.json"));
        let st = Command::new(bin)
            .args(["run", "--verify-every", "50", "--stream"])
            .arg(&stream_path)
            .arg("--stats")
            .arg(&stats)
            .env("DYNMIS_SEED", "10")
            .output()
            .unwrap();
        if !st.status.success() {
            return outcome(false, format!("run {i} exited with {}", st.status));
        }
        outputs.push(strip_wall_time(&std::fs::read_to_string(&stats).unwrap()));
    }
    let csv = |_: u8| {
        Command::new(bin)
            .args(["scaling", "--n-list", "64,128", "--ops-per-n", "1500", "--trials", "3", "--seed", "10"])
            .output()
            .unwrap()
            .stdout
    };
    let same_csv = csv(0) == csv(1);
    outcome(
        outputs[0] == outputs[1] && same_csv,
        format!("stats identical: {}, scaling csv identical: {same_csv}", outputs[0] == outputs[1]),
    )
}

fn main() -> ExitCode {
    let start = Instant::now();
    let subset = subset_trials();
    let criteria: Vec<(&str, Check)> = vec![
        ("per-step correctness", Box::new(per_step_correctness)),
        ("offline builder validity", Box::new(offline_validity)),
        ("subset sample size", Box::new(|| sample_size_event(&subset))),
        ("subset independent set size", Box::new(|| sample_independent_size(&subset))),
        ("first-level neighborhood", Box::new(first_level_neighborhood)),
        ("residual degree bound", Box::new(residual_degree_bound)),
        ("heavy-promotion rarity", Box::new(heavy_promotion_rarity)),
        ("budget survival", Box::new(budget_survival)),
        ("scaling envelope", Box::new(scaling_envelope)),
        ("determinism", Box::new(determinism)),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let o = check();
        failed += usize::from(!o.pass);
        println!(
            "{} criterion {:>2} {name}: {} [{:.1}s]",
            if o.pass { "PASS" } else { "FAIL" },
            i + 1,
            o.detail,
            t.elapsed().as_secs_f64()
        );
    }
    println!(
        "acceptance: {} passed, {failed} failed in {:.1}s",
        criteria.len() - failed,
        start.elapsed().as_secs_f64()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
