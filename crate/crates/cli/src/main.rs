use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};

use dynmis_cli::{run_stream, scaling, scaling_csv, ReplayError, RunOptions, ScalingOptions, Sinks};
use dynmis_core::workload::{
    gen_densify, gen_random, gen_sliding_window, parse_stream, serialize_stream, validate_stream,
};
use dynmis_core::PoolConfig;

#[derive(Parser)]
#[command(name = "dynmis", version, about = "Fully dynamic maximal independent set harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Model {
    Random,
    Window,
    Densify,
}

#[derive(clap::Args)]
struct PoolArgs {
    #[arg(long, default_value_t = 34.0)]
    c: f64,
    #[arg(long, default_value_t = 0.1)]
    delta: f64,
    /// Number of runs; defaults to ceil(4 log2(n / delta)).
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u32).range(2..=3))]
    budget_exponent: u32,
    /// Updates between full rebuilds; defaults to n^2.
    #[arg(long)]
    reset_period: Option<u64>,
    #[arg(long)]
    parallel_runs: bool,
}

impl PoolArgs {
    fn config(&self, seed: u64) -> PoolConfig {
        PoolConfig {
            delta: self.delta,
            c: self.c,
            y_override: self.runs,
            reset_period: self.reset_period,
            budget_exponent: self.budget_exponent,
            seed,
            level_cap: None,
            parallel: self.parallel_runs,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate an update stream.
    Gen {
        #[arg(long, value_enum, default_value_t = Model::Random)]
        model: Model,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        ops: usize,
        #[arg(long, default_value_t = 0.3)]
        p_delete: f64,
        #[arg(long, default_value_t = 64)]
        window: usize,
        /// Edge count the densify model oscillates up to.
        #[arg(long)]
        target_edges: Option<usize>,
        #[arg(long, env = "DYNMIS_SEED", default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Replay a stream through the run pool.
    Run {
        #[arg(long)]
        stream: PathBuf,
        #[arg(long, env = "DYNMIS_SEED", default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        pool: PoolArgs,
        /// Audit the survivor every K updates; 0 never.
        #[arg(long, default_value_t = 100)]
        verify_every: u64,
        #[arg(long)]
        event_log: Option<PathBuf>,
        #[arg(long)]
        pool_log: Option<PathBuf>,
        #[arg(long)]
        stats: Option<PathBuf>,
    },
    /// Amortized query cost against n, as CSV.
    Scaling {
        #[arg(long, value_delimiter = ',', default_value = "256,1024,4096")]
        n_list: Vec<usize>,
        #[arg(long, default_value_t = 20_000)]
        ops_per_n: usize,
        #[arg(long, default_value_t = 5)]
        trials: usize,
        #[arg(long, default_value_t = 0.3)]
        p_delete: f64,
        #[arg(long, env = "DYNMIS_SEED", default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        pool: PoolArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Parse a stream file and check every op is feasible.
    Verify { stream: PathBuf },
}

/// Errors that exit with status 2.
#[derive(Debug)]
struct BadInput(anyhow::Error);

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {:#}", e.0);
            ExitCode::from(2)
        }
    }
}

fn bad<E: Into<anyhow::Error>>(e: E) -> BadInput {
    BadInput(e.into())
}

fn write_out(out: Option<&PathBuf>, text: &str) -> Result<(), BadInput> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())).map_err(bad),
        None => io::stdout().write_all(text.as_bytes()).map_err(bad),
    }
}

fn create(p: &PathBuf) -> Result<BufWriter<fs::File>, BadInput> {
    fs::File::create(p).map(BufWriter::new).with_context(|| format!("creating {}", p.display())).map_err(bad)
}

fn dispatch(cmd: Command) -> Result<ExitCode, BadInput> {
    match cmd {
        Command::Gen { model, n, ops, p_delete, window, target_edges, seed, out } => {
            let stream = match model {
                Model::Random => gen_random(n, ops, p_delete, seed),
                Model::Window => gen_sliding_window(n, ops, window, seed),
                Model::Densify => {
                    let target = target_edges.unwrap_or(n.saturating_mul(n.saturating_sub(1)) / 4);
                    gen_densify(n, ops, target, seed)
                }
            }
            .map_err(bad)?;
            write_out(out.as_ref(), &serialize_stream(&stream))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Run { stream, seed, pool, verify_every, event_log, pool_log, stats } => {
            let text =
                fs::read_to_string(&stream).with_context(|| format!("reading {}", stream.display())).map_err(bad)?;
            let parsed = parse_stream(&text).map_err(bad)?;
            let opts = RunOptions { pool: pool.config(seed), verify_every };
            let mut events = event_log.as_ref().map(create).transpose()?;
            let mut plog = pool_log.as_ref().map(create).transpose()?;
            let sinks = Sinks {
                events: events.as_mut().map(|w| w as &mut dyn Write),
                pool: plog.as_mut().map(|w| w as &mut dyn Write),
            };
            let result = run_stream(&parsed, &opts, sinks);
            for w in events.iter_mut().chain(plog.iter_mut()) {
                w.flush().map_err(bad)?;
            }
            match result {
                Ok(s) => {
                    if let Some(p) = &stats {
                        fs::write(p, s.to_json() + "\n")
                            .with_context(|| format!("writing {}", p.display()))
                            .map_err(bad)?;
                    }
                    println!("{}", s.summary());
                    Ok(ExitCode::SUCCESS)
                }
                Err(ReplayError::Verification(f)) => {
                    if let Some(p) = &stats {
                        let _ = fs::write(p, f.stats.to_json() + "\n");
                    }
                    eprintln!("{f}");
                    Ok(ExitCode::from(1))
                }
                Err(e) => Err(bad(e)),
            }
        }
        Command::Scaling { n_list, ops_per_n, trials, p_delete, seed, pool, out } => {
            if n_list.is_empty() || n_list.contains(&0) {
                return Err(bad(anyhow::anyhow!("--n-list needs positive sizes")));
            }
            let opts = ScalingOptions { n_list, ops_per_n, trials, p_delete, seed, pool: pool.config(seed) };
            let rows = scaling(&opts).map_err(bad)?;
            write_out(out.as_ref(), &scaling_csv(&rows))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify { stream } => {
            let text =
                fs::read_to_string(&stream).with_context(|| format!("reading {}", stream.display())).map_err(bad)?;
            let parsed = parse_stream(&text).map_err(bad)?;
            validate_stream(&parsed).map_err(bad)?;
            println!("ok: n={} ops={}", parsed.n, parsed.ops.len());
            Ok(ExitCode::SUCCESS)
        }
    }
}
