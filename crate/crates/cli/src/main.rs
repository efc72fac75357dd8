use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use chainfix::agents::AgentEndpoint;
use chainfix::harness::report::{render_csv, render_markdown, write_plots};
use chainfix::harness::{
    build_dataset, compute_metrics, export_lp, load_bundles, read_jsonl, run_eval, write_jsonl, CountPlan, DatasetConfig,
    RunOptions, Split,
};
use chainfix::env::EpisodeResult;
use chainfix::lp::{compute_iis, parse_lp, SolveStatus};
use chainfix::{Solver, SolverOptions};

#[derive(Parser)]
#[command(name = "chainfix", version, about = "Supply chain LP repair environment")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Md,
    Csv,
    Plots,
}

#[derive(Subcommand)]
enum Cmd {
    /// Build a verified problem dataset.
    Generate {
        /// TOML with [generator] and [env] tables; defaults when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// K per type, `full`, or ME1=78/27,ME2=10,...
        #[arg(long, default_value = "10")]
        count_per_type: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        parallel: usize,
        /// Skip writing one .lp file per bundle.
        #[arg(long)]
        no_lp: bool,
    },
    /// Re-verify every bundle of a dataset against its stored verdict.
    Validate {
        dataset: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Run an agent over a dataset, appending to (and resuming) a results file.
    Run {
        #[arg(long)]
        dataset: PathBuf,
        /// gt, greedy, proto:CMD or http:URL
        #[arg(long)]
        agent: String,
        #[arg(long, default_value_t = 1)]
        parallel: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        split: Option<String>,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Summarise a results file.
    Report {
        results: PathBuf,
        #[arg(long, value_enum, default_value = "md")]
        format: Format,
        /// Output file (md, csv) or directory (plots).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve an LP file and print its status, or an IIS when infeasible.
    Diagnose { file: PathBuf },
}

/// Exit status for a dataset that fails re-verification.
const VERIFY_FAILED: u8 = 2;

fn load_config(path: Option<&Path>) -> Result<DatasetConfig> {
    let mut cfg = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            DatasetConfig::from_toml(&text)?
        }
        None => DatasetConfig::default(),
    };
    if path.is_none() {
        cfg.env.solver = SolverOptions::from_env();
    }
    Ok(cfg)
}

fn lp_dir(dataset: &Path) -> PathBuf {
    let stem = dataset.file_stem().map_or_else(|| "dataset".into(), |s| s.to_string_lossy().into_owned());
    dataset.with_file_name(format!("{stem}_lp"))
}

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Cmd::Generate {
            config,
            count_per_type,
            seed,
            out,
            parallel,
            no_lp,
        } => {
            let cfg = load_config(config.as_deref())?;
            let plan: CountPlan = count_per_type.parse()?;
            let pool = chainfix::harness::thread_pool(parallel)?;
            let (bundles, stats) = pool.install(|| build_dataset(&cfg, &plan, seed))?;
            write_jsonl(&out, &bundles)?;
            if !no_lp {
                export_lp(&bundles, &lp_dir(&out))?;
            }
            let t = plan.totals();
            eprintln!("wrote {} bundles ({} train, {} test) to {}", bundles.len(), t.train, t.test, out.display());
            for (e, s) in &stats.per_type {
                eprintln!(
                    "  {e}: {} source instances, rejected calibration {} baseline {} inapplicable {} verification {}",
                    s.attempts, s.calibration_failed, s.baseline_irrational, s.inapplicable, s.verification_failed
                );
            }
            Ok(0)
        }
        Cmd::Validate { dataset, config } => {
            let cfg = load_config(config.as_deref())?;
            let bundles = load_bundles(&dataset)?;
            let mut bad = 0;
            for b in &bundles {
                let fresh = b.reverify(&cfg.env)?;
                let stored = &b.verification;
                let same = fresh.status == stored.status
                    && fresh.passed == stored.passed
                    && fresh.iis_ok == stored.iis_ok
                    && fresh.iis_valid == stored.iis_valid
                    && fresh.replay_reward == stored.replay_reward;
                if !(same && fresh.passed) {
                    bad += 1;
                    println!("FAIL {}: {}", b.id, fresh.diagnostics.join("; "));
                }
            }
            println!("{} of {} bundles verified", bundles.len() - bad, bundles.len());
            Ok(if bad == 0 { 0 } else { VERIFY_FAILED })
        }
        Cmd::Run {
            dataset,
            agent,
            parallel,
            out,
            split,
            config,
        } => {
            let cfg = load_config(config.as_deref())?;
            let split = match split.as_deref() {
                None => None,
                Some("train") => Some(Split::Train),
                Some("test") => Some(Split::Test),
                Some(s) => bail!("unknown split `{s}` (expected train or test)"),
            };
            let opts = RunOptions {
                agent: agent.parse::<AgentEndpoint>()?,
                env: cfg.env,
                parallel,
                split,
            };
            let bundles = load_bundles(&dataset)?;
            let summary = run_eval(&bundles, &opts, &out)?;
            eprintln!(
                "{} selected, {} already done, {} run ({} ended on errors)",
                summary.selected, summary.already_done, summary.completed, summary.errored
            );
            let results: Vec<EpisodeResult> = read_jsonl(&out)?;
            let m = compute_metrics(&results);
            println!(
                "RR {:.3}  RRR {:.3}  mean steps {:.2}  episodes {}",
                m.overall.rr.value, m.overall.rrr.value, m.overall.mean_steps, m.overall.episodes
            );
            Ok(0)
        }
        Cmd::Report { results, format, out } => {
            let rs: Vec<EpisodeResult> = read_jsonl(&results)?;
            let m = compute_metrics(&rs);
            let text = match format {
                Format::Md => render_markdown(&m),
                Format::Csv => render_csv(&m),
                Format::Plots => {
                    let dir = out.unwrap_or_else(|| PathBuf::from("plots"));
                    for p in write_plots(&m, &dir)? {
                        println!("{}", p.display());
                    }
                    return Ok(0);
                }
            };
            match out {
                Some(p) => std::fs::write(&p, text).with_context(|| format!("writing {}", p.display()))?,
                None => print!("{text}"),
            }
            Ok(0)
        }
        Cmd::Diagnose { file } => {
            let text = std::fs::read_to_string(&file).with_context(|| format!("reading {}", file.display()))?;
            let model = parse_lp::<f64>(&text)?;
            let opts = SolverOptions::from_env();
            let out = Solver::new(opts).solve(&model)?;
            println!("status: {}", out.status.label());
            match out.status {
                SolveStatus::Optimal => println!("objective: {}", out.objective.unwrap_or_default()),
                SolveStatus::Infeasible => {
                    let iis = compute_iis(&model, &opts)?;
                    println!("IIS ({} members):", iis.len());
                    for c in &iis.constraint_members {
                        println!("  {c}");
                    }
                    for b in &iis.bound_members {
                        println!("  {b}");
                    }
                }
                SolveStatus::Unbounded => {}
            }
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
