use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use ltlmod_core::curriculum::{Scenario, ScenarioName};
use ltlmod_core::harness::{self, FuzzConfig, RunConfig};
use ltlmod_core::ltl::Closure;
use ltlmod_core::par::Execution;
use ltlmod_core::rng::{derive_seed, tag};

#[derive(Parser)]
#[command(name = "ltlmod", version, about = "Train and evaluate spec-conditioned LTL instruction-following policies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one seed and write metrics, checkpoints and the final evaluation to DIR.
    Train {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate a checkpoint and print a per-task CSV table.
    Eval {
        #[arg(long)]
        ckpt: PathBuf,
        #[arg(long, default_value_t = 50)]
        episodes: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Highest task level to include (default: all levels).
        #[arg(long)]
        level: Option<usize>,
    },
    /// Compare iterated progression with the trace oracle on random cases.
    FuzzProgression {
        #[arg(long)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 4)]
        max_depth: usize,
        #[arg(long, default_value_t = 6)]
        max_symbols: usize,
        #[arg(long)]
        sequential: bool,
    },
    /// Print the tasks of one curriculum level, one per line.
    EnumerateTasks {
        #[arg(long)]
        scenario: String,
        #[arg(long)]
        level: usize,
    },
    /// Print the progression closure of a scenario's full task set.
    Closure {
        #[arg(long)]
        scenario: String,
    },
    /// Roll out a checkpoint and write per-step embeddings as CSV.
    ExportEmbeddings {
        #[arg(long)]
        ckpt: PathBuf,
        #[arg(long)]
        episodes: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output file (default: stdout).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn emit(out: Option<&PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            std::io::stdout().lock().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Train { config, seed, out } => {
            let cfg = RunConfig::load(&config).with_context(|| format!("loading {}", config.display()))?;
            let result = harness::train(&cfg, seed, Some(&out))?;
            let mean = result.final_eval.as_ref().map(|t| t.mean_success);
            println!(
                "{}: {} steps, level {}, final mean success {}",
                result.run_id,
                result.steps,
                result.level,
                mean.map_or("n/a".into(), |m| format!("{m:.3}"))
            );
        }
        Command::Eval { ckpt, episodes, seed, level } => {
            let loaded = harness::load_agent(&ckpt)?;
            let tasks = loaded.setup.tasks_up_to(level.unwrap_or(loaded.setup.scenario.max_level));
            let table = harness::evaluate_agent(
                &loaded.agent,
                &loaded.setup.mdp,
                &tasks,
                episodes,
                derive_seed(seed, &[tag::FINAL_EVAL]),
                loaded.config.eval_deterministic,
                loaded.config.execution,
            )?;
            print!("{}", table.to_csv()?);
            eprintln!("mean success {:.4}, mean length {:.1}", table.mean_success, table.mean_length);
        }
        Command::FuzzProgression { count, seed, max_depth, max_symbols, sequential } => {
            let cfg = FuzzConfig { max_depth, max_symbols, ..FuzzConfig::new(count, seed) };
            let exec = if sequential { Execution::Sequential } else { Execution::default() };
            let report = harness::fuzz_progression(&cfg, exec);
            println!("{}", serde_json::to_string_pretty(&report)?);
            if !report.mismatches.is_empty() {
                eprintln!("{} mismatches", report.mismatches.len());
                return Ok(ExitCode::FAILURE);
            }
        }
        Command::EnumerateTasks { scenario, level } => {
            let s = Scenario::builtin(scenario.parse::<ScenarioName>()?);
            let mut out = String::new();
            for task in s.enumerate_tasks(level)? {
                out.push_str(&format!("{level}\t{}\n", task.display(&s.symbols)));
            }
            emit(None, &out)?;
        }
        Command::Closure { scenario } => {
            let s = Scenario::builtin(scenario.parse::<ScenarioName>()?);
            let closure = Closure::build(&s.all_levels().concat(), ltlmod_core::ltl::DEFAULT_CLOSURE_CAP)?;
            emit(None, &closure.export(&s.symbols))?;
        }
        Command::ExportEmbeddings { ckpt, episodes, seed, out } => {
            let loaded = harness::load_agent(&ckpt)?;
            if episodes == 0 {
                bail!("--episodes must be positive");
            }
            let tasks = loaded.setup.tasks_up_to(loaded.manifest.level);
            let csv = harness::export_embeddings(&loaded.agent, &loaded.setup.mdp, &tasks, episodes, seed)?;
            emit(out.as_ref(), &csv)?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
