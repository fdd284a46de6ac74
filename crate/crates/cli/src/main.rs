use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use rlcqe::dqn::Checkpoint;
use rlcqe::fockspace::{build_hamiltonian, enumerate_sector, exact_ground_state};
use rlcqe::harness::{
    ansatz_text, emit_artifacts, emit_baseline_report, emit_budget_report, emit_crossval_report, evaluate_checkpoint,
    run_baseline_comparison, run_budget_study, run_crossval, run_training_with_progress, tail_stats, write_eval_csv,
    EvalRow, ExperimentConfig,
};
use rlcqe::integrals::read_fcidump;

#[derive(Parser)]
#[command(name = "rlcqe", version, about = "RL-compacted contracted quantum eigensolver experiments")]
struct Cli {
    /// Experiment configuration (TOML, or JSON by extension). Defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Overrides the master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Overrides the output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Overrides the training episode count.
    #[arg(long, global = true)]
    episodes: Option<usize>,

    /// Suppresses progress lines on stderr.
    #[arg(long, short, global = true)]
    quiet: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train an agent and evaluate it greedily on every configured geometry.
    Train,
    /// One training run per action budget on shared seeds.
    BudgetStudy {
        /// Comma-separated budgets; defaults to `budgets` from the config.
        #[arg(long, value_delimiter = ',')]
        budgets: Option<Vec<usize>>,
    },
    /// RL greedy readout against the filtered eigensolver at matching action counts.
    CompareBaseline,
    /// k-fold cross-validation over a geometry grid.
    Crossval,
    /// Greedy evaluation of a saved checkpoint.
    Eval {
        /// Checkpoint written by `train`.
        #[arg(long)]
        checkpoint: PathBuf,
    },
    /// Summarize an FCIDUMP file and solve it exactly.
    FcidumpInfo { path: PathBuf },
    /// Print the effective configuration as TOML.
    ShowConfig,
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path).with_context(|| format!("loading {}", path.display()))?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.output = out.clone();
    }
    if let Some(n) = cli.episodes {
        cfg.episodes = n;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn print_eval(rows: &[EvalRow]) {
    println!("{:<16} {:>16} {:>16} {:>10} {:>10} {:>8}", "geometry", "E_RL", "E_exact", "dE_mHa", "|R|", "actions");
    for r in rows {
        println!(
            "{:<16} {:>16.10} {:>16.10} {:>10.4} {:>10.3e} {:>8}",
            r.geometry, r.e_rl, r.e_exact, r.de_mha, r.residual_norm, r.n_actions
        );
    }
}

fn train(cli: &Cli, cfg: &ExperimentConfig) -> Result<()> {
    let every = (cfg.episodes / 20).max(1) as u64;
    let quiet = cli.quiet;
    let report = run_training_with_progress(cfg, &mut |r| {
        if !quiet && (r.episode + 1) % every == 0 {
            eprintln!(
                "episode {:>7}  energy {:>14.8}  |R| {:>10.3e}  avg reward {:>12.6}",
                r.episode + 1,
                r.energy,
                r.residual_norm,
                r.avg_reward
            );
        }
    })?;
    emit_artifacts(&report, &cfg.output)?;
    let tail = |f: fn(&rlcqe::harness::EpisodeRecord) -> f64| {
        tail_stats(&report.series.iter().map(f).collect::<Vec<_>>(), cfg.tail_fraction)
    };
    if let (Some(e), Some(r), Some(w)) = (tail(|r| r.energy), tail(|r| r.residual_norm), tail(|r| r.avg_reward)) {
        println!(
            "tail over {} episodes: energy {:.8} |R| {:.4e} avg reward {:.6} (sd {:.2e})",
            report.series.len(),
            e.0,
            r.0,
            w.0,
            w.1
        );
    }
    print_eval(&report.eval);
    println!("artifacts in {}", cfg.output.display());
    Ok(())
}

fn fcidump_info(path: &Path) -> Result<()> {
    let dump = read_fcidump(path)?;
    let ints = &dump.integrals;
    println!("orbitals      {}", ints.n_spatial);
    println!("electrons     {} (alpha {}, beta {})", dump.n_electrons, dump.n_alpha(), dump.n_beta());
    println!("core energy   {}", ints.e_nuc);
    let basis = enumerate_sector(ints.n_spatial, dump.n_alpha(), dump.n_beta())?;
    println!("sector dim    {}", basis.dim());
    let (e0, _) = exact_ground_state(&build_hamiltonian(ints, &basis)?)?;
    println!("E_exact       {e0:.12}");
    Ok(())
}

fn run(cli: &Cli) -> Result<()> {
    if let Command::FcidumpInfo { path } = &cli.command {
        return fcidump_info(path);
    }
    let cfg = load_config(cli)?;
    match &cli.command {
        Command::Train => train(cli, &cfg)?,
        Command::BudgetStudy { budgets } => {
            let budgets = budgets.clone().unwrap_or_else(|| cfg.budgets.clone());
            let report = run_budget_study(&cfg, &budgets)?;
            emit_budget_report(&report, &cfg.output)?;
            println!("{:>8} {:>10} {:>14} {:>12}", "budget", "episodes", "tail reward", "tail sd");
            for a in &report.arms {
                println!(
                    "{:>8} {:>10} {:>14.6} {:>12.3e}",
                    a.budget,
                    a.report.series.len(),
                    a.tail_reward,
                    a.tail_reward_std
                );
            }
        }
        Command::CompareBaseline => {
            let report = run_baseline_comparison(&cfg)?;
            emit_baseline_report(&report, &cfg.output)?;
            println!("{:<16} {:>8} {:>12} {:>16}", "geometry", "actions", "RL dE_mHa", "filtered dE_mHa");
            for r in &report.rows {
                println!("{:<16} {:>8} {:>12.4} {:>16.4}", r.geometry, r.n_actions, r.rl_de_mha, r.filtered_de_mha);
            }
        }
        Command::Crossval => {
            let report = run_crossval(&cfg)?;
            emit_crossval_report(&report, &cfg.output)?;
            println!("{:>5} {:>8} {:>8} {:>14} {:>16}", "fold", "train", "valid", "train dE_mHa", "valid dE_mHa");
            for f in &report.folds {
                println!(
                    "{:>5} {:>8} {:>8} {:>14.4} {:>16.4}",
                    f.fold,
                    f.train.len(),
                    f.validation.len(),
                    f.train_mean_mha,
                    f.validation_mean_mha
                );
            }
        }
        Command::Eval { checkpoint } => {
            let ck = Checkpoint::load(checkpoint)?;
            let rows = evaluate_checkpoint(&cfg, &ck)?;
            std::fs::create_dir_all(&cfg.output).with_context(|| format!("creating {}", cfg.output.display()))?;
            write_eval_csv(&cfg.output.join("eval.csv"), &rows)?;
            std::fs::write(
                cfg.output.join("ansatz.txt"),
                ansatz_text(rows.iter().map(|r| (r.geometry.as_str(), &r.ansatz))),
            )?;
            print_eval(&rows);
        }
        Command::ShowConfig => print!("{}", cfg.to_toml_string()?),
        Command::FcidumpInfo { .. } => unreachable!(),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
