use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, GeometrySpec, SeedStream};
use super::grid::GeometryGrid;
use crate::cse::{run_cqe, AnsatzRecord, AnsatzStep, GeneratorPool};
use crate::dqn::{argmax, Checkpoint, QNetwork, Trainer, Transition};
use crate::fockspace::{enumerate_sector, SectorBasis, StateVector};
use crate::integrals::read_fcidump;
use crate::rlenv::{Env, EnvConfig, InitMode, Problem};
use crate::{Error, Result, MILLIHARTREE};

/// Per-episode training metrics, measured on the state left after the last action.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub episode: u64,
    pub energy: f64,
    pub residual_norm: f64,
    pub avg_reward: f64,
}

/// Greedy readout on one Hamiltonian.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalRow {
    pub geometry: String,
    pub e_rl: f64,
    pub e_exact: f64,
    pub de_mha: f64,
    pub residual_norm: f64,
    pub n_actions: usize,
    pub ansatz: AnsatzRecord,
}

/// Result of one training run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    /// The resolved configuration that produced this report.
    pub config: ExperimentConfig,
    pub series: Vec<EpisodeRecord>,
    pub eval: Vec<EvalRow>,
    pub checkpoint: Checkpoint,
}

/// Sector and Hamiltonians described by a configuration.
#[derive(Debug, Clone)]
pub struct ProblemSet {
    pub basis: SectorBasis,
    pub problems: Vec<Problem>,
}

/// Builds every Hamiltonian of a resolved configuration, in grid order for grids.
pub fn build_problems(cfg: &ExperimentConfig) -> Result<ProblemSet> {
    let m = &cfg.molecule;
    if let Some(path) = &m.fcidump {
        let dump = read_fcidump(path)?;
        let basis = enumerate_sector(dump.integrals.n_spatial, dump.n_alpha(), dump.n_beta())?;
        let label = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        let problem = Problem::from_integrals(label, &dump.integrals, &basis)?;
        return Ok(ProblemSet { basis, problems: vec![problem] });
    }
    let s = m.sector();
    let basis = enumerate_sector(m.atoms, s.n_alpha, s.n_beta)?;
    let geometries: Vec<Vec<f64>> = match &m.geometry {
        GeometrySpec::Fixed { distances } => vec![distances.clone()],
        GeometrySpec::Grid { min, max, step } => {
            GeometryGrid::new(*min, *max, *step)?.entries().iter().map(|&(a, b)| vec![a, b]).collect()
        }
        GeometrySpec::Random { .. } => {
            return Err(Error::config("molecule.geometry", "random geometry must be resolved first"));
        }
    };
    let problems =
        geometries.iter().map(|d| Problem::hydrogen_chain(d, &basis, m.orbitals)).collect::<Result<Vec<_>>>()?;
    Ok(ProblemSet { basis, problems })
}

fn eval_seed(cfg: &ExperimentConfig) -> u64 {
    // fixed random starts must be the ones seen in training
    if cfg.env.init == InitMode::FixedRandomState {
        cfg.env.seed
    } else {
        cfg.seed_for(SeedStream::Evaluation)
    }
}

/// Initial states used for evaluating each problem.
pub fn evaluation_starts(
    basis: &SectorBasis,
    problems: &[Problem],
    env_cfg: &EnvConfig,
    seed: u64,
) -> Result<Vec<StateVector>> {
    let mut env = Env::new(basis.clone(), problems.to_vec(), EnvConfig { seed, ..*env_cfg })?;
    (0..problems.len())
        .map(|i| {
            env.reset_on(i)?;
            Ok(env.episode().expect("just reset").initial_state.clone())
        })
        .collect()
}

/// Follows the argmax of `net` for a full episode from `start`.
pub fn greedy_rollout(net: &QNetwork, env: &mut Env, problem: usize, start: StateVector) -> Result<EvalRow> {
    let mut obs = env.reset_with_state(problem, start)?;
    let ep = env.episode().expect("just reset");
    let mut ansatz = AnsatzRecord::new(ep.energy, ep.residual_norm);
    loop {
        let action = argmax(&net.forward(&obs.features)?);
        let out = env.step(action)?;
        ansatz.steps.push(AnsatzStep {
            generator: *env.pool().generator(action),
            theta: out.log.theta,
            energy: out.log.energy,
            residual_norm: out.log.residual_norm,
        });
        obs = out.observation;
        if out.done {
            break;
        }
    }
    let p = &env.problems()[problem];
    let e_rl = ansatz.final_energy();
    Ok(EvalRow {
        geometry: p.label.clone(),
        e_rl,
        e_exact: p.e_exact,
        de_mha: (e_rl - p.e_exact) * MILLIHARTREE,
        residual_norm: ansatz.final_residual_norm(),
        n_actions: ansatz.len(),
        ansatz,
    })
}

/// Greedy readout with a frozen network on every problem, in order.
pub fn evaluate_greedy(
    net: &QNetwork,
    basis: &SectorBasis,
    problems: &[Problem],
    env_cfg: &EnvConfig,
    seed: u64,
) -> Result<Vec<EvalRow>> {
    let starts = evaluation_starts(basis, problems, env_cfg, seed)?;
    let mut env = Env::new(basis.clone(), problems.to_vec(), EnvConfig { seed, ..*env_cfg })?;
    starts.into_iter().enumerate().map(|(i, s)| greedy_rollout(net, &mut env, i, s)).collect()
}

fn plateaued(series: &[EpisodeRecord], cfg: &ExperimentConfig) -> bool {
    let Some(p) = cfg.plateau else { return false };
    let n = series.len();
    if n < 2 * p.window {
        return false;
    }
    let mean = |s: &[EpisodeRecord]| s.iter().map(|r| r.avg_reward).sum::<f64>() / s.len() as f64;
    (mean(&series[n - p.window..]) - mean(&series[n - 2 * p.window..n - p.window])).abs() < p.tolerance
}

fn train_agent(
    cfg: &ExperimentConfig,
    basis: &SectorBasis,
    problems: Vec<Problem>,
    progress: &mut dyn FnMut(&EpisodeRecord),
) -> Result<(Trainer, Vec<EpisodeRecord>)> {
    let mut env = Env::new(basis.clone(), problems, cfg.env)?;
    let mut trainer =
        Trainer::new(env.observation_dim(), env.n_actions(), cfg.trainer, cfg.seed_for(SeedStream::Network))?;
    let mut series = Vec::with_capacity(cfg.episodes);
    for episode in 0..cfg.episodes as u64 {
        let mut obs = env.reset()?;
        let mut total = 0.0;
        let mut steps = 0usize;
        loop {
            let action = trainer.act(&obs.features)?;
            let out = env.step(action)?;
            total += out.reward;
            steps += 1;
            trainer.observe(Transition {
                observation: std::mem::take(&mut obs.features),
                action,
                reward: out.training_reward,
                next_observation: out.observation.features.clone(),
                done: out.done,
            })?;
            obs = out.observation;
            if out.done {
                break;
            }
        }
        trainer.end_episode()?;
        let ep = env.episode().expect("episode in progress");
        let record = EpisodeRecord {
            episode,
            energy: ep.energy,
            residual_norm: ep.residual_norm,
            avg_reward: total / steps as f64,
        };
        progress(&record);
        series.push(record);
        if plateaued(&series, cfg) {
            break;
        }
    }
    Ok((trainer, series))
}

/// Trains on `train` and evaluates greedily on `eval`.
fn train_and_evaluate(
    cfg: &ExperimentConfig,
    set: &ProblemSet,
    train: &[usize],
    eval: &[usize],
    progress: &mut dyn FnMut(&EpisodeRecord),
) -> Result<(RunReport, Vec<EvalRow>)> {
    let pick = |idx: &[usize]| idx.iter().map(|&i| set.problems[i].clone()).collect::<Vec<_>>();
    let train_problems = pick(train);
    let (trainer, series) = train_agent(cfg, &set.basis, train_problems.clone(), progress)?;
    let seed = eval_seed(cfg);
    let train_rows = evaluate_greedy(&trainer.online, &set.basis, &train_problems, &cfg.env, seed)?;
    let eval_rows = if eval.is_empty() {
        Vec::new()
    } else {
        evaluate_greedy(&trainer.online, &set.basis, &pick(eval), &cfg.env, seed)?
    };
    let report =
        RunReport { config: cfg.clone(), series, eval: train_rows, checkpoint: Checkpoint::from_trainer(&trainer) };
    Ok((report, eval_rows))
}

/// Episode loop on every configured Hamiltonian, then a greedy readout on each.
pub fn run_training(cfg: &ExperimentConfig) -> Result<RunReport> {
    run_training_with_progress(cfg, &mut |_| {})
}

pub fn run_training_with_progress(
    cfg: &ExperimentConfig,
    progress: &mut dyn FnMut(&EpisodeRecord),
) -> Result<RunReport> {
    let cfg = cfg.resolve()?;
    let set = build_problems(&cfg)?;
    let all: Vec<usize> = (0..set.problems.len()).collect();
    Ok(train_and_evaluate(&cfg, &set, &all, &[], progress)?.0)
}

/// Greedy readout of a saved network on the configured Hamiltonians.
pub fn evaluate_checkpoint(cfg: &ExperimentConfig, checkpoint: &Checkpoint) -> Result<Vec<EvalRow>> {
    let cfg = cfg.resolve()?;
    let set = build_problems(&cfg)?;
    evaluate_greedy(&checkpoint.online, &set.basis, &set.problems, &cfg.env, eval_seed(&cfg))
}

/// Mean and population standard deviation of the last `fraction` of `values`.
pub fn tail_stats(values: &[f64], fraction: f64) -> Option<(f64, f64)> {
    if values.is_empty() {
        return None;
    }
    let n = ((values.len() as f64 * fraction).ceil() as usize).clamp(1, values.len());
    let tail = &values[values.len() - n..];
    let mean = tail.iter().sum::<f64>() / n as f64;
    let var = tail.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
    Some((mean, var.sqrt()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct BudgetArm {
    pub budget: usize,
    /// Tail mean and spread of the per-episode average reward; NaN without episodes.
    pub tail_reward: f64,
    pub tail_reward_std: f64,
    pub report: RunReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BudgetReport {
    pub arms: Vec<BudgetArm>,
}

/// One training run per action budget, all on the same seeds.
pub fn run_budget_study(cfg: &ExperimentConfig, budgets: &[usize]) -> Result<BudgetReport> {
    if budgets.is_empty() || budgets.contains(&0) {
        return Err(Error::config("budgets", "need at least one positive budget"));
    }
    let mut arms = Vec::with_capacity(budgets.len());
    for &budget in budgets {
        let mut arm = cfg.clone();
        arm.env.t_max = budget;
        arm.name = format!("{}-budget-{budget}", cfg.name);
        let report = run_training(&arm)?;
        let rewards: Vec<f64> = report.series.iter().map(|r| r.avg_reward).collect();
        let (tail_reward, tail_reward_std) = tail_stats(&rewards, cfg.tail_fraction).unwrap_or((f64::NAN, f64::NAN));
        arms.push(BudgetArm { budget, tail_reward, tail_reward_std, report });
    }
    Ok(BudgetReport { arms })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineRow {
    pub geometry: String,
    pub n_actions: usize,
    #[serde(rename = "rl_dE_mHa")]
    pub rl_de_mha: f64,
    #[serde(rename = "filtered_dE_mHa")]
    pub filtered_de_mha: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineReport {
    pub rows: Vec<BaselineRow>,
    /// Filtered eigensolver trace per geometry.
    pub filtered: Vec<(String, AnsatzRecord)>,
    /// One RL run per budget.
    pub arms: Vec<RunReport>,
}

/// Energy after `n` applied factors; the final energy if the record stopped earlier.
pub fn energy_after(record: &AnsatzRecord, n: usize) -> f64 {
    match n {
        0 => record.initial_energy,
        n if n <= record.len() => record.steps[n - 1].energy,
        _ => record.final_energy(),
    }
}

/// RL greedy readout per budget against filtered CQE at matching cumulative
/// action counts, both from the same initial state.
pub fn run_baseline_comparison(cfg: &ExperimentConfig) -> Result<BaselineReport> {
    let cfg = cfg.resolve()?;
    let budgets = &cfg.baseline.budgets;
    let set = build_problems(&cfg)?;
    let starts = evaluation_starts(&set.basis, &set.problems, &cfg.env, eval_seed(&cfg))?;
    let pool = GeneratorPool::canonical(&set.basis, cfg.env.flavor)?;
    let mut cqe = cfg.baseline.cqe;
    let most = budgets.iter().copied().max().unwrap_or(0);
    cqe.max_actions = Some(cqe.max_actions.map_or(most, |m| m.max(most)));
    let filtered = set
        .problems
        .iter()
        .zip(&starts)
        .map(|(p, s)| Ok((p.label.clone(), run_cqe(s, &p.hamiltonian, &set.basis, &pool, &cqe)?)))
        .collect::<Result<Vec<_>>>()?;
    let mut arms = Vec::with_capacity(budgets.len());
    let mut rows = Vec::new();
    for &budget in budgets {
        let mut arm = cfg.clone();
        arm.env.t_max = budget;
        arm.name = format!("{}-rl-{budget}", cfg.name);
        let report = run_training(&arm)?;
        for ((row, p), (_, rec)) in report.eval.iter().zip(&set.problems).zip(&filtered) {
            rows.push(BaselineRow {
                geometry: row.geometry.clone(),
                n_actions: budget,
                rl_de_mha: row.de_mha,
                filtered_de_mha: (energy_after(rec, budget) - p.e_exact) * MILLIHARTREE,
            });
        }
        arms.push(report);
    }
    Ok(BaselineReport { rows, filtered, arms })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FoldResult {
    pub fold: usize,
    pub train: Vec<EvalRow>,
    pub validation: Vec<EvalRow>,
    pub train_mean_mha: f64,
    pub validation_mean_mha: f64,
    pub report: RunReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrossvalReport {
    pub grid: GeometryGrid,
    pub folds: Vec<FoldResult>,
}

/// Mean energy error in mHa; NaN for no rows.
pub fn mean_error(rows: &[EvalRow]) -> f64 {
    rows.iter().map(|r| r.de_mha).sum::<f64>() / rows.len() as f64
}

/// Trains on the `train` indices of `set` and evaluates on both index lists.
pub fn run_fold(
    cfg: &ExperimentConfig,
    set: &ProblemSet,
    fold: usize,
    train: &[usize],
    validation: &[usize],
) -> Result<FoldResult> {
    if train.is_empty() {
        return Err(Error::config("crossval.folds", format!("fold {fold} has no training geometry")));
    }
    let mut cfg = cfg.resolve()?;
    cfg.name = format!("{}-fold-{fold}", cfg.name);
    let (report, validation_rows) = train_and_evaluate(&cfg, set, train, validation, &mut |_| {})?;
    Ok(FoldResult {
        fold,
        train_mean_mha: mean_error(&report.eval),
        validation_mean_mha: mean_error(&validation_rows),
        train: report.eval.clone(),
        validation: validation_rows,
        report,
    })
}

/// k-fold cross-validation over a geometry grid: each fold is held out once
/// and the agent trains on the rest, drawing a geometry uniformly per episode.
pub fn run_crossval(cfg: &ExperimentConfig) -> Result<CrossvalReport> {
    let cfg = cfg.resolve()?;
    let GeometrySpec::Grid { min, max, step } = cfg.molecule.geometry else {
        return Err(Error::config("molecule.geometry", "cross-validation needs a grid geometry"));
    };
    let grid = GeometryGrid::new(min, max, step)?.with_folds(cfg.crossval.folds, cfg.seed_for(SeedStream::Folds))?;
    let set = build_problems(&cfg)?;
    let folds = (0..grid.n_folds())
        .map(|f| run_fold(&cfg, &set, f, &grid.complement(f), &grid.fold(f)))
        .collect::<Result<Vec<_>>>()?;
    Ok(CrossvalReport { grid, folds })
}
