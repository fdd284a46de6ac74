use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::run::{BaselineReport, BudgetReport, CrossvalReport, EpisodeRecord, EvalRow, RunReport};
use crate::cse::AnsatzRecord;
use crate::{Error, Result};

pub const SERIES_FILE: &str = "series.csv";
pub const EVAL_FILE: &str = "eval.csv";
pub const ANSATZ_FILE: &str = "ansatz.txt";
pub const CONFIG_FILE: &str = "config.resolved.json";
pub const CHECKPOINT_FILE: &str = "checkpoint.bin";

const SERIES_HEADER: [&str; 4] = ["episode", "energy", "residual_norm", "avg_reward"];
const EVAL_HEADER: [&str; 5] = ["geometry", "E_RL", "E_exact", "dE_mHa", "n_actions"];

/// One `eval.csv` line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalCsvRow {
    pub geometry: String,
    #[serde(rename = "E_RL")]
    pub e_rl: f64,
    #[serde(rename = "E_exact")]
    pub e_exact: f64,
    #[serde(rename = "dE_mHa")]
    pub de_mha: f64,
    pub n_actions: usize,
}

impl From<&EvalRow> for EvalCsvRow {
    fn from(r: &EvalRow) -> Self {
        EvalCsvRow {
            geometry: r.geometry.clone(),
            e_rl: r.e_rl,
            e_exact: r.e_exact,
            de_mha: r.de_mha,
            n_actions: r.n_actions,
        }
    }
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Parse { path: path.to_path_buf(), line: 0, message: format!("{other:?}") },
    }
}

/// Writes `header` then one serialized row per item; the header is present even with no rows.
pub fn write_csv<T: Serialize>(path: &Path, header: &[&str], rows: impl IntoIterator<Item = T>) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record(header).map_err(|e| csv_error(path, e))?;
    for row in rows {
        w.serialize(row).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_csv<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    r.deserialize().map(|row| row.map_err(|e| csv_error(path, e))).collect()
}

pub fn write_series_csv(path: &Path, series: &[EpisodeRecord]) -> Result<()> {
    write_csv(path, &SERIES_HEADER, series)
}

pub fn read_series_csv(path: &Path) -> Result<Vec<EpisodeRecord>> {
    read_csv(path)
}

pub fn write_eval_csv(path: &Path, rows: &[EvalRow]) -> Result<()> {
    write_csv(path, &EVAL_HEADER, rows.iter().map(EvalCsvRow::from))
}

pub fn read_eval_csv(path: &Path) -> Result<Vec<EvalCsvRow>> {
    read_csv(path)
}

/// Concatenated ansatz records, each introduced by `## geometry <label>`.
pub fn ansatz_text<'a>(records: impl IntoIterator<Item = (&'a str, &'a AnsatzRecord)>) -> String {
    let mut out = String::new();
    for (label, rec) in records {
        out.push_str("## geometry ");
        out.push_str(label);
        out.push('\n');
        out.push_str(&rec.to_text());
    }
    out
}

pub fn parse_ansatz_text(text: &str, n_spatial: usize) -> Result<Vec<(String, AnsatzRecord)>> {
    let mut out = Vec::new();
    for section in text.split("## geometry ").filter(|s| !s.trim().is_empty()) {
        let (label, body) = section.split_once('\n').unwrap_or((section, ""));
        out.push((label.trim().to_string(), AnsatzRecord::from_text(body, n_spatial)?));
    }
    Ok(out)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Writes the five run artifacts into `outdir` and returns their paths.
pub fn emit_artifacts(report: &RunReport, outdir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let dir = outdir.as_ref();
    ensure_dir(dir)?;
    let paths: Vec<PathBuf> =
        [SERIES_FILE, EVAL_FILE, ANSATZ_FILE, CONFIG_FILE, CHECKPOINT_FILE].iter().map(|f| dir.join(f)).collect();
    write_series_csv(&paths[0], &report.series)?;
    write_eval_csv(&paths[1], &report.eval)?;
    write_text(&paths[2], &ansatz_text(report.eval.iter().map(|r| (r.geometry.as_str(), &r.ansatz))))?;
    write_text(&paths[3], &(report.config.to_json_string()? + "\n"))?;
    report.checkpoint.save(&paths[4])?;
    Ok(paths)
}

#[derive(Serialize)]
struct BudgetCsvRow {
    budget: usize,
    episodes: usize,
    tail_reward: f64,
    tail_reward_std: f64,
}

/// `budget.csv` plus full artifacts of each arm under `budget-<n>/`.
pub fn emit_budget_report(report: &BudgetReport, outdir: impl AsRef<Path>) -> Result<()> {
    let dir = outdir.as_ref();
    ensure_dir(dir)?;
    write_csv(
        &dir.join("budget.csv"),
        &["budget", "episodes", "tail_reward", "tail_reward_std"],
        report.arms.iter().map(|a| BudgetCsvRow {
            budget: a.budget,
            episodes: a.report.series.len(),
            tail_reward: a.tail_reward,
            tail_reward_std: a.tail_reward_std,
        }),
    )?;
    for arm in &report.arms {
        emit_artifacts(&arm.report, dir.join(format!("budget-{}", arm.budget)))?;
    }
    Ok(())
}

/// `baseline.csv`, the filtered traces, and each RL arm under `rl-<n>/`.
pub fn emit_baseline_report(report: &BaselineReport, outdir: impl AsRef<Path>) -> Result<()> {
    let dir = outdir.as_ref();
    ensure_dir(dir)?;
    write_csv(&dir.join("baseline.csv"), &["geometry", "n_actions", "rl_dE_mHa", "filtered_dE_mHa"], &report.rows)?;
    write_text(&dir.join("filtered_ansatz.txt"), &ansatz_text(report.filtered.iter().map(|(l, r)| (l.as_str(), r))))?;
    for arm in &report.arms {
        emit_artifacts(arm, dir.join(format!("rl-{}", arm.config.env.t_max)))?;
    }
    Ok(())
}

#[derive(Serialize)]
struct FoldCsvRow {
    fold: usize,
    n_train: usize,
    n_validation: usize,
    #[serde(rename = "train_dE_mHa")]
    train: f64,
    #[serde(rename = "validation_dE_mHa")]
    validation: f64,
}

#[derive(Serialize)]
struct AssignmentRow {
    r1: f64,
    r2: f64,
    fold: usize,
}

/// `crossval.csv`, `folds.csv`, and per-fold artifacts under `fold-<k>/`
/// with an extra `validation.csv`.
pub fn emit_crossval_report(report: &CrossvalReport, outdir: impl AsRef<Path>) -> Result<()> {
    let dir = outdir.as_ref();
    ensure_dir(dir)?;
    write_csv(
        &dir.join("crossval.csv"),
        &["fold", "n_train", "n_validation", "train_dE_mHa", "validation_dE_mHa"],
        report.folds.iter().map(|f| FoldCsvRow {
            fold: f.fold,
            n_train: f.train.len(),
            n_validation: f.validation.len(),
            train: f.train_mean_mha,
            validation: f.validation_mean_mha,
        }),
    )?;
    write_csv(
        &dir.join("folds.csv"),
        &["r1", "r2", "fold"],
        report.grid.entries().iter().enumerate().map(|(i, &(r1, r2))| AssignmentRow {
            r1,
            r2,
            fold: report.grid.fold_of(i),
        }),
    )?;
    for f in &report.folds {
        let sub = dir.join(format!("fold-{}", f.fold));
        emit_artifacts(&f.report, &sub)?;
        write_eval_csv(&sub.join("validation.csv"), &f.validation)?;
    }
    Ok(())
}
