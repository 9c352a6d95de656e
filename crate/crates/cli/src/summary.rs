//! Aggregation of finished run directories.

use crate::runner::{EvalRecord, NoiseSummaryRow, OverestSummaryRow, RunManifest};
use crate::CliError;
use serde::de::DeserializeOwned;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

/// Per-(variant, δ) aggregate over seeds of a training run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainAggregate {
    pub variant: String,
    pub delta: f64,
    pub seeds: usize,
    pub mean_final_return: f64,
    pub sd_final_return: f64,
    pub mean_final_q: f64,
    pub sd_final_q: f64,
    /// (wins, comparable seeds) against the hindsight-off counterpart at
    /// the same δ, when that counterpart exists in the run.
    pub wins_vs_counterpart: Option<(usize, usize)>,
}

#[derive(Debug, Clone)]
pub struct SummaryReport {
    pub experiment: String,
    pub train: Vec<TrainAggregate>,
    pub diverged_cells: usize,
    pub failed_cells: usize,
    pub text: String,
}

/// Reads a run directory's manifest and raw files and aggregates them.
/// Missing or unreadable files are reported item by item.
pub fn summarize(run_dir: &Path) -> Result<SummaryReport, CliError> {
    let manifest_path = run_dir.join("manifest.json");
    let manifest_text = std::fs::read_to_string(&manifest_path).map_err(|e| {
        CliError::CorruptRun(vec![format!("missing manifest: {}: {e}", manifest_path.display())])
    })?;
    let manifest: RunManifest = serde_json::from_str(&manifest_text)
        .map_err(|e| CliError::CorruptRun(vec![format!("corrupt manifest: {e}")]))?;

    let mut problems = Vec::new();
    for file in &manifest.files {
        if !run_dir.join(file).exists() {
            problems.push(format!("listed file is missing on disk: {file}"));
        }
    }

    let diverged_cells = manifest.cells.iter().filter(|c| c.status == "diverged").count();
    let failed_cells = manifest.cells.iter().filter(|c| c.status == "failed").count();

    let mut report = SummaryReport {
        experiment: manifest.experiment.clone(),
        train: Vec::new(),
        diverged_cells,
        failed_cells,
        text: String::new(),
    };

    match manifest.experiment.as_str() {
        "train" | "delta_sweep" => {
            summarize_training(run_dir, &manifest, &mut report, &mut problems)
        }
        "overest" => summarize_overest(run_dir, &mut report, &mut problems),
        "noise_bound" => summarize_noise(run_dir, &mut report, &mut problems),
        other => problems.push(format!("unknown experiment kind in manifest: {other}")),
    }

    if !problems.is_empty() {
        return Err(CliError::CorruptRun(problems));
    }
    Ok(report)
}

fn summarize_training(
    run_dir: &Path,
    manifest: &RunManifest,
    report: &mut SummaryReport,
    problems: &mut Vec<String>,
) {
    // (variant, delta-key) -> seed -> (final return, final mean q)
    let mut finals: BTreeMap<(String, String), BTreeMap<u64, (f64, f64)>> = BTreeMap::new();
    for cell in &manifest.cells {
        if cell.status != "completed" {
            continue;
        }
        let evals_file = format!("evals_{}_d{}_s{}.csv", cell.label, cell.delta, cell.seed);
        match read_csv::<EvalRecord>(&run_dir.join(&evals_file)) {
            Ok(rows) => {
                if let Some(last) = rows.last() {
                    finals
                        .entry((cell.label.clone(), format!("{}", cell.delta)))
                        .or_default()
                        .insert(cell.seed, (last.eval_return, last.eval_mean_q));
                } else {
                    problems.push(format!("{evals_file}: no evaluation snapshots"));
                }
            }
            Err(e) => problems.push(format!("{evals_file}: {e}")),
        }
    }

    for ((variant, delta_key), by_seed) in &finals {
        let returns: Vec<f64> = by_seed.values().map(|v| v.0).collect();
        let qs: Vec<f64> = by_seed.values().map(|v| v.1).collect();
        let wins = variant.strip_suffix("_h").and_then(|base| {
            let counterpart = finals.get(&(base.to_string(), delta_key.clone()))?;
            let mut wins = 0;
            let mut total = 0;
            for (seed, (ret, _)) in by_seed {
                if let Some((base_ret, _)) = counterpart.get(seed) {
                    total += 1;
                    if ret > base_ret {
                        wins += 1;
                    }
                }
            }
            Some((wins, total))
        });
        report.train.push(TrainAggregate {
            variant: variant.clone(),
            delta: delta_key.parse().unwrap_or(f64::NAN),
            seeds: by_seed.len(),
            mean_final_return: mean(&returns),
            sd_final_return: sample_sd(&returns),
            mean_final_q: mean(&qs),
            sd_final_q: sample_sd(&qs),
            wins_vs_counterpart: wins,
        });
    }

    let mut text = String::new();
    let _ = writeln!(
        text,
        "{:<10} {:>7} {:>6} {:>12} {:>10} {:>12} {:>10} {:>8}",
        "variant", "delta", "seeds", "return", "sd", "mean_q", "sd", "wins"
    );
    for row in &report.train {
        let wins = match row.wins_vs_counterpart {
            Some((w, t)) => format!("{w}/{t}"),
            None => "-".to_string(),
        };
        let _ = writeln!(
            text,
            "{:<10} {:>7} {:>6} {:>12.4} {:>10.4} {:>12.4} {:>10.4} {:>8}",
            row.variant,
            row.delta,
            row.seeds,
            row.mean_final_return,
            row.sd_final_return,
            row.mean_final_q,
            row.sd_final_q,
            wins
        );
    }
    let _ = writeln!(
        text,
        "cells: {} completed, {} diverged, {} failed",
        manifest.cells.len() - report.diverged_cells - report.failed_cells,
        report.diverged_cells,
        report.failed_cells
    );
    report.text = text;
}

fn summarize_overest(run_dir: &Path, report: &mut SummaryReport, problems: &mut Vec<String>) {
    match read_csv::<OverestSummaryRow>(&run_dir.join("summary.csv")) {
        Ok(rows) => {
            let mut text = String::new();
            let _ = writeln!(
                text,
                "{:<8} {:>6} {:>6} {:>12} {:>14} {:>12}",
                "method", "delta", "seed", "mean_bias", "mean_abs_bias", "smoothness"
            );
            for r in &rows {
                let _ = writeln!(
                    text,
                    "{:<8} {:>6} {:>6} {:>12.5} {:>14.5} {:>12.6}",
                    r.method, r.delta, r.seed, r.mean_bias, r.mean_abs_bias, r.smoothness
                );
            }
            report.text = text;
        }
        Err(e) => problems.push(format!("summary.csv: {e}")),
    }
}

fn summarize_noise(run_dir: &Path, report: &mut SummaryReport, problems: &mut Vec<String>) {
    match read_csv::<NoiseSummaryRow>(&run_dir.join("summary.csv")) {
        Ok(rows) => {
            let mut text = String::new();
            let _ = writeln!(
                text,
                "{:<6} {:>4} {:>8} {:>6} {:>9} {:>16} {:>12} {:>11}",
                "seed", "m", "epsilon", "gamma", "trials", "empirical_mean", "closed_form", "abs_error"
            );
            for r in &rows {
                let _ = writeln!(
                    text,
                    "{:<6} {:>4} {:>8} {:>6} {:>9} {:>16.6} {:>12.6} {:>11.6}",
                    r.seed, r.m, r.epsilon, r.gamma, r.trials, r.empirical_mean, r.closed_form, r.abs_error
                );
            }
            report.text = text;
        }
        Err(e) => problems.push(format!("summary.csv: {e}")),
    }
}

fn read_csv<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, String> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| e.to_string())?;
    reader.deserialize().collect::<Result<Vec<T>, _>>().map_err(|e| e.to_string())
}

fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn sample_sd(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}
