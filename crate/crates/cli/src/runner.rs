//! Cell expansion, the worker pool, CSV writers, and the run manifest.

use crate::config::{Experiment, RunConfig, VariantSpec};
use crate::CliError;
use hindsight_core::envs::{FunctionEstimationEnv, TrueValue};
use hindsight_core::overest::{estimate_all, noise_mc, study_bias_curve, thrun_upper_bound, Method, NoiseModel};
use hindsight_core::qcore::HindsightConfig;
use hindsight_core::trainer::{train_run_with_eval, AgentVariant, EvalOptions, RunStatus};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub out: Option<PathBuf>,
    pub jobs: Option<usize>,
    pub allow_divergence_study: bool,
}

/// Status and file index of one executed cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellRecord {
    pub label: String,
    pub delta: f64,
    pub seed: u64,
    /// completed | diverged | failed
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub diverged_frame: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub message: Option<String>,
    /// Files this cell produced, relative to the run directory.
    pub files: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub artifact_version: String,
    pub experiment: String,
    pub config_hash: String,
    pub cells: Vec<CellRecord>,
    /// Every file of the run, relative to the run directory, sorted.
    pub files: Vec<String>,
}

#[derive(Debug)]
pub struct RunReport {
    pub out_dir: PathBuf,
    pub manifest: RunManifest,
    /// Cells counting toward a nonzero exit: hard failures always, diverged
    /// cells only when the divergence study is not enabled.
    pub failed_cells: usize,
}

// ---- CSV row types (schemas are part of the external interface) ----

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub(crate) struct EpisodeRecord {
    pub frame: usize,
    pub episode: usize,
    #[serde(rename = "return")]
    pub episode_return: f64,
    pub mean_q: f64,
    pub epsilon: f64,
    pub seed: u64,
    pub variant: String,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub(crate) struct EvalRecord {
    pub frame: usize,
    pub eval_return: f64,
    pub eval_mean_q: f64,
    pub seed: u64,
    pub variant: String,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub(crate) struct BiasRecord {
    pub state: f64,
    pub bias: f64,
    pub method: String,
    pub seed: u64,
    pub round: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub(crate) struct TrainSummaryRow {
    pub variant: String,
    pub delta: f64,
    pub seed: u64,
    pub status: String,
    pub frames_run: usize,
    pub episodes: usize,
    pub final_eval_return: Option<f64>,
    pub final_eval_mean_q: Option<f64>,
    pub diverged_frame: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub(crate) struct OverestSummaryRow {
    pub method: String,
    pub delta: f64,
    pub seed: u64,
    pub rounds: usize,
    pub mean_bias: f64,
    pub mean_abs_bias: f64,
    pub smoothness: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub(crate) struct NoiseSummaryRow {
    pub seed: u64,
    pub m: usize,
    pub epsilon: f64,
    pub gamma: f64,
    pub trials: usize,
    pub empirical_mean: f64,
    pub closed_form: f64,
    pub abs_error: f64,
}

#[derive(Debug, Clone)]
enum SummaryData {
    Train(TrainSummaryRow),
    Overest(Option<OverestSummaryRow>),
    Noise(NoiseSummaryRow),
}

#[derive(Debug, Clone)]
enum CellSpec {
    Train { variant: VariantSpec, delta: f64, seed: u64 },
    Overest { method: Method, delta: f64, seed: u64 },
    Noise { seed: u64 },
}

struct CellOutcome {
    record: CellRecord,
    summary: SummaryData,
}

/// Executes every cell of the config, writes per-cell CSVs, a summary
/// table, and `manifest.json` into the output directory.
pub fn run(config: &RunConfig, opts: &RunOptions) -> Result<RunReport, CliError> {
    config.validate(opts.allow_divergence_study)?;
    let out_dir = opts
        .out
        .clone()
        .or_else(|| config.output.clone())
        .unwrap_or_else(|| PathBuf::from("runs").join(config.experiment.label()));
    std::fs::create_dir_all(&out_dir).map_err(|e| CliError::io(&out_dir, e))?;

    let divergence_study = opts.allow_divergence_study || config.config.divergence_study;
    let cells = expand_cells(config);

    let execute = |cell: &CellSpec| execute_cell(config, cell, &out_dir, divergence_study);
    let outcomes: Vec<CellOutcome> = match opts.jobs {
        Some(jobs) => rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.max(1))
            .build()
            .expect("worker pool")
            .install(|| cells.par_iter().map(execute).collect()),
        None => cells.par_iter().map(execute).collect(),
    };

    write_summary(&out_dir, config, &outcomes)?;

    let mut files: Vec<String> = outcomes
        .iter()
        .flat_map(|o| o.record.files.iter().cloned())
        .chain(["summary.csv".to_string(), "manifest.json".to_string()])
        .collect();
    files.sort();
    let manifest = RunManifest {
        artifact_version: env!("CARGO_PKG_VERSION").to_string(),
        experiment: config.experiment.label().to_string(),
        config_hash: config.content_hash(),
        cells: outcomes.iter().map(|o| o.record.clone()).collect(),
        files,
    };
    let manifest_path = out_dir.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    std::fs::write(&manifest_path, text).map_err(|e| CliError::io(&manifest_path, e))?;

    let failed_cells = manifest
        .cells
        .iter()
        .filter(|c| c.status == "failed" || (c.status == "diverged" && !divergence_study))
        .count();
    Ok(RunReport { out_dir, manifest, failed_cells })
}

fn expand_cells(config: &RunConfig) -> Vec<CellSpec> {
    match config.experiment {
        Experiment::Train | Experiment::DeltaSweep => {
            let mut cells = Vec::new();
            for variant in &config.variants {
                for &delta in &config.deltas {
                    for &seed in &config.seeds {
                        cells.push(CellSpec::Train { variant: *variant, delta, seed });
                    }
                }
            }
            cells
        }
        Experiment::Overest => {
            let mut cells = Vec::new();
            for &method in &config.overest.methods {
                // δ only matters for hindsight methods; the plain ones run
                // one cell per seed.
                let deltas: &[f64] = if method.is_hindsight() { &config.deltas } else { &[0.0] };
                for &delta in deltas {
                    for &seed in &config.seeds {
                        cells.push(CellSpec::Overest { method, delta, seed });
                    }
                }
            }
            cells
        }
        Experiment::NoiseBound => {
            config.seeds.iter().map(|&seed| CellSpec::Noise { seed }).collect()
        }
    }
}

fn execute_cell(
    config: &RunConfig,
    cell: &CellSpec,
    out_dir: &Path,
    divergence_study: bool,
) -> CellOutcome {
    match cell {
        CellSpec::Train { variant, delta, seed } => {
            execute_train_cell(config, *variant, *delta, *seed, out_dir, divergence_study)
        }
        CellSpec::Overest { method, delta, seed } => {
            execute_overest_cell(config, *method, *delta, *seed, out_dir)
        }
        CellSpec::Noise { seed } => execute_noise_cell(config, *seed),
    }
}

fn cell_id(label: &str, delta: f64, seed: u64) -> String {
    format!("{label}_d{delta}_s{seed}")
}

fn execute_train_cell(
    config: &RunConfig,
    variant: VariantSpec,
    delta: f64,
    seed: u64,
    out_dir: &Path,
    divergence_study: bool,
) -> CellOutcome {
    let label = variant.label();
    let id = cell_id(&label, delta, seed);
    let env = config
        .env
        .as_ref()
        .and_then(|e| e.build_tabular())
        .expect("validated tabular env");
    let agent = AgentVariant {
        base: variant.base,
        hindsight: variant.hindsight,
        config: HindsightConfig { delta, divergence_study, ..config.config.clone() },
    };
    let eval = EvalOptions {
        interval: config.train.eval_interval,
        episodes: config.train.eval_episodes,
        epsilon: config.train.eval_epsilon,
        max_steps: config.train.eval_max_steps,
    };
    let outcome = train_run_with_eval(&env, &agent, config.train.frames, seed, Some(eval));

    let episode_rows: Vec<EpisodeRecord> = outcome
        .episodes
        .iter()
        .enumerate()
        .map(|(i, ep)| EpisodeRecord {
            frame: ep.frame_index,
            episode: i,
            episode_return: ep.episode_return,
            mean_q: ep.mean_selected_q,
            epsilon: ep.epsilon_at_end,
            seed,
            variant: label.clone(),
            delta,
        })
        .collect();
    let eval_rows: Vec<EvalRecord> = outcome
        .evals
        .iter()
        .map(|ev| EvalRecord {
            frame: ev.frame,
            eval_return: ev.eval_return,
            eval_mean_q: ev.eval_mean_q,
            seed,
            variant: label.clone(),
            delta,
        })
        .collect();

    let episodes_file = format!("episodes_{id}.csv");
    let evals_file = format!("evals_{id}.csv");
    let mut files = Vec::new();
    let mut io_error = None;
    for (name, write) in [
        (&episodes_file, write_csv(&out_dir.join(&episodes_file), &episode_rows)),
        (&evals_file, write_csv(&out_dir.join(&evals_file), &eval_rows)),
    ] {
        match write {
            Ok(()) => files.push(name.clone()),
            Err(e) => io_error = Some(e),
        }
    }

    let (status, diverged_frame) = match outcome.diagnostics.status {
        RunStatus::Completed => ("completed", None),
        RunStatus::Diverged { frame } => ("diverged", Some(frame)),
    };
    let status = if io_error.is_some() { "failed" } else { status };
    let last_eval = outcome.evals.last();
    let summary = SummaryData::Train(TrainSummaryRow {
        variant: label.clone(),
        delta,
        seed,
        status: status.to_string(),
        frames_run: outcome.diagnostics.frames_run,
        episodes: outcome.episodes.len(),
        final_eval_return: last_eval.map(|e| e.eval_return),
        final_eval_mean_q: last_eval.map(|e| e.eval_mean_q),
        diverged_frame,
    });
    CellOutcome {
        record: CellRecord {
            label,
            delta,
            seed,
            status: status.to_string(),
            diverged_frame,
            message: io_error,
            files,
        },
        summary,
    }
}

fn execute_overest_cell(
    config: &RunConfig,
    method: Method,
    delta: f64,
    seed: u64,
    out_dir: &Path,
) -> CellOutcome {
    let label = method.label().to_string();
    let id = cell_id(&label, delta, seed);
    let env = config
        .env
        .as_ref()
        .and_then(|e| e.build_function_estimation())
        .unwrap_or_else(|| FunctionEstimationEnv::new(TrueValue::Sine));
    let rounds = config.overest.rounds;

    match estimate_all(&env, method, delta, rounds, seed) {
        Ok(outcome) => {
            let mut rows = Vec::new();
            for (round, estimate) in outcome.rounds.iter().enumerate() {
                let curve = study_bias_curve(estimate, &env, &label);
                rows.extend(curve.grid.iter().zip(curve.bias.iter()).map(|(&s, &b)| {
                    BiasRecord { state: s, bias: b, method: label.clone(), seed, round }
                }));
            }
            let bias_file = format!("bias_{id}.csv");
            let final_curve = study_bias_curve(outcome.final_round(), &env, &label);
            let summary_row = OverestSummaryRow {
                method: label.clone(),
                delta,
                seed,
                rounds,
                mean_bias: final_curve.mean_bias(),
                mean_abs_bias: final_curve.mean_abs_bias(),
                smoothness: final_curve.smoothness(),
            };
            match write_csv(&out_dir.join(&bias_file), &rows) {
                Ok(()) => CellOutcome {
                    record: CellRecord {
                        label,
                        delta,
                        seed,
                        status: "completed".into(),
                        diverged_frame: None,
                        message: None,
                        files: vec![bias_file],
                    },
                    summary: SummaryData::Overest(Some(summary_row)),
                },
                Err(e) => CellOutcome {
                    record: CellRecord {
                        label,
                        delta,
                        seed,
                        status: "failed".into(),
                        diverged_frame: None,
                        message: Some(e),
                        files: vec![],
                    },
                    summary: SummaryData::Overest(None),
                },
            }
        }
        Err(e) => CellOutcome {
            record: CellRecord {
                label,
                delta,
                seed,
                status: "failed".into(),
                diverged_frame: None,
                message: Some(e.to_string()),
                files: vec![],
            },
            summary: SummaryData::Overest(None),
        },
    }
}

fn execute_noise_cell(config: &RunConfig, seed: u64) -> CellOutcome {
    let nm = NoiseModel::new(config.noise.epsilon, config.noise.m, config.noise.gamma);
    let empirical = noise_mc(&nm, config.noise.trials, seed);
    let closed = thrun_upper_bound(&nm);
    CellOutcome {
        record: CellRecord {
            label: "noise_mc".into(),
            delta: 0.0,
            seed,
            status: "completed".into(),
            diverged_frame: None,
            message: None,
            files: vec![],
        },
        summary: SummaryData::Noise(NoiseSummaryRow {
            seed,
            m: config.noise.m,
            epsilon: config.noise.epsilon,
            gamma: config.noise.gamma,
            trials: config.noise.trials,
            empirical_mean: empirical,
            closed_form: closed,
            abs_error: (empirical - closed).abs(),
        }),
    }
}

fn write_summary(out_dir: &Path, config: &RunConfig, outcomes: &[CellOutcome]) -> Result<(), CliError> {
    let path = out_dir.join("summary.csv");
    match config.experiment {
        Experiment::Train | Experiment::DeltaSweep => {
            let rows: Vec<&TrainSummaryRow> = outcomes
                .iter()
                .filter_map(|o| match &o.summary {
                    SummaryData::Train(r) => Some(r),
                    _ => None,
                })
                .collect();
            write_csv(&path, &rows).map_err(CliError::Runtime)
        }
        Experiment::Overest => {
            let rows: Vec<&OverestSummaryRow> = outcomes
                .iter()
                .filter_map(|o| match &o.summary {
                    SummaryData::Overest(r) => r.as_ref(),
                    _ => None,
                })
                .collect();
            write_csv(&path, &rows).map_err(CliError::Runtime)
        }
        Experiment::NoiseBound => {
            let rows: Vec<&NoiseSummaryRow> = outcomes
                .iter()
                .filter_map(|o| match &o.summary {
                    SummaryData::Noise(r) => Some(r),
                    _ => None,
                })
                .collect();
            write_csv(&path, &rows).map_err(CliError::Runtime)
        }
    }
}

pub(crate) fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), String> {
    let mut writer = csv::Writer::from_path(path).map_err(|e| e.to_string())?;
    for row in rows {
        writer.serialize(row).map_err(|e| e.to_string())?;
    }
    writer.flush().map_err(|e| e.to_string())
}
