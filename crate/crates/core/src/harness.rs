//! Experiment orchestration: repeated incomplete-view trials, grid search
//! over the penalty weights, and report emission.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::baselines::{bsv_cluster, concat_cluster};
use crate::clustering::{kmeans, KMeansParams};
use crate::dataset::{load_views, make_incomplete_split, MultiViewDataset, RoundingRule, SplitSpec};
use crate::error::{Error, Result};
use crate::metrics;
use crate::solver::{assemble_representation, fit, ModelParams, ObjectiveTerms};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    ImcGrmf,
    Bsv,
    Concat,
}

impl std::str::FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "imcgrmf" => Ok(Method::ImcGrmf),
            "bsv" => Ok(Method::Bsv),
            "concat" => Ok(Method::Concat),
            other => Err(Error::InvalidConfig {
                reason: format!("unknown method {other:?} (expected imcgrmf, bsv, or concat)"),
            }),
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            Method::ImcGrmf => "imcgrmf",
            Method::Bsv => "bsv",
            Method::Concat => "concat",
        };
        write!(f, "{name}")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub dataset_dir: PathBuf,
    pub method: Method,
    pub paired_ratios: Vec<f64>,
    pub trials: usize,
    pub params: ModelParams,
    pub kmeans: KMeansParams,
    #[serde(default)]
    pub rounding: RoundingRule,
    /// Per-feature min-max scaling of the loaded data (off by default).
    #[serde(default)]
    pub scale: bool,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidConfig {
                reason: "trials must be at least 1".into(),
            });
        }
        if self.paired_ratios.is_empty() {
            return Err(Error::InvalidConfig {
                reason: "at least one paired ratio is required".into(),
            });
        }
        for &r in &self.paired_ratios {
            if !(r > 0.0 && r <= 1.0) {
                return Err(Error::InvalidPairedRatio { ratio: r });
            }
        }
        self.params.validate()?;
        self.kmeans.validate()
    }
}

/// One (ratio, trial) run. Metric fields are `None` when the trial failed;
/// the failure itself is in `error`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub ratio: f64,
    pub trial: usize,
    pub seed: u64,
    pub acc: Option<f64>,
    pub nmi: Option<f64>,
    pub purity: Option<f64>,
    pub iterations: Option<usize>,
    pub final_objective: Option<f64>,
    pub wall_time_s: f64,
    pub error: Option<String>,
}

/// Per-ratio aggregate over the successful trials of that cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub ratio: f64,
    pub trials_ok: usize,
    /// True when every trial of the cell failed.
    pub invalid: bool,
    pub mean_acc: Option<f64>,
    pub mean_nmi: Option<f64>,
    pub mean_purity: Option<f64>,
    pub mean_iterations: Option<f64>,
    pub mean_wall_time_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub ratio: f64,
    pub trial: usize,
    pub trace: Vec<ObjectiveTerms>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub method: Method,
    pub trials: usize,
    pub rows: Vec<TrialRecord>,
    pub cells: Vec<CellSummary>,
    /// Convergence traces of the fitted runs (factorization method only).
    pub traces: Vec<TraceRecord>,
    pub flags: Vec<String>,
}

struct TrialOutcome {
    labels: Vec<usize>,
    iterations: Option<usize>,
    final_objective: Option<f64>,
    trace: Option<Vec<ObjectiveTerms>>,
}

fn run_trial(
    split: &MultiViewDataset,
    config: &ExperimentConfig,
    trial: usize,
) -> Result<TrialOutcome> {
    let kmeans_params = KMeansParams {
        seed: config.kmeans.seed.wrapping_add(trial as u64),
        ..config.kmeans.clone()
    };
    match config.method {
        Method::ImcGrmf => {
            let params = ModelParams {
                seed: config.params.seed.wrapping_add(trial as u64),
                ..config.params.clone()
            };
            let state = fit(split, &params)?;
            let representation = assemble_representation(&state, split)?;
            let result = kmeans(representation.view(), &kmeans_params)?;
            Ok(TrialOutcome {
                labels: result.labels,
                iterations: Some(state.iterations()),
                final_objective: state.final_objective(),
                trace: Some(state.trace),
            })
        }
        Method::Bsv => {
            let outcome = bsv_cluster(split, &kmeans_params)?;
            Ok(TrialOutcome {
                labels: outcome.labels,
                iterations: None,
                final_objective: None,
                trace: None,
            })
        }
        Method::Concat => {
            let labels = concat_cluster(split, &kmeans_params)?;
            Ok(TrialOutcome {
                labels,
                iterations: None,
                final_objective: None,
                trace: None,
            })
        }
    }
}

/// Run the full protocol on an in-memory complete dataset: for every
/// (ratio, trial) pair, split with seed `base + trial`, run the method,
/// cluster, and score against ground truth. Failures are recorded per trial
/// and the run continues.
pub fn run_experiment_on(
    dataset: &MultiViewDataset,
    config: &ExperimentConfig,
) -> Result<ExperimentReport> {
    config.validate()?;
    if !dataset.is_complete() {
        return Err(Error::NotComplete);
    }
    let truth = dataset.labels().ok_or(Error::MissingLabels)?.to_vec();

    let mut rows = Vec::new();
    let mut cells = Vec::new();
    let mut traces = Vec::new();
    let mut flags = Vec::new();

    for &ratio in &config.paired_ratios {
        let mut ok_rows: Vec<usize> = Vec::new();
        for trial in 0..config.trials {
            let seed = config.params.seed.wrapping_add(trial as u64);
            let start = Instant::now();
            let spec = SplitSpec {
                paired_ratio: ratio,
                seed,
                rounding: config.rounding,
            };
            let outcome = make_incomplete_split(dataset, &spec).and_then(|split| {
                if ratio < 1.0 && split.is_complete() {
                    flags.push(format!(
                        "ratio {ratio} rounded to a fully paired split (trial {trial})"
                    ));
                }
                let outcome = run_trial(&split, config, trial)?;
                let split_truth = split.labels().ok_or(Error::MissingLabels)?;
                let acc = metrics::accuracy(&outcome.labels, split_truth)?;
                let nmi = metrics::nmi(&outcome.labels, split_truth)?;
                let purity = metrics::purity(&outcome.labels, split_truth)?;
                Ok((outcome, acc, nmi, purity))
            });
            let wall_time_s = start.elapsed().as_secs_f64();
            match outcome {
                Ok((outcome, acc, nmi, purity)) => {
                    ok_rows.push(rows.len());
                    if let Some(trace) = outcome.trace {
                        traces.push(TraceRecord {
                            ratio,
                            trial,
                            trace,
                        });
                    }
                    rows.push(TrialRecord {
                        ratio,
                        trial,
                        seed,
                        acc: Some(acc),
                        nmi: Some(nmi),
                        purity: Some(purity),
                        iterations: outcome.iterations,
                        final_objective: outcome.final_objective,
                        wall_time_s,
                        error: None,
                    });
                }
                Err(e) => rows.push(TrialRecord {
                    ratio,
                    trial,
                    seed,
                    acc: None,
                    nmi: None,
                    purity: None,
                    iterations: None,
                    final_objective: None,
                    wall_time_s,
                    error: Some(e.to_string()),
                }),
            }
        }

        let mean = |get: &dyn Fn(&TrialRecord) -> Option<f64>| -> Option<f64> {
            if ok_rows.is_empty() {
                return None;
            }
            let values: Vec<f64> = ok_rows.iter().filter_map(|&i| get(&rows[i])).collect();
            if values.is_empty() {
                None
            } else {
                Some(values.iter().sum::<f64>() / values.len() as f64)
            }
        };
        let cell_rows = &rows[rows.len() - config.trials..];
        cells.push(CellSummary {
            ratio,
            trials_ok: ok_rows.len(),
            invalid: ok_rows.is_empty(),
            mean_acc: mean(&|r| r.acc),
            mean_nmi: mean(&|r| r.nmi),
            mean_purity: mean(&|r| r.purity),
            mean_iterations: mean(&|r| r.iterations.map(|i| i as f64)),
            mean_wall_time_s: cell_rows.iter().map(|r| r.wall_time_s).sum::<f64>()
                / config.trials as f64,
        });
    }
    let _ = truth;

    Ok(ExperimentReport {
        method: config.method,
        trials: config.trials,
        rows,
        cells,
        traces,
        flags,
    })
}

/// [`run_experiment_on`] after loading (and optionally scaling) the dataset
/// named by the config.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    let dataset = load_views(&config.dataset_dir)?;
    let dataset = if config.scale {
        dataset.min_max_scaled()
    } else {
        dataset
    };
    run_experiment_on(&dataset, config)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub lambda1: f64,
    pub lambda2: f64,
    pub mean_acc: Option<f64>,
    pub mean_nmi: Option<f64>,
    pub mean_purity: Option<f64>,
    pub invalid: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridOutcome {
    pub best_lambda1: f64,
    pub best_lambda2: f64,
    pub best_acc: f64,
    pub table: Vec<GridCell>,
}

/// λ1 grid 10^0 .. 10^2 in half-decade steps.
pub fn default_lambda1_grid() -> Vec<f64> {
    [0.0f64, 0.5, 1.0, 1.5, 2.0]
        .iter()
        .map(|e| 10f64.powf(*e))
        .collect()
}

/// λ2 grid 10^-5 .. 10^-1 in decade steps.
pub fn default_lambda2_grid() -> Vec<f64> {
    [-5.0f64, -4.0, -3.0, -2.0, -1.0]
        .iter()
        .map(|e| 10f64.powf(*e))
        .collect()
}

/// Evaluate every (λ1, λ2) cell with [`run_experiment_on`] and return the
/// cell with the highest mean accuracy over all successful rows; ties go to
/// the smaller λ1, then the smaller λ2 (the grids are scanned in ascending
/// order).
pub fn grid_search_on(
    dataset: &MultiViewDataset,
    config: &ExperimentConfig,
    lambda1_grid: &[f64],
    lambda2_grid: &[f64],
) -> Result<GridOutcome> {
    if lambda1_grid.is_empty() || lambda2_grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let mut table = Vec::with_capacity(lambda1_grid.len() * lambda2_grid.len());
    let mut best: Option<(f64, f64, f64)> = None;
    for &l1 in lambda1_grid {
        for &l2 in lambda2_grid {
            let cell_config = ExperimentConfig {
                params: ModelParams {
                    lambda1: l1,
                    lambda2: l2,
                    ..config.params.clone()
                },
                ..config.clone()
            };
            let report = run_experiment_on(dataset, &cell_config)?;
            let ok: Vec<&TrialRecord> =
                report.rows.iter().filter(|r| r.error.is_none()).collect();
            let mean_of = |get: &dyn Fn(&TrialRecord) -> Option<f64>| -> Option<f64> {
                if ok.is_empty() {
                    None
                } else {
                    Some(ok.iter().filter_map(|r| get(r)).sum::<f64>() / ok.len() as f64)
                }
            };
            let mean_acc = mean_of(&|r| r.acc);
            table.push(GridCell {
                lambda1: l1,
                lambda2: l2,
                mean_acc,
                mean_nmi: mean_of(&|r| r.nmi),
                mean_purity: mean_of(&|r| r.purity),
                invalid: ok.is_empty(),
            });
            if let Some(acc) = mean_acc {
                let improves = match best {
                    None => true,
                    Some((_, _, best_acc)) => acc > best_acc,
                };
                if improves {
                    best = Some((l1, l2, acc));
                }
            }
        }
    }
    let (best_lambda1, best_lambda2, best_acc) = best.ok_or(Error::InvalidConfig {
        reason: "every grid cell failed".into(),
    })?;
    Ok(GridOutcome {
        best_lambda1,
        best_lambda2,
        best_acc,
        table,
    })
}

pub fn grid_search(
    config: &ExperimentConfig,
    lambda1_grid: &[f64],
    lambda2_grid: &[f64],
) -> Result<GridOutcome> {
    let dataset = load_views(&config.dataset_dir)?;
    let dataset = if config.scale {
        dataset.min_max_scaled()
    } else {
        dataset
    };
    grid_search_on(&dataset, config, lambda1_grid, lambda2_grid)
}

fn opt_num(v: Option<f64>) -> String {
    v.map(|x| format!("{x}")).unwrap_or_default()
}

/// Write `results.csv` (flat trial rows plus one `mean` row per ratio),
/// `results.json` (the full report with traces), and one trace CSV per
/// fitted run.
pub fn write_report(report: &ExperimentReport, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|source| Error::io(dir, source))?;

    let csv_path = dir.join("results.csv");
    let mut wtr = csv::Writer::from_path(&csv_path).map_err(|source| Error::Csv {
        path: csv_path.clone(),
        source,
    })?;
    let write =
        |wtr: &mut csv::Writer<std::fs::File>, rec: &[String]| -> Result<()> {
            wtr.write_record(rec).map_err(|source| Error::Csv {
                path: csv_path.clone(),
                source,
            })
        };
    write(
        &mut wtr,
        &[
            "method",
            "ratio",
            "trial",
            "seed",
            "acc",
            "nmi",
            "purity",
            "iterations",
            "final_objective",
            "wall_time_s",
            "error",
        ]
        .map(String::from),
    )?;
    for row in &report.rows {
        write(
            &mut wtr,
            &[
                report.method.to_string(),
                format!("{}", row.ratio),
                row.trial.to_string(),
                row.seed.to_string(),
                opt_num(row.acc),
                opt_num(row.nmi),
                opt_num(row.purity),
                row.iterations.map(|i| i.to_string()).unwrap_or_default(),
                opt_num(row.final_objective),
                format!("{}", row.wall_time_s),
                row.error.clone().unwrap_or_default(),
            ],
        )?;
    }
    for cell in &report.cells {
        write(
            &mut wtr,
            &[
                report.method.to_string(),
                format!("{}", cell.ratio),
                "mean".to_string(),
                String::new(),
                opt_num(cell.mean_acc),
                opt_num(cell.mean_nmi),
                opt_num(cell.mean_purity),
                opt_num(cell.mean_iterations),
                String::new(),
                format!("{}", cell.mean_wall_time_s),
                if cell.invalid { "invalid".into() } else { String::new() },
            ],
        )?;
    }
    wtr.flush().map_err(|source| Error::io(&csv_path, source))?;

    let json_path = dir.join("results.json");
    let text = serde_json::to_string_pretty(report).map_err(|source| Error::Json {
        path: json_path.clone(),
        source,
    })?;
    std::fs::write(&json_path, text).map_err(|source| Error::io(&json_path, source))?;

    for trace in &report.traces {
        let path = dir.join(format!("trace_r{}_t{}.csv", trace.ratio, trace.trial));
        crate::solver::write_trace(&trace.trace, &path)?;
    }
    Ok(())
}

/// Write `grid.csv` and `grid.json` for a grid-search outcome.
pub fn write_grid(outcome: &GridOutcome, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|source| Error::io(dir, source))?;
    let csv_path = dir.join("grid.csv");
    let mut wtr = csv::Writer::from_path(&csv_path).map_err(|source| Error::Csv {
        path: csv_path.clone(),
        source,
    })?;
    wtr.write_record(["lambda1", "lambda2", "mean_acc", "mean_nmi", "mean_purity", "invalid"])
        .map_err(|source| Error::Csv {
            path: csv_path.clone(),
            source,
        })?;
    for cell in &outcome.table {
        wtr.write_record([
            format!("{}", cell.lambda1),
            format!("{}", cell.lambda2),
            opt_num(cell.mean_acc),
            opt_num(cell.mean_nmi),
            opt_num(cell.mean_purity),
            cell.invalid.to_string(),
        ])
        .map_err(|source| Error::Csv {
            path: csv_path.clone(),
            source,
        })?;
    }
    wtr.flush().map_err(|source| Error::io(&csv_path, source))?;

    let json_path = dir.join("grid.json");
    let text = serde_json::to_string_pretty(outcome).map_err(|source| Error::Json {
        path: json_path.clone(),
        source,
    })?;
    std::fs::write(&json_path, text).map_err(|source| Error::io(&json_path, source))?;
    Ok(())
}
