//! Reproducible experiment harness.
//!
//! One master seed drives everything. Stage seeds are derived by hashing
//! the master seed with a stage tag, so adding repetitions or reordering
//! stages never shifts the random streams of existing ones: repetition `r`
//! sees the same draws whether the run asks for 5 repetitions or 50.

pub mod config;

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

pub use config::ExperimentConfig;

use crate::baselines;
use crate::comparator::{
    evaluate_comparator, train, BoundaryEvaluation, EpochStats, TrainedComparator, TrainingMode,
};
use crate::csvfmt::format_float;
use crate::datagen::{build_anchor_pool, build_pairs, generate_population, split_items, DataSplit};
use crate::domain::{AnchorPool, Item, OrdinalScale};
use crate::error::{Error, Result};
use crate::metrics;
use crate::oracle::{ComparatorOracle, EmbeddedAnchors};
use crate::search::{allocate_budget, inbs, nnbs, NbsParams};

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn fnv1a(mut hash: u64, bytes: &[u8]) -> u64 {
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(FNV_PRIME);
    }
    hash
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Stable per-stage seed: hash of `(master, tag, index)` pushed through a
/// mixer so near-identical inputs land far apart.
pub fn derive_seed(master: u64, tag: &str, index: u64) -> u64 {
    let mut hash = fnv1a(FNV_OFFSET, &master.to_le_bytes());
    hash = fnv1a(hash, tag.as_bytes());
    hash = fnv1a(hash, &index.to_le_bytes());
    splitmix64(hash)
}

/// Which search runs on the comparison trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Nnbs,
    Inbs,
}

impl Algorithm {
    pub const ALL: [Algorithm; 2] = [Algorithm::Nnbs, Algorithm::Inbs];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Nnbs => "nnbs",
            Algorithm::Inbs => "inbs",
        }
    }
}

impl std::str::FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nnbs" => Ok(Algorithm::Nnbs),
            "inbs" => Ok(Algorithm::Inbs),
            other => Err(Error::InvalidArgument(format!(
                "unknown algorithm `{other}`, expected nnbs or inbs"
            ))),
        }
    }
}

/// Everything downstream stages need: data splits, the trained comparator
/// with its thresholds, its per-boundary validation quality, and the test
/// items with ground-truth categories.
#[derive(Debug, Clone)]
pub struct PreparedExperiment {
    pub scale: OrdinalScale,
    pub split: DataSplit,
    pub anchors: AnchorPool,
    pub embedded: EmbeddedAnchors,
    pub trained: TrainedComparator,
    pub evaluation: BTreeMap<usize, BoundaryEvaluation>,
    pub training_log: Vec<EpochStats>,
    pub params: NbsParams,
    pub test_items: Vec<Item>,
    pub test_truth: Vec<usize>,
}

impl PreparedExperiment {
    /// Validation AUC per interior boundary, required by budget allocation.
    pub fn boundary_aucs(&self) -> Result<BTreeMap<usize, f64>> {
        self.evaluation
            .iter()
            .map(|(&index, eval)| {
                eval.auc.map(|a| (index, a)).ok_or_else(|| {
                    Error::DataInsufficiency(format!(
                        "validation pairs at boundary index {index} contain a single class"
                    ))
                })
            })
            .collect()
    }
}

/// Runs the data and training pipeline: population, splits, anchor pools,
/// supervised pairs, comparator training, threshold selection, and
/// validation evaluation.
pub fn prepare(config: &ExperimentConfig, master_seed: u64) -> Result<PreparedExperiment> {
    config.validate()?;
    let scale = config
        .build_scale()
        .map_err(|e| Error::in_stage("scale", e))?;
    let population = generate_population(
        &config.population,
        derive_seed(master_seed, "population", 0),
    )
    .map_err(|e| Error::in_stage("population", e))?;
    let split = split_items(
        &population,
        &config.split,
        derive_seed(master_seed, "split", 0),
    )
    .map_err(|e| Error::in_stage("split", e))?;
    let anchors = build_anchor_pool(&split.anchor_items, &scale, config.anchors.gamma)
        .map_err(|e| Error::in_stage("anchors", e))?;

    let mode = config.comparator.mode;
    let training_pairs = build_pairs(
        &split.pair_items,
        &anchors,
        &scale,
        config.comparator.pairs_per_boundary,
        mode,
        derive_seed(master_seed, "pairs-train", 0),
    )
    .map_err(|e| Error::in_stage("pairs", e))?;
    let validation_pairs = build_pairs(
        &split.validation_items,
        &anchors,
        &scale,
        config.comparator.validation_pairs_per_boundary,
        mode,
        derive_seed(master_seed, "pairs-val", 0),
    )
    .map_err(|e| Error::in_stage("pairs", e))?;

    let mut training_config = config.training.clone();
    training_config.seed = derive_seed(master_seed, "training", 0);
    let outcome = train(
        config.population.feature_dim,
        config.comparator.embed_dim,
        &training_pairs,
        &validation_pairs,
        mode,
        &training_config,
    )
    .map_err(|e| Error::in_stage("training", e))?;

    let evaluation = evaluate_comparator(&outcome.comparator, &validation_pairs, mode)
        .map_err(|e| Error::in_stage("evaluation", e))?;
    let thresholds = evaluation
        .iter()
        .map(|(&index, eval)| (index, eval.threshold))
        .collect();
    let trained = TrainedComparator {
        comparator: outcome.comparator,
        mode,
        thresholds,
    };
    let embedded =
        EmbeddedAnchors::new(&trained, &anchors).map_err(|e| Error::in_stage("evaluation", e))?;

    let mut test_items = split.test_items.clone();
    if config.sweep.test_items > 0 {
        test_items.truncate(config.sweep.test_items);
    }
    let test_truth = test_items
        .iter()
        .map(|item| scale.category_of(item.latent_value))
        .collect::<Result<_>>()
        .map_err(|e| Error::in_stage("evaluation", e))?;

    Ok(PreparedExperiment {
        params: config.search.params_for(&scale),
        scale,
        split,
        anchors,
        embedded,
        trained,
        evaluation,
        training_log: outcome.epochs,
        test_items,
        test_truth,
    })
}

/// Quality of one repetition over the whole test set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RepMetrics {
    pub repetition: u32,
    pub accuracy: f64,
    pub mae: f64,
    pub tau: f64,
    pub mean_queries: f64,
}

/// All repetitions of one `(algorithm, budget)` combination.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepCell {
    pub algorithm: Algorithm,
    pub budget: u32,
    /// Comparison budget given to each boundary, summing to `budget`.
    pub trials: Vec<u32>,
    pub reps: Vec<RepMetrics>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellSummary {
    pub mean_accuracy: f64,
    pub std_accuracy: f64,
    pub mean_mae: f64,
    pub std_mae: f64,
    pub mean_tau: f64,
    pub std_tau: f64,
    pub mean_queries: f64,
}

fn mean_and_std(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let count = values.clone().count() as f64;
    let mean = values.clone().sum::<f64>() / count;
    let variance = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / count;
    (mean, variance.sqrt())
}

impl SweepCell {
    pub fn summary(&self) -> CellSummary {
        let (mean_accuracy, std_accuracy) = mean_and_std(self.reps.iter().map(|r| r.accuracy));
        let (mean_mae, std_mae) = mean_and_std(self.reps.iter().map(|r| r.mae));
        let (mean_tau, std_tau) = mean_and_std(self.reps.iter().map(|r| r.tau));
        let (mean_queries, _) = mean_and_std(self.reps.iter().map(|r| r.mean_queries));
        CellSummary {
            mean_accuracy,
            std_accuracy,
            mean_mae,
            std_mae,
            mean_tau,
            std_tau,
            mean_queries,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub cells: Vec<SweepCell>,
}

impl SweepReport {
    pub fn cell(&self, algorithm: Algorithm, budget: u32) -> Option<&SweepCell> {
        self.cells
            .iter()
            .find(|c| c.algorithm == algorithm && c.budget == budget)
    }
}

/// Runs every `(budget, algorithm, repetition, item)` combination.
///
/// Each repetition re-runs the searches on the same test items with fresh
/// oracle randomness; the item-level seed depends only on the repetition
/// and the item id, so all algorithms and budgets face identical anchor
/// draws.
pub fn run_sweep(
    prepared: &PreparedExperiment,
    config: &ExperimentConfig,
    master_seed: u64,
    algorithms: &[Algorithm],
) -> Result<SweepReport> {
    if algorithms.is_empty() {
        return Err(Error::InvalidArgument(
            "sweep needs at least one algorithm".to_string(),
        ));
    }
    if prepared.test_items.is_empty() {
        return Err(Error::DataInsufficiency("no test items".to_string()));
    }
    let aucs = prepared
        .boundary_aucs()
        .map_err(|e| Error::in_stage("budget", e))?;
    let mut cells = Vec::new();
    for &budget in &config.sweep.budgets {
        let trials = allocate_budget(&prepared.scale, &aucs, budget)
            .map_err(|e| Error::in_stage("budget", e))?;
        for &algorithm in algorithms {
            let mut reps = Vec::with_capacity(config.sweep.repetitions as usize);
            for rep in 0..config.sweep.repetitions {
                let rep_seed = derive_seed(master_seed, "rep", u64::from(rep));
                let mut predicted = Vec::with_capacity(prepared.test_items.len());
                let mut queries: u64 = 0;
                for item in &prepared.test_items {
                    let mut oracle = ComparatorOracle::new(
                        &prepared.trained,
                        &prepared.embedded,
                        &prepared.scale,
                        &item.features,
                        derive_seed(rep_seed, "item", item.id),
                    )
                    .map_err(|e| Error::in_stage("search", e))?;
                    let result = match algorithm {
                        Algorithm::Nnbs => {
                            nnbs(&mut oracle, &prepared.scale, &trials, &prepared.params)
                        }
                        Algorithm::Inbs => {
                            inbs(&mut oracle, &prepared.scale, &trials, &prepared.params)
                        }
                    }
                    .map_err(|e| Error::in_stage("search", e))?;
                    predicted.push(result.category_index);
                    queries += result.queries_used;
                }
                reps.push(RepMetrics {
                    repetition: rep,
                    accuracy: metrics::accuracy(&predicted, &prepared.test_truth)?,
                    mae: metrics::mean_absolute_error(&predicted, &prepared.test_truth)?,
                    tau: metrics::kendall_tau(&predicted, &prepared.test_truth)?,
                    mean_queries: queries as f64 / prepared.test_items.len() as f64,
                });
            }
            cells.push(SweepCell {
                algorithm,
                budget,
                trials: trials.clone(),
                reps,
            });
        }
    }
    Ok(SweepReport { cells })
}

/// One feature-based reference model's quality on the test items.
#[derive(Debug, Clone, PartialEq)]
pub struct BaselineRow {
    pub model: String,
    pub accuracy: f64,
    pub mae: f64,
    pub tau: f64,
}

/// Trains the linear classifier and regressor on the anchor and pair
/// splits combined, then scores them on the same test items the sweeps use.
pub fn run_baselines(
    prepared: &PreparedExperiment,
    config: &ExperimentConfig,
    master_seed: u64,
) -> Result<Vec<BaselineRow>> {
    let mut training: Vec<Item> = prepared.split.anchor_items.clone();
    training.extend(prepared.split.pair_items.iter().cloned());

    let mut classifier_config = config.training.clone();
    classifier_config.seed = derive_seed(master_seed, "baseline-classifier", 0);
    let classifier = baselines::train_classifier(
        &training,
        &prepared.split.validation_items,
        &prepared.scale,
        &classifier_config,
    )
    .map_err(|e| Error::in_stage("baselines", e))?;
    let regressor =
        baselines::train_regressor(&training).map_err(|e| Error::in_stage("baselines", e))?;

    let mut rows = Vec::new();
    let score = |model: &str, predicted: &[usize]| -> Result<BaselineRow> {
        Ok(BaselineRow {
            model: model.to_string(),
            accuracy: metrics::accuracy(predicted, &prepared.test_truth)?,
            mae: metrics::mean_absolute_error(predicted, &prepared.test_truth)?,
            tau: metrics::kendall_tau(predicted, &prepared.test_truth)?,
        })
    };
    let softmax_pred = prepared
        .test_items
        .iter()
        .map(|i| classifier.predict(&i.features))
        .collect::<Result<Vec<_>>>()
        .map_err(|e| Error::in_stage("baselines", e))?;
    rows.push(score("softmax", &softmax_pred)?);
    let regressor_pred = prepared
        .test_items
        .iter()
        .map(|i| regressor.predict_category(&i.features, &prepared.scale))
        .collect::<Result<Vec<_>>>()
        .map_err(|e| Error::in_stage("baselines", e))?;
    rows.push(score("regressor", &regressor_pred)?);
    Ok(rows)
}

fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(header)?;
    for row in rows {
        writer.write_record(row)?;
    }
    let bytes = writer
        .into_inner()
        .map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
    std::fs::write(path, bytes)?;
    Ok(())
}

/// Per-epoch loss curve of a training run.
pub fn write_training_log_csv(path: &Path, epochs: &[EpochStats]) -> Result<()> {
    let rows: Vec<Vec<String>> = epochs
        .iter()
        .map(|e| {
            vec![
                e.epoch.to_string(),
                format_float(e.train_loss),
                format_float(e.val_loss),
            ]
        })
        .collect();
    write_csv(path, &["epoch", "train_loss", "val_loss"], &rows)
}

/// Per-boundary comparator quality; an undefined AUC becomes an empty field.
pub fn write_evaluation_csv(
    path: &Path,
    scale: &OrdinalScale,
    evaluation: &BTreeMap<usize, BoundaryEvaluation>,
) -> Result<()> {
    let rows: Vec<Vec<String>> = evaluation
        .iter()
        .map(|(&index, eval)| {
            Ok(vec![
                index.to_string(),
                format_float(scale.boundary(index)?),
                eval.pairs.to_string(),
                format_float(eval.threshold),
                format_float(eval.accuracy),
                eval.auc.map(format_float).unwrap_or_default(),
            ])
        })
        .collect::<Result<_>>()?;
    write_csv(
        path,
        &[
            "boundary_index",
            "boundary_value",
            "pairs",
            "threshold",
            "accuracy",
            "auc",
        ],
        &rows,
    )
}

/// Aggregated sweep results, one row per `(algorithm, budget)`.
pub fn write_sweep_csv(path: &Path, report: &SweepReport) -> Result<()> {
    let rows: Vec<Vec<String>> = report
        .cells
        .iter()
        .map(|cell| {
            let s = cell.summary();
            vec![
                cell.algorithm.name().to_string(),
                cell.budget.to_string(),
                cell.reps.len().to_string(),
                format_float(s.mean_accuracy),
                format_float(s.std_accuracy),
                format_float(s.mean_mae),
                format_float(s.std_mae),
                format_float(s.mean_tau),
                format_float(s.std_tau),
                format_float(s.mean_queries),
            ]
        })
        .collect();
    write_csv(
        path,
        &[
            "algorithm",
            "budget",
            "repetitions",
            "mean_accuracy",
            "std_accuracy",
            "mean_mae",
            "std_mae",
            "mean_tau",
            "std_tau",
            "mean_queries",
        ],
        &rows,
    )
}

/// Raw per-repetition metrics, one row per `(algorithm, budget, repetition)`.
/// Aggregates in the sweep table can be recomputed from this file.
pub fn write_reps_csv(path: &Path, report: &SweepReport) -> Result<()> {
    let rows: Vec<Vec<String>> = report
        .cells
        .iter()
        .flat_map(|cell| {
            cell.reps.iter().map(|rep| {
                vec![
                    cell.algorithm.name().to_string(),
                    cell.budget.to_string(),
                    rep.repetition.to_string(),
                    format_float(rep.accuracy),
                    format_float(rep.mae),
                    format_float(rep.tau),
                    format_float(rep.mean_queries),
                ]
            })
        })
        .collect();
    write_csv(
        path,
        &[
            "algorithm",
            "budget",
            "repetition",
            "accuracy",
            "mae",
            "tau",
            "mean_queries",
        ],
        &rows,
    )
}

/// Budget-by-budget comparison of the two searches; deltas are the interval
/// search minus the naive search.
pub fn write_compare_csv(path: &Path, report: &SweepReport) -> Result<()> {
    let budgets: Vec<u32> = report
        .cells
        .iter()
        .map(|c| c.budget)
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .collect();
    let rows: Vec<Vec<String>> = budgets
        .iter()
        .map(|&budget| {
            let naive = report.cell(Algorithm::Nnbs, budget).ok_or_else(|| {
                Error::InvalidArgument(format!("no nnbs cell at budget {budget}"))
            })?;
            let interval = report.cell(Algorithm::Inbs, budget).ok_or_else(|| {
                Error::InvalidArgument(format!("no inbs cell at budget {budget}"))
            })?;
            let n = naive.summary();
            let i = interval.summary();
            Ok(vec![
                budget.to_string(),
                format_float(n.mean_accuracy),
                format_float(i.mean_accuracy),
                format_float(i.mean_accuracy - n.mean_accuracy),
                format_float(n.std_accuracy),
                format_float(i.std_accuracy),
                format_float(n.mean_mae),
                format_float(i.mean_mae),
                format_float(i.mean_mae - n.mean_mae),
                format_float(n.mean_tau),
                format_float(i.mean_tau),
                format_float(i.mean_tau - n.mean_tau),
                format_float(n.mean_queries),
                format_float(i.mean_queries),
            ])
        })
        .collect::<Result<_>>()?;
    write_csv(
        path,
        &[
            "budget",
            "nnbs_mean_accuracy",
            "inbs_mean_accuracy",
            "accuracy_delta",
            "nnbs_std_accuracy",
            "inbs_std_accuracy",
            "nnbs_mean_mae",
            "inbs_mean_mae",
            "mae_delta",
            "nnbs_mean_tau",
            "inbs_mean_tau",
            "tau_delta",
            "nnbs_mean_queries",
            "inbs_mean_queries",
        ],
        &rows,
    )
}

/// Reference comparison on one shared test set.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceTable {
    pub rows: Vec<BaselineRow>,
    pub test_items: usize,
}

/// Side-by-side table with every trained setup on the shared test items:
/// the feature baselines plus both searches at the largest configured
/// budget, each averaged over the configured repetitions.
pub fn run_reference_table(config: &ExperimentConfig, master_seed: u64) -> Result<ReferenceTable> {
    let mut binary_config = config.clone();
    binary_config.comparator.mode = TrainingMode::Binary;
    let mut soft_config = config.clone();
    soft_config.comparator.mode = TrainingMode::Soft;
    let prepared_binary = prepare(&binary_config, master_seed)?;
    let prepared_soft = prepare(&soft_config, master_seed)?;

    let mut rows = run_baselines(&prepared_binary, config, master_seed)?;
    let budget = *config
        .sweep
        .budgets
        .iter()
        .max()
        .expect("validated configs have budgets");
    let mut single = config.clone();
    single.sweep.budgets = vec![budget];
    let mut push_cells =
        |prepared: &PreparedExperiment, algorithms: &[Algorithm], tag: &str| -> Result<()> {
            let report = run_sweep(prepared, &single, master_seed, algorithms)?;
            for cell in &report.cells {
                let s = cell.summary();
                rows.push(BaselineRow {
                    model: format!("{}-{tag}", cell.algorithm.name()),
                    accuracy: s.mean_accuracy,
                    mae: s.mean_mae,
                    tau: s.mean_tau,
                });
            }
            Ok(())
        };
    push_cells(&prepared_binary, &[Algorithm::Nnbs], "binary")?;
    push_cells(&prepared_soft, &Algorithm::ALL, "soft")?;
    Ok(ReferenceTable {
        test_items: prepared_binary.test_items.len(),
        rows,
    })
}

/// Reference model results on the shared test items.
pub fn write_baselines_csv(path: &Path, rows: &[BaselineRow], test_items: usize) -> Result<()> {
    let records: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.model.clone(),
                test_items.to_string(),
                format_float(r.accuracy),
                format_float(r.mae),
                format_float(r.tau),
            ]
        })
        .collect();
    write_csv(
        path,
        &["model", "test_items", "accuracy", "mae", "tau"],
        &records,
    )
}
