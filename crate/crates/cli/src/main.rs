//! Command line front end for the ordinal estimator.
//!
//! Every subcommand is a pure function of `(--config, --seed)`: running it
//! twice produces byte-identical output files.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use onbs_core::comparator::TrainingMode;
use onbs_core::datagen::{generate_population, write_items_csv};
use onbs_core::experiment::{
    self, derive_seed, prepare, run_reference_table, run_sweep, Algorithm, ExperimentConfig,
    PreparedExperiment, SweepReport,
};
use onbs_core::{Error, Result};

#[derive(Parser)]
#[command(
    name = "onbs",
    version,
    about = "Ordinal category estimation by noisy binary search"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment config in TOML; built-in defaults apply when omitted
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Master seed; every random stage derives its own stream from it
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Output directory, created if missing
    #[arg(long, value_name = "DIR", default_value = "out")]
    out: PathBuf,
}

/// Comparator training mode: 1 = binary targets with cross-entropy,
/// 2 = pairwise-probability targets with squared error.
#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    #[value(name = "1")]
    Binary,
    #[value(name = "2")]
    Soft,
}

impl From<ModeArg> for TrainingMode {
    fn from(mode: ModeArg) -> Self {
        match mode {
            ModeArg::Binary => TrainingMode::Binary,
            ModeArg::Soft => TrainingMode::Soft,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum AlgorithmArg {
    Nnbs,
    Inbs,
}

impl From<AlgorithmArg> for Algorithm {
    fn from(algorithm: AlgorithmArg) -> Self {
        match algorithm {
            AlgorithmArg::Nnbs => Algorithm::Nnbs,
            AlgorithmArg::Inbs => Algorithm::Inbs,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate the synthetic population and write it as CSV
    Generate {
        #[command(flatten)]
        common: Common,
    },
    /// Train the pairwise comparator; save the model, loss curve, and
    /// per-boundary evaluation
    Train {
        #[command(flatten)]
        common: Common,
        /// Override the training mode from the config
        #[arg(long)]
        mode: Option<ModeArg>,
    },
    /// Print and save the per-boundary comparator accuracy/AUC table
    Evaluate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        mode: Option<ModeArg>,
    },
    /// Run one search algorithm across the configured budget grid
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        mode: Option<ModeArg>,
        #[arg(long, value_enum, default_value_t = AlgorithmArg::Nnbs)]
        algorithm: AlgorithmArg,
    },
    /// Run both search algorithms on an identical seed schedule
    Compare {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        mode: Option<ModeArg>,
    },
    /// Compare the searches against the linear feature baselines
    Baselines {
        #[command(flatten)]
        common: Common,
    },
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn load_config(common: &Common, mode: Option<ModeArg>) -> Result<ExperimentConfig> {
    let mut config = match &common.config {
        Some(path) => ExperimentConfig::from_toml_path(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(mode) = mode {
        config.comparator.mode = mode.into();
    }
    config.validate()?;
    std::fs::create_dir_all(&common.out)?;
    Ok(config)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate { common } => {
            let config = load_config(&common, None)?;
            let population = generate_population(
                &config.population,
                derive_seed(common.seed, "population", 0),
            )?;
            let path = common.out.join("items.csv");
            write_items_csv(&path, &population)?;
            println!("wrote {} items to {}", population.len(), path.display());
            Ok(())
        }
        Command::Train { common, mode } => {
            let config = load_config(&common, mode)?;
            let prepared = prepare(&config, common.seed)?;
            let tag = config.comparator.mode.file_tag();
            let model_path = common.out.join(format!("comparator-{tag}.txt"));
            prepared.trained.save(&model_path)?;
            let log_path = common.out.join(format!("training-log-{tag}.csv"));
            experiment::write_training_log_csv(&log_path, &prepared.training_log)?;
            let eval_path = common.out.join(format!("evaluation-{tag}.csv"));
            experiment::write_evaluation_csv(&eval_path, &prepared.scale, &prepared.evaluation)?;
            println!(
                "trained {} epochs; wrote {}, {}, {}",
                prepared.training_log.len(),
                model_path.display(),
                log_path.display(),
                eval_path.display()
            );
            Ok(())
        }
        Command::Evaluate { common, mode } => {
            let config = load_config(&common, mode)?;
            let prepared = prepare(&config, common.seed)?;
            print_evaluation(&prepared)?;
            let tag = config.comparator.mode.file_tag();
            let eval_path = common.out.join(format!("evaluation-{tag}.csv"));
            experiment::write_evaluation_csv(&eval_path, &prepared.scale, &prepared.evaluation)?;
            println!("wrote {}", eval_path.display());
            Ok(())
        }
        Command::Sweep {
            common,
            mode,
            algorithm,
        } => {
            let config = load_config(&common, mode)?;
            let algorithm = Algorithm::from(algorithm);
            let prepared = prepare(&config, common.seed)?;
            let report = run_sweep(&prepared, &config, common.seed, &[algorithm])?;
            print_sweep(&report);
            write_sweep_outputs(&common.out, &config, &report, &[algorithm])
        }
        Command::Compare { common, mode } => {
            let config = load_config(&common, mode)?;
            let prepared = prepare(&config, common.seed)?;
            let report = run_sweep(&prepared, &config, common.seed, &Algorithm::ALL)?;
            print_sweep(&report);
            let tag = config.comparator.mode.file_tag();
            let compare_path = common.out.join(format!("compare-{tag}.csv"));
            experiment::write_compare_csv(&compare_path, &report)?;
            println!("wrote {}", compare_path.display());
            write_sweep_outputs(&common.out, &config, &report, &Algorithm::ALL)
        }
        Command::Baselines { common } => {
            let config = load_config(&common, None)?;
            let table = run_reference_table(&config, common.seed)?;
            println!(
                "{:<14} {:>9} {:>9} {:>9}",
                "model", "accuracy", "mae", "tau"
            );
            for row in &table.rows {
                println!(
                    "{:<14} {:>9.4} {:>9.4} {:>9.4}",
                    row.model, row.accuracy, row.mae, row.tau
                );
            }
            let path = common.out.join("baselines.csv");
            experiment::write_baselines_csv(&path, &table.rows, table.test_items)?;
            println!("wrote {}", path.display());
            Ok(())
        }
    }
}

fn print_evaluation(prepared: &PreparedExperiment) -> Result<()> {
    println!(
        "{:>8} {:>10} {:>7} {:>10} {:>9} {:>7}",
        "boundary", "value", "pairs", "threshold", "accuracy", "auc"
    );
    for (&index, eval) in &prepared.evaluation {
        let auc = eval
            .auc
            .map(|a| format!("{a:.4}"))
            .unwrap_or_else(|| "n/a".to_string());
        println!(
            "{index:>8} {:>10.3} {:>7} {:>10.4} {:>9.4} {auc:>7}",
            prepared.scale.boundary(index)?,
            eval.pairs,
            eval.threshold,
            eval.accuracy
        );
    }
    Ok(())
}

fn print_sweep(report: &SweepReport) {
    println!(
        "{:<5} {:>6} {:>9} {:>9} {:>9} {:>9} {:>12}",
        "algo", "budget", "mean_acc", "std_acc", "mean_mae", "mean_tau", "mean_queries"
    );
    for cell in &report.cells {
        let s = cell.summary();
        println!(
            "{:<5} {:>6} {:>9.4} {:>9.4} {:>9.4} {:>9.4} {:>12.1}",
            cell.algorithm.name(),
            cell.budget,
            s.mean_accuracy,
            s.std_accuracy,
            s.mean_mae,
            s.mean_tau,
            s.mean_queries
        );
    }
}

fn write_sweep_outputs(
    out: &Path,
    config: &ExperimentConfig,
    report: &SweepReport,
    algorithms: &[Algorithm],
) -> Result<()> {
    let tag = config.comparator.mode.file_tag();
    for &algorithm in algorithms {
        let cells: Vec<_> = report
            .cells
            .iter()
            .filter(|c| c.algorithm == algorithm)
            .cloned()
            .collect();
        if cells.is_empty() {
            return Err(Error::InvalidArgument(format!(
                "no sweep results for {}",
                algorithm.name()
            )));
        }
        let filtered = SweepReport { cells };
        let sweep_path = out.join(format!("sweep-{}-{tag}.csv", algorithm.name()));
        experiment::write_sweep_csv(&sweep_path, &filtered)?;
        let reps_path = out.join(format!("reps-{}-{tag}.csv", algorithm.name()));
        experiment::write_reps_csv(&reps_path, &filtered)?;
        println!("wrote {} and {}", sweep_path.display(), reps_path.display());
    }
    Ok(())
}
