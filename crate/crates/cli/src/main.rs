use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use log::info;

use multifit::datasets::{write_cache, write_long_csv};
use multifit::experiment::{
    evaluate_model, load_model, load_source, missingness_sweep, prepare_for_seed, run_experiment, save_model,
    ExperimentConfig, ResultsDocument, RunResult, Timing, TrainHistory,
};
use multifit::{Error, Result};

#[derive(Parser)]
#[command(name = "multifit", version, about = "Train and evaluate FIT-family classifiers on irregular time series")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML experiment config; built-in defaults when omitted.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Override a config key, e.g. `--set training.epochs=20`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Output directory (overrides `output.dir`).
    #[arg(short, long)]
    out: Option<PathBuf>,
}

impl Common {
    fn load(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path, &self.overrides)?,
            None => ExperimentConfig::from_toml_with_overrides("", &self.overrides)?,
        };
        if let Some(out) = &self.out {
            cfg.output.dir = out.clone();
        }
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic cohort as long-format CSV (data.csv, labels.csv).
    GenSynth(Common),
    /// Parse the configured source, build features and write a cache directory.
    PrepareData {
        #[command(flatten)]
        common: Common,
        /// Seed for the split and injected missingness; defaults to the first configured seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Train the configured model for every seed; writes results.json and models/.
    Train(Common),
    /// Re-evaluate models saved by `train` on their test splits.
    Evaluate {
        #[command(flatten)]
        common: Common,
        /// Directory written by `train`.
        #[arg(long)]
        run_dir: PathBuf,
    },
    /// Train every sweep model at every missingness fraction; writes sweep.csv.
    SweepMissingness(Common),
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Io { path: dir.to_path_buf(), source: e })
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::Io { path: path.to_path_buf(), source: e })?;
    info!("wrote {}", path.display());
    Ok(())
}

fn write_results(dir: &Path, file: &str, mut doc: ResultsDocument, start: Instant) -> Result<()> {
    doc.timing = Some(Timing::since(start));
    write(&dir.join(file), &doc.to_json()?)
}

fn model_file(run: &RunResult) -> String {
    format!("{}-seed{}.json", run.model, run.seed)
}

fn run(command: Command) -> Result<()> {
    let start = Instant::now();
    match command {
        Command::GenSynth(common) => {
            let cfg = common.load()?;
            let dir = &cfg.output.dir;
            create_dir(dir)?;
            let records = multifit::datasets::generate_synthetic(&cfg.synthetic)?;
            let (data, labels) = write_long_csv(&cfg.synthetic.signal_names(), &records)?;
            write(&dir.join("data.csv"), &data)?;
            write(&dir.join("labels.csv"), &labels)?;
            println!("{} records written to {}", records.len(), dir.display());
        }
        Command::PrepareData { common, seed } => {
            let cfg = common.load()?;
            let seed = seed.unwrap_or(cfg.training.seeds[0]);
            let source = load_source(&cfg, cfg.exec)?;
            let ds = prepare_for_seed(&cfg, &source, seed, cfg.training.missing, cfg.exec)?;
            let manifest = write_cache(&cfg.output.dir, &ds)?;
            println!(
                "cached {} records ({} dropped observations) in {}",
                manifest.record_count,
                manifest.dropped_observations,
                cfg.output.dir.display()
            );
        }
        Command::Train(common) => {
            let cfg = common.load()?;
            let dir = cfg.output.dir.clone();
            let models_dir = dir.join("models");
            create_dir(&models_dir)?;
            let source = load_source(&cfg, cfg.exec)?;
            let outcomes = run_experiment(&cfg, &source, cfg.exec)?;
            let mut runs = Vec::with_capacity(outcomes.len());
            for (model, result) in outcomes {
                save_model(&models_dir.join(model_file(&result)), &model)?;
                runs.push(result);
            }
            let doc = ResultsDocument::new("train", &cfg, runs);
            if let Some(agg) = &doc.aggregate {
                println!(
                    "{}: test macro-F median {:.4} (mean {:.4}) over seeds {:?}",
                    agg.model, agg.test_macro_f.median, agg.test_macro_f.mean, agg.seeds
                );
            }
            write_results(&dir, "results.json", doc, start)?;
        }
        Command::Evaluate { common, run_dir } => {
            let path = run_dir.join("results.json");
            let text = std::fs::read_to_string(&path).map_err(|e| Error::Io { path: path.clone(), source: e })?;
            let trained = ResultsDocument::from_json(&text)?;
            let cfg = match &common.config {
                Some(_) => common.load()?,
                None => {
                    let mut cfg = trained.config.clone();
                    let text = cfg.to_toml()?;
                    cfg = ExperimentConfig::from_toml_with_overrides(&text, &common.overrides)?;
                    if let Some(out) = &common.out {
                        cfg.output.dir = out.clone();
                    }
                    cfg
                }
            };
            let source = load_source(&cfg, cfg.exec)?;
            let mut runs = Vec::new();
            for t in &trained.runs {
                let model = load_model(&run_dir.join("models").join(model_file(t)))?;
                let ds = prepare_for_seed(&cfg, &source, t.seed, t.missing, cfg.exec)?;
                runs.push(RunResult {
                    model: t.model,
                    seed: t.seed,
                    missing: t.missing,
                    epochs_run: t.epochs_run,
                    history: TrainHistory::default(),
                    validation: evaluate_model(&model, &ds.validation(), cfg.exec)?,
                    test: evaluate_model(&model, &ds.test(), cfg.exec)?,
                });
            }
            let doc = ResultsDocument::new("evaluate", &cfg, runs);
            if let Some(agg) = &doc.aggregate {
                println!("{}: test macro-F median {:.4} over seeds {:?}", agg.model, agg.test_macro_f.median, agg.seeds);
            }
            let out = common.out.clone().unwrap_or(run_dir);
            create_dir(&out)?;
            write_results(&out, "evaluation.json", doc, start)?;
        }
        Command::SweepMissingness(common) => {
            let cfg = common.load()?;
            create_dir(&cfg.output.dir)?;
            let source = load_source(&cfg, cfg.exec)?;
            let table = missingness_sweep(&cfg, &source, &cfg.sweep.fractions, &cfg.sweep.models, cfg.exec)?;
            for r in table.rows.iter().filter(|r| r.seed.is_none()) {
                let f = r.test_macro_f.map_or("n/a".to_string(), |f| format!("{f:.4}"));
                println!("{:<12} p = {:.2}: median test macro-F {f} ({})", r.model.to_string(), r.fraction, r.status);
            }
            write(&cfg.output.dir.join("sweep.csv"), &table.to_csv()?)?;
        }
    }
    Ok(())
}

fn exit_code(e: &Error) -> u8 {
    match e.category() {
        "config" => 2,
        "io" => 3,
        "parse" => 4,
        "cache" => 5,
        "numeric" => 6,
        _ => 70,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error [{}]: {e}", e.category());
            ExitCode::from(exit_code(&e))
        }
    }
}
