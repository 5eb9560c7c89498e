mod config;

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;
use wkpnet::artifact::{write_atomic, write_dir_atomic};
use wkpnet::locate::summarize_errors;
use wkpnet::models::{count_complexity, MacConvention};
use wkpnet::pipeline::{
    evaluate, featurize_split, load_checkpoint, model_graph, run_experiment_grid, test_splits, train, CellOutcome,
    GridModels, ModelChoice, TrainConfig, TrainMode,
};
use wkpnet::signalgen::{generate_dataset, Dataset};
use wkpnet::{Error, Result};

use config::{schema, RunConfig};

#[derive(Parser)]
#[command(name = "wkpnet", version, about = "FM fingerprint positioning: data, training, evaluation")]
struct Cli {
    /// Print the configuration file format with defaults and exit.
    #[arg(long)]
    print_schema: bool,
    #[command(subcommand)]
    verb: Option<Verb>,
}

#[derive(Args)]
struct Common {
    /// TOML run configuration; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the seed of the stochastic step this verb runs.
    #[arg(long)]
    seed: Option<u64>,
    /// Replace existing outputs.
    #[arg(long)]
    overwrite: bool,
}

#[derive(Args)]
struct DataArg {
    /// Dataset directory (defaults to `paths.dataset`).
    #[arg(long)]
    data: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    Teacher,
    Student,
}

#[derive(Clone, Copy, ValueEnum)]
enum MacArg {
    Mac1,
    Mac2,
}

#[derive(Subcommand)]
enum Verb {
    /// Generate a synthetic recording set.
    GenDataset {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train the teacher network.
    TrainTeacher {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        data: DataArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train the student by distillation from a teacher checkpoint.
    Distill {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        data: DataArg,
        #[arg(long)]
        teacher: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train the student on labels alone.
    TrainPlain {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        data: DataArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the experiment grid and write the consolidated CSV.
    Grid {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        data: DataArg,
        /// Concurrent work units.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate a checkpoint on the dataset's test splits.
    Evaluate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        data: DataArg,
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long, value_enum)]
        model: ModelArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print per-layer parameter and FLOP counts.
    Complexity {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        model: ModelArg,
        #[arg(long, default_value_t = 100)]
        classes: usize,
        #[arg(long, value_enum, default_value = "mac1")]
        mac: MacArg,
        /// Also write the report here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::Parameter(_) | Error::UnsupportedFamily(_) => 3,
        Error::RejectedInput(_)
        | Error::Shape(_)
        | Error::EmptySet(_)
        | Error::DegenerateBatch(_)
        | Error::Format { .. }
        | Error::Io { .. } => 4,
        Error::Incompatible(_) => 5,
        Error::Divergence { .. } => 6,
        Error::OutputExists(_) => 7,
    }
}

/// Exit code when some grid cells failed.
const PARTIAL_FAILURE: u8 = 8;

fn init_logging() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format(|buf, record| {
            writeln!(
                buf,
                "ts={} level={} {}",
                buf.timestamp_millis(),
                record.level().as_str().to_ascii_lowercase(),
                record.args()
            )
        })
        .init();
}

fn load_config(common: &Common) -> Result<RunConfig> {
    let cfg = match &common.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    info!(
        "event=config source={} hash={}",
        common.config.as_deref().map(Path::display).map(|d| d.to_string()).unwrap_or_else(|| "defaults".into()),
        cfg.content_hash()?
    );
    Ok(cfg)
}

fn open_data(cfg: &RunConfig, data: &DataArg) -> Result<Dataset> {
    Dataset::open(data.data.as_deref().unwrap_or(&cfg.paths.dataset))
}

fn train_config(cfg: &RunConfig, common: &Common, model: ModelChoice, mode: TrainMode) -> TrainConfig {
    TrainConfig {
        seed: common.seed.unwrap_or(cfg.train.seed),
        model,
        mode,
        ..cfg.train.clone()
    }
}

fn run(verb: Verb) -> Result<u8> {
    match verb {
        Verb::GenDataset { common, out } => {
            let mut cfg = load_config(&common)?;
            if let Some(seed) = common.seed {
                cfg.signal.seed = seed;
            }
            let m = generate_dataset(&cfg.signal, &out, common.overwrite)?;
            info!(
                "event=dataset_written out={} examples={} points={} hash={}",
                out.display(),
                m.examples.len(),
                m.points.len(),
                m.config_hash
            );
        }
        Verb::TrainTeacher { common, data, out } => {
            let cfg = load_config(&common)?;
            let ds = open_data(&cfg, &data)?;
            let tc = train_config(&cfg, &common, cfg.models.teacher(), TrainMode::Plain);
            train(&ds, &tc, &out, common.overwrite)?;
        }
        Verb::Distill {
            common,
            data,
            teacher,
            out,
        } => {
            let cfg = load_config(&common)?;
            let ds = open_data(&cfg, &data)?;
            let mode = TrainMode::Distill {
                checkpoint: teacher,
                teacher_scale: cfg.models.teacher_scale,
            };
            let tc = train_config(&cfg, &common, cfg.models.student(), mode);
            train(&ds, &tc, &out, common.overwrite)?;
        }
        Verb::TrainPlain { common, data, out } => {
            let cfg = load_config(&common)?;
            let ds = open_data(&cfg, &data)?;
            let tc = train_config(&cfg, &common, cfg.models.student(), TrainMode::Plain);
            train(&ds, &tc, &out, common.overwrite)?;
        }
        Verb::Grid {
            common,
            data,
            jobs,
            out,
        } => {
            let cfg = load_config(&common)?;
            let ds = open_data(&cfg, &data)?;
            let mut spec = cfg.grid.clone();
            if let Some(seed) = common.seed {
                spec.seeds = vec![seed];
            }
            let models = GridModels {
                teacher: cfg.models.teacher_scale,
                student_width: cfg.models.student_width,
            };
            let report = run_experiment_grid(&ds, &spec, models, &cfg.train, &out, jobs, common.overwrite)?;
            let failed = report.outcomes.iter().filter(|o: &&CellOutcome| o.result.is_err()).count();
            if failed > 0 {
                log::warn!("event=grid_partial failed={failed} total={}", report.outcomes.len());
                return Ok(PARTIAL_FAILURE);
            }
        }
        Verb::Evaluate {
            common,
            data,
            checkpoint,
            model,
            out,
        } => {
            let cfg = load_config(&common)?;
            let ds = open_data(&cfg, &data)?;
            let choice = match model {
                ModelArg::Teacher => cfg.models.teacher(),
                ModelArg::Student => cfg.models.student(),
            };
            let featurizer = cfg.train.featurizer.prepare()?;
            let graph = model_graph(&ds, &featurizer, choice)?;
            let mut net = load_checkpoint(&ds, cfg.train.featurizer, &graph, &checkpoint)?;
            let coords: Vec<(f64, f64)> = ds.manifest.points.iter().map(|p| p.coord).collect();
            let mut files = Vec::new();
            let mut summary = String::from("split,examples,accuracy,mde,std\n");
            for split in test_splits(&ds) {
                let set = featurize_split(&ds, split, &featurizer)?;
                let e = evaluate(&mut net, &set, split, &coords)?;
                let metrics = if cfg.evaluation.thresholds.is_empty() {
                    e.metrics.clone()
                } else {
                    let errors: Vec<f64> = e.metrics.empirical.iter().map(|p| p.0).collect();
                    summarize_errors(&errors, Some(&cfg.evaluation.thresholds))?
                };
                summary.push_str(&format!("{split},{},{},{},{}\n", e.examples, e.accuracy, metrics.mde, metrics.std));
                info!("event=evaluated split={split} accuracy={:.4} mde={:.4} std={:.4}", e.accuracy, metrics.mde, metrics.std);
                files.push((format!("cdf-{split}.csv"), metrics.to_csv()));
            }
            files.push(("summary.csv".into(), summary));
            write_dir_atomic(&out, common.overwrite, |dir| {
                files.iter().try_for_each(|(name, text)| write_atomic(&dir.join(name), text.as_bytes()))
            })?;
        }
        Verb::Complexity {
            common,
            model,
            classes,
            mac,
            out,
        } => {
            let cfg = load_config(&common)?;
            let featurizer = cfg.train.featurizer.prepare()?;
            let shape = featurizer.input_shape(cfg.signal.window_len)?;
            let choice = match model {
                ModelArg::Teacher => cfg.models.teacher(),
                ModelArg::Student => cfg.models.student(),
            };
            let graph = choice.graph(classes, shape)?;
            let convention = match mac {
                MacArg::Mac1 => MacConvention::One,
                MacArg::Mac2 => MacConvention::Two,
            };
            let report = count_complexity(&graph, shape, convention)?;
            println!("{report}");
            if let Some(out) = out {
                wkpnet::artifact::ensure_writable(&out, common.overwrite)?;
                write_atomic(&out, format!("{report}\n").as_bytes())?;
            }
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.print_schema {
        print!("{}", schema());
        return ExitCode::SUCCESS;
    }
    let Some(verb) = cli.verb else {
        eprintln!("error: a verb is required (see --help)");
        return ExitCode::from(2);
    };
    init_logging();
    match run(verb) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            log::error!("event=failed code={} error=\"{e}\"", exit_code(&e));
            ExitCode::from(exit_code(&e))
        }
    }
}
