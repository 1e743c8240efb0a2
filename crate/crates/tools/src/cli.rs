//! The `last` command line: `train`, `eval`, `landscape`, `transfer`, `gradmap`.
//!
//! Exit codes: 0 ok, 2 config error, 3 io error, 4 numerical abort,
//! 5 checkpoint incompatible with the data.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use last_core::evaluator::{self, EvalError, ModelRef};
use last_core::trainer::{self, RunStatus, TrainError};
use last_core::{Checkpoint, Dataset};
use serde_json::json;

use crate::config::{is_override, RunConfig};
use crate::datasets::{load_datasets, LoadError};
use crate::exports::{self, EvalRow};
use crate::formats::{load_checkpoint, save_checkpoint};
use crate::parallel::evaluate_parallel;

#[derive(Parser, Debug)]
#[command(
    name = "last",
    version,
    about = "Adversarial training with proxy-guided updates",
    after_help = "Any config key can be overridden as --section.key=value, e.g. --train.gamma=0.5"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Train a model and write metrics, checkpoints and a manifest.
    Train(Common),
    /// Report clean and robust accuracy of a checkpoint for each configured attack.
    Eval(WithCheckpoint),
    /// Sample the adversarial loss surface around one test example.
    Landscape(WithSample),
    /// Robust accuracy of every model against attacks crafted on every other.
    Transfer(WithCheckpoints),
    /// Normalized input-gradient magnitude of one test example, per channel.
    Gradmap(WithSample),
}

#[derive(Args, Debug)]
struct Common {
    /// TOML config file; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (overrides run.out_dir).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for evaluation. Training is always single-threaded.
    #[arg(long, default_value_t = 1)]
    threads: usize,
}

#[derive(Args, Debug)]
struct WithCheckpoint {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    checkpoint: PathBuf,
}

#[derive(Args, Debug)]
struct WithSample {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    checkpoint: PathBuf,
    /// Test-set index (overrides the config).
    #[arg(long)]
    sample: Option<usize>,
}

#[derive(Args, Debug)]
struct WithCheckpoints {
    #[command(flatten)]
    common: Common,
    /// Repeat for each model; falls back to transfer.checkpoints.
    #[arg(long)]
    checkpoint: Vec<PathBuf>,
}

#[derive(Debug)]
enum Failure {
    Config(String),
    Io(String),
    Numeric(String),
    Mismatch(String),
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Config(_) => 2,
            Failure::Io(_) => 3,
            Failure::Numeric(_) => 4,
            Failure::Mismatch(_) => 5,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Config(m) | Failure::Io(m) | Failure::Numeric(m) | Failure::Mismatch(m) => m,
        }
    }
}

fn io_failure(what: &str, e: impl std::fmt::Display) -> Failure {
    Failure::Io(format!("{what}: {e}"))
}

fn from_load(e: LoadError) -> Failure {
    if e.is_io() {
        Failure::Io(format!("loading data: {e}"))
    } else {
        Failure::Config(format!("loading data: {e}"))
    }
}

fn from_train(e: TrainError) -> Failure {
    if e.is_numerical() {
        Failure::Numeric(e.to_string())
    } else {
        Failure::Config(e.to_string())
    }
}

fn from_eval(e: EvalError) -> Failure {
    from_train(TrainError::Eval(e))
}

/// Runs the command line and returns the process exit code.
pub fn run<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    let (overrides, rest): (Vec<String>, Vec<String>) = args.into_iter().map(Into::into).partition(|a| is_override(a));
    let cli = match Cli::try_parse_from(rest) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command, &overrides) {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("error: {}", f.message());
            f.code()
        }
    }
}

fn dispatch(command: Command, overrides: &[String]) -> Result<(), Failure> {
    match command {
        Command::Train(c) => cmd_train(&resolve(&c, overrides)?),
        Command::Eval(a) => cmd_eval(&resolve(&a.common, overrides)?, &a.checkpoint, a.common.threads),
        Command::Landscape(a) => cmd_landscape(&resolve(&a.common, overrides)?, &a.checkpoint, a.sample),
        Command::Transfer(a) => cmd_transfer(&resolve(&a.common, overrides)?, &a.checkpoint),
        Command::Gradmap(a) => cmd_gradmap(&resolve(&a.common, overrides)?, &a.checkpoint, a.sample),
    }
}

fn resolve(common: &Common, overrides: &[String]) -> Result<RunConfig, Failure> {
    let mut cfg = RunConfig::load(common.config.as_deref(), overrides).map_err(|e| match e {
        crate::config::ConfigError::Read { .. } => Failure::Io(e.to_string()),
        _ => Failure::Config(e.to_string()),
    })?;
    if let Some(out) = &common.out {
        cfg.run.out_dir = out.clone();
    }
    fs::create_dir_all(&cfg.run.out_dir).map_err(|e| io_failure("creating output directory", e))?;
    Ok(cfg)
}

fn write_manifest(cfg: &RunConfig, command: &str) -> Result<(), Failure> {
    let text = format!(
        "# last {} {command}\n# checkpoint format {}, dtype {}\n# rerun with: last {command} --config <this file>\n\n{}",
        env!("CARGO_PKG_VERSION"),
        Checkpoint::FORMAT_VERSION,
        Checkpoint::DTYPE,
        cfg.to_toml()
    );
    fs::write(cfg.run.out_dir.join("manifest.toml"), text).map_err(|e| io_failure("writing manifest", e))
}

fn cmd_train(cfg: &RunConfig) -> Result<(), Failure> {
    let (train, test) = load_datasets(cfg).map_err(from_load)?;
    let spec = cfg.network_spec(train.dim(), train.num_classes()).map_err(Failure::Config)?;
    let tcfg = cfg.training_config().map_err(Failure::Config)?;
    write_manifest(cfg, "train")?;
    let start = Instant::now();
    let wall = cfg.run.wall_clock;
    let mut clock = || if wall { start.elapsed().as_secs_f64() } else { 0.0 };
    let outcome = trainer::train(&spec, &tcfg, &train, &test, &mut clock).map_err(from_train)?;
    let dir = &cfg.run.out_dir;
    exports::write_metrics(dir, &outcome.metrics).map_err(|e| io_failure("writing metrics", e))?;
    save_checkpoint(&dir.join("final.ckpt"), &outcome.final_checkpoint).map_err(|e| io_failure("writing checkpoint", e))?;
    save_checkpoint(&dir.join("best.ckpt"), &outcome.best_checkpoint).map_err(|e| io_failure("writing checkpoint", e))?;
    let status = match &outcome.status {
        RunStatus::Completed => json!({ "status": "completed" }),
        RunStatus::Aborted { epoch, iteration, detail } => {
            json!({ "status": "aborted", "epoch": epoch, "iteration": iteration, "detail": detail })
        }
    };
    let summary = json!({
        "run": status,
        "collapse_epoch": outcome.collapse_epoch,
        "epochs_completed": outcome.metrics.len(),
    });
    fs::write(dir.join("summary.json"), format!("{summary:#}\n")).map_err(|e| io_failure("writing summary", e))?;
    if let Some(m) = outcome.metrics.last() {
        println!(
            "epoch {} train_loss {:.4} sa {:.2} ra {:.2}",
            m.epoch, m.train_loss, m.test_standard_accuracy, m.test_robust_accuracy
        );
    }
    if let Some(e) = outcome.collapse_epoch {
        eprintln!("warning: robust accuracy collapsed (zero since epoch {})", e + 1 - trainer::COLLAPSE_EPOCHS);
    }
    match outcome.status {
        RunStatus::Completed => Ok(()),
        RunStatus::Aborted { epoch, iteration, detail } => Err(Failure::Numeric(format!(
            "training aborted at epoch {epoch}, iteration {iteration}: {detail}"
        ))),
    }
}

fn load_model(path: &Path, test: &Dataset) -> Result<Checkpoint, Failure> {
    let ck = load_checkpoint(path).map_err(|e| io_failure(&format!("loading {}", path.display()), e))?;
    if ck.spec.input_dim != test.dim() || ck.spec.num_classes < test.num_classes() {
        return Err(Failure::Mismatch(format!(
            "{} expects {} inputs and {} classes, data has {} and {}",
            path.display(),
            ck.spec.input_dim,
            ck.spec.num_classes,
            test.dim(),
            test.num_classes()
        )));
    }
    Ok(ck)
}

fn cmd_eval(cfg: &RunConfig, checkpoint: &Path, threads: usize) -> Result<(), Failure> {
    let (_, test) = load_datasets(cfg).map_err(from_load)?;
    let ck = load_model(checkpoint, &test)?;
    let attacks = cfg.eval_attacks().map_err(Failure::Config)?;
    write_manifest(cfg, "eval")?;
    let mut rows = Vec::with_capacity(attacks.len());
    for (name, attack) in attacks {
        let s = evaluate_parallel(&ck.spec, &ck.params, &test, &attack, cfg.eval_seed(), threads).map_err(from_eval)?;
        println!(
            "{name} eps={} sa={:.2} ra={:.2} robust_loss={:.4}",
            attack.epsilon, s.standard_accuracy, s.robust_accuracy, s.robust_loss
        );
        rows.push(EvalRow {
            attack: name,
            epsilon: attack.epsilon,
            steps: attack.steps,
            restarts: attack.restarts,
            sa: s.standard_accuracy,
            ra: s.robust_accuracy,
            robust_loss: s.robust_loss,
        });
    }
    exports::write_eval(&cfg.run.out_dir, &rows).map_err(|e| io_failure("writing eval.csv", e))
}

fn sample_index(requested: Option<usize>, configured: usize, test: &Dataset) -> Result<usize, Failure> {
    let i = requested.unwrap_or(configured);
    if i >= test.len() {
        return Err(Failure::Config(format!("sample {i} out of range: test set has {} examples", test.len())));
    }
    Ok(i)
}

fn cmd_landscape(cfg: &RunConfig, checkpoint: &Path, sample: Option<usize>) -> Result<(), Failure> {
    let (_, test) = load_datasets(cfg).map_err(from_load)?;
    let ck = load_model(checkpoint, &test)?;
    let i = sample_index(sample, cfg.landscape.sample, &test)?;
    write_manifest(cfg, "landscape")?;
    let l = &cfg.landscape;
    let grid = evaluator::landscape_grid(&ck.spec, &ck.params, &test.example(i), l.range, l.resolution, cfg.landscape_seed())
        .map_err(from_eval)?;
    println!("sample {i} gap {}", grid.gap);
    exports::write_landscape(&cfg.run.out_dir, &grid, l.range, i).map_err(|e| io_failure("writing landscape", e))
}

fn model_ids(paths: &[PathBuf]) -> Vec<String> {
    let mut ids: Vec<String> = Vec::with_capacity(paths.len());
    for (k, p) in paths.iter().enumerate() {
        let stem = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        let id = if stem.is_empty() || ids.contains(&stem) { format!("{stem}#{k}") } else { stem };
        ids.push(id);
    }
    ids
}

fn cmd_transfer(cfg: &RunConfig, checkpoints: &[PathBuf]) -> Result<(), Failure> {
    let paths = if checkpoints.is_empty() { &cfg.transfer.checkpoints[..] } else { checkpoints };
    if paths.is_empty() {
        return Err(Failure::Config("transfer needs at least one --checkpoint".into()));
    }
    let (_, test) = load_datasets(cfg).map_err(from_load)?;
    let models = paths.iter().map(|p| load_model(p, &test)).collect::<Result<Vec<_>, _>>()?;
    let ids = model_ids(paths);
    let (_, attack) = cfg.eval_attacks().map_err(Failure::Config)?.remove(0);
    write_manifest(cfg, "transfer")?;
    let refs: Vec<ModelRef<'_>> = models
        .iter()
        .zip(&ids)
        .map(|(m, id)| ModelRef {
            id,
            spec: &m.spec,
            params: &m.params,
        })
        .collect();
    let matrix = evaluator::transfer_matrix(&refs, &test, &attack, cfg.eval_seed()).map_err(from_eval)?;
    for (id, row) in matrix.ids.iter().zip(&matrix.ra) {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:.2}")).collect();
        println!("{id}: {}", cells.join(" "));
    }
    exports::write_transfer(&cfg.run.out_dir, &matrix, cfg.eval_seed()).map_err(|e| io_failure("writing transfer", e))
}

fn cmd_gradmap(cfg: &RunConfig, checkpoint: &Path, sample: Option<usize>) -> Result<(), Failure> {
    let (_, test) = load_datasets(cfg).map_err(from_load)?;
    let ck = load_model(checkpoint, &test)?;
    let i = sample_index(sample, cfg.gradmap.sample, &test)?;
    write_manifest(cfg, "gradmap")?;
    let label = test.labels()[i];
    let maps = evaluator::input_gradient_map(&ck.spec, &ck.params, test.inputs().row(i), label, test.layout())
        .map_err(from_eval)?;
    println!("sample {i} label {label}: {} channel map(s)", maps.len());
    exports::write_gradmap(&cfg.run.out_dir, &maps, i, label).map_err(|e| io_failure("writing gradmap", e))
}
