//! Run configuration: a sectioned TOML file plus `--section.key=value`
//! overrides. Unknown keys are errors; every omitted key has a default.

use std::fmt;
use std::path::{Path, PathBuf};

use last_core::attack::{AttackConfig, AttackInit};
use last_core::seed::{self, Stream};
use last_core::trainer::{OptimizerConfig, ProxyStep, Scheduler, TrainConfig};
use last_core::{Mode, NetworkSpec, SdConfig};
use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("invalid config: {0}")]
    Parse(String),
    #[error("override {0:?} is not of the form --section.key=value")]
    Override(String),
    #[error("invalid config: {0}")]
    Invalid(String),
}

/// A real number written either as a float or as a fraction like `"8/255"`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Real(pub f64);

impl Real {
    pub fn parse(s: &str) -> Option<f64> {
        match s.split_once('/') {
            Some((n, d)) => {
                let (n, d): (f64, f64) = (n.trim().parse().ok()?, d.trim().parse().ok()?);
                (d != 0.0).then(|| n / d)
            }
            None => s.trim().parse().ok(),
        }
    }
}

impl Serialize for Real {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(self.0)
    }
}

impl<'de> Deserialize<'de> for Real {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct RealVisitor;
        impl Visitor<'_> for RealVisitor {
            type Value = Real;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a number or a fraction such as \"8/255\"")
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Real, E> {
                Ok(Real(v))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Real, E> {
                Ok(Real(v as f64))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Real, E> {
                Ok(Real(v as f64))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<Real, E> {
                Real::parse(v).map(Real).ok_or_else(|| E::custom(format!("not a number: {v:?}")))
            }
        }
        d.deserialize_any(RealVisitor)
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub run: RunSection,
    pub data: DataSection,
    pub model: ModelSection,
    pub train: TrainSection,
    pub attack: AttackSection,
    pub sd: SdSection,
    pub eval: EvalSection,
    pub landscape: LandscapeSection,
    pub transfer: TransferSection,
    pub gradmap: GradmapSection,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    /// Root of every random stream.
    pub seed: u64,
    pub out_dir: PathBuf,
    /// Record wall-clock seconds in metrics (makes them non-reproducible).
    pub wall_clock: bool,
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection {
            seed: 0,
            out_dir: PathBuf::from("out"),
            wall_clock: false,
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum DataSource {
    Blobs,
    Idx,
    Cifar,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct DataSection {
    pub source: DataSource,
    pub train_images: Option<PathBuf>,
    pub train_labels: Option<PathBuf>,
    pub test_images: Option<PathBuf>,
    pub test_labels: Option<PathBuf>,
    pub cifar_train: Vec<PathBuf>,
    pub cifar_test: Vec<PathBuf>,
    pub classes: usize,
    pub per_class: usize,
    pub test_per_class: usize,
    pub dim: usize,
    pub margin: f64,
    /// Seed of the synthetic data, independent of the run seed.
    pub seed: u64,
    /// Keep only the first N training examples (0 keeps all).
    pub train_limit: usize,
    /// Keep only the first N test examples (0 keeps all).
    pub test_limit: usize,
}

impl Default for DataSection {
    fn default() -> Self {
        DataSection {
            source: DataSource::Blobs,
            train_images: None,
            train_labels: None,
            test_images: None,
            test_labels: None,
            cifar_train: Vec::new(),
            cifar_test: Vec::new(),
            classes: 10,
            per_class: 100,
            test_per_class: 50,
            dim: 784,
            margin: 0.5,
            seed: 0,
            train_limit: 0,
            test_limit: 0,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct ModelSection {
    pub hidden: Vec<usize>,
}

impl Default for ModelSection {
    fn default() -> Self {
        ModelSection { hidden: vec![256] }
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum ModeName {
    Sat,
    Last,
    #[serde(rename = "sat+swa")]
    SatSwa,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum SchedulerName {
    Constant,
    Cyclic,
    Multistep,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum ProxyStepName {
    Optimizer,
    Bare,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct TrainSection {
    pub mode: ModeName,
    pub epochs: usize,
    pub batch_size: usize,
    pub gamma: f64,
    pub scheduler: SchedulerName,
    /// Constant rate, cyclic peak, or multistep base rate.
    pub lr: f64,
    pub milestones: Vec<usize>,
    pub factor: f64,
    pub momentum: f64,
    pub weight_decay: f64,
    pub proxy_step: ProxyStepName,
    pub swa_start: usize,
}

impl Default for TrainSection {
    fn default() -> Self {
        TrainSection {
            mode: ModeName::Last,
            epochs: 10,
            batch_size: 128,
            gamma: 0.8,
            scheduler: SchedulerName::Cyclic,
            lr: 0.2,
            milestones: vec![100, 150],
            factor: 0.1,
            momentum: 0.9,
            weight_decay: 5e-4,
            proxy_step: ProxyStepName::Optimizer,
            swa_start: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum InitName {
    Zero,
    Uniform,
}

/// The training attack.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct AttackSection {
    pub epsilon: Real,
    /// Step size; defaults to `1.25·ε` for one step and `ε/4` otherwise.
    pub alpha: Option<Real>,
    pub steps: usize,
    pub restarts: usize,
    pub init: InitName,
    /// Clamp adversarial inputs to `[0, 1]`.
    pub pixel_box: bool,
}

impl Default for AttackSection {
    fn default() -> Self {
        AttackSection {
            epsilon: Real(8.0 / 255.0),
            alpha: None,
            steps: 1,
            restarts: 1,
            init: InitName::Uniform,
            pixel_box: true,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct SdSection {
    pub enabled: bool,
    pub mu: f64,
    pub tau: f64,
    pub detach_clean: bool,
    pub tau_squared: bool,
}

impl Default for SdSection {
    fn default() -> Self {
        let d = SdConfig::default();
        SdSection {
            enabled: false,
            mu: d.mu,
            tau: d.tau,
            detach_clean: d.detach_clean,
            tau_squared: d.tau_squared_scale,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct EvalSection {
    /// Per-epoch evaluation attack during training.
    pub train_attack: String,
    /// Attacks reported by `eval`, e.g. `"pgd10"`, `"pgd50:16/255"`,
    /// `"fgsm:0.1"`, `"clean"`. Without `:ε` the training ε is used.
    pub attacks: Vec<String>,
}

impl Default for EvalSection {
    fn default() -> Self {
        EvalSection {
            train_attack: "pgd10".into(),
            attacks: vec!["pgd10".into()],
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct LandscapeSection {
    pub range: f64,
    pub resolution: usize,
    pub sample: usize,
}

impl Default for LandscapeSection {
    fn default() -> Self {
        LandscapeSection {
            range: 0.25,
            resolution: 21,
            sample: 0,
        }
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct TransferSection {
    pub checkpoints: Vec<PathBuf>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct GradmapSection {
    pub sample: usize,
}

fn override_value(raw: &str) -> toml::Value {
    // anything that is not a TOML literal is taken as a bare string
    match format!("v = {raw}").parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("parsed key"),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

/// Whether a command-line argument is a `--section.key=value` override.
pub fn is_override(arg: &str) -> bool {
    arg.strip_prefix("--")
        .and_then(|rest| rest.split_once('='))
        .is_some_and(|(key, _)| key.contains('.'))
}

impl RunConfig {
    /// Parses config text and applies overrides of the form
    /// `--section.key=value` (the leading dashes are optional).
    pub fn from_toml(text: &str, overrides: &[String]) -> Result<Self, ConfigError> {
        let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))?;
        for o in overrides {
            let body = o.trim_start_matches("--");
            let (key, raw) = body.split_once('=').ok_or_else(|| ConfigError::Override(o.clone()))?;
            let (section, field) = key.split_once('.').ok_or_else(|| ConfigError::Override(o.clone()))?;
            let entry = table
                .entry(section.to_string())
                .or_insert_with(|| toml::Value::Table(toml::Table::new()));
            let toml::Value::Table(sec) = entry else {
                return Err(ConfigError::Override(o.clone()));
            };
            sec.insert(field.to_string(), override_value(raw));
        }
        let cfg: RunConfig = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self, ConfigError> {
        let text = match path {
            Some(p) => std::fs::read_to_string(p).map_err(|source| ConfigError::Read {
                path: p.to_path_buf(),
                source,
            })?,
            None => String::new(),
        };
        Self::from_toml(&text, overrides)
    }

    /// The fully resolved config as TOML.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    fn check(&self) -> Result<(), ConfigError> {
        let invalid = |s: String| Err(ConfigError::Invalid(s));
        self.training_config().map_err(ConfigError::Invalid)?;
        self.eval_attacks().map_err(ConfigError::Invalid)?;
        if self.model.hidden.contains(&0) {
            return invalid("model.hidden widths must be positive".into());
        }
        if self.landscape.resolution == 0 {
            return invalid("landscape.resolution must be at least 1".into());
        }
        if !(self.landscape.range >= 0.0 && self.landscape.range.is_finite()) {
            return invalid("landscape.range must be non-negative".into());
        }
        Ok(())
    }

    pub fn epsilon(&self) -> f64 {
        self.attack.epsilon.0
    }

    fn pixel_box(&self) -> Option<(f64, f64)> {
        self.attack.pixel_box.then_some((0.0, 1.0))
    }

    pub fn training_attack(&self) -> AttackConfig {
        let a = &self.attack;
        let eps = a.epsilon.0;
        let alpha = a
            .alpha
            .map(|r| r.0)
            .unwrap_or(if a.steps == 1 { 1.25 * eps } else { eps / 4.0 });
        AttackConfig {
            epsilon: eps,
            alpha,
            steps: a.steps,
            restarts: a.restarts,
            init: match a.init {
                InitName::Zero => AttackInit::Zero,
                InitName::Uniform => AttackInit::Uniform,
            },
            pixel_box: self.pixel_box(),
        }
    }

    /// Parses an attack name such as `pgd10`, `pgd50:8/255`, `fgsm:0.3` or `clean`.
    pub fn named_attack(&self, name: &str) -> Result<(String, AttackConfig), String> {
        let (kind, eps) = match name.split_once(':') {
            Some((k, e)) => (k.trim(), Real::parse(e).ok_or_else(|| format!("bad epsilon in attack {name:?}"))?),
            None => (name.trim(), self.epsilon()),
        };
        let cfg = match kind {
            "pgd10" => AttackConfig::pgd10(eps),
            "pgd50" => AttackConfig::pgd50(eps),
            "fgsm" => AttackConfig::fgsm(eps),
            "clean" => AttackConfig::pgd10(0.0),
            _ => return Err(format!("unknown attack {kind:?}")),
        }
        .with_box(self.pixel_box());
        cfg.validate().map_err(|e| format!("attack {name:?}: {e}"))?;
        Ok((kind.to_string(), cfg))
    }

    pub fn eval_attacks(&self) -> Result<Vec<(String, AttackConfig)>, String> {
        if self.eval.attacks.is_empty() {
            return Err("eval.attacks is empty".into());
        }
        self.eval.attacks.iter().map(|a| self.named_attack(a)).collect()
    }

    pub fn sd_config(&self) -> Option<SdConfig> {
        let s = &self.sd;
        s.enabled.then_some(SdConfig {
            mu: s.mu,
            tau: s.tau,
            detach_clean: s.detach_clean,
            tau_squared_scale: s.tau_squared,
        })
    }

    pub fn training_config(&self) -> Result<TrainConfig, String> {
        let t = &self.train;
        let scheduler = match t.scheduler {
            SchedulerName::Constant => Scheduler::Constant { lr: t.lr },
            SchedulerName::Cyclic => Scheduler::Cyclic { max_lr: t.lr },
            SchedulerName::Multistep => Scheduler::MultiStep {
                base_lr: t.lr,
                milestones: t.milestones.clone(),
                factor: t.factor,
            },
        };
        let mode = match t.mode {
            ModeName::Sat => Mode::Sat,
            ModeName::Last => Mode::Last,
            ModeName::SatSwa => Mode::SatSwa,
        };
        let mut cfg = TrainConfig::new(mode, t.epochs, t.batch_size, scheduler, self.training_attack());
        cfg.gamma = t.gamma;
        cfg.eval_attack = self.named_attack(&self.eval.train_attack)?.1;
        cfg.sd = self.sd_config();
        cfg.optimizer = OptimizerConfig {
            momentum: t.momentum,
            weight_decay: t.weight_decay,
        };
        cfg.proxy_step = match t.proxy_step {
            ProxyStepName::Optimizer => ProxyStep::Optimizer,
            ProxyStepName::Bare => ProxyStep::Bare,
        };
        cfg.swa_start = t.swa_start;
        cfg.seed = self.run.seed;
        cfg.validate().map_err(|e| e.to_string())?;
        Ok(cfg)
    }

    pub fn network_spec(&self, input_dim: usize, num_classes: usize) -> Result<NetworkSpec, String> {
        NetworkSpec::new(input_dim, self.model.hidden.clone(), num_classes).map_err(|e| e.to_string())
    }

    /// Seed of every evaluation attack.
    pub fn eval_seed(&self) -> u64 {
        seed::derive(self.run.seed, Stream::Eval, 0)
    }

    pub fn landscape_seed(&self) -> u64 {
        seed::derive(self.run.seed, Stream::Landscape, 0)
    }
}
