//! Pipeline configuration: one JSON file with a section per stage, merged
//! with command-line overrides and validated as a whole.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use mlmkit::corpus::SplitSpec;
use mlmkit::evaluation::EvalConfig;
use mlmkit::model::ModelConfig;
use mlmkit::tokenizer::TokenizerConfig;
use mlmkit::training::TrainConfig;

pub const CONFIG_DIR_ENV: &str = "MLMKIT_CONFIG_DIR";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalDataset {
    /// Row label in the report.
    pub tag: String,
    /// Corpus-format file.
    pub path: PathBuf,
}

/// Inputs are resolved against the config file's directory; outputs live
/// under `work_dir`, which is relative to the current directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Paths {
    pub raw_dir: PathBuf,
    pub abbreviations: Option<PathBuf>,
    pub source_tag: String,
    pub eval_datasets: Vec<EvalDataset>,
    pub work_dir: PathBuf,
}

impl Default for Paths {
    fn default() -> Self {
        Self {
            raw_dir: "raw".into(),
            abbreviations: None,
            source_tag: "news".into(),
            eval_datasets: Vec::new(),
            work_dir: "work".into(),
        }
    }
}

impl Paths {
    pub fn corpus(&self) -> PathBuf {
        self.work_dir.join("corpus/train.txt")
    }
    pub fn validation_corpus(&self) -> PathBuf {
        self.work_dir.join("corpus/validation.txt")
    }
    pub fn corpus_stats(&self) -> PathBuf {
        self.work_dir.join("corpus/stats.json")
    }
    pub fn vocab(&self) -> PathBuf {
        self.work_dir.join("tokenizer/vocab.txt")
    }
    pub fn tokenizer_stats(&self) -> PathBuf {
        self.work_dir.join("tokenizer/stats.json")
    }
    pub fn pretrain_dir(&self) -> PathBuf {
        self.work_dir.join("pretrain")
    }
    pub fn reports_dir(&self) -> PathBuf {
        self.work_dir.join("reports")
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    pub paths: Paths,
    pub split: SplitSpec,
    pub tokenizer: TokenizerConfig,
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub eval: EvalConfig,
    /// Overrides every section's own seed when set.
    pub seed: Option<u64>,
    pub deterministic: bool,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub deterministic: bool,
    pub out: Option<PathBuf>,
    /// `dotted.key=json` assignments.
    pub set: Vec<String>,
}

/// `--config` as given if it exists, else looked up in `config_dir`
/// (`--config-dir` or `$MLMKIT_CONFIG_DIR`).
pub fn resolve_config_path(given: &Path, config_dir: Option<&Path>) -> Result<PathBuf> {
    if given.exists() {
        return Ok(given.to_path_buf());
    }
    if let (true, Some(dir)) = (given.is_relative(), config_dir) {
        let candidate = dir.join(given);
        if candidate.exists() {
            return Ok(candidate);
        }
    }
    bail!(
        "config file {} not found (config dir: {})",
        given.display(),
        config_dir.map_or("unset".to_string(), |d| d.display().to_string())
    )
}

fn set_dotted(root: &mut Value, assignment: &str) -> Result<()> {
    let (key, raw) = assignment
        .split_once('=')
        .with_context(|| format!("--set expects key=value, got `{assignment}`"))?;
    // bare words are taken as strings
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut node = root;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let map = match node {
            Value::Object(map) => map,
            _ => bail!("--set {key}: `{}` is not a section", parts[..i].join(".")),
        };
        if i + 1 == parts.len() {
            map.insert(part.to_string(), value);
            return Ok(());
        }
        node = map
            .entry(part.to_string())
            .or_insert_with(|| Value::Object(Default::default()));
    }
    unreachable!("split yields at least one part")
}

/// Overlays `patch` onto `base`, recursing into objects present in both.
fn deep_merge(base: &mut Value, patch: Value) {
    match (base, patch) {
        (Value::Object(b), Value::Object(p)) => {
            for (k, v) in p {
                match b.get_mut(&k) {
                    Some(slot) => deep_merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

fn absolutize(base: &Path, path: &Path) -> PathBuf {
    if path.is_absolute() {
        path.to_path_buf()
    } else {
        base.join(path)
    }
}

impl PipelineConfig {
    pub fn load(path: &Path, overrides: &Overrides) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let file: Value =
            serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        let mut patch = file;
        for assignment in &overrides.set {
            set_dotted(&mut patch, assignment)?;
        }
        // partial sections fill in from the defaults
        let mut value = serde_json::to_value(PipelineConfig::default())?;
        deep_merge(&mut value, patch);
        let mut config: PipelineConfig =
            serde_json::from_value(value).with_context(|| format!("invalid config {}", path.display()))?;

        let base = path.parent().unwrap_or(Path::new("."));
        let p = &mut config.paths;
        p.raw_dir = absolutize(base, &p.raw_dir);
        p.abbreviations = p.abbreviations.as_ref().map(|a| absolutize(base, a));
        for d in &mut p.eval_datasets {
            d.path = absolutize(base, &d.path);
        }
        if let Some(out) = &overrides.out {
            p.work_dir = out.clone();
        }
        if overrides.seed.is_some() {
            config.seed = overrides.seed;
        }
        config.deterministic |= overrides.deterministic;
        if let Some(seed) = config.seed {
            config.split.rng_seed = seed;
            config.train.rng_seed = seed;
            config.eval.rng_seed = seed;
        }
        config.validate()?;
        Ok(config)
    }

    /// Checks every section, so no command starts writing with a config
    /// that a later stage would reject.
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.split.validation_fraction) {
            bail!(
                "split.validation_fraction {} is outside [0, 1)",
                self.split.validation_fraction
            );
        }
        self.tokenizer.validate()?;
        self.model.validate()?;
        self.train.validate(&self.model)?;
        self.eval.validate()?;
        if self.tokenizer.vocab_size != self.model.vocab_size {
            bail!(
                "tokenizer.vocab_size {} differs from model.vocab_size {}",
                self.tokenizer.vocab_size,
                self.model.vocab_size
            );
        }
        let mut tags: Vec<&str> = self.paths.eval_datasets.iter().map(|d| d.tag.as_str()).collect();
        tags.sort_unstable();
        if tags.windows(2).any(|w| w[0] == w[1]) {
            bail!("eval dataset tags must be unique");
        }
        Ok(())
    }

    /// The model section with `vocab_size` taken from the trained vocabulary,
    /// which can stop short of the requested size.
    pub fn model_for_vocab(&self, vocab_len: usize) -> Result<ModelConfig> {
        if vocab_len > self.model.vocab_size {
            bail!(
                "vocabulary has {vocab_len} entries but model.vocab_size is {}",
                self.model.vocab_size
            );
        }
        Ok(ModelConfig {
            vocab_size: vocab_len,
            ..self.model.clone()
        })
    }
}
