use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::{json, Value};

use mlmkit::corpus::{
    corpus_stats, default_abbreviations, normalize_bytes, normalize_documents, read_abbreviations,
    read_corpus, split_corpus, split_sentences, write_corpus, CorpusError, Document, SentenceDocument,
};
use mlmkit::evaluation::{
    render_table, run_evaluation, AdversarialPredictor, CheckpointPredictor, MaskablePolicy, OraclePredictor,
    Predictor, UniformPredictor,
};
use mlmkit::model::load_checkpoint;
use mlmkit::tokenizer::{train_wordpiece, word_frequencies, Vocabulary, WordPiece};
use mlmkit::training::{pretrain, PretrainOptions, TrainConfig, LATEST_FILE};

use crate::config::PipelineConfig;
use crate::lock::WorkLock;
use crate::{Failure, Outcome, ResultExt};

/// The merged config as echoed into artifacts. `work_dir` is left out so
/// outputs do not depend on where they are written.
pub fn echo(config: &PipelineConfig) -> Value {
    let mut value = serde_json::to_value(config).expect("config serializes");
    if let Some(paths) = value.get_mut("paths").and_then(Value::as_object_mut) {
        paths.remove("work_dir");
    }
    value
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_file(path, text.as_bytes())
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

fn require(path: &Path, what: &str) -> Outcome<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(Failure::Config(anyhow::anyhow!(
            "{what} {} does not exist",
            path.display()
        )))
    }
}

// ---------------------------------------------------------------- corpus

pub struct PrepareArgs {
    pub raw: Option<PathBuf>,
    pub abbreviations: Option<PathBuf>,
}

fn raw_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<_>>()?;
    files.retain(|p| p.is_file() && p.extension().is_some_and(|e| e == "txt"));
    files.sort();
    Ok(files)
}

pub fn corpus_prepare(mut config: PipelineConfig, args: PrepareArgs) -> Outcome<()> {
    if let Some(raw) = args.raw {
        config.paths.raw_dir = raw;
    }
    if args.abbreviations.is_some() {
        config.paths.abbreviations = args.abbreviations;
    }
    let paths = config.paths.clone();
    require(&paths.raw_dir, "raw directory")?;
    let mut abbreviations = default_abbreviations();
    if let Some(file) = &paths.abbreviations {
        require(file, "abbreviation file")?;
        abbreviations.extend(read_abbreviations(file).config()?);
    }
    let files = raw_files(&paths.raw_dir).config()?;
    let _lock = WorkLock::acquire(&paths.work_dir).runtime()?;

    let mut docs = Vec::new();
    let mut invalid_utf8 = 0;
    for file in &files {
        let bytes = fs::read(file)
            .with_context(|| format!("reading {}", file.display()))
            .runtime()?;
        match normalize_bytes(&bytes) {
            Ok(text) => {
                let id = file
                    .file_stem()
                    .unwrap_or_default()
                    .to_string_lossy()
                    .into_owned();
                docs.push(Document::new(id, text, paths.source_tag.clone()));
            }
            Err(CorpusError::InvalidUtf8 { offset }) => {
                log::warn!("{}: invalid UTF-8 at byte {offset}; dropped", file.display());
                invalid_utf8 += 1;
            }
            Err(e) => return Err(Failure::Runtime(e.into())),
        }
    }
    let (docs, empty) = normalize_documents(docs);
    if docs.is_empty() {
        return Err(Failure::Runtime(anyhow::anyhow!(
            "no documents survived normalization in {}",
            paths.raw_dir.display()
        )));
    }
    let stats = corpus_stats(&docs);
    let (train, validation) = split_corpus(docs, &config.split).runtime()?;
    let split = |docs: &[Document]| -> Vec<SentenceDocument> {
        docs.iter().map(|d| split_sentences(d, &abbreviations)).collect()
    };
    let (train, validation) = (split(&train), split(&validation));
    let words = |docs: &[SentenceDocument]| docs.iter().map(SentenceDocument::word_count).sum::<usize>();

    for (path, docs) in [(paths.corpus(), &train), (paths.validation_corpus(), &validation)] {
        fs::create_dir_all(path.parent().unwrap()).runtime()?;
        write_corpus(&path, docs).runtime()?;
    }
    let summary = json!({
        "stats": stats,
        "dropped": {"invalid_utf8": invalid_utf8, "empty": empty},
        "train": {"documents": train.len(), "words": words(&train)},
        "validation": {"documents": validation.len(), "words": words(&validation)},
    });
    write_json(
        &paths.corpus_stats(),
        &json!({"config": echo(&config), "corpus": summary}),
    )
    .runtime()?;
    println!("{}", serde_json::to_string_pretty(&summary).runtime()?);
    Ok(())
}

// ---------------------------------------------------------------- tokenizer

fn corpus_text(docs: &[SentenceDocument]) -> String {
    docs.iter()
        .map(SentenceDocument::text)
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn tokenizer_train(config: PipelineConfig) -> Outcome<()> {
    let paths = &config.paths;
    require(&paths.corpus(), "training corpus")?;
    let _lock = WorkLock::acquire(&paths.work_dir).runtime()?;
    let train = read_corpus(&paths.corpus()).runtime()?;
    let validation = if paths.validation_corpus().exists() {
        read_corpus(&paths.validation_corpus()).runtime()?
    } else {
        Vec::new()
    };
    let sentences = train.iter().flat_map(|d| d.sentences.iter().map(String::as_str));
    let vocab = train_wordpiece(&word_frequencies(sentences), &config.tokenizer).runtime()?;
    let tokenizer = WordPiece::new(vocab, config.tokenizer.clone());
    let header = vec![
        format!("vocab_size {}", config.tokenizer.vocab_size),
        format!("entries {}", tokenizer.vocab().len()),
        format!(
            "tokenizer {}",
            serde_json::to_string(&config.tokenizer).runtime()?
        ),
    ];
    fs::create_dir_all(paths.vocab().parent().unwrap()).runtime()?;
    tokenizer.vocab().write(&paths.vocab(), &header).runtime()?;

    let summary = json!({
        "requested_vocab_size": config.tokenizer.vocab_size,
        "entries": tokenizer.vocab().len(),
        "coverage_train": tokenizer.coverage(&corpus_text(&train)),
        "coverage_validation": (!validation.is_empty()).then(|| tokenizer.coverage(&corpus_text(&validation))),
    });
    write_json(
        &paths.tokenizer_stats(),
        &json!({"config": echo(&config), "tokenizer": summary}),
    )
    .runtime()?;
    println!("{}", serde_json::to_string_pretty(&summary).runtime()?);
    Ok(())
}

fn load_tokenizer(config: &PipelineConfig) -> Result<WordPiece> {
    let vocab = Vocabulary::read(&config.paths.vocab(), &config.tokenizer.continuation_prefix)?;
    Ok(WordPiece::new(vocab, config.tokenizer.clone()))
}

// ---------------------------------------------------------------- pretrain

pub struct PretrainArgs {
    pub resume: bool,
    pub dry_run: bool,
    pub stop_after_phase: Option<u32>,
}

/// "36 epochs @ 300×128 then 4 @ 50×512"
pub fn schedule_line(train: &TrainConfig) -> String {
    let (a, b) = (&train.phase1, &train.phase2);
    format!(
        "{} epochs @ {}×{} then {} @ {}×{}",
        a.epochs, a.batch_size, a.sequence_length, b.epochs, b.batch_size, b.sequence_length
    )
}

pub fn pretrain_cmd(config: PipelineConfig, args: PretrainArgs) -> Outcome<()> {
    if let Some(p) = args.stop_after_phase {
        if p != 1 && p != 2 {
            return Err(Failure::Config(anyhow::anyhow!(
                "--stop-after-phase must be 1 or 2, got {p}"
            )));
        }
    }
    if args.dry_run {
        println!("{}", schedule_line(&config.train));
        return Ok(());
    }
    let paths = config.paths.clone();
    require(&paths.corpus(), "training corpus")?;
    require(&paths.vocab(), "vocabulary")?;
    let out_dir = paths.pretrain_dir();
    if args.resume {
        require(
            &out_dir.join("checkpoints").join(LATEST_FILE),
            "checkpoint pointer",
        )?;
    }
    let tokenizer = load_tokenizer(&config).config()?;
    let model = config.model_for_vocab(tokenizer.vocab().len()).config()?;
    config.train.validate(&model).config()?;

    let _lock = WorkLock::acquire(&paths.work_dir).runtime()?;
    let train = read_corpus(&paths.corpus()).runtime()?;
    let validation = if paths.validation_corpus().exists() {
        read_corpus(&paths.validation_corpus()).runtime()?
    } else {
        Vec::new()
    };
    let options = PretrainOptions {
        out_dir: out_dir.clone(),
        resume: args.resume,
        stop_after_phase: args.stop_after_phase,
        deterministic: config.deterministic,
    };
    log::info!("schedule: {}", schedule_line(&config.train));
    let summary =
        pretrain::<f32>(&train, &validation, &tokenizer, &model, &config.train, &options).runtime()?;

    let relative = |p: &Path| p.strip_prefix(&out_dir).unwrap_or(p).display().to_string();
    let record = json!({
        "config": echo(&config),
        "model": model,
        "global_step": summary.global_step,
        "checkpoints": summary.checkpoints.iter().map(|p| relative(p)).collect::<Vec<_>>(),
        "last_checkpoint": relative(&summary.last_checkpoint),
    });
    write_json(&out_dir.join("pretrain.json"), &record).runtime()?;
    println!("{}", relative(&summary.last_checkpoint));
    Ok(())
}

// ---------------------------------------------------------------- evaluate

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum PredictorKind {
    Checkpoint,
    Oracle,
    Adversarial,
    Uniform,
}

pub struct EvaluateArgs {
    pub predictors: Vec<PredictorKind>,
    pub checkpoint: Option<PathBuf>,
}

fn latest_checkpoint(config: &PipelineConfig) -> Result<PathBuf> {
    let dir = config.paths.pretrain_dir().join("checkpoints");
    let pointer = dir.join(LATEST_FILE);
    let name = fs::read_to_string(&pointer).with_context(|| format!("reading {}", pointer.display()))?;
    Ok(dir.join(name.trim()))
}

pub fn evaluate(config: PipelineConfig, args: EvaluateArgs) -> Outcome<()> {
    let paths = config.paths.clone();
    if paths.eval_datasets.is_empty() {
        return Err(Failure::Config(anyhow::anyhow!("paths.eval_datasets is empty")));
    }
    for d in &paths.eval_datasets {
        require(&d.path, &format!("dataset `{}`", d.tag))?;
    }
    let wants_checkpoint = args.predictors.contains(&PredictorKind::Checkpoint);
    let checkpoint_dir = match (&args.checkpoint, wants_checkpoint) {
        (Some(dir), true) => Some(dir.clone()),
        (None, true) => Some(latest_checkpoint(&config).config()?),
        (_, false) => None,
    };
    if let Some(dir) = &checkpoint_dir {
        require(dir, "checkpoint")?;
        require(&paths.vocab(), "vocabulary")?;
    }
    let tokenizer = if paths.vocab().exists() {
        Some(load_tokenizer(&config).config()?)
    } else {
        None
    };

    let _lock = WorkLock::acquire(&paths.work_dir).runtime()?;
    let mut datasets = Vec::new();
    let mut lexicon = BTreeSet::new();
    for d in &paths.eval_datasets {
        let text = corpus_text(&read_corpus(&d.path).runtime()?);
        lexicon.extend(text.split_whitespace().map(str::to_string));
        datasets.push((d.tag.clone(), text));
    }

    let mut owned: Vec<Box<dyn Predictor>> = Vec::new();
    for kind in &args.predictors {
        owned.push(match kind {
            PredictorKind::Checkpoint => {
                let dir = checkpoint_dir.as_ref().expect("resolved above");
                let checkpoint = load_checkpoint::<f32>(dir).runtime()?;
                let tokenizer = tokenizer.clone().expect("vocab checked above");
                if checkpoint.state.config.vocab_size != tokenizer.vocab().len() {
                    return Err(Failure::Runtime(anyhow::anyhow!(
                        "checkpoint expects {} vocabulary entries, vocab file has {}",
                        checkpoint.state.config.vocab_size,
                        tokenizer.vocab().len()
                    )));
                }
                Box::new(CheckpointPredictor {
                    name: "bert".into(),
                    state: checkpoint.state,
                    tokenizer,
                    policy: config.eval.maskable_policy,
                })
            }
            PredictorKind::Oracle => Box::new(OraclePredictor),
            PredictorKind::Adversarial => Box::new(AdversarialPredictor),
            PredictorKind::Uniform => Box::new(UniformPredictor {
                words: lexicon.iter().cloned().collect(),
                seed: config.eval.rng_seed,
            }),
        });
    }
    let predictors: Vec<&dyn Predictor> = owned.iter().map(|p| p.as_ref()).collect();
    let single_token = config.eval.maskable_policy == MaskablePolicy::SingleTokenWordsOnly;
    let maskable = |w: &str| match (&tokenizer, single_token) {
        (Some(t), true) => t.is_single_token(w),
        _ => true,
    };
    let report = run_evaluation(&datasets, &predictors, &config.eval, &maskable).runtime()?;
    let table = render_table(&report);

    let checkpoint_name = checkpoint_dir
        .as_ref()
        .and_then(|d| d.file_name())
        .map(|n| n.to_string_lossy().into_owned());
    let out = paths.reports_dir();
    write_json(
        &out.join("report.json"),
        &json!({"config": echo(&config), "checkpoint": checkpoint_name, "report": report}),
    )
    .runtime()?;
    write_file(&out.join("report.txt"), table.as_bytes()).runtime()?;
    print!("{table}");
    Ok(())
}
