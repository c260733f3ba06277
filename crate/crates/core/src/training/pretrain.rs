//! Two-phase pretraining driver.
//!
//! Every random choice is a pure function of the seed and the schedule
//! position: pairs from `(seed, phase)`, batch order from
//! `(seed, phase, epoch)`, masking and dropout from
//! `(seed, phase, epoch, batch)`. A run can therefore resume from any
//! checkpoint and reproduce the uninterrupted run bit for bit.

use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{
    build_batch, clip_global_norm, generate_pairs, optimizer_step, tokenize_documents, NspPair,
    OptimizerState, PhaseConfig, Schedule, TrainConfig, TrainingError,
};
use crate::corpus::SentenceDocument;
use crate::model::{
    init_model, load_checkpoint, save_checkpoint, Batch, Checkpoint, EncoderState, LossValue, Mode,
    ModelConfig, Moments, PhaseMeta,
};
use crate::rng::{self, tag};
use crate::tokenizer::WordPiece;
use crate::Scalar;

/// Name of the file in the checkpoint directory that points at the newest
/// checkpoint.
pub const LATEST_FILE: &str = "LATEST";

#[derive(Debug, Clone, Default)]
pub struct PretrainOptions {
    pub out_dir: PathBuf,
    pub resume: bool,
    /// Return after this phase's boundary checkpoint.
    pub stop_after_phase: Option<u32>,
    /// Record `wall_time` as 0 so logs are reproducible.
    pub deterministic: bool,
}

/// One line of `metrics.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    pub step: u64,
    pub phase: u32,
    /// 1-based within the phase.
    pub epoch: u32,
    pub mlm_loss: f64,
    pub nsp_loss: f64,
    pub lr: f64,
    pub wall_time: f64,
    pub mlm_accuracy: f64,
    pub nsp_accuracy: f64,
    pub val_mlm_loss: Option<f64>,
    pub val_nsp_loss: Option<f64>,
    pub val_mlm_accuracy: Option<f64>,
    pub skipped_pairs: usize,
}

#[derive(Debug, Clone)]
pub struct PretrainSummary {
    pub checkpoints: Vec<PathBuf>,
    pub epochs: Vec<EpochMetrics>,
    pub global_step: u64,
    /// Directory of the newest checkpoint.
    pub last_checkpoint: PathBuf,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct EpochOutcome {
    pub loss: LossValue,
    pub skipped: usize,
    pub batches: usize,
}

/// Parameters, optimizer moments and schedule position.
#[derive(Debug, Clone)]
pub struct Trainer<T> {
    pub state: EncoderState<T>,
    pub optimizer: OptimizerState<T>,
    pub config: TrainConfig,
    pub schedule: Schedule,
    pub global_step: u64,
    pub last_lr: f64,
}

fn num_batches(pairs: usize, batch_size: usize) -> usize {
    pairs.div_ceil(batch_size)
}

impl<T: Scalar> Trainer<T> {
    pub fn new(state: EncoderState<T>, config: TrainConfig, schedule: Schedule) -> Self {
        let optimizer = OptimizerState::new(&state);
        Self {
            state,
            optimizer,
            config,
            schedule,
            global_step: 0,
            last_lr: 0.0,
        }
    }

    /// Forward, backward, clip and AdamW on one batch.
    pub fn train_step(&mut self, batch: &Batch, dropout: &mut rng::Rng) -> Result<LossValue, TrainingError> {
        let (loss, mut grads) = self.state.loss_and_gradients(batch, Mode::Train, dropout)?;
        clip_global_norm(&mut grads, self.config.max_grad_norm);
        let lr = self.schedule.lr(self.global_step + 1);
        optimizer_step(&mut self.state, &grads, &mut self.optimizer, lr, &self.config)?;
        self.global_step += 1;
        self.last_lr = lr;
        Ok(loss)
    }

    /// Trains on batches `start_batch..` of the given epoch. `after_step`
    /// sees the trainer and the index of the batch just applied.
    pub fn run_epoch(
        &mut self,
        pairs: &[NspPair],
        phase: u32,
        epoch: u32,
        start_batch: usize,
        mut after_step: impl FnMut(&Self, usize) -> Result<(), TrainingError>,
    ) -> Result<EpochOutcome, TrainingError> {
        let phase_config: PhaseConfig = *self.config.phase(phase);
        let seed = self.config.rng_seed;
        let key = [seed, phase as u64, epoch as u64];
        let mut order: Vec<usize> = (0..pairs.len()).collect();
        order.shuffle(&mut rng::stream(&[tag::SHUFFLE, key[0], key[1], key[2]]));
        let mut outcome = EpochOutcome::default();
        for (k, chunk) in order
            .chunks(phase_config.batch_size)
            .enumerate()
            .skip(start_batch)
        {
            let mut masking = rng::stream(&[tag::MASKING, key[0], key[1], key[2], k as u64]);
            let built = build_batch(
                chunk.iter().map(|&i| &pairs[i]),
                phase_config.sequence_length,
                &self.config.masking,
                self.state.config.vocab_size,
                &mut masking,
            )?;
            outcome.skipped += built.skipped;
            outcome.batches += 1;
            if built.batch.batch_size > 0 {
                let mut dropout = rng::stream(&[tag::DROPOUT, key[0], key[1], key[2], k as u64]);
                match self.train_step(&built.batch, &mut dropout) {
                    Ok(loss) => outcome.loss = outcome.loss.merge(&loss),
                    Err(TrainingError::Model(crate::model::ModelError::NoLabels)) => {}
                    Err(e) => return Err(e),
                }
            }
            after_step(self, k)?;
        }
        Ok(outcome)
    }

    /// Eval-mode loss over prepared batches; parameters are not touched.
    pub fn evaluate(&self, batches: &[Batch]) -> Result<LossValue, TrainingError> {
        let mut total = LossValue::default();
        for b in batches {
            total = total.merge(&self.state.eval_loss(b)?);
        }
        Ok(total)
    }
}

/// Validation batches with masking fixed per phase, so epochs are comparable.
fn validation_batches(
    docs: &[Vec<Vec<u32>>],
    config: &TrainConfig,
    phase: u32,
    vocab_size: usize,
) -> Result<Vec<Batch>, TrainingError> {
    let phase_config = config.phase(phase);
    let count = docs.iter().map(Vec::len).sum::<usize>() * config.pairs_per_sentence;
    let mut pair_rng = rng::stream(&[tag::VALIDATION, config.rng_seed, phase as u64]);
    let pairs = generate_pairs(
        docs,
        count,
        phase_config.sequence_length,
        config.nsp_positive_rate,
        &mut pair_rng,
    )?;
    let mut batches = Vec::new();
    for (k, chunk) in pairs.chunks(phase_config.batch_size).enumerate() {
        let mut masking = rng::stream(&[tag::VALIDATION, config.rng_seed, phase as u64, k as u64 + 1]);
        let built = build_batch(
            chunk,
            phase_config.sequence_length,
            &config.masking,
            vocab_size,
            &mut masking,
        )?;
        if built.batch.num_mlm_labels() + built.batch.num_nsp_labels() > 0 {
            batches.push(built.batch);
        }
    }
    Ok(batches)
}

/// Writes a checkpoint with optimizer moments and points `LATEST` at it.
fn save_trainer<T: Scalar>(
    trainer: &Trainer<T>,
    checkpoint_dir: &Path,
    name: &str,
    meta: PhaseMeta,
) -> Result<PathBuf, TrainingError> {
    let dir = checkpoint_dir.join(name);
    let checkpoint = Checkpoint {
        state: trainer.state.clone(),
        meta,
        moments: Some(Moments {
            m: trainer.optimizer.m.clone(),
            v: trainer.optimizer.v.clone(),
            step: trainer.optimizer.step,
        }),
    };
    save_checkpoint(&checkpoint, &dir)?;
    let latest = checkpoint_dir.join(LATEST_FILE);
    fs::write(&latest, format!("{name}\n")).map_err(|e| io_error(&latest, e))?;
    log::info!("checkpoint {}", dir.display());
    Ok(dir)
}

fn io_error(path: &Path, source: std::io::Error) -> TrainingError {
    TrainingError::Io {
        path: path.display().to_string(),
        source,
    }
}

struct Run<'a, T> {
    options: &'a PretrainOptions,
    trainer: Trainer<T>,
    metrics: File,
    started: Instant,
    summary: PretrainSummary,
}

impl<T: Scalar> Run<'_, T> {
    fn checkpoint_dir(&self) -> PathBuf {
        self.options.out_dir.join("checkpoints")
    }

    fn save(&mut self, name: &str, meta: PhaseMeta) -> Result<(), TrainingError> {
        let dir = save_trainer(&self.trainer, &self.checkpoint_dir(), name, meta)?;
        self.summary.checkpoints.push(dir.clone());
        self.summary.last_checkpoint = dir;
        Ok(())
    }

    fn log_epoch(&mut self, record: EpochMetrics) -> Result<(), TrainingError> {
        let line = serde_json::to_string(&record).expect("metrics serialize");
        let path = self.options.out_dir.join("metrics.jsonl");
        writeln!(self.metrics, "{line}").map_err(|e| io_error(&path, e))?;
        log::info!(
            "phase {} epoch {} step {}: mlm {:.4} nsp {:.4} mlm-acc {:.3} lr {:.2e}",
            record.phase,
            record.epoch,
            record.step,
            record.mlm_loss,
            record.nsp_loss,
            record.mlm_accuracy,
            record.lr
        );
        self.summary.epochs.push(record);
        Ok(())
    }

    fn wall_time(&self) -> f64 {
        if self.options.deterministic {
            0.0
        } else {
            self.started.elapsed().as_secs_f64()
        }
    }
}

/// Runs phase 1 then phase 2, continuing from the phase-1 parameters with
/// freshly reset Adam moments. Writes `checkpoints/` and `metrics.jsonl`
/// under `options.out_dir`.
pub fn pretrain<T: Scalar>(
    train_docs: &[SentenceDocument],
    validation_docs: &[SentenceDocument],
    tokenizer: &WordPiece,
    model: &ModelConfig,
    config: &TrainConfig,
    options: &PretrainOptions,
) -> Result<PretrainSummary, TrainingError> {
    model.validate()?;
    config.validate(model)?;
    if tokenizer.vocab().len() != model.vocab_size {
        return Err(TrainingError::VocabMismatch {
            tokenizer: tokenizer.vocab().len(),
            model: model.vocab_size,
        });
    }
    let train = tokenize_documents(train_docs, tokenizer);
    let validation = tokenize_documents(validation_docs, tokenizer);
    let num_pairs = train.iter().map(Vec::len).sum::<usize>() * config.pairs_per_sentence;
    let steps = |p: &PhaseConfig| p.epochs as u64 * num_batches(num_pairs, p.batch_size) as u64;
    let schedule = Schedule {
        peak: config.learning_rate,
        warmup: config.warmup_steps,
        total: steps(&config.phase1) + steps(&config.phase2),
    };

    let checkpoint_dir = options.out_dir.join("checkpoints");
    let (trainer, start) = if options.resume {
        let latest = checkpoint_dir.join(LATEST_FILE);
        let name = fs::read_to_string(&latest)
            .map_err(|_| TrainingError::NothingToResume(checkpoint_dir.display().to_string()))?;
        let checkpoint: Checkpoint<T> = load_checkpoint(&checkpoint_dir.join(name.trim()))?;
        if checkpoint.state.config != *model {
            return Err(TrainingError::InvalidConfig(
                "checkpoint model config differs from the requested one".into(),
            ));
        }
        let mut trainer = Trainer::new(checkpoint.state, config.clone(), schedule);
        if let Some(m) = checkpoint.moments {
            trainer.optimizer = OptimizerState {
                m: m.m,
                v: m.v,
                step: m.step,
            };
        }
        trainer.global_step = checkpoint.meta.global_step;
        log::info!("resuming from {} at step {}", name.trim(), trainer.global_step);
        (trainer, checkpoint.meta)
    } else {
        let state = init_model::<T>(model, config.rng_seed)?;
        (
            Trainer::new(state, config.clone(), schedule),
            PhaseMeta {
                phase: 1,
                rng_seed: config.rng_seed,
                ..PhaseMeta::default()
            },
        )
    };

    fs::create_dir_all(&checkpoint_dir).map_err(|e| io_error(&checkpoint_dir, e))?;
    let metrics_path = options.out_dir.join("metrics.jsonl");
    let metrics = OpenOptions::new()
        .create(true)
        .write(true)
        .append(options.resume)
        .truncate(!options.resume)
        .open(&metrics_path)
        .map_err(|e| io_error(&metrics_path, e))?;
    let mut run = Run {
        options,
        trainer,
        metrics,
        started: Instant::now(),
        summary: PretrainSummary {
            checkpoints: Vec::new(),
            epochs: Vec::new(),
            global_step: 0,
            last_checkpoint: PathBuf::new(),
        },
    };

    for phase in [1u32, 2] {
        let phase_config = *config.phase(phase);
        let (first_epoch, first_batch) = match start.phase.cmp(&phase) {
            std::cmp::Ordering::Greater => continue,
            std::cmp::Ordering::Equal => (start.completed_epochs, start.batch_in_epoch as usize),
            std::cmp::Ordering::Less => (0, 0),
        };
        if phase == 2 && (start.phase < 2 || (start.completed_epochs == 0 && start.batch_in_epoch == 0)) {
            run.trainer.optimizer = OptimizerState::new(&run.trainer.state);
        }
        let mut pair_rng = rng::stream(&[tag::PAIRS, config.rng_seed, phase as u64]);
        let pairs = generate_pairs(
            &train,
            num_pairs,
            phase_config.sequence_length,
            config.nsp_positive_rate,
            &mut pair_rng,
        )?;
        let validation_batches = if validation.is_empty() {
            Vec::new()
        } else {
            match validation_batches(&validation, config, phase, model.vocab_size) {
                Ok(b) => b,
                Err(TrainingError::InsufficientCorpus(reason)) => {
                    log::warn!("validation split skipped: {reason}");
                    Vec::new()
                }
                Err(e) => return Err(e),
            }
        };
        let batches_per_epoch = num_batches(pairs.len(), phase_config.batch_size);
        let every = config.checkpoint_every_n_steps;

        for epoch in first_epoch..phase_config.epochs {
            let start_batch = if epoch == first_epoch { first_batch } else { 0 };
            let mut saved = Vec::new();
            let outcome = run.trainer.run_epoch(&pairs, phase, epoch, start_batch, |t, k| {
                if every > 0 && t.global_step % every == 0 {
                    let done = k + 1 == batches_per_epoch;
                    let meta = PhaseMeta {
                        phase,
                        completed_epochs: epoch + u32::from(done),
                        batch_in_epoch: if done { 0 } else { k as u64 + 1 },
                        global_step: t.global_step,
                        rng_seed: config.rng_seed,
                    };
                    saved.push(save_trainer(
                        t,
                        &checkpoint_dir,
                        &format!("step-{:08}", t.global_step),
                        meta,
                    )?);
                }
                Ok(())
            })?;
            if let Some(last) = saved.last() {
                run.summary.last_checkpoint = last.clone();
            }
            run.summary.checkpoints.extend(saved);
            finish_epoch(&mut run, phase, epoch, outcome, &validation_batches)?;
        }
        run.save(
            &format!("phase{phase}"),
            PhaseMeta {
                phase,
                completed_epochs: phase_config.epochs,
                batch_in_epoch: 0,
                global_step: run.trainer.global_step,
                rng_seed: config.rng_seed,
            },
        )?;
        if options.stop_after_phase == Some(phase) {
            break;
        }
    }
    run.summary.global_step = run.trainer.global_step;
    Ok(run.summary)
}

fn finish_epoch<T: Scalar>(
    run: &mut Run<'_, T>,
    phase: u32,
    epoch: u32,
    outcome: EpochOutcome,
    validation: &[Batch],
) -> Result<(), TrainingError> {
    let val = if validation.is_empty() {
        None
    } else {
        Some(run.trainer.evaluate(validation)?)
    };
    let record = EpochMetrics {
        step: run.trainer.global_step,
        phase,
        epoch: epoch + 1,
        mlm_loss: outcome.loss.mlm,
        nsp_loss: outcome.loss.nsp,
        lr: run.trainer.last_lr,
        wall_time: run.wall_time(),
        mlm_accuracy: outcome.loss.mlm_accuracy(),
        nsp_accuracy: outcome.loss.nsp_accuracy(),
        val_mlm_loss: val.map(|v| v.mlm),
        val_nsp_loss: val.map(|v| v.nsp),
        val_mlm_accuracy: val.map(|v| v.mlm_accuracy()),
        skipped_pairs: outcome.skipped,
    };
    run.log_epoch(record)
}
