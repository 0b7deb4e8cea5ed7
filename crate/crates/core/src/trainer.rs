//! SGD training with step-wise learning-rate decay and dev-TER model
//! selection.

use std::io::Write;
use std::path::{Path, PathBuf};

use log::{debug, info};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::editops::Sentence;
use crate::infer::decode_ops_traced;
use crate::metrics::ter_corpus;
use crate::model::{save_checkpoint, Batch, Example, Model, ModelError, TargetMode};
use crate::numcore::{sgd_step, NumError, Scalar};
use crate::vocab::WORD_UNK;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecayInterval {
    Epoch,
    HalfEpoch,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub initial_lr: f64,
    pub decay_factor: f64,
    pub decay_interval: DecayInterval,
    pub eval_every: usize,
    pub max_steps: usize,
    /// Evaluations without improvement before stopping.
    pub patience: Option<usize>,
    pub max_extra: usize,
    pub seed: u64,
    pub threads: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig::real_data()
    }
}

impl TrainConfig {
    /// 0.8 decay after every epoch.
    pub fn real_data() -> Self {
        TrainConfig {
            batch_size: 32,
            initial_lr: 1.0,
            decay_factor: 0.8,
            decay_interval: DecayInterval::Epoch,
            eval_every: 200,
            max_steps: 100_000,
            patience: Some(20),
            max_extra: crate::infer::DEFAULT_MAX_EXTRA,
            seed: 1,
            threads: 1,
        }
    }

    /// 0.5 decay after every half epoch.
    pub fn synthetic() -> Self {
        TrainConfig {
            decay_factor: 0.5,
            decay_interval: DecayInterval::HalfEpoch,
            ..TrainConfig::real_data()
        }
    }

    pub fn validate(&self) -> Result<(), TrainError> {
        let bad = |m: &str| Err(TrainError::InvalidConfig(m.to_owned()));
        if self.batch_size == 0 {
            return bad("batch_size must be at least 1");
        }
        if !(self.decay_factor > 0.0 && self.decay_factor <= 1.0) {
            return bad("decay_factor must be in (0, 1]");
        }
        if !(self.initial_lr > 0.0 && self.initial_lr.is_finite()) {
            return bad("initial_lr must be positive");
        }
        if self.eval_every == 0 || self.max_steps == 0 {
            return bad("eval_every and max_steps must be positive");
        }
        if self.patience == Some(0) {
            return bad("patience must be positive when set");
        }
        Ok(())
    }
}

/// Learning rate as a function of the number of training examples seen.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LrSchedule {
    pub initial: f64,
    pub factor: f64,
    pub interval: DecayInterval,
    pub corpus_len: usize,
}

impl LrSchedule {
    pub fn new(cfg: &TrainConfig, corpus_len: usize) -> Self {
        LrSchedule {
            initial: cfg.initial_lr,
            factor: cfg.decay_factor,
            interval: cfg.decay_interval,
            corpus_len,
        }
    }

    /// Decay boundaries passed after `seen` examples. A half epoch is
    /// `floor(n / 2)` examples.
    pub fn decays(&self, seen: usize) -> u32 {
        let n = self.corpus_len.max(1);
        let (full, rem) = (seen / n, seen % n);
        match self.interval {
            DecayInterval::Epoch => full as u32,
            DecayInterval::HalfEpoch => {
                let half = n / 2;
                2 * full as u32 + u32::from(half > 0 && rem >= half)
            }
        }
    }

    /// `initial · factor^n` after `n` decays, multiplied out step by step.
    pub fn lr(&self, seen: usize) -> f64 {
        (0..self.decays(seen)).fold(self.initial, |lr, _| lr * self.factor)
    }
}

/// `large` followed by `factor` copies of `small`.
pub fn oversample_concat<T: Clone>(large: &[T], small: &[T], factor: usize) -> Result<Vec<T>, TrainError> {
    if factor == 0 {
        return Err(TrainError::InvalidConfig("oversampling factor must be at least 1".into()));
    }
    let mut out = Vec::with_capacity(large.len() + factor * small.len());
    out.extend_from_slice(large);
    for _ in 0..factor {
        out.extend_from_slice(small);
    }
    Ok(out)
}

/// Endless stream of index batches, reshuffled at every epoch start. The
/// last batch of an epoch may be short.
#[derive(Clone, Debug)]
pub struct Batcher {
    order: Vec<usize>,
    pos: usize,
    batch_size: usize,
    epoch: usize,
    rng: ChaCha8Rng,
}

impl Batcher {
    pub fn new(n: usize, batch_size: usize, seed: u64) -> Result<Self, TrainError> {
        if n == 0 {
            return Err(TrainError::EmptyCorpus);
        }
        Ok(Batcher {
            order: (0..n).collect(),
            pos: n,
            batch_size: batch_size.max(1),
            epoch: 0,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    /// Completed epochs.
    pub fn epoch(&self) -> usize {
        self.epoch.saturating_sub(1)
    }

    pub fn next_batch(&mut self) -> Vec<usize> {
        if self.pos == self.order.len() {
            self.order.shuffle(&mut self.rng);
            self.pos = 0;
            self.epoch += 1;
        }
        let end = (self.pos + self.batch_size).min(self.order.len());
        let out = self.order[self.pos..end].to_vec();
        self.pos = end;
        out
    }
}

/// One epoch of padded batches in seeded shuffled order.
pub fn make_batches(examples: &[Example], batch_size: usize, seed: u64) -> Result<Vec<Batch>, TrainError> {
    let mut batcher = Batcher::new(examples.len(), batch_size, seed)?;
    let mut out = Vec::new();
    let mut taken = 0;
    while taken < examples.len() {
        let idx = batcher.next_batch();
        taken += idx.len();
        let refs: Vec<&Example> = idx.iter().map(|&i| &examples[i]).collect();
        out.push(Batch::new(&refs).map_err(TrainError::Model)?);
    }
    Ok(out)
}

/// A training or dev instance: `input` is the encoder side (MT for APE
/// models) and `target` the reference (PE, or the generated side).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Sample {
    pub src: Option<Sentence>,
    pub input: Sentence,
    pub target: Sentence,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StepLog {
    pub step: usize,
    pub lr: f64,
    pub loss: f64,
    pub translate: Option<f64>,
    pub ape: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EvalLog {
    pub step: usize,
    pub dev_ter: f64,
    pub best_ter: f64,
    pub checkpointed: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    MaxSteps,
    Patience,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrainState {
    pub step: usize,
    pub lr: f64,
    pub examples_seen: usize,
    pub best_dev_ter: Option<f64>,
    pub best_step: Option<usize>,
    pub best_checkpoint: Option<PathBuf>,
    pub losses: Vec<StepLog>,
    pub evals: Vec<EvalLog>,
    pub stop: StopReason,
}

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("empty corpus")]
    EmptyCorpus,
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error("vocabulary mismatch: {0}")]
    VocabMismatch(String),
    #[error("numerical error at step {step}: {source}")]
    Numerical { step: usize, source: NumError },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub const LOG_HEADER: &str = "# train\tstep\tlr\tloss\ttranslate\tape\n# eval\tstep\tdev_ter\tbest_ter\tcheckpointed";

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_owned(), |x| format!("{x:.6}"))
}

/// Greedy-decodes `dev` and scores it with shift-enabled TER (x100).
pub fn evaluate<T: Scalar>(model: &Model<T>, dev: &[Sample], max_extra: usize) -> Result<f64, ModelError> {
    let hyps = dev_outputs(model, dev, max_extra)?;
    Ok(ter_corpus(hyps.iter().zip(dev.iter().map(|s| &s.target)), true).unwrap_or(0.0))
}

pub fn dev_outputs<T: Scalar>(model: &Model<T>, dev: &[Sample], max_extra: usize) -> Result<Vec<Sentence>, ModelError> {
    dev.iter()
        .map(|s| match model.config().target {
            TargetMode::Ops => Ok(decode_ops_traced(model, s.src.as_ref(), &s.input, max_extra)?.output),
            TargetMode::Words => crate::infer::decode_words(model, &s.input, 2 * s.input.len() + 10),
        })
        .collect()
}

fn check_coverage<T: Scalar>(model: &Model<T>, examples: &[Example]) -> Result<(), TrainError> {
    let known = examples.iter().flat_map(|e| &e.input).filter(|&&id| id != WORD_UNK).count();
    if known == 0 {
        return Err(TrainError::VocabMismatch(
            "no input token of the corpus is in the model vocabulary".into(),
        ));
    }
    let _ = model;
    Ok(())
}

pub fn encode_samples<T: Scalar>(model: &Model<T>, samples: &[Sample]) -> Result<Vec<Example>, TrainError> {
    Ok(samples
        .iter()
        .map(|s| model.example(s.src.as_ref(), &s.input, &s.target))
        .collect::<Result<_, _>>()?)
}

/// Trains in place. At the end the parameters of the best dev evaluation
/// are restored (and were written to `checkpoint` when given).
pub fn train<T: Scalar>(
    model: &mut Model<T>,
    corpus: &[Sample],
    dev: &[Sample],
    cfg: &TrainConfig,
    checkpoint: Option<&Path>,
    log: &mut dyn Write,
) -> Result<TrainState, TrainError> {
    cfg.validate()?;
    if corpus.is_empty() {
        return Err(TrainError::EmptyCorpus);
    }
    let examples = encode_samples(model, corpus)?;
    check_coverage(model, &examples)?;
    let schedule = LrSchedule::new(cfg, examples.len());
    let mut batcher = Batcher::new(examples.len(), cfg.batch_size, cfg.seed)?;
    let mut dropout_rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(0x9e37_79b9));
    writeln!(log, "{LOG_HEADER}")?;

    let mut state = TrainState {
        step: 0,
        lr: cfg.initial_lr,
        examples_seen: 0,
        best_dev_ter: None,
        best_step: None,
        best_checkpoint: None,
        losses: Vec::new(),
        evals: Vec::new(),
        stop: StopReason::MaxSteps,
    };
    let mut best_params = None;
    let mut stale = 0;
    let mut last_eval = 0;

    for step in 1..=cfg.max_steps {
        let lr = schedule.lr(state.examples_seen);
        let idx = batcher.next_batch();
        let refs: Vec<&Example> = idx.iter().map(|&i| &examples[i]).collect();
        let batch = Batch::new(&refs)?;
        let parts = match model.backprop(&batch, Some(&mut dropout_rng)) {
            Ok(p) => p,
            Err(ModelError::Num(source)) => return Err(TrainError::Numerical { step, source }),
            Err(e) => return Err(e.into()),
        };
        sgd_step(model.params_mut(), lr);
        state.step = step;
        state.examples_seen += idx.len();
        state.lr = schedule.lr(state.examples_seen);
        writeln!(
            log,
            "train\t{step}\t{lr}\t{:.6}\t{}\t{}",
            parts.total,
            fmt_opt(parts.translate),
            fmt_opt(parts.ape)
        )?;
        state.losses.push(StepLog {
            step,
            lr,
            loss: parts.total,
            translate: parts.translate,
            ape: parts.ape,
        });

        let due = step % cfg.eval_every == 0 || step == cfg.max_steps;
        if due && !dev.is_empty() {
            last_eval = step;
            let ter = evaluate(model, dev, cfg.max_extra)?;
            let improved = state.best_dev_ter.is_none_or(|b| ter < b);
            if improved {
                state.best_dev_ter = Some(ter);
                state.best_step = Some(step);
                best_params = Some(model.params().snapshot());
                stale = 0;
                if let Some(path) = checkpoint {
                    save_checkpoint(model, path)?;
                    state.best_checkpoint = Some(path.to_path_buf());
                }
            } else {
                stale += 1;
            }
            let best = state.best_dev_ter.unwrap_or(ter);
            writeln!(log, "eval\t{step}\t{ter:.4}\t{best:.4}\t{}", if improved { "yes" } else { "no" })?;
            info!("step {step}: dev TER {ter:.2} (best {best:.2}) lr {lr}");
            state.evals.push(EvalLog {
                step,
                dev_ter: ter,
                best_ter: best,
                checkpointed: improved,
            });
            if cfg.patience.is_some_and(|p| stale >= p) {
                state.stop = StopReason::Patience;
                break;
            }
        } else {
            debug!("step {step}: loss {:.4}", parts.total);
        }
    }
    debug!("last evaluation at step {last_eval}");
    if let Some(values) = best_params {
        model.params_mut().restore(&values);
    } else if let Some(path) = checkpoint {
        save_checkpoint(model, path)?;
        state.best_checkpoint = Some(path.to_path_buf());
    }
    log.flush()?;
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn batches_keep_short_tail() {
        let mut b = Batcher::new(65, 32, 4).unwrap();
        let sizes: Vec<usize> = (0..3).map(|_| b.next_batch().len()).collect();
        assert_eq!(sizes, vec![32, 32, 1]);
        assert!(Batcher::new(0, 32, 4).is_err());
    }

    #[test]
    fn presets_decay_as_documented() {
        let real = LrSchedule::new(&TrainConfig::real_data(), 100);
        assert_eq!(real.lr(99), 1.0);
        assert_eq!(real.lr(100), 0.8);
        let syn = LrSchedule::new(&TrainConfig::synthetic(), 101);
        assert_eq!(syn.lr(49), 1.0);
        assert_eq!(syn.lr(50), 0.5);
        assert_eq!(syn.lr(101), 0.25);
    }

    #[test]
    fn oversampling_counts() {
        let large = vec![0u8; 500];
        let small = vec![1u8; 12];
        assert_eq!(oversample_concat(&large, &small, 20).unwrap().len(), 740);
        assert_eq!(oversample_concat(&[] as &[u8], &small, 3).unwrap().len(), 36);
        assert!(oversample_concat(&large, &small, 0).is_err());
    }
}
