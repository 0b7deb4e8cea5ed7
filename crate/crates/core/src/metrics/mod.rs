//! TER (with optional greedy shifts) and corpus BLEU.

mod bleu;
mod ter;

pub use bleu::{bleu_corpus, bleu_corpus_with, BleuScore, Smoothing, MAX_ORDER};
pub use ter::{ter_corpus, ter_from_stats, ter_sentence, TerStats, MAX_SHIFT_LEN};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MetricError {
    #[error("empty corpus")]
    EmptyCorpus,
}
