//! Corpus I/O, vocabularies and the synthetic-data pipeline.

mod filter;
mod lm;
mod synth;

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::editops::{build_op_vocab, extract_ops, EditScript, Sentence};
use crate::model::{ModelConfig, ModelError, ModelVocabs, TargetMode};
use crate::trainer::Sample;
use crate::vocab::{Vocab, VocabError, VocabKind};

pub use filter::{coarse_filter, FilterRules};
pub use lm::{lm_select, LmConfig, TrigramLm, LM_MAGIC};
pub use synth::{gen_synthetic, ter_filter, ter_filter_indices, SynthOutput, TerFeature, TerFilterConfig};

#[derive(Debug, Error)]
pub enum DataError {
    #[error("{path}: {err}")]
    Io { path: PathBuf, err: std::io::Error },
    #[error("line count mismatch: {0}")]
    LineCountMismatch(String),
    #[error("empty corpus")]
    EmptyCorpus,
    #[error("synthetic pool exhausted: need {needed}, have {available}")]
    PoolExhausted { needed: usize, available: usize },
    #[error("language model line {line}: {msg}")]
    LmFormat { line: usize, msg: String },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Vocab(#[from] VocabError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Triple {
    pub src: Sentence,
    pub mt: Sentence,
    pub pe: Sentence,
}

impl Triple {
    pub fn new(src: &str, mt: &str, pe: &str) -> Self {
        Triple {
            src: Sentence::parse(src),
            mt: Sentence::parse(mt),
            pe: Sentence::parse(pe),
        }
    }

    /// MT to PE training instance; the source is attached for chained models.
    pub fn ape_sample(&self, with_src: bool) -> Sample {
        Sample {
            src: with_src.then(|| self.src.clone()),
            input: self.mt.clone(),
            target: self.pe.clone(),
        }
    }
}

pub fn read_sentences(path: &Path) -> Result<Vec<Sentence>, DataError> {
    let io = |err| DataError::Io {
        path: path.to_path_buf(),
        err,
    };
    let file = File::open(path).map_err(io)?;
    BufReader::new(file)
        .lines()
        .map(|l| l.map(|l| Sentence::parse(&l)).map_err(io))
        .collect()
}

/// Reads line-aligned files; every file must have the same number of lines.
pub fn load_parallel(paths: &[&Path]) -> Result<Vec<Vec<Sentence>>, DataError> {
    let sides: Vec<Vec<Sentence>> = paths.iter().map(|p| read_sentences(p)).collect::<Result<_, _>>()?;
    if let Some(first) = sides.first() {
        if sides.iter().any(|s| s.len() != first.len()) {
            let detail = paths
                .iter()
                .zip(&sides)
                .map(|(p, s)| format!("{} has {} lines", p.display(), s.len()))
                .collect::<Vec<_>>()
                .join(", ");
            return Err(DataError::LineCountMismatch(detail));
        }
    }
    Ok(sides)
}

pub fn load_triples(src: &Path, mt: &Path, pe: &Path) -> Result<Vec<Triple>, DataError> {
    let mut sides = load_parallel(&[src, mt, pe])?.into_iter();
    let (s, m, p) = (sides.next().unwrap(), sides.next().unwrap(), sides.next().unwrap());
    Ok(s.into_iter()
        .zip(m)
        .zip(p)
        .map(|((src, mt), pe)| Triple { src, mt, pe })
        .collect())
}

/// Reserved entries plus the most frequent words, ties broken
/// lexicographically.
pub fn build_word_vocab<'a, I>(sentences: I, limit: usize) -> Result<Vocab, DataError>
where
    I: IntoIterator<Item = &'a Sentence>,
{
    let mut counts: HashMap<String, usize> = HashMap::new();
    for s in sentences {
        for w in s.words() {
            *counts.entry(w.to_owned()).or_default() += 1;
        }
    }
    Ok(Vocab::from_counts(VocabKind::Words, counts, limit)?)
}

/// Vocabularies for training `config` on `samples`: word vocabularies
/// over each encoder side and an op or word vocabulary over the targets.
pub fn build_model_vocabs(config: &ModelConfig, samples: &[Sample]) -> Result<ModelVocabs, DataError> {
    if samples.is_empty() {
        return Err(DataError::EmptyCorpus);
    }
    let src = if config.is_chained() {
        let sides: Vec<&Sentence> = samples
            .iter()
            .map(|s| s.src.as_ref().ok_or(DataError::Model(ModelError::MissingSource)))
            .collect::<Result<_, _>>()?;
        Some(build_word_vocab(sides, config.src_vocab_limit)?)
    } else {
        None
    };
    let input = build_word_vocab(samples.iter().map(|s| &s.input), config.input_vocab_limit)?;
    let output = match config.target {
        TargetMode::Ops => {
            let scripts: Vec<EditScript> = samples.iter().map(|s| extract_ops(&s.input, &s.target)).collect();
            build_op_vocab(&scripts, config.output_vocab_limit)
                .map_err(|e| DataError::InvalidArgument(e.to_string()))?
        }
        TargetMode::Words => build_word_vocab(samples.iter().map(|s| &s.target), config.output_vocab_limit)?,
    };
    Ok(ModelVocabs { src, input, output })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn mismatched_files_are_reported() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.txt");
        let b = dir.path().join("b.txt");
        writeln!(File::create(&a).unwrap(), "x y\nz").unwrap();
        writeln!(File::create(&b).unwrap(), "x").unwrap();
        let err = load_parallel(&[&a, &b]).unwrap_err();
        let msg = err.to_string();
        assert!(matches!(err, DataError::LineCountMismatch(_)));
        assert!(msg.contains("a.txt has 2 lines") && msg.contains("b.txt has 1 lines"), "{msg}");
    }

    #[test]
    fn vocab_tie_at_cap_is_lexicographic() {
        let corpus = vec![Sentence::parse("b a c c"), Sentence::parse("d")];
        let v = build_word_vocab(&corpus, 4 + 2).unwrap();
        assert_eq!(&v.symbols()[4..], &["c".to_string(), "a".to_string()]);
        let all = build_word_vocab(&corpus, 100).unwrap();
        assert_eq!(all.len(), 4 + 4);
    }
}
