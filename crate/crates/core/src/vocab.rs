//! Frequency-capped symbol tables for words and for edit ops.

use std::collections::HashMap;
use std::fmt;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::editops::{EditOp, Sentence, Token};

pub const PAD: usize = 0;

/// Word vocabularies: `<pad> <unk> <s> </s>`.
pub const WORD_UNK: usize = 1;
pub const WORD_BOS: usize = 2;
pub const WORD_EOS: usize = 3;

/// Op vocabularies: `<pad> KEEP DEL EOS INS|<unk>`.
pub const OP_KEEP: usize = 1;
pub const OP_DEL: usize = 2;
pub const OP_EOS: usize = 3;
pub const OP_INS_UNK: usize = 4;

const WORD_RESERVED: [&str; 4] = ["<pad>", "<unk>", "<s>", "</s>"];
const OP_RESERVED: [&str; 5] = ["<pad>", "KEEP", "DEL", "EOS", "INS|<unk>"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VocabKind {
    Words,
    Ops,
}

impl VocabKind {
    pub fn reserved(self) -> &'static [&'static str] {
        match self {
            VocabKind::Words => &WORD_RESERVED,
            VocabKind::Ops => &OP_RESERVED,
        }
    }

    fn unk(self) -> usize {
        match self {
            VocabKind::Words => WORD_UNK,
            VocabKind::Ops => OP_INS_UNK,
        }
    }
}

impl fmt::Display for VocabKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            VocabKind::Words => "words",
            VocabKind::Ops => "ops",
        })
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum VocabError {
    #[error("limit {limit} leaves no room for the {reserved} reserved {kind} symbols")]
    LimitTooSmall {
        kind: VocabKind,
        limit: usize,
        reserved: usize,
    },
    #[error("symbol list does not start with the reserved {0} symbols")]
    MissingReserved(VocabKind),
    #[error("duplicate symbol {0:?}")]
    Duplicate(String),
    #[error("malformed vocabulary line {line}: {text:?}")]
    Malformed { line: usize, text: String },
    #[error("i/o: {0}")]
    Io(String),
}

/// Bijective symbol <-> id map with reserved entries at the lowest ids.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vocab {
    kind: VocabKind,
    symbols: Vec<String>,
    counts: Vec<usize>,
    index: HashMap<String, usize>,
}

impl Vocab {
    /// Keeps the `limit - reserved` most frequent symbols; equal counts are
    /// ordered lexicographically.
    pub fn from_counts(
        kind: VocabKind,
        counts: HashMap<String, usize>,
        limit: usize,
    ) -> Result<Self, VocabError> {
        let reserved = kind.reserved();
        if limit < reserved.len() {
            return Err(VocabError::LimitTooSmall {
                kind,
                limit,
                reserved: reserved.len(),
            });
        }
        let mut ranked: Vec<(String, usize)> = counts
            .into_iter()
            .filter(|(s, _)| !reserved.contains(&s.as_str()))
            .collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        ranked.truncate(limit - reserved.len());

        let mut symbols: Vec<String> = reserved.iter().map(|s| s.to_string()).collect();
        let mut freq = vec![0; reserved.len()];
        for (s, c) in ranked {
            symbols.push(s);
            freq.push(c);
        }
        Self::build(kind, symbols, freq)
    }

    /// Rebuilds a vocabulary from its id-ordered symbol list.
    pub fn from_symbols(kind: VocabKind, symbols: Vec<String>) -> Result<Self, VocabError> {
        let n = symbols.len();
        Self::build(kind, symbols, vec![0; n])
    }

    fn build(kind: VocabKind, symbols: Vec<String>, counts: Vec<usize>) -> Result<Self, VocabError> {
        let reserved = kind.reserved();
        if symbols.len() < reserved.len()
            || symbols.iter().zip(reserved).any(|(a, b)| a != b)
        {
            return Err(VocabError::MissingReserved(kind));
        }
        let mut index = HashMap::with_capacity(symbols.len());
        for (i, s) in symbols.iter().enumerate() {
            if index.insert(s.clone(), i).is_some() {
                return Err(VocabError::Duplicate(s.clone()));
            }
        }
        Ok(Vocab {
            kind,
            symbols,
            counts,
            index,
        })
    }

    pub fn kind(&self) -> VocabKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn unk(&self) -> usize {
        self.kind.unk()
    }

    pub fn get(&self, symbol: &str) -> Option<usize> {
        self.index.get(symbol).copied()
    }

    /// Id of `symbol`, or the unknown entry.
    pub fn id(&self, symbol: &str) -> usize {
        self.get(symbol).unwrap_or_else(|| self.unk())
    }

    pub fn symbol(&self, id: usize) -> Option<&str> {
        self.symbols.get(id).map(String::as_str)
    }

    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }

    pub fn encode_sentence(&self, sentence: &Sentence) -> Vec<usize> {
        sentence.words().map(|w| self.id(w)).collect()
    }

    /// Maps ids back to words; reserved ids other than `<unk>` are skipped.
    pub fn decode_words(&self, ids: &[usize]) -> Sentence {
        ids.iter()
            .filter(|&&id| id == WORD_UNK || id >= WORD_RESERVED.len())
            .filter_map(|&id| self.symbol(id))
            .map(|w| Token::new(w).expect("vocabulary words are valid tokens"))
            .collect()
    }

    pub fn encode_op(&self, op: &EditOp) -> usize {
        match op {
            EditOp::Keep => OP_KEEP,
            EditOp::Del => OP_DEL,
            EditOp::Eos => OP_EOS,
            EditOp::Ins(_) => self.id(&op.to_string()),
        }
    }

    pub fn encode_op_unk(&self) -> usize {
        OP_INS_UNK
    }

    /// Decodes an op id. `INS|<unk>` inserts `placeholder`; `<pad>` has no op.
    pub fn decode_op(&self, id: usize, placeholder: &Token) -> Option<EditOp> {
        match id {
            PAD => None,
            OP_KEEP => Some(EditOp::Keep),
            OP_DEL => Some(EditOp::Del),
            OP_EOS => Some(EditOp::Eos),
            OP_INS_UNK => Some(EditOp::Ins(placeholder.clone())),
            _ => self.symbol(id).and_then(|s| s.parse().ok()),
        }
    }

    /// Writes `symbol<TAB>count` lines in id order.
    pub fn write_to(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "#vocab\t{}", self.kind)?;
        for (s, c) in self.symbols.iter().zip(&self.counts) {
            writeln!(w, "{s}\t{c}")?;
        }
        Ok(())
    }

    pub fn read_from(r: impl BufRead) -> Result<Self, VocabError> {
        let mut kind = None;
        let mut symbols = Vec::new();
        let mut counts = Vec::new();
        for (i, line) in r.lines().enumerate() {
            let line = line.map_err(|e| VocabError::Io(e.to_string()))?;
            let malformed = || VocabError::Malformed {
                line: i + 1,
                text: line.clone(),
            };
            if i == 0 {
                kind = match line.as_str() {
                    "#vocab\twords" => Some(VocabKind::Words),
                    "#vocab\tops" => Some(VocabKind::Ops),
                    _ => return Err(malformed()),
                };
                continue;
            }
            let (s, c) = line.split_once('\t').ok_or_else(malformed)?;
            symbols.push(s.to_owned());
            counts.push(c.parse().map_err(|_| malformed())?);
        }
        let kind = kind.ok_or(VocabError::Malformed {
            line: 1,
            text: String::new(),
        })?;
        Self::build(kind, symbols, counts)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn counts(pairs: &[(&str, usize)]) -> HashMap<String, usize> {
        pairs.iter().map(|(s, c)| (s.to_string(), *c)).collect()
    }

    #[test]
    fn words_keep_most_frequent_with_lexicographic_ties() {
        let c = counts(&[("b", 2), ("a", 2), ("c", 2), ("z", 5)]);
        let v = Vocab::from_counts(VocabKind::Words, c, 6).unwrap();
        assert_eq!(&v.symbols()[4..], &["z", "a"]);
        assert_eq!(v.id("c"), WORD_UNK);
    }

    #[test]
    fn limit_above_distinct_words_keeps_everything() {
        let c = counts(&[("x", 1), ("y", 1)]);
        let v = Vocab::from_counts(VocabKind::Words, c, 100).unwrap();
        assert_eq!(v.len(), 6);
    }

    #[test]
    fn ids_are_a_bijection() {
        let c = counts(&[("x", 3), ("y", 1), ("<unk>", 9)]);
        let v = Vocab::from_counts(VocabKind::Words, c, 100).unwrap();
        for (id, s) in v.symbols().iter().enumerate() {
            assert_eq!(v.get(s), Some(id));
        }
        assert_eq!(v.len(), 6);
    }

    #[test]
    fn text_round_trip() {
        let c = counts(&[("INS|a", 3), ("INS|b", 1)]);
        let v = Vocab::from_counts(VocabKind::Ops, c, 10).unwrap();
        let mut buf = Vec::new();
        v.write_to(&mut buf).unwrap();
        assert_eq!(Vocab::read_from(&buf[..]).unwrap(), v);
    }

    #[test]
    fn op_decode_uses_placeholder() {
        let v = Vocab::from_counts(VocabKind::Ops, counts(&[("INS|a", 1)]), 10).unwrap();
        let unk = Token::new("UNK").unwrap();
        assert_eq!(v.decode_op(OP_INS_UNK, &unk), Some(EditOp::Ins(unk.clone())));
        assert_eq!(v.decode_op(5, &unk), Some(EditOp::ins("a").unwrap()));
        assert_eq!(v.decode_op(PAD, &unk), None);
    }

    #[test]
    fn rejects_bad_symbol_lists() {
        assert!(Vocab::from_symbols(VocabKind::Words, vec!["a".into()]).is_err());
        let mut syms: Vec<String> = WORD_RESERVED.iter().map(|s| s.to_string()).collect();
        syms.push("a".into());
        syms.push("a".into());
        assert_eq!(
            Vocab::from_symbols(VocabKind::Words, syms),
            Err(VocabError::Duplicate("a".into()))
        );
    }
}
