//! Edit operations over a machine-translation hypothesis.
//!
//! An [`EditScript`] is read left to right against the MT sentence with a
//! pointer that starts on the first word: `KEEP` copies the word under the
//! pointer and advances, `DEL` advances without copying, `INS|w` emits `w`
//! without moving. Whatever remains once the script is exhausted (or an
//! `EOS` is read) is kept verbatim.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::vocab::{Vocab, VocabError, VocabKind};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TokenError {
    #[error("empty token")]
    Empty,
    #[error("token {0:?} contains whitespace")]
    Whitespace(String),
}

/// A single whitespace-free word.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Token(String);

impl Token {
    pub fn new(text: impl Into<String>) -> Result<Self, TokenError> {
        let text = text.into();
        if text.is_empty() {
            return Err(TokenError::Empty);
        }
        if text.chars().any(char::is_whitespace) {
            return Err(TokenError::Whitespace(text));
        }
        Ok(Token(text))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl AsRef<str> for Token {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

/// A tokenized sentence. Tokenization is whitespace only.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Sentence(Vec<Token>);

impl Sentence {
    pub fn new(tokens: Vec<Token>) -> Self {
        Sentence(tokens)
    }

    /// Splits on any run of whitespace. Never fails.
    pub fn parse(line: &str) -> Self {
        Sentence(line.split_whitespace().map(|w| Token(w.to_owned())).collect())
    }

    pub fn tokens(&self) -> &[Token] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Token> {
        self.0.iter()
    }

    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(Token::as_str)
    }
}

impl fmt::Display for Sentence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, t) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            f.write_str(t.as_str())?;
        }
        Ok(())
    }
}

impl FromIterator<Token> for Sentence {
    fn from_iter<I: IntoIterator<Item = Token>>(iter: I) -> Self {
        Sentence(iter.into_iter().collect())
    }
}

impl From<&str> for Sentence {
    fn from(line: &str) -> Self {
        Sentence::parse(line)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EditOp {
    Keep,
    Del,
    Ins(Token),
    Eos,
}

impl EditOp {
    /// Whether the op moves the MT pointer forward.
    pub fn advances(&self) -> bool {
        matches!(self, EditOp::Keep | EditOp::Del)
    }

    pub fn ins(word: &str) -> Result<Self, TokenError> {
        Token::new(word).map(EditOp::Ins)
    }
}

impl fmt::Display for EditOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EditOp::Keep => f.write_str("KEEP"),
            EditOp::Del => f.write_str("DEL"),
            EditOp::Eos => f.write_str("EOS"),
            EditOp::Ins(w) => write!(f, "INS|{w}"),
        }
    }
}

impl FromStr for EditOp {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "KEEP" => Ok(EditOp::Keep),
            "DEL" => Ok(EditOp::Del),
            "EOS" => Ok(EditOp::Eos),
            _ => match s.strip_prefix("INS|") {
                Some(word) => Token::new(word)
                    .map(EditOp::Ins)
                    .map_err(|e| format!("bad insertion {s:?}: {e}")),
                None => Err(format!("unknown op {s:?}")),
            },
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ScriptError {
    #[error("op at position {position} follows EOS")]
    OpAfterEos { position: usize },
    #[error("line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
}

/// An ordered list of ops with at most one `EOS`, only in final position.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct EditScript(Vec<EditOp>);

impl EditScript {
    pub fn new(ops: Vec<EditOp>) -> Result<Self, ScriptError> {
        if let Some(pos) = ops.iter().position(|op| *op == EditOp::Eos) {
            if pos + 1 != ops.len() {
                return Err(ScriptError::OpAfterEos { position: pos + 1 });
            }
        }
        Ok(EditScript(ops))
    }

    pub fn ops(&self) -> &[EditOp] {
        &self.0
    }

    pub fn into_ops(self) -> Vec<EditOp> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn ends_with_eos(&self) -> bool {
        self.0.last() == Some(&EditOp::Eos)
    }

    /// Returns a copy terminated by `EOS` (unchanged if it already is).
    pub fn with_eos(&self) -> EditScript {
        let mut ops = self.0.clone();
        if !self.ends_with_eos() {
            ops.push(EditOp::Eos);
        }
        EditScript(ops)
    }

    pub fn count_advancing(&self) -> usize {
        self.0.iter().filter(|op| op.advances()).count()
    }

    pub fn count(&self, pred: impl Fn(&EditOp) -> bool) -> usize {
        self.0.iter().filter(|op| pred(op)).count()
    }

    /// Parses one line of the script text format.
    pub fn parse_line(line: &str, line_no: usize) -> Result<Self, ScriptError> {
        let mut ops = Vec::new();
        let mut column = 1;
        let mut rest = line;
        loop {
            let trimmed = rest.trim_start();
            column += rest[..rest.len() - trimmed.len()].chars().count();
            if trimmed.is_empty() {
                break;
            }
            let end = trimmed.find(char::is_whitespace).unwrap_or(trimmed.len());
            let word = &trimmed[..end];
            let op = word.parse::<EditOp>().map_err(|message| ScriptError::Parse {
                line: line_no,
                column,
                message,
            })?;
            if ops.last() == Some(&EditOp::Eos) {
                return Err(ScriptError::Parse {
                    line: line_no,
                    column,
                    message: "op follows EOS".into(),
                });
            }
            ops.push(op);
            column += word.chars().count();
            rest = &trimmed[end..];
        }
        Ok(EditScript(ops))
    }

    /// Parses a whole file, one script per line.
    pub fn parse_text(text: &str) -> Result<Vec<Self>, ScriptError> {
        text.lines()
            .enumerate()
            .map(|(i, line)| Self::parse_line(line, i + 1))
            .collect()
    }
}

impl fmt::Display for EditScript {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, op) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{op}")?;
        }
        Ok(())
    }
}

impl FromStr for EditScript {
    type Err = ScriptError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        EditScript::parse_line(s, 1)
    }
}

/// Extracts the shortest insertion/deletion script turning `mt` into `pe`.
///
/// Ties are broken towards `KEEP`, then `DEL`, then `INS`, so every divergent
/// region lists its deletions before its insertions.
pub fn extract_ops(mt: &Sentence, pe: &Sentence) -> EditScript {
    let (a, b) = (mt.tokens(), pe.tokens());
    let (n, m) = (a.len(), b.len());
    let width = m + 1;
    // dist[i * width + j]: indel distance between a[i..] and b[j..]
    let mut dist = vec![0u32; (n + 1) * width];
    for i in (0..=n).rev() {
        for j in (0..=m).rev() {
            let cell = if i == n {
                (m - j) as u32
            } else if j == m {
                (n - i) as u32
            } else if a[i] == b[j] {
                dist[(i + 1) * width + j + 1]
            } else {
                1 + dist[(i + 1) * width + j].min(dist[i * width + j + 1])
            };
            dist[i * width + j] = cell;
        }
    }

    let mut ops = Vec::with_capacity(n.max(m));
    let (mut i, mut j) = (0, 0);
    while i < n || j < m {
        let here = dist[i * width + j];
        if i < n && j < m && a[i] == b[j] && dist[(i + 1) * width + j + 1] == here {
            ops.push(EditOp::Keep);
            i += 1;
            j += 1;
        } else if i < n && dist[(i + 1) * width + j] + 1 == here {
            ops.push(EditOp::Del);
            i += 1;
        } else {
            ops.push(EditOp::Ins(b[j].clone()));
            j += 1;
        }
    }
    EditScript(ops)
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("op {op_index} reads past the end of a {mt_len}-word hypothesis")]
pub struct OverrunError {
    pub op_index: usize,
    pub mt_len: usize,
}

/// Replays `script` over `mt`.
pub fn apply_ops(mt: &Sentence, script: &EditScript) -> Result<Sentence, OverrunError> {
    let words = mt.tokens();
    let mut out = Vec::with_capacity(words.len() + script.len());
    let mut pointer = 0;
    for (op_index, op) in script.ops().iter().enumerate() {
        match op {
            EditOp::Keep | EditOp::Del => {
                let word = words.get(pointer).ok_or(OverrunError {
                    op_index,
                    mt_len: words.len(),
                })?;
                if *op == EditOp::Keep {
                    out.push(word.clone());
                }
                pointer += 1;
            }
            EditOp::Ins(w) => out.push(w.clone()),
            EditOp::Eos => break,
        }
    }
    out.extend_from_slice(&words[pointer..]);
    Ok(Sentence(out))
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum StatsError {
    #[error("empty corpus")]
    EmptyCorpus,
    #[error("vocabulary limit {0} is below the 5 reserved op symbols")]
    LimitTooSmall(usize),
    #[error(transparent)]
    Vocab(#[from] VocabError),
}

#[derive(Clone, Debug, PartialEq)]
pub struct OpCount {
    pub op: EditOp,
    pub count: usize,
    pub percent: f64,
}

/// Op distribution over a corpus of scripts, most frequent first.
#[derive(Clone, Debug, PartialEq)]
pub struct OpStats {
    pub total: usize,
    pub entries: Vec<OpCount>,
}

impl OpStats {
    pub fn get(&self, op: &EditOp) -> Option<&OpCount> {
        self.entries.iter().find(|e| &e.op == op)
    }

    pub fn top(&self, n: usize) -> &[OpCount] {
        &self.entries[..n.min(self.entries.len())]
    }
}

pub fn script_stats<'a, I>(scripts: I) -> Result<OpStats, StatsError>
where
    I: IntoIterator<Item = &'a EditScript>,
{
    let mut counts: HashMap<&EditOp, usize> = HashMap::new();
    let mut n_scripts = 0;
    for script in scripts {
        n_scripts += 1;
        for op in script.ops() {
            *counts.entry(op).or_default() += 1;
        }
    }
    if n_scripts == 0 {
        return Err(StatsError::EmptyCorpus);
    }
    let total: usize = counts.values().sum();
    let mut entries: Vec<OpCount> = counts
        .into_iter()
        .map(|(op, count)| OpCount {
            op: op.clone(),
            count,
            percent: 100.0 * count as f64 / total.max(1) as f64,
        })
        .collect();
    entries.sort_by(|x, y| y.count.cmp(&x.count).then_with(|| x.op.cmp(&y.op)));
    Ok(OpStats { total, entries })
}

/// Builds the op vocabulary: the five reserved symbols plus the most frequent
/// insertions, `limit` entries at most.
pub fn build_op_vocab<'a, I>(scripts: I, limit: usize) -> Result<Vocab, StatsError>
where
    I: IntoIterator<Item = &'a EditScript>,
{
    if limit < VocabKind::Ops.reserved().len() {
        return Err(StatsError::LimitTooSmall(limit));
    }
    let mut counts: HashMap<String, usize> = HashMap::new();
    let mut n_scripts = 0;
    for script in scripts {
        n_scripts += 1;
        for op in script.ops() {
            if let EditOp::Ins(_) = op {
                *counts.entry(op.to_string()).or_default() += 1;
            }
        }
    }
    if n_scripts == 0 {
        return Err(StatsError::EmptyCorpus);
    }
    Ok(Vocab::from_counts(VocabKind::Ops, counts, limit)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(text: &str) -> Sentence {
        Sentence::parse(text)
    }

    fn script(text: &str) -> EditScript {
        text.parse().unwrap()
    }

    #[test]
    fn worked_example_extracts_and_applies() {
        let ops = extract_ops(&s("The cats is grey"), &s("The cat is grey ."));
        assert_eq!(ops.to_string(), "KEEP DEL INS|cat KEEP KEEP INS|.");
        assert_eq!(
            apply_ops(&s("The cats is grey"), &ops).unwrap().to_string(),
            "The cat is grey ."
        );
    }

    #[test]
    fn identity_and_empty_cases() {
        assert_eq!(extract_ops(&s("a b c"), &s("a b c")), script("KEEP KEEP KEEP"));
        assert_eq!(extract_ops(&s("a b c"), &s("")), script("DEL DEL DEL"));
        assert_eq!(extract_ops(&s(""), &s("x y")), script("INS|x INS|y"));
        assert_eq!(extract_ops(&s(""), &s("")), EditScript::default());
    }

    #[test]
    fn deletions_precede_insertions() {
        assert_eq!(extract_ops(&s("x a"), &s("a y")), script("DEL KEEP INS|y"));
        assert_eq!(extract_ops(&s("x y"), &s("u v")), script("DEL DEL INS|u INS|v"));
    }

    #[test]
    fn padding_keeps_remaining_words() {
        assert_eq!(apply_ops(&s("a b c"), &EditScript::default()).unwrap(), s("a b c"));
        assert_eq!(apply_ops(&s("a b c"), &script("INS|x EOS")).unwrap(), s("x a b c"));
        assert_eq!(apply_ops(&s("a b c"), &script("DEL EOS")).unwrap(), s("b c"));
    }

    #[test]
    fn overrun_is_reported() {
        let err = apply_ops(&s("a"), &script("KEEP DEL")).unwrap_err();
        assert_eq!(err, OverrunError { op_index: 1, mt_len: 1 });
    }

    #[test]
    fn eos_only_at_the_end() {
        assert!(EditScript::new(vec![EditOp::Eos, EditOp::Keep]).is_err());
        assert!(EditScript::new(vec![EditOp::Keep, EditOp::Eos]).is_ok());
        let err = EditScript::parse_line("KEEP EOS DEL", 4).unwrap_err();
        assert_eq!(
            err,
            ScriptError::Parse { line: 4, column: 10, message: "op follows EOS".into() }
        );
    }

    #[test]
    fn parse_diagnostics_carry_position() {
        let err = EditScript::parse_text("KEEP\nKEEP  INS| DEL").unwrap_err();
        match err {
            ScriptError::Parse { line, column, .. } => assert_eq!((line, column), (2, 7)),
            other => panic!("unexpected {other:?}"),
        }
        assert!(EditScript::parse_line("keep", 1).is_err());
        assert_eq!(script("INS|| INS|a|b").ops()[0], EditOp::ins("|").unwrap());
    }

    #[test]
    fn stats_count_every_symbol() {
        let one = [script("KEEP KEEP")];
        let st = script_stats(&one).unwrap();
        assert_eq!(st.entries, vec![OpCount { op: EditOp::Keep, count: 2, percent: 100.0 }]);

        let corpus = [script("KEEP DEL"), script("INS|a")];
        let st = script_stats(&corpus).unwrap();
        assert_eq!(st.total, 3);
        for op in [EditOp::Keep, EditOp::Del, EditOp::ins("a").unwrap()] {
            let e = st.get(&op).unwrap();
            assert_eq!(e.count, 1);
            assert!((e.percent - 100.0 / 3.0).abs() < 1e-9);
        }
        let sum: f64 = st.entries.iter().map(|e| e.percent).sum();
        assert!((sum - 100.0).abs() < 0.1);
        assert_eq!(script_stats(&[] as &[EditScript]), Err(StatsError::EmptyCorpus));
    }

    #[test]
    fn op_vocab_reserves_five_symbols() {
        let keeps = [script("KEEP KEEP")];
        let v = build_op_vocab(&keeps, 10).unwrap();
        assert_eq!(v.len(), 5);

        let corpus = [script("INS|a INS|a KEEP"), script("INS|a INS|b")];
        let v = build_op_vocab(&corpus, 6).unwrap();
        assert_eq!(v.len(), 6);
        assert!(v.get("INS|a").is_some());
        assert_eq!(v.encode_op(&EditOp::ins("b").unwrap()), v.encode_op_unk());
        assert!(matches!(build_op_vocab(&corpus, 4), Err(StatsError::LimitTooSmall(4))));
        assert!(matches!(
            build_op_vocab(&[] as &[EditScript], 10),
            Err(StatsError::EmptyCorpus)
        ));
    }
}
