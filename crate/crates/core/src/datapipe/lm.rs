use std::collections::HashMap;
use std::io::{BufRead, Write};

use super::DataError;
use crate::editops::Sentence;

pub const LM_MAGIC: &str = "APEDIT-LM 1";

const UNK: u32 = 0;
const END: u32 = 1;
const START: u32 = 2;
const RESERVED: [&str; 3] = ["<unk>", "</s>", "<s>"];

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LmConfig {
    pub alpha: f64,
    /// Interpolation weights for the trigram, bigram and unigram estimates.
    pub weights: [f64; 3],
}

impl Default for LmConfig {
    fn default() -> Self {
        LmConfig {
            alpha: 0.1,
            weights: [0.5, 0.3, 0.2],
        }
    }
}

impl LmConfig {
    fn validate(&self) -> Result<(), DataError> {
        let sum: f64 = self.weights.iter().sum();
        if !(self.alpha > 0.0) || self.weights.iter().any(|w| *w < 0.0) || (sum - 1.0).abs() > 1e-9 {
            return Err(DataError::InvalidArgument(
                "LM alpha must be positive and weights non-negative summing to 1".into(),
            ));
        }
        Ok(())
    }
}

/// Interpolated add-alpha trigram model. Every history is padded with two
/// start markers and every sentence ends with an end marker.
#[derive(Clone, Debug)]
pub struct TrigramLm {
    config: LmConfig,
    words: Vec<String>,
    index: HashMap<String, u32>,
    uni: Vec<u64>,
    total: u64,
    bi: HashMap<(u32, u32), u64>,
    bi_ctx: HashMap<u32, u64>,
    tri: HashMap<(u32, u32, u32), u64>,
    tri_ctx: HashMap<(u32, u32), u64>,
}

impl TrigramLm {
    fn empty(config: LmConfig) -> Self {
        let words: Vec<String> = RESERVED.iter().map(|s| s.to_string()).collect();
        let index = words.iter().enumerate().map(|(i, w)| (w.clone(), i as u32)).collect();
        TrigramLm {
            config,
            words,
            index,
            uni: vec![0; RESERVED.len()],
            total: 0,
            bi: HashMap::new(),
            bi_ctx: HashMap::new(),
            tri: HashMap::new(),
            tri_ctx: HashMap::new(),
        }
    }

    pub fn train<'a, I>(corpus: I, config: LmConfig) -> Result<Self, DataError>
    where
        I: IntoIterator<Item = &'a Sentence>,
    {
        config.validate()?;
        let mut lm = TrigramLm::empty(config);
        let mut sentences = 0;
        for s in corpus {
            sentences += 1;
            let ids: Vec<u32> = s.words().map(|w| lm.intern(w)).collect();
            let mut h = (START, START);
            for &w in ids.iter().chain(std::iter::once(&END)) {
                lm.add(h, w, 1);
                h = (h.1, w);
            }
        }
        if sentences == 0 {
            return Err(DataError::EmptyCorpus);
        }
        Ok(lm)
    }

    fn intern(&mut self, w: &str) -> u32 {
        if let Some(&id) = self.index.get(w) {
            return id;
        }
        let id = self.words.len() as u32;
        self.words.push(w.to_owned());
        self.index.insert(w.to_owned(), id);
        self.uni.push(0);
        id
    }

    fn add(&mut self, (u, v): (u32, u32), w: u32, c: u64) {
        self.uni[w as usize] += c;
        self.total += c;
        *self.bi.entry((v, w)).or_default() += c;
        *self.bi_ctx.entry(v).or_default() += c;
        *self.tri.entry((u, v, w)).or_default() += c;
        *self.tri_ctx.entry((u, v)).or_default() += c;
    }

    fn id(&self, w: &str) -> u32 {
        match self.index.get(w) {
            Some(&id) if id != START => id,
            _ => UNK,
        }
    }

    pub fn config(&self) -> &LmConfig {
        &self.config
    }

    /// Outcomes a history can predict: every word, UNK and the end marker.
    pub fn outcomes(&self) -> Vec<&str> {
        self.words
            .iter()
            .enumerate()
            .filter(|&(i, _)| i as u32 != START)
            .map(|(_, w)| w.as_str())
            .collect()
    }

    fn support(&self) -> f64 {
        (self.words.len() - 1) as f64
    }

    fn p_ids(&self, u: u32, v: u32, w: u32) -> f64 {
        let a = self.config.alpha;
        let n = self.support();
        let est = |c: u64, ctx: u64| (c as f64 + a) / (ctx as f64 + a * n);
        let p3 = est(
            self.tri.get(&(u, v, w)).copied().unwrap_or(0),
            self.tri_ctx.get(&(u, v)).copied().unwrap_or(0),
        );
        let p2 = est(
            self.bi.get(&(v, w)).copied().unwrap_or(0),
            self.bi_ctx.get(&v).copied().unwrap_or(0),
        );
        let p1 = est(self.uni[w as usize], self.total);
        let [l3, l2, l1] = self.config.weights;
        l3 * p3 + l2 * p2 + l1 * p1
    }

    /// P(w | u v); `"<s>"` is accepted in the history.
    pub fn prob(&self, u: &str, v: &str, w: &str) -> f64 {
        let hist = |s: &str| self.index.get(s).copied().unwrap_or(UNK);
        self.p_ids(hist(u), hist(v), self.id(w))
    }

    /// Total log-probability including the end marker, divided by the
    /// token count.
    pub fn score(&self, s: &Sentence) -> f64 {
        let mut h = (START, START);
        let mut total = 0.0;
        for w in s.words().map(|w| self.id(w)).chain(std::iter::once(END)) {
            total += self.p_ids(h.0, h.1, w).ln();
            h = (h.1, w);
        }
        total / s.len().max(1) as f64
    }

    /// Sorted n-gram count listing under a version header.
    pub fn write_to(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "{LM_MAGIC}")?;
        let [l3, l2, l1] = self.config.weights;
        writeln!(w, "alpha\t{}\tweights\t{l3}\t{l2}\t{l1}", self.config.alpha)?;
        let mut lines: Vec<String> = self
            .tri
            .iter()
            .map(|(&(u, v, x), c)| format!("{}\t{}\t{}\t{c}", self.words[u as usize], self.words[v as usize], self.words[x as usize]))
            .collect();
        lines.sort();
        for l in lines {
            writeln!(w, "{l}")?;
        }
        Ok(())
    }

    pub fn read_from(r: impl BufRead) -> Result<Self, DataError> {
        let bad = |line: usize, msg: &str| DataError::LmFormat {
            line,
            msg: msg.to_owned(),
        };
        let mut lines = r.lines().enumerate();
        let mut next = |n: usize| -> Result<String, DataError> {
            match lines.next() {
                Some((_, Ok(l))) => Ok(l),
                Some((_, Err(e))) => Err(bad(n, &e.to_string())),
                None => Err(bad(n, "unexpected end of file")),
            }
        };
        if next(1)? != LM_MAGIC {
            return Err(bad(1, "missing version header"));
        }
        let params = next(2)?;
        let f: Vec<&str> = params.split('\t').collect();
        let num = |s: &str| s.parse::<f64>().map_err(|_| bad(2, "bad number"));
        if f.len() != 6 || f[0] != "alpha" || f[2] != "weights" {
            return Err(bad(2, "expected alpha and weights"));
        }
        let config = LmConfig {
            alpha: num(f[1])?,
            weights: [num(f[3])?, num(f[4])?, num(f[5])?],
        };
        config.validate()?;
        let mut lm = TrigramLm::empty(config);
        let mut n = 2;
        while let Some((i, l)) = lines.next() {
            n = i + 1;
            let l = l.map_err(|e| bad(n, &e.to_string()))?;
            let f: Vec<&str> = l.split('\t').collect();
            if f.len() != 4 {
                return Err(bad(n, "expected three words and a count"));
            }
            let c: u64 = f[3].parse().map_err(|_| bad(n, "bad count"))?;
            let (u, v, w) = (lm.intern(f[0]), lm.intern(f[1]), lm.intern(f[2]));
            if w == START {
                return Err(bad(n, "start marker cannot be predicted"));
            }
            lm.add((u, v), w, c);
        }
        if lm.total == 0 {
            return Err(bad(n, "no n-grams"));
        }
        Ok(lm)
    }
}

/// Lines sorted by descending score (stable), truncated to `top_k`.
pub fn lm_select(lm: &TrigramLm, lines: &[Sentence], top_k: usize) -> Vec<Sentence> {
    let mut scored: Vec<(f64, usize)> = lines.iter().enumerate().map(|(i, s)| (lm.score(s), i)).collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0));
    scored.into_iter().take(top_k).map(|(_, i)| lines[i].clone()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn corpus() -> Vec<Sentence> {
        ["the cat sat", "the dog sat down", "a cat ran"].iter().map(|s| Sentence::parse(s)).collect()
    }

    #[test]
    fn histories_are_normalized() {
        let lm = TrigramLm::train(&corpus(), LmConfig::default()).unwrap();
        for (u, v) in [("<s>", "<s>"), ("<s>", "the"), ("the", "cat"), ("zzz", "yyy"), ("cat", "sat")] {
            let sum: f64 = lm.outcomes().iter().map(|w| lm.prob(u, v, w)).sum();
            assert!((sum - 1.0).abs() < 1e-6, "{u} {v}: {sum}");
        }
    }

    #[test]
    fn round_trip() {
        let lm = TrigramLm::train(&corpus(), LmConfig::default()).unwrap();
        let mut buf = Vec::new();
        lm.write_to(&mut buf).unwrap();
        let back = TrigramLm::read_from(&buf[..]).unwrap();
        for s in corpus().iter().chain([Sentence::parse("the unknown cat")].iter()) {
            assert!((lm.score(s) - back.score(s)).abs() < 1e-12);
        }
        assert!(TrigramLm::read_from(&b"nope\n"[..]).is_err());
        assert!(matches!(TrigramLm::train(&[], LmConfig::default()), Err(DataError::EmptyCorpus)));
    }
}
