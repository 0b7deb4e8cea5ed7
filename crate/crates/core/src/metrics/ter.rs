use std::collections::{HashMap, HashSet};

use serde::Serialize;

use super::MetricError;
use crate::editops::Sentence;

/// Longest block considered for a shift.
pub const MAX_SHIFT_LEN: usize = 10;

/// Edit counts turning a hypothesis into its reference.
///
/// An insertion is a reference word missing from the hypothesis; a deletion
/// is a hypothesis word absent from the reference.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct TerStats {
    pub insertions: usize,
    pub deletions: usize,
    pub substitutions: usize,
    pub shifts: usize,
    pub ref_len: usize,
    pub ter: f64,
    /// Set when the reference was empty; `ter` is then `|hyp| / 1`.
    pub empty_reference: bool,
}

impl TerStats {
    pub fn edits(&self) -> usize {
        self.insertions + self.deletions + self.substitutions + self.shifts
    }

    fn finish(mut self) -> Self {
        self.ter = self.edits() as f64 / self.ref_len.max(1) as f64;
        self
    }

    pub fn tsv_header() -> &'static str {
        "ins\tdel\tsub\tshift\tref_len\tter"
    }

    pub fn to_tsv(&self) -> String {
        format!(
            "{}\t{}\t{}\t{}\t{}\t{:.6}",
            self.insertions, self.deletions, self.substitutions, self.shifts, self.ref_len, self.ter
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Step {
    Match,
    Sub,
    Del,
    Ins,
}

/// Unit-cost Levenshtein table between `hyp` and `reference`.
fn lev_table(hyp: &[u32], reference: &[u32]) -> Vec<u32> {
    let (n, m) = (hyp.len(), reference.len());
    let w = m + 1;
    let mut d = vec![0u32; (n + 1) * w];
    for j in 0..=m {
        d[j] = j as u32;
    }
    for i in 1..=n {
        d[i * w] = i as u32;
        for j in 1..=m {
            let diag = d[(i - 1) * w + j - 1] + u32::from(hyp[i - 1] != reference[j - 1]);
            let del = d[(i - 1) * w + j] + 1;
            let ins = d[i * w + j - 1] + 1;
            d[i * w + j] = diag.min(del).min(ins);
        }
    }
    d
}

fn lev_distance(hyp: &[u32], reference: &[u32]) -> u32 {
    // two-row variant for the inner shift search
    let m = reference.len();
    let mut prev: Vec<u32> = (0..=m as u32).collect();
    let mut cur = vec![0u32; m + 1];
    for (i, &h) in hyp.iter().enumerate() {
        cur[0] = i as u32 + 1;
        for j in 1..=m {
            let diag = prev[j - 1] + u32::from(h != reference[j - 1]);
            cur[j] = diag.min(prev[j] + 1).min(cur[j - 1] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[m]
}

/// Backtrace preferring match/substitution, then deletion, then insertion.
fn lev_path(hyp: &[u32], reference: &[u32]) -> Vec<Step> {
    let d = lev_table(hyp, reference);
    let w = reference.len() + 1;
    let (mut i, mut j) = (hyp.len(), reference.len());
    let mut path = Vec::with_capacity(i.max(j));
    while i > 0 || j > 0 {
        let here = d[i * w + j];
        if i > 0 && j > 0 {
            let same = hyp[i - 1] == reference[j - 1];
            if d[(i - 1) * w + j - 1] + u32::from(!same) == here {
                path.push(if same { Step::Match } else { Step::Sub });
                i -= 1;
                j -= 1;
                continue;
            }
        }
        if i > 0 && d[(i - 1) * w + j] + 1 == here {
            path.push(Step::Del);
            i -= 1;
        } else {
            path.push(Step::Ins);
            j -= 1;
        }
    }
    path.reverse();
    path
}

fn count_path(path: &[Step], stats: &mut TerStats) {
    for step in path {
        match step {
            Step::Match => {}
            Step::Sub => stats.substitutions += 1,
            Step::Del => stats.deletions += 1,
            Step::Ins => stats.insertions += 1,
        }
    }
}

/// Which hypothesis positions are matched in the current alignment.
fn matched_positions(path: &[Step], hyp_len: usize) -> Vec<bool> {
    let mut matched = vec![false; hyp_len];
    let mut i = 0;
    for step in path {
        match step {
            Step::Match => {
                matched[i] = true;
                i += 1;
            }
            Step::Sub | Step::Del => i += 1,
            Step::Ins => {}
        }
    }
    matched
}

struct Shift {
    start: usize,
    len: usize,
    dest: usize,
    gain: u32,
}

fn shifted(hyp: &[u32], start: usize, len: usize, dest: usize) -> Vec<u32> {
    let mut rest: Vec<u32> = Vec::with_capacity(hyp.len());
    rest.extend_from_slice(&hyp[..start]);
    rest.extend_from_slice(&hyp[start + len..]);
    let mut out = Vec::with_capacity(hyp.len());
    out.extend_from_slice(&rest[..dest]);
    out.extend_from_slice(&hyp[start..start + len]);
    out.extend_from_slice(&rest[dest..]);
    out
}

/// Finds the shift with the largest distance reduction. Candidates are
/// visited by source start, then length, then destination, and only a
/// strictly larger gain replaces the incumbent.
fn best_shift(hyp: &[u32], reference: &[u32], ref_blocks: &HashSet<&[u32]>) -> Option<Shift> {
    let path = lev_path(hyp, reference);
    let current = path.iter().filter(|s| **s != Step::Match).count() as u32;
    if current == 0 {
        return None;
    }
    let matched = matched_positions(&path, hyp.len());
    let mut best: Option<Shift> = None;
    for start in 0..hyp.len() {
        for len in 1..=MAX_SHIFT_LEN.min(hyp.len() - start) {
            let block = &hyp[start..start + len];
            if !ref_blocks.contains(block) {
                // longer blocks starting here cannot match either
                break;
            }
            if matched[start..start + len].iter().all(|&m| m) {
                continue;
            }
            for dest in 0..=hyp.len() - len {
                if dest == start {
                    continue;
                }
                let candidate = shifted(hyp, start, len, dest);
                let d = lev_distance(&candidate, reference);
                if d < current {
                    let gain = current - d;
                    if best.as_ref().map_or(true, |b| gain > b.gain) {
                        best = Some(Shift { start, len, dest, gain });
                    }
                }
            }
        }
    }
    best
}

fn intern<'a>(hyp: &'a Sentence, reference: &'a Sentence) -> (Vec<u32>, Vec<u32>) {
    let mut ids: HashMap<&'a str, u32> = HashMap::new();
    let mut map = |s: &'a Sentence| -> Vec<u32> {
        s.words()
            .map(|w| {
                let next = ids.len() as u32;
                *ids.entry(w).or_insert(next)
            })
            .collect()
    };
    let h = map(hyp);
    let r = map(reference);
    (h, r)
}

/// Sentence-level TER, optionally with greedy block shifts.
pub fn ter_sentence(hyp: &Sentence, reference: &Sentence, use_shifts: bool) -> TerStats {
    let mut stats = TerStats {
        ref_len: reference.len(),
        ..TerStats::default()
    };
    if reference.is_empty() {
        stats.deletions = hyp.len();
        stats.empty_reference = true;
        return stats.finish();
    }
    let (mut h, r) = intern(hyp, reference);
    if use_shifts {
        let mut blocks: HashSet<&[u32]> = HashSet::new();
        for start in 0..r.len() {
            for len in 1..=MAX_SHIFT_LEN.min(r.len() - start) {
                blocks.insert(&r[start..start + len]);
            }
        }
        while let Some(shift) = best_shift(&h, &r, &blocks) {
            h = shifted(&h, shift.start, shift.len, shift.dest);
            stats.shifts += 1;
        }
    }
    count_path(&lev_path(&h, &r), &mut stats);
    stats.finish()
}

/// Corpus TER ×100: summed edits over summed reference lengths.
pub fn ter_corpus<'a, I>(pairs: I, use_shifts: bool) -> Result<f64, MetricError>
where
    I: IntoIterator<Item = (&'a Sentence, &'a Sentence)>,
{
    let stats: Vec<TerStats> = pairs
        .into_iter()
        .map(|(h, r)| ter_sentence(h, r, use_shifts))
        .collect();
    ter_from_stats(&stats)
}

pub fn ter_from_stats(stats: &[TerStats]) -> Result<f64, MetricError> {
    if stats.is_empty() {
        return Err(MetricError::EmptyCorpus);
    }
    let edits: usize = stats.iter().map(TerStats::edits).sum();
    let len: usize = stats.iter().map(|s| s.ref_len.max(1)).sum();
    Ok(100.0 * edits as f64 / len as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(text: &str) -> Sentence {
        Sentence::parse(text)
    }

    #[test]
    fn identical_is_zero() {
        let st = ter_sentence(&s("a b c"), &s("a b c"), true);
        assert_eq!(st.edits(), 0);
        assert_eq!(st.ter, 0.0);
    }

    #[test]
    fn single_insertion() {
        let st = ter_sentence(&s("a b c d"), &s("a b c d e"), false);
        assert_eq!((st.insertions, st.deletions, st.substitutions), (1, 0, 0));
        assert!((st.ter - 0.2).abs() < 1e-12);
    }

    #[test]
    fn rotation_costs_one_shift() {
        let st = ter_sentence(&s("c a b"), &s("a b c"), true);
        assert_eq!(st.shifts, 1);
        assert_eq!(st.edits(), 1);
        assert_eq!(st.ter, 1.0 / 3.0);
        let plain = ter_sentence(&s("c a b"), &s("a b c"), false);
        assert_eq!(plain.edits(), 2);
    }

    #[test]
    fn empty_reference_is_flagged() {
        let st = ter_sentence(&s("a b"), &s(""), true);
        assert!(st.empty_reference);
        assert_eq!(st.ter, 2.0);
    }

    #[test]
    fn corpus_is_micro_averaged() {
        let (h1, r1) = (s("a b c x"), s("a b c d"));
        let (h2, r2) = (s("a b c d e f"), s("a b c d e f"));
        let ter = ter_corpus([(&h1, &r1), (&h2, &r2)], false).unwrap();
        assert!((ter - 10.0).abs() < 1e-12);
        let none: [(&Sentence, &Sentence); 0] = [];
        assert_eq!(ter_corpus(none, true), Err(MetricError::EmptyCorpus));
    }
}
