//! Independent reference implementations used as test oracles.

use apedit::editops::Sentence;

/// Minimum number of insertions and deletions, from the LCS length.
pub fn indel_distance(a: &[&str], b: &[&str]) -> usize {
    let mut lcs = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            lcs[i][j] = if a[i - 1] == b[j - 1] {
                lcs[i - 1][j - 1] + 1
            } else {
                lcs[i - 1][j].max(lcs[i][j - 1])
            };
        }
    }
    a.len() + b.len() - 2 * lcs[a.len()][b.len()]
}

/// Unit-cost Levenshtein distance by plain recursion with memoization.
pub fn levenshtein(a: &[&str], b: &[&str]) -> usize {
    fn go(a: &[&str], b: &[&str], memo: &mut Vec<Vec<Option<usize>>>) -> usize {
        if let Some(v) = memo[a.len()][b.len()] {
            return v;
        }
        let v = match (a.split_last(), b.split_last()) {
            (None, _) => b.len(),
            (_, None) => a.len(),
            (Some((x, ra)), Some((y, rb))) => {
                let sub = go(ra, rb, memo) + usize::from(x != y);
                sub.min(go(ra, b, memo) + 1).min(go(a, rb, memo) + 1)
            }
        };
        memo[a.len()][b.len()] = Some(v);
        v
    }
    let mut memo = vec![vec![None; b.len() + 1]; a.len() + 1];
    go(a, b, &mut memo)
}

/// Every sequence over `alphabet` with length at most `max_len`.
pub fn all_sequences(alphabet: &[&'static str], max_len: usize) -> Vec<Vec<&'static str>> {
    let mut out = vec![vec![]];
    let mut frontier = vec![vec![]];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for seq in &frontier {
            for &a in alphabet {
                let mut s: Vec<&str> = seq.clone();
                s.push(a);
                next.push(s);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

pub fn sentence(words: &[&str]) -> Sentence {
    Sentence::parse(&words.join(" "))
}
