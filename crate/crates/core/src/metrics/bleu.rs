use std::collections::HashMap;

use serde::Serialize;

use super::MetricError;
use crate::editops::Sentence;

pub const MAX_ORDER: usize = 4;

/// How orders n ≥ 2 with zero clipped matches are smoothed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Smoothing {
    /// `(0 + 1) / (total + 1)`.
    #[default]
    AddOne,
    /// `1 / (2^k · total)` for the k-th order with zero matches.
    Exponential,
    None,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BleuScore {
    /// BLEU-4 in [0, 100].
    pub score: f64,
    pub precisions: [f64; MAX_ORDER],
    pub brevity_penalty: f64,
    pub hyp_len: usize,
    pub ref_len: usize,
}

fn ngram_counts<'a>(words: &'a [&'a str], n: usize) -> HashMap<&'a [&'a str], usize> {
    let mut counts = HashMap::new();
    if words.len() >= n {
        for gram in words.windows(n) {
            *counts.entry(gram).or_insert(0) += 1;
        }
    }
    counts
}

pub fn bleu_corpus<'a, I>(pairs: I) -> Result<BleuScore, MetricError>
where
    I: IntoIterator<Item = (&'a Sentence, &'a Sentence)>,
{
    bleu_corpus_with(pairs, Smoothing::default())
}

pub fn bleu_corpus_with<'a, I>(pairs: I, smoothing: Smoothing) -> Result<BleuScore, MetricError>
where
    I: IntoIterator<Item = (&'a Sentence, &'a Sentence)>,
{
    let mut matches = [0usize; MAX_ORDER];
    let mut totals = [0usize; MAX_ORDER];
    let (mut hyp_len, mut ref_len) = (0, 0);
    let mut n_pairs = 0;
    for (hyp, reference) in pairs {
        n_pairs += 1;
        let h: Vec<&str> = hyp.words().collect();
        let r: Vec<&str> = reference.words().collect();
        hyp_len += h.len();
        ref_len += r.len();
        for n in 1..=MAX_ORDER {
            let hc = ngram_counts(&h, n);
            let rc = ngram_counts(&r, n);
            for (gram, c) in &hc {
                matches[n - 1] += (*c).min(rc.get(gram).copied().unwrap_or(0));
            }
            totals[n - 1] += h.len().saturating_sub(n - 1);
        }
    }
    if n_pairs == 0 {
        return Err(MetricError::EmptyCorpus);
    }

    let mut precisions = [0.0; MAX_ORDER];
    let mut zero_orders = 0;
    for n in 0..MAX_ORDER {
        let (m, t) = (matches[n] as f64, totals[n] as f64);
        precisions[n] = if n == 0 && t == 0.0 {
            0.0
        } else if t == 0.0 {
            // no n-grams of this order anywhere in the hypotheses
            if smoothing == Smoothing::None {
                0.0
            } else {
                1.0
            }
        } else if matches[n] > 0 || n == 0 {
            m / t
        } else {
            zero_orders += 1;
            match smoothing {
                Smoothing::AddOne => 1.0 / (t + 1.0),
                Smoothing::Exponential => 1.0 / (2f64.powi(zero_orders) * t),
                Smoothing::None => 0.0,
            }
        };
    }

    let brevity_penalty = if hyp_len == 0 {
        0.0
    } else if hyp_len < ref_len {
        (1.0 - ref_len as f64 / hyp_len as f64).exp()
    } else {
        1.0
    };
    let score = if precisions.iter().any(|&p| p <= 0.0) {
        0.0
    } else {
        let log_mean = precisions.iter().map(|p| p.ln()).sum::<f64>() / MAX_ORDER as f64;
        (100.0 * brevity_penalty * log_mean.exp()).min(100.0)
    };
    Ok(BleuScore {
        score,
        precisions,
        brevity_penalty,
        hyp_len,
        ref_len,
    })
}
