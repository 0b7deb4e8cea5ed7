use log::warn;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{DataError, Triple};
use crate::editops::Sentence;
use crate::infer::decode_words;
use crate::metrics::{ter_sentence, TerStats};
use crate::model::{Model, TargetMode};
use crate::numcore::Scalar;

/// Insertion, deletion, substitution and shift rates over the reference
/// length, followed by TER.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TerFeature(pub [f64; 5]);

impl TerFeature {
    pub fn from_stats(s: &TerStats) -> Self {
        let n = s.ref_len.max(1) as f64;
        TerFeature([
            s.insertions as f64 / n,
            s.deletions as f64 / n,
            s.substitutions as f64 / n,
            s.shifts as f64 / n,
            s.ter,
        ])
    }

    /// Features of MT measured against PE.
    pub fn of(t: &Triple, use_shifts: bool) -> Self {
        TerFeature::from_stats(&ter_sentence(&t.mt, &t.pe, use_shifts))
    }

    pub fn distance(&self, other: &TerFeature) -> f64 {
        self.0.iter().zip(other.0).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
    }

    pub fn ter(&self) -> f64 {
        self.0[4]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TerFilterConfig {
    pub target_size: usize,
    pub subset_size: usize,
    pub seed: u64,
    pub use_shifts: bool,
}

impl TerFilterConfig {
    pub fn new(target_size: usize) -> Self {
        TerFilterConfig {
            target_size,
            subset_size: 1000,
            seed: 1,
            use_shifts: true,
        }
    }
}

/// Indices into `synthetic`, in selection order. Real triples are visited
/// cyclically; each draws `subset_size` still-unselected candidates and
/// takes the nearest one (lowest index on ties).
pub fn ter_filter_indices(real: &[Triple], synthetic: &[Triple], cfg: &TerFilterConfig) -> Result<Vec<usize>, DataError> {
    if real.is_empty() {
        return Err(DataError::EmptyCorpus);
    }
    if cfg.target_size == 0 || cfg.subset_size == 0 {
        return Err(DataError::InvalidArgument("target_size and subset_size must be positive".into()));
    }
    if synthetic.len() < cfg.target_size {
        return Err(DataError::PoolExhausted {
            needed: cfg.target_size,
            available: synthetic.len(),
        });
    }
    let real_f: Vec<TerFeature> = real.iter().map(|t| TerFeature::of(t, cfg.use_shifts)).collect();
    let syn_f: Vec<TerFeature> = synthetic.iter().map(|t| TerFeature::of(t, cfg.use_shifts)).collect();
    let mut pool: Vec<usize> = (0..synthetic.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut out = Vec::with_capacity(cfg.target_size);
    for r in real_f.iter().cycle() {
        if out.len() == cfg.target_size {
            break;
        }
        if pool.is_empty() {
            return Err(DataError::PoolExhausted {
                needed: cfg.target_size,
                available: out.len(),
            });
        }
        let k = cfg.subset_size.min(pool.len());
        let best = sample(&mut rng, pool.len(), k)
            .into_iter()
            .map(|pos| (r.distance(&syn_f[pool[pos]]), pool[pos], pos))
            .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
            .expect("non-empty subset");
        out.push(best.1);
        pool.swap_remove(best.2);
    }
    Ok(out)
}

pub fn ter_filter(real: &[Triple], synthetic: &[Triple], cfg: &TerFilterConfig) -> Result<Vec<Triple>, DataError> {
    Ok(ter_filter_indices(real, synthetic, cfg)?
        .into_iter()
        .map(|i| synthetic[i].clone())
        .collect())
}

#[derive(Clone, Debug, Default)]
pub struct SynthOutput {
    pub triples: Vec<Triple>,
    /// Input line numbers (0-based) that produced no triple.
    pub skipped: Vec<usize>,
}

fn generate<T: Scalar>(model: &Model<T>, pe: &Sentence) -> Result<Sentence, String> {
    let out = decode_words(model, pe, 2 * pe.len() + 10).map_err(|e| e.to_string())?;
    if out.is_empty() {
        return Err("generator produced an empty sentence".into());
    }
    Ok(out)
}

/// Back-generates the source and MT sides of each PE line.
pub fn gen_synthetic<T: Scalar>(
    pe_lines: &[Sentence],
    pe2src: &Model<T>,
    pe2mt: &Model<T>,
    threads: usize,
) -> Result<SynthOutput, DataError> {
    for m in [pe2src, pe2mt] {
        if m.config().target != TargetMode::Words {
            return Err(DataError::InvalidArgument("generators must be words-mode models".into()));
        }
    }
    let threads = threads.max(1).min(pe_lines.len().max(1));
    let chunk = pe_lines.len().div_ceil(threads).max(1);
    let results: Vec<Result<Triple, String>> = std::thread::scope(|scope| {
        let handles: Vec<_> = pe_lines
            .chunks(chunk)
            .map(|part| {
                scope.spawn(move || {
                    part.iter()
                        .map(|pe| {
                            Ok(Triple {
                                src: generate(pe2src, pe)?,
                                mt: generate(pe2mt, pe)?,
                                pe: pe.clone(),
                            })
                        })
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        handles.into_iter().flat_map(|h| h.join().expect("generation thread panicked")).collect()
    });
    let mut out = SynthOutput::default();
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(t) => out.triples.push(t),
            Err(e) => {
                warn!("line {}: skipped ({e})", i + 1);
                out.skipped.push(i);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(mt: &str, pe: &str) -> Triple {
        Triple::new("s", mt, pe)
    }

    #[test]
    fn exact_duplicates_win() {
        let real = vec![t("a b c d", "a b c d"), t("a b", "a b c d")];
        let syn = vec![t("x y", "x y z w"), t("p q r", "p q r"), t("k l m n", "k l m n o p q r"), t("u v w x", "u v w x")];
        let mut cfg = TerFilterConfig::new(2);
        cfg.subset_size = 10;
        let idx = ter_filter_indices(&real, &syn, &cfg).unwrap();
        assert_eq!(idx, vec![1, 0]);
    }

    #[test]
    fn pool_too_small() {
        let real = vec![t("a", "a")];
        let syn = vec![t("a", "a")];
        assert!(matches!(
            ter_filter_indices(&real, &syn, &TerFilterConfig::new(2)),
            Err(DataError::PoolExhausted { .. })
        ));
    }
}
