mod common;

use std::collections::HashSet;

use apedit::datapipe::*;
use apedit::editops::Sentence;
use apedit::model::{Model, ModelConfig};
use common::s;
use common::toy::{all_triples, toy_corpus};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn pe_side(n: usize) -> Vec<Sentence> {
    toy_corpus(n, 11).into_iter().map(|t| t.pe).collect()
}

#[test]
fn training_sentences_beat_their_permutations() {
    let corpus = pe_side(100);
    let lm = TrigramLm::train(&corpus, LmConfig::default()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut orig, mut perm) = (0.0, 0.0);
    for sent in corpus.iter().take(100) {
        let mut words: Vec<&str> = sent.words().collect();
        words.shuffle(&mut rng);
        orig += lm.score(sent);
        perm += lm.score(&Sentence::parse(&words.join(" ")));
    }
    assert!(orig / 100.0 > perm / 100.0);
}

#[test]
fn single_sentence_is_the_argmax_of_its_length() {
    let only = s("two big cats sleep .");
    let lm = TrigramLm::train(std::slice::from_ref(&only), LmConfig::default()).unwrap();
    let pool: Vec<&str> = vec!["two", "big", "cats", "sleep", ".", "one", "dog", "runs"];
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let best = lm.score(&only);
    for _ in 0..100 {
        let alt: Vec<&str> = (0..only.len()).map(|_| pool[rng.gen_range(0..pool.len())]).collect();
        let alt = Sentence::parse(&alt.join(" "));
        if alt != only {
            assert!(lm.score(&alt) < best, "{alt}");
        }
    }
}

#[test]
fn selection_order_is_shuffle_invariant() {
    let lm = TrigramLm::train(&pe_side(60), LmConfig::default()).unwrap();
    let mut lines: Vec<Sentence> = all_triples().into_iter().map(|t| t.mt).take(80).collect();
    lines.push(s("completely unrelated words here"));
    let base = lm_select(&lm, &lines, lines.len());
    assert_eq!(base.len(), lines.len());
    let scores: Vec<f64> = base.iter().map(|l| lm.score(l)).collect();
    assert!(scores.windows(2).all(|w| w[0] >= w[1]));
    assert_eq!(base.last().unwrap(), &s("completely unrelated words here"));
    assert_eq!(lm_select(&lm, &lines, 1), vec![base[0].clone()]);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..5 {
        let mut shuffled = lines.clone();
        shuffled.shuffle(&mut rng);
        let got: Vec<f64> = lm_select(&lm, &shuffled, 30).iter().map(|l| lm.score(l)).collect();
        assert_eq!(got, scores[..30].to_vec());
    }
}

#[test]
fn ter_filter_is_deterministic_and_without_replacement() {
    let real = toy_corpus(20, 4);
    let pool: Vec<Triple> = all_triples();
    let mut cfg = TerFilterConfig::new(150);
    cfg.subset_size = 40;
    let a = ter_filter_indices(&real, &pool, &cfg).unwrap();
    let b = ter_filter_indices(&real, &pool, &cfg).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.len(), 150);
    assert_eq!(a.iter().collect::<HashSet<_>>().len(), 150);
    cfg.seed = 2;
    assert_ne!(ter_filter_indices(&real, &pool, &cfg).unwrap(), a);
    let all = TerFilterConfig { target_size: pool.len(), ..cfg };
    assert_eq!(ter_filter_indices(&real, &pool, &all).unwrap().len(), pool.len());
}

#[test]
fn feature_vectors_are_rates() {
    let f = TerFeature::of(&Triple::new("x", "a b c", "a x c d"), true);
    assert_eq!(f.0, [0.25, 0.0, 0.25, 0.0, 0.5]);
    assert!(f.0.iter().all(|v| *v >= 0.0 && v.is_finite()));
}

#[test]
fn generation_edge_cases() {
    let data: Vec<_> = toy_corpus(4, 1)
        .iter()
        .map(|t| apedit::trainer::Sample {
            src: None,
            input: t.pe.clone(),
            target: t.src.clone(),
        })
        .collect();
    let cfg = ModelConfig::words().with_sizes(4, 4);
    let gen = Model::<f32>::new(cfg.clone(), build_model_vocabs(&cfg, &data).unwrap()).unwrap();
    let out = gen_synthetic(&[], &gen, &gen, 1).unwrap();
    assert!(out.triples.is_empty());
    let lines = vec![s("one cat sleeps ."), Sentence::default(), s("two dogs run .")];
    let out = gen_synthetic(&lines, &gen, &gen, 2).unwrap();
    assert_eq!(out.triples.len() + out.skipped.len(), lines.len());
    assert!(out.skipped.contains(&1));
    for t in &out.triples {
        assert!(lines.contains(&t.pe));
    }
    let ops = Model::<f32>::new(
        ModelConfig::mono_forced().with_sizes(4, 4),
        build_model_vocabs(
            &ModelConfig::mono_forced(),
            &[apedit::trainer::Sample {
                src: None,
                input: s("a"),
                target: s("a"),
            }],
        )
        .unwrap(),
    )
    .unwrap();
    assert!(gen_synthetic(&lines, &ops, &ops, 1).is_err());
}
