mod common;

use apedit::metrics::{bleu_corpus, ter_corpus, ter_sentence};
use common::oracle::{all_sequences, levenshtein, sentence};
use common::s;
use proptest::prelude::*;

fn words(len: std::ops::Range<usize>) -> impl Strategy<Value = Vec<&'static str>> {
    prop::collection::vec(prop::sample::select(vec!["a", "b", "c", "d", "e"]), len)
}

#[test]
fn no_shift_ter_is_levenshtein_exhaustively() {
    let seqs = all_sequences(&["a", "b", "c"], 4);
    for h in &seqs {
        for r in seqs.iter().filter(|r| !r.is_empty()) {
            let st = ter_sentence(&sentence(h), &sentence(r), false);
            assert_eq!(st.edits(), levenshtein(h, r), "{h:?} vs {r:?}");
            assert_eq!(st.shifts, 0);
            assert!((st.ter - levenshtein(h, r) as f64 / r.len() as f64).abs() < 1e-12);
        }
    }
}

#[test]
fn shift_example() {
    let st = ter_sentence(&s("c a b"), &s("a b c"), true);
    assert_eq!(st.shifts, 1);
    assert_eq!(st.ter, 1.0 / 3.0);
}

#[test]
fn identical_corpus() {
    let c = vec![s("a b c d e"), s("x y z w")];
    assert_eq!(ter_corpus(c.iter().zip(&c), true).unwrap(), 0.0);
    assert!((bleu_corpus(c.iter().zip(&c)).unwrap().score - 100.0).abs() < 1e-9);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn shifts_never_hurt(h in words(0..9), r in words(1..9)) {
        let (hs, rs) = (sentence(&h), sentence(&r));
        let with = ter_sentence(&hs, &rs, true);
        let without = ter_sentence(&hs, &rs, false);
        prop_assert!(with.ter <= without.ter + 1e-12);
        prop_assert!(with.ter >= 0.0 && with.ter.is_finite());
        prop_assert_eq!(with.ref_len, r.len());
    }

    #[test]
    fn bleu_is_bounded(h in words(0..9), r in words(1..9)) {
        let (hs, rs) = (sentence(&h), sentence(&r));
        let b = bleu_corpus([(&hs, &rs)]).unwrap().score;
        prop_assert!((0.0..=100.0 + 1e-9).contains(&b));
    }
}
