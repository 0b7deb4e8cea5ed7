mod common;

use apedit::editops::{apply_ops, extract_ops, EditOp, EditScript};
use common::oracle::{all_sequences, indel_distance, sentence};
use common::s;
use proptest::prelude::*;

fn words(len: std::ops::Range<usize>) -> impl Strategy<Value = Vec<&'static str>> {
    prop::collection::vec(prop::sample::select(vec!["a", "b", "c", "d"]), len)
}

#[test]
fn exhaustive_binary_alphabet() {
    let seqs = all_sequences(&["a", "b"], 5);
    assert_eq!(seqs.len(), 63);
    for mt in &seqs {
        for pe in &seqs {
            let (m, p) = (sentence(mt), sentence(pe));
            let script = extract_ops(&m, &p);
            let edits = script.count(|op| matches!(op, EditOp::Del | EditOp::Ins(_)));
            assert_eq!(edits, indel_distance(mt, pe), "{mt:?} -> {pe:?}");
            assert_eq!(apply_ops(&m, &script).unwrap(), p);
        }
    }
}

#[test]
fn worked_example() {
    let mt = s("The cats is grey");
    let script = extract_ops(&mt, &s("The cat is grey ."));
    let want = vec![
        EditOp::Keep,
        EditOp::Del,
        EditOp::ins("cat").unwrap(),
        EditOp::Keep,
        EditOp::Keep,
        EditOp::ins(".").unwrap(),
    ];
    assert_eq!(script.ops(), &want[..]);
    assert_eq!(apply_ops(&mt, &script).unwrap().to_string(), "The cat is grey .");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn round_trip_and_minimal(mt in words(0..12), pe in words(0..12)) {
        let (m, p) = (sentence(&mt), sentence(&pe));
        let script = extract_ops(&m, &p);
        prop_assert_eq!(apply_ops(&m, &script).unwrap(), p);
        let edits = script.count(|op| matches!(op, EditOp::Del | EditOp::Ins(_)));
        prop_assert_eq!(edits, indel_distance(&mt, &pe));
        prop_assert!(script.count_advancing() <= mt.len());
    }

    #[test]
    fn text_format_round_trips(mt in words(0..8), pe in words(0..8)) {
        let script = extract_ops(&sentence(&mt), &sentence(&pe));
        let parsed: EditScript = script.to_string().parse().unwrap();
        prop_assert_eq!(parsed, script);
    }

    #[test]
    fn truncated_scripts_keep_the_rest(mt in words(1..10), pe in words(0..10), cut in 0usize..20) {
        let m = sentence(&mt);
        let script = extract_ops(&m, &sentence(&pe));
        let ops = script.ops();
        let prefix = EditScript::new(ops[..cut.min(ops.len())].to_vec()).unwrap();
        let out = apply_ops(&m, &prefix).unwrap();
        let consumed = prefix.count_advancing();
        let tail: Vec<&str> = out.words().skip(out.len() - (mt.len() - consumed)).collect();
        prop_assert_eq!(tail, mt[consumed..].to_vec());
    }
}
