#![allow(dead_code)]

use apedit::editops::Sentence;
use apedit::model::{Batch, Example, Model, ModelConfig, ModelVocabs};
use apedit::numcore::Scalar;
use apedit::vocab::{Vocab, VocabKind};

pub fn s(text: &str) -> Sentence {
    Sentence::parse(text)
}

pub fn vocab(kind: VocabKind, extra: &[&str]) -> Vocab {
    let mut symbols: Vec<String> = kind.reserved().iter().map(|s| s.to_string()).collect();
    symbols.extend(extra.iter().map(|s| s.to_string()));
    Vocab::from_symbols(kind, symbols).unwrap()
}

/// Words `a b c` and insertions of `a b`: seven entries each.
pub fn tiny_vocabs(chained: bool) -> ModelVocabs {
    ModelVocabs {
        src: chained.then(|| vocab(VocabKind::Words, &["x", "y", "z"])),
        input: vocab(VocabKind::Words, &["a", "b", "c"]),
        output: vocab(VocabKind::Ops, &["INS|a", "INS|b"]),
    }
}

pub fn tiny_model<T: Scalar>(config: ModelConfig, seed: u64) -> Model<T> {
    let chained = config.is_chained();
    let config = ModelConfig { seed, ..config.with_sizes(3, 3) };
    Model::new(config, tiny_vocabs(chained)).unwrap()
}

pub fn batch_of(examples: &[Example]) -> Batch {
    let refs: Vec<&Example> = examples.iter().collect();
    Batch::new(&refs).unwrap()
}
pub mod toy;
pub mod oracle;

/// Checks the forced-pointer law on one greedy decode: before step t the
/// pointer is one plus the Keeps and Dels emitted so far, the attended
/// position is inside the input, and the decoded script applies cleanly.
pub fn check_pointer_law<T: Scalar>(
    model: &Model<T>,
    src: Option<&Sentence>,
    mt: &Sentence,
    max_extra: usize,
) -> Result<usize, String> {
    let d = apedit::infer::decode_ops_traced(model, src, mt, max_extra).map_err(|e| e.to_string())?;
    let ops = d.script.ops();
    if d.trace.len() != ops.len() {
        return Err(format!("{} trace entries for {} ops", d.trace.len(), ops.len()));
    }
    let mut advanced = 0;
    for (t, (step, op)) in d.trace.iter().zip(ops).enumerate() {
        if step.pointer != advanced + 1 {
            return Err(format!("step {t}: pointer {} after {advanced} advancing ops", step.pointer));
        }
        match step.attended {
            Some(a) if a < mt.len() => {}
            other => return Err(format!("step {t}: attended {other:?} for input of {}", mt.len())),
        }
        if op.advances() {
            advanced += 1;
        }
    }
    if advanced > mt.len() {
        return Err(format!("{advanced} advancing ops on {} tokens", mt.len()));
    }
    apedit::editops::apply_ops(mt, &d.script).map_err(|e| e.to_string())?;
    Ok(ops.len())
}
