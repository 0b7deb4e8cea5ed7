//! Greedy decoding and corpus post-editing.

use std::thread;

use crate::editops::{apply_ops, EditOp, EditScript, Sentence, Token};
use crate::model::{Model, ModelError, StepTrace, TargetMode};
use crate::numcore::Scalar;

/// Insertions allowed beyond the hypothesis length before Eos is forced.
pub const DEFAULT_MAX_EXTRA: usize = 50;

#[derive(Clone, Debug, PartialEq)]
pub struct Decoded {
    /// Always ends with Eos.
    pub script: EditScript,
    pub output: Sentence,
    pub trace: Vec<StepTrace>,
}

/// One post-editing input: optional source and the MT hypothesis.
pub type PeInput = (Option<Sentence>, Sentence);

pub fn decode_ops<T: Scalar>(
    model: &Model<T>,
    src: Option<&Sentence>,
    mt: &Sentence,
    max_extra: usize,
) -> Result<EditScript, ModelError> {
    Ok(decode_ops_traced(model, src, mt, max_extra)?.script)
}

/// Decodes an edit script and applies it to the original surface tokens of
/// `mt` (out-of-vocabulary words survive a Keep unchanged).
pub fn decode_ops_traced<T: Scalar>(
    model: &Model<T>,
    src: Option<&Sentence>,
    mt: &Sentence,
    max_extra: usize,
) -> Result<Decoded, ModelError> {
    if model.config().target != TargetMode::Ops {
        return Err(ModelError::WrongMode("decode_ops needs target=ops".into()));
    }
    let vocabs = model.vocabs();
    let src_ids = if model.config().is_chained() {
        let src = src.ok_or(ModelError::MissingSource)?;
        Some(vocabs.src.as_ref().expect("chained models carry a source vocabulary").encode_sentence(src))
    } else {
        None
    };
    let mt_ids = vocabs.input.encode_sentence(mt);
    let greedy = model.greedy_ops(src_ids.as_deref(), &mt_ids, max_extra)?;
    let placeholder = Token::new("<unk>").expect("valid token");
    let ops: Vec<EditOp> = greedy
        .ids
        .iter()
        .map(|&id| {
            vocabs
                .output
                .decode_op(id, &placeholder)
                .ok_or_else(|| ModelError::InvalidTarget(format!("decoded reserved op id {id}")))
        })
        .collect::<Result<_, _>>()?;
    let script = EditScript::new(ops).map_err(|e| ModelError::InvalidTarget(e.to_string()))?;
    let output = apply_ops(mt, &script)?;
    Ok(Decoded {
        script,
        output,
        trace: greedy.trace,
    })
}

pub fn decode_words<T: Scalar>(model: &Model<T>, input: &Sentence, max_len: usize) -> Result<Sentence, ModelError> {
    if model.config().target != TargetMode::Words {
        return Err(ModelError::WrongMode("decode_words needs target=words".into()));
    }
    let ids = model.vocabs().input.encode_sentence(input);
    let out = model.greedy_words(&ids, max_len)?;
    Ok(model.vocabs().output.decode_words(&out))
}

/// Post-edits every input, keeping order; failures are reported per
/// sentence. Work is split over `threads` scoped threads.
pub fn post_edit_corpus<T: Scalar>(
    model: &Model<T>,
    inputs: &[PeInput],
    max_extra: usize,
    threads: usize,
) -> Vec<Result<Decoded, ModelError>> {
    let one = |(src, mt): &PeInput| decode_ops_traced(model, src.as_ref(), mt, max_extra);
    let threads = threads.max(1);
    if threads == 1 || inputs.len() < 2 {
        return inputs.iter().map(one).collect();
    }
    let chunk = inputs.len().div_ceil(threads);
    thread::scope(|scope| {
        let handles: Vec<_> = inputs
            .chunks(chunk)
            .map(|part| scope.spawn(move || part.iter().map(one).collect::<Vec<_>>()))
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("decoder thread panicked"))
            .collect()
    })
}
