use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{ModelError, Padded};
use crate::editops::EditOp;
use crate::numcore::{lstm_step, Init, LstmParams, NodeId, ParamId, ParamSet, Scalar, Tape, Tensor};

/// Input position aligned with the next decoder step: one past the number
/// of Keep and Del operations emitted so far (1-based).
pub fn forced_pointer(past: &[EditOp]) -> usize {
    past.iter().filter(|op| op.advances()).count() + 1
}

/// Per-position encoder outputs for a padded batch.
#[derive(Clone, Debug)]
pub struct EncoderStates {
    /// `states[i]` is `[B, 2H]`: forward and backward halves concatenated.
    pub states: Vec<NodeId>,
    pub forward: Vec<NodeId>,
    pub backward: Vec<NodeId>,
    /// Forward state after each row's final real token, `[B, H]`.
    pub last_forward: NodeId,
    pub lengths: Vec<usize>,
}

impl EncoderStates {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }
}

fn matrix<T: Scalar>(
    ps: &mut ParamSet<T>,
    name: String,
    shape: [usize; 2],
    scale: f64,
    rng: &mut impl Rng,
) -> Result<ParamId, ModelError> {
    Ok(ps.init(&name, &shape, Init::Uniform(scale), rng)?)
}

fn bias<T: Scalar>(ps: &mut ParamSet<T>, name: String, width: usize, rng: &mut impl Rng) -> Result<ParamId, ModelError> {
    Ok(ps.init(&name, &[1, width], Init::Zeros, rng)?)
}

pub(crate) fn embedding_table<T: Scalar>(
    ps: &mut ParamSet<T>,
    name: &str,
    vocab: usize,
    dim: usize,
    scale: f64,
    rng: &mut impl Rng,
) -> Result<ParamId, ModelError> {
    matrix(ps, name.to_owned(), [vocab, dim], scale, rng)
}

fn zeros<T: Scalar>(tape: &mut Tape<'_, T>, rows: usize, cols: usize) -> Result<NodeId, ModelError> {
    Ok(tape.constant(Tensor::zeros(&[rows, cols]))?)
}

#[derive(Clone, Debug)]
pub(crate) struct BiEncoder {
    fwd: LstmParams,
    bwd: LstmParams,
    hidden: usize,
}

impl BiEncoder {
    pub fn new<T: Scalar>(
        ps: &mut ParamSet<T>,
        prefix: &str,
        input: usize,
        hidden: usize,
        scale: f64,
        rng: &mut impl Rng,
    ) -> Result<Self, ModelError> {
        Ok(BiEncoder {
            fwd: LstmParams::new(ps, &format!("{prefix}.fwd"), input, hidden, scale, rng)?,
            bwd: LstmParams::new(ps, &format!("{prefix}.bwd"), input, hidden, scale, rng)?,
            hidden,
        })
    }

    /// Rows shorter than the batch maximum carry their last real state
    /// forward (and start the backward pass at their own last token).
    pub fn encode<T: Scalar>(
        &self,
        tape: &mut Tape<'_, T>,
        table: ParamId,
        input: &Padded,
    ) -> Result<EncoderStates, ModelError> {
        let (b, n) = (input.batch_size(), input.max_len());
        if n == 0 {
            return Err(ModelError::EmptyInput);
        }
        let table = tape.param(table);
        let embedded: Vec<NodeId> = input
            .steps
            .iter()
            .map(|ids| tape.embedding(table, ids))
            .collect::<Result<_, _>>()?;

        let zero = zeros(tape, b, self.hidden)?;
        let (mut h, mut c) = (zero, zero);
        let mut forward = Vec::with_capacity(n);
        for (t, &x) in embedded.iter().enumerate() {
            let (h2, c2) = lstm_step(tape, &self.fwd, x, h, c)?;
            let live = input.live(t);
            h = tape.blend(&live, h2, h)?;
            c = tape.blend(&live, c2, c)?;
            forward.push(h);
        }
        let last_forward = h;

        let (mut h, mut c) = (zero, zero);
        let mut backward = vec![zero; n];
        for t in (0..n).rev() {
            let (h2, c2) = lstm_step(tape, &self.bwd, embedded[t], h, c)?;
            let live = input.live(t);
            h = tape.blend(&live, h2, h)?;
            c = tape.blend(&live, c2, c)?;
            backward[t] = h;
        }

        let states = forward
            .iter()
            .zip(&backward)
            .map(|(&f, &bk)| tape.concat_cols(&[f, bk]))
            .collect::<Result<_, _>>()?;
        Ok(EncoderStates {
            states,
            forward,
            backward,
            last_forward,
            lengths: input.lengths.clone(),
        })
    }
}

/// Additive attention `vᵀ tanh(W₁ h_i + W₂ s + b₂)` over encoder states.
#[derive(Clone, Debug)]
pub(crate) struct GlobalAttention {
    pub w_key: ParamId,
    pub w_query: ParamId,
    pub b: ParamId,
    pub v: ParamId,
}

impl GlobalAttention {
    pub fn new<T: Scalar>(
        ps: &mut ParamSet<T>,
        prefix: &str,
        state: usize,
        query: usize,
        scale: f64,
        rng: &mut impl Rng,
    ) -> Result<Self, ModelError> {
        let k = query;
        Ok(GlobalAttention {
            w_key: matrix(ps, format!("{prefix}.w_key"), [state, k], scale, rng)?,
            w_query: matrix(ps, format!("{prefix}.w_query"), [query, k], scale, rng)?,
            b: bias(ps, format!("{prefix}.b"), k, rng)?,
            v: matrix(ps, format!("{prefix}.v"), [k, 1], scale, rng)?,
        })
    }

    /// `W₁ h_i` for every position; reused across decoder steps.
    pub fn keys<T: Scalar>(&self, tape: &mut Tape<'_, T>, enc: &EncoderStates) -> Result<Vec<NodeId>, ModelError> {
        let w = tape.param(self.w_key);
        Ok(enc.states.iter().map(|&h| tape.matmul(h, w)).collect::<Result<_, _>>()?)
    }

    /// Returns `(context [B, 2H], weights [B, A])`.
    pub fn attend<T: Scalar>(
        &self,
        tape: &mut Tape<'_, T>,
        enc: &EncoderStates,
        keys: &[NodeId],
        s: NodeId,
    ) -> Result<(NodeId, NodeId), ModelError> {
        let (wq, b, v) = (tape.param(self.w_query), tape.param(self.b), tape.param(self.v));
        let q = tape.matmul(s, wq)?;
        let q = tape.add_bias(q, b)?;
        let scores = tape.additive_scores(keys, q, v)?;
        let weights = tape.masked_softmax(scores, &enc.lengths)?;
        let ctx = tape.attend(weights, &enc.states)?;
        Ok((ctx, weights))
    }
}

/// `c′ = tanh(H₁ c + H₂ h′ + b′)`.
#[derive(Clone, Debug)]
pub(crate) struct Fusion {
    pub h1: ParamId,
    pub h2: ParamId,
    pub b: ParamId,
}

impl Fusion {
    pub fn new<T: Scalar>(
        ps: &mut ParamSet<T>,
        prefix: &str,
        width: usize,
        scale: f64,
        rng: &mut impl Rng,
    ) -> Result<Self, ModelError> {
        Ok(Fusion {
            h1: matrix(ps, format!("{prefix}.h1"), [width, width], scale, rng)?,
            h2: matrix(ps, format!("{prefix}.h2"), [width, width], scale, rng)?,
            b: bias(ps, format!("{prefix}.b"), width, rng)?,
        })
    }

    pub fn fuse<T: Scalar>(&self, tape: &mut Tape<'_, T>, c: NodeId, h: NodeId) -> Result<NodeId, ModelError> {
        let (h1, h2, b) = (tape.param(self.h1), tape.param(self.h2), tape.param(self.b));
        let x = tape.matmul(c, h1)?;
        let y = tape.matmul(h, h2)?;
        let z = tape.add(x, y)?;
        let z = tape.add_bias(z, b)?;
        Ok(tape.tanh(z)?)
    }
}

/// `s₀ = dropout(tanh(W h_fwd + b))`, `c₀ = 0`.
#[derive(Clone, Debug)]
pub(crate) struct DecoderInit {
    pub w: ParamId,
    pub b: ParamId,
}

impl DecoderInit {
    pub fn new<T: Scalar>(
        ps: &mut ParamSet<T>,
        prefix: &str,
        hidden: usize,
        scale: f64,
        rng: &mut impl Rng,
    ) -> Result<Self, ModelError> {
        Ok(DecoderInit {
            w: matrix(ps, format!("{prefix}.w"), [hidden, hidden], scale, rng)?,
            b: bias(ps, format!("{prefix}.b"), hidden, rng)?,
        })
    }

    pub fn init<T: Scalar>(
        &self,
        tape: &mut Tape<'_, T>,
        last_forward: NodeId,
        dropout_p: f64,
        rng: Option<&mut ChaCha8Rng>,
    ) -> Result<(NodeId, NodeId), ModelError> {
        let (w, b) = (tape.param(self.w), tape.param(self.b));
        let x = tape.matmul(last_forward, w)?;
        let x = tape.add_bias(x, b)?;
        let mut s = tape.tanh(x)?;
        if let Some(rng) = rng {
            s = tape.dropout(s, dropout_p, rng)?;
        }
        let (rows, cols) = tape.value(s).dims2("decoder_init")?;
        Ok((s, zeros(tape, rows, cols)?))
    }
}

/// Attentional LSTM decoder with a maxout layer before the projection.
#[derive(Clone, Debug)]
pub(crate) struct Decoder {
    pub emb: ParamId,
    pub lstm: LstmParams,
    pub maxout_w: ParamId,
    pub maxout_b: ParamId,
    pub proj_w: ParamId,
    pub proj_b: ParamId,
    pub pieces: usize,
}

pub(crate) struct DecoderDims {
    pub embedding: usize,
    pub context: usize,
    pub hidden: usize,
    pub vocab: usize,
    pub pieces: usize,
}

impl Decoder {
    pub fn new<T: Scalar>(
        ps: &mut ParamSet<T>,
        prefix: &str,
        emb: ParamId,
        d: DecoderDims,
        scale: f64,
        rng: &mut impl Rng,
    ) -> Result<Self, ModelError> {
        let lstm = LstmParams::new(ps, &format!("{prefix}.lstm"), d.embedding + d.context, d.hidden, scale, rng)?;
        let feat = d.hidden + d.context + d.embedding;
        Ok(Decoder {
            emb,
            lstm,
            maxout_w: matrix(ps, format!("{prefix}.maxout_w"), [feat, d.pieces * d.hidden], scale, rng)?,
            maxout_b: bias(ps, format!("{prefix}.maxout_b"), d.pieces * d.hidden, rng)?,
            proj_w: matrix(ps, format!("{prefix}.proj_w"), [d.hidden, d.vocab], scale, rng)?,
            proj_b: bias(ps, format!("{prefix}.proj_b"), d.vocab, rng)?,
            pieces: d.pieces,
        })
    }

    /// Advances the LSTM on `[prev embedding; context]` and returns the new
    /// state plus the maxout features for the projection.
    pub fn step<T: Scalar>(
        &self,
        tape: &mut Tape<'_, T>,
        prev: &[usize],
        ctx: NodeId,
        h: NodeId,
        c: NodeId,
    ) -> Result<(NodeId, NodeId, NodeId), ModelError> {
        let table = tape.param(self.emb);
        let e = tape.embedding(table, prev)?;
        let x = tape.concat_cols(&[e, ctx])?;
        let (h, c) = lstm_step(tape, &self.lstm, x, h, c)?;
        let feat = tape.concat_cols(&[h, ctx, e])?;
        let (w, b) = (tape.param(self.maxout_w), tape.param(self.maxout_b));
        let m = tape.matmul(feat, w)?;
        let m = tape.add_bias(m, b)?;
        let m = tape.maxout(m, self.pieces)?;
        Ok((h, c, m))
    }

    pub fn project<T: Scalar>(&self, tape: &mut Tape<'_, T>, features: NodeId) -> Result<NodeId, ModelError> {
        let (w, b) = (tape.param(self.proj_w), tape.param(self.proj_b));
        let logits = tape.matmul(features, w)?;
        Ok(tape.add_bias(logits, b)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pointer_counts_advancing_ops() {
        let ops = [EditOp::Keep, EditOp::Del, EditOp::ins("cat").unwrap()];
        assert_eq!(forced_pointer(&ops), 3);
        assert_eq!(forced_pointer(&[]), 1);
        assert_eq!(forced_pointer(&[EditOp::ins("a").unwrap(), EditOp::ins("b").unwrap()]), 1);
    }
}
