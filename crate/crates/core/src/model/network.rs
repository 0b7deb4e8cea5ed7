use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::layers::{embedding_table, BiEncoder, Decoder, DecoderDims, DecoderInit, Fusion, GlobalAttention};
use super::{
    AttentionMode, Batch, EncoderStates, Example, ModelConfig, ModelError, ModelVocabs, Padded, TargetMode,
};
use crate::editops::{extract_ops, EditScript, Sentence};
use crate::numcore::{grad_check, GradCheckConfig, GradCheckReport, NodeId, NumError, ParamId, ParamSet, Scalar, Tape};
use crate::vocab::{OP_DEL, OP_EOS, OP_INS_UNK, OP_KEEP, PAD, WORD_BOS, WORD_EOS, WORD_UNK};

/// Loss nodes (or values) of one forward pass. `translate` and `ape` are
/// the two chained objectives; `total` is their sum.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossParts<N> {
    pub total: N,
    pub translate: Option<N>,
    pub ape: Option<N>,
}

impl LossParts<NodeId> {
    pub fn values<T: Scalar>(&self, tape: &Tape<'_, T>) -> Result<LossParts<f64>, ModelError> {
        let v = |n: NodeId| -> Result<f64, ModelError> { Ok(tape.value(n).item()?.as_f64()) };
        Ok(LossParts {
            total: v(self.total)?,
            translate: self.translate.map(v).transpose()?,
            ape: self.ape.map(v).transpose()?,
        })
    }
}

/// What a greedy step looked at.
#[derive(Clone, Debug, PartialEq)]
pub struct StepTrace {
    /// Forced pointer (1-based) before the step's output.
    pub pointer: usize,
    /// 0-based encoder position read by forced attention.
    pub attended: Option<usize>,
    /// Global attention weights.
    pub weights: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Greedy {
    pub ids: Vec<usize>,
    pub trace: Vec<StepTrace>,
}

#[derive(Clone, Debug)]
struct Mono {
    in_emb: ParamId,
    encoder: BiEncoder,
    attention: Option<GlobalAttention>,
    init: DecoderInit,
    decoder: Decoder,
}

#[derive(Clone, Debug)]
struct Chained {
    src_emb: ParamId,
    mt_emb: ParamId,
    src_encoder: BiEncoder,
    attention: GlobalAttention,
    t_init: DecoderInit,
    t_decoder: Decoder,
    mt_encoder: BiEncoder,
    fusion: Fusion,
    a_init: DecoderInit,
    a_decoder: Decoder,
}

#[derive(Clone, Debug)]
enum Network {
    Mono(Mono),
    Chained(Chained),
}

enum Context<'a> {
    Global {
        att: &'a GlobalAttention,
        enc: &'a EncoderStates,
        keys: Vec<NodeId>,
    },
    Forced {
        enc: &'a EncoderStates,
    },
    Fused {
        fusion: &'a Fusion,
        enc: &'a EncoderStates,
        contexts: &'a [NodeId],
    },
}

fn forced_index(pointer: &[usize], lengths: &[usize]) -> Vec<usize> {
    pointer.iter().zip(lengths).map(|(&p, &l)| p.min(l) - 1).collect()
}

impl Context<'_> {
    fn at<T: Scalar>(
        &self,
        tape: &mut Tape<'_, T>,
        s: NodeId,
        pointer: &[usize],
    ) -> Result<(NodeId, Option<NodeId>), ModelError> {
        match self {
            Context::Global { att, enc, keys } => {
                let (ctx, w) = att.attend(tape, enc, keys, s)?;
                Ok((ctx, Some(w)))
            }
            Context::Forced { enc } => {
                let idx = forced_index(pointer, &enc.lengths);
                Ok((tape.gather(&enc.states, &idx)?, None))
            }
            Context::Fused { fusion, enc, contexts } => {
                let idx = forced_index(pointer, &enc.lengths);
                let h = tape.gather(&enc.states, &idx)?;
                let c = tape.gather(contexts, &idx)?;
                Ok((fusion.fuse(tape, c, h)?, None))
            }
        }
    }

    fn attended(&self, pointer: usize) -> Option<usize> {
        match self {
            Context::Global { .. } => None,
            Context::Forced { enc } | Context::Fused { enc, .. } => Some(pointer.min(enc.lengths[0]) - 1),
        }
    }
}

/// Teacher-forced decoder run. Returns the maxout features and the context
/// used at every step.
fn teacher<T: Scalar>(
    tape: &mut Tape<'_, T>,
    dec: &Decoder,
    init: (NodeId, NodeId),
    ctx: &Context<'_>,
    target: &Padded,
    start: usize,
    track_pointer: bool,
) -> Result<(Vec<NodeId>, Vec<NodeId>), ModelError> {
    let (mut h, mut c) = init;
    let b = target.batch_size();
    let mut pointer = vec![1; b];
    let mut prev = vec![start; b];
    let mut outs = Vec::with_capacity(target.max_len());
    let mut ctxs = Vec::with_capacity(target.max_len());
    for step in &target.steps {
        let (cx, _) = ctx.at(tape, h, &pointer)?;
        let (h2, c2, m) = dec.step(tape, &prev, cx, h, c)?;
        (h, c) = (h2, c2);
        outs.push(m);
        ctxs.push(cx);
        prev.clone_from(step);
        if track_pointer {
            for (p, &y) in pointer.iter_mut().zip(&prev) {
                if y == OP_KEEP || y == OP_DEL {
                    *p += 1;
                }
            }
        }
    }
    Ok((outs, ctxs))
}

/// Mean over examples of each example's mean token cross-entropy.
fn sequence_loss<T: Scalar>(
    tape: &mut Tape<'_, T>,
    dec: &Decoder,
    outs: &[NodeId],
    target: &Padded,
) -> Result<NodeId, ModelError> {
    let feats = tape.concat_rows(outs)?;
    let logits = dec.project(tape, feats)?;
    let logp = tape.log_softmax(logits)?;
    let b = target.batch_size();
    let mut targets = Vec::with_capacity(outs.len() * b);
    let mut weights = Vec::with_capacity(outs.len() * b);
    for (t, step) in target.steps.iter().enumerate() {
        for (row, &y) in step.iter().enumerate() {
            let len = target.lengths[row];
            targets.push(y);
            weights.push(if t < len { T::of(1.0 / (b * len) as f64) } else { T::zero() });
        }
    }
    Ok(tape.nll(logp, &targets, &weights)?)
}

#[derive(Clone, Copy)]
enum Limit {
    Ops { mt_len: usize, max_ops: usize },
    Words { max_len: usize },
}

fn argmax_where(row: &[f64], allowed: impl Fn(usize) -> bool) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &v) in row.iter().enumerate() {
        if allowed(i) && best.is_none_or(|b| v > row[b]) {
            best = Some(i);
        }
    }
    best
}

fn greedy_loop<T: Scalar>(
    tape: &mut Tape<'_, T>,
    dec: &Decoder,
    init: (NodeId, NodeId),
    ctx: &Context<'_>,
    start: usize,
    limit: Limit,
) -> Result<Greedy, ModelError> {
    let (mut h, mut c) = init;
    let mut pointer = 1;
    let mut prev = start;
    let mut out = Greedy {
        ids: Vec::new(),
        trace: Vec::new(),
    };
    loop {
        if let Limit::Words { max_len } = limit {
            if out.ids.len() >= max_len {
                break;
            }
        }
        let (cx, weights) = ctx.at(tape, h, &[pointer])?;
        out.trace.push(StepTrace {
            pointer,
            attended: ctx.attended(pointer),
            weights: weights.map(|w| tape.value(w).to_f64_vec()),
        });
        let (h2, c2, m) = dec.step(tape, &[prev], cx, h, c)?;
        (h, c) = (h2, c2);
        let logits = dec.project(tape, m)?;
        let row = tape.value(logits).to_f64_vec();
        let choice = match limit {
            Limit::Ops { mt_len, max_ops } => {
                if out.ids.len() >= max_ops {
                    OP_EOS
                } else {
                    let consumed = pointer > mt_len;
                    argmax_where(&row, |i| {
                        i != PAD && i != OP_INS_UNK && !(consumed && (i == OP_KEEP || i == OP_DEL))
                    })
                    .unwrap_or(OP_EOS)
                }
            }
            Limit::Words { .. } => {
                argmax_where(&row, |i| i != PAD && i != WORD_BOS && i != WORD_UNK).unwrap_or(WORD_EOS)
            }
        };
        match limit {
            Limit::Ops { .. } => {
                out.ids.push(choice);
                if choice == OP_EOS {
                    break;
                }
                if choice == OP_KEEP || choice == OP_DEL {
                    pointer += 1;
                }
            }
            Limit::Words { .. } => {
                if choice == WORD_EOS {
                    break;
                }
                out.ids.push(choice);
            }
        }
        prev = choice;
    }
    Ok(out)
}

fn check_targets(config: &ModelConfig, vocabs: &ModelVocabs, batch: &Batch) -> Result<(), ModelError> {
    let end = match config.target {
        TargetMode::Ops => OP_EOS,
        TargetMode::Words => WORD_EOS,
    };
    let v = vocabs.output.len();
    for b in 0..batch.size() {
        let row = batch.target.row(b);
        if row.last() != Some(&end) || row[..row.len() - 1].contains(&end) {
            return Err(ModelError::InvalidTarget(format!("row {b} must end with exactly one end symbol")));
        }
        if row.iter().any(|&y| y >= v || y == PAD) {
            return Err(ModelError::InvalidTarget(format!("row {b} has ids outside the output vocabulary")));
        }
    }
    Ok(())
}

fn start_symbol(config: &ModelConfig) -> usize {
    match config.target {
        TargetMode::Ops => OP_EOS,
        TargetMode::Words => WORD_BOS,
    }
}

fn forward_net<T: Scalar>(
    config: &ModelConfig,
    vocabs: &ModelVocabs,
    net: &Network,
    tape: &mut Tape<'_, T>,
    batch: &Batch,
    mut rng: Option<&mut ChaCha8Rng>,
) -> Result<LossParts<NodeId>, ModelError> {
    check_targets(config, vocabs, batch)?;
    let p = config.dropout_p;
    match net {
        Network::Mono(m) => {
            let enc = m.encoder.encode(tape, m.in_emb, &batch.input)?;
            let init = m.init.init(tape, enc.last_forward, p, rng)?;
            let ctx = match &m.attention {
                Some(att) => Context::Global {
                    att,
                    keys: att.keys(tape, &enc)?,
                    enc: &enc,
                },
                None => Context::Forced { enc: &enc },
            };
            let track = config.target == TargetMode::Ops;
            let (outs, _) = teacher(tape, &m.decoder, init, &ctx, &batch.target, start_symbol(config), track)?;
            let total = sequence_loss(tape, &m.decoder, &outs, &batch.target)?;
            Ok(LossParts {
                total,
                translate: None,
                ape: None,
            })
        }
        Network::Chained(c) => {
            let src = batch.src.as_ref().ok_or(ModelError::MissingSource)?;
            let src_enc = c.src_encoder.encode(tape, c.src_emb, src)?;
            let rows: Vec<Vec<usize>> = (0..batch.size())
                .map(|b| {
                    let mut r = batch.input.row(b);
                    r.push(WORD_EOS);
                    r
                })
                .collect();
            let refs: Vec<&[usize]> = rows.iter().map(Vec::as_slice).collect();
            let mt_target = Padded::new(&refs)?;
            let t_init = c.t_init.init(tape, src_enc.last_forward, p, rng.as_deref_mut())?;
            let ctx1 = Context::Global {
                att: &c.attention,
                keys: c.attention.keys(tape, &src_enc)?,
                enc: &src_enc,
            };
            let (outs1, ctxs1) = teacher(tape, &c.t_decoder, t_init, &ctx1, &mt_target, WORD_BOS, false)?;
            let translate = sequence_loss(tape, &c.t_decoder, &outs1, &mt_target)?;

            let mt_enc = c.mt_encoder.encode(tape, c.mt_emb, &batch.input)?;
            let a_init = c.a_init.init(tape, mt_enc.last_forward, p, rng)?;
            let ctx2 = Context::Fused {
                fusion: &c.fusion,
                enc: &mt_enc,
                contexts: &ctxs1[..batch.input.max_len()],
            };
            let (outs2, _) = teacher(tape, &c.a_decoder, a_init, &ctx2, &batch.target, OP_EOS, true)?;
            let ape = sequence_loss(tape, &c.a_decoder, &outs2, &batch.target)?;
            let total = tape.add(translate, ape)?;
            Ok(LossParts {
                total,
                translate: Some(translate),
                ape: Some(ape),
            })
        }
    }
}


/// A model with its vocabularies and parameters.
#[derive(Clone, Debug)]
pub struct Model<T: Scalar> {
    config: ModelConfig,
    vocabs: ModelVocabs,
    params: ParamSet<T>,
    net: Network,
}

impl<T: Scalar> Model<T> {
    pub fn new(config: ModelConfig, vocabs: ModelVocabs) -> Result<Self, ModelError> {
        config.validate()?;
        vocabs.check(&config)?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut ps = ParamSet::new();
        let (h, e, s) = (config.cell_size, config.embedding_size, config.init_scale);
        let (v_in, v_out) = (vocabs.input.len(), vocabs.output.len());
        let r = &mut rng;
        let net = if let Some(src_vocab) = &vocabs.src {
            let src_emb = embedding_table(&mut ps, "translate.src_emb", src_vocab.len(), e, s, r)?;
            let mt_emb = embedding_table(&mut ps, "mt_emb", v_in, e, s, r)?;
            let src_encoder = BiEncoder::new(&mut ps, "translate.encoder", e, h, s, r)?;
            let attention = GlobalAttention::new(&mut ps, "translate.attention", 2 * h, h, s, r)?;
            let t_init = DecoderInit::new(&mut ps, "translate.init", h, s, r)?;
            let dims = |vocab| DecoderDims {
                embedding: e,
                context: 2 * h,
                hidden: h,
                vocab,
                pieces: config.maxout_pieces,
            };
            let t_decoder = Decoder::new(&mut ps, "translate.decoder", mt_emb, dims(v_in), s, r)?;
            let mt_encoder = BiEncoder::new(&mut ps, "ape.encoder", e, h, s, r)?;
            let fusion = Fusion::new(&mut ps, "ape.fusion", 2 * h, s, r)?;
            let a_init = DecoderInit::new(&mut ps, "ape.init", h, s, r)?;
            let op_emb = embedding_table(&mut ps, "ape.op_emb", v_out, e, s, r)?;
            let a_decoder = Decoder::new(&mut ps, "ape.decoder", op_emb, dims(v_out), s, r)?;
            Network::Chained(Chained {
                src_emb,
                mt_emb,
                src_encoder,
                attention,
                t_init,
                t_decoder,
                mt_encoder,
                fusion,
                a_init,
                a_decoder,
            })
        } else {
            let in_emb = embedding_table(&mut ps, "encoder.emb", v_in, e, s, r)?;
            let encoder = BiEncoder::new(&mut ps, "encoder", e, h, s, r)?;
            let attention = match config.attention {
                AttentionMode::Global => Some(GlobalAttention::new(&mut ps, "attention", 2 * h, h, s, r)?),
                AttentionMode::Forced => None,
            };
            let init = DecoderInit::new(&mut ps, "decoder.init", h, s, r)?;
            let out_emb = embedding_table(&mut ps, "decoder.emb", v_out, e, s, r)?;
            let dims = DecoderDims {
                embedding: e,
                context: 2 * h,
                hidden: h,
                vocab: v_out,
                pieces: config.maxout_pieces,
            };
            let decoder = Decoder::new(&mut ps, "decoder", out_emb, dims, s, r)?;
            Network::Mono(Mono {
                in_emb,
                encoder,
                attention,
                init,
                decoder,
            })
        };
        Ok(Model {
            config,
            vocabs,
            params: ps,
            net,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn vocabs(&self) -> &ModelVocabs {
        &self.vocabs
    }

    pub fn params(&self) -> &ParamSet<T> {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamSet<T> {
        &mut self.params
    }

    pub fn param_id(&self, name: &str) -> Option<ParamId> {
        self.params.id(name)
    }

    /// Parameter read by the decoder for its previous-symbol input in the
    /// translation branch (the MT embedding, shared with the MT encoder).
    pub fn translate_decoder_embedding(&self) -> Option<ParamId> {
        match &self.net {
            Network::Chained(c) => Some(c.t_decoder.emb),
            Network::Mono(_) => None,
        }
    }

    /// Parameter read by the encoder over the input (MT) side.
    pub fn input_embedding(&self) -> ParamId {
        match &self.net {
            Network::Chained(c) => c.mt_emb,
            Network::Mono(m) => m.in_emb,
        }
    }

    /// Same model with parameters converted to another precision.
    pub fn cast<U: Scalar>(&self) -> Model<U> {
        let mut params = ParamSet::new();
        for p in self.params.iter() {
            let id = params.add(&p.name, p.value.cast()).expect("names are unique");
            params.get_mut(id).frozen = p.frozen;
        }
        Model {
            config: self.config.clone(),
            vocabs: self.vocabs.clone(),
            params,
            net: self.net.clone(),
        }
    }

    /// Encodes one instance. In ops mode `target` is the post-edited
    /// sentence and the edit script is extracted from it.
    pub fn example(&self, src: Option<&Sentence>, input: &Sentence, target: &Sentence) -> Result<Example, ModelError> {
        match self.config.target {
            TargetMode::Ops => self.example_from_script(src, input, &extract_ops(input, target)),
            TargetMode::Words => {
                let mut ids = self.vocabs.output.encode_sentence(target);
                ids.push(WORD_EOS);
                self.finish_example(src, input, ids)
            }
        }
    }

    pub fn example_from_script(
        &self,
        src: Option<&Sentence>,
        mt: &Sentence,
        script: &EditScript,
    ) -> Result<Example, ModelError> {
        if self.config.target != TargetMode::Ops {
            return Err(ModelError::WrongMode("edit scripts need target=ops".into()));
        }
        if script.count_advancing() > mt.len() {
            return Err(ModelError::InvalidTarget(format!(
                "script consumes {} tokens of a {}-token input",
                script.count_advancing(),
                mt.len()
            )));
        }
        let ids = script.with_eos().ops().iter().map(|op| self.vocabs.output.encode_op(op)).collect();
        self.finish_example(src, mt, ids)
    }

    fn finish_example(&self, src: Option<&Sentence>, input: &Sentence, target: Vec<usize>) -> Result<Example, ModelError> {
        if input.is_empty() {
            return Err(ModelError::EmptyInput);
        }
        let src = if self.config.is_chained() {
            let s = src.ok_or(ModelError::MissingSource)?;
            if s.is_empty() {
                return Err(ModelError::EmptyInput);
            }
            Some(self.vocabs.src.as_ref().expect("checked at construction").encode_sentence(s))
        } else {
            None
        };
        Ok(Example {
            src,
            input: self.vocabs.input.encode_sentence(input),
            target,
        })
    }

    /// Records the training loss of `batch` on `tape`. Dropout is active
    /// only when `rng` is given.
    pub fn forward(
        &self,
        tape: &mut Tape<'_, T>,
        batch: &Batch,
        rng: Option<&mut ChaCha8Rng>,
    ) -> Result<LossParts<NodeId>, ModelError> {
        forward_net(&self.config, &self.vocabs, &self.net, tape, batch, rng)
    }

    /// Loss values without touching gradients.
    pub fn loss(&self, batch: &Batch, rng: Option<&mut ChaCha8Rng>) -> Result<LossParts<f64>, ModelError> {
        let mut tape = Tape::new(&self.params);
        let parts = self.forward(&mut tape, batch, rng)?;
        parts.values(&tape)
    }

    /// Forward and backward; gradients are added to the parameters.
    pub fn backprop(&mut self, batch: &Batch, rng: Option<&mut ChaCha8Rng>) -> Result<LossParts<f64>, ModelError> {
        let (values, grads) = {
            let mut tape = Tape::new(&self.params);
            let parts = self.forward(&mut tape, batch, rng)?;
            (parts.values(&tape)?, tape.backward(parts.total)?)
        };
        self.params.accumulate(&grads);
        Ok(values)
    }

    /// Greedy edit-operation decoding with validity masking. The result
    /// ends with the end-of-script id.
    pub fn greedy_ops(&self, src: Option<&[usize]>, mt: &[usize], max_extra: usize) -> Result<Greedy, ModelError> {
        if self.config.target != TargetMode::Ops {
            return Err(ModelError::WrongMode("greedy_ops needs target=ops".into()));
        }
        if mt.is_empty() {
            return Err(ModelError::EmptyInput);
        }
        let limit = Limit::Ops {
            mt_len: mt.len(),
            max_ops: mt.len() + max_extra,
        };
        let input = Padded::new(&[mt])?;
        let mut tape = Tape::new(&self.params);
        let tape = &mut tape;
        match &self.net {
            Network::Mono(m) => {
                let enc = m.encoder.encode(tape, m.in_emb, &input)?;
                let init = m.init.init(tape, enc.last_forward, 0.0, None)?;
                let ctx = match &m.attention {
                    Some(att) => Context::Global {
                        att,
                        keys: att.keys(tape, &enc)?,
                        enc: &enc,
                    },
                    None => Context::Forced { enc: &enc },
                };
                greedy_loop(tape, &m.decoder, init, &ctx, OP_EOS, limit)
            }
            Network::Chained(c) => {
                let src = src.ok_or(ModelError::MissingSource)?;
                let src = Padded::new(&[src])?;
                let src_enc = c.src_encoder.encode(tape, c.src_emb, &src)?;
                let mut row = mt.to_vec();
                row.push(WORD_EOS);
                let mt_target = Padded::new(&[&row])?;
                let t_init = c.t_init.init(tape, src_enc.last_forward, 0.0, None)?;
                let ctx1 = Context::Global {
                    att: &c.attention,
                    keys: c.attention.keys(tape, &src_enc)?,
                    enc: &src_enc,
                };
                let (_, ctxs1) = teacher(tape, &c.t_decoder, t_init, &ctx1, &mt_target, WORD_BOS, false)?;
                let mt_enc = c.mt_encoder.encode(tape, c.mt_emb, &input)?;
                let a_init = c.a_init.init(tape, mt_enc.last_forward, 0.0, None)?;
                let ctx2 = Context::Fused {
                    fusion: &c.fusion,
                    enc: &mt_enc,
                    contexts: &ctxs1[..mt.len()],
                };
                greedy_loop(tape, &c.a_decoder, a_init, &ctx2, OP_EOS, limit)
            }
        }
    }

    /// Greedy word decoding until the end-of-sentence id or `max_len`.
    pub fn greedy_words(&self, input: &[usize], max_len: usize) -> Result<Vec<usize>, ModelError> {
        let Network::Mono(m) = &self.net else {
            return Err(ModelError::WrongMode("greedy_words needs a mono-source model".into()));
        };
        if self.config.target != TargetMode::Words {
            return Err(ModelError::WrongMode("greedy_words needs target=words".into()));
        }
        if max_len == 0 {
            return Ok(Vec::new());
        }
        if input.is_empty() {
            return Err(ModelError::EmptyInput);
        }
        let input = Padded::new(&[input])?;
        let mut tape = Tape::new(&self.params);
        let tape = &mut tape;
        let enc = m.encoder.encode(tape, m.in_emb, &input)?;
        let init = m.init.init(tape, enc.last_forward, 0.0, None)?;
        let att = m
            .attention
            .as_ref()
            .ok_or_else(|| ModelError::WrongMode("words mode needs global attention".into()))?;
        let ctx = Context::Global {
            att,
            keys: att.keys(tape, &enc)?,
            enc: &enc,
        };
        Ok(greedy_loop(tape, &m.decoder, init, &ctx, WORD_BOS, Limit::Words { max_len })?.ids)
    }

    /// Bidirectional encoding of the input side, as seen by the decoder.
    pub fn encode_input<'p>(&'p self, tape: &mut Tape<'p, T>, input: &Padded) -> Result<EncoderStates, ModelError> {
        match &self.net {
            Network::Mono(m) => m.encoder.encode(tape, m.in_emb, input),
            Network::Chained(c) => c.mt_encoder.encode(tape, c.mt_emb, input),
        }
    }
}

impl Model<f64> {
    /// Compares backward gradients of the batch loss with finite
    /// differences; dropout masks are replayed from `dropout_seed`.
    pub fn check_gradients(
        &mut self,
        batch: &Batch,
        dropout_seed: Option<u64>,
        cfg: &GradCheckConfig,
    ) -> Result<GradCheckReport, ModelError>
    {
        let Model {
            config,
            vocabs,
            params,
            net,
        } = self;
        let f = |tape: &mut Tape<'_, f64>| -> Result<NodeId, NumError> {
            let mut rng = dropout_seed.map(ChaCha8Rng::seed_from_u64);
            forward_net(config, vocabs, net, tape, batch, rng.as_mut())
                .map(|p| p.total)
                .map_err(|e| match e {
                    ModelError::Num(n) => n,
                    other => NumError::InvalidArgument(other.to_string()),
                })
        };
        Ok(grad_check(params, f, cfg)?)
    }
}
