use crate::corpus::{RefexInstance, Vocabulary, BOS, EOS};
use crate::error::{Error, Result};
use crate::tensor::{glorot_init, ParamId, ParamStore, RngState, Scalar, Tape, Tensor, Var};

use super::config::{DecoderVariant, ModelConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Pre,
    Pos,
}

impl Side {
    fn name(self) -> &'static str {
        match self {
            Side::Pre => "pre",
            Side::Pos => "pos",
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

/// Weights of one LSTM: `w: [4h, in + h]` acting on `[x; h_prev]`, `b: [4h]`.
/// Gate rows are ordered input, forget, output, candidate.
#[derive(Clone, Copy, Debug)]
pub struct LstmParams {
    pub w: ParamId,
    pub b: ParamId,
    pub hidden: usize,
}

/// `w: [a, d_state]`, `u: [a, d_key]`, `v: [a]`.
#[derive(Clone, Copy, Debug)]
pub struct AttentionParams {
    pub w: ParamId,
    pub u: ParamId,
    pub v: ParamId,
}

#[derive(Clone, Debug)]
pub(crate) struct Layout {
    embedding: ParamId,
    /// Indexed `[side][direction]`, direction 0 forward.
    encoders: [[LstmParams; 2]; 2],
    decoder: LstmParams,
    attention: Option<[AttentionParams; 2]>,
    hierarchical: Option<[AttentionParams; 2]>,
    out_w: ParamId,
    out_b: ParamId,
}

/// Names and shapes of every parameter, in store order.
pub(crate) fn parameter_shapes(config: &ModelConfig, input: usize, output: usize) -> Vec<(String, Vec<usize>)> {
    let (e, h) = (config.embedding_dim, config.hidden_dim);
    let mut out = vec![("embedding".to_string(), vec![input, e])];
    for side in ["pre", "pos"] {
        for dir in ["fwd", "bwd"] {
            out.push((format!("enc_{side}_{dir}_w"), vec![4 * h, e + h]));
            out.push((format!("enc_{side}_{dir}_b"), vec![4 * h]));
        }
    }
    let context = context_width(config);
    out.push(("dec_w".into(), vec![4 * h, context + 2 * e + h]));
    out.push(("dec_b".into(), vec![4 * h]));
    let mut attention = |prefix: &str| {
        for side in ["pre", "pos"] {
            out.push((format!("{prefix}_{side}_w"), vec![h, h]));
            out.push((format!("{prefix}_{side}_u"), vec![h, 2 * h]));
            out.push((format!("{prefix}_{side}_v"), vec![h]));
        }
    };
    if config.variant != DecoderVariant::Seq2seq {
        attention("att");
    }
    if config.variant == DecoderVariant::Hieratt {
        attention("hier");
    }
    out.push(("out_w".into(), vec![output, h]));
    out.push(("out_b".into(), vec![output]));
    out
}

/// Width of the context vector fed to the decoder.
pub fn context_width(config: &ModelConfig) -> usize {
    match config.variant {
        DecoderVariant::Seq2seq | DecoderVariant::Catt => 4 * config.hidden_dim,
        DecoderVariant::Hieratt => config.hidden_dim,
    }
}

impl Layout {
    fn locate<S: Scalar>(store: &ParamStore<S>, config: &ModelConfig, input: usize, output: usize) -> Result<Self> {
        let expected = parameter_shapes(config, input, output);
        if store.len() != expected.len() {
            return Err(Error::Dimension(format!(
                "model has {} parameters, configuration expects {}",
                store.len(),
                expected.len()
            )));
        }
        for (name, shape) in &expected {
            let id = store
                .find(name)
                .ok_or_else(|| Error::Dimension(format!("missing parameter {name}")))?;
            if store.get(id).shape() != shape.as_slice() {
                return Err(Error::Dimension(format!(
                    "parameter {name} has shape {:?}, expected {shape:?}",
                    store.get(id).shape()
                )));
            }
        }
        let id = |name: String| store.find(&name).expect("checked above");
        let h = config.hidden_dim;
        let lstm = |prefix: String| LstmParams {
            w: id(format!("{prefix}_w")),
            b: id(format!("{prefix}_b")),
            hidden: h,
        };
        let attention = |prefix: &str| {
            [Side::Pre, Side::Pos].map(|s| AttentionParams {
                w: id(format!("{prefix}_{}_w", s.name())),
                u: id(format!("{prefix}_{}_u", s.name())),
                v: id(format!("{prefix}_{}_v", s.name())),
            })
        };
        Ok(Layout {
            embedding: id("embedding".into()),
            encoders: [Side::Pre, Side::Pos].map(|s| {
                ["fwd", "bwd"].map(|d| lstm(format!("enc_{}_{d}", s.name())))
            }),
            decoder: lstm("dec".into()),
            attention: (config.variant != DecoderVariant::Seq2seq).then(|| attention("att")),
            hierarchical: (config.variant == DecoderVariant::Hieratt).then(|| attention("hier")),
            out_w: id("out_w".into()),
            out_b: id("out_b".into()),
        })
    }
}

/// Dropout switch threaded through a forward pass.
pub struct Dropout {
    p: f64,
    rng: Option<RngState>,
}

impl Dropout {
    pub fn eval() -> Self {
        Dropout { p: 0.0, rng: None }
    }

    pub fn training(p: f64, rng: RngState) -> Self {
        Dropout { p, rng: Some(rng) }
    }

    fn apply<S: Scalar>(&mut self, tape: &mut Tape<S>, v: Var) -> Result<Var> {
        match &mut self.rng {
            Some(rng) => tape.dropout(v, self.p, true, rng),
            None => Ok(v),
        }
    }
}

/// One LSTM step. Returns `(h, c)`.
pub fn lstm_cell<S: Scalar>(tape: &mut Tape<S>, p: &LstmParams, x: Var, h_prev: Var, c_prev: Var) -> Result<(Var, Var)> {
    let h = p.hidden;
    let w = tape.param(p.w);
    let b = tape.param(p.b);
    let xh = tape.concat(&[x, h_prev], 0)?;
    let wx = tape.matvec(w, xh)?;
    let z = tape.add(wx, b)?;
    let zi = tape.slice(z, 0, h)?;
    let zf = tape.slice(z, h, h)?;
    let zo = tape.slice(z, 2 * h, h)?;
    let zg = tape.slice(z, 3 * h, h)?;
    let i = tape.sigmoid(zi)?;
    let f = tape.sigmoid(zf)?;
    let o = tape.sigmoid(zo)?;
    let g = tape.tanh(zg)?;
    let fc = tape.mul(f, c_prev)?;
    let ig = tape.mul(i, g)?;
    let c = tape.add(fc, ig)?;
    let tc = tape.tanh(c)?;
    let h_new = tape.mul(o, tc)?;
    Ok((h_new, c))
}

fn zeros<S: Scalar>(tape: &mut Tape<S>, n: usize) -> Var {
    tape.input(Tensor::zeros(&[n]))
}

/// Time average of each side, concatenated. An empty side contributes zeros.
pub fn context_seq2seq<S: Scalar>(tape: &mut Tape<S>, pre: &[Var], pos: &[Var], annotation_width: usize) -> Result<Var> {
    let mut halves = Vec::with_capacity(2);
    for side in [pre, pos] {
        halves.push(if side.is_empty() {
            zeros(tape, annotation_width)
        } else {
            tape.mean(side)?
        });
    }
    tape.concat(&halves, 0)
}

/// Annotations of one side with their key projections `U_a h_j` precomputed.
pub struct AttentionMemory {
    params: AttentionParams,
    stacked: Var,
    keys: Vec<Var>,
}

impl AttentionMemory {
    pub fn new<S: Scalar>(tape: &mut Tape<S>, annotations: &[Var], params: AttentionParams) -> Result<Self> {
        if annotations.is_empty() {
            return Err(Error::Contract("attention over an empty annotation list".into()));
        }
        let u = tape.param(params.u);
        let keys = annotations
            .iter()
            .map(|&h| tape.matvec(u, h))
            .collect::<Result<Vec<_>>>()?;
        let stacked = tape.stack(annotations)?;
        Ok(AttentionMemory { params, stacked, keys })
    }

    /// Returns `(alpha, summary)`.
    pub fn attend<S: Scalar>(&self, tape: &mut Tape<S>, s_prev: Var) -> Result<(Var, Var)> {
        let w = tape.param(self.params.w);
        let v = tape.param(self.params.v);
        let query = tape.matvec(w, s_prev)?;
        let mut scores = Vec::with_capacity(self.keys.len());
        for &k in &self.keys {
            let sum = tape.add(query, k)?;
            let act = tape.tanh(sum)?;
            scores.push(tape.dot(v, act)?);
        }
        let e = tape.pack(&scores)?;
        let alpha = tape.softmax(e)?;
        let summary = tape.vecmat(alpha, self.stacked)?;
        Ok((alpha, summary))
    }
}

/// Bahdanau-style attention of `s_prev` over `annotations`.
pub fn attention<S: Scalar>(tape: &mut Tape<S>, s_prev: Var, annotations: &[Var], params: AttentionParams) -> Result<(Var, Var)> {
    AttentionMemory::new(tape, annotations, params)?.attend(tape, s_prev)
}

/// Concatenated per-side summaries. A missing side contributes zeros.
pub fn context_catt<S: Scalar>(
    tape: &mut Tape<S>,
    s_prev: Var,
    pre: Option<&AttentionMemory>,
    pos: Option<&AttentionMemory>,
    annotation_width: usize,
) -> Result<Var> {
    let summaries = side_summaries(tape, s_prev, pre, pos, annotation_width)?;
    tape.concat(&summaries, 0)
}

fn side_summaries<S: Scalar>(
    tape: &mut Tape<S>,
    s_prev: Var,
    pre: Option<&AttentionMemory>,
    pos: Option<&AttentionMemory>,
    annotation_width: usize,
) -> Result<[Var; 2]> {
    let mut out = [s_prev; 2];
    for (slot, memory) in out.iter_mut().zip([pre, pos]) {
        *slot = match memory {
            Some(m) => m.attend(tape, s_prev)?.1,
            None => zeros(tape, annotation_width),
        };
    }
    Ok(out)
}

/// Second-level attention over the two side summaries. Returns `(beta, c)`
/// with `c = Σ_k β_k U_b^(k) c^(k)`.
pub fn context_hieratt<S: Scalar>(
    tape: &mut Tape<S>,
    s_prev: Var,
    summary_pre: Var,
    summary_pos: Var,
    params: &[AttentionParams; 2],
) -> Result<(Var, Var)> {
    let mut projected = Vec::with_capacity(2);
    let mut scores = Vec::with_capacity(2);
    for (p, summary) in params.iter().zip([summary_pre, summary_pos]) {
        let w = tape.param(p.w);
        let u = tape.param(p.u);
        let v = tape.param(p.v);
        let query = tape.matvec(w, s_prev)?;
        let proj = tape.matvec(u, summary)?;
        let sum = tape.add(query, proj)?;
        let act = tape.tanh(sum)?;
        scores.push(tape.dot(v, act)?);
        projected.push(proj);
    }
    let e = tape.pack(&scores)?;
    let beta = tape.softmax(e)?;
    let stacked = tape.stack(&projected)?;
    let c = tape.vecmat(beta, stacked)?;
    Ok((beta, c))
}

/// Encoder outputs for one instance.
pub struct EncoderOutputs {
    pub pre: Vec<Var>,
    pub pos: Vec<Var>,
    pub entity: Var,
}

/// Everything the decoder needs at each step, computed once per instance.
pub struct DecoderContext {
    entity: Var,
    kind: ContextKind,
}

enum ContextKind {
    Mean(Var),
    Attention {
        pre: Option<AttentionMemory>,
        pos: Option<AttentionMemory>,
    },
}

#[derive(Clone, Copy, Debug)]
pub struct DecoderState {
    pub s: Var,
    pub c: Var,
}

/// Generator parameters with the vocabularies they were built for.
#[derive(Clone, Debug)]
pub struct NeuralModel<S: Scalar> {
    config: ModelConfig,
    input_vocab: Vocabulary,
    output_vocab: Vocabulary,
    params: ParamStore<S>,
    layout: Layout,
    output_to_input: Vec<usize>,
}

impl<S: Scalar> NeuralModel<S> {
    /// Fresh model with Glorot-uniform matrices, zero biases and forget-gate
    /// biases set to one.
    pub fn new(config: ModelConfig, input_vocab: Vocabulary, output_vocab: Vocabulary) -> Result<Self> {
        config.validate()?;
        let mut rng = RngState::derive(config.seed, &[0x1417]);
        let mut store = ParamStore::new();
        for (name, shape) in parameter_shapes(&config, input_vocab.len(), output_vocab.len()) {
            let tensor = match *shape.as_slice() {
                [rows, cols] => glorot_init(rows, cols, &mut rng)?,
                [n] if name.ends_with("_v") => {
                    let t = glorot_init::<S>(n, 1, &mut rng)?;
                    Tensor::vector(t.data().to_vec())
                }
                [n] => {
                    let mut t = Tensor::zeros(&[n]);
                    if name.starts_with("enc_") || name == "dec_b" {
                        let h = n / 4;
                        t.data_mut()[h..2 * h].fill(S::one());
                    }
                    t
                }
                _ => unreachable!("parameters are vectors or matrices"),
            };
            store.add(name, tensor);
        }
        Self::from_parts(config, input_vocab, output_vocab, store)
    }

    pub(crate) fn from_parts(
        config: ModelConfig,
        input_vocab: Vocabulary,
        output_vocab: Vocabulary,
        params: ParamStore<S>,
    ) -> Result<Self> {
        config.validate()?;
        let layout = Layout::locate(&params, &config, input_vocab.len(), output_vocab.len())?;
        let output_to_input = output_vocab.tokens().iter().map(|t| input_vocab.id(t)).collect();
        Ok(NeuralModel {
            config,
            input_vocab,
            output_vocab,
            params,
            layout,
            output_to_input,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    /// Decoding-time settings (beam size, stopping) can change after training.
    pub fn config_mut(&mut self) -> &mut ModelConfig {
        &mut self.config
    }

    pub fn input_vocab(&self) -> &Vocabulary {
        &self.input_vocab
    }

    pub fn output_vocab(&self) -> &Vocabulary {
        &self.output_vocab
    }

    pub fn params(&self) -> &ParamStore<S> {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamStore<S> {
        &mut self.params
    }

    pub fn attention_params(&self, side: Side) -> Option<AttentionParams> {
        self.layout.attention.map(|a| a[side.index()])
    }

    pub fn cast<T: Scalar>(&self) -> NeuralModel<T> {
        NeuralModel {
            config: self.config.clone(),
            input_vocab: self.input_vocab.clone(),
            output_vocab: self.output_vocab.clone(),
            params: self.params.cast(),
            layout: self.layout.clone(),
            output_to_input: self.output_to_input.clone(),
        }
    }

    fn annotation_width(&self) -> usize {
        2 * self.config.hidden_dim
    }

    /// Runs both directions of one side's encoder. Annotation `t` is
    /// `[forward_t; backward_t]`; an empty context yields no annotations.
    pub fn encode_context(&self, tape: &mut Tape<S>, tokens: &[String], side: Side, dropout: &mut Dropout) -> Result<Vec<Var>> {
        if tokens.is_empty() {
            return Ok(Vec::new());
        }
        let table = tape.param(self.layout.embedding);
        let inputs = tokens
            .iter()
            .map(|t| tape.lookup(table, self.input_vocab.id(t)))
            .collect::<Result<Vec<_>>>()?;
        let [fwd, bwd] = self.layout.encoders[side.index()];
        let forward = self.run_lstm(tape, &fwd, inputs.iter().copied())?;
        let mut backward = self.run_lstm(tape, &bwd, inputs.iter().rev().copied())?;
        backward.reverse();
        let mut out = Vec::with_capacity(tokens.len());
        for (f, b) in forward.into_iter().zip(backward) {
            let joined = tape.concat(&[f, b], 0)?;
            out.push(dropout.apply(tape, joined)?);
        }
        Ok(out)
    }

    fn run_lstm(&self, tape: &mut Tape<S>, p: &LstmParams, xs: impl Iterator<Item = Var>) -> Result<Vec<Var>> {
        let mut h = zeros(tape, p.hidden);
        let mut c = zeros(tape, p.hidden);
        let mut out = Vec::new();
        for x in xs {
            (h, c) = lstm_cell(tape, p, x, h, c)?;
            out.push(h);
        }
        Ok(out)
    }

    pub fn encode(&self, tape: &mut Tape<S>, instance: &RefexInstance, dropout: &mut Dropout) -> Result<EncoderOutputs> {
        let entity_token = instance.entity_token();
        let entity_id = self
            .input_vocab
            .get(&entity_token)
            .ok_or_else(|| Error::Vocabulary(format!("unknown entity {:?}", instance.entity)))?;
        let table = tape.param(self.layout.embedding);
        let entity = tape.lookup(table, entity_id)?;
        let pre = self.encode_context(tape, &instance.pre_context, Side::Pre, dropout)?;
        let pos = self.encode_context(tape, &instance.pos_context, Side::Pos, dropout)?;
        Ok(EncoderOutputs { pre, pos, entity })
    }

    pub fn prepare(&self, tape: &mut Tape<S>, instance: &RefexInstance, dropout: &mut Dropout) -> Result<DecoderContext> {
        let enc = self.encode(tape, instance, dropout)?;
        let kind = match self.layout.attention {
            None => ContextKind::Mean(context_seq2seq(tape, &enc.pre, &enc.pos, self.annotation_width())?),
            Some([p_pre, p_pos]) => {
                let memory = |tape: &mut Tape<S>, ann: &[Var], p| -> Result<Option<AttentionMemory>> {
                    if ann.is_empty() {
                        Ok(None)
                    } else {
                        AttentionMemory::new(tape, ann, p).map(Some)
                    }
                };
                ContextKind::Attention {
                    pre: memory(tape, &enc.pre, p_pre)?,
                    pos: memory(tape, &enc.pos, p_pos)?,
                }
            }
        };
        Ok(DecoderContext { entity: enc.entity, kind })
    }

    /// Zero-initialized decoder state.
    pub fn initial_state(&self, tape: &mut Tape<S>) -> DecoderState {
        DecoderState {
            s: zeros(tape, self.config.hidden_dim),
            c: zeros(tape, self.config.hidden_dim),
        }
    }

    /// Context vector for the next step given the previous decoder state.
    pub fn context(&self, tape: &mut Tape<S>, ctx: &DecoderContext, s_prev: Var) -> Result<Var> {
        match &ctx.kind {
            ContextKind::Mean(c) => Ok(*c),
            ContextKind::Attention { pre, pos } => match &self.layout.hierarchical {
                None => context_catt(tape, s_prev, pre.as_ref(), pos.as_ref(), self.annotation_width()),
                Some(hier) => {
                    let [a, b] = side_summaries(tape, s_prev, pre.as_ref(), pos.as_ref(), self.annotation_width())?;
                    Ok(context_hieratt(tape, s_prev, a, b, hier)?.1)
                }
            },
        }
    }

    /// One decoder step from output-vocabulary token `y_prev`. Returns the new
    /// state and the output logits; the distribution is their softmax.
    pub fn decoder_step(
        &self,
        tape: &mut Tape<S>,
        ctx: &DecoderContext,
        state: DecoderState,
        y_prev: usize,
        dropout: &mut Dropout,
    ) -> Result<(DecoderState, Var)> {
        let input_id = *self
            .output_to_input
            .get(y_prev)
            .ok_or_else(|| Error::Vocabulary(format!("output token {y_prev} outside vocabulary")))?;
        let c = self.context(tape, ctx, state.s)?;
        let table = tape.param(self.layout.embedding);
        let y_emb = tape.lookup(table, input_id)?;
        let x = tape.concat(&[c, y_emb, ctx.entity], 0)?;
        let x = dropout.apply(tape, x)?;
        let (s, cell) = lstm_cell(tape, &self.layout.decoder, x, state.s, state.c)?;
        let w = tape.param(self.layout.out_w);
        let b = tape.param(self.layout.out_b);
        let ws = tape.matvec(w, s)?;
        let logits = tape.add(ws, b)?;
        Ok((DecoderState { s, c: cell }, logits))
    }

    /// Output ids the decoder is trained to emit: the refex then the EOS run.
    pub fn target_ids(&self, instance: &RefexInstance) -> Vec<usize> {
        let mut ids: Vec<usize> = instance.refex.iter().map(|t| self.output_vocab.id(t)).collect();
        ids.extend(std::iter::repeat_n(EOS, self.config.eos_stop_count));
        ids
    }

    /// Summed teacher-forced NLL of one instance, as a scalar on `tape`.
    pub fn instance_loss(&self, tape: &mut Tape<S>, instance: &RefexInstance, dropout: &mut Dropout) -> Result<Var> {
        let ctx = self.prepare(tape, instance, dropout)?;
        let mut state = self.initial_state(tape);
        let mut prev = BOS;
        let targets = self.target_ids(instance);
        let mut losses = Vec::with_capacity(targets.len());
        for &t in &targets {
            let (next, logits) = self.decoder_step(tape, &ctx, state, prev, dropout)?;
            losses.push(tape.nll(logits, t)?);
            state = next;
            prev = t;
        }
        let mean = tape.mean(&losses)?;
        tape.scale(mean, S::lit(losses.len() as f64))
    }

    /// Summed NLL over `batch` divided by the batch size, without dropout.
    pub fn batch_loss(&self, batch: &[RefexInstance]) -> Result<f64> {
        if batch.is_empty() {
            return Err(Error::Contract("empty batch".into()));
        }
        let mut total = 0.0;
        for inst in batch {
            let mut tape = Tape::new(&self.params);
            let loss = self.instance_loss(&mut tape, inst, &mut Dropout::eval())?;
            total += tape.value(loss).item().as_f64();
        }
        Ok(total / batch.len() as f64)
    }
}
