use serde::{Deserialize, Serialize};

use super::data::Prepared;
use super::vocab::{Vocabulary, BOS, UNK};
use super::QgError;
use crate::encoders::{AttentionRecord, Encoded, EncoderConfig, GraphEncoder};
use crate::graph::SemanticGraph;
use crate::numerics::{init_linear, linear, maybe_dropout, Binding, Dropout, GruCell, ParamStore, Var};

type Res<T> = Result<T, QgError>;

/// Probability floor of the content-selection cross-entropy.
pub const BCE_CLAMP: f64 = 1e-7;
/// Floor on the probability of a gold token before taking its log.
pub const NLL_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub encoder: EncoderConfig,
    pub dec_hidden: usize,
    /// Feed the coverage vector into the decoder attention scores.
    pub coverage_feature: bool,
    pub decoder_dropout: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossWeights {
    pub coverage: f64,
    pub content: f64,
    /// Whether the content-selection head is part of the model at all.
    pub content_selection: bool,
}

impl Default for LossWeights {
    fn default() -> Self {
        LossWeights { coverage: 1.0, content: 0.5, content_selection: true }
    }
}

#[derive(Clone, Copy)]
pub struct DecoderState<'t> {
    /// `[1 × dec_hidden]`
    pub s: Var<'t>,
    /// `[l]`, running sum of attention distributions
    pub cov: Var<'t>,
    pub t: usize,
}

pub struct StepOutput<'t> {
    pub vocab_dist: Var<'t>,
    pub attn: Var<'t>,
    pub p_cpy: Var<'t>,
    pub context: Var<'t>,
    /// Over the vocabulary followed by this example's copyable unknown words.
    pub mixed: Var<'t>,
}

/// Decoder view of an encoded source.
pub struct Source<'t> {
    pub fused: Var<'t>,
    keys: Var<'t>,
    ext: Vec<usize>,
    ext_len: usize,
}

pub struct ExampleLoss<'t> {
    pub total: Var<'t>,
    pub nll: f64,
    pub coverage: f64,
    pub content: Option<f64>,
    pub cs_probs: Vec<f64>,
    /// Graph attention of each layer transition.
    pub attention: Vec<Vec<AttentionRecord>>,
    pub steps: Vec<StepOutput<'t>>,
    /// Coverage entering each step.
    pub coverage_before: Vec<Vec<f64>>,
}

pub fn coverage_loss<'t>(attn: Var<'t>, cov: Var<'t>) -> Res<Var<'t>> {
    Ok(attn.minimum(cov)?.sum())
}

/// Mean binary cross-entropy with probabilities clamped to [1e-7, 1 - 1e-7].
pub fn content_select_loss<'t>(probs: Var<'t>, flags: &[bool]) -> Res<Var<'t>> {
    if flags.len() != probs.numel() {
        return Err(QgError::MissingLabels { node: flags.len().min(probs.numel()) });
    }
    let tape = probs.tape();
    let p = probs.clamp(BCE_CLAMP, 1.0 - BCE_CLAMP);
    let y = tape.vector(flags.iter().map(|&f| f as u8 as f64).collect());
    let not_y = tape.vector(flags.iter().map(|&f| !f as u8 as f64).collect());
    let ll = p.ln().mul(y)?.add(p.neg().offset(1.0).ln().mul(not_y)?)?;
    Ok(ll.mean().neg())
}

pub struct QgModel {
    pub config: ModelConfig,
    pub encoder: GraphEncoder,
    pub vocab: Vocabulary,
}

impl QgModel {
    pub fn new(config: ModelConfig, vocab: Vocabulary) -> Self {
        QgModel { encoder: GraphEncoder::new(config.encoder.clone()), config, vocab }
    }

    fn gru(&self) -> GruCell {
        GruCell::new("dec.gru", self.config.encoder.word_dim, self.config.dec_hidden)
    }

    pub fn init_params(&self, store: &mut ParamStore) {
        let c = &self.config;
        let (wd, dh, att) = (c.encoder.word_dim, c.dec_hidden, c.encoder.att_dim);
        let fused = c.encoder.fused_dim();
        store.init_uniform("embed.word", &[self.vocab.len(), wd]);
        self.encoder.init_params(store);
        init_linear(store, "cs", c.encoder.node_dim(), 1);
        init_linear(store, "dec.init", wd, dh);
        self.gru().init(store);
        store.init_uniform("dec.att.w_e", &[fused, att]);
        store.init_uniform("dec.att.w_s", &[dh, att]);
        if c.coverage_feature {
            store.init_uniform("dec.att.w_c", &[1, att]);
        }
        store.init_zeros("dec.att.b", &[att]);
        store.init_uniform("dec.att.v", &[att]);
        init_linear(store, "dec.out", dh + fused, self.vocab.len());
        init_linear(store, "dec.copy", fused + dh + wd, 1);
    }

    pub fn fresh_params(&self, seed: u64) -> ParamStore {
        let mut store = ParamStore::new(seed);
        self.init_params(&mut store);
        store
    }

    pub fn embed<'t>(&self, b: &Binding<'t>, ids: &[usize]) -> Res<Var<'t>> {
        Ok(b.get("embed.word")?.gather_rows(ids)?)
    }

    pub fn encode<'t>(&self, b: &Binding<'t>, p: &Prepared, g: &SemanticGraph, dropout: Option<&Dropout>) -> Res<Encoded<'t>> {
        let emb = self.embed(b, &p.source)?;
        Ok(self.encoder.encode(b, emb, g, &p.layout, dropout)?)
    }

    /// Relevance probability of every node from the final graph layer.
    pub fn content_select<'t>(&self, b: &Binding<'t>, last: Var<'t>) -> Res<Var<'t>> {
        let n = last.shape()[0];
        Ok(linear(b, "cs", last)?.reshape(&[n])?.sigmoid())
    }

    pub fn decoder_init<'t>(&self, b: &Binding<'t>, answer: &[usize], source_len: usize) -> Res<DecoderState<'t>> {
        if answer.is_empty() {
            return Err(QgError::EmptyAnswer);
        }
        let k = answer.len();
        let mean = b.tape().filled(&[1, k], 1.0 / k as f64).matmul(self.embed(b, answer)?)?;
        let s = linear(b, "dec.init", mean)?.tanh();
        Ok(DecoderState { s, cov: b.tape().zeros(&[source_len]), t: 0 })
    }

    pub fn source<'t>(&self, b: &Binding<'t>, fused: Var<'t>, p: &Prepared) -> Res<Source<'t>> {
        Ok(Source { fused, keys: fused.matmul(b.get("dec.att.w_e")?)?, ext: p.source_ext.clone(), ext_len: p.extended_len(&self.vocab) })
    }

    pub fn decode_step<'t>(
        &self,
        b: &Binding<'t>,
        state: &DecoderState<'t>,
        y_prev: usize,
        src: &Source<'t>,
        dropout: Option<&Dropout>,
    ) -> Res<(StepOutput<'t>, DecoderState<'t>)> {
        let c = &self.config;
        let (wd, dh) = (c.encoder.word_dim, c.dec_hidden);
        let l = src.ext.len();
        let input_id = if y_prev < self.vocab.len() { y_prev } else { UNK };
        let e_in = maybe_dropout(dropout, self.embed(b, &[input_id])?, c.decoder_dropout)?;
        let s = self.gru().forward(b, e_in, state.s)?;

        let query = s.matmul(b.get("dec.att.w_s")?)?.reshape(&[c.encoder.att_dim])?;
        let mut pre = src.keys.add_rows(query)?;
        if c.coverage_feature {
            pre = pre.add(state.cov.reshape(&[l, 1])?.matmul(b.get("dec.att.w_c")?)?)?;
        }
        let scores = pre.add_rows(b.get("dec.att.b")?)?.tanh().matmul(b.get("dec.att.v")?)?;
        let attn = scores.softmax(0)?;
        let context = attn.matmul(src.fused)?;

        let s_vec = s.reshape(&[dh])?;
        let vocab_dist = linear(b, "dec.out", Var::concat(&[s_vec, context], 0)?)?.softmax(0)?;
        let gate_in = Var::concat(&[context, s_vec, e_in.reshape(&[wd])?], 0)?;
        let p_cpy = linear(b, "dec.copy", gate_in)?.sigmoid();

        let oov = src.ext_len - self.vocab.len();
        let generated = if oov > 0 { Var::concat(&[vocab_dist, b.tape().zeros(&[oov])], 0)? } else { vocab_dist };
        let copied = attn.scatter_add(&src.ext, src.ext_len)?;
        let mixed = generated.mul_scalar(p_cpy.neg().offset(1.0))?.add(copied.mul_scalar(p_cpy)?)?;

        let next = DecoderState { s, cov: state.cov.add(attn)?, t: state.t + 1 };
        Ok((StepOutput { vocab_dist, attn, p_cpy, context, mixed }, next))
    }

    /// Teacher-forced joint loss of one example.
    pub fn example_loss<'t>(
        &self,
        b: &Binding<'t>,
        p: &Prepared,
        g: &SemanticGraph,
        weights: &LossWeights,
        dropout: Option<&Dropout>,
    ) -> Res<ExampleLoss<'t>> {
        let target = p.target.as_ref().ok_or(QgError::MissingQuestion)?;
        let enc = self.encode(b, p, g, dropout)?;
        let src = self.source(b, enc.fused, p)?;
        let mut state = self.decoder_init(b, &p.answer, p.source.len())?;

        let mut nll_terms = Vec::with_capacity(target.len());
        let mut cov_terms = Vec::with_capacity(target.len());
        let mut steps = Vec::with_capacity(target.len());
        let mut coverage_before = Vec::with_capacity(target.len());
        let mut y_prev = BOS;
        for &y in target {
            let (out, next) = self.decode_step(b, &state, y_prev, &src, dropout)?;
            nll_terms.push(out.mixed.gather_rows(&[y])?.clamp(NLL_FLOOR, 1.0).ln());
            cov_terms.push(coverage_loss(out.attn, state.cov)?.reshape(&[1])?);
            coverage_before.push(state.cov.value());
            steps.push(out);
            state = next;
            y_prev = y;
        }
        let nll = Var::concat(&nll_terms, 0)?.mean().neg();
        let cov = Var::concat(&cov_terms, 0)?.mean();
        let mut total = nll.add(cov.scale(weights.coverage))?;

        let mut content = None;
        let mut cs_probs = Vec::new();
        if weights.content_selection && !g.nodes.is_empty() {
            let flags = p.relevant.as_ref().ok_or(QgError::MissingLabels { node: 0 })?;
            let probs = self.content_select(b, enc.states.last())?;
            let cs = content_select_loss(probs, flags)?;
            total = total.add(cs.scale(weights.content))?;
            content = Some(cs.item());
            cs_probs = probs.value();
        }
        Ok(ExampleLoss {
            total,
            nll: nll.item(),
            coverage: cov.item(),
            content,
            cs_probs,
            attention: enc.states.attention,
            steps,
            coverage_before,
        })
    }
}
