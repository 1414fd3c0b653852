//! Document encoder, node initialization, the attention-gated graph
//! encoder, and word/node feature fusion.
//!
//! Attention scores have the form aᵀ[W h_i; W h_j] normalized over j. The
//! h_i half is the same for every candidate j and cancels in the softmax,
//! so only the candidate half `a·W h_j` is computed and `a` has `att_dim`
//! entries. For the word attention of node initialization the query is
//! the document vector, which therefore drops out of the scores as well.
//!
//! The document is read by a bidirectional GRU over its flattened tokens.
//! Each node starts from an attention-pooled summary of its words plus POS
//! and answer-tag embeddings, then goes through `K` untied layers of
//! message passing: per node, attention over its neighbors, separate
//! outgoing and incoming aggregates with one transformation per edge type,
//! and a GRU update. Every word is finally paired with the state of the
//! smallest node covering it.

use std::collections::BTreeMap;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::annotations::{AnnotatedDocument, Span};
use crate::dp::KNOWN_TAGS;
use crate::graph::SemanticGraph;
use crate::numerics::{maybe_dropout, Binding, Dropout, GruCell, NumericsError, ParamStore, Tensor, Var};

pub const TAG_DIM: usize = 32;
/// Filler for words no node covers.
pub const UNCOVERED_FILL: f64 = 1e-8;

#[derive(Debug, thiserror::Error)]
pub enum EncoderError {
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error("cannot encode an empty document")]
    EmptyDocument,
    #[error("node {node} span {span:?} lies outside the document")]
    SpanOutOfRange { node: usize, span: Span },
    #[error("edge type {0:?} is not in the encoder's edge vocabulary")]
    UnknownEdgeType(String),
}

type Res<T> = Result<T, EncoderError>;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttentionNormalization {
    /// One distribution over incoming and outgoing neighbors together.
    #[default]
    Union,
    /// Separate distributions for outgoing and incoming neighbors.
    PerDirection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncoderConfig {
    pub word_dim: usize,
    pub enc_hidden: usize,
    pub att_dim: usize,
    pub layers: usize,
    #[serde(default)]
    pub normalization: AttentionNormalization,
    pub edge_vocabulary: Vec<String>,
    pub encoder_dropout: f64,
    pub attention_dropout: f64,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        EncoderConfig {
            word_dim: 32,
            enc_hidden: 16,
            att_dim: 16,
            layers: 3,
            normalization: AttentionNormalization::Union,
            edge_vocabulary: Vec::new(),
            encoder_dropout: 0.3,
            attention_dropout: 0.1,
        }
    }
}

impl EncoderConfig {
    pub fn doc_dim(&self) -> usize {
        2 * self.enc_hidden
    }

    pub fn node_dim(&self) -> usize {
        self.doc_dim() + 2 * TAG_DIM
    }

    pub fn fused_dim(&self) -> usize {
        self.doc_dim() + self.node_dim()
    }
}

/// Sentence boundaries of the flattened token sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    starts: Vec<usize>,
    lens: Vec<usize>,
}

impl Layout {
    pub fn new(lens: Vec<usize>) -> Self {
        let mut starts = Vec::with_capacity(lens.len());
        let mut acc = 0;
        for &n in &lens {
            starts.push(acc);
            acc += n;
        }
        Layout { starts, lens }
    }

    pub fn of(doc: &AnnotatedDocument) -> Self {
        Layout::new(doc.sentences.iter().map(Vec::len).collect())
    }

    pub fn token_count(&self) -> usize {
        self.lens.iter().sum()
    }

    pub fn flat(&self, span: &Span) -> Option<Range<usize>> {
        let len = *self.lens.get(span.sentence)?;
        if span.start >= span.end || span.end > len {
            return None;
        }
        let s = self.starts[span.sentence];
        Some(s + span.start..s + span.end)
    }

    /// `(sentence, token)` of every flattened position.
    pub fn positions(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.lens.iter().enumerate().flat_map(|(s, &n)| (0..n).map(move |t| (s, t)))
    }
}

pub fn pos_index(tag: &str) -> usize {
    KNOWN_TAGS.iter().position(|t| *t == tag).map_or(0, |i| i + 1)
}

pub struct DocEncoding<'t> {
    /// `[l × 2h]`, row i = [forward_i ; backward_i]
    pub x: Var<'t>,
    /// `[2h]` = [forward_l ; backward_1]
    pub d_doc: Var<'t>,
    pub len: usize,
}

pub struct NodeInit<'t> {
    /// `[N × node_dim]`
    pub h0: Var<'t>,
    /// Word attention of each node.
    pub betas: Vec<Var<'t>>,
}

/// One attention distribution of one node.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionRecord {
    pub node: usize,
    pub neighbors: Vec<usize>,
    pub weights: Vec<f64>,
}

pub struct GraphStates<'t> {
    /// H^0 .. H^K
    pub layers: Vec<Var<'t>>,
    /// Attention of each transition, `attention[k]` producing `layers[k + 1]`.
    pub attention: Vec<Vec<AttentionRecord>>,
}

impl<'t> GraphStates<'t> {
    pub fn last(&self) -> Var<'t> {
        *self.layers.last().expect("at least H^0")
    }
}

pub struct Encoded<'t> {
    pub doc: DocEncoding<'t>,
    pub init: NodeInit<'t>,
    pub states: GraphStates<'t>,
    /// `[l × fused_dim]`
    pub fused: Var<'t>,
}

/// Smallest node covering a word, ties to the lowest id.
pub fn covering_node(g: &SemanticGraph, sentence: usize, token: usize) -> Option<usize> {
    g.nodes
        .iter()
        .filter(|n| n.span.sentence == sentence && n.span.start <= token && token < n.span.end)
        .min_by_key(|n| (n.span.len(), n.id))
        .map(|n| n.id)
}

/// Total attention each node receives, renormalized over nodes.
pub fn received_attention(records: &[AttentionRecord], nodes: usize) -> Vec<f64> {
    let mut mass = vec![0.0; nodes];
    for r in records {
        for (&j, &w) in r.neighbors.iter().zip(&r.weights) {
            mass[j] += w;
        }
    }
    let total: f64 = mass.iter().sum();
    if total > 0.0 {
        for m in &mut mass {
            *m /= total;
        }
    }
    mass
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraphEncoder {
    pub config: EncoderConfig,
}

impl GraphEncoder {
    pub fn new(config: EncoderConfig) -> Self {
        GraphEncoder { config }
    }

    fn doc_cells(&self) -> (GruCell, GruCell) {
        let c = &self.config;
        (GruCell::new("doc.fwd", c.word_dim, c.enc_hidden), GruCell::new("doc.bwd", c.word_dim, c.enc_hidden))
    }

    fn layer_cell(&self, k: usize) -> GruCell {
        let d = self.config.node_dim();
        GruCell::new(&format!("ggnn{k}.gru"), 2 * d, d)
    }

    pub fn init_params(&self, store: &mut ParamStore) {
        let c = &self.config;
        let (fwd, bwd) = self.doc_cells();
        fwd.init(store);
        bwd.init(store);
        store.init_uniform("init.w_a", &[c.doc_dim(), c.att_dim]);
        store.init_uniform("init.a", &[c.att_dim]);
        store.init_uniform("feat.pos", &[KNOWN_TAGS.len() + 1, TAG_DIM]);
        store.init_uniform("feat.answer", &[2, TAG_DIM]);
        let d = c.node_dim();
        for k in 0..c.layers {
            store.init_uniform(&format!("ggnn{k}.w_a"), &[d, c.att_dim]);
            store.init_uniform(&format!("ggnn{k}.a"), &[c.att_dim]);
            for label in &c.edge_vocabulary {
                store.init_uniform(&format!("ggnn{k}.edge.{label}"), &[d, d]);
            }
            self.layer_cell(k).init(store);
        }
    }

    /// `emb` holds one `[word_dim]` row per flattened token.
    pub fn encode_document<'t>(&self, b: &Binding<'t>, emb: Var<'t>) -> Res<DocEncoding<'t>> {
        let l = emb.shape().first().copied().unwrap_or(0);
        if l == 0 {
            return Err(EncoderError::EmptyDocument);
        }
        let tape = b.tape();
        let hd = self.config.enc_hidden;
        let (fwd, bwd) = self.doc_cells();
        let rows = (0..l).map(|t| emb.slice(0, t, 1)).collect::<Result<Vec<_>, _>>()?;

        let mut h = tape.zeros(&[1, hd]);
        let mut forward = Vec::with_capacity(l);
        for &r in &rows {
            h = fwd.forward(b, r, h)?;
            forward.push(h);
        }
        let mut h = tape.zeros(&[1, hd]);
        let mut backward = vec![h; l];
        for t in (0..l).rev() {
            h = bwd.forward(b, rows[t], h)?;
            backward[t] = h;
        }

        let x = Var::concat(&[Var::concat(&forward, 0)?, Var::concat(&backward, 0)?], 1)?;
        let d_doc = Var::concat(&[forward[l - 1], backward[0]], 1)?.reshape(&[2 * hd])?;
        Ok(DocEncoding { x, d_doc, len: l })
    }

    pub fn init_nodes<'t>(&self, b: &Binding<'t>, g: &SemanticGraph, enc: &DocEncoding<'t>, layout: &Layout) -> Res<NodeInit<'t>> {
        let s_words = enc.x.matmul(b.get("init.w_a")?)?.matmul(b.get("init.a")?)?;

        let mut rows = Vec::with_capacity(g.nodes.len());
        let mut betas = Vec::with_capacity(g.nodes.len());
        for node in &g.nodes {
            let r = layout
                .flat(&node.span)
                .filter(|r| r.end <= enc.len)
                .ok_or(EncoderError::SpanOutOfRange { node: node.id, span: node.span })?;
            let n = r.len();
            let beta = s_words.slice(0, r.start, n)?.softmax(0)?;
            let pooled = beta.matmul(enc.x.slice(0, r.start, n)?)?;
            rows.push(pooled.reshape(&[1, self.config.doc_dim()])?);
            betas.push(beta);
        }
        let pooled = if rows.is_empty() { b.tape().zeros(&[0, self.config.doc_dim()]) } else { Var::concat(&rows, 0)? };

        let pos: Vec<usize> = g.nodes.iter().map(|n| pos_index(&n.pos)).collect();
        let answer: Vec<usize> = g.nodes.iter().map(|n| n.answer_flag as usize).collect();
        let p = b.get("feat.pos")?.gather_rows(&pos)?;
        let t = b.get("feat.answer")?.gather_rows(&answer)?;
        let h0 = Var::concat(&[pooled, p, t], 1)?;
        Ok(NodeInit { h0, betas })
    }

    /// Labels of `g` in vocabulary order, each with its position.
    fn present_types(&self, g: &SemanticGraph) -> Res<BTreeMap<String, usize>> {
        for e in &g.edges {
            if !self.config.edge_vocabulary.contains(&e.label) {
                return Err(EncoderError::UnknownEdgeType(e.label.clone()));
            }
        }
        Ok(self
            .config
            .edge_vocabulary
            .iter()
            .filter(|l| g.edges.iter().any(|e| &e.label == *l))
            .enumerate()
            .map(|(i, l)| (l.clone(), i))
            .collect())
    }

    pub fn att_ggnn_step<'t>(
        &self,
        b: &Binding<'t>,
        layer: usize,
        h: Var<'t>,
        g: &SemanticGraph,
        dropout: Option<&Dropout>,
    ) -> Res<(Var<'t>, Vec<AttentionRecord>)> {
        let n = g.nodes.len();
        let types = self.present_types(g)?;
        if n == 0 {
            return Ok((h, Vec::new()));
        }
        let tape = b.tape();
        let d = self.config.node_dim();
        let pre = format!("ggnn{layer}");

        let mut out_edges = vec![Vec::new(); n];
        let mut in_edges = vec![Vec::new(); n];
        for e in &g.edges {
            let t = types[&e.label];
            out_edges[e.src].push((e.dst, t));
            in_edges[e.dst].push((e.src, t));
        }

        let messages = if types.is_empty() {
            None
        } else {
            let per_type = types
                .keys()
                .map(|label| Ok(h.matmul(b.get(&format!("{pre}.edge.{label}"))?)?))
                .collect::<Res<Vec<_>>>()?;
            Some(Var::concat(&per_type, 0)?)
        };

        let score = h.matmul(b.get(&format!("{pre}.w_a"))?)?.matmul(b.get(&format!("{pre}.a"))?)?;

        let mut records = Vec::new();
        let mut attend = |i: usize, neighbors: &[usize]| -> Res<Var<'t>> {
            let alpha = score.gather_rows(neighbors)?.softmax(0)?;
            records.push(AttentionRecord { node: i, neighbors: neighbors.to_vec(), weights: alpha.value() });
            Ok(maybe_dropout(dropout, alpha, self.config.attention_dropout)?)
        };
        let aggregate = |alpha: Var<'t>, neighbors: &[usize], edges: &[(usize, usize)]| -> Res<Var<'t>> {
            let Some(messages) = messages.filter(|_| !edges.is_empty()) else {
                return Ok(tape.zeros(&[1, d]));
            };
            let slots: Vec<usize> = edges.iter().map(|(j, _)| neighbors.binary_search(j).expect("neighbor listed")).collect();
            let rows: Vec<usize> = edges.iter().map(|&(j, t)| t * n + j).collect();
            Ok(alpha.gather_rows(&slots)?.matmul(messages.gather_rows(&rows)?)?.reshape(&[1, d])?)
        };
        let unique = |lists: &[&[(usize, usize)]]| -> Vec<usize> {
            let mut js: Vec<usize> = lists.iter().flat_map(|l| l.iter().map(|&(j, _)| j)).collect();
            js.sort_unstable();
            js.dedup();
            js
        };

        let mut outs = Vec::with_capacity(n);
        let mut ins = Vec::with_capacity(n);
        for i in 0..n {
            let (o, inc) = (&out_edges[i][..], &in_edges[i][..]);
            match self.config.normalization {
                AttentionNormalization::Union => {
                    let nb = unique(&[o, inc]);
                    if nb.is_empty() {
                        outs.push(tape.zeros(&[1, d]));
                        ins.push(tape.zeros(&[1, d]));
                        continue;
                    }
                    let alpha = attend(i, &nb)?;
                    outs.push(aggregate(alpha, &nb, o)?);
                    ins.push(aggregate(alpha, &nb, inc)?);
                }
                AttentionNormalization::PerDirection => {
                    for (edges, acc) in [(o, &mut outs), (inc, &mut ins)] {
                        let nb = unique(&[edges]);
                        if nb.is_empty() {
                            acc.push(tape.zeros(&[1, d]));
                        } else {
                            let alpha = attend(i, &nb)?;
                            acc.push(aggregate(alpha, &nb, edges)?);
                        }
                    }
                }
            }
        }

        let input = Var::concat(&[Var::concat(&outs, 0)?, Var::concat(&ins, 0)?], 1)?;
        let next = self.layer_cell(layer).forward(b, input, h)?;
        Ok((next, records))
    }

    pub fn encode_graph<'t>(&self, b: &Binding<'t>, h0: Var<'t>, g: &SemanticGraph, dropout: Option<&Dropout>) -> Res<GraphStates<'t>> {
        let mut layers = vec![h0];
        let mut attention = Vec::with_capacity(self.config.layers);
        for k in 0..self.config.layers {
            let (next, records) = self.att_ggnn_step(b, k, layers[k], g, dropout)?;
            layers.push(next);
            attention.push(records);
        }
        Ok(GraphStates { layers, attention })
    }

    pub fn fuse<'t>(&self, b: &Binding<'t>, enc: &DocEncoding<'t>, last: Var<'t>, g: &SemanticGraph, layout: &Layout) -> Res<Var<'t>> {
        let d = self.config.node_dim();
        let fill = b.tape().leaf(Tensor::filled(&[1, d], UNCOVERED_FILL));
        let table = Var::concat(&[last, fill], 0)?;
        let n = g.nodes.len();
        let rows: Vec<usize> = layout.positions().map(|(s, t)| covering_node(g, s, t).unwrap_or(n)).collect();
        Ok(Var::concat(&[enc.x, table.gather_rows(&rows)?], 1)?)
    }

    /// Full encoder pass; `dropout` is `Some` only when training.
    pub fn encode<'t>(
        &self,
        b: &Binding<'t>,
        emb: Var<'t>,
        g: &SemanticGraph,
        layout: &Layout,
        dropout: Option<&Dropout>,
    ) -> Res<Encoded<'t>> {
        let emb = maybe_dropout(dropout, emb, self.config.encoder_dropout)?;
        let doc = self.encode_document(b, emb)?;
        let init = self.init_nodes(b, g, &doc, layout)?;
        let states = self.encode_graph(b, init.h0, g, dropout)?;
        let fused = self.fuse(b, &doc, states.last(), g, layout)?;
        let fused = maybe_dropout(dropout, fused, self.config.encoder_dropout)?;
        Ok(Encoded { doc, init, states, fused })
    }
}
