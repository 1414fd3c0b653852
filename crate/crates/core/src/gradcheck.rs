//! Gradient checks of the numerics primitives and of the model's pieces.

use std::collections::BTreeMap;

use rand::Rng;

use crate::annotations::Span;
use crate::encoders::{EncoderConfig, GraphEncoder};
use crate::graph::{NodeType, SemanticGraph, SemanticNode};
use crate::numerics::catalog::primitive_cases;
use crate::numerics::{finite_difference_check, named_rng, FdConfig, FdReport, NumericsError, ParamStore, Tensor};
use crate::pipeline::PipelineOptions;
use crate::qgen::train::{build_vocabulary, edge_vocabulary};
use crate::qgen::{Example, Prepared, QgError, QgModel, TrainConfig};
use crate::synthetic::two_sentence_document;

/// Six nodes, three edge types, with a reciprocal pair, a parallel edge
/// pair of different types and an isolated node.
pub fn toy_graph() -> SemanticGraph {
    let labels = ["nsubj", "dobj", "SIMILAR"];
    let mut g = SemanticGraph::new(labels.iter().map(|s| s.to_string()).collect());
    for id in 0..6 {
        g.nodes.push(SemanticNode {
            id,
            span: Span::new(0, id, id + 1),
            text: vec![format!("w{id}")],
            node_type: if id % 2 == 0 { NodeType::Noun } else { NodeType::Verb },
            pos: if id % 2 == 0 { "NN".into() } else { "VBD".into() },
            answer_flag: id == 2,
            relevant_flag: Some(id < 3),
        });
    }
    for (s, d, l) in [(1, 0, "nsubj"), (1, 2, "dobj"), (1, 2, "nsubj"), (3, 2, "dobj"), (0, 4, "SIMILAR"), (4, 0, "SIMILAR"), (3, 4, "nsubj")] {
        g.add_edge(s, d, l);
    }
    g
}

fn readout_weights(rows: usize, cols: usize) -> Tensor {
    let data = (0..rows * cols).map(|i| ((i as f64 + 1.0) * 0.37).sin()).collect();
    Tensor::new(vec![rows, cols], data).expect("shape matches")
}

/// One graph layer on [`toy_graph`] from random states, through a fixed linear readout.
pub fn check_ggnn_step(config: &EncoderConfig, seed: u64, fd: &FdConfig) -> Result<FdReport, NumericsError> {
    let g = toy_graph();
    let config = EncoderConfig { layers: 1, edge_vocabulary: g.edge_vocabulary.clone(), ..config.clone() };
    let enc = GraphEncoder::new(config);
    let d = enc.config.node_dim();
    let mut all = ParamStore::new(seed);
    enc.init_params(&mut all);
    let mut store = ParamStore::new(seed);
    for (name, t) in all.iter().filter(|(n, _)| n.starts_with("ggnn0.")) {
        store.insert(name, t.clone());
    }
    let mut rng = named_rng(seed, "toy.h0");
    let h0 = (0..6 * d).map(|_| rng.random_range(-1.0..1.0)).collect();
    store.insert("h0", Tensor::new(vec![6, d], h0)?);
    let w = readout_weights(6, d);
    finite_difference_check(
        |b| {
            let (h1, _) = enc.att_ggnn_step(b, 0, b.get("h0")?, &g, None)?;
            Ok::<_, crate::encoders::EncoderError>(h1.mul(b.tape().leaf(w.clone()))?.sum())
        },
        &store,
        fd,
    )
}

pub fn check_primitives(seed: u64, fd: &FdConfig) -> Result<BTreeMap<&'static str, FdReport>, NumericsError> {
    primitive_cases().into_iter().map(|c| Ok((c.name, finite_difference_check(c.objective, &c.store(seed)?, fd)?))).collect()
}

/// The whole joint loss (decoder NLL, coverage, content selection) on the
/// two-sentence synthetic document, every parameter perturbed.
pub fn check_joint_loss(config: &TrainConfig, fd: &FdConfig) -> Result<FdReport, QgError> {
    let docs = [two_sentence_document()];
    let examples = Example::from_documents(&docs, &PipelineOptions::default(), fd.execution);
    let vocab = build_vocabulary(&examples, 1);
    let model = QgModel::new(config.model_config(edge_vocabulary(&examples)), vocab);
    let store = model.fresh_params(config.seed);
    let prepared = Prepared::new(&examples[0], &model.vocab);
    let weights = config.loss_weights();
    let graph = &examples[0].graph;
    Ok(finite_difference_check(|b| Ok::<_, QgError>(model.example_loss(b, &prepared, graph, &weights, None)?.total), &store, fd)?)
}
