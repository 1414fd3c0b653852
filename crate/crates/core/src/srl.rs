//! Semantic graphs from predicate-argument tuples.
//!
//! Sentences are processed in order and tuples in annotation order. Before
//! a tuple's elements join the graph, each element is linked by SIMILAR
//! edges (both directions) to every already-present node it is similar to;
//! then the elements become nodes and the tuple contributes one
//! `ARG_TO_VERB` edge per argument and one `VERB_TO_MOD` edge per
//! modifier. Elements are visited as arguments, verb, modifiers. An
//! element whose exact span is already a node reuses that node.

use std::collections::HashMap;

use crate::annotations::{AnnotatedDocument, Span};
use crate::graph::{self, NodeType, SemanticGraph, SemanticNode, ARG_TO_VERB, SIMILAR, VERB_TO_MOD};
use crate::text;

#[derive(Debug, Clone)]
pub struct SrlBuild {
    pub graph: SemanticGraph,
    pub warnings: Vec<String>,
}

/// Tuple elements in processing order.
pub fn tuple_elements(tuple: &crate::annotations::SrlTuple) -> Vec<(Span, NodeType)> {
    tuple
        .arguments
        .iter()
        .map(|a| (a.span, NodeType::Argument))
        .chain(std::iter::once((tuple.verb, NodeType::Verb)))
        .chain(tuple.modifiers.iter().map(|m| (m.span, NodeType::Modifier)))
        .collect()
}

pub fn build_srl_graph(doc: &AnnotatedDocument) -> SrlBuild {
    let mut g = SemanticGraph::new(vec![SIMILAR.into(), ARG_TO_VERB.into(), VERB_TO_MOD.into()]);
    let mut warnings = Vec::new();
    let mut by_span: HashMap<Span, usize> = HashMap::new();
    let mut keys: Vec<Vec<String>> = Vec::new();

    if doc.srl.iter().all(Vec::is_empty) {
        warnings.push("document has no SRL tuples; graph is empty".to_string());
    }

    for tuples in &doc.srl {
        for tuple in tuples {
            let elements = tuple_elements(tuple);
            let existing = g.nodes.len();

            let mut links = Vec::new();
            for (k, (span, _)) in elements.iter().enumerate() {
                let key = text::content_words(&doc.span_text_lower(span));
                let own = by_span.get(span).copied();
                for (v, v_key) in keys.iter().enumerate().take(existing) {
                    if Some(v) != own && graph::is_similar(v_key, &key) {
                        links.push((k, v));
                    }
                }
            }

            let ids: Vec<usize> = elements
                .iter()
                .map(|&(span, node_type)| {
                    *by_span.entry(span).or_insert_with(|| {
                        let id = g.nodes.len();
                        let text = doc.span_text_lower(&span);
                        keys.push(text::content_words(&text));
                        g.nodes.push(SemanticNode {
                            id,
                            span,
                            text,
                            node_type,
                            pos: head_pos(doc, &span),
                            answer_flag: false,
                            relevant_flag: None,
                        });
                        id
                    })
                })
                .collect();

            for (k, v) in links {
                if ids[k] != v {
                    g.add_similar_pair(ids[k], v);
                }
            }

            let verb = ids[tuple.arguments.len()];
            for &a in &ids[..tuple.arguments.len()] {
                if a != verb {
                    g.add_edge(a, verb, ARG_TO_VERB);
                }
            }
            for &m in &ids[tuple.arguments.len() + 1..] {
                if m != verb {
                    g.add_edge(verb, m, VERB_TO_MOD);
                }
            }
        }
    }
    SrlBuild { graph: g, warnings }
}

/// POS of the span's syntactic head: the token whose dependency head
/// lies outside the span, falling back to the last token.
pub(crate) fn head_pos(doc: &AnnotatedDocument, span: &Span) -> String {
    let tokens = doc.span_tokens(span);
    if let Some(tree) = doc.dep_tree(span.sentence) {
        let heads = tree.heads(doc.sentences[span.sentence].len());
        for i in span.start..span.end {
            let outside = match heads.get(i).copied().flatten() {
                None => true,
                Some(h) => h < span.start || h >= span.end,
            };
            if outside {
                return doc.sentences[span.sentence][i].pos.clone();
            }
        }
    }
    tokens.last().map(|t| t.pos.clone()).unwrap_or_default()
}
