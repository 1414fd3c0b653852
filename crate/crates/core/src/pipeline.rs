//! Document to tagged semantic graph: optional coreference substitution,
//! the chosen builder, answer tagging, and relevance labels when a gold
//! question is present.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::annotations::{resolve_coreference, AnnotatedDocument, PronounTags};
use crate::dp::{build_dp_corpus, build_dp_graph, DpOptions};
use crate::graph::SemanticGraph;
use crate::par::Execution;
use crate::srl::build_srl_graph;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GraphFormat {
    #[default]
    Srl,
    Dp,
}

impl FromStr for GraphFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "srl" => Ok(GraphFormat::Srl),
            "dp" => Ok(GraphFormat::Dp),
            other => Err(format!("unknown graph format {other:?} (expected srl or dp)")),
        }
    }
}

impl fmt::Display for GraphFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GraphFormat::Srl => "srl",
            GraphFormat::Dp => "dp",
        })
    }
}

#[derive(Debug, Clone, Default)]
pub struct PipelineOptions {
    pub format: GraphFormat,
    pub dp: DpOptions,
    pub resolve_coref: bool,
    pub pronouns: PronounTags,
}

#[derive(Debug, Clone)]
pub struct BuiltGraph {
    /// The document the graph's spans refer to (coreference-resolved when requested).
    pub document: AnnotatedDocument,
    pub graph: SemanticGraph,
    pub warnings: Vec<String>,
}

fn prepare(doc: &AnnotatedDocument, opts: &PipelineOptions) -> (AnnotatedDocument, Vec<String>) {
    if opts.resolve_coref {
        let r = resolve_coreference(doc, &opts.pronouns);
        (r.document, r.warnings)
    } else {
        (doc.clone(), Vec::new())
    }
}

fn tag(doc: &AnnotatedDocument, g: &mut SemanticGraph) {
    g.tag_answer_nodes(&doc.answer);
    if doc.gold_question.is_some() {
        g.label_relevant_nodes(doc.gold_question.as_deref()).expect("question present");
    }
}

pub fn build_graph(doc: &AnnotatedDocument, opts: &PipelineOptions) -> BuiltGraph {
    let (document, mut warnings) = prepare(doc, opts);
    let (mut graph, w) = match opts.format {
        GraphFormat::Srl => {
            let b = build_srl_graph(&document);
            (b.graph, b.warnings)
        }
        GraphFormat::Dp => {
            let b = build_dp_graph(&document, &opts.dp);
            (b.graph, b.warnings)
        }
    };
    warnings.extend(w);
    tag(&document, &mut graph);
    BuiltGraph { document, graph, warnings }
}

/// Builds every document; DP graphs share one relation vocabulary.
pub fn build_corpus(docs: &[AnnotatedDocument], opts: &PipelineOptions, exec: Execution) -> Vec<BuiltGraph> {
    match opts.format {
        GraphFormat::Srl => exec.map(docs, |d| build_graph(d, opts)),
        GraphFormat::Dp => {
            let prepared = exec.map(docs, |d| prepare(d, opts));
            let resolved: Vec<AnnotatedDocument> = prepared.iter().map(|(d, _)| d.clone()).collect();
            let builds = build_dp_corpus(&resolved, &opts.dp, exec);
            prepared
                .into_iter()
                .zip(builds)
                .map(|((document, mut warnings), b)| {
                    let mut graph = b.graph;
                    warnings.extend(b.warnings);
                    tag(&document, &mut graph);
                    BuiltGraph { document, graph, warnings }
                })
                .collect()
        }
    }
}
