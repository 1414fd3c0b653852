use serde::{Deserialize, Serialize};

use super::vocab::{Vocabulary, EOS, UNK};
use super::QgError;
use crate::annotations::AnnotatedDocument;
use crate::encoders::Layout;
use crate::graph::SemanticGraph;
use crate::pipeline::{build_corpus, PipelineOptions};
use crate::par::Execution;
use crate::text;

/// A document with its tagged semantic graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Example {
    pub document: AnnotatedDocument,
    pub graph: SemanticGraph,
}

impl Example {
    pub fn from_documents(docs: &[AnnotatedDocument], opts: &PipelineOptions, exec: Execution) -> Vec<Example> {
        build_corpus(docs, opts, exec).into_iter().map(|b| Example { document: b.document, graph: b.graph }).collect()
    }

    pub fn source_tokens(&self) -> Vec<String> {
        self.document.tokens().map(|t| t.text.to_lowercase()).collect()
    }

    pub fn answer_tokens(&self) -> Vec<String> {
        text::tokenize(&self.document.answer)
    }

    pub fn question_tokens(&self) -> Option<Vec<String>> {
        self.document.gold_question.as_deref().map(text::tokenize_keep_punct)
    }

    /// Every token the vocabulary should know about.
    pub fn all_tokens(&self) -> Vec<String> {
        let mut out = self.source_tokens();
        out.extend(self.answer_tokens());
        out.extend(self.question_tokens().unwrap_or_default());
        out
    }

    pub fn relevant_flags(&self) -> Result<Vec<bool>, QgError> {
        self.graph
            .nodes
            .iter()
            .map(|n| n.relevant_flag.ok_or(QgError::MissingLabels { node: n.id }))
            .collect()
    }
}

/// An example mapped to ids. Source words outside the vocabulary get
/// extended ids `V, V+1, ...` so they can be copied.
#[derive(Debug, Clone, PartialEq)]
pub struct Prepared {
    pub source: Vec<usize>,
    pub source_ext: Vec<usize>,
    pub oov: Vec<String>,
    pub answer: Vec<usize>,
    /// Gold question in extended ids, ending with `</s>`.
    pub target: Option<Vec<usize>>,
    pub relevant: Option<Vec<bool>>,
    pub layout: Layout,
}

impl Prepared {
    pub fn new(ex: &Example, vocab: &Vocabulary) -> Self {
        let words = ex.source_tokens();
        let mut oov: Vec<String> = Vec::new();
        let mut source = Vec::with_capacity(words.len());
        let mut source_ext = Vec::with_capacity(words.len());
        for w in &words {
            match vocab.get(w) {
                Some(id) => {
                    source.push(id);
                    source_ext.push(id);
                }
                None => {
                    let k = oov.iter().position(|o| o == w).unwrap_or_else(|| {
                        oov.push(w.clone());
                        oov.len() - 1
                    });
                    source.push(UNK);
                    source_ext.push(vocab.len() + k);
                }
            }
        }
        let target = ex.question_tokens().map(|q| {
            q.iter()
                .map(|w| vocab.get(w).or_else(|| oov.iter().position(|o| o == w).map(|k| vocab.len() + k)).unwrap_or(UNK))
                .chain(std::iter::once(EOS))
                .collect()
        });
        Prepared {
            source,
            source_ext,
            answer: ex.answer_tokens().iter().map(|w| vocab.id(w)).collect(),
            target,
            relevant: ex.relevant_flags().ok(),
            layout: Layout::of(&ex.document),
            oov,
        }
    }

    pub fn extended_len(&self, vocab: &Vocabulary) -> usize {
        vocab.len() + self.oov.len()
    }

    pub fn word(&self, vocab: &Vocabulary, id: usize) -> String {
        if id < vocab.len() {
            vocab.token(id).to_string()
        } else {
            self.oov[id - vocab.len()].clone()
        }
    }
}
