//! The semantic graph shared by both builders: typed span nodes, typed
//! directed edges, the span similarity predicate, answer and relevance
//! labelling, statistics, and JSON/DOT export.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::annotations::Span;
use crate::text;

pub const SIMILAR: &str = "SIMILAR";
pub const ARG_TO_VERB: &str = "ARG_TO_VERB";
pub const VERB_TO_MOD: &str = "VERB_TO_MOD";
pub const CHILD: &str = "CHILD";

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("graph JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid graph: {0}")]
    Invalid(String),
    #[error("relevance labelling needs a gold question")]
    MissingQuestion,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum NodeType {
    Argument,
    Verb,
    Modifier,
    Noun,
    Attribute,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeFamily {
    Srl,
    Dp,
}

impl NodeType {
    /// Which builder family the type belongs to; `Verb` is shared.
    pub fn family(self) -> Option<NodeFamily> {
        match self {
            NodeType::Argument | NodeType::Modifier => Some(NodeFamily::Srl),
            NodeType::Noun | NodeType::Attribute => Some(NodeFamily::Dp),
            NodeType::Verb => None,
        }
    }

    fn dot_shape(self) -> &'static str {
        match self {
            NodeType::Argument | NodeType::Noun => "box",
            NodeType::Verb => "diamond",
            NodeType::Modifier | NodeType::Attribute => "ellipse",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SemanticNode {
    pub id: usize,
    #[serde(flatten)]
    pub span: Span,
    pub text: Vec<String>,
    #[serde(rename = "type")]
    pub node_type: NodeType,
    pub pos: String,
    #[serde(rename = "answer")]
    pub answer_flag: bool,
    #[serde(rename = "relevant")]
    pub relevant_flag: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Edge {
    pub src: usize,
    pub dst: usize,
    #[serde(rename = "type")]
    pub label: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SemanticGraph {
    pub nodes: Vec<SemanticNode>,
    pub edges: Vec<Edge>,
    #[serde(rename = "edge_vocab")]
    pub edge_vocabulary: Vec<String>,
}

/// Which node pairs [`SemanticGraph::add_similarity_links`] compares.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimilarityScope {
    AllPairs,
    /// Only nodes from different sentences (different parse trees).
    CrossSentence,
}

/// The three span-similarity rules on token lists: equality, contiguous
/// containment either way, or a multiset overlap larger than half the
/// shorter list.
pub fn is_similar<S: AsRef<str>>(a: &[S], b: &[S]) -> bool {
    if a.is_empty() || b.is_empty() {
        return false;
    }
    let eq = |x: &S, y: &S| x.as_ref() == y.as_ref();
    if a.len() == b.len() && a.iter().zip(b).all(|(x, y)| eq(x, y)) {
        return true;
    }
    let (long, short) = if a.len() >= b.len() { (a, b) } else { (b, a) };
    if long
        .windows(short.len())
        .any(|w| w.iter().zip(short).all(|(x, y)| eq(x, y)))
    {
        return true;
    }
    2 * multiset_overlap(a, b) > a.len().min(b.len())
}

pub fn multiset_overlap<S: AsRef<str>>(a: &[S], b: &[S]) -> usize {
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for t in a {
        *counts.entry(t.as_ref()).or_default() += 1;
    }
    let mut overlap = 0;
    for t in b {
        if let Some(c) = counts.get_mut(t.as_ref()) {
            if *c > 0 {
                *c -= 1;
                overlap += 1;
            }
        }
    }
    overlap
}

/// Similarity between node texts after dropping punctuation and
/// stopwords; texts with no content words are never similar.
pub fn texts_similar<S: AsRef<str>>(a: &[S], b: &[S]) -> bool {
    is_similar(&text::content_words(a), &text::content_words(b))
}

impl SemanticGraph {
    pub fn new(edge_vocabulary: Vec<String>) -> Self {
        SemanticGraph { nodes: Vec::new(), edges: Vec::new(), edge_vocabulary }
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn has_edge(&self, src: usize, dst: usize, label: &str) -> bool {
        self.edges
            .iter()
            .any(|e| e.src == src && e.dst == dst && e.label == label)
    }

    /// Adds an edge unless the identical (src, dst, label) triple exists.
    /// Returns whether the edge was new.
    pub fn add_edge(&mut self, src: usize, dst: usize, label: &str) -> bool {
        if self.has_edge(src, dst, label) {
            return false;
        }
        if !self.edge_vocabulary.iter().any(|l| l == label) {
            self.edge_vocabulary.push(label.to_string());
        }
        self.edges.push(Edge { src, dst, label: label.to_string() });
        true
    }

    pub fn add_similar_pair(&mut self, a: usize, b: usize) {
        self.add_edge(a, b, SIMILAR);
        self.add_edge(b, a, SIMILAR);
    }

    /// Links every similar pair in `scope` with SIMILAR edges in both
    /// directions. Idempotent.
    pub fn add_similarity_links(&mut self, scope: SimilarityScope) {
        let keys: Vec<Vec<String>> = self.nodes.iter().map(|n| text::content_words(&n.text)).collect();
        for i in 0..self.nodes.len() {
            for j in (i + 1)..self.nodes.len() {
                if scope == SimilarityScope::CrossSentence
                    && self.nodes[i].span.sentence == self.nodes[j].span.sentence
                {
                    continue;
                }
                if is_similar(&keys[i], &keys[j]) {
                    let (a, b) = (self.nodes[i].id, self.nodes[j].id);
                    self.add_similar_pair(a, b);
                }
            }
        }
    }

    /// Flags nodes sharing at least one non-stopword token with the answer.
    pub fn tag_answer_nodes(&mut self, answer: &str) {
        let answer_words = text::content_words(&text::tokenize(answer));
        for node in &mut self.nodes {
            let words = text::content_words(&node.text);
            node.answer_flag = words.iter().any(|w| answer_words.contains(w));
        }
    }

    /// Content-selection ground truth: a node is relevant when at least
    /// half of its content words occur in the question, or when it has a
    /// SIMILAR edge to a node of another sentence.
    pub fn label_relevant_nodes(&mut self, gold_question: Option<&str>) -> Result<(), GraphError> {
        let question = gold_question.ok_or(GraphError::MissingQuestion)?;
        let q_words = text::tokenize(question);
        let sentence: Vec<usize> = self.nodes.iter().map(|n| n.span.sentence).collect();
        let mut bridge = vec![false; self.nodes.len()];
        for e in self.edges.iter().filter(|e| e.label == SIMILAR) {
            if sentence[e.src] != sentence[e.dst] {
                bridge[e.src] = true;
                bridge[e.dst] = true;
            }
        }
        for (i, node) in self.nodes.iter_mut().enumerate() {
            let words = text::content_words(&node.text);
            let hits = words.iter().filter(|w| q_words.contains(w)).count();
            let quoted = !words.is_empty() && 2 * hits >= words.len();
            node.relevant_flag = Some(quoted || bridge[i]);
        }
        Ok(())
    }

    /// Structural problems, empty when all graph invariants hold.
    pub fn check_invariants(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (i, n) in self.nodes.iter().enumerate() {
            if n.id != i {
                out.push(format!("node at position {i} has id {}", n.id));
            }
        }
        let families: Vec<NodeFamily> = self.nodes.iter().filter_map(|n| n.node_type.family()).collect();
        if families.windows(2).any(|w| w[0] != w[1]) {
            out.push("node types mix SRL and DP families".to_string());
        }
        let mut seen = std::collections::HashSet::new();
        for e in &self.edges {
            if e.src >= self.nodes.len() || e.dst >= self.nodes.len() {
                out.push(format!("edge {} -> {} out of range", e.src, e.dst));
            }
            if !seen.insert((e.src, e.dst, e.label.as_str())) {
                out.push(format!("duplicate edge {} -> {} {}", e.src, e.dst, e.label));
            }
            if !self.edge_vocabulary.contains(&e.label) {
                out.push(format!("edge label {} missing from vocabulary", e.label));
            }
            if e.label == SIMILAR && !self.has_edge(e.dst, e.src, SIMILAR) {
                out.push(format!("SIMILAR {} -> {} has no reverse", e.src, e.dst));
            }
        }
        out
    }

    pub fn to_json(&self) -> Vec<u8> {
        let mut out = serde_json::to_vec_pretty(self).expect("graph serializes");
        out.push(b'\n');
        out
    }

    pub fn from_json(raw: &[u8]) -> Result<Self, GraphError> {
        let g: SemanticGraph = serde_json::from_slice(raw)?;
        if let Some(p) = g.check_invariants().into_iter().next() {
            return Err(GraphError::Invalid(p));
        }
        Ok(g)
    }

    /// Graphviz rendering; nodes in id order, edges sorted.
    pub fn to_dot(&self) -> Vec<u8> {
        let mut s = String::from("digraph semantic_graph {\n");
        let mut nodes: Vec<&SemanticNode> = self.nodes.iter().collect();
        nodes.sort_by_key(|n| n.id);
        for n in nodes {
            let _ = writeln!(
                s,
                "  n{} [label=\"{}\", shape={}{}];",
                n.id,
                escape_dot(&n.text.join(" ")),
                n.node_type.dot_shape(),
                if n.answer_flag { ", style=bold" } else { "" },
            );
        }
        let mut edges: Vec<&Edge> = self.edges.iter().collect();
        edges.sort();
        for e in edges {
            let style = match e.label.as_str() {
                CHILD => ", style=dashed",
                SIMILAR => ", style=dotted",
                _ => "",
            };
            let _ = writeln!(s, "  n{} -> n{} [label=\"{}\"{}];", e.src, e.dst, escape_dot(&e.label), style);
        }
        s.push_str("}\n");
        s.into_bytes()
    }

    pub fn stats(&self) -> GraphStats {
        let mut by_type = BTreeMap::new();
        for e in &self.edges {
            *by_type.entry(e.label.clone()).or_insert(0) += 1;
        }
        GraphStats {
            node_count: self.nodes.len(),
            edge_count: self.edges.len(),
            edge_count_by_type: by_type,
            connected_components: self.connected_components(),
            token_count: self.nodes.iter().map(|n| n.text.len()).sum(),
        }
    }

    /// Components of the undirected view; isolated nodes count.
    pub fn connected_components(&self) -> usize {
        let n = self.nodes.len();
        let mut adj = vec![Vec::new(); n];
        for e in &self.edges {
            adj[e.src].push(e.dst);
            adj[e.dst].push(e.src);
        }
        let mut seen = vec![false; n];
        let mut components = 0;
        for start in 0..n {
            if seen[start] {
                continue;
            }
            components += 1;
            seen[start] = true;
            let mut stack = vec![start];
            while let Some(v) = stack.pop() {
                for &w in &adj[v] {
                    if !seen[w] {
                        seen[w] = true;
                        stack.push(w);
                    }
                }
            }
        }
        components
    }
}

fn escape_dot(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GraphStats {
    pub node_count: usize,
    pub edge_count: usize,
    pub edge_count_by_type: BTreeMap<String, usize>,
    pub connected_components: usize,
    /// Total tokens over all nodes; the mean is `token_count / node_count`.
    pub token_count: usize,
}

impl GraphStats {
    pub fn mean_tokens_per_node(&self) -> f64 {
        if self.node_count == 0 {
            0.0
        } else {
            self.token_count as f64 / self.node_count as f64
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn w(words: &[&str]) -> Vec<String> {
        words.iter().map(|s| s.to_string()).collect()
    }

    pub(crate) fn node(id: usize, sentence: usize, words: &[&str], t: NodeType) -> SemanticNode {
        SemanticNode {
            id,
            span: Span::new(sentence, 0, words.len()),
            text: w(words),
            node_type: t,
            pos: "NN".into(),
            answer_flag: false,
            relevant_flag: None,
        }
    }

    #[test]
    fn similarity_rules() {
        assert!(is_similar(&w(&["hoonah", "airport"]), &w(&["hoonah", "airport"])));
        assert!(is_similar(&w(&["a", "leading", "member"]), &w(&["leading", "member"])));
        assert!(!is_similar(
            &w(&["pago", "pago", "international", "airport"]),
            &w(&["hoonah", "airport"])
        ));
        assert!(is_similar(
            &w(&["native", "american", "movement"]),
            &w(&["american", "movement", "leader"])
        ));
    }

    #[test]
    fn similarity_is_not_transitive() {
        // Both halves are contained in the whole, but share nothing.
        let a = w(&["red", "fox"]);
        let b = w(&["red", "fox", "den", "site"]);
        let c = w(&["den", "site"]);
        assert!(is_similar(&a, &b));
        assert!(is_similar(&b, &c));
        assert!(!is_similar(&a, &c));
    }

    proptest! {
        #[test]
        fn similarity_symmetric_and_reflexive(
            a in prop::collection::vec("[a-d]", 1..6),
            b in prop::collection::vec("[a-d]", 1..6),
        ) {
            prop_assert_eq!(is_similar(&a, &b), is_similar(&b, &a));
            prop_assert!(is_similar(&a, &a));
        }
    }

    #[test]
    fn similarity_links_idempotent() {
        let mut g = SemanticGraph::new(vec![SIMILAR.into()]);
        g.nodes.push(node(0, 0, &["hoonah", "airport"], NodeType::Noun));
        g.nodes.push(node(1, 1, &["hoonah", "airport"], NodeType::Noun));
        g.add_similarity_links(SimilarityScope::CrossSentence);
        assert_eq!(g.edge_count(), 2);
        let once = g.clone();
        g.add_similarity_links(SimilarityScope::CrossSentence);
        assert_eq!(g, once);

        let mut single = SemanticGraph::new(vec![]);
        single.nodes.push(node(0, 0, &["x"], NodeType::Noun));
        single.add_similarity_links(SimilarityScope::AllPairs);
        assert_eq!(single.edge_count(), 0);
    }

    #[test]
    fn answer_tagging() {
        let mut g = SemanticGraph::new(vec![]);
        g.nodes.push(node(0, 0, &["hoonah", "airport"], NodeType::Noun));
        g.nodes.push(node(1, 0, &["airport", "road"], NodeType::Noun));
        g.nodes.push(node(2, 0, &["the", "city"], NodeType::Noun));
        g.tag_answer_nodes("Hoonah Airport");
        assert!(g.nodes[0].answer_flag);
        g.tag_answer_nodes("yes");
        assert!(g.nodes.iter().all(|n| !n.answer_flag));
        g.tag_answer_nodes("the airport");
        assert!(g.nodes[1].answer_flag);
        assert!(!g.nodes[2].answer_flag, "'the' is a stopword");
    }

    #[test]
    fn relevance_labels() {
        let mut g = SemanticGraph::new(vec![]);
        g.nodes.push(node(0, 0, &["kemess", "mine"], NodeType::Noun));
        g.nodes.push(node(1, 0, &["british", "columbia"], NodeType::Noun));
        g.nodes.push(node(2, 1, &["copper"], NodeType::Noun));
        g.nodes.push(node(3, 2, &["copper", "ore"], NodeType::Noun));
        g.add_similar_pair(2, 3);
        assert!(matches!(g.label_relevant_nodes(None), Err(GraphError::MissingQuestion)));
        g.label_relevant_nodes(Some("What mine was operated at an earlier date, Kemess Mine or Colomac Mine?"))
            .unwrap();
        let flags: Vec<_> = g.nodes.iter().map(|n| n.relevant_flag).collect();
        assert_eq!(flags, [Some(true), Some(false), Some(true), Some(true)]);
    }

    #[test]
    fn stats_and_exports() {
        let g = SemanticGraph::default();
        let s = g.stats();
        assert_eq!((s.node_count, s.edge_count, s.connected_components), (0, 0, 0));
        assert_eq!(s.mean_tokens_per_node(), 0.0);

        let mut g = SemanticGraph::new(vec![]);
        g.nodes.push(node(0, 0, &["a"], NodeType::Argument));
        g.nodes.push(node(1, 0, &["b"], NodeType::Verb));
        g.nodes.push(node(2, 0, &["c", "d"], NodeType::Modifier));
        g.add_edge(0, 1, ARG_TO_VERB);
        g.add_edge(1, 2, VERB_TO_MOD);
        let s = g.stats();
        assert_eq!((s.node_count, s.edge_count, s.connected_components), (3, 2, 1));
        assert!((s.mean_tokens_per_node() - 4.0 / 3.0).abs() < 1e-15);
        assert_eq!(SemanticGraph::from_json(&g.to_json()).unwrap(), g);

        let dot = String::from_utf8(g.to_dot()).unwrap();
        assert_eq!(
            dot,
            "digraph semantic_graph {\n  n0 [label=\"a\", shape=box];\n  n1 [label=\"b\", shape=diamond];\n  \
             n2 [label=\"c d\", shape=ellipse];\n  n0 -> n1 [label=\"ARG_TO_VERB\"];\n  \
             n1 -> n2 [label=\"VERB_TO_MOD\"];\n}\n"
        );
    }

    /// Brute-force union-find over the undirected edge list.
    fn union_find_components(n: usize, edges: &[(usize, usize)]) -> usize {
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], x: usize) -> usize {
            let mut r = x;
            while p[r] != r {
                r = p[r];
            }
            r
        }
        for &(a, b) in edges {
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra != rb {
                parent[ra] = rb;
            }
        }
        (0..n).filter(|&i| find(&mut parent, i) == i).count()
    }

    proptest! {
        #[test]
        fn components_match_union_find(
            n in 1usize..12,
            raw in prop::collection::vec((0usize..12, 0usize..12), 0..20),
        ) {
            let mut g = SemanticGraph::new(vec![]);
            for i in 0..n {
                g.nodes.push(node(i, 0, &["x"], NodeType::Noun));
            }
            let edges: Vec<(usize, usize)> = raw.into_iter().map(|(a, b)| (a % n, b % n)).collect();
            for &(a, b) in &edges {
                g.add_edge(a, b, CHILD);
            }
            prop_assert_eq!(g.connected_components(), union_find_components(n, &edges));
        }
    }
}
