//! Semantic graphs from dependency trees.
//!
//! Each sentence's tree is refined in three passes: every word gets a
//! coarse type from its POS tag, unimportant words are pruned (their
//! children move up to the pruned word's parent), and adjacent
//! parent/child attribute words are merged into one node. The refined
//! trees are then unioned into one graph whose edges carry the dependency
//! relation, and similar nodes of different sentences are joined by
//! SIMILAR edges.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::annotations::{AnnotatedDocument, DepTree, Span, Token};
use crate::graph::{NodeType, SemanticGraph, SemanticNode, SimilarityScope, CHILD, SIMILAR};
use crate::par::Execution;

/// Penn Treebank tags, including punctuation tags.
pub const KNOWN_TAGS: &[&str] = &[
    "#", "$", "''", ",", "-LRB-", "-RRB-", ".", ":", "ADD", "AFX", "CC", "CD", "DT", "EX", "FW",
    "GW", "HYPH", "IN", "JJ", "JJR", "JJS", "LS", "MD", "NFP", "NN", "NNP", "NNPS", "NNS", "PDT",
    "POS", "PRP", "PRP$", "RB", "RBR", "RBS", "RP", "SYM", "TO", "UH", "VB", "VBD", "VBG", "VBN",
    "VBP", "VBZ", "WDT", "WP", "WP$", "WRB", "XX", "``",
];

pub const PUNCTUATION_TAGS: &[&str] = &[".", ",", ":", "``", "''", "-LRB-", "-RRB-", "HYPH", "NFP"];

/// Maps a POS tag to its word group; `None` for tags outside the tagset
/// (callers fall back to [`NodeType::Attribute`]).
pub fn pos_group(tag: &str) -> Option<NodeType> {
    if !KNOWN_TAGS.contains(&tag) {
        return None;
    }
    Some(if tag.starts_with("VB") {
        NodeType::Verb
    } else if tag.starts_with("NN") || tag.starts_with("PRP") || tag == "CD" {
        NodeType::Noun
    } else {
        NodeType::Attribute
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeNode {
    pub start: usize,
    pub end: usize,
    pub node_type: NodeType,
    pub pos: String,
    pub parent: Option<usize>,
    pub relation: String,
}

/// A dependency tree whose nodes may span several tokens. Nodes are keyed
/// by the index of the token that founded them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypedTree {
    pub sentence: usize,
    pub root: Option<usize>,
    pub nodes: BTreeMap<usize, TreeNode>,
}

impl TypedTree {
    pub fn children(&self, v: usize) -> Vec<usize> {
        self.nodes
            .iter()
            .filter(|(_, n)| n.parent == Some(v))
            .map(|(&k, _)| k)
            .collect()
    }

    fn reparent_children(&mut self, from: usize, to: usize) {
        for n in self.nodes.values_mut() {
            if n.parent == Some(from) {
                n.parent = Some(to);
            }
        }
    }

    /// True when every node reaches the root through parent links and the
    /// root is the only parentless node.
    pub fn is_tree(&self) -> bool {
        let Some(root) = self.root else {
            return self.nodes.is_empty();
        };
        if self.nodes.get(&root).is_none_or(|n| n.parent.is_some()) {
            return false;
        }
        self.nodes.keys().all(|&k| {
            let mut cur = k;
            for _ in 0..=self.nodes.len() {
                if cur == root {
                    return true;
                }
                match self.nodes.get(&cur).and_then(|n| n.parent) {
                    Some(p) if self.nodes.contains_key(&p) => cur = p,
                    _ => return false,
                }
            }
            false
        })
    }
}

/// Assigns every token of the tree a word group from its POS tag.
/// Unknown tags become attributes and are reported.
pub fn identify_node_types(tree: &DepTree, tokens: &[Token]) -> (TypedTree, Vec<String>) {
    let mut warnings = Vec::new();
    let mut nodes = BTreeMap::new();
    let heads = tree.heads(tokens.len());
    for (i, tok) in tokens.iter().enumerate() {
        let node_type = pos_group(&tok.pos).unwrap_or_else(|| {
            warnings.push(format!(
                "sentence {} token {}: unknown POS tag {:?}, typed as ATTRIBUTE",
                tree.sentence, i, tok.pos
            ));
            NodeType::Attribute
        });
        let relation = if i == tree.root {
            "root".to_string()
        } else {
            tree.relation_of(i).unwrap_or(CHILD).to_string()
        };
        nodes.insert(
            i,
            TreeNode {
                start: i,
                end: i + 1,
                node_type,
                pos: tok.pos.clone(),
                parent: if i == tree.root { None } else { heads[i] },
                relation,
            },
        );
    }
    let root = if tokens.is_empty() { None } else { Some(tree.root) };
    (TypedTree { sentence: tree.sentence, root, nodes }, warnings)
}

/// What [`prune_tree`] removes: punctuation-tagged words and words
/// attached by one of `relations`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PruneRules {
    pub relations: BTreeSet<String>,
}

impl Default for PruneRules {
    fn default() -> Self {
        PruneRules { relations: ["punct", "det"].into_iter().map(String::from).collect() }
    }
}

impl PruneRules {
    pub fn with_relations<I, S>(relations: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        PruneRules { relations: relations.into_iter().map(Into::into).collect() }
    }

    pub fn is_prunable(&self, node: &TreeNode) -> bool {
        PUNCTUATION_TAGS.contains(&node.pos.as_str()) || self.relations.contains(&node.relation)
    }
}

/// Removes prunable nodes top-down; a removed node's children are
/// attached to its parent and keep their own relation labels. A prunable
/// root hands over to its leftmost remaining child; a tree made only of
/// prunable words ends up empty.
pub fn prune_tree(tree: &TypedTree, rules: &PruneRules) -> TypedTree {
    let mut t = tree.clone();
    let Some(root) = t.root else {
        return t;
    };
    prune_below(&mut t, root, rules);

    if rules.is_prunable(&t.nodes[&root]) {
        let kids = t.children(root);
        t.nodes.remove(&root);
        match kids.first() {
            Some(&new_root) => {
                t.reparent_children(root, new_root);
                let n = t.nodes.get_mut(&new_root).expect("child exists");
                n.parent = None;
                n.relation = "root".to_string();
                t.root = Some(new_root);
            }
            None => t.root = None,
        }
    }
    t
}

fn prune_below(t: &mut TypedTree, v: usize, rules: &PruneRules) {
    loop {
        let victim = t
            .children(v)
            .into_iter()
            .find(|c| rules.is_prunable(&t.nodes[c]));
        match victim {
            Some(c) => {
                t.reparent_children(c, v);
                t.nodes.remove(&c);
            }
            None => break,
        }
    }
    for c in t.children(v) {
        prune_below(t, c, rules);
    }
}

/// Merges a node with a child when both are attributes and their spans
/// are adjacent, repeating until no such pair remains. The leftmost pair
/// (by parent span, then child span) merges first; the merged node keeps
/// the parent's key, incoming edge and POS and adopts the child's
/// children.
pub fn merge_nodes(tree: &TypedTree) -> TypedTree {
    let mut t = tree.clone();
    while let Some((v, c)) = next_merge(&t) {
        let child = t.nodes.remove(&c).expect("child exists");
        t.reparent_children(c, v);
        let parent = t.nodes.get_mut(&v).expect("parent exists");
        parent.start = parent.start.min(child.start);
        parent.end = parent.end.max(child.end);
    }
    t
}

fn next_merge(t: &TypedTree) -> Option<(usize, usize)> {
    let mut order: Vec<(usize, &TreeNode)> = t.nodes.iter().map(|(&k, n)| (k, n)).collect();
    order.sort_by_key(|(k, n)| (n.start, *k));
    for &(v, vn) in &order {
        if vn.node_type != NodeType::Attribute {
            continue;
        }
        for &(c, cn) in &order {
            if cn.parent == Some(v)
                && cn.node_type == NodeType::Attribute
                && (cn.end == vn.start || vn.end == cn.start)
            {
                return Some((v, c));
            }
        }
    }
    None
}

/// Mapping from dependency relations to edge labels; labels outside the
/// kept set collapse to `CHILD`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelationVocabulary {
    kept: BTreeSet<String>,
}

pub const DEFAULT_RELATION_LIMIT: usize = 20;

impl RelationVocabulary {
    /// Keeps the `limit` most frequent relations (ties by name).
    pub fn most_frequent<'a>(relations: impl IntoIterator<Item = &'a str>, limit: usize) -> Self {
        let mut counts: HashMap<&str, usize> = HashMap::new();
        for r in relations {
            *counts.entry(r).or_default() += 1;
        }
        let mut ranked: Vec<(&str, usize)> = counts.into_iter().collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
        RelationVocabulary {
            kept: ranked.into_iter().take(limit).map(|(r, _)| r.to_string()).collect(),
        }
    }

    pub fn label<'a>(&self, relation: &'a str) -> &'a str {
        if !relation.is_empty() && self.kept.contains(relation) {
            relation
        } else {
            CHILD
        }
    }
}

#[derive(Debug, Clone)]
pub struct DpOptions {
    pub prune: PruneRules,
    /// Edge label vocabulary; computed from the document itself when absent.
    pub relations: Option<RelationVocabulary>,
    pub relation_limit: usize,
}

impl Default for DpOptions {
    fn default() -> Self {
        DpOptions { prune: PruneRules::default(), relations: None, relation_limit: DEFAULT_RELATION_LIMIT }
    }
}

#[derive(Debug, Clone)]
pub struct DpBuild {
    pub graph: SemanticGraph,
    pub warnings: Vec<String>,
}

/// Type, prune and merge every sentence's tree.
pub fn refine_trees(doc: &AnnotatedDocument, prune: &PruneRules) -> (Vec<TypedTree>, Vec<String>) {
    let mut warnings = Vec::new();
    let mut trees = Vec::new();
    for (s, tokens) in doc.sentences.iter().enumerate() {
        let Some(tree) = doc.dep_tree(s) else {
            warnings.push(format!("sentence {s}: no dependency tree, skipped"));
            continue;
        };
        let (typed, w) = identify_node_types(tree, tokens);
        warnings.extend(w);
        trees.push(merge_nodes(&prune_tree(&typed, prune)));
    }
    (trees, warnings)
}

fn tree_relations(trees: &[TypedTree]) -> impl Iterator<Item = &str> {
    trees
        .iter()
        .flat_map(|t| t.nodes.values())
        .filter(|n| n.parent.is_some())
        .map(|n| n.relation.as_str())
}

/// Unions refined trees into one graph and links similar nodes across
/// sentences.
pub fn assemble(doc: &AnnotatedDocument, trees: &[TypedTree], vocab: &RelationVocabulary) -> SemanticGraph {
    let mut order: Vec<(usize, usize, usize)> = Vec::new();
    for tree in trees {
        for (&k, n) in &tree.nodes {
            order.push((tree.sentence, n.start, k));
        }
    }
    order.sort();
    let mut ids: HashMap<(usize, usize), usize> = HashMap::new();
    let mut g = SemanticGraph::new(Vec::new());
    let tree_of: HashMap<usize, &TypedTree> = trees.iter().map(|t| (t.sentence, t)).collect();
    for &(s, _, k) in &order {
        let n = &tree_of[&s].nodes[&k];
        let id = g.nodes.len();
        let span = Span::new(s, n.start, n.end);
        ids.insert((s, k), id);
        g.nodes.push(SemanticNode {
            id,
            span,
            text: doc.span_text_lower(&span),
            node_type: n.node_type,
            pos: n.pos.clone(),
            answer_flag: false,
            relevant_flag: None,
        });
    }

    let mut edges = Vec::new();
    for tree in trees {
        for (&k, n) in &tree.nodes {
            if let Some(p) = n.parent {
                edges.push((ids[&(tree.sentence, p)], ids[&(tree.sentence, k)], vocab.label(&n.relation)));
            }
        }
    }
    edges.sort();
    let labels: BTreeSet<&str> = edges.iter().map(|e| e.2).collect();
    g.edge_vocabulary = std::iter::once(SIMILAR).chain(labels).map(String::from).collect();
    for (src, dst, label) in edges {
        g.add_edge(src, dst, label);
    }
    g.add_similarity_links(SimilarityScope::CrossSentence);
    g
}

pub fn build_dp_graph(doc: &AnnotatedDocument, opts: &DpOptions) -> DpBuild {
    let (trees, warnings) = refine_trees(doc, &opts.prune);
    let vocab = opts
        .relations
        .clone()
        .unwrap_or_else(|| RelationVocabulary::most_frequent(tree_relations(&trees), opts.relation_limit));
    DpBuild { graph: assemble(doc, &trees, &vocab), warnings }
}

/// Builds a corpus with one relation vocabulary computed over all
/// documents, so every graph shares the same edge labels.
pub fn build_dp_corpus(docs: &[AnnotatedDocument], opts: &DpOptions, exec: Execution) -> Vec<DpBuild> {
    let refined = exec.map(docs, |d| refine_trees(d, &opts.prune));
    let vocab = opts.relations.clone().unwrap_or_else(|| {
        RelationVocabulary::most_frequent(
            refined.iter().flat_map(|(t, _)| tree_relations(t)),
            opts.relation_limit,
        )
    });
    let pairs: Vec<_> = docs.iter().zip(&refined).collect();
    exec.map(&pairs, |(doc, (trees, warnings))| DpBuild {
        graph: assemble(doc, trees, &vocab),
        warnings: warnings.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annotations::tests::toks;
    use crate::annotations::DepEdge;

    fn tree(s: usize, root: usize, edges: &[(usize, usize, &str)]) -> DepTree {
        DepTree {
            sentence: s,
            root,
            edges: edges
                .iter()
                .map(|&(h, d, r)| DepEdge { head: h, dependent: d, relation: r.into() })
                .collect(),
        }
    }

    #[test]
    fn pos_groups() {
        assert_eq!(pos_group("VBD"), Some(NodeType::Verb));
        assert_eq!(pos_group("NNS"), Some(NodeType::Noun));
        assert_eq!(pos_group("PRP$"), Some(NodeType::Noun));
        assert_eq!(pos_group("CD"), Some(NodeType::Noun));
        assert_eq!(pos_group("JJ"), Some(NodeType::Attribute));
        assert_eq!(pos_group("XYZ"), None);
    }

    #[test]
    fn unknown_tag_warns() {
        let tokens = toks(0, &[("foo", "XYZ"), ("ran", "VBD")]);
        let (t, w) = identify_node_types(&tree(0, 1, &[(1, 0, "nsubj")]), &tokens);
        assert_eq!(t.nodes[&0].node_type, NodeType::Attribute);
        assert_eq!(w.len(), 1);
    }

    #[test]
    fn punct_children_move_to_parent() {
        // v=0, "," at 1 (punct) with children 2 and 3.
        let tokens = toks(0, &[("saw", "VBD"), (",", ","), ("dogs", "NNS"), ("cats", "NNS")]);
        let dt = tree(0, 0, &[(0, 1, "punct"), (1, 2, "conj"), (1, 3, "conj")]);
        let (t, _) = identify_node_types(&dt, &tokens);
        let p = prune_tree(&t, &PruneRules::default());
        assert!(!p.nodes.contains_key(&1));
        assert_eq!(p.children(0), [2, 3]);
        assert_eq!(p.nodes[&2].relation, "conj");
        assert!(p.is_tree());
    }

    #[test]
    fn nothing_to_prune_is_identity() {
        let tokens = toks(0, &[("dogs", "NNS"), ("bark", "VBP")]);
        let (t, _) = identify_node_types(&tree(0, 1, &[(1, 0, "nsubj")]), &tokens);
        assert_eq!(prune_tree(&t, &PruneRules::default()), t);
    }

    #[test]
    fn pruning_a_chain() {
        // ran(0) -> ,(1) -> ;(2) -> home(3): both punctuation nodes vanish
        // and "home" hangs directly from "ran" with its own relation.
        let tokens = toks(0, &[("ran", "VBD"), (",", ","), (";", ":"), ("home", "NN")]);
        let dt = tree(0, 0, &[(0, 1, "punct"), (1, 2, "punct"), (2, 3, "npadvmod")]);
        let (t, _) = identify_node_types(&dt, &tokens);
        let p = prune_tree(&t, &PruneRules::default());
        assert_eq!(p.nodes.keys().copied().collect::<Vec<_>>(), [0, 3]);
        assert_eq!(p.nodes[&3].parent, Some(0));
        assert_eq!(p.nodes[&3].relation, "npadvmod");
    }

    #[test]
    fn prunable_root_hands_over() {
        let tokens = toks(0, &[("dogs", "NNS"), ("!", "."), ("cats", "NNS")]);
        let dt = tree(0, 1, &[(1, 0, "dep"), (1, 2, "dep")]);
        let (t, _) = identify_node_types(&dt, &tokens);
        let p = prune_tree(&t, &PruneRules::default());
        assert_eq!(p.root, Some(0));
        assert_eq!(p.nodes[&2].parent, Some(0));
        assert!(p.is_tree());

        let only = toks(0, &[(".", ".")]);
        let (t, _) = identify_node_types(&tree(0, 0, &[]), &only);
        let p = prune_tree(&t, &PruneRules::default());
        assert!(p.nodes.is_empty() && p.is_tree());
    }

    #[test]
    fn merges_consecutive_attributes() {
        let tokens = toks(0, &[("native", "JJ"), ("american", "JJ"), ("movement", "NN")]);
        let dt = tree(0, 2, &[(1, 0, "amod"), (2, 1, "amod")]);
        let (t, _) = identify_node_types(&dt, &tokens);
        let m = merge_nodes(&t);
        assert_eq!(m.nodes.len(), 2);
        assert_eq!((m.nodes[&1].start, m.nodes[&1].end), (0, 2));
        assert_eq!(m.nodes[&1].parent, Some(2));
    }

    #[test]
    fn verb_parent_blocks_merge() {
        let tokens = toks(0, &[("ran", "VBD"), ("quickly", "RB")]);
        let (t, _) = identify_node_types(&tree(0, 0, &[(0, 1, "advmod")]), &tokens);
        assert_eq!(merge_nodes(&t), t);
    }

    #[test]
    fn three_attribute_chain_merges_to_fixpoint() {
        // very(0) <- quite(1)?  Chain: 2 -> 1 -> 0, all adverbs/adjectives.
        let tokens = toks(0, &[("very", "RB"), ("deeply", "RB"), ("blue", "JJ"), ("sea", "NN")]);
        let dt = tree(0, 3, &[(1, 0, "advmod"), (2, 1, "advmod"), (3, 2, "amod")]);
        let (t, _) = identify_node_types(&dt, &tokens);
        let m = merge_nodes(&t);
        assert_eq!(m.nodes.len(), 2);
        let merged = &m.nodes[&2];
        assert_eq!((merged.start, merged.end, merged.parent), (0, 3, Some(3)));
        assert_eq!(merged.relation, "amod");
    }

    #[test]
    fn relation_vocab_collapses_rare_labels() {
        let v = RelationVocabulary::most_frequent(["a", "a", "b", "c", "c", "c"], 2);
        assert_eq!(v.label("c"), "c");
        assert_eq!(v.label("a"), "a");
        assert_eq!(v.label("b"), CHILD);
        assert_eq!(v.label(""), CHILD);
    }
}
