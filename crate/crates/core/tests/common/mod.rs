#![allow(dead_code)]

use std::collections::{BTreeSet, HashMap};
use std::path::{Path, PathBuf};

use rand::seq::IndexedRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use semgraph_core::annotations::{parse_annotations, AnnotatedDocument, DepEdge, DepTree, Span, Token};
use semgraph_core::dp::{TypedTree, KNOWN_TAGS, PUNCTUATION_TAGS};
use semgraph_core::graph::{NodeType, SemanticGraph, SemanticNode};

pub fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

/// Fixture names (file stems) in order.
pub fn fixture_names() -> Vec<String> {
    let mut names: Vec<String> = std::fs::read_dir(fixture_dir().join("docs"))
        .expect("fixture docs")
        .map(|e| e.expect("entry").path())
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .map(|p| p.file_stem().unwrap().to_string_lossy().into_owned())
        .collect();
    names.sort();
    names
}

pub fn load_fixture(name: &str) -> AnnotatedDocument {
    let raw = std::fs::read(fixture_dir().join("docs").join(format!("{name}.json"))).expect("fixture doc");
    parse_annotations(&raw).unwrap_or_else(|e| panic!("{name}: {e}"))
}

/// Reads a hand-written golden graph:
///
/// ```text
/// vocab SIMILAR ARG_TO_VERB VERB_TO_MOD
/// node <s> <start> <end> <TYPE> <POS> <token>...
/// edge <src> <dst> <label>
/// ```
///
/// Node ids follow line order. Answer and relevance flags are left unset.
pub fn load_golden(name: &str, kind: &str) -> SemanticGraph {
    let path = fixture_dir().join("golden").join(format!("{name}.{kind}"));
    let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    let mut g = SemanticGraph::default();
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        let mut f = line.split_whitespace();
        match f.next() {
            Some("vocab") => g.edge_vocabulary = f.map(String::from).collect(),
            Some("node") => {
                let mut num = || f.next().unwrap().parse::<usize>().unwrap();
                let span = Span::new(num(), num(), num());
                let node_type = match f.next().unwrap() {
                    "ARGUMENT" => NodeType::Argument,
                    "VERB" => NodeType::Verb,
                    "MODIFIER" => NodeType::Modifier,
                    "NOUN" => NodeType::Noun,
                    "ATTRIBUTE" => NodeType::Attribute,
                    other => panic!("unknown node type {other}"),
                };
                let pos = f.next().unwrap().to_string();
                g.nodes.push(SemanticNode {
                    id: g.nodes.len(),
                    span,
                    text: f.map(String::from).collect(),
                    node_type,
                    pos,
                    answer_flag: false,
                    relevant_flag: None,
                });
            }
            Some("edge") => {
                let src = f.next().unwrap().parse().unwrap();
                let dst = f.next().unwrap().parse().unwrap();
                let label = f.next().unwrap().to_string();
                g.edges.push(semgraph_core::graph::Edge { src, dst, label });
            }
            other => panic!("bad golden line {other:?}"),
        }
    }
    g
}

/// Straight transcription of the three similarity rules over lowercased
/// content words, kept separate from the library version.
pub fn oracle_similar(a: &[String], b: &[String]) -> bool {
    const STOP: &[&str] = &["a", "an", "and", "in", "is", "of", "on", "the", "to", "with"];
    let clean = |xs: &[String]| -> Vec<String> {
        xs.iter()
            .map(|x| x.to_lowercase())
            .filter(|x| x.chars().any(char::is_alphanumeric) && !STOP.contains(&x.as_str()))
            .collect()
    };
    let (a, b) = (clean(a), clean(b));
    if a.is_empty() || b.is_empty() {
        return false;
    }
    if a == b {
        return true;
    }
    let (long, short) = if a.len() >= b.len() { (&a, &b) } else { (&b, &a) };
    for i in 0..=(long.len() - short.len()) {
        if long[i..i + short.len()] == short[..] {
            return true;
        }
    }
    let mut pool: HashMap<&str, i32> = HashMap::new();
    for x in &a {
        *pool.entry(x).or_default() += 1;
    }
    let mut common = 0;
    for y in &b {
        let c = pool.entry(y).or_default();
        if *c > 0 {
            *c -= 1;
            common += 1;
        }
    }
    common as f64 > 0.5 * a.len().min(b.len()) as f64
}

/// A random word list over a small alphabet (so overlaps happen), with the
/// oracle's stopwords and punctuation mixed in.
pub fn random_words(rng: &mut ChaCha8Rng) -> Vec<String> {
    const WORDS: &[&str] = &["alpha", "beta", "gamma", "delta", "Alpha", "the", "of", "a", ",", ".", "in", "7"];
    let n = rng.random_range(0..6);
    (0..n).map(|_| WORDS.choose(rng).unwrap().to_string()).collect()
}

const RELATIONS: &[&str] = &["nsubj", "dobj", "amod", "advmod", "det", "punct", "prep", "pobj", "compound", "cc"];

/// A random dependency tree over `n` tokens with random tags and relations.
pub fn random_tree(rng: &mut ChaCha8Rng, n: usize) -> (Vec<Token>, DepTree) {
    let tags: Vec<&str> = KNOWN_TAGS.to_vec();
    let tokens: Vec<Token> = (0..n)
        .map(|i| {
            // bias towards attributes so merges happen
            let pos = if rng.random_bool(0.4) { ["JJ", "RB", "IN"].choose(rng).unwrap() } else { tags.choose(rng).unwrap() };
            Token { text: format!("w{i}"), pos: pos.to_string(), sentence_index: 0, token_index: i }
        })
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        order.swap(i, rng.random_range(0..=i));
    }
    let root = order[0];
    let edges = (1..n)
        .map(|k| DepEdge {
            head: order[rng.random_range(0..k)],
            dependent: order[k],
            relation: RELATIONS.choose(rng).unwrap().to_string(),
        })
        .collect();
    (tokens, DepTree { sentence: 0, root, edges })
}

pub fn prunable(tok: &Token, tree: &DepTree, relations: &BTreeSet<String>) -> bool {
    PUNCTUATION_TAGS.contains(&tok.pos.as_str())
        || (tok.token_index != tree.root && tree.relation_of(tok.token_index).is_some_and(|r| relations.contains(r)))
}

/// Problems with a pruned tree, checked against the original:
/// survivors are exactly the non-prunable tokens, each survivor hangs from
/// its nearest surviving ancestor (the new root stands in for a pruned
/// root), and the result is a tree.
pub fn pruned_tree_problems(tokens: &[Token], tree: &DepTree, pruned: &TypedTree, relations: &BTreeSet<String>) -> Vec<String> {
    let mut out = Vec::new();
    let keep: Vec<bool> = tokens.iter().map(|t| !prunable(t, tree, relations)).collect();
    let survivors: Vec<usize> = pruned.nodes.keys().copied().collect();
    let expected: Vec<usize> = (0..tokens.len()).filter(|&i| keep[i]).collect();
    if survivors != expected {
        out.push(format!("survivors {survivors:?}, expected {expected:?}"));
        return out;
    }
    if !pruned.is_tree() {
        out.push("not a tree".into());
    }
    let heads = tree.heads(tokens.len());
    for &v in &survivors {
        let mut a = heads[v];
        while let Some(x) = a {
            if keep[x] {
                break;
            }
            a = heads[x];
        }
        let want = match a {
            Some(x) => Some(x),
            None if Some(v) == pruned.root => None,
            None => pruned.root,
        };
        if pruned.nodes[&v].parent != want {
            out.push(format!("node {v}: parent {:?}, expected {want:?}", pruned.nodes[&v].parent));
        }
    }
    out
}

/// Problems with a merged tree: spans partition the input's tokens, no
/// adjacent attribute parent/child pair is left, and it is still a tree.
pub fn merged_tree_problems(input: &TypedTree, merged: &TypedTree) -> Vec<String> {
    let mut out = Vec::new();
    if !merged.is_tree() {
        out.push("not a tree".into());
    }
    let want: BTreeSet<usize> = input.nodes.values().flat_map(|n| n.start..n.end).collect();
    let mut got = BTreeSet::new();
    for n in merged.nodes.values() {
        for i in n.start..n.end {
            if !got.insert(i) {
                out.push(format!("token {i} covered twice"));
            }
        }
    }
    if got != want {
        out.push(format!("covered {got:?}, expected {want:?}"));
    }
    for (&k, n) in &merged.nodes {
        if let Some(p) = n.parent {
            let pn = &merged.nodes[&p];
            if n.node_type == NodeType::Attribute
                && pn.node_type == NodeType::Attribute
                && (n.end == pn.start || pn.end == n.start)
            {
                out.push(format!("attributes {p} and {k} left unmerged"));
            }
        }
    }
    out
}
