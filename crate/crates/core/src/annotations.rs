//! Linguistically annotated documents: data model, JSON wire format,
//! validation, and pronoun substitution from coreference clusters.
//!
//! The wire format is a single JSON object:
//!
//! ```json
//! {
//!   "sentences": [[{"text": "Hoonah", "pos": "NNP"}, ...], ...],
//!   "srl": [[{"verb": {"s": 0, "start": 2, "end": 3},
//!             "arguments": [{"role": "ARG1", "s": 0, "start": 0, "end": 2}],
//!             "modifiers": []}], ...],
//!   "dep": [{"s": 0, "root": 2, "edges": [{"head": 2, "dep": 1, "rel": "nsubj"}]}],
//!   "coref": [{"mentions": [{"s": 0, "start": 0, "end": 2}, ...]}],
//!   "answer": "Hoonah",
//!   "question": null,
//!   "evidence": null
//! }
//! ```
//!
//! Spans are half-open token ranges `[start, end)` within sentence `s`.

use std::collections::{BTreeSet, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AnnotationError {
    #[error("malformed JSON at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("schema error at `{field}`: {message}")]
    Schema { field: String, message: String },
    #[error("input is not valid UTF-8 (byte {offset})")]
    Encoding { offset: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub text: String,
    pub pos: String,
    pub sentence_index: usize,
    pub token_index: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Span {
    #[serde(rename = "s")]
    pub sentence: usize,
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(sentence: usize, start: usize, end: usize) -> Self {
        Span { sentence, start, end }
    }

    pub fn len(&self) -> usize {
        self.end.saturating_sub(self.start)
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }

    /// True when `other` lies inside `self` (same sentence).
    pub fn contains(&self, other: &Span) -> bool {
        self.sentence == other.sentence && self.start <= other.start && other.end <= self.end
    }

    pub fn overlaps(&self, other: &Span) -> bool {
        self.sentence == other.sentence && self.start < other.end && other.start < self.end
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoleSpan {
    pub role: String,
    #[serde(flatten)]
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SrlTuple {
    pub verb: Span,
    #[serde(default)]
    pub arguments: Vec<RoleSpan>,
    #[serde(default)]
    pub modifiers: Vec<RoleSpan>,
}

impl SrlTuple {
    /// Sorts labelled spans into arguments and modifiers: any `ARGM-*`
    /// role is a modifier, everything else an argument.
    pub fn from_roles(verb: Span, roles: impl IntoIterator<Item = RoleSpan>) -> Self {
        let (modifiers, arguments) = roles.into_iter().partition(|r| is_modifier_role(&r.role));
        SrlTuple { verb, arguments, modifiers }
    }
}

pub fn is_modifier_role(role: &str) -> bool {
    role.starts_with("ARGM")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DepEdge {
    pub head: usize,
    #[serde(rename = "dep")]
    pub dependent: usize,
    #[serde(rename = "rel")]
    pub relation: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DepTree {
    #[serde(rename = "s")]
    pub sentence: usize,
    pub root: usize,
    pub edges: Vec<DepEdge>,
}

impl DepTree {
    /// Head of each token, `None` for the root and for unattached tokens.
    pub fn heads(&self, len: usize) -> Vec<Option<usize>> {
        let mut heads = vec![None; len];
        for e in &self.edges {
            if e.dependent < len {
                heads[e.dependent] = Some(e.head);
            }
        }
        heads
    }

    pub fn relation_of(&self, dependent: usize) -> Option<&str> {
        self.edges
            .iter()
            .find(|e| e.dependent == dependent)
            .map(|e| e.relation.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorefCluster {
    pub mentions: Vec<Span>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "WireDocument", into = "WireDocument")]
pub struct AnnotatedDocument {
    pub sentences: Vec<Vec<Token>>,
    pub srl: Vec<Vec<SrlTuple>>,
    pub dep: Vec<DepTree>,
    pub coref: Vec<CorefCluster>,
    pub answer: String,
    pub gold_question: Option<String>,
    pub evidence_sentences: Option<Vec<usize>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct WireToken {
    text: String,
    pos: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct WireDocument {
    sentences: Vec<Vec<WireToken>>,
    srl: Vec<Vec<SrlTuple>>,
    dep: Vec<DepTree>,
    coref: Vec<CorefCluster>,
    answer: String,
    #[serde(default)]
    question: Option<String>,
    #[serde(default)]
    evidence: Option<Vec<usize>>,
}

impl From<WireDocument> for AnnotatedDocument {
    fn from(w: WireDocument) -> Self {
        let sentences = w
            .sentences
            .into_iter()
            .enumerate()
            .map(|(s, toks)| {
                toks.into_iter()
                    .enumerate()
                    .map(|(i, t)| Token {
                        text: t.text,
                        pos: t.pos,
                        sentence_index: s,
                        token_index: i,
                    })
                    .collect()
            })
            .collect();
        AnnotatedDocument {
            sentences,
            srl: w.srl,
            dep: w.dep,
            coref: w.coref,
            answer: w.answer,
            gold_question: w.question,
            evidence_sentences: w.evidence,
        }
    }
}

impl From<AnnotatedDocument> for WireDocument {
    fn from(d: AnnotatedDocument) -> Self {
        d.to_wire()
    }
}

impl AnnotatedDocument {
    fn to_wire(&self) -> WireDocument {
        WireDocument {
            sentences: self
                .sentences
                .iter()
                .map(|s| {
                    s.iter()
                        .map(|t| WireToken { text: t.text.clone(), pos: t.pos.clone() })
                        .collect()
                })
                .collect(),
            srl: self.srl.clone(),
            dep: self.dep.clone(),
            coref: self.coref.clone(),
            answer: self.answer.clone(),
            question: self.gold_question.clone(),
            evidence: self.evidence_sentences.clone(),
        }
    }

    /// Serializes to the wire schema (pretty-printed, trailing newline).
    pub fn to_json(&self) -> Vec<u8> {
        let mut out = serde_json::to_vec_pretty(&self.to_wire()).expect("document serializes");
        out.push(b'\n');
        out
    }

    pub fn token_count(&self) -> usize {
        self.sentences.iter().map(Vec::len).sum()
    }

    /// Offset of each sentence's first token in the flattened token sequence.
    pub fn sentence_offsets(&self) -> Vec<usize> {
        let mut offsets = Vec::with_capacity(self.sentences.len());
        let mut acc = 0;
        for s in &self.sentences {
            offsets.push(acc);
            acc += s.len();
        }
        offsets
    }

    pub fn tokens(&self) -> impl Iterator<Item = &Token> {
        self.sentences.iter().flatten()
    }

    pub fn span_tokens(&self, span: &Span) -> &[Token] {
        &self.sentences[span.sentence][span.start..span.end]
    }

    pub fn span_text_lower(&self, span: &Span) -> Vec<String> {
        self.span_tokens(span).iter().map(|t| t.text.to_lowercase()).collect()
    }

    pub fn dep_tree(&self, sentence: usize) -> Option<&DepTree> {
        self.dep
            .get(sentence)
            .filter(|t| t.sentence == sentence)
            .or_else(|| self.dep.iter().find(|t| t.sentence == sentence))
    }
}

/// Parses a document from UTF-8 JSON bytes.
pub fn parse_annotations(raw: &[u8]) -> Result<AnnotatedDocument, AnnotationError> {
    let text = std::str::from_utf8(raw)
        .map_err(|e| AnnotationError::Encoding { offset: e.valid_up_to() })?;
    let wire: WireDocument = serde_json::from_str(text).map_err(|e| classify(text, e))?;
    Ok(wire.into())
}

fn classify(text: &str, err: serde_json::Error) -> AnnotationError {
    use serde_json::error::Category;
    let message = err.to_string();
    match err.classify() {
        Category::Data => {
            let field = message
                .strip_prefix("missing field `")
                .and_then(|rest| rest.split('`').next())
                .unwrap_or("")
                .to_string();
            AnnotationError::Schema { field, message }
        }
        _ => AnnotationError::Syntax {
            offset: byte_offset(text, err.line(), err.column()),
            message,
        },
    }
}

fn byte_offset(text: &str, line: usize, column: usize) -> usize {
    if line == 0 {
        return 0;
    }
    let line_start: usize = text.split_inclusive('\n').take(line - 1).map(str::len).sum();
    (line_start + column.saturating_sub(1)).min(text.len())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub path: String,
    pub message: String,
}

impl Violation {
    fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Violation { path: path.into(), message: message.into() }
    }
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

/// Checks every structural invariant of a document. An empty result
/// means the document is well formed.
pub fn validate(doc: &AnnotatedDocument) -> Vec<Violation> {
    let mut out = Vec::new();
    let n = doc.sentences.len();

    for (s, sent) in doc.sentences.iter().enumerate() {
        for (i, tok) in sent.iter().enumerate() {
            if tok.text.is_empty() {
                out.push(Violation::new(format!("sentences[{s}][{i}]"), "empty token text"));
            }
            if tok.sentence_index != s || tok.token_index != i {
                out.push(Violation::new(
                    format!("sentences[{s}][{i}]"),
                    "token position does not match its index",
                ));
            }
        }
    }

    if doc.srl.len() != n {
        out.push(Violation::new(
            "srl",
            format!("{} SRL entries for {} sentences", doc.srl.len(), n),
        ));
    }
    if doc.dep.len() != n {
        out.push(Violation::new(
            "dep",
            format!("{} dependency trees for {} sentences", doc.dep.len(), n),
        ));
    }

    let check_span = |out: &mut Vec<Violation>, path: String, span: &Span, expected: Option<usize>| {
        if let Some(s) = expected {
            if span.sentence != s {
                out.push(Violation::new(
                    path.clone(),
                    format!("span refers to sentence {} inside sentence {}", span.sentence, s),
                ));
            }
        }
        let Some(sent) = doc.sentences.get(span.sentence) else {
            out.push(Violation::new(path, format!("sentence {} out of range", span.sentence)));
            return;
        };
        if span.start >= span.end {
            out.push(Violation::new(path, format!("empty span [{}, {})", span.start, span.end)));
        } else if span.end > sent.len() {
            out.push(Violation::new(
                path,
                format!("span [{}, {}) exceeds sentence length {}", span.start, span.end, sent.len()),
            ));
        }
    };

    for (s, tuples) in doc.srl.iter().enumerate() {
        for (t, tuple) in tuples.iter().enumerate() {
            check_span(&mut out, format!("srl[{s}][{t}].verb"), &tuple.verb, Some(s));
            for (a, arg) in tuple.arguments.iter().enumerate() {
                check_span(&mut out, format!("srl[{s}][{t}].arguments[{a}]"), &arg.span, Some(s));
            }
            for (m, modifier) in tuple.modifiers.iter().enumerate() {
                check_span(&mut out, format!("srl[{s}][{t}].modifiers[{m}]"), &modifier.span, Some(s));
            }
        }
    }

    for (d, tree) in doc.dep.iter().enumerate() {
        if let Some(problem) = tree_problem(doc, d, tree) {
            out.push(Violation::new(format!("dep[{d}]"), problem));
        }
    }

    for (c, cluster) in doc.coref.iter().enumerate() {
        if cluster.mentions.len() < 2 {
            out.push(Violation::new(
                format!("coref[{c}]"),
                format!("cluster has {} mention(s), need at least 2", cluster.mentions.len()),
            ));
        }
        for (m, mention) in cluster.mentions.iter().enumerate() {
            check_span(&mut out, format!("coref[{c}].mentions[{m}]"), mention, None);
        }
    }

    if let Some(evidence) = &doc.evidence_sentences {
        for (i, &s) in evidence.iter().enumerate() {
            if s >= n {
                out.push(Violation::new(format!("evidence[{i}]"), format!("sentence {s} out of range")));
            }
        }
    }
    out
}

/// First structural problem of a dependency tree, if any.
fn tree_problem(doc: &AnnotatedDocument, index: usize, tree: &DepTree) -> Option<String> {
    if tree.sentence != index {
        return Some(format!("tree for sentence {} at position {}", tree.sentence, index));
    }
    let Some(sent) = doc.sentences.get(tree.sentence) else {
        return Some(format!("sentence {} out of range", tree.sentence));
    };
    let len = sent.len();
    if tree.root >= len {
        return Some(format!("root {} out of range for {} tokens", tree.root, len));
    }
    let mut heads: Vec<Option<usize>> = vec![None; len];
    for e in &tree.edges {
        if e.head >= len || e.dependent >= len {
            return Some(format!("edge {} -> {} out of range for {} tokens", e.head, e.dependent, len));
        }
        if e.dependent == tree.root {
            return Some(format!("root {} has a head", tree.root));
        }
        if heads[e.dependent].replace(e.head).is_some() {
            return Some(format!("token {} has more than one head", e.dependent));
        }
    }
    if let Some(orphan) = (0..len).find(|&t| t != tree.root && heads[t].is_none()) {
        return Some(format!(
            "token {orphan} has no head (tree covers {} of {} tokens)",
            tree.edges.len() + 1,
            len
        ));
    }
    for start in 0..len {
        let mut cur = start;
        let mut steps = 0;
        while let Some(h) = heads[cur] {
            cur = h;
            steps += 1;
            if steps > len {
                return Some(format!("cycle through token {start}"));
            }
        }
    }
    None
}

/// POS tags treated as pronouns during coreference substitution.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PronounTags(BTreeSet<String>);

impl Default for PronounTags {
    fn default() -> Self {
        Self::new(["PRP", "PRP$", "WP", "WP$"])
    }
}

impl PronounTags {
    pub fn new<I, S>(tags: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        PronounTags(tags.into_iter().map(Into::into).collect())
    }

    pub fn contains(&self, tag: &str) -> bool {
        self.0.contains(tag)
    }
}

#[derive(Debug, Clone)]
pub struct CorefResolution {
    pub document: AnnotatedDocument,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone)]
struct Substitution {
    sentence: usize,
    start: usize,
    end: usize,
    tokens: Vec<(String, String)>,
}

/// Replaces every all-pronoun mention with its cluster's representative
/// (the first mention in document order that is not all pronouns) and
/// re-indexes every span and dependency edge of the affected sentences.
pub fn resolve_coreference(doc: &AnnotatedDocument, pronouns: &PronounTags) -> CorefResolution {
    let mut warnings = Vec::new();
    let is_pronominal = |m: &Span| {
        doc.span_tokens(m).iter().all(|t| pronouns.contains(&t.pos))
    };

    let mut subs: Vec<Substitution> = Vec::new();
    for (c, cluster) in doc.coref.iter().enumerate() {
        let mut ordered = cluster.mentions.clone();
        ordered.sort();
        let Some(rep) = ordered.iter().find(|m| !is_pronominal(m)) else {
            warnings.push(format!("coref[{c}]: no non-pronominal mention, cluster left unchanged"));
            continue;
        };
        let tokens: Vec<(String, String)> = doc
            .span_tokens(rep)
            .iter()
            .map(|t| (t.text.clone(), t.pos.clone()))
            .collect();
        for m in ordered.iter().filter(|m| is_pronominal(m)) {
            let candidate = Span::new(m.sentence, m.start, m.end);
            let clash = subs
                .iter()
                .any(|s| Span::new(s.sentence, s.start, s.end).overlaps(&candidate));
            if clash {
                warnings.push(format!(
                    "coref[{c}]: mention {}:[{}, {}) overlaps another substitution, skipped",
                    m.sentence, m.start, m.end
                ));
                continue;
            }
            subs.push(Substitution {
                sentence: m.sentence,
                start: m.start,
                end: m.end,
                tokens: tokens.clone(),
            });
        }
    }

    // Right to left, so positions of pending substitutions stay valid.
    subs.sort_by_key(|s| std::cmp::Reverse((s.sentence, s.start)));
    let mut out = doc.clone();
    for sub in &subs {
        apply_substitution(&mut out, sub);
    }
    CorefResolution { document: out, warnings }
}

fn apply_substitution(doc: &mut AnnotatedDocument, sub: &Substitution) {
    let s = sub.sentence;
    let (start, end) = (sub.start, sub.end);
    let new_len = sub.tokens.len();
    let delta = new_len as isize - (end - start) as isize;
    let shift = |p: usize| (p as isize + delta) as usize;
    let map_start = |p: usize| if p < start { p } else if p >= end { shift(p) } else { start };
    let map_end = |p: usize| if p <= start { p } else if p >= end { shift(p) } else { start + new_len };
    let remap = |span: &mut Span| {
        if span.sentence == s {
            span.start = map_start(span.start);
            span.end = map_end(span.end);
        }
    };

    let replacement = sub.tokens.iter().map(|(text, pos)| Token {
        text: text.clone(),
        pos: pos.clone(),
        sentence_index: s,
        token_index: 0,
    });
    let sent = &mut doc.sentences[s];
    sent.splice(start..end, replacement);
    for (i, t) in sent.iter_mut().enumerate() {
        t.token_index = i;
    }

    if let Some(tuples) = doc.srl.get_mut(s) {
        for t in tuples {
            remap(&mut t.verb);
            for r in t.arguments.iter_mut().chain(t.modifiers.iter_mut()) {
                remap(&mut r.span);
            }
        }
    }
    for cluster in &mut doc.coref {
        for m in &mut cluster.mentions {
            remap(m);
        }
    }

    let Some(tree) = doc.dep.iter_mut().find(|t| t.sentence == s) else {
        return;
    };
    let inside = |p: usize| p >= start && p < end;
    // The mention's head is the token whose head lies outside the mention.
    let old_head = (start..end)
        .find(|&p| {
            p == tree.root
                || tree
                    .edges
                    .iter()
                    .any(|e| e.dependent == p && !inside(e.head))
        })
        .unwrap_or(end - 1);
    let new_head = start + new_len - 1;
    let map_token = |p: usize| {
        if p < start {
            p
        } else if p >= end {
            shift(p)
        } else {
            new_head
        }
    };
    let mut edges = Vec::with_capacity(tree.edges.len() + new_len);
    for e in &tree.edges {
        if inside(e.dependent) && e.dependent != old_head {
            continue;
        }
        if inside(e.head) && inside(e.dependent) {
            continue;
        }
        edges.push(DepEdge {
            head: map_token(e.head),
            dependent: map_token(e.dependent),
            relation: e.relation.clone(),
        });
    }
    for p in start..new_head {
        edges.push(DepEdge { head: new_head, dependent: p, relation: "compound".to_string() });
    }
    edges.sort_by_key(|e| e.dependent);
    tree.root = map_token(tree.root);
    tree.edges = edges;
}

/// Mentions whose tokens are all pronouns, for diagnostics.
pub fn pronominal_mentions(doc: &AnnotatedDocument, pronouns: &PronounTags) -> HashSet<Span> {
    doc.coref
        .iter()
        .flat_map(|c| c.mentions.iter())
        .filter(|m| doc.span_tokens(m).iter().all(|t| pronouns.contains(&t.pos)))
        .copied()
        .collect()
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) fn toks(sentence: usize, words: &[(&str, &str)]) -> Vec<Token> {
        words
            .iter()
            .enumerate()
            .map(|(i, (w, p))| Token {
                text: w.to_string(),
                pos: p.to_string(),
                sentence_index: sentence,
                token_index: i,
            })
            .collect()
    }

    fn chain_tree(s: usize, len: usize) -> DepTree {
        // Every token headed by the last one.
        DepTree {
            sentence: s,
            root: len - 1,
            edges: (0..len - 1)
                .map(|d| DepEdge { head: len - 1, dependent: d, relation: "dep".into() })
                .collect(),
        }
    }

    const MINIMAL: &str = r#"{
        "sentences": [[{"text":"Hoonah","pos":"NNP"},{"text":"Airport","pos":"NNP"},{"text":"opened","pos":"VBD"}]],
        "srl": [[]],
        "dep": [{"s":0,"root":2,"edges":[{"head":1,"dep":0,"rel":"compound"},{"head":2,"dep":1,"rel":"nsubj"}]}],
        "coref": [],
        "answer": "Hoonah",
        "extra_field": 42
    }"#;

    #[test]
    fn parses_minimal_document() {
        let doc = parse_annotations(MINIMAL.as_bytes()).unwrap();
        assert_eq!(doc.sentences.len(), 1);
        assert_eq!(doc.sentences[0].len(), 3);
        assert_eq!(doc.sentences[0][2].token_index, 2);
        assert_eq!(doc.answer, "Hoonah");
        assert!(doc.gold_question.is_none());
        assert!(validate(&doc).is_empty());
    }

    #[test]
    fn missing_dep_is_schema_error_naming_field() {
        let raw = MINIMAL.replace(r#""dep": [{"s":0,"root":2,"edges":[{"head":1,"dep":0,"rel":"compound"},{"head":2,"dep":1,"rel":"nsubj"}]}],"#, "");
        match parse_annotations(raw.as_bytes()) {
            Err(AnnotationError::Schema { field, .. }) => assert_eq!(field, "dep"),
            other => panic!("expected schema error, got {other:?}"),
        }
    }

    #[test]
    fn malformed_json_reports_byte_offset() {
        let raw = b"{\"sentences\": [[}";
        match parse_annotations(raw) {
            Err(AnnotationError::Syntax { offset, .. }) => assert_eq!(offset, 16),
            other => panic!("expected syntax error, got {other:?}"),
        }
    }

    #[test]
    fn empty_span_is_a_violation() {
        let mut doc = parse_annotations(MINIMAL.as_bytes()).unwrap();
        doc.srl[0].push(SrlTuple {
            verb: Span::new(0, 2, 2),
            arguments: vec![],
            modifiers: vec![],
        });
        let v = validate(&doc);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].path, "srl[0][0].verb");
    }

    #[test]
    fn cycle_is_one_violation() {
        let mut doc = parse_annotations(MINIMAL.as_bytes()).unwrap();
        doc.dep[0].edges = vec![
            DepEdge { head: 1, dependent: 0, relation: "x".into() },
            DepEdge { head: 0, dependent: 1, relation: "x".into() },
        ];
        let v = validate(&doc);
        assert_eq!(v.len(), 1, "{v:?}");
        assert_eq!(v[0].path, "dep[0]");
        assert!(v[0].message.contains("cycle"));
    }

    #[test]
    fn singleton_cluster_is_a_violation() {
        let mut doc = parse_annotations(MINIMAL.as_bytes()).unwrap();
        doc.coref.push(CorefCluster { mentions: vec![Span::new(0, 0, 2)] });
        let v = validate(&doc);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].path, "coref[0]");
    }

    #[test]
    fn round_trip_through_json() {
        let doc = parse_annotations(MINIMAL.as_bytes()).unwrap();
        let again = parse_annotations(&doc.to_json()).unwrap();
        assert_eq!(doc, again);
    }

    fn frodo_doc() -> AnnotatedDocument {
        let s0 = toks(0, &[("Frodo", "NNP"), ("Baggins", "NNP"), ("left", "VBD")]);
        let s1 = toks(1, &[("Then", "RB"), ("he", "PRP"), ("slept", "VBD")]);
        AnnotatedDocument {
            sentences: vec![s0, s1],
            srl: vec![
                vec![SrlTuple {
                    verb: Span::new(0, 2, 3),
                    arguments: vec![RoleSpan { role: "ARG0".into(), span: Span::new(0, 0, 2) }],
                    modifiers: vec![],
                }],
                vec![SrlTuple {
                    verb: Span::new(1, 2, 3),
                    arguments: vec![RoleSpan { role: "ARG0".into(), span: Span::new(1, 1, 2) }],
                    modifiers: vec![RoleSpan { role: "ARGM-TMP".into(), span: Span::new(1, 0, 1) }],
                }],
            ],
            dep: vec![
                DepTree {
                    sentence: 0,
                    root: 2,
                    edges: vec![
                        DepEdge { head: 1, dependent: 0, relation: "compound".into() },
                        DepEdge { head: 2, dependent: 1, relation: "nsubj".into() },
                    ],
                },
                DepTree {
                    sentence: 1,
                    root: 2,
                    edges: vec![
                        DepEdge { head: 2, dependent: 0, relation: "advmod".into() },
                        DepEdge { head: 2, dependent: 1, relation: "nsubj".into() },
                    ],
                },
            ],
            coref: vec![CorefCluster { mentions: vec![Span::new(0, 0, 2), Span::new(1, 1, 2)] }],
            answer: "Frodo".into(),
            gold_question: None,
            evidence_sentences: None,
        }
    }

    #[test]
    fn pronoun_replaced_by_representative() {
        let doc = frodo_doc();
        assert!(validate(&doc).is_empty());
        let res = resolve_coreference(&doc, &PronounTags::default());
        assert!(res.warnings.is_empty());
        let out = res.document;
        let words: Vec<&str> = out.sentences[1].iter().map(|t| t.text.as_str()).collect();
        assert_eq!(words, ["Then", "Frodo", "Baggins", "slept"]);
        assert_eq!(out.sentences[0].len(), 3);
        assert_eq!(out.srl[1][0].verb, Span::new(1, 3, 4));
        assert_eq!(out.srl[1][0].arguments[0].span, Span::new(1, 1, 3));
        assert_eq!(out.srl[1][0].modifiers[0].span, Span::new(1, 0, 1));
        assert_eq!(out.coref[0].mentions[1], Span::new(1, 1, 3));
        assert!(validate(&out).is_empty(), "{:?}", validate(&out));
        assert_eq!(out.dep[1].root, 3);
    }

    #[test]
    fn all_pronoun_cluster_left_unchanged() {
        let mut doc = frodo_doc();
        doc.sentences[0][0].pos = "PRP".into();
        doc.sentences[0][1].pos = "PRP".into();
        let res = resolve_coreference(&doc, &PronounTags::default());
        assert_eq!(res.document, doc);
        assert_eq!(res.warnings.len(), 1);
    }

    /// Old-to-new position map for one sentence, built by replaying the
    /// substitutions left to right over an explicit token list.
    fn offset_oracle(len: usize, subs: &[(usize, usize, usize)]) -> Vec<(usize, usize)> {
        // Each old token carries (new_start, new_end) of the slot it lands in.
        let mut slots: Vec<Option<usize>> = (0..len).map(Some).collect();
        let mut sorted = subs.to_vec();
        sorted.sort();
        let mut cursor = 0usize;
        let mut out = vec![(0, 0); len];
        let mut i = 0;
        let mut k = 0;
        while i < len {
            if k < sorted.len() && sorted[k].0 == i {
                let (s, e, l) = sorted[k];
                for o in out.iter_mut().take(e).skip(s) {
                    *o = (cursor, cursor + l);
                }
                cursor += l;
                i = e;
                k += 1;
            } else {
                out[i] = (cursor, cursor + 1);
                slots[i] = None;
                cursor += 1;
                i += 1;
            }
        }
        out
    }

    #[test]
    fn two_clusters_in_one_sentence_shift_cumulatively() {
        // s0: "Ann Lee met Bo Chan-Wu Jr ."   s1: "she saw him today"
        let s0 = toks(
            0,
            &[("Ann", "NNP"), ("Lee", "NNP"), ("met", "VBD"), ("Bo", "NNP"), ("Chan", "NNP"), ("Jr", "NNP")],
        );
        let s1 = toks(1, &[("she", "PRP"), ("saw", "VBD"), ("him", "PRP"), ("today", "NN")]);
        let mut doc = AnnotatedDocument {
            sentences: vec![s0, s1],
            srl: vec![
                vec![],
                vec![SrlTuple {
                    verb: Span::new(1, 1, 2),
                    arguments: vec![
                        RoleSpan { role: "ARG0".into(), span: Span::new(1, 0, 1) },
                        RoleSpan { role: "ARG1".into(), span: Span::new(1, 2, 3) },
                    ],
                    modifiers: vec![RoleSpan { role: "ARGM-TMP".into(), span: Span::new(1, 3, 4) }],
                }],
            ],
            dep: vec![chain_tree(0, 6), {
                DepTree {
                    sentence: 1,
                    root: 1,
                    edges: vec![
                        DepEdge { head: 1, dependent: 0, relation: "nsubj".into() },
                        DepEdge { head: 1, dependent: 2, relation: "dobj".into() },
                        DepEdge { head: 1, dependent: 3, relation: "npadvmod".into() },
                    ],
                }
            }],
            coref: vec![
                CorefCluster { mentions: vec![Span::new(0, 0, 2), Span::new(1, 0, 1)] },
                CorefCluster { mentions: vec![Span::new(0, 3, 6), Span::new(1, 2, 3)] },
            ],
            answer: "Ann".into(),
            gold_question: None,
            evidence_sentences: None,
        };
        doc.dep[0].root = 2;
        doc.dep[0].edges = vec![
            DepEdge { head: 1, dependent: 0, relation: "compound".into() },
            DepEdge { head: 2, dependent: 1, relation: "nsubj".into() },
            DepEdge { head: 5, dependent: 3, relation: "compound".into() },
            DepEdge { head: 5, dependent: 4, relation: "compound".into() },
            DepEdge { head: 2, dependent: 5, relation: "dobj".into() },
        ];
        assert!(validate(&doc).is_empty(), "{:?}", validate(&doc));

        let out = resolve_coreference(&doc, &PronounTags::default()).document;
        let oracle = offset_oracle(4, &[(0, 1, 2), (2, 3, 3)]);
        let old = &doc.srl[1][0];
        let new = &out.srl[1][0];
        let expect = |sp: &Span| Span::new(1, oracle[sp.start].0, oracle[sp.end - 1].1);
        assert_eq!(new.verb, expect(&old.verb));
        assert_eq!(new.arguments[0].span, expect(&old.arguments[0].span));
        assert_eq!(new.arguments[1].span, expect(&old.arguments[1].span));
        assert_eq!(new.modifiers[0].span, expect(&old.modifiers[0].span));
        assert_eq!(new.modifiers[0].span, Span::new(1, 6, 7));
        assert_eq!(out.sentences[1].len(), 7);
        assert_eq!(out.sentences[0].len(), 6);
        assert!(validate(&out).is_empty(), "{:?}", validate(&out));
    }
}
