//! Template-generated annotated documents with gold questions, for
//! training smoke tests and benchmarks. Each document chains a founding
//! sentence and a product sentence through a shared company name, plus a
//! distractor sentence that no question asks about.

use rand::seq::IndexedRandom;
use rand::Rng;

use crate::annotations::{AnnotatedDocument, DepEdge, DepTree, RoleSpan, Span, SrlTuple, Token};
use crate::numerics::named_rng;

const PEOPLE: &[&str] = &["Alice", "Bruno", "Chen", "Dara", "Emil", "Fatima", "Goran", "Hana", "Ivan", "Jonas", "Keiko", "Lena"];
const COMPANIES: &[&str] = &["Acme", "Borealis", "Cobalt", "Dynamo", "Everest", "Fulcrum", "Granite", "Helix", "Ionic", "Juniper", "Kestrel", "Lumen"];
const PLACES: &[&str] = &["Oslo", "Lima", "Perth", "Quebec", "Riga", "Seoul", "Tunis", "Utrecht", "Vienna", "Warsaw"];
const PRODUCTS: &[&str] = &["phones", "bicycles", "lamps", "engines", "chairs", "kettles", "drones", "pianos", "tents", "clocks"];
const FOUNDED: &[&str] = &["founded", "started", "built"];
const MAKES: &[&str] = &["makes", "sells", "designs"];
const DISTRACT: &[&str] = &["visited", "liked", "painted"];

struct Sentence {
    words: Vec<(String, &'static str)>,
    root: usize,
    deps: Vec<(usize, usize, &'static str)>,
    roles: Vec<(&'static str, usize, usize)>,
    verb: usize,
}

/// "S V O ." with the verb as root.
fn transitive(subject: &str, verb: &str, verb_tag: &'static str, object: &str, object_tag: &'static str) -> Sentence {
    Sentence {
        words: vec![(subject.into(), "NNP"), (verb.into(), verb_tag), (object.into(), object_tag), (".".into(), ".")],
        root: 1,
        deps: vec![(1, 0, "nsubj"), (1, 2, "dobj"), (1, 3, "punct")],
        roles: vec![("ARG0", 0, 1), ("ARG1", 2, 3)],
        verb: 1,
    }
}

/// "S V O in L ."
fn located(subject: &str, verb: &str, object: &str, place: &str) -> Sentence {
    Sentence {
        words: vec![
            (subject.into(), "NNP"),
            (verb.into(), "VBD"),
            (object.into(), "NNP"),
            ("in".into(), "IN"),
            (place.into(), "NNP"),
            (".".into(), "."),
        ],
        root: 1,
        deps: vec![(1, 0, "nsubj"), (1, 2, "dobj"), (1, 3, "prep"), (3, 4, "pobj"), (1, 5, "punct")],
        roles: vec![("ARG0", 0, 1), ("ARG1", 2, 3), ("ARGM-LOC", 3, 5)],
        verb: 1,
    }
}

fn assemble(sentences: Vec<Sentence>, answer: &str, question: &str) -> AnnotatedDocument {
    let mut doc = AnnotatedDocument {
        sentences: Vec::new(),
        srl: Vec::new(),
        dep: Vec::new(),
        coref: Vec::new(),
        answer: answer.to_string(),
        gold_question: Some(question.to_string()),
        evidence_sentences: None,
    };
    for (s, sent) in sentences.into_iter().enumerate() {
        doc.sentences.push(
            sent.words
                .into_iter()
                .enumerate()
                .map(|(i, (text, pos))| Token { text, pos: pos.to_string(), sentence_index: s, token_index: i })
                .collect(),
        );
        doc.dep.push(DepTree {
            sentence: s,
            root: sent.root,
            edges: sent.deps.iter().map(|&(head, dependent, rel)| DepEdge { head, dependent, relation: rel.to_string() }).collect(),
        });
        let roles = sent.roles.iter().map(|&(role, start, end)| RoleSpan { role: role.to_string(), span: Span::new(s, start, end) });
        doc.srl.push(vec![SrlTuple::from_roles(Span::new(s, sent.verb, sent.verb + 1), roles)]);
    }
    doc
}

/// A founding sentence and a product sentence bridged by the company name;
/// the question asks for the founder.
pub fn two_sentence_document() -> AnnotatedDocument {
    assemble(
        vec![located("Alice", "founded", "Acme", "Oslo"), transitive("Acme", "makes", "VBZ", "phones", "NNS")],
        "Alice",
        "who founded the company that makes phones ?",
    )
}

/// `n` documents drawn from the templates, reproducible from `seed`.
pub fn synthetic_documents(n: usize, seed: u64) -> Vec<AnnotatedDocument> {
    (0..n)
        .map(|i| {
            let mut rng = named_rng(seed, &format!("synthetic/{i}"));
            let mut pick = |xs: &[&'static str]| *xs.choose(&mut rng).expect("non-empty pool");
            let (person, company, place, product) = (pick(PEOPLE), pick(COMPANIES), pick(PLACES), pick(PRODUCTS));
            let (founded, makes, distract) = (pick(FOUNDED), pick(MAKES), pick(DISTRACT));
            let other = loop {
                let p = pick(PEOPLE);
                if p != person {
                    break p;
                }
            };
            let seen = loop {
                let p = pick(PLACES);
                if p != place {
                    break p;
                }
            };
            let mut sentences = vec![located(person, founded, company, place), transitive(company, makes, "VBZ", product, "NNS")];
            let distractor = transitive(other, distract, "VBD", seen, "NNP");
            if rng.random_bool(0.5) {
                sentences.insert(0, distractor);
            } else {
                sentences.push(distractor);
            }
            if rng.random_bool(0.5) {
                assemble(sentences, person, &format!("who {founded} the company that {makes} {product} ?"))
            } else {
                assemble(sentences, place, &format!("where was the company that {makes} {product} {founded} ?"))
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annotations::validate;

    #[test]
    fn documents_validate_and_repeat() {
        let docs = synthetic_documents(20, 3);
        for d in &docs {
            assert!(validate(d).is_empty(), "{:?}", validate(d));
        }
        assert_eq!(docs, synthetic_documents(20, 3));
        assert_ne!(docs, synthetic_documents(20, 4));
        assert!(validate(&two_sentence_document()).is_empty());
    }
}
