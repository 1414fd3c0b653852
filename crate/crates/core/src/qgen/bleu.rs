//! BLEU with clipped n-gram precision, brevity penalty against the closest
//! reference length and add-one smoothing on orders above one. Scores are
//! on a 0..100 scale.

use std::collections::HashMap;

fn ngrams<S: AsRef<str>>(tokens: &[S], n: usize) -> HashMap<Vec<&str>, usize> {
    let mut counts = HashMap::new();
    if tokens.len() >= n {
        for w in tokens.windows(n) {
            *counts.entry(w.iter().map(AsRef::as_ref).collect()).or_insert(0) += 1;
        }
    }
    counts
}

/// Clipped matches and candidate n-gram total for each order `1..=n`.
fn matches<S: AsRef<str>>(candidate: &[S], references: &[Vec<S>], n: usize) -> Vec<(usize, usize)> {
    (1..=n)
        .map(|k| {
            let cand = ngrams(candidate, k);
            let mut max_ref: HashMap<Vec<&str>, usize> = HashMap::new();
            for r in references {
                for (g, c) in ngrams(r, k) {
                    let e = max_ref.entry(g).or_insert(0);
                    *e = (*e).max(c);
                }
            }
            let clipped = cand.iter().map(|(g, &c)| c.min(max_ref.get(g).copied().unwrap_or(0))).sum();
            (clipped, cand.values().sum())
        })
        .collect()
}

fn closest_length<S>(len: usize, references: &[Vec<S>]) -> usize {
    references.iter().map(Vec::len).min_by_key(|&r| (r.abs_diff(len), r)).unwrap_or(0)
}

fn combine(counts: &[(usize, usize)], cand_len: usize, ref_len: usize) -> f64 {
    if cand_len == 0 || counts.is_empty() {
        return 0.0;
    }
    let mut log_sum = 0.0;
    for (k, &(m, total)) in counts.iter().enumerate() {
        let (m, total) = if k == 0 { (m as f64, total as f64) } else { (m as f64 + 1.0, total as f64 + 1.0) };
        if m == 0.0 {
            return 0.0;
        }
        log_sum += (m / total).ln();
    }
    let bp = if cand_len > ref_len { 1.0 } else { (1.0 - ref_len as f64 / cand_len as f64).exp() };
    100.0 * bp * (log_sum / counts.len() as f64).exp()
}

pub fn sentence_bleu<S: AsRef<str>>(candidate: &[S], references: &[Vec<S>], n: usize) -> f64 {
    assert!((1..=4).contains(&n), "BLEU order must be in 1..=4");
    let counts = matches(candidate, references, n);
    combine(&counts, candidate.len(), closest_length(candidate.len(), references))
}

/// Corpus-level BLEU: counts and lengths are pooled before combining.
pub fn corpus_bleu<S: AsRef<str>>(pairs: &[(Vec<S>, Vec<Vec<S>>)], n: usize) -> f64 {
    assert!((1..=4).contains(&n), "BLEU order must be in 1..=4");
    let mut pooled = vec![(0, 0); n];
    let (mut cand_len, mut ref_len) = (0, 0);
    for (cand, refs) in pairs {
        for (p, c) in pooled.iter_mut().zip(matches(cand, refs, n)) {
            p.0 += c.0;
            p.1 += c.1;
        }
        cand_len += cand.len();
        ref_len += closest_length(cand.len(), refs);
    }
    combine(&pooled, cand_len, ref_len)
}
