//! Lowercasing, stopwords, punctuation, and a whitespace tokenizer for
//! free-text answers and questions.

/// Fixed English stopword list (sorted for binary search).
const STOPWORDS: &[&str] = &[
    "a", "about", "above", "after", "again", "against", "all", "am", "an", "and", "any", "are",
    "as", "at", "be", "because", "been", "before", "being", "below", "between", "both", "but",
    "by", "can", "could", "did", "do", "does", "doing", "down", "during", "each", "few", "for",
    "from", "further", "had", "has", "have", "having", "he", "her", "here", "hers", "herself",
    "him", "himself", "his", "how", "i", "if", "in", "into", "is", "it", "its", "itself", "just",
    "me", "more", "most", "my", "myself", "no", "nor", "not", "now", "of", "off", "on", "once",
    "only", "or", "other", "our", "ours", "ourselves", "out", "over", "own", "same", "she",
    "should", "so", "some", "such", "than", "that", "the", "their", "theirs", "them",
    "themselves", "then", "there", "these", "they", "this", "those", "through", "to", "too",
    "under", "until", "up", "very", "was", "we", "were", "what", "when", "where", "which",
    "while", "who", "whom", "why", "will", "with", "would", "you", "your", "yours", "yourself",
    "yourselves",
];

pub fn is_stopword(word: &str) -> bool {
    STOPWORDS.binary_search(&word).is_ok()
}

/// A token made only of punctuation or symbol characters.
pub fn is_punctuation(token: &str) -> bool {
    !token.is_empty() && token.chars().all(|c| !c.is_alphanumeric())
}

/// Lowercases and drops punctuation tokens and stopwords: the form used
/// when comparing node texts for similarity and overlap.
pub fn content_words<S: AsRef<str>>(tokens: &[S]) -> Vec<String> {
    tokens
        .iter()
        .map(|t| t.as_ref().to_lowercase())
        .filter(|t| !is_punctuation(t) && !is_stopword(t))
        .collect()
}

/// Splits free text on whitespace, lowercases, and trims punctuation from
/// both ends of each word ("Mine?" -> "mine"); internal hyphens and
/// apostrophes are kept. Tokens that are pure punctuation are dropped.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace()
        .map(|w| w.trim_matches(|c: char| !c.is_alphanumeric()).to_lowercase())
        .filter(|w| !w.is_empty())
        .collect()
}

/// Like [`tokenize`] but keeps sentence punctuation as separate tokens,
/// which is what a generated question should reproduce.
pub fn tokenize_keep_punct(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    for word in text.split_whitespace() {
        let lower = word.to_lowercase();
        let core = lower.trim_matches(|c: char| !c.is_alphanumeric());
        if core.is_empty() {
            out.push(lower);
            continue;
        }
        let lead = &lower[..lower.find(core).unwrap_or(0)];
        let trail = &lower[lower.find(core).unwrap_or(0) + core.len()..];
        out.extend(lead.chars().map(String::from));
        out.push(core.to_string());
        out.extend(trail.chars().map(String::from));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stopword_list_sorted() {
        assert!(STOPWORDS.windows(2).all(|w| w[0] < w[1]));
        assert!(is_stopword("the"));
        assert!(!is_stopword("airport"));
    }

    #[test]
    fn tokenizers() {
        assert_eq!(tokenize("Kemess Mine or Colomac Mine?"), ["kemess", "mine", "or", "colomac", "mine"]);
        assert_eq!(
            tokenize_keep_punct("Which mine, Kemess Mine?"),
            ["which", "mine", ",", "kemess", "mine", "?"]
        );
        assert_eq!(tokenize("self-determination"), ["self-determination"]);
    }

    #[test]
    fn content_words_drop_noise() {
        assert_eq!(content_words(&["The", "Airport", ","]), ["airport"]);
    }
}
