//! Text normalization and word-level edit distance.
//!
//! Claims are compared as sequences of normalized tokens: lowercased,
//! stripped of edge punctuation and reduced to Porter stems. The edit
//! distance between two claims is the Levenshtein distance over those
//! token sequences, and the normalized distance divides by the longer
//! sequence length.

mod porter;

pub use porter::stem;

use std::fmt;

/// A normalized token sequence, the unit of comparison for rewrites.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TokenSeq {
    tokens: Vec<String>,
}

impl TokenSeq {
    pub fn from_tokens(tokens: Vec<String>) -> Self {
        TokenSeq { tokens }
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

impl fmt::Display for TokenSeq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.tokens.join(" "))
    }
}

/// Splits on whitespace, strips punctuation from token edges, lowercases,
/// and drops tokens left empty. Interior punctuation (hyphens, apostrophes)
/// is preserved.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace()
        .map(|w| w.trim_matches(|c: char| !c.is_alphanumeric()))
        .filter(|w| !w.is_empty())
        .map(|w| w.to_lowercase())
        .collect()
}

/// Tokenizes and stems. Tokens containing anything other than ASCII
/// letters are kept as-is after lowercasing.
pub fn normalize(text: &str) -> TokenSeq {
    TokenSeq {
        tokens: tokenize(text).iter().map(|t| stem(t)).collect(),
    }
}

/// Word-level Levenshtein distance with unit insert/delete/substitute
/// costs.
pub fn word_edit_distance(a: &TokenSeq, b: &TokenSeq) -> usize {
    let (a, b) = (a.tokens(), b.tokens());
    if a.is_empty() {
        return b.len();
    }
    if b.is_empty() {
        return a.len();
    }
    let mut row: Vec<usize> = (0..=b.len()).collect();
    for (i, ta) in a.iter().enumerate() {
        let mut diag = row[0];
        row[0] = i + 1;
        for (j, tb) in b.iter().enumerate() {
            let sub = if ta == tb { diag } else { diag + 1 };
            diag = row[j + 1];
            row[j + 1] = sub.min(diag + 1).min(row[j] + 1);
        }
    }
    row[b.len()]
}

/// Edit distance scaled into [0, 1] by the longer sequence length. Two
/// empty sequences are at distance 0.
pub fn normalized_edit_distance(a: &TokenSeq, b: &TokenSeq) -> f64 {
    let denom = a.len().max(b.len());
    if denom == 0 {
        return 0.0;
    }
    word_edit_distance(a, b) as f64 / denom as f64
}

/// How rewrite texts are compared against the original claim.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CompareMode {
    /// Equality of normalized token sequences.
    #[default]
    Normalized,
    /// Exact string equality after trimming outer whitespace.
    Raw,
}

/// True when the model changed the claim, under normalized comparison.
pub fn is_rewritten(original: &str, rewrite: &str) -> bool {
    is_rewritten_with(original, rewrite, CompareMode::Normalized)
}

pub fn is_rewritten_with(original: &str, rewrite: &str, mode: CompareMode) -> bool {
    match mode {
        CompareMode::Normalized => normalize(original) != normalize(rewrite),
        CompareMode::Raw => original.trim() != rewrite.trim(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn seq(words: &[&str]) -> TokenSeq {
        TokenSeq::from_tokens(words.iter().map(|w| w.to_string()).collect())
    }

    #[test]
    fn tokenize_strips_edges_and_lowercases() {
        assert_eq!(tokenize("The ponies, running!"), ["the", "ponies", "running"]);
        assert_eq!(tokenize("a well-known \"fact\""), ["a", "well-known", "fact"]);
        assert_eq!(tokenize("don't stop"), ["don't", "stop"]);
        assert_eq!(tokenize("42nd -- street"), ["42nd", "street"]);
        assert_eq!(tokenize("  \t\n "), Vec::<String>::new());
        assert_eq!(tokenize("(hello)"), ["hello"]);
    }

    #[test]
    fn normalize_stems_tokens() {
        assert_eq!(
            normalize("The ponies are running!").tokens(),
            ["the", "poni", "ar", "run"]
        );
        // Non-ASCII tokens pass through unstemmed.
        assert_eq!(normalize("café stories").tokens(), ["café", "stori"]);
    }

    #[test]
    fn edit_distance_hand_cases() {
        assert_eq!(word_edit_distance(&seq(&[]), &seq(&[])), 0);
        assert_eq!(word_edit_distance(&seq(&["a"]), &seq(&[])), 1);
        assert_eq!(word_edit_distance(&seq(&[]), &seq(&["a", "b"])), 2);
        assert_eq!(
            word_edit_distance(&seq(&["the", "cat", "sat"]), &seq(&["the", "cat", "sat"])),
            0
        );
        assert_eq!(
            word_edit_distance(&seq(&["the", "cat", "sat"]), &seq(&["the", "dog", "sat"])),
            1
        );
        assert_eq!(
            word_edit_distance(&seq(&["a", "b", "c"]), &seq(&["b", "c", "d"])),
            2
        );
        let a = normalize("The ponies are running!");
        let b = normalize("A pony runs");
        assert_eq!(word_edit_distance(&a, &b), 2);
        assert_eq!(normalized_edit_distance(&a, &b), 0.5);
    }

    #[test]
    fn normalized_distance_bounds() {
        assert_eq!(normalized_edit_distance(&seq(&[]), &seq(&[])), 0.0);
        assert_eq!(normalized_edit_distance(&seq(&["a"]), &seq(&[])), 1.0);
        assert_eq!(
            normalized_edit_distance(&seq(&["a", "b"]), &seq(&["a", "b"])),
            0.0
        );
    }

    #[test]
    fn rewritten_uses_normalized_equality() {
        assert!(!is_rewritten("The cat runs.", "the cats running"));
        assert!(is_rewritten("The cat runs.", "The dog runs."));
        assert!(is_rewritten_with(
            "The cat runs.",
            "the cats running",
            CompareMode::Raw
        ));
        assert!(!is_rewritten_with(
            "The cat runs. ",
            "The cat runs.",
            CompareMode::Raw
        ));
    }

    fn token_seq_strategy() -> impl Strategy<Value = TokenSeq> {
        proptest::collection::vec("[a-c]{1,3}", 0..12).prop_map(TokenSeq::from_tokens)
    }

    proptest! {
        #[test]
        fn distance_identity(a in token_seq_strategy()) {
            prop_assert_eq!(word_edit_distance(&a, &a), 0);
        }

        #[test]
        fn distance_symmetry(a in token_seq_strategy(), b in token_seq_strategy()) {
            prop_assert_eq!(word_edit_distance(&a, &b), word_edit_distance(&b, &a));
        }

        #[test]
        fn distance_triangle(
            a in token_seq_strategy(),
            b in token_seq_strategy(),
            c in token_seq_strategy(),
        ) {
            let ab = word_edit_distance(&a, &b);
            let bc = word_edit_distance(&b, &c);
            let ac = word_edit_distance(&a, &c);
            prop_assert!(ac <= ab + bc);
        }

        #[test]
        fn normalized_distance_in_unit_interval(
            a in token_seq_strategy(),
            b in token_seq_strategy(),
        ) {
            let d = normalized_edit_distance(&a, &b);
            prop_assert!((0.0..=1.0).contains(&d));
        }
    }
}
