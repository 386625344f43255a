//! Case folding and tokenization shared by every stage.

/// Case-folded form used for every name comparison. Raw strings are kept
/// for display.
pub fn fold(text: &str) -> String {
    text.to_lowercase()
}

/// Lower-cases `text` and splits it on every non-alphanumeric character.
/// Empty pieces are dropped; there is no stemming and no stopword list.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|piece| !piece.is_empty())
        .map(fold)
        .collect()
}

/// Number of whitespace-separated words, the unit of the prompt budget.
pub fn word_count(text: &str) -> usize {
    text.split_whitespace().count()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokenize_splits_on_punctuation() {
        assert_eq!(
            tokenize("Typhus, Epidemic Louse-Borne"),
            ["typhus", "epidemic", "louse", "borne"]
        );
        assert_eq!(tokenize("immune-system disease"), ["immune", "system", "disease"]);
        assert!(tokenize("").is_empty());
        assert!(tokenize(" -- ,; ").is_empty());
    }

    #[test]
    fn tokenize_keeps_digits_and_non_ascii_letters() {
        assert_eq!(tokenize("Type 2 Diabetes"), ["type", "2", "diabetes"]);
        assert_eq!(tokenize("Sjögren's syndrome"), ["sjögren", "s", "syndrome"]);
        assert_eq!(tokenize("ÉCOLE"), ["école"]);
    }
}
