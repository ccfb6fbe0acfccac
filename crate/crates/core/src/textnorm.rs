//! Text normalization used consistently by phrase lists, sentence records,
//! and embedding cache keys: lowercase and collapse whitespace runs to a
//! single space.

/// Collapses internal whitespace to single spaces and trims the ends.
pub fn collapse_whitespace(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut in_ws = false;
    for ch in s.trim().chars() {
        if ch.is_whitespace() {
            in_ws = true;
        } else {
            if in_ws && !out.is_empty() {
                out.push(' ');
            }
            in_ws = false;
            out.push(ch);
        }
    }
    out
}

/// Lowercased, whitespace-collapsed form. This is the canonical key for
/// phrase matching and for embedding lookups.
pub fn normalize(s: &str) -> String {
    collapse_whitespace(&s.to_lowercase())
}

/// Tokens are maximal runs of alphanumeric characters.
pub fn tokenize(s: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut cur = String::new();
    for ch in s.chars() {
        if ch.is_alphanumeric() {
            cur.push(ch);
        } else if !cur.is_empty() {
            tokens.push(std::mem::take(&mut cur));
        }
    }
    if !cur.is_empty() {
        tokens.push(cur);
    }
    tokens
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn collapse_handles_tabs_and_newlines() {
        assert_eq!(collapse_whitespace("  a\t b\n\nc  "), "a b c");
        assert_eq!(collapse_whitespace(""), "");
        assert_eq!(collapse_whitespace("   "), "");
    }

    #[test]
    fn normalize_lowercases() {
        assert_eq!(normalize("Office  Hours"), "office hours");
    }

    #[test]
    fn tokenize_splits_on_punctuation() {
        assert_eq!(tokenize("analyze, then compare"), vec!["analyze", "then", "compare"]);
        assert_eq!(tokenize("2pm-4pm"), vec!["2pm", "4pm"]);
        assert!(tokenize("...").is_empty());
    }
}
