//! Sentence segmentation and the dual-list learning-content filter.
//!
//! Segmentation is deterministic and rule-based: split on '.', '!', '?'
//! followed by whitespace and a capital/digit (or end of text), and on hard
//! line breaks (two or more newlines); an abbreviation list suppresses
//! splits after tokens like "e.g" or "dr". The filter removes a sentence
//! when it matches any course-logistics phrase, otherwise when it matches
//! no learning-content phrase; the logistics check runs first so each
//! removal has exactly one attributed cause.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::PhraseList;
use crate::textnorm;

#[derive(Debug, Error)]
pub enum FilterError {
    #[error("learning phrase list is empty; filtering would remove every sentence")]
    EmptyLearningList,
}

/// One sentence of a syllabus, with its normalized form cached for matching.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sentence {
    pub syllabus_id: String,
    pub index: usize,
    pub text: String,
    pub normalized: String,
}

/// Abbreviations that suppress a split after a period. Entries are stored
/// lowercased without the trailing dot.
#[derive(Debug, Clone)]
pub struct SegmenterConfig {
    abbreviations: Vec<String>,
}

impl Default for SegmenterConfig {
    fn default() -> Self {
        SegmenterConfig::new(["e.g", "i.e", "dr", "prof", "vs", "etc", "fig", "no"])
    }
}

impl SegmenterConfig {
    pub fn new<I, S>(abbreviations: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let abbreviations = abbreviations
            .into_iter()
            .map(|a| a.as_ref().trim().trim_end_matches('.').to_lowercase())
            .filter(|a| !a.is_empty())
            .collect();
        SegmenterConfig { abbreviations }
    }

    pub fn from_phrase_list(list: &PhraseList) -> Self {
        Self::new(list.phrases().iter().map(String::as_str))
    }

    fn is_abbreviation(&self, word: &str) -> bool {
        // The candidate arrives as the run of non-whitespace before the dot;
        // strip leading punctuation ("(e.g" -> "e.g") before comparing.
        let trimmed = word
            .trim_start_matches(|c: char| !c.is_alphanumeric())
            .to_lowercase();
        !trimmed.is_empty() && self.abbreviations.iter().any(|a| a == &trimmed)
    }
}

/// Splits raw syllabus text into trimmed, non-empty sentences with
/// contiguous indices.
pub fn segment(syllabus_id: &str, text: &str, cfg: &SegmenterConfig) -> Vec<Sentence> {
    let chars: Vec<char> = text.chars().collect();
    let mut sentences: Vec<Sentence> = Vec::new();
    let mut start = 0usize;
    let mut i = 0usize;

    let push = |range_start: usize, range_end: usize, sentences: &mut Vec<Sentence>| {
        let raw: String = chars[range_start..range_end].iter().collect();
        let trimmed = raw.trim();
        if !trimmed.is_empty() {
            let index = sentences.len();
            sentences.push(Sentence {
                syllabus_id: syllabus_id.to_string(),
                index,
                text: trimmed.to_string(),
                normalized: textnorm::normalize(trimmed),
            });
        }
    };

    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            // Hard break: a whitespace run containing >= 2 newlines.
            let mut j = i;
            let mut newlines = 0usize;
            while j < chars.len() && chars[j].is_whitespace() {
                if chars[j] == '\n' {
                    newlines += 1;
                }
                j += 1;
            }
            if newlines >= 2 {
                push(start, i, &mut sentences);
                start = j;
                i = j;
                continue;
            }
            i = j.max(i + 1);
            continue;
        }
        if c == '.' || c == '!' || c == '?' {
            // Consume a run of terminal characters ("?!", "...").
            let mut term_end = i + 1;
            while term_end < chars.len()
                && matches!(chars[term_end], '.' | '!' | '?')
            {
                term_end += 1;
            }
            // Peek past whitespace to the next visible character.
            let mut k = term_end;
            let mut saw_ws = false;
            while k < chars.len() && chars[k].is_whitespace() {
                saw_ws = true;
                k += 1;
            }
            let at_end = k >= chars.len();
            let next_starts_sentence =
                saw_ws && !at_end && (chars[k].is_uppercase() || chars[k].is_numeric());
            if at_end || next_starts_sentence {
                let suppressed = c == '.' && term_end == i + 1 && {
                    let mut w = i;
                    while w > start && !chars[w - 1].is_whitespace() {
                        w -= 1;
                    }
                    let word: String = chars[w..i].iter().collect();
                    cfg.is_abbreviation(&word)
                };
                if !suppressed {
                    push(start, term_end, &mut sentences);
                    start = k;
                    i = k;
                    continue;
                }
            }
            i = term_end;
            continue;
        }
        i += 1;
    }
    push(start, chars.len(), &mut sentences);
    sentences
}

/// How a sentence token has to relate to a phrase token.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatchMode {
    /// Tokens must be equal.
    Exact,
    /// Equal, or the sentence token extends the phrase token with letters
    /// ("analyze" matches "analyzes" and "analyzing" but not "aversus").
    Prefix,
}

/// True iff `phrase` occurs in `sentence_normalized` as a contiguous token
/// run at word boundaries. Both inputs are expected lowercased.
pub fn phrase_match(sentence_normalized: &str, phrase: &str, mode: MatchMode) -> bool {
    let sent = textnorm::tokenize(sentence_normalized);
    let ph = textnorm::tokenize(phrase);
    match_tokens(&sent, &ph, mode)
}

fn token_matches(sentence_token: &str, phrase_token: &str, mode: MatchMode) -> bool {
    if sentence_token == phrase_token {
        return true;
    }
    if mode != MatchMode::Prefix {
        return false;
    }
    let extends_with_letters = |stem: &str| {
        sentence_token.starts_with(stem)
            && sentence_token.len() > stem.len()
            && sentence_token[stem.len()..].chars().all(char::is_alphabetic)
    };
    if extends_with_letters(phrase_token) {
        return true;
    }
    // Verb stems ending in 'e' drop it before -ing/-able and friends
    // ("analyze" -> "analyzing"); match the e-less stem too.
    if let Some(stem) = phrase_token.strip_suffix('e') {
        if !stem.is_empty() && extends_with_letters(stem) {
            return true;
        }
    }
    false
}

fn match_tokens<S: AsRef<str>>(sentence: &[S], phrase: &[S], mode: MatchMode) -> bool {
    if phrase.is_empty() || phrase.len() > sentence.len() {
        return false;
    }
    'outer: for offset in 0..=(sentence.len() - phrase.len()) {
        for (j, p) in phrase.iter().enumerate() {
            if !token_matches(sentence[offset + j].as_ref(), p.as_ref(), mode) {
                continue 'outer;
            }
        }
        return true;
    }
    false
}

#[derive(Debug, Clone, Copy)]
pub struct FilterConfig {
    pub mode: MatchMode,
    /// Sentences with fewer normalized tokens are removed as no-learning.
    pub min_tokens: usize,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig {
            mode: MatchMode::Prefix,
            min_tokens: 3,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct FilterReport {
    pub n_input: u64,
    pub n_removed_logistics: u64,
    pub n_removed_no_learning: u64,
    pub n_kept: u64,
    pub removal_fraction: f64,
}

impl FilterReport {
    pub fn merge(&mut self, other: &FilterReport) {
        self.n_input += other.n_input;
        self.n_removed_logistics += other.n_removed_logistics;
        self.n_removed_no_learning += other.n_removed_no_learning;
        self.n_kept += other.n_kept;
        self.removal_fraction = if self.n_input > 0 {
            1.0 - self.n_kept as f64 / self.n_input as f64
        } else {
            0.0
        };
    }
}

/// Keeps sentences about learning content, in order. Removal causes
/// partition the removals: logistics first, then missing learning language
/// (including fragments below `min_tokens`).
pub fn filter_learning(
    sentences: Vec<Sentence>,
    logistics: &PhraseList,
    learning: &PhraseList,
    cfg: &FilterConfig,
) -> Result<(Vec<Sentence>, FilterReport), FilterError> {
    if learning.is_empty() {
        return Err(FilterError::EmptyLearningList);
    }
    let logistics_tokens: Vec<Vec<String>> = logistics
        .phrases()
        .iter()
        .map(|p| textnorm::tokenize(p))
        .collect();
    let learning_tokens: Vec<Vec<String>> = learning
        .phrases()
        .iter()
        .map(|p| textnorm::tokenize(p))
        .collect();

    let mut report = FilterReport::default();
    let mut kept = Vec::new();
    for sentence in sentences {
        report.n_input += 1;
        let tokens = textnorm::tokenize(&sentence.normalized);
        if logistics_tokens
            .iter()
            .any(|p| match_tokens(&tokens, p, cfg.mode))
        {
            report.n_removed_logistics += 1;
        } else if tokens.len() < cfg.min_tokens
            || !learning_tokens
                .iter()
                .any(|p| match_tokens(&tokens, p, cfg.mode))
        {
            report.n_removed_no_learning += 1;
        } else {
            kept.push(sentence);
        }
    }
    report.n_kept = kept.len() as u64;
    report.removal_fraction = if report.n_input > 0 {
        1.0 - report.n_kept as f64 / report.n_input as f64
    } else {
        0.0
    };
    Ok((kept, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seg(text: &str) -> Vec<String> {
        segment("s", text, &SegmenterConfig::default())
            .into_iter()
            .map(|s| s.text)
            .collect()
    }

    #[test]
    fn empty_input_yields_no_sentences() {
        assert!(seg("").is_empty());
        assert!(seg("   \n \t ").is_empty());
    }

    #[test]
    fn splits_on_terminal_before_capital() {
        assert_eq!(
            seg("Analyze networks. Office hours: Tue 2pm."),
            vec!["Analyze networks.", "Office hours: Tue 2pm."]
        );
    }

    #[test]
    fn abbreviation_suppresses_split() {
        assert_eq!(
            seg("See e.g. Smith. Then apply."),
            vec!["See e.g. Smith.", "Then apply."]
        );
        assert_eq!(seg("Dr. Jones teaches. Students learn."), vec![
            "Dr. Jones teaches.",
            "Students learn."
        ]);
    }

    #[test]
    fn no_split_before_lowercase() {
        assert_eq!(seg("wow! amazing results here."), vec!["wow! amazing results here."]);
    }

    #[test]
    fn split_before_digit() {
        assert_eq!(seg("Read chapter one. 2 more follow."), vec![
            "Read chapter one.",
            "2 more follow."
        ]);
    }

    #[test]
    fn hard_line_breaks_split() {
        assert_eq!(seg("first block\n\nsecond block"), vec!["first block", "second block"]);
        // A single newline is ordinary whitespace.
        assert_eq!(seg("one line\nsame sentence"), vec!["one line\nsame sentence"]);
        assert_eq!(seg("a\r\n\r\nb"), vec!["a", "b"]);
    }

    #[test]
    fn terminal_runs_are_kept_together() {
        assert_eq!(seg("Really?! Yes. Done..."), vec!["Really?!", "Yes.", "Done..."]);
    }

    #[test]
    fn indices_are_contiguous() {
        let out = segment("sy", "A first one. B second one. C third one.", &SegmenterConfig::default());
        let idx: Vec<usize> = out.iter().map(|s| s.index).collect();
        assert_eq!(idx, vec![0, 1, 2]);
        assert!(out.iter().all(|s| s.syllabus_id == "sy"));
    }

    #[test]
    fn phrase_match_token_boundaries() {
        assert!(phrase_match("office hours: tue", "office hours", MatchMode::Exact));
        assert!(!phrase_match("professors analyze", "rofessor", MatchMode::Exact));
        assert!(!phrase_match("professors analyze", "rofessor", MatchMode::Prefix));
        assert!(phrase_match("analyze, then compare", "analyze", MatchMode::Exact));
        assert!(!phrase_match("aversus case", "versus", MatchMode::Prefix));
    }

    #[test]
    fn prefix_mode_matches_inflections() {
        assert!(phrase_match("she analyzes data", "analyze", MatchMode::Prefix));
        assert!(phrase_match("we are analyzing data", "analyze", MatchMode::Prefix));
        assert!(!phrase_match("she analyzes data", "analyze", MatchMode::Exact));
        // Digits after the prefix do not count as a continuation.
        assert!(!phrase_match("model42 rocks today", "model", MatchMode::Prefix));
    }

    fn lists() -> (PhraseList, PhraseList) {
        (
            PhraseList::new(["office hours", "plagiarism"]),
            PhraseList::new(["analyze", "versus", "outcome"]),
        )
    }

    #[test]
    fn filter_keeps_learning_and_counts_causes() {
        let (logistics, learning) = lists();
        let sentences = segment(
            "s",
            "We analyze graphs. Office hours: Tue.",
            &SegmenterConfig::default(),
        );
        let (kept, report) =
            filter_learning(sentences, &logistics, &learning, &FilterConfig::default()).unwrap();
        assert_eq!(kept.len(), 1);
        assert_eq!(kept[0].text, "We analyze graphs.");
        assert_eq!(report.n_input, 2);
        assert_eq!(report.n_removed_logistics, 1);
        assert_eq!(report.n_removed_no_learning, 0);
        assert_eq!(report.n_kept, 1);
        assert!((report.removal_fraction - 0.5).abs() < 1e-15);
    }

    #[test]
    fn empty_input_filter_report_is_zero() {
        let (logistics, learning) = lists();
        let (kept, report) =
            filter_learning(Vec::new(), &logistics, &learning, &FilterConfig::default()).unwrap();
        assert!(kept.is_empty());
        assert_eq!(report, FilterReport::default());
    }

    #[test]
    fn logistics_wins_over_learning() {
        let (logistics, learning) = lists();
        let sentences = vec![Sentence {
            syllabus_id: "s".into(),
            index: 0,
            text: "We analyze plagiarism cases.".into(),
            normalized: "we analyze plagiarism cases.".into(),
        }];
        let (kept, report) =
            filter_learning(sentences, &logistics, &learning, &FilterConfig::default()).unwrap();
        assert!(kept.is_empty());
        assert_eq!(report.n_removed_logistics, 1);
        assert_eq!(report.n_removed_no_learning, 0);
    }

    #[test]
    fn short_fragments_removed_as_no_learning() {
        let (logistics, learning) = lists();
        let sentences = vec![Sentence {
            syllabus_id: "s".into(),
            index: 0,
            text: "Analyze this.".into(),
            normalized: "analyze this.".into(),
        }];
        let (kept, report) =
            filter_learning(sentences, &logistics, &learning, &FilterConfig::default()).unwrap();
        assert!(kept.is_empty());
        assert_eq!(report.n_removed_no_learning, 1);
    }

    #[test]
    fn empty_learning_list_is_an_error() {
        let logistics = PhraseList::new(["office hours"]);
        let learning = PhraseList::new(Vec::<&str>::new());
        let err = filter_learning(Vec::new(), &logistics, &learning, &FilterConfig::default());
        assert!(matches!(err, Err(FilterError::EmptyLearningList)));
    }

    #[test]
    fn report_arithmetic_invariant() {
        let (logistics, learning) = lists();
        let text = "We analyze metrics of networks. Attendance matters here. \
                    Office hours: Tue. Outcomes versus baselines are compared. Short.";
        let sentences = segment("s", text, &SegmenterConfig::default());
        let (_, r) =
            filter_learning(sentences, &logistics, &learning, &FilterConfig::default()).unwrap();
        assert_eq!(r.n_input, r.n_removed_logistics + r.n_removed_no_learning + r.n_kept);
    }
}
