use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::catalog::ObjectId;
use crate::textproc::{normalize_terms, normalize_word, tokenize, Language};

pub const DEFAULT_WINDOW: usize = 5;
pub const DEFAULT_MAX_SNIPPETS: usize = 3;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Snippet {
    pub object: ObjectId,
    /// Token position of the match the snippet is centred on.
    pub position: u32,
    pub text: String,
}

/// Concordance lines for one text: `window` raw tokens either side of each
/// match, matched tokens wrapped in `**`. Matches already shown inside an
/// earlier snippet do not start a new one.
pub fn highlight_text(
    object: ObjectId,
    text: &str,
    language: Language,
    terms: &[String],
    window: usize,
    max_snippets: usize,
) -> Vec<Snippet> {
    let wanted: BTreeSet<String> = normalize_terms(terms, language).into_iter().collect();
    if wanted.is_empty() || max_snippets == 0 {
        return Vec::new();
    }
    let tokens = tokenize(text);
    let hit: Vec<bool> = tokens
        .iter()
        .map(|t| normalize_word(t.text, language).is_some_and(|n| wanted.contains(&n)))
        .collect();
    let mut out = Vec::new();
    let mut covered_until: Option<usize> = None;
    for (i, _) in hit.iter().enumerate().filter(|(_, h)| **h) {
        if covered_until.is_some_and(|c| i <= c) {
            continue;
        }
        let lo = i.saturating_sub(window);
        let hi = (i + window).min(tokens.len() - 1);
        let mut s = String::new();
        let mut cursor = tokens[lo].start;
        for j in lo..=hi {
            let t = tokens[j];
            s.push_str(&text[cursor..t.start]);
            if hit[j] {
                s.push_str("**");
                s.push_str(t.text);
                s.push_str("**");
            } else {
                s.push_str(t.text);
            }
            cursor = t.end;
        }
        out.push(Snippet {
            object,
            position: i as u32,
            text: s.split_whitespace().collect::<Vec<_>>().join(" "),
        });
        covered_until = Some(hi);
        if out.len() == max_snippets {
            break;
        }
    }
    out
}
