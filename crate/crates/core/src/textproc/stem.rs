//! Rule-based suffix stripping for English and French.
//!
//! Rules are applied repeatedly until none fires, so `stem(stem(w)) == stem(w)`
//! holds for every input. A rule only fires when the remaining stem keeps at
//! least [`MIN_STEM_CHARS`] characters and one vowel.

use super::Language;

const MIN_STEM_CHARS: usize = 3;

/// `(suffix, replacement, exceptions)`; a word ending in any exception suffix
/// is left alone by that rule.
type Rule = (&'static str, &'static str, &'static [&'static str]);

const ENGLISH_RULES: &[Rule] = &[
    ("sses", "ss", &[]),
    ("ies", "y", &[]),
    ("ational", "ate", &[]),
    ("ization", "ize", &[]),
    ("fulness", "ful", &[]),
    ("ousness", "ous", &[]),
    ("iveness", "ive", &[]),
    ("ingly", "", &[]),
    ("edly", "", &[]),
    ("ing", "", &[]),
    ("ed", "", &[]),
    ("ly", "", &[]),
    ("s", "", &["ss", "us", "is", "ous"]),
];

const FRENCH_RULES: &[Rule] = &[
    ("issements", "", &[]),
    ("issement", "", &[]),
    ("ements", "", &[]),
    ("ement", "", &[]),
    ("ations", "", &[]),
    ("ation", "", &[]),
    ("euses", "", &[]),
    ("euse", "", &[]),
    ("eaux", "eau", &[]),
    ("aux", "al", &[]),
    ("ités", "", &[]),
    ("ité", "", &[]),
    ("ives", "", &[]),
    ("ive", "", &[]),
    ("ées", "", &[]),
    ("ée", "", &[]),
    ("és", "", &[]),
    ("é", "", &[]),
    ("es", "", &[]),
    ("s", "", &["ss", "us", "is"]),
    ("x", "", &["eux"]),
];

fn is_vowel(c: char) -> bool {
    matches!(
        c,
        'a' | 'e' | 'i' | 'o' | 'u' | 'y' | 'à' | 'â' | 'é' | 'è' | 'ê' | 'ë' | 'î' | 'ï' | 'ô' | 'û' | 'ù' | 'ü'
    )
}

fn acceptable_stem(stem: &str) -> bool {
    stem.chars().count() >= MIN_STEM_CHARS && stem.chars().any(is_vowel)
}

fn apply_once(word: &str, rules: &[Rule]) -> Option<String> {
    for (suffix, replacement, exceptions) in rules {
        if !word.ends_with(suffix) {
            continue;
        }
        if exceptions.iter().any(|e| word.ends_with(e)) {
            continue;
        }
        let base = &word[..word.len() - suffix.len()];
        let candidate = format!("{base}{replacement}");
        if acceptable_stem(&candidate) && candidate != word {
            return Some(candidate);
        }
    }
    None
}

/// Stems one lowercase word. Words containing digits are returned unchanged.
pub fn stem(word: &str, language: Language) -> String {
    if word.chars().any(|c| c.is_ascii_digit()) {
        return word.to_string();
    }
    let rules = match language {
        Language::French => FRENCH_RULES,
        _ => ENGLISH_RULES,
    };
    let mut current = word.to_string();
    while let Some(next) = apply_once(&current, rules) {
        current = next;
    }
    current
}
