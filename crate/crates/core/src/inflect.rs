//! English surface helpers: identifier splitting, number inflection, articles.

use crate::lexicon::Lexicon;

/// Split an identifier into lower-case words at case changes and separators.
///
/// `PartType` → `[Part, Type]`, `BRAKING_SYSTEM` → `[BRAKING, SYSTEM]`,
/// `HTTPServer` → `[HTTP, Server]`.
pub fn split_identifier(raw: &str) -> Vec<String> {
    let mut words = Vec::new();
    for chunk in raw.split(|c: char| c == '_' || c == '-' || c.is_whitespace()) {
        let chars: Vec<char> = chunk.chars().collect();
        let mut start = 0;
        for i in 1..chars.len() {
            let (prev, cur) = (chars[i - 1], chars[i]);
            let next_lower = chars.get(i + 1).is_some_and(|c| c.is_lowercase());
            let boundary = (prev.is_lowercase() && cur.is_uppercase())
                || (prev.is_uppercase() && cur.is_uppercase() && next_lower)
                || (prev.is_alphabetic() && cur.is_ascii_digit())
                || (prev.is_ascii_digit() && cur.is_alphabetic());
            if boundary {
                words.push(chars[start..i].iter().collect());
                start = i;
            }
        }
        if start < chars.len() {
            words.push(chars[start..].iter().collect());
        }
    }
    words
}

/// `PartType` → `part type`.
pub fn decamel(raw: &str) -> String {
    split_identifier(raw)
        .iter()
        .map(|w| w.to_lowercase())
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn capitalize(text: &str) -> String {
    let mut chars = text.chars();
    match chars.next() {
        Some(first) => first.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

/// `BRAKING_SYSTEM` → `Braking System`.
pub fn title_case(raw: &str) -> String {
    split_identifier(raw)
        .iter()
        .map(|w| capitalize(&w.to_lowercase()))
        .collect::<Vec<_>>()
        .join(" ")
}

fn is_vowel(c: char) -> bool {
    matches!(c, 'a' | 'e' | 'i' | 'o' | 'u')
}

const CONSONANT_SOUND_PREFIXES: &[&str] = &[
    "uni", "use", "usa", "usu", "uti", "ura", "ure", "uro", "ubi", "eu", "ewe", "one", "once",
];
const SILENT_H_PREFIXES: &[&str] = &["hour", "honest", "honor", "honour", "heir"];

/// Indefinite article for the word that follows it.
pub fn article(word: &str) -> &'static str {
    let w = word.to_lowercase();
    let Some(first) = w.chars().next() else {
        return "a";
    };
    if SILENT_H_PREFIXES.iter().any(|p| w.starts_with(p)) {
        return "an";
    }
    if is_vowel(first) && !CONSONANT_SOUND_PREFIXES.iter().any(|p| w.starts_with(p)) {
        "an"
    } else {
        "a"
    }
}

/// `a car`, `an engine`, `a user`.
pub fn with_article(phrase: &str) -> String {
    format!("{} {}", article(phrase), phrase)
}

/// Singular form of a lower-case noun.
pub fn singularize(word: &str, lexicon: &Lexicon) -> String {
    if let Some(s) = lexicon.irregular_singular(word) {
        return s.to_string();
    }
    if lexicon.irregular_plural(word).is_some() {
        // already a listed singular
        return word.to_string();
    }
    let n = word.len();
    if n <= 3 || !word.is_ascii() {
        return word.to_string();
    }
    if word.ends_with("ss") || word.ends_with("us") || word.ends_with("is") {
        return word.to_string();
    }
    if n > 4 && word.ends_with("ies") {
        return format!("{}y", &word[..n - 3]);
    }
    for suffix in ["sses", "xes", "ches", "shes", "zzes"] {
        if word.ends_with(suffix) {
            return word[..n - 2].to_string();
        }
    }
    if word.ends_with('s') {
        return word[..n - 1].to_string();
    }
    word.to_string()
}

/// Plural form of a lower-case singular noun.
pub fn pluralize(word: &str, lexicon: &Lexicon) -> String {
    if let Some(p) = lexicon.irregular_plural(word) {
        return p.to_string();
    }
    let chars: Vec<char> = word.chars().collect();
    let n = chars.len();
    if n >= 2 && chars[n - 1] == 'y' && !is_vowel(chars[n - 2]) {
        return format!("{}ies", &word[..word.len() - 1]);
    }
    if ["s", "x", "z", "ch", "sh"].iter().any(|s| word.ends_with(s)) {
        return format!("{word}es");
    }
    format!("{word}s")
}

/// Pluralize the head (last word) of a multi-word phrase.
pub fn pluralize_phrase(phrase: &str, lexicon: &Lexicon) -> String {
    match phrase.rsplit_once(' ') {
        Some((head, last)) => format!("{head} {}", pluralize(last, lexicon)),
        None => pluralize(phrase, lexicon),
    }
}

pub fn singularize_phrase(phrase: &str, lexicon: &Lexicon) -> String {
    match phrase.rsplit_once(' ') {
        Some((head, last)) => format!("{head} {}", singularize(last, lexicon)),
        None => singularize(phrase, lexicon),
    }
}
