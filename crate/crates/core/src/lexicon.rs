//! Versioned word lists and the rule-based part-of-speech tagger.

use std::collections::{HashMap, HashSet};
use std::sync::OnceLock;

use crate::inflect::singularize;

const LEXICON_DATA: &str = include_str!("../data/lexicon.txt");
const STOPWORD_DATA: &str = include_str!("../data/stopwords.txt");
const ABBREVIATION_DATA: &str = include_str!("../data/abbreviations.txt");

/// Closed and open word classes known to the lexicon.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WordClass {
    Punct,
    Number,
    Determiner,
    Ordinal,
    Pronoun,
    Preposition,
    Conjunction,
    Modal,
    Auxiliary,
    Adverb,
    Adjective,
    Open,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VerbForm {
    Base,
    ThirdPerson,
    Past,
    Gerund,
}

#[derive(Debug, Clone)]
struct VerbEntry {
    lemma: String,
    form: VerbForm,
}

#[derive(Debug, Default)]
pub struct Lexicon {
    closed: HashMap<String, WordClass>,
    nouns: HashSet<String>,
    verbs: HashMap<String, VerbEntry>,
    plural_of: HashMap<String, String>,
    singular_of: HashMap<String, String>,
    stopwords: HashSet<String>,
    abbreviations: HashSet<String>,
}

fn third_person(base: &str) -> String {
    let b = base.as_bytes();
    let n = b.len();
    if ["s", "x", "z", "ch", "sh", "o"].iter().any(|s| base.ends_with(s)) {
        format!("{base}es")
    } else if n >= 2 && b[n - 1] == b'y' && !b"aeiou".contains(&b[n - 2]) {
        format!("{}ies", &base[..n - 1])
    } else {
        format!("{base}s")
    }
}

fn past(base: &str) -> String {
    let b = base.as_bytes();
    let n = b.len();
    if base.ends_with('e') {
        format!("{base}d")
    } else if n >= 2 && b[n - 1] == b'y' && !b"aeiou".contains(&b[n - 2]) {
        format!("{}ied", &base[..n - 1])
    } else {
        format!("{base}ed")
    }
}

fn gerund(base: &str) -> String {
    if let Some(stem) = base.strip_suffix("ie") {
        format!("{stem}ying")
    } else if base.ends_with('e') && !["ee", "ye", "oe"].iter().any(|s| base.ends_with(s)) && base.len() > 2 {
        format!("{}ing", &base[..base.len() - 1])
    } else {
        format!("{base}ing")
    }
}

impl Lexicon {
    /// The lexicon shipped in `data/`.
    pub fn builtin() -> &'static Lexicon {
        static LEXICON: OnceLock<Lexicon> = OnceLock::new();
        LEXICON.get_or_init(|| Lexicon::from_sources(LEXICON_DATA, STOPWORD_DATA, ABBREVIATION_DATA))
    }

    pub fn from_sources(lexicon: &str, stopwords: &str, abbreviations: &str) -> Lexicon {
        let mut lex = Lexicon::default();
        let mut irregular_verbs = Vec::new();
        for line in lexicon.lines().map(str::trim) {
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((section, rest)) = line.split_once(':') else {
                continue;
            };
            let words: Vec<String> = rest.split_whitespace().map(|w| w.to_lowercase()).collect();
            let class = match section.trim() {
                "det" => Some(WordClass::Determiner),
                "number" => Some(WordClass::Number),
                "ordinal" => Some(WordClass::Ordinal),
                "pron" => Some(WordClass::Pronoun),
                "prep" => Some(WordClass::Preposition),
                "conj" => Some(WordClass::Conjunction),
                "modal" => Some(WordClass::Modal),
                "aux" => Some(WordClass::Auxiliary),
                "adv" => Some(WordClass::Adverb),
                "adj" => Some(WordClass::Adjective),
                "noun" => {
                    lex.nouns.extend(words.iter().cloned());
                    None
                }
                "verb" => {
                    for base in &words {
                        lex.add_verb(&third_person(base), base, VerbForm::ThirdPerson);
                        lex.add_verb(&past(base), base, VerbForm::Past);
                        lex.add_verb(&gerund(base), base, VerbForm::Gerund);
                        lex.add_verb(base, base, VerbForm::Base);
                    }
                    None
                }
                "irregular-verb" => {
                    irregular_verbs.push(words.clone());
                    None
                }
                "irregular-noun" => {
                    if let [singular, plural] = words.as_slice() {
                        lex.plural_of.insert(singular.clone(), plural.clone());
                        lex.singular_of.insert(plural.clone(), singular.clone());
                        lex.nouns.insert(singular.clone());
                    }
                    None
                }
                _ => None,
            };
            if let Some(class) = class {
                for w in words {
                    // first listing wins
                    lex.closed.entry(w).or_insert(class);
                }
            }
        }
        // irregular entries override generated ones
        for words in irregular_verbs {
            if let [base, past_form, participle, rest @ ..] = words.as_slice() {
                lex.add_verb(&gerund(base), base, VerbForm::Gerund);
                lex.verbs.insert(
                    participle.clone(),
                    VerbEntry {
                        lemma: base.clone(),
                        form: VerbForm::Past,
                    },
                );
                lex.verbs.insert(
                    past_form.clone(),
                    VerbEntry {
                        lemma: base.clone(),
                        form: VerbForm::Past,
                    },
                );
                let third = rest.first().cloned().unwrap_or_else(|| third_person(base));
                lex.verbs.insert(
                    third,
                    VerbEntry {
                        lemma: base.clone(),
                        form: VerbForm::ThirdPerson,
                    },
                );
                lex.verbs.insert(
                    base.clone(),
                    VerbEntry {
                        lemma: base.clone(),
                        form: VerbForm::Base,
                    },
                );
            }
        }
        for line in stopwords.lines().filter(|l| !l.trim_start().starts_with('#')) {
            lex.stopwords.extend(line.split_whitespace().map(|w| w.to_lowercase()));
        }
        for line in abbreviations.lines().filter(|l| !l.trim_start().starts_with('#')) {
            lex.abbreviations.extend(line.split_whitespace().map(|w| w.to_lowercase()));
        }
        lex
    }

    fn add_verb(&mut self, form: &str, lemma: &str, kind: VerbForm) {
        self.verbs.entry(form.to_string()).or_insert(VerbEntry {
            lemma: lemma.to_string(),
            form: kind,
        });
    }

    pub fn class_of(&self, word: &str) -> WordClass {
        if !word.chars().any(|c| c.is_alphanumeric()) {
            return WordClass::Punct;
        }
        if word.chars().all(|c| c.is_ascii_digit() || c == '.' || c == ',') {
            return WordClass::Number;
        }
        self.closed.get(word).copied().unwrap_or(WordClass::Open)
    }

    pub fn verb_form(&self, word: &str) -> Option<(VerbForm, &str)> {
        self.verbs.get(word).map(|e| (e.form, e.lemma.as_str()))
    }

    pub fn is_verb_lemma(&self, word: &str) -> bool {
        matches!(self.verbs.get(word), Some(e) if e.form == VerbForm::Base)
    }

    pub fn is_known_noun(&self, word: &str) -> bool {
        self.nouns.contains(word) || self.nouns.contains(&singularize(word, self))
    }

    pub fn is_stopword(&self, word: &str) -> bool {
        self.stopwords.contains(word)
    }

    pub fn is_abbreviation(&self, word_with_dot: &str) -> bool {
        self.abbreviations.contains(&word_with_dot.to_lowercase())
    }

    pub fn irregular_plural(&self, singular: &str) -> Option<&str> {
        self.plural_of.get(singular).map(String::as_str)
    }

    pub fn irregular_singular(&self, plural: &str) -> Option<&str> {
        self.singular_of.get(plural).map(String::as_str)
    }
}

/// Coarse part-of-speech tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Tag {
    Noun,
    Verb,
    Other,
}

/// Token → tag assignment. Implementations must be deterministic.
pub trait Tagger: Send + Sync {
    /// Tag the words of running text (one sentence).
    fn tag(&self, words: &[&str]) -> Vec<Tag>;

    /// Tag the words of an identifier such as a role name, where there is
    /// no sentence context.
    fn tag_identifier(&self, words: &[&str]) -> Vec<Tag> {
        self.tag(words)
    }

    /// Base form of a verb token.
    fn verb_lemma(&self, word: &str) -> String;

    /// Singular lower-case form of a noun token.
    fn noun_lemma(&self, word: &str) -> String;
}

/// Closed-class lists, lexicon lookups and suffix heuristics.
#[derive(Debug, Clone, Copy)]
pub struct RuleTagger {
    lexicon: &'static Lexicon,
}

impl Default for RuleTagger {
    fn default() -> Self {
        RuleTagger {
            lexicon: Lexicon::builtin(),
        }
    }
}

const SUBJECT_WORDS: &[&str] = &["i", "we", "you", "he", "she", "it", "they", "who", "which", "that"];
const ADJECTIVE_SUFFIXES: &[&str] = &["ous", "ful", "able", "ible", "ive", "ic", "ical", "less", "ish"];

impl RuleTagger {
    pub fn new(lexicon: &'static Lexicon) -> Self {
        RuleTagger { lexicon }
    }

    pub fn lexicon(&self) -> &'static Lexicon {
        self.lexicon
    }

    fn open_tag(&self, i: usize, words: &[String], tags: &[Tag]) -> Tag {
        let lex = self.lexicon;
        let w = words[i].as_str();
        let prev = (0..i).rev().find(|&j| lex.class_of(&words[j]) != WordClass::Adverb);
        let prev_class = prev.map(|j| lex.class_of(&words[j]));
        let prev_word = prev.map(|j| words[j].as_str()).unwrap_or("");
        let prev_tag = prev.map(|j| tags[j]);
        let noun_context = matches!(
            prev_class,
            Some(
                WordClass::Determiner
                    | WordClass::Adjective
                    | WordClass::Ordinal
                    | WordClass::Number
            )
        ) || (prev_class == Some(WordClass::Preposition) && prev_word != "to");
        let subject_before = SUBJECT_WORDS.contains(&prev_word)
            || prev_class == Some(WordClass::Modal);

        match lex.verb_form(w) {
            Some((form, _)) if lex.is_known_noun(w) => {
                let verb = !noun_context
                    && if prev_word == "to" {
                        form == VerbForm::Base
                    } else {
                        subject_before
                            || prev_class == Some(WordClass::Auxiliary)
                            || (prev_tag == Some(Tag::Noun) && matches!(form, VerbForm::ThirdPerson | VerbForm::Past))
                            || (i == 0 && form == VerbForm::Base)
                    };
                if verb {
                    Tag::Verb
                } else {
                    Tag::Noun
                }
            }
            Some((form, _)) => match form {
                VerbForm::Gerund if noun_context => Tag::Noun,
                VerbForm::Past if noun_context => Tag::Other,
                VerbForm::Gerund
                    if prev_class != Some(WordClass::Auxiliary) && prev_tag != Some(Tag::Noun) =>
                {
                    Tag::Other
                }
                VerbForm::Past if i == 0 => Tag::Other,
                _ => Tag::Verb,
            },
            None => {
                let long = w.chars().count() > 4;
                let participle = long && (w.ends_with("ed") || w.ends_with("ing"));
                if long && (w.ends_with("ly") || ADJECTIVE_SUFFIXES.iter().any(|s| w.ends_with(s))) {
                    Tag::Other
                } else if participle && prev_class == Some(WordClass::Auxiliary) {
                    Tag::Verb
                } else if participle && !(noun_context && w.ends_with("ing")) {
                    Tag::Other
                } else {
                    Tag::Noun
                }
            }
        }
    }
}

impl Tagger for RuleTagger {
    fn tag(&self, words: &[&str]) -> Vec<Tag> {
        let lower: Vec<String> = words.iter().map(|w| w.to_lowercase()).collect();
        let mut tags = Vec::with_capacity(lower.len());
        for i in 0..lower.len() {
            let tag = match self.lexicon.class_of(&lower[i]) {
                WordClass::Auxiliary => Tag::Verb,
                WordClass::Open => self.open_tag(i, &lower, &tags),
                _ => Tag::Other,
            };
            tags.push(tag);
        }
        tags
    }

    fn tag_identifier(&self, words: &[&str]) -> Vec<Tag> {
        let mut tags = self.tag(words);
        if let Some(first) = words.first() {
            let w = first.to_lowercase();
            if self.lexicon.class_of(&w) == WordClass::Open {
                if let Some((form, _)) = self.lexicon.verb_form(&w) {
                    tags[0] = if form == VerbForm::Base && self.lexicon.is_known_noun(&w) {
                        Tag::Noun
                    } else {
                        Tag::Verb
                    };
                }
            }
        }
        tags
    }

    fn verb_lemma(&self, word: &str) -> String {
        let w = word.to_lowercase();
        if let Some((_, lemma)) = self.lexicon.verb_form(&w) {
            return lemma.to_string();
        }
        for (suffix, repl) in [("ies", "y"), ("ied", "y"), ("ing", ""), ("ed", ""), ("es", ""), ("s", "")] {
            if let Some(stem) = w.strip_suffix(suffix) {
                if stem.len() >= 3 {
                    let candidate = format!("{stem}{repl}");
                    if self.lexicon.is_verb_lemma(&format!("{candidate}e")) {
                        return format!("{candidate}e");
                    }
                    return candidate;
                }
            }
        }
        w
    }

    fn noun_lemma(&self, word: &str) -> String {
        singularize(&word.to_lowercase(), self.lexicon)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tags(text: &str) -> Vec<(String, Tag)> {
        let words: Vec<&str> = text.split_whitespace().collect();
        let t = RuleTagger::default().tag(&words);
        words.iter().map(|w| w.to_string()).zip(t).collect()
    }

    fn tag_of(text: &str, word: &str) -> Tag {
        tags(text)
            .into_iter()
            .find(|(w, _)| w == word)
            .map(|(_, t)| t)
            .unwrap()
    }

    #[test]
    fn generated_forms() {
        let lex = Lexicon::builtin();
        assert_eq!(lex.verb_form("provides"), Some((VerbForm::ThirdPerson, "provide")));
        assert_eq!(lex.verb_form("provided"), Some((VerbForm::Past, "provide")));
        assert_eq!(lex.verb_form("happens"), Some((VerbForm::ThirdPerson, "happen")));
        assert_eq!(lex.verb_form("came"), Some((VerbForm::Past, "come")));
        assert_eq!(lex.verb_form("has"), Some((VerbForm::ThirdPerson, "have")));
        assert_eq!(lex.verb_form("rents"), Some((VerbForm::ThirdPerson, "rent")));
        assert_eq!(lex.verb_form("fixes"), Some((VerbForm::ThirdPerson, "fix")));
    }

    #[test]
    fn verbs_after_subjects_and_nouns() {
        assert_eq!(tag_of("a garage offers services", "offers"), Tag::Verb);
        assert_eq!(tag_of("a garage provides services", "provides"), Tag::Verb);
        assert_eq!(tag_of("we record the date", "record"), Tag::Verb);
        assert_eq!(tag_of("the record is old", "record"), Tag::Noun);
        assert_eq!(tag_of("we need to store the date", "store"), Tag::Verb);
        assert_eq!(tag_of("when it comes to repairs", "repairs"), Tag::Noun);
        assert_eq!(tag_of("which car part was fixed", "fixed"), Tag::Verb);
        assert_eq!(tag_of("Note that each service happens", "Note"), Tag::Verb);
    }

    #[test]
    fn nouns_and_modifiers() {
        assert_eq!(tag_of("a specific garage", "specific"), Tag::Other);
        assert_eq!(tag_of("its own address", "address"), Tag::Noun);
        assert_eq!(tag_of("or braking system", "braking"), Tag::Other);
        assert_eq!(tag_of("or braking system", "system"), Tag::Noun);
        assert_eq!(tag_of("the first thing", "first"), Tag::Other);
        assert_eq!(tag_of("maintenance services", "services"), Tag::Noun);
        assert_eq!(tag_of("the reservation", "reservation"), Tag::Noun);
    }

    #[test]
    fn identifiers_prefer_predicates_for_inflected_verbs() {
        let t = RuleTagger::default();
        assert_eq!(t.tag_identifier(&["provides"])[0], Tag::Verb);
        assert_eq!(t.tag_identifier(&["rents"])[0], Tag::Verb);
        assert_eq!(t.tag_identifier(&["place"])[0], Tag::Noun);
        assert_eq!(t.tag_identifier(&["reservations"])[0], Tag::Noun);
        assert_eq!(t.tag_identifier(&["is", "rented", "by"])[0], Tag::Verb);
    }

    #[test]
    fn lemmas() {
        let t = RuleTagger::default();
        assert_eq!(t.verb_lemma("offers"), "offer");
        assert_eq!(t.verb_lemma("provided"), "provide");
        assert_eq!(t.noun_lemma("Services"), "service");
        assert_eq!(t.noun_lemma("addresses"), "address");
    }
}
