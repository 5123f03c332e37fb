//! Specification preprocessing: sentence segmentation, pronoun resolution,
//! and extraction of textual concepts and relations with the indices of
//! the sentences that mention them.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::ops::Range;
use std::sync::OnceLock;

use regex::Regex;
use serde::Serialize;

use crate::lexicon::{Lexicon, RuleTagger, Tag, Tagger, WordClass};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Sentence {
    /// 1-based position in the specification.
    pub index: usize,
    pub original_text: String,
    /// Text after pronoun replacement; equal to `original_text` when
    /// nothing was resolved.
    pub resolved_text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TextualConcept {
    pub name: String,
    pub sentences: BTreeSet<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TextualRelation {
    /// Verb as written in the first sentence it was found in, lower-cased.
    pub token: String,
    pub lemma: String,
    pub source: String,
    pub target: String,
    pub sentences: BTreeSet<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Extraction {
    pub sentences: Vec<Sentence>,
    pub concepts: Vec<TextualConcept>,
    pub relations: Vec<TextualRelation>,
}

impl Extraction {
    pub fn concept(&self, name: &str) -> Option<&TextualConcept> {
        self.concepts.iter().find(|c| c.name == name)
    }

    pub fn sentence(&self, index: usize) -> Option<&Sentence> {
        index.checked_sub(1).and_then(|i| self.sentences.get(i))
    }

    /// Human-readable listing of concepts and relations.
    pub fn dump(&self) -> String {
        let set = |s: &BTreeSet<usize>| {
            s.iter().map(|i| format!("s{i}")).collect::<Vec<_>>().join(",")
        };
        let mut out = String::from("TextualConcepts =\n");
        for c in &self.concepts {
            let _ = writeln!(out, "  ({}, {{{}}})", c.name, set(&c.sentences));
        }
        out.push_str("TextualRelations =\n");
        for r in &self.relations {
            let _ = writeln!(
                out,
                "  ({}, {}, {}, {{{}}})",
                r.token,
                r.source,
                r.target,
                set(&r.sentences)
            );
        }
        out
    }
}

#[derive(Debug, Clone)]
struct Token<'a> {
    text: &'a str,
    span: Range<usize>,
}

fn tokenize(text: &str) -> Vec<Token<'_>> {
    static WORD: OnceLock<Regex> = OnceLock::new();
    let re = WORD.get_or_init(|| {
        Regex::new(r"[\p{L}\p{N}]+(?:['’\-][\p{L}\p{N}]+)*|[^\s\p{L}\p{N}]").expect("token regex")
    });
    re.find_iter(text)
        .map(|m| Token {
            text: m.as_str(),
            span: m.range(),
        })
        .collect()
}

const CLOSERS: &[char] = &['"', '\'', ')', ']', '’', '”'];
const CLASSIFIER_NOUNS: &[&str] = &[
    "type", "kind", "sort", "number", "set", "list", "group", "lot", "pair", "piece", "amount",
];
const QUANTIFIERS: &[&str] = &["each", "every", "any", "all"];

/// Split text into sentences on `.`, `!` or `?` followed by whitespace or
/// end of input, and on blank lines. Known abbreviations never end a
/// sentence.
pub fn segment(text: &str, lexicon: &Lexicon) -> Vec<Sentence> {
    let mut pieces = Vec::new();
    let mut start = 0;
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut k = 0;
    while k < chars.len() {
        let (i, c) = chars[k];
        let mut cut = None;
        if matches!(c, '.' | '!' | '?') {
            let mut j = k + 1;
            while j < chars.len() && CLOSERS.contains(&chars[j].1) {
                j += 1;
            }
            let at_gap = j >= chars.len() || chars[j].1.is_whitespace();
            if at_gap {
                let word_start = text[..i]
                    .rfind(char::is_whitespace)
                    .map_or(0, |p| p + text[p..].chars().next().map_or(1, char::len_utf8));
                let word = &text[word_start..=i];
                if c != '.' || !lexicon.is_abbreviation(word) {
                    cut = Some((j, chars.get(j).map_or(text.len(), |x| x.0)));
                }
            }
        } else if c == '\n' {
            let mut j = k + 1;
            while j < chars.len() && matches!(chars[j].1, ' ' | '\t' | '\r') {
                j += 1;
            }
            if j < chars.len() && chars[j].1 == '\n' {
                cut = Some((j, chars[j].0));
            }
        }
        if let Some((next_k, end)) = cut {
            pieces.push(text[start..end].trim());
            start = end;
            k = next_k;
        } else {
            k += 1;
        }
    }
    pieces.push(text[start..].trim());
    pieces
        .into_iter()
        .filter(|p| !p.is_empty())
        .enumerate()
        .map(|(i, p)| Sentence {
            index: i + 1,
            original_text: p.to_string(),
            resolved_text: p.to_string(),
        })
        .collect()
}

#[derive(Debug, Clone)]
struct Mention {
    token: usize,
    surface: String,
    plural: bool,
    quantified: bool,
}

/// Sentence preprocessing driven by a [`Tagger`].
pub struct Preprocessor<T: Tagger = RuleTagger> {
    tagger: T,
    lexicon: &'static Lexicon,
}

impl Default for Preprocessor<RuleTagger> {
    fn default() -> Self {
        Preprocessor::new(RuleTagger::default(), Lexicon::builtin())
    }
}

impl<T: Tagger> Preprocessor<T> {
    pub fn new(tagger: T, lexicon: &'static Lexicon) -> Self {
        Preprocessor { tagger, lexicon }
    }

    pub fn tagger(&self) -> &T {
        &self.tagger
    }

    /// Full preprocessing of one specification text.
    pub fn run(&self, text: &str) -> Extraction {
        let mut sentences = segment(text, self.lexicon);
        self.resolve_references(&mut sentences);
        let concepts = self.extract_concepts(&sentences);
        let relations = self.extract_relations(&sentences, &concepts);
        Extraction {
            sentences,
            concepts,
            relations,
        }
    }

    pub fn segment(&self, text: &str) -> Vec<Sentence> {
        segment(text, self.lexicon)
    }

    fn tag_tokens(&self, tokens: &[Token<'_>]) -> Vec<Tag> {
        let words: Vec<&str> = tokens.iter().map(|t| t.text).collect();
        self.tagger.tag(&words)
    }

    fn is_concept_token(&self, word: &str, tag: Tag) -> Option<String> {
        if tag != Tag::Noun || !word.chars().next().is_some_and(char::is_alphabetic) {
            return None;
        }
        let lemma = self.tagger.noun_lemma(word);
        if lemma.chars().count() < 2 || self.lexicon.is_stopword(&lemma) {
            return None;
        }
        Some(lemma)
    }

    fn is_pleonastic(&self, tokens: &[Token<'_>], tags: &[Tag], at: usize) -> bool {
        let word = |k: usize| tokens.get(k).map(|t| t.text.to_lowercase()).unwrap_or_default();
        let (w1, w2, w3) = (word(at + 1), word(at + 2), word(at + 3));
        match w1.as_str() {
            "comes" | "came" => w2 == "to",
            "seems" | "seemed" | "appears" | "appeared" => true,
            "is" | "was" => {
                let w2_class = self.lexicon.class_of(&w2);
                let w2_tag = tags.get(at + 2).copied().unwrap_or(Tag::Other);
                w2_tag != Tag::Noun
                    && !matches!(w2_class, WordClass::Determiner | WordClass::Punct)
                    && (w3 == "to" || w3 == "that")
            }
            _ => false,
        }
    }

    fn mentions(&self, tokens: &[Token<'_>], tags: &[Tag]) -> Vec<Mention> {
        let mut out = Vec::new();
        for (i, tok) in tokens.iter().enumerate() {
            if tags.get(i + 1) == Some(&Tag::Noun) {
                // modifier inside a compound; the head comes later
                continue;
            }
            let Some(lemma) = self.is_concept_token(tok.text, tags[i]) else {
                continue;
            };
            let lower = tok.text.to_lowercase();
            let mut j = i;
            while j > 0 && tags[j - 1] == Tag::Noun {
                j -= 1;
            }
            let mut quantified = false;
            while j > 0 {
                j -= 1;
                let w = tokens[j].text.to_lowercase();
                if QUANTIFIERS.contains(&w.as_str()) {
                    quantified = true;
                    break;
                }
                let class = self.lexicon.class_of(&w);
                let modifier = tags[j] == Tag::Other
                    && matches!(
                        class,
                        WordClass::Adjective | WordClass::Ordinal | WordClass::Number | WordClass::Open
                    );
                if !modifier {
                    break;
                }
            }
            out.push(Mention {
                token: i,
                surface: tok.text.to_string(),
                plural: lemma != lower,
                quantified,
            });
        }
        out
    }

    /// Replace third-person pronouns with the nearest preceding concept
    /// mention of matching number. Within the pronoun's own sentence a
    /// mention introduced by a universal quantifier (`each`, `every`, ...)
    /// is preferred. Unresolvable pronouns stay as written.
    pub fn resolve_references(&self, sentences: &mut [Sentence]) {
        let mut history: Vec<Mention> = Vec::new();
        for sentence in sentences.iter_mut() {
            let text = sentence.original_text.clone();
            let tokens = tokenize(&text);
            let tags = self.tag_tokens(&tokens);
            let here = self.mentions(&tokens, &tags);
            let mut replacements: Vec<(Range<usize>, String)> = Vec::new();
            for (j, tok) in tokens.iter().enumerate() {
                let lower = tok.text.to_lowercase();
                let plural = match lower.as_str() {
                    "it" | "its" => false,
                    "they" | "them" | "their" => true,
                    _ => continue,
                };
                if lower == "it" && self.is_pleonastic(&tokens, &tags, j) {
                    continue;
                }
                let before: Vec<&Mention> = here
                    .iter()
                    .filter(|m| m.token < j && m.plural == plural)
                    .collect();
                let pick = before
                    .iter()
                    .rev()
                    .find(|m| m.quantified)
                    .or_else(|| before.last())
                    .copied()
                    .or_else(|| history.iter().rev().find(|m| m.plural == plural));
                if let Some(m) = pick {
                    let mut replacement = m.surface.to_lowercase();
                    if tok.text.chars().next().is_some_and(char::is_uppercase) {
                        replacement = crate::inflect::capitalize(&replacement);
                    }
                    replacements.push((tok.span.clone(), replacement));
                }
            }
            let mut resolved = text.clone();
            for (span, replacement) in replacements.into_iter().rev() {
                resolved.replace_range(span, &replacement);
            }
            sentence.resolved_text = resolved;
            history.extend(here);
        }
    }

    /// Noun lemmas with the sentences that mention them. Adjacent nouns
    /// additionally yield their joined bigram (`plate number`).
    pub fn extract_concepts(&self, sentences: &[Sentence]) -> Vec<TextualConcept> {
        let mut found: BTreeMap<String, BTreeSet<usize>> = BTreeMap::new();
        for sentence in sentences {
            let tokens = tokenize(&sentence.resolved_text);
            let tags = self.tag_tokens(&tokens);
            let lemmas: Vec<Option<String>> = tokens
                .iter()
                .zip(&tags)
                .map(|(t, tag)| self.is_concept_token(t.text, *tag))
                .collect();
            for (k, lemma) in lemmas.iter().enumerate() {
                let Some(lemma) = lemma else { continue };
                found.entry(lemma.clone()).or_default().insert(sentence.index);
                if k + 1 < lemmas.len() {
                    if let Some(next) = &lemmas[k + 1] {
                        let bigram = format!("{} {}", tokens[k].text.to_lowercase(), next);
                        found.entry(bigram).or_default().insert(sentence.index);
                    }
                }
            }
        }
        found
            .into_iter()
            .map(|(name, sentences)| TextualConcept { name, sentences })
            .collect()
    }

    /// Verb tokens linking the nearest concept before them to the nearest
    /// concept after them in the same sentence.
    pub fn extract_relations(
        &self,
        sentences: &[Sentence],
        concepts: &[TextualConcept],
    ) -> Vec<TextualRelation> {
        let known: BTreeSet<&str> = concepts.iter().map(|c| c.name.as_str()).collect();
        let mut found: BTreeMap<(String, String, String), TextualRelation> = BTreeMap::new();
        for sentence in sentences {
            let tokens = tokenize(&sentence.resolved_text);
            let tags = self.tag_tokens(&tokens);
            let lemmas: Vec<Option<String>> = tokens
                .iter()
                .zip(&tags)
                .map(|(t, tag)| {
                    self.is_concept_token(t.text, *tag)
                        .filter(|l| known.contains(l.as_str()))
                })
                .collect();
            for (i, tok) in tokens.iter().enumerate() {
                // an auxiliary heading a verb group yields to the main verb
                if tags[i] != Tag::Verb || tags.get(i + 1) == Some(&Tag::Verb) {
                    continue;
                }
                let Some(source) = lemmas[..i].iter().rev().flatten().next() else {
                    continue;
                };
                let target = (i + 1..tokens.len()).find_map(|k| {
                    let lemma = lemmas[k].as_ref()?;
                    let followed_by_of = tokens
                        .get(k + 1)
                        .is_some_and(|t| t.text.eq_ignore_ascii_case("of"));
                    if lemma == source || (followed_by_of && CLASSIFIER_NOUNS.contains(&lemma.as_str())) {
                        None
                    } else {
                        Some(lemma)
                    }
                });
                let Some(target) = target else { continue };
                let lemma = self.tagger.verb_lemma(tok.text);
                found
                    .entry((lemma.clone(), source.clone(), target.clone()))
                    .or_insert_with(|| TextualRelation {
                        token: tok.text.to_lowercase(),
                        lemma,
                        source: source.clone(),
                        target: target.clone(),
                        sentences: BTreeSet::new(),
                    })
                    .sentences
                    .insert(sentence.index);
            }
        }
        found.into_values().collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::CAR_SERVICE_SPEC;

    fn pre() -> Preprocessor {
        Preprocessor::default()
    }

    fn set(xs: &[usize]) -> BTreeSet<usize> {
        xs.iter().copied().collect()
    }

    #[test]
    fn segments_running_example() {
        let s = pre().segment(CAR_SERVICE_SPEC);
        assert_eq!(s.len(), 6);
        assert!(s[3].original_text.ends_with("braking system."));
        assert_eq!(s.iter().map(|s| s.index).collect::<Vec<_>>(), [1, 2, 3, 4, 5, 6]);
        for sentence in &s {
            assert!(CAR_SERVICE_SPEC.contains(&sentence.original_text));
        }
    }

    #[test]
    fn segment_edge_cases() {
        assert!(pre().segment("").is_empty());
        assert!(pre().segment("   \n ").is_empty());
        let s = pre().segment("It costs 3.50 per day. Done.");
        assert_eq!(s.len(), 2);
        assert_eq!(s[0].original_text, "It costs 3.50 per day.");
        let s = pre().segment("Pay e.g. by card. Then leave!");
        assert_eq!(s.len(), 2);
        let s = pre().segment("First line\n\nSecond line");
        assert_eq!(s.len(), 2);
        let s = pre().segment("He said \"stop.\" Then left?");
        assert_eq!(s.len(), 2);
    }

    #[test]
    fn resolves_possessive_to_car() {
        let p = pre();
        let mut s = p.segment(CAR_SERVICE_SPEC);
        p.resolve_references(&mut s);
        assert!(
            s[1].resolved_text.ends_with("to register car plate number."),
            "{}",
            s[1].resolved_text
        );
        assert!(s[1].original_text.ends_with("to register its plate number."));
        // "When it comes to" is not a reference
        assert!(s[3].resolved_text.starts_with("When it comes to repairs"));
        assert_eq!(s[0].resolved_text, s[0].original_text);
    }

    #[test]
    fn unresolvable_pronoun_is_kept() {
        let p = pre();
        let mut s = p.segment("It is required that users log in.");
        p.resolve_references(&mut s);
        assert_eq!(s[0].resolved_text, s[0].original_text);
        let mut s = p.segment("It stores data.");
        p.resolve_references(&mut s);
        assert_eq!(s[0].resolved_text, "It stores data.");
    }

    #[test]
    fn plural_pronoun_uses_plural_antecedent() {
        let p = pre();
        let mut s = p.segment("The garage serves customers. They pay their bills.");
        p.resolve_references(&mut s);
        assert_eq!(s[1].resolved_text, "Customers pay customers bills.");
    }

    #[test]
    fn concepts_of_running_example() {
        let x = pre().run(CAR_SERVICE_SPEC);
        let get = |n: &str| x.concept(n).map(|c| c.sentences.clone());
        assert_eq!(get("car"), Some(set(&[1, 2, 4])));
        assert_eq!(get("service"), Some(set(&[1, 3, 5, 6])));
        assert_eq!(get("plate"), Some(set(&[2])));
        assert_eq!(get("garage"), Some(set(&[1, 2, 6])));
        assert_eq!(get("plate number"), Some(set(&[2])));
        assert!(get("thing").is_none());
    }

    #[test]
    fn concept_edge_cases() {
        let p = pre();
        assert!(p.run("Stop.").concepts.is_empty());
        let x = p.run("The garages have addresses.");
        assert_eq!(x.concept("garage").unwrap().sentences, set(&[1]));
        assert_eq!(x.concept("address").unwrap().sentences, set(&[1]));
    }

    #[test]
    fn relations_of_running_example() {
        let x = pre().run(CAR_SERVICE_SPEC);
        let has = |token: &str, src: &str, tgt: &str, s: &[usize]| {
            x.relations
                .iter()
                .any(|r| r.token == token && r.source == src && r.target == tgt && r.sentences == set(s))
        };
        assert!(has("offers", "garage", "service", &[1]), "{}", x.dump());
        assert!(has("happens", "service", "garage", &[6]), "{}", x.dump());
    }

    #[test]
    fn relation_edge_cases() {
        let p = pre();
        let x = p.run("A garage provides services.");
        assert_eq!(x.relations.len(), 1);
        let r = &x.relations[0];
        assert_eq!((r.lemma.as_str(), r.source.as_str(), r.target.as_str()), ("provide", "garage", "service"));
        assert!(p.run("The garage opens.").relations.is_empty());
    }

    #[test]
    fn every_index_is_traceable() {
        let p = pre();
        let x = p.run(CAR_SERVICE_SPEC);
        for c in &x.concepts {
            for &i in &c.sentences {
                let s = x.sentence(i).unwrap();
                let lemmas: Vec<String> = tokenize(&s.resolved_text)
                    .iter()
                    .map(|t| p.tagger().noun_lemma(t.text))
                    .collect();
                let joined = lemmas.join(" ");
                assert!(
                    lemmas.contains(&c.name) || joined.contains(&c.name) || s.resolved_text.to_lowercase().contains(&c.name),
                    "{} not in s{i}",
                    c.name
                );
            }
        }
    }

    #[test]
    fn dump_layout() {
        let x = pre().run("A garage provides services.");
        let d = x.dump();
        assert!(d.contains("(garage, {s1})"));
        assert!(d.contains("(provides, garage, service, {s1})"));
    }
}
