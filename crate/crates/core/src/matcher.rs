//! Links model elements to the specification sentences that mention them.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::Serialize;

use crate::inflect::{singularize, split_identifier};
use crate::lexicon::Lexicon;
use crate::model::{ElementAnchor, Relationship};
use crate::preprocess::{Extraction, TextualConcept};
use crate::slicer::ModelSlice;

pub const DEFAULT_TAU: f64 = 0.75;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MatchedSentenceSet {
    pub element: String,
    pub sentences: BTreeSet<usize>,
}

fn is_consonant(c: u8) -> bool {
    c.is_ascii_alphabetic() && !b"aeiou".contains(&c)
}

fn strip_verb_suffix(word: &str, lexicon: &Lexicon) -> String {
    if lexicon.is_known_noun(word) {
        return word.to_string();
    }
    for suffix in ["ing", "ed"] {
        let Some(stem) = word.strip_suffix(suffix) else { continue };
        if stem.len() < 3 || !stem.is_ascii() {
            continue;
        }
        if lexicon.is_verb_lemma(&format!("{stem}e")) {
            return format!("{stem}e");
        }
        let b = stem.as_bytes();
        let n = b.len();
        if n >= 4 && b[n - 1] == b[n - 2] && is_consonant(b[n - 1]) && !matches!(b[n - 1], b'l' | b's' | b'z') {
            return stem[..n - 1].to_string();
        }
        return stem.to_string();
    }
    word.to_string()
}

/// Lower-cased, singularized, suffix-stripped word stems of an identifier
/// or phrase.
pub fn normalize_name(raw: &str, lexicon: &Lexicon) -> Vec<String> {
    split_identifier(raw)
        .into_iter()
        .map(|w| strip_verb_suffix(&singularize(&w.to_lowercase(), lexicon), lexicon))
        .collect()
}

/// Closeness of two stem lists in `[0, 1]`.
pub fn similarity(a: &[String], b: &[String]) -> f64 {
    let sa: BTreeSet<&str> = a.iter().map(String::as_str).collect();
    let sb: BTreeSet<&str> = b.iter().map(String::as_str).collect();
    if sa == sb {
        return 1.0;
    }
    let union = sa.union(&sb).count();
    let jaccard = if union == 0 {
        0.0
    } else {
        sa.intersection(&sb).count() as f64 / union as f64
    };
    let edit = strsim::normalized_levenshtein(&a.join(" "), &b.join(" "));
    jaccard.max(edit)
}

struct NormalizedConcept<'a> {
    concept: &'a TextualConcept,
    stems: Vec<String>,
}

pub struct Matcher<'x> {
    tau: f64,
    lexicon: &'static Lexicon,
    extraction: &'x Extraction,
    concepts: Vec<NormalizedConcept<'x>>,
}

impl<'x> Matcher<'x> {
    pub fn new(extraction: &'x Extraction, tau: f64, lexicon: &'static Lexicon) -> Self {
        let concepts = extraction
            .concepts
            .iter()
            .map(|c| NormalizedConcept {
                concept: c,
                stems: normalize_name(&c.name, lexicon),
            })
            .collect();
        Matcher {
            tau,
            lexicon,
            extraction,
            concepts,
        }
    }

    fn union<'c>(items: impl Iterator<Item = &'c NormalizedConcept<'c>>) -> BTreeSet<usize>
    where
        'x: 'c,
    {
        items.flat_map(|c| c.concept.sentences.iter().copied()).collect()
    }

    fn exact(&self, name: &str) -> BTreeSet<usize> {
        let stems = normalize_name(name, self.lexicon);
        Self::union(self.concepts.iter().filter(|c| c.stems == stems))
    }

    fn fuzzy(&self, name: &str) -> BTreeSet<usize> {
        let stems = normalize_name(name, self.lexicon);
        Self::union(
            self.concepts
                .iter()
                .filter(|c| similarity(&c.stems, &stems) >= self.tau),
        )
    }

    /// Sentences naming `name`, exactly or within `tau`, restricted to the
    /// sentences that also name `context` whenever `context` is mentioned
    /// anywhere at all.
    fn in_context(&self, name: &str, context: &str) -> BTreeSet<usize> {
        let mut out = self.exact(name);
        let fuzzy = self.fuzzy(name);
        let ctx = self.exact(context);
        if ctx.is_empty() {
            out.extend(fuzzy);
        } else {
            out.extend(fuzzy.intersection(&ctx));
        }
        out
    }

    fn co_occurring(&self, a: &str, b: &str) -> BTreeSet<usize> {
        let sa = self.exact(a);
        let sb = self.exact(b);
        sa.intersection(&sb).copied().collect()
    }

    fn related_by(&self, role: &str, a: &str, b: &str) -> BTreeSet<usize> {
        let role_stems = normalize_name(role, self.lexicon);
        let na = normalize_name(a, self.lexicon);
        let nb = normalize_name(b, self.lexicon);
        let mut out = BTreeSet::new();
        for r in &self.extraction.relations {
            let verb = normalize_name(&r.lemma, self.lexicon);
            if similarity(&verb, &role_stems) < self.tau {
                continue;
            }
            let src = normalize_name(&r.source, self.lexicon);
            let tgt = normalize_name(&r.target, self.lexicon);
            if (src == na && tgt == nb) || (src == nb && tgt == na) {
                out.extend(r.sentences.iter().copied());
            }
        }
        out
    }

    pub fn match_slice(&self, slice: &ModelSlice) -> MatchedSentenceSet {
        let model = &slice.fragment;
        let sentences = match &slice.focus.anchor {
            ElementAnchor::Attribute { class, attribute } => self.in_context(attribute, class),
            ElementAnchor::EnumLiteral {
                enumeration,
                literal,
            } => self.in_context(literal, enumeration),
            ElementAnchor::AssociationEnd { relationship, side } => {
                let focus = model.end(*relationship, *side).expect("focus end in slice");
                let other = model
                    .end(*relationship, side.opposite())
                    .expect("opposite end in slice");
                let mut out = self.co_occurring(&focus.class, &other.class);
                if let Some(role) = &focus.role {
                    out.extend(self.in_context(role, &other.class));
                    out.extend(self.related_by(role, &focus.class, &other.class));
                }
                out
            }
            ElementAnchor::Composition { relationship } | ElementAnchor::Inheritance { relationship } => {
                let rel: &Relationship = &model.relationships[*relationship];
                let (a, b) = rel.classes();
                self.co_occurring(a, b)
            }
        };
        MatchedSentenceSet {
            element: slice.focus.id.clone(),
            sentences,
        }
    }

    pub fn match_all(&self, slices: &[ModelSlice]) -> Vec<MatchedSentenceSet> {
        slices.par_iter().map(|s| self.match_slice(s)).collect()
    }
}

/// Matched sentences for every slice, in slice order.
pub fn match_slices(slices: &[ModelSlice], extraction: &Extraction, tau: f64) -> Vec<MatchedSentenceSet> {
    Matcher::new(extraction, tau, Lexicon::builtin()).match_all(slices)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{CAR_SERVICE_MODEL, CAR_SERVICE_SPEC};
    use crate::model::DomainModel;
    use crate::preprocess::Preprocessor;
    use crate::slicer::slice_all;

    fn stems(raw: &str) -> Vec<String> {
        normalize_name(raw, Lexicon::builtin())
    }

    fn v(xs: &[&str]) -> Vec<String> {
        xs.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn normalization() {
        assert_eq!(stems("PartType"), v(&["part", "type"]));
        assert_eq!(stems("provides"), v(&["provide"]));
        assert_eq!(stems("plate"), v(&["plate"]));
        assert_eq!(stems("providing"), v(&["provide"]));
        assert_eq!(stems("stopped"), v(&["stop"]));
        assert_eq!(stems("BRAKING_SYSTEM"), v(&["brak", "system"]));
        assert_eq!(stems("services"), v(&["service"]));
    }

    #[test]
    fn similarity_examples() {
        assert_eq!(similarity(&v(&["service"]), &v(&["service"])), 1.0);
        assert_eq!(similarity(&v(&["part", "type"]), &v(&["part"])), 0.5);
        let s = similarity(&v(&["engine"]), &v(&["garage"]));
        assert!(s < 0.5, "{s}");
        assert_eq!(
            similarity(&v(&["a", "b"]), &v(&["b", "a"])),
            similarity(&v(&["b", "a"]), &v(&["a", "b"]))
        );
    }

    fn fixture_matches(tau: f64) -> Vec<MatchedSentenceSet> {
        let m = DomainModel::parse(CAR_SERVICE_MODEL).unwrap();
        let x = Preprocessor::default().run(CAR_SERVICE_SPEC);
        match_slices(&slice_all(&m), &x, tau)
    }

    fn get(sets: &[MatchedSentenceSet], id: &str) -> Vec<usize> {
        sets.iter()
            .find(|s| s.element == id)
            .unwrap()
            .sentences
            .iter()
            .copied()
            .collect()
    }

    #[test]
    fn running_example() {
        let sets = fixture_matches(DEFAULT_TAU);
        assert_eq!(get(&sets, "attr:Car.plate"), [2]);
        assert_eq!(get(&sets, "end:Service--Garage#place"), [1, 6]);
        assert_eq!(get(&sets, "inh:Repair<:Service"), [1]);
        assert_eq!(get(&sets, "lit:PartType.ENGINE"), [4]);
    }

    #[test]
    fn unmatched_name_is_empty() {
        let x = Preprocessor::default().run(CAR_SERVICE_SPEC);
        let m = DomainModel::parse(
            r#"{"name":"X","classes":[{"name":"Invoice","attributes":[{"name":"iban","type":"String"}]}]}"#,
        )
        .unwrap();
        let sets = match_slices(&slice_all(&m), &x, DEFAULT_TAU);
        assert!(sets[0].sentences.is_empty());
    }

    #[test]
    fn lowering_tau_never_shrinks() {
        let mut prev = fixture_matches(1.0);
        for tau in [0.9, 0.75, 0.5, 0.25, 0.01] {
            let next = fixture_matches(tau);
            for (a, b) in prev.iter().zip(&next) {
                assert!(a.sentences.is_subset(&b.sentences), "{} at {tau}", a.element);
            }
            prev = next;
        }
    }
}
