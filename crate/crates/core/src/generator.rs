//! Rule-based English rendering of model slices.

use serde::Serialize;

use crate::inflect::{
    capitalize, decamel, pluralize_phrase, singularize_phrase, split_identifier, title_case,
    with_article,
};
use crate::lexicon::{Lexicon, RuleTagger, Tag, Tagger};
use crate::model::{ElementAnchor, Multiplicity, Relationship};
use crate::slicer::ModelSlice;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GeneratedSentence {
    pub element: String,
    pub text: String,
}

/// How a noun is realized for a given multiplicity.
fn noun_for(noun: &str, multiplicity: Option<Multiplicity>, default_plural: bool, lexicon: &Lexicon) -> String {
    let upper = match multiplicity {
        Some(m) => m.upper,
        None if default_plural => None,
        None => Some(1),
    };
    match upper {
        Some(1) => with_article(noun),
        Some(0) => noun.to_string(),
        _ => pluralize_phrase(noun, lexicon),
    }
}

fn is_plural(multiplicity: Option<Multiplicity>) -> bool {
    multiplicity.is_some_and(|m| m.upper != Some(1) && m.upper != Some(0))
}

pub struct Generator<T: Tagger = RuleTagger> {
    tagger: T,
    lexicon: &'static Lexicon,
}

impl Default for Generator<RuleTagger> {
    fn default() -> Self {
        Generator::new(RuleTagger::default(), Lexicon::builtin())
    }
}

impl<T: Tagger> Generator<T> {
    pub fn new(tagger: T, lexicon: &'static Lexicon) -> Self {
        Generator { tagger, lexicon }
    }

    /// Whether a role name reads as a predicate (`provides`, `isRentedBy`).
    pub fn is_verb_role(&self, role: &str, class: &str) -> bool {
        let words = split_identifier(role);
        let refs: Vec<&str> = words.iter().map(String::as_str).collect();
        if refs.is_empty() {
            return false;
        }
        let names_class = singularize_phrase(&decamel(role), self.lexicon) == decamel(class);
        !names_class && self.tagger.tag_identifier(&refs)[0] == Tag::Verb
    }

    pub fn generate(&self, slice: &ModelSlice) -> GeneratedSentence {
        let model = &slice.fragment;
        let text = match &slice.focus.anchor {
            ElementAnchor::Attribute { class, attribute } => format!(
                "{} has {}.",
                with_article(&decamel(class)),
                with_article(&decamel(attribute))
            ),
            ElementAnchor::AssociationEnd { relationship, side } => {
                let focus = model.end(*relationship, *side).expect("focus end in slice");
                let other = model
                    .end(*relationship, side.opposite())
                    .expect("opposite end in slice");
                let subject = with_article(&decamel(&other.class));
                let target = decamel(&focus.class);
                let mult = focus.multiplicity;
                match &focus.role {
                    Some(role) if self.is_verb_role(role, &focus.class) => format!(
                        "{subject} {} {}.",
                        decamel(role),
                        noun_for(&target, mult, false, self.lexicon)
                    ),
                    role => {
                        let verb = match mult {
                            Some(m) if m.lower == 0 && m.is_many() => "can have",
                            _ => "has",
                        };
                        let noun = role
                            .as_deref()
                            .map(|r| singularize_phrase(&decamel(r), self.lexicon))
                            .unwrap_or_else(|| target.clone());
                        let mut text = format!("{subject} {verb} {}", noun_for(&noun, mult, false, self.lexicon));
                        if noun != target {
                            if is_plural(mult) {
                                text.push_str(&format!(" which are {}", pluralize_phrase(&target, self.lexicon)));
                            } else {
                                text.push_str(&format!(" which is {}", with_article(&target)));
                            }
                        }
                        text.push('.');
                        text
                    }
                }
            }
            ElementAnchor::Composition { relationship } => {
                let Relationship::Composition {
                    whole,
                    part,
                    part_multiplicity,
                } = &model.relationships[*relationship]
                else {
                    unreachable!("composition anchor on another relationship kind")
                };
                format!(
                    "{} is made up of {}.",
                    with_article(&decamel(whole)),
                    noun_for(&decamel(part), *part_multiplicity, true, self.lexicon)
                )
            }
            ElementAnchor::Inheritance { relationship } => {
                let (sub, sup) = model.relationships[*relationship].classes();
                format!("{} is a type of {}.", decamel(sub), decamel(sup))
            }
            ElementAnchor::EnumLiteral {
                enumeration,
                literal,
            } => format!("{} is {}.", title_case(literal), with_article(&decamel(enumeration))),
        };
        GeneratedSentence {
            element: slice.focus.id.clone(),
            text: capitalize(&text),
        }
    }
}
