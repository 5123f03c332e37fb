//! Minimal model slices around a single element.

use std::collections::BTreeSet;

use serde::Serialize;
use thiserror::Error;

use crate::model::{
    attribute_id, end_id, literal_id, DomainModel, ElementAnchor, EndSide, Enumeration,
    ModelElement, Relationship, UmlClass,
};

#[derive(Debug, Error, PartialEq, Eq)]
#[error("no element `{0}` in the model")]
pub struct SliceError(pub String);

/// One item of a slice. Relationships are named by their relationship id.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SliceMember {
    Class { name: String },
    Attribute { class: String, name: String },
    Relationship { id: String },
    End { relationship: String, side: EndSide, id: String },
    Enumeration { name: String },
    Literal { enumeration: String, name: String },
}

impl SliceMember {
    pub fn id(&self) -> String {
        match self {
            SliceMember::Class { name } => format!("class:{name}"),
            SliceMember::Attribute { class, name } => attribute_id(class, name),
            SliceMember::Relationship { id } => id.clone(),
            SliceMember::End { id, .. } => id.clone(),
            SliceMember::Enumeration { name } => format!("enum:{name}"),
            SliceMember::Literal { enumeration, name } => literal_id(enumeration, name),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelSlice {
    /// Focus element, anchored in `fragment`.
    pub focus: ModelElement,
    pub members: BTreeSet<SliceMember>,
    /// The slice as a stand-alone model.
    pub fragment: DomainModel,
}

impl ModelSlice {
    pub fn member_ids(&self) -> Vec<String> {
        self.members.iter().map(SliceMember::id).collect()
    }

    pub fn focus_member(&self) -> SliceMember {
        focus_member(&self.fragment, &self.focus)
    }
}

fn bare_class(name: &str) -> UmlClass {
    UmlClass {
        name: name.to_string(),
        attributes: Vec::new(),
    }
}

fn class_pair(a: &str, b: &str) -> Vec<UmlClass> {
    let mut v = vec![bare_class(a)];
    if a != b {
        v.push(bare_class(b));
    }
    v
}

fn focus_member(model: &DomainModel, element: &ModelElement) -> SliceMember {
    match &element.anchor {
        ElementAnchor::Attribute { class, attribute } => SliceMember::Attribute {
            class: class.clone(),
            name: attribute.clone(),
        },
        ElementAnchor::AssociationEnd { relationship, side } => SliceMember::End {
            relationship: model.relationships[*relationship].id(),
            side: *side,
            id: element.id.clone(),
        },
        ElementAnchor::Composition { relationship } | ElementAnchor::Inheritance { relationship } => {
            SliceMember::Relationship {
                id: model.relationships[*relationship].id(),
            }
        }
        ElementAnchor::EnumLiteral {
            enumeration,
            literal,
        } => SliceMember::Literal {
            enumeration: enumeration.clone(),
            name: literal.clone(),
        },
    }
}

/// Extract the minimal slice for `element`.
pub fn slice(model: &DomainModel, element: &ModelElement) -> Result<ModelSlice, SliceError> {
    if model.find_element(&element.id).as_ref() != Some(element) {
        return Err(SliceError(element.id.clone()));
    }
    build(model, element)
}

fn build(model: &DomainModel, element: &ModelElement) -> Result<ModelSlice, SliceError> {
    let missing = || SliceError(element.id.clone());
    let mut members = BTreeSet::new();
    let mut fragment = DomainModel {
        name: model.name.clone(),
        ..DomainModel::default()
    };
    let mut focus = element.clone();
    match &element.anchor {
        ElementAnchor::Attribute { class, attribute } => {
            let owner = model.class(class).ok_or_else(missing)?;
            let attr = owner
                .attributes
                .iter()
                .find(|a| &a.name == attribute)
                .ok_or_else(missing)?;
            members.insert(SliceMember::Class { name: class.clone() });
            members.insert(SliceMember::Attribute {
                class: class.clone(),
                name: attribute.clone(),
            });
            fragment.classes.push(UmlClass {
                name: class.clone(),
                attributes: vec![attr.clone()],
            });
        }
        ElementAnchor::AssociationEnd { relationship, side } => {
            let rel = model.relationships.get(*relationship).ok_or_else(missing)?;
            let Relationship::Association { end_a, end_b } = rel else {
                return Err(missing());
            };
            members.insert(SliceMember::Relationship { id: rel.id() });
            for (s, end) in [(EndSide::A, end_a), (EndSide::B, end_b)] {
                members.insert(SliceMember::End {
                    relationship: rel.id(),
                    side: s,
                    id: end_id(&end_a.class, &end_b.class, end, s),
                });
                members.insert(SliceMember::Class {
                    name: end.class.clone(),
                });
            }
            fragment.classes = class_pair(&end_a.class, &end_b.class);
            fragment.relationships.push(rel.clone());
            focus.anchor = ElementAnchor::AssociationEnd {
                relationship: 0,
                side: *side,
            };
        }
        ElementAnchor::Composition { relationship } | ElementAnchor::Inheritance { relationship } => {
            let rel = model.relationships.get(*relationship).ok_or_else(missing)?;
            let (a, b) = rel.classes();
            members.insert(SliceMember::Relationship { id: rel.id() });
            members.insert(SliceMember::Class { name: a.to_string() });
            members.insert(SliceMember::Class { name: b.to_string() });
            fragment.classes = class_pair(a, b);
            fragment.relationships.push(rel.clone());
            focus.anchor = match element.anchor {
                ElementAnchor::Composition { .. } => ElementAnchor::Composition { relationship: 0 },
                _ => ElementAnchor::Inheritance { relationship: 0 },
            };
        }
        ElementAnchor::EnumLiteral {
            enumeration,
            literal,
        } => {
            members.insert(SliceMember::Enumeration {
                name: enumeration.clone(),
            });
            members.insert(SliceMember::Literal {
                enumeration: enumeration.clone(),
                name: literal.clone(),
            });
            fragment.enumerations.push(Enumeration {
                name: enumeration.clone(),
                literals: vec![literal.clone()],
            });
        }
    }
    Ok(ModelSlice {
        focus,
        members,
        fragment,
    })
}

/// Slices for every classifiable element, in element order.
pub fn slice_all(model: &DomainModel) -> Vec<ModelSlice> {
    model
        .elements()
        .iter()
        .map(|e| build(model, e).expect("enumerated element is sliceable"))
        .collect()
}

/// Whether `members` form a self-contained fragment of `model` that still
/// contains `focus`: every attribute has its class, every end its
/// relationship, every relationship its classes (and associations both
/// ends), every literal its enumeration.
pub fn validate_fragment(model: &DomainModel, members: &BTreeSet<SliceMember>, focus: &SliceMember) -> bool {
    if !members.contains(focus) {
        return false;
    }
    let has_class = |name: &str| members.contains(&SliceMember::Class { name: name.to_string() });
    let find_rel = |id: &str| model.relationships.iter().find(|r| r.id() == id);
    members.iter().all(|m| match m {
        SliceMember::Class { name } => model.has_class(name),
        SliceMember::Attribute { class, .. } => has_class(class),
        SliceMember::End { relationship, .. } => {
            members.contains(&SliceMember::Relationship { id: relationship.clone() })
        }
        SliceMember::Relationship { id } => {
            let Some(rel) = find_rel(id) else { return false };
            let (a, b) = rel.classes();
            let ends_ok = match rel {
                Relationship::Association { end_a, end_b } => [(EndSide::A, end_a), (EndSide::B, end_b)]
                    .iter()
                    .all(|(s, end)| {
                        members.contains(&SliceMember::End {
                            relationship: id.clone(),
                            side: *s,
                            id: end_id(&end_a.class, &end_b.class, end, *s),
                        })
                    }),
                _ => true,
            };
            has_class(a) && has_class(b) && ends_ok
        }
        SliceMember::Enumeration { name } => model.enumeration(name).is_some(),
        SliceMember::Literal { enumeration, .. } => {
            members.contains(&SliceMember::Enumeration { name: enumeration.clone() })
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::CAR_SERVICE_MODEL;

    fn model() -> DomainModel {
        DomainModel::parse(CAR_SERVICE_MODEL).unwrap()
    }

    fn ids(model: &DomainModel, id: &str) -> Vec<String> {
        let e = model.find_element(id).unwrap();
        slice(model, &e).unwrap().member_ids()
    }

    #[test]
    fn case_table() {
        let m = model();
        assert_eq!(ids(&m, "attr:Service.date"), ["class:Service", "attr:Service.date"]);
        let assoc = ids(&m, "end:Service--Garage#place");
        assert_eq!(
            assoc,
            [
                "class:Garage",
                "class:Service",
                "assoc:Service--Garage",
                "end:Service--Garage#provides",
                "end:Service--Garage#place",
            ]
        );
        assert_eq!(ids(&m, "end:Service--Garage#provides"), assoc);
        assert_eq!(ids(&m, "lit:PartType.ENGINE"), ["enum:PartType", "lit:PartType.ENGINE"]);
        assert_eq!(ids(&m, "comp:Car◇Part"), ["class:Car", "class:Part", "comp:Car◇Part"]);
        assert_eq!(
            ids(&m, "inh:Repair<:Service"),
            ["class:Repair", "class:Service", "inh:Repair<:Service"]
        );
    }

    #[test]
    fn fragments_are_valid_models() {
        let m = model();
        for s in slice_all(&m) {
            s.fragment.validate().unwrap();
            assert!(s.fragment.find_element(&s.focus.id).is_some(), "{}", s.focus.id);
        }
    }

    #[test]
    fn slices_are_minimal() {
        let m = model();
        let slices = slice_all(&m);
        assert_eq!(slices.len(), m.elements().len());
        for s in slices {
            let focus = s.focus_member();
            assert!(validate_fragment(&m, &s.members, &focus));
            for member in &s.members {
                let mut reduced = s.members.clone();
                reduced.remove(member);
                assert!(
                    !validate_fragment(&m, &reduced, &focus),
                    "{} survives without {}",
                    s.focus.id,
                    member.id()
                );
            }
        }
    }

    #[test]
    fn unknown_element_is_an_error() {
        let m = model();
        let mut e = m.elements()[0].clone();
        e.id = "attr:Car.colour".into();
        assert_eq!(slice(&m, &e), Err(SliceError("attr:Car.colour".into())));
    }
}
