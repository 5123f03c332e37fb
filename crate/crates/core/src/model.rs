//! Domain-model types, the canonical JSON document format, and validation.
//!
//! A [`DomainModel`] is immutable once parsed. Every cross reference is
//! checked by [`DomainModel::validate`], so downstream stages can index
//! into it without re-checking.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum ModelError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unknown class `{class}` referenced by {context}")]
    UnknownClass { class: String, context: String },
    #[error("invalid multiplicity `{value}`: {reason}")]
    Multiplicity { value: String, reason: String },
    #[error("empty name in {0}")]
    EmptyName(String),
    #[error("duplicate {kind} `{name}`")]
    Duplicate { kind: &'static str, name: String },
    #[error("class `{0}` inherits from itself")]
    SelfInheritance(String),
    #[error("inheritance cycle through {}", .0.join(" -> "))]
    InheritanceCycle(Vec<String>),
}

/// Cardinality constraint on an association end. `upper == None` is `*`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Multiplicity {
    pub lower: u32,
    pub upper: Option<u32>,
}

impl Multiplicity {
    pub const ONE: Multiplicity = Multiplicity {
        lower: 1,
        upper: Some(1),
    };
    pub const OPTIONAL: Multiplicity = Multiplicity {
        lower: 0,
        upper: Some(1),
    };
    pub const MANY: Multiplicity = Multiplicity {
        lower: 0,
        upper: None,
    };
    pub const ONE_OR_MORE: Multiplicity = Multiplicity {
        lower: 1,
        upper: None,
    };

    pub fn new(lower: u32, upper: Option<u32>) -> Result<Self, ModelError> {
        if let Some(u) = upper {
            if lower > u {
                return Err(ModelError::Multiplicity {
                    value: format!("{lower}..{u}"),
                    reason: "lower bound exceeds upper bound".into(),
                });
            }
        }
        Ok(Multiplicity { lower, upper })
    }

    /// True when more than one instance may be linked.
    pub fn is_many(&self) -> bool {
        self.upper.is_none_or(|u| u > 1)
    }
}

impl fmt::Display for Multiplicity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.lower, self.upper) {
            (0, None) => write!(f, "*"),
            (l, None) => write!(f, "{l}..*"),
            (l, Some(u)) if l == u => write!(f, "{l}"),
            (l, Some(u)) => write!(f, "{l}..{u}"),
        }
    }
}

impl FromStr for Multiplicity {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = |reason: &str| ModelError::Multiplicity {
            value: s.to_string(),
            reason: reason.to_string(),
        };
        let bound = |part: &str| -> Result<Option<u32>, ModelError> {
            let part = part.trim();
            if part == "*" {
                Ok(None)
            } else {
                part.parse::<u32>()
                    .map(Some)
                    .map_err(|_| err("bound is neither a non-negative integer nor `*`"))
            }
        };
        let s_trim = s.trim();
        if s_trim.is_empty() {
            return Err(err("empty"));
        }
        match s_trim.split_once("..") {
            None => match bound(s_trim)? {
                None => Ok(Multiplicity::MANY),
                Some(n) => Ok(Multiplicity {
                    lower: n,
                    upper: Some(n),
                }),
            },
            Some((lo, hi)) => {
                let lower = bound(lo)?.ok_or_else(|| err("lower bound cannot be `*`"))?;
                let upper = bound(hi)?;
                Multiplicity::new(lower, upper).map_err(|_| err("lower bound exceeds upper bound"))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Attribute {
    pub name: String,
    /// Parsed but never interpreted by the pipeline.
    pub declared_type: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UmlClass {
    pub name: String,
    pub attributes: Vec<Attribute>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Enumeration {
    pub name: String,
    pub literals: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AssociationEnd {
    pub class: String,
    pub role: Option<String>,
    pub multiplicity: Option<Multiplicity>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Relationship {
    Association {
        end_a: AssociationEnd,
        end_b: AssociationEnd,
    },
    Composition {
        whole: String,
        part: String,
        part_multiplicity: Option<Multiplicity>,
    },
    Inheritance {
        subclass: String,
        superclass: String,
    },
}

impl Relationship {
    pub fn kind_name(&self) -> &'static str {
        match self {
            Relationship::Association { .. } => "association",
            Relationship::Composition { .. } => "composition",
            Relationship::Inheritance { .. } => "inheritance",
        }
    }

    /// The two classes the relationship connects, in document order.
    pub fn classes(&self) -> (&str, &str) {
        match self {
            Relationship::Association { end_a, end_b } => (&end_a.class, &end_b.class),
            Relationship::Composition { whole, part, .. } => (whole, part),
            Relationship::Inheritance {
                subclass,
                superclass,
            } => (subclass, superclass),
        }
    }

    /// Stable identifier of the relationship itself (used in slice listings).
    pub fn id(&self) -> String {
        match self {
            Relationship::Association { end_a, end_b } => {
                format!("assoc:{}--{}", end_a.class, end_b.class)
            }
            Relationship::Composition { whole, part, .. } => composition_id(whole, part),
            Relationship::Inheritance {
                subclass,
                superclass,
            } => inheritance_id(subclass, superclass),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DomainModel {
    pub name: String,
    pub classes: Vec<UmlClass>,
    pub enumerations: Vec<Enumeration>,
    pub relationships: Vec<Relationship>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ElementKind {
    Attribute,
    AssociationEnd,
    Composition,
    Inheritance,
    EnumLiteral,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EndSide {
    A,
    B,
}

impl EndSide {
    pub fn opposite(self) -> EndSide {
        match self {
            EndSide::A => EndSide::B,
            EndSide::B => EndSide::A,
        }
    }

    fn index(self) -> usize {
        match self {
            EndSide::A => 0,
            EndSide::B => 1,
        }
    }
}

/// Where an element lives in its model. Relationship anchors index into
/// [`DomainModel::relationships`].
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ElementAnchor {
    Attribute { class: String, attribute: String },
    AssociationEnd { relationship: usize, side: EndSide },
    Composition { relationship: usize },
    Inheritance { relationship: usize },
    EnumLiteral { enumeration: String, literal: String },
}

/// A classifiable unit of a model.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ModelElement {
    pub id: String,
    pub anchor: ElementAnchor,
}

impl ModelElement {
    pub fn kind(&self) -> ElementKind {
        match self.anchor {
            ElementAnchor::Attribute { .. } => ElementKind::Attribute,
            ElementAnchor::AssociationEnd { .. } => ElementKind::AssociationEnd,
            ElementAnchor::Composition { .. } => ElementKind::Composition,
            ElementAnchor::Inheritance { .. } => ElementKind::Inheritance,
            ElementAnchor::EnumLiteral { .. } => ElementKind::EnumLiteral,
        }
    }
}

pub fn attribute_id(class: &str, attribute: &str) -> String {
    format!("attr:{class}.{attribute}")
}

pub fn end_id(class_a: &str, class_b: &str, end: &AssociationEnd, side: EndSide) -> String {
    let tag = match &end.role {
        Some(role) => role.clone(),
        None => side.index().to_string(),
    };
    format!("end:{class_a}--{class_b}#{tag}")
}

pub fn composition_id(whole: &str, part: &str) -> String {
    format!("comp:{whole}◇{part}")
}

pub fn inheritance_id(subclass: &str, superclass: &str) -> String {
    format!("inh:{subclass}<:{superclass}")
}

pub fn literal_id(enumeration: &str, literal: &str) -> String {
    format!("lit:{enumeration}.{literal}")
}

impl DomainModel {
    /// Parse and validate a canonical model document.
    pub fn parse(document: &str) -> Result<DomainModel, ModelError> {
        let doc: doc::Model = serde_json::from_str(document).map_err(|e| ModelError::Syntax {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        let model = doc.into_model()?;
        model.validate()?;
        Ok(model)
    }

    /// Render the canonical document. Aggregations are written back as
    /// plain associations.
    pub fn to_document(&self) -> String {
        let doc = doc::Model::from_model(self);
        let mut out = serde_json::to_string_pretty(&doc).expect("model document serializes");
        out.push('\n');
        out
    }

    pub fn class(&self, name: &str) -> Option<&UmlClass> {
        self.classes.iter().find(|c| c.name == name)
    }

    pub fn enumeration(&self, name: &str) -> Option<&Enumeration> {
        self.enumerations.iter().find(|e| e.name == name)
    }

    pub fn has_class(&self, name: &str) -> bool {
        self.class(name).is_some()
    }

    pub fn end(&self, relationship: usize, side: EndSide) -> Option<&AssociationEnd> {
        match self.relationships.get(relationship)? {
            Relationship::Association { end_a, end_b } => Some(match side {
                EndSide::A => end_a,
                EndSide::B => end_b,
            }),
            _ => None,
        }
    }

    /// Check every structural invariant of the model.
    pub fn validate(&self) -> Result<(), ModelError> {
        let mut class_names = HashSet::new();
        for class in &self.classes {
            if class.name.trim().is_empty() {
                return Err(ModelError::EmptyName("class".into()));
            }
            if !class_names.insert(class.name.as_str()) {
                return Err(ModelError::Duplicate {
                    kind: "class",
                    name: class.name.clone(),
                });
            }
            let mut attrs = HashSet::new();
            for attr in &class.attributes {
                if attr.name.trim().is_empty() {
                    return Err(ModelError::EmptyName(format!("attribute of `{}`", class.name)));
                }
                if !attrs.insert(attr.name.as_str()) {
                    return Err(ModelError::Duplicate {
                        kind: "attribute",
                        name: format!("{}.{}", class.name, attr.name),
                    });
                }
            }
        }
        let mut enum_names = HashSet::new();
        for en in &self.enumerations {
            if en.name.trim().is_empty() {
                return Err(ModelError::EmptyName("enumeration".into()));
            }
            if class_names.contains(en.name.as_str()) || !enum_names.insert(en.name.as_str()) {
                return Err(ModelError::Duplicate {
                    kind: "enumeration",
                    name: en.name.clone(),
                });
            }
            let mut lits = HashSet::new();
            for lit in &en.literals {
                if lit.trim().is_empty() {
                    return Err(ModelError::EmptyName(format!("literal of `{}`", en.name)));
                }
                if !lits.insert(lit.as_str()) {
                    return Err(ModelError::Duplicate {
                        kind: "literal",
                        name: format!("{}.{}", en.name, lit),
                    });
                }
            }
        }

        let check = |class: &str, context: &str| -> Result<(), ModelError> {
            if class_names.contains(class) {
                Ok(())
            } else {
                Err(ModelError::UnknownClass {
                    class: class.to_string(),
                    context: context.to_string(),
                })
            }
        };
        let mut inheritances = BTreeSet::new();
        for rel in &self.relationships {
            let context = rel.id();
            match rel {
                Relationship::Association { end_a, end_b } => {
                    check(&end_a.class, &context)?;
                    check(&end_b.class, &context)?;
                    for end in [end_a, end_b] {
                        if matches!(&end.role, Some(r) if r.trim().is_empty()) {
                            return Err(ModelError::EmptyName(format!("role in {context}")));
                        }
                    }
                }
                Relationship::Composition { whole, part, .. } => {
                    check(whole, &context)?;
                    check(part, &context)?;
                }
                Relationship::Inheritance {
                    subclass,
                    superclass,
                } => {
                    check(subclass, &context)?;
                    check(superclass, &context)?;
                    if subclass == superclass {
                        return Err(ModelError::SelfInheritance(subclass.clone()));
                    }
                    if !inheritances.insert((subclass.as_str(), superclass.as_str())) {
                        return Err(ModelError::Duplicate {
                            kind: "inheritance",
                            name: context,
                        });
                    }
                }
            }
        }
        if let Some(cycle) = self.inheritance_cycle() {
            return Err(ModelError::InheritanceCycle(cycle));
        }

        let mut ids = HashSet::new();
        for element in self.elements() {
            if !ids.insert(element.id.clone()) {
                return Err(ModelError::Duplicate {
                    kind: "element id",
                    name: element.id,
                });
            }
        }
        Ok(())
    }

    /// Returns one cycle in the inheritance graph, if any.
    pub fn inheritance_cycle(&self) -> Option<Vec<String>> {
        let mut supers: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
        for rel in &self.relationships {
            if let Relationship::Inheritance {
                subclass,
                superclass,
            } = rel
            {
                supers.entry(subclass).or_default().push(superclass);
            }
        }
        // 0 = unvisited, 1 = on stack, 2 = done
        let mut state: BTreeMap<&str, u8> = BTreeMap::new();
        fn visit<'a>(
            node: &'a str,
            supers: &BTreeMap<&'a str, Vec<&'a str>>,
            state: &mut BTreeMap<&'a str, u8>,
            path: &mut Vec<&'a str>,
        ) -> Option<Vec<String>> {
            match state.get(node) {
                Some(2) => return None,
                Some(1) => {
                    let start = path.iter().position(|n| *n == node).unwrap_or(0);
                    let mut cycle: Vec<String> = path[start..].iter().map(|s| s.to_string()).collect();
                    cycle.push(node.to_string());
                    return Some(cycle);
                }
                _ => {}
            }
            state.insert(node, 1);
            path.push(node);
            for next in supers.get(node).into_iter().flatten() {
                if let Some(c) = visit(next, supers, state, path) {
                    return Some(c);
                }
            }
            path.pop();
            state.insert(node, 2);
            None
        }
        let nodes: Vec<&str> = supers.keys().copied().collect();
        for node in nodes {
            let mut path = Vec::new();
            if let Some(c) = visit(node, &supers, &mut state, &mut path) {
                return Some(c);
            }
        }
        None
    }

    /// All classifiable elements in document order: attributes, then
    /// relationship elements, then enumeration literals. Association ends
    /// without a multiplicity are not classifiable.
    pub fn elements(&self) -> Vec<ModelElement> {
        let mut out = Vec::new();
        for class in &self.classes {
            for attr in &class.attributes {
                out.push(ModelElement {
                    id: attribute_id(&class.name, &attr.name),
                    anchor: ElementAnchor::Attribute {
                        class: class.name.clone(),
                        attribute: attr.name.clone(),
                    },
                });
            }
        }
        for (idx, rel) in self.relationships.iter().enumerate() {
            match rel {
                Relationship::Association { end_a, end_b } => {
                    for (side, end) in [(EndSide::A, end_a), (EndSide::B, end_b)] {
                        if end.multiplicity.is_some() {
                            out.push(ModelElement {
                                id: end_id(&end_a.class, &end_b.class, end, side),
                                anchor: ElementAnchor::AssociationEnd {
                                    relationship: idx,
                                    side,
                                },
                            });
                        }
                    }
                }
                Relationship::Composition { whole, part, .. } => out.push(ModelElement {
                    id: composition_id(whole, part),
                    anchor: ElementAnchor::Composition { relationship: idx },
                }),
                Relationship::Inheritance {
                    subclass,
                    superclass,
                } => out.push(ModelElement {
                    id: inheritance_id(subclass, superclass),
                    anchor: ElementAnchor::Inheritance { relationship: idx },
                }),
            }
        }
        for en in &self.enumerations {
            for lit in &en.literals {
                out.push(ModelElement {
                    id: literal_id(&en.name, lit),
                    anchor: ElementAnchor::EnumLiteral {
                        enumeration: en.name.clone(),
                        literal: lit.clone(),
                    },
                });
            }
        }
        out
    }

    pub fn find_element(&self, id: &str) -> Option<ModelElement> {
        self.elements().into_iter().find(|e| e.id == id)
    }
}

/// Serde mirror of the canonical document.
mod doc {
    use super::*;

    #[derive(Serialize, Deserialize)]
    #[serde(deny_unknown_fields)]
    pub struct Model {
        pub name: String,
        #[serde(default)]
        pub classes: Vec<Class>,
        #[serde(default)]
        pub enumerations: Vec<Enum>,
        #[serde(default)]
        pub relationships: Vec<Rel>,
    }

    #[derive(Serialize, Deserialize)]
    #[serde(deny_unknown_fields)]
    pub struct Class {
        pub name: String,
        #[serde(default)]
        pub attributes: Vec<Attr>,
    }

    #[derive(Serialize, Deserialize)]
    #[serde(deny_unknown_fields)]
    pub struct Attr {
        pub name: String,
        #[serde(rename = "type", default)]
        pub ty: String,
    }

    #[derive(Serialize, Deserialize)]
    #[serde(deny_unknown_fields)]
    pub struct Enum {
        pub name: String,
        #[serde(default)]
        pub literals: Vec<String>,
    }

    #[derive(Serialize, Deserialize)]
    #[serde(deny_unknown_fields)]
    pub struct End {
        pub class: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        pub role: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        pub multiplicity: Option<String>,
    }

    #[derive(Serialize, Deserialize)]
    #[serde(tag = "kind", rename_all = "lowercase")]
    pub enum Rel {
        #[serde(alias = "aggregation", rename_all = "camelCase")]
        Association { end_a: End, end_b: End },
        #[serde(rename_all = "camelCase")]
        Composition {
            whole: String,
            part: String,
            #[serde(default, skip_serializing_if = "Option::is_none")]
            part_multiplicity: Option<String>,
        },
        Inheritance { subclass: String, superclass: String },
    }

    fn mult(value: Option<String>) -> Result<Option<Multiplicity>, ModelError> {
        value.map(|v| v.parse()).transpose()
    }

    fn end(e: End) -> Result<AssociationEnd, ModelError> {
        Ok(AssociationEnd {
            class: e.class,
            role: e.role,
            multiplicity: mult(e.multiplicity)?,
        })
    }

    fn end_doc(e: &AssociationEnd) -> End {
        End {
            class: e.class.clone(),
            role: e.role.clone(),
            multiplicity: e.multiplicity.map(|m| m.to_string()),
        }
    }

    impl Model {
        pub fn into_model(self) -> Result<DomainModel, ModelError> {
            let relationships = self
                .relationships
                .into_iter()
                .map(|r| {
                    Ok(match r {
                        Rel::Association { end_a, end_b } => Relationship::Association {
                            end_a: end(end_a)?,
                            end_b: end(end_b)?,
                        },
                        Rel::Composition {
                            whole,
                            part,
                            part_multiplicity,
                        } => Relationship::Composition {
                            whole,
                            part,
                            part_multiplicity: mult(part_multiplicity)?,
                        },
                        Rel::Inheritance {
                            subclass,
                            superclass,
                        } => Relationship::Inheritance {
                            subclass,
                            superclass,
                        },
                    })
                })
                .collect::<Result<Vec<_>, ModelError>>()?;
            Ok(DomainModel {
                name: self.name,
                classes: self
                    .classes
                    .into_iter()
                    .map(|c| UmlClass {
                        name: c.name,
                        attributes: c
                            .attributes
                            .into_iter()
                            .map(|a| Attribute {
                                name: a.name,
                                declared_type: a.ty,
                            })
                            .collect(),
                    })
                    .collect(),
                enumerations: self
                    .enumerations
                    .into_iter()
                    .map(|e| Enumeration {
                        name: e.name,
                        literals: e.literals,
                    })
                    .collect(),
                relationships,
            })
        }

        pub fn from_model(m: &DomainModel) -> Model {
            Model {
                name: m.name.clone(),
                classes: m
                    .classes
                    .iter()
                    .map(|c| Class {
                        name: c.name.clone(),
                        attributes: c
                            .attributes
                            .iter()
                            .map(|a| Attr {
                                name: a.name.clone(),
                                ty: a.declared_type.clone(),
                            })
                            .collect(),
                    })
                    .collect(),
                enumerations: m
                    .enumerations
                    .iter()
                    .map(|e| Enum {
                        name: e.name.clone(),
                        literals: e.literals.clone(),
                    })
                    .collect(),
                relationships: m
                    .relationships
                    .iter()
                    .map(|r| match r {
                        Relationship::Association { end_a, end_b } => Rel::Association {
                            end_a: end_doc(end_a),
                            end_b: end_doc(end_b),
                        },
                        Relationship::Composition {
                            whole,
                            part,
                            part_multiplicity,
                        } => Rel::Composition {
                            whole: whole.clone(),
                            part: part.clone(),
                            part_multiplicity: part_multiplicity.map(|m| m.to_string()),
                        },
                        Relationship::Inheritance {
                            subclass,
                            superclass,
                        } => Rel::Inheritance {
                            subclass: subclass.clone(),
                            superclass: superclass.clone(),
                        },
                    })
                    .collect(),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::CAR_SERVICE_MODEL;

    #[test]
    fn multiplicity_symbols() {
        for (text, lower, upper) in [
            ("1", 1, Some(1)),
            ("*", 0, None),
            ("0..1", 0, Some(1)),
            ("1..*", 1, None),
            ("2..5", 2, Some(5)),
        ] {
            let m: Multiplicity = text.parse().unwrap();
            assert_eq!((m.lower, m.upper), (lower, upper), "{text}");
            assert_eq!(m.to_string(), text);
        }
        assert_eq!("0..*".parse::<Multiplicity>().unwrap(), Multiplicity::MANY);
        assert_eq!("1..1".parse::<Multiplicity>().unwrap(), Multiplicity::ONE);
    }

    #[test]
    fn multiplicity_errors() {
        for bad in ["", "x", "3..1", "*..2", "-1", "1..two"] {
            assert!(
                matches!(bad.parse::<Multiplicity>(), Err(ModelError::Multiplicity { .. })),
                "{bad}"
            );
        }
    }

    #[test]
    fn minimal_document() {
        let m = DomainModel::parse(r#"{"name":"M","classes":[{"name":"Car"}]}"#).unwrap();
        assert_eq!(m.classes.len(), 1);
        assert!(m.relationships.is_empty());
        assert!(m.elements().is_empty());
    }

    #[test]
    fn empty_model_is_valid() {
        let m = DomainModel::parse(r#"{"name":"Empty"}"#).unwrap();
        assert!(m.elements().is_empty());
    }

    #[test]
    fn car_service_fixture_inventory() {
        let m = DomainModel::parse(CAR_SERVICE_MODEL).unwrap();
        let names: BTreeSet<&str> = m.classes.iter().map(|c| c.name.as_str()).collect();
        assert_eq!(
            names,
            ["Car", "Part", "Garage", "Service", "Repair", "Maintenance"].into_iter().collect()
        );
        assert_eq!(m.enumerations.len(), 1);
        assert_eq!(m.enumerations[0].name, "PartType");
        assert_eq!(m.enumerations[0].literals.len(), 4);
        let kinds: Vec<&str> = m.relationships.iter().map(|r| r.kind_name()).collect();
        assert_eq!(kinds.iter().filter(|k| **k == "association").count(), 1);
        assert_eq!(kinds.iter().filter(|k| **k == "composition").count(), 1);
        assert_eq!(kinds.iter().filter(|k| **k == "inheritance").count(), 2);
    }

    #[test]
    fn car_service_fixture_elements() {
        let m = DomainModel::parse(CAR_SERVICE_MODEL).unwrap();
        let elements = m.elements();
        let count = |k: ElementKind| elements.iter().filter(|e| e.kind() == k).count();
        assert_eq!(count(ElementKind::Attribute), 5);
        assert_eq!(count(ElementKind::AssociationEnd), 2);
        assert_eq!(count(ElementKind::Composition), 1);
        assert_eq!(count(ElementKind::Inheritance), 2);
        assert_eq!(count(ElementKind::EnumLiteral), 4);
        assert_eq!(elements.len(), 14);
        let ids: Vec<&str> = elements.iter().map(|e| e.id.as_str()).collect();
        assert!(ids.contains(&"attr:Car.plate"));
        assert!(ids.contains(&"end:Service--Garage#provides"));
        assert!(ids.contains(&"end:Service--Garage#place"));
        assert!(ids.contains(&"comp:Car◇Part"));
        assert!(ids.contains(&"inh:Repair<:Service"));
        assert!(ids.contains(&"lit:PartType.ENGINE"));
    }

    #[test]
    fn end_without_multiplicity_is_skipped() {
        let doc = r#"{"name":"M","classes":[{"name":"A"},{"name":"B"}],
            "relationships":[{"kind":"association",
              "endA":{"class":"A","role":"x"},
              "endB":{"class":"B","multiplicity":"0..1"}}]}"#;
        let m = DomainModel::parse(doc).unwrap();
        let elements = m.elements();
        assert_eq!(elements.len(), 1);
        assert_eq!(elements[0].id, "end:A--B#1");
    }

    #[test]
    fn inheritance_cycle_rejected() {
        let doc = r#"{"name":"M","classes":[{"name":"A"},{"name":"B"}],
            "relationships":[{"kind":"inheritance","subclass":"A","superclass":"B"},
                             {"kind":"inheritance","subclass":"B","superclass":"A"}]}"#;
        assert!(matches!(DomainModel::parse(doc), Err(ModelError::InheritanceCycle(_))));
    }

    #[test]
    fn self_inheritance_rejected() {
        let doc = r#"{"name":"M","classes":[{"name":"A"}],
            "relationships":[{"kind":"inheritance","subclass":"A","superclass":"A"}]}"#;
        assert_eq!(
            DomainModel::parse(doc),
            Err(ModelError::SelfInheritance("A".into()))
        );
    }

    #[test]
    fn unknown_class_is_named() {
        let doc = r#"{"name":"M","classes":[{"name":"A"}],
            "relationships":[{"kind":"composition","whole":"A","part":"Ghost"}]}"#;
        match DomainModel::parse(doc) {
            Err(ModelError::UnknownClass { class, .. }) => assert_eq!(class, "Ghost"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn syntax_error_has_position() {
        match DomainModel::parse("{\n  \"name\": \"M\",\n  oops\n}") {
            Err(ModelError::Syntax { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn bad_multiplicity_in_document() {
        let doc = r#"{"name":"M","classes":[{"name":"A"},{"name":"B"}],
            "relationships":[{"kind":"composition","whole":"A","part":"B","partMultiplicity":"5..2"}]}"#;
        assert!(matches!(DomainModel::parse(doc), Err(ModelError::Multiplicity { .. })));
    }

    #[test]
    fn aggregation_normalized_to_association() {
        let doc = r#"{"name":"M","classes":[{"name":"A"},{"name":"B"}],
            "relationships":[{"kind":"aggregation",
              "endA":{"class":"A","multiplicity":"1"},
              "endB":{"class":"B","multiplicity":"*"}}]}"#;
        let m = DomainModel::parse(doc).unwrap();
        assert_eq!(m.relationships[0].kind_name(), "association");
        assert!(m.to_document().contains("\"association\""));
    }

    #[test]
    fn duplicate_names_rejected() {
        let doc = r#"{"name":"M","classes":[{"name":"A"},{"name":"A"}]}"#;
        assert!(matches!(DomainModel::parse(doc), Err(ModelError::Duplicate { kind: "class", .. })));
        let doc = r#"{"name":"M","enumerations":[{"name":"E","literals":["X","X"]}]}"#;
        assert!(matches!(DomainModel::parse(doc), Err(ModelError::Duplicate { kind: "literal", .. })));
    }

    #[test]
    fn fixture_round_trips() {
        let m = DomainModel::parse(CAR_SERVICE_MODEL).unwrap();
        let again = DomainModel::parse(&m.to_document()).unwrap();
        assert_eq!(m, again);
        let ids: Vec<String> = m.elements().into_iter().map(|e| e.id).collect();
        let ids2: Vec<String> = again.elements().into_iter().map(|e| e.id).collect();
        assert_eq!(ids, ids2);
    }
}
