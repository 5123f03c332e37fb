//! Seeded mutation operators that inject known misalignments into a model.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::model::{
    AssociationEnd, DomainModel, ElementAnchor, EndSide, Multiplicity, Relationship,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MutationOperator {
    /// Association and composition swap kinds.
    #[serde(rename = "WAS2")]
    Was2,
    /// Multiplicity flips: `0..1` and `*`, `1` and `1..*`.
    #[serde(rename = "WAS4")]
    Was4,
    /// One side of a generalization moves to another class.
    #[serde(rename = "WGE")]
    Wge,
}

impl MutationOperator {
    pub const ALL: [MutationOperator; 3] = [MutationOperator::Was2, MutationOperator::Was4, MutationOperator::Wge];
}

impl fmt::Display for MutationOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MutationOperator::Was2 => "WAS2",
            MutationOperator::Was4 => "WAS4",
            MutationOperator::Wge => "WGE",
        })
    }
}

impl FromStr for MutationOperator {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "was2" => Ok(MutationOperator::Was2),
            "was4" => Ok(MutationOperator::Was4),
            "wge" => Ok(MutationOperator::Wge),
            other => Err(format!("unknown mutation operator `{other}` (expected was2, was4 or wge)")),
        }
    }
}

/// Something an operator can be applied to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Target {
    Relationship(usize),
    End { relationship: usize, side: EndSide },
    PartMultiplicity(usize),
}

/// The multiplicity a WAS4 mutation turns `m` into, if it has one.
pub fn flip_multiplicity(m: Multiplicity) -> Option<Multiplicity> {
    match m {
        Multiplicity::OPTIONAL => Some(Multiplicity::MANY),
        Multiplicity::MANY => Some(Multiplicity::OPTIONAL),
        Multiplicity::ONE => Some(Multiplicity::ONE_OR_MORE),
        Multiplicity::ONE_OR_MORE => Some(Multiplicity::ONE),
        _ => None,
    }
}

fn flippable(m: Option<Multiplicity>) -> bool {
    m.and_then(flip_multiplicity).is_some()
}

pub fn applicable(model: &DomainModel, op: MutationOperator) -> Vec<Target> {
    let mut out = Vec::new();
    for (i, rel) in model.relationships.iter().enumerate() {
        match (op, rel) {
            (MutationOperator::Was2, Relationship::Association { .. } | Relationship::Composition { .. }) => {
                out.push(Target::Relationship(i))
            }
            (MutationOperator::Was4, Relationship::Association { end_a, end_b }) => {
                for (side, end) in [(EndSide::A, end_a), (EndSide::B, end_b)] {
                    if flippable(end.multiplicity) {
                        out.push(Target::End { relationship: i, side });
                    }
                }
            }
            (MutationOperator::Was4, Relationship::Composition { part_multiplicity, .. }) => {
                if flippable(*part_multiplicity) {
                    out.push(Target::PartMultiplicity(i));
                }
            }
            (MutationOperator::Wge, Relationship::Inheritance { .. }) => out.push(Target::Relationship(i)),
            _ => {}
        }
    }
    out
}

/// Number of targets mutated out of `n`: a fifth, rounded up.
pub fn quota(n: usize) -> usize {
    n.div_ceil(5)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Label {
    Aligned,
    Misaligned,
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Label::Aligned => "ALIGNED",
            Label::Misaligned => "MISALIGNED",
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GroundTruth {
    pub labels: BTreeMap<String, Label>,
}

#[derive(Serialize, Deserialize)]
struct TruthRow {
    element: String,
    label: Label,
}

impl GroundTruth {
    /// Every element of `model` aligned.
    pub fn all_aligned(model: &DomainModel) -> Self {
        GroundTruth {
            labels: model.elements().into_iter().map(|e| (e.id, Label::Aligned)).collect(),
        }
    }

    pub fn misaligned(&self) -> BTreeSet<&str> {
        self.labels
            .iter()
            .filter(|(_, l)| **l == Label::Misaligned)
            .map(|(k, _)| k.as_str())
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        for (element, label) in &self.labels {
            w.serialize(TruthRow {
                element: element.clone(),
                label: *label,
            })
            .expect("in-memory csv write");
        }
        String::from_utf8(w.into_inner().expect("in-memory csv flush")).expect("utf-8 csv")
    }

    pub fn from_csv(text: &str) -> Result<Self, String> {
        let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
        let mut labels = BTreeMap::new();
        for row in r.deserialize::<TruthRow>() {
            let row = row.map_err(|e| e.to_string())?;
            if labels.insert(row.element.clone(), row.label).is_some() {
                return Err(format!("duplicate element {}", row.element));
            }
        }
        Ok(GroundTruth { labels })
    }
}

/// One applied edit, for logs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AppliedMutation {
    pub operator: MutationOperator,
    pub before: String,
    pub after: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mutation {
    pub model: DomainModel,
    pub truth: GroundTruth,
    pub applied: Vec<AppliedMutation>,
    /// Operators that fell short of their quota, with how many were missing.
    pub shortfall: Vec<(MutationOperator, usize)>,
}

impl Mutation {
    pub fn count(&self, op: MutationOperator) -> usize {
        self.applied.iter().filter(|a| a.operator == op).count()
    }
}

fn describe(model: &DomainModel, target: Target) -> String {
    let rel = match target {
        Target::Relationship(i) | Target::End { relationship: i, .. } | Target::PartMultiplicity(i) => {
            &model.relationships[i]
        }
    };
    match (target, rel) {
        (Target::End { side, .. }, Relationship::Association { end_a, end_b }) => {
            let end = if side == EndSide::A { end_a } else { end_b };
            format!(
                "{} end {} [{}]",
                rel.id(),
                end.role.as_deref().unwrap_or(&end.class),
                end.multiplicity.map(|m| m.to_string()).unwrap_or_default()
            )
        }
        (Target::PartMultiplicity(_), Relationship::Composition { part_multiplicity, .. }) => format!(
            "{} [{}]",
            rel.id(),
            part_multiplicity.map(|m| m.to_string()).unwrap_or_default()
        ),
        _ => rel.id(),
    }
}

fn is_ancestor(model: &DomainModel, ancestor: &str, of: &str) -> bool {
    let mut stack = vec![of.to_string()];
    let mut seen = BTreeSet::new();
    while let Some(c) = stack.pop() {
        if c == ancestor {
            return true;
        }
        if !seen.insert(c.clone()) {
            continue;
        }
        for r in &model.relationships {
            if let Relationship::Inheritance { subclass, superclass } = r {
                if *subclass == c {
                    stack.push(superclass.clone());
                }
            }
        }
    }
    false
}

fn inherits(model: &DomainModel, sub: &str, sup: &str) -> bool {
    model.relationships.iter().any(|r| {
        matches!(r, Relationship::Inheritance { subclass, superclass } if subclass == sub && superclass == sup)
    })
}

/// Rewire inheritance `idx`, moving one side (chosen by coin flip, falling
/// back to the other side) to a uniformly chosen class that keeps the
/// hierarchy acyclic and free of duplicates.
fn rewire(model: &DomainModel, idx: usize, rng: &mut ChaCha8Rng) -> Option<Relationship> {
    let Relationship::Inheritance { subclass, superclass } = &model.relationships[idx] else {
        return None;
    };
    let mut without = model.clone();
    without.relationships.remove(idx);
    let first_super = rng.gen_bool(0.5);
    for replace_super in [first_super, !first_super] {
        let options: Vec<&str> = model
            .classes
            .iter()
            .map(|c| c.name.as_str())
            .filter(|c| *c != subclass && *c != superclass)
            .filter(|c| {
                let (sub, sup) = if replace_super { (subclass.as_str(), *c) } else { (*c, superclass.as_str()) };
                !inherits(&without, sub, sup) && !is_ancestor(&without, sub, sup)
            })
            .collect();
        if let Some(pick) = options.choose(rng) {
            let pick = pick.to_string();
            return Some(if replace_super {
                Relationship::Inheritance {
                    subclass: subclass.clone(),
                    superclass: pick,
                }
            } else {
                Relationship::Inheritance {
                    subclass: pick,
                    superclass: superclass.clone(),
                }
            });
        }
    }
    None
}

fn flip_kind(rel: &Relationship) -> Option<Relationship> {
    match rel {
        Relationship::Association { end_a, end_b } => Some(Relationship::Composition {
            whole: end_a.class.clone(),
            part: end_b.class.clone(),
            part_multiplicity: end_b.multiplicity,
        }),
        Relationship::Composition {
            whole,
            part,
            part_multiplicity,
        } => Some(Relationship::Association {
            end_a: AssociationEnd {
                class: whole.clone(),
                role: None,
                multiplicity: Some(Multiplicity::ONE),
            },
            end_b: AssociationEnd {
                class: part.clone(),
                role: None,
                multiplicity: *part_multiplicity,
            },
        }),
        Relationship::Inheritance { .. } => None,
    }
}

fn apply(model: &mut DomainModel, op: MutationOperator, target: Target, rng: &mut ChaCha8Rng) -> bool {
    match (op, target) {
        (MutationOperator::Was2, Target::Relationship(i)) => match flip_kind(&model.relationships[i]) {
            Some(r) => {
                model.relationships[i] = r;
                true
            }
            None => false,
        },
        (MutationOperator::Was4, Target::End { relationship, side }) => {
            let Relationship::Association { end_a, end_b } = &mut model.relationships[relationship] else {
                return false;
            };
            let end = if side == EndSide::A { end_a } else { end_b };
            match end.multiplicity.and_then(flip_multiplicity) {
                Some(m) => {
                    end.multiplicity = Some(m);
                    true
                }
                None => false,
            }
        }
        (MutationOperator::Was4, Target::PartMultiplicity(i)) => {
            let Relationship::Composition { part_multiplicity, .. } = &mut model.relationships[i] else {
                return false;
            };
            match part_multiplicity.and_then(flip_multiplicity) {
                Some(m) => {
                    *part_multiplicity = Some(m);
                    true
                }
                None => false,
            }
        }
        (MutationOperator::Wge, Target::Relationship(i)) => match rewire(model, i, rng) {
            Some(r) => {
                model.relationships[i] = r;
                true
            }
            None => false,
        },
        _ => false,
    }
}

fn touched_relationship(t: Target) -> usize {
    match t {
        Target::Relationship(i) | Target::End { relationship: i, .. } | Target::PartMultiplicity(i) => i,
    }
}

/// Apply each operator to a fifth (rounded up) of the elements it applies
/// to in `model`, chosen uniformly with a generator seeded by `seed`.
/// Relationships already changed by an earlier operator are not touched
/// again. Mutated elements are labelled misaligned, the rest aligned.
pub fn mutate(model: &DomainModel, ops: &[MutationOperator], seed: u64) -> Mutation {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut current = model.clone();
    let mut applied = Vec::new();
    let mut shortfall = Vec::new();
    let mut touched_rels: BTreeSet<usize> = BTreeSet::new();
    let mut misaligned_targets: Vec<Target> = Vec::new();

    // WAS4 targets sit on relationships WAS2 could also take, so WAS4 goes first.
    let mut ordered: Vec<MutationOperator> = ops.to_vec();
    ordered.sort_by_key(|op| match op {
        MutationOperator::Was4 => 0,
        MutationOperator::Wge => 1,
        MutationOperator::Was2 => 2,
    });
    ordered.dedup();
    for op in ordered {
        let want = quota(applicable(model, op).len());
        let mut candidates: Vec<Target> = applicable(&current, op)
            .into_iter()
            .filter(|t| !touched_rels.contains(&touched_relationship(*t)))
            .collect();
        candidates.shuffle(&mut rng);
        let mut done = 0;
        for target in candidates {
            if done == want {
                break;
            }
            let before = describe(&current, target);
            let mut trial = current.clone();
            if !apply(&mut trial, op, target, &mut rng) || trial.validate().is_err() {
                log::warn!("{op}: no valid mutation for {before}; skipped");
                continue;
            }
            let after_target = match (op, target) {
                (MutationOperator::Was2, Target::Relationship(i)) => Target::Relationship(i),
                _ => target,
            };
            applied.push(AppliedMutation {
                operator: op,
                before,
                after: describe(&trial, after_target),
            });
            current = trial;
            touched_rels.insert(touched_relationship(target));
            misaligned_targets.push(after_target);
            done += 1;
        }
        if done < want {
            log::warn!("{op}: mutated {done} of the {want} required elements");
            shortfall.push((op, want - done));
        }
    }

    let mut truth = GroundTruth::all_aligned(&current);
    for e in current.elements() {
        let hit = misaligned_targets.iter().any(|t| match (*t, &e.anchor) {
            (Target::Relationship(i), ElementAnchor::AssociationEnd { relationship, .. })
            | (Target::Relationship(i), ElementAnchor::Composition { relationship })
            | (Target::Relationship(i), ElementAnchor::Inheritance { relationship })
            | (Target::PartMultiplicity(i), ElementAnchor::Composition { relationship }) => i == *relationship,
            (Target::End { relationship: i, side: s }, ElementAnchor::AssociationEnd { relationship, side }) => {
                i == *relationship && s == *side
            }
            _ => false,
        });
        if hit {
            truth.labels.insert(e.id, Label::Misaligned);
        }
    }
    Mutation {
        model: current,
        truth,
        applied,
        shortfall,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::CAR_SERVICE_MODEL;

    fn fixture() -> DomainModel {
        DomainModel::parse(CAR_SERVICE_MODEL).unwrap()
    }

    #[test]
    fn quotas() {
        assert_eq!(quota(12), 3);
        assert_eq!(quota(1), 1);
        assert_eq!(quota(5), 1);
        assert_eq!(quota(6), 2);
        assert_eq!(quota(0), 0);
    }

    #[test]
    fn applicable_on_fixture() {
        let m = fixture();
        assert_eq!(applicable(&m, MutationOperator::Wge).len(), 2);
        assert_eq!(applicable(&m, MutationOperator::Was4).len(), 3);
        assert_eq!(applicable(&m, MutationOperator::Was2).len(), 2);
        assert!(applicable(&DomainModel::default(), MutationOperator::Was2).is_empty());
    }

    #[test]
    fn flip_table() {
        assert_eq!(flip_multiplicity(Multiplicity::ONE), Some(Multiplicity::ONE_OR_MORE));
        assert_eq!(flip_multiplicity(Multiplicity::ONE_OR_MORE), Some(Multiplicity::ONE));
        assert_eq!(flip_multiplicity(Multiplicity::OPTIONAL), Some(Multiplicity::MANY));
        assert_eq!(flip_multiplicity(Multiplicity::MANY), Some(Multiplicity::OPTIONAL));
        assert_eq!(flip_multiplicity(Multiplicity::new(2, Some(4)).unwrap()), None);
    }

    #[test]
    fn fixture_mutation_is_seeded_and_valid() {
        let m = fixture();
        let a = mutate(&m, &MutationOperator::ALL, 7);
        let b = mutate(&m, &MutationOperator::ALL, 7);
        assert_eq!(a, b);
        a.model.validate().unwrap();
        assert!(a.shortfall.is_empty());
        assert_eq!(a.count(MutationOperator::Was2), 1);
        assert_eq!(a.count(MutationOperator::Wge), 1);
        assert!(!a.truth.misaligned().is_empty());
        let ids: BTreeSet<String> = a.model.elements().into_iter().map(|e| e.id).collect();
        assert_eq!(ids, a.truth.labels.keys().cloned().collect());
    }

    #[test]
    fn truth_csv_round_trip() {
        let t = mutate(&fixture(), &[MutationOperator::Was4], 1).truth;
        let csv = t.to_csv();
        assert!(csv.starts_with("element,label\n"));
        assert_eq!(GroundTruth::from_csv(&csv).unwrap(), t);
    }

    #[test]
    fn was4_changes_one_end_only() {
        let m = fixture();
        for seed in 0..20 {
            let out = mutate(&m, &[MutationOperator::Was4], seed);
            assert_eq!(out.count(MutationOperator::Was4), 1);
            assert_eq!(out.truth.misaligned().len(), 1);
        }
    }
}
