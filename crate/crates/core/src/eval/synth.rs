//! Seeded random domain models for exercising the mutation operators.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::{
    AssociationEnd, Attribute, DomainModel, Enumeration, Multiplicity, Relationship, UmlClass,
};

const MULTIPLICITIES: [Option<Multiplicity>; 6] = [
    Some(Multiplicity::ONE),
    Some(Multiplicity::OPTIONAL),
    Some(Multiplicity::MANY),
    Some(Multiplicity::ONE_OR_MORE),
    Some(Multiplicity { lower: 2, upper: Some(4) }),
    None,
];

const ROLES: [&str; 8] = ["owns", "uses", "holder", "items", "manages", "target", "source", "member"];

/// Valid model with 3 to 11 classes. Any two classes share at most one
/// association or composition, and inheritances form a forest that leaves at
/// least half of the classes free, so every operator can meet its quota.
pub fn random_model(seed: u64) -> DomainModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(3..12usize);
    let classes = (0..n)
        .map(|i| UmlClass {
            name: format!("C{i}"),
            attributes: (0..rng.gen_range(0..4))
                .map(|k| Attribute {
                    name: format!("a{k}"),
                    declared_type: "String".into(),
                })
                .collect(),
        })
        .collect();
    let enumerations = (0..rng.gen_range(0..3))
        .map(|e| Enumeration {
            name: format!("E{e}"),
            literals: (0..rng.gen_range(1..5)).map(|k| format!("L{k}")).collect(),
        })
        .collect();

    let mut relationships = Vec::new();
    let max_inh = (n - 1) / 2;
    let mut subclasses: Vec<usize> = (1..n).collect();
    subclasses.shuffle(&mut rng);
    for &sub in subclasses.iter().take(rng.gen_range(0..=max_inh)) {
        relationships.push(Relationship::Inheritance {
            subclass: format!("C{sub}"),
            superclass: format!("C{}", rng.gen_range(0..sub)),
        });
    }

    let mut pairs: Vec<(usize, usize)> =
        (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect();
    pairs.shuffle(&mut rng);
    let links = rng.gen_range(1..=pairs.len().min(10));
    for &(a, b) in &pairs[..links] {
        let (a, b) = if rng.gen_bool(0.5) { (a, b) } else { (b, a) };
        let mult = *MULTIPLICITIES.choose(&mut rng).unwrap();
        if rng.gen_bool(0.3) {
            relationships.push(Relationship::Composition {
                whole: format!("C{a}"),
                part: format!("C{b}"),
                part_multiplicity: mult,
            });
        } else {
            let mut roles = ROLES.choose_multiple(&mut rng, 2);
            let mut role = |rng: &mut ChaCha8Rng| {
                let r = roles.next().unwrap();
                rng.gen_bool(0.7).then(|| r.to_string())
            };
            let end_a = AssociationEnd {
                class: format!("C{a}"),
                role: role(&mut rng),
                multiplicity: *MULTIPLICITIES.choose(&mut rng).unwrap(),
            };
            let end_b = AssociationEnd {
                class: format!("C{b}"),
                role: role(&mut rng),
                multiplicity: mult,
            };
            relationships.push(Relationship::Association { end_a, end_b });
        }
    }
    relationships.shuffle(&mut rng);

    DomainModel {
        name: format!("random-{seed}"),
        classes,
        enumerations,
        relationships,
    }
}
