//! Property-based tests: algebraic laws of version ordering, round-trip
//! stability of the control-file and dependency grammars, and consistency
//! between constraint satisfaction and the comparison order.

use std::cmp::Ordering;

use proptest::prelude::*;

use ccenv_core::control::{
    parse_depends, render_depends, ArchRestriction, DependencyAtom, DependencyClause, Paragraph,
};
use ccenv_core::version::{compare, satisfies, Constraint, DebVersion, VersionRelation};

// ---------------------------------------------------------------------------
// Strategies
// ---------------------------------------------------------------------------

/// Upstream version: starts with a digit, then any mix of the legal symbol
/// set (colons and hyphens excluded so epoch/revision splits stay where the
/// generator put them).
fn upstream() -> impl Strategy<Value = String> {
    "[0-9][0-9a-zA-Z.+~]{0,12}"
}

fn revision() -> impl Strategy<Value = String> {
    "[0-9a-zA-Z+~]{1,6}"
}

fn version_string() -> impl Strategy<Value = String> {
    (
        proptest::option::of(0u32..5),
        upstream(),
        proptest::option::of(revision()),
    )
        .prop_map(|(epoch, upstream, revision)| {
            let mut s = String::new();
            if let Some(e) = epoch {
                s.push_str(&format!("{e}:"));
            }
            s.push_str(&upstream);
            if let Some(r) = revision {
                s.push_str(&format!("-{r}"));
            }
            s
        })
}

fn deb_version() -> impl Strategy<Value = DebVersion> {
    version_string().prop_map(|s| s.parse().expect("generated version is well-formed"))
}

fn relation() -> impl Strategy<Value = VersionRelation> {
    prop_oneof![
        Just(VersionRelation::StrictlyEarlier),
        Just(VersionRelation::EarlierOrEqual),
        Just(VersionRelation::Exact),
        Just(VersionRelation::LaterOrEqual),
        Just(VersionRelation::StrictlyLater),
    ]
}

fn package_name() -> impl Strategy<Value = String> {
    "[a-z][a-z0-9+.-]{1,12}"
}

fn arch_restriction() -> impl Strategy<Value = ArchRestriction> {
    (any::<bool>(), "[a-z0-9-]{3,8}").prop_map(|(negated, arch)| ArchRestriction { negated, arch })
}

fn dependency_atom() -> impl Strategy<Value = DependencyAtom> {
    (
        package_name(),
        proptest::option::of(Just("any".to_string())),
        proptest::option::of((relation(), deb_version())),
        proptest::collection::vec(arch_restriction(), 0..3),
    )
        .prop_map(|(package, arch_qualifier, constraint, arch_restrictions)| {
            DependencyAtom {
                package,
                arch_qualifier,
                constraint: constraint.map(|(rel, v)| Constraint::new(rel, v)),
                arch_restrictions,
            }
        })
}

fn dependency_clause() -> impl Strategy<Value = DependencyClause> {
    proptest::collection::vec(dependency_atom(), 1..4)
        .prop_map(|alternatives| DependencyClause { alternatives })
}

/// Field values: printable, no leading/trailing space per logical line, with
/// up to three continuation lines.
fn field_value() -> impl Strategy<Value = String> {
    proptest::collection::vec("[a-zA-Z0-9][a-zA-Z0-9 .,:;+~<>()/-]{0,24}[a-zA-Z0-9)]", 1..4)
        .prop_map(|lines| lines.join("\n"))
}

fn field_name() -> impl Strategy<Value = String> {
    "[A-Z][a-zA-Z0-9-]{0,14}"
}

// ---------------------------------------------------------------------------
// Version ordering laws
// ---------------------------------------------------------------------------

proptest! {
    #[test]
    fn version_display_parse_round_trip(v in deb_version()) {
        let rendered = v.to_string();
        let reparsed: DebVersion = rendered.parse().expect("rendered versions reparse");
        prop_assert_eq!(&v, &reparsed);
        prop_assert_eq!(rendered, reparsed.to_string());
    }

    #[test]
    fn version_order_is_antisymmetric(a in deb_version(), b in deb_version()) {
        prop_assert_eq!(compare(&a, &b), compare(&b, &a).reverse());
        prop_assert_eq!(compare(&a, &b) == Ordering::Equal, a == b);
    }

    #[test]
    fn version_order_is_reflexive_and_consistent(v in deb_version()) {
        prop_assert_eq!(compare(&v, &v), Ordering::Equal);
        let clone: DebVersion = v.to_string().parse().unwrap();
        prop_assert_eq!(compare(&v, &clone), Ordering::Equal);
    }

    #[test]
    fn version_order_is_transitive(a in deb_version(), b in deb_version(), c in deb_version()) {
        let mut sorted = [a, b, c];
        sorted.sort();
        prop_assert!(sorted[0] <= sorted[1] && sorted[1] <= sorted[2]);
        prop_assert!(sorted[0] <= sorted[2], "sorting is only coherent when ≤ is transitive");
    }

    #[test]
    fn epoch_dominates_everything_else(
        e1 in 0u32..4, e2 in 0u32..4, up1 in upstream(), up2 in upstream()
    ) {
        prop_assume!(e1 != e2);
        let a: DebVersion = format!("{e1}:{up1}").parse().unwrap();
        let b: DebVersion = format!("{e2}:{up2}").parse().unwrap();
        prop_assert_eq!(compare(&a, &b), e1.cmp(&e2));
    }

    #[test]
    fn tilde_sorts_before_the_base_version(v in deb_version()) {
        let pre: DebVersion = format!("{v}~rc1").parse().unwrap();
        prop_assert_eq!(compare(&pre, &v), Ordering::Less);
    }

    #[test]
    fn satisfaction_matches_the_comparison_trichotomy(
        candidate in deb_version(), bound in deb_version(), rel in relation()
    ) {
        let expected = match rel {
            VersionRelation::StrictlyEarlier => candidate < bound,
            VersionRelation::EarlierOrEqual => candidate <= bound,
            VersionRelation::Exact => candidate == bound,
            VersionRelation::LaterOrEqual => candidate >= bound,
            VersionRelation::StrictlyLater => candidate > bound,
        };
        let constraint = Constraint::new(rel, bound);
        prop_assert_eq!(satisfies(&candidate, &constraint), expected);
    }

    #[test]
    fn exactly_one_strict_relation_holds(a in deb_version(), b in deb_version()) {
        let lt = satisfies(&a, &Constraint::new(VersionRelation::StrictlyEarlier, b.clone()));
        let eq = satisfies(&a, &Constraint::new(VersionRelation::Exact, b.clone()));
        let gt = satisfies(&a, &Constraint::new(VersionRelation::StrictlyLater, b));
        prop_assert_eq!(usize::from(lt) + usize::from(eq) + usize::from(gt), 1);
    }
}

// ---------------------------------------------------------------------------
// Grammar round trips
// ---------------------------------------------------------------------------

proptest! {
    #[test]
    fn depends_render_parse_round_trip(
        clauses in proptest::collection::vec(dependency_clause(), 1..6)
    ) {
        let rendered = render_depends(&clauses);
        let reparsed = parse_depends(&rendered).expect("rendered depends reparse");
        prop_assert_eq!(&clauses, &reparsed);
        prop_assert_eq!(rendered, render_depends(&reparsed));
    }

    #[test]
    fn paragraph_render_parse_round_trip(
        fields in proptest::collection::btree_map(field_name(), field_value(), 1..8)
    ) {
        let mut para = Paragraph::default();
        for (name, value) in &fields {
            para.push(name.clone(), value.clone()).expect("generated fields are valid");
        }
        let rendered = para.render();
        let reparsed = Paragraph::parse(&rendered).expect("rendered paragraphs reparse");
        prop_assert_eq!(para.fields(), reparsed.fields());
        prop_assert_eq!(rendered, reparsed.render());
    }

    #[test]
    fn paragraph_get_is_case_insensitive(
        fields in proptest::collection::btree_map(field_name(), field_value(), 1..6)
    ) {
        let mut para = Paragraph::default();
        for (name, value) in &fields {
            para.push(name.clone(), value.clone()).unwrap();
        }
        for (name, value) in &fields {
            prop_assert_eq!(para.get(&name.to_uppercase()), Some(value.as_str()));
            prop_assert_eq!(para.get(&name.to_lowercase()), Some(value.as_str()));
        }
    }
}
