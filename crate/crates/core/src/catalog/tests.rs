use std::collections::BTreeSet;
use std::fs;

use proptest::prelude::*;

use super::*;
use crate::tablestore::DataType;

fn lake_with(files: &[&str]) -> (tempfile::TempDir, Catalog) {
    let dir = tempfile::tempdir().unwrap();
    for f in files {
        let p = dir.path().join("raw").join(f);
        fs::create_dir_all(p.parent().unwrap()).unwrap();
        fs::write(&p, "x").unwrap();
    }
    let cat = Catalog::open(dir.path()).unwrap();
    (dir, cat)
}

fn props(pairs: &[(&str, &str)]) -> Properties {
    pairs
        .iter()
        .map(|(k, v)| (k.to_string(), PropValue::from(*v)))
        .collect()
}

fn doc(path: &str, p: &[(&str, &str)]) -> ObjectDescriptor {
    ObjectDescriptor {
        kind: ObjectKind::Textual,
        path: format!("raw/{path}"),
        properties: props(p),
    }
}

#[test]
fn register_and_duplicate() {
    let (_d, mut cat) = lake_with(&["a.txt", "b.csv"]);
    let a = cat.register_object(doc("a.txt", &[])).unwrap();
    assert!(matches!(
        cat.register_object(doc("a.txt", &[])),
        Err(LakeError::Duplicate { .. })
    ));
    assert!(matches!(
        cat.register_object(doc("missing.txt", &[])),
        Err(LakeError::NotFound { .. })
    ));
    // extension says tabular
    assert!(cat.register_object(doc("b.csv", &[])).is_err());
    assert_eq!(cat.object(a).unwrap().path, "raw/a.txt");
    assert_eq!(cat.object_by_path("raw/./a.txt").map(|o| o.id), Some(a));
}

#[test]
fn columns_only_on_tables() {
    let (_d, mut cat) = lake_with(&["a.txt", "b.csv"]);
    let a = cat.register_object(doc("a.txt", &[])).unwrap();
    let b = cat
        .register_object(ObjectDescriptor {
            kind: ObjectKind::Tabular,
            path: "raw/b.csv".into(),
            properties: Properties::new(),
        })
        .unwrap();
    let col = ColumnDescriptor {
        name: "id".into(),
        dtype: DataType::Integer,
        distinct_count: 2,
        null_count: 0,
        row_count: 2,
    };
    assert!(matches!(
        cat.attach_columns(a, vec![col.clone()]),
        Err(LakeError::Kind { .. })
    ));
    let first = cat.attach_columns(b, vec![col.clone()]).unwrap();
    let again = cat.attach_columns(b, vec![col]).unwrap();
    assert_eq!(first, again);
    assert_eq!(cat.columns(b).count(), 1);
}

#[test]
fn grouping_by_language() {
    let (_d, mut cat) = lake_with(&["1.txt", "2.txt", "3.txt", "4.txt"]);
    let ids: Vec<ObjectId> = [("1.txt", "en"), ("2.txt", "en"), ("3.txt", "fr")]
        .iter()
        .map(|(p, l)| cat.register_object(doc(p, &[("language", l)])).unwrap())
        .collect();
    let bare = cat.register_object(doc("4.txt", &[])).unwrap();
    let g = cat.create_grouping("language", "language", None).unwrap();
    let labels: Vec<String> = cat.groups(g).map(|g| g.label.clone()).collect();
    assert_eq!(labels, vec![UNASSIGNED, "en", "fr"]);
    let en = cat.resolve_group("language", "en").unwrap();
    assert_eq!(cat.members(en).unwrap().iter().copied().collect::<Vec<_>>(), ids[..2]);
    let un = cat.resolve_group("language", UNASSIGNED).unwrap();
    assert!(cat.members(un).unwrap().contains(&bare));
    assert!(cat.check_invariants().iter().all(|p| !p.contains("grouping")));
    assert!(matches!(
        cat.create_grouping("nope", "no_such_property", None),
        Err(LakeError::Precondition(_))
    ));
}

#[test]
fn month_binning_labels() {
    assert_eq!(
        bin_label(&"2021-12-03".into(), Some(Binning::Month)).as_deref(),
        Some("12")
    );
    assert_eq!(
        bin_label(&"2021-12-03".into(), Some(Binning::Year)).as_deref(),
        Some("2021")
    );
    assert_eq!(bin_label(&"December".into(), Some(Binning::Month)), None);
}

#[test]
fn related_documents_follow_weights() {
    let (_d, mut cat) = lake_with(&["a.txt", "b.txt", "c.txt"]);
    let ids: Vec<ObjectId> = ["a.txt", "b.txt", "c.txt"]
        .iter()
        .map(|p| cat.register_object(doc(p, &[])).unwrap())
        .collect();
    cat.set_similarity(vec![
        SimilarityEdge {
            src: ids[0],
            dst: ids[2],
            weight: 0.9,
            rank: 1,
        },
        SimilarityEdge {
            src: ids[0],
            dst: ids[1],
            weight: 0.4,
            rank: 2,
        },
    ])
    .unwrap();
    let rel = cat.related_documents(ids[0], 1).unwrap();
    assert_eq!(rel, vec![(ids[2], 0.9)]);
    assert!(cat.related_documents(ids[1], 5).unwrap().is_empty());
}

#[test]
fn restart_reproduces_dump() {
    let (dir, mut cat) = lake_with(&["a.txt", "b.txt"]);
    cat.register_object(doc("a.txt", &[("language", "en")])).unwrap();
    cat.register_object(doc("b.txt", &[("language", "fr")])).unwrap();
    cat.create_grouping("language", "language", None).unwrap();
    let before = cat.dump();
    drop(cat);
    // journal replay
    let mut cat = Catalog::open(dir.path()).unwrap();
    assert_eq!(cat.dump(), before);
    cat.checkpoint().unwrap();
    drop(cat);
    // snapshot load
    let cat = Catalog::open(dir.path()).unwrap();
    assert_eq!(cat.dump(), before);
}

#[test]
fn torn_journal_tail_is_dropped() {
    let (dir, mut cat) = lake_with(&["a.txt"]);
    cat.register_object(doc("a.txt", &[])).unwrap();
    let before = cat.dump();
    drop(cat);
    let journal = dir.path().join("_catalog").join(JOURNAL_FILE);
    let mut text = fs::read_to_string(&journal).unwrap();
    text.push_str("{\"put_obj");
    fs::write(&journal, text).unwrap();
    assert_eq!(Catalog::open(dir.path()).unwrap().dump(), before);
}

/// Random expression tree over group labels, evaluated by brute force
/// against object property maps.
fn expr_strategy() -> impl Strategy<Value = GroupExpr> {
    let leaf = prop_oneof![
        (0..3usize).prop_map(|i| GroupExpr::label("language", ["en", "fr", UNASSIGNED][i])),
        (0..3usize).prop_map(|i| GroupExpr::label("author", ["ann", "bob", "cy"][i])),
    ];
    leaf.prop_recursive(3, 12, 3, |inner| {
        prop_oneof![
            prop::collection::vec(inner.clone(), 1..3).prop_map(GroupExpr::And),
            prop::collection::vec(inner, 1..3).prop_map(GroupExpr::Or),
        ]
    })
}

fn brute(expr: &GroupExpr, objects: &[(ObjectId, Properties)]) -> BTreeSet<ObjectId> {
    match expr {
        GroupExpr::Label { grouping, label } => objects
            .iter()
            .filter(|(_, p)| {
                let v = p.get(grouping.as_str()).map(|v| v.to_string());
                v.as_deref().unwrap_or(UNASSIGNED) == label
            })
            .map(|(id, _)| *id)
            .collect(),
        GroupExpr::And(items) => items
            .iter()
            .map(|e| brute(e, objects))
            .reduce(|a, b| &a & &b)
            .unwrap_or_default(),
        GroupExpr::Or(items) => items.iter().flat_map(|e| brute(e, objects)).collect(),
        GroupExpr::Group(_) => unreachable!(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]
    #[test]
    fn navigate_matches_brute_force(
        assignment in prop::collection::vec((0..3usize, 0..3usize), 3..12),
        exprs in prop::collection::vec(expr_strategy(), 1..6),
    ) {
        // a grouping needs at least one object carrying its property
        prop_assume!(assignment.iter().any(|(l, _)| *l < 2));
        let files: Vec<String> = (0..assignment.len()).map(|i| format!("{i}.txt")).collect();
        let refs: Vec<&str> = files.iter().map(String::as_str).collect();
        let (_d, mut cat) = lake_with(&refs);
        let mut objects = Vec::new();
        for (f, (l, a)) in files.iter().zip(&assignment) {
            let mut p = props(&[("author", ["ann", "bob", "cy"][*a])]);
            if *l < 2 {
                p.insert("language".into(), ["en", "fr"][*l].into());
            }
            let id = cat.register_object(doc(f, &[])).unwrap();
            cat.update_properties(id, p.clone()).unwrap();
            objects.push((id, p));
        }
        cat.create_grouping("language", "language", None).unwrap();
        cat.create_grouping("author", "author", None).unwrap();
        for e in &exprs {
            let expected: Vec<ObjectId> = brute(e, &objects).into_iter().collect();
            match cat.navigate(e) {
                Ok(got) => prop_assert_eq!(got, expected),
                // a label with no members does not exist as a group
                Err(LakeError::NotFound { .. }) => {}
                Err(other) => prop_assert!(false, "{other}"),
            }
        }
    }
}
