use std::fs;
use std::path::Path;

use lake_core::catalog::PropValue;
use lake_core::workload::run_workload;
use lake_core::{fixture, Lake, LakeError, ObjectKind, SidecarPolicy, TermQuery};
use proptest::prelude::*;

fn write(dir: &Path, rel: &str, body: &str) {
    let p = dir.join(rel);
    fs::create_dir_all(p.parent().unwrap()).unwrap();
    fs::write(p, body).unwrap();
}

fn small_corpus(dir: &Path) {
    write(dir, "notes/a.txt", "Big data platforms store raw files.");
    write(dir, "notes/b.txt", "A data lake keeps metadata next to the data.");
    write(dir, "c.md", "# Report\n\nThe article describes a document index.");
    write(dir, "t/cities.csv", "city,population\nParis,2100000\nLyon,513000\n");
    write(dir, "t/people.csv", "name,city\nAnn,Paris\nBob,Lyon\nCid,Paris\n");
}

fn lake_with(corpus: impl Fn(&Path)) -> (tempfile::TempDir, Lake) {
    let dir = tempfile::tempdir().unwrap();
    corpus(&dir.path().join("src"));
    let lake = Lake::init(dir.path().join("lake")).unwrap();
    (dir, lake)
}

#[test]
fn ingest_registers_each_file_once() {
    let (dir, mut lake) = lake_with(small_corpus);
    let src = dir.path().join("src");
    let first = lake.ingest(&src, SidecarPolicy::Merge).unwrap();
    assert_eq!(first.objects_added, 5);
    assert!(first.failures.is_empty(), "{:?}", first.failures);
    assert_eq!(lake.catalog().objects_of_kind(ObjectKind::Tabular).count(), 2);
    assert!(lake.root().join("raw/notes/a.txt").exists());

    let again = lake.ingest(&src, SidecarPolicy::Merge).unwrap();
    assert_eq!(again.objects_added, 0);
    assert_eq!(again.objects_unchanged, 5);
    assert!(lake.check_invariants().is_empty(), "{:?}", lake.check_invariants());
}

#[test]
fn changed_file_is_updated_in_place() {
    let (dir, mut lake) = lake_with(small_corpus);
    let src = dir.path().join("src");
    lake.ingest(&src, SidecarPolicy::Merge).unwrap();
    let id = lake.catalog().object_by_path("raw/notes/a.txt").unwrap().id;
    write(&src, "notes/a.txt", "Completely rewritten: zebra giraffe.");
    let report = lake.ingest(&src, SidecarPolicy::Merge).unwrap();
    assert_eq!(report.objects_updated, 1);
    assert_eq!(lake.catalog().object_by_path("raw/notes/a.txt").unwrap().id, id);
    let hits = lake.search(&TermQuery::all(&["zebra"])).unwrap();
    assert_eq!(hits.iter().map(|h| h.object).collect::<Vec<_>>(), vec![id]);
    assert!(lake.search(&TermQuery::all(&["platforms"])).unwrap().is_empty());
}

#[test]
fn per_file_failures_are_reported_with_their_stage() {
    let (dir, mut lake) = lake_with(|d| {
        small_corpus(d);
        write(d, "t/broken.csv", "a,b\n1,2\n3\n");
        write(d, "image.png", "not really");
    });
    let report = lake.ingest(dir.path().join("src"), SidecarPolicy::Merge).unwrap();
    assert_eq!(report.objects_added, 5);
    let stages: Vec<(&str, &str)> = report
        .failures
        .iter()
        .map(|f| (f.path.as_str(), f.stage.as_str()))
        .collect();
    assert!(stages.contains(&("raw/t/broken.csv", "ingest_table")), "{stages:?}");
    assert!(
        stages.iter().any(|(p, s)| p.ends_with("image.png") && *s == "walk"),
        "{stages:?}"
    );
}

#[test]
fn sidecar_properties_override_and_malformed_ones_warn() {
    let (dir, mut lake) = lake_with(|d| {
        small_corpus(d);
        write(
            d,
            "notes/a.txt.meta.json",
            r#"{"author": "Ines", "size": 1, "tags": ["x"]}"#,
        );
        write(d, "notes/b.txt.meta.json", "{ not json");
    });
    let report = lake.ingest(dir.path().join("src"), SidecarPolicy::Merge).unwrap();
    let a = lake.catalog().object_by_path("raw/notes/a.txt").unwrap();
    assert_eq!(a.properties.get("author"), Some(&PropValue::Text("Ines".into())));
    assert_eq!(a.properties.get("size"), Some(&PropValue::Int(1)));
    assert!(!a.properties.contains_key("tags"));
    assert!(
        report.warnings.iter().any(|w| w.contains("b.txt")),
        "{:?}",
        report.warnings
    );
    let b = lake.catalog().object_by_path("raw/notes/b.txt").unwrap();
    assert!(matches!(b.properties.get("mime_type"), Some(PropValue::Text(m)) if m == "text/plain"));
}

#[test]
fn ignored_sidecars_leave_filesystem_properties() {
    let (dir, mut lake) = lake_with(|d| {
        small_corpus(d);
        write(d, "notes/a.txt.meta.json", r#"{"author": "Ines"}"#);
    });
    lake.ingest(dir.path().join("src"), SidecarPolicy::Ignore).unwrap();
    let a = lake.catalog().object_by_path("raw/notes/a.txt").unwrap();
    assert!(!a.properties.contains_key("author"));
    assert!(a.properties.contains_key("content_hash"));
}

#[test]
fn concurrent_ingest_is_refused() {
    let (dir, mut lake) = lake_with(small_corpus);
    fs::write(lake.root().join("ingest.lock"), "1").unwrap();
    let err = lake.ingest(dir.path().join("src"), SidecarPolicy::Merge).unwrap_err();
    assert!(matches!(err, LakeError::Busy(_)), "{err}");
    fs::remove_file(lake.root().join("ingest.lock")).unwrap();
    lake.ingest(dir.path().join("src"), SidecarPolicy::Merge).unwrap();
    assert!(!lake.root().join("ingest.lock").exists());
}

#[test]
fn reopened_lake_answers_like_the_original() {
    let (dir, mut lake) = lake_with(small_corpus);
    lake.ingest(dir.path().join("src"), SidecarPolicy::Merge).unwrap();
    let q = TermQuery::all(&["data"]);
    let before = lake.search(&q).unwrap();
    let dump = lake.catalog().dump();
    let generation = lake.generation();
    let root = lake.root().to_path_buf();
    drop(lake);
    let lake = Lake::open(&root).unwrap();
    assert_eq!(lake.search(&q).unwrap(), before);
    assert_eq!(lake.catalog().dump(), dump);
    assert_eq!(lake.generation(), generation);
    assert_eq!(
        lake.sql("SELECT COUNT(*) AS n FROM people").unwrap().rows,
        vec![vec![lake_core::Value::Int(3)]]
    );
}

#[test]
fn empty_lake_has_zero_ratio() {
    let dir = tempfile::tempdir().unwrap();
    let lake = Lake::init(dir.path()).unwrap();
    let s = lake.stats().unwrap();
    assert_eq!(s.raw_bytes, 0);
    assert_eq!(s.ratio, 0.0);
}

#[test]
fn open_requires_an_initialised_lake() {
    let dir = tempfile::tempdir().unwrap();
    assert!(matches!(Lake::open(dir.path()), Err(LakeError::NotFound { .. })));
}

#[test]
fn workload_is_deterministic_across_ingests() {
    let digests = |seed: u64| {
        let dir = tempfile::tempdir().unwrap();
        let spec = fixture::FixtureSpec {
            documents: 60,
            seed,
            ..Default::default()
        };
        fixture::generate(&dir.path().join("src"), &spec).unwrap();
        let mut lake = Lake::init(dir.path().join("lake")).unwrap();
        lake.ingest(dir.path().join("src"), SidecarPolicy::Merge).unwrap();
        run_workload(&lake, 10)
            .unwrap()
            .into_iter()
            .map(|r| r.digest)
            .collect::<Vec<_>>()
    };
    assert_eq!(digests(3), digests(3));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    // Ingesting files in any split still yields one object per file and a
    // consistent catalog.
    #[test]
    fn split_ingest_matches_single_ingest(words in proptest::collection::vec("[a-z]{3,8}", 3..12), split in 0usize..12) {
        let dir = tempfile::tempdir().unwrap();
        let src = dir.path().join("src");
        for (i, w) in words.iter().enumerate() {
            write(&src, &format!("{}/d{i}.txt", if i < split { "one" } else { "two" }), &format!("{w} {w} data"));
        }
        let mut lake = Lake::init(dir.path().join("lake")).unwrap();
        if src.join("one").exists() {
            lake.ingest(src.join("one"), SidecarPolicy::Merge).unwrap();
        }
        if src.join("two").exists() {
            lake.ingest(src.join("two"), SidecarPolicy::Merge).unwrap();
        }
        prop_assert_eq!(lake.catalog().objects().count(), words.len());
        prop_assert!(lake.check_invariants().is_empty(), "{:?}", lake.check_invariants());
        let hits = lake.search(&TermQuery::all(&["data"])).unwrap();
        prop_assert_eq!(hits.len(), words.len());
    }
}
