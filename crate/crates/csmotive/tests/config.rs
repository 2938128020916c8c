use std::fs;

use csmotive::config::{config_path, ConfigError, ProjectConfig};

#[test]
fn toml_and_json_load_the_same_project() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("instances.jsonl"), "").unwrap();
    fs::create_dir(dir.path().join("data")).unwrap();
    fs::write(
        dir.path().join("csmotive.toml"),
        r#"
instances = "instances.jsonl"
annotations = "data/annotations.jsonl"
annotators = ["ana", "ben"]
port = 9000

[subsets]
pilot = ["a", "b"]
"#,
    )
    .unwrap();
    fs::write(
        dir.path().join("csmotive.json"),
        r#"{"instances": "instances.jsonl", "annotations": "data/annotations.jsonl",
            "annotators": ["ana", "ben"], "port": 9000, "subsets": {"pilot": ["a", "b"]}}"#,
    )
    .unwrap();
    let t = ProjectConfig::load(&dir.path().join("csmotive.toml")).unwrap();
    let j = ProjectConfig::load(&dir.path().join("csmotive.json")).unwrap();
    assert_eq!(t, j);
    assert_eq!(t.instances, dir.path().join("instances.jsonl"));
    assert_eq!(t.annotations, dir.path().join("data/annotations.jsonl"));
    assert_eq!((t.port, t.schema_version, t.translation_client.as_str()), (9000, 1, "identity"));
}

#[test]
fn every_problem_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    fs::write(
        &path,
        r#"
instances = "missing.jsonl"
annotations = "nowhere/annotations.jsonl"
schema_version = 2
translation_client = "babelfish"
annotators = ["ana", "ana", " "]

[lexicons]
fra = "fra.txt"
"#,
    )
    .unwrap();
    let Err(ConfigError::Invalid { problems, .. }) = ProjectConfig::load(&path) else {
        panic!("expected validation problems");
    };
    let joined = problems.join("\n");
    for needle in [
        "instances:",
        "annotations: directory",
        "schema_version: 2",
        "translation_client:",
        "`ana` listed twice",
        "empty annotator id",
        "lexicons.fra: unsupported language",
        "lexicons.fra:",
    ] {
        assert!(joined.contains(needle), "missing {needle:?} in\n{joined}");
    }
    assert_eq!(problems.len(), 8);
}

#[test]
fn unknown_keys_and_bad_syntax_fail() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.toml");
    fs::write(&path, "instances = \"i\"\nannotations = \"a\"\nprot = 1\n").unwrap();
    assert!(matches!(ProjectConfig::load(&path), Err(ConfigError::Syntax { .. })));
    fs::write(&path, "instances = ").unwrap();
    assert!(matches!(ProjectConfig::load(&path), Err(ConfigError::Syntax { .. })));
    assert!(matches!(ProjectConfig::load(&dir.path().join("none.toml")), Err(ConfigError::Read { .. })));
}

#[test]
fn explicit_path_wins() {
    assert_eq!(config_path(Some("x/y.toml".as_ref())), std::path::PathBuf::from("x/y.toml"));
}
