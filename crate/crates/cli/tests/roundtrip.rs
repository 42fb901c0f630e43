use std::path::PathBuf;

use pdcrys_cli::jobspec::JobSpec;

fn examples() -> Vec<PathBuf> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("examples");
    let mut out: Vec<PathBuf> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    out.sort();
    out
}

#[test]
fn every_example_round_trips() {
    let files = examples();
    assert!(files.len() >= 6);
    for f in files {
        let job = JobSpec::load(&f).unwrap_or_else(|e| panic!("{e}"));
        let text = job.to_json();
        let again = JobSpec::parse(&text).unwrap_or_else(|e| panic!("{}: {e}", f.display()));
        assert_eq!(job, again, "{}", f.display());
        assert_eq!(text, again.to_json());
    }
}

#[test]
fn examples_cover_the_standard_atlases() {
    let kinds: Vec<String> = examples()
        .iter()
        .map(|f| {
            let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(f).unwrap()).unwrap();
            v["atlas"]["kind"].as_str().unwrap().to_string()
        })
        .collect();
    for k in ["affine", "torus", "projective_line", "product"] {
        assert!(kinds.iter().any(|x| x == k), "no example with a {k} atlas");
    }
}

#[test]
fn unknown_fields_and_versions_are_rejected() {
    let bad_field = r#"{"format": "pdcrys-job/1", "ring": {"p": 5, "n": 1, "q": 3}}"#;
    assert!(JobSpec::parse(bad_field).is_err());
    let bad_version = r#"{"format": "pdcrys-job/0", "ring": {"p": 5, "n": 1}}"#;
    assert!(JobSpec::parse(bad_version).unwrap_err().contains("format"));
    let ok = r#"{"format": "pdcrys-job/1", "ring": {"p": 5, "n": 1}}"#;
    assert_eq!(JobSpec::parse(ok).unwrap().ring.s, 1);
}
