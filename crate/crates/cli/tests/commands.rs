use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn example(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("examples").join(name)
}

fn pdcrys(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pdcrys")).args(args).output().unwrap()
}

fn run_job(args: &[&str], job: &Path) -> (i32, serde_json::Value) {
    let mut all: Vec<&str> = args.to_vec();
    all.push(job.to_str().unwrap());
    all.extend(["--format", "json"]);
    let out = pdcrys(&all);
    let code = out.status.code().unwrap();
    let v = serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("{e}: {}", String::from_utf8_lossy(&out.stdout))
    });
    (code, v)
}

fn scratch(name: &str, body: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("pdcrys-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

#[test]
fn structure_sheaf_is_a_fontaine_module() {
    let (code, v) = run_job(&["mf-validate"], &example("structure_sheaf_p5n2.json"));
    assert_eq!(code, 0, "{v:#}");
    assert_eq!(v["ok"], true);
}

#[test]
fn projective_line_report() {
    let (code, v) = run_job(&["verify-thm13"], &example("p1_p5n2.json"));
    assert_eq!(code, 0, "{v:#}");
    let groups = v["data"]["groups"].as_array().unwrap();
    assert_eq!(groups[2]["invariants"], serde_json::json!([2]));
    assert_eq!(groups[1]["invariants"], serde_json::json!([]));
}

#[test]
fn glue_cocycle_on_rank_two() {
    let out = pdcrys(&["glue", "--lifts", "F1,F2,F3", example("rank2.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let md = String::from_utf8(out.stdout).unwrap();
    assert!(md.contains("| cocycle (F1,F2,F3) | pass |"), "{md}");
}

#[test]
fn other_examples_pass() {
    for (cmd, file) in [
        ("stratify", "a1_connection.json"),
        ("check-connection", "a1_connection.json"),
        ("shiho", "a2_shiho.json"),
        ("shiho", "torus_higgs.json"),
        ("mf-validate", "a1_fontaine_rank2.json"),
        ("cohomology", "p1_charts_p5n1.json"),
        ("cohomology", "p1xp1_p3n1.json"),
    ] {
        let (code, v) = run_job(&[cmd], &example(file));
        assert_eq!(code, 0, "{cmd} {file}: {v:#}");
    }
}

#[test]
fn product_of_projective_lines() {
    let (_, v) = run_job(&["cohomology"], &example("p1xp1_p3n1.json"));
    let lens: Vec<usize> = v["data"]["groups"]
        .as_array()
        .unwrap()
        .iter()
        .map(|g| g["invariants"].as_array().unwrap().len())
        .collect();
    assert_eq!(lens, [1, 0, 2, 0, 1, 0]);
}

#[test]
fn output_is_deterministic() {
    let a = pdcrys(&["verify-thm13", example("p1_p5n2.json").to_str().unwrap(), "--format", "json"]);
    let b = pdcrys(&["verify-thm13", example("p1_p5n2.json").to_str().unwrap(), "--format", "json"]);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn reports_are_written_to_the_output_directory() {
    let dir = std::env::temp_dir().join(format!("pdcrys-out-{}", std::process::id()));
    let out = pdcrys(&["mf-validate", example("structure_sheaf_p5n2.json").to_str().unwrap(), "--out", dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.join("report.json")).unwrap()).unwrap();
    assert_eq!(json["command"], "mf-validate");
    assert!(std::fs::read_to_string(dir.join("report.md")).unwrap().starts_with("# pdcrys mf-validate"));
}

#[test]
fn failed_assertion_exits_one() {
    let job = scratch(
        "p_times_phi.json",
        r#"{"format": "pdcrys-job/1", "ring": {"p": 5, "n": 2},
            "atlas": {"kind": "affine", "d": 1},
            "module": {"rank": 1, "frobenius": [[[0], 0, 0, 5]]}}"#,
    );
    let (code, v) = run_job(&["mf-validate"], &job);
    assert_eq!(code, 1, "{v:#}");
    let sd = v["checks"].as_array().unwrap().iter().find(|c| c["name"] == "chart 0: strong-divisibility").unwrap();
    assert_eq!(sd["pass"], false);
}

#[test]
fn schema_errors_exit_two() {
    let unknown_lift = pdcrys(&["glue", "--lifts", "F1,G", example("rank2.json").to_str().unwrap()]);
    assert_eq!(unknown_lift.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&unknown_lift.stderr).contains("\"G\""));
    let bad_index = scratch(
        "bad_index.json",
        r#"{"format": "pdcrys-job/1", "ring": {"p": 3, "n": 1},
            "atlas": {"kind": "affine", "d": 1},
            "module": {"rank": 1, "connection": [[[[0], 0, 4, 1]]]}}"#,
    );
    let out = pdcrys(&["check-connection", bad_index.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("module.connection[0][0]"));
    assert_eq!(pdcrys(&["cohomology"]).status.code(), Some(2));
    assert_eq!(pdcrys(&["no-such-command"]).status.code(), Some(2));
}

#[test]
fn unstable_cohomology_exits_three() {
    let job = scratch(
        "torus_dolbeault.json",
        r#"{"format": "pdcrys-job/1", "ring": {"p": 5, "n": 1},
            "atlas": {"kind": "torus", "d": 1},
            "module": {"rank": 2, "lambda": "higgs", "connection": [[[[-1], 0, 1, 1]]]},
            "command": {"cap_poly": 2, "cap_big": 3, "cap_pd": 1}}"#,
    );
    let (code, v) = run_job(&["cohomology"], &job);
    assert_eq!(code, 3, "{v:#}");
}

#[test]
fn selftest_subset() {
    let out = pdcrys(&["selftest", "--only", "2,6", "--format", "json"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["checks"].as_array().unwrap().len(), 2);
}
