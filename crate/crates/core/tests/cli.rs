use std::path::Path;
use std::process::{Command, Output};

use pdcch_blocking::io::{read_results, OutputFormat};

fn pdcch_sim(args: &[&str], out_dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pdcch-sim"))
        .args(args)
        .env("PDCCH_SIM_OUT_DIR", out_dir)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

const SMALL: &str = r#"
name = "small"
description = "test"
ue_count = 6
al_distribution = [0.4, 0.3, 0.2, 0.05, 0.05]
iterations = 300

[coreset]
cce_count = 24

[search_space]
candidates = [6, 6, 4, 2, 1]

[sweep]
axis = "ue_count"
points = [2, 4, 8]
"#;

#[test]
fn simulate_writes_to_env_out_dir() {
    let dir = tempfile::tempdir().unwrap();
    let file = write(dir.path(), "small.toml", SMALL);
    let out = pdcch_sim(&["simulate", &file, "--seed", "9"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(dir.path().join("small.csv")).unwrap();
    let records = read_results(&text, OutputFormat::Csv).unwrap();
    assert_eq!(records.len(), 1);
    assert_eq!(records[0].seed, 9);
    assert_eq!(records[0].iterations, 300);
    assert_eq!(records[0].blocked + records[0].scheduled, 6 * 300);
}

#[test]
fn sweep_json_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let file = write(dir.path(), "small.toml", SMALL);
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for path in [&a, &b] {
        let out = pdcch_sim(&["sweep", &file, "--format", "json", "--out", path.to_str().unwrap()], dir.path());
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text, std::fs::read_to_string(&b).unwrap());
    let records = read_results(&text, OutputFormat::Json).unwrap();
    let points: Vec<&str> = records.iter().map(|r| r.point.as_str()).collect();
    assert_eq!(points, ["2", "4", "8"]);
}

#[test]
fn iterations_flag_overrides_file() {
    let dir = tempfile::tempdir().unwrap();
    let file = write(dir.path(), "small.toml", SMALL);
    let out = pdcch_sim(&["simulate", &file, "--iterations", "7"], dir.path());
    assert!(out.status.success());
    let text = std::fs::read_to_string(dir.path().join("small.csv")).unwrap();
    assert_eq!(read_results(&text, OutputFormat::Csv).unwrap()[0].iterations, 7);
}

#[test]
fn invalid_input_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let unknown = write(dir.path(), "bad.toml", &SMALL.replace("ue_count = 6", "ue_count = 6\ncolour = 1"));
    let out = pdcch_sim(&["simulate", &unknown], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("colour"));

    let bad_sum = write(dir.path(), "sum.toml", &SMALL.replace("0.05, 0.05]", "0.05, 0.5]"));
    assert_eq!(pdcch_sim(&["simulate", &bad_sum], dir.path()).status.code(), Some(1));

    assert_eq!(pdcch_sim(&["simulate", "no/such/file.toml"], dir.path()).status.code(), Some(1));

    let no_sweep = write(dir.path(), "plain.toml", SMALL.split("[sweep]").next().unwrap());
    assert_eq!(pdcch_sim(&["sweep", &no_sweep], dir.path()).status.code(), Some(1));
}

#[test]
fn unwritable_output_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let file = write(dir.path(), "small.toml", SMALL);
    let blocker = write(dir.path(), "blocker", "");
    let target = format!("{blocker}/out.csv");
    let out = pdcch_sim(&["simulate", &file, "--out", &target], dir.path());
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn plan_and_limits() {
    let dir = tempfile::tempdir().unwrap();
    let plan = write(
        dir.path(),
        "plan.toml",
        r#"
name = "p"
ue_counts = [3]
targets = [0.2]
al_distribution = [0.05, 0.2, 0.5, 0.2, 0.05]
cce_min = 1
cce_max = 64
iterations = 200

[search_space]
candidates = [6, 6, 4, 2, 1]
"#,
    );
    let out = pdcch_sim(&["plan", &plan], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("p.csv")).unwrap();
    assert!(csv.starts_with("scenario,ue_count,target_blocking,min_cces"));

    let out = pdcch_sim(&["validate-limits", "baseline", "--scs", "120"], dir.path());
    assert!(out.status.success());
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["max_blind_decodes"], 20);
    assert_eq!(report["blind_decodes"], 19);

    assert_eq!(pdcch_sim(&["validate-limits", "baseline", "--scs", "45"], dir.path()).status.code(), Some(1));
}

#[test]
fn show_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let out = pdcch_sim(&["show", "fig9_bd_capability"], dir.path());
    assert!(out.status.success());
    let once = String::from_utf8(out.stdout).unwrap();
    let file = write(dir.path(), "again.toml", &once);
    let twice = String::from_utf8(pdcch_sim(&["show", &file], dir.path()).stdout).unwrap();
    assert_eq!(once, twice);
}
