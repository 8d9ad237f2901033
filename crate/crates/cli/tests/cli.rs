use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;
use uatest_core::dataset::{write_csv, write_schema_file, ContextPredicate, Role};
use uatest_core::synth::{generate, PlantSpec, PopulationSpec};

fn uatest(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_uatest"))
        .args(args)
        .env_remove("UATEST_SEED")
        .env_remove("RUST_LOG")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

/// 20,000 census-like users with a planted gap among Black users.
fn fixture(dir: &Path) -> (PathBuf, PathBuf) {
    let pop = PopulationSpec::census_like(20_000);
    let plant = PlantSpec {
        predicates: vec![ContextPredicate::one_of("Race", ["Black"])],
        delta: 0.25,
    };
    let data = generate(&pop, &[plant], 17).unwrap();
    let csv = dir.join("users.csv");
    write_csv(std::fs::File::create(&csv).unwrap(), &data).unwrap();
    let mut schema = data.schema().to_vec();
    for a in &mut schema {
        a.role = match a.name.as_str() {
            "Income" => Role::Protected,
            "Output" => Role::Output,
            "Gender" => Role::Explanatory,
            _ => Role::Contextual,
        };
    }
    let schema_path = dir.join("schema.json");
    write_schema_file(&schema_path, &schema).unwrap();
    (csv, schema_path)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn testing_prints_text_report() {
    let dir = TempDir::new().unwrap();
    let (csv, _) = fixture(dir.path());
    let o = uatest(&["testing", "--data", s(&csv), "--protected", "Income", "--output", "Output", "--context", "State,Race", "--seed", "1"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.starts_with("Report of associations of O=Output on S=Income:"), "{out}");
    assert!(out.contains("Global Population of size 10,000"), "{out}");
    assert!(out.contains("Race: Black"), "{out}");
}

#[test]
fn schema_roles_fill_in_missing_flags() {
    let dir = TempDir::new().unwrap();
    let (csv, schema) = fixture(dir.path());
    let report = dir.path().join("report.json");
    let o = uatest(&["testing", "--data", s(&csv), "--schema", s(&schema), "--format", "json", "--out", s(&report)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(o.stdout.is_empty());
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    let echo = &json[0]["investigation"];
    assert_eq!(echo["protected"], "Income");
    assert_eq!(echo["contextual"], serde_json::json!(["State", "Race"]));
}

#[test]
fn debug_without_state_is_an_error() {
    let dir = TempDir::new().unwrap();
    let missing = dir.path().join("none.json");
    let o = uatest(&["debug", "--state", s(&missing), "--explanatory", "Gender"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("no saved investigation"), "{}", stderr(&o));
}

#[test]
fn debug_consumes_budget_until_exhausted() {
    let dir = TempDir::new().unwrap();
    let (csv, _) = fixture(dir.path());
    let state = dir.path().join("state.json");
    let o = uatest(&[
        "testing", "--data", s(&csv), "--protected", "Income", "--output", "Output", "--context", "State,Race", "--budget", "2", "--state",
        s(&state),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let saved: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&state).unwrap()).unwrap();
    assert_eq!((saved["budget"].as_u64(), saved["consumed"].as_u64()), (Some(2), Some(1)));

    let o = uatest(&["debug", "--state", s(&state), "--explanatory", "Gender"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("conditioned on explanatory attribute E=Gender:"), "{}", stdout(&o));
    let saved: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&state).unwrap()).unwrap();
    assert_eq!(saved["consumed"].as_u64(), Some(2));

    let o = uatest(&["debug", "--state", s(&state), "--explanatory", "Gender"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("budget exhausted"), "{}", stderr(&o));
}

#[test]
fn debug_rejects_changed_data() {
    let dir = TempDir::new().unwrap();
    let (csv, _) = fixture(dir.path());
    let state = dir.path().join("state.json");
    let args = ["testing", "--data", s(&csv), "--protected", "Income", "--output", "Output", "--budget", "2", "--state", s(&state)];
    assert_eq!(uatest(&args).status.code(), Some(0));
    let text = std::fs::read_to_string(&csv).unwrap();
    let truncated: Vec<&str> = text.lines().take(15_000).collect();
    std::fs::write(&csv, truncated.join("\n") + "\n").unwrap();
    let o = uatest(&["debug", "--state", s(&state), "--explanatory", "Gender"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("no longer matches"), "{}", stderr(&o));
}

#[test]
fn outputs_are_byte_identical_across_runs_and_threads() {
    let dir = TempDir::new().unwrap();
    let (csv, schema) = fixture(dir.path());
    let run = |threads: &str| {
        let o = uatest(&["--threads", threads, "testing", "--data", s(&csv), "--schema", s(&schema), "--format", "json", "--seed", "5"]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        o.stdout
    };
    let one = run("1");
    assert_eq!(one, run("1"));
    assert_eq!(one, run("3"));
}

#[test]
fn seed_falls_back_to_environment() {
    let dir = TempDir::new().unwrap();
    let (csv, schema) = fixture(dir.path());
    let base = ["testing", "--data", s(&csv), "--schema", s(&schema), "--format", "json"];
    let flagged = uatest(&[&base[..], &["--seed", "9"]].concat());
    let from_env = Command::new(env!("CARGO_BIN_EXE_uatest")).args(base).env("UATEST_SEED", "9").output().unwrap();
    assert_eq!(from_env.status.code(), Some(0));
    assert_eq!(flagged.stdout, from_env.stdout);
}

#[test]
fn bench_writes_detection_csv() {
    let o = uatest(&["bench", "--n", "100000", "--plants", "10", "--delta", "0.15", "--seed", "3"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    let mut lines = out.lines();
    assert_eq!(lines.next(), Some("delta,size,recall,false_discoveries,seed"));
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row[0], "0.15");
    assert_eq!(row[4], "3");
    let recall: f64 = row[2].parse().unwrap();
    assert!(recall >= 0.9, "recall {recall}");
    assert_eq!(row[3], "0");
    assert_eq!(lines.next(), None);
}

#[test]
fn tree_vs_itemsets_reports_both_strategies() {
    let o = uatest(&["tree-vs-itemsets", "--n", "8000", "--min-size", "250", "--max-depth", "3", "--seed", "2"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    let rows: Vec<Vec<&str>> = out.lines().map(|l| l.split(',').collect()).collect();
    assert_eq!(rows[0], ["strategy", "candidates_considered", "top3_mean_association"]);
    assert_eq!((rows[1][0], rows[2][0]), ("tree", "itemsets"));
    let evals = |r: &[&str]| r[1].parse::<usize>().unwrap();
    assert!(evals(&rows[1]) * 4 <= evals(&rows[2]));
}

#[test]
fn exit_codes_distinguish_usage_data_and_budget_errors() {
    let dir = TempDir::new().unwrap();
    let (csv, _) = fixture(dir.path());
    assert_eq!(uatest(&["testing", "--data", s(&csv), "--no-such-flag"]).status.code(), Some(1));
    assert_eq!(uatest(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(uatest(&["testing", "--data", s(&csv), "--protected", "Income", "--output", "Output", "--conf", "1.5"]).status.code(), Some(1));
    let missing = dir.path().join("absent.csv");
    assert_eq!(uatest(&["testing", "--data", s(&missing), "--protected", "Income", "--output", "Output"]).status.code(), Some(2));
    let o = uatest(&["testing", "--data", s(&csv), "--protected", "Salary", "--output", "Output"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("Salary"));
    assert_eq!(uatest(&["testing", "--data", s(&csv), "--protected", "Income", "--output", "Output", "--budget", "0"]).status.code(), Some(1));
}

#[test]
fn help_lists_defaults_for_every_subcommand() {
    let required: &[(&str, &[&str])] = &[
        ("testing", &["--data"]),
        ("discovery", &["--data"]),
        ("error-profile", &["--data", "--ground-truth"]),
        ("debug", &["--state", "--explanatory"]),
        ("bench", &[]),
        ("tree-vs-itemsets", &[]),
    ];
    for (sub, required) in required {
        let o = uatest(&[sub, "--help"]);
        assert_eq!(o.status.code(), Some(0));
        let help = stdout(&o);
        let mut entries: Vec<String> = Vec::new();
        for line in help.lines() {
            let t = line.trim_start();
            if t.starts_with("--") || t.starts_with("-h") {
                entries.push(t.to_string());
            } else if let Some(last) = entries.last_mut() {
                last.push_str(t);
            }
        }
        assert!(entries.len() > 3, "{sub}: {help}");
        for e in entries.iter().filter(|e| !e.starts_with("-h")) {
            let flag = e.split_whitespace().next().unwrap();
            assert!(required.contains(&flag) || e.contains("[default:"), "{sub} {flag} has no default in help");
        }
    }
}
