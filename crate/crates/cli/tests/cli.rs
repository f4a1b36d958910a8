use std::path::Path;
use std::process::{Command, Output};

fn ranktomo(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ranktomo")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn bound_prints_value() {
    let o = ranktomo(&["bound", "--k", "4", "--n", "100"]);
    assert!(o.status.success());
    let s = stdout(&o);
    assert!(s.starts_with("[config]\ncommand = bound\n"));
    assert!(s.contains(",4,100,0.003703703703703704\n"), "{s}");
}

#[test]
fn pipeline_on_one_qubit() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.json");
    let data = path_str(&data);
    let o = ranktomo(&["simulate", "--k", "1", "--rank", "1", "--n", "300", "--seed", "4", "--out", data]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    let o = ranktomo(&["fit", "--in", data, "--rank", "2", "--restarts", "3", "--seed", "1"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("[fit]\nseed,config_hash,rank,dim,loglik"));

    let o = ranktomo(&["select", "--in", data, "--max-rank", "2", "--criterion", "both"]);
    let s = stdout(&o);
    assert!(o.status.success());
    assert!(s.contains(",BIC,1\n"), "{s}");

    let o = ranktomo(&["test", "--in", data, "--rank", "1", "--bootstrap", "20", "--alpha", "0.05"]);
    let s = stdout(&o);
    assert!(o.status.success());
    assert!(s.contains(",1,bootstrap,"), "{s}");
}

#[test]
fn same_seed_same_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.csv");
    let args = ["simulate", "--k", "2", "--rank", "2", "--n", "50", "--seed", "9", "--out", path_str(&data)];
    let a = ranktomo(&args);
    let file_a = std::fs::read(&data).unwrap();
    let b = ranktomo(&args);
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(file_a, std::fs::read(&data).unwrap());

    let sel = ["select", "--in", path_str(&data), "--seed", "2"];
    assert_eq!(ranktomo(&sel).stdout, ranktomo(&sel).stdout);
}

#[test]
fn every_table_row_carries_seed_and_hash() {
    let o = ranktomo(&["study2", "--replicates", "3", "--seed", "6", "--n-values", "20,40"]);
    assert!(o.status.success());
    let s = stdout(&o);
    let hash = s.lines().find_map(|l| l.strip_prefix("config_hash = ")).unwrap().to_string();
    let mut rows = 0;
    for section in s.split("\n[").skip(1) {
        let title = section.split(']').next().unwrap();
        if title == "summary" {
            continue;
        }
        for line in section.lines().skip(2) {
            assert!(line.starts_with(&format!("6,{hash},")), "{title}: {line}");
            rows += 1;
        }
    }
    assert!(rows > 0);
}

#[test]
fn study_resumes_to_identical_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = path_str(dir.path());
    let args = ["study2", "--replicates", "4", "--seed", "3", "--n-values", "30", "--out", out];
    let first = ranktomo(&args);
    let records = std::fs::read(dir.path().join("records.csv")).unwrap();
    let partial = dir.path().join("partial.jsonl");
    let text = std::fs::read_to_string(&partial).unwrap();
    let half: Vec<&str> = text.lines().take(5).collect();
    std::fs::write(&partial, half.join("\n") + "\n").unwrap();
    let second = ranktomo(&args);
    assert_eq!(first.stdout, second.stdout);
    assert_eq!(records, std::fs::read(dir.path().join("records.csv")).unwrap());
}

#[test]
fn validation_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "setting,outcome,count\nx,+,-1\n").unwrap();
    let missing = dir.path().join("missing.csv");
    let incomplete = dir.path().join("inc.csv");
    std::fs::write(&incomplete, "setting,outcome,count\nxx,++,3\nzz,--,2\n").unwrap();
    let cases: Vec<Vec<&str>> = vec![
        vec!["fit", "--in", path_str(&bad), "--rank", "1"],
        vec!["fit", "--in", path_str(&missing), "--rank", "1"],
        vec!["fit", "--in", path_str(&incomplete), "--rank", "1"],
        vec!["simulate", "--k", "1", "--rank", "3", "--n", "5", "--out", "x.csv"],
        vec!["bound", "--k", "0", "--n", "100"],
        vec!["test", "--in", path_str(&bad), "--rank", "1", "--alpha", "2"],
        vec!["fit", "--rank", "1"],
    ];
    for c in cases {
        let o = ranktomo(&c);
        assert_eq!(o.status.code(), Some(2), "{c:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
}
