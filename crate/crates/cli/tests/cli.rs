use std::path::Path;
use std::process::{Command, Output};

fn logsift(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_logsift"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let o = logsift(dir, args);
    assert!(
        o.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&o.stderr)
    );
    String::from_utf8(o.stdout).unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn pipeline(dir: &Path, threads: &str) {
    ok(dir, &["--threads", threads, "gen", "--templates", "40", "--lines", "4000", "--out", "c"]);
    ok(dir, &["--threads", threads, "signatures", "c/corpus.log", "--out", "groups.jsonl"]);
    ok(dir, &["--threads", threads, "templates", "--groups", "groups.jsonl", "--mode", "heuristic", "--out", "tpl.txt"]);
    ok(dir, &["--threads", threads, "parse", "--templates", "tpl.txt", "c/corpus.log", "--out", "events.jsonl"]);
}

#[test]
fn heuristic_templates_cover_the_generating_corpus() {
    let d = tempfile::tempdir().unwrap();
    pipeline(d.path(), "2");
    let groups = std::fs::read_to_string(d.path().join("groups.jsonl")).unwrap();
    assert!(groups.lines().count() <= 80);
    let report = ok(d.path(), &["coverage", "--templates", "tpl.txt", "c/corpus.log"]);
    let v: serde_json::Value = serde_json::from_str(&report).unwrap();
    assert_eq!(v["coverage_pct"], 100.0);
    assert_eq!(v["total"], 4000);
    let fp = ok(d.path(), &["mine", "fingerprint", "--events", "events.jsonl", "--templates", "tpl.txt"]);
    assert!(fp.lines().count() - 1 <= 40);
}

#[test]
fn one_thread_reproduces_parallel_output() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    pipeline(a.path(), "1");
    pipeline(b.path(), "3");
    for f in ["c/corpus.log", "groups.jsonl", "tpl.txt", "events.jsonl"] {
        let x = std::fs::read(a.path().join(f)).unwrap();
        let y = std::fs::read(b.path().join(f)).unwrap();
        assert!(x == y, "{f} differs");
    }
}

#[test]
fn seed_changes_the_corpus() {
    let d = tempfile::tempdir().unwrap();
    ok(d.path(), &["--seed", "1", "gen", "--templates", "3", "--lines", "10", "--out", "a"]);
    ok(d.path(), &["--seed", "2", "gen", "--templates", "3", "--lines", "10", "--out", "b"]);
    let a = std::fs::read(d.path().join("a/corpus.log")).unwrap();
    let b = std::fs::read(d.path().join("b/corpus.log")).unwrap();
    assert_ne!(a, b);
}

#[test]
fn empty_template_file_is_a_data_error() {
    let d = tempfile::tempdir().unwrap();
    std::fs::write(d.path().join("empty.txt"), "# nothing\n").unwrap();
    std::fs::write(d.path().join("x.log"), "hello 1\n").unwrap();
    let o = logsift(d.path(), &["coverage", "--templates", "empty.txt", "x.log"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("template set is empty"));
}

#[test]
fn usage_errors_exit_one() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(code(&logsift(d.path(), &["coverage", "--bogus"])), 1);
    assert_eq!(code(&logsift(d.path(), &["coverage", "--templates", "missing.txt"])), 1);
    assert_eq!(code(&logsift(d.path(), &["gen", "--templates", "5", "--lines", "2"])), 1);
    assert_eq!(code(&logsift(d.path(), &["--threads", "0", "peft-demo"])), 1);
    assert_eq!(code(&logsift(d.path(), &["--help"])), 0);
}

#[test]
fn unreachable_endpoint_exits_three() {
    let d = tempfile::tempdir().unwrap();
    ok(d.path(), &["gen", "--templates", "2", "--lines", "20", "--out", "c"]);
    ok(d.path(), &["signatures", "c/corpus.log", "--out", "g.jsonl"]);
    std::fs::write(
        d.path().join("run.toml"),
        "[llm]\nbase_url = \"http://127.0.0.1:9/v1\"\ntimeout = 2\nretry_limit = 0\n",
    )
    .unwrap();
    let o = logsift(
        d.path(),
        &["--config", "run.toml", "templates", "--groups", "g.jsonl", "--mode", "llm"],
    );
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn overlapping_jobs_are_rejected() {
    let d = tempfile::tempdir().unwrap();
    std::fs::write(
        d.path().join("jobs.csv"),
        "job_id,account,start_epoch,end_epoch,node_list\n1,chem,0,100,frontier[0001-0002]\n2,phys,50,150,frontier0002\n",
    )
    .unwrap();
    std::fs::write(d.path().join("ev.jsonl"), "").unwrap();
    let o = logsift(d.path(), &["mine", "jobs", "--events", "ev.jsonl", "--jobs", "jobs.csv"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("overlapping"));
}

#[test]
fn analytics_and_report() {
    let d = tempfile::tempdir().unwrap();
    pipeline(d.path(), "2");
    let p = d.path();
    // corpus spans 2025-01-01 .. +28 days on hosts frontier00001..00256
    let mut jobs = String::from("job_id,account,start_epoch,end_epoch,node_list\n");
    for (i, acct) in ["chem", "phys", "bio", "climate"].iter().enumerate() {
        let start = 1_735_689_600 + i as i64 * 7 * 86_400;
        jobs.push_str(&format!(
            "{i},{acct},{start},{},frontier[00001-00256]\n",
            start + 7 * 86_400
        ));
    }
    std::fs::write(p.join("jobs.csv"), jobs).unwrap();
    let joined = ok(p, &["mine", "jobs", "--events", "events.jsonl", "--jobs", "jobs.csv"]);
    assert_eq!(joined.lines().count(), 4000);
    assert!(joined.lines().all(|l| l.contains("\"matched\":true")));

    let sev = ok(p, &["mine", "severity", "--events", "events.jsonl"]);
    let total: f64 = sev.lines().skip(1).map(|l| l.rsplit(',').next().unwrap().parse::<f64>().unwrap()).sum();
    assert!((total - 100.0).abs() < 0.01);

    let hist = ok(p, &["mine", "temporal", "--events", "events.jsonl", "--templates", "tpl.txt", "--cdf-out", "cdf.csv"]);
    let counted: u64 = hist
        .lines()
        .skip(1)
        .flat_map(|l| l.split(',').skip(1).map(|c| c.parse::<u64>().unwrap()).collect::<Vec<_>>())
        .sum();
    assert_eq!(counted, 4000);
    let cdf = std::fs::read_to_string(p.join("cdf.csv")).unwrap();
    assert!(cdf.lines().last().unwrap().split(',').skip(1).all(|v| v == "1.000000"));

    ok(p, &["mine", "cluster", "--events", "events.jsonl", "--jobs", "jobs.csv", "--templates", "tpl.txt", "--out", "cl"]);
    for f in ["matrix.csv", "matrix_ordered.csv", "row_order.txt", "col_order.txt", "dendrograms.json"] {
        assert!(p.join("cl").join(f).exists(), "{f}");
    }
    let ordered = ok(p, &["mine", "cluster", "--matrix", "cl/matrix.csv"]);
    assert_eq!(ordered, std::fs::read_to_string(p.join("cl/matrix_ordered.csv")).unwrap());

    std::fs::write(p.join("pairs.csv"), "sender,receiver\n1,2\n2,3\n3,1\n10,12\n").unwrap();
    let grid = ok(p, &["mine", "kde", "--pairs", "pairs.csv", "--grid", "20x10"]);
    assert_eq!(grid.lines().count(), 1 + 200);

    ok(p, &["report", "--events", "events.jsonl", "--templates", "tpl.txt", "--jobs", "jobs.csv", "--out", "rep"]);
    for f in ["fingerprint.tsv", "severity.csv", "severity.svg", "temporal.csv", "cdf.csv", "cdf.svg", "heatmap.svg"] {
        let text = std::fs::read_to_string(p.join("rep").join(f)).unwrap();
        assert!(!text.is_empty(), "{f}");
        if f.ends_with(".svg") {
            assert!(text.starts_with("<svg") && !text.contains("href"));
        }
    }
}

#[test]
fn perturb_reports_seven_rows() {
    let d = tempfile::tempdir().unwrap();
    let p = d.path();
    ok(p, &["gen", "--templates", "30", "--lines", "3000", "--out", "c"]);
    let csv = ok(p, &["perturb", "--templates", "c/gold_templates.txt", "c/corpus.log", "--patterns", "20", "--failures", "f.jsonl"]);
    assert_eq!(csv.lines().count(), 1 + 7);
    let gold = ok(p, &["perturb", "--templates", "c/gold_templates.txt", "c/corpus.log", "--kinds", "param-change", "--extractor", "gold"]);
    assert!(gold.lines().nth(1).unwrap().starts_with("Param Change,100.0%"));
}

#[test]
fn peft_demo_prints_the_worked_example() {
    let d = tempfile::tempdir().unwrap();
    let out = ok(d.path(), &["peft-demo", "--random", "6,5,2"]);
    assert!(out.contains("dW = [[6, 8], [12, 16]]"));
    assert!(out.contains("rank(dW) = 2"));
}
