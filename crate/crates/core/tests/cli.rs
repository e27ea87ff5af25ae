mod common;

use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::Instant;

use hawkfeed::io::{self, SimSpec};
use tempfile::TempDir;

fn hawkfeed(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hawkfeed"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(out: &Output) -> String {
    assert!(
        out.status.success(),
        "exit {:?}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

struct Fixture {
    dir: TempDir,
}

impl Fixture {
    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    /// Simulates 50 cascades with 3 pair and 3 content features, then splits them 35/15.
    fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        let mut r = common::rng(21);
        let users = common::users(10);
        let store = common::random_store(&mut r, &users, 3, 3);
        let params = common::params(
            vec![0.2, 0.0, 0.1],
            vec![0.0, 0.1, 0.0],
            vec![0.006, 0.0, 0.004],
            vec![0.0, 0.005, 0.0],
            0.1,
            0.5,
        );
        let spec = SimSpec {
            n_cascades: 50,
            horizon: 60.0,
            event_cap: 10_000,
            post_interval: 5.0,
            group: "sim".into(),
            seed: 3,
            users: None,
            params,
            features: store,
        };
        let f = Fixture { dir };
        io::write_json(&f.path("spec.json"), &spec).unwrap();
        f
    }

    fn simulate(&self, seed: Option<&str>, out: &str) -> Output {
        let mut args = vec!["simulate", "--config"];
        let spec = self.path("spec.json");
        let out = self.path(out);
        let feats = self.path("features.json");
        args.push(p(&spec));
        args.extend(["--out", p(&out), "--features-out", p(&feats)]);
        if let Some(s) = seed {
            args.extend(["--seed", s]);
        }
        hawkfeed(&args)
    }

    fn split(&self, all: &str) {
        let text = std::fs::read_to_string(self.path(all)).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        std::fs::write(self.path("train.jsonl"), lines[..35].join("\n") + "\n").unwrap();
        std::fs::write(self.path("test.jsonl"), lines[35..].join("\n") + "\n").unwrap();
    }
}

#[test]
fn simulate_fit_evaluate_end_to_end() {
    let start = Instant::now();
    let f = Fixture::new();
    ok(&f.simulate(None, "all.jsonl"));
    f.split("all.jsonl");
    let (train, test, feats, model) = (
        f.path("train.jsonl"),
        f.path("test.jsonl"),
        f.path("features.json"),
        f.path("model.json"),
    );
    ok(&hawkfeed(&[
        "fit",
        "--corpus",
        p(&train),
        "--features",
        p(&feats),
        "--zeta",
        "0",
        "--omega-mu",
        "0.1",
        "--omega-a",
        "0.5",
        "--out",
        p(&model),
    ]));
    let fitted = io::load_model(&model).unwrap();
    assert!(fitted.params.theta().iter().all(|&w| w >= 0.0));

    for ranker in ["HWK-ALL", "RCHR", "NN"] {
        let report = f.path(&format!("{ranker}.jsonl"));
        let out = hawkfeed(&[
            "evaluate",
            "--ranker",
            ranker,
            "--model",
            p(&model),
            "--train",
            p(&train),
            "--test",
            p(&test),
            "--features",
            p(&feats),
            "--out",
            p(&report),
        ]);
        ok(&out);
        let stderr = String::from_utf8_lossy(&out.stderr);
        assert_eq!(
            ranker != "HWK-ALL",
            stderr.contains("ignoring"),
            "{ranker}: {stderr}"
        );
        let rows: Vec<serde_json::Value> = io::read_jsonl(&report).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0]["group"], "sim");
        assert_eq!(rows[0]["ranker"], ranker);
        let ave = rows[0]["ave_rank"].as_f64().unwrap();
        assert!(ave >= 0.0 && ave.is_finite());
    }
    assert!(start.elapsed().as_secs() < 60);
}

#[test]
fn seed_flag_controls_simulation() {
    let f = Fixture::new();
    ok(&f.simulate(Some("9"), "a.jsonl"));
    ok(&f.simulate(Some("9"), "b.jsonl"));
    ok(&f.simulate(Some("10"), "c.jsonl"));
    let read = |n: &str| std::fs::read_to_string(f.path(n)).unwrap();
    assert_eq!(read("a.jsonl"), read("b.jsonl"));
    assert_ne!(read("a.jsonl"), read("c.jsonl"));
}

#[test]
fn rank_before_any_post_is_empty() {
    let f = Fixture::new();
    ok(&f.simulate(None, "all.jsonl"));
    let (all, feats, model) = (
        f.path("all.jsonl"),
        f.path("features.json"),
        f.path("model.json"),
    );
    ok(&hawkfeed(&[
        "fit",
        "--corpus",
        p(&all),
        "--features",
        p(&feats),
        "--omega-mu",
        "0.1",
        "--omega-a",
        "0.5",
        "--out",
        p(&model),
    ]));
    let rank = |t: &str| {
        let out = ok(&hawkfeed(&[
            "rank",
            "--model",
            p(&model),
            "--features",
            p(&feats),
            "--corpus",
            p(&all),
            "--user",
            "u1",
            "--t",
            t,
        ]));
        serde_json::from_str::<Vec<serde_json::Value>>(out.trim()).unwrap()
    };
    assert!(rank("-1").is_empty());
    let mid = rank("30");
    assert!(!mid.is_empty());
    for (i, item) in mid.iter().enumerate() {
        assert_eq!(item["rank"], i);
    }
}

#[test]
fn unknown_ranker_is_a_usage_error() {
    let f = Fixture::new();
    ok(&f.simulate(None, "all.jsonl"));
    let (all, feats, out) = (
        f.path("all.jsonl"),
        f.path("features.json"),
        f.path("r.jsonl"),
    );
    let res = hawkfeed(&[
        "evaluate",
        "--ranker",
        "PAGERANK",
        "--train",
        p(&all),
        "--test",
        p(&all),
        "--features",
        p(&feats),
        "--out",
        p(&out),
    ]);
    assert_eq!(res.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&res.stderr);
    assert!(
        stderr.contains("HWK-ALL") && stderr.contains("COX-PSY"),
        "{stderr}"
    );
}

#[test]
fn malformed_corpus_reports_its_line() {
    let f = Fixture::new();
    ok(&f.simulate(None, "all.jsonl"));
    let text = std::fs::read_to_string(f.path("all.jsonl")).unwrap();
    let mut lines: Vec<String> = text.lines().take(3).map(String::from).collect();
    lines[2] = "{\"cascade_id\": 7".into();
    let bad = f.path("bad.jsonl");
    std::fs::write(&bad, lines.join("\n")).unwrap();
    let (feats, out) = (f.path("features.json"), f.path("m.json"));
    let res = hawkfeed(&[
        "fit",
        "--corpus",
        p(&bad),
        "--features",
        p(&feats),
        "--out",
        p(&out),
    ]);
    assert_eq!(res.status.code(), Some(4));
    let stderr = String::from_utf8_lossy(&res.stderr);
    assert!(stderr.contains("bad.jsonl:3"), "{stderr}");
}
