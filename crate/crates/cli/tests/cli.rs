use std::io::Write;
use std::path::Path;
use std::process::{Command, Output, Stdio};

use serde_json::{json, Value};

fn dgkit(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dgkit"))
        .current_dir(dir)
        .args(args)
        .output()
        .unwrap()
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = dgkit(dir, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn lines(path: &Path) -> Vec<Value> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

fn write_lines(path: &Path, values: &[Value]) {
    let mut f = std::fs::File::create(path).unwrap();
    for v in values {
        writeln!(f, "{v}").unwrap();
    }
}

const QUESTIONS: [&str; 4] = ["下列说法正确的是？", "小明为什么要去图书馆？", "根据文章，小明最可能是？", "文章主要讲了什么？"];

fn raw_corpus(dir: &Path, n: usize) {
    let mut recs = Vec::new();
    for i in 0..n {
        recs.push(json!({
            "context": "小明每天早上七点起床，然后去学校读书。".repeat(1 + i % 3),
            "question": QUESTIONS[i % 4],
            "options": [format!("选项甲{i}"), format!("选项乙{i}"), format!("选项丙{i}"), format!("选项丁{i}")],
            "answer_index": i % 4,
        }));
    }
    recs.push(json!({"context": "天很蓝。", "question": "对吗？", "options": ["对", "错"], "answer_index": 0}));
    write_lines(&dir.join("raw.jsonl"), &recs);
}

#[test]
fn pipeline_from_raw_to_plan() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    raw_corpus(d, 12);
    ok(d, &["ingest", "--format", "generic", "-o", "ingested.jsonl", "raw.jsonl"]);
    assert_eq!(lines(&d.join("ingested.jsonl")).len(), 13);

    ok(d, &["clean", "-i", "ingested.jsonl", "-o", "clean.jsonl", "--report", "report.json"]);
    let report: Value = serde_json::from_str(&std::fs::read_to_string(d.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["dropped_true_false"], 1);
    assert_eq!(report["total_out"], 12);

    ok(d, &["split", "-i", "clean.jsonl", "--out-dir", "split", "--seed", "7"]);
    let sizes: Vec<usize> = ["train", "dev", "test"]
        .iter()
        .map(|s| lines(&d.join(format!("split/{s}.jsonl"))).len())
        .collect();
    assert_eq!(sizes.iter().sum::<usize>(), 12);
    ok(d, &["split", "-i", "clean.jsonl", "--out-dir", "again", "--manifest", "split/manifest.json"]);
    for s in ["train", "dev", "test"] {
        assert_eq!(lines(&d.join(format!("split/{s}.jsonl"))), lines(&d.join(format!("again/{s}.jsonl"))));
    }

    let stats: Value = serde_json::from_str(&ok(d, &["stats", "-i", "clean.jsonl"])).unwrap();
    assert_eq!(stats["n_items"], 12);

    ok(d, &["classify", "-i", "clean.jsonl", "-o", "tagged.jsonl"]);
    ok(d, &["forge", "-i", "tagged.jsonl", "--strategy", "ft2", "-o", "stems.jsonl"]);
    let stems = lines(&d.join("stems.jsonl"));
    assert_eq!(stems.iter().filter(|s| s["task"] == "DG").count(), 12);

    ok(d, &["forge", "-i", "tagged.jsonl", "--dg-only", "-o", "dg.jsonl"]);
    ok(d, &["expand", "-i", "dg.jsonl", "--shuffle", "--seed", "3", "-o", "ex.jsonl"]);
    assert_eq!(lines(&d.join("ex.jsonl")).len(), 72);
    ok(d, &["expand", "-i", "dg.jsonl", "--pattern", "seq", "-o", "seq.jsonl"]);
    assert_eq!(lines(&d.join("seq.jsonl")).len(), 36);

    ok(d, &["plan", "-i", "ex.jsonl", "--seed", "1", "-o", "plan.jsonl"]);
    assert_eq!(lines(&d.join("plan.jsonl")).len(), 72);
}

fn eval_files(d: &Path) {
    let refs = vec![
        json!({"item_id": "a", "distractors": ["北京大学", "上海市", "图书馆"]}),
        json!({"item_id": "b", "distractors": ["他很高兴", "天气很好", "我们回家"]}),
    ];
    let rotated = vec![
        json!({"item_id": "a", "distractors": ["北京大学", "上海市", "图书馆"]}),
        json!({"item_id": "b", "distractors": ["天气很好", "我们回家", "他很高兴"]}),
    ];
    write_lines(&d.join("ref.jsonl"), &refs);
    write_lines(&d.join("same.jsonl"), &refs);
    write_lines(&d.join("rotated.jsonl"), &rotated);
}

#[test]
fn eval_best_match_recovers_rotation() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    eval_files(d);
    let pos: Value = serde_json::from_str(&ok(d, &["eval", "--pred", "rotated.jsonl", "--ref", "ref.jsonl"])).unwrap();
    let best: Value = serde_json::from_str(&ok(
        d,
        &["eval", "--pred", "rotated.jsonl", "--ref", "ref.jsonl", "--pairing", "best_match", "--per-record"],
    ))
    .unwrap();
    assert!(pos["bleu4"].as_f64().unwrap() < 100.0);
    assert_eq!(best["bleu4"], 100.0);
    assert_eq!(best["per_record"].as_array().unwrap().len(), 2);
    assert!(pos.get("per_record").is_none());
}

#[test]
fn eval_reports_missing_reference() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    eval_files(d);
    write_lines(&d.join("extra.jsonl"), &[json!({"item_id": "zz", "distractors": ["一", "二", "三"]})]);
    let out = dgkit(d, &["eval", "--pred", "extra.jsonl", "--ref", "ref.jsonl"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("zz"));
}

#[test]
fn compare_exit_code_follows_assertions() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    eval_files(d);
    let set = json!({
        "reference": "ref.jsonl",
        "runs": [
            {"run_id": "rotated", "predictions": "rotated.jsonl"},
            {"run_id": "same", "predictions": "same.jsonl"},
        ],
        "assertions": ["bleu4_ratio>=1"],
    });
    std::fs::create_dir(d.join("runs")).unwrap();
    for f in ["ref.jsonl", "same.jsonl", "rotated.jsonl"] {
        std::fs::copy(d.join(f), d.join("runs").join(f)).unwrap();
    }
    std::fs::write(d.join("runs/set.json"), set.to_string()).unwrap();

    let pass = dgkit(d, &["compare", "--runs", "runs/set.json"]);
    assert!(pass.status.success(), "{}", String::from_utf8_lossy(&pass.stderr));
    let fail = dgkit(d, &["compare", "--runs", "runs/set.json", "--assert", "bleu4_ratio(rotated/same)>=1"]);
    assert_eq!(fail.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&fail.stderr).contains("FAIL"));
    let bad = dgkit(d, &["compare", "--runs", "runs/set.json", "--assert", "bleu9_ratio>1"]);
    assert_eq!(bad.status.code(), Some(2));
}

fn annotate(d: &Path, rater: &str, input: &str) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_dgkit"))
        .current_dir(d)
        .args([
            "annotate", "--items", "clean.jsonl", "--rater", rater, "--model", "m1", "--sample", "1,1,1", "--seed", "5",
            "--session", "ann/session.jsonl",
        ])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(input.as_bytes()).unwrap();
    child.wait_with_output().unwrap()
}

#[test]
fn annotate_resumes_and_report_aggregates() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    let mut recs = Vec::new();
    for (i, reps) in [1usize, 12, 30].iter().enumerate() {
        recs.push(json!({
            "context": "小明每天早上七点起床。".repeat(*reps),
            "question": QUESTIONS[i],
            "options": ["上学", "回家", "睡觉", "吃饭"],
            "answer_index": 0,
        }));
    }
    write_lines(&d.join("raw.jsonl"), &recs);
    ok(d, &["ingest", "--format", "generic", "-o", "in.jsonl", "raw.jsonl"]);
    ok(d, &["clean", "-i", "in.jsonl", "-o", "clean.jsonl"]);
    std::fs::create_dir(d.join("ann")).unwrap();

    let first = annotate(d, "r1", "5 3\nseven\n4 2\nq\n");
    assert!(first.status.success(), "{}", String::from_utf8_lossy(&first.stderr));
    assert!(String::from_utf8_lossy(&first.stdout).contains("need two integers"));
    assert_eq!(lines(&d.join("ann/session.jsonl")).len(), 2);

    let second = annotate(d, "r1", "3 1\n");
    assert!(second.status.success());
    assert!(String::from_utf8_lossy(&second.stderr).contains("session complete"));
    let session = lines(&d.join("ann/session.jsonl"));
    assert_eq!(session.len(), 3);

    let report: Value = serde_json::from_str(&ok(d, &["report", "--annotations", "ann"])).unwrap();
    let avg = &report["models"][0]["average"];
    assert_eq!(avg["n"], 3);
    assert_eq!(avg["relevance"], 4.0);
    assert_eq!(avg["complexity"], 2.0);
    let table = ok(d, &["report", "--annotations", "ann", "--format", "table"]);
    assert!(table.contains("m1"));
    assert!(table.contains("4.00"));
}
