mod common;

use std::collections::HashSet;

use dgkit::evalharness::{
    aggregate_annotations, annotate, compare_runs, load_session, round2, sample_tasks, tasks_from, Assertion, HarnessError,
    ModelSummary, RunManifest, RunSet, SampleSpec,
};
use dgkit::jsonl;
use dgkit::metrics::{DistractorRecord, Pairing};

fn write_jsonl(path: &std::path::Path, recs: &[DistractorRecord]) {
    std::fs::write(path, jsonl::to_string(recs).unwrap()).unwrap();
}

fn prediction_set(dir: &std::path::Path) -> RunSet {
    let refs: Vec<DistractorRecord> = jsonl::read_str(&common::read_data("golden_ref.jsonl")).unwrap();
    let preds: Vec<DistractorRecord> = jsonl::read_str(&common::read_data("golden_pred.jsonl")).unwrap();
    write_jsonl(&dir.join("ref.jsonl"), &refs);
    write_jsonl(&dir.join("model.jsonl"), &preds);
    write_jsonl(&dir.join("oracle.jsonl"), &refs);
    RunSet {
        reference: Some("ref.jsonl".into()),
        pairing: Pairing::Positional,
        runs: vec![
            RunManifest {
                run_id: "model".into(),
                predictions: Some("model.jsonl".into()),
                ..Default::default()
            },
            RunManifest {
                run_id: "oracle".into(),
                predictions: Some("oracle.jsonl".into()),
                ..Default::default()
            },
        ],
        assertions: vec![],
    }
}

#[test]
fn verbatim_references_dominate() {
    let dir = tempfile::tempdir().unwrap();
    let set = prediction_set(dir.path());
    let asserts: Vec<Assertion> = ["bleu4_ratio>=1", "rouge_l_ratio(oracle/model)>=1", "bleu1_increasing"]
        .iter()
        .map(|s| s.parse().unwrap())
        .collect();
    let cmp = compare_runs(&set, dir.path(), &asserts).unwrap();
    assert!(cmp.all_passed(), "{:?}", cmp.assertions);
    assert_eq!(cmp.runs[1].scores["bleu4"], 100.0);
    assert!(cmp.runs[0].report.is_some());
}

#[test]
fn identical_runs_give_unit_ratios() {
    let dir = tempfile::tempdir().unwrap();
    let mut set = prediction_set(dir.path());
    set.runs[0].predictions = Some("oracle.jsonl".into());
    let cmp = compare_runs(&set, dir.path(), &[]).unwrap();
    for table in cmp.ratios.values() {
        assert!(table.iter().flatten().all(|v| *v == Some(1.0)));
    }
}

#[test]
fn missing_prediction_file_names_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let mut set = prediction_set(dir.path());
    set.runs[1].predictions = Some("nope.jsonl".into());
    let err = compare_runs(&set, dir.path(), &[]).unwrap_err();
    assert!(matches!(&err, HarnessError::RunFile { run_id, .. } if run_id == "oracle"));
    assert!(err.to_string().contains("oracle"));
}

#[test]
fn manifest_round_trips_through_json() {
    let dir = tempfile::tempdir().unwrap();
    let set = prediction_set(dir.path());
    let path = dir.path().join("runs.json");
    std::fs::write(&path, serde_json::to_string_pretty(&set).unwrap()).unwrap();
    assert_eq!(RunSet::load(&path).unwrap(), set);
}

#[test]
fn human_eval_rows_from_transcribed_cells() {
    // (row, cells short/medium/long, printed average)
    let rows = [
        ("ChatGLM3-6B", [(3.34, 2.37), (4.10, 2.62), (3.94, 2.66)], (3.79, 2.55)),
        ("GLM", [(3.02, 2.03), (3.02, 2.03), (3.79, 2.03)], (3.28, 2.03)),
        ("ft2,e2e", [(4.86, 3.20), (4.84, 3.00), (4.60, 2.90)], (4.78, 3.03)),
        ("ft3,e2e,shuf", [(4.89, 3.33), (4.88, 3.35), (4.87, 3.45)], (4.87, 3.38)),
        ("ground truth", [(5.0, 3.0), (5.0, 3.0), (5.0, 3.0)], (5.0, 3.0)),
    ];
    let mut mismatches = Vec::new();
    for (name, cells, printed) in rows {
        let avg = ModelSummary::from_cells(name, cells).average;
        let got = (round2(avg.relevance.unwrap()), round2(avg.complexity.unwrap()));
        if got != printed {
            mismatches.push((name, got, printed));
        }
    }
    // Two printed relevance averages cannot be the equal-weight mean of
    // their cells; every other cell reproduces.
    assert_eq!(
        mismatches,
        [("ft2,e2e", (4.77, 3.03), (4.78, 3.03)), ("ft3,e2e,shuf", (4.88, 3.38), (4.87, 3.38))]
    );
}

#[test]
fn annotation_session_resumes_from_file() {
    let dir = tempfile::tempdir().unwrap();
    let session = dir.path().join("session.jsonl");
    let items = common::synth::corpus(9, 3);
    let tasks = sample_tasks(&tasks_from(&items, None).unwrap(), SampleSpec([1, 1, 1]), 42).unwrap();
    assert_eq!(tasks, sample_tasks(&tasks_from(&items, None).unwrap(), SampleSpec([1, 1, 1]), 42).unwrap());

    let open = || std::fs::OpenOptions::new().create(true).append(true).open(&session).unwrap();
    let first = annotate(&tasks, "r1", "m", &HashSet::new(), "5 3\n4 2\n".as_bytes(), std::io::sink(), open()).unwrap();
    assert!(!first.completed);
    let done: HashSet<String> = load_session(&session).unwrap().into_iter().map(|r| r.item_id).collect();
    assert_eq!(done.len(), 2);
    let mut screen = Vec::new();
    let second = annotate(&tasks, "r1", "m", &done, "1 1\n".as_bytes(), &mut screen, open()).unwrap();
    assert!(second.completed);
    assert_eq!(String::from_utf8(screen).unwrap().matches("relevance complexity").count(), 1);

    let all = load_session(&session).unwrap();
    let scores: Vec<(u8, u8)> = all.iter().map(|r| (r.relevance.get(), r.complexity.get())).collect();
    assert_eq!(scores, [(5, 3), (4, 2), (1, 1)]);
    let report = aggregate_annotations(&all);
    assert_eq!(report.models.len(), 1);
    assert_eq!(report.models[0].average.n, 3);
    assert_eq!(report.models[0].average.relevance, Some((5.0 + 4.0 + 1.0) / 3.0));
}

#[test]
fn predictions_must_name_known_items() {
    let items = common::synth::corpus(3, 1);
    let preds = vec![DistractorRecord {
        item_id: "missing".into(),
        distractors: vec!["a".into(), "b".into(), "c".into()],
    }];
    assert!(matches!(tasks_from(&items, Some(&preds)), Err(HarnessError::UnknownItem(_))));
}
