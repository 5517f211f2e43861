//! End-to-end tests driving the compiled binary over synthetic fixtures.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use stylerank::synth::{encode_smf, generate_notes, StyleSpec};

fn binary() -> &'static str {
    env!("CARGO_BIN_EXE_stylerank")
}

fn run(args: &[&str]) -> Output {
    Command::new(binary()).args(args).output().expect("binary runs")
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

fn write_style_dir(dir: &Path, style: &StyleSpec, count: usize, chords: usize, seed: u64) {
    std::fs::create_dir_all(dir).unwrap();
    for i in 0..count {
        let notes = generate_notes(style, chords, seed + i as u64);
        std::fs::write(dir.join(format!("{i:03}.mid")), encode_smf(&notes, 480)).unwrap();
    }
}

fn fixture_dirs(root: &Path) -> (PathBuf, PathBuf) {
    let corpus = root.join("corpus");
    let candidates = root.join("candidates");
    write_style_dir(&corpus, &StyleSpec::diatonic(), 5, 24, 100);
    std::fs::create_dir_all(&candidates).unwrap();
    for i in 0..2 {
        let notes = generate_notes(&StyleSpec::diatonic(), 24, 200 + i);
        std::fs::write(candidates.join(format!("dia{i}.mid")), encode_smf(&notes, 480)).unwrap();
    }
    for i in 0..2 {
        let notes = generate_notes(&StyleSpec::cluster_triplet(), 24, 300 + i);
        std::fs::write(candidates.join(format!("clu{i}.mid")), encode_smf(&notes, 480)).unwrap();
    }
    (corpus, candidates)
}

#[test]
fn extract_writes_one_document_per_file() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("midi");
    write_style_dir(&dir, &StyleSpec::diatonic(), 2, 16, 1);
    let out = tmp.path().join("features");
    let output = run(&[
        "extract",
        dir.to_str().unwrap(),
        "--features",
        "ChordSize",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(0));
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("000.features.json")).unwrap())
            .unwrap();
    let map = doc.as_object().unwrap();
    assert_eq!(map.len(), 1);
    assert!(map.contains_key("ChordSize"));
    // Categories are decimal strings with positive weights.
    for (_, weights) in map {
        for (category, weight) in weights.as_object().unwrap() {
            category.parse::<u64>().unwrap();
            assert!(weight.as_f64().unwrap() > 0.0);
        }
    }
}

#[test]
fn extract_isolates_corrupt_files_with_partial_exit() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("midi");
    write_style_dir(&dir, &StyleSpec::diatonic(), 2, 12, 5);
    std::fs::write(dir.join("bad.mid"), b"not a midi file").unwrap();
    let out = tmp.path().join("features");
    let output = run(&["extract", dir.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(2));
    assert!(out.join("000.features.json").exists());
    assert!(out.join("001.features.json").exists());
    assert!(!out.join("bad.features.json").exists());
    assert!(String::from_utf8_lossy(&output.stderr).contains("bad.mid"));
}

#[test]
fn empty_feature_set_is_a_usage_error_before_io() {
    let tmp = tempfile::tempdir().unwrap();
    let config = tmp.path().join("run.toml");
    std::fs::write(&config, "features = []\n").unwrap();
    // The input path does not even exist; the feature check fires first.
    let output = run(&[
        "extract",
        tmp.path().join("missing").to_str().unwrap(),
        "--config",
        config.to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&output.stderr).contains("feature set"));
}

#[test]
fn rank_is_deterministic_and_orders_same_style_first() {
    let tmp = tempfile::tempdir().unwrap();
    let (corpus, candidates) = fixture_dirs(tmp.path());
    let args = [
        "rank",
        "--corpus",
        corpus.to_str().unwrap(),
        "--candidates",
        candidates.to_str().unwrap(),
        "--trees",
        "60",
        "--seed",
        "7",
        "--features",
        "ChordPCD,ChordShape,ChordDuration,IntervalDist",
    ];
    let first = run(&args);
    assert_eq!(first.status.code(), Some(0), "{}", String::from_utf8_lossy(&first.stderr));
    let second = run(&args);
    assert_eq!(stdout(&first), stdout(&second));

    let report: serde_json::Value = serde_json::from_str(&stdout(&first)).unwrap();
    let ranking: Vec<&str> =
        report["ranking"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    assert_eq!(ranking.len(), 4);
    // Same-style candidates outrank the off-style ones.
    assert!(ranking[0].starts_with("dia") && ranking[1].starts_with("dia"), "{ranking:?}");

    // The global score is the mean of the per-feature columns.
    for (id, global) in report["perCandidate"].as_object().unwrap() {
        let row = report["perFeature"][id].as_object().unwrap();
        let mean: f64 = row.values().map(|v| v.as_f64().unwrap()).sum::<f64>() / row.len() as f64;
        assert!((global.as_f64().unwrap() - mean).abs() < 1e-12);
    }
}

#[test]
fn rank_rejects_unusable_directories() {
    let tmp = tempfile::tempdir().unwrap();
    let (corpus, _) = fixture_dirs(tmp.path());
    let empty = tmp.path().join("empty");
    std::fs::create_dir_all(&empty).unwrap();
    let output = run(&[
        "rank",
        "--corpus",
        corpus.to_str().unwrap(),
        "--candidates",
        empty.to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(1));
}

#[test]
fn filter_partitions_exactly_at_the_threshold() {
    let tmp = tempfile::tempdir().unwrap();
    let (corpus, candidates) = fixture_dirs(tmp.path());
    let report_path = tmp.path().join("report.json");
    let output = run(&[
        "rank",
        "--corpus",
        corpus.to_str().unwrap(),
        "--candidates",
        candidates.to_str().unwrap(),
        "--trees",
        "40",
        "--features",
        "ChordPCD,ChordDuration",
        "--out",
        report_path.to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(0));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report_path).unwrap()).unwrap();
    let mut scores: Vec<f64> = report["perCandidate"]
        .as_object()
        .unwrap()
        .values()
        .map(|v| v.as_f64().unwrap())
        .collect();
    scores.sort_by(f64::total_cmp);

    let filter_at = |threshold: String| -> (usize, usize) {
        let output = run(&[
            "filter",
            "--report",
            report_path.to_str().unwrap(),
            "--threshold",
            &threshold,
        ]);
        assert_eq!(output.status.code(), Some(0));
        let doc: serde_json::Value = serde_json::from_str(&stdout(&output)).unwrap();
        (doc["kept"].as_array().unwrap().len(), doc["discarded"].as_array().unwrap().len())
    };
    assert_eq!(filter_at("0".into()), (4, 0));
    assert_eq!(filter_at("1.01".into()), (0, 4));
    // A threshold between the two middle scores splits exactly there.
    if scores[1] < scores[2] {
        let mid = (scores[1] + scores[2]) / 2.0;
        assert_eq!(filter_at(mid.to_string()), (2, 2));
    }
}

#[test]
fn compare_models_emits_ordered_pairs() {
    let tmp = tempfile::tempdir().unwrap();
    let (corpus, _) = fixture_dirs(tmp.path());
    let model_a = tmp.path().join("model_a");
    let model_b = tmp.path().join("model_b");
    write_style_dir(&model_a, &StyleSpec::diatonic(), 4, 20, 400);
    write_style_dir(&model_b, &StyleSpec::cluster_triplet(), 4, 20, 500);
    let output = run(&[
        "compare-models",
        "--corpus",
        corpus.to_str().unwrap(),
        "--models",
        model_a.to_str().unwrap(),
        "--models",
        model_b.to_str().unwrap(),
        "--trees",
        "40",
        "--features",
        "ChordPCD,ChordDuration",
    ]);
    assert_eq!(output.status.code(), Some(0), "{}", String::from_utf8_lossy(&output.stderr));
    let doc: serde_json::Value = serde_json::from_str(&stdout(&output)).unwrap();
    assert_eq!(doc["comparisons"].as_array().unwrap().len(), 2);
    // The same-style model scores higher on average.
    let means = doc["means"].as_array().unwrap();
    assert!(means[0].as_f64().unwrap() > means[1].as_f64().unwrap());

    let single = run(&[
        "compare-models",
        "--corpus",
        corpus.to_str().unwrap(),
        "--models",
        model_a.to_str().unwrap(),
    ]);
    assert_eq!(single.status.code(), Some(1));
}

#[test]
fn compare_model_with_itself_is_a_null_comparison() {
    let tmp = tempfile::tempdir().unwrap();
    let (corpus, _) = fixture_dirs(tmp.path());
    let model = tmp.path().join("model");
    write_style_dir(&model, &StyleSpec::diatonic(), 4, 18, 800);
    let output = run(&[
        "compare-models",
        "--corpus",
        corpus.to_str().unwrap(),
        "--models",
        model.to_str().unwrap(),
        "--models",
        model.to_str().unwrap(),
        "--trees",
        "30",
        "--features",
        "ChordPCD",
    ]);
    assert_eq!(output.status.code(), Some(0), "{}", String::from_utf8_lossy(&output.stderr));
    let doc: serde_json::Value = serde_json::from_str(&stdout(&output)).unwrap();
    // Identical inputs embed identically: equal means, p at least one half.
    let means = doc["means"].as_array().unwrap();
    assert_eq!(means[0], means[1]);
    for comparison in doc["comparisons"].as_array().unwrap() {
        assert!(comparison["pAGreater"].as_f64().unwrap() >= 0.5);
    }
}

#[test]
fn worker_count_does_not_change_results() {
    let tmp = tempfile::tempdir().unwrap();
    let (corpus, candidates) = fixture_dirs(tmp.path());
    let output_for = |workers: &str| {
        let output = run(&[
            "rank",
            "--corpus",
            corpus.to_str().unwrap(),
            "--candidates",
            candidates.to_str().unwrap(),
            "--trees",
            "50",
            "--seed",
            "3",
            "--features",
            "ChordPCD,ChordShape",
            "--workers",
            workers,
        ]);
        assert_eq!(output.status.code(), Some(0));
        stdout(&output)
    };
    assert_eq!(output_for("1"), output_for("4"));
}

#[test]
fn dedup_flags_copies_and_passes_singletons() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("midi");
    std::fs::create_dir_all(&dir).unwrap();
    let notes = generate_notes(&StyleSpec::diatonic(), 30, 11);
    std::fs::write(dir.join("a.mid"), encode_smf(&notes, 480)).unwrap();
    std::fs::write(dir.join("b.mid"), encode_smf(&notes, 480)).unwrap();
    let other = generate_notes(&StyleSpec::cluster_triplet(), 30, 12);
    std::fs::write(dir.join("c.mid"), encode_smf(&other, 480)).unwrap();

    let output = run(&["dedup", dir.to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(0));
    let text = stdout(&output);
    assert!(text.starts_with("fileA,fileB,headDist,tailDist,removed"));
    assert!(text.contains("a.mid,b.mid,0,0,true"));

    let single = tmp.path().join("single");
    std::fs::create_dir_all(&single).unwrap();
    std::fs::write(single.join("only.mid"), encode_smf(&notes, 480)).unwrap();
    let output = run(&["dedup", single.to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(0));
    assert_eq!(stdout(&output).lines().count(), 1); // header only
}

#[test]
fn experiment1_reports_trials_and_summaries() {
    let tmp = tempfile::tempdir().unwrap();
    let style_a = tmp.path().join("style_a");
    let style_b = tmp.path().join("style_b");
    write_style_dir(&style_a, &StyleSpec::diatonic(), 8, 16, 600);
    write_style_dir(&style_b, &StyleSpec::cluster_triplet(), 4, 16, 700);
    let args = [
        "experiment1",
        "--style-a",
        style_a.to_str().unwrap(),
        "--style-b",
        style_b.to_str().unwrap(),
        "--sizes",
        "3",
        "--trials",
        "2",
        "--trees",
        "30",
        "--features",
        "ChordPCD,ChordDuration",
    ];
    let output = run(&args);
    assert_eq!(output.status.code(), Some(0), "{}", String::from_utf8_lossy(&output.stderr));
    assert_eq!(stdout(&run(&args)), stdout(&output), "trial batches must be reproducible");
    let text = stdout(&output);
    let trial_rows = text.lines().filter(|l| l.contains(",trial,")).count();
    let summary_rows = text.lines().filter(|l| l.contains(",summary,")).count();
    assert_eq!(trial_rows, 4 * 2); // 4 methods x 2 trials
    assert_eq!(summary_rows, 4);

    // Not enough files for the requested size: usage error.
    let output = run(&[
        "experiment1",
        "--style-a",
        style_a.to_str().unwrap(),
        "--style-b",
        style_b.to_str().unwrap(),
        "--sizes",
        "5",
        "--trials",
        "1",
    ]);
    assert_eq!(output.status.code(), Some(1));
}

#[test]
fn experiment2_matches_counts_to_files() {
    let tmp = tempfile::tempdir().unwrap();
    let (corpus, candidates) = fixture_dirs(tmp.path());
    let counts = tmp.path().join("counts.csv");
    std::fs::write(
        &counts,
        "sampleId,nMiss,nCorr\nclu0,10,90\nclu1,20,80\ndia0,80,20\ndia1,70,30\n",
    )
    .unwrap();
    let output = run(&[
        "experiment2",
        "--corpus",
        corpus.to_str().unwrap(),
        "--generated",
        candidates.to_str().unwrap(),
        "--counts",
        counts.to_str().unwrap(),
        "--trees",
        "40",
        "--features",
        "ChordPCD,ChordDuration",
    ]);
    assert_eq!(output.status.code(), Some(0), "{}", String::from_utf8_lossy(&output.stderr));
    let doc: serde_json::Value = serde_json::from_str(&stdout(&output)).unwrap();
    // Four alpha columns by default.
    assert_eq!(doc["stylerank"].as_array().unwrap().len(), 4);
    assert_eq!(doc["random"].as_array().unwrap().len(), 4);
    let alphas: Vec<f64> = doc["stylerank"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["alpha"].as_f64().unwrap())
        .collect();
    assert_eq!(alphas, vec![5.0, 0.5, 0.05, 0.005]);

    // Mismatched ids are listed in a usage error.
    std::fs::write(&counts, "sampleId,nMiss,nCorr\nwrong,1,1\n").unwrap();
    let output = run(&[
        "experiment2",
        "--corpus",
        corpus.to_str().unwrap(),
        "--generated",
        candidates.to_str().unwrap(),
        "--counts",
        counts.to_str().unwrap(),
        "--trees",
        "20",
        "--features",
        "ChordPCD",
    ]);
    assert_eq!(output.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&output.stderr).contains("wrong"));
}
