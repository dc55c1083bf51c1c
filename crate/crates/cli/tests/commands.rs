use std::path::Path;
use std::process::{Command, Output};

fn vulnlabel(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vulnlabel"))
        .current_dir(dir)
        .args(args)
        .output()
        .unwrap()
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = vulnlabel(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn corpus(dir: &Path) {
    ok(dir, &["synth", "--out", "syn.jsonl", "--reports", "150"]);
}

#[test]
fn evaluate_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    corpus(d);
    ok(d, &["evaluate", "--dataset", "syn.jsonl", "--out-dir", "a"]);
    ok(d, &["evaluate", "--dataset", "syn.jsonl", "--out-dir", "b"]);
    for f in ["metrics.json", "predictions.jsonl"] {
        assert_eq!(
            std::fs::read(d.join("a").join(f)).unwrap(),
            std::fs::read(d.join("b").join(f)).unwrap(),
            "{f} differs"
        );
    }
}

#[test]
fn saved_model_evaluates_like_a_fresh_fit() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    corpus(d);
    ok(
        d,
        &["train", "--dataset", "syn.jsonl", "--model-out", "model"],
    );
    let fresh = ok(d, &["evaluate", "--dataset", "syn.jsonl"]);
    let loaded = ok(
        d,
        &["evaluate", "--dataset", "syn.jsonl", "--model", "model"],
    );
    assert_eq!(fresh, loaded);
    let preds = ok(
        d,
        &[
            "predict",
            "--dataset",
            "syn.jsonl",
            "--model",
            "model",
            "--k",
            "2",
        ],
    );
    assert_eq!(preds.lines().count(), 150);
    let first: serde_json::Value = serde_json::from_str(preds.lines().next().unwrap()).unwrap();
    assert_eq!(first["predictions"].as_array().unwrap().len(), 2);
}

#[test]
fn config_file_and_flags_layer() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    corpus(d);
    std::fs::write(
        d.join("engine.conf"),
        "dataset = syn.jsonl\nadjust = false\n",
    )
    .unwrap();
    let from_file = ok(d, &["evaluate", "--config", "engine.conf"]);
    let from_flag = ok(d, &["evaluate", "--dataset", "syn.jsonl", "--no-adjust"]);
    assert_eq!(from_file, from_flag);
    let overridden = ok(
        d,
        &[
            "evaluate",
            "--config",
            "engine.conf",
            "--set",
            "adjust=true",
        ],
    );
    let default = ok(d, &["evaluate", "--dataset", "syn.jsonl"]);
    assert_eq!(overridden, default);
}

#[test]
fn data_commands_write_their_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    corpus(d);
    ok(
        d,
        &[
            "ingest",
            "--dataset",
            "syn.jsonl",
            "--out",
            "norm.jsonl",
            "--labels-out",
            "labels.txt",
        ],
    );
    assert_eq!(
        std::fs::read(d.join("syn.jsonl")).unwrap(),
        std::fs::read(d.join("norm.jsonl")).unwrap()
    );
    ok(
        d,
        &["split", "--dataset", "syn.jsonl", "--out-dir", "parts"],
    );
    let sizes: usize = ["train", "validation", "test"]
        .iter()
        .map(|p| {
            std::fs::read_to_string(d.join("parts").join(format!("{p}.jsonl")))
                .unwrap()
                .lines()
                .count()
        })
        .sum();
    assert_eq!(sizes, 150);
    let census = ok(d, &["census", "--dataset", "syn.jsonl", "--by-year"]);
    assert!(census.contains("2016"));
    let enhanced = ok(d, &["enhance", "--dataset", "syn.jsonl"]);
    assert_eq!(enhanced.lines().count(), 150);
    for m in ["exact", "exact-description", "cpe", "ir"] {
        assert!(ok(d, &["baseline", "--dataset", "syn.jsonl", "--method", m]).contains("avg_F1"));
    }
    let csv = ok(
        d,
        &[
            "timing",
            "--dataset",
            "syn.jsonl",
            "--fractions",
            "0.5,1",
            "--repeats",
            "1",
        ],
    );
    assert_eq!(csv.lines().count(), 4);
}

#[test]
fn exit_codes_by_failure_kind() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("bad.jsonl"), "{not json\n").unwrap();
    std::fs::write(d.join("ok.jsonl"), "").unwrap();
    let code = |args: &[&str]| vulnlabel(d, args).status.code().unwrap();
    assert_eq!(code(&["no-such-command"]), 2);
    assert_eq!(code(&["evaluate", "--dataset", "missing.jsonl"]), 3);
    assert_eq!(
        code(&["evaluate", "--dataset", "ok.jsonl", "--set", "top_i=0"]),
        4
    );
    assert_eq!(code(&["evaluate"]), 4);
    assert_eq!(code(&["evaluate", "--dataset", "bad.jsonl"]), 5);
}
