//! End-to-end command-line tests: the full pipeline on a small
//! synthetic dataset, plus exit-code and guard behavior.

use std::path::Path;
use std::process::{Command, Output};

fn irnn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_irnn"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn manifest(dir: &Path) -> serde_json::Value {
    let text = std::fs::read_to_string(dir.join("manifest.json")).unwrap();
    serde_json::from_str(&text).unwrap()
}

fn write_synth_config(dir: &Path) -> std::path::PathBuf {
    let path = dir.join("synth.cfg");
    std::fs::write(
        &path,
        "d = 3\n\
         n_samples = 240\n\
         horizon_hours = 4\n\
         rates = 2\n\
         risk = linear:1.5,null,null\n\
         trend_feature = none\n\
         intercept = 0\n\
         seed = 5\n",
    )
    .unwrap();
    path
}

#[test]
fn pipeline_synth_prepare_train_evaluate_explain_compare() {
    let tmp = tempfile::tempdir().unwrap();
    let root = tmp.path();
    let cfg = write_synth_config(root);
    let synth_dir = root.join("synth");
    let prep_dir = root.join("prep");
    let train_dir = root.join("run-logistic");
    let irnn_dir = root.join("run-irnn");

    // synth
    let out = irnn(&[
        "synth",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        synth_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["events.csv", "outcomes.csv", "truth.json", "manifest.json"] {
        assert!(synth_dir.join(f).exists(), "missing {f}");
    }

    // prepare
    let out = irnn(&[
        "prepare",
        "--data",
        synth_dir.to_str().unwrap(),
        "--out",
        prep_dir.to_str().unwrap(),
        "--seed",
        "3",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let splits: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(prep_dir.join("splits.json")).unwrap())
            .unwrap();
    assert!(splits["test_ids"].as_array().unwrap().len() > 20);

    // train (logistic, 2 seeds, quick config)
    let train_cfg = root.join("train.cfg");
    std::fs::write(&train_cfg, "max_epochs = 6\npatience = 6\nbatch_size = 64\n").unwrap();
    let out = irnn(&[
        "train",
        "--data",
        prep_dir.to_str().unwrap(),
        "--model",
        "logistic",
        "--config",
        train_cfg.to_str().unwrap(),
        "--seeds",
        "2",
        "--max-len",
        "32",
        "--out",
        train_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for f in [
        "weights_0.json",
        "stats_0.json",
        "history_0.csv",
        "weights_1.json",
        "summary.json",
        "manifest.json",
    ] {
        assert!(train_dir.join(f).exists(), "missing {f}");
    }
    let history = std::fs::read_to_string(train_dir.join("history_0.csv")).unwrap();
    assert!(history.starts_with("epoch,train_loss,val_auc\n"));

    // train (irnn, 1 seed) for the explanation exports
    let out = irnn(&[
        "train",
        "--data",
        prep_dir.to_str().unwrap(),
        "--model",
        "irnn",
        "--config",
        train_cfg.to_str().unwrap(),
        "--seeds",
        "1",
        "--max-len",
        "32",
        "--out",
        irnn_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    // evaluate on the test split
    let eval_dir = root.join("eval");
    let out = irnn(&[
        "evaluate",
        "--weights",
        train_dir.to_str().unwrap(),
        "--data",
        prep_dir.to_str().unwrap(),
        "--out",
        eval_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let row = std::fs::read_to_string(eval_dir.join("comparison_row.csv")).unwrap();
    assert!(row.contains("logistic,"));
    // Tables-style "mean (std)" formatting.
    assert!(row.contains(" ("), "row = {row}");

    // evaluating on the training split warns
    let eval_tv = root.join("eval-tv");
    let out = irnn(&[
        "evaluate",
        "--weights",
        train_dir.to_str().unwrap(),
        "--data",
        prep_dir.to_str().unwrap(),
        "--split",
        "trainval",
        "--out",
        eval_tv.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert!(
        String::from_utf8_lossy(&out.stderr).contains("provenance warning"),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );

    // explain: global importance + one trace + risk + decay
    let explain_dir = root.join("explain");
    let sample_id = splits["test_ids"][0].as_str().unwrap();
    let out = irnn(&[
        "explain",
        "--weights",
        irnn_dir.join("weights_0.json").to_str().unwrap(),
        "--data",
        prep_dir.to_str().unwrap(),
        "--global",
        "--risk-curves",
        "--decay",
        "--bins",
        "5",
        "--smooth",
        "--sample-id",
        sample_id,
        "--out",
        explain_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(explain_dir.join("importance.json").exists());
    assert!(explain_dir.join("decay_curves.json").exists());
    assert!(explain_dir.join(format!("trace_{sample_id}.csv")).exists());
    assert!(explain_dir.join("risk_f0.json").exists());
    let trace =
        std::fs::read_to_string(explain_dir.join(format!("trace_{sample_id}.csv"))).unwrap();
    assert!(trace.starts_with("time,logit,c_f0,c_f1,c_f2"));

    // compare the two summaries
    let cmp_dir = root.join("cmp");
    let out = irnn(&[
        "compare",
        train_dir.join("summary.json").to_str().unwrap(),
        irnn_dir.join("summary.json").to_str().unwrap(),
        "--out",
        cmp_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let table = std::fs::read_to_string(cmp_dir.join("comparison.csv")).unwrap();
    assert!(table.lines().count() >= 3);
    assert!(table.contains("logistic") && table.contains("irnn"));
}

#[test]
fn synth_is_checksum_idempotent() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_synth_config(tmp.path());
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    for dir in [&a, &b] {
        let out = irnn(&[
            "synth",
            "--config",
            cfg.to_str().unwrap(),
            "--seed",
            "11",
            "--out",
            dir.to_str().unwrap(),
        ]);
        assert!(out.status.success());
    }
    let ma = manifest(&a);
    let mb = manifest(&b);
    assert_eq!(ma["artifacts"], mb["artifacts"], "checksums must match");
    assert_eq!(ma["config_hash"], mb["config_hash"]);
}

#[test]
fn invalid_generator_config_names_the_field() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.cfg");
    std::fs::write(&cfg, "d = 0\n").unwrap();
    let out = irnn(&[
        "synth",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        tmp.path().join("x").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("d"));
}

#[test]
fn unknown_model_name_is_a_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    let out = irnn(&[
        "train",
        "--data",
        tmp.path().to_str().unwrap(),
        "--model",
        "transformer",
        "--out",
        tmp.path().join("o").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("transformer"));
}

#[test]
fn missing_data_is_a_data_error_naming_the_path() {
    let tmp = tempfile::tempdir().unwrap();
    let missing = tmp.path().join("nope");
    let out = irnn(&[
        "train",
        "--data",
        missing.to_str().unwrap(),
        "--model",
        "logistic",
        "--out",
        tmp.path().join("o").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nope"));
}

#[test]
fn decay_export_needs_the_diagonal_decay_model() {
    // Train a tiny gru_simple model and ask for decay curves: the guard
    // must reject it with a usage error.
    let tmp = tempfile::tempdir().unwrap();
    let root = tmp.path();
    let cfg = write_synth_config(root);
    let synth_dir = root.join("synth");
    let prep_dir = root.join("prep");
    let run_dir = root.join("run");
    assert!(irnn(&[
        "synth",
        "--config",
        cfg.to_str().unwrap(),
        "--n-samples",
        "160",
        "--out",
        synth_dir.to_str().unwrap()
    ])
    .status
    .success());
    assert!(irnn(&[
        "prepare",
        "--data",
        synth_dir.to_str().unwrap(),
        "--out",
        prep_dir.to_str().unwrap()
    ])
    .status
    .success());
    let train_cfg = root.join("t.cfg");
    std::fs::write(&train_cfg, "max_epochs = 2\npatience = 2\nbatch_size = 64\n").unwrap();
    assert!(irnn(&[
        "train",
        "--data",
        prep_dir.to_str().unwrap(),
        "--model",
        "gru_simple",
        "--config",
        train_cfg.to_str().unwrap(),
        "--seeds",
        "1",
        "--max-len",
        "24",
        "--out",
        run_dir.to_str().unwrap()
    ])
    .status
    .success());

    let out = irnn(&[
        "explain",
        "--weights",
        run_dir.join("weights_0.json").to_str().unwrap(),
        "--data",
        prep_dir.to_str().unwrap(),
        "--decay",
        "--out",
        root.join("ex").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("decay"));
}
