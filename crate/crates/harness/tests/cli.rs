//! The `aloha` binary end to end on tiny runs.

use std::path::Path;
use std::process::{Command, Output};

fn aloha(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_aloha")).args(args).env("RUST_LOG", "warn").output().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn lstm_modes_without_checkpoint_fail_loudly() {
    let tmp = tempfile::tempdir().unwrap();
    let o = aloha(&["predict", "--frames", "50", "--mode", "online_lstm", "--out", path(tmp.path())]);
    assert!(!o.status.success());
    let msg = stderr(&o);
    assert!(msg.contains("online_lstm") && msg.contains("pretrained.ckpt"), "{msg}");
}

#[test]
fn config_errors_report_the_line() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.toml");
    std::fs::write(&cfg, "schema_version = 1\n\n[traffic]\nperiod_frames = 0\n").unwrap();
    let o = aloha(&["simulate", "--config", path(&cfg), "--out", path(tmp.path())]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 4: traffic.period_frames"), "{}", stderr(&o));

    let o = aloha(&["simulate", "--set", "sim.rao_count=0", "--out", path(tmp.path())]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("sim.rao_count"), "{}", stderr(&o));
}

#[test]
fn checkpoint_with_other_architecture_is_refused() {
    let tmp = tempfile::tempdir().unwrap();
    let out = path(tmp.path());
    assert!(aloha(&["pretrain", "--frames", "10", "--set", "predictor.layer_sizes=[4]", "--out", out]).status.success());
    let o = aloha(&["predict", "--frames", "20", "--set", "predictor.layer_sizes=[5]", "--mode", "offline_lstm", "--out", out]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("does not match"), "{}", stderr(&o));
}

#[test]
fn sweep_report_is_rebuilt_from_records() {
    let tmp = tempfile::tempdir().unwrap();
    let out = path(tmp.path());
    let o = aloha(&[
        "sweep",
        "--frames",
        "120",
        "--mode",
        "mom,ml",
        "--set",
        "seeds=[3, 1, 2]",
        "--set",
        "sweep={axis = \"period_frames\", values = [5, 10]}",
        "--out",
        out,
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(tmp.path().join("sweep.json").exists());
    assert!(tmp.path().join("point_1_tp10/records/ml/seed_2.csv").exists());

    assert!(aloha(&["report", "--figure", "tp", "--out", out]).status.success());
    let first = std::fs::read_to_string(tmp.path().join("report_tp.csv")).unwrap();
    let lines: Vec<&str> = first.lines().collect();
    assert_eq!(lines[0], "series,x,mean,stderr");
    assert_eq!(lines.len(), 1 + 2 * 2);
    assert!(lines[1].starts_with("mom,5,"));

    // summaries are not needed to rebuild the report
    for p in ["point_0_tp5", "point_1_tp10"] {
        std::fs::remove_file(tmp.path().join(p).join("summary.json")).unwrap();
    }
    assert!(aloha(&["report", "--figure", "tp", "--out", out]).status.success());
    assert_eq!(std::fs::read_to_string(tmp.path().join("report_tp.csv")).unwrap(), first);
}
