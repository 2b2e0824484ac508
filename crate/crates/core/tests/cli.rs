use std::path::Path;
use std::process::{Command, Output};

use zsslr::data::{DatasetManifest, MANIFEST_FILE};

fn zsslr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_zsslr")).args(args).env_remove("ZSSLR_THREADS").output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn ok(o: Output) -> String {
    assert_eq!(o.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    stdout(&o)
}

fn synth(dir: &Path, extra: &[&str]) {
    let d = dir.to_str().unwrap();
    let mut args =
        vec!["synth", "--out", d, "--train-classes", "20", "--val-classes", "4", "--test-classes", "6", "--samples-per-class", "5"];
    args.extend_from_slice(extra);
    ok(zsslr(&args));
}

#[test]
fn baseline_prints_random_row() {
    let out = ok(zsslr(&["baseline", "--classes", "50", "--topk", "1,2,5"]));
    let analytic: Vec<&str> = out.lines().skip(1).map(|l| l.split_whitespace().nth(2).unwrap()).collect();
    assert_eq!(analytic, ["2.0", "4.0", "10.0"]);
}

#[test]
fn gradcheck_passes() {
    let out = ok(zsslr(&["gradcheck", "--seed", "7"]));
    assert!(out.lines().count() >= 15 && out.lines().all(|l| l.starts_with("ok")), "{out}");
}

#[test]
fn usage_and_config_errors_have_distinct_codes() {
    let o = zsslr(&["experiment", "--bogus"]);
    assert_eq!(o.status.code(), Some(2));
    let o = zsslr(&["experiment", "--manifest", "/nonexistent/manifest.toml"]);
    assert_eq!(o.status.code(), Some(3));
    let err: serde_json::Value = serde_json::from_slice(o.stderr.trim_ascii()).expect("stderr is one JSON line");
    assert_eq!(err["exit_code"], 3);
    assert!(!ok(zsslr(&["--help"])).is_empty());
}

#[test]
fn overlapping_manifest_fails_validation() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), &[]);
    let path = dir.path().join(MANIFEST_FILE);
    let mut m = DatasetManifest::read(&path).unwrap();
    let c = m.split.val[0];
    m.split.train.push(c);
    std::fs::write(&path, m.to_toml()).unwrap();
    let o = zsslr(&["validate", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stdout(&o).contains("split-overlap"), "{}", stdout(&o));
}

#[test]
fn synth_validate_train_eval_experiment_compose() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    synth(&data, &["--streams", "body+hand", "--seed", "3"]);
    let d = data.to_str().unwrap();
    assert!(ok(zsslr(&["validate", d])).contains("valid"));

    let out = dir.path().join("model");
    let o = out.to_str().unwrap();
    ok(zsslr(&["train", "--manifest", d, "--model", "sae", "--streams", "body+hand", "--out", o]));
    assert!(out.join("model.zsm1").exists());
    let table = ok(zsslr(&["eval", "--manifest", d, "--out", o]));
    assert!(table.contains("SAE") && table.contains("body+hand"), "{table}");

    let config = dir.path().join("run.toml");
    std::fs::write(&config, format!("manifest = {:?}\nmodel = [\"lle\", \"eszsl\"]\nstreams = [\"body\", \"hand\"]\nruns = 2\n", d))
        .unwrap();
    let exp = dir.path().join("exp");
    let table = ok(zsslr(&["experiment", "--config", config.to_str().unwrap(), "--out", exp.to_str().unwrap()]));
    assert_eq!(table.lines().count(), 4, "{table}");
    let csv = std::fs::read_to_string(exp.join("report.csv")).unwrap();
    assert!(csv.starts_with("method,encoder,streams,split,k,accuracy_mean,accuracy_std,runs\n"));
    assert_eq!(csv.lines().count(), 1 + 2 * 2 * 3);
    assert_eq!(std::fs::read_to_string(exp.join("report.txt")).unwrap(), table);
}

#[test]
fn outputs_do_not_depend_on_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), &["--noise", "0.4"]);
    let d = dir.path().to_str().unwrap();
    let run = |threads: &str| {
        let out = dir.path().join(format!("out{threads}"));
        let args = [
            "--threads",
            threads,
            "experiment",
            "--manifest",
            d,
            "--model",
            "lle",
            "--encoder",
            "gru",
            "--hidden",
            "3",
            "--initial-state",
            "zero",
            "--max-epochs",
            "8",
            "--runs",
            "2",
            "--out",
            out.to_str().unwrap(),
        ];
        ok(zsslr(&args));
        std::fs::read(out.join("report.csv")).unwrap()
    };
    assert_eq!(run("1"), run("4"));
}
