//! End-to-end runs of the `alkit` binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn alkit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_alkit"))
        .args(args)
        .env_remove("ALKIT_OUT")
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn data(file: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../data")
        .join(file)
        .canonicalize()
        .unwrap()
}

fn manifest(dir: &Path, entries: &[(&str, &str)]) -> String {
    let text: String = entries
        .iter()
        .map(|(name, file)| format!("{name}, {}, class\n", data(file).display()))
        .collect();
    let path = dir.join("manifest.txt");
    fs::write(&path, text).unwrap();
    path.display().to_string()
}

fn s(p: &Path) -> String {
    p.display().to_string()
}

const FAST: [&str; 4] = ["--budget", "8", "--rf-tree-count", "10"];

fn bench(manifest: &str, out: &Path, extra: &[&str]) -> Output {
    let out = s(out);
    let mut args = vec!["run-benchmark", "--manifest", manifest, "--out", out.as_str()];
    args.extend(FAST);
    args.extend(extra);
    alkit(&args)
}

#[test]
fn missing_manifest_is_a_usage_error() {
    let o = alkit(&["run-benchmark"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("Usage:"), "{}", stderr(&o));
    let o = alkit(&["train-policy", "--manifest", "/nonexistent/manifest.txt"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("does not exist"));
}

#[test]
fn benchmark_grid_is_complete_and_reproducible() {
    let tmp = TempDir::new().unwrap();
    let m = manifest(tmp.path(), &[("heart", "heart.csv")]);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let first = bench(&m, &a, &["--strategies", "rnd,margin", "--seed", "3"]);
    assert!(first.status.success(), "{}", stderr(&first));
    assert!(bench(&m, &b, &["--strategies", "rnd,margin", "--seed", "3"]).status.success());
    let runs = fs::read_to_string(a.join("runs.csv")).unwrap();
    assert_eq!(runs.lines().count(), 1 + 2 * 2 * 25);
    for f in ["runs.csv", "alc_table.csv", "alc_table.md", "slice_table.csv", "slice_table.md"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    let resolved = fs::read_to_string(a.join("config.resolved")).unwrap();
    assert!(resolved.contains("budget = 8") && resolved.contains("folds = 5"));
}

#[test]
fn report_regenerates_summaries_and_filters_models() {
    let tmp = TempDir::new().unwrap();
    let m = manifest(tmp.path(), &[("heart", "heart.csv")]);
    let out = tmp.path().join("o");
    assert!(bench(&m, &out, &["--folds", "2", "--repeats", "2"]).status.success());
    let before: Vec<Vec<u8>> = ["alc_table.csv", "alc_table.md", "slice_table.csv", "slice_table.md"]
        .iter()
        .map(|f| fs::read(out.join(f)).unwrap())
        .collect();
    let again = tmp.path().join("again");
    let o = alkit(&["report", "--out", &s(&out), "--report-out", &s(&again)]);
    assert!(o.status.success(), "{}", stderr(&o));
    for (f, old) in ["alc_table.csv", "alc_table.md", "slice_table.csv", "slice_table.md"].iter().zip(&before) {
        assert_eq!(&fs::read(again.join(f)).unwrap(), old, "{f}");
    }
    let o = alkit(&["report", "--out", &s(&out), "--model", "rf"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let t4 = fs::read_to_string(out.join("report_rf/alc_table.csv")).unwrap();
    assert!(t4.contains("rf:rnd") && !t4.contains("lr:"), "{t4}");
}

#[test]
fn report_rejects_empty_and_corrupt_tables() {
    let tmp = TempDir::new().unwrap();
    fs::write(tmp.path().join("runs.csv"), "").unwrap();
    let o = alkit(&["report", "--out", &s(tmp.path())]);
    assert_eq!(o.status.code(), Some(1));
    let header = "dataset,model,strategy,fold,repeat,seed,alc,truncated_at\n";
    fs::write(tmp.path().join("runs.csv"), header).unwrap();
    assert!(!alkit(&["report", "--out", &s(tmp.path())]).status.success());
    fs::write(
        tmp.path().join("runs.csv"),
        format!("{header}d,lr,rnd,0,0,1,70.5,\nd,lr,rnd,zero,0,1,70.5,\n"),
    )
    .unwrap();
    let o = alkit(&["report", "--out", &s(tmp.path())]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));
}

#[test]
fn config_files_flags_and_environment_compose() {
    let tmp = TempDir::new().unwrap();
    let m = manifest(tmp.path(), &[("heart", "heart.csv")]);
    let cfg = tmp.path().join("run.cfg");
    fs::write(&cfg, format!("manifest = {m}\nfolds = 2\nrepeats = 1\nbudget = 6\nrf-tree-count = 5\n")).unwrap();
    let env_out = tmp.path().join("from_env");
    let o = Command::new(env!("CARGO_BIN_EXE_alkit"))
        .args(["run-benchmark", "--config", &s(&cfg), "--budget", "7", "--out", "ignored"])
        .env("ALKIT_OUT", &env_out)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(!Path::new("ignored").exists());
    let resolved = fs::read_to_string(env_out.join("config.resolved")).unwrap();
    assert!(resolved.contains("budget = 7") && resolved.contains("folds = 2"));
    let runs = fs::read_to_string(env_out.join("runs.csv")).unwrap();
    assert_eq!(runs.lines().count(), 1 + 2 * 2 * 2);

    let replay = tmp.path().join("replay");
    let o = alkit(&["run-benchmark", "--config", &s(&env_out.join("config.resolved")), "--out", &s(&replay)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(fs::read(replay.join("runs.csv")).unwrap(), runs.as_bytes());

    fs::write(&cfg, format!("manifest = {m}\nlearning_rate = 0.1\n")).unwrap();
    let o = alkit(&["run-benchmark", "--config", &s(&cfg)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("unknown key"), "{}", stderr(&o));
}

#[test]
fn trained_policy_drives_the_learned_strategy() {
    let tmp = TempDir::new().unwrap();
    let m = manifest(tmp.path(), &[("heart", "heart.csv"), ("wdbc", "wdbc.csv")]);
    let train = |out: &Path| {
        alkit(&[
            "train-policy",
            "--manifest",
            &m,
            "--out",
            &s(out),
            "--training-iterations",
            "0",
            "--warm-start-episodes",
            "3",
            "--nn-updates-per-warm-start",
            "4",
        ])
    };
    let p = tmp.path().join("p");
    let o = train(&p);
    assert!(o.status.success(), "{}", stderr(&o));
    let log = fs::read_to_string(p.join("training.log")).unwrap();
    assert_eq!(log.lines().count(), 1);
    let artifact = p.join("policy.alkit");
    let p2 = tmp.path().join("p2");
    assert!(train(&p2).status.success());
    assert_eq!(fs::read(&artifact).unwrap(), fs::read(p2.join("policy.alkit")).unwrap());

    let out = tmp.path().join("b");
    let o = bench(
        &m,
        &out,
        &["--folds", "2", "--repeats", "1", "--strategies", "rnd,learned", "--artifact", &s(&artifact)],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(fs::read_to_string(out.join("alc_table.csv")).unwrap().contains("learned"));

    let bad = tmp.path().join("bad.alkit");
    let bytes = fs::read(&artifact).unwrap();
    fs::write(&bad, &bytes[..bytes.len() / 2]).unwrap();
    let o = bench(&m, &out, &["--strategies", "learned", "--artifact", &s(&bad)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("incompatible artifact"), "{}", stderr(&o));

    let o = bench(&m, &out, &["--strategies", "learned"]);
    assert!(!o.status.success());
}
