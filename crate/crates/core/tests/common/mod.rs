#![allow(dead_code)]

use std::io::Write;
use std::path::PathBuf;

use alkit::data::{load_csv, LabelColumn, RawDataset};

/// Repository `data/` directory.
pub fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

/// Loads `data/<file>` under the given dataset name.
pub fn real_dataset(file: &str, name: &str) -> RawDataset {
    let mut d = load_csv(data_dir().join(file), &LabelColumn::Name("class".into()))
        .unwrap_or_else(|e| panic!("loading {file}: {e}"));
    d.name = name.to_string();
    d
}

/// Prints one verdict line past the test harness's output capture.
pub fn verdict(criterion: u32, title: &str, pass: bool, detail: &str) {
    let line = format!(
        "CRITERION {criterion:>2} {} | {title} | {detail}\n",
        if pass { "PASS" } else { "FAIL" }
    );
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(line.as_bytes());
    let _ = out.flush();
}
