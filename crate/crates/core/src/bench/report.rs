//! Report files: the per-run table, the ALC and accuracy-slice summaries,
//! and one point file per learning curve.
//!
//! Floats in machine-readable files use the shortest round-trip form so that
//! re-reading them reproduces every summary exactly.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::stats::{aggregate_win_tie_loss, ComparisonReport, SliceTable, SLICE_SIZES};
use super::{BenchmarkResults, LearningCurve, RunRecord};
use crate::error::{Error, Result};
use crate::models::ModelKind;

pub const RUNS_HEADER: [&str; 8] = [
    "dataset",
    "model",
    "strategy",
    "fold",
    "repeat",
    "seed",
    "alc",
    "truncated_at",
];

#[derive(Debug, Clone, PartialEq)]
pub struct ReportFiles {
    pub runs_csv: PathBuf,
    pub alc_table_csv: PathBuf,
    pub alc_table_md: PathBuf,
    pub slice_table: Option<(PathBuf, PathBuf)>,
    pub curves_dir: Option<PathBuf>,
}

fn write_file(path: &Path, content: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, content).map_err(|e| Error::io(path, e))
}

fn safe_name(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() || "._-".contains(c) { c } else { '_' })
        .collect()
}

/// Location of a run's curve file below `curves_dir`.
pub fn curve_path(curves_dir: &Path, dataset: &str, model: ModelKind, strategy: &str, fold: usize, repeat: usize) -> PathBuf {
    curves_dir
        .join(safe_name(dataset))
        .join(format!("{model}_{strategy}_f{fold}_r{repeat}.csv"))
}

pub fn write_runs_csv(records: &[RunRecord]) -> String {
    let mut out = RUNS_HEADER.join(",");
    out.push('\n');
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            csv_field(&r.dataset),
            r.model,
            r.strategy,
            r.fold,
            r.repeat,
            r.seed,
            r.alc,
            r.truncated_at.map(|t| t.to_string()).unwrap_or_default()
        );
    }
    out
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Parses a per-run table; errors name the offending line.
pub fn read_runs_csv(path: impl AsRef<Path>) -> Result<Vec<RunRecord>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_runs_csv(&text)
}

pub fn parse_runs_csv(text: &str) -> Result<Vec<RunRecord>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(text.as_bytes());
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    if header != RUNS_HEADER {
        return Err(Error::Parse {
            line: 1,
            message: format!("expected header {}", RUNS_HEADER.join(",")),
        });
    }
    let mut out = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let line = i as u64 + 2;
        let rec = rec.map_err(|e| Error::Parse {
            line,
            message: e.to_string(),
        })?;
        let bad = |field: &str, m: String| Error::Parse {
            line,
            message: format!("{field}: {m}"),
        };
        if rec.len() != RUNS_HEADER.len() {
            return Err(bad("row", format!("expected {} fields, found {}", RUNS_HEADER.len(), rec.len())));
        }
        let alc: f64 = rec[6].parse().map_err(|e| bad("alc", format!("{e}")))?;
        if !(0.0..=100.0).contains(&alc) {
            return Err(bad("alc", format!("{alc} outside [0, 100]")));
        }
        out.push(RunRecord {
            dataset: rec[0].to_string(),
            model: rec[1].parse().map_err(|e| bad("model", format!("{e}")))?,
            strategy: rec[2].parse().map_err(|e| bad("strategy", format!("{e}")))?,
            fold: rec[3].parse().map_err(|e| bad("fold", format!("{e}")))?,
            repeat: rec[4].parse().map_err(|e| bad("repeat", format!("{e}")))?,
            seed: rec[5].parse().map_err(|e| bad("seed", format!("{e}")))?,
            alc,
            truncated_at: if rec[7].is_empty() {
                None
            } else {
                Some(rec[7].parse().map_err(|e| bad("truncated_at", format!("{e}")))?)
            },
        });
    }
    if out.is_empty() {
        return Err(Error::domain("per-run table has no runs"));
    }
    Ok(out)
}

fn write_curve(curve: &LearningCurve) -> String {
    let mut out = String::from("budget,accuracy\n");
    for (b, a) in curve.budgets.iter().zip(&curve.accuracies) {
        let _ = writeln!(out, "{b},{a}");
    }
    out
}

/// Reads `(budgets, accuracies)` from a curve file.
pub fn read_curve_file(path: impl AsRef<Path>) -> Result<(Vec<usize>, Vec<f64>)> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines();
    if lines.next() != Some("budget,accuracy") {
        return Err(Error::Parse {
            line: 1,
            message: format!("{}: expected header budget,accuracy", path.display()),
        });
    }
    let mut budgets = Vec::new();
    let mut accs = Vec::new();
    for (i, l) in lines.enumerate() {
        let bad = |m: &str| Error::Parse {
            line: i as u64 + 2,
            message: format!("{}: {m}", path.display()),
        };
        let (b, a) = l.split_once(',').ok_or_else(|| bad("expected two fields"))?;
        budgets.push(b.parse().map_err(|_| bad("bad budget"))?);
        accs.push(a.parse().map_err(|_| bad("bad accuracy"))?);
    }
    Ok((budgets, accs))
}

/// Loads the curve of every record from `curves_dir`.
pub fn read_curves(curves_dir: impl AsRef<Path>, records: &[RunRecord]) -> Result<Vec<LearningCurve>> {
    let dir = curves_dir.as_ref();
    records
        .iter()
        .map(|r| {
            let (budgets, accuracies) = read_curve_file(curve_path(
                dir,
                &r.dataset,
                r.model,
                r.strategy.id(),
                r.fold,
                r.repeat,
            ))?;
            Ok(LearningCurve {
                dataset: r.dataset.clone(),
                model: r.model,
                strategy: r.strategy,
                fold: r.fold,
                repeat: r.repeat,
                seed: r.seed,
                budgets,
                accuracies,
                initial: None,
                queries: Vec::new(),
                truncated_at: r.truncated_at,
            })
        })
        .collect()
}

struct Grid {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Grid {
    fn csv(&self) -> String {
        let mut out = String::new();
        for row in std::iter::once(&self.header).chain(&self.rows) {
            let cells: Vec<String> = row.iter().map(|c| csv_field(c)).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    fn markdown(&self, bold: &dyn Fn(usize, usize) -> bool) -> String {
        let mut out = format!("| {} |\n", self.header.join(" | "));
        out.push_str(&format!("|{}\n", "---|".repeat(self.header.len())));
        for (i, row) in self.rows.iter().enumerate() {
            let cells: Vec<String> = row
                .iter()
                .enumerate()
                .map(|(j, c)| if bold(i, j) { format!("**{c}**") } else { c.clone() })
                .collect();
            out.push_str(&format!("| {} |\n", cells.join(" | ")));
        }
        out
    }
}

/// ALC summary: one row per dataset, then the mean row and the win/tie/loss row.
///
/// In the CSV form `*` marks cells not significantly below the best of their
/// model and `^` marks cells containing truncated curves.
pub fn render_alc_table(report: &ComparisonReport) -> (String, String) {
    let columns: Vec<_> = report
        .models
        .iter()
        .flat_map(|&m| report.strategies.iter().map(move |&s| (m, s)))
        .collect();
    let mut header = vec!["dataset".to_string()];
    header.extend(columns.iter().map(|(m, s)| format!("{m}:{s}")));
    let mut rows = Vec::new();
    let mut marks = Vec::new();
    for d in &report.datasets {
        let mut row = vec![d.clone()];
        let mut mrow = vec![false];
        for &(m, s) in &columns {
            let c = report.cell(d, m, s).expect("complete report");
            row.push(format!("{:.2}{}", c.mean_alc, if c.truncated { "^" } else { "" }));
            mrow.push(c.marked);
        }
        rows.push(row);
        marks.push(mrow);
    }
    let mut mean = vec!["mean".to_string()];
    let mut wtl = vec!["win/tie/loss".to_string()];
    for &(m, s) in &columns {
        mean.push(format!("{:.2}", report.grand_mean(m, s)));
        let [w, t, l] = report.win_tie_loss(m, s);
        wtl.push(format!("{w}/{t}/{l}"));
    }
    rows.push(mean);
    rows.push(wtl);
    let plain = Grid { header, rows };
    let md = plain.markdown(&|i, j| marks.get(i).is_some_and(|r| r[j]));
    let mut starred = Grid {
        header: plain.header.clone(),
        rows: plain.rows.clone(),
    };
    for (i, mrow) in marks.iter().enumerate() {
        for (j, &m) in mrow.iter().enumerate() {
            if m {
                starred.rows[i][j].push('*');
            }
        }
    }
    (starred.csv(), md)
}

/// Mean accuracy (%) at fixed `|L|`, one row per dataset and model, then one mean row per model.
pub fn render_slice_table(table: &SliceTable, report: &ComparisonReport) -> (String, String) {
    let mut header = vec!["dataset".to_string(), "model".to_string()];
    for size in &table.sizes {
        for s in &report.strategies {
            header.push(format!("{size}:{s}"));
        }
    }
    let fmt = |v: Option<f64>| v.map(|x| format!("{:.2}", 100.0 * x)).unwrap_or_else(|| "NA".into());
    let mut rows = Vec::new();
    for &m in &report.models {
        let mut sums = vec![Some(0.0); table.sizes.len() * report.strategies.len()];
        for d in &report.datasets {
            let mut row = vec![d.clone(), m.to_string()];
            for k in 0..table.sizes.len() {
                for (j, &s) in report.strategies.iter().enumerate() {
                    let v = table.get(d, m, s).and_then(|r| r.values[k]);
                    let slot = &mut sums[k * report.strategies.len() + j];
                    *slot = match (*slot, v) {
                        (Some(a), Some(b)) => Some(a + b),
                        _ => None,
                    };
                    row.push(fmt(v));
                }
            }
            rows.push(row);
        }
        let n = report.datasets.len() as f64;
        let mut row = vec!["mean".to_string(), m.to_string()];
        row.extend(sums.into_iter().map(|v| fmt(v.map(|x| x / n))));
        rows.push(row);
    }
    let g = Grid { header, rows };
    (g.csv(), g.markdown(&|_, _| false))
}

/// Writes the per-run table, both summaries and the curve files below `out_dir`.
///
/// The accuracy-slice summary and curve files are skipped when `results`
/// carries no curves.
pub fn emit_report(results: &BenchmarkResults, out_dir: impl AsRef<Path>) -> Result<(ComparisonReport, ReportFiles)> {
    let out = out_dir.as_ref();
    let report = aggregate_win_tie_loss(&results.records)?;
    let runs_csv = out.join("runs.csv");
    write_file(&runs_csv, &write_runs_csv(&results.records))?;
    let (csv4, md4) = render_alc_table(&report);
    let alc_table_csv = out.join("alc_table.csv");
    let alc_table_md = out.join("alc_table.md");
    write_file(&alc_table_csv, &csv4)?;
    write_file(&alc_table_md, &md4)?;

    let mut files = ReportFiles {
        runs_csv,
        alc_table_csv,
        alc_table_md,
        slice_table: None,
        curves_dir: None,
    };
    if !results.curves.is_empty() {
        let slices = SliceTable::build(&results.curves, &SLICE_SIZES)?;
        let (csv5, md5) = render_slice_table(&slices, &report);
        let (p5c, p5m) = (out.join("slice_table.csv"), out.join("slice_table.md"));
        write_file(&p5c, &csv5)?;
        write_file(&p5m, &md5)?;
        files.slice_table = Some((p5c, p5m));
        let curves_dir = out.join("curves");
        for c in &results.curves {
            let path = curve_path(&curves_dir, &c.dataset, c.model, c.strategy.id(), c.fold, c.repeat);
            write_file(&path, &write_curve(c))?;
        }
        files.curves_dir = Some(curves_dir);
    }
    Ok((report, files))
}
