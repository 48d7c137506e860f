use std::collections::BTreeSet;
use std::fs::File;
use std::io::Read;
use std::path::Path;
use std::str::FromStr;

use crate::data::{ColumnValues, RawColumn, RawDataset};
use crate::error::{Error, Result};

/// Which CSV column holds the label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LabelColumn {
    Name(String),
    Index(usize),
}

impl FromStr for LabelColumn {
    type Err = std::convert::Infallible;

    /// Plain non-negative integers become indices; anything else is a name.
    /// [`load_csv`] still prefers a header match over an index.
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(match s.trim().parse::<usize>() {
            Ok(i) => LabelColumn::Index(i),
            Err(_) => LabelColumn::Name(s.trim().to_string()),
        })
    }
}

impl std::fmt::Display for LabelColumn {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LabelColumn::Name(n) => f.write_str(n),
            LabelColumn::Index(i) => write!(f, "{i}"),
        }
    }
}

fn is_missing(cell: &str) -> bool {
    cell.is_empty() || cell == "?"
}

/// Loads a headered, comma-separated file with a binary label column.
///
/// Feature columns whose every cell parses as a finite number are numeric,
/// the rest categorical. Label strings are mapped to {0, 1} in lexicographic
/// order. Rows with empty or `?` cells are rejected.
pub fn load_csv(path: impl AsRef<Path>, label_column: &LabelColumn) -> Result<RawDataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".to_string());
    load_csv_reader(file, &name, label_column)
}

pub fn load_csv_reader<R: Read>(
    reader: R,
    name: &str,
    label_column: &LabelColumn,
) -> Result<RawDataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header.is_empty() || (header.len() == 1 && header[0].is_empty()) {
        return Err(Error::domain("empty file: no header row"));
    }
    let label_idx = match label_column {
        LabelColumn::Name(n) => header
            .iter()
            .position(|h| h == n)
            .ok_or_else(|| Error::domain(format!("label column {n:?} not in header")))?,
        LabelColumn::Index(i) => {
            let by_name = header.iter().position(|h| h == &i.to_string());
            match by_name {
                Some(p) => p,
                None if *i < header.len() => *i,
                None => {
                    return Err(Error::domain(format!(
                        "label column index {i} out of range for {} columns",
                        header.len()
                    )))
                }
            }
        }
    };

    let width = header.len();
    let mut cells: Vec<Vec<String>> = vec![Vec::new(); width];
    let mut missing_rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        if rec.len() != width {
            return Err(Error::Parse {
                line,
                message: format!("expected {width} fields, found {}", rec.len()),
            });
        }
        if rec.iter().any(is_missing) {
            missing_rows.push(line);
            continue;
        }
        for (j, cell) in rec.iter().enumerate() {
            cells[j].push(cell.to_string());
        }
    }
    if !missing_rows.is_empty() {
        return Err(Error::MissingValues { rows: missing_rows });
    }
    let n = cells[0].len();
    if n == 0 {
        return Err(Error::domain("empty file: no data rows"));
    }

    let raw_labels = std::mem::take(&mut cells[label_idx]);
    let distinct: BTreeSet<&str> = raw_labels.iter().map(String::as_str).collect();
    if distinct.len() != 2 {
        return Err(Error::domain(format!(
            "label column must have exactly 2 distinct values, found {}",
            distinct.len()
        )));
    }
    let mut it = distinct.into_iter();
    let class0 = it.next().unwrap_or_default().to_string();
    let class1 = it.next().unwrap_or_default().to_string();
    let labels: Vec<u8> = raw_labels.iter().map(|s| u8::from(*s != class0)).collect();

    let columns = header
        .into_iter()
        .zip(cells)
        .enumerate()
        .filter(|(j, _)| *j != label_idx)
        .map(|(_, (name, col))| RawColumn {
            name,
            values: detect_column(col),
        })
        .collect();

    RawDataset::new(name, columns, labels, [class0, class1])
}

fn detect_column(col: Vec<String>) -> ColumnValues {
    let parsed: Option<Vec<f64>> = col
        .iter()
        .map(|s| s.parse::<f64>().ok().filter(|v| v.is_finite()))
        .collect();
    match parsed {
        Some(v) => ColumnValues::Numeric(v),
        None => ColumnValues::Categorical(col),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::ColumnKind;

    fn load(text: &str, label: &str) -> Result<RawDataset> {
        load_csv_reader(text.as_bytes(), "t", &label.parse().unwrap())
    }

    #[test]
    fn labels_map_lexicographically() {
        let d = load("a,y\n1,yes\n2,no\n3,yes\n", "y").unwrap();
        assert_eq!(d.labels, vec![1, 0, 1]);
        assert_eq!(d.class_names, ["no".to_string(), "yes".to_string()]);
    }

    #[test]
    fn detects_kinds_and_quotes() {
        let d = load("a,b,y\n1.5,\"x, y\",0\n2,z,1\n", "2").unwrap();
        assert_eq!(d.columns[0].values.kind(), ColumnKind::Numeric);
        assert_eq!(
            d.columns[1].values,
            ColumnValues::Categorical(vec!["x, y".into(), "z".into()])
        );
    }

    #[test]
    fn constant_column_loads() {
        let d = load("a,y\n4,0\n4,1\n", "y").unwrap();
        assert_eq!(d.columns[0].values, ColumnValues::Numeric(vec![4.0, 4.0]));
    }

    #[test]
    fn ragged_row_reports_line() {
        match load("a,b,y\n1,2,0\n1,1\n", "y") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn three_classes_rejected() {
        assert!(matches!(load("a,y\n1,a\n2,b\n3,c\n", "y"), Err(Error::Domain(_))));
    }

    #[test]
    fn empty_input_rejected() {
        assert!(matches!(load("", "y"), Err(Error::Domain(_))));
        assert!(matches!(load("a,y\n", "y"), Err(Error::Domain(_))));
    }

    #[test]
    fn missing_cells_list_rows() {
        match load("a,y\n1,0\n?,1\n3,1\n,0\n", "y") {
            Err(Error::MissingValues { rows }) => assert_eq!(rows, vec![3, 5]),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn header_name_beats_index() {
        let d = load("0,1,y\n5,a,q\n6,b,r\n", "1").unwrap();
        // column named "1" is the label, not the column at position 1
        assert_eq!(d.columns.len(), 2);
        assert_eq!(d.columns[0].name, "0");
        assert_eq!(d.columns[1].name, "y");
    }
}
