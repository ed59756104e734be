//! Reading reference/prediction tables from CSV or JSON.
//!
//! A table has one row per sample. Columns named `ref:<class>` and
//! `pred:<class>` hold memberships; an optional `id` column names the
//! samples; any columns listed as group columns split the rows into groups
//! (iterations, folds, patients). Other columns are ignored.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::curves::{Group, GroupKey, GroupedPredictions};
use crate::error::{Error, Result};
use crate::membership::{MembershipMatrix, Tolerances, World};

pub const ID_COLUMN: &str = "id";
pub const REF_PREFIX: &str = "ref:";
pub const PRED_PREFIX: &str = "pred:";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InputFormat {
    #[default]
    Csv,
    /// An array of flat objects whose keys follow the CSV header rules.
    Json,
}

impl InputFormat {
    /// Guess from the file extension, defaulting to CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("json") => InputFormat::Json,
            _ => InputFormat::Csv,
        }
    }
}

impl fmt::Display for InputFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            InputFormat::Csv => "csv",
            InputFormat::Json => "json",
        })
    }
}

impl std::str::FromStr for InputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(InputFormat::Csv),
            "json" => Ok(InputFormat::Json),
            other => Err(Error::Config(format!("unknown input format `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct LoadOptions {
    pub world: World,
    pub tolerances: Tolerances,
    pub group_by: Vec<String>,
}

/// Cells as text, with the line (CSV) or record number (JSON) of each row.
struct Table {
    header: Vec<String>,
    rows: Vec<(u64, Vec<String>)>,
}

fn read_csv(bytes: &[u8]) -> Result<Table> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(bytes);
    let csv_error = |e: csv::Error| {
        let line = e.position().map_or(0, |p| p.line());
        Error::Parse {
            line,
            column: String::new(),
            message: e.to_string(),
        }
    };
    let header: Vec<String> = reader
        .headers()
        .map_err(csv_error)?
        .iter()
        .map(str::to_string)
        .collect();
    if header.iter().all(|h| h.is_empty()) {
        return Err(Error::Schema("missing header row".into()));
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(csv_error)?;
        let line = record.position().map_or(0, |p| p.line());
        rows.push((line, record.iter().map(str::to_string).collect()));
    }
    Ok(Table { header, rows })
}

fn read_json(bytes: &[u8]) -> Result<Table> {
    let records: Vec<serde_json::Map<String, serde_json::Value>> =
        serde_json::from_slice(bytes).map_err(|e| Error::Parse {
            line: e.line() as u64,
            column: String::new(),
            message: e.to_string(),
        })?;
    let first = records.first().ok_or_else(|| Error::Schema("no records".into()))?;
    let header: Vec<String> = first.keys().cloned().collect();
    let mut rows = Vec::with_capacity(records.len());
    for (i, record) in records.iter().enumerate() {
        let number = i as u64 + 1;
        if record.len() != header.len() {
            return Err(Error::Schema(format!(
                "record {number} has different keys than record 1"
            )));
        }
        let mut cells = Vec::with_capacity(header.len());
        for key in &header {
            let cell = match record.get(key) {
                None => return Err(Error::Schema(format!("record {number} lacks key `{key}`"))),
                Some(serde_json::Value::String(s)) => s.trim().to_string(),
                Some(serde_json::Value::Number(n)) => n.to_string(),
                Some(other) => {
                    return Err(Error::Parse {
                        line: number,
                        column: key.clone(),
                        message: format!("expected a number or string, got {other}"),
                    })
                }
            };
            cells.push(cell);
        }
        rows.push((number, cells));
    }
    Ok(Table { header, rows })
}

struct Layout {
    classes: Vec<String>,
    reference: Vec<usize>,
    prediction: Vec<usize>,
    id: Option<usize>,
    groups: Vec<usize>,
}

fn layout(header: &[String], group_by: &[String]) -> Result<Layout> {
    let find = |name: &str| header.iter().position(|h| h == name);
    let mut seen = std::collections::HashSet::new();
    if let Some(dup) = header.iter().find(|h| !seen.insert(h.as_str())) {
        return Err(Error::Schema(format!("duplicate column `{dup}`")));
    }
    let mut classes = Vec::new();
    let mut reference = Vec::new();
    for (i, h) in header.iter().enumerate() {
        if let Some(class) = h.strip_prefix(REF_PREFIX) {
            classes.push(class.to_string());
            reference.push(i);
        }
    }
    if classes.is_empty() {
        return Err(Error::Schema(format!("no `{REF_PREFIX}<class>` columns")));
    }
    let predicted: Vec<&str> = header.iter().filter_map(|h| h.strip_prefix(PRED_PREFIX)).collect();
    let mut prediction = Vec::with_capacity(classes.len());
    for class in &classes {
        let column = find(&format!("{PRED_PREFIX}{class}"))
            .ok_or_else(|| Error::Schema(format!("missing column `{PRED_PREFIX}{class}`")))?;
        prediction.push(column);
    }
    if let Some(extra) = predicted.iter().find(|c| !classes.iter().any(|k| k == *c)) {
        return Err(Error::Schema(format!(
            "column `{PRED_PREFIX}{extra}` has no `{REF_PREFIX}{extra}` counterpart"
        )));
    }
    let groups = group_by
        .iter()
        .map(|g| find(g).ok_or_else(|| Error::Schema(format!("missing group column `{g}`"))))
        .collect::<Result<Vec<_>>>()?;
    Ok(Layout {
        classes,
        reference,
        prediction,
        id: find(ID_COLUMN),
        groups,
    })
}

fn parse_cell(line: u64, column: &str, cell: &str) -> Result<f64> {
    let parse_error = |message: String| Error::Parse {
        line,
        column: column.to_string(),
        message,
    };
    let value: f64 = cell
        .parse()
        .map_err(|_| parse_error(format!("`{cell}` is not a number")))?;
    if !value.is_finite() {
        return Err(parse_error(format!("`{cell}` is not finite")));
    }
    Ok(value)
}

#[derive(Default)]
struct Rows {
    ids: Vec<String>,
    reference: Vec<Vec<f64>>,
    prediction: Vec<Vec<f64>>,
}

fn build_matrix(
    rows: &[Vec<f64>],
    ids: &[String],
    classes: &[String],
    options: &LoadOptions,
) -> Result<MembershipMatrix> {
    MembershipMatrix::validate(rows, classes.to_vec(), options.world, options.tolerances).map_err(|e| match e {
        Error::RowSumViolation { row, sum, .. } => Error::RowSumViolation {
            row,
            sample: ids.get(row).cloned(),
            sum,
        },
        other => other,
    })
}

fn group_table(table: Table, options: &LoadOptions) -> Result<GroupedPredictions> {
    let layout = layout(&table.header, &options.group_by)?;
    let mut by_key: BTreeMap<Vec<String>, Rows> = BTreeMap::new();
    for (index, (line, cells)) in table.rows.iter().enumerate() {
        if cells.len() != table.header.len() {
            return Err(Error::Parse {
                line: *line,
                column: String::new(),
                message: format!("expected {} fields, found {}", table.header.len(), cells.len()),
            });
        }
        let read = |columns: &[usize]| -> Result<Vec<f64>> {
            columns
                .iter()
                .map(|&c| parse_cell(*line, &table.header[c], &cells[c]))
                .collect()
        };
        let key: Vec<String> = layout.groups.iter().map(|&c| cells[c].clone()).collect();
        let entry = by_key.entry(key).or_default();
        entry.ids.push(match layout.id {
            Some(c) => cells[c].clone(),
            None => (index + 1).to_string(),
        });
        entry.reference.push(read(&layout.reference)?);
        entry.prediction.push(read(&layout.prediction)?);
    }
    if by_key.is_empty() {
        return Err(Error::Schema("no data rows".into()));
    }
    let grouped = !options.group_by.is_empty();
    let groups = by_key
        .into_iter()
        .map(|(key, rows)| {
            let key = GroupKey(key);
            let build = || -> Result<Group> {
                Ok(Group {
                    reference: build_matrix(&rows.reference, &rows.ids, &layout.classes, options)?,
                    prediction: build_matrix(&rows.prediction, &rows.ids, &layout.classes, options)?,
                    sample_ids: rows.ids.clone(),
                    key: key.clone(),
                })
            };
            build().map_err(|e| {
                if grouped {
                    e.in_group(&key.label(&options.group_by))
                } else {
                    e
                }
            })
        })
        .collect::<Result<Vec<_>>>()?;
    GroupedPredictions::new(options.group_by.clone(), groups)
}

/// Parse a dataset held in memory.
pub fn parse_dataset(bytes: &[u8], format: InputFormat, options: &LoadOptions) -> Result<GroupedPredictions> {
    let table = match format {
        InputFormat::Csv => read_csv(bytes)?,
        InputFormat::Json => read_json(bytes)?,
    };
    group_table(table, options)
}

pub fn load_dataset(path: &Path, format: InputFormat, options: &LoadOptions) -> Result<GroupedPredictions> {
    let bytes = std::fs::read(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_dataset(&bytes, format, options)
}

/// Lowercase hex SHA-256 of the raw input.
pub fn digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const TWO_SAMPLES: &str = "id,ref:a,ref:b,pred:a,pred:b\ns1,1,0,0.8,0.2\ns2,0,1,0.2,0.8\n";

    fn csv(text: &str, group_by: &[&str]) -> Result<GroupedPredictions> {
        let options = LoadOptions {
            group_by: group_by.iter().map(|s| s.to_string()).collect(),
            ..LoadOptions::default()
        };
        parse_dataset(text.as_bytes(), InputFormat::Csv, &options)
    }

    #[test]
    fn single_default_group() {
        let gp = csv(TWO_SAMPLES, &[]).unwrap();
        assert_eq!(gp.len(), 1);
        assert_eq!(gp.class_names(), ["a", "b"]);
        let g = &gp.groups()[0];
        assert_eq!(g.sample_ids, ["s1", "s2"]);
        assert_eq!(g.prediction.row(0), [0.8, 0.2]);
        assert_eq!(gp.label(g), "all");
    }

    #[test]
    fn iteration_column_gives_groups() {
        let text = "iteration,ref:a,ref:b,pred:a,pred:b\n\
                    2,1,0,0.6,0.4\n1,0,1,0.1,0.9\n3,1,0,1,0\n10,0,1,0.5,0.5\n1,1,0,0.7,0.3\n";
        let gp = csv(text, &["iteration"]).unwrap();
        let keys: Vec<String> = gp.groups().iter().map(|g| g.key.to_string()).collect();
        assert_eq!(keys, ["1", "2", "3", "10"]);
        assert_eq!(gp.groups()[0].sample_ids, ["2", "5"]);
        assert_eq!(gp.label(&gp.groups()[3]), "iteration=10");
    }

    #[test]
    fn pred_columns_follow_ref_order() {
        let text = "pred:b,pred:a,ref:a,ref:b\n0.3,0.7,1,0\n";
        let gp = csv(text, &[]).unwrap();
        assert_eq!(gp.groups()[0].prediction.row(0), [0.7, 0.3]);
    }

    #[test]
    fn row_sum_violation_names_sample() {
        let text = "id,ref:a,ref:b,pred:a,pred:b\nx1,1,0,1,0\nx2,0.5,0.4,0.5,0.5\n";
        match csv(text, &[]) {
            Err(Error::RowSumViolation {
                row: 1,
                sample: Some(id),
                ..
            }) => assert_eq!(id, "x2"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn parse_error_has_coordinates() {
        let text = "id,ref:a,ref:b,pred:a,pred:b\ns1,1,0,0.8,0.2\ns2,0,1,abc,0.8\n";
        match csv(text, &[]) {
            Err(Error::Parse { line: 3, column, .. }) => assert_eq!(column, "pred:a"),
            other => panic!("unexpected {other:?}"),
        }
        let text = "ref:a,ref:b,pred:a,pred:b\nNaN,1,0,1\n";
        assert!(matches!(csv(text, &[]), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn schema_errors() {
        assert!(matches!(csv("id,pred:a,pred:b\n1,0,1\n", &[]), Err(Error::Schema(_))));
        assert!(matches!(csv("ref:a,ref:b,pred:a\n1,0,1\n", &[]), Err(Error::Schema(_))));
        assert!(matches!(
            csv("ref:a,ref:b,pred:a,pred:c\n1,0,1,0\n", &[]),
            Err(Error::Schema(_))
        ));
        assert!(matches!(csv(TWO_SAMPLES, &["fold"]), Err(Error::Schema(_))));
        assert!(matches!(csv("ref:a,ref:b,pred:a,pred:b\n", &[]), Err(Error::Schema(_))));
        assert!(csv(TWO_SAMPLES, &[]).is_ok());
    }

    #[test]
    fn json_matches_csv() {
        let json = r#"[
            {"id": "s1", "ref:a": 1, "ref:b": 0, "pred:a": 0.8, "pred:b": 0.2},
            {"id": "s2", "ref:a": 0, "ref:b": 1, "pred:a": "0.2", "pred:b": 0.8}
        ]"#;
        let from_json = parse_dataset(json.as_bytes(), InputFormat::Json, &LoadOptions::default()).unwrap();
        assert_eq!(from_json, csv(TWO_SAMPLES, &[]).unwrap());
        let bad = r#"[{"ref:a": 1, "ref:b": null, "pred:a": 1, "pred:b": 0}]"#;
        assert!(matches!(
            parse_dataset(bad.as_bytes(), InputFormat::Json, &LoadOptions::default()),
            Err(Error::Parse { .. })
        ));
    }

    #[test]
    fn open_world_allows_any_row_sum() {
        let text = "ref:a,ref:b,pred:a,pred:b\n1,1,0.9,0.8\n0,0,0.1,0\n";
        let options = LoadOptions {
            world: World::Open,
            ..LoadOptions::default()
        };
        assert!(parse_dataset(text.as_bytes(), InputFormat::Csv, &options).is_ok());
        assert!(csv(text, &[]).is_err());
    }

    #[test]
    fn digest_is_sha256() {
        assert_eq!(
            digest(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
