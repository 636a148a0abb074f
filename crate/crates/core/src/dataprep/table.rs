use std::collections::BTreeMap;
use std::fs::File;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{ClassLabel, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnKind {
    #[default]
    Numeric,
    Categorical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnSpec {
    pub name: String,
    #[serde(default)]
    pub kind: ColumnKind,
}

/// Maps raw label strings to the two classes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelSpec {
    pub column: String,
    pub class1: Vec<String>,
    pub class2: Vec<String>,
}

/// Describes how to read a CSV file.
///
/// With `has_header` the file's first row names the columns and ingestion is
/// keyed by name, so column order is irrelevant. Headerless files must list
/// every column, in file order, in `file_columns`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schema {
    #[serde(default = "default_true")]
    pub has_header: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub file_columns: Option<Vec<String>>,
    pub features: Vec<ColumnSpec>,
    pub label: LabelSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id_column: Option<String>,
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq)]
pub enum Column {
    Numeric(Vec<f64>),
    Categorical(Vec<String>),
}

impl Column {
    fn select(&self, rows: &[usize]) -> Column {
        match self {
            Column::Numeric(v) => Column::Numeric(rows.iter().map(|&i| v[i]).collect()),
            Column::Categorical(v) => Column::Categorical(rows.iter().map(|&i| v[i].clone()).collect()),
        }
    }
}

/// Typed in-memory table with one label per row.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub case_ids: Vec<String>,
    pub labels: Vec<ClassLabel>,
    pub columns: Vec<(String, Column)>,
    /// Missing cells per column seen during ingestion.
    pub missing: BTreeMap<String, usize>,
}

impl Table {
    pub fn n_rows(&self) -> usize {
        self.labels.len()
    }

    pub fn column(&self, name: &str) -> Option<&Column> {
        self.columns.iter().find(|(n, _)| n == name).map(|(_, c)| c)
    }

    pub fn numeric(&self, name: &str) -> Option<&[f64]> {
        match self.column(name)? {
            Column::Numeric(v) => Some(v),
            Column::Categorical(_) => None,
        }
    }

    pub fn class_counts(&self) -> (usize, usize) {
        let c1 = self.labels.iter().filter(|&&l| l == ClassLabel::Class1).count();
        (c1, self.labels.len() - c1)
    }

    /// Rows `rows`, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Table {
        Table {
            case_ids: rows.iter().map(|&i| self.case_ids[i].clone()).collect(),
            labels: rows.iter().map(|&i| self.labels[i]).collect(),
            columns: self
                .columns
                .iter()
                .map(|(n, c)| (n.clone(), c.select(rows)))
                .collect(),
            missing: self.missing.clone(),
        }
    }
}

pub fn ingest_csv(path: &Path, schema: &Schema) -> Result<Table> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    ingest_reader(file, schema)
}

pub fn ingest_reader<R: Read>(reader: R, schema: &Schema) -> Result<Table> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .flexible(false)
        .from_reader(reader);
    let mut records = rdr.records();

    let names: Vec<String> = if schema.has_header {
        let first = match records.next() {
            Some(r) => r.map_err(|e| Error::csv("header", e))?,
            None => return Err(Error::MissingHeader { first_row: Vec::new() }),
        };
        let first: Vec<String> = first.iter().map(str::to_string).collect();
        if !first.is_empty() && first.iter().all(|c| c.parse::<f64>().is_ok()) {
            return Err(Error::MissingHeader { first_row: first });
        }
        first
    } else {
        schema.file_columns.clone().ok_or_else(|| {
            Error::Config("a headerless schema must list `file_columns`".into())
        })?
    };

    let position = |name: &str| -> Result<usize> {
        names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let feature_pos: Vec<usize> = schema
        .features
        .iter()
        .map(|f| position(&f.name))
        .collect::<Result<_>>()?;
    let label_pos = position(&schema.label.column)?;
    let id_pos = schema.id_column.as_deref().map(position).transpose()?;

    let mut case_ids = Vec::new();
    let mut labels = Vec::new();
    let mut columns: Vec<Column> = schema
        .features
        .iter()
        .map(|f| match f.kind {
            ColumnKind::Numeric => Column::Numeric(Vec::new()),
            ColumnKind::Categorical => Column::Categorical(Vec::new()),
        })
        .collect();
    let mut missing: BTreeMap<String, usize> = schema.features.iter().map(|f| (f.name.clone(), 0)).collect();
    let mut first_missing: Option<(usize, String)> = None;

    for (idx, record) in records.enumerate() {
        let row = idx + 1;
        let record = record.map_err(|e| Error::csv(format!("data row {row}"), e))?;
        if record.len() == 1 && record.get(0) == Some("") {
            continue;
        }
        if record.len() != names.len() {
            return Err(Error::RowWidth {
                row,
                got: record.len(),
                expected: names.len(),
            });
        }
        let label_raw = &record[label_pos];
        let label = if schema.label.class1.iter().any(|v| v == label_raw) {
            ClassLabel::Class1
        } else if schema.label.class2.iter().any(|v| v == label_raw) {
            ClassLabel::Class2
        } else {
            return Err(Error::UnknownLabel {
                row,
                value: label_raw.to_string(),
            });
        };
        labels.push(label);
        case_ids.push(match id_pos {
            Some(p) => record[p].to_string(),
            None => row.to_string(),
        });
        for ((spec, &pos), col) in schema.features.iter().zip(&feature_pos).zip(columns.iter_mut()) {
            let cell = &record[pos];
            if cell.is_empty() || cell.eq_ignore_ascii_case("na") || cell.eq_ignore_ascii_case("nan") {
                *missing.get_mut(&spec.name).unwrap() += 1;
                first_missing.get_or_insert((row, spec.name.clone()));
                continue;
            }
            match col {
                Column::Numeric(v) => v.push(cell.parse::<f64>().map_err(|_| Error::ParseCell {
                    row,
                    column: spec.name.clone(),
                    value: cell.to_string(),
                })?),
                Column::Categorical(v) => v.push(cell.to_string()),
            }
        }
    }

    if let Some((row, column)) = first_missing {
        log::warn!("missing cells per column: {missing:?}");
        return Err(Error::MissingValue { row, column });
    }
    Ok(Table {
        case_ids,
        labels,
        columns: schema
            .features
            .iter()
            .map(|f| f.name.clone())
            .zip(columns)
            .collect(),
        missing,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn schema() -> Schema {
        Schema {
            has_header: true,
            file_columns: None,
            features: vec![
                ColumnSpec { name: "a".into(), kind: ColumnKind::Numeric },
                ColumnSpec { name: "sex".into(), kind: ColumnKind::Categorical },
            ],
            label: LabelSpec {
                column: "y".into(),
                class1: vec!["1".into()],
                class2: vec!["0".into()],
            },
            id_column: None,
        }
    }

    #[test]
    fn header_keyed_ingestion_ignores_column_order() {
        let a = ingest_reader("a,sex,y\n1.5,M,1\n-2,F,0\n".as_bytes(), &schema()).unwrap();
        let b = ingest_reader("y,sex,a\n1,M,1.5\n0,F,-2\n".as_bytes(), &schema()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.n_rows(), 2);
        assert_eq!(a.numeric("a").unwrap(), &[1.5, -2.0]);
        assert_eq!(a.labels, vec![ClassLabel::Class1, ClassLabel::Class2]);
        assert!(a.missing.values().all(|&m| m == 0));
    }

    #[test]
    fn missing_header_and_column_are_named_errors() {
        assert!(matches!(
            ingest_reader("1.5,2,1\n".as_bytes(), &schema()),
            Err(Error::MissingHeader { .. })
        ));
        assert!(matches!(
            ingest_reader("a,y\n1,1\n".as_bytes(), &schema()),
            Err(Error::MissingColumn(c)) if c == "sex"
        ));
    }

    #[test]
    fn bad_cells_report_position() {
        match ingest_reader("a,sex,y\n1,M,1\nabc,F,0\n".as_bytes(), &schema()) {
            Err(Error::ParseCell { row, column, value }) => {
                assert_eq!((row, column.as_str(), value.as_str()), (2, "a", "abc"));
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            ingest_reader("a,sex,y\n1,,1\n".as_bytes(), &schema()),
            Err(Error::MissingValue { row: 1, .. })
        ));
        assert!(matches!(
            ingest_reader("a,sex,y\n1,M,7\n".as_bytes(), &schema()),
            Err(Error::UnknownLabel { row: 1, .. })
        ));
    }

    #[test]
    fn headerless_files_use_declared_columns() {
        let mut s = schema();
        s.has_header = false;
        s.file_columns = Some(vec!["sex".into(), "a".into(), "y".into()]);
        let t = ingest_reader("M,3,0\nF,4,1\n".as_bytes(), &s).unwrap();
        assert_eq!(t.numeric("a").unwrap(), &[3.0, 4.0]);
        assert_eq!(t.case_ids, vec!["1", "2"]);
    }
}
