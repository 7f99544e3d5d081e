//! Tabular dataset ingestion: CSV with a header row, an optional schema
//! sidecar naming each attribute's kind, and kind inference when no
//! schema is given (a column is continuous iff every value parses as a
//! finite number).

use std::fmt;
use std::fs;
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("csv parse error: {0}")]
    Csv(#[from] csv::Error),
    #[error("dataset has no data rows")]
    Empty,
    #[error("dataset has no attributes")]
    NoAttributes,
    #[error("row {row} has {got} fields, expected {expected}")]
    RaggedRow {
        row: usize,
        expected: usize,
        got: usize,
    },
    #[error("missing value at row {row}, attribute {attribute:?} (no imputation is performed)")]
    MissingValue { row: usize, attribute: String },
    #[error("non-numeric value {value:?} at row {row} in continuous attribute {attribute:?}")]
    NonNumeric {
        row: usize,
        attribute: String,
        value: String,
    },
    #[error("non-finite value {value} at row {row} in continuous attribute {attribute:?}")]
    NonFinite {
        row: usize,
        attribute: String,
        value: f64,
    },
    #[error("schema line {line}: {reason}")]
    BadSchemaLine { line: usize, reason: String },
    #[error("schema names attribute {attribute:?} which is not a CSV column")]
    SchemaColumnMismatch { attribute: String },
    #[error("schema covers {got} attributes, CSV has {expected}")]
    SchemaLengthMismatch { expected: usize, got: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AttributeKind {
    Continuous,
    Categorical,
}

impl fmt::Display for AttributeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AttributeKind::Continuous => write!(f, "continuous"),
            AttributeKind::Categorical => write!(f, "categorical"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttributeSpec {
    pub name: String,
    pub kind: AttributeKind,
}

/// A single cell: numeric for continuous attributes, text for categorical.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Number(f64),
    Text(String),
}

impl Value {
    pub fn as_number(&self) -> Option<f64> {
        match self {
            Value::Number(x) => Some(*x),
            Value::Text(_) => None,
        }
    }

    pub fn as_text(&self) -> Option<&str> {
        match self {
            Value::Text(s) => Some(s),
            Value::Number(_) => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub schema: Vec<AttributeSpec>,
    pub rows: Vec<Vec<Value>>,
}

impl Dataset {
    pub fn row_count(&self) -> usize {
        self.rows.len()
    }

    pub fn attribute_count(&self) -> usize {
        self.schema.len()
    }

    /// Typed dataset from raw string cells, validating every cell against
    /// the schema. Rows and schema must already be aligned.
    pub fn from_cells(
        schema: Vec<AttributeSpec>,
        cells: Vec<Vec<String>>,
    ) -> Result<Self, DataError> {
        if schema.is_empty() {
            return Err(DataError::NoAttributes);
        }
        if cells.is_empty() {
            return Err(DataError::Empty);
        }
        let mut rows = Vec::with_capacity(cells.len());
        for (r, raw) in cells.into_iter().enumerate() {
            if raw.len() != schema.len() {
                return Err(DataError::RaggedRow {
                    row: r + 1,
                    expected: schema.len(),
                    got: raw.len(),
                });
            }
            let mut row = Vec::with_capacity(schema.len());
            for (spec, cell) in schema.iter().zip(raw) {
                let cell = cell.trim().to_string();
                if cell.is_empty() {
                    return Err(DataError::MissingValue {
                        row: r + 1,
                        attribute: spec.name.clone(),
                    });
                }
                match spec.kind {
                    AttributeKind::Continuous => {
                        let x: f64 = cell.parse().map_err(|_| DataError::NonNumeric {
                            row: r + 1,
                            attribute: spec.name.clone(),
                            value: cell.clone(),
                        })?;
                        if !x.is_finite() {
                            return Err(DataError::NonFinite {
                                row: r + 1,
                                attribute: spec.name.clone(),
                                value: x,
                            });
                        }
                        row.push(Value::Number(x));
                    }
                    AttributeKind::Categorical => row.push(Value::Text(cell)),
                }
            }
            rows.push(row);
        }
        Ok(Dataset { schema, rows })
    }
}

fn read_csv_cells(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>), DataError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| match e.kind() {
            csv::ErrorKind::Io(_) => DataError::Io {
                path: path.display().to_string(),
                source: std::io::Error::other(e.to_string()),
            },
            _ => DataError::Csv(e),
        })?;
    let headers: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    let mut cells = Vec::new();
    for record in reader.records() {
        let record = record?;
        cells.push(record.iter().map(str::to_string).collect());
    }
    Ok((headers, cells))
}

/// Parse a schema sidecar: one `name,kind` line per attribute, kind in
/// {continuous, categorical}. Order must match the CSV columns.
pub fn parse_schema(text: &str) -> Result<Vec<AttributeSpec>, DataError> {
    let mut specs = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (name, kind) = line
            .rsplit_once(',')
            .ok_or_else(|| DataError::BadSchemaLine {
                line: idx + 1,
                reason: "expected `name,kind`".to_string(),
            })?;
        let kind = match kind.trim().to_ascii_lowercase().as_str() {
            "continuous" => AttributeKind::Continuous,
            "categorical" => AttributeKind::Categorical,
            other => {
                return Err(DataError::BadSchemaLine {
                    line: idx + 1,
                    reason: format!("unknown kind {other:?}"),
                })
            }
        };
        specs.push(AttributeSpec {
            name: name.trim().to_string(),
            kind,
        });
    }
    if specs.is_empty() {
        return Err(DataError::NoAttributes);
    }
    Ok(specs)
}

fn infer_schema(headers: &[String], cells: &[Vec<String>]) -> Vec<AttributeSpec> {
    headers
        .iter()
        .enumerate()
        .map(|(col, name)| {
            let numeric = cells.iter().all(|row| {
                row.get(col)
                    .map(|c| {
                        c.trim()
                            .parse::<f64>()
                            .map(|x| x.is_finite())
                            .unwrap_or(false)
                    })
                    .unwrap_or(false)
            });
            AttributeSpec {
                name: name.clone(),
                kind: if numeric {
                    AttributeKind::Continuous
                } else {
                    AttributeKind::Categorical
                },
            }
        })
        .collect()
}

/// Load a CSV dataset, taking attribute kinds from the sidecar when given
/// and inferring them otherwise.
pub fn load_dataset(csv_path: &Path, schema_path: Option<&Path>) -> Result<Dataset, DataError> {
    let (headers, cells) = read_csv_cells(csv_path)?;
    let schema = match schema_path {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|source| DataError::Io {
                path: p.display().to_string(),
                source,
            })?;
            let specs = parse_schema(&text)?;
            if specs.len() != headers.len() {
                return Err(DataError::SchemaLengthMismatch {
                    expected: headers.len(),
                    got: specs.len(),
                });
            }
            for spec in &specs {
                if !headers.contains(&spec.name) {
                    return Err(DataError::SchemaColumnMismatch {
                        attribute: spec.name.clone(),
                    });
                }
            }
            // keep CSV column order
            headers
                .iter()
                .map(|h| specs.iter().find(|s| &s.name == h).unwrap().clone())
                .collect()
        }
        None => infer_schema(&headers, &cells),
    };
    Dataset::from_cells(schema, cells)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_temp(name: &str, contents: &str) -> std::path::PathBuf {
        let path = std::env::temp_dir().join(format!("rca_dataset_{}_{name}", std::process::id()));
        let mut f = fs::File::create(&path).unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        path
    }

    #[test]
    fn infers_kinds_from_values() {
        let path = write_temp("infer.csv", "petals,color\n5,White\n10,Red\n");
        let ds = load_dataset(&path, None).unwrap();
        assert_eq!(ds.schema[0].kind, AttributeKind::Continuous);
        assert_eq!(ds.schema[1].kind, AttributeKind::Categorical);
        assert_eq!(ds.rows[0][0], Value::Number(5.0));
        assert_eq!(ds.rows[1][1], Value::Text("Red".to_string()));
        fs::remove_file(path).ok();
    }

    #[test]
    fn schema_sidecar_overrides_inference() {
        let csv = write_temp("sidecar.csv", "id,grade\n1,7\n2,9\n");
        let schema = write_temp("sidecar.schema", "id,continuous\ngrade,categorical\n");
        let ds = load_dataset(&csv, Some(&schema)).unwrap();
        assert_eq!(ds.schema[1].kind, AttributeKind::Categorical);
        assert_eq!(ds.rows[0][1], Value::Text("7".to_string()));
        fs::remove_file(csv).ok();
        fs::remove_file(schema).ok();
    }

    #[test]
    fn missing_value_is_rejected() {
        let path = write_temp("missing.csv", "a,b\n1,x\n,y\n");
        let err = load_dataset(&path, None).unwrap_err();
        assert!(
            matches!(err, DataError::MissingValue { row: 2, .. }),
            "{err}"
        );
        fs::remove_file(path).ok();
    }

    #[test]
    fn non_numeric_in_declared_continuous_column() {
        let csv = write_temp("nonnum.csv", "a\nfoo\n");
        let schema = write_temp("nonnum.schema", "a,continuous\n");
        let err = load_dataset(&csv, Some(&schema)).unwrap_err();
        assert!(matches!(err, DataError::NonNumeric { row: 1, .. }), "{err}");
        fs::remove_file(csv).ok();
        fs::remove_file(schema).ok();
    }

    #[test]
    fn empty_dataset_is_rejected() {
        let path = write_temp("empty.csv", "a,b\n");
        assert!(matches!(load_dataset(&path, None), Err(DataError::Empty)));
        fs::remove_file(path).ok();
    }
}
