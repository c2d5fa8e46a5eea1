//! Schema document and CSV loading.
//!
//! The schema document has one line per table:
//!
//! ```text
//! orders: customer,amount @ orders.csv
//! ```
//!
//! Blank lines and lines starting with `#` are ignored. CSV paths are
//! resolved relative to the schema document's directory.

use std::fs;
use std::path::{Path, PathBuf};

use super::Database;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SchemaEntry {
    pub table: String,
    pub columns: Vec<String>,
    pub path: PathBuf,
}

pub fn parse_schema_doc(doc: &str, origin: &str) -> Result<Vec<SchemaEntry>> {
    let mut entries: Vec<SchemaEntry> = Vec::new();
    for (i, raw) in doc.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |message: &str| Error::Parse {
            file: origin.to_string(),
            line: i + 1,
            message: message.to_string(),
        };
        let (name, rest) = line.split_once(':').ok_or_else(|| err("expected '<table>: <cols> @ <csv>'"))?;
        let (cols, path) = rest.split_once('@').ok_or_else(|| err("missing '@ <csv path>'"))?;
        let name = name.trim();
        if name.is_empty() {
            return Err(err("empty table name"));
        }
        let columns: Vec<String> = cols.split(',').map(|c| c.trim().to_string()).collect();
        if columns.iter().any(|c| c.is_empty()) {
            return Err(err("empty column name"));
        }
        let path = path.trim();
        if path.is_empty() {
            return Err(err("empty csv path"));
        }
        if entries.iter().any(|e| e.table == name) {
            return Err(Error::DuplicateTable(name.to_string()));
        }
        entries.push(SchemaEntry { table: name.to_string(), columns, path: PathBuf::from(path) });
    }
    if entries.is_empty() {
        return Err(Error::Parse { file: origin.to_string(), line: 0, message: "schema declares no tables".into() });
    }
    Ok(entries)
}

/// Loads the schema document at `schema_path` and every CSV it references.
pub fn load_database(schema_path: &Path) -> Result<Database> {
    let doc = fs::read_to_string(schema_path).map_err(|source| Error::Io { path: schema_path.to_path_buf(), source })?;
    let base = schema_path.parent().unwrap_or_else(|| Path::new("."));
    let entries = parse_schema_doc(&doc, &schema_path.display().to_string())?;
    let mut specs = Vec::with_capacity(entries.len());
    for e in &entries {
        let path = base.join(&e.path);
        let rows = read_csv(&path, &e.columns)?;
        specs.push((e.table.as_str(), e.columns.clone(), rows));
    }
    Database::from_tables(specs)
}

fn read_csv(path: &Path, columns: &[String]) -> Result<Vec<Vec<f64>>> {
    let file = path.display().to_string();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_error(&file, e))?;
    let header = reader.headers().map_err(|e| csv_error(&file, e))?.clone();
    let mut positions = Vec::with_capacity(columns.len());
    for c in columns {
        let pos = header.iter().position(|h| h == c).ok_or_else(|| Error::Parse {
            file: file.clone(),
            line: 1,
            message: format!("header has no column '{c}'"),
        })?;
        positions.push(pos);
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(&file, e))?;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
        let mut row = Vec::with_capacity(positions.len());
        for (&p, c) in positions.iter().zip(columns) {
            let cell = record.get(p).unwrap_or("");
            let v: f64 = cell.parse().map_err(|_| Error::Parse {
                file: file.clone(),
                line,
                message: format!("column '{c}': '{cell}' is not a number"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse { file: file.clone(), line, message: format!("column '{c}': non-finite value") });
            }
            row.push(v);
        }
        rows.push(row);
    }
    Ok(rows)
}

fn csv_error(file: &str, e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
    match e.into_kind() {
        csv::ErrorKind::Io(source) => Error::Io { path: PathBuf::from(file), source },
        kind => Error::Parse { file: file.to_string(), line, message: format!("{kind:?}") },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_schema_lines() {
        let doc = "# comment\nT1: f1, f2 @ t1.csv\n\nT2: f2,f3 @ data/t2.csv\n";
        let entries = parse_schema_doc(doc, "s").unwrap();
        assert_eq!(entries.len(), 2);
        assert_eq!(entries[1].columns, vec!["f2", "f3"]);
        assert_eq!(entries[1].path, PathBuf::from("data/t2.csv"));
    }

    #[test]
    fn reports_line_of_bad_schema_entry() {
        let err = parse_schema_doc("T1: a @ a.csv\nT2 b c\n", "s.txt").unwrap_err();
        match err {
            Error::Parse { line, file, .. } => {
                assert_eq!(line, 2);
                assert_eq!(file, "s.txt");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn duplicate_table_names() {
        let err = parse_schema_doc("T: a @ a.csv\nT: b @ b.csv\n", "s").unwrap_err();
        assert!(matches!(err, Error::DuplicateTable(n) if n == "T"));
    }

    #[test]
    fn loads_csv_and_reports_bad_cells() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("t1.csv"), "f2,f1\n1,1\n1,2\n").unwrap();
        fs::write(dir.path().join("t2.csv"), "f2,f3\n1,x\n").unwrap();
        fs::write(dir.path().join("ok.txt"), "T1: f1,f2 @ t1.csv\n").unwrap();
        let db = load_database(&dir.path().join("ok.txt")).unwrap();
        assert_eq!(db.tables()[0].row(1), &[2.0, 1.0]);

        fs::write(dir.path().join("bad.txt"), "T1: f1,f2 @ t1.csv\nT2: f2,f3 @ t2.csv\n").unwrap();
        match load_database(&dir.path().join("bad.txt")).unwrap_err() {
            Error::Parse { file, line, .. } => {
                assert!(file.ends_with("t2.csv"));
                assert_eq!(line, 2);
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
