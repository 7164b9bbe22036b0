use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

const TABLES_CSV: &str = include_str!("../../data/tables.csv");
const GENERATED_CSV: &str = include_str!("../../data/generated.csv");

/// One row of a formula corpus file (`id,name,formula`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusEntry {
    pub id: String,
    pub name: String,
    pub formula: String,
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot open corpus {path}: {source}")]
    Open {
        path: String,
        source: std::io::Error,
    },
    #[error("corpus header must be `id,name,formula`, found `{found}`")]
    Header { found: String },
    #[error("malformed corpus row at line {line}: {message}")]
    Row { line: u64, message: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub fn read_corpus(path: impl AsRef<Path>) -> Result<Vec<CorpusEntry>, CorpusError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| CorpusError::Open {
        path: path.display().to_string(),
        source,
    })?;
    read_corpus_from(file)
}

pub fn read_corpus_from(reader: impl Read) -> Result<Vec<CorpusEntry>, CorpusError> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(reader);
    let header = rdr.headers()?.clone();
    let names: Vec<&str> = header.iter().map(str::trim).collect();
    if names != ["id", "name", "formula"] {
        return Err(CorpusError::Header {
            found: names.join(","),
        });
    }
    let mut entries = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| CorpusError::Row {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != 3 {
            return Err(CorpusError::Row {
                line,
                message: format!("expected 3 fields, found {}", record.len()),
            });
        }
        entries.push(CorpusEntry {
            id: record[0].trim().to_string(),
            name: record[1].trim().to_string(),
            formula: record[2].to_string(),
        });
    }
    Ok(entries)
}

pub fn write_corpus(writer: impl Write, entries: &[CorpusEntry]) -> Result<(), CorpusError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["id", "name", "formula"])?;
    for e in entries {
        w.write_record([&e.id, &e.name, &e.formula])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Analog and digital reference formulas shipped with the crate.
pub fn bundled_tables() -> Vec<CorpusEntry> {
    read_corpus_from(TABLES_CSV.as_bytes()).expect("bundled table corpus is well formed")
}

/// The three generated formulas M1, M2 and M3.
pub fn bundled_generated() -> Vec<CorpusEntry> {
    read_corpus_from(GENERATED_CSV.as_bytes()).expect("bundled generated corpus is well formed")
}

pub fn bundled_tables_csv() -> &'static str {
    TABLES_CSV
}

pub fn bundled_generated_csv() -> &'static str {
    GENERATED_CSV
}

/// Look up a bundled formula by id in either corpus.
pub fn bundled_entry(id: &str) -> Option<CorpusEntry> {
    bundled_tables()
        .into_iter()
        .chain(bundled_generated())
        .find(|e| e.id.eq_ignore_ascii_case(id))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_sizes() {
        assert_eq!(bundled_tables().len(), 8);
        assert_eq!(bundled_generated().len(), 3);
        assert!(bundled_entry("m3").is_some());
    }

    #[test]
    fn rejects_bad_header() {
        let err = read_corpus_from("a,b,c\n1,2,3\n".as_bytes()).unwrap_err();
        assert!(matches!(err, CorpusError::Header { .. }));
    }

    #[test]
    fn reports_row_line() {
        let text = "id,name,formula\nx,y,t\nbad,row\n";
        match read_corpus_from(text.as_bytes()) {
            Err(CorpusError::Row { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn write_then_read() {
        let mut buf = Vec::new();
        write_corpus(&mut buf, &bundled_generated()).unwrap();
        assert_eq!(read_corpus_from(buf.as_slice()).unwrap(), bundled_generated());
    }
}
