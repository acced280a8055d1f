//! Files in and out: schema files, CSV records, mesh archives, DOT graphs.

mod archive;
mod dot;

use std::fs;
use std::io::Read;
use std::path::Path;

pub use archive::{load_mesh, mesh_from_str, mesh_to_string, save_mesh, ARCHIVE_VERSION};
pub use dot::{export_dot, write_dot, DotScope};

use crate::error::{Error, Result};
use crate::tabular::{Record, Schema};

pub fn read_schema(path: impl AsRef<Path>) -> Result<Schema> {
    fs::read_to_string(path)?.parse()
}

/// Typed records from a CSV file whose header names the schema attributes in
/// order, optionally preceded by a serial-number column.
pub fn ingest_csv(path: impl AsRef<Path>, schema: &Schema) -> Result<Vec<Record>> {
    ingest_csv_reader(fs::File::open(path)?, schema)
}

pub fn ingest_csv_reader(reader: impl Read, schema: &Schema) -> Result<Vec<Record>> {
    let mut csv = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header: Vec<String> = csv.headers()?.iter().map(str::to_string).collect();
    let names: Vec<&str> = schema
        .attributes()
        .iter()
        .map(|a| a.name.as_str())
        .collect();
    let skip = if header == names {
        0
    } else if header.len() == names.len() + 1 && header[1..] == names[..] {
        1
    } else {
        return Err(Error::HeaderMismatch(format!(
            "expected [{}], found [{}]",
            names.join(","),
            header.join(",")
        )));
    };
    let mut records = Vec::new();
    for row in csv.records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line());
        let bad = |message: String| Error::RowParse { line, message };
        if row.len() != header.len() {
            return Err(bad(format!(
                "expected {} fields, found {}",
                header.len(),
                row.len()
            )));
        }
        let mut record = Record::new();
        for (attr, text) in schema.attributes().iter().zip(row.iter().skip(skip)) {
            let value = attr
                .kind
                .parse_value(text)
                .map_err(|e| bad(format!("{}: {e}", attr.name)))?;
            record.insert(&attr.name, value);
        }
        records.push(record);
    }
    Ok(records)
}
