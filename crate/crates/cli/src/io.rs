use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::Deserialize;
use serde_json::Value;
use sdx_core::CommitRecord;

use crate::{data, CliError};

fn is_stdio(path: Option<&str>) -> bool {
    matches!(path, None | Some("-"))
}

pub fn open_input(path: Option<&str>) -> Result<Box<dyn BufRead>, CliError> {
    if is_stdio(path) {
        return Ok(Box::new(BufReader::new(io::stdin())));
    }
    let path = path.unwrap();
    let file = File::open(path).map_err(|e| CliError::Data(format!("cannot open {path}: {e}")))?;
    Ok(Box::new(BufReader::new(file)))
}

pub fn open_output(path: Option<&str>) -> Result<Box<dyn Write>, CliError> {
    if is_stdio(path) {
        return Ok(Box::new(BufWriter::new(io::stdout())));
    }
    create(Path::new(path.unwrap()))
}

pub fn create(path: &Path) -> Result<Box<dyn Write>, CliError> {
    let file = File::create(path).map_err(|e| CliError::Data(format!("cannot create {}: {e}", path.display())))?;
    Ok(Box::new(BufWriter::new(file)))
}

/// Writes `value` as one JSON line.
pub fn write_line<T: serde::Serialize>(out: &mut dyn Write, value: &T) -> Result<(), CliError> {
    serde_json::to_writer(&mut *out, value).map_err(data)?;
    out.write_all(b"\n").map_err(data)
}

/// Non-blank lines with their 1-based line numbers.
pub fn lines(input: Box<dyn BufRead>) -> impl Iterator<Item = Result<(usize, String), CliError>> {
    input
        .lines()
        .enumerate()
        .map(|(i, line)| line.map(|l| (i + 1, l)).map_err(data))
        .filter(|r| !matches!(r, Ok((_, l)) if l.trim().is_empty()))
}

#[derive(Debug, Deserialize)]
pub struct ExampleRow {
    pub id: String,
    pub input: String,
    pub target: String,
}

/// A line consumed by `index` and `explain`: a commit record or an encoded
/// dataset row.
#[derive(Debug)]
pub enum Row {
    Record(CommitRecord),
    Example(ExampleRow),
}

impl Row {
    pub fn parse(line_no: usize, text: &str) -> Result<Row, CliError> {
        let bad = |e: serde_json::Error| CliError::Data(format!("line {line_no}: {e}"));
        let value: Value = serde_json::from_str(text).map_err(bad)?;
        if value.get("files").is_some() {
            serde_json::from_value(value).map(Row::Record).map_err(bad)
        } else {
            serde_json::from_value(value).map(Row::Example).map_err(bad)
        }
    }

    pub fn id(&self) -> String {
        match self {
            Row::Record(r) => r.id(),
            Row::Example(e) => e.id.clone(),
        }
    }

    pub fn message(&self) -> &str {
        match self {
            Row::Record(r) => &r.message,
            Row::Example(e) => &e.target,
        }
    }
}
