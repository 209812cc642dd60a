use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use thiserror::Error;

use crate::diffing::CommitRecord;

#[derive(Debug, Error)]
pub enum DumpError {
    #[error("record line {line}: {message}")]
    Format { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn check(record: &CommitRecord) -> Result<(), String> {
    if record.sha.trim().is_empty() {
        return Err("empty sha".into());
    }
    if record.repo.trim().is_empty() {
        return Err("empty repo".into());
    }
    Ok(())
}

/// Iterator over the records of an NDJSON stream. Blank lines are skipped;
/// errors carry the 1-based line number.
pub struct DumpReader<R> {
    lines: std::io::Lines<R>,
    line: usize,
}

impl<R: BufRead> DumpReader<R> {
    pub fn new(input: R) -> Self {
        DumpReader { lines: input.lines(), line: 0 }
    }
}

impl<R: BufRead> Iterator for DumpReader<R> {
    type Item = Result<CommitRecord, DumpError>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let text = match self.lines.next()? {
                Ok(t) => t,
                Err(e) => return Some(Err(e.into())),
            };
            self.line += 1;
            if text.trim().is_empty() {
                continue;
            }
            let line = self.line;
            let parsed = serde_json::from_str::<CommitRecord>(&text)
                .map_err(|e| e.to_string())
                .and_then(|r| check(&r).map(|()| r))
                .map_err(|message| DumpError::Format { line, message });
            return Some(parsed);
        }
    }
}

/// Opens an NDJSON commit dump.
///
/// ```
/// use sdx_core::ingest::DumpReader;
///
/// let rows = "{\"repo\":\"o/r\",\"sha\":\"a1\",\"message\":\"m\",\"files\":[]}\n\n{\"repo\":\"o/r\",\"message\":\"m\",\"files\":[]}\n";
/// let mut records = DumpReader::new(rows.as_bytes());
/// assert_eq!(records.next().unwrap().unwrap().sha, "a1");
/// assert!(records.next().unwrap().unwrap_err().to_string().starts_with("record line 3"));
/// ```
pub fn load_dump(path: impl AsRef<Path>) -> Result<DumpReader<BufReader<File>>, DumpError> {
    Ok(DumpReader::new(BufReader::new(File::open(path)?)))
}

/// Writes one record per line.
pub fn write_records<'a, W: Write>(records: impl IntoIterator<Item = &'a CommitRecord>, mut out: W) -> std::io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_stream() {
        assert_eq!(DumpReader::new(&b""[..]).count(), 0);
    }

    #[test]
    fn round_trip() {
        let r = CommitRecord { repo: "o/r".into(), sha: "1".into(), message: "fix \"x\"\nbody".into(), files: vec![] };
        let mut buf = Vec::new();
        write_records([&r, &r], &mut buf).unwrap();
        let back: Vec<CommitRecord> = DumpReader::new(buf.as_slice()).map(Result::unwrap).collect();
        assert_eq!(back, vec![r.clone(), r]);
    }

    #[test]
    fn missing_sha_reports_line() {
        let text = "{\"repo\":\"o/r\",\"message\":\"m\",\"files\":[]}\n";
        let err = DumpReader::new(text.as_bytes()).next().unwrap().unwrap_err();
        assert!(matches!(err, DumpError::Format { line: 1, .. }));
        assert!(err.to_string().contains("sha"));
    }

    #[test]
    fn empty_sha_is_invalid() {
        let text = "{\"repo\":\"o/r\",\"sha\":\"\",\"message\":\"m\",\"files\":[]}\n";
        assert!(DumpReader::new(text.as_bytes()).next().unwrap().is_err());
    }
}
