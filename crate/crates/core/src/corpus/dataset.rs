use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diffing::CommitRecord;
use crate::sbt::{diffsbt_buggy, diffsbt_full, EncodeError, EncoderConfig, SEPARATOR};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    /// Input holds both sides joined by the separator.
    Pretrain,
    /// Input holds the buggy side only.
    Finetune,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Pretrain => "pretrain",
            Stage::Finetune => "finetune",
        })
    }
}

impl FromStr for Stage {
    type Err = String;

    fn from_str(s: &str) -> Result<Stage, String> {
        match s {
            "pretrain" => Ok(Stage::Pretrain),
            "finetune" => Ok(Stage::Finetune),
            _ => Err(format!("unknown stage {s:?} (expected pretrain or finetune)")),
        }
    }
}

/// One (input sequence, target message) training pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetExample {
    pub id: String,
    pub repo: String,
    pub sha: String,
    pub input: String,
    pub target: String,
    pub stage: Stage,
}

impl DatasetExample {
    /// Checks the stage invariant and that the target is non-empty.
    pub fn validate(&self) -> Result<(), String> {
        let separators = self.input.split(' ').filter(|t| *t == SEPARATOR).count();
        match (self.stage, separators) {
            (Stage::Pretrain, 1) | (Stage::Finetune, 0) => {}
            (stage, n) => return Err(format!("{stage} input has {n} separator tokens")),
        }
        if self.target.trim().is_empty() {
            return Err("empty target message".into());
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("example {id} is tagged {found}, expected {expected}")]
    StageMismatch { id: String, expected: Stage, found: Stage },
    #[error("dataset line {line}: {message}")]
    Format { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Row {
    id: String,
    repo: String,
    sha: String,
    input: String,
    target: String,
}

/// Encodes a filtered record for `stage`, taking its message as the target.
pub fn encode(record: &CommitRecord, stage: Stage, cfg: &EncoderConfig) -> Result<DatasetExample, EncodeError> {
    let seq = match stage {
        Stage::Pretrain => diffsbt_full(record, cfg)?,
        Stage::Finetune => diffsbt_buggy(record, cfg)?,
    };
    Ok(DatasetExample {
        id: record.id(),
        repo: record.repo.clone(),
        sha: record.sha.clone(),
        input: seq.to_string(),
        target: record.message.clone(),
        stage,
    })
}

/// Writes examples as JSONL rows `{id, repo, sha, input, target}` in input
/// order. Every example must carry `stage`.
pub fn emit_dataset<W: Write>(examples: &[DatasetExample], stage: Stage, mut out: W) -> Result<(), DatasetError> {
    for ex in examples {
        if ex.stage != stage {
            return Err(DatasetError::StageMismatch { id: ex.id.clone(), expected: stage, found: ex.stage });
        }
    }
    for ex in examples {
        let row = Row {
            id: ex.id.clone(),
            repo: ex.repo.clone(),
            sha: ex.sha.clone(),
            input: ex.input.clone(),
            target: ex.target.clone(),
        };
        serde_json::to_writer(&mut out, &row).map_err(std::io::Error::from)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

/// Reads a file written by [`emit_dataset`], checking each row against the
/// stage invariant.
pub fn read_dataset<R: BufRead>(input: R, stage: Stage) -> Result<Vec<DatasetExample>, DatasetError> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let format = |message: String| DatasetError::Format { line: i + 1, message };
        let row: Row = serde_json::from_str(&line).map_err(|e| format(e.to_string()))?;
        let ex = DatasetExample { id: row.id, repo: row.repo, sha: row.sha, input: row.input, target: row.target, stage };
        ex.validate().map_err(format)?;
        out.push(ex);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffing::FileChange;

    fn record() -> CommitRecord {
        CommitRecord {
            repo: "o/r".into(),
            sha: "1234".into(),
            message: "fix the initial counter value".into(),
            files: vec![FileChange { path: "a.py".into(), old_source: "n = 1\n".into(), new_source: "n = 2\n".into() }],
        }
    }

    #[test]
    fn stage_invariants() {
        let cfg = EncoderConfig::default();
        let pre = encode(&record(), Stage::Pretrain, &cfg).unwrap();
        let fine = encode(&record(), Stage::Finetune, &cfg).unwrap();
        pre.validate().unwrap();
        fine.validate().unwrap();
        assert_eq!(pre.input.matches(SEPARATOR).count(), 1);
        assert!(pre.input.starts_with(&fine.input));
        assert_eq!(pre.id, "o/r@1234");
    }

    #[test]
    fn empty_list_writes_nothing() {
        let mut buf = Vec::new();
        emit_dataset(&[], Stage::Finetune, &mut buf).unwrap();
        assert!(buf.is_empty());
    }

    #[test]
    fn round_trip_is_byte_identical() {
        let ex = encode(&record(), Stage::Pretrain, &EncoderConfig::default()).unwrap();
        let mut buf = Vec::new();
        emit_dataset(&[ex.clone(), ex.clone()], Stage::Pretrain, &mut buf).unwrap();
        let back = read_dataset(buf.as_slice(), Stage::Pretrain).unwrap();
        assert_eq!(back, vec![ex.clone(), ex]);
        let mut again = Vec::new();
        emit_dataset(&back, Stage::Pretrain, &mut again).unwrap();
        assert_eq!(again, buf);
    }

    #[test]
    fn stage_mismatch_is_rejected() {
        let ex = encode(&record(), Stage::Pretrain, &EncoderConfig::default()).unwrap();
        let err = emit_dataset(&[ex], Stage::Finetune, Vec::new()).unwrap_err();
        assert!(matches!(err, DatasetError::StageMismatch { .. }));
        let mut buf = Vec::new();
        let ex = encode(&record(), Stage::Pretrain, &EncoderConfig::default()).unwrap();
        emit_dataset(&[ex], Stage::Pretrain, &mut buf).unwrap();
        assert!(matches!(read_dataset(buf.as_slice(), Stage::Finetune), Err(DatasetError::Format { line: 1, .. })));
    }
}
