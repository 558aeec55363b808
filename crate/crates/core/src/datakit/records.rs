use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sex {
    #[serde(rename = "m")]
    Male,
    #[serde(rename = "f")]
    Female,
}

impl Sex {
    /// Class index used by classifiers: male 0, female 1.
    pub fn index(self) -> usize {
        match self {
            Sex::Male => 0,
            Sex::Female => 1,
        }
    }

    pub fn from_index(i: usize) -> Option<Self> {
        match i {
            0 => Some(Sex::Male),
            1 => Some(Sex::Female),
            _ => None,
        }
    }
}

/// One utterance embedding with its labels.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingRecord {
    pub speaker_id: String,
    pub utterance_id: String,
    pub vector: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sex: Option<Sex>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub age: Option<f64>,
}

/// Checks finiteness, a shared dimension and unique utterance ids.
pub fn validate_records(records: &[EmbeddingRecord]) -> Result<()> {
    let mut seen = HashSet::with_capacity(records.len());
    let dim = records.first().map(|r| r.vector.len());
    for (i, r) in records.iter().enumerate() {
        if Some(r.vector.len()) != dim || r.vector.is_empty() {
            return Err(Error::Data(format!("record {i} ({}) has dimension {}", r.utterance_id, r.vector.len())));
        }
        if !r.vector.iter().all(|v| v.is_finite()) || r.age.is_some_and(|a| !a.is_finite()) {
            return Err(Error::Data(format!("record {} holds a non-finite value", r.utterance_id)));
        }
        if !seen.insert(r.utterance_id.as_str()) {
            return Err(Error::Data(format!("duplicate utterance id {}", r.utterance_id)));
        }
    }
    Ok(())
}

/// Reads one JSON object per line; blank lines are skipped.
pub fn read_embeddings(path: &Path) -> Result<Vec<EmbeddingRecord>> {
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    let mut dim = None;
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let lineno = i + 1;
        let rec: EmbeddingRecord = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: lineno,
            msg: e.to_string(),
        })?;
        let bad = |msg: String| Error::Parse { line: lineno, msg };
        if !rec.vector.iter().all(|v| v.is_finite()) || rec.age.is_some_and(|a| !a.is_finite()) {
            return Err(bad("non-finite value".into()));
        }
        if *dim.get_or_insert(rec.vector.len()) != rec.vector.len() || rec.vector.is_empty() {
            return Err(bad(format!("vector has {} values", rec.vector.len())));
        }
        if !seen.insert(rec.utterance_id.clone()) {
            return Err(bad(format!("duplicate utterance id {}", rec.utterance_id)));
        }
        out.push(rec);
    }
    Ok(out)
}

pub fn write_embeddings(records: &[EmbeddingRecord], path: &Path) -> Result<()> {
    validate_records(records)?;
    let mut w = BufWriter::new(File::create(path)?);
    write_embeddings_to(records, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn write_embeddings_to<W: Write>(records: &[EmbeddingRecord], w: &mut W) -> Result<()> {
    for r in records {
        serde_json::to_writer(&mut *w, r)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}
