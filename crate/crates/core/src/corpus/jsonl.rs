use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::records::{GazeSample, ProbeBox, SocialPair};
use crate::error::{Error, Result};

/// One line of the canonical corpus file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Record {
    Gaze(GazeSample),
    Social(SocialPair),
    Probe(ProbeBox),
}

impl Record {
    pub fn id(&self) -> &str {
        match self {
            Record::Gaze(g) => &g.sample_id,
            Record::Social(s) => &s.pair_id,
            Record::Probe(p) => &p.probe_id,
        }
    }
}

impl From<GazeSample> for Record {
    fn from(s: GazeSample) -> Self {
        Record::Gaze(s)
    }
}

impl From<SocialPair> for Record {
    fn from(s: SocialPair) -> Self {
        Record::Social(s)
    }
}

impl From<ProbeBox> for Record {
    fn from(s: ProbeBox) -> Self {
        Record::Probe(s)
    }
}

pub fn write_records<'a>(path: &Path, records: impl IntoIterator<Item = &'a Record>) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    for record in records {
        serde_json::to_writer(&mut out, record)?;
        out.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

pub fn read_records(path: &Path) -> Result<Vec<Record>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut records = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: Record = serde_json::from_str(&line)
            .map_err(|e| Error::InvalidInput(format!("{}:{}: {e}", path.display(), i + 1)))?;
        match &record {
            Record::Gaze(g) => g.validate()?,
            Record::Social(s) => s.validate()?,
            Record::Probe(_) => {}
        }
        records.push(record);
    }
    Ok(records)
}
