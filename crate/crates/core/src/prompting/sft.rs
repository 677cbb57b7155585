use std::collections::HashSet;
use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::qa::{epoch_seed, QAPair};
use crate::error::{Error, Result};

/// Line layout of the exported conversations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SftFormat {
    /// `{"role", "content": "<text>"}` messages.
    #[default]
    Plain,
    /// Text content with an `<image>` placeholder in the user turn.
    ImagePlaceholder,
}

impl fmt::Display for SftFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SftFormat::Plain => "plain",
            SftFormat::ImagePlaceholder => "image_placeholder",
        })
    }
}

impl FromStr for SftFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "plain" => Ok(SftFormat::Plain),
            "image_placeholder" | "placeholder" => Ok(SftFormat::ImagePlaceholder),
            _ => Err(Error::InvalidInput(format!("unknown SFT format `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SftSummary {
    pub lines: usize,
    pub epochs: usize,
    pub pairs: usize,
}

fn line_for(pair: &QAPair, epoch: usize, format: SftFormat) -> Value {
    let user = match format {
        SftFormat::Plain => json!(pair.question),
        SftFormat::ImagePlaceholder => json!(format!("<image>{}", pair.question)),
    };
    json!({
        "image": pair.image_ref,
        "messages": [
            {"role": "user", "content": user},
            {"role": "assistant", "content": pair.answer},
        ],
        "meta": {
            "sample_id": pair.sample_id,
            "dataset": pair.dataset_id.to_string(),
            "query_kind": pair.query_kind,
            "epoch": epoch,
            "seed": pair.rng_seed,
            "coord_scale": pair.coord_scale,
            "template_ids": pair.template_ids,
        },
    })
}

/// Renders `epochs` passes over `pairs`, redrawing every question per pass.
pub fn sft_lines(
    pairs: &[QAPair],
    epochs: usize,
    seed: u64,
    format: SftFormat,
) -> Result<Vec<String>> {
    if pairs.is_empty() {
        return Err(Error::NoRecords);
    }
    if epochs == 0 {
        return Err(Error::InvalidInput("epochs must be at least 1".into()));
    }
    let mut seen = HashSet::new();
    for p in pairs {
        if !seen.insert((p.sample_id.as_str(), p.query_kind)) {
            return Err(Error::DuplicateSample(format!(
                "{} ({})",
                p.sample_id, p.query_kind
            )));
        }
    }
    let mut out = Vec::with_capacity(pairs.len() * epochs);
    for epoch in 0..epochs {
        let s = epoch_seed(seed, epoch);
        for p in pairs {
            let line = line_for(&p.resampled(s)?, epoch, format);
            out.push(serde_json::to_string(&line)?);
        }
    }
    Ok(out)
}

/// Writes the SFT conversation JSONL.
pub fn export_sft(
    pairs: &[QAPair],
    epochs: usize,
    seed: u64,
    out_path: &Path,
    format: SftFormat,
) -> Result<SftSummary> {
    let lines = sft_lines(pairs, epochs, seed, format)?;
    if let Some(dir) = out_path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let file = std::fs::File::create(out_path).map_err(|e| Error::io(out_path, e))?;
    let mut w = std::io::BufWriter::new(file);
    for l in &lines {
        writeln!(w, "{l}").map_err(|e| Error::io(out_path, e))?;
    }
    w.flush().map_err(|e| Error::io(out_path, e))?;
    Ok(SftSummary {
        lines: lines.len(),
        epochs,
        pairs: pairs.len(),
    })
}
