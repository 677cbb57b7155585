//! Tabular source adapters. A [`ColumnMapping`] names which columns of a CSV
//! or JSONL source hold the image reference, head box and gaze point; rows
//! are converted to unit coordinates and multi-annotator rows for the same
//! head collapse into one [`GazeSample`].

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::records::{DatasetId, GazeSample, ImageSize, Split};
use crate::error::{Error, Result};
use crate::geometry::{HeadBox, Point2};
use crate::seed::sha256_hex;

pub type SourceRow = Map<String, Value>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum CoordSpace {
    #[default]
    Pixel,
    Normalized,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Columns {
    pub image: String,
    pub x_min: String,
    pub y_min: String,
    pub x_max: String,
    pub y_max: String,
    pub gaze_x: String,
    pub gaze_y: String,
    #[serde(default)]
    pub inout: Option<String>,
    #[serde(default)]
    pub split: Option<String>,
    #[serde(default)]
    pub frame_index: Option<String>,
    #[serde(default)]
    pub width: Option<String>,
    #[serde(default)]
    pub height: Option<String>,
}

/// Per-dataset column-mapping config, usually loaded from TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnMapping {
    pub dataset: DatasetId,
    #[serde(default)]
    pub coords: CoordSpace,
    #[serde(default = "default_split")]
    pub default_split: Split,
    pub columns: Columns,
}

fn default_split() -> Split {
    Split::Test
}

impl ColumnMapping {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }
}

/// Resolves image dimensions from an explicit table, falling back to
/// reading image headers under `root`.
#[derive(Debug, Clone, Default)]
pub struct ImageSizeLookup {
    pub sizes: HashMap<String, ImageSize>,
    pub root: Option<PathBuf>,
}

impl ImageSizeLookup {
    pub fn from_table(sizes: HashMap<String, ImageSize>) -> Self {
        ImageSizeLookup { sizes, root: None }
    }

    /// Loads a `image,width,height` CSV.
    pub fn load_csv(path: &Path) -> Result<Self> {
        let mut reader = csv::Reader::from_path(path)?;
        let mut sizes = HashMap::new();
        for row in reader.records() {
            let row = row?;
            let parse = |i: usize| -> Result<u32> {
                row.get(i)
                    .and_then(|v| v.trim().parse().ok())
                    .ok_or_else(|| Error::InvalidInput(format!("bad size row {row:?}")))
            };
            let image = row
                .get(0)
                .ok_or_else(|| Error::InvalidInput("empty size row".into()))?;
            sizes.insert(image.to_string(), ImageSize::new(parse(1)?, parse(2)?));
        }
        Ok(Self::from_table(sizes))
    }

    pub fn resolve(&self, image_ref: &str) -> Option<ImageSize> {
        if let Some(size) = self.sizes.get(image_ref) {
            return Some(*size);
        }
        let root = self.root.as_ref()?;
        let (w, h) = image::image_dimensions(root.join(image_ref)).ok()?;
        Some(ImageSize::new(w, h))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rejection {
    pub row: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Default)]
pub struct IngestOutcome {
    pub samples: Vec<GazeSample>,
    pub rejections: Vec<Rejection>,
}

/// Loads rows from `.csv` (header row required) or JSON-lines files.
pub fn load_rows(path: &Path) -> Result<Vec<SourceRow>> {
    let is_csv = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    if is_csv {
        let mut reader = csv::Reader::from_path(path)?;
        let headers = reader.headers()?.clone();
        let mut rows = Vec::new();
        for record in reader.records() {
            let record = record?;
            let row: SourceRow = headers
                .iter()
                .zip(record.iter())
                .map(|(k, v)| (k.to_string(), Value::String(v.to_string())))
                .collect();
            rows.push(row);
        }
        return Ok(rows);
    }
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rows = Vec::new();
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<Value>(&line)? {
            Value::Object(map) => rows.push(map),
            other => {
                return Err(Error::InvalidInput(format!(
                    "expected a JSON object per line, got {other}"
                )))
            }
        }
    }
    Ok(rows)
}

fn field<'a>(row: &'a SourceRow, column: &str) -> Option<&'a Value> {
    row.get(column).filter(|v| match v {
        Value::Null => false,
        Value::String(s) => !s.trim().is_empty(),
        _ => true,
    })
}

fn number(row: &SourceRow, column: &str) -> std::result::Result<f64, String> {
    let value = field(row, column).ok_or_else(|| format!("missing column `{column}`"))?;
    let parsed = match value {
        Value::Number(n) => n.as_f64(),
        Value::String(s) => s.trim().parse::<f64>().ok(),
        _ => None,
    };
    parsed
        .filter(|v| v.is_finite())
        .ok_or_else(|| format!("non-numeric `{column}`: {value}"))
}

fn text(row: &SourceRow, column: &str) -> std::result::Result<String, String> {
    match field(row, column) {
        Some(Value::String(s)) => Ok(s.trim().to_string()),
        Some(Value::Number(n)) => Ok(n.to_string()),
        _ => Err(format!("missing column `{column}`")),
    }
}

fn inout(value: &Value) -> std::result::Result<bool, String> {
    match value {
        Value::Bool(b) => Ok(*b),
        Value::Number(n) => match n.as_f64() {
            Some(1.0) => Ok(true),
            Some(v) if v == 0.0 || v == -1.0 => Ok(false),
            _ => Err(format!("bad inout value {n}")),
        },
        Value::String(s) => match s.trim().to_ascii_lowercase().as_str() {
            "1" | "1.0" | "true" | "in" => Ok(true),
            "0" | "0.0" | "-1" | "false" | "out" => Ok(false),
            other => Err(format!("bad inout value `{other}`")),
        },
        other => Err(format!("bad inout value {other}")),
    }
}

fn box_reason(e: Error) -> String {
    match e {
        Error::InvalidBox(reason) => reason,
        other => other.to_string(),
    }
}

struct ParsedRow {
    image_ref: String,
    size: ImageSize,
    head: HeadBox,
    point: Option<Point2>,
    inout: Option<bool>,
    split: Split,
    frame_index: Option<u64>,
}

fn parse_row(
    row: &SourceRow,
    mapping: &ColumnMapping,
    sizes: &ImageSizeLookup,
) -> std::result::Result<ParsedRow, String> {
    let cols = &mapping.columns;
    let image_ref = text(row, &cols.image)?;
    let size = match (&cols.width, &cols.height) {
        (Some(w), Some(h)) if field(row, w).is_some() && field(row, h).is_some() => {
            let (w, h) = (number(row, w)?, number(row, h)?);
            if w < 1.0 || h < 1.0 {
                return Err("unresolved image dimensions".into());
            }
            ImageSize::new(w as u32, h as u32)
        }
        _ => sizes
            .resolve(&image_ref)
            .ok_or_else(|| "unresolved image dimensions".to_string())?,
    };
    let raw_box = [
        number(row, &cols.x_min)?,
        number(row, &cols.y_min)?,
        number(row, &cols.x_max)?,
        number(row, &cols.y_max)?,
    ];
    let pixel_box = match mapping.coords {
        CoordSpace::Pixel => raw_box,
        CoordSpace::Normalized => [
            raw_box[0] * size.width as f64,
            raw_box[1] * size.height as f64,
            raw_box[2] * size.width as f64,
            raw_box[3] * size.height as f64,
        ],
    };
    let head = HeadBox::from_pixels(pixel_box, size.width, size.height).map_err(box_reason)?;

    let inout = match cols.inout.as_deref().and_then(|c| field(row, c)) {
        Some(v) => Some(inout(v)?),
        None => None,
    };
    let point = if inout == Some(false) {
        None
    } else {
        let (gx, gy) = (number(row, &cols.gaze_x)?, number(row, &cols.gaze_y)?);
        let (px, py) = match mapping.coords {
            CoordSpace::Pixel => (gx, gy),
            CoordSpace::Normalized => (gx * size.width as f64, gy * size.height as f64),
        };
        let (w, h) = (size.width as f64, size.height as f64);
        if px < -1.0 || py < -1.0 || px > w + 1.0 || py > h + 1.0 {
            return Err("gaze point outside image".into());
        }
        Some(Point2::new(px.clamp(0.0, w) / w, py.clamp(0.0, h) / h))
    };
    let split = match cols.split.as_deref().and_then(|c| field(row, c)) {
        Some(_) => text(row, cols.split.as_deref().unwrap_or_default())?
            .parse()
            .map_err(|e: Error| e.to_string())?,
        None => mapping.default_split,
    };
    let frame_index = match cols.frame_index.as_deref().and_then(|c| field(row, c)) {
        Some(_) => {
            let v = number(row, cols.frame_index.as_deref().unwrap_or_default())?;
            if v < 0.0 || v.fract() != 0.0 {
                return Err(format!("bad frame index {v}"));
            }
            Some(v as u64)
        }
        None => None,
    };
    Ok(ParsedRow {
        image_ref,
        size,
        head,
        point,
        inout,
        split,
        frame_index,
    })
}

/// Converts source rows into canonical samples.
///
/// Rows sharing image, head box, frame and split are merged; the merged
/// sample keeps every gaze point in row order. Output is sorted by image
/// reference, then head box, then frame.
pub fn ingest_gaze_annotations(
    rows: &[SourceRow],
    mapping: &ColumnMapping,
    sizes: &ImageSizeLookup,
) -> IngestOutcome {
    type Key = (String, [u64; 4], Option<u64>, Split);
    let mut groups: BTreeMap<Key, (usize, ParsedRow, Vec<Point2>)> = BTreeMap::new();
    let mut rejections = Vec::new();

    for (i, row) in rows.iter().enumerate() {
        let parsed = match parse_row(row, mapping, sizes) {
            Ok(p) => p,
            Err(reason) => {
                rejections.push(Rejection { row: i, reason });
                continue;
            }
        };
        let key = (
            parsed.image_ref.clone(),
            parsed.head.coords().map(f64::to_bits),
            parsed.frame_index,
            parsed.split,
        );
        let point = parsed.point;
        let label = parsed.inout;
        let entry = groups.entry(key).or_insert_with(|| (i, parsed, Vec::new()));
        if entry.1.inout.is_none() {
            entry.1.inout = label;
        }
        entry.2.extend(point);
    }

    let mut samples: Vec<GazeSample> = groups
        .into_values()
        .filter_map(|(first_row, p, points)| {
            let sample = GazeSample {
                sample_id: String::new(),
                dataset_id: mapping.dataset,
                image_ref: p.image_ref,
                image_size: p.size,
                head: p.head,
                gaze_points: points,
                inout_label: p.inout,
                split: p.split,
                frame_index: p.frame_index,
            };
            match sample.validate() {
                Ok(()) => Some(sample),
                Err(e) => {
                    rejections.push(Rejection {
                        row: first_row,
                        reason: e.to_string(),
                    });
                    None
                }
            }
        })
        .collect();

    samples.sort_by(|a, b| {
        a.image_ref
            .cmp(&b.image_ref)
            .then_with(|| a.head.cmp_coords(&b.head))
            .then_with(|| a.frame_index.cmp(&b.frame_index))
            .then_with(|| a.split.cmp(&b.split))
    });
    for s in &mut samples {
        let identity = format!(
            "{}|{:?}|{:?}|{:?}",
            s.image_ref,
            s.head.coords(),
            s.frame_index,
            s.split
        );
        let digest = sha256_hex(identity.as_bytes());
        s.sample_id = format!(
            "{}-{}",
            s.dataset_id.to_string().to_lowercase(),
            &digest[..12]
        );
    }
    rejections.sort_by_key(|r| r.row);
    IngestOutcome {
        samples,
        rejections,
    }
}
