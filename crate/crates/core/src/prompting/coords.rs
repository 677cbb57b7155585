use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{HeadBox, Point2};

/// Model-facing coordinate convention. Storage is always unit-normalized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CoordScale {
    #[default]
    Unit,
    Thousand,
}

impl CoordScale {
    pub fn factor(self) -> f64 {
        match self {
            CoordScale::Unit => 1.0,
            CoordScale::Thousand => 1000.0,
        }
    }

    pub fn default_decimals(self) -> u32 {
        match self {
            CoordScale::Unit => 3,
            CoordScale::Thousand => 0,
        }
    }
}

impl fmt::Display for CoordScale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CoordScale::Unit => "unit",
            CoordScale::Thousand => "thousand",
        })
    }
}

impl FromStr for CoordScale {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "unit" | "1" | "0-1" => Ok(CoordScale::Unit),
            "thousand" | "1000" | "0-1000" => Ok(CoordScale::Thousand),
            _ => Err(Error::InvalidInput(format!(
                "unknown coordinate scale `{s}`"
            ))),
        }
    }
}

/// Formats one unit-normalized value in the given scale.
pub fn format_value(v: f64, scale: CoordScale, decimals: u32) -> Result<String> {
    if !v.is_finite() || !(0.0..=1.0).contains(&v) {
        return Err(Error::CoordinateOverflow(v));
    }
    let scaled = v * scale.factor();
    if decimals == 0 {
        Ok(format!("{}", scaled.round() as i64))
    } else {
        Ok(format!("{:.*}", decimals as usize, scaled))
    }
}

fn bracket(values: &[f64], scale: CoordScale, decimals: u32) -> Result<String> {
    let parts = values
        .iter()
        .map(|&v| format_value(v, scale, decimals))
        .collect::<Result<Vec<_>>>()?;
    Ok(format!("[{}]", parts.join(", ")))
}

/// `[x_min, y_min, x_max, y_max]` in the given scale.
pub fn format_box(b: &HeadBox, scale: CoordScale, decimals: u32) -> Result<String> {
    bracket(&b.coords(), scale, decimals)
}

/// `[x, y]` in the given scale.
pub fn format_point(p: Point2, scale: CoordScale, decimals: u32) -> Result<String> {
    bracket(&[p.x, p.y], scale, decimals)
}
