use std::fmt;
use std::io::Cursor;
use std::str::FromStr;

use base64::Engine;
use image::{imageops::FilterType, DynamicImage, ImageFormat};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::sha256_hex;

pub const DEFAULT_PIXEL_CAP: u64 = 200_704;

/// How images are sized before upload.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum ResizeMode {
    /// Downscale so that `width * height <= cap`.
    CapTotal(u64),
    /// Scale so that the longer side equals `n`.
    LongestSide(u32),
}

impl Default for ResizeMode {
    fn default() -> Self {
        ResizeMode::CapTotal(DEFAULT_PIXEL_CAP)
    }
}

impl fmt::Display for ResizeMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ResizeMode::CapTotal(c) => write!(f, "cap_total({c})"),
            ResizeMode::LongestSide(n) => write!(f, "longest_side({n})"),
        }
    }
}

impl FromStr for ResizeMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let arg = |name: &str| {
            s.strip_prefix(name)
                .and_then(|r| r.strip_prefix('('))
                .and_then(|r| r.strip_suffix(')'))
        };
        let bad = || Error::InvalidInput(format!("unknown resize mode `{s}`"));
        if s == "cap_total" {
            Ok(ResizeMode::CapTotal(DEFAULT_PIXEL_CAP))
        } else if let Some(a) = arg("cap_total") {
            Ok(ResizeMode::CapTotal(a.trim().parse().map_err(|_| bad())?))
        } else if let Some(a) = arg("longest_side") {
            Ok(ResizeMode::LongestSide(
                a.trim().parse().map_err(|_| bad())?,
            ))
        } else {
            Err(bad())
        }
    }
}

impl TryFrom<String> for ResizeMode {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<ResizeMode> for String {
    fn from(m: ResizeMode) -> String {
        m.to_string()
    }
}

/// Output dimensions for a `width x height` source.
///
/// In cap mode the short side is floored after scaling and the long side is
/// derived from it, rounded and bounded so the product stays within the cap.
/// Flooring both sides independently can distort very thin images by several
/// percent; this keeps the aspect ratio within 1% while honouring the cap.
pub fn target_dims(width: u32, height: u32, mode: ResizeMode) -> Result<(u32, u32)> {
    if width == 0 || height == 0 {
        return Err(Error::Image(format!("zero-sized source {width}x{height}")));
    }
    let (w, h) = (width as f64, height as f64);
    match mode {
        ResizeMode::CapTotal(cap) => {
            if (width as u64) * (height as u64) <= cap {
                return Ok((width, height));
            }
            let s = (cap as f64 / (w * h)).sqrt();
            let (short, long) = if width <= height { (w, h) } else { (h, w) };
            let short_out = (short * s + 1e-9).floor();
            if short_out < 1.0 {
                return Err(Error::Image(format!(
                    "{width}x{height} is thinner than one pixel under a {cap}-pixel cap"
                )));
            }
            let long_out = (cap as f64 / short_out)
                .floor()
                .min((short_out * long / short).round())
                .max(1.0);
            let (so, lo) = (short_out as u32, long_out as u32);
            Ok(if width <= height { (so, lo) } else { (lo, so) })
        }
        ResizeMode::LongestSide(n) => {
            if n == 0 {
                return Err(Error::Image("longest side must be positive".into()));
            }
            let long = w.max(h);
            let short_out = ((w.min(h) * n as f64 / long).round() as u32).max(1);
            Ok(if width >= height {
                (n, short_out)
            } else {
                (short_out, n)
            })
        }
    }
}

/// An encoded raster ready for upload.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PreparedImage {
    pub bytes: Vec<u8>,
    pub mime: &'static str,
    pub width_px: u32,
    pub height_px: u32,
    /// SHA-256 of the source bytes.
    pub source_hash: String,
}

impl PreparedImage {
    pub fn data_uri(&self) -> String {
        format!(
            "data:{};base64,{}",
            self.mime,
            base64::engine::general_purpose::STANDARD.encode(&self.bytes)
        )
    }
}

fn mime_of(format: ImageFormat) -> Option<&'static str> {
    match format {
        ImageFormat::Png => Some("image/png"),
        ImageFormat::Jpeg => Some("image/jpeg"),
        _ => None,
    }
}

/// Decodes, resizes (area averaging when shrinking) and re-encodes as PNG.
/// Sources already at their target size are passed through untouched.
pub fn prepare_image(source: &[u8], mode: ResizeMode) -> Result<PreparedImage> {
    let format = image::guess_format(source).map_err(|e| Error::Image(e.to_string()))?;
    let img = image::load_from_memory_with_format(source, format)
        .map_err(|e| Error::Image(e.to_string()))?;
    let (tw, th) = target_dims(img.width(), img.height(), mode)?;
    let source_hash = sha256_hex(source);
    if (tw, th) == (img.width(), img.height()) {
        if let Some(mime) = mime_of(format) {
            return Ok(PreparedImage {
                bytes: source.to_vec(),
                mime,
                width_px: tw,
                height_px: th,
                source_hash,
            });
        }
    }
    let out: DynamicImage = if tw <= img.width() && th <= img.height() {
        img.thumbnail_exact(tw, th)
    } else {
        img.resize_exact(tw, th, FilterType::Triangle)
    };
    let mut bytes = Vec::new();
    out.write_to(&mut Cursor::new(&mut bytes), ImageFormat::Png)
        .map_err(|e| Error::Image(e.to_string()))?;
    Ok(PreparedImage {
        bytes,
        mime: "image/png",
        width_px: tw,
        height_px: th,
        source_hash,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_dimensions() {
        let cap = ResizeMode::default();
        assert_eq!(target_dims(896, 896, cap).unwrap(), (448, 448));
        assert_eq!(target_dims(1280, 720, cap).unwrap(), (597, 336));
        assert_eq!(target_dims(100, 100, cap).unwrap(), (100, 100));
        assert_eq!(
            target_dims(1920, 1080, ResizeMode::LongestSide(448)).unwrap(),
            (448, 252)
        );
    }

    #[test]
    fn thin_images_keep_aspect() {
        let (w, h) = target_dims(8192, 25, ResizeMode::default()).unwrap();
        assert!((w as u64) * (h as u64) <= DEFAULT_PIXEL_CAP);
        let dev = (w as f64 / h as f64) / (8192.0 / 25.0) - 1.0;
        assert!(dev.abs() <= 0.01, "{w}x{h}");
    }

    #[test]
    fn modes_parse() {
        assert_eq!(
            "cap_total".parse::<ResizeMode>().unwrap(),
            ResizeMode::CapTotal(200_704)
        );
        assert_eq!(
            "longest_side(448)".parse::<ResizeMode>().unwrap(),
            ResizeMode::LongestSide(448)
        );
    }

    #[test]
    fn png_round_trip_resizes() {
        let img = image::RgbImage::from_pixel(1280, 720, image::Rgb([10, 20, 30]));
        let mut buf = Vec::new();
        DynamicImage::ImageRgb8(img)
            .write_to(&mut Cursor::new(&mut buf), ImageFormat::Png)
            .unwrap();
        let p = prepare_image(&buf, ResizeMode::default()).unwrap();
        assert_eq!((p.width_px, p.height_px), (597, 336));
        let back = image::load_from_memory(&p.bytes).unwrap();
        assert_eq!((back.width(), back.height()), (597, 336));
        assert!(p.data_uri().starts_with("data:image/png;base64,"));
    }
}
