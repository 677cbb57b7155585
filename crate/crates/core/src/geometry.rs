//! Unit-normalized image geometry shared by every module.
//!
//! Coordinates are fractions of image width and height; pixel and 0-1000
//! representations only exist at ingestion, prompt rendering and parsing.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point in `[0,1]²`, origin at the top-left corner.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const CENTER: Point2 = Point2 { x: 0.5, y: 0.5 };

    pub const fn new(x: f64, y: f64) -> Self {
        Point2 { x, y }
    }

    /// Validated constructor for ground-truth points.
    pub fn unit(x: f64, y: f64) -> Result<Self> {
        if !(x.is_finite() && y.is_finite())
            || !(0.0..=1.0).contains(&x)
            || !(0.0..=1.0).contains(&y)
        {
            return Err(Error::InvalidPoint(format!("({x}, {y}) outside [0,1]²")));
        }
        Ok(Point2 { x, y })
    }

    /// Clamps into `[0,1]²`, reporting whether any coordinate moved.
    pub fn clamped(x: f64, y: f64) -> (Self, bool) {
        let cx = x.clamp(0.0, 1.0);
        let cy = y.clamp(0.0, 1.0);
        (Point2 { x: cx, y: cy }, cx != x || cy != y)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn is_unit(&self) -> bool {
        self.is_finite() && (0.0..=1.0).contains(&self.x) && (0.0..=1.0).contains(&self.y)
    }

    pub fn offset_from(self, other: Point2) -> (f64, f64) {
        (self.x - other.x, self.y - other.y)
    }

    /// Arithmetic mean; `None` for an empty slice.
    pub fn mean(points: &[Point2]) -> Option<Point2> {
        if points.is_empty() {
            return None;
        }
        let n = points.len() as f64;
        let (sx, sy) = points
            .iter()
            .fold((0.0, 0.0), |(sx, sy), p| (sx + p.x, sy + p.y));
        Some(Point2::new(sx / n, sy / n))
    }
}

/// Axis-aligned head box `[x_min, y_min, x_max, y_max]` in unit coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 4]", into = "[f64; 4]")]
pub struct HeadBox {
    x_min: f64,
    y_min: f64,
    x_max: f64,
    y_max: f64,
}

impl HeadBox {
    pub fn new(x_min: f64, y_min: f64, x_max: f64, y_max: f64) -> Result<Self> {
        let all = [x_min, y_min, x_max, y_max];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidBox("non-finite coordinate".into()));
        }
        if all.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::InvalidBox(format!("{all:?} outside [0,1]")));
        }
        if x_min >= x_max || y_min >= y_max {
            return Err(Error::InvalidBox("degenerate box".into()));
        }
        Ok(HeadBox {
            x_min,
            y_min,
            x_max,
            y_max,
        })
    }

    /// Converts a pixel-space box, clamping up to one pixel of overhang.
    pub fn from_pixels(coords: [f64; 4], width: u32, height: u32) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidBox("zero image dimension".into()));
        }
        let (w, h) = (width as f64, height as f64);
        let [x0, y0, x1, y1] = coords;
        if [x0, y0, x1, y1].iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidBox("non-finite coordinate".into()));
        }
        if x0 >= x1 || y0 >= y1 {
            return Err(Error::InvalidBox("degenerate box".into()));
        }
        let fits = |v: f64, limit: f64| v >= -1.0 && v <= limit + 1.0;
        if !(fits(x0, w) && fits(x1, w) && fits(y0, h) && fits(y1, h)) {
            return Err(Error::InvalidBox(format!(
                "{coords:?} outside {width}x{height} image"
            )));
        }
        HeadBox::new(
            x0.clamp(0.0, w) / w,
            y0.clamp(0.0, h) / h,
            x1.clamp(0.0, w) / w,
            y1.clamp(0.0, h) / h,
        )
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }
    pub fn y_min(&self) -> f64 {
        self.y_min
    }
    pub fn x_max(&self) -> f64 {
        self.x_max
    }
    pub fn y_max(&self) -> f64 {
        self.y_max
    }

    pub fn coords(&self) -> [f64; 4] {
        [self.x_min, self.y_min, self.x_max, self.y_max]
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn center(&self) -> Point2 {
        Point2::new(
            (self.x_min + self.x_max) / 2.0,
            (self.y_min + self.y_max) / 2.0,
        )
    }

    pub fn intersection_area(&self, other: &HeadBox) -> f64 {
        let w = self.x_max.min(other.x_max) - self.x_min.max(other.x_min);
        let h = self.y_max.min(other.y_max) - self.y_min.max(other.y_min);
        if w <= 0.0 || h <= 0.0 {
            0.0
        } else {
            w * h
        }
    }

    pub fn iou(&self, other: &HeadBox) -> f64 {
        let inter = self.intersection_area(other);
        if inter == 0.0 {
            return 0.0;
        }
        inter / (self.area() + other.area() - inter)
    }

    /// Total order used for canonical record ordering.
    pub fn cmp_coords(&self, other: &HeadBox) -> std::cmp::Ordering {
        self.coords()
            .iter()
            .zip(other.coords().iter())
            .map(|(a, b)| a.total_cmp(b))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    }
}

impl TryFrom<[f64; 4]> for HeadBox {
    type Error = Error;

    fn try_from(c: [f64; 4]) -> Result<Self> {
        HeadBox::new(c[0], c[1], c[2], c[3])
    }
}

impl From<HeadBox> for [f64; 4] {
    fn from(b: HeadBox) -> Self {
        b.coords()
    }
}
