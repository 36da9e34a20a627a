//! Axis-aligned boxes, IoU and ellipse bounding boxes.
//!
//! Boxes are half-open: a window `(x0, y0, x1, y1)` covers the pixels
//! `x0 <= x < x1`, `y0 <= y < y1`, so its area is `(x1 - x0) * (y1 - y0)`.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A candidate window, optionally carrying the score of the proposal
/// generator that produced it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub id: usize,
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score: Option<f64>,
}

/// Integer half-open pixel rectangle inside a map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PixelRect {
    pub x0: usize,
    pub y0: usize,
    pub x1: usize,
    pub y1: usize,
}

impl PixelRect {
    pub fn width(&self) -> usize {
        self.x1 - self.x0
    }

    pub fn height(&self) -> usize {
        self.y1 - self.y0
    }
}

pub(crate) fn round_half_up(v: f64) -> f64 {
    (v + 0.5).floor()
}

impl Window {
    pub fn new(id: usize, x0: f64, y0: f64, x1: f64, y1: f64) -> Result<Self> {
        let w = Window {
            id,
            x0,
            y0,
            x1,
            y1,
            score: None,
        };
        w.validate()?;
        Ok(w)
    }

    pub fn with_score(mut self, score: f64) -> Self {
        self.score = Some(score);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let coords = [self.x0, self.y0, self.x1, self.y1];
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidWindow(format!(
                "window {} has non-finite coordinates",
                self.id
            )));
        }
        if !(self.x0 < self.x1 && self.y0 < self.y1) {
            return Err(Error::InvalidWindow(format!(
                "window {} is empty: ({}, {})-({}, {})",
                self.id, self.x0, self.y0, self.x1, self.y1
            )));
        }
        if let Some(s) = self.score {
            if !s.is_finite() {
                return Err(Error::InvalidWindow(format!(
                    "window {} has a non-finite score",
                    self.id
                )));
            }
        }
        Ok(())
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn center(&self) -> (f64, f64) {
        ((self.x0 + self.x1) * 0.5, (self.y0 + self.y1) * 0.5)
    }

    pub fn translate(&self, dx: f64, dy: f64) -> Self {
        Window {
            x0: self.x0 + dx,
            y0: self.y0 + dy,
            x1: self.x1 + dx,
            y1: self.y1 + dy,
            ..*self
        }
    }

    /// Intersection with the `width` x `height` canvas, or `None` when the
    /// window lies entirely outside it.
    pub fn clip(&self, width: usize, height: usize) -> Option<Self> {
        let x0 = self.x0.max(0.0);
        let y0 = self.y0.max(0.0);
        let x1 = self.x1.min(width as f64);
        let y1 = self.y1.min(height as f64);
        (x0 < x1 && y0 < y1).then_some(Window {
            x0,
            y0,
            x1,
            y1,
            ..*self
        })
    }

    /// Pixel rectangle of the window on a `width` x `height` map. Coordinates
    /// round half-up to the pixel grid; a window reaching past the map is an
    /// error, since windows are clipped when they are read in.
    pub fn pixel_rect(&self, width: usize, height: usize) -> Result<PixelRect> {
        let r = [
            round_half_up(self.x0),
            round_half_up(self.y0),
            round_half_up(self.x1),
            round_half_up(self.y1),
        ];
        if r[0] < 0.0 || r[1] < 0.0 || r[2] > width as f64 || r[3] > height as f64 {
            return Err(Error::OutOfBounds {
                x0: r[0] as i64,
                y0: r[1] as i64,
                x1: r[2] as i64,
                y1: r[3] as i64,
                width,
                height,
            });
        }
        Ok(PixelRect {
            x0: r[0] as usize,
            y0: r[1] as usize,
            x1: r[2] as usize,
            y1: r[3] as usize,
        })
    }
}

/// Intersection over union of two windows. Symmetric, in `[0, 1]`, zero for
/// disjoint windows.
pub fn iou(a: &Window, b: &Window) -> f64 {
    let iw = a.x1.min(b.x1) - a.x0.max(b.x0);
    let ih = a.y1.min(b.y1) - a.y0.max(b.y0);
    if iw <= 0.0 || ih <= 0.0 {
        return 0.0;
    }
    let inter = iw * ih;
    let union = a.area() + b.area() - inter;
    (inter / union).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ellipse {
    pub cx: f64,
    pub cy: f64,
    pub ra: f64,
    pub rb: f64,
    pub theta: f64,
}

impl Ellipse {
    pub fn new(cx: f64, cy: f64, ra: f64, rb: f64, theta: f64) -> Result<Self> {
        let vals = [cx, cy, ra, rb, theta];
        if vals.iter().any(|v| !v.is_finite()) || ra <= 0.0 || rb <= 0.0 {
            return Err(Error::InvalidWindow(format!(
                "invalid ellipse ({cx}, {cy}, {ra}, {rb}, {theta})"
            )));
        }
        Ok(Ellipse {
            cx,
            cy,
            ra,
            rb,
            theta,
        })
    }

    /// Point on the boundary at parameter `t` (radians).
    pub fn boundary_point(&self, t: f64) -> (f64, f64) {
        let (s, c) = self.theta.sin_cos();
        let (u, v) = (self.ra * t.cos(), self.rb * t.sin());
        (self.cx + u * c - v * s, self.cy + u * s + v * c)
    }
}

/// Tightest axis-aligned box around a rotated ellipse, rounded outward to
/// integer pixels.
pub fn ellipse_to_box(e: &Ellipse, id: usize) -> Window {
    let (s, c) = e.theta.sin_cos();
    let hw = ((e.ra * c).powi(2) + (e.rb * s).powi(2)).sqrt();
    let hh = ((e.ra * s).powi(2) + (e.rb * c).powi(2)).sqrt();
    // Trig round-off on exact multiples of pi/2 must not bump a whole pixel.
    let snap = |v: f64| {
        let r = v.round();
        if (v - r).abs() < 1e-9 {
            r
        } else {
            v
        }
    };
    Window {
        id,
        x0: snap(e.cx - hw).floor(),
        y0: snap(e.cy - hh).floor(),
        x1: snap(e.cx + hw).ceil(),
        y1: snap(e.cy + hh).ceil(),
        score: None,
    }
}

fn csv_reader(path: &Path) -> Result<csv::Reader<std::fs::File>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file))
}

fn parse_fields(path: &Path, record: &csv::StringRecord) -> Result<Vec<f64>> {
    let line = record.position().map_or(0, |p| p.line() as usize);
    record
        .iter()
        .map(|f| {
            f.parse::<f64>().map_err(|_| Error::Parse {
                path: path.to_path_buf(),
                line,
                msg: format!("not a number: {f:?}"),
            })
        })
        .collect()
}

/// Reads a window list: one `x0,y0,x1,y1[,score]` per line, `#` comments
/// ignored. Ids follow line order starting at 0.
pub fn read_windows(path: impl AsRef<Path>) -> Result<Vec<Window>> {
    let path = path.as_ref();
    let mut out = Vec::new();
    for record in csv_reader(path)?.records() {
        let record = record?;
        if record.iter().all(str::is_empty) {
            continue;
        }
        let line = record.position().map_or(0, |p| p.line() as usize);
        let v = parse_fields(path, &record)?;
        if v.len() != 4 && v.len() != 5 {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line,
                msg: format!("expected 4 or 5 fields, found {}", v.len()),
            });
        }
        let mut w = Window {
            id: out.len(),
            x0: v[0],
            y0: v[1],
            x1: v[2],
            y1: v[3],
            score: v.get(4).copied(),
        };
        w.validate().map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line,
            msg: e.to_string(),
        })?;
        w.id = out.len();
        out.push(w);
    }
    Ok(out)
}

/// Reads an ellipse list: one `cx,cy,ra,rb,theta` per line.
pub fn read_ellipses(path: impl AsRef<Path>) -> Result<Vec<Ellipse>> {
    let path = path.as_ref();
    let mut out = Vec::new();
    for record in csv_reader(path)?.records() {
        let record = record?;
        if record.iter().all(str::is_empty) {
            continue;
        }
        let line = record.position().map_or(0, |p| p.line() as usize);
        let v = parse_fields(path, &record)?;
        if v.len() != 5 {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line,
                msg: format!("expected 5 fields, found {}", v.len()),
            });
        }
        out.push(
            Ellipse::new(v[0], v[1], v[2], v[3], v[4]).map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                line,
                msg: e.to_string(),
            })?,
        );
    }
    Ok(out)
}

/// Serializes a window list in the format read by [`read_windows`]. Scores
/// are written when any window carries one.
pub fn format_windows(windows: &[Window]) -> String {
    let with_score = windows.iter().any(|w| w.score.is_some());
    let mut s = String::from(if with_score {
        "# x0,y0,x1,y1,score\n"
    } else {
        "# x0,y0,x1,y1\n"
    });
    for w in windows {
        let _ = write!(s, "{},{},{},{}", w.x0, w.y0, w.x1, w.y1);
        if with_score {
            let _ = write!(s, ",{}", w.score.unwrap_or(0.0));
        }
        s.push('\n');
    }
    s
}
