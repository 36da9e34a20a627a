//! Partness maps, their integral images, and the PMAP file format.
//!
//! A PMAP file starts with an ASCII header line `PMAP <channel> <width> <height>`
//! followed by `width * height` little-endian `f32` values in row-major
//! order, top row first. The `PMAPTXT` variant carries the same header and
//! whitespace-separated decimal values instead, for hand-written fixtures.

use std::fmt;
use std::io::Write as _;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::PixelRect;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Channel {
    Hair,
    Eye,
    Nose,
    Mouth,
    Beard,
    Face,
}

impl Channel {
    /// The five facial-part channels, top of the face to bottom.
    pub const PARTS: [Channel; 5] = [
        Channel::Hair,
        Channel::Eye,
        Channel::Nose,
        Channel::Mouth,
        Channel::Beard,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Channel::Hair => "hair",
            Channel::Eye => "eye",
            Channel::Nose => "nose",
            Channel::Mouth => "mouth",
            Channel::Beard => "beard",
            Channel::Face => "face",
        }
    }
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Channel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "hair" => Ok(Channel::Hair),
            "eye" => Ok(Channel::Eye),
            "nose" => Ok(Channel::Nose),
            "mouth" => Ok(Channel::Mouth),
            "beard" => Ok(Channel::Beard),
            "face" => Ok(Channel::Face),
            other => Err(Error::BadHeader(format!("unknown channel {other:?}"))),
        }
    }
}

/// Non-negative response grid for one channel.
#[derive(Debug, Clone, PartialEq)]
pub struct PartnessMap {
    channel: Channel,
    width: usize,
    height: usize,
    values: Vec<f32>,
}

fn check_values(values: &[f32]) -> Result<()> {
    for (index, &value) in values.iter().enumerate() {
        if !value.is_finite() {
            return Err(Error::NonFiniteValue { index });
        }
        if value < 0.0 {
            return Err(Error::NegativeValue { index, value });
        }
    }
    Ok(())
}

impl PartnessMap {
    pub fn new(channel: Channel, width: usize, height: usize, values: Vec<f32>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::BadHeader(format!(
                "map must be at least 1x1, got {width}x{height}"
            )));
        }
        if values.len() != width * height {
            return Err(Error::TruncatedPayload {
                expected: width * height,
                found: values.len(),
            });
        }
        check_values(&values)?;
        Ok(PartnessMap {
            channel,
            width,
            height,
            values,
        })
    }

    pub fn zeros(channel: Channel, width: usize, height: usize) -> Self {
        assert!(width > 0 && height > 0, "map must be at least 1x1");
        PartnessMap {
            channel,
            width,
            height,
            values: vec![0.0; width * height],
        }
    }

    /// Builds a map from nested rows; handy in tests.
    pub fn from_rows(channel: Channel, rows: &[&[f32]]) -> Result<Self> {
        let height = rows.len();
        let width = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != width) {
            return Err(Error::BadHeader("ragged rows".into()));
        }
        Self::new(channel, width, height, rows.concat())
    }

    pub fn channel(&self) -> Channel {
        self.channel
    }

    pub fn with_channel(mut self, channel: Channel) -> Self {
        self.channel = channel;
        self
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn get(&self, x: usize, y: usize) -> f32 {
        self.values[y * self.width + x]
    }

    pub fn peak(&self) -> f32 {
        self.values.iter().copied().fold(0.0, f32::max)
    }

    /// Multiplies every value by `k >= 0`.
    pub fn scaled(&self, k: f32) -> Self {
        assert!(k >= 0.0 && k.is_finite());
        PartnessMap {
            values: self.values.iter().map(|v| v * k).collect(),
            ..self.clone()
        }
    }
}

/// Summed-area table of a [`PartnessMap`], one row and column larger than
/// the source. Entry `(x, y)` holds the sum over `[0, x) x [0, y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct IntegralImage {
    channel: Channel,
    width: usize,
    height: usize,
    table: Vec<f64>,
}

pub fn build_integral(m: &PartnessMap) -> IntegralImage {
    let (w, h) = m.dims();
    let stride = w + 1;
    let mut table = vec![0.0f64; stride * (h + 1)];
    for y in 0..h {
        let mut row_sum = 0.0f64;
        let src = &m.values[y * w..(y + 1) * w];
        for x in 0..w {
            row_sum += f64::from(src[x]);
            table[(y + 1) * stride + x + 1] = table[y * stride + x + 1] + row_sum;
        }
    }
    IntegralImage {
        channel: m.channel,
        width: w,
        height: h,
        table,
    }
}

impl IntegralImage {
    pub fn channel(&self) -> Channel {
        self.channel
    }

    /// Width of the source map.
    pub fn width(&self) -> usize {
        self.width
    }

    /// Height of the source map.
    pub fn height(&self) -> usize {
        self.height
    }

    /// Cumulative sum over `[0, x) x [0, y)`.
    pub fn at(&self, x: usize, y: usize) -> f64 {
        self.table[y * (self.width + 1) + x]
    }

    /// Sum over the half-open rectangle `[x0, x1) x [y0, y1)`.
    pub fn rect_sum(&self, x0: usize, y0: usize, x1: usize, y1: usize) -> Result<f64> {
        if x0 > x1 || y0 > y1 || x1 > self.width || y1 > self.height {
            return Err(Error::OutOfBounds {
                x0: x0 as i64,
                y0: y0 as i64,
                x1: x1 as i64,
                y1: y1 as i64,
                width: self.width,
                height: self.height,
            });
        }
        Ok(self.rect_sum_unchecked(x0, y0, x1, y1))
    }

    pub fn rect_sum_pixels(&self, r: &PixelRect) -> Result<f64> {
        self.rect_sum(r.x0, r.y0, r.x1, r.y1)
    }

    /// Bounds are the caller's responsibility; out-of-range indices panic.
    #[inline]
    pub(crate) fn rect_sum_unchecked(&self, x0: usize, y0: usize, x1: usize, y1: usize) -> f64 {
        let s = self.width + 1;
        let v = self.table[y1 * s + x1] - self.table[y0 * s + x1] - self.table[y1 * s + x0]
            + self.table[y0 * s + x0];
        // Cancellation can leave tiny negatives on all-zero regions.
        v.max(0.0)
    }
}

/// How the per-part maps combine into the face map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FusionRule {
    /// Pixelwise mean of the peak-normalized part maps.
    #[default]
    Mean,
    /// Pixelwise maximum of the peak-normalized part maps.
    Max,
}

/// Fuses per-part maps into a single face-channel map. Each map is first
/// rescaled to peak 1; all-zero maps pass through unscaled.
pub fn fuse_face_map(stack: &[PartnessMap], rule: FusionRule) -> Result<PartnessMap> {
    let first = stack
        .first()
        .ok_or_else(|| Error::InvalidConfig("no maps to fuse".into()))?;
    let dims = first.dims();
    let mut seen = Vec::with_capacity(stack.len());
    for m in stack {
        if m.dims() != dims {
            return Err(Error::DimensionMismatch {
                expected: dims,
                found: m.dims(),
            });
        }
        if seen.contains(&m.channel) {
            return Err(Error::DuplicateChannel(m.channel));
        }
        seen.push(m.channel);
    }

    let n = dims.0 * dims.1;
    let mut acc = vec![0.0f64; n];
    for m in stack {
        let peak = f64::from(m.peak());
        let scale = if peak > 0.0 { 1.0 / peak } else { 1.0 };
        for (a, &v) in acc.iter_mut().zip(&m.values) {
            let v = f64::from(v) * scale;
            match rule {
                FusionRule::Mean => *a += v,
                FusionRule::Max => *a = a.max(v),
            }
        }
    }
    if rule == FusionRule::Mean {
        let k = stack.len() as f64;
        acc.iter_mut().for_each(|a| *a /= k);
    }
    let values = acc.into_iter().map(|v| v.clamp(0.0, 1.0) as f32).collect();
    PartnessMap::new(Channel::Face, dims.0, dims.1, values)
}

/// Encodes a map in the binary PMAP format.
pub fn encode_pmap(m: &PartnessMap) -> Vec<u8> {
    let mut out = format!("PMAP {} {} {}\n", m.channel, m.width, m.height).into_bytes();
    out.reserve(m.values.len() * 4);
    for v in &m.values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

/// Decodes a binary PMAP or a PMAPTXT buffer.
pub fn decode_pmap(bytes: &[u8]) -> Result<PartnessMap> {
    let newline = bytes.iter().position(|&b| b == b'\n');
    let header_bytes = &bytes[..newline.unwrap_or(bytes.len().min(64))];
    let header = String::from_utf8_lossy(header_bytes);
    let mut tokens = header.split_ascii_whitespace();
    let magic = tokens.next().unwrap_or("");
    if magic != "PMAP" && magic != "PMAPTXT" {
        return Err(Error::BadMagic(magic.chars().take(16).collect()));
    }
    let newline = newline.ok_or_else(|| Error::BadHeader("missing header newline".into()))?;
    let channel: Channel = tokens
        .next()
        .ok_or_else(|| Error::BadHeader("missing channel".into()))?
        .parse()?;
    let mut dim = |name: &str| -> Result<usize> {
        tokens
            .next()
            .ok_or_else(|| Error::BadHeader(format!("missing {name}")))?
            .parse::<usize>()
            .map_err(|_| Error::BadHeader(format!("bad {name}")))
    };
    let width = dim("width")?;
    let height = dim("height")?;
    if tokens.next().is_some() {
        return Err(Error::BadHeader("unexpected header tokens".into()));
    }
    if width == 0 || height == 0 {
        return Err(Error::BadHeader(format!(
            "degenerate size {width}x{height}"
        )));
    }
    let expected = width
        .checked_mul(height)
        .ok_or_else(|| Error::BadHeader("size overflows".into()))?;
    let payload = &bytes[newline + 1..];

    let values: Vec<f32> = if magic == "PMAP" {
        let found = payload.len() / 4;
        if payload.len() < expected * 4 {
            return Err(Error::TruncatedPayload { expected, found });
        }
        if payload.len() > expected * 4 {
            return Err(Error::TrailingData(payload.len() - expected * 4));
        }
        payload
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect()
    } else {
        let text = std::str::from_utf8(payload)
            .map_err(|_| Error::BadHeader("PMAPTXT payload is not UTF-8".into()))?;
        let values = text
            .split_ascii_whitespace()
            .map(|t| {
                t.parse::<f32>()
                    .map_err(|_| Error::BadHeader(format!("bad value {t:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        if values.len() < expected {
            return Err(Error::TruncatedPayload {
                expected,
                found: values.len(),
            });
        }
        if values.len() > expected {
            return Err(Error::TrailingData(values.len() - expected));
        }
        values
    };
    PartnessMap::new(channel, width, height, values)
}

pub fn read_pmap(path: impl AsRef<Path>) -> Result<PartnessMap> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_pmap(&bytes)
}

pub fn write_pmap(m: &PartnessMap, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&encode_pmap(m)).map_err(|e| Error::io(path, e))
}
