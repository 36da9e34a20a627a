//! Faceness of a window from one partness map: the ratio of the response
//! inside the region where the part is expected to the response elsewhere
//! in the window, computed from integral-image rectangle sums.
//!
//! A split parameter `lambda` places a horizontal cut at
//! `y0 * lambda + (1 - lambda) * y1`, so `lambda = 1` cuts at the top edge
//! and `lambda = 0` at the bottom edge. Cut rows round half-up to the pixel
//! grid. Both sums are smoothed with `epsilon`, which keeps every ratio
//! finite and non-negative.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{round_half_up, PixelRect, Window};
use crate::pmap::{Channel, IntegralImage};

pub const DEFAULT_EPSILON: f64 = 1e-6;

fn default_epsilon() -> f64 {
    DEFAULT_EPSILON
}

/// Shape of the expected sub-region, without its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Geometry {
    /// Part above the cut, e.g. hair.
    TopOverBottom,
    /// Part inside a horizontal band, e.g. eyes.
    BandOverOutside,
    /// Part below the cut, e.g. beard.
    BottomOverTop,
}

impl Geometry {
    /// Geometry used for a part channel unless a config overrides it.
    pub fn default_for(channel: Channel) -> Geometry {
        match channel {
            Channel::Hair => Geometry::TopOverBottom,
            Channel::Beard => Geometry::BottomOverTop,
            Channel::Eye | Channel::Nose | Channel::Mouth | Channel::Face => {
                Geometry::BandOverOutside
            }
        }
    }

    /// Number of split parameters.
    pub fn dims(&self) -> usize {
        match self {
            Geometry::BandOverOutside => 2,
            _ => 1,
        }
    }
}

/// Geometry together with its split parameters.
///
/// For a band, `lambda_top` places the band's upper edge and `lambda_bot` its
/// lower edge; since larger `lambda` cuts higher, `lambda_top > lambda_bot`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "geometry", rename_all = "snake_case")]
pub enum Split {
    TopOverBottom { lambda: f64 },
    BandOverOutside { lambda_top: f64, lambda_bot: f64 },
    BottomOverTop { lambda: f64 },
}

impl Split {
    pub fn geometry(&self) -> Geometry {
        match self {
            Split::TopOverBottom { .. } => Geometry::TopOverBottom,
            Split::BandOverOutside { .. } => Geometry::BandOverOutside,
            Split::BottomOverTop { .. } => Geometry::BottomOverTop,
        }
    }

    /// Parameters as a slice-like pair; the second entry is only meaningful
    /// for bands.
    pub fn params(&self) -> (f64, Option<f64>) {
        match *self {
            Split::TopOverBottom { lambda } | Split::BottomOverTop { lambda } => (lambda, None),
            Split::BandOverOutside {
                lambda_top,
                lambda_bot,
            } => (lambda_top, Some(lambda_bot)),
        }
    }

    pub fn from_params(geometry: Geometry, first: f64, second: Option<f64>) -> Split {
        match geometry {
            Geometry::TopOverBottom => Split::TopOverBottom { lambda: first },
            Geometry::BottomOverTop => Split::BottomOverTop { lambda: first },
            Geometry::BandOverOutside => Split::BandOverOutside {
                lambda_top: first,
                lambda_bot: second.expect("band split needs two parameters"),
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        let in_unit = |v: f64| (0.0..=1.0).contains(&v);
        match *self {
            Split::TopOverBottom { lambda } | Split::BottomOverTop { lambda } => {
                if !in_unit(lambda) {
                    return Err(Error::InvalidConfig(format!(
                        "lambda {lambda} not in [0, 1]"
                    )));
                }
            }
            Split::BandOverOutside {
                lambda_top,
                lambda_bot,
            } => {
                if !in_unit(lambda_top) || !in_unit(lambda_bot) {
                    return Err(Error::InvalidConfig(format!(
                        "band lambdas ({lambda_top}, {lambda_bot}) not in [0, 1]"
                    )));
                }
                if lambda_top <= lambda_bot {
                    return Err(Error::InvalidConfig(format!(
                        "band upper edge lambda_top={lambda_top} must exceed lambda_bot={lambda_bot}"
                    )));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpatialConfig {
    pub channel: Channel,
    #[serde(flatten)]
    pub split: Split,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
}

impl SpatialConfig {
    pub fn new(channel: Channel, split: Split) -> Result<Self> {
        let c = SpatialConfig {
            channel,
            split,
            epsilon: DEFAULT_EPSILON,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        self.split.validate()
    }
}

/// Row of the cut at `lambda` inside `[y0, y1]`.
#[inline]
pub fn split_row(y0: usize, y1: usize, lambda: f64) -> usize {
    let y = round_half_up(y0 as f64 * lambda + y1 as f64 * (1.0 - lambda));
    (y.max(y0 as f64) as usize).min(y1)
}

/// Ratio for pre-resolved rows; `rows` are the cut rows for the split.
#[inline]
pub(crate) fn ratio_for_rows(
    ii: &IntegralImage,
    r: &PixelRect,
    geometry: Geometry,
    rows: (usize, usize),
    epsilon: f64,
) -> f64 {
    let (x0, x1) = (r.x0, r.x1);
    match geometry {
        Geometry::TopOverBottom | Geometry::BottomOverTop => {
            let ys = rows.0;
            let top = ii.rect_sum_unchecked(x0, r.y0, x1, ys);
            let bottom = ii.rect_sum_unchecked(x0, ys, x1, r.y1);
            if geometry == Geometry::TopOverBottom {
                (top + epsilon) / (bottom + epsilon)
            } else {
                (bottom + epsilon) / (top + epsilon)
            }
        }
        Geometry::BandOverOutside => {
            let (band_top, band_bot) = rows;
            let total = ii.rect_sum_unchecked(x0, r.y0, x1, r.y1);
            let band = ii.rect_sum_unchecked(x0, band_top, x1, band_bot);
            let outside = (total - band).max(0.0);
            (band + epsilon) / (outside + epsilon)
        }
    }
}

pub(crate) fn rows_for(r: &PixelRect, split: &Split) -> (usize, usize) {
    match *split {
        Split::TopOverBottom { lambda } | Split::BottomOverTop { lambda } => {
            (split_row(r.y0, r.y1, lambda), 0)
        }
        Split::BandOverOutside {
            lambda_top,
            lambda_bot,
        } => {
            let a = split_row(r.y0, r.y1, lambda_top);
            let b = split_row(r.y0, r.y1, lambda_bot);
            (a.min(b), a.max(b))
        }
    }
}

/// Faceness ratio of one window under one spatial configuration.
pub fn part_faceness(ii: &IntegralImage, w: &Window, c: &SpatialConfig) -> Result<f64> {
    if ii.channel() != c.channel {
        return Err(Error::ChannelMismatch {
            config: c.channel,
            integral: ii.channel(),
        });
    }
    let r = w.pixel_rect(ii.width(), ii.height())?;
    let rows = rows_for(&r, &c.split);
    Ok(ratio_for_rows(ii, &r, c.split.geometry(), rows, c.epsilon))
}

/// How per-part ratios combine into one window score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum CombineMode {
    #[default]
    #[serde(rename = "arith")]
    ArithMean,
    #[serde(rename = "geo")]
    GeoMean,
}

impl FromStr for CombineMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "arith" => Ok(CombineMode::ArithMean),
            "geo" => Ok(CombineMode::GeoMean),
            other => Err(Error::InvalidConfig(format!(
                "unknown mode {other:?}, expected arith or geo"
            ))),
        }
    }
}

impl fmt::Display for CombineMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CombineMode::ArithMean => "arith",
            CombineMode::GeoMean => "geo",
        })
    }
}

/// Mean of the available part scores. Missing parts are simply left out.
pub fn combined_faceness<I>(scores: I, mode: CombineMode) -> Result<f64>
where
    I: IntoIterator<Item = f64>,
{
    let (mut n, mut acc) = (0usize, 0.0f64);
    for s in scores {
        n += 1;
        acc += match mode {
            CombineMode::ArithMean => s,
            CombineMode::GeoMean => s.ln(),
        };
    }
    if n == 0 {
        return Err(Error::EmptyScoreSet);
    }
    let mean = acc / n as f64;
    Ok(match mode {
        CombineMode::ArithMean => mean,
        CombineMode::GeoMean => mean.exp(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FacenessScore {
    pub id: usize,
    pub per_part: BTreeMap<Channel, f64>,
    pub combined: f64,
}

/// Integral images keyed by channel.
#[derive(Debug, Clone, Default)]
pub struct IntegralStack {
    maps: BTreeMap<Channel, IntegralImage>,
}

impl IntegralStack {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, ii: IntegralImage) -> Result<()> {
        if let Some(existing) = self.maps.values().next() {
            let (a, b) = (
                (existing.width(), existing.height()),
                (ii.width(), ii.height()),
            );
            if a != b {
                return Err(Error::DimensionMismatch {
                    expected: a,
                    found: b,
                });
            }
        }
        if self.maps.contains_key(&ii.channel()) {
            return Err(Error::DuplicateChannel(ii.channel()));
        }
        self.maps.insert(ii.channel(), ii);
        Ok(())
    }

    pub fn from_maps<'a, I>(maps: I) -> Result<Self>
    where
        I: IntoIterator<Item = &'a crate::pmap::PartnessMap>,
    {
        let mut s = Self::new();
        for m in maps {
            s.insert(crate::pmap::build_integral(m))?;
        }
        Ok(s)
    }

    pub fn get(&self, channel: Channel) -> Result<&IntegralImage> {
        self.maps
            .get(&channel)
            .ok_or(Error::MissingChannel(channel))
    }

    pub fn channels(&self) -> impl Iterator<Item = Channel> + '_ {
        self.maps.keys().copied()
    }

    /// Width and height of the maps, if any are present.
    pub fn dims(&self) -> Option<(usize, usize)> {
        self.maps
            .values()
            .next()
            .map(|ii| (ii.width(), ii.height()))
    }
}

/// Scores every window with every configured part. Output order matches
/// input order.
pub fn score_windows(
    stack: &IntegralStack,
    windows: &[Window],
    configs: &[SpatialConfig],
    mode: CombineMode,
) -> Result<Vec<FacenessScore>> {
    if configs.is_empty() {
        return Err(Error::EmptyScoreSet);
    }
    let mut seen = BTreeSet::new();
    let mut resolved = Vec::with_capacity(configs.len());
    for c in configs {
        c.validate()?;
        if !seen.insert(c.channel) {
            return Err(Error::DuplicateChannel(c.channel));
        }
        resolved.push((stack.get(c.channel)?, c));
    }
    windows
        .par_iter()
        .map(|w| {
            let mut per_part = BTreeMap::new();
            for (ii, c) in &resolved {
                let d = part_faceness(ii, w, c).map_err(|e| e.for_window(w.id))?;
                per_part.insert(c.channel, d);
            }
            let combined = combined_faceness(per_part.values().copied(), mode)?;
            Ok(FacenessScore {
                id: w.id,
                per_part,
                combined,
            })
        })
        .collect()
}

/// Scoring configuration file: the aggregate mode and one spatial config
/// per part. Extra per-part fields (such as fitted `alpha`) are ignored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoringConfig {
    #[serde(default)]
    pub mode: CombineMode,
    pub parts: Vec<SpatialConfig>,
}

impl ScoringConfig {
    pub fn validate(&self) -> Result<()> {
        let mut seen = BTreeSet::new();
        for p in &self.parts {
            p.validate()?;
            if !seen.insert(p.channel) {
                return Err(Error::DuplicateChannel(p.channel));
            }
        }
        Ok(())
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: ScoringConfig = serde_json::from_str(&text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Keeps only the configs whose channel is listed.
    pub fn restrict(&self, channels: &[Channel]) -> ScoringConfig {
        ScoringConfig {
            mode: self.mode,
            parts: self
                .parts
                .iter()
                .filter(|p| channels.contains(&p.channel))
                .copied()
                .collect(),
        }
    }
}
