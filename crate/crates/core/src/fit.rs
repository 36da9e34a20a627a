//! MAP estimation of spatial-configuration parameters.
//!
//! The likelihood of a labeled window is a sigmoid of its faceness ratio,
//! `p(r = 1) = 1 / (1 + exp(-alpha / delta))`. The prior on `lambda` is
//! uniform on `[0, 1]` and the window and map priors do not depend on the
//! parameters, so over the search grid the posterior is maximized by the
//! summed log-likelihood alone. `lambda` and `alpha` are searched jointly on
//! a fixed grid; the grid search is exhaustive, so its result is exact up to
//! grid resolution.

use std::cmp::Ordering;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::faceness::{
    ratio_for_rows, rows_for, CombineMode, Geometry, IntegralStack, SpatialConfig, Split,
    DEFAULT_EPSILON,
};
use crate::geometry::{PixelRect, Window};
use crate::pmap::{Channel, IntegralImage};

/// A labeled window together with the maps of the scene it came from.
#[derive(Debug, Clone, Copy)]
pub struct TrainingSample<'a> {
    pub window: Window,
    pub label: bool,
    pub maps: &'a IntegralStack,
}

/// Search grid. `lambda_points` uniform values on `[0, 1]` per split
/// parameter; `alpha_magnitudes` log-spaced magnitudes on
/// `[alpha_min, alpha_max]`, each taken with both signs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchSpec {
    pub lambda_points: usize,
    pub alpha_magnitudes: usize,
    pub alpha_min: f64,
    pub alpha_max: f64,
    pub epsilon: f64,
}

impl Default for SearchSpec {
    fn default() -> Self {
        SearchSpec {
            lambda_points: 101,
            alpha_magnitudes: 41,
            alpha_min: 0.01,
            alpha_max: 10.0,
            epsilon: DEFAULT_EPSILON,
        }
    }
}

impl SearchSpec {
    pub fn validate(&self) -> Result<()> {
        if self.lambda_points == 0 || self.alpha_magnitudes == 0 {
            return Err(Error::EmptyGrid);
        }
        if !(self.alpha_min > 0.0 && self.alpha_min <= self.alpha_max && self.alpha_max.is_finite())
        {
            return Err(Error::InvalidConfig(format!(
                "alpha range [{}, {}] must be positive and ordered",
                self.alpha_min, self.alpha_max
            )));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        Ok(())
    }

    pub fn lambdas(&self) -> Vec<f64> {
        let n = self.lambda_points;
        if n == 1 {
            return vec![0.5];
        }
        (0..n).map(|i| i as f64 / (n - 1) as f64).collect()
    }

    /// Signed alpha values in ascending order.
    pub fn alphas(&self) -> Vec<f64> {
        let n = self.alpha_magnitudes;
        let mags: Vec<f64> = if n == 1 {
            vec![self.alpha_min]
        } else {
            let (lo, hi) = (self.alpha_min.ln(), self.alpha_max.ln());
            (0..n)
                .map(|i| (lo + (hi - lo) * i as f64 / (n - 1) as f64).exp())
                .collect()
        };
        mags.iter()
            .rev()
            .map(|m| -m)
            .chain(mags.iter().copied())
            .collect()
    }

    /// Parameter points for a geometry. Bands use every ordered pair with
    /// the upper edge strictly above the lower one.
    pub fn lambda_grid(&self, geometry: Geometry) -> Vec<(f64, Option<f64>)> {
        let ls = self.lambdas();
        match geometry {
            Geometry::BandOverOutside => {
                let mut out = Vec::with_capacity(ls.len() * ls.len().saturating_sub(1) / 2);
                for (i, &top) in ls.iter().enumerate() {
                    for &bot in &ls[..i] {
                        out.push((top, Some(bot)));
                    }
                }
                out
            }
            _ => ls.into_iter().map(|l| (l, None)).collect(),
        }
    }
}

/// Sigmoid likelihood of label `r` given faceness `delta`.
pub fn likelihood(delta: f64, r: bool, alpha: f64) -> f64 {
    let z = alpha / delta;
    let p = if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    };
    if r {
        p
    } else {
        1.0 - p
    }
}

#[inline]
fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// Natural log of [`likelihood`], evaluated without forming `p`.
#[inline]
pub fn log_likelihood(delta: f64, r: bool, alpha: f64) -> f64 {
    let z = alpha / delta;
    if r {
        -softplus(-z)
    } else {
        -softplus(z)
    }
}

/// Objective for the best alpha at one parameter point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub lambda: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_bot: Option<f64>,
    pub alpha: f64,
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub config: SpatialConfig,
    pub alpha: f64,
    pub log_posterior: f64,
    pub grid: Vec<GridPoint>,
}

impl FitResult {
    /// Diagnostics CSV: `lambda[,lambda_bot],alpha,objective` per grid point.
    pub fn grid_csv(&self) -> String {
        let band = self.config.split.geometry() == Geometry::BandOverOutside;
        let mut s = String::from(if band {
            "lambda,lambda_bot,alpha,objective\n"
        } else {
            "lambda,alpha,objective\n"
        });
        for g in &self.grid {
            match g.lambda_bot {
                Some(b) => {
                    let _ = writeln!(s, "{},{},{},{}", g.lambda, b, g.alpha, g.objective);
                }
                None => {
                    let _ = writeln!(s, "{},{},{}", g.lambda, g.alpha, g.objective);
                }
            }
        }
        s
    }
}

struct Prepared<'a> {
    ii: &'a IntegralImage,
    rect: PixelRect,
    label: bool,
}

/// Orders candidates so that the preferred one compares as `Less`: higher
/// objective, then parameters nearer 0.5, then smaller `|alpha|`, then
/// smaller parameters and alpha.
fn preference(a: &GridPoint, b: &GridPoint) -> Ordering {
    let dev =
        |g: &GridPoint| (g.lambda - 0.5).abs() + g.lambda_bot.map_or(0.0, |l| (l - 0.5).abs());
    b.objective
        .total_cmp(&a.objective)
        .then(dev(a).total_cmp(&dev(b)))
        .then(a.alpha.abs().total_cmp(&b.alpha.abs()))
        .then(a.lambda.total_cmp(&b.lambda))
        .then(
            a.lambda_bot
                .unwrap_or(0.0)
                .total_cmp(&b.lambda_bot.unwrap_or(0.0)),
        )
        .then(a.alpha.total_cmp(&b.alpha))
}

/// Fits the split parameters and alpha for one channel.
pub fn fit_map(
    samples: &[TrainingSample<'_>],
    channel: Channel,
    geometry: Geometry,
    search: &SearchSpec,
) -> Result<FitResult> {
    search.validate()?;
    let positives = samples.iter().filter(|s| s.label).count();
    let negatives = samples.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(Error::DegenerateLabels {
            positives,
            negatives,
        });
    }
    let prepared = samples
        .iter()
        .map(|s| {
            let ii = s.maps.get(channel)?;
            let rect = s
                .window
                .pixel_rect(ii.width(), ii.height())
                .map_err(|e| e.for_window(s.window.id))?;
            Ok(Prepared {
                ii,
                rect,
                label: s.label,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let alphas = search.alphas();
    let points = search.lambda_grid(geometry);
    let eps = search.epsilon;

    let grid: Vec<GridPoint> = points
        .par_iter()
        .map_init(
            || vec![0.0f64; prepared.len()],
            |deltas, &(first, second)| {
                let split = Split::from_params(geometry, first, second);
                for (d, p) in deltas.iter_mut().zip(&prepared) {
                    let rows = rows_for(&p.rect, &split);
                    *d = ratio_for_rows(p.ii, &p.rect, geometry, rows, eps);
                }
                let objective = |alpha: f64| -> f64 {
                    deltas
                        .iter()
                        .zip(&prepared)
                        .map(|(&d, p)| log_likelihood(d, p.label, alpha))
                        .sum()
                };
                let point = |k: usize, objective: f64| GridPoint {
                    lambda: first,
                    lambda_bot: second,
                    alpha: alphas[k],
                    objective,
                };
                // concave in alpha, so the sorted grid is unimodal
                let (mut lo, mut hi) = (0, alphas.len() - 1);
                let mut cache: Vec<Option<f64>> = vec![None; alphas.len()];
                let mut eval = |k: usize| *cache[k].get_or_insert_with(|| objective(alphas[k]));
                while lo < hi {
                    let mid = (lo + hi) / 2;
                    if eval(mid + 1) > eval(mid) {
                        lo = mid + 1;
                    } else {
                        hi = mid;
                    }
                }
                let mut best = point(lo, eval(lo));
                for k in [lo.wrapping_sub(1), lo + 1] {
                    if k < alphas.len() {
                        let cand = point(k, eval(k));
                        if preference(&cand, &best) == Ordering::Less {
                            best = cand;
                        }
                    }
                }
                best
            },
        )
        .collect();

    let best = *grid
        .iter()
        .min_by(|a, b| preference(a, b))
        .ok_or(Error::EmptyGrid)?;
    let config = SpatialConfig {
        channel,
        split: Split::from_params(geometry, best.lambda, best.lambda_bot),
        epsilon: eps,
    };
    Ok(FitResult {
        config,
        alpha: best.alpha,
        log_posterior: best.objective,
        grid,
    })
}

/// Independent fit for each listed channel.
pub fn fit_all(
    samples: &[TrainingSample<'_>],
    channels: &[(Channel, Geometry)],
    search: &SearchSpec,
) -> Result<Vec<FitResult>> {
    channels
        .iter()
        .map(|&(c, g)| fit_map(samples, c, g, search).map_err(|e| e.for_channel(c)))
        .collect()
}

/// One fitted part in a config file: the spatial config plus fit metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitEntry {
    #[serde(flatten)]
    pub config: SpatialConfig,
    pub alpha: f64,
    pub log_posterior: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_dump: Option<String>,
}

/// Config file written by a fit; readable as a [`crate::faceness::ScoringConfig`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub mode: CombineMode,
    pub parts: Vec<FitEntry>,
}
