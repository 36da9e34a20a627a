//! Run settings: every tunable default in one versioned block.

use std::path::Path;

use faceness::fit::SearchSpec;
use faceness::ranking::PartNmsParams;
use faceness::{Channel, CombineMode, Error};
use serde::{Deserialize, Serialize};

pub const SETTINGS_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainingSettings {
    pub positives: usize,
    pub negatives: usize,
    pub jitter_sigma: f64,
}

impl Default for TrainingSettings {
    fn default() -> Self {
        TrainingSettings {
            positives: 200,
            negatives: 200,
            jitter_sigma: 0.02,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSettings {
    pub version: u32,
    pub seed: u64,
    pub grid: usize,
    pub alpha_magnitudes: usize,
    pub alpha_min: f64,
    pub alpha_max: f64,
    pub epsilon: f64,
    pub mode: CombineMode,
    pub iou: f64,
    pub nms: Option<f64>,
    pub parts: Vec<Channel>,
    pub part_nms: PartNmsParams,
    pub training: TrainingSettings,
    pub n_values: Vec<usize>,
}

impl Default for RunSettings {
    fn default() -> Self {
        let search = SearchSpec::default();
        RunSettings {
            version: SETTINGS_VERSION,
            seed: 0,
            grid: search.lambda_points,
            alpha_magnitudes: search.alpha_magnitudes,
            alpha_min: search.alpha_min,
            alpha_max: search.alpha_max,
            epsilon: search.epsilon,
            mode: CombineMode::default(),
            iou: faceness::evaluation::DEFAULT_IOU,
            nms: Some(0.5),
            parts: Channel::PARTS.to_vec(),
            part_nms: PartNmsParams::default(),
            training: TrainingSettings::default(),
            n_values: vec![1, 2, 4, 8, 16, 32, 64, 128, 256, 512],
        }
    }
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidConfig(msg.into())
}

impl RunSettings {
    pub fn read(path: &Path) -> Result<Self, Error> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        serde_json::from_str(&text).map_err(|e| invalid(format!("{}: {e}", path.display())))
    }

    pub fn search(&self) -> SearchSpec {
        SearchSpec {
            lambda_points: self.grid,
            alpha_magnitudes: self.alpha_magnitudes,
            alpha_min: self.alpha_min,
            alpha_max: self.alpha_max,
            epsilon: self.epsilon,
        }
    }

    pub fn validate(&self) -> Result<(), Error> {
        if self.version != SETTINGS_VERSION {
            return Err(invalid(format!(
                "settings version {} is not supported (expected {SETTINGS_VERSION})",
                self.version
            )));
        }
        self.search().validate()?;
        if !(self.iou > 0.0 && self.iou <= 1.0) {
            return Err(invalid(format!("iou {} must be in (0, 1]", self.iou)));
        }
        if let Some(t) = self.nms {
            if !(t > 0.0 && t <= 1.0) {
                return Err(invalid(format!("nms {t} must be in (0, 1]")));
            }
        }
        if self.parts.is_empty() {
            return Err(invalid("parts list is empty"));
        }
        for (i, c) in self.parts.iter().enumerate() {
            if *c == Channel::Face {
                return Err(invalid("face is not a part channel"));
            }
            if self.parts[..i].contains(c) {
                return Err(Error::DuplicateChannel(*c));
            }
        }
        if self.part_nms.radius == 0 {
            return Err(invalid("part NMS radius must be >= 1"));
        }
        let t = self.training;
        if t.positives == 0 || t.negatives == 0 {
            return Err(invalid("training needs positives and negatives"));
        }
        if !(t.jitter_sigma >= 0.0 && t.jitter_sigma.is_finite()) {
            return Err(invalid("training jitter_sigma must be >= 0"));
        }
        if self.n_values.is_empty() || self.n_values.contains(&0) {
            return Err(invalid("n_values must be non-empty and positive"));
        }
        Ok(())
    }
}

pub fn parse_channel(s: &str) -> Result<Channel, String> {
    s.trim().parse::<Channel>().map_err(|e| e.to_string())
}
