//! Face proposal re-ranking by part-response faceness.
//!
//! Per-part partness maps are summarised with integral images, each
//! candidate window gets a faceness score per part from a ratio of response
//! mass inside and outside the part's expected region, and candidates are
//! re-ranked by the combined score. Split parameters are fitted by MAP grid
//! search over labeled windows.

pub mod error;
pub mod evaluation;
pub mod faceness;
pub mod fit;
pub mod geometry;
pub mod pmap;
pub mod ranking;
pub mod synth;

pub use error::{Error, Result};
pub use faceness::{
    combined_faceness, part_faceness, score_windows, CombineMode, FacenessScore, Geometry,
    IntegralStack, ScoringConfig, SpatialConfig, Split,
};
pub use fit::{fit_all, fit_map, FitReport, FitResult, SearchSpec, TrainingSample};
pub use geometry::{iou, Ellipse, Window};
pub use pmap::{build_integral, fuse_face_map, Channel, FusionRule, IntegralImage, PartnessMap};
pub use ranking::{localize_parts, nms_boxes, rerank, RankedList};
