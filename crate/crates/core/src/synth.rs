//! Seeded synthetic scenes with planted faces.
//!
//! Each planted face carries one smooth raised-cosine response (peak 1.0)
//! per visible part, placed in that part's channel at a known position
//! inside the face box. Part positions are given with the same split
//! parameters that the faceness measure uses, so a fit on generated data can
//! be checked against the planted values. Background clutter blobs and
//! clamped Gaussian noise are added on top.
//!
//! All randomness comes from ChaCha8 streams seeded from the spec, so a spec
//! and seed determine the scene bit for bit.

use std::collections::BTreeMap;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::faceness::{split_row, CombineMode, Geometry, IntegralStack, SpatialConfig, Split};
use crate::geometry::{format_windows, iou, read_windows, Window};
use crate::pmap::{read_pmap, Channel, PartnessMap};

/// Split parameters of the planted parts, plus their horizontal extent as
/// fractions of the face width.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartLayout {
    pub hair_lambda: f64,
    pub eye: [f64; 2],
    pub nose: [f64; 2],
    pub mouth: [f64; 2],
    pub beard_lambda: f64,
    #[serde(default = "default_spans")]
    pub spans: BTreeMap<Channel, [f64; 2]>,
}

fn default_spans() -> BTreeMap<Channel, [f64; 2]> {
    BTreeMap::from([
        (Channel::Hair, [0.0, 1.0]),
        (Channel::Eye, [0.1, 0.9]),
        (Channel::Nose, [0.35, 0.65]),
        (Channel::Mouth, [0.25, 0.75]),
        (Channel::Beard, [0.15, 0.85]),
    ])
}

impl Default for PartLayout {
    fn default() -> Self {
        PartLayout {
            hair_lambda: 0.3,
            eye: [0.70, 0.50],
            nose: [0.55, 0.35],
            mouth: [0.35, 0.18],
            beard_lambda: 0.2,
            spans: default_spans(),
        }
    }
}

impl PartLayout {
    pub fn split(&self, channel: Channel) -> Option<Split> {
        Some(match channel {
            Channel::Hair => Split::TopOverBottom {
                lambda: self.hair_lambda,
            },
            Channel::Eye => band(self.eye),
            Channel::Nose => band(self.nose),
            Channel::Mouth => band(self.mouth),
            Channel::Beard => Split::BottomOverTop {
                lambda: self.beard_lambda,
            },
            Channel::Face => return None,
        })
    }

    /// Spatial configs matching the planted layout, one per part.
    pub fn configs(&self) -> Vec<SpatialConfig> {
        Channel::PARTS
            .iter()
            .map(|&c| SpatialConfig {
                channel: c,
                split: self.split(c).expect("part channel"),
                epsilon: crate::faceness::DEFAULT_EPSILON,
            })
            .collect()
    }

    /// Vertical extent of a part as fractions of the face height from the top.
    pub fn rows(&self, channel: Channel) -> Option<(f64, f64)> {
        Some(match self.split(channel)? {
            Split::TopOverBottom { lambda } => (0.0, 1.0 - lambda),
            Split::BottomOverTop { lambda } => (1.0 - lambda, 1.0),
            Split::BandOverOutside {
                lambda_top,
                lambda_bot,
            } => (1.0 - lambda_top, 1.0 - lambda_bot),
        })
    }

    pub fn validate(&self) -> Result<()> {
        let mut prev: Option<(Channel, f64)> = None;
        for c in Channel::PARTS {
            let split = self.split(c).expect("part channel");
            split
                .validate()
                .map_err(|e| Error::InvalidSpec(format!("{c}: {e}")))?;
            let (top, bot) = self.rows(c).expect("part channel");
            if bot <= top {
                return Err(Error::InvalidSpec(format!("{c} region is empty")));
            }
            let span = self
                .spans
                .get(&c)
                .ok_or_else(|| Error::InvalidSpec(format!("no horizontal span for {c}")))?;
            if !(0.0 <= span[0] && span[0] < span[1] && span[1] <= 1.0) {
                return Err(Error::InvalidSpec(format!("bad span {span:?} for {c}")));
            }
            let center = 0.5 * (top + bot);
            if let Some((pc, pcenter)) = prev {
                if center <= pcenter {
                    return Err(Error::InvalidSpec(format!(
                        "band order inverted: {c} center {center} is not below {pc} center {pcenter}"
                    )));
                }
            }
            prev = Some((c, center));
        }
        Ok(())
    }
}

fn band(v: [f64; 2]) -> Split {
    Split::BandOverOutside {
        lambda_top: v[0],
        lambda_bot: v[1],
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaceSpec {
    pub x0: usize,
    pub y0: usize,
    pub size: usize,
    #[serde(default)]
    pub occluded: Vec<Channel>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClutterSpec {
    pub count: usize,
    pub amplitude: f64,
    pub size: [usize; 2],
}

impl Default for ClutterSpec {
    fn default() -> Self {
        ClutterSpec {
            count: 12,
            amplitude: 0.6,
            size: [8, 24],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProposalSpec {
    pub jitter_per_face: usize,
    pub negatives: usize,
    pub jitter_sigma: f64,
}

impl Default for ProposalSpec {
    fn default() -> Self {
        ProposalSpec {
            jitter_per_face: 10,
            negatives: 400,
            jitter_sigma: 0.06,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SceneSpec {
    pub width: usize,
    pub height: usize,
    pub face_count: usize,
    pub face_size: [usize; 2],
    /// Explicit face placements; when present `face_count` is ignored.
    pub faces: Option<Vec<FaceSpec>>,
    pub layout: PartLayout,
    /// Parts suppressed on every randomly placed face.
    pub occlusion: Vec<Channel>,
    pub clutter: ClutterSpec,
    pub noise_sigma: f64,
    pub proposals: ProposalSpec,
    pub seed: u64,
}

impl Default for SceneSpec {
    fn default() -> Self {
        SceneSpec {
            width: 256,
            height: 256,
            face_count: 4,
            face_size: [40, 64],
            faces: None,
            layout: PartLayout::default(),
            occlusion: Vec::new(),
            clutter: ClutterSpec::default(),
            noise_sigma: 0.02,
            proposals: ProposalSpec::default(),
            seed: 0,
        }
    }
}

impl SceneSpec {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| {
            if e.is_io() {
                Error::Json(e)
            } else {
                Error::InvalidSpec(e.to_string())
            }
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::InvalidSpec("canvas must be non-empty".into()));
        }
        let [lo, hi] = self.face_size;
        if lo < 4 || lo > hi {
            return Err(Error::InvalidSpec(format!(
                "face_size {:?} must satisfy 4 <= min <= max",
                self.face_size
            )));
        }
        if hi > self.width || hi > self.height {
            return Err(Error::InvalidSpec("faces larger than the canvas".into()));
        }
        if let Some(faces) = &self.faces {
            for (i, f) in faces.iter().enumerate() {
                if f.size < 4 || f.x0 + f.size > self.width || f.y0 + f.size > self.height {
                    return Err(Error::InvalidSpec(format!("face {i} is off the canvas")));
                }
            }
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::InvalidSpec("noise_sigma must be >= 0".into()));
        }
        if !(self.clutter.amplitude >= 0.0 && self.clutter.amplitude.is_finite()) {
            return Err(Error::InvalidSpec("clutter amplitude must be >= 0".into()));
        }
        let [clo, chi] = self.clutter.size;
        if self.clutter.count > 0 && (clo == 0 || clo > chi) {
            return Err(Error::InvalidSpec("bad clutter size range".into()));
        }
        if !(self.proposals.jitter_sigma >= 0.0 && self.proposals.jitter_sigma.is_finite()) {
            return Err(Error::InvalidSpec("jitter_sigma must be >= 0".into()));
        }
        self.layout.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedFace {
    pub bbox: Window,
    pub occluded: Vec<Channel>,
    /// Peak position of each visible part, in pixel-center coordinates
    /// (pixel `(i, j)` has center `(i + 0.5, j + 0.5)`).
    pub part_centers: BTreeMap<Channel, [f64; 2]>,
}

/// Planted ground truth written next to a generated scene.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Plant {
    pub seed: u64,
    pub width: usize,
    pub height: usize,
    pub face_size: [usize; 2],
    pub layout: PartLayout,
    pub faces: Vec<PlantedFace>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticScene {
    /// One map per part channel, in [`Channel::PARTS`] order.
    pub maps: Vec<PartnessMap>,
    pub plant: Plant,
    pub proposals: Vec<Window>,
}

impl SyntheticScene {
    pub fn gt(&self) -> Vec<Window> {
        self.plant.faces.iter().map(|f| f.bbox).collect()
    }

    pub fn map(&self, channel: Channel) -> Option<&PartnessMap> {
        self.maps.iter().find(|m| m.channel() == channel)
    }

    pub fn integrals(&self) -> IntegralStack {
        IntegralStack::from_maps(&self.maps).expect("scene maps share dimensions")
    }
}

fn raised_cosine(t: f64) -> f64 {
    if t.abs() >= 1.0 {
        0.0
    } else {
        0.5 * (1.0 + (std::f64::consts::PI * t).cos())
    }
}

/// Adds `amplitude * bump` over the real rectangle `[x0, x1) x [y0, y1)`.
/// Returns the peak position in pixel-center coordinates.
fn add_bump(
    buf: &mut [f64],
    width: usize,
    height: usize,
    (x0, y0, x1, y1): (f64, f64, f64, f64),
    amplitude: f64,
) -> [f64; 2] {
    let (cx, cy) = (0.5 * (x0 + x1), 0.5 * (y0 + y1));
    let (hw, hh) = (0.5 * (x1 - x0), 0.5 * (y1 - y0));
    let px0 = x0.floor().max(0.0) as usize;
    let py0 = y0.floor().max(0.0) as usize;
    let px1 = (x1.ceil() as usize).min(width);
    let py1 = (y1.ceil() as usize).min(height);
    for y in py0..py1 {
        let wy = raised_cosine((y as f64 + 0.5 - cy) / hh);
        if wy == 0.0 {
            continue;
        }
        for x in px0..px1 {
            let wx = raised_cosine((x as f64 + 0.5 - cx) / hw);
            buf[y * width + x] += amplitude * wx * wy;
        }
    }
    [cx, cy]
}

fn overlaps(a: &Window, b: &Window) -> bool {
    a.x0 < b.x1 && b.x0 < a.x1 && a.y0 < b.y1 && b.y0 < a.y1
}

fn place_faces(spec: &SceneSpec, rng: &mut ChaCha8Rng) -> Result<Vec<(Window, Vec<Channel>)>> {
    if let Some(faces) = &spec.faces {
        return Ok(faces
            .iter()
            .enumerate()
            .map(|(i, f)| {
                let w = Window {
                    id: i,
                    x0: f.x0 as f64,
                    y0: f.y0 as f64,
                    x1: (f.x0 + f.size) as f64,
                    y1: (f.y0 + f.size) as f64,
                    score: None,
                };
                (w, f.occluded.clone())
            })
            .collect());
    }
    let [lo, hi] = spec.face_size;
    let mut placed: Vec<(Window, Vec<Channel>)> = Vec::with_capacity(spec.face_count);
    for i in 0..spec.face_count {
        let mut ok = false;
        for _ in 0..10_000 {
            let size = rng.random_range(lo..=hi);
            let x0 = rng.random_range(0..=spec.width - size);
            let y0 = rng.random_range(0..=spec.height - size);
            let w = Window {
                id: i,
                x0: x0 as f64,
                y0: y0 as f64,
                x1: (x0 + size) as f64,
                y1: (y0 + size) as f64,
                score: None,
            };
            // keep a small gap so part responses of neighbours never touch
            let grown = Window {
                x0: w.x0 - 4.0,
                y0: w.y0 - 4.0,
                x1: w.x1 + 4.0,
                y1: w.y1 + 4.0,
                ..w
            };
            if placed.iter().all(|(p, _)| !overlaps(&grown, p)) {
                placed.push((w, spec.occlusion.clone()));
                ok = true;
                break;
            }
        }
        if !ok {
            return Err(Error::InvalidSpec(format!(
                "cannot place {} non-overlapping faces on a {}x{} canvas",
                spec.face_count, spec.width, spec.height
            )));
        }
    }
    Ok(placed)
}

/// Renders the scene's partness maps and ground truth; proposals come from
/// [`sample_proposals`] with the spec's proposal settings.
pub fn generate(spec: &SceneSpec) -> Result<SyntheticScene> {
    spec.validate()?;
    let (w, h) = (spec.width, spec.height);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let faces = place_faces(spec, &mut rng)?;

    let mut bufs: BTreeMap<Channel, Vec<f64>> = Channel::PARTS
        .iter()
        .map(|&c| (c, vec![0.0; w * h]))
        .collect();

    let mut planted = Vec::with_capacity(faces.len());
    for (bbox, occluded) in faces {
        let (fx0, fy0, fx1, fy1) = (
            bbox.x0 as usize,
            bbox.y0 as usize,
            bbox.x1,
            bbox.y1 as usize,
        );
        let fw = fx1 - bbox.x0;
        let mut centers = BTreeMap::new();
        for c in Channel::PARTS {
            if occluded.contains(&c) {
                continue;
            }
            // region rows follow the same cut-row rounding as scoring
            let (top_row, bot_row) = match spec.layout.split(c).expect("part channel") {
                Split::TopOverBottom { lambda } => (fy0, split_row(fy0, fy1, lambda)),
                Split::BottomOverTop { lambda } => (split_row(fy0, fy1, lambda), fy1),
                Split::BandOverOutside {
                    lambda_top,
                    lambda_bot,
                } => (
                    split_row(fy0, fy1, lambda_top),
                    split_row(fy0, fy1, lambda_bot),
                ),
            };
            let span = spec.layout.spans[&c];
            let region = (
                fx0 as f64 + span[0] * fw,
                top_row as f64,
                fx0 as f64 + span[1] * fw,
                bot_row as f64,
            );
            if region.3 <= region.1 {
                continue;
            }
            let buf = bufs.get_mut(&c).expect("part buffer");
            centers.insert(c, add_bump(buf, w, h, region, 1.0));
        }
        planted.push(PlantedFace {
            bbox,
            occluded,
            part_centers: centers,
        });
    }

    let [clo, chi] = spec.clutter.size;
    for _ in 0..spec.clutter.count {
        let c = Channel::PARTS[rng.random_range(0..Channel::PARTS.len())];
        for _ in 0..1000 {
            let size = rng.random_range(clo..=chi.min(w).min(h));
            let x0 = rng.random_range(0..=w - size) as f64;
            let y0 = rng.random_range(0..=h - size) as f64;
            let blob = Window {
                id: 0,
                x0,
                y0,
                x1: x0 + size as f64,
                y1: y0 + size as f64,
                score: None,
            };
            if planted.iter().all(|f| !overlaps(&blob, &f.bbox)) {
                let buf = bufs.get_mut(&c).expect("part buffer");
                add_bump(
                    buf,
                    w,
                    h,
                    (blob.x0, blob.y0, blob.x1, blob.y1),
                    spec.clutter.amplitude,
                );
                break;
            }
        }
    }

    if spec.noise_sigma > 0.0 {
        let normal = Normal::new(0.0, spec.noise_sigma).expect("valid sigma");
        for buf in bufs.values_mut() {
            for v in buf.iter_mut() {
                *v += normal.sample(&mut rng);
            }
        }
    }

    let maps = bufs
        .into_iter()
        .map(|(c, buf)| {
            let values = buf.into_iter().map(|v| v.max(0.0) as f32).collect();
            PartnessMap::new(c, w, h, values)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut scene = SyntheticScene {
        maps,
        plant: Plant {
            seed: spec.seed,
            width: w,
            height: h,
            face_size: spec.face_size,
            layout: spec.layout.clone(),
            faces: planted,
        },
        proposals: Vec::new(),
    };
    let p = spec.proposals;
    scene.proposals = sample_proposals(
        &scene,
        p.jitter_per_face,
        p.negatives,
        p.jitter_sigma,
        spec.seed.wrapping_add(0x9e37_79b9_7f4a_7c15),
    );
    Ok(scene)
}

fn jittered(
    gt: &Window,
    sigma: f64,
    width: usize,
    height: usize,
    rng: &mut ChaCha8Rng,
) -> Option<Window> {
    let (cx, cy) = gt.center();
    let (gw, gh) = (gt.width(), gt.height());
    let (dx, dy, ds) = if sigma > 0.0 {
        let n = Normal::new(0.0, sigma).expect("valid sigma");
        (n.sample(rng), n.sample(rng), n.sample(rng))
    } else {
        (0.0, 0.0, 0.0)
    };
    let scale = ds.exp();
    let (nw, nh) = (gw * scale, gh * scale);
    let (ncx, ncy) = (cx + dx * gw, cy + dy * gh);
    let r = |v: f64| (v + 0.5).floor();
    let w = Window {
        id: 0,
        x0: r(ncx - 0.5 * nw),
        y0: r(ncy - 0.5 * nh),
        x1: r(ncx + 0.5 * nw),
        y1: r(ncy + 0.5 * nh),
        score: None,
    };
    w.clip(width, height)
}

fn random_face_sized(
    size: [usize; 2],
    width: usize,
    height: usize,
    rng: &mut ChaCha8Rng,
) -> Window {
    let s = rng.random_range(size[0]..=size[1].min(width).min(height));
    let x0 = rng.random_range(0..=width - s) as f64;
    let y0 = rng.random_range(0..=height - s) as f64;
    Window {
        id: 0,
        x0,
        y0,
        x1: x0 + s as f64,
        y1: y0 + s as f64,
        score: None,
    }
}

/// Simulated generic proposals: `n_pos_jitter` jittered copies of every
/// ground-truth face plus `n_neg` uniformly placed face-sized windows, in
/// shuffled order. Proposal scores are uniform and independent of content.
pub fn sample_proposals(
    scene: &SyntheticScene,
    n_pos_jitter: usize,
    n_neg: usize,
    jitter_sigma: f64,
    seed: u64,
) -> Vec<Window> {
    let (w, h) = (scene.plant.width, scene.plant.height);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(scene.plant.faces.len() * n_pos_jitter + n_neg);
    for f in &scene.plant.faces {
        for _ in 0..n_pos_jitter {
            let win = loop {
                if let Some(win) = jittered(&f.bbox, jitter_sigma, w, h, &mut rng) {
                    break win;
                }
            };
            out.push(win);
        }
    }
    for _ in 0..n_neg {
        out.push(random_face_sized(scene.plant.face_size, w, h, &mut rng));
    }
    out.shuffle(&mut rng);
    for (i, win) in out.iter_mut().enumerate() {
        win.id = i;
        win.score = Some(rng.random::<f64>());
    }
    out
}

/// Balanced labeled windows for fitting: positives are jittered copies of
/// the ground truth with IoU above 0.5, negatives are face-sized windows
/// whose best IoU is at most 0.5. Faces are visited round-robin.
pub fn sample_training_set(
    gt: &[Window],
    canvas: (usize, usize),
    face_size: [usize; 2],
    n_pos: usize,
    n_neg: usize,
    jitter_sigma: f64,
    seed: u64,
) -> Result<Vec<(Window, bool)>> {
    if gt.is_empty() {
        return Err(Error::EmptyGroundTruth);
    }
    let (w, h) = canvas;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let best_iou = |win: &Window| gt.iter().map(|g| iou(win, g)).fold(0.0, f64::max);
    let mut out = Vec::with_capacity(n_pos + n_neg);
    for i in 0..n_pos {
        let face = &gt[i % gt.len()];
        let mut found = None;
        for _ in 0..10_000 {
            if let Some(win) = jittered(face, jitter_sigma, w, h, &mut rng) {
                if iou(&win, face) > 0.5 {
                    found = Some(win);
                    break;
                }
            }
        }
        let win = found.ok_or_else(|| {
            Error::InvalidSpec("jitter too large to sample positive windows".into())
        })?;
        out.push((win, true));
    }
    for _ in 0..n_neg {
        let mut found = None;
        for _ in 0..10_000 {
            let win = random_face_sized(face_size, w, h, &mut rng);
            if best_iou(&win) <= 0.5 {
                found = Some(win);
                break;
            }
        }
        let win = found.ok_or_else(|| {
            Error::InvalidSpec("canvas too crowded to sample negative windows".into())
        })?;
        out.push((win, false));
    }
    for (i, (win, _)) in out.iter_mut().enumerate() {
        win.id = i;
    }
    Ok(out)
}

/// Geometry per part used when fitting against planted scenes.
pub fn default_geometries() -> Vec<(Channel, Geometry)> {
    Channel::PARTS
        .iter()
        .map(|&c| (c, Geometry::default_for(c)))
        .collect()
}

/// Contents of a scene directory.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneFiles {
    pub maps: Vec<PartnessMap>,
    pub gt: Vec<Window>,
    pub proposals: Vec<Window>,
    pub plant: Option<Plant>,
}

pub const GT_FILE: &str = "gt.csv";
pub const PROPOSALS_FILE: &str = "proposals.csv";
pub const PLANT_FILE: &str = "plant.json";

pub fn pmap_file_name(c: Channel) -> String {
    format!("{c}.pmap")
}

impl SceneFiles {
    /// Loads whichever part maps are present together with `gt.csv`,
    /// `proposals.csv` (empty when missing) and `plant.json` (optional).
    /// Proposals are clipped to the map canvas; windows entirely outside it
    /// are dropped.
    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        if !dir.is_dir() {
            return Err(Error::io(
                dir,
                std::io::Error::new(std::io::ErrorKind::NotFound, "scene directory not found"),
            ));
        }
        let mut maps = Vec::new();
        for c in Channel::PARTS {
            let p = dir.join(pmap_file_name(c));
            if p.exists() {
                let m = read_pmap(&p)?;
                if m.channel() != c {
                    return Err(Error::ChannelMismatch {
                        config: c,
                        integral: m.channel(),
                    });
                }
                maps.push(m);
            }
        }
        let gt = read_windows(dir.join(GT_FILE))?;
        let pp = dir.join(PROPOSALS_FILE);
        let mut proposals = if pp.exists() {
            read_windows(&pp)?
        } else {
            Vec::new()
        };
        if let Some(m) = maps.first() {
            let (w, h) = m.dims();
            proposals = proposals.iter().filter_map(|p| p.clip(w, h)).collect();
        }
        let plant_path = dir.join(PLANT_FILE);
        let plant = if plant_path.exists() {
            let text =
                std::fs::read_to_string(&plant_path).map_err(|e| Error::io(&plant_path, e))?;
            Some(serde_json::from_str(&text)?)
        } else {
            None
        };
        Ok(SceneFiles {
            maps,
            gt,
            proposals,
            plant,
        })
    }

    pub fn integrals(&self) -> Result<IntegralStack> {
        IntegralStack::from_maps(&self.maps)
    }

    pub fn canvas(&self) -> Option<(usize, usize)> {
        self.maps.first().map(|m| m.dims())
    }
}

/// Serialized files of a generated scene, as `(file name, bytes)` pairs.
pub fn scene_file_contents(scene: &SyntheticScene) -> Result<Vec<(String, Vec<u8>)>> {
    let mut files = Vec::new();
    for m in &scene.maps {
        files.push((pmap_file_name(m.channel()), crate::pmap::encode_pmap(m)));
    }
    files.push((
        GT_FILE.to_string(),
        format_windows(&scene.gt()).into_bytes(),
    ));
    files.push((
        PROPOSALS_FILE.to_string(),
        format_windows(&scene.proposals).into_bytes(),
    ));
    let mut plant = serde_json::to_vec_pretty(&scene.plant)?;
    plant.push(b'\n');
    files.push((PLANT_FILE.to_string(), plant));
    Ok(files)
}

/// Writes a scene directory (non-atomically; see the CLI for atomic writes).
pub fn write_scene_dir(scene: &SyntheticScene, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for (name, bytes) in scene_file_contents(scene)? {
        let p = dir.join(&name);
        std::fs::write(&p, &bytes).map_err(|e| Error::io(&p, e))?;
    }
    Ok(())
}

/// Default aggregate used when scoring synthetic scenes.
pub const DEFAULT_MODE: CombineMode = CombineMode::ArithMean;
