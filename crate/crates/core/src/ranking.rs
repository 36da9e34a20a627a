//! Re-ranking of candidate windows, box suppression, and part localization
//! by peak picking on partness maps.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::faceness::FacenessScore;
use crate::geometry::{iou, Window};
use crate::pmap::{Channel, PartnessMap};

#[derive(Debug, Clone, PartialEq)]
pub struct RankedEntry {
    pub window: Window,
    pub score: FacenessScore,
}

/// Windows in descending order of combined faceness.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RankedList {
    pub entries: Vec<RankedEntry>,
}

impl RankedList {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn windows(&self) -> impl Iterator<Item = &Window> {
        self.entries.iter().map(|e| &e.window)
    }

    pub fn ids(&self) -> Vec<usize> {
        self.entries.iter().map(|e| e.window.id).collect()
    }

    /// Orders windows by their own proposal score (descending, stable), the
    /// baseline the faceness ranking is compared against. Windows without a
    /// score sort last.
    pub fn by_proposal_score(windows: &[Window]) -> RankedList {
        let mut entries: Vec<RankedEntry> = windows
            .iter()
            .map(|w| RankedEntry {
                window: *w,
                score: FacenessScore {
                    id: w.id,
                    per_part: BTreeMap::new(),
                    combined: w.score.unwrap_or(f64::NEG_INFINITY),
                },
            })
            .collect();
        entries.sort_by(|a, b| b.score.combined.total_cmp(&a.score.combined));
        RankedList { entries }
    }
}

/// Stable descending sort of `windows` by the combined score with the same id.
pub fn rerank(windows: &[Window], scores: &[FacenessScore]) -> Result<RankedList> {
    if windows.len() != scores.len() {
        return Err(Error::IdMismatch(format!(
            "{} windows but {} scores",
            windows.len(),
            scores.len()
        )));
    }
    let mut by_id: HashMap<usize, &FacenessScore> = HashMap::with_capacity(scores.len());
    for s in scores {
        if by_id.insert(s.id, s).is_some() {
            return Err(Error::IdMismatch(format!("duplicate score id {}", s.id)));
        }
    }
    let mut entries = windows
        .iter()
        .map(|w| {
            let s = by_id
                .remove(&w.id)
                .ok_or_else(|| Error::IdMismatch(format!("no score for window {}", w.id)))?;
            if !s.combined.is_finite() {
                return Err(Error::IdMismatch(format!(
                    "window {} has a non-finite score",
                    w.id
                )));
            }
            Ok(RankedEntry {
                window: *w,
                score: s.clone(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    entries.sort_by(|a, b| b.score.combined.total_cmp(&a.score.combined));
    Ok(RankedList { entries })
}

/// Greedy suppression in rank order: a window survives when its IoU with
/// every previously kept window is below `iou_thresh`.
pub fn nms_boxes(ranked: &RankedList, iou_thresh: f64) -> RankedList {
    let mut kept: Vec<RankedEntry> = Vec::new();
    for e in &ranked.entries {
        if kept.iter().all(|k| iou(&k.window, &e.window) < iou_thresh) {
            kept.push(e.clone());
        }
    }
    RankedList { entries: kept }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PartDetection {
    pub channel: Channel,
    pub cx: usize,
    pub cy: usize,
    pub bbox: Window,
    pub peak: f32,
}

/// Peak-picking parameters. Unset fields resolve against the map:
/// threshold to 0.3 of the map peak, box side to a quarter of the smaller
/// map dimension.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PartNmsParams {
    pub radius: usize,
    pub threshold: Option<f32>,
    pub box_w: Option<usize>,
    pub box_h: Option<usize>,
}

impl Default for PartNmsParams {
    fn default() -> Self {
        PartNmsParams {
            radius: 8,
            threshold: None,
            box_w: None,
            box_h: None,
        }
    }
}

pub const DEFAULT_RELATIVE_THRESHOLD: f32 = 0.3;
pub const DEFAULT_BOX_FRACTION: f64 = 0.25;

impl PartNmsParams {
    /// Concrete `(threshold, box_w, box_h)` for a map.
    pub fn resolve(&self, m: &PartnessMap) -> (f32, usize, usize) {
        let threshold = self
            .threshold
            .unwrap_or(DEFAULT_RELATIVE_THRESHOLD * m.peak());
        let side =
            ((m.width().min(m.height()) as f64 * DEFAULT_BOX_FRACTION).round() as usize).max(1);
        (
            threshold,
            self.box_w.unwrap_or(side).max(1),
            self.box_h.unwrap_or(side).max(1),
        )
    }
}

/// Greedy global-maximum peak picking. Each pick emits a box centered on the
/// peak and suppresses every pixel within Chebyshev distance `radius`.
/// Only strictly positive responses count as peaks.
pub fn localize_parts(m: &PartnessMap, params: &PartNmsParams) -> Vec<PartDetection> {
    let (threshold, box_w, box_h) = params.resolve(m);
    let (w, h) = m.dims();
    let r = params.radius.max(1);
    let mut work: Vec<f32> = m.values().to_vec();
    let mut out = Vec::new();
    loop {
        // first maximum in row-major order
        let mut best: Option<(usize, f32)> = None;
        for (i, &v) in work.iter().enumerate() {
            if v > 0.0 && v >= threshold && best.is_none_or(|(_, b)| v > b) {
                best = Some((i, v));
            }
        }
        let Some((i, peak)) = best else { break };
        let (cx, cy) = (i % w, i / w);
        let x0 = cx as f64 - (box_w / 2) as f64;
        let y0 = cy as f64 - (box_h / 2) as f64;
        let raw = Window {
            id: out.len(),
            x0,
            y0,
            x1: x0 + box_w as f64,
            y1: y0 + box_h as f64,
            score: Some(f64::from(peak)),
        };
        let bbox = raw.clip(w, h).expect("box contains its own center");
        out.push(PartDetection {
            channel: m.channel(),
            cx,
            cy,
            bbox,
            peak,
        });
        for y in cy.saturating_sub(r)..=(cy + r).min(h - 1) {
            for x in cx.saturating_sub(r)..=(cx + r).min(w - 1) {
                work[y * w + x] = f32::NEG_INFINITY;
            }
        }
    }
    out
}

pub const RANKED_HEADER: &str =
    "rank,id,x0,y0,x1,y1,combined,delta_hair,delta_eye,delta_nose,delta_mouth,delta_beard";

/// Ranked list as CSV; ranks start at 1 and absent parts are left blank.
pub fn format_ranked(list: &RankedList) -> String {
    let mut s = String::from(RANKED_HEADER);
    s.push('\n');
    for (rank, e) in list.entries.iter().enumerate() {
        let w = &e.window;
        let _ = write!(
            s,
            "{},{},{},{},{},{},{}",
            rank + 1,
            w.id,
            w.x0,
            w.y0,
            w.x1,
            w.y1,
            e.score.combined
        );
        for c in Channel::PARTS {
            s.push(',');
            if let Some(d) = e.score.per_part.get(&c) {
                let _ = write!(s, "{d}");
            }
        }
        s.push('\n');
    }
    s
}

/// Reads a ranked CSV back; row order is the ranking.
pub fn read_ranked(path: impl AsRef<Path>) -> Result<RankedList> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(file);
    let header = rdr.headers()?.clone();
    let col = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Parse {
                path: path.to_path_buf(),
                line: 1,
                msg: format!("missing column {name}"),
            })
    };
    let cols = [
        col("id")?,
        col("x0")?,
        col("y0")?,
        col("x1")?,
        col("y1")?,
        col("combined")?,
    ];
    let part_cols: Vec<(Channel, Option<usize>)> = Channel::PARTS
        .iter()
        .map(|&c| (c, header.iter().position(|h| h == format!("delta_{c}"))))
        .collect();
    let mut entries = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let num = |i: usize| -> Result<f64> {
            let f = record.get(i).unwrap_or("");
            f.parse::<f64>().map_err(|_| Error::Parse {
                path: path.to_path_buf(),
                line,
                msg: format!("not a number: {f:?}"),
            })
        };
        let id = num(cols[0])? as usize;
        let window = Window {
            id,
            x0: num(cols[1])?,
            y0: num(cols[2])?,
            x1: num(cols[3])?,
            y1: num(cols[4])?,
            score: None,
        };
        window.validate().map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line,
            msg: e.to_string(),
        })?;
        let mut per_part = BTreeMap::new();
        for &(c, i) in &part_cols {
            if let Some(i) = i {
                if record.get(i).is_some_and(|f| !f.is_empty()) {
                    per_part.insert(c, num(i)?);
                }
            }
        }
        entries.push(RankedEntry {
            window,
            score: FacenessScore {
                id,
                per_part,
                combined: num(cols[5])?,
            },
        });
    }
    Ok(RankedList { entries })
}

pub const PARTS_HEADER: &str = "channel,cx,cy,x0,y0,x1,y1,peak";

pub fn format_parts(dets: &[PartDetection]) -> String {
    let mut s = String::from(PARTS_HEADER);
    s.push('\n');
    for d in dets {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            d.channel, d.cx, d.cy, d.bbox.x0, d.bbox.y0, d.bbox.x1, d.bbox.y1, d.peak
        );
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn score(id: usize, combined: f64) -> FacenessScore {
        FacenessScore {
            id,
            per_part: BTreeMap::new(),
            combined,
        }
    }

    fn win(id: usize, x0: f64, y0: f64, x1: f64, y1: f64) -> Window {
        Window::new(id, x0, y0, x1, y1).unwrap()
    }

    #[test]
    fn rerank_orders_and_is_stable() {
        let ws: Vec<_> = (0..3).map(|i| win(i, 0.0, 0.0, 1.0, 1.0)).collect();
        let r = rerank(&ws, &[score(0, 1.0), score(1, 3.0), score(2, 2.0)]).unwrap();
        assert_eq!(r.ids(), vec![1, 2, 0]);
        let r = rerank(&ws, &[score(2, 1.0), score(0, 1.0), score(1, 1.0)]).unwrap();
        assert_eq!(r.ids(), vec![0, 1, 2]);
        assert!(matches!(
            rerank(&ws, &[score(0, 1.0), score(1, 1.0), score(5, 1.0)]),
            Err(Error::IdMismatch(_))
        ));
        assert!(matches!(
            rerank(&ws, &[score(0, 1.0)]),
            Err(Error::IdMismatch(_))
        ));
    }

    #[test]
    fn nms_examples() {
        let a = win(0, 0.0, 0.0, 10.0, 10.0);
        let dup = RankedList {
            entries: vec![
                RankedEntry {
                    window: a,
                    score: score(0, 2.0),
                },
                RankedEntry {
                    window: Window { id: 1, ..a },
                    score: score(1, 1.0),
                },
            ],
        };
        assert_eq!(nms_boxes(&dup, 0.5).ids(), vec![0]);

        let disjoint = RankedList {
            entries: (0..4)
                .map(|i| RankedEntry {
                    window: win(i, 20.0 * i as f64, 0.0, 20.0 * i as f64 + 10.0, 10.0),
                    score: score(i, 1.0),
                })
                .collect(),
        };
        assert_eq!(nms_boxes(&disjoint, 0.5).len(), 4);
    }

    #[test]
    fn nms_chain_keeps_first_and_last() {
        // Unit-height boxes of width 16: A-B and B-C overlap by 12 (IoU 0.6),
        // A-C by 8 (IoU 1/3).
        let a = win(0, -8.0, 0.0, 8.0, 1.0);
        let b = win(1, -4.0, 0.0, 12.0, 1.0);
        let c = win(2, 0.0, 0.0, 16.0, 1.0);
        assert!((iou(&a, &b) - 0.6).abs() < 1e-12);
        assert!((iou(&b, &c) - 0.6).abs() < 1e-12);
        assert!((iou(&a, &c) - 1.0 / 3.0).abs() < 1e-12);
        let list = RankedList {
            entries: vec![
                RankedEntry {
                    window: a,
                    score: score(0, 3.0),
                },
                RankedEntry {
                    window: b,
                    score: score(1, 2.0),
                },
                RankedEntry {
                    window: c,
                    score: score(2, 1.0),
                },
            ],
        };
        assert_eq!(nms_boxes(&list, 0.5).ids(), vec![0, 2]);
    }

    fn impulse_map(points: &[(usize, usize, f32)]) -> PartnessMap {
        let mut v = vec![0.0f32; 32 * 32];
        for &(x, y, a) in points {
            v[y * 32 + x] = a;
        }
        PartnessMap::new(Channel::Eye, 32, 32, v).unwrap()
    }

    #[test]
    fn localize_examples() {
        let params = PartNmsParams {
            threshold: Some(0.5),
            ..Default::default()
        };
        let d = localize_parts(&impulse_map(&[(10, 10, 1.0)]), &params);
        assert_eq!(d.len(), 1);
        assert_eq!((d[0].cx, d[0].cy), (10, 10));
        assert_eq!(d[0].bbox.center(), (10.0, 10.0));
        assert_eq!(d[0].bbox.width(), 8.0);

        let params = PartNmsParams {
            radius: 5,
            threshold: Some(0.5),
            ..Default::default()
        };
        let d = localize_parts(&impulse_map(&[(10, 10, 1.0), (13, 10, 0.9)]), &params);
        assert_eq!(d.len(), 1);
        let d = localize_parts(&impulse_map(&[(10, 10, 1.0), (16, 10, 0.9)]), &params);
        assert_eq!(d.len(), 2);

        let zero = PartnessMap::zeros(Channel::Hair, 16, 16);
        assert!(localize_parts(&zero, &PartNmsParams::default()).is_empty());
    }

    #[test]
    fn localize_boxes_clip_at_borders() {
        let d = localize_parts(&impulse_map(&[(0, 31, 1.0)]), &PartNmsParams::default());
        assert_eq!(d.len(), 1);
        let b = d[0].bbox;
        assert!(b.x0 >= 0.0 && b.y1 <= 32.0);
    }

    #[test]
    fn ranked_csv_round_trip() {
        let ws = vec![win(0, 0.0, 0.0, 4.0, 4.0), win(1, 1.5, 0.0, 4.0, 4.0)];
        let mut s0 = score(0, 1.25);
        s0.per_part.insert(Channel::Hair, 1.5);
        s0.per_part.insert(Channel::Beard, 1.0);
        let list = rerank(&ws, &[s0, score(1, 3.0)]).unwrap();
        let text = format_ranked(&list);
        assert!(text.starts_with(RANKED_HEADER));
        assert!(text.contains("\n2,0,0,0,4,4,1.25,1.5,,,,1\n"), "{text}");
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("ranked.csv");
        std::fs::write(&p, &text).unwrap();
        let back = read_ranked(&p).unwrap();
        assert_eq!(back.ids(), list.ids());
        assert_eq!(
            back.entries[1].score.per_part,
            list.entries[1].score.per_part
        );
    }

    proptest! {
        #[test]
        fn rerank_scores_non_increasing(scores in proptest::collection::vec(0u8..6, 0..40)) {
            let ws: Vec<_> = (0..scores.len()).map(|i| win(i, 0.0, 0.0, 1.0, 1.0)).collect();
            let ss: Vec<_> = scores.iter().enumerate().map(|(i, &s)| score(i, s as f64)).collect();
            let r = rerank(&ws, &ss).unwrap();
            let combined: Vec<f64> = r.entries.iter().map(|e| e.score.combined).collect();
            prop_assert!(combined.windows(2).all(|w| w[0] >= w[1]));
            let mut ids = r.ids();
            // equal scores keep input order
            for w in r.entries.windows(2) {
                if w[0].score.combined == w[1].score.combined {
                    prop_assert!(w[0].window.id < w[1].window.id);
                }
            }
            ids.sort_unstable();
            prop_assert_eq!(ids, (0..scores.len()).collect::<Vec<_>>());
        }

        #[test]
        fn nms_kept_set_pairwise_below_threshold(
            boxes in proptest::collection::vec((0.0..50.0f64, 0.0..50.0f64, 1.0..20.0f64), 1..30),
            thresh in 0.05..0.95f64
        ) {
            let ws: Vec<_> = boxes.iter().enumerate()
                .map(|(i, &(x, y, s))| win(i, x, y, x + s, y + s)).collect();
            let ss: Vec<_> = (0..ws.len()).map(|i| score(i, (i % 3) as f64)).collect();
            let kept = nms_boxes(&rerank(&ws, &ss).unwrap(), thresh);
            for (i, a) in kept.entries.iter().enumerate() {
                for b in &kept.entries[i + 1..] {
                    prop_assert!(iou(&a.window, &b.window) < thresh);
                }
            }
        }

        #[test]
        fn part_centers_farther_than_radius(seed in any::<u64>(), radius in 1usize..6) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let v: Vec<f32> = (0..24 * 24).map(|_| rng.random_range(0.0..1.0f32)).collect();
            let m = PartnessMap::new(Channel::Nose, 24, 24, v).unwrap();
            let dets = localize_parts(&m, &PartNmsParams { radius, ..Default::default() });
            for (i, a) in dets.iter().enumerate() {
                prop_assert!(a.peak >= 0.3 * m.peak());
                for b in &dets[i + 1..] {
                    let d = a.cx.abs_diff(b.cx).max(a.cy.abs_diff(b.cy));
                    prop_assert!(d > radius);
                }
            }
        }
    }
}
