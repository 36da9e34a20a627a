//! Subcommand implementations. Every output file is written atomically.

use std::io::Write as _;
use std::path::{Path, PathBuf};

use faceness::evaluation::{evaluate, format_targets, prepare_refinement_targets};
use faceness::fit::{fit_all, FitEntry, FitReport, TrainingSample};
use faceness::geometry::{ellipse_to_box, read_ellipses, read_windows};
use faceness::pmap::{encode_pmap, read_pmap};
use faceness::ranking::{format_parts, format_ranked, read_ranked, PartNmsParams};
use faceness::synth::{generate, sample_training_set, scene_file_contents, SceneFiles, SceneSpec};
use faceness::{
    fuse_face_map, localize_parts, nms_boxes, rerank, score_windows, CombineMode, Error,
    FusionRule, Geometry, ScoringConfig,
};

use crate::settings::RunSettings;

#[derive(Debug)]
pub enum CliError {
    Core(Error),
    Usage(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if e.is_io() => 1,
            _ => 2,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Core(e) => e.kind(),
            CliError::Usage(_) => "UsageError",
        }
    }

    pub fn message(&self) -> String {
        match self {
            CliError::Core(e) => e.to_string(),
            CliError::Usage(m) => m.clone(),
        }
    }
}

pub type CliResult<T = ()> = Result<T, CliError>;

fn io_err(path: &Path, source: std::io::Error) -> CliError {
    CliError::Core(Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Writes through a temporary file in the target directory, then renames.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    std::fs::create_dir_all(&dir).map_err(|e| io_err(&dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(&dir).map_err(|e| io_err(&dir, e))?;
    tmp.write_all(bytes).map_err(|e| io_err(path, e))?;
    tmp.as_file().sync_all().map_err(|e| io_err(path, e))?;
    tmp.persist(path).map_err(|e| io_err(path, e.error))?;
    Ok(())
}

pub fn cmd_gen(spec_path: Option<&Path>, out: &Path, seed: Option<u64>) -> CliResult<String> {
    let mut spec = match spec_path {
        Some(p) => SceneSpec::read(p)?,
        None => SceneSpec::default(),
    };
    if let Some(s) = seed {
        spec.seed = s;
    }
    let scene = generate(&spec)?;
    for (name, bytes) in scene_file_contents(&scene)? {
        write_atomic(&out.join(name), &bytes)?;
    }
    Ok(format!(
        "generated {} faces, {} proposals, {}x{} maps in {}",
        scene.plant.faces.len(),
        scene.proposals.len(),
        spec.width,
        spec.height,
        out.display()
    ))
}

fn face_size_range(scene: &SceneFiles) -> [usize; 2] {
    if let Some(p) = &scene.plant {
        return p.face_size;
    }
    let sides = scene
        .gt
        .iter()
        .flat_map(|g| [g.width(), g.height()])
        .map(|s| s.round().max(1.0) as usize);
    let lo = sides.clone().min().unwrap_or(1);
    let hi = sides.max().unwrap_or(1);
    [lo, hi]
}

pub fn cmd_fit(
    scenes: &[PathBuf],
    out: &Path,
    settings: &RunSettings,
    grid_dump: bool,
) -> CliResult<String> {
    if scenes.is_empty() {
        return Err(CliError::Usage(
            "fit needs at least one scene directory".into(),
        ));
    }
    let loaded = scenes
        .iter()
        .map(SceneFiles::load)
        .collect::<Result<Vec<_>, _>>()?;
    let stacks = loaded
        .iter()
        .map(|s| s.integrals())
        .collect::<Result<Vec<_>, _>>()?;
    let t = settings.training;
    let mut samples = Vec::new();
    for (i, (scene, stack)) in loaded.iter().zip(&stacks).enumerate() {
        let canvas = scene.canvas().ok_or_else(|| {
            CliError::Usage(format!("{} holds no partness maps", scenes[i].display()))
        })?;
        let set = sample_training_set(
            &scene.gt,
            canvas,
            face_size_range(scene),
            t.positives,
            t.negatives,
            t.jitter_sigma,
            settings.seed.wrapping_add(i as u64),
        )?;
        samples.extend(set.into_iter().map(|(window, label)| TrainingSample {
            window,
            label,
            maps: stack,
        }));
    }
    let channels: Vec<_> = settings
        .parts
        .iter()
        .map(|&c| (c, Geometry::default_for(c)))
        .collect();
    let fits = fit_all(&samples, &channels, &settings.search())?;

    let stem = out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "config".into());
    let dir = out.parent().unwrap_or(Path::new(""));
    let mut parts = Vec::with_capacity(fits.len());
    for f in &fits {
        let dump = if grid_dump {
            let name = format!("{stem}.{}.grid.csv", f.config.channel);
            write_atomic(&dir.join(&name), f.grid_csv().as_bytes())?;
            Some(name)
        } else {
            None
        };
        parts.push(FitEntry {
            config: f.config,
            alpha: f.alpha,
            log_posterior: f.log_posterior,
            grid_dump: dump,
        });
    }
    let report = FitReport {
        mode: settings.mode,
        parts,
    };
    let mut json = serde_json::to_vec_pretty(&report).map_err(Error::from)?;
    json.push(b'\n');
    write_atomic(out, &json)?;
    let summary: Vec<String> = fits
        .iter()
        .map(|f| {
            let (a, b) = f.config.split.params();
            match b {
                Some(b) => format!("{}=({a},{b})", f.config.channel),
                None => format!("{}={a}", f.config.channel),
            }
        })
        .collect();
    Ok(format!(
        "fitted {} parts on {} windows: {}",
        fits.len(),
        samples.len(),
        summary.join(" ")
    ))
}

pub fn cmd_rank(
    scene_dir: &Path,
    model: &Path,
    out: &Path,
    settings: &RunSettings,
    mode: Option<CombineMode>,
) -> CliResult<String> {
    let scene = SceneFiles::load(scene_dir)?;
    let cfg = ScoringConfig::read(model)?.restrict(&settings.parts);
    if cfg.parts.is_empty() {
        return Err(CliError::Usage(
            "no configured part is selected for scoring".into(),
        ));
    }
    let mode = mode.unwrap_or(cfg.mode);
    let stack = scene.integrals()?;
    let scores = score_windows(&stack, &scene.proposals, &cfg.parts, mode)?;
    let mut ranked = rerank(&scene.proposals, &scores)?;
    if let Some(t) = settings.nms {
        ranked = nms_boxes(&ranked, t);
    }
    write_atomic(out, format_ranked(&ranked).as_bytes())?;
    Ok(format!(
        "ranked {} of {} proposals with {} parts ({mode})",
        ranked.len(),
        scene.proposals.len(),
        cfg.parts.len()
    ))
}

pub fn cmd_parts(pmap: &Path, out: &Path, params: &PartNmsParams) -> CliResult<String> {
    let m = read_pmap(pmap)?;
    let dets = localize_parts(&m, params);
    write_atomic(out, format_parts(&dets).as_bytes())?;
    Ok(format!("{} {} detections", dets.len(), m.channel()))
}

pub enum GroundTruth<'a> {
    Boxes(&'a Path),
    Ellipses(&'a Path),
}

pub fn cmd_eval(
    ranked: &Path,
    gt: GroundTruth<'_>,
    out_dir: &Path,
    settings: &RunSettings,
) -> CliResult<String> {
    let list = read_ranked(ranked)?;
    let gt = match gt {
        GroundTruth::Boxes(p) => read_windows(p)?,
        GroundTruth::Ellipses(p) => read_ellipses(p)?
            .iter()
            .enumerate()
            .map(|(i, e)| ellipse_to_box(e, i))
            .collect(),
    };
    let report = evaluate(&list, &gt, &settings.n_values, settings.iou)?;
    let mut json = serde_json::to_vec_pretty(&report).map_err(Error::from)?;
    json.push(b'\n');
    write_atomic(&out_dir.join("report.json"), &json)?;
    write_atomic(&out_dir.join("dr_curve.csv"), report.dr_csv().as_bytes())?;
    write_atomic(&out_dir.join("pr_curve.csv"), report.pr_csv().as_bytes())?;
    let drs: Vec<String> = report
        .detection_rate
        .iter()
        .map(|p| format!("DR@{}={:.4}", p.n, p.dr))
        .collect();
    Ok(format!("AP={:.4} {}", report.ap, drs.join(" ")))
}

pub fn cmd_targets(proposals: &Path, gt: &Path, out: &Path) -> CliResult<String> {
    let proposals = read_windows(proposals)?;
    let gt = read_windows(gt)?;
    let targets = prepare_refinement_targets(&proposals, &gt);
    write_atomic(out, format_targets(&targets).as_bytes())?;
    let faces = targets.iter().filter(|t| t.face).count();
    Ok(format!(
        "{} targets: {faces} face, {} non-face",
        targets.len(),
        targets.len() - faces
    ))
}

pub fn cmd_fuse(inputs: &[PathBuf], out: &Path, rule: FusionRule) -> CliResult<String> {
    let maps = inputs
        .iter()
        .map(read_pmap)
        .collect::<Result<Vec<_>, _>>()?;
    let fused = fuse_face_map(&maps, rule)?;
    write_atomic(out, &encode_pmap(&fused))?;
    Ok(format!("fused {} maps into {}", maps.len(), out.display()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn atomic_write_replaces_content() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sub/out.txt");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(std::fs::read(&p).unwrap(), b"two");
        let leftovers = std::fs::read_dir(dir.path().join("sub")).unwrap().count();
        assert_eq!(leftovers, 1);
    }

    #[test]
    fn exit_codes_follow_error_class() {
        let io = CliError::Core(Error::Io {
            path: "x".into(),
            source: std::io::Error::new(std::io::ErrorKind::NotFound, "gone"),
        });
        assert_eq!(io.exit_code(), 1);
        assert_eq!(
            CliError::Core(Error::InvalidSpec("bad".into())).exit_code(),
            2
        );
        assert_eq!(CliError::Usage("no".into()).exit_code(), 2);
    }
}
