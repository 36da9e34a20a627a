//! Generated scenes: files, occlusion, and metrics on top of them.

use faceness::evaluation::{dr_curve, pr_curve, prepare_refinement_targets};
use faceness::faceness::{score_windows, CombineMode, IntegralStack};
use faceness::pmap::PartnessMap;
use faceness::ranking::RankedList;
use faceness::synth::{generate, scene_file_contents, write_scene_dir, SceneFiles, SceneSpec};
use faceness::{iou, rerank, Channel};

#[test]
fn scene_directory_round_trips() {
    let scene = generate(&SceneSpec::default().with_seed(4)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_scene_dir(&scene, dir.path()).unwrap();
    let back = SceneFiles::load(dir.path()).unwrap();
    assert_eq!(back.maps, scene.maps);
    assert_eq!(back.gt, scene.gt());
    assert_eq!(back.proposals, scene.proposals);
    assert_eq!(back.plant.as_ref(), Some(&scene.plant));

    let again = tempfile::tempdir().unwrap();
    write_scene_dir(
        &generate(&SceneSpec::default().with_seed(4)).unwrap(),
        again.path(),
    )
    .unwrap();
    for (name, _) in scene_file_contents(&scene).unwrap() {
        let a = std::fs::read(dir.path().join(&name)).unwrap();
        let b = std::fs::read(again.path().join(&name)).unwrap();
        assert_eq!(a, b, "{name} differs between runs");
    }
}

#[test]
fn every_face_has_a_matching_candidate() {
    for seed in 0..5 {
        let scene = generate(&SceneSpec::default().with_seed(seed)).unwrap();
        for g in scene.gt() {
            assert!(scene.proposals.iter().any(|p| iou(p, &g) >= 0.5));
        }
    }
}

#[test]
fn planted_centers_sit_inside_faces_in_layout_order() {
    let scene = generate(&SceneSpec::default().with_seed(8)).unwrap();
    for f in &scene.plant.faces {
        let ys: Vec<f64> = Channel::PARTS
            .iter()
            .map(|c| f.part_centers[c][1])
            .collect();
        assert!(ys.windows(2).all(|w| w[0] < w[1]), "{ys:?}");
        for c in f.part_centers.values() {
            assert!(f.bbox.x0 <= c[0] && c[0] <= f.bbox.x1);
            assert!(f.bbox.y0 <= c[1] && c[1] <= f.bbox.y1);
        }
    }
}

#[test]
fn excluded_parts_do_not_affect_scores() {
    let spec = SceneSpec {
        occlusion: vec![Channel::Mouth, Channel::Beard],
        ..SceneSpec::default().with_seed(12)
    };
    let scene = generate(&spec).unwrap();
    let configs: Vec<_> = scene
        .plant
        .layout
        .configs()
        .into_iter()
        .filter(|c| !spec.occlusion.contains(&c.channel))
        .collect();
    let base = score_windows(
        &scene.integrals(),
        &scene.proposals,
        &configs,
        CombineMode::ArithMean,
    )
    .unwrap();

    // replace the excluded channels with arbitrary content
    let swapped: Vec<PartnessMap> = scene
        .maps
        .iter()
        .map(|m| {
            if spec.occlusion.contains(&m.channel()) {
                let v = (0..m.values().len()).map(|i| (i % 13) as f32).collect();
                PartnessMap::new(m.channel(), m.width(), m.height(), v).unwrap()
            } else {
                m.clone()
            }
        })
        .collect();
    let stack = IntegralStack::from_maps(&swapped).unwrap();
    let other = score_windows(&stack, &scene.proposals, &configs, CombineMode::ArithMean).unwrap();
    assert_eq!(base, other);
    for s in &base {
        assert_eq!(s.per_part.len(), 3);
        let mean = s.per_part.values().sum::<f64>() / 3.0;
        assert!((s.combined - mean).abs() <= 1e-12 * mean);
    }
}

#[test]
fn metrics_on_generated_scenes() {
    let scene = generate(&SceneSpec::default().with_seed(21)).unwrap();
    let gt = scene.gt();

    let perfect: Vec<_> = gt.iter().map(|g| (*g, 1.0)).collect();
    assert_eq!(pr_curve(&perfect, &gt, 0.5).unwrap().ap, 1.0);

    let scores = score_windows(
        &scene.integrals(),
        &scene.proposals,
        &scene.plant.layout.configs(),
        CombineMode::ArithMean,
    )
    .unwrap();
    for list in [
        rerank(&scene.proposals, &scores).unwrap(),
        RankedList::by_proposal_score(&scene.proposals),
    ] {
        let curve = dr_curve(&list, &gt, 0.5).unwrap();
        assert!(curve.windows(2).all(|w| w[0] <= w[1]));
        assert_eq!(*curve.last().unwrap(), 1.0);
    }

    let targets = prepare_refinement_targets(&scene.proposals, &gt);
    for (t, p) in targets.iter().zip(&scene.proposals) {
        if let Some(b) = t.denormalize_on_grid(p) {
            let g = gt
                .iter()
                .find(|g| iou(p, g) > 0.5)
                .expect("face target has a matching box");
            assert_eq!((b.x0, b.y0, b.x1, b.y1), (g.x0, g.y0, g.x1, g.y1));
        } else {
            assert!(gt.iter().all(|g| iou(p, g) <= 0.5));
        }
    }
}
