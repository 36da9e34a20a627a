//! Integral sums and faceness checked against direct pixel summation.

use faceness::faceness::{part_faceness, SpatialConfig, Split, DEFAULT_EPSILON};
use faceness::pmap::{build_integral, Channel, PartnessMap};
use faceness::Window;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_map(rng: &mut ChaCha8Rng, channel: Channel, w: usize, h: usize) -> PartnessMap {
    let values = (0..w * h).map(|_| rng.random::<f32>()).collect();
    PartnessMap::new(channel, w, h, values).unwrap()
}

fn direct_sum(m: &PartnessMap, x0: usize, y0: usize, x1: usize, y1: usize) -> f64 {
    let mut s = 0.0;
    for y in y0..y1 {
        for x in x0..x1 {
            s += f64::from(m.get(x, y));
        }
    }
    s
}

fn cut(y0: usize, y1: usize, lambda: f64) -> usize {
    let v = y0 as f64 * lambda + y1 as f64 * (1.0 - lambda);
    ((v + 0.5).floor() as usize).clamp(y0, y1)
}

/// Ratio of in-region to out-of-region mass, summed pixel by pixel.
fn oracle_delta(m: &PartnessMap, win: (usize, usize, usize, usize), split: &Split) -> f64 {
    let (x0, y0, x1, y1) = win;
    let total = direct_sum(m, x0, y0, x1, y1);
    let inside = match *split {
        Split::TopOverBottom { lambda } => direct_sum(m, x0, y0, x1, cut(y0, y1, lambda)),
        Split::BottomOverTop { lambda } => direct_sum(m, x0, cut(y0, y1, lambda), x1, y1),
        Split::BandOverOutside {
            lambda_top,
            lambda_bot,
        } => direct_sum(m, x0, cut(y0, y1, lambda_top), x1, cut(y0, y1, lambda_bot)),
    };
    let outside = (total - inside).max(0.0);
    (inside + DEFAULT_EPSILON) / (outside + DEFAULT_EPSILON)
}

fn random_rect(rng: &mut ChaCha8Rng, w: usize, h: usize) -> (usize, usize, usize, usize) {
    let (a, b) = (rng.random_range(0..=w), rng.random_range(0..=w));
    let (c, d) = (rng.random_range(0..=h), rng.random_range(0..=h));
    (a.min(b), c.min(d), a.max(b), c.max(d))
}

#[test]
fn rect_sum_matches_direct_summation_on_large_maps() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let maps: Vec<_> = (0..4)
        .map(|_| random_map(&mut rng, Channel::Eye, 512, 512))
        .collect();
    let iis: Vec<_> = maps.iter().map(build_integral).collect();
    for i in 0..1000 {
        let k = i % maps.len();
        let (x0, y0, x1, y1) = random_rect(&mut rng, 512, 512);
        let fast = iis[k].rect_sum(x0, y0, x1, y1).unwrap();
        let slow = direct_sum(&maps[k], x0, y0, x1, y1);
        let tol = 1e-4 * slow.abs().max(1e-12);
        assert!(
            (fast - slow).abs() <= tol,
            "{fast} vs {slow} at {:?}",
            (x0, y0, x1, y1)
        );
    }
}

fn random_split(rng: &mut ChaCha8Rng, kind: usize) -> Split {
    match kind {
        0 => Split::TopOverBottom {
            lambda: rng.random(),
        },
        1 => {
            let a: f64 = rng.random();
            let b: f64 = rng.random();
            let (top, bot) = if a == b {
                (1.0, 0.0)
            } else {
                (a.max(b), a.min(b))
            };
            Split::BandOverOutside {
                lambda_top: top,
                lambda_bot: bot,
            }
        }
        _ => Split::BottomOverTop {
            lambda: rng.random(),
        },
    }
}

#[test]
fn part_faceness_matches_pixel_ratio_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for kind in 0..3 {
        for _ in 0..1000 {
            let (w, h) = (rng.random_range(4..48), rng.random_range(4..48));
            let mut m = random_map(&mut rng, Channel::Nose, w, h);
            if rng.random_bool(0.2) {
                // sparse maps exercise the epsilon floor
                let values = m
                    .values()
                    .iter()
                    .map(|&v| if v < 0.9 { 0.0 } else { v })
                    .collect();
                m = PartnessMap::new(Channel::Nose, w, h, values).unwrap();
            }
            let ii = build_integral(&m);
            let (x0, y0, x1, y1) = loop {
                let r = random_rect(&mut rng, w, h);
                if r.2 > r.0 && r.3 > r.1 {
                    break r;
                }
            };
            let split = random_split(&mut rng, kind);
            let cfg = SpatialConfig::new(Channel::Nose, split).unwrap();
            let win = Window::new(0, x0 as f64, y0 as f64, x1 as f64, y1 as f64).unwrap();
            let fast = part_faceness(&ii, &win, &cfg).unwrap();
            let slow = oracle_delta(&m, (x0, y0, x1, y1), &split);
            assert!(
                (fast - slow).abs() <= 1e-5 * slow,
                "{split:?} on {:?}: {fast} vs {slow}",
                (x0, y0, x1, y1)
            );
        }
    }
}

#[test]
fn faceness_is_invariant_to_scale_and_translation() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let base = random_map(&mut rng, Channel::Hair, 40, 40);
    let cfg = SpatialConfig::new(Channel::Hair, Split::TopOverBottom { lambda: 0.3 }).unwrap();
    let win = Window::new(0, 4.0, 6.0, 28.0, 30.0).unwrap();
    let d0 = part_faceness(&build_integral(&base), &win, &cfg).unwrap();

    let scaled = base.scaled(7.5);
    let d1 = part_faceness(&build_integral(&scaled), &win, &cfg).unwrap();
    assert!((d0 - d1).abs() <= 1e-5 * d0);

    // shift the map content by (5, 3) and the window with it
    let mut values = vec![0.0f32; 40 * 40];
    for y in 0..37 {
        for x in 0..35 {
            values[(y + 3) * 40 + x + 5] = base.get(x, y);
        }
    }
    let shifted = PartnessMap::new(Channel::Hair, 40, 40, values).unwrap();
    let d2 = part_faceness(&build_integral(&shifted), &win.translate(5.0, 3.0), &cfg).unwrap();
    assert!((d0 - d2).abs() <= 1e-9 * d0);
}
