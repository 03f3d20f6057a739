//! Segmentation of generated phantoms against their ground truth.

use lmw_core::{
    evaluate, fill_contour, make_phantom, otsu_threshold, precise_recall, quantize, segment, segment_iterative,
    IterateConfig, PhantomKind, PhantomSpec, SegmentConfig,
};

fn spec(kind: PhantomKind, size: usize, seed: u64) -> PhantomSpec {
    PhantomSpec::new(kind, size, size, seed)
}

/// Radius of steepest descent of a radial profile, by sampling |dI/dr| on a fine grid.
fn steepest_radius(profile: impl Fn(f64) -> f64, r_max: f64) -> f64 {
    let h = 1e-3;
    let mut best = (0.0, f64::MIN);
    let mut r = h;
    while r < r_max {
        let slope = (profile(r + h) - profile(r - h)).abs() / (2.0 * h);
        if slope > best.1 {
            best = (r, slope);
        }
        r += 0.01;
    }
    best.0
}

#[test]
fn grains_profile_defeats_every_global_threshold() {
    let (img, truth) = make_phantom(&spec(PhantomKind::GrainsRamp, 256, 11)).unwrap();
    assert_eq!(truth.object_ids(), (1..=9).collect::<Vec<u32>>());
    for t in 0..=img.maxval() {
        let wrong = img
            .pixels()
            .iter()
            .zip(truth.labels())
            .filter(|(&g, &l)| (g > t) != (l > 0))
            .count();
        assert!(wrong >= 1, "threshold {t} separates the grains");
    }
    // grains stay off the border and apart
    let w = img.width();
    for (i, &l) in truth.labels().iter().enumerate() {
        let (x, y) = (i % w, i / w);
        if l > 0 {
            assert!(x > 0 && y > 0 && x + 1 < w && y + 1 < img.height());
        }
    }
}

#[test]
fn grains_are_segmented_despite_the_ramp() {
    let (img, truth) = make_phantom(&spec(PhantomKind::GrainsRamp, 256, 11)).unwrap();
    let r = segment(&img, &SegmentConfig::default()).unwrap();
    let m = evaluate(&r.labels, &truth).unwrap();
    assert_eq!((m.matched(), m.missed, m.spurious), (9, 0, 0));
    assert!(m.objects.iter().all(|o| o.iou >= 0.9), "{:?}", m.objects);
    let (_, otsu) = otsu_threshold(&img).unwrap();
    assert!(otsu
        .labels()
        .iter()
        .zip(truth.labels())
        .any(|(&a, &b)| (a > 0) != (b > 0)));
}

#[test]
fn step_disk_contour_hugs_the_circle() {
    let s = spec(PhantomKind::StepDisk, 100, 0);
    let (img, _) = make_phantom(&s).unwrap();
    let r = segment(&img, &SegmentConfig::default()).unwrap();
    assert_eq!(r.objects.len(), 1);
    let (cx, cy) = (50.37, 49.79);
    for &(x, y) in &r.contours[0].points {
        assert!(((x as f64 - cx).hypot(y as f64 - cy) - 30.0).abs() <= 1.0);
    }
    // the filled contour is the labeled object
    let filled = fill_contour(&r.contours[0], 100, 100).unwrap();
    assert_eq!(filled.labels(), r.labels.labels());
}

#[test]
fn ramp_disk_contour_sits_at_steepest_descent() {
    let s = spec(PhantomKind::RampDisk, 128, 0);
    let (img, _) = make_phantom(&s).unwrap();
    let (bg, fg) = (0.08 * 65535.0, 0.92 * 65535.0);
    let oracle = steepest_radius(|r| bg + (fg - bg) / (1.0 + ((r - 40.0) / 5.0).exp()), 64.0);
    assert!((oracle - 40.0).abs() < 0.05);
    let r = segment(&img, &SegmentConfig::default()).unwrap();
    assert_eq!(r.objects.len(), 1);
    let (cx, cy) = (64.37, 63.79);
    let c = &r.contours[0];
    let mean = c
        .points
        .iter()
        .map(|&(x, y)| (x as f64 - cx).hypot(y as f64 - cy))
        .sum::<f64>()
        / c.points.len() as f64;
    assert!((mean - oracle).abs() <= 2.0, "mean radius {mean}, oracle {oracle}");
}

#[test]
fn cracks_need_iteration() {
    let (img, truth) = make_phantom(&spec(PhantomKind::CracksShadow, 256, 1)).unwrap();
    // ridge and shadow plateau share the top grade of the inverted image
    let gm = quantize(&img, 15, true).unwrap();
    let ridge_grades: Vec<u32> = truth
        .labels()
        .iter()
        .zip(gm.grades())
        .filter(|(&l, _)| l > 0)
        .map(|(_, &g)| g)
        .collect();
    assert!(ridge_grades.iter().all(|&g| g == 15));

    let cfg = SegmentConfig {
        invert: true,
        ..SegmentConfig::default()
    };
    let plain = segment(&img, &cfg).unwrap();
    assert!(plain.objects.iter().any(|o| o.area as f64 > 0.2 * img.len() as f64));
    let before = precise_recall(&plain.labels, &truth, 0.5).unwrap();

    let iterate = IterateConfig::default();
    let refined = segment_iterative(&img, &cfg, &iterate).unwrap();
    let after = precise_recall(&refined.labels, &truth, 0.5).unwrap();
    assert!(after >= 0.8 && after > before, "recall {before} -> {after}");
    let all_pass = refined.objects.iter().all(|o| o.area as f64 <= 0.2 * img.len() as f64);
    assert!(all_pass || refined.tree_summary.iterations == iterate.max_iter);
}

#[test]
fn affine_rescaling_keeps_contours() {
    let (img, _) = make_phantom(&spec(PhantomKind::GrainsRamp, 128, 3)).unwrap();
    let base = segment(&img, &SegmentConfig::default()).unwrap();
    for (a, b) in [(1u16, 7u16), (2, 0), (3, 11), (250, 9)] {
        let scaled = img.map(img.maxval() * a + b, |g| a * g + b).unwrap();
        let r = segment(&scaled, &SegmentConfig::default()).unwrap();
        assert_eq!(r.contours, base.contours, "a={a} b={b}");
    }
}
