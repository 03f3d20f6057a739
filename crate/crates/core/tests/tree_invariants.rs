//! Band tree invariants checked against brute-force flood fills.

use lmw_core::{build_band_tree, quantize, BandTree, GrayImage, Region};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::VecDeque;

/// Noise, smooth blobs, or blobs plus noise.
fn random_image(rng: &mut ChaCha8Rng, w: usize, h: usize) -> GrayImage {
    let style = rng.gen_range(0..3);
    let blobs: Vec<(f64, f64, f64, f64)> = (0..rng.gen_range(1..8))
        .map(|_| {
            (
                rng.gen_range(0.0..w as f64),
                rng.gen_range(0.0..h as f64),
                rng.gen_range(4.0..30.0),
                rng.gen_range(-120.0..200.0),
            )
        })
        .collect();
    let px = (0..w * h)
        .map(|i| {
            let (x, y) = ((i % w) as f64, (i / w) as f64);
            let smooth: f64 = 40.0
                + blobs
                    .iter()
                    .map(|&(cx, cy, r, a)| a * (-((x - cx).powi(2) + (y - cy).powi(2)) / (r * r)).exp())
                    .sum::<f64>();
            let v = match style {
                0 => rng.gen_range(0.0..256.0),
                1 => smooth,
                _ => smooth + rng.gen_range(-25.0..25.0),
            };
            v.clamp(0.0, 255.0) as u16
        })
        .collect();
    GrayImage::new(w, h, 255, px).unwrap()
}

/// 4-connected component of `{grade >= g}` containing `seed`.
fn flood_component(grades: &[u32], w: usize, h: usize, seed: usize, g: u32) -> Vec<bool> {
    let mut out = vec![false; w * h];
    let mut q = VecDeque::from([seed]);
    out[seed] = true;
    while let Some(p) = q.pop_front() {
        let (x, y) = (p % w, p / w);
        let mut visit = |nx: usize, ny: usize| {
            let n = ny * w + nx;
            if !out[n] && grades[n] >= g {
                out[n] = true;
                q.push_back(n);
            }
        };
        if x > 0 {
            visit(x - 1, y);
        }
        if x + 1 < w {
            visit(x + 1, y);
        }
        if y > 0 {
            visit(x, y - 1);
        }
        if y + 1 < h {
            visit(x, y + 1);
        }
    }
    out
}

/// Adds complement pixels that cannot reach the image border (8-connected).
fn flood_fill_holes(mask: &[bool], w: usize, h: usize) -> Vec<bool> {
    let mut outside = vec![false; w * h];
    let mut q = VecDeque::new();
    for p in 0..w * h {
        let (x, y) = (p % w, p / w);
        if !mask[p] && (x == 0 || y == 0 || x + 1 == w || y + 1 == h) {
            outside[p] = true;
            q.push_back(p);
        }
    }
    while let Some(p) = q.pop_front() {
        let (x, y) = ((p % w) as isize, (p / w) as isize);
        for dy in -1..=1 {
            for dx in -1..=1 {
                let (nx, ny) = (x + dx, y + dy);
                if nx < 0 || ny < 0 || nx as usize >= w || ny as usize >= h {
                    continue;
                }
                let n = ny as usize * w + nx as usize;
                if !mask[n] && !outside[n] {
                    outside[n] = true;
                    q.push_back(n);
                }
            }
        }
    }
    outside.iter().map(|&o| !o).collect()
}

fn check_tree(tree: &BandTree, grades: &[u32], w: usize, h: usize, rng: &mut ChaCha8Rng) {
    let bands = tree.bands();
    // partition
    let total: u64 = bands.iter().filter(|b| !b.is_virtual()).map(|b| b.n_b()).sum();
    assert_eq!(total, (w * h) as u64);
    let mut owned = vec![0u32; w * h];
    for b in bands {
        for (x, y) in b.pixels() {
            owned[y * w + x] += 1;
            assert_eq!(grades[y * w + x], b.grade());
        }
    }
    assert!(owned.iter().all(|&c| c == 1));

    // single root, tree shape, unit grade steps
    let roots: Vec<_> = bands.iter().filter(|b| b.father().is_none()).collect();
    assert_eq!(roots.len(), 1);
    let edges: usize = bands.iter().map(|b| b.sons().len()).sum();
    assert_eq!(bands.len(), edges + 1);
    let mut reached = vec![false; bands.len()];
    let mut stack = vec![roots[0].id()];
    while let Some(b) = stack.pop() {
        assert!(!reached[b], "band {b} reached twice");
        reached[b] = true;
        for &s in tree.band(b).sons() {
            assert_eq!(tree.band(s).father(), Some(b));
            assert_eq!(tree.band(s).grade(), tree.band(b).grade() + 1);
            stack.push(s);
        }
    }
    assert!(reached.iter().all(|&r| r));

    // widths
    for b in bands {
        if b.is_virtual() {
            assert_eq!(b.n_b(), 0);
            assert_eq!(*b.width().numer(), 0);
        } else {
            assert!(b.n_e() >= 1 && b.n_e() <= 2 * b.n_b());
            assert_eq!(
                b.width() * num_rational::Ratio::from_integer(b.n_e()),
                num_rational::Ratio::from_integer(2 * b.n_b())
            );
        }
    }

    // components and enclosure against flood fills, on a sample of bands
    let sample: Vec<usize> = if bands.len() <= 40 {
        (0..bands.len()).collect()
    } else {
        (0..40).map(|_| rng.gen_range(0..bands.len())).collect()
    };
    for id in sample {
        let real = tree.real_descendant(id);
        let seed = tree.component(real).pixels().next().map(|(x, y)| y * w + x).unwrap();
        let comp = flood_component(grades, w, h, seed, tree.band(real).grade());
        assert_eq!(tree.component(real).to_mask(), comp, "component of band {real}");
        let filled = flood_fill_holes(&comp, w, h);
        assert_eq!(tree.filled_region(real).to_mask(), filled);
        if let Some(f) = tree.band(id).father() {
            let fr = tree.real_descendant(f);
            let father_seed = tree.component(fr).pixels().next().map(|(x, y)| y * w + x).unwrap();
            let father_filled =
                flood_fill_holes(&flood_component(grades, w, h, father_seed, tree.band(f).grade()), w, h);
            assert!(
                filled.iter().zip(&father_filled).all(|(&s, &f)| !s || f),
                "band {id} escapes its father"
            );
        }
    }
}

#[test]
fn random_images_satisfy_tree_invariants() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    for _ in 0..12 {
        let (w, h) = (rng.gen_range(8..64), rng.gen_range(8..64));
        let img = random_image(&mut rng, w, h);
        let n = rng.gen_range(2..20);
        let gm = quantize(&img, n, rng.gen_bool(0.5)).unwrap();
        if gm.is_degenerate() {
            continue;
        }
        let tree = build_band_tree(&gm);
        check_tree(&tree, gm.grades(), w, h, &mut rng);
    }
}

#[test]
fn nested_squares_form_a_chain() {
    let (w, h) = (15usize, 15usize);
    let px = (0..w * h)
        .map(|i| match (i % w).abs_diff(7).max((i / w).abs_diff(7)) {
            0..=2 => 200,
            3..=5 => 100,
            _ => 0,
        })
        .collect();
    let gm = quantize(&GrayImage::new(w, h, 255, px).unwrap(), 3, false).unwrap();
    let tree = build_band_tree(&gm);
    let shape: Vec<(u32, Option<usize>)> = tree.bands().iter().map(|b| (b.grade(), b.father())).collect();
    assert_eq!(shape, vec![(1, None), (2, Some(0)), (3, Some(1))]);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    check_tree(&tree, gm.grades(), w, h, &mut rng);
}

#[test]
fn step_disk_splices_thirteen_virtual_bands() {
    let spec = lmw_core::PhantomSpec::new(lmw_core::PhantomKind::StepDisk, 96, 96, 0);
    let (img, _) = lmw_core::make_phantom(&spec).unwrap();
    let gm = quantize(&img, 15, false).unwrap();
    let tree = build_band_tree(&gm);
    let virtuals: Vec<u32> = tree
        .bands()
        .iter()
        .filter(|b| b.is_virtual())
        .map(|b| b.grade())
        .collect();
    assert_eq!(virtuals, (2..=14).collect::<Vec<u32>>());
    assert!(tree
        .bands()
        .iter()
        .filter(|b| b.is_virtual())
        .all(|b| *b.width().numer() == 0));
}

#[test]
fn region_helpers_agree_with_flood_fill() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for _ in 0..20 {
        let (w, h) = (rng.gen_range(3..20), rng.gen_range(3..20));
        let mask: Vec<bool> = (0..w * h).map(|_| rng.gen_bool(0.5)).collect();
        let region = Region::from_mask(w, h, &mask);
        assert_eq!(
            region.fill_holes(lmw_core::Connectivity::Eight).to_mask(),
            flood_fill_holes(&mask, w, h)
        );
    }
}
