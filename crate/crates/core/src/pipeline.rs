//! End-to-end segmentation and its iterative refinement.

use crate::bandtree::{build_band_tree_with, BandId};
use crate::contour::{thin_band, Contour};
use crate::grademap::{quantize, quantize_masked, GradeError, DEFAULT_GRADES};
use crate::image::{Connectivity, GrayImage, LabelMap, N4};
use crate::lmw::{find_lmw_bands, LmwOptions};
use crate::region::{Rect, Region};
use rayon::prelude::*;
use serde::Serialize;
use std::collections::{HashMap, HashSet};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SegmentError {
    #[error(transparent)]
    Grade(#[from] GradeError),
    #[error("invalid predicate {0:?}; expected max-area-fraction:<0..1> or min-contrast:<c>")]
    BadPredicate(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SegmentConfig {
    pub n_grades: u32,
    /// Reflect intensities so dark objects on a bright background are found.
    pub invert: bool,
    pub connectivity: Connectivity,
    pub lmw: LmwOptions,
    /// Objects with fewer pixels are dropped.
    pub min_object_area: usize,
    /// Drop objects that touch the image border (or, when refining inside an
    /// object, the object's edge). Iso-lines of a background gradient run
    /// from border to border and would otherwise come out as half-plane
    /// objects.
    pub drop_border_objects: bool,
}

impl Default for SegmentConfig {
    fn default() -> Self {
        SegmentConfig {
            n_grades: DEFAULT_GRADES,
            invert: false,
            connectivity: Connectivity::Four,
            lmw: LmwOptions::default(),
            min_object_area: 1,
            drop_border_objects: true,
        }
    }
}

/// Condition an object must meet to be left alone by iterative refinement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Predicate {
    /// Object area is at most this fraction of the image.
    MaxAreaFraction(f64),
    /// Mean intensity inside exceeds the mean of the surrounding pixel ring
    /// by at least this much (measured on the inverted image when inverting).
    MinContrast(f64),
}

impl std::str::FromStr for Predicate {
    type Err = SegmentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || SegmentError::BadPredicate(s.to_owned());
        let (name, value) = s.split_once([':', '=']).ok_or_else(bad)?;
        let value: f64 = value.trim().parse().map_err(|_| bad())?;
        match name.trim() {
            "max-area-fraction" if value > 0.0 && value <= 1.0 => Ok(Predicate::MaxAreaFraction(value)),
            "min-contrast" if value >= 0.0 => Ok(Predicate::MinContrast(value)),
            _ => Err(bad()),
        }
    }
}

impl std::fmt::Display for Predicate {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Predicate::MaxAreaFraction(t) => write!(f, "max-area-fraction:{t}"),
            Predicate::MinContrast(c) => write!(f, "min-contrast:{c}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterateConfig {
    pub predicate: Predicate,
    pub max_iter: u32,
}

impl Default for IterateConfig {
    fn default() -> Self {
        IterateConfig {
            predicate: Predicate::MaxAreaFraction(0.2),
            max_iter: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ObjectStats {
    /// Label of the object in the label map.
    pub label: u32,
    pub area: usize,
    pub mean_intensity: f64,
    pub band_id: BandId,
    pub grade: u32,
    /// Refinement round that produced the object; 0 for the first pass.
    pub iteration: u32,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct TreeSummary {
    pub n_grades: u32,
    pub bands: usize,
    pub virtual_bands: usize,
    pub lmw_bands: usize,
    /// Refinement rounds run by the iterative variant.
    pub iterations: u32,
}

#[derive(Debug, Clone)]
pub struct SegmentationResult {
    pub contours: Vec<Contour>,
    /// Each pixel carries the label of the innermost object containing it.
    pub labels: LabelMap,
    pub objects: Vec<ObjectStats>,
    /// Pixel set of each object, parallel to `objects`.
    pub regions: Vec<Region>,
    pub tree_summary: TreeSummary,
}

#[derive(Debug, Clone)]
struct Object {
    region: Region,
    contours: Vec<Contour>,
    band_id: BandId,
    grade: u32,
    iteration: u32,
}

/// Segments `image` with the LMW rule.
pub fn segment(image: &GrayImage, config: &SegmentConfig) -> Result<SegmentationResult, SegmentError> {
    let (objects, summary) = find_objects(image, None, config, 0)?;
    Ok(assemble(image, objects, summary))
}

/// Segments `image`, then re-segments every object failing the predicate
/// inside its own mask (with the grade range recomputed there) and replaces
/// it by the objects found, until all pass or `max_iter` rounds have run.
pub fn segment_iterative(
    image: &GrayImage,
    config: &SegmentConfig,
    iterate: &IterateConfig,
) -> Result<SegmentationResult, SegmentError> {
    let (mut objects, mut summary) = find_objects(image, None, config, 0)?;
    // objects that failed but cannot be split any further
    let mut settled = vec![false; objects.len()];
    for round in 1..=iterate.max_iter {
        let failing: Vec<bool> = objects
            .iter()
            .map(|o| !passes(image, o, &iterate.predicate, config.invert))
            .collect();
        if !failing.iter().any(|&f| f) {
            break;
        }
        summary.iterations = round;
        let mut next = Vec::with_capacity(objects.len());
        let mut next_settled = Vec::with_capacity(objects.len());
        for (i, object) in objects.into_iter().enumerate() {
            if !failing[i] || settled[i] {
                next_settled.push(settled[i]);
                next.push(object);
                continue;
            }
            let subs = refine(image, &object, config, round)?;
            let unchanged = subs.is_empty() || (subs.len() == 1 && same_pixels(&subs[0].region, &object.region));
            if unchanged {
                next_settled.push(true);
                next.push(object);
            } else {
                next_settled.extend(std::iter::repeat_n(false, subs.len()));
                next.extend(subs);
            }
        }
        // a region nested in several refined parents is found once per
        // parent; keep its earliest finding
        let mut first: HashMap<Vec<u32>, usize> = HashMap::new();
        for (i, o) in next.iter().enumerate() {
            let slot = first.entry(pixel_key(&o.region)).or_insert(i);
            if o.iteration < next[*slot].iteration {
                *slot = i;
            }
        }
        let chosen: HashSet<usize> = first.into_values().collect();
        let keep: Vec<bool> = (0..next.len()).map(|i| chosen.contains(&i)).collect();
        objects = next
            .into_iter()
            .zip(&keep)
            .filter(|(_, &k)| k)
            .map(|(o, _)| o)
            .collect();
        settled = next_settled
            .into_iter()
            .zip(&keep)
            .filter(|(_, &k)| k)
            .map(|(s, _)| s)
            .collect();
    }
    Ok(assemble(image, objects, summary))
}

fn passes(image: &GrayImage, object: &Object, predicate: &Predicate, invert: bool) -> bool {
    match *predicate {
        Predicate::MaxAreaFraction(theta) => object.region.count() as f64 <= theta * image.len() as f64,
        Predicate::MinContrast(c) => {
            let ring = object.region.outer_ring();
            if ring.is_empty() {
                return true;
            }
            let diff = mean_over(image, &object.region) - mean_over(image, &ring);
            (if invert { -diff } else { diff }) >= c
        }
    }
}

fn mean_over(image: &GrayImage, region: &Region) -> f64 {
    let (sum, n) = region
        .pixels()
        .fold((0u64, 0u64), |(s, n), (x, y)| (s + u64::from(image.get(x, y)), n + 1));
    if n == 0 {
        0.0
    } else {
        sum as f64 / n as f64
    }
}

fn pixel_key(region: &Region) -> Vec<u32> {
    region
        .pixels()
        .map(|(x, y)| (y * region.image_width + x) as u32)
        .collect()
}

fn same_pixels(a: &Region, b: &Region) -> bool {
    a.count() == b.count() && a.is_subset_of(b)
}

/// Runs the pipeline on the bounding box of `object` (plus a one-pixel
/// margin) restricted to the object's pixels.
fn refine(image: &GrayImage, object: &Object, config: &SegmentConfig, round: u32) -> Result<Vec<Object>, SegmentError> {
    let b = object.region.bounds;
    let crop = Rect {
        x0: b.x0.saturating_sub(1),
        y0: b.y0.saturating_sub(1),
        x1: (b.x1 + 1).min(image.width()),
        y1: (b.y1 + 1).min(image.height()),
    };
    let (cw, ch) = (crop.width(), crop.height());
    let mut pixels = Vec::with_capacity(cw * ch);
    let mut mask = Vec::with_capacity(cw * ch);
    for y in crop.y0..crop.y1 {
        for x in crop.x0..crop.x1 {
            pixels.push(image.get(x, y));
            mask.push(object.region.contains(x, y));
        }
    }
    let sub = GrayImage::new(cw, ch, image.maxval(), pixels).expect("crop of a valid image");
    let (found, _) = find_objects(&sub, Some(&mask), config, round)?;
    let (w, h) = (image.width(), image.height());
    Ok(found
        .into_iter()
        .map(|o| Object {
            region: o.region.translated(crop.x0, crop.y0, w, h),
            contours: o
                .contours
                .into_iter()
                .map(|c| Contour {
                    points: c
                        .points
                        .iter()
                        .map(|&(x, y)| (x + crop.x0 as u32, y + crop.y0 as u32))
                        .collect(),
                    ..c
                })
                .collect(),
            ..o
        })
        .collect())
}

fn find_objects(
    image: &GrayImage,
    mask: Option<&[bool]>,
    config: &SegmentConfig,
    iteration: u32,
) -> Result<(Vec<Object>, TreeSummary), SegmentError> {
    let grade_map = match mask {
        None => quantize(image, config.n_grades, config.invert)?,
        Some(m) => quantize_masked(image, m, config.n_grades, config.invert)?,
    };
    let mut summary = TreeSummary {
        n_grades: config.n_grades,
        ..TreeSummary::default()
    };
    if grade_map.is_degenerate() {
        return Ok((Vec::new(), summary));
    }
    let tree = build_band_tree_with(&grade_map, config.connectivity);
    let mut lmw = find_lmw_bands(&tree, config.lmw);
    if mask.is_some() {
        // grade 1 inside a mask is the local background
        lmw.retain(|&id| tree.band(id).grade() > 1);
    }
    summary.bands = tree.len();
    summary.virtual_bands = tree.bands().iter().filter(|b| b.is_virtual()).count();
    summary.lmw_bands = lmw.len();

    let thinned: Vec<_> = lmw.par_iter().map(|&id| thin_band(&tree, id)).collect();
    let mut seen: HashSet<Vec<u32>> = HashSet::new();
    let mut objects = Vec::new();
    for t in thinned {
        if config.drop_border_objects && touches_edge(&t.object, mask) {
            continue;
        }
        let area = t.object.count();
        if area == 0 || area < config.min_object_area {
            continue;
        }
        // a chain of virtual bands yields the same object once per grade
        if !seen.insert(pixel_key(&t.object)) {
            continue;
        }
        objects.push(Object {
            contours: t.contours(),
            region: t.object,
            band_id: t.band_id,
            grade: t.grade,
            iteration,
        });
    }
    Ok((objects, summary))
}

/// True if the object reaches the image border or, under a mask, a pixel
/// outside the mask. Iso-lines cut by either edge bound a half-open region.
fn touches_edge(object: &Region, mask: Option<&[bool]>) -> bool {
    let Some(mask) = mask else {
        return object.touches_image_border();
    };
    let (w, h) = (object.image_width, object.image_height);
    object.pixels().any(|(x, y)| {
        N4.iter().any(|&(dx, dy)| {
            let (nx, ny) = (x as isize + dx, y as isize + dy);
            nx < 0 || ny < 0 || nx as usize >= w || ny as usize >= h || !mask[ny as usize * w + nx as usize]
        })
    })
}

fn assemble(image: &GrayImage, mut objects: Vec<Object>, summary: TreeSummary) -> SegmentationResult {
    let (w, h) = (image.width(), image.height());
    let first_pixel = |o: &Object| {
        o.region
            .pixels()
            .next()
            .map(|(x, y)| (y, x))
            .unwrap_or((usize::MAX, usize::MAX))
    };
    objects.sort_by_key(|o| (first_pixel(o), o.iteration, o.band_id));

    let mut paint: Vec<usize> = (0..objects.len()).collect();
    paint.sort_by_key(|&i| (std::cmp::Reverse(objects[i].region.count()), i));
    let mut labels = LabelMap::zeros(w, h);
    for i in paint {
        let label = i as u32 + 1;
        let buf = labels.labels_mut();
        for (x, y) in objects[i].region.pixels() {
            buf[y * w + x] = label;
        }
    }

    let stats = objects
        .iter()
        .enumerate()
        .map(|(i, o)| ObjectStats {
            label: i as u32 + 1,
            area: o.region.count(),
            mean_intensity: mean_over(image, &o.region),
            band_id: o.band_id,
            grade: o.grade,
            iteration: o.iteration,
        })
        .collect();
    let contours = objects.iter().flat_map(|o| o.contours.iter().cloned()).collect();
    let regions = objects.into_iter().map(|o| o.region).collect();
    SegmentationResult {
        contours,
        labels,
        objects: stats,
        regions,
        tree_summary: summary,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phantom::{make_phantom, PhantomKind, PhantomSpec};

    #[test]
    fn constant_image_has_no_contours() {
        let img = GrayImage::filled(16, 16, 255, 77).unwrap();
        let r = segment(&img, &SegmentConfig::default()).unwrap();
        assert!(r.contours.is_empty());
        assert_eq!(r.labels.max_label(), 0);
    }

    #[test]
    fn single_grade_has_no_contours() {
        let (img, _) = make_phantom(&PhantomSpec::new(PhantomKind::StepDisk, 80, 80, 0)).unwrap();
        let cfg = SegmentConfig {
            n_grades: 1,
            ..SegmentConfig::default()
        };
        assert!(segment(&img, &cfg).unwrap().contours.is_empty());
    }

    #[test]
    fn step_disk_is_one_object() {
        let (img, truth) = make_phantom(&PhantomSpec::new(PhantomKind::StepDisk, 80, 80, 0)).unwrap();
        let r = segment(&img, &SegmentConfig::default()).unwrap();
        assert_eq!(r.objects.len(), 1);
        assert_eq!(r.contours.len(), 1);
        let inter = r
            .labels
            .labels()
            .iter()
            .zip(truth.labels())
            .filter(|(a, b)| **a > 0 && **b > 0)
            .count();
        assert!(inter as f64 >= 0.95 * truth.labels().iter().filter(|&&l| l > 0).count() as f64);
    }

    #[test]
    fn nested_objects_label_innermost() {
        // bright square inside a mid square on a dark background
        let (w, h): (usize, usize) = (30, 30);
        let px = (0..w * h)
            .map(|i| {
                let (x, y) = (i % w, i / w);
                let d = x.abs_diff(15usize).max(y.abs_diff(15usize));
                if d <= 4 {
                    250
                } else if d <= 10 {
                    120
                } else {
                    0
                }
            })
            .collect();
        let img = GrayImage::new(w, h, 255, px).unwrap();
        let r = segment(&img, &SegmentConfig::default()).unwrap();
        assert_eq!(r.objects.len(), 2);
        let outer = r.objects.iter().max_by_key(|o| o.area).unwrap().label;
        let inner = r.objects.iter().min_by_key(|o| o.area).unwrap().label;
        assert_eq!(r.labels.get(15, 15), inner);
        assert_eq!(r.labels.get(15, 7), outer);
        assert_eq!(r.labels.get(1, 1), 0);
    }

    #[test]
    fn zero_iterations_match_plain_segment() {
        let (img, _) = make_phantom(&PhantomSpec::new(PhantomKind::GrainsRamp, 160, 160, 4)).unwrap();
        let cfg = SegmentConfig::default();
        let plain = segment(&img, &cfg).unwrap();
        let it = IterateConfig {
            max_iter: 0,
            ..IterateConfig::default()
        };
        let iter = segment_iterative(&img, &cfg, &it).unwrap();
        assert_eq!(plain.contours, iter.contours);
        assert_eq!(plain.labels, iter.labels);
        // nothing fails a lax predicate either
        let lax = IterateConfig {
            predicate: Predicate::MaxAreaFraction(1.0),
            max_iter: 5,
        };
        let iter = segment_iterative(&img, &cfg, &lax).unwrap();
        assert_eq!(plain.labels, iter.labels);
        assert_eq!(iter.tree_summary.iterations, 0);
    }

    #[test]
    fn predicate_parsing() {
        assert_eq!("max-area-fraction:0.2".parse(), Ok(Predicate::MaxAreaFraction(0.2)));
        assert_eq!("min-contrast=12".parse(), Ok(Predicate::MinContrast(12.0)));
        assert!("max-area-fraction:0".parse::<Predicate>().is_err());
        assert!("min-contrast:-1".parse::<Predicate>().is_err());
        assert!("roundness:3".parse::<Predicate>().is_err());
        assert_eq!(Predicate::MaxAreaFraction(0.25).to_string(), "max-area-fraction:0.25");
    }
}
