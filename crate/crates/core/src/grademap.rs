//! Quantization of a grayscale image into `N` equal-width grades.
//!
//! Grade `n` covers the intensity interval `(g_min + (n-1)Δ, g_min + nΔ]`
//! with `Δ = (g_max - g_min) / N` kept as an exact fraction; `g_min` itself
//! is folded into grade 1.

use crate::image::GrayImage;
use num_rational::Ratio;
use thiserror::Error;

/// Default number of grades.
pub const DEFAULT_GRADES: u32 = 15;

/// Grade assigned to pixels excluded by a mask.
pub const EXCLUDED: u32 = 0;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GradeError {
    #[error("grade spacing is zero (constant intensity range)")]
    DegenerateRange,
    #[error("number of grades must be at least 1")]
    NoGrades,
    #[error("intensity {g} lies outside [{lo}, {hi}]")]
    OutOfRange { g: u64, lo: u64, hi: u64 },
    #[error("mask has {actual} entries for an image of {expected} pixels")]
    MaskMismatch { expected: usize, actual: usize },
}

/// Grade index of intensity `g`: `clamp(ceil((g - g_min) / delta), 1, n_grades)`.
pub fn grade_of(g: u64, g_min: u64, delta: Ratio<u64>, n_grades: u32) -> Result<u32, GradeError> {
    if n_grades == 0 {
        return Err(GradeError::NoGrades);
    }
    if *delta.numer() == 0 {
        return Err(GradeError::DegenerateRange);
    }
    // upper bound g_min + N*delta, compared without rounding
    let span = delta * Ratio::from_integer(u64::from(n_grades));
    if g < g_min || Ratio::from_integer(g - g_min) > span {
        return Err(GradeError::OutOfRange {
            g,
            lo: g_min,
            hi: g_min + span.to_integer(),
        });
    }
    let num = u128::from(g - g_min) * u128::from(*delta.denom());
    let den = u128::from(*delta.numer());
    let ceil = num.div_ceil(den);
    Ok(ceil.clamp(1, u128::from(n_grades)) as u32)
}

/// Per-pixel grade indices of an image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GradeMap {
    width: usize,
    height: usize,
    n_grades: u32,
    g_min: u16,
    g_max: u16,
    delta: Ratio<u64>,
    grades: Vec<u32>,
    degenerate: bool,
}

impl GradeMap {
    /// Wraps precomputed grades. Grades must lie in `0..=n_grades`, 0 meaning excluded.
    pub fn from_grades(width: usize, height: usize, n_grades: u32, grades: Vec<u32>) -> Self {
        assert_eq!(grades.len(), width * height, "grade buffer size");
        assert!(grades.iter().all(|&g| g <= n_grades), "grade above n_grades");
        let degenerate = grades.iter().all(|&g| g <= 1);
        Self {
            width,
            height,
            n_grades,
            g_min: 0,
            g_max: n_grades as u16,
            delta: Ratio::from_integer(1),
            grades,
            degenerate,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn n_grades(&self) -> u32 {
        self.n_grades
    }

    pub fn g_min(&self) -> u16 {
        self.g_min
    }

    pub fn g_max(&self) -> u16 {
        self.g_max
    }

    pub fn delta(&self) -> Ratio<u64> {
        self.delta
    }

    pub fn grades(&self) -> &[u32] {
        &self.grades
    }

    pub fn grade(&self, x: usize, y: usize) -> u32 {
        self.grades[y * self.width + x]
    }

    /// True when the (unmasked) intensity range is empty.
    pub fn is_degenerate(&self) -> bool {
        self.degenerate
    }
}

/// Quantizes `image` into `n_grades` grades. With `invert`, intensities are
/// reflected (`g -> g_min + g_max - g`) first so dark objects become bright.
pub fn quantize(image: &GrayImage, n_grades: u32, invert: bool) -> Result<GradeMap, GradeError> {
    quantize_inner(image, None, n_grades, invert)
}

/// Like [`quantize`], restricted to pixels where `mask` is set. `g_min` and
/// `g_max` are taken over the masked pixels only; other pixels get grade 0.
pub fn quantize_masked(image: &GrayImage, mask: &[bool], n_grades: u32, invert: bool) -> Result<GradeMap, GradeError> {
    if mask.len() != image.len() {
        return Err(GradeError::MaskMismatch {
            expected: image.len(),
            actual: mask.len(),
        });
    }
    quantize_inner(image, Some(mask), n_grades, invert)
}

fn quantize_inner(
    image: &GrayImage,
    mask: Option<&[bool]>,
    n_grades: u32,
    invert: bool,
) -> Result<GradeMap, GradeError> {
    if n_grades == 0 {
        return Err(GradeError::NoGrades);
    }
    let included = |i: usize| mask.is_none_or(|m| m[i]);
    let (lo, hi) = image
        .pixels()
        .iter()
        .enumerate()
        .filter(|&(i, _)| included(i))
        .fold((u16::MAX, 0u16), |(lo, hi), (_, &v)| (lo.min(v), hi.max(v)));
    let mut map = GradeMap {
        width: image.width(),
        height: image.height(),
        n_grades,
        g_min: lo.min(hi),
        g_max: hi,
        delta: Ratio::from_integer(0),
        grades: vec![EXCLUDED; image.len()],
        degenerate: true,
    };
    if lo >= hi {
        for (i, g) in map.grades.iter_mut().enumerate() {
            if included(i) {
                *g = 1;
            }
        }
        return Ok(map);
    }
    let (g_min, g_max) = (u64::from(lo), u64::from(hi));
    let range = g_max - g_min;
    let n = u64::from(n_grades);
    map.delta = Ratio::new(range, n);
    map.degenerate = false;
    // ceil((g - g_min) * N / range) in integers; identical to grade_of
    let lut: Vec<u32> = (0..=range)
        .map(|d| ((d * n).div_ceil(range)).clamp(1, n) as u32)
        .collect();
    for (i, (&v, g)) in image.pixels().iter().zip(map.grades.iter_mut()).enumerate() {
        if !included(i) {
            continue;
        }
        let v = u64::from(v);
        let v = if invert { g_min + g_max - v } else { v };
        *g = lut[(v - g_min) as usize];
    }
    Ok(map)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn r(n: u64) -> Ratio<u64> {
        Ratio::from_integer(n)
    }

    #[test]
    fn grade_of_examples() {
        assert_eq!(grade_of(0, 0, r(10), 15), Ok(1));
        assert_eq!(grade_of(150, 0, r(10), 15), Ok(15));
        assert_eq!(grade_of(75, 0, r(10), 15), Ok(8));
        assert_eq!(grade_of(70, 0, r(10), 15), Ok(7));
        assert_eq!(grade_of(71, 0, r(10), 15), Ok(8));
        assert_eq!(grade_of(5, 5, r(0), 15), Err(GradeError::DegenerateRange));
        assert!(matches!(
            grade_of(151, 0, r(10), 15),
            Err(GradeError::OutOfRange { .. })
        ));
    }

    #[test]
    fn fractional_delta_has_exact_cuts() {
        // range 10 over 3 grades: cuts at 10/3 and 20/3
        let d = Ratio::new(10, 3);
        let grades: Vec<u32> = (0..=10).map(|g| grade_of(g, 0, d, 3).unwrap()).collect();
        assert_eq!(grades, vec![1, 1, 1, 1, 2, 2, 2, 3, 3, 3, 3]);
    }

    #[test]
    fn quantize_examples() {
        let img = GrayImage::new(3, 1, 255, vec![0, 75, 150]).unwrap();
        let gm = quantize(&img, 15, false).unwrap();
        assert_eq!(gm.grades(), &[1, 8, 15]);
        assert!(!gm.is_degenerate());
        assert_eq!(gm.delta(), r(10));

        let flat = GrayImage::filled(4, 2, 255, 9).unwrap();
        let gm = quantize(&flat, 15, false).unwrap();
        assert!(gm.is_degenerate());
        assert!(gm.grades().iter().all(|&g| g == 1));
    }

    #[test]
    fn masked_range_is_local() {
        let img = GrayImage::new(4, 1, 255, vec![0, 100, 110, 250]).unwrap();
        let gm = quantize_masked(&img, &[false, true, true, false], 10, false).unwrap();
        assert_eq!(gm.grades(), &[0, 1, 10, 0]);
        assert_eq!((gm.g_min(), gm.g_max()), (100, 110));
    }

    #[test]
    fn ramp_grades_are_monotone() {
        let img = GrayImage::new(256, 2, 255, (0..512).map(|i| (i % 256) as u16).collect()).unwrap();
        let gm = quantize(&img, 15, false).unwrap();
        for row in gm.grades().chunks(256) {
            assert!(row.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    proptest! {
        #[test]
        fn quantize_matches_grade_of(px in proptest::collection::vec(0u16..=1000, 2..40), n in 1u32..40) {
            let img = GrayImage::new(px.len(), 1, 1000, px.clone()).unwrap();
            let gm = quantize(&img, n, false).unwrap();
            if gm.is_degenerate() { return Ok(()); }
            for (&v, &g) in px.iter().zip(gm.grades()) {
                prop_assert_eq!(g, grade_of(u64::from(v), u64::from(gm.g_min()), gm.delta(), n).unwrap());
            }
            let lo = px.iter().position(|&v| v == gm.g_min()).unwrap();
            let hi = px.iter().position(|&v| v == gm.g_max()).unwrap();
            prop_assert_eq!(gm.grades()[lo], 1);
            prop_assert_eq!(gm.grades()[hi], n);
        }

        #[test]
        fn double_inversion_is_identity(px in proptest::collection::vec(0u16..=255, 1..30), n in 1u32..20) {
            let img = GrayImage::new(px.len(), 1, 255, px).unwrap();
            let (lo, hi) = img.extrema();
            let inv = img.map(255, |v| lo + hi - v).unwrap();
            let (a, b) = (quantize(&inv, n, true).unwrap(), quantize(&img, n, false).unwrap());
            prop_assert_eq!(a.grades(), b.grades());
        }

        #[test]
        fn grades_ignore_offset(px in proptest::collection::vec(0u16..=200, 1..30), n in 1u32..20, b in 0u16..55) {
            let img = GrayImage::new(px.len(), 1, 255, px).unwrap();
            let shifted = img.map(255, |v| v + b).unwrap();
            let (a, c) = (quantize(&shifted, n, false).unwrap(), quantize(&img, n, false).unwrap());
            prop_assert_eq!(a.grades(), c.grades());
        }

        #[test]
        fn intervals_partition_the_range(range in 1u64..500, n in 1u32..40) {
            let d = Ratio::new(range, u64::from(n));
            let mut prev = 1;
            for g in 0..=range {
                let k = grade_of(g, 0, d, n).unwrap();
                prop_assert!(k == prev || k == prev + 1 || (k > prev && g > 0));
                // g lies in (g_min+(k-1)Δ, g_min+kΔ], except g_min in grade 1
                let gr = Ratio::from_integer(g);
                prop_assert!(gr <= d * Ratio::from_integer(u64::from(k)));
                if g > 0 {
                    prop_assert!(gr > d * Ratio::from_integer(u64::from(k - 1)));
                }
                prev = k;
            }
            prop_assert_eq!(prev, n);
        }
    }
}
