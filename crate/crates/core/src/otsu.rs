//! Global threshold baseline maximizing between-class variance.

use crate::image::{GrayImage, LabelMap};
use num_bigint::BigUint;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OtsuError {
    #[error("image is constant; no threshold separates two classes")]
    Degenerate,
}

/// Threshold `t` maximizing the between-class variance of `{g <= t}` versus
/// `{g > t}`, lowest `t` on ties, and the mask of pixels above it.
///
/// The variance is compared exactly: with `n0`, `s0` the count and sum of the
/// lower class and `n`, `s` the totals, it is proportional to
/// `(s0*n - s*n0)^2 / (n0 * (n - n0))`.
pub fn otsu_threshold(image: &GrayImage) -> Result<(u16, LabelMap), OtsuError> {
    let (lo, hi) = image.extrema();
    if lo == hi {
        return Err(OtsuError::Degenerate);
    }
    let mut hist = vec![0u64; usize::from(hi) + 1];
    for &g in image.pixels() {
        hist[usize::from(g)] += 1;
    }
    let n = image.len() as u64;
    let total: u128 = image.pixels().iter().map(|&g| u128::from(g)).sum();

    let (mut n0, mut s0) = (0u64, 0u128);
    let mut best: Option<(u16, BigUint, BigUint)> = None;
    for t in lo..hi {
        n0 += hist[usize::from(t)];
        s0 += u128::from(hist[usize::from(t)]) * u128::from(t);
        if n0 == 0 || n0 == n {
            continue;
        }
        let d = (s0 * u128::from(n)).abs_diff(total * u128::from(n0));
        let num = BigUint::from(d).pow(2);
        let den = BigUint::from(n0) * BigUint::from(n - n0);
        let better = match &best {
            None => true,
            Some((_, bn, bd)) => &num * bd > bn * &den,
        };
        if better {
            best = Some((t, num, den));
        }
    }
    let (t, _, _) = best.expect("non-constant image has a valid split");
    let labels = image.pixels().iter().map(|&g| u32::from(g > t)).collect();
    Ok((
        t,
        LabelMap::new(image.width(), image.height(), labels).expect("same dimensions"),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Float scan over every threshold, for comparison.
    fn brute_force(px: &[u16]) -> u16 {
        let (lo, hi) = (*px.iter().min().unwrap(), *px.iter().max().unwrap());
        let mut best = (lo, -1.0f64);
        for t in lo..hi {
            let (a, b): (Vec<f64>, Vec<f64>) = {
                let a = px
                    .iter()
                    .filter(|&&g| g <= t)
                    .map(|&g| f64::from(g))
                    .collect::<Vec<_>>();
                let b = px.iter().filter(|&&g| g > t).map(|&g| f64::from(g)).collect::<Vec<_>>();
                (a, b)
            };
            if a.is_empty() || b.is_empty() {
                continue;
            }
            let (wa, wb) = (a.len() as f64 / px.len() as f64, b.len() as f64 / px.len() as f64);
            let (ma, mb) = (
                a.iter().sum::<f64>() / a.len() as f64,
                b.iter().sum::<f64>() / b.len() as f64,
            );
            let v = wa * wb * (ma - mb).powi(2);
            if v > best.1 * (1.0 + 1e-12) {
                best = (t, v);
            }
        }
        best.0
    }

    #[test]
    fn two_spikes() {
        let px: Vec<u16> = (0..100).map(|i| if i % 2 == 0 { 50 } else { 200 }).collect();
        let img = GrayImage::new(10, 10, 255, px.clone()).unwrap();
        let (t, mask) = otsu_threshold(&img).unwrap();
        assert!((50..200).contains(&t));
        assert_eq!(t, brute_force(&px));
        // every threshold in [50, 199] splits the spikes equally well; lowest wins
        assert_eq!(t, 50);
        assert_eq!(mask.labels().iter().sum::<u32>(), 50);
    }

    #[test]
    fn binary_image() {
        let px = vec![0, 255, 255, 0, 0, 255];
        let img = GrayImage::new(3, 2, 255, px.clone()).unwrap();
        let (_, mask) = otsu_threshold(&img).unwrap();
        let expect: Vec<u32> = px.iter().map(|&g| u32::from(g == 255)).collect();
        assert_eq!(mask.labels(), expect.as_slice());
    }

    #[test]
    fn constant_is_degenerate() {
        let img = GrayImage::filled(3, 3, 255, 4).unwrap();
        assert_eq!(otsu_threshold(&img).unwrap_err(), OtsuError::Degenerate);
    }

    #[test]
    fn matches_exhaustive_scan() {
        let mut s = 0x9e3779b97f4a7c15u64;
        for _ in 0..50 {
            let px: Vec<u16> = (0..64)
                .map(|_| {
                    s ^= s << 13;
                    s ^= s >> 7;
                    s ^= s << 17;
                    (s % 40) as u16 * 5
                })
                .collect();
            let img = GrayImage::new(8, 8, 255, px.clone()).unwrap();
            if img.extrema().0 == img.extrema().1 {
                continue;
            }
            assert_eq!(otsu_threshold(&img).unwrap().0, brute_force(&px));
        }
    }
}
