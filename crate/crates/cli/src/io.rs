//! File formats: PGM for rasters (PNG where allowed), JSON for structured data.

use anyhow::{bail, Context, Result};
use image::DynamicImage;
use lmw_core::{load_pgm, save_pgm, Contour, GrayImage, LabelMap};
use serde_json::Value;
use std::fs;
use std::path::Path;

fn is_png(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("png"))
}

/// Reads a PGM, or a grayscale PNG when the extension is `.png`.
pub fn read_image(path: &Path) -> Result<GrayImage> {
    let bytes = fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
    if !is_png(path) {
        return load_pgm(&bytes).with_context(|| format!("cannot decode {}", path.display()));
    }
    let decoded = image::load_from_memory_with_format(&bytes, image::ImageFormat::Png)
        .with_context(|| format!("cannot decode {}", path.display()))?;
    let (w, h) = (decoded.width() as usize, decoded.height() as usize);
    let img = match decoded {
        DynamicImage::ImageLuma8(b) => GrayImage::new(w, h, 255, b.into_raw().into_iter().map(u16::from).collect()),
        DynamicImage::ImageLuma16(b) => GrayImage::new(w, h, u16::MAX, b.into_raw()),
        other => bail!("{} is not a grayscale PNG ({:?})", path.display(), other.color()),
    };
    img.with_context(|| format!("cannot decode {}", path.display()))
}

/// Writes a PGM, or an 8-bit PNG (samples rescaled from `maxval`) for `.png`.
pub fn write_image(path: &Path, img: &GrayImage) -> Result<()> {
    if !is_png(path) {
        return write_bytes(path, &save_pgm(img));
    }
    let m = u32::from(img.maxval());
    let px: Vec<u8> = img
        .pixels()
        .iter()
        .map(|&v| ((u32::from(v) * 255 + m / 2) / m) as u8)
        .collect();
    let buf =
        image::GrayImage::from_raw(img.width() as u32, img.height() as u32, px).context("raster size overflow")?;
    buf.save_with_format(path, image::ImageFormat::Png)
        .with_context(|| format!("cannot write {}", path.display()))
}

pub fn read_labels(path: &Path) -> Result<LabelMap> {
    Ok(LabelMap::from_image(&read_image(path)?))
}

/// Labels as a 16-bit PGM.
pub fn write_labels(path: &Path, labels: &LabelMap) -> Result<()> {
    let img = labels
        .to_image()
        .with_context(|| format!("labels do not fit 16 bits for {}", path.display()))?;
    write_bytes(path, &save_pgm(&img))
}

/// Compact JSON followed by a newline.
pub fn write_json<T: serde::Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec(value)?;
    bytes.push(b'\n');
    write_bytes(path, &bytes)
}

pub fn read_json(path: &Path) -> Result<Value> {
    let bytes = fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
    serde_json::from_slice(&bytes).with_context(|| format!("invalid JSON in {}", path.display()))
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).with_context(|| format!("cannot write {}", path.display()))
}

/// Input dimmed to half intensity with contour pixels at `maxval`.
pub fn overlay(img: &GrayImage, contours: &[Contour]) -> GrayImage {
    let w = img.width();
    let mut px: Vec<u16> = img.pixels().iter().map(|&v| v / 2).collect();
    for c in contours {
        for &(x, y) in &c.points {
            px[y as usize * w + x as usize] = img.maxval();
        }
    }
    GrayImage::new(w, img.height(), img.maxval(), px).expect("same shape as the input")
}
