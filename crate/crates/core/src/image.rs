//! Raster containers shared by every stage of the pipeline.

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ImageError {
    #[error("image dimensions must be at least 1x1, got {width}x{height}")]
    EmptyDimensions { width: usize, height: usize },
    #[error("expected {expected} samples, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("maxval must be in 1..=65535, got {0}")]
    BadMaxval(u32),
    #[error("sample {value} at index {index} exceeds maxval {maxval}")]
    SampleOutOfRange { index: usize, value: u16, maxval: u16 },
}

/// Pixel adjacency used for component labeling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Connectivity {
    #[default]
    Four,
    Eight,
}

impl Connectivity {
    pub fn from_count(n: u8) -> Option<Self> {
        match n {
            4 => Some(Connectivity::Four),
            8 => Some(Connectivity::Eight),
            _ => None,
        }
    }

    pub fn count(self) -> u8 {
        match self {
            Connectivity::Four => 4,
            Connectivity::Eight => 8,
        }
    }

    /// Offsets of the neighborhood, in row-major order.
    pub fn offsets(self) -> &'static [(isize, isize)] {
        match self {
            Connectivity::Four => &N4,
            Connectivity::Eight => &N8,
        }
    }

    /// The complementary adjacency (4 <-> 8), used for holes.
    pub fn dual(self) -> Self {
        match self {
            Connectivity::Four => Connectivity::Eight,
            Connectivity::Eight => Connectivity::Four,
        }
    }
}

pub(crate) const N4: [(isize, isize); 4] = [(0, -1), (-1, 0), (1, 0), (0, 1)];
pub(crate) const N8: [(isize, isize); 8] = [(-1, -1), (0, -1), (1, -1), (-1, 0), (1, 0), (-1, 1), (0, 1), (1, 1)];

/// Grayscale raster with integer samples in `0..=maxval`, stored row-major.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GrayImage {
    width: usize,
    height: usize,
    maxval: u16,
    pixels: Vec<u16>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, maxval: u16, pixels: Vec<u16>) -> Result<Self, ImageError> {
        if width == 0 || height == 0 {
            return Err(ImageError::EmptyDimensions { width, height });
        }
        if maxval == 0 {
            return Err(ImageError::BadMaxval(0));
        }
        let expected = width
            .checked_mul(height)
            .ok_or(ImageError::EmptyDimensions { width, height })?;
        if pixels.len() != expected {
            return Err(ImageError::LengthMismatch {
                expected,
                actual: pixels.len(),
            });
        }
        if let Some((index, &value)) = pixels.iter().enumerate().find(|(_, &v)| v > maxval) {
            return Err(ImageError::SampleOutOfRange { index, value, maxval });
        }
        Ok(Self {
            width,
            height,
            maxval,
            pixels,
        })
    }

    /// A constant image.
    pub fn filled(width: usize, height: usize, maxval: u16, value: u16) -> Result<Self, ImageError> {
        Self::new(width, height, maxval, vec![value; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn maxval(&self) -> u16 {
        self.maxval
    }

    pub fn pixels(&self) -> &[u16] {
        &self.pixels
    }

    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    pub fn get(&self, x: usize, y: usize) -> u16 {
        self.pixels[y * self.width + x]
    }

    /// `(min, max)` over all samples.
    pub fn extrema(&self) -> (u16, u16) {
        self.pixels
            .iter()
            .fold((u16::MAX, 0), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }

    /// Applies `f` to every sample. Fails if a result exceeds `maxval`.
    pub fn map<F: Fn(u16) -> u16>(&self, maxval: u16, f: F) -> Result<Self, ImageError> {
        Self::new(
            self.width,
            self.height,
            maxval,
            self.pixels.iter().map(|&v| f(v)).collect(),
        )
    }

    pub fn into_pixels(self) -> Vec<u16> {
        self.pixels
    }
}

/// Per-pixel object labels, 0 meaning background.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LabelMap {
    width: usize,
    height: usize,
    labels: Vec<u32>,
}

impl LabelMap {
    pub fn new(width: usize, height: usize, labels: Vec<u32>) -> Result<Self, ImageError> {
        if width == 0 || height == 0 {
            return Err(ImageError::EmptyDimensions { width, height });
        }
        if labels.len() != width * height {
            return Err(ImageError::LengthMismatch {
                expected: width * height,
                actual: labels.len(),
            });
        }
        Ok(Self { width, height, labels })
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            labels: vec![0; width * height],
        }
    }

    /// Builds a 0/1 map from a boolean mask.
    pub fn from_mask(width: usize, height: usize, mask: &[bool]) -> Result<Self, ImageError> {
        Self::new(width, height, mask.iter().map(|&m| u32::from(m)).collect())
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn labels_mut(&mut self) -> &mut [u32] {
        &mut self.labels
    }

    pub fn get(&self, x: usize, y: usize) -> u32 {
        self.labels[y * self.width + x]
    }

    pub fn max_label(&self) -> u32 {
        self.labels.iter().copied().max().unwrap_or(0)
    }

    /// Sorted distinct non-zero labels.
    pub fn object_ids(&self) -> Vec<u32> {
        let mut ids: Vec<u32> = self.labels.iter().copied().filter(|&l| l != 0).collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }

    /// Converts to a raster whose samples are the labels, for PGM output.
    pub fn to_image(&self) -> Result<GrayImage, ImageError> {
        let pixels = self
            .labels
            .iter()
            .enumerate()
            .map(|(index, &l)| {
                u16::try_from(l).map_err(|_| ImageError::SampleOutOfRange {
                    index,
                    value: u16::MAX,
                    maxval: u16::MAX,
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        GrayImage::new(self.width, self.height, u16::MAX, pixels)
    }

    /// Relabels the foreground (any non-zero label) into connected components,
    /// numbered 1.. in raster order of their first pixel.
    pub fn components(&self, connectivity: Connectivity) -> LabelMap {
        let (w, h) = (self.width, self.height);
        let mut out = vec![0u32; w * h];
        let mut next = 0u32;
        let mut stack = Vec::new();
        for start in 0..w * h {
            if self.labels[start] == 0 || out[start] != 0 {
                continue;
            }
            next += 1;
            out[start] = next;
            stack.push(start);
            while let Some(p) = stack.pop() {
                let (x, y) = ((p % w) as isize, (p / w) as isize);
                for &(dx, dy) in connectivity.offsets() {
                    let (nx, ny) = (x + dx, y + dy);
                    if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                        continue;
                    }
                    let q = ny as usize * w + nx as usize;
                    if self.labels[q] != 0 && out[q] == 0 {
                        out[q] = next;
                        stack.push(q);
                    }
                }
            }
        }
        LabelMap {
            width: w,
            height: h,
            labels: out,
        }
    }

    pub fn from_image(image: &GrayImage) -> Self {
        Self {
            width: image.width(),
            height: image.height(),
            labels: image.pixels().iter().map(|&v| u32::from(v)).collect(),
        }
    }
}
