//! Boolean pixel sets clipped to a bounding box.

use crate::image::Connectivity;
use std::collections::VecDeque;

/// Axis-aligned box, `x1`/`y1` exclusive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Rect {
    pub x0: usize,
    pub y0: usize,
    pub x1: usize,
    pub y1: usize,
}

impl Rect {
    pub fn empty() -> Self {
        Rect {
            x0: usize::MAX,
            y0: usize::MAX,
            x1: 0,
            y1: 0,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.x0 >= self.x1 || self.y0 >= self.y1
    }

    pub fn width(&self) -> usize {
        self.x1.saturating_sub(self.x0)
    }

    pub fn height(&self) -> usize {
        self.y1.saturating_sub(self.y0)
    }

    pub fn include(&mut self, x: usize, y: usize) {
        self.x0 = self.x0.min(x);
        self.y0 = self.y0.min(y);
        self.x1 = self.x1.max(x + 1);
        self.y1 = self.y1.max(y + 1);
    }

    pub fn union(&mut self, other: &Rect) {
        if other.is_empty() {
            return;
        }
        self.x0 = self.x0.min(other.x0);
        self.y0 = self.y0.min(other.y0);
        self.x1 = self.x1.max(other.x1);
        self.y1 = self.y1.max(other.y1);
    }
}

/// A set of pixels of a `image_width` x `image_height` raster, stored as a
/// mask over `bounds`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Region {
    pub bounds: Rect,
    pub image_width: usize,
    pub image_height: usize,
    mask: Vec<bool>,
}

impl Region {
    pub fn new(bounds: Rect, image_width: usize, image_height: usize) -> Self {
        let len = if bounds.is_empty() {
            0
        } else {
            bounds.width() * bounds.height()
        };
        Region {
            bounds,
            image_width,
            image_height,
            mask: vec![false; len],
        }
    }

    /// Region from a full-image mask.
    pub fn from_mask(image_width: usize, image_height: usize, mask: &[bool]) -> Self {
        let mut bounds = Rect::empty();
        for (i, _) in mask.iter().enumerate().filter(|(_, &m)| m) {
            bounds.include(i % image_width, i / image_width);
        }
        let mut r = Region::new(bounds, image_width, image_height);
        for (i, _) in mask.iter().enumerate().filter(|(_, &m)| m) {
            r.set(i % image_width, i / image_width, true);
        }
        r
    }

    /// Region from a set of pixel coordinates.
    pub fn from_points(image_width: usize, image_height: usize, points: &[(usize, usize)]) -> Self {
        let mut bounds = Rect::empty();
        for &(x, y) in points {
            bounds.include(x, y);
        }
        let mut r = Region::new(bounds, image_width, image_height);
        for &(x, y) in points {
            r.set(x, y, true);
        }
        r
    }

    #[inline]
    fn local(&self, x: usize, y: usize) -> Option<usize> {
        let b = &self.bounds;
        (x >= b.x0 && x < b.x1 && y >= b.y0 && y < b.y1).then(|| (y - b.y0) * b.width() + (x - b.x0))
    }

    #[inline]
    pub fn contains(&self, x: usize, y: usize) -> bool {
        self.local(x, y).is_some_and(|i| self.mask[i])
    }

    /// Like [`contains`](Self::contains) but accepts out-of-image coordinates.
    #[inline]
    pub fn contains_signed(&self, x: isize, y: isize) -> bool {
        x >= 0 && y >= 0 && self.contains(x as usize, y as usize)
    }

    /// Panics if `(x, y)` lies outside the bounds.
    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: bool) {
        let i = self.local(x, y).expect("pixel outside region bounds");
        self.mask[i] = value;
    }

    pub fn count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.mask.iter().any(|&m| m)
    }

    /// Member pixels in row-major order.
    pub fn pixels(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let b = self.bounds;
        let w = b.width();
        self.mask
            .iter()
            .enumerate()
            .filter(|(_, &m)| m)
            .map(move |(i, _)| (b.x0 + i % w, b.y0 + i / w))
    }

    /// The same pixels shifted by `(dx, dy)` into an `image_width` x `image_height` raster.
    pub fn translated(&self, dx: usize, dy: usize, image_width: usize, image_height: usize) -> Region {
        let b = self.bounds;
        let bounds = if b.is_empty() {
            b
        } else {
            Rect {
                x0: b.x0 + dx,
                y0: b.y0 + dy,
                x1: b.x1 + dx,
                y1: b.y1 + dy,
            }
        };
        assert!(
            b.is_empty() || (bounds.x1 <= image_width && bounds.y1 <= image_height),
            "translated region leaves the image"
        );
        Region {
            bounds,
            image_width,
            image_height,
            mask: self.mask.clone(),
        }
    }

    /// Non-member pixels 4-adjacent to a member.
    pub fn outer_ring(&self) -> Region {
        let b = self.bounds;
        if b.is_empty() {
            return self.clone();
        }
        let grown = Rect {
            x0: b.x0.saturating_sub(1),
            y0: b.y0.saturating_sub(1),
            x1: (b.x1 + 1).min(self.image_width),
            y1: (b.y1 + 1).min(self.image_height),
        };
        let mut out = Region::new(grown, self.image_width, self.image_height);
        for (x, y) in self.pixels() {
            for &(dx, dy) in &crate::image::N4 {
                let (nx, ny) = (x as isize + dx, y as isize + dy);
                if nx < 0 || ny < 0 || nx as usize >= self.image_width || ny as usize >= self.image_height {
                    continue;
                }
                if !self.contains(nx as usize, ny as usize) {
                    out.set(nx as usize, ny as usize, true);
                }
            }
        }
        out
    }

    pub fn touches_image_border(&self) -> bool {
        self.pixels()
            .any(|(x, y)| x == 0 || y == 0 || x + 1 == self.image_width || y + 1 == self.image_height)
    }

    /// Full-image boolean mask.
    pub fn to_mask(&self) -> Vec<bool> {
        let mut out = vec![false; self.image_width * self.image_height];
        for (x, y) in self.pixels() {
            out[y * self.image_width + x] = true;
        }
        out
    }

    pub fn is_subset_of(&self, other: &Region) -> bool {
        self.pixels().all(|(x, y)| other.contains(x, y))
    }

    /// Member pixels that are 4-adjacent to a non-member or to the image border.
    pub fn outer_boundary(&self) -> Region {
        let mut out = Region::new(self.bounds, self.image_width, self.image_height);
        for (x, y) in self.pixels() {
            let (xi, yi) = (x as isize, y as isize);
            let on_edge = crate::image::N4.iter().any(|&(dx, dy)| {
                let (nx, ny) = (xi + dx, yi + dy);
                nx < 0
                    || ny < 0
                    || nx as usize >= self.image_width
                    || ny as usize >= self.image_height
                    || !self.contains(nx as usize, ny as usize)
            });
            if on_edge {
                out.set(x, y, true);
            }
        }
        out
    }

    /// Adds every hole: non-member pixels that cannot reach the image border
    /// through non-members under `connectivity`.
    pub fn fill_holes(&self, connectivity: Connectivity) -> Region {
        let b = self.bounds;
        if b.is_empty() {
            return self.clone();
        }
        let (w, h) = (b.width(), b.height());
        let mut reached = vec![false; w * h];
        let mut queue = VecDeque::new();
        for ly in 0..h {
            for lx in 0..w {
                let frame = lx == 0 || ly == 0 || lx + 1 == w || ly + 1 == h;
                let i = ly * w + lx;
                if frame && !self.mask[i] {
                    // frame non-members touch the outside of the bbox or the image border
                    reached[i] = true;
                    queue.push_back((lx, ly));
                }
            }
        }
        while let Some((lx, ly)) = queue.pop_front() {
            for &(dx, dy) in connectivity.offsets() {
                let (nx, ny) = (lx as isize + dx, ly as isize + dy);
                if nx < 0 || ny < 0 || nx as usize >= w || ny as usize >= h {
                    continue;
                }
                let i = ny as usize * w + nx as usize;
                if !self.mask[i] && !reached[i] {
                    reached[i] = true;
                    queue.push_back((nx as usize, ny as usize));
                }
            }
        }
        let mut out = self.clone();
        for (i, m) in out.mask.iter_mut().enumerate() {
            if !reached[i] {
                *m = true;
            }
        }
        out
    }
}
