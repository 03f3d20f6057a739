//! Thinning of a band to a one-pixel boundary curve, and the inverse fill.
//!
//! The band sits between an exterior (everything outside its filled region)
//! and an interior (its sons' components). Both sides are grown into the band
//! one pixel layer at a time, alternately from outside and from inside. A
//! band pixel may join a side only if it is not 4-adjacent to the other side,
//! so the two sides never touch. The pixels left over form an 8-connected
//! curve separating interior from exterior under 4-adjacency.
//!
//! A virtual band, or a band without sons, has no interior of its own; its
//! interior is then the filled region minus its outer boundary ring, which
//! makes the curve that ring (the ideal step edge).

use crate::bandtree::{BandId, BandTree};
use crate::image::{LabelMap, N4, N8};
use crate::region::{Rect, Region};
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};
use std::collections::VecDeque;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ContourError {
    #[error("contour of band {band_id} is open; close it through the border first")]
    Open { band_id: BandId },
    #[error("contour point ({x}, {y}) lies outside a {width}x{height} image")]
    OutOfBounds {
        x: u32,
        y: u32,
        width: usize,
        height: usize,
    },
}

/// Ordered single-pixel boundary curve of one object.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Contour {
    pub band_id: BandId,
    pub grade: u32,
    /// `(x, y)` pixel coordinates; consecutive points are 8-neighbors.
    pub points: Vec<(u32, u32)>,
    /// False when the object touches the image border.
    pub closed: bool,
}

impl Serialize for Contour {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut s = serializer.serialize_struct("Contour", 4)?;
        s.serialize_field("band_id", &self.band_id)?;
        s.serialize_field("grade", &self.grade)?;
        s.serialize_field("closed", &self.closed)?;
        let pts: Vec<[u32; 2]> = self.points.iter().map(|&(x, y)| [x, y]).collect();
        s.serialize_field("points", &pts)?;
        s.end()
    }
}

impl Contour {
    /// The same curve treated as closed. The points of an open contour
    /// already run along the image border where the object meets it.
    pub fn closed_through_border(&self) -> Contour {
        Contour {
            closed: true,
            ..self.clone()
        }
    }

    /// Number of other contour points among the 8 neighbors of each point.
    pub fn neighbor_counts(&self) -> Vec<usize> {
        let set: std::collections::HashSet<(u32, u32)> = self.points.iter().copied().collect();
        self.points
            .iter()
            .map(|&(x, y)| {
                N8.iter()
                    .filter(|&&(dx, dy)| {
                        let (nx, ny) = (x as i64 + dx as i64, y as i64 + dy as i64);
                        nx >= 0 && ny >= 0 && set.contains(&(nx as u32, ny as u32))
                    })
                    .count()
            })
            .collect()
    }
}

/// Result of thinning one band.
#[derive(Debug, Clone)]
pub struct ThinnedBand {
    pub band_id: BandId,
    pub grade: u32,
    /// The remaining one-pixel curve.
    pub curve: Region,
    /// Curve plus everything it encloses.
    pub object: Region,
}

impl ThinnedBand {
    pub fn touches_border(&self) -> bool {
        self.object.touches_image_border()
    }

    /// One contour per 8-connected piece of the curve.
    pub fn contours(&self) -> Vec<Contour> {
        let closed = !self.touches_border();
        curve_components(&self.curve)
            .into_iter()
            .map(|points| Contour {
                band_id: self.band_id,
                grade: self.grade,
                points,
                closed,
            })
            .collect()
    }
}

const EXT: u8 = 0;
const BAND: u8 = 1;
const INT: u8 = 2;

/// Thins band `id` of `tree`.
pub fn thin_band(tree: &BandTree, id: BandId) -> ThinnedBand {
    let band = tree.band(id);
    let source = tree.real_descendant(id);
    let filled = tree.filled_region(source);
    let own_interior = !band.is_virtual() && !band.sons().is_empty();

    // working frame: filled bounds plus a one-pixel margin of exterior
    let fb = filled.bounds;
    let frame = Rect {
        x0: fb.x0.saturating_sub(1),
        y0: fb.y0.saturating_sub(1),
        x1: (fb.x1 + 1).min(tree.width()),
        y1: (fb.y1 + 1).min(tree.height()),
    };
    let (fw, fh) = (frame.width(), frame.height());
    let mut state = vec![EXT; fw * fh];
    let owner = tree.pixel_owner();
    for (x, y) in filled.pixels() {
        let li = (y - frame.y0) * fw + (x - frame.x0);
        let inside = if own_interior {
            let o = owner[y * tree.width() + x];
            o != id && tree.in_subtree(id, o)
        } else {
            true
        };
        state[li] = if inside { INT } else { BAND };
    }
    let in_frame = |x: isize, y: isize| x >= 0 && y >= 0 && (x as usize) < fw && (y as usize) < fh;
    // out-of-image counts as exterior; out-of-frame inside the image is exterior too
    let side = |state: &[u8], x: isize, y: isize| -> u8 {
        if in_frame(x, y) {
            state[y as usize * fw + x as usize]
        } else {
            EXT
        }
    };
    let touches = |state: &[u8], li: usize, what: u8| -> bool {
        let (x, y) = ((li % fw) as isize, (li / fw) as isize);
        N4.iter().any(|&(dx, dy)| side(state, x + dx, y + dy) == what)
    };
    absorb_pockets(&mut state, fw, fh);
    // interior pixels on the exterior edge become band: iso-lines coincide there
    let demote: Vec<usize> = (0..state.len())
        .filter(|&li| state[li] == INT && touches(&state, li, EXT))
        .collect();
    for li in demote {
        state[li] = BAND;
    }

    if state.contains(&INT) {
        grow_sides(&mut state, fw, fh, &touches);
    }

    let mut curve = Region::new(fb, tree.width(), tree.height());
    let mut object = Region::new(fb, tree.width(), tree.height());
    for (li, &s) in state.iter().enumerate() {
        if s == EXT {
            continue;
        }
        let (x, y) = (frame.x0 + li % fw, frame.y0 + li / fw);
        object.set(x, y, true);
        if s == BAND {
            curve.set(x, y, true);
        }
    }
    ThinnedBand {
        band_id: id,
        grade: band.grade(),
        curve,
        object,
    }
}

/// Exterior pixels joined to the outside only diagonally become interior, so
/// the curve need not loop around them to stay 4-separating.
fn absorb_pockets(state: &mut [u8], fw: usize, fh: usize) {
    let mut reached = vec![false; state.len()];
    let mut stack: Vec<usize> = (0..state.len())
        .filter(|&li| state[li] == EXT && (li % fw == 0 || li / fw == 0 || li % fw + 1 == fw || li / fw + 1 == fh))
        .collect();
    for &li in &stack {
        reached[li] = true;
    }
    while let Some(li) = stack.pop() {
        let (x, y) = ((li % fw) as isize, (li / fw) as isize);
        for &(dx, dy) in &N4 {
            let (nx, ny) = (x + dx, y + dy);
            if nx < 0 || ny < 0 || nx as usize >= fw || ny as usize >= fh {
                continue;
            }
            let n = ny as usize * fw + nx as usize;
            if state[n] == EXT && !reached[n] {
                reached[n] = true;
                stack.push(n);
            }
        }
    }
    for (s, r) in state.iter_mut().zip(reached) {
        if *s == EXT && !r {
            *s = INT;
        }
    }
}

fn grow_sides<F>(state: &mut [u8], fw: usize, fh: usize, touches: &F)
where
    F: Fn(&[u8], usize, u8) -> bool,
{
    let neighbors = |li: usize| {
        let (x, y) = ((li % fw) as isize, (li / fw) as isize);
        N4.iter().filter_map(move |&(dx, dy)| {
            let (nx, ny) = (x + dx, y + dy);
            (nx >= 0 && ny >= 0 && (nx as usize) < fw && (ny as usize) < fh).then(|| ny as usize * fw + nx as usize)
        })
    };
    let mut stamp = vec![0u32; state.len()];
    let mut generation = 0u32;
    let mut frontier = |state: &[u8], seeds: Option<&[usize]>, toward: u8, stamp: &mut Vec<u32>| -> Vec<usize> {
        generation += 1;
        let mut out = Vec::new();
        let mut push = |li: usize, out: &mut Vec<usize>| {
            if state[li] == BAND && stamp[li] != generation && touches(state, li, toward) {
                stamp[li] = generation;
                out.push(li);
            }
        };
        match seeds {
            None => (0..state.len()).for_each(|li| push(li, &mut out)),
            Some(seeds) => seeds
                .iter()
                .flat_map(|&s| neighbors(s))
                .for_each(|li| push(li, &mut out)),
        }
        out.sort_unstable();
        out
    };

    let mut ext_front = frontier(state, None, EXT, &mut stamp);
    let mut int_front = frontier(state, None, INT, &mut stamp);
    loop {
        let mut changed = false;
        for (front, grow, other) in [(&mut ext_front, EXT, INT), (&mut int_front, INT, EXT)] {
            let moved: Vec<usize> = front.iter().copied().filter(|&li| !touches(state, li, other)).collect();
            for &li in &moved {
                state[li] = grow;
            }
            changed |= !moved.is_empty();
            *front = frontier(state, Some(&moved), grow, &mut stamp);
        }
        if !changed {
            break;
        }
    }
}

/// Orders each 8-connected component of `curve` into a walk. Closed curves
/// start at their first pixel in row-major order; open pieces start at an
/// end point. Steps prefer 4-neighbors so corner pixels are not skipped.
fn curve_components(curve: &Region) -> Vec<Vec<(u32, u32)>> {
    let pts: Vec<(usize, usize)> = curve.pixels().collect();
    let mut seen = Region::new(curve.bounds, curve.image_width, curve.image_height);
    let nbrs = |x: usize, y: usize, offsets: &'static [(isize, isize)]| {
        offsets.iter().filter_map(move |&(dx, dy)| {
            let (nx, ny) = (x as isize + dx, y as isize + dy);
            curve.contains_signed(nx, ny).then_some((nx as usize, ny as usize))
        })
    };
    let mut out = Vec::new();
    for &start in &pts {
        if seen.contains(start.0, start.1) {
            continue;
        }
        // collect the component
        let mut comp = vec![start];
        seen.set(start.0, start.1, true);
        let mut queue = VecDeque::from([start]);
        while let Some((x, y)) = queue.pop_front() {
            for q in nbrs(x, y, &N8) {
                if !seen.contains(q.0, q.1) {
                    seen.set(q.0, q.1, true);
                    comp.push(q);
                    queue.push_back(q);
                }
            }
        }
        comp.sort_by_key(|&(x, y)| (y, x));
        let degree = |p: (usize, usize)| nbrs(p.0, p.1, &N8).count();
        let first = comp.iter().copied().find(|&p| degree(p) <= 1).unwrap_or(comp[0]);

        let member: std::collections::HashSet<(usize, usize)> = comp.iter().copied().collect();
        let mut visited = std::collections::HashSet::with_capacity(comp.len());
        let mut walk = vec![first];
        visited.insert(first);
        let mut cur = first;
        loop {
            let next = nbrs(cur.0, cur.1, &N4)
                .chain(nbrs(cur.0, cur.1, &CLOCKWISE_DIAGONALS))
                .find(|q| member.contains(q) && !visited.contains(q));
            match next {
                Some(q) => {
                    visited.insert(q);
                    walk.push(q);
                    cur = q;
                }
                None => break,
            }
        }
        // pieces a single walk cannot reach (branches) follow in row-major order
        walk.extend(comp.iter().copied().filter(|p| !visited.contains(p)));
        out.push(walk.into_iter().map(|(x, y)| (x as u32, y as u32)).collect());
    }
    out
}

const CLOCKWISE_DIAGONALS: [(isize, isize); 4] = [(1, -1), (1, 1), (-1, 1), (-1, -1)];

/// Shrinks band `id` to its boundary curve(s).
pub fn shrink_band(tree: &BandTree, id: BandId) -> Vec<Contour> {
    thin_band(tree, id).contours()
}

/// Mask with 1 on and inside a closed contour: every pixel that cannot reach
/// the image border through non-contour pixels under 4-adjacency.
pub fn fill_contour(contour: &Contour, width: usize, height: usize) -> Result<LabelMap, ContourError> {
    if !contour.closed {
        return Err(ContourError::Open {
            band_id: contour.band_id,
        });
    }
    let mut wall = vec![false; width * height];
    for &(x, y) in &contour.points {
        if x as usize >= width || y as usize >= height {
            return Err(ContourError::OutOfBounds { x, y, width, height });
        }
        wall[y as usize * width + x as usize] = true;
    }
    let mut outside = vec![false; width * height];
    let mut queue = VecDeque::new();
    for y in 0..height {
        for x in 0..width {
            let border = x == 0 || y == 0 || x + 1 == width || y + 1 == height;
            let i = y * width + x;
            if border && !wall[i] {
                outside[i] = true;
                queue.push_back((x, y));
            }
        }
    }
    while let Some((x, y)) = queue.pop_front() {
        for &(dx, dy) in &N4 {
            let (nx, ny) = (x as isize + dx, y as isize + dy);
            if nx < 0 || ny < 0 || nx as usize >= width || ny as usize >= height {
                continue;
            }
            let i = ny as usize * width + nx as usize;
            if !wall[i] && !outside[i] {
                outside[i] = true;
                queue.push_back((nx as usize, ny as usize));
            }
        }
    }
    let labels = outside.iter().map(|&o| u32::from(!o)).collect();
    Ok(LabelMap::new(width, height, labels).expect("dimensions match"))
}
