//! Bands of a grade map and their enclosure tree.
//!
//! A node of grade `n` is a connected component of the upper set
//! `{grade >= n}`; its band is the subset of pixels whose grade is exactly
//! `n`. Every component sits inside exactly one component one grade lower,
//! which is its father, so iso-lines nest the way they do in a grade map of
//! bright objects on a dark background. A component whose band is empty
//! (two iso-lines coincide everywhere around it) is a virtual, zero-width
//! band. Wherever a component's father is more than one grade below it, the
//! missing grades are spliced in as virtual bands.
//!
//! Band ids are assigned in preorder, so the subtree of band `b` is the id
//! range `b..subtree_end(b)` and pixel membership in a component is a range
//! check on the pixel's owner.

use crate::grademap::GradeMap;
use crate::image::{Connectivity, N4, N8};
use crate::region::{Rect, Region};
use num_rational::Ratio;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

pub type BandId = usize;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BandError {
    #[error("band has {n_b} pixels but no edge pixels")]
    NoEdge { n_b: u64 },
}

/// Band width `2 * n_b / n_e`; zero for an empty band.
pub fn band_width(n_b: u64, n_e: u64) -> Result<Ratio<u64>, BandError> {
    match (n_b, n_e) {
        (0, _) => Ok(Ratio::from_integer(0)),
        (n_b, 0) => Err(BandError::NoEdge { n_b }),
        (n_b, n_e) => Ok(Ratio::new(2 * n_b, n_e)),
    }
}

/// Horizontal run of pixels `x0..x1` on row `y`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct Run {
    pub y: u32,
    pub x0: u32,
    pub x1: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Band {
    id: BandId,
    grade: u32,
    runs: Vec<Run>,
    n_b: u64,
    n_e: u64,
    width: Ratio<u64>,
    father: Option<BandId>,
    sons: Vec<BandId>,
    is_virtual: bool,
    subtree_end: BandId,
    bounds: Rect,
}

impl Band {
    pub fn id(&self) -> BandId {
        self.id
    }

    pub fn grade(&self) -> u32 {
        self.grade
    }

    /// Run-length encoded pixels, row-major. Empty for virtual bands.
    pub fn runs(&self) -> &[Run] {
        &self.runs
    }

    pub fn n_b(&self) -> u64 {
        self.n_b
    }

    pub fn n_e(&self) -> u64 {
        self.n_e
    }

    pub fn width(&self) -> Ratio<u64> {
        self.width
    }

    pub fn width_f64(&self) -> f64 {
        *self.width.numer() as f64 / *self.width.denom() as f64
    }

    pub fn father(&self) -> Option<BandId> {
        self.father
    }

    pub fn sons(&self) -> &[BandId] {
        &self.sons
    }

    pub fn is_virtual(&self) -> bool {
        self.is_virtual
    }

    /// One past the last id of this band's subtree.
    pub fn subtree_end(&self) -> BandId {
        self.subtree_end
    }

    /// Bounding box of the band's component.
    pub fn component_bounds(&self) -> Rect {
        self.bounds
    }

    pub fn pixels(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.runs
            .iter()
            .flat_map(|r| (r.x0..r.x1).map(move |x| (x as usize, r.y as usize)))
    }
}

/// Node of the tree dump written by `--dump-tree`.
#[derive(Debug, Clone, Serialize)]
pub struct TreeNodeDump {
    pub id: BandId,
    pub grade: u32,
    #[serde(rename = "n_B")]
    pub n_b: u64,
    #[serde(rename = "n_E")]
    pub n_e: u64,
    pub width: f64,
    #[serde(rename = "virtual")]
    pub is_virtual: bool,
    pub father: Option<BandId>,
    pub sons: Vec<BandId>,
}

#[derive(Debug, Clone)]
pub struct BandTree {
    width: usize,
    height: usize,
    connectivity: Connectivity,
    bands: Vec<Band>,
    owner: Vec<BandId>,
    grades: Vec<u32>,
}

impl BandTree {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn connectivity(&self) -> Connectivity {
        self.connectivity
    }

    pub fn bands(&self) -> &[Band] {
        &self.bands
    }

    pub fn band(&self, id: BandId) -> &Band {
        &self.bands[id]
    }

    pub fn len(&self) -> usize {
        self.bands.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bands.is_empty()
    }

    pub fn root(&self) -> BandId {
        0
    }

    /// Owning (non-virtual) band of every pixel, row-major.
    pub fn pixel_owner(&self) -> &[BandId] {
        &self.owner
    }

    pub fn grades(&self) -> &[u32] {
        &self.grades
    }

    /// True if `descendant` lies in the subtree of `ancestor` (inclusive).
    #[inline]
    pub fn in_subtree(&self, ancestor: BandId, descendant: BandId) -> bool {
        descendant >= ancestor && descendant < self.bands[ancestor].subtree_end
    }

    /// Pixels of the band's component `{grade >= n}`.
    pub fn component(&self, id: BandId) -> Region {
        let bounds = self.bands[id].bounds;
        let mut region = Region::new(bounds, self.width, self.height);
        if bounds.is_empty() {
            return region;
        }
        for y in bounds.y0..bounds.y1 {
            for x in bounds.x0..bounds.x1 {
                if self.in_subtree(id, self.owner[y * self.width + x]) {
                    region.set(x, y, true);
                }
            }
        }
        region
    }

    /// The component plus its holes.
    pub fn filled_region(&self, id: BandId) -> Region {
        self.component(id).fill_holes(self.connectivity.dual())
    }

    /// Nearest non-virtual band at or below `id` along first sons.
    pub fn real_descendant(&self, mut id: BandId) -> BandId {
        while self.bands[id].is_virtual {
            id = self.bands[id].sons[0];
        }
        id
    }

    pub fn dump(&self) -> Vec<TreeNodeDump> {
        self.bands
            .iter()
            .map(|b| TreeNodeDump {
                id: b.id,
                grade: b.grade,
                n_b: b.n_b,
                n_e: b.n_e,
                width: b.width_f64(),
                is_virtual: b.is_virtual,
                father: b.father,
                sons: b.sons.clone(),
            })
            .collect()
    }
}

struct RealNode {
    grade: u32,
    parent: Option<usize>,
    children: Vec<usize>,
    first_pixel: usize,
    bounds: Rect,
}

fn find_root(zpar: &mut [u32], p: u32) -> u32 {
    let mut r = p;
    while zpar[r as usize] != r {
        r = zpar[r as usize];
    }
    let mut q = p;
    while zpar[q as usize] != r {
        let next = zpar[q as usize];
        zpar[q as usize] = r;
        q = next;
    }
    r
}

/// Builds the band tree with 4-connected components.
pub fn build_band_tree(grade_map: &GradeMap) -> BandTree {
    build_band_tree_with(grade_map, Connectivity::Four)
}

pub fn build_band_tree_with(grade_map: &GradeMap, connectivity: Connectivity) -> BandTree {
    let (w, h) = (grade_map.width(), grade_map.height());
    let n = w * h;
    let f = grade_map.grades();
    const UNSET: u32 = u32::MAX;

    // pixels by decreasing grade, ties by increasing index
    let max_grade = f.iter().copied().max().unwrap_or(0) as usize;
    let mut counts = vec![0usize; max_grade + 2];
    for &g in f {
        counts[max_grade - g as usize + 1] += 1;
    }
    for i in 1..counts.len() {
        counts[i] += counts[i - 1];
    }
    let mut order = vec![0u32; n];
    for (p, &g) in f.iter().enumerate() {
        let slot = &mut counts[max_grade - g as usize];
        order[*slot] = p as u32;
        *slot += 1;
    }

    let mut parent = vec![UNSET; n];
    let mut zpar = vec![UNSET; n];
    let offsets = connectivity.offsets();
    for &p in &order {
        parent[p as usize] = p;
        zpar[p as usize] = p;
        let (px, py) = ((p as usize % w) as isize, (p as usize / w) as isize);
        for &(dx, dy) in offsets {
            let (qx, qy) = (px + dx, py + dy);
            if qx < 0 || qy < 0 || qx as usize >= w || qy as usize >= h {
                continue;
            }
            let q = (qy as usize * w + qx as usize) as u32;
            if zpar[q as usize] == UNSET {
                continue;
            }
            let r = find_root(&mut zpar, q);
            if r != p {
                parent[r as usize] = p;
                zpar[r as usize] = p;
            }
        }
    }
    // point every pixel at its level root
    for &p in order.iter().rev() {
        let q = parent[p as usize];
        if f[parent[q as usize] as usize] == f[q as usize] {
            parent[p as usize] = parent[q as usize];
        }
    }
    let root_pixel = *order.last().expect("non-empty grade map") as usize;
    let is_canonical = |p: usize| p == root_pixel || f[parent[p] as usize] != f[p];

    let mut node_of = vec![usize::MAX; n];
    let mut nodes: Vec<RealNode> = Vec::new();
    // canonical pixels in decreasing grade: children precede parents
    for &p in &order {
        let p = p as usize;
        if is_canonical(p) {
            node_of[p] = nodes.len();
            nodes.push(RealNode {
                grade: f[p],
                parent: None,
                children: Vec::new(),
                first_pixel: usize::MAX,
                bounds: Rect::empty(),
            });
        }
    }
    let level_node = |p: usize, node_of: &[usize]| {
        if is_canonical(p) {
            node_of[p]
        } else {
            node_of[parent[p] as usize]
        }
    };
    for p in 0..n {
        let k = level_node(p, &node_of);
        let node = &mut nodes[k];
        node.first_pixel = node.first_pixel.min(p);
        node.bounds.include(p % w, p / w);
    }
    for p in 0..n {
        if is_canonical(p) && p != root_pixel {
            let k = node_of[p];
            let pk = node_of[parent[p] as usize];
            nodes[k].parent = Some(pk);
        }
    }
    // aggregate component extents upward; nodes are in child-before-parent order
    for k in 0..nodes.len() {
        if let Some(pk) = nodes[k].parent {
            let (first, bounds) = (nodes[k].first_pixel, nodes[k].bounds);
            nodes[pk].first_pixel = nodes[pk].first_pixel.min(first);
            nodes[pk].bounds.union(&bounds);
            nodes[pk].children.push(k);
        }
    }
    for k in 0..nodes.len() {
        let mut children = std::mem::take(&mut nodes[k].children);
        children.sort_by_key(|&c| nodes[c].first_pixel);
        nodes[k].children = children;
    }
    let root_node = node_of[root_pixel];

    // preorder emission with virtual splicing
    let mut bands: Vec<Band> = Vec::with_capacity(nodes.len());
    let mut band_of_node = vec![usize::MAX; nodes.len()];
    let mut stack: Vec<(usize, Option<BandId>)> = vec![(root_node, None)];
    let new_band = |id, grade, father, is_virtual, bounds| Band {
        id,
        grade,
        runs: Vec::new(),
        n_b: 0,
        n_e: 0,
        width: Ratio::from_integer(0),
        father,
        sons: Vec::new(),
        is_virtual,
        subtree_end: id + 1,
        bounds,
    };
    while let Some((k, mut father)) = stack.pop() {
        let node = &nodes[k];
        if let Some(fid) = father {
            for g in bands[fid].grade + 1..node.grade {
                let id = bands.len();
                bands.push(new_band(id, g, father, true, node.bounds));
                bands[fid_or(father)].sons.push(id);
                father = Some(id);
            }
        }
        let id = bands.len();
        bands.push(new_band(id, node.grade, father, false, node.bounds));
        if let Some(fid) = father {
            bands[fid].sons.push(id);
        }
        band_of_node[k] = id;
        for &c in node.children.iter().rev() {
            stack.push((c, Some(id)));
        }
    }
    for id in (0..bands.len()).rev() {
        let end = bands[id]
            .sons
            .iter()
            .map(|&s| bands[s].subtree_end)
            .max()
            .unwrap_or(id + 1);
        bands[id].subtree_end = end;
    }

    let owner: Vec<BandId> = (0..n).map(|p| band_of_node[level_node(p, &node_of)]).collect();

    // runs, row-major
    for y in 0..h {
        let row = &owner[y * w..(y + 1) * w];
        let mut x = 0;
        while x < w {
            let b = row[x];
            let start = x;
            while x < w && row[x] == b {
                x += 1;
            }
            bands[b].runs.push(Run {
                y: y as u32,
                x0: start as u32,
                x1: x as u32,
            });
            bands[b].n_b += (x - start) as u64;
        }
    }

    let mut tree = BandTree {
        width: w,
        height: h,
        connectivity,
        bands,
        owner,
        grades: f.to_vec(),
    };
    count_edges(&mut tree);
    tree
}

fn fid_or(father: Option<BandId>) -> BandId {
    father.expect("virtual chain always has a father")
}

/// Fills `n_e` and `width` for every band.
///
/// A band pixel is on the outer edge when it is 4-adjacent to the outside
/// of the band's filled region or to the image border, and on the inner edge
/// when it is 8-adjacent to a pixel of the filled region that is not in the
/// band (a son's pixel or a hole). A pixel on both edges counts twice. A virtual band gets twice the outer-boundary pixel count of its
/// son's filled region.
fn count_edges(tree: &mut BandTree) {
    let (w, h) = (tree.width, tree.height);
    let t: &BandTree = tree;
    let mut n_e: Vec<u64> = t
        .bands
        .par_iter()
        .map(|band| {
            if band.is_virtual {
                return 0;
            }
            let b = band.id;
            let filled = t.filled_region(b);
            let mut count = 0u64;
            for (x, y) in band.pixels() {
                let (xi, yi) = (x as isize, y as isize);
                let outer = x == 0
                    || y == 0
                    || x + 1 == w
                    || y + 1 == h
                    || N4.iter().any(|&(dx, dy)| !filled.contains_signed(xi + dx, yi + dy));
                let inner = N8.iter().any(|&(dx, dy)| {
                    let (qx, qy) = (xi + dx, yi + dy);
                    filled.contains_signed(qx, qy) && t.owner[qy as usize * w + qx as usize] != b
                });
                count += u64::from(outer) + u64::from(inner);
            }
            count
        })
        .collect();
    let mut virtual_edges: Vec<(BandId, u64)> = Vec::new();
    let mut last: Option<(BandId, u64)> = None;
    for band in tree.bands.iter().filter(|b| b.is_virtual) {
        let son = tree.real_descendant(band.id);
        let count = match last {
            Some((s, c)) if s == son => c,
            _ => tree.filled_region(son).outer_boundary().count() as u64,
        };
        last = Some((son, count));
        virtual_edges.push((band.id, 2 * count));
    }
    for (id, e) in virtual_edges {
        n_e[id] = e;
    }
    for band in &mut tree.bands {
        band.n_e = n_e[band.id];
        band.width = band_width(band.n_b, band.n_e).expect("non-empty band has an edge pixel");
    }
}
