//! Shared inputs for the benchmarks.

use lmw_core::{make_phantom, GrayImage, PhantomKind, PhantomSpec};

/// A square grains phantom of side `size`, with optional per-pixel noise.
pub fn grains(size: usize, noise: u16) -> GrayImage {
    let mut spec = PhantomSpec::new(PhantomKind::GrainsRamp, size, size, 0);
    spec.params.noise = (noise > 0).then_some(noise);
    make_phantom(&spec).expect("grains phantom fits").0
}
