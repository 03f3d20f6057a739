//! Local-minimal-width (LMW) band segmentation.
//!
//! The grayscale range of an image is cut into `N` equal grades. Connected
//! regions of the grade map form bands arranged in an enclosure tree; each
//! band has a width `2 * n_B / n_E` (pixels over edge pixels). Bands that are
//! no wider than any of their tree neighbors mark the steepest local
//! transitions, and thinning them to one-pixel curves yields object contours
//! with locally adaptive thresholds.
//!
//! ```text
//! GrayImage -> quantize -> GradeMap -> build_band_tree -> BandTree
//!           -> find_lmw_bands -> shrink_band -> Contour -> SegmentationResult
//! ```

pub mod bandtree;
pub mod contour;
pub mod grademap;
pub mod image;
pub mod lmw;
pub mod metrics;
pub mod otsu;
pub mod pgm;
pub mod phantom;
pub mod pipeline;
pub mod region;

pub use bandtree::{band_width, build_band_tree, build_band_tree_with, Band, BandId, BandTree};
pub use contour::{fill_contour, shrink_band, thin_band, Contour, ContourError, ThinnedBand};
pub use grademap::{grade_of, quantize, quantize_masked, GradeMap, DEFAULT_GRADES};
pub use image::{Connectivity, GrayImage, ImageError, LabelMap};
pub use lmw::{find_lmw_bands, BandGraph, LmwOptions};
pub use metrics::{evaluate, precise_recall, MetricsError, MetricsReport, ObjectMatch};
pub use otsu::{otsu_threshold, OtsuError};
pub use pgm::{load_pgm, save_pgm, PgmError};
pub use phantom::{make_phantom, PhantomError, PhantomKind, PhantomParams, PhantomSpec};
pub use pipeline::{
    segment, segment_iterative, IterateConfig, ObjectStats, Predicate, SegmentConfig, SegmentError, SegmentationResult,
    TreeSummary,
};
pub use region::{Rect, Region};
