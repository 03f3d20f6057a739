//! Synthetic test images with ground-truth labels.
//!
//! Every phantom is a pure function of its [`PhantomSpec`]. Randomness
//! (grain placement, crack paths, noise) comes from a ChaCha8 generator
//! seeded with `spec.seed`; noise, when enabled, adds an integer drawn
//! uniformly from `[-noise, noise]` to each pixel in row-major order and
//! clamps to `[0, maxval]`.

use crate::image::{GrayImage, LabelMap};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PhantomKind {
    /// Bright disk whose intensity falls off as a sigmoid in radius.
    RampDisk,
    /// Constant disk on a constant background.
    StepDisk,
    /// Constant ring between `r1` and `r2` on a constant background.
    AnnulusBand,
    /// Bright disks over a linear illumination ramp.
    GrainsRamp,
    /// Dark branching ridges inside dark shadow halos on a graded background.
    CracksShadow,
}

impl std::str::FromStr for PhantomKind {
    type Err = PhantomError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        serde_json::from_value(serde_json::Value::String(s.to_owned()))
            .map_err(|_| PhantomError::UnknownKind(s.to_owned()))
    }
}

/// Geometry and intensity parameters. Unset fields take per-kind defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhantomParams {
    pub maxval: Option<u16>,
    /// `[x, y]`; defaults to slightly off the image center.
    pub center: Option<[f64; 2]>,
    /// Disk radius (step-disk) or steepest-descent radius (ramp-disk).
    pub radius: Option<f64>,
    /// Sigmoid scale of the ramp-disk falloff.
    pub softness: Option<f64>,
    pub r1: Option<f64>,
    pub r2: Option<f64>,
    pub background: Option<f64>,
    pub foreground: Option<f64>,
    /// Number of grains.
    pub k: Option<usize>,
    pub grain_radius: Option<f64>,
    /// Intensity rise of the illumination ramp across the image width.
    pub ramp: Option<f64>,
    /// Grain intensity above the local background.
    pub contrast: Option<f64>,
    /// Number of crack branches leaving the crack center.
    pub branches: Option<usize>,
    pub ridge: Option<f64>,
    pub ridge_width: Option<f64>,
    /// Intensity of the shadow plateau around the ridges.
    pub shadow: Option<f64>,
    /// Distance from the ridge over which the shadow is flat.
    pub shadow_width: Option<f64>,
    /// Decay length of the shadow beyond its plateau.
    pub shadow_falloff: Option<f64>,
    /// Background intensity at the left and right image edges.
    pub background_left: Option<f64>,
    pub background_right: Option<f64>,
    pub noise: Option<u16>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhantomSpec {
    pub kind: PhantomKind,
    pub seed: u64,
    pub width: usize,
    pub height: usize,
    #[serde(default)]
    pub params: PhantomParams,
}

impl PhantomSpec {
    pub fn new(kind: PhantomKind, width: usize, height: usize, seed: u64) -> Self {
        PhantomSpec {
            kind,
            seed,
            width,
            height,
            params: PhantomParams::default(),
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum PhantomError {
    #[error("unknown phantom kind {0:?}")]
    UnknownKind(String),
    #[error("invalid phantom parameter {name}: {reason}")]
    Invalid { name: &'static str, reason: String },
    #[error("phantom geometry does not fit a {width}x{height} canvas: {reason}")]
    DoesNotFit {
        width: usize,
        height: usize,
        reason: String,
    },
}

fn invalid(name: &'static str, reason: impl Into<String>) -> PhantomError {
    PhantomError::Invalid {
        name,
        reason: reason.into(),
    }
}

fn positive(name: &'static str, v: f64) -> Result<f64, PhantomError> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(invalid(name, format!("must be > 0, got {v}")))
    }
}

/// Renders the phantom and its ground truth.
pub fn make_phantom(spec: &PhantomSpec) -> Result<(GrayImage, LabelMap), PhantomError> {
    let (w, h) = (spec.width, spec.height);
    if w == 0 || h == 0 {
        return Err(PhantomError::DoesNotFit {
            width: w,
            height: h,
            reason: "empty canvas".into(),
        });
    }
    let p = &spec.params;
    // the smooth falloff is rendered at 16 bits so integer rounding does not
    // shift its iso-lines
    let default_maxval = if spec.kind == PhantomKind::RampDisk {
        u16::MAX
    } else {
        255
    };
    let maxval = p.maxval.unwrap_or(default_maxval);
    if maxval == 0 {
        return Err(invalid("maxval", "must be >= 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let center = p.center.unwrap_or([w as f64 / 2.0 + 0.37, h as f64 / 2.0 - 0.21]);
    let canvas = Canvas { w, h };

    let (values, labels) = match spec.kind {
        PhantomKind::RampDisk => ramp_disk(canvas, p, center, maxval)?,
        PhantomKind::StepDisk => step_disk(canvas, p, center)?,
        PhantomKind::AnnulusBand => annulus(canvas, p, center)?,
        PhantomKind::GrainsRamp => grains(canvas, p, &mut rng)?,
        PhantomKind::CracksShadow => cracks(canvas, p, center, &mut rng)?,
    };

    let noise = i64::from(p.noise.unwrap_or(0));
    let pixels = values
        .iter()
        .map(|&v| {
            let base = v.round() as i64;
            let n = if noise > 0 { rng.gen_range(-noise..=noise) } else { 0 };
            (base + n).clamp(0, i64::from(maxval)) as u16
        })
        .collect();
    let image = GrayImage::new(w, h, maxval, pixels).expect("phantom pixels are clamped to maxval");
    let labels = LabelMap::new(w, h, labels).expect("label buffer matches canvas");
    Ok((image, labels))
}

#[derive(Clone, Copy)]
struct Canvas {
    w: usize,
    h: usize,
}

impl Canvas {
    fn render<F: FnMut(f64, f64) -> (f64, u32)>(self, mut f: F) -> (Vec<f64>, Vec<u32>) {
        let mut values = Vec::with_capacity(self.w * self.h);
        let mut labels = Vec::with_capacity(self.w * self.h);
        for y in 0..self.h {
            for x in 0..self.w {
                let (v, l) = f(x as f64, y as f64);
                values.push(v);
                labels.push(l);
            }
        }
        (values, labels)
    }

    fn check_disk(self, c: [f64; 2], r: f64) -> Result<(), PhantomError> {
        let fits =
            c[0] - r >= 1.0 && c[1] - r >= 1.0 && c[0] + r <= self.w as f64 - 2.0 && c[1] + r <= self.h as f64 - 2.0;
        if fits {
            Ok(())
        } else {
            Err(PhantomError::DoesNotFit {
                width: self.w,
                height: self.h,
                reason: format!("disk of radius {r} at ({}, {}) reaches the border", c[0], c[1]),
            })
        }
    }
}

type Rendered = (Vec<f64>, Vec<u32>);

fn ramp_disk(canvas: Canvas, p: &PhantomParams, c: [f64; 2], maxval: u16) -> Result<Rendered, PhantomError> {
    let r0 = positive("radius", p.radius.unwrap_or(40.0))?;
    let s = positive("softness", p.softness.unwrap_or(5.0))?;
    let bg = p.background.unwrap_or(0.08 * f64::from(maxval));
    let fg = p.foreground.unwrap_or(0.92 * f64::from(maxval));
    canvas.check_disk(c, r0)?;
    Ok(canvas.render(|x, y| {
        let r = (x - c[0]).hypot(y - c[1]);
        let v = bg + (fg - bg) / (1.0 + ((r - r0) / s).exp());
        (v, u32::from(r < r0))
    }))
}

fn step_disk(canvas: Canvas, p: &PhantomParams, c: [f64; 2]) -> Result<Rendered, PhantomError> {
    let r = positive("radius", p.radius.unwrap_or(30.0))?;
    let bg = p.background.unwrap_or(40.0);
    let fg = p.foreground.unwrap_or(200.0);
    canvas.check_disk(c, r)?;
    Ok(canvas.render(|x, y| {
        let inside = (x - c[0]).hypot(y - c[1]) < r;
        (if inside { fg } else { bg }, u32::from(inside))
    }))
}

fn annulus(canvas: Canvas, p: &PhantomParams, c: [f64; 2]) -> Result<Rendered, PhantomError> {
    let r1 = positive("r1", p.r1.unwrap_or(10.0))?;
    let r2 = positive("r2", p.r2.unwrap_or(15.0))?;
    if r2 <= r1 {
        return Err(invalid("r2", format!("must exceed r1 = {r1}, got {r2}")));
    }
    let bg = p.background.unwrap_or(40.0);
    let fg = p.foreground.unwrap_or(200.0);
    canvas.check_disk(c, r2)?;
    Ok(canvas.render(|x, y| {
        let d = (x - c[0]).hypot(y - c[1]);
        let inside = d >= r1 && d < r2;
        (if inside { fg } else { bg }, u32::from(inside))
    }))
}

fn grains(canvas: Canvas, p: &PhantomParams, rng: &mut ChaCha8Rng) -> Result<Rendered, PhantomError> {
    let k = p.k.unwrap_or(9);
    if k == 0 {
        return Err(invalid("k", "need at least one grain"));
    }
    let r = positive("grain_radius", p.grain_radius.unwrap_or(12.0))?;
    let ramp = p.ramp.unwrap_or(160.0);
    let contrast = positive("contrast", p.contrast.unwrap_or(60.0))?;
    let bg0 = p.background.unwrap_or(20.0);
    let (w, h) = (canvas.w as f64, canvas.h as f64);
    let background = |x: f64| bg0 + ramp * x / (w - 1.0).max(1.0);
    let margin = r + 3.0;
    if w - 2.0 * margin <= 0.0 || h - 2.0 * margin <= 0.0 {
        return Err(PhantomError::DoesNotFit {
            width: canvas.w,
            height: canvas.h,
            reason: format!("grain radius {r} leaves no room"),
        });
    }

    // Rejection sampling; the layout must also defeat every global
    // threshold: some grain must be darker than the brightest background.
    let brightest_bg = background(0.0).max(background(w - 1.0));
    let mut centers: Vec<[f64; 2]> = Vec::new();
    for _layout in 0..100 {
        centers.clear();
        let mut attempts = 0;
        while centers.len() < k && attempts < 20_000 {
            attempts += 1;
            let c = [rng.gen_range(margin..w - margin), rng.gen_range(margin..h - margin)];
            if centers
                .iter()
                .all(|o| (o[0] - c[0]).hypot(o[1] - c[1]) >= 2.0 * r + 4.0)
            {
                centers.push(c);
            }
        }
        let darkest_grain = centers
            .iter()
            .map(|c| background(c[0]) + contrast)
            .fold(f64::INFINITY, f64::min);
        if centers.len() == k && darkest_grain.round() < brightest_bg.round() {
            break;
        }
    }
    if centers.len() < k {
        return Err(PhantomError::DoesNotFit {
            width: canvas.w,
            height: canvas.h,
            reason: format!("cannot place {k} disjoint grains of radius {r}"),
        });
    }
    let levels: Vec<f64> = centers.iter().map(|c| background(c[0]) + contrast).collect();
    Ok(canvas.render(|x, y| {
        for (i, c) in centers.iter().enumerate() {
            if (x - c[0]).hypot(y - c[1]) < r {
                return (levels[i], i as u32 + 1);
            }
        }
        (background(x), 0)
    }))
}

fn cracks(canvas: Canvas, p: &PhantomParams, c: [f64; 2], rng: &mut ChaCha8Rng) -> Result<Rendered, PhantomError> {
    let branches = p.branches.unwrap_or(5);
    if branches == 0 {
        return Err(invalid("branches", "need at least one branch"));
    }
    let ridge = p.ridge.unwrap_or(28.0);
    let ridge_half = positive("ridge_width", p.ridge_width.unwrap_or(3.0))? / 2.0;
    let shadow = p.shadow.unwrap_or(36.0);
    let plateau = p.shadow_width.unwrap_or(16.0);
    let falloff = positive("shadow_falloff", p.shadow_falloff.unwrap_or(8.0))?;
    let left = p.background_left.unwrap_or(230.0);
    let right = p.background_right.unwrap_or(128.0);
    let (w, h) = (canvas.w as f64, canvas.h as f64);

    // branches wander outward from the center in short straight steps
    let reach = 0.36 * w.min(h);
    let keep_out = plateau + 2.0 * falloff;
    let step = 6.0;
    let mut segments: Vec<([f64; 2], [f64; 2])> = Vec::new();
    let phase = rng.gen_range(0.0..2.0 * PI);
    for b in 0..branches {
        let mut heading = phase + 2.0 * PI * b as f64 / branches as f64;
        let mut at = c;
        let mut travelled = 0.0;
        while travelled < reach {
            heading += rng.gen_range(-0.35..0.35);
            let next = [at[0] + step * heading.cos(), at[1] + step * heading.sin()];
            let inside = next[0] >= keep_out
                && next[1] >= keep_out
                && next[0] <= w - 1.0 - keep_out
                && next[1] <= h - 1.0 - keep_out;
            if !inside {
                break;
            }
            segments.push((at, next));
            at = next;
            travelled += step;
        }
    }
    if segments.is_empty() {
        return Err(PhantomError::DoesNotFit {
            width: canvas.w,
            height: canvas.h,
            reason: "no room for cracks away from the border".into(),
        });
    }

    Ok(canvas.render(|x, y| {
        let d = segments
            .iter()
            .map(|&(a, b)| segment_distance([x, y], a, b))
            .fold(f64::INFINITY, f64::min);
        if d <= ridge_half {
            return (ridge, 1);
        }
        let bg = left + (right - left) * x / (w - 1.0).max(1.0);
        let weight = if d <= plateau {
            1.0
        } else {
            (-((d - plateau) / falloff).powi(2)).exp()
        };
        (bg + (shadow - bg) * weight, 0)
    }))
}

fn segment_distance(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / len2).clamp(0.0, 1.0)
    };
    (p[0] - a[0] - t * dx).hypot(p[1] - a[1] - t * dy)
}
