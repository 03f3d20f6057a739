//! Netpbm graymap (PGM) codec.
//!
//! Reads plain (`P2`) and raw (`P5`) graymaps with 8- or 16-bit samples and
//! writes raw `P5`. Raw samples wider than a byte are big-endian. Every
//! decode error carries the byte offset at which it was detected.

use crate::image::{GrayImage, ImageError, LabelMap};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PgmError {
    #[error("unsupported magic {found:?} at offset 0 (expected P2 or P5)")]
    UnsupportedMagic { found: String },
    #[error("malformed header at offset {offset}: {reason}")]
    Malformed { offset: usize, reason: &'static str },
    #[error("maxval {value} at offset {offset} is outside 1..=65535")]
    BadMaxval { offset: usize, value: u64 },
    #[error("truncated pixel data at offset {offset}: expected {expected} samples, found {found}")]
    Truncated {
        offset: usize,
        expected: usize,
        found: usize,
    },
    #[error("sample {value} at offset {offset} exceeds maxval {maxval}")]
    SampleOutOfRange { offset: usize, value: u64, maxval: u16 },
    #[error(transparent)]
    Image(#[from] ImageError),
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn skip_whitespace_and_comments(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b == b'#' {
                while let Some(&c) = self.bytes.get(self.pos) {
                    self.pos += 1;
                    if c == b'\n' || c == b'\r' {
                        break;
                    }
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    /// Reads an unsigned decimal token; returns `(value, start_offset)`.
    fn number(&mut self, what: &'static str) -> Result<(u64, usize), PgmError> {
        self.skip_whitespace_and_comments();
        let start = self.pos;
        let mut value: u64 = 0;
        while let Some(&b) = self.bytes.get(self.pos) {
            if !b.is_ascii_digit() {
                break;
            }
            value = value
                .checked_mul(10)
                .and_then(|v| v.checked_add(u64::from(b - b'0')))
                .ok_or(PgmError::Malformed {
                    offset: start,
                    reason: "number too large",
                })?;
            self.pos += 1;
        }
        if self.pos == start {
            return Err(PgmError::Malformed {
                offset: start,
                reason: what,
            });
        }
        Ok((value, start))
    }
}

/// Decodes a `P2` or `P5` graymap.
pub fn load_pgm(bytes: &[u8]) -> Result<GrayImage, PgmError> {
    let magic = bytes.get(..2).unwrap_or(bytes);
    let raw = match magic {
        b"P5" => true,
        b"P2" => false,
        _ => {
            return Err(PgmError::UnsupportedMagic {
                found: String::from_utf8_lossy(magic).into_owned(),
            });
        }
    };
    let mut cur = Cursor { bytes, pos: 2 };
    if !bytes.get(2).is_some_and(|b| b.is_ascii_whitespace() || *b == b'#') {
        return Err(PgmError::Malformed {
            offset: 2,
            reason: "expected whitespace after magic",
        });
    }
    let (width, w_off) = cur.number("expected width")?;
    let (height, h_off) = cur.number("expected height")?;
    if width == 0 {
        return Err(PgmError::Malformed {
            offset: w_off,
            reason: "width must be positive",
        });
    }
    if height == 0 {
        return Err(PgmError::Malformed {
            offset: h_off,
            reason: "height must be positive",
        });
    }
    let (maxval, m_off) = cur.number("expected maxval")?;
    if !(1..=65535).contains(&maxval) {
        return Err(PgmError::BadMaxval {
            offset: m_off,
            value: maxval,
        });
    }
    let maxval = maxval as u16;
    let count = usize::try_from(width)
        .ok()
        .zip(usize::try_from(height).ok())
        .and_then(|(w, h)| w.checked_mul(h))
        .ok_or(PgmError::Malformed {
            offset: w_off,
            reason: "dimensions overflow",
        })?;

    let pixels = if raw {
        // exactly one whitespace byte separates maxval from the raster
        match bytes.get(cur.pos) {
            Some(b) if b.is_ascii_whitespace() => cur.pos += 1,
            _ => {
                return Err(PgmError::Malformed {
                    offset: cur.pos,
                    reason: "expected whitespace after maxval",
                });
            }
        }
        let bps = if maxval < 256 { 1 } else { 2 };
        let data = &bytes[cur.pos..];
        let available = data.len() / bps;
        if available < count {
            return Err(PgmError::Truncated {
                offset: bytes.len(),
                expected: count,
                found: available,
            });
        }
        let mut pixels = Vec::with_capacity(count);
        for i in 0..count {
            let v = if bps == 1 {
                u16::from(data[i])
            } else {
                u16::from_be_bytes([data[2 * i], data[2 * i + 1]])
            };
            if v > maxval {
                return Err(PgmError::SampleOutOfRange {
                    offset: cur.pos + i * bps,
                    value: u64::from(v),
                    maxval,
                });
            }
            pixels.push(v);
        }
        pixels
    } else {
        let mut pixels = Vec::with_capacity(count);
        for found in 0..count {
            cur.skip_whitespace_and_comments();
            if cur.pos >= bytes.len() {
                return Err(PgmError::Truncated {
                    offset: cur.pos,
                    expected: count,
                    found,
                });
            }
            let (v, off) = cur.number("expected sample")?;
            if v > u64::from(maxval) {
                return Err(PgmError::SampleOutOfRange {
                    offset: off,
                    value: v,
                    maxval,
                });
            }
            pixels.push(v as u16);
        }
        pixels
    };
    Ok(GrayImage::new(width as usize, height as usize, maxval, pixels)?)
}

/// Encodes as raw `P5`: `"P5\n<w> <h>\n<maxval>\n"` then big-endian samples.
pub fn save_pgm(image: &GrayImage) -> Vec<u8> {
    let header = format!("P5\n{} {}\n{}\n", image.width(), image.height(), image.maxval());
    let bps = if image.maxval() < 256 { 1 } else { 2 };
    let mut out = Vec::with_capacity(header.len() + image.len() * bps);
    out.extend_from_slice(header.as_bytes());
    if bps == 1 {
        out.extend(image.pixels().iter().map(|&v| v as u8));
    } else {
        for &v in image.pixels() {
            out.extend_from_slice(&v.to_be_bytes());
        }
    }
    out
}

/// Labels as a 16-bit (`maxval` 65535) graymap.
pub fn save_labels(labels: &LabelMap) -> Result<Vec<u8>, PgmError> {
    Ok(save_pgm(&labels.to_image()?))
}

pub fn load_labels(bytes: &[u8]) -> Result<LabelMap, PgmError> {
    Ok(LabelMap::from_image(&load_pgm(bytes)?))
}
