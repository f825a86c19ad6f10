//! Netpbm grayscale (P2/P5) and color (P3/P6) images.
//!
//! Samples are rescaled to `[0, 255]` using the file's maxval; 16-bit binary
//! samples are big-endian.

use std::path::Path;

use crate::{Error, GrayImage, Raster, Result, RgbImage};

fn err(path: &Path, reason: impl Into<String>) -> Error {
    Error::Decode {
        path: path.to_path_buf(),
        reason: reason.into(),
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn skip_space_and_comments(&mut self) {
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

    /// Next whitespace-delimited ASCII unsigned integer.
    fn number(&mut self) -> Option<u32> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.bytes.get(self.pos).is_some_and(u8::is_ascii_digit) {
            self.pos += 1;
        }
        if start == self.pos {
            return None;
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()?
            .parse()
            .ok()
    }
}

/// Decodes a PGM or PPM byte buffer. `path` is only used in error messages.
pub fn decode_pnm(bytes: &[u8], path: &Path) -> Result<Raster> {
    if bytes.len() < 2 || bytes[0] != b'P' {
        return Err(err(path, "not a netpbm file"));
    }
    let (channels, binary) = match bytes[1] {
        b'2' => (1, false),
        b'5' => (1, true),
        b'3' => (3, false),
        b'6' => (3, true),
        other => {
            return Err(err(
                path,
                format!("unsupported netpbm variant P{}", other as char),
            ))
        }
    };
    let mut cur = Cursor { bytes, pos: 2 };
    let mut header = |what: &str| cur_number(&mut cur, path, what);
    let width = header("width")? as usize;
    let height = header("height")? as usize;
    let maxval = header("maxval")?;
    if width == 0 || height == 0 {
        return Err(err(path, format!("empty image {width}x{height}")));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(err(path, format!("maxval {maxval} out of range")));
    }
    let count = width * height * channels;
    let mut samples = Vec::with_capacity(count);
    if binary {
        // exactly one whitespace byte separates the header from the raster
        cur.pos += 1;
        let wide = maxval > 255;
        let need = count * if wide { 2 } else { 1 };
        let body = bytes.get(cur.pos..).unwrap_or(&[]);
        if body.len() < need {
            return Err(err(
                path,
                format!("truncated raster: {} of {need} bytes", body.len()),
            ));
        }
        if wide {
            samples.extend(
                body[..need]
                    .chunks_exact(2)
                    .map(|c| u16::from_be_bytes([c[0], c[1]]) as u32),
            );
        } else {
            samples.extend(body[..need].iter().map(|&b| b as u32));
        }
    } else {
        for i in 0..count {
            let v = cur
                .number()
                .ok_or_else(|| err(path, format!("truncated raster: {i} of {count} samples")))?;
            samples.push(v);
        }
    }
    if let Some(v) = samples.iter().find(|&&v| v > maxval) {
        return Err(err(path, format!("sample {v} exceeds maxval {maxval}")));
    }
    let scale = 255.0 / maxval as f64;
    let to_real = |v: u32| v as f64 * scale;
    let too_small = || err(path, format!("image {width}x{height} is smaller than 2x2"));
    if channels == 1 {
        let data = samples.into_iter().map(to_real).collect();
        GrayImage::new(width, height, data)
            .map(Raster::Gray)
            .map_err(|_| too_small())
    } else {
        let data = samples
            .chunks_exact(3)
            .map(|c| [to_real(c[0]), to_real(c[1]), to_real(c[2])])
            .collect();
        RgbImage::new(width, height, data)
            .map(Raster::Rgb)
            .map_err(|_| too_small())
    }
}

fn cur_number(cur: &mut Cursor<'_>, path: &Path, what: &str) -> Result<u32> {
    cur.number()
        .ok_or_else(|| err(path, format!("missing or malformed {what} in header")))
}

fn quantize(v: f64) -> u8 {
    v.round().clamp(0.0, 255.0) as u8
}

/// Binary PGM, maxval 255; values are rounded and clamped to `[0, 255]`.
pub fn encode_pgm(img: &GrayImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend(img.data().iter().map(|&v| quantize(v)));
    out
}

/// Binary PPM, maxval 255.
pub fn encode_ppm(img: &RgbImage) -> Vec<u8> {
    let mut out = format!("P6\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend(img.pixels().iter().flatten().map(|&v| quantize(v)));
    out
}
