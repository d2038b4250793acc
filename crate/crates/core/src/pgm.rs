//! Portable graymap (PGM) reading and writing.
//!
//! Scenes, patterns, and reconstructed images travel as P2 (ASCII) or P5
//! (binary) graymaps so external tools can inspect them. Only single-byte
//! rasters (maxval <= 255) are written; both forms are read back.

use std::fs;
use std::path::Path;

use ndarray::Array2;

use crate::error::{Error, Result};

/// A decoded graymap raster with row-major pixels in 0..=maxval.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pgm {
    pub width: usize,
    pub height: usize,
    pub maxval: u16,
    pub pixels: Vec<u16>,
}

impl Pgm {
    /// Wraps an 8-bit image matrix as a full-range graymap.
    pub fn from_gray(image: &Array2<u8>) -> Pgm {
        let (height, width) = image.dim();
        Pgm {
            width,
            height,
            maxval: 255,
            pixels: image.iter().map(|&v| u16::from(v)).collect(),
        }
    }

    /// View of the raster as a matrix, failing if sizes disagree.
    pub fn to_matrix(&self) -> Result<Array2<u16>> {
        Array2::from_shape_vec((self.height, self.width), self.pixels.clone())
            .map_err(|e| Error::Format(format!("raster size mismatch: {e}")))
    }
}

/// Serializes as ASCII P2 with one raster row per line.
pub fn encode_p2(pgm: &Pgm) -> String {
    let mut out = format!("P2\n{} {}\n{}\n", pgm.width, pgm.height, pgm.maxval);
    for row in pgm.pixels.chunks(pgm.width.max(1)) {
        let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

/// Serializes as binary P5. Requires maxval <= 255.
pub fn encode_p5(pgm: &Pgm) -> Result<Vec<u8>> {
    if pgm.maxval > 255 {
        return Err(Error::InvalidArgument(
            "binary graymaps are written with maxval <= 255".into(),
        ));
    }
    let mut out = format!("P5\n{} {}\n{}\n", pgm.width, pgm.height, pgm.maxval).into_bytes();
    out.extend(pgm.pixels.iter().map(|&v| v as u8));
    Ok(out)
}

pub fn write(path: &Path, pgm: &Pgm, binary: bool) -> Result<()> {
    if pgm.pixels.len() != pgm.width * pgm.height {
        return Err(Error::InvalidArgument(format!(
            "raster holds {} pixels for a {}x{} image",
            pgm.pixels.len(),
            pgm.width,
            pgm.height
        )));
    }
    if binary {
        fs::write(path, encode_p5(pgm)?)?;
    } else {
        fs::write(path, encode_p2(pgm))?;
    }
    Ok(())
}

pub fn read(path: &Path) -> Result<Pgm> {
    decode(&fs::read(path)?)
}

/// Parses either P2 or P5 bytes, honoring `#` comments in the header.
pub fn decode(data: &[u8]) -> Result<Pgm> {
    let magic = data.get(..2).ok_or_else(|| Error::Format("empty graymap".into()))?;
    let binary = match magic {
        b"P2" => false,
        b"P5" => true,
        _ => return Err(Error::Format("expected P2 or P5 magic".into())),
    };

    let mut pos = 2;
    let mut header = [0usize; 3];
    for slot in header.iter_mut() {
        *slot = read_header_int(data, &mut pos)?;
    }
    let (width, height, maxval) = (header[0], header[1], header[2]);
    if width == 0 || height == 0 || maxval == 0 || maxval > 65535 {
        return Err(Error::Format(format!(
            "bad graymap geometry {width}x{height} maxval {maxval}"
        )));
    }
    let count = width * height;

    let pixels = if binary {
        // One whitespace byte separates the header from the raster.
        pos += 1;
        if maxval > 255 {
            return Err(Error::Format("two-byte binary rasters unsupported".into()));
        }
        let raster = data
            .get(pos..pos + count)
            .ok_or_else(|| Error::Format("binary raster truncated".into()))?;
        raster.iter().map(|&b| u16::from(b)).collect()
    } else {
        let mut pixels = Vec::with_capacity(count);
        for _ in 0..count {
            pixels.push(read_header_int(data, &mut pos)? as u16);
        }
        pixels
    };
    if pixels.iter().any(|&v| v > maxval as u16) {
        return Err(Error::Format("pixel exceeds declared maxval".into()));
    }
    Ok(Pgm {
        width,
        height,
        maxval: maxval as u16,
        pixels,
    })
}

/// Reads the next whitespace-delimited integer, skipping `#` comments.
fn read_header_int(data: &[u8], pos: &mut usize) -> Result<usize> {
    loop {
        match data.get(*pos) {
            Some(b) if b.is_ascii_whitespace() => *pos += 1,
            Some(b'#') => {
                while *pos < data.len() && data[*pos] != b'\n' {
                    *pos += 1;
                }
            }
            Some(b) if b.is_ascii_digit() => break,
            Some(b) => {
                return Err(Error::Format(format!("unexpected byte {b:#x} in header")))
            }
            None => return Err(Error::Format("graymap header truncated".into())),
        }
    }
    let mut value = 0usize;
    while let Some(&b) = data.get(*pos) {
        if !b.is_ascii_digit() {
            break;
        }
        value = value
            .checked_mul(10)
            .and_then(|v| v.checked_add((b - b'0') as usize))
            .ok_or_else(|| Error::Format("header value overflow".into()))?;
        *pos += 1;
    }
    Ok(value)
}
