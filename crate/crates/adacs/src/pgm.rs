//! Binary 8-bit PGM (`P5`) reading and writing.
//!
//! Output always uses the canonical header `P5\n<W> <H>\n255\n`. Input may
//! use any whitespace and `#` comments in the header, as netpbm allows.

use std::fs;
use std::path::Path;

use adacs_core::image::to_byte;
use adacs_core::{AdaptiveMask, Image, PatchGrid};

use crate::error::{Error, Result};

struct Header {
    width: usize,
    height: usize,
    maxval: usize,
    data_start: usize,
}

fn parse_header(bytes: &[u8], path: &Path) -> Result<Header> {
    let format = |msg: &str| Error::Format {
        path: path.to_path_buf(),
        msg: msg.to_string(),
    };
    if bytes.len() < 2 || &bytes[..2] != b"P5" {
        return Err(format("missing P5 magic number"));
    }
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for field in fields.iter_mut() {
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&b| b != b'\n') {
                        pos += 1;
                    }
                }
                Some(_) => break,
                None => return Err(format("header ends early")),
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        if start == pos {
            return Err(format("expected a decimal header field"));
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| format("header field out of range"))?;
    }
    match bytes.get(pos) {
        Some(b) if b.is_ascii_whitespace() => pos += 1,
        _ => return Err(format("missing whitespace after maxval")),
    }
    let [width, height, maxval] = fields;
    if width == 0 || height == 0 {
        return Err(format("zero image dimension"));
    }
    Ok(Header {
        width,
        height,
        maxval,
        data_start: pos,
    })
}

pub fn decode_pgm(bytes: &[u8], path: &Path) -> Result<Image> {
    let header = parse_header(bytes, path)?;
    if header.maxval != 255 {
        return Err(Error::Unsupported {
            path: path.to_path_buf(),
            msg: format!("maxval {} (only 255 is supported)", header.maxval),
        });
    }
    let count = header.width * header.height;
    let payload = &bytes[header.data_start..];
    if payload.len() < count {
        return Err(Error::io(
            path,
            std::io::Error::new(
                std::io::ErrorKind::UnexpectedEof,
                format!(
                    "truncated payload: expected {count} bytes, found {}",
                    payload.len()
                ),
            ),
        ));
    }
    let data = payload[..count].iter().map(|&b| f64::from(b)).collect();
    Ok(Image::new(header.height, header.width, data)?)
}

pub fn encode_pgm(img: &Image) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend(img.data().iter().map(|&v| to_byte(v)));
    out
}

pub fn load_pgm(path: impl AsRef<Path>) -> Result<Image> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_pgm(&bytes, path)
}

/// Writes `img` rounded half away from zero and clamped to `[0, 255]`.
pub fn save_pgm(img: &Image, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_pgm(img)).map_err(|e| Error::io(path, e))
}

/// Writes the pixel expansion of `mask`: 255 for selected patches, 0 elsewhere.
pub fn save_mask_pgm(mask: &AdaptiveMask, grid: &PatchGrid, path: impl AsRef<Path>) -> Result<()> {
    let expanded = adacs_core::patching::expand_mask(&mask.bits, grid)?;
    save_pgm(&expanded.map(|v| v * 255.0), path)
}
