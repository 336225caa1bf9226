//! Binary 8-bit portable graymap (P5).

use std::path::Path;

use cxrsev_core::saliency::GrayImage;

use crate::error::{read_file, write_file, Error, Result};

pub fn encode_pgm(img: &GrayImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.width, img.height).into_bytes();
    out.extend_from_slice(&img.pixels);
    out
}

/// Reads a P5 file with maxval 255. Comments in the header are allowed.
pub fn decode_pgm(bytes: &[u8], source_name: &str) -> Result<GrayImage> {
    let bad = |m: &str| Error::format(source_name, m.to_string());
    if !bytes.starts_with(b"P5") {
        return Err(bad("not a binary graymap (missing P5 magic)"));
    }
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for field in fields.iter_mut() {
        loop {
            match bytes.get(pos) {
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&b| b != b'\n') {
                        pos += 1;
                    }
                }
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                _ => break,
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| bad("malformed header"))?;
    }
    // Exactly one whitespace byte separates the header from the raster.
    if !bytes.get(pos).is_some_and(u8::is_ascii_whitespace) {
        return Err(bad("malformed header"));
    }
    pos += 1;
    let [width, height, maxval] = fields;
    if maxval != 255 {
        return Err(bad("only maxval 255 is supported"));
    }
    let pixels = &bytes[pos..];
    if pixels.len() != width * height {
        return Err(Error::format(
            source_name,
            format!("raster has {} bytes, header needs {}", pixels.len(), width * height),
        ));
    }
    Ok(GrayImage {
        width,
        height,
        pixels: pixels.to_vec(),
        degenerate: false,
    })
}

pub fn write_pgm(path: &Path, img: &GrayImage) -> Result<()> {
    write_file(path, &encode_pgm(img))
}

pub fn read_pgm(path: &Path) -> Result<GrayImage> {
    decode_pgm(&read_file(path)?, &path.display().to_string())
}
