//! XGRD gradient rasters: `"XGRD"`, then little-endian u32 width, height and a
//! reserved zero, then width·height little-endian f32 values in row-major order.

use std::path::{Path, PathBuf};

use cxrsev_core::saliency::GradientRaster;
use cxrsev_core::Task;

use crate::error::{read_file, write_file, Error, Result};

pub const MAGIC: &[u8; 4] = b"XGRD";
pub const HEADER_LEN: usize = 16;

pub fn encode_xgrd(width: usize, height: usize, values: &[f32]) -> Result<Vec<u8>> {
    if values.len() != width * height {
        return Err(Error::format(
            "xgrd",
            format!("{} values for a {width}x{height} raster", values.len()),
        ));
    }
    let dim = |v: usize| u32::try_from(v).map_err(|_| Error::format("xgrd", format!("dimension {v} too large")));
    let mut out = Vec::with_capacity(HEADER_LEN + 4 * values.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&dim(width)?.to_le_bytes());
    out.extend_from_slice(&dim(height)?.to_le_bytes());
    out.extend_from_slice(&0u32.to_le_bytes());
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

/// Returns (width, height, values).
pub fn decode_xgrd(bytes: &[u8], source_name: &str) -> Result<(usize, usize, Vec<f32>)> {
    let bad = |m: String| Error::format(source_name, m);
    if bytes.len() < HEADER_LEN {
        return Err(bad(format!("{} bytes is shorter than the {HEADER_LEN}-byte header", bytes.len())));
    }
    if &bytes[..4] != MAGIC {
        return Err(bad(format!("bad magic {:?}, expected \"XGRD\"", String::from_utf8_lossy(&bytes[..4]))));
    }
    let word = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap()) as usize;
    let (width, height) = (word(4), word(8));
    let expected = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(4))
        .and_then(|n| n.checked_add(HEADER_LEN))
        .ok_or_else(|| bad(format!("header size {width}x{height} overflows")))?;
    if bytes.len() != expected {
        return Err(bad(format!(
            "size mismatch: header {width}x{height} needs {expected} bytes, file has {}",
            bytes.len()
        )));
    }
    let values: Vec<f32> = bytes[HEADER_LEN..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(bad(format!("non-finite value at pixel ({}, {})", i % width, i / width)));
    }
    Ok((width, height, values))
}

pub fn load_gradient_raster(path: &Path, image_id: &str, task: Task) -> Result<GradientRaster> {
    let (width, height, values) = decode_xgrd(&read_file(path)?, &path.display().to_string())?;
    Ok(GradientRaster {
        image_id: image_id.to_string(),
        task,
        width,
        height,
        values,
    })
}

pub fn store_gradient_raster(path: &Path, raster: &GradientRaster) -> Result<()> {
    write_file(path, &encode_xgrd(raster.width, raster.height, &raster.values)?)
}

/// Where a raster lives inside a gradients directory: `<dir>/<image_id>.<task>.xgrd`.
pub fn raster_path(dir: &Path, image_id: &str, task: Task) -> PathBuf {
    dir.join(format!("{image_id}.{}.xgrd", task.name()))
}
