//! PSR1 raster files and 8-bit PNG previews.
//!
//! PSR1 layout: one ASCII header line `PSR1 <height> <width> <bands> <bit_depth>\n`
//! followed by `bands × height × width` little-endian f32 values, band-major and
//! row-major within each band. The payload holds digital numbers; loading divides
//! by `2^bit_depth − 1`. A bit depth of 0 marks a payload that is already
//! normalized and is stored verbatim.

use std::fs;
use std::path::Path;

use image::{DynamicImage, GrayImage, RgbImage};

use super::RasterStack;
use crate::error::{Error, Result};

const MAGIC: &str = "PSR1";
const MAX_HEADER: usize = 128;

fn dn_scale(bit_depth: u32) -> f64 {
    if bit_depth == 0 {
        1.0
    } else {
        ((1u64 << bit_depth) - 1) as f64
    }
}

pub fn load_raster(path: impl AsRef<Path>) -> Result<RasterStack> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let nl = bytes
        .iter()
        .take(MAX_HEADER)
        .position(|&b| b == b'\n')
        .ok_or_else(|| Error::format(path, "missing header line"))?;
    let header = std::str::from_utf8(&bytes[..nl])
        .map_err(|_| Error::format(path, "header is not ASCII"))?;
    let fields: Vec<&str> = header.split_ascii_whitespace().collect();
    if fields.len() != 5 || fields[0] != MAGIC {
        return Err(Error::format(path, format!("bad header {header:?}")));
    }
    let parse = |s: &str, what: &str| -> Result<usize> {
        s.parse::<usize>()
            .map_err(|_| Error::format(path, format!("bad {what} {s:?}")))
    };
    let height = parse(fields[1], "height")?;
    let width = parse(fields[2], "width")?;
    let bands = parse(fields[3], "bands")?;
    let bit_depth = parse(fields[4], "bit depth")?;
    if bands == 0 {
        return Err(Error::format(path, "band count 0"));
    }
    if bit_depth > 32 {
        return Err(Error::format(
            path,
            format!("bit depth {bit_depth} exceeds 32"),
        ));
    }
    let count = height
        .checked_mul(width)
        .and_then(|n| n.checked_mul(bands))
        .ok_or_else(|| Error::format(path, "dimensions overflow"))?;
    let payload = &bytes[nl + 1..];
    if payload.len() != count * 4 {
        return Err(Error::format(
            path,
            format!(
                "payload is {} bytes, header implies {}",
                payload.len(),
                count * 4
            ),
        ));
    }
    let scale = dn_scale(bit_depth as u32);
    let data: Vec<f32> = payload
        .chunks_exact(4)
        .map(|c| {
            let dn = f32::from_le_bytes([c[0], c[1], c[2], c[3]]);
            if bit_depth == 0 {
                dn
            } else {
                (dn as f64 / scale) as f32
            }
        })
        .collect();
    let stack = RasterStack::new(height, width, bands, data)
        .map_err(|e| Error::format(path, e.to_string()))?;
    Ok(stack.with_meta(bit_depth as u32, ""))
}

pub fn save_raster(stack: &RasterStack, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if stack.bit_depth > 32 {
        return Err(Error::InvalidArgument(format!(
            "bit depth {} exceeds 32",
            stack.bit_depth
        )));
    }
    let header = format!(
        "{MAGIC} {} {} {} {}\n",
        stack.height(),
        stack.width(),
        stack.bands(),
        stack.bit_depth
    );
    let mut out = Vec::with_capacity(header.len() + stack.data().len() * 4);
    out.extend_from_slice(header.as_bytes());
    let scale = dn_scale(stack.bit_depth);
    for &v in stack.data() {
        let dn = if stack.bit_depth == 0 {
            v
        } else {
            (v as f64 * scale) as f32
        };
        out.extend_from_slice(&dn.to_le_bytes());
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Zero-based band indices used for RGB previews.
///
/// Four-band imagery shows bands 3, 2, 1 and eight-band imagery bands 5, 3, 2
/// (one-based). Anything else shows the first three bands, or grey for fewer.
pub fn preview_bands(bands: usize) -> Vec<usize> {
    match bands {
        4 => vec![2, 1, 0],
        8 => vec![4, 2, 1],
        1 | 2 => vec![0],
        _ => vec![0, 1, 2],
    }
}

fn to_u8(v: f32) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

pub fn save_png(stack: &RasterStack, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let (h, w) = (stack.height() as u32, stack.width() as u32);
    let sel = preview_bands(stack.bands());
    let img = if sel.len() == 1 {
        let plane = stack.band(sel[0]);
        DynamicImage::ImageLuma8(GrayImage::from_fn(w, h, |x, y| {
            image::Luma([to_u8(plane[(y * w + x) as usize])])
        }))
    } else {
        DynamicImage::ImageRgb8(RgbImage::from_fn(w, h, |x, y| {
            let i = (y * w + x) as usize;
            image::Rgb([
                to_u8(stack.band(sel[0])[i]),
                to_u8(stack.band(sel[1])[i]),
                to_u8(stack.band(sel[2])[i]),
            ])
        }))
    };
    img.save_with_format(path, image::ImageFormat::Png)?;
    Ok(())
}

/// Load an 8-bit PNG as a 1-band (grey) or 3-band (RGB) raster.
pub fn load_png(path: impl AsRef<Path>) -> Result<RasterStack> {
    let path = path.as_ref();
    let img = image::open(path)?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    let stack = if img.color().has_color() {
        let rgb = img.to_rgb8();
        let mut planes: Vec<Vec<f32>> = (0..3).map(|_| Vec::with_capacity(h * w)).collect();
        for p in rgb.pixels() {
            for (c, plane) in planes.iter_mut().enumerate() {
                plane.push(p[c] as f32 / 255.0);
            }
        }
        RasterStack::from_planes(h, w, &planes)?
    } else {
        let g = img.to_luma8();
        RasterStack::new(h, w, 1, g.pixels().map(|p| p[0] as f32 / 255.0).collect())?
    };
    Ok(stack.with_meta(8, "png"))
}
