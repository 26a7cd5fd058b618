//! Bicubic resampling, anti-aliased decimation and box smoothing.
//!
//! All filters clamp sample coordinates to the image, i.e. borders are
//! extended by replication.

use super::RasterStack;
use crate::error::{Error, Result};
use crate::par;

const CATMULL_ROM_A: f64 = -0.5;

/// Cubic convolution kernel with `a = -0.5`.
fn cubic(t: f64) -> f64 {
    let a = CATMULL_ROM_A;
    let t = t.abs();
    if t <= 1.0 {
        ((a + 2.0) * t - (a + 3.0)) * t * t + 1.0
    } else if t < 2.0 {
        ((a * t - 5.0 * a) * t + 8.0 * a) * t - 4.0 * a
    } else {
        0.0
    }
}

#[derive(Clone, Copy)]
struct Taps {
    idx: [usize; 4],
    w: [f64; 4],
}

/// Pixel-center aligned source taps for every output coordinate.
fn cubic_taps(n_in: usize, n_out: usize) -> Vec<Taps> {
    let scale = n_in as f64 / n_out as f64;
    let last = n_in as isize - 1;
    (0..n_out)
        .map(|o| {
            let src = (o as f64 + 0.5) * scale - 0.5;
            let base = src.floor();
            let frac = src - base;
            let base = base as isize;
            let mut t = Taps {
                idx: [0; 4],
                w: [0.0; 4],
            };
            for k in 0..4 {
                let off = k as isize - 1;
                t.idx[k] = (base + off).clamp(0, last) as usize;
                t.w[k] = cubic(frac - off as f64);
            }
            t
        })
        .collect()
}

/// Resize every band independently with the Catmull-Rom cubic kernel.
pub fn bicubic_resize(
    stack: &RasterStack,
    new_height: usize,
    new_width: usize,
) -> Result<RasterStack> {
    if new_height == 0 || new_width == 0 {
        return Err(Error::InvalidArgument(format!(
            "target size {new_height}×{new_width} must be ≥ 1"
        )));
    }
    let (h, w) = (stack.height(), stack.width());
    let xt = cubic_taps(w, new_width);
    let yt = cubic_taps(h, new_height);
    let plane_out = new_height * new_width;
    let mut out = vec![0f32; plane_out * stack.bands()];
    for b in 0..stack.bands() {
        let src = stack.band(b);
        // horizontal pass, kept in f64 to avoid a second rounding
        let mut tmp = vec![0f64; h * new_width];
        par::for_each_chunk_mut(&mut tmp, new_width, |y, row| {
            let line = &src[y * w..(y + 1) * w];
            for (x, t) in xt.iter().enumerate() {
                let mut acc = 0.0;
                for k in 0..4 {
                    acc += t.w[k] * line[t.idx[k]] as f64;
                }
                row[x] = acc;
            }
        });
        par::for_each_chunk_mut(
            &mut out[b * plane_out..(b + 1) * plane_out],
            new_width,
            |y, row| {
                let t = &yt[y];
                for (x, v) in row.iter_mut().enumerate() {
                    let mut acc = 0.0;
                    for k in 0..4 {
                        acc += t.w[k] * tmp[t.idx[k] * new_width + x];
                    }
                    *v = acc as f32;
                }
            },
        );
    }
    Ok(RasterStack::from_parts_unchecked(
        new_height,
        new_width,
        stack.bands(),
        out,
        stack,
    ))
}

/// Normalized 1-D Gaussian taps for decimation by `ratio`: σ = ratio/2 and
/// half-width ceil(2σ), so the kernel side is `2·ceil(2σ) + 1`.
pub fn gaussian_taps(ratio: usize) -> Vec<f64> {
    let sigma = ratio as f64 / 2.0;
    let radius = (2.0 * sigma).ceil() as isize;
    let raw: Vec<f64> = (-radius..=radius)
        .map(|k| (-((k * k) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / sum).collect()
}

/// Gaussian low-pass followed by taking every `ratio`-th pixel from index 0.
pub fn decimate(stack: &RasterStack, ratio: usize) -> Result<RasterStack> {
    if ratio < 2 {
        return Err(Error::InvalidArgument(format!(
            "decimation ratio {ratio} must be ≥ 2"
        )));
    }
    let (h, w) = (stack.height(), stack.width());
    if h % ratio != 0 || w % ratio != 0 {
        return Err(Error::Geometry(format!(
            "{h}×{w} is not divisible by ratio {ratio}"
        )));
    }
    let taps = gaussian_taps(ratio);
    let radius = (taps.len() / 2) as isize;
    let (oh, ow) = (h / ratio, w / ratio);
    let plane_out = oh * ow;
    let mut out = vec![0f32; plane_out * stack.bands()];
    for b in 0..stack.bands() {
        let src = stack.band(b);
        par::for_each_chunk_mut(
            &mut out[b * plane_out..(b + 1) * plane_out],
            ow,
            |oy, row| {
                let cy = (oy * ratio) as isize;
                for (ox, v) in row.iter_mut().enumerate() {
                    let cx = (ox * ratio) as isize;
                    let mut acc = 0.0f64;
                    for (i, wy) in taps.iter().enumerate() {
                        let yy = (cy + i as isize - radius).clamp(0, h as isize - 1) as usize;
                        for (j, wx) in taps.iter().enumerate() {
                            let xx = (cx + j as isize - radius).clamp(0, w as isize - 1) as usize;
                            acc += wy * wx * src[yy * w + xx] as f64;
                        }
                    }
                    *v = acc as f32;
                }
            },
        );
    }
    Ok(RasterStack::from_parts_unchecked(
        oh,
        ow,
        stack.bands(),
        out,
        stack,
    ))
}

/// Edge-clamped mean over a `side × side` window centered on each pixel.
pub fn box_filter(plane: &[f32], height: usize, width: usize, side: usize) -> Result<Vec<f64>> {
    if side == 0 || side.is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!(
            "box filter side {side} must be odd"
        )));
    }
    if plane.len() != height * width {
        return Err(Error::Shape(format!(
            "plane has {} values, expected {height}×{width}",
            plane.len()
        )));
    }
    let r = (side / 2) as isize;
    let norm = (side * side) as f64;
    let mut out = vec![0f64; height * width];
    par::for_each_chunk_mut(&mut out, width, |y, row| {
        for (x, v) in row.iter_mut().enumerate() {
            let mut acc = 0.0;
            for dy in -r..=r {
                let yy = (y as isize + dy).clamp(0, height as isize - 1) as usize;
                for dx in -r..=r {
                    let xx = (x as isize + dx).clamp(0, width as isize - 1) as usize;
                    acc += plane[yy * width + xx] as f64;
                }
            }
            *v = acc / norm;
        }
    });
    Ok(out)
}
