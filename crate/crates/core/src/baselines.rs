//! Classical reference fusions: plain bicubic upsampling and SFIM.

use crate::error::{Error, Result};
use crate::raster::{bicubic_resize, box_filter, RasterStack};

/// Pixels whose smoothed PAN falls below this keep the unfused band.
pub const SFIM_FLOOR: f64 = 1e-6;

/// Bicubic upsampling of the MS stack by `ratio`; PAN is never consulted.
pub fn bicubic_baseline(ms_low: &RasterStack, ratio: usize) -> Result<RasterStack> {
    if ratio < 2 {
        return Err(Error::InvalidArgument(format!(
            "bicubic ratio must be at least 2, got {ratio}"
        )));
    }
    bicubic_resize(ms_low, ms_low.height() * ratio, ms_low.width() * ratio)
}

/// Default SFIM smoothing side for a resolution ratio.
pub fn sfim_side(ratio: usize) -> usize {
    2 * ratio.max(1) - 1
}

/// Smoothing-filter-based intensity modulation:
/// `fused_i = ms_up_i · pan / box(pan)`.
pub fn sfim(ms_up: &RasterStack, pan: &RasterStack, smooth_side: usize) -> Result<RasterStack> {
    if pan.bands() != 1 {
        return Err(Error::Geometry(format!(
            "PAN must be single-band, got {} bands",
            pan.bands()
        )));
    }
    let (h, w) = (ms_up.height(), ms_up.width());
    if (pan.height(), pan.width()) != (h, w) {
        return Err(Error::Geometry(format!(
            "PAN {}×{} does not match MS {h}×{w}",
            pan.height(),
            pan.width()
        )));
    }
    let smooth = box_filter(pan.band(0), h, w, smooth_side)?;
    let ratio: Vec<Option<f64>> = pan
        .band(0)
        .iter()
        .zip(&smooth)
        .map(|(&p, &s)| (s >= SFIM_FLOOR).then(|| p as f64 / s))
        .collect();
    let mut out = ms_up.clone();
    for b in 0..out.bands() {
        for (v, r) in out.band_mut(b).iter_mut().zip(&ratio) {
            if let Some(r) = r {
                *v = (*v as f64 * r) as f32;
            }
        }
    }
    Ok(out)
}
