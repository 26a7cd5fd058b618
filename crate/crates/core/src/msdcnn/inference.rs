//! Whole-image and tiled inference.
//!
//! Tiles are padded by the network's receptive-field radius on every side that
//! is not an image border, and only their interiors are written back. Because
//! every convolution sums its taps in a fixed order and skips out-of-image taps,
//! tiled output is bit-identical to a single whole-image pass.

use super::network::forward;
use super::params::ParamSet;
use super::spec::NetworkSpec;
use crate::error::{Error, Result};
use crate::nn::Tensor;
use crate::raster::{bicubic_resize, RasterStack};

#[derive(Debug, Clone, Copy)]
pub struct InferenceOptions {
    /// Side of the interior region written per tile.
    pub tile: usize,
    /// Images with at most this many pixels run in one pass.
    pub max_pixels: usize,
}

impl Default for InferenceOptions {
    fn default() -> Self {
        Self {
            tile: 256,
            max_pixels: 512 * 512,
        }
    }
}

pub fn infer_tiled(
    g: &Tensor<f32>,
    spec: &NetworkSpec,
    params: &ParamSet<f32>,
    tile: usize,
) -> Result<Tensor<f32>> {
    if tile == 0 {
        return Err(Error::InvalidArgument("tile side must be positive".into()));
    }
    let (h, w, _) = g.shape();
    let halo = spec.receptive_radius();
    let s = spec.bands;
    let mut out = Tensor::zeros(h, w, s);
    for ty in (0..h).step_by(tile) {
        let ty1 = (ty + tile).min(h);
        let cy0 = ty.saturating_sub(halo);
        let cy1 = (ty1 + halo).min(h);
        for tx in (0..w).step_by(tile) {
            let tx1 = (tx + tile).min(w);
            let cx0 = tx.saturating_sub(halo);
            let cx1 = (tx1 + halo).min(w);
            let crop = g.crop(cy0, cx0, cy1 - cy0, cx1 - cx0)?;
            let y = forward(&crop, spec, params)?;
            let cw = cx1 - cx0;
            for yy in ty..ty1 {
                let src = ((yy - cy0) * cw + (tx - cx0)) * s;
                let dst = (yy * w + tx) * s;
                let n = (tx1 - tx) * s;
                out.values_mut()[dst..dst + n].copy_from_slice(&y.values()[src..src + n]);
            }
        }
    }
    Ok(out)
}

/// Fuse low-resolution MS with PAN: bicubic upsampling, PAN concatenation and
/// a network pass (tiled when the image exceeds the budget).
pub fn sharpen_msdcnn(
    ms_low: &RasterStack,
    pan: &RasterStack,
    spec: &NetworkSpec,
    params: &ParamSet<f32>,
    opts: InferenceOptions,
) -> Result<RasterStack> {
    if ms_low.bands() != spec.bands {
        return Err(Error::Geometry(format!(
            "checkpoint expects {} bands, MS image has {}",
            spec.bands,
            ms_low.bands()
        )));
    }
    if pan.bands() != 1 {
        return Err(Error::Geometry("PAN must be single-band".into()));
    }
    let ms_up = bicubic_resize(ms_low, pan.height(), pan.width())?;
    let g = Tensor::from_raster(&RasterStack::concat_bands(&[&ms_up, pan])?);
    let y = if pan.pixels() > opts.max_pixels {
        infer_tiled(&g, spec, params, opts.tile)?
    } else {
        forward(&g, spec, params)?
    };
    Ok(y.to_raster()?
        .with_meta(ms_low.bit_depth, ms_low.sensor_tag.clone()))
}
