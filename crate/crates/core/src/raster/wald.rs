//! Reduced-resolution simulation and training-patch extraction.
//!
//! The original MS image becomes the reference; MS and PAN are both degraded by
//! the sensor ratio so the network learns the same scale relation it will see
//! at full resolution.

use super::{bicubic_resize, decimate, RasterStack};
use crate::error::{Error, Result};

/// Outputs of [`wald_simulate`], all on the grid of the reference MS image
/// except `ms_low`.
#[derive(Debug, Clone)]
pub struct WaldTriple {
    pub ms_low: RasterStack,
    pub ms_up: RasterStack,
    pub pan: RasterStack,
    pub truth: RasterStack,
}

pub fn wald_simulate(
    ms_truth: &RasterStack,
    pan_full: &RasterStack,
    ratio: usize,
) -> Result<WaldTriple> {
    if pan_full.bands() != 1 {
        return Err(Error::Geometry(format!(
            "PAN must be single-band, got {} bands",
            pan_full.bands()
        )));
    }
    if pan_full.height() != ms_truth.height() * ratio
        || pan_full.width() != ms_truth.width() * ratio
    {
        return Err(Error::Geometry(format!(
            "PAN {}×{} is not {ratio}× the MS {}×{}",
            pan_full.height(),
            pan_full.width(),
            ms_truth.height(),
            ms_truth.width()
        )));
    }
    let ms_low = decimate(ms_truth, ratio)?;
    let ms_up = bicubic_resize(&ms_low, ms_truth.height(), ms_truth.width())?;
    let pan = decimate(pan_full, ratio)?;
    Ok(WaldTriple {
        ms_low,
        ms_up,
        pan,
        truth: ms_truth.clone(),
    })
}

/// One training sample: upsampled MS plus PAN as the last band, and the reference MS.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchPair {
    pub input: RasterStack,
    pub target: RasterStack,
}

impl PatchPair {
    pub fn new(input: RasterStack, target: RasterStack) -> Result<Self> {
        if input.bands() != target.bands() + 1 {
            return Err(Error::Shape(format!(
                "patch input has {} bands, target {}; expected input = target + 1",
                input.bands(),
                target.bands()
            )));
        }
        if input.height() != input.width()
            || input.height() != target.height()
            || input.width() != target.width()
        {
            return Err(Error::Shape(
                "patch input and target must be equal squares".into(),
            ));
        }
        Ok(Self { input, target })
    }

    pub fn side(&self) -> usize {
        self.input.height()
    }
}

/// Number of windows of side `patch` at `stride` along an axis of length `size`.
pub fn window_count(size: usize, patch: usize, stride: usize) -> usize {
    if patch > size || stride == 0 {
        0
    } else {
        (size - patch) / stride + 1
    }
}

/// Sliding-window crops in row-major window order; windows overrunning the
/// border are dropped.
pub fn extract_patches(
    ms_up: &RasterStack,
    pan: &RasterStack,
    truth: &RasterStack,
    patch: usize,
    stride: usize,
) -> Result<Vec<PatchPair>> {
    if pan.bands() != 1 {
        return Err(Error::Geometry("PAN must be single-band".into()));
    }
    if ms_up.height() != pan.height() || ms_up.width() != pan.width() {
        return Err(Error::Geometry("MS and PAN grids differ".into()));
    }
    ms_up.ensure_same_geometry(truth, "upsampled MS vs reference")?;
    if stride == 0 || patch == 0 {
        return Err(Error::InvalidArgument(
            "patch and stride must be positive".into(),
        ));
    }
    if patch > ms_up.height() || patch > ms_up.width() {
        return Err(Error::Geometry(format!(
            "patch {patch} larger than image {}×{}",
            ms_up.height(),
            ms_up.width()
        )));
    }
    let ny = window_count(ms_up.height(), patch, stride);
    let nx = window_count(ms_up.width(), patch, stride);
    let mut out = Vec::with_capacity(ny * nx);
    for iy in 0..ny {
        for ix in 0..nx {
            let (y0, x0) = (iy * stride, ix * stride);
            let ms = ms_up.crop(y0, x0, patch, patch)?;
            let p = pan.crop(y0, x0, patch, patch)?;
            let input = RasterStack::concat_bands(&[&ms, &p])?;
            let target = truth.crop(y0, x0, patch, patch)?;
            out.push(PatchPair { input, target });
        }
    }
    Ok(out)
}
