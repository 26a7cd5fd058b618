use crate::error::{Error, Result};
use crate::metrics::q_index;
use crate::raster::RasterStack;

/// Spectral distortion: mean absolute change of the inter-band Q matrix
/// between the low-resolution MS and the fusion.
pub fn d_lambda(fused: &RasterStack, ms_low: &RasterStack, window: usize) -> Result<f64> {
    let s = fused.bands();
    if s < 2 {
        return Err(Error::InvalidArgument("Dλ needs at least two bands".into()));
    }
    if ms_low.bands() != s {
        return Err(Error::Geometry(format!(
            "fused has {s} bands, MS has {}",
            ms_low.bands()
        )));
    }
    let (fh, fw) = (fused.height(), fused.width());
    let (lh, lw) = (ms_low.height(), ms_low.width());
    let mut acc = 0.0;
    for i in 0..s {
        for j in i + 1..s {
            let qf = q_index(fused.band(i), fused.band(j), fh, fw, window)?;
            let ql = q_index(ms_low.band(i), ms_low.band(j), lh, lw, window)?;
            // Q is symmetric so each unordered pair stands for two terms
            acc += 2.0 * (qf - ql).abs();
        }
    }
    Ok(acc / (s * (s - 1)) as f64)
}

/// Spatial distortion: mean absolute change of each band's Q against PAN
/// between the low and full resolutions.
pub fn d_s(
    fused: &RasterStack,
    ms_low: &RasterStack,
    pan: &RasterStack,
    pan_low: &RasterStack,
    window: usize,
) -> Result<f64> {
    if pan.bands() != 1 || pan_low.bands() != 1 {
        return Err(Error::Geometry("PAN inputs must be single-band".into()));
    }
    if (pan.height(), pan.width()) != (fused.height(), fused.width()) {
        return Err(Error::Geometry("PAN and fusion grids differ".into()));
    }
    if (pan_low.height(), pan_low.width()) != (ms_low.height(), ms_low.width()) {
        return Err(Error::Geometry(
            "low-resolution PAN and MS grids differ".into(),
        ));
    }
    let s = fused.bands();
    if ms_low.bands() != s {
        return Err(Error::Geometry(format!(
            "fused has {s} bands, MS has {}",
            ms_low.bands()
        )));
    }
    let (fh, fw) = (fused.height(), fused.width());
    let (lh, lw) = (ms_low.height(), ms_low.width());
    let mut acc = 0.0;
    for i in 0..s {
        let qf = q_index(fused.band(i), pan.band(0), fh, fw, window)?;
        let ql = q_index(ms_low.band(i), pan_low.band(0), lh, lw, window)?;
        acc += (qf - ql).abs();
    }
    Ok(acc / s as f64)
}

pub fn qnr(d_lambda: f64, d_s: f64) -> Result<f64> {
    for (name, v) in [("Dλ", d_lambda), ("Ds", d_s)] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::InvalidArgument(format!(
                "{name} = {v} outside [0, 1]"
            )));
        }
    }
    Ok((1.0 - d_lambda) * (1.0 - d_s))
}
