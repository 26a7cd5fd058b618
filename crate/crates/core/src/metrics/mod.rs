//! Fusion quality indices.
//!
//! Full-reference: PSNR, the universal image quality index Q, ERGAS, SAM and
//! the hypercomplex Q2ⁿ. No-reference: spectral distortion Dλ, spatial
//! distortion Ds and their combination QNR.

mod fullref;
mod hypercomplex;
mod noref;

pub use fullref::{ergas, psnr, q_index, sam, uiqi_q};
pub use hypercomplex::{cd_conj, cd_mul, q2n};
pub use noref::{d_lambda, d_s, qnr};

use serde::{Deserialize, Serialize, Serializer};

use crate::error::Result;
use crate::raster::{decimate, RasterStack};

/// Window and exponent conventions embedded in every report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricConventions {
    /// Q block side; blocks tile the image with stride equal to the side.
    pub q_window: usize,
    pub q2n_block: usize,
    /// Q window used inside Dλ and Ds, at both resolutions.
    pub noref_window: usize,
    pub psnr_peak: f64,
    pub sam_units: String,
    pub qnr_alpha: f64,
    pub qnr_beta: f64,
    pub d_lambda_p: f64,
    pub d_s_q: f64,
}

impl Default for MetricConventions {
    fn default() -> Self {
        Self {
            q_window: 32,
            q2n_block: 32,
            noref_window: 32,
            psnr_peak: 1.0,
            sam_units: "degrees".into(),
            qnr_alpha: 1.0,
            qnr_beta: 1.0,
            d_lambda_p: 1.0,
            d_s_q: 1.0,
        }
    }
}

fn serialize_db<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_infinite() {
        s.serialize_str(if *v > 0.0 { "inf" } else { "-inf" })
    } else {
        s.serialize_f64(*v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FullRefReport {
    /// dB; `f64::INFINITY` for identical images.
    #[serde(serialize_with = "serialize_db")]
    pub psnr: f64,
    pub q: f64,
    pub ergas: f64,
    pub sam: f64,
    pub q2n: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NoRefReport {
    pub qnr: f64,
    pub d_lambda: f64,
    pub d_s: f64,
}

pub fn full_reference(
    fused: &RasterStack,
    truth: &RasterStack,
    ratio: usize,
    conv: &MetricConventions,
) -> Result<FullRefReport> {
    fused.ensure_same_geometry(truth, "full-reference metrics")?;
    let sam_deg = if truth.bands() >= 2 {
        sam(fused, truth)?
    } else {
        0.0
    };
    Ok(FullRefReport {
        psnr: psnr(fused, truth)?,
        q: uiqi_q(fused, truth, conv.q_window)?,
        ergas: ergas(fused, truth, ratio)?,
        sam: sam_deg,
        q2n: q2n(fused, truth, conv.q2n_block)?,
    })
}

/// No-reference assessment of a full-resolution fusion. The low-resolution PAN
/// is derived by decimating `pan` by `ratio`.
pub fn no_reference(
    fused: &RasterStack,
    ms_low: &RasterStack,
    pan: &RasterStack,
    ratio: usize,
    conv: &MetricConventions,
) -> Result<NoRefReport> {
    let pan_low = decimate(pan, ratio)?;
    let dl = d_lambda(fused, ms_low, conv.noref_window)?;
    let ds = d_s(fused, ms_low, pan, &pan_low, conv.noref_window)?;
    Ok(NoRefReport {
        qnr: qnr(dl, ds)?,
        d_lambda: dl,
        d_s: ds,
    })
}
