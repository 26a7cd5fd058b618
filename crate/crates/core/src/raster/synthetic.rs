//! Procedural multi-band scenes for desk-scale experiments.
//!
//! A scene is rendered at PAN resolution as a sum of planar gradients,
//! checkerboards and Gaussian blobs, each with its own per-band spectral
//! weights. The MS image is the decimated rendering and the PAN image is the
//! band mean at full resolution.

use rand::RngExt;

use super::{decimate, RasterStack};
use crate::error::Result;
use crate::rng::prng;

#[derive(Debug, Clone)]
pub struct SyntheticScene {
    pub ms: RasterStack,
    pub pan: RasterStack,
}

struct Checker {
    period: f64,
    ox: f64,
    oy: f64,
    weights: Vec<f64>,
}

struct Blob {
    cx: f64,
    cy: f64,
    sigma: f64,
    weights: Vec<f64>,
}

/// Render an MS scene of `height × width × bands` with a PAN image `ratio` times larger.
pub fn synthetic_scene(
    height: usize,
    width: usize,
    bands: usize,
    ratio: usize,
    seed: u64,
) -> Result<SyntheticScene> {
    let mut rng = prng(seed);
    let (hh, hw) = (height * ratio, width * ratio);
    let spectral = |rng: &mut crate::rng::Prng, scale: f64| -> Vec<f64> {
        (0..bands)
            .map(|_| scale * (0.4 + 0.6 * rng.random::<f64>()))
            .collect()
    };
    let grad_x: Vec<f64> = (0..bands).map(|_| rng.random::<f64>() - 0.5).collect();
    let grad_y: Vec<f64> = (0..bands).map(|_| rng.random::<f64>() - 0.5).collect();
    let checkers: Vec<Checker> = (0..3)
        .map(|_| Checker {
            period: (8.0 + 40.0 * rng.random::<f64>()) * ratio as f64 / 4.0,
            ox: rng.random::<f64>() * hw as f64,
            oy: rng.random::<f64>() * hh as f64,
            weights: spectral(&mut rng, 0.25),
        })
        .collect();
    let n_blobs = 12 + (height * width) / 4096;
    let blobs: Vec<Blob> = (0..n_blobs)
        .map(|_| {
            let cx = rng.random::<f64>() * hw as f64;
            let cy = rng.random::<f64>() * hh as f64;
            let sigma = (3.0 + 12.0 * rng.random::<f64>()) * ratio as f64;
            let amp = if rng.random::<bool>() { 0.5 } else { -0.5 };
            Blob {
                cx,
                cy,
                sigma,
                weights: spectral(&mut rng, amp),
            }
        })
        .collect();

    let plane = hh * hw;
    let mut raw = vec![0f64; plane * bands];
    for y in 0..hh {
        let fy = y as f64 / hh as f64;
        for x in 0..hw {
            let fx = x as f64 / hw as f64;
            for b in 0..bands {
                let mut v = grad_x[b] * fx + grad_y[b] * fy;
                for c in &checkers {
                    let cx = ((x as f64 + c.ox) / c.period).floor() as i64;
                    let cy = ((y as f64 + c.oy) / c.period).floor() as i64;
                    if (cx + cy).rem_euclid(2) == 0 {
                        v += c.weights[b];
                    }
                }
                for bl in &blobs {
                    let d2 = (x as f64 - bl.cx).powi(2) + (y as f64 - bl.cy).powi(2);
                    v += bl.weights[b] * (-d2 / (2.0 * bl.sigma * bl.sigma)).exp();
                }
                raw[b * plane + y * hw + x] = v;
            }
        }
    }
    let (lo, hi) = raw
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| {
            (l.min(v), h.max(v))
        });
    let span = (hi - lo).max(1e-12);
    let hires: Vec<f32> = raw
        .iter()
        .map(|&v| (0.05 + 0.9 * (v - lo) / span) as f32)
        .collect();
    let pan: Vec<f32> = (0..plane)
        .map(|i| {
            ((0..bands).map(|b| hires[b * plane + i] as f64).sum::<f64>() / bands as f64) as f32
        })
        .collect();
    let hires = RasterStack::new(hh, hw, bands, hires)?.with_meta(0, "synthetic");
    let ms = decimate(&hires, ratio)?;
    let pan = RasterStack::new(hh, hw, 1, pan)?.with_meta(0, "synthetic");
    Ok(SyntheticScene { ms, pan })
}
