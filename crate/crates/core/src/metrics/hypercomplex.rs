use crate::error::{Error, Result};
use crate::raster::RasterStack;

/// Cayley–Dickson conjugate: negate every non-real component.
pub fn cd_conj(a: &[f64]) -> Vec<f64> {
    let mut out = a.to_vec();
    for v in out.iter_mut().skip(1) {
        *v = -*v;
    }
    out
}

/// Cayley–Dickson product of two elements with power-of-two length,
/// (a, b)(c, d) = (ac − d̄b, da + bc̄).
pub fn cd_mul(x: &[f64], y: &[f64]) -> Vec<f64> {
    assert_eq!(x.len(), y.len());
    assert!(x.len().is_power_of_two());
    let n = x.len();
    if n == 1 {
        return vec![x[0] * y[0]];
    }
    let h = n / 2;
    let (a, b) = x.split_at(h);
    let (c, d) = y.split_at(h);
    let ac = cd_mul(a, c);
    let dcb = cd_mul(&cd_conj(d), b);
    let da = cd_mul(d, a);
    let bcc = cd_mul(b, &cd_conj(c));
    let mut out = Vec::with_capacity(n);
    out.extend(ac.iter().zip(&dcb).map(|(p, q)| p - q));
    out.extend(da.iter().zip(&bcc).map(|(p, q)| p + q));
    out
}

fn norm(a: &[f64]) -> f64 {
    a.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Hypercomplex Q over non-overlapping `block × block` tiles. Each pixel is a
/// Cayley–Dickson number whose components are the bands, zero-padded to the
/// next power of two.
pub fn q2n(fused: &RasterStack, truth: &RasterStack, block: usize) -> Result<f64> {
    fused.ensure_same_geometry(truth, "q2n")?;
    let (h, w, s) = (fused.height(), fused.width(), fused.bands());
    if block == 0 || h < block || w < block {
        return Err(Error::Geometry(format!(
            "image {h}×{w} smaller than Q2n block {block}"
        )));
    }
    let dim = s.next_power_of_two();
    let n = (block * block) as f64;
    let pixel = |r: &RasterStack, i: usize| -> Vec<f64> {
        let mut v = vec![0.0; dim];
        for (b, slot) in v.iter_mut().enumerate().take(s) {
            *slot = r.band(b)[i] as f64;
        }
        v
    };
    let mut sum = 0.0;
    let mut used = 0usize;
    for by in (0..=h - block).step_by(block) {
        for bx in (0..=w - block).step_by(block) {
            let idx: Vec<usize> = (by..by + block)
                .flat_map(|y| (bx..bx + block).map(move |x| y * w + x))
                .collect();
            let zs: Vec<Vec<f64>> = idx.iter().map(|&i| pixel(fused, i)).collect();
            let ws: Vec<Vec<f64>> = idx.iter().map(|&i| pixel(truth, i)).collect();
            let mean = |vs: &[Vec<f64>]| -> Vec<f64> {
                let mut m = vec![0.0; dim];
                for v in vs {
                    for (a, b) in m.iter_mut().zip(v) {
                        *a += b;
                    }
                }
                m.iter_mut().for_each(|a| *a /= n);
                m
            };
            let (mz, mw) = (mean(&zs), mean(&ws));
            let mut var_z = 0.0;
            let mut var_w = 0.0;
            let mut cov = vec![0.0; dim];
            for (z, wv) in zs.iter().zip(&ws) {
                let dz: Vec<f64> = z.iter().zip(&mz).map(|(a, b)| a - b).collect();
                let dw: Vec<f64> = wv.iter().zip(&mw).map(|(a, b)| a - b).collect();
                var_z += dz.iter().map(|v| v * v).sum::<f64>();
                var_w += dw.iter().map(|v| v * v).sum::<f64>();
                for (c, p) in cov.iter_mut().zip(cd_mul(&dz, &cd_conj(&dw))) {
                    *c += p;
                }
            }
            let (var_z, var_w) = (var_z / n, var_w / n);
            let cov_mod = norm(&cov) / n;
            let (nz, nw) = (norm(&mz), norm(&mw));
            let den = (var_z + var_w) * (nz * nz + nw * nw);
            if den == 0.0 {
                continue;
            }
            sum += 4.0 * cov_mod * nz * nw / den;
            used += 1;
        }
    }
    if used == 0 {
        return Err(Error::Degenerate(
            "every Q2n block has a zero denominator".into(),
        ));
    }
    Ok(sum / used as f64)
}
