use crate::error::{Error, Result};
use crate::raster::RasterStack;

/// 10·log10(1 / MSE) over all pixels and bands, peak 1.0. Identical inputs give `+∞`.
pub fn psnr(fused: &RasterStack, truth: &RasterStack) -> Result<f64> {
    fused.ensure_same_geometry(truth, "psnr")?;
    let n = fused.data().len() as f64;
    let mse = fused
        .data()
        .iter()
        .zip(truth.data())
        .map(|(&a, &b)| (a as f64 - b as f64).powi(2))
        .sum::<f64>()
        / n;
    Ok(if mse == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (1.0 / mse).log10()
    })
}

/// Q between two single-band planes, averaged over non-overlapping
/// `window × window` blocks. Blocks with a zero denominator are skipped.
pub fn q_index(x: &[f32], y: &[f32], height: usize, width: usize, window: usize) -> Result<f64> {
    if x.len() != height * width || y.len() != height * width {
        return Err(Error::Geometry("Q planes differ in size".into()));
    }
    if window == 0 || height < window || width < window {
        return Err(Error::Geometry(format!(
            "image {height}×{width} smaller than Q window {window}"
        )));
    }
    let n = (window * window) as f64;
    let mut sum = 0.0;
    let mut used = 0usize;
    for by in (0..=height - window).step_by(window) {
        for bx in (0..=width - window).step_by(window) {
            let (mut mx, mut my) = (0.0, 0.0);
            for yy in by..by + window {
                for xx in bx..bx + window {
                    mx += x[yy * width + xx] as f64;
                    my += y[yy * width + xx] as f64;
                }
            }
            mx /= n;
            my /= n;
            let (mut vx, mut vy, mut cxy) = (0.0, 0.0, 0.0);
            for yy in by..by + window {
                for xx in bx..bx + window {
                    let dx = x[yy * width + xx] as f64 - mx;
                    let dy = y[yy * width + xx] as f64 - my;
                    vx += dx * dx;
                    vy += dy * dy;
                    cxy += dx * dy;
                }
            }
            let (vx, vy, cxy) = (vx / n, vy / n, cxy / n);
            let den = (vx + vy) * (mx * mx + my * my);
            if den == 0.0 {
                continue;
            }
            sum += 4.0 * cxy * mx * my / den;
            used += 1;
        }
    }
    if used == 0 {
        return Err(Error::Degenerate(
            "every Q block has a zero denominator".into(),
        ));
    }
    Ok(sum / used as f64)
}

/// Band-averaged universal image quality index.
pub fn uiqi_q(fused: &RasterStack, truth: &RasterStack, window: usize) -> Result<f64> {
    fused.ensure_same_geometry(truth, "Q")?;
    let (h, w) = (fused.height(), fused.width());
    let mut total = 0.0;
    for b in 0..fused.bands() {
        total += q_index(fused.band(b), truth.band(b), h, w, window)?;
    }
    Ok(total / fused.bands() as f64)
}

/// 100 / ratio · sqrt(mean_i (RMSE_i / μ_i)²), μ_i the reference band mean.
pub fn ergas(fused: &RasterStack, truth: &RasterStack, ratio: usize) -> Result<f64> {
    fused.ensure_same_geometry(truth, "ergas")?;
    if ratio == 0 {
        return Err(Error::InvalidArgument(
            "ERGAS ratio must be positive".into(),
        ));
    }
    let n = fused.pixels() as f64;
    let mut acc = 0.0;
    for b in 0..fused.bands() {
        let (f, t) = (fused.band(b), truth.band(b));
        let mean = t.iter().map(|&v| v as f64).sum::<f64>() / n;
        if mean.abs() < 1e-12 {
            return Err(Error::Degenerate(format!(
                "reference band {b} has zero mean"
            )));
        }
        let mse = f
            .iter()
            .zip(t)
            .map(|(&a, &b)| (a as f64 - b as f64).powi(2))
            .sum::<f64>()
            / n;
        acc += mse / (mean * mean);
    }
    Ok(100.0 / ratio as f64 * (acc / fused.bands() as f64).sqrt())
}

/// Mean spectral angle in degrees over pixels where both spectra are non-zero.
pub fn sam(fused: &RasterStack, truth: &RasterStack) -> Result<f64> {
    fused.ensure_same_geometry(truth, "sam")?;
    let s = fused.bands();
    if s < 2 {
        return Err(Error::InvalidArgument(
            "SAM needs at least two bands".into(),
        ));
    }
    let mut total = 0.0;
    let mut used = 0usize;
    let mut u = vec![0f64; s];
    let mut v = vec![0f64; s];
    for i in 0..fused.pixels() {
        for b in 0..s {
            u[b] = truth.band(b)[i] as f64;
            v[b] = fused.band(b)[i] as f64;
        }
        let nu = u.iter().map(|a| a * a).sum::<f64>().sqrt();
        let nv = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if nu <= 1e-12 || nv <= 1e-12 {
            continue;
        }
        // 2·atan2(|û − v̂|, |û + v̂|) stays accurate for nearly parallel spectra
        let (mut d2, mut s2) = (0.0, 0.0);
        for b in 0..s {
            let (a, c) = (u[b] / nu, v[b] / nv);
            d2 += (a - c) * (a - c);
            s2 += (a + c) * (a + c);
        }
        total += 2.0 * d2.sqrt().atan2(s2.sqrt());
        used += 1;
    }
    if used == 0 {
        return Ok(0.0);
    }
    Ok((total / used as f64).to_degrees())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::prng;
    use rand::RngExt;

    fn random(h: usize, w: usize, b: usize, seed: u64) -> RasterStack {
        let mut r = prng(seed);
        RasterStack::new(
            h,
            w,
            b,
            (0..h * w * b)
                .map(|_| 0.05 + 0.9 * r.random::<f32>())
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn psnr_closed_forms() {
        let t = RasterStack::filled(4, 4, 2, 0.2).unwrap();
        assert_eq!(psnr(&t, &t).unwrap(), f64::INFINITY);
        // residuals 0.1 and 0.5 chosen exactly representable around 0.25/0.75
        let a = RasterStack::filled(4, 4, 2, 0.25).unwrap();
        let b = RasterStack::filled(4, 4, 2, 0.75).unwrap();
        assert!((psnr(&a, &b).unwrap() - 6.020599913279624).abs() < 1e-9);
        let c = RasterStack::filled(4, 4, 2, 0.6).unwrap();
        let d = RasterStack::filled(4, 4, 2, 0.5).unwrap();
        assert!((psnr(&c, &d).unwrap() - 20.0).abs() < 1e-5);
    }

    #[test]
    fn psnr_decreases_with_noise() {
        let t = random(16, 16, 3, 1);
        let mut r = prng(2);
        let noise: Vec<f32> = (0..t.data().len())
            .map(|_| r.random::<f32>() * 2.0 - 1.0)
            .collect();
        let mut prev = f64::INFINITY;
        for amp in [0.001f32, 0.01, 0.05, 0.1, 0.2] {
            let f = RasterStack::new(
                16,
                16,
                3,
                t.data()
                    .iter()
                    .zip(&noise)
                    .map(|(a, n)| a + amp * n)
                    .collect(),
            )
            .unwrap();
            let p = psnr(&f, &t).unwrap();
            assert!(p < prev);
            prev = p;
        }
    }

    #[test]
    fn q_hand_example() {
        let x = [1.0f32, 2.0, 3.0, 4.0];
        let y = [1.0f32, 2.0, 3.0, 5.0];
        // exact rational value 16/17
        assert!((q_index(&x, &y, 2, 2, 2).unwrap() - 16.0 / 17.0).abs() < 1e-12);
    }

    #[test]
    fn q_identity_and_inversion() {
        let t = random(64, 64, 2, 3);
        assert!((uiqi_q(&t, &t, 32).unwrap() - 1.0).abs() < 1e-9);
        let inv = t.map(|v| 1.0 - v).unwrap();
        assert!(uiqi_q(&inv, &t, 32).unwrap() < 0.0);
        let bump = t.map(|v| v + 1e-3 * (v * 37.0).sin()).unwrap();
        assert!(uiqi_q(&bump, &t, 32).unwrap() < 1.0);
        assert!(uiqi_q(&random(16, 16, 1, 1), &random(16, 16, 1, 2), 32).is_err());
    }

    #[test]
    fn q_all_degenerate_errors() {
        let c = RasterStack::filled(4, 4, 1, 0.0).unwrap();
        assert!(matches!(uiqi_q(&c, &c, 2), Err(Error::Degenerate(_))));
    }

    #[test]
    fn ergas_cases() {
        let t = random(8, 8, 3, 4);
        assert_eq!(ergas(&t, &t, 4).unwrap(), 0.0);
        // single band: mean 0.5, constant residual 0.05 → RMSE 0.05
        let a = RasterStack::filled(4, 4, 1, 0.5).unwrap();
        let f = RasterStack::filled(4, 4, 1, 0.55).unwrap();
        assert!((ergas(&f, &a, 4).unwrap() - 2.5).abs() < 1e-5);
        let f2 = random(8, 8, 3, 5);
        let e = ergas(&f2, &t, 4).unwrap();
        let e_scaled = ergas(
            &f2.map(|v| 3.0 * v).unwrap(),
            &t.map(|v| 3.0 * v).unwrap(),
            4,
        )
        .unwrap();
        assert!((e - e_scaled).abs() < 1e-6 * e);
        assert!(ergas(&t, &RasterStack::filled(8, 8, 3, 0.0).unwrap(), 4).is_err());
    }

    #[test]
    fn sam_cases() {
        let t = random(5, 5, 4, 6);
        assert_eq!(sam(&t, &t).unwrap(), 0.0);
        assert!(sam(&t.map(|v| 2.0 * v).unwrap(), &t).unwrap().abs() < 1e-9);
        let u = RasterStack::new(1, 1, 2, vec![1.0, 0.0]).unwrap();
        let v = RasterStack::new(1, 1, 2, vec![0.0, 1.0]).unwrap();
        assert!((sam(&v, &u).unwrap() - 90.0).abs() < 1e-12);
        assert!(sam(&random(2, 2, 1, 1), &random(2, 2, 1, 2)).is_err());
    }

    #[test]
    fn sam_per_pixel_scaling_invariance() {
        let t = random(6, 6, 3, 7);
        let f = random(6, 6, 3, 8);
        let base = sam(&f, &t).unwrap();
        let mut r = prng(9);
        // powers of two keep the f32 scaling exact
        let factors: Vec<f32> = (0..36)
            .map(|_| [0.25, 0.5, 2.0, 8.0][r.random_range(0..4)])
            .collect();
        let scaled = RasterStack::new(
            6,
            6,
            3,
            f.data()
                .iter()
                .enumerate()
                .map(|(i, v)| v * factors[i % 36])
                .collect(),
        )
        .unwrap();
        assert!((sam(&scaled, &t).unwrap() - base).abs() < 1e-9);
    }

    #[test]
    fn geometry_always_checked() {
        let a = random(4, 4, 2, 1);
        let b = random(4, 5, 2, 1);
        assert!(psnr(&a, &b).is_err());
        assert!(uiqi_q(&a, &b, 2).is_err());
        assert!(ergas(&a, &b, 4).is_err());
        assert!(sam(&a, &b).is_err());
    }
}
