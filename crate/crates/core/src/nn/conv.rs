//! "Same"-padded 2-D cross-correlation.
//!
//! Kernel weights are laid out `kh × kw × c_in × c_out` with output channels
//! innermost, so the hot loops are contiguous axpy/dot products. Taps that fall
//! outside the image are skipped (zero padding), and every output element sums
//! its taps in the fixed order `(ky, kx, c_in)`.

use super::{Real, Tensor};
use crate::error::{Error, Result};
use crate::par;

#[derive(Debug, Clone, PartialEq)]
pub struct ConvKernel<T> {
    pub kh: usize,
    pub kw: usize,
    pub c_in: usize,
    pub c_out: usize,
    pub weights: Vec<T>,
    pub bias: Vec<T>,
}

impl<T: Real> ConvKernel<T> {
    pub fn zeros(kh: usize, kw: usize, c_in: usize, c_out: usize) -> Result<Self> {
        Self::new(
            kh,
            kw,
            c_in,
            c_out,
            vec![T::zero(); kh * kw * c_in * c_out],
            vec![T::zero(); c_out],
        )
    }

    pub fn new(
        kh: usize,
        kw: usize,
        c_in: usize,
        c_out: usize,
        weights: Vec<T>,
        bias: Vec<T>,
    ) -> Result<Self> {
        if kh.is_multiple_of(2) || kw.is_multiple_of(2) {
            return Err(Error::Shape(format!(
                "kernel {kh}×{kw} must have odd sides"
            )));
        }
        if c_in == 0 || c_out == 0 {
            return Err(Error::Shape(
                "kernel channel counts must be positive".into(),
            ));
        }
        if weights.len() != kh * kw * c_in * c_out || bias.len() != c_out {
            return Err(Error::Shape(format!(
                "kernel {kh}×{kw}×{c_in}×{c_out} got {} weights and {} biases",
                weights.len(),
                bias.len()
            )));
        }
        Ok(Self {
            kh,
            kw,
            c_in,
            c_out,
            weights,
            bias,
        })
    }

    pub fn param_count(&self) -> usize {
        self.weights.len() + self.bias.len()
    }

    #[inline]
    pub fn weight(&self, ky: usize, kx: usize, ci: usize, co: usize) -> T {
        self.weights[((ky * self.kw + kx) * self.c_in + ci) * self.c_out + co]
    }

    pub fn cast<U: Real>(&self) -> ConvKernel<U> {
        ConvKernel {
            kh: self.kh,
            kw: self.kw,
            c_in: self.c_in,
            c_out: self.c_out,
            weights: self.weights.iter().map(|v| U::of(v.f64())).collect(),
            bias: self.bias.iter().map(|v| U::of(v.f64())).collect(),
        }
    }
}

pub fn conv2d_same<T: Real>(x: &Tensor<T>, k: &ConvKernel<T>) -> Result<Tensor<T>> {
    if x.channels() != k.c_in {
        return Err(Error::Shape(format!(
            "conv expects {} input channels, got {}",
            k.c_in,
            x.channels()
        )));
    }
    let (h, w, ci_n) = x.shape();
    let co_n = k.c_out;
    let (ph, pw) = (k.kh / 2, k.kw / 2);
    let xs = x.values();
    let mut out = vec![T::zero(); h * w * co_n];
    par::for_each_chunk_mut(&mut out, w * co_n, |y, row| {
        for xo in 0..w {
            let acc = &mut row[xo * co_n..(xo + 1) * co_n];
            acc.copy_from_slice(&k.bias);
            for ky in 0..k.kh {
                let Some(yy) = (y + ky).checked_sub(ph).filter(|&v| v < h) else {
                    continue;
                };
                for kx in 0..k.kw {
                    let Some(xx) = (xo + kx).checked_sub(pw).filter(|&v| v < w) else {
                        continue;
                    };
                    let px = &xs[(yy * w + xx) * ci_n..(yy * w + xx + 1) * ci_n];
                    let wbase = (ky * k.kw + kx) * ci_n * co_n;
                    for (ci, &xv) in px.iter().enumerate() {
                        let wrow = &k.weights[wbase + ci * co_n..wbase + (ci + 1) * co_n];
                        for (a, &wv) in acc.iter_mut().zip(wrow) {
                            *a += xv * wv;
                        }
                    }
                }
            }
        }
    });
    Tensor::new(h, w, co_n, out)
}

/// Gradients of a convolution with respect to its input, weights and bias.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvGrads<T> {
    pub grad_x: Option<Tensor<T>>,
    pub weights: Vec<T>,
    pub bias: Vec<T>,
}

pub fn conv2d_same_backward<T: Real>(
    x: &Tensor<T>,
    k: &ConvKernel<T>,
    grad_out: &Tensor<T>,
) -> Result<ConvGrads<T>> {
    conv_backward(x, k, grad_out, true)
}

pub(crate) fn conv_backward<T: Real>(
    x: &Tensor<T>,
    k: &ConvKernel<T>,
    grad_out: &Tensor<T>,
    want_input_grad: bool,
) -> Result<ConvGrads<T>> {
    if x.channels() != k.c_in {
        return Err(Error::Shape(format!(
            "conv expects {} input channels, got {}",
            k.c_in,
            x.channels()
        )));
    }
    if grad_out.shape() != (x.height(), x.width(), k.c_out) {
        return Err(Error::Shape(format!(
            "output gradient {:?} does not match forward output {:?}",
            grad_out.shape(),
            (x.height(), x.width(), k.c_out)
        )));
    }
    let (h, w, ci_n) = x.shape();
    let co_n = k.c_out;
    let (ph, pw) = (k.kh / 2, k.kw / 2);
    let xs = x.values();
    let gs = grad_out.values();

    let grad_x = if want_input_grad {
        let mut gx = vec![T::zero(); h * w * ci_n];
        par::for_each_chunk_mut(&mut gx, w * ci_n, |yy, row| {
            for xx in 0..w {
                let acc = &mut row[xx * ci_n..(xx + 1) * ci_n];
                for ky in 0..k.kh {
                    // output row whose window places tap ky on input row yy
                    let Some(y) = (yy + ph).checked_sub(ky).filter(|&v| v < h) else {
                        continue;
                    };
                    for kx in 0..k.kw {
                        let Some(xo) = (xx + pw).checked_sub(kx).filter(|&v| v < w) else {
                            continue;
                        };
                        let g = &gs[(y * w + xo) * co_n..(y * w + xo + 1) * co_n];
                        let wbase = (ky * k.kw + kx) * ci_n * co_n;
                        for (ci, a) in acc.iter_mut().enumerate() {
                            let wrow = &k.weights[wbase + ci * co_n..wbase + (ci + 1) * co_n];
                            let mut dot = T::zero();
                            for (&gv, &wv) in g.iter().zip(wrow) {
                                dot += gv * wv;
                            }
                            *a += dot;
                        }
                    }
                }
            }
        });
        Some(Tensor::new(h, w, ci_n, gx)?)
    } else {
        None
    };

    let mut gw = vec![T::zero(); k.weights.len()];
    par::for_each_chunk_mut(&mut gw, ci_n * co_n, |tap, acc| {
        let (ky, kx) = (tap / k.kw, tap % k.kw);
        // output rows/cols whose tap lands inside the input
        let y_lo = ph.saturating_sub(ky);
        let y_hi = (h + ph).saturating_sub(ky).min(h);
        let x_lo = pw.saturating_sub(kx);
        let x_hi = (w + pw).saturating_sub(kx).min(w);
        for y in y_lo..y_hi {
            let yy = y + ky - ph;
            for xo in x_lo..x_hi {
                let xx = xo + kx - pw;
                let px = &xs[(yy * w + xx) * ci_n..(yy * w + xx + 1) * ci_n];
                let g = &gs[(y * w + xo) * co_n..(y * w + xo + 1) * co_n];
                for (ci, &xv) in px.iter().enumerate() {
                    let arow = &mut acc[ci * co_n..(ci + 1) * co_n];
                    for (a, &gv) in arow.iter_mut().zip(g) {
                        *a += xv * gv;
                    }
                }
            }
        }
    });

    let mut gb = vec![T::zero(); co_n];
    for px in gs.chunks_exact(co_n) {
        for (b, &g) in gb.iter_mut().zip(px) {
            *b += g;
        }
    }

    Ok(ConvGrads {
        grad_x,
        weights: gw,
        bias: gb,
    })
}
