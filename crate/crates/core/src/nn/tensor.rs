use std::fmt::Debug;
use std::iter::Sum;
use std::ops::{AddAssign, MulAssign, SubAssign};

use num_traits::Float;

use crate::error::{Error, Result};
use crate::raster::RasterStack;

/// Scalar type of tensors: `f32` for training and inference, `f64` for
/// gradient checks.
pub trait Real:
    Float + Debug + Default + Send + Sync + AddAssign + SubAssign + MulAssign + Sum + 'static
{
    fn of(v: f64) -> Self;
    fn f64(self) -> f64;
}

impl Real for f32 {
    #[inline]
    fn of(v: f64) -> Self {
        v as f32
    }
    #[inline]
    fn f64(self) -> f64 {
        self as f64
    }
}

impl Real for f64 {
    #[inline]
    fn of(v: f64) -> Self {
        v
    }
    #[inline]
    fn f64(self) -> f64 {
        self
    }
}

/// H×W×C tensor, row-major with channels innermost.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor<T> {
    height: usize,
    width: usize,
    channels: usize,
    values: Vec<T>,
}

impl<T: Real> Tensor<T> {
    pub fn new(height: usize, width: usize, channels: usize, values: Vec<T>) -> Result<Self> {
        if values.len() != height * width * channels {
            return Err(Error::Shape(format!(
                "tensor has {} values, expected {height}×{width}×{channels}",
                values.len()
            )));
        }
        Ok(Self {
            height,
            width,
            channels,
            values,
        })
    }

    pub fn zeros(height: usize, width: usize, channels: usize) -> Self {
        Self {
            height,
            width,
            channels,
            values: vec![T::zero(); height * width * channels],
        }
    }

    pub fn filled(height: usize, width: usize, channels: usize, v: T) -> Self {
        Self {
            height,
            width,
            channels,
            values: vec![v; height * width * channels],
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.height, self.width, self.channels)
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    #[inline]
    pub fn at(&self, y: usize, x: usize, c: usize) -> T {
        self.values[(y * self.width + x) * self.channels + c]
    }

    #[inline]
    pub fn at_mut(&mut self, y: usize, x: usize, c: usize) -> &mut T {
        &mut self.values[(y * self.width + x) * self.channels + c]
    }

    pub fn all_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn ensure_shape(&self, other: &Tensor<T>, what: &str) -> Result<()> {
        if self.shape() == other.shape() {
            Ok(())
        } else {
            Err(Error::Shape(format!(
                "{what}: {:?} vs {:?}",
                self.shape(),
                other.shape()
            )))
        }
    }

    pub fn scale(&mut self, s: T) {
        for v in &mut self.values {
            *v *= s;
        }
    }

    pub fn cast<U: Real>(&self) -> Tensor<U> {
        Tensor {
            height: self.height,
            width: self.width,
            channels: self.channels,
            values: self.values.iter().map(|v| U::of(v.f64())).collect(),
        }
    }

    /// Rows `[y0, y0+h)` and columns `[x0, x0+w)`.
    pub fn crop(&self, y0: usize, x0: usize, h: usize, w: usize) -> Result<Tensor<T>> {
        if y0 + h > self.height || x0 + w > self.width {
            return Err(Error::Shape(format!(
                "crop {h}×{w} at ({y0},{x0}) exceeds {}×{}",
                self.height, self.width
            )));
        }
        let c = self.channels;
        let mut values = Vec::with_capacity(h * w * c);
        for y in y0..y0 + h {
            let start = (y * self.width + x0) * c;
            values.extend_from_slice(&self.values[start..start + w * c]);
        }
        Ok(Tensor {
            height: h,
            width: w,
            channels: c,
            values,
        })
    }

    /// Channel-last tensor from a band-major raster.
    pub fn from_raster(r: &RasterStack) -> Tensor<T> {
        let (h, w, c) = (r.height(), r.width(), r.bands());
        let mut values = vec![T::zero(); h * w * c];
        for b in 0..c {
            for (i, &v) in r.band(b).iter().enumerate() {
                values[i * c + b] = T::of(v as f64);
            }
        }
        Tensor {
            height: h,
            width: w,
            channels: c,
            values,
        }
    }

    pub fn to_raster(&self) -> Result<RasterStack> {
        let (h, w, c) = self.shape();
        let mut data = vec![0f32; h * w * c];
        for (i, px) in self.values.chunks_exact(c.max(1)).enumerate() {
            for (b, v) in px.iter().enumerate() {
                data[b * h * w + i] = v.f64() as f32;
            }
        }
        RasterStack::new(h, w, c, data)
    }
}
