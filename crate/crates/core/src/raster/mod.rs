//! Multi-band rasters and the reduced-resolution simulation pipeline.

mod io;
mod resample;
pub mod synthetic;
mod wald;

pub use io::{load_png, load_raster, preview_bands, save_png, save_raster};
pub use resample::{bicubic_resize, box_filter, decimate, gaussian_taps};
pub use wald::{extract_patches, wald_simulate, window_count, PatchPair, WaldTriple};

use crate::error::{Error, Result};

/// An H×W×C float image, band-major, with values normalized to [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct RasterStack {
    height: usize,
    width: usize,
    bands: usize,
    data: Vec<f32>,
    /// Original radiometric depth. 0 means the values were stored normalized.
    pub bit_depth: u32,
    pub sensor_tag: String,
}

impl RasterStack {
    pub fn new(height: usize, width: usize, bands: usize, data: Vec<f32>) -> Result<Self> {
        if bands == 0 {
            return Err(Error::InvalidArgument(
                "raster must have at least one band".into(),
            ));
        }
        if height == 0 || width == 0 {
            return Err(Error::InvalidArgument("raster must be at least 1×1".into()));
        }
        if data.len() != height * width * bands {
            return Err(Error::Shape(format!(
                "raster data has {} values, expected {height}×{width}×{bands}",
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "non-finite raster value at index {i}"
            )));
        }
        Ok(Self {
            height,
            width,
            bands,
            data,
            bit_depth: 0,
            sensor_tag: String::new(),
        })
    }

    pub fn filled(height: usize, width: usize, bands: usize, value: f32) -> Result<Self> {
        Self::new(height, width, bands, vec![value; height * width * bands])
    }

    /// Build from per-band planes of equal size.
    pub fn from_planes(height: usize, width: usize, planes: &[Vec<f32>]) -> Result<Self> {
        let mut data = Vec::with_capacity(height * width * planes.len());
        for (b, p) in planes.iter().enumerate() {
            if p.len() != height * width {
                return Err(Error::Shape(format!(
                    "plane {b} has {} values, expected {}",
                    p.len(),
                    height * width
                )));
            }
            data.extend_from_slice(p);
        }
        Self::new(height, width, planes.len(), data)
    }

    pub fn with_meta(mut self, bit_depth: u32, sensor_tag: impl Into<String>) -> Self {
        self.bit_depth = bit_depth;
        self.sensor_tag = sensor_tag.into();
        self
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn bands(&self) -> usize {
        self.bands
    }

    pub fn pixels(&self) -> usize {
        self.height * self.width
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    pub fn band(&self, b: usize) -> &[f32] {
        let n = self.pixels();
        &self.data[b * n..(b + 1) * n]
    }

    pub fn band_mut(&mut self, b: usize) -> &mut [f32] {
        let n = self.pixels();
        &mut self.data[b * n..(b + 1) * n]
    }

    #[inline]
    pub fn get(&self, y: usize, x: usize, b: usize) -> f32 {
        self.data[(b * self.height + y) * self.width + x]
    }

    pub fn same_geometry(&self, other: &RasterStack) -> bool {
        self.height == other.height && self.width == other.width && self.bands == other.bands
    }

    pub fn ensure_same_geometry(&self, other: &RasterStack, what: &str) -> Result<()> {
        if self.same_geometry(other) {
            Ok(())
        } else {
            Err(Error::Geometry(format!(
                "{what}: {}×{}×{} vs {}×{}×{}",
                self.height, self.width, self.bands, other.height, other.width, other.bands
            )))
        }
    }

    /// Single-band raster holding band `b`.
    pub fn extract_band(&self, b: usize) -> RasterStack {
        RasterStack {
            height: self.height,
            width: self.width,
            bands: 1,
            data: self.band(b).to_vec(),
            bit_depth: self.bit_depth,
            sensor_tag: self.sensor_tag.clone(),
        }
    }

    /// Window `[y0, y0+h) × [x0, x0+w)` of every band.
    pub fn crop(&self, y0: usize, x0: usize, h: usize, w: usize) -> Result<RasterStack> {
        if h == 0 || w == 0 || y0 + h > self.height || x0 + w > self.width {
            return Err(Error::Geometry(format!(
                "crop {h}×{w} at ({y0},{x0}) exceeds {}×{}",
                self.height, self.width
            )));
        }
        let mut data = Vec::with_capacity(h * w * self.bands);
        for b in 0..self.bands {
            let plane = self.band(b);
            for y in y0..y0 + h {
                data.extend_from_slice(&plane[y * self.width + x0..y * self.width + x0 + w]);
            }
        }
        Ok(RasterStack {
            height: h,
            width: w,
            bands: self.bands,
            data,
            bit_depth: self.bit_depth,
            sensor_tag: self.sensor_tag.clone(),
        })
    }

    /// Band-wise concatenation; all parts must share height and width.
    pub fn concat_bands(parts: &[&RasterStack]) -> Result<RasterStack> {
        let first = parts
            .first()
            .ok_or_else(|| Error::InvalidArgument("nothing to concatenate".into()))?;
        let mut data = Vec::new();
        let mut bands = 0;
        for p in parts {
            if p.height != first.height || p.width != first.width {
                return Err(Error::Geometry(format!(
                    "band concat: {}×{} vs {}×{}",
                    p.height, p.width, first.height, first.width
                )));
            }
            data.extend_from_slice(&p.data);
            bands += p.bands;
        }
        let mut out = RasterStack::new(first.height, first.width, bands, data)?;
        out.bit_depth = first.bit_depth;
        out.sensor_tag = first.sensor_tag.clone();
        Ok(out)
    }

    pub fn map(&self, f: impl Fn(f32) -> f32) -> Result<RasterStack> {
        let data = self.data.iter().map(|&v| f(v)).collect();
        let mut out = RasterStack::new(self.height, self.width, self.bands, data)?;
        out.bit_depth = self.bit_depth;
        out.sensor_tag = self.sensor_tag.clone();
        Ok(out)
    }

    /// Per-band (min, max).
    pub fn band_range(&self, b: usize) -> (f32, f32) {
        self.band(b)
            .iter()
            .fold((f32::INFINITY, f32::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }

    pub(crate) fn from_parts_unchecked(
        height: usize,
        width: usize,
        bands: usize,
        data: Vec<f32>,
        like: &RasterStack,
    ) -> RasterStack {
        debug_assert_eq!(data.len(), height * width * bands);
        RasterStack {
            height,
            width,
            bands,
            data,
            bit_depth: like.bit_depth,
            sensor_tag: like.sensor_tag.clone(),
        }
    }
}
