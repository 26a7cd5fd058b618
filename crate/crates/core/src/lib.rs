//! Pan-sharpening with a multi-scale, multi-depth convolutional network.
//!
//! The crate is organized bottom-up:
//!
//! * [`raster`]: multi-band rasters, file I/O, resampling and the reduced-resolution
//!   simulation pipeline that manufactures training pairs.
//! * [`nn`]: dense tensors and convolution primitives with analytic backward passes.
//! * [`msdcnn`]: declarative two-branch network specs, parameters, forward/backward
//!   and tiled inference.
//! * [`trainer`]: mini-batch SGD with classical momentum, clipping and step decay.
//! * [`metrics`]: full-reference and no-reference fusion quality indices.
//! * [`baselines`]: bicubic and SFIM reference fusion methods.
//!
//! Data-parallel inner loops run on rayon when the `parallel` feature is enabled
//! (the default). Every reduction has a fixed summation order, so results are
//! bit-identical whether the work runs on one thread or many.

pub mod baselines;
pub mod error;
pub mod metrics;
pub mod msdcnn;
pub mod nn;
pub mod par;
pub mod raster;
pub mod rng;
pub mod trainer;

pub use error::{Error, Result};
