//! The two-branch multi-scale, multi-depth network.
//!
//! A [`NetworkSpec`] declares a shallow and a deep branch over the same input
//! `G = [upsampled MS, PAN]`; the fused estimate is the sum of both branch
//! outputs. Parameters live in a [`ParamSet`] with one kernel per plain
//! convolution and three kernels (3×3, 5×5, 7×7) per multi-scale layer.

mod checkpoint;
mod inference;
mod network;
mod params;
mod spec;

pub use checkpoint::{
    load_checkpoint, load_flat, save_checkpoint, save_flat, spec_path_for, FlatFile,
};
pub use inference::{infer_tiled, sharpen_msdcnn, InferenceOptions};
pub use network::{
    backward, forward, forward_branch, multi_scale_block_forward, Branch, LossScale, SampleGrad,
};
pub use params::{build_params, ParamSet};
pub use spec::{
    default_spec, preset, Activation, KernelShape, LayerSpec, NetworkSpec, BLOCK_SCALES, PRESETS,
};
