//! Forward evaluation and reverse-mode gradients of the two-branch network.

use super::params::ParamSet;
use super::spec::{Activation, LayerSpec, NetworkSpec};
use crate::error::{Error, Result};
use crate::nn::conv::conv_backward;
use crate::nn::{
    add, add_assign, concat_channels, conv2d_same, relu, relu_backward, split_channels, ConvKernel,
    Real, Tensor,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Shallow,
    Deep,
}

/// Normalization of the squared-error loss.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossScale {
    /// Plain sum of squared errors over pixels and bands.
    #[default]
    Sum,
    /// Sum divided by H·W·S.
    PixelMean,
}

#[derive(Debug, Clone)]
pub struct SampleGrad<T> {
    pub loss: f64,
    pub grads: ParamSet<T>,
}

enum StageCache<T> {
    Conv {
        input: Tensor<T>,
        pre: Option<Tensor<T>>,
    },
    // per multi-scale layer: its input and the three pre-activation maps
    Block {
        layers: Vec<(Tensor<T>, Vec<Tensor<T>>)>,
        skip: bool,
        n: usize,
    },
}

fn branch_layers(spec: &NetworkSpec, branch: Branch) -> &[LayerSpec] {
    match branch {
        Branch::Shallow => &spec.shallow,
        Branch::Deep => &spec.deep,
    }
}

/// Index of the first kernel of `branch` in the flat parameter list.
fn branch_offset(spec: &NetworkSpec, branch: Branch) -> usize {
    match branch {
        Branch::Shallow => 0,
        Branch::Deep => spec.branch_kernels(&spec.shallow).len(),
    }
}

fn check_inputs<T: Real>(g: &Tensor<T>, spec: &NetworkSpec, params: &ParamSet<T>) -> Result<()> {
    if g.channels() != spec.input_channels() {
        return Err(Error::Shape(format!(
            "network expects {} input channels, got {}",
            spec.input_channels(),
            g.channels()
        )));
    }
    if !params.matches(spec) {
        return Err(Error::Shape(
            "parameter set does not match the network spec".into(),
        ));
    }
    Ok(())
}

/// Parallel 3×3 / 5×5 / 7×7 convolutions with ReLU, concatenated, optionally
/// plus the block input. `kernels` holds three kernels per stacked layer.
pub fn multi_scale_block_forward<T: Real>(
    x: &Tensor<T>,
    kernels: &[ConvKernel<T>],
    skip: bool,
) -> Result<Tensor<T>> {
    if kernels.is_empty() || !kernels.len().is_multiple_of(3) {
        return Err(Error::Shape(format!(
            "multi-scale block needs 3·depth kernels, got {}",
            kernels.len()
        )));
    }
    let mut h = x.clone();
    for layer in kernels.chunks_exact(3) {
        let acts = layer
            .iter()
            .map(|k| conv2d_same(&h, k).map(|p| relu(&p)))
            .collect::<Result<Vec<_>>>()?;
        h = concat_channels(&acts.iter().collect::<Vec<_>>())?;
    }
    if skip {
        add_assign(&mut h, x)?;
    }
    Ok(h)
}

fn run_branch<T: Real>(
    g: &Tensor<T>,
    layers: &[LayerSpec],
    kernels: &[ConvKernel<T>],
    mut cache: Option<&mut Vec<StageCache<T>>>,
) -> Result<Tensor<T>> {
    let mut cur = g.clone();
    let mut ki = 0;
    for l in layers {
        match *l {
            LayerSpec::Conv { activation, .. } => {
                let pre = conv2d_same(&cur, &kernels[ki])?;
                ki += 1;
                let (out, keep_pre) = match activation {
                    Activation::Relu => (relu(&pre), Some(pre)),
                    Activation::None => (pre, None),
                };
                let input = std::mem::replace(&mut cur, out);
                if let Some(c) = cache.as_deref_mut() {
                    c.push(StageCache::Conv {
                        input,
                        pre: keep_pre,
                    });
                }
            }
            LayerSpec::MultiScaleBlock {
                n_per_scale,
                skip,
                depth,
            } => {
                let mut stored = Vec::with_capacity(depth);
                let mut h = cur.clone();
                for _ in 0..depth {
                    let pres = kernels[ki..ki + 3]
                        .iter()
                        .map(|k| conv2d_same(&h, k))
                        .collect::<Result<Vec<_>>>()?;
                    ki += 3;
                    let acts: Vec<Tensor<T>> = pres.iter().map(relu).collect();
                    let next = concat_channels(&acts.iter().collect::<Vec<_>>())?;
                    let input = std::mem::replace(&mut h, next);
                    if cache.is_some() {
                        stored.push((input, pres));
                    }
                }
                if skip {
                    add_assign(&mut h, &cur)?;
                }
                cur = h;
                if let Some(c) = cache.as_deref_mut() {
                    c.push(StageCache::Block {
                        layers: stored,
                        skip,
                        n: n_per_scale,
                    });
                }
            }
        }
    }
    Ok(cur)
}

/// Output of one branch, or `None` when the branch is absent.
pub fn forward_branch<T: Real>(
    g: &Tensor<T>,
    spec: &NetworkSpec,
    params: &ParamSet<T>,
    branch: Branch,
) -> Result<Option<Tensor<T>>> {
    check_inputs(g, spec, params)?;
    let layers = branch_layers(spec, branch);
    if layers.is_empty() {
        return Ok(None);
    }
    let off = branch_offset(spec, branch);
    run_branch(g, layers, &params.kernels[off..], None).map(Some)
}

/// Fused estimate: shallow branch output plus deep branch output.
pub fn forward<T: Real>(
    g: &Tensor<T>,
    spec: &NetworkSpec,
    params: &ParamSet<T>,
) -> Result<Tensor<T>> {
    let shallow = forward_branch(g, spec, params, Branch::Shallow)?;
    let deep = forward_branch(g, spec, params, Branch::Deep)?;
    match (shallow, deep) {
        (Some(mut a), Some(b)) => {
            add_assign(&mut a, &b)?;
            Ok(a)
        }
        (Some(a), None) | (None, Some(a)) => Ok(a),
        (None, None) => Err(Error::Spec("network has no branches".into())),
    }
}

fn backprop_branch<T: Real>(
    cache: Vec<StageCache<T>>,
    kernels: &[ConvKernel<T>],
    grads: &mut [ConvKernel<T>],
    grad_out: &Tensor<T>,
) -> Result<()> {
    let mut ki = kernels.len();
    let mut g = grad_out.clone();
    let n_stages = cache.len();
    for (si, stage) in cache.into_iter().enumerate().rev() {
        let first_stage = si == 0;
        match stage {
            StageCache::Conv { input, pre } => {
                ki -= 1;
                let g_pre = match pre {
                    Some(p) => relu_backward(&p, &g)?,
                    None => g,
                };
                let cg = conv_backward(&input, &kernels[ki], &g_pre, !first_stage)?;
                grads[ki].weights = cg.weights;
                grads[ki].bias = cg.bias;
                g = cg.grad_x.unwrap_or_else(|| Tensor::zeros(0, 0, 0));
            }
            StageCache::Block { layers, skip, n } => {
                let g_out = g;
                let mut gh = g_out.clone();
                let depth = layers.len();
                for (li, (input, pres)) in layers.into_iter().enumerate().rev() {
                    ki -= 3;
                    let need_x = !(first_stage && li == 0);
                    let parts = split_channels(&gh, &[n, n, n])?;
                    let mut gx: Option<Tensor<T>> = None;
                    for (s, (part, pre)) in parts.iter().zip(&pres).enumerate() {
                        let g_pre = relu_backward(pre, part)?;
                        let cg = conv_backward(&input, &kernels[ki + s], &g_pre, need_x)?;
                        grads[ki + s].weights = cg.weights;
                        grads[ki + s].bias = cg.bias;
                        if let Some(x) = cg.grad_x {
                            match gx.as_mut() {
                                Some(acc) => add_assign(acc, &x)?,
                                None => gx = Some(x),
                            }
                        }
                    }
                    gh = gx.unwrap_or_else(|| Tensor::zeros(0, 0, 0));
                    debug_assert!(li < depth);
                }
                g = if skip && !first_stage {
                    add(&gh, &g_out)?
                } else {
                    gh
                };
            }
        }
    }
    debug_assert_eq!(ki, 0, "{n_stages} stages consumed every kernel");
    Ok(())
}

/// Squared-error loss against `target` and its exact gradient with respect to
/// every parameter.
pub fn backward<T: Real>(
    g: &Tensor<T>,
    target: &Tensor<T>,
    spec: &NetworkSpec,
    params: &ParamSet<T>,
    scale: LossScale,
) -> Result<SampleGrad<T>> {
    check_inputs(g, spec, params)?;
    if target.shape() != (g.height(), g.width(), spec.bands) {
        return Err(Error::Shape(format!(
            "target {:?} does not match output {:?}",
            target.shape(),
            (g.height(), g.width(), spec.bands)
        )));
    }
    let n_shallow = spec.branch_kernels(&spec.shallow).len();
    let mut out: Option<Tensor<T>> = None;
    let mut caches = Vec::new();
    for (branch, layers) in [(Branch::Shallow, &spec.shallow), (Branch::Deep, &spec.deep)] {
        if layers.is_empty() {
            continue;
        }
        let off = branch_offset(spec, branch);
        let mut cache = Vec::new();
        let y = run_branch(g, layers, &params.kernels[off..], Some(&mut cache))?;
        match out.as_mut() {
            Some(acc) => add_assign(acc, &y)?,
            None => out = Some(y),
        }
        caches.push((branch, cache));
    }
    let out = out.ok_or_else(|| Error::Spec("network has no branches".into()))?;

    let norm = match scale {
        LossScale::Sum => 1.0,
        LossScale::PixelMean => 1.0 / (out.values().len() as f64),
    };
    let mut loss = 0.0f64;
    let mut grad_out = Tensor::zeros(out.height(), out.width(), out.channels());
    let two_norm = T::of(2.0 * norm);
    for ((gv, &o), &t) in grad_out
        .values_mut()
        .iter_mut()
        .zip(out.values())
        .zip(target.values())
    {
        let r = o - t;
        loss += r.f64() * r.f64();
        *gv = two_norm * r;
    }
    loss *= norm;

    let mut grads = params.zeros_like();
    for (branch, cache) in caches {
        let (lo, hi) = match branch {
            Branch::Shallow => (0, n_shallow),
            Branch::Deep => (n_shallow, params.kernels.len()),
        };
        backprop_branch(
            cache,
            &params.kernels[lo..hi],
            &mut grads.kernels[lo..hi],
            &grad_out,
        )?;
    }
    Ok(SampleGrad { loss, grads })
}
