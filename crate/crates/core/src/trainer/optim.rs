use super::{ClipMode, TrainConfig, TrainState};
use crate::error::{Error, Result};
use crate::msdcnn::ParamSet;
use crate::nn::{Real, Tensor};

/// ε₀ · γ^⌊epoch / interval⌋.
pub fn lr_at(epoch: usize, config: &TrainConfig) -> f64 {
    let steps = (epoch / config.decay_interval.max(1)) as i32;
    config.learning_rate * config.decay_factor.powi(steps)
}

/// Mean over the batch of the per-sample sum of squared errors.
pub fn batch_loss<T: Real>(outputs: &[Tensor<T>], targets: &[Tensor<T>]) -> Result<f64> {
    if outputs.len() != targets.len() || outputs.is_empty() {
        return Err(Error::Shape(format!(
            "batch loss over {} outputs and {} targets",
            outputs.len(),
            targets.len()
        )));
    }
    let mut total = 0.0;
    for (o, t) in outputs.iter().zip(targets) {
        o.ensure_shape(t, "batch loss")?;
        total += o
            .values()
            .iter()
            .zip(t.values())
            .map(|(a, b)| (a.f64() - b.f64()).powi(2))
            .sum::<f64>();
    }
    Ok(total / outputs.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClipReport {
    /// Joint L2 norm before clipping.
    pub norm: f64,
    pub clipped: bool,
}

/// Limit the gradient norm in place. Non-finite gradients are reported as divergence.
pub fn clip_gradients<T: Real>(
    grads: &mut ParamSet<T>,
    threshold: f64,
    mode: ClipMode,
) -> Result<ClipReport> {
    if threshold.is_nan() || threshold <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "clip threshold {threshold} must be positive"
        )));
    }
    if !grads.all_finite() {
        return Err(Error::Divergence {
            iteration: 0,
            reason: "non-finite gradient".into(),
        });
    }
    let norm = grads.l2_norm();
    match mode {
        ClipMode::Cap => {
            if norm > threshold {
                grads.scale(T::of(threshold / norm));
                Ok(ClipReport {
                    norm,
                    clipped: true,
                })
            } else {
                Ok(ClipReport {
                    norm,
                    clipped: false,
                })
            }
        }
        ClipMode::ExactRescale => {
            let (wn, bn) = (grads.weight_norm(), grads.bias_norm());
            let (ws, bs) = (
                if wn > 0.0 {
                    T::of(threshold / wn)
                } else {
                    T::one()
                },
                if bn > 0.0 {
                    T::of(threshold / bn)
                } else {
                    T::one()
                },
            );
            for k in &mut grads.kernels {
                k.weights.iter_mut().for_each(|v| *v *= ws);
                k.bias.iter_mut().for_each(|v| *v *= bs);
            }
            Ok(ClipReport {
                norm,
                clipped: wn > 0.0 || bn > 0.0,
            })
        }
    }
}

/// Δθ ← μ·Δθ − ε·δθ, then θ ← θ + Δθ, with ε = `state.lr`.
pub fn cm_update<T: Real>(
    state: &mut TrainState<T>,
    grads: &ParamSet<T>,
    momentum: f64,
) -> Result<()> {
    state.params.ensure_matches(grads)?;
    state.velocity.ensure_matches(grads)?;
    let mu = T::of(momentum);
    let eps = T::of(state.lr);
    for (v, &g) in state.velocity.values_mut().zip(grads.values()) {
        *v = mu * *v - eps * g;
    }
    for (p, &v) in state.params.values_mut().zip(state.velocity.values()) {
        *p += v;
    }
    state.iteration += 1;
    Ok(())
}
