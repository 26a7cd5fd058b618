use rand_distr::{Distribution, StandardNormal};

use super::spec::NetworkSpec;
use crate::error::{Error, Result};
use crate::nn::{ConvKernel, Real};
use crate::rng::prng;

/// Learned kernels of a network, in flat layer order. The same type holds
/// gradients and momentum buffers.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamSet<T> {
    pub kernels: Vec<ConvKernel<T>>,
}

/// He-style Gaussian init, std = sqrt(2 / (kh·kw·c_in)), zero biases.
///
/// Weights are drawn from a single SplitMix64 stream in flat parameter order.
pub fn build_params<T: Real>(spec: &NetworkSpec, seed: u64) -> Result<ParamSet<T>> {
    spec.validate()?;
    let mut rng = prng(seed);
    let mut kernels = Vec::new();
    for s in spec.kernel_shapes() {
        let std = (2.0 / (s.kh * s.kw * s.c_in) as f64).sqrt();
        let n = s.kh * s.kw * s.c_in * s.c_out;
        let weights = (0..n)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut rng);
                T::of(z * std)
            })
            .collect();
        kernels.push(ConvKernel::new(
            s.kh,
            s.kw,
            s.c_in,
            s.c_out,
            weights,
            vec![T::zero(); s.c_out],
        )?);
    }
    let p = ParamSet { kernels };
    debug_assert_eq!(p.len(), spec.param_count());
    Ok(p)
}

impl<T: Real> ParamSet<T> {
    pub fn zeros(spec: &NetworkSpec) -> Result<Self> {
        let kernels = spec
            .kernel_shapes()
            .iter()
            .map(|s| ConvKernel::zeros(s.kh, s.kw, s.c_in, s.c_out))
            .collect::<Result<_>>()?;
        Ok(Self { kernels })
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            kernels: self
                .kernels
                .iter()
                .map(|k| ConvKernel {
                    kh: k.kh,
                    kw: k.kw,
                    c_in: k.c_in,
                    c_out: k.c_out,
                    weights: vec![T::zero(); k.weights.len()],
                    bias: vec![T::zero(); k.bias.len()],
                })
                .collect(),
        }
    }

    /// Total number of scalars.
    pub fn len(&self) -> usize {
        self.kernels.iter().map(ConvKernel::param_count).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn matches(&self, spec: &NetworkSpec) -> bool {
        let shapes = spec.kernel_shapes();
        shapes.len() == self.kernels.len()
            && shapes.iter().zip(&self.kernels).all(|(s, k)| {
                (s.kh, s.kw, s.c_in, s.c_out) == (k.kh, k.kw, k.c_in, k.c_out)
                    && k.weights.len() == s.kh * s.kw * s.c_in * s.c_out
                    && k.bias.len() == s.c_out
            })
    }

    pub fn ensure_matches(&self, other: &ParamSet<T>) -> Result<()> {
        let same =
            self.kernels.len() == other.kernels.len()
                && self.kernels.iter().zip(&other.kernels).all(|(a, b)| {
                    a.weights.len() == b.weights.len() && a.bias.len() == b.bias.len()
                });
        if same {
            Ok(())
        } else {
            Err(Error::Shape("parameter sets have different layouts".into()))
        }
    }

    /// Flat order: per kernel, weights then bias.
    pub fn values(&self) -> impl Iterator<Item = &T> {
        self.kernels
            .iter()
            .flat_map(|k| k.weights.iter().chain(k.bias.iter()))
    }

    pub fn values_mut(&mut self) -> impl Iterator<Item = &mut T> {
        self.kernels
            .iter_mut()
            .flat_map(|k| k.weights.iter_mut().chain(k.bias.iter_mut()))
    }

    pub fn to_flat(&self) -> Vec<T> {
        self.values().copied().collect()
    }

    pub fn from_flat(spec: &NetworkSpec, flat: &[T]) -> Result<Self> {
        let mut p = Self::zeros(spec)?;
        if flat.len() != p.len() {
            return Err(Error::Shape(format!(
                "{} values for a spec with {} parameters",
                flat.len(),
                p.len()
            )));
        }
        for (d, &s) in p.values_mut().zip(flat) {
            *d = s;
        }
        Ok(p)
    }

    /// Global L2 norm over every weight and bias, accumulated in f64.
    pub fn l2_norm(&self) -> f64 {
        self.values().map(|v| v.f64() * v.f64()).sum::<f64>().sqrt()
    }

    pub fn weight_norm(&self) -> f64 {
        self.kernels
            .iter()
            .flat_map(|k| k.weights.iter())
            .map(|v| v.f64() * v.f64())
            .sum::<f64>()
            .sqrt()
    }

    pub fn bias_norm(&self) -> f64 {
        self.kernels
            .iter()
            .flat_map(|k| k.bias.iter())
            .map(|v| v.f64() * v.f64())
            .sum::<f64>()
            .sqrt()
    }

    pub fn all_finite(&self) -> bool {
        self.values().all(|v| v.is_finite())
    }

    pub fn scale(&mut self, s: T) {
        for v in self.values_mut() {
            *v *= s;
        }
    }

    /// `self += alpha · other`.
    pub fn axpy(&mut self, alpha: T, other: &ParamSet<T>) -> Result<()> {
        self.ensure_matches(other)?;
        for (a, &b) in self.values_mut().zip(other.values()) {
            *a += alpha * b;
        }
        Ok(())
    }

    pub fn add_assign(&mut self, other: &ParamSet<T>) -> Result<()> {
        self.ensure_matches(other)?;
        for (a, &b) in self.values_mut().zip(other.values()) {
            *a += b;
        }
        Ok(())
    }

    pub fn cast<U: Real>(&self) -> ParamSet<U> {
        ParamSet {
            kernels: self.kernels.iter().map(ConvKernel::cast).collect(),
        }
    }
}
