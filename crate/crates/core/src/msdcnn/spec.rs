use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Kernel sides of the three parallel convolutions in a multi-scale layer.
pub const BLOCK_SCALES: [usize; 3] = [3, 5, 7];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    None,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LayerSpec {
    Conv {
        kh: usize,
        kw: usize,
        c_out: usize,
        activation: Activation,
    },
    /// `depth` stacked multi-scale layers, each producing `3 · n_per_scale`
    /// channels; with `skip` the block input is added to the last layer's output.
    MultiScaleBlock {
        n_per_scale: usize,
        skip: bool,
        #[serde(default = "one")]
        depth: usize,
    },
}

impl LayerSpec {
    pub fn conv(k: usize, c_out: usize, activation: Activation) -> Self {
        LayerSpec::Conv {
            kh: k,
            kw: k,
            c_out,
            activation,
        }
    }

    pub fn block(n_per_scale: usize, skip: bool) -> Self {
        LayerSpec::MultiScaleBlock {
            n_per_scale,
            skip,
            depth: 1,
        }
    }

    fn out_channels(&self) -> usize {
        match *self {
            LayerSpec::Conv { c_out, .. } => c_out,
            LayerSpec::MultiScaleBlock { n_per_scale, .. } => 3 * n_per_scale,
        }
    }

    /// Spatial reach of the layer in pixels.
    fn radius(&self) -> usize {
        match *self {
            LayerSpec::Conv { kh, kw, .. } => kh.max(kw) / 2,
            LayerSpec::MultiScaleBlock { depth, .. } => depth * (BLOCK_SCALES[2] / 2),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KernelShape {
    pub kh: usize,
    pub kw: usize,
    pub c_in: usize,
    pub c_out: usize,
}

impl KernelShape {
    pub fn param_count(&self) -> usize {
        self.kh * self.kw * self.c_in * self.c_out + self.c_out
    }
}

/// Two-branch network description. An empty branch is absent and contributes nothing.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkSpec {
    pub bands: usize,
    #[serde(default)]
    pub shallow: Vec<LayerSpec>,
    #[serde(default)]
    pub deep: Vec<LayerSpec>,
}

/// Shallow branch after PNN/SRCNN (9-5-5) plus a deep branch with two
/// residual multi-scale blocks and a 60→30 reduction between them.
pub fn default_spec(bands: usize) -> NetworkSpec {
    use Activation::*;
    NetworkSpec {
        bands,
        shallow: vec![
            LayerSpec::conv(9, 64, Relu),
            LayerSpec::conv(5, 32, Relu),
            LayerSpec::conv(5, bands, None),
        ],
        deep: vec![
            LayerSpec::conv(7, 60, Relu),
            LayerSpec::block(20, true),
            LayerSpec::conv(3, 30, Relu),
            LayerSpec::block(10, true),
            LayerSpec::conv(5, bands, None),
        ],
    }
}

pub const PRESETS: [&str; 5] = [
    "msdcnn-default",
    "msdcnn-tiny",
    "pnn-shallow",
    "block2",
    "block3",
];

pub fn preset(name: &str, bands: usize) -> Result<NetworkSpec> {
    use Activation::*;
    let spec = match name {
        "msdcnn-default" => default_spec(bands),
        // roughly one eighth of the default widths
        "msdcnn-tiny" => NetworkSpec {
            bands,
            shallow: vec![
                LayerSpec::conv(9, 8, Relu),
                LayerSpec::conv(5, 4, Relu),
                LayerSpec::conv(5, bands, None),
            ],
            deep: vec![
                LayerSpec::conv(7, 12, Relu),
                LayerSpec::block(4, true),
                LayerSpec::conv(3, 6, Relu),
                LayerSpec::block(2, true),
                LayerSpec::conv(5, bands, None),
            ],
        },
        "pnn-shallow" => NetworkSpec {
            deep: Vec::new(),
            ..default_spec(bands)
        },
        "block2" => NetworkSpec {
            deep: vec![
                LayerSpec::conv(7, 60, Relu),
                LayerSpec::MultiScaleBlock {
                    n_per_scale: 20,
                    skip: true,
                    depth: 2,
                },
                LayerSpec::conv(3, 30, Relu),
                LayerSpec::MultiScaleBlock {
                    n_per_scale: 10,
                    skip: true,
                    depth: 2,
                },
                LayerSpec::conv(5, bands, None),
            ],
            ..default_spec(bands)
        },
        "block3" => NetworkSpec {
            deep: vec![
                LayerSpec::conv(7, 60, Relu),
                LayerSpec::block(20, true),
                LayerSpec::block(20, true),
                LayerSpec::conv(5, bands, None),
            ],
            ..default_spec(bands)
        },
        other => {
            return Err(Error::Spec(format!(
                "unknown preset {other:?}; known: {}",
                PRESETS.join(", ")
            )));
        }
    };
    spec.validate()?;
    Ok(spec)
}

impl NetworkSpec {
    pub fn input_channels(&self) -> usize {
        self.bands + 1
    }

    pub fn validate(&self) -> Result<()> {
        if self.bands == 0 {
            return Err(Error::Spec("bands must be ≥ 1".into()));
        }
        if self.shallow.is_empty() && self.deep.is_empty() {
            return Err(Error::Spec("at least one branch must be non-empty".into()));
        }
        for (name, layers) in [("shallow", &self.shallow), ("deep", &self.deep)] {
            if layers.is_empty() {
                continue;
            }
            let mut c = self.input_channels();
            for (i, l) in layers.iter().enumerate() {
                match *l {
                    LayerSpec::Conv { kh, kw, c_out, .. } => {
                        if kh % 2 == 0 || kw % 2 == 0 {
                            return Err(Error::Spec(format!(
                                "{name}[{i}]: kernel {kh}×{kw} must have odd sides"
                            )));
                        }
                        if c_out == 0 {
                            return Err(Error::Spec(format!("{name}[{i}]: c_out must be ≥ 1")));
                        }
                    }
                    LayerSpec::MultiScaleBlock {
                        n_per_scale,
                        skip,
                        depth,
                    } => {
                        if n_per_scale == 0 || depth == 0 {
                            return Err(Error::Spec(format!(
                                "{name}[{i}]: block needs n_per_scale ≥ 1 and depth ≥ 1"
                            )));
                        }
                        if skip && c != 3 * n_per_scale {
                            return Err(Error::Spec(format!(
                                "{name}[{i}]: block with {} output channels cannot take {c} input channels",
                                3 * n_per_scale
                            )));
                        }
                    }
                }
                c = l.out_channels();
            }
            match layers.last() {
                Some(LayerSpec::Conv {
                    c_out,
                    activation: Activation::None,
                    ..
                }) if *c_out == self.bands => {}
                _ => {
                    return Err(Error::Spec(format!(
                        "{name} branch must end with a linear conv producing {} channels",
                        self.bands
                    )))
                }
            }
        }
        Ok(())
    }

    /// Kernel shapes of one branch in parameter order.
    pub fn branch_kernels(&self, layers: &[LayerSpec]) -> Vec<KernelShape> {
        let mut out = Vec::new();
        let mut c = self.input_channels();
        for l in layers {
            match *l {
                LayerSpec::Conv { kh, kw, c_out, .. } => out.push(KernelShape {
                    kh,
                    kw,
                    c_in: c,
                    c_out,
                }),
                LayerSpec::MultiScaleBlock {
                    n_per_scale, depth, ..
                } => {
                    let mut ci = c;
                    for _ in 0..depth {
                        for k in BLOCK_SCALES {
                            out.push(KernelShape {
                                kh: k,
                                kw: k,
                                c_in: ci,
                                c_out: n_per_scale,
                            });
                        }
                        ci = 3 * n_per_scale;
                    }
                }
            }
            c = l.out_channels();
        }
        out
    }

    /// All kernel shapes: shallow branch first, then deep.
    pub fn kernel_shapes(&self) -> Vec<KernelShape> {
        let mut v = self.branch_kernels(&self.shallow);
        v.extend(self.branch_kernels(&self.deep));
        v
    }

    pub fn param_count(&self) -> usize {
        self.kernel_shapes()
            .iter()
            .map(KernelShape::param_count)
            .sum()
    }

    pub fn branch_param_count(&self, layers: &[LayerSpec]) -> usize {
        self.branch_kernels(layers)
            .iter()
            .map(KernelShape::param_count)
            .sum()
    }

    /// Largest distance from an output pixel to any input pixel that influences it.
    pub fn receptive_radius(&self) -> usize {
        [&self.shallow, &self.deep]
            .iter()
            .map(|layers| layers.iter().map(LayerSpec::radius).sum::<usize>())
            .max()
            .unwrap_or(0)
    }

    /// Channel count after each layer of a branch, starting with the input.
    pub fn channel_chain(&self, layers: &[LayerSpec]) -> Vec<usize> {
        let mut v = vec![self.input_channels()];
        v.extend(layers.iter().map(LayerSpec::out_channels));
        v
    }

    /// Short content hash of the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("spec serializes");
        let digest = Sha256::digest(json.as_bytes());
        hex::encode(&digest[..8])
    }
}
