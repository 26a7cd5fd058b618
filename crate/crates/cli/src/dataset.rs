//! On-disk patch datasets written by `simulate` and read by `train`.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use pansharp_core::raster::{load_png, load_raster, save_raster, PatchPair, RasterStack};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const MANIFEST: &str = "manifest.json";
pub const FORMAT: &str = "pansharp-dataset-1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneRecord {
    pub name: String,
    /// Reference MS geometry `[height, width, bands]`.
    pub ms: [usize; 3],
    /// Full-resolution PAN geometry `[height, width]`.
    pub pan: [usize; 2],
    pub candidates: usize,
    pub kept: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format: String,
    pub seed: u64,
    pub ratio: usize,
    pub patch: usize,
    pub stride: usize,
    pub bands: usize,
    pub count: usize,
    pub scenes: Vec<SceneRecord>,
    /// SHA-256 over every patch file in index order.
    pub content_hash: String,
}

pub fn patch_paths(dir: &Path, index: usize) -> (PathBuf, PathBuf) {
    let base = dir.join("patches");
    (
        base.join(format!("{index:06}.input.psr")),
        base.join(format!("{index:06}.target.psr")),
    )
}

/// Read a raster by extension: `.png` through the image codec, anything else as PSR1.
pub fn load_any(path: &Path) -> Result<RasterStack> {
    let is_png = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("png"));
    let r = if is_png {
        load_png(path)
    } else {
        load_raster(path)
    };
    r.with_context(|| format!("loading {}", path.display()))
}

pub fn save(stack: &RasterStack, path: &Path) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    save_raster(stack, path).with_context(|| format!("writing {}", path.display()))
}

/// Write patches and return the content hash.
pub fn write_patches(dir: &Path, patches: &[PatchPair]) -> Result<String> {
    let mut hasher = Sha256::new();
    for (i, p) in patches.iter().enumerate() {
        let (ip, tp) = patch_paths(dir, i);
        save(&p.input, &ip)?;
        save(&p.target, &tp)?;
        for path in [&ip, &tp] {
            hasher.update(
                fs::read(path).with_context(|| format!("reading back {}", path.display()))?,
            );
        }
    }
    Ok(hex::encode(hasher.finalize()))
}

pub fn read_manifest(dir: &Path) -> Result<Manifest> {
    let path = dir.join(MANIFEST);
    let text = fs::read_to_string(&path)
        .with_context(|| format!("reading dataset manifest {}", path.display()))?;
    let m: Manifest =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    if m.format != FORMAT {
        bail!(
            "{} has format {:?}, expected {FORMAT:?}",
            path.display(),
            m.format
        );
    }
    Ok(m)
}

pub fn load_patches(dir: &Path) -> Result<(Manifest, Vec<PatchPair>)> {
    let m = read_manifest(dir)?;
    let mut out = Vec::with_capacity(m.count);
    for i in 0..m.count {
        let (ip, tp) = patch_paths(dir, i);
        let pair = PatchPair::new(load_any(&ip)?, load_any(&tp)?)
            .with_context(|| format!("patch {i} in {}", dir.display()))?;
        if pair.target.bands() != m.bands || pair.side() != m.patch {
            bail!("patch {i} does not match the manifest geometry");
        }
        out.push(pair);
    }
    Ok((m, out))
}
