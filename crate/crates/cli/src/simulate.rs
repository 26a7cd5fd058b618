use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use pansharp_core::raster::{
    extract_patches, synthetic::synthetic_scene, wald_simulate, window_count, RasterStack,
};
use pansharp_core::rng::{derive_seed, prng};
use rand::seq::SliceRandom;

use crate::config::ExperimentConfig;
use crate::dataset::{self, load_any, Manifest, SceneRecord, FORMAT, MANIFEST};

const SUBSET_STREAM: u64 = 0x5355_4253;
const SCENE_STREAM: u64 = 0x5343_4e45;

fn gather_scenes(cfg: &ExperimentConfig) -> Result<Vec<(String, RasterStack, RasterStack)>> {
    let d = &cfg.data;
    if !d.scenes.is_empty() {
        return d
            .scenes
            .iter()
            .map(|s| Ok((s.name.clone(), load_any(&s.ms)?, load_any(&s.pan)?)))
            .collect();
    }
    let Some(syn) = &d.synthetic else {
        bail!("config lists no data.scenes and no data.synthetic block");
    };
    (0..syn.count)
        .map(|i| {
            let seed = derive_seed(cfg.seed, SCENE_STREAM ^ i as u64);
            let scene = synthetic_scene(syn.height, syn.width, syn.bands, d.ratio, seed)?;
            Ok((format!("synthetic_{i:03}"), scene.ms, scene.pan))
        })
        .collect()
}

/// Wald-simulate every scene, cut training patches and write the dataset.
pub fn run(cfg: &ExperimentConfig, out: &Path) -> Result<Manifest> {
    let d = &cfg.data;
    let scenes = gather_scenes(cfg)?;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let bands = scenes[0].1.bands();
    let mut all = Vec::new();
    let mut owner = Vec::new();
    let mut records = Vec::new();
    for (k, (name, ms, pan)) in scenes.iter().enumerate() {
        if ms.bands() != bands {
            bail!(
                "scene {name} has {} bands, first scene has {bands}",
                ms.bands()
            );
        }
        // the reduced grid needs sides divisible by the ratio; trailing rows and columns are dropped
        let (hc, wc) = (
            ms.height() / d.ratio * d.ratio,
            ms.width() / d.ratio * d.ratio,
        );
        if hc == 0 || wc == 0 {
            bail!("scene {name} is smaller than the ratio {}", d.ratio);
        }
        if pan.height() != ms.height() * d.ratio || pan.width() != ms.width() * d.ratio {
            bail!(
                "scene {name}: PAN {}×{} is not {}× the MS {}×{}",
                pan.height(),
                pan.width(),
                d.ratio,
                ms.height(),
                ms.width()
            );
        }
        let ms_c = ms.crop(0, 0, hc, wc)?;
        let pan_c = pan.crop(0, 0, hc * d.ratio, wc * d.ratio)?;
        let w = wald_simulate(&ms_c, &pan_c, d.ratio)
            .with_context(|| format!("simulating scene {name}"))?;
        for (sub, r) in [
            ("ms_low", &w.ms_low),
            ("pan", &w.pan),
            ("truth", &w.truth),
            ("full_ms", &ms_c),
            ("full_pan", &pan_c),
        ] {
            dataset::save(r, &out.join("scenes").join(sub).join(format!("{name}.psr")))?;
        }
        let patches = extract_patches(&w.ms_up, &w.pan, &w.truth, d.patch, d.stride)
            .with_context(|| format!("cutting patches from scene {name}"))?;
        debug_assert_eq!(
            patches.len(),
            window_count(ms_c.height(), d.patch, d.stride)
                * window_count(ms_c.width(), d.patch, d.stride)
        );
        records.push(SceneRecord {
            name: name.clone(),
            ms: [ms.height(), ms.width(), ms.bands()],
            pan: [pan.height(), pan.width()],
            candidates: patches.len(),
            kept: 0,
        });
        owner.extend(std::iter::repeat_n(k, patches.len()));
        all.extend(patches);
    }
    let mut keep: Vec<usize> = (0..all.len()).collect();
    if let Some(max) = d.max_patches {
        if max < all.len() {
            keep.shuffle(&mut prng(derive_seed(cfg.seed, SUBSET_STREAM)));
            keep.truncate(max);
            keep.sort_unstable();
        }
    }
    for &i in &keep {
        records[owner[i]].kept += 1;
    }
    let kept: Vec<_> = keep.iter().map(|&i| all[i].clone()).collect();
    let content_hash = dataset::write_patches(out, &kept)?;
    let manifest = Manifest {
        format: FORMAT.into(),
        seed: cfg.seed,
        ratio: d.ratio,
        patch: d.patch,
        stride: d.stride,
        bands,
        count: kept.len(),
        scenes: records,
        content_hash,
    };
    let path = out.join(MANIFEST);
    fs::write(&path, serde_json::to_string_pretty(&manifest)? + "\n")
        .with_context(|| format!("writing {}", path.display()))?;
    cfg.echo(out, "config.resolved.json")?;
    Ok(manifest)
}
