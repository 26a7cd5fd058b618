use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::ValueEnum;
use pansharp_core::baselines::{bicubic_baseline, sfim, sfim_side};
use pansharp_core::metrics::{full_reference, no_reference, MetricConventions};
use pansharp_core::msdcnn::{load_checkpoint, sharpen_msdcnn, InferenceOptions};
use pansharp_core::raster::{bicubic_resize, save_png, RasterStack};
use serde::Serialize;

use crate::dataset::{self, load_any};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Msdcnn,
    Bicubic,
    Sfim,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Msdcnn => "msdcnn",
            Algorithm::Bicubic => "bicubic",
            Algorithm::Sfim => "sfim",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum Mode {
    FullRef,
    NoRef,
}

#[derive(Debug, Clone, Default)]
pub struct SharpenOptions {
    pub checkpoint: Option<PathBuf>,
    /// Force tiled inference with this interior side.
    pub tile: Option<usize>,
    pub sfim_side: Option<usize>,
}

fn ratio_of(ms: &RasterStack, pan: &RasterStack) -> Result<usize> {
    if pan.bands() != 1 {
        bail!("PAN must be single-band, got {} bands", pan.bands());
    }
    let r = pan.height() / ms.height();
    if r < 2 || pan.height() != r * ms.height() || pan.width() != r * ms.width() {
        bail!(
            "PAN {}×{} is not an integer multiple (≥ 2) of MS {}×{}",
            pan.height(),
            pan.width(),
            ms.height(),
            ms.width()
        );
    }
    Ok(r)
}

pub fn sharpen(
    alg: Algorithm,
    ms: &RasterStack,
    pan: &RasterStack,
    opts: &SharpenOptions,
) -> Result<RasterStack> {
    let ratio = ratio_of(ms, pan)?;
    Ok(match alg {
        Algorithm::Bicubic => bicubic_baseline(ms, ratio)?,
        Algorithm::Sfim => {
            let up = bicubic_resize(ms, pan.height(), pan.width())?;
            sfim(&up, pan, opts.sfim_side.unwrap_or(sfim_side(ratio)))?
        }
        Algorithm::Msdcnn => {
            let Some(ck) = &opts.checkpoint else {
                bail!("algorithm msdcnn needs --checkpoint");
            };
            let (spec, params) = load_checkpoint(ck)
                .with_context(|| format!("loading checkpoint {}", ck.display()))?;
            let mut inf = InferenceOptions::default();
            if let Some(t) = opts.tile {
                inf = InferenceOptions {
                    tile: t,
                    max_pixels: 0,
                };
            }
            sharpen_msdcnn(ms, pan, &spec, &params, inf)?
        }
    })
}

pub fn sharpen_files(
    alg: Algorithm,
    ms: &Path,
    pan: &Path,
    out: &Path,
    png: Option<&Path>,
    opts: &SharpenOptions,
) -> Result<RasterStack> {
    let fused = sharpen(alg, &load_any(ms)?, &load_any(pan)?, opts)?;
    dataset::save(&fused, out)?;
    if let Some(p) = png {
        save_png(&fused, p).with_context(|| format!("writing preview {}", p.display()))?;
    }
    Ok(fused)
}

/// `*.psr` files in a directory keyed by file stem.
fn raster_files(dir: &Path) -> Result<BTreeMap<String, PathBuf>> {
    let mut out = BTreeMap::new();
    for entry in fs::read_dir(dir).with_context(|| format!("listing {}", dir.display()))? {
        let path = entry?.path();
        if path.is_file() && path.extension().is_some_and(|e| e == "psr") {
            if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
                out.insert(stem.to_string(), path.clone());
            }
        }
    }
    Ok(out)
}

/// Algorithm label → fused files. Subdirectories name algorithms; loose files
/// use `label`.
fn fused_sets(dir: &Path, label: &str) -> Result<BTreeMap<String, BTreeMap<String, PathBuf>>> {
    let mut sets = BTreeMap::new();
    let loose = raster_files(dir)?;
    if !loose.is_empty() {
        sets.insert(label.to_string(), loose);
    }
    for entry in fs::read_dir(dir).with_context(|| format!("listing {}", dir.display()))? {
        let path = entry?.path();
        if path.is_dir() {
            let files = raster_files(&path)?;
            if !files.is_empty() {
                let name = path
                    .file_name()
                    .and_then(|s| s.to_str())
                    .unwrap_or("fused")
                    .to_string();
                sets.insert(name, files);
            }
        }
    }
    if sets.is_empty() {
        bail!("no .psr files under {}", dir.display());
    }
    Ok(sets)
}

fn check_matched(
    alg: &str,
    fused: &BTreeMap<String, PathBuf>,
    refs: &[&BTreeMap<String, PathBuf>],
) -> Result<()> {
    let mut problems = Vec::new();
    for id in fused.keys() {
        if refs.iter().any(|r| !r.contains_key(id)) {
            problems.push(format!("{alg}/{id} has no reference"));
        }
    }
    for r in refs {
        for id in r.keys() {
            if !fused.contains_key(id) {
                problems.push(format!("reference {id} has no {alg} fusion"));
            }
        }
    }
    if !problems.is_empty() {
        bail!("unmatched file pairs: {}", problems.join("; "));
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct Row {
    pub image_id: String,
    pub algorithm: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct EvalReport {
    pub mode: Mode,
    pub ratio: usize,
    pub conventions: MetricConventions,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Row>,
    pub means: Vec<Row>,
}

pub enum References<'a> {
    Full { truth: &'a Path },
    NoRef { ms: &'a Path, pan: &'a Path },
}

fn fmt(v: f64) -> String {
    if v.is_infinite() {
        if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{v}")
    }
}

/// Infinite values serialize as strings so the JSON stays valid.
fn json_values(rows: &[Row]) -> serde_json::Value {
    rows.iter()
        .map(|r| {
            let vals: Vec<serde_json::Value> = r
                .values
                .iter()
                .map(|&v| {
                    if v.is_finite() {
                        serde_json::json!(v)
                    } else {
                        serde_json::json!(fmt(v))
                    }
                })
                .collect();
            serde_json::json!({ "image_id": r.image_id, "algorithm": r.algorithm, "values": vals })
        })
        .collect()
}

pub fn evaluate(
    fused_dir: &Path,
    label: &str,
    refs: References<'_>,
    ratio: usize,
    conv: &MetricConventions,
    out: &Path,
) -> Result<EvalReport> {
    let sets = fused_sets(fused_dir, label)?;
    let (mode, columns): (Mode, Vec<&'static str>) = match refs {
        References::Full { .. } => (Mode::FullRef, vec!["psnr", "q", "ergas", "sam", "q2n"]),
        References::NoRef { .. } => (Mode::NoRef, vec!["qnr", "d_lambda", "d_s"]),
    };
    let mut rows = Vec::new();
    let mut means = Vec::new();
    for (alg, fused) in &sets {
        let mut alg_rows = Vec::new();
        match &refs {
            References::Full { truth } => {
                let t = raster_files(truth)?;
                check_matched(alg, fused, &[&t])?;
                for (id, fp) in fused {
                    let r = full_reference(&load_any(fp)?, &load_any(&t[id])?, ratio, conv)
                        .with_context(|| format!("scoring {alg}/{id}"))?;
                    alg_rows.push(Row {
                        image_id: id.clone(),
                        algorithm: alg.clone(),
                        values: vec![r.psnr, r.q, r.ergas, r.sam, r.q2n],
                    });
                }
            }
            References::NoRef { ms, pan } => {
                let m = raster_files(ms)?;
                let p = raster_files(pan)?;
                check_matched(alg, fused, &[&m, &p])?;
                for (id, fp) in fused {
                    let r = no_reference(
                        &load_any(fp)?,
                        &load_any(&m[id])?,
                        &load_any(&p[id])?,
                        ratio,
                        conv,
                    )
                    .with_context(|| format!("scoring {alg}/{id}"))?;
                    alg_rows.push(Row {
                        image_id: id.clone(),
                        algorithm: alg.clone(),
                        values: vec![r.qnr, r.d_lambda, r.d_s],
                    });
                }
            }
        }
        let n = alg_rows.len() as f64;
        let mean = (0..columns.len())
            .map(|c| alg_rows.iter().map(|r| r.values[c]).sum::<f64>() / n)
            .collect();
        means.push(Row {
            image_id: "mean".into(),
            algorithm: alg.clone(),
            values: mean,
        });
        rows.extend(alg_rows);
    }

    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let csv_path = out.join("metrics.csv");
    let mut w = csv::Writer::from_path(&csv_path)
        .with_context(|| format!("writing {}", csv_path.display()))?;
    let mut header = vec!["image_id", "algorithm"];
    header.extend(&columns);
    w.write_record(&header)?;
    for r in rows.iter().chain(&means) {
        let mut rec = vec![r.image_id.clone(), r.algorithm.clone()];
        rec.extend(r.values.iter().map(|&v| fmt(v)));
        w.write_record(&rec)?;
    }
    w.flush()?;

    let report = EvalReport {
        mode,
        ratio,
        conventions: conv.clone(),
        columns,
        rows,
        means,
    };
    let json = serde_json::json!({
        "mode": report.mode,
        "ratio": report.ratio,
        "conventions": report.conventions,
        "columns": report.columns,
        "rows": json_values(&report.rows),
        "means": json_values(&report.means),
    });
    let jp = out.join("report.json");
    fs::write(&jp, serde_json::to_string_pretty(&json)? + "\n")
        .with_context(|| format!("writing {}", jp.display()))?;
    Ok(report)
}

/// Sharpen every MS file with each algorithm, then score the results.
#[allow(clippy::too_many_arguments)]
pub fn compare(
    algorithms: &[Algorithm],
    ms_dir: &Path,
    pan_dir: &Path,
    truth_dir: Option<&Path>,
    opts: &SharpenOptions,
    ratio: usize,
    conv: &MetricConventions,
    out: &Path,
) -> Result<EvalReport> {
    let ms = raster_files(ms_dir)?;
    let pan = raster_files(pan_dir)?;
    if ms.is_empty() {
        bail!("no .psr files in {}", ms_dir.display());
    }
    let fused_root = out.join("fused");
    for alg in algorithms {
        for (id, mp) in &ms {
            let Some(pp) = pan.get(id) else {
                bail!("MS image {id} has no PAN partner in {}", pan_dir.display());
            };
            sharpen_files(
                *alg,
                mp,
                pp,
                &fused_root.join(alg.name()).join(format!("{id}.psr")),
                None,
                opts,
            )
            .with_context(|| format!("sharpening {id} with {}", alg.name()))?;
        }
    }
    let refs = match truth_dir {
        Some(t) => References::Full { truth: t },
        None => References::NoRef {
            ms: ms_dir,
            pan: pan_dir,
        },
    };
    evaluate(&fused_root, "fused", refs, ratio, conv, out)
}
