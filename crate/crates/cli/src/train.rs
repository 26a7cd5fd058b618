use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use pansharp_core::msdcnn::{
    load_checkpoint, load_flat, save_checkpoint, save_flat, NetworkSpec, ParamSet,
};
use pansharp_core::trainer::{
    prepare_samples, train_from, IterationRecord, TrainObserver, TrainState,
};
use pansharp_core::Error as CoreError;
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::dataset::load_patches;

pub const LOG: &str = "train_log.csv";
pub const FINAL: &str = "final.msdp";
const HEADER: &str = "iteration,epoch,lr,batch_loss,grad_norm_preclip,clipped";

/// Counters stored next to each checkpoint so a run can resume.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateSidecar {
    pub epoch: usize,
    pub iteration: u64,
    pub lr: f64,
    pub loss_history: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ParamReport {
    pub total: usize,
    pub shallow: usize,
    pub deep: usize,
    pub spec_hash: String,
}

pub struct TrainSummary {
    pub params: ParamReport,
    pub final_checkpoint: PathBuf,
    pub epochs: usize,
    pub iterations: u64,
    pub final_loss: Option<f64>,
}

fn sidecar(path: &Path, ext: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(ext);
    PathBuf::from(s)
}

pub fn checkpoint_name(epoch: usize) -> String {
    format!("epoch_{epoch:04}.msdp")
}

fn write_state(
    path: &Path,
    spec: &NetworkSpec,
    state: &TrainState<f32>,
) -> pansharp_core::Result<()> {
    save_checkpoint(path, spec, &state.params)?;
    save_flat(
        &sidecar(path, ".velocity"),
        &spec.hash(),
        &state.velocity.to_flat(),
    )?;
    let side = StateSidecar {
        epoch: state.epoch,
        iteration: state.iteration,
        lr: state.lr,
        loss_history: state.loss_history.clone(),
    };
    let sp = sidecar(path, ".state.json");
    fs::write(&sp, serde_json::to_string(&side)? + "\n")
        .map_err(|source| CoreError::Io { path: sp, source })
}

fn read_state(path: &Path, spec: &NetworkSpec) -> Result<TrainState<f32>> {
    let (saved, params) =
        load_checkpoint(path).with_context(|| format!("loading checkpoint {}", path.display()))?;
    if &saved != spec {
        bail!(
            "checkpoint {} was trained with a different network spec",
            path.display()
        );
    }
    let vp = sidecar(path, ".velocity");
    let flat = load_flat(&vp).with_context(|| format!("loading {}", vp.display()))?;
    if flat.spec_hash != spec.hash() {
        bail!("{} belongs to a different network spec", vp.display());
    }
    let velocity = ParamSet::from_flat(spec, &flat.values)?;
    let sp = sidecar(path, ".state.json");
    let side: StateSidecar = serde_json::from_str(
        &fs::read_to_string(&sp).with_context(|| format!("reading {}", sp.display()))?,
    )
    .with_context(|| format!("parsing {}", sp.display()))?;
    Ok(TrainState {
        params,
        velocity,
        epoch: side.epoch,
        iteration: side.iteration,
        lr: side.lr,
        loss_history: side.loss_history,
    })
}

struct Recorder<'a> {
    log: BufWriter<File>,
    spec: &'a NetworkSpec,
    out: &'a Path,
    interval: usize,
}

fn io_err(path: &Path, source: std::io::Error) -> CoreError {
    CoreError::Io {
        path: path.to_path_buf(),
        source,
    }
}

impl TrainObserver<f32> for Recorder<'_> {
    fn on_iteration(&mut self, r: &IterationRecord) -> pansharp_core::Result<()> {
        writeln!(
            self.log,
            "{},{},{},{},{},{}",
            r.iteration, r.epoch, r.lr, r.batch_loss, r.grad_norm_preclip, r.clipped as u8
        )
        .map_err(|e| io_err(&self.out.join(LOG), e))
    }

    fn on_epoch_end(&mut self, state: &TrainState<f32>) -> pansharp_core::Result<()> {
        self.log
            .flush()
            .map_err(|e| io_err(&self.out.join(LOG), e))?;
        if self.interval > 0 && state.epoch.is_multiple_of(self.interval) {
            let dir = self.out.join("checkpoints");
            fs::create_dir_all(&dir).map_err(|e| io_err(&dir, e))?;
            write_state(&dir.join(checkpoint_name(state.epoch)), self.spec, state)?;
        }
        Ok(())
    }
}

/// Keep the header and every row logged before `iteration`.
fn truncate_log(path: &Path, iteration: u64) -> Result<()> {
    let kept: Vec<String> = match File::open(path) {
        Ok(f) => BufReader::new(f)
            .lines()
            .skip(1)
            .map_while(|l| l.ok())
            .filter(|l| {
                l.split(',')
                    .next()
                    .and_then(|v| v.parse::<u64>().ok())
                    .is_some_and(|i| i < iteration)
            })
            .collect(),
        Err(_) => Vec::new(),
    };
    let mut text = String::from(HEADER);
    text.push('\n');
    for l in kept {
        text.push_str(&l);
        text.push('\n');
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn run(
    cfg: &ExperimentConfig,
    data: &Path,
    out: &Path,
    resume: Option<&Path>,
) -> Result<TrainSummary> {
    let (manifest, patches) = load_patches(data)?;
    let spec = cfg.network.resolve(manifest.bands)?;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    cfg.echo(out, "config.resolved.json")?;

    let params = ParamReport {
        total: spec.param_count(),
        shallow: spec.branch_param_count(&spec.shallow),
        deep: spec.branch_param_count(&spec.deep),
        spec_hash: spec.hash(),
    };
    fs::write(
        out.join("params.json"),
        serde_json::to_string_pretty(&params)? + "\n",
    )
    .with_context(|| format!("writing {}", out.join("params.json").display()))?;

    let state = match resume {
        Some(p) => read_state(p, &spec)?,
        None => TrainState::init(&spec, &cfg.train)?,
    };
    let log_path = out.join(LOG);
    truncate_log(&log_path, state.iteration)?;
    let file = OpenOptions::new()
        .append(true)
        .open(&log_path)
        .with_context(|| format!("opening {}", log_path.display()))?;
    let mut rec = Recorder {
        log: BufWriter::new(file),
        spec: &spec,
        out,
        interval: cfg.train.checkpoint_interval,
    };

    let samples = prepare_samples::<f32>(&patches);
    let state = train_from(&samples, &spec, &cfg.train, state, &mut rec)?;
    rec.log
        .flush()
        .with_context(|| format!("writing {}", log_path.display()))?;

    let final_checkpoint = out.join(FINAL);
    write_state(&final_checkpoint, &spec, &state)?;
    Ok(TrainSummary {
        params,
        final_checkpoint,
        epochs: state.epoch,
        iterations: state.iteration,
        final_loss: state.loss_history.last().copied(),
    })
}
