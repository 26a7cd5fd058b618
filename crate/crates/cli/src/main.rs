//! `pansharp`: simulate training data, train, sharpen and score pan-sharpening runs.

mod assess;
mod config;
mod dataset;
mod simulate;
mod train;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Result};
use clap::{Args, Parser, Subcommand};
use pansharp_core::par::with_threads;
use pansharp_core::trainer::{ClipMode, GradMode};

use assess::{Algorithm, Mode, References, SharpenOptions};
use config::ExperimentConfig;

#[derive(Parser)]
#[command(
    name = "pansharp",
    version,
    about = "Multi-scale CNN pan-sharpening toolkit"
)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Experiment configuration (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override the master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Single-threaded numerics.
    #[arg(long, global = true)]
    deterministic: bool,
    /// Rescale weight and bias gradients separately to the threshold every step.
    #[arg(long, global = true)]
    exact_eq17: bool,
    #[arg(long, global = true, value_parser = parse_grad_mode)]
    grad_mode: Option<GradMode>,
}

fn parse_grad_mode(s: &str) -> Result<GradMode, String> {
    match s {
        "batch_mean" => Ok(GradMode::BatchMean),
        "single_sample" => Ok(GradMode::SingleSample),
        _ => Err(format!("expected batch_mean or single_sample, got {s:?}")),
    }
}

#[derive(Subcommand)]
enum Command {
    /// Wald-simulate scenes and write a patch dataset.
    Simulate {
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a network on a simulated dataset.
    Train {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Continue from a checkpoint written by an earlier run.
        #[arg(long)]
        resume: Option<PathBuf>,
    },
    /// Fuse one MS/PAN pair.
    Sharpen {
        #[arg(long, value_enum, default_value = "msdcnn")]
        algorithm: Algorithm,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long)]
        ms: PathBuf,
        #[arg(long)]
        pan: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Force tiled inference with this tile side.
        #[arg(long)]
        tile: Option<usize>,
        #[arg(long)]
        sfim_side: Option<usize>,
        /// Also write an RGB preview.
        #[arg(long)]
        png: Option<PathBuf>,
    },
    /// Score fused images against references.
    Evaluate {
        #[arg(long, value_enum)]
        mode: Mode,
        /// Fused files, or one subdirectory of fused files per algorithm.
        #[arg(long)]
        fused: PathBuf,
        /// Reference MS directory (full_ref).
        #[arg(long)]
        truth: Option<PathBuf>,
        /// Low-resolution MS directory (no_ref).
        #[arg(long)]
        ms: Option<PathBuf>,
        /// Full-resolution PAN directory (no_ref).
        #[arg(long)]
        pan: Option<PathBuf>,
        /// Label for loose fused files.
        #[arg(long, default_value = "fused")]
        algorithm: String,
        #[arg(long)]
        ratio: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Sharpen with several algorithms and score them side by side.
    Compare {
        #[arg(
            long,
            value_enum,
            value_delimiter = ',',
            default_value = "msdcnn,bicubic,sfim"
        )]
        algorithm: Vec<Algorithm>,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long)]
        ms: PathBuf,
        #[arg(long)]
        pan: PathBuf,
        /// Reference MS directory; without it scoring is no-reference.
        #[arg(long)]
        truth: Option<PathBuf>,
        #[arg(long)]
        tile: Option<usize>,
        #[arg(long)]
        sfim_side: Option<usize>,
        #[arg(long)]
        ratio: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn resolve_config(g: &Global) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(g.config.as_deref())?;
    if g.exact_eq17 {
        cfg.train.clip_mode = ClipMode::ExactRescale;
    }
    if let Some(m) = g.grad_mode {
        cfg.train.grad_mode = m;
    }
    cfg.resolve(g.seed)
}

fn run(cli: Cli) -> Result<()> {
    let cfg = resolve_config(&cli.global)?;
    match cli.command {
        Command::Simulate { out } => {
            let m = simulate::run(&cfg, &out)?;
            println!(
                "wrote {} patches from {} scenes to {} (hash {})",
                m.count,
                m.scenes.len(),
                out.display(),
                m.content_hash
            );
        }
        Command::Train { data, out, resume } => {
            let s = train::run(&cfg, &data, &out, resume.as_deref())?;
            println!(
                "parameters: total {} (shallow {}, deep {})",
                s.params.total, s.params.shallow, s.params.deep
            );
            println!(
                "trained {} epochs / {} iterations, final batch loss {}; checkpoint {}",
                s.epochs,
                s.iterations,
                s.final_loss.map_or("n/a".into(), |l| l.to_string()),
                s.final_checkpoint.display()
            );
        }
        Command::Sharpen {
            algorithm,
            checkpoint,
            ms,
            pan,
            out,
            tile,
            sfim_side,
            png,
        } => {
            let opts = SharpenOptions {
                checkpoint,
                tile,
                sfim_side,
            };
            let f = assess::sharpen_files(algorithm, &ms, &pan, &out, png.as_deref(), &opts)?;
            println!(
                "{} fusion {}×{}×{} written to {}",
                algorithm.name(),
                f.height(),
                f.width(),
                f.bands(),
                out.display()
            );
        }
        Command::Evaluate {
            mode,
            fused,
            truth,
            ms,
            pan,
            algorithm,
            ratio,
            out,
        } => {
            let refs = match (mode, truth.as_deref(), ms.as_deref(), pan.as_deref()) {
                (Mode::FullRef, Some(t), _, _) => References::Full { truth: t },
                (Mode::NoRef, _, Some(m), Some(p)) => References::NoRef { ms: m, pan: p },
                (Mode::FullRef, None, _, _) => bail!("full_ref mode needs --truth"),
                (Mode::NoRef, ..) => bail!("no_ref mode needs --ms and --pan"),
            };
            let r = assess::evaluate(
                &fused,
                &algorithm,
                refs,
                ratio.unwrap_or(cfg.data.ratio),
                &cfg.eval,
                &out,
            )?;
            println!(
                "scored {} images; results in {}",
                r.rows.len(),
                out.display()
            );
        }
        Command::Compare {
            algorithm,
            checkpoint,
            ms,
            pan,
            truth,
            tile,
            sfim_side,
            ratio,
            out,
        } => {
            let opts = SharpenOptions {
                checkpoint,
                tile,
                sfim_side,
            };
            let r = assess::compare(
                &algorithm,
                &ms,
                &pan,
                truth.as_deref(),
                &opts,
                ratio.unwrap_or(cfg.data.ratio),
                &cfg.eval,
                &out,
            )?;
            cfg.echo(&out, "config.resolved.json")?;
            for m in &r.means {
                let vals: Vec<String> = r
                    .columns
                    .iter()
                    .zip(&m.values)
                    .map(|(c, v)| format!("{c} {v:.4}"))
                    .collect();
                println!("{:>8}: {}", m.algorithm, vals.join("  "));
            }
        }
    }
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    let diverged = err.chain().any(|e| {
        e.downcast_ref::<pansharp_core::Error>()
            .is_some_and(|e| e.is_divergence())
    });
    if diverged {
        3
    } else {
        2
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let threads = cli.global.deterministic.then_some(1);
    match with_threads(threads, || run(cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
