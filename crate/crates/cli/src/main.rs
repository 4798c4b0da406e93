mod commands;
mod config;
mod eval;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use dr_forge::metrics::EvalKind;

use commands::BaselineMethod;
use config::PipelineConfig;

#[derive(Parser)]
#[command(name = "dr-forge", version, about = "Synthetic rendering data pipeline")]
struct Cli {
    /// TOML config layered over the built-in defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads; defaults to one per core.
    #[arg(long, global = true, env = "DR_FORGE_THREADS")]
    threads: Option<usize>,
    /// Base seed, overriding the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, default_value = "info")]
    log_level: log::LevelFilter,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate scene descriptions and a dataset manifest.
    GenScenes {
        #[arg(long)]
        count: usize,
        #[arg(long)]
        seed_base: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Path-trace every clip of a manifest with G-buffers and lighting encodings.
    RenderDataset {
        /// Manifest file or the directory holding it.
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        spp: Option<u32>,
        #[arg(long)]
        frames: Option<usize>,
        #[arg(long)]
        res: Option<usize>,
        /// 256 spp, 512x512, 24 frames; explicit flags still win.
        #[arg(long)]
        paper_scale: bool,
    },
    /// Encode an environment map into LDR, log and direction maps.
    EncodeEnv {
        #[arg(long)]
        env: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Yaw rotation in radians.
        #[arg(long, default_value_t = 0.0)]
        yaw: f64,
        #[arg(long)]
        flip: bool,
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
        /// Scene whose camera defines the direction frame.
        #[arg(long)]
        scene: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        frame: usize,
    },
    /// Shade a rendered dataset's G-buffers with a classical baseline.
    Baseline {
        #[arg(value_enum)]
        method: BaselineMethod,
        /// Rendered dataset directory or manifest.
        #[arg(long)]
        gbuffer: PathBuf,
        /// Environment map used for every frame instead of each clip's own.
        #[arg(long)]
        env: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        clip: Option<String>,
        #[arg(long)]
        spp: Option<u32>,
    },
    /// Insert an object into a background with the shading-ratio composite.
    Composite {
        #[arg(long)]
        bg: PathBuf,
        #[arg(long)]
        ins: PathBuf,
        #[arg(long)]
        bg_rerender: PathBuf,
        #[arg(long)]
        mask: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score predictions against ground truth and write a JSON report.
    Eval {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        gt: PathBuf,
        #[arg(long)]
        kind: EvalKind,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check a rendered dataset; exits 1 when anything is found.
    Validate {
        /// Manifest file or the directory holding it.
        manifest: PathBuf,
    },
}

fn init_logging(level: log::LevelFilter) {
    env_logger::Builder::new()
        .filter_level(level)
        .format(|buf, record| {
            writeln!(
                buf,
                "ts={} level={} target={} msg={:?}",
                buf.timestamp_millis(),
                record.level(),
                record.target(),
                record.args().to_string()
            )
        })
        .init();
}

fn run(cli: Cli) -> Result<bool> {
    if let Some(n) = cli.threads {
        anyhow::ensure!(n > 0, "--threads must be at least 1");
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    let mut cfg = PipelineConfig::load(cli.config.as_deref())?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Command::RenderDataset {
        spp,
        frames,
        res,
        paper_scale,
        ..
    } = &cli.command
    {
        if *paper_scale {
            cfg.apply_paper_scale();
        }
        cfg.renderer.spp = spp.unwrap_or(cfg.renderer.spp);
        cfg.renderer.frames = frames.unwrap_or(cfg.renderer.frames);
        cfg.renderer.resolution = res.unwrap_or(cfg.renderer.resolution);
    }
    if let Command::Baseline { spp: Some(spp), .. } = &cli.command {
        cfg.renderer.spp = *spp;
    }
    cfg.validate()?;
    log::debug!("config digest {}", cfg.digest());

    match &cli.command {
        Command::GenScenes { count, seed_base, out } => commands::gen_scenes(&cfg, *count, *seed_base, out)?,
        Command::RenderDataset { manifest, out, .. } => commands::render_dataset(&cfg, manifest, out)?,
        Command::EncodeEnv {
            env,
            out,
            yaw,
            flip,
            scale,
            scene,
            frame,
        } => commands::encode_env(&commands::EncodeArgs {
            env,
            out,
            yaw: *yaw,
            flip: *flip,
            scale: *scale,
            scene: scene.as_deref(),
            frame: *frame,
        })?,
        Command::Baseline {
            method,
            gbuffer,
            env,
            out,
            clip,
            ..
        } => commands::baseline(
            &cfg,
            &commands::BaselineArgs {
                method: *method,
                gbuffer,
                env: env.as_deref(),
                out,
                clip: clip.as_deref(),
            },
        )?,
        Command::Composite {
            bg,
            ins,
            bg_rerender,
            mask,
            out,
        } => commands::composite(
            &cfg,
            &commands::CompositeArgs {
                bg,
                ins,
                bg_rerender,
                mask,
                out,
            },
        )?,
        Command::Eval { pred, gt, kind, out } => {
            let report = eval::evaluate(pred, gt, *kind, cfg.metrics.tonemap)?;
            dr_forge::io::write_json(out, &report)?;
            log::info!(
                "evaluated {} clips: {}",
                report.clips.len(),
                summary(&report.aggregate)
            );
        }
        Command::Validate { manifest } => return commands::validate(manifest),
    }
    Ok(true)
}

fn summary(v: &dr_forge::metrics::MetricValues) -> String {
    let mut parts = Vec::new();
    let mut push = |name: &str, x: Option<f64>| {
        if let Some(x) = x {
            parts.push(format!("{name}={x:.4}"));
        }
    };
    push("psnr", v.psnr);
    push("ssim", v.ssim);
    push("si_psnr", v.si_psnr);
    push("rmse", v.rmse);
    push("angular_error_deg", v.angular_error_deg);
    parts.join(" ")
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    init_logging(cli.log_level);
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            log::error!("{e:#}");
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
