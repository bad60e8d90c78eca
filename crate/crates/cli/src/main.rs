mod bench;
mod commands;
mod config;
mod textio;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use crate::config::ToolConfig;

#[derive(Debug, Parser)]
#[command(name = "rrkit", version, about = "Rotated-box detection kernels from the command line")]
struct Cli {
    /// TOML file of defaults; flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads. RRKIT_THREADS, when set, caps this.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Rotated IoU for each pair of boxes.
    Iou(commands::IouArgs),
    /// Greedy rotated non-maximum suppression.
    Nms(commands::NmsArgs),
    /// Per-class AP and mAP of Task-1 detections against DOTA annotations.
    Eval(commands::EvalArgs),
    /// Plan overlapping tiles and remap an annotation into them.
    Tile(commands::TileArgs),
    /// Run feature reconstruction on a tensor file.
    FrmDemo(commands::FrmArgs),
    /// Throughput of a kernel on a seeded synthetic workload.
    Bench(bench::BenchArgs),
    /// Print the effective configuration.
    Config,
}

fn thread_cap(flag: Option<usize>, cfg: Option<usize>) -> Result<Option<usize>> {
    let env = match std::env::var("RRKIT_THREADS") {
        Ok(v) => Some(
            v.trim()
                .parse::<usize>()
                .ok()
                .filter(|&n| n > 0)
                .ok_or_else(|| rrkit::Error::InvalidConfig(format!("RRKIT_THREADS `{v}` is not a positive integer")))?,
        ),
        Err(_) => None,
    };
    if flag == Some(0) {
        return Err(rrkit::Error::InvalidArg("--threads must be positive".into()).into());
    }
    Ok([flag.or(cfg), env].into_iter().flatten().min())
}

fn run(cli: Cli) -> Result<()> {
    let cfg = ToolConfig::load(cli.config.as_deref())?;
    cfg.validate().context("invalid configuration")?;
    if let Some(n) = thread_cap(cli.threads, cfg.threads)? {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("starting the worker pool")?;
    }
    match &cli.command {
        Command::Iou(a) => commands::iou(a, &cfg),
        Command::Nms(a) => commands::nms(a, &cfg),
        Command::Eval(a) => commands::eval(a, &cfg),
        Command::Tile(a) => commands::tile(a, &cfg),
        Command::FrmDemo(a) => commands::frm_demo(a),
        Command::Bench(a) => {
            println!("{}", bench::run(a)?);
            Ok(())
        }
        Command::Config => commands::show_config(&cfg),
    }
}

/// Short machine-readable category for the first recognizable cause.
fn error_kind(e: &anyhow::Error) -> (&'static str, Option<usize>) {
    for cause in e.chain() {
        if let Some(k) = cause.downcast_ref::<rrkit::Error>() {
            use rrkit::Error::*;
            return match k {
                Parse { line, .. } => ("parse", Some(*line)),
                InvalidConfig(_) => ("config", None),
                InvalidArg(_) | UnknownVariant(_) => ("invalid_argument", None),
                Io(_) => ("io", None),
                _ => ("kernel", None),
            };
        }
        if cause.is::<std::io::Error>() {
            return ("io", None);
        }
        if cause.is::<toml::de::Error>() {
            return ("config", None);
        }
        if cause.is::<serde_json::Error>() {
            return ("parse", None);
        }
    }
    ("error", None)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let (kind, line) = error_kind(&e);
            let mut obj = serde_json::json!({ "error": kind, "message": format!("{e:#}") });
            if let Some(l) = line {
                obj["line"] = l.into();
            }
            eprintln!("{obj}");
            ExitCode::FAILURE
        }
    }
}
