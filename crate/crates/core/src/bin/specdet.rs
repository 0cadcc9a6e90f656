use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use specdet::config::RunConfig;
use specdet::pipeline;

#[derive(Parser)]
#[command(
    name = "specdet",
    version,
    about = "Synthetic RF spectrogram detection toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct Common {
    /// Master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Dataset root.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (0 = all hardware threads).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// `key = value` config file; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Extra `key=value` overrides.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Print the effective config and exit.
    #[arg(long, global = true)]
    print_config: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize scenes and write images, labels, provenance, manifest and split.
    Generate {
        #[command(flatten)]
        common: Common,
        /// Combinations kept per class count, or `all`.
        #[arg(long)]
        combos_per_k: Option<String>,
        #[arg(long)]
        configs: Option<usize>,
        #[arg(long)]
        realizations: Option<usize>,
    },
    /// Aspect-ratio and side-length histograms of the labels.
    Stats {
        #[command(flatten)]
        common: Common,
    },
    /// Default-pyramid match report or k-means anchors.
    Anchors {
        #[command(flatten)]
        common: Common,
        /// `default-report` or `kmeans`.
        #[arg(long)]
        mode: Option<String>,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        tau: Option<f64>,
    },
    /// Run the energy-threshold detector over every image.
    DetectBaseline {
        #[command(flatten)]
        common: Common,
        /// Threshold multiplier on the noise spread.
        #[arg(long)]
        k: Option<f64>,
        /// 4 or 8.
        #[arg(long)]
        connectivity: Option<String>,
        #[arg(long)]
        min_area: Option<usize>,
        #[arg(long)]
        predictions: Option<PathBuf>,
    },
    /// Score a predictions directory against the labels.
    Evaluate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        predictions: Option<PathBuf>,
        #[arg(long)]
        class_agnostic: bool,
        /// File of scene ids to score.
        #[arg(long)]
        ids: Option<PathBuf>,
    },
}

fn build_config(common: &Common, extra: &[(&str, Option<String>)]) -> anyhow::Result<RunConfig> {
    let mut cfg = match &common.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    for kv in &common.set {
        let (k, v) = kv
            .split_once('=')
            .with_context(|| format!("--set expects KEY=VALUE, got {kv:?}"))?;
        cfg.set(k, v)?;
    }
    let common_flags = [
        ("seed", common.seed.map(|v| v.to_string())),
        ("out", common.out.as_ref().map(|p| p.display().to_string())),
        ("jobs", common.jobs.map(|v| v.to_string())),
    ];
    for (k, v) in common_flags.iter().chain(extra) {
        if let Some(v) = v {
            cfg.set(k, v)?;
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

fn path_str(p: &Option<PathBuf>) -> Option<String> {
    p.as_ref().map(|p| p.display().to_string())
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let (common, extra): (&Common, Vec<(&str, Option<String>)>) = match &cli.command {
        Command::Generate {
            common,
            combos_per_k,
            configs,
            realizations,
        } => (
            common,
            vec![
                ("combos_per_k", combos_per_k.clone()),
                ("configs", configs.map(|v| v.to_string())),
                ("realizations", realizations.map(|v| v.to_string())),
            ],
        ),
        Command::Stats { common } => (common, vec![]),
        Command::Anchors {
            common,
            mode,
            k,
            tau,
        } => (
            common,
            vec![
                ("anchor_mode", mode.clone()),
                ("anchor_k", k.map(|v| v.to_string())),
                ("anchor_tau", tau.map(|v| v.to_string())),
            ],
        ),
        Command::DetectBaseline {
            common,
            k,
            connectivity,
            min_area,
            predictions,
        } => (
            common,
            vec![
                ("detector_k", k.map(|v| v.to_string())),
                ("detector_connectivity", connectivity.clone()),
                ("detector_min_area", min_area.map(|v| v.to_string())),
                ("predictions", path_str(predictions)),
            ],
        ),
        Command::Evaluate {
            common,
            predictions,
            class_agnostic,
            ids,
        } => (
            common,
            vec![
                ("predictions", path_str(predictions)),
                ("class_agnostic", class_agnostic.then(|| "true".to_string())),
                ("eval_ids", path_str(ids)),
            ],
        ),
    };
    let cfg = build_config(common, &extra)?;
    if common.print_config {
        print!("{}", cfg.to_text());
        return Ok(());
    }
    match cli.command {
        Command::Generate { .. } => {
            let r = pipeline::cmd_generate(&cfg)?;
            println!("wrote {} scenes to {}", r.scene_ids.len(), r.root.display());
        }
        Command::Stats { .. } => {
            let s = pipeline::cmd_stats(&cfg)?;
            println!("{}", s.summary());
        }
        Command::Anchors { .. } => {
            let r = pipeline::cmd_anchors(&cfg)?;
            print!("{}", r.to_text(cfg.anchor_tau));
        }
        Command::DetectBaseline { .. } => {
            let n = pipeline::cmd_detect_baseline(&cfg)?;
            println!(
                "wrote {n} detections to {}",
                cfg.predictions_dir().display()
            );
        }
        Command::Evaluate { .. } => {
            let s = pipeline::cmd_evaluate(&cfg)?;
            print!("{}", s.to_report());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
