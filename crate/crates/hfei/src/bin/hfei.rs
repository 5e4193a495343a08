//! Thin command-line front end over [`hfei::cli`].

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use hfei::cli::{cmd_estimate, cmd_export_index, cmd_grid, cmd_prepare, cmd_regime, RunConfig};

#[derive(Parser)]
#[command(
    name = "hfei",
    about = "Weekly economic-activity index from mixed-frequency data",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Flat key = value configuration file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for every random draw in the command.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker-thread cap for internally parallel commands.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Build the pseudo-weekly growth panel from raw observations.
    Prepare {
        #[command(flatten)]
        common: Common,
        /// Observation file: series_id,date,value rows.
        #[arg(long)]
        data: Option<PathBuf>,
        /// Metadata sidecar: series_id,frequency,kind,zero_fill[,anchor,proxy,proxy_break].
        #[arg(long)]
        meta: Option<PathBuf>,
    },
    /// Run the Gibbs sampler and write the draw store and index tables.
    Estimate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        panel: PanelArgs,
    },
    /// Compare the eight model specifications by conditional DIC.
    Grid {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        panel: PanelArgs,
    },
    /// Fit the recession model to the stored factor path.
    Regime {
        #[command(flatten)]
        common: Common,
        /// Draw store directory written by `estimate`.
        #[arg(long)]
        draws: Option<PathBuf>,
    },
    /// Regenerate the index tables from a draw store.
    ExportIndex {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        panel: PanelArgs,
        /// Draw store directory written by `estimate`.
        #[arg(long)]
        draws: Option<PathBuf>,
    },
}

#[derive(Args)]
struct PanelArgs {
    /// Growth panel written by `prepare`.
    #[arg(long)]
    panel: Option<PathBuf>,
    /// Panel metadata sidecar written by `prepare`.
    #[arg(long = "panel-meta")]
    panel_meta: Option<PathBuf>,
    /// Quarterly series whose loading is normalized to one.
    #[arg(long = "gdp-series")]
    gdp_series: Option<String>,
}

fn build_config(common: &Common) -> Result<RunConfig, hfei::Error> {
    let mut cfg = match &common.config {
        Some(path) => RunConfig::from_file(path)?,
        None => RunConfig::new(),
    };
    if let Some(out) = &common.out {
        cfg.set("out", &out.display().to_string());
    }
    if let Some(seed) = common.seed {
        cfg.set("seed", &seed.to_string());
    }
    if let Some(threads) = common.threads {
        cfg.set("threads", &threads.to_string());
    }
    Ok(cfg)
}

fn apply_panel_args(cfg: &mut RunConfig, panel: &PanelArgs) {
    if let Some(p) = &panel.panel {
        cfg.set("panel", &p.display().to_string());
    }
    if let Some(p) = &panel.panel_meta {
        cfg.set("panel_meta", &p.display().to_string());
    }
    if let Some(id) = &panel.gdp_series {
        cfg.set("gdp_series", id);
    }
}

fn run() -> Result<(), hfei::Error> {
    let cli = Cli::parse();
    match &cli.command {
        Command::Prepare { common, data, meta } => {
            let mut cfg = build_config(common)?;
            if let Some(p) = data {
                cfg.set("data", &p.display().to_string());
            }
            if let Some(p) = meta {
                cfg.set("meta", &p.display().to_string());
            }
            cmd_prepare(&cfg)
        }
        Command::Estimate { common, panel } => {
            let mut cfg = build_config(common)?;
            apply_panel_args(&mut cfg, panel);
            cmd_estimate(&cfg)
        }
        Command::Grid { common, panel } => {
            let mut cfg = build_config(common)?;
            apply_panel_args(&mut cfg, panel);
            cmd_grid(&cfg)
        }
        Command::Regime { common, draws } => {
            let mut cfg = build_config(common)?;
            if let Some(p) = draws {
                cfg.set("draws", &p.display().to_string());
            }
            cmd_regime(&cfg)
        }
        Command::ExportIndex {
            common,
            panel,
            draws,
        } => {
            let mut cfg = build_config(common)?;
            apply_panel_args(&mut cfg, panel);
            if let Some(p) = draws {
                cfg.set("draws", &p.display().to_string());
            }
            cmd_export_index(&cfg)
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error[{}]: {err}", err.category());
            ExitCode::FAILURE
        }
    }
}
