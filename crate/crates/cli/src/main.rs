//! `memkernel` command-line workbench.

mod config;
mod reproduce;
mod tasks;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use config::{ExperimentConfig, Task};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "memkernel",
    version,
    about = "Memory kernels, influence functions and spectral densities of open quantum systems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Experiment configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory, overriding `output.dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Order override: `discretization.order`, and the sole extraction order.
    #[arg(long)]
    order: Option<usize>,
    /// Seed for synthetic noise, overriding `seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Allow orders above the configured cap.
    #[arg(long)]
    allow_high_order: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run the task named in the configuration file.
    Run(Common),
    /// Propagate the reduced density matrix.
    Propagate(Common),
    /// Build memory kernels from Dyck diagrams.
    Kernels(Common),
    /// Invert kernels to influence functions, `eta` and the spectral density.
    Invert(Common),
    /// Extract the spectral density from reduced trajectories.
    #[command(name = "extract-jw", alias = "extract")]
    ExtractJw(Common),
    /// List the Dyck recipes of one order as JSON.
    Dyck {
        #[arg(long)]
        order: usize,
        /// Include arcs and path statistics for every recipe.
        #[arg(long)]
        dump: bool,
        #[arg(long)]
        allow_high_order: bool,
    },
    /// Regenerate the data behind a published panel.
    Reproduce {
        /// Panel id, e.g. `fig2a`, `fig3c2`, `driven-b`, `structured-b`, `ferm-jw`.
        id: String,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

fn print(summary: &impl serde::Serialize) -> Result<()> {
    println!("{}", serde_json::to_string(summary)?);
    Ok(())
}

fn load(common: &Common, task: Option<Task>) -> Result<(ExperimentConfig, Task)> {
    let mut cfg = ExperimentConfig::from_path(&common.config)?;
    let task = match (task, cfg.task) {
        (Some(t), Some(c)) if t != c => {
            bail!("task: configuration requests {} but {} was invoked", c.name(), t.name())
        }
        (Some(t), _) | (None, Some(t)) => t,
        (None, None) => bail!("task: not set in the configuration; name one on the command line"),
    };
    if let Some(dir) = &common.out {
        cfg.output.dir = dir.clone();
    }
    if let Some(order) = common.order {
        cfg.discretization.order = order;
        if task == Task::ExtractJw {
            cfg.extraction.orders = vec![order];
        }
    }
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    cfg.validate(task, common.allow_high_order)?;
    Ok((cfg, task))
}

fn execute(common: &Common, task: Option<Task>) -> Result<()> {
    let (cfg, task) = load(common, task)?;
    let summary = tasks::run(&cfg, task, &cfg.output.dir)?;
    print(&summary)
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run(c) => execute(&c, None),
        Command::Propagate(c) => execute(&c, Some(Task::Propagate)),
        Command::Kernels(c) => execute(&c, Some(Task::Kernels)),
        Command::Invert(c) => execute(&c, Some(Task::Invert)),
        Command::ExtractJw(c) => execute(&c, Some(Task::ExtractJw)),
        Command::Dyck { order, dump, allow_high_order } => {
            if order > config::DEFAULT_ORDER_CAP && !allow_high_order {
                bail!(
                    "order: {order} exceeds the order cap {} (pass --allow-high-order to override)",
                    config::DEFAULT_ORDER_CAP
                );
            }
            print(&tasks::dyck_listing(order, dump)?)
        }
        Command::Reproduce { id, out } => {
            let jobs = reproduce::preset(&id)?;
            for job in jobs {
                let dir = out.join(&id).join(&job.name);
                job.config.validate(job.task, false).with_context(|| format!("preset {id}/{}", job.name))?;
                let mut summary = tasks::run(&job.config, job.task, &dir)?;
                summary.job = Some(format!("{id}/{}", job.name));
                print(&summary)?;
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
