use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

mod commands;
mod config;
mod report;

use config::{parse_list, parse_omega, RunConfig};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error(transparent)]
    Lab(#[from] icclab::Error),
    #[error("cannot write {path}: {source}")]
    Write {
        path: String,
        source: std::io::Error,
    },
}

/// Exit statuses, in increasing severity after success.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Status {
    Ok = 0,
    InputError = 1,
    SoftWarning = 2,
    AssertionFailure = 3,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Parser)]
#[command(name = "icclab", version, about = "Isotropic curvature cone laboratory")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct GlobalArgs {
    /// JSON run configuration; flags override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    dim: Option<usize>,
    #[arg(long, global = true, env = "ICCLAB_SEED")]
    seed: Option<u64>,
    #[arg(long, global = true)]
    theta: Option<f64>,
    /// `reciprocal[:S]`, `constant:V`, `power:S:E`, or a number (constant).
    #[arg(long, global = true)]
    omega: Option<String>,
    /// Comma-separated b values.
    #[arg(long, global = true)]
    b_grid: Option<String>,
    #[arg(long, global = true)]
    budget_restarts: Option<usize>,
    #[arg(long, global = true)]
    budget_iters: Option<usize>,
    #[arg(long, global = true)]
    tol_weak: Option<f64>,
    #[arg(long, global = true)]
    tol_interior: Option<f64>,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t)]
    format: Format,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// PIC, PIC1, PIC2 and uniform-PIC margins of a tensor file.
    Classify { input: PathBuf },
    /// The deviation functional p1 of a strictly PIC tensor.
    P1 { input: PathBuf },
    /// Integrate dR/dt = Q(R) and track cone margins.
    Flow {
        input: PathBuf,
        #[arg(long)]
        t_end: Option<f64>,
        /// Comma-separated cones: PIC, PIC1, PIC2, UPIC, UPIC:θ, EB:b.
        #[arg(long)]
        cones: Option<String>,
        /// Integrator tolerance.
        #[arg(long)]
        tol_flow: Option<f64>,
    },
    /// Search the b grid for a pinching cone containing the tensor.
    Pipeline { input: PathBuf },
    /// Reaction-inequality stress test on seeded near-boundary tensors.
    Lemma31 {
        #[arg(long)]
        count: Option<usize>,
        /// Comma-separated dimensions.
        #[arg(long)]
        dims: Option<String>,
    },
    /// Identity residual tables for the shrinking soliton models.
    Models {
        #[arg(long)]
        points: Option<usize>,
        /// Comma-separated dimensions; defaults to --dim.
        #[arg(long)]
        dims: Option<String>,
    },
    /// Write a tensor file.
    Gen {
        #[arg(value_enum)]
        kind: GenKind,
        /// Curvature scale for sphere and cylinder.
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
        /// Random class: bianchi_generic, pic_interior, near_pic1_boundary.
        #[arg(long, default_value = "bianchi_generic")]
        class: String,
        /// Size of the negative axis-plane perturbation.
        #[arg(long, default_value_t = 0.05)]
        eps: f64,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum GenKind {
    Sphere,
    Cylinder,
    Random,
    PerturbedCylinder,
}

fn build_config(g: &GlobalArgs, cmd: &Command) -> Result<RunConfig, CliError> {
    let mut cfg = match &g.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    // env seed sits below the config file; clap folds it into `seed`, so a
    // file value wins unless the flag itself was given
    let seed_from_flag = std::env::args().any(|a| a == "--seed" || a.starts_with("--seed="));
    if let Some(s) = g.seed {
        if seed_from_flag || g.config.is_none() {
            cfg.seed = s;
        }
    }
    if let Some(d) = g.dim {
        cfg.dim = d;
    }
    if let Some(t) = g.theta {
        cfg.theta = t;
    }
    if let Some(o) = &g.omega {
        cfg.omega_schedule = parse_omega(o)?;
    }
    if let Some(b) = &g.b_grid {
        cfg.b_grid = parse_list(b, "b-grid")?;
    }
    if let Some(r) = g.budget_restarts {
        cfg.budget.restarts = r;
    }
    if let Some(i) = g.budget_iters {
        cfg.budget.iterations = i;
    }
    if let Some(t) = g.tol_weak {
        cfg.tolerances.insert("weak".into(), t);
    }
    if let Some(t) = g.tol_interior {
        cfg.tolerances.insert("interior".into(), t);
    }
    if let Some(o) = &g.out {
        cfg.output = Some(o.display().to_string());
    }
    match cmd {
        Command::Classify { input } | Command::P1 { input } | Command::Pipeline { input } => {
            cfg.input = Some(input.display().to_string());
        }
        Command::Flow {
            input,
            t_end,
            cones,
            tol_flow,
        } => {
            cfg.input = Some(input.display().to_string());
            if let Some(t) = t_end {
                cfg.flow.t_end = *t;
            }
            if let Some(c) = cones {
                cfg.flow.cones = parse_list(c, "cone")?;
            }
            if let Some(t) = tol_flow {
                cfg.tolerances.insert("flow".into(), *t);
            }
        }
        Command::Lemma31 { count, dims } => {
            if let Some(c) = count {
                cfg.lemma.count = *c;
            }
            if let Some(d) = dims {
                cfg.lemma.dims = parse_list(d, "dim")?;
            }
        }
        Command::Models { points, dims } => {
            if let Some(p) = points {
                cfg.models.points = *p;
            }
            match dims {
                Some(d) => cfg.models.dims = parse_list(d, "dim")?,
                None if g.dim.is_some() => cfg.models.dims = vec![cfg.dim],
                None => {}
            }
        }
        Command::Gen { .. } => {}
    }
    cfg.finish()
}

fn run(cli: Cli) -> Result<Status, CliError> {
    let cfg = build_config(&cli.global, &cli.command)?;
    let format = cli.global.format;
    match &cli.command {
        Command::Classify { .. } => commands::classify(&cfg, format),
        Command::P1 { .. } => commands::p1(&cfg, format),
        Command::Flow { .. } => commands::flow(&cfg, format),
        Command::Pipeline { .. } => commands::pipeline(&cfg, format),
        Command::Lemma31 { .. } => commands::lemma31(&cfg, format),
        Command::Models { .. } => commands::models(&cfg, format),
        Command::Gen { kind, scale, class, eps } => commands::gen(&cfg, *kind, *scale, class, *eps),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(Status::InputError as u8)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(status) => ExitCode::from(status as u8),
        Err(e) => {
            eprintln!("icclab: {e}");
            ExitCode::from(Status::InputError as u8)
        }
    }
}
