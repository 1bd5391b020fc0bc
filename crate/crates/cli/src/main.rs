//! `fxdyn`: runs the exchange-rate and growth laboratory from TOML configs
//! or bundled presets and writes CSV/JSON artifacts plus a manifest.
//!
//! Exit codes: 0 success, 1 invalid configuration or input, 2 numerical
//! failure of the estimator.

/// `println!` that ignores a closed stdout.
macro_rules! say {
    ($($arg:tt)*) => {{
        use std::io::Write as _;
        let _ = writeln!(std::io::stdout(), $($arg)*);
    }};
}

mod commands;
mod config;
mod manifest;
mod presets;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use fxdyn_core::QqMode;

use crate::commands::NumericalFailure;
use crate::config::{CommandKind, EstimateConfig, RunConfig, StatsConfig, Transform};

const DEFAULT_SEED: u64 = 42;

#[derive(Parser)]
#[command(name = "fxdyn", version, about = "Exchange-rate and growth dynamics with heterogeneous speculators")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Clone, Default)]
struct Common {
    /// TOML config, or a manifest.json from an earlier run to replay it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Bundled preset to start from (see `fxdyn repro --help`).
    #[arg(long, global = true)]
    preset: Option<String>,
    /// Output directory [default: fxdyn-out/<command or preset>].
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed for the shock stream.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for sweeps, scans and basin grids.
    #[arg(long, global = true)]
    workers: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum QqArg {
    Standardized,
    Raw,
}

impl From<QqArg> for QqMode {
    fn from(q: QqArg) -> Self {
        match q {
            QqArg::Standardized => QqMode::Standardized,
            QqArg::Raw => QqMode::Raw,
        }
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Equilibria, Jacobian eigenvalues and stability classification.
    Equilibria,
    /// Seeded trajectory with returns, annual growth and diagnostics.
    Simulate,
    /// One-parameter attractor sweep ([sweep]) or two-parameter region scan ([scan]).
    Sweep,
    /// Basin-of-attraction raster.
    Basins,
    /// Moments, Anderson-Darling test and QQ data for one CSV column.
    Stats {
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        column: Option<String>,
        #[arg(long, value_enum)]
        transform: Option<Transform>,
        #[arg(long, value_enum)]
        qq_mode: Option<QqArg>,
    },
    /// Time-varying income elasticity and trade multiplier from year,y,m,z,rer data.
    Estimate {
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Re-run a bundled reference calibration.
    Repro {
        /// One of: flip-a, flip-b, basins, stochastic, deterministic, flip2-a,
        /// flip2-b, basins2, stochastic2, deterministic2, bifurcations, bifurcations2.
        figure: String,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            if err.downcast_ref::<NumericalFailure>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let started = Instant::now();
    let started_unix = manifest::unix_now();
    let mut common = cli.common.clone();
    if let Cmd::Repro { figure } = &cli.command {
        if common.preset.is_some() {
            bail!("repro takes the preset as its argument; drop --preset");
        }
        common.preset = Some(figure.clone());
    }

    let mut cfg = match (&common.config, &common.preset) {
        (Some(_), Some(_)) => bail!("use either --config or --preset, not both"),
        (Some(path), None) => config::load(path)?,
        (None, Some(name)) => config::load_preset(name)?,
        (None, None) => RunConfig::default(),
    };

    let requested = match &cli.command {
        Cmd::Equilibria => Some(CommandKind::Equilibria),
        Cmd::Simulate => Some(CommandKind::Simulate),
        Cmd::Sweep => Some(CommandKind::Sweep),
        Cmd::Basins => Some(CommandKind::Basins),
        Cmd::Stats { .. } => Some(CommandKind::Stats),
        Cmd::Estimate { .. } => Some(CommandKind::Estimate),
        Cmd::Repro { .. } => None,
    };
    let command = match (requested, cfg.command) {
        (Some(r), Some(c)) if r != c => {
            bail!("the config is for `{}` but `{}` was requested", c.name(), r.name())
        }
        (Some(r), _) => r,
        (None, Some(c)) => c,
        (None, None) => bail!("preset has no command"),
    };
    cfg.command = Some(command);

    match cli.command {
        Cmd::Stats { input, column, transform, qq_mode } => {
            if input.is_some() || column.is_some() || cfg.stats.is_none() {
                let base = cfg.stats.take();
                let input = input.or_else(|| base.as_ref().map(|s| s.input.clone()));
                let column = column.or_else(|| base.as_ref().map(|s| s.column.clone()));
                let (Some(input), Some(column)) = (input, column) else {
                    bail!("stats needs --input and --column");
                };
                cfg.stats = Some(StatsConfig {
                    input,
                    column,
                    transform: base.as_ref().map(|s| s.transform).unwrap_or_default(),
                    qq_mode: base.as_ref().map(|s| s.qq_mode).unwrap_or_default(),
                });
            }
            let s = cfg.stats.as_mut().expect("set above");
            if let Some(t) = transform {
                s.transform = t;
            }
            if let Some(q) = qq_mode {
                s.qq_mode = q.into();
            }
        }
        Cmd::Estimate { input: Some(input) } => match &mut cfg.estimate {
            Some(e) => e.input = input,
            None => cfg.estimate = Some(EstimateConfig { input, r: None, q: None }),
        },
        _ => {}
    }
    if let Some(seed) = common.seed {
        cfg.seed = Some(seed);
    }
    if cfg.seed.is_none() {
        cfg.seed = Some(DEFAULT_SEED);
    }
    if let Some(w) = common.workers {
        cfg.workers = Some(w);
    }
    if let Some(out) = &common.out {
        cfg.out = Some(out.clone());
    }
    let out = cfg
        .out
        .clone()
        .unwrap_or_else(|| Path::new("fxdyn-out").join(common.preset.as_deref().unwrap_or(command.name())));
    cfg.out = Some(out.clone());

    cfg.validate(command)?;
    std::fs::create_dir_all(&out).with_context(|| format!("cannot create {}", out.display()))?;

    let compute_start = Instant::now();
    let outputs = in_pool(cfg.workers, || match command {
        CommandKind::Equilibria => commands::equilibria_cmd(&cfg, &out),
        CommandKind::Simulate => commands::simulate_cmd(&cfg, &out),
        CommandKind::Sweep => commands::sweep_cmd(&cfg, &out),
        CommandKind::Basins => commands::basins_cmd(&cfg, &out),
        CommandKind::Stats => commands::stats_cmd(&cfg, &out),
        CommandKind::Estimate => commands::estimate_cmd(&cfg, &out),
    })??;
    let compute_ms = compute_start.elapsed().as_secs_f64() * 1e3;

    let m = manifest::Manifest {
        tool: "fxdyn",
        version: env!("CARGO_PKG_VERSION"),
        core_version: fxdyn_core::VERSION,
        command: command.name(),
        preset: common.preset.as_deref(),
        seed: cfg.seed,
        workers: cfg.workers,
        started_unix,
        timings: manifest::Timings { total_ms: started.elapsed().as_secs_f64() * 1e3, compute_ms },
        outputs,
        config: &cfg,
    };
    manifest::write(&out, &m)?;
    say!("wrote {}", out.display());
    Ok(())
}

fn in_pool<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match workers {
        Some(n) => Ok(rayon::ThreadPoolBuilder::new().num_threads(n).build()?.install(f)),
        None => Ok(f()),
    }
}
