//! Command-line front end for `stov-core`: field synthesis, virtual measurements and
//! figure reproduction with embedded checks.

pub mod checks;
pub mod commands;
pub mod config;
pub mod error;
pub mod figures;
pub mod render;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use stov_core::Mode;

use crate::checks::failures;
use crate::commands::{Outcome, ANALYZER_ANGLES, DEFAULT_PAIRS};
use crate::config::{parse_charge, parse_extent, parse_grid, RunConfig};
use crate::error::{CliError, Result};

#[derive(Debug, Parser)]
#[command(
    name = "stovlab",
    version,
    about = "Spatiotemporal optical vortex laboratory"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

/// Run configuration. Flags override values from `--config`.
#[derive(Debug, Clone, Default, Args)]
pub struct GlobalArgs {
    /// JSON config file with keys grid{n_u,n_w,u_half,w_half}, mode, eta, output_dir, state.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Samples as N_UxN_W [default: 256x256].
    #[arg(long, global = true, value_parser = parse_grid)]
    pub grid: Option<(usize, usize)>,
    /// Half-extents as U:W in normalized units [default: 4:4].
    #[arg(long, global = true, value_parser = parse_extent)]
    pub extent: Option<(f64, f64)>,
    /// Vortex imprint: canonical or phase_only [default: canonical].
    #[arg(long, global = true)]
    pub mode: Option<String>,
    /// Temporal width asymmetry [default: 1.0].
    #[arg(long, global = true)]
    pub eta: Option<f64>,
    /// Output directory [default: stov_out].
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Single t-OAM pulse: field dump, x-z' intensity, phase and x-y images.
    Synth {
        #[arg(long, default_value = "1", allow_hyphen_values = true, value_parser = parse_charge)]
        q: i32,
    },
    /// Scalar superposition of terms Q[:AMP[:PHASE]]; DELTA multiplies every term after the first.
    Superpose {
        #[arg(long, default_value = "1,-1", allow_hyphen_values = true)]
        terms: String,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        delta: f64,
    },
    /// Vector beam from terms Q:KET[:AMP[:PHASE]], default +1:R,-1:L.
    Entangle {
        #[arg(long, allow_hyphen_values = true)]
        terms: Option<String>,
        /// Relative phase of the second term, radians [default: 0].
        #[arg(long, allow_hyphen_values = true)]
        delta: Option<f64>,
    },
    /// Interferometric orthogonality for charge pairs A:B.
    Orthogonality {
        #[arg(long, default_value = DEFAULT_PAIRS, allow_hyphen_values = true)]
        pairs: String,
    },
    /// Polarization analyzer scan QWP -> HWP(theta) -> LP, default beam +1:R.
    Polscan {
        #[arg(long, allow_hyphen_values = true)]
        terms: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        delta: Option<f64>,
        /// Number of HWP angles over [0, pi).
        #[arg(long, default_value_t = ANALYZER_ANGLES)]
        angles: usize,
        /// QWP fast axis, degrees.
        #[arg(long, default_value_t = 45.0, allow_hyphen_values = true)]
        qwp: f64,
        /// Polarizer axis, degrees.
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        lp: f64,
    },
    /// x-omega spectrogram and charge estimate of a mode (--q) or vector beam (--terms).
    Spectrometer {
        #[arg(long, allow_hyphen_values = true, value_parser = parse_charge, conflicts_with = "terms")]
        q: Option<i32>,
        #[arg(long, allow_hyphen_values = true)]
        terms: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        delta: Option<f64>,
    },
    /// Superposition phase and intensity panels.
    Fig2,
    /// Polarization analyzer panels.
    Fig3,
    /// Spectrometer and reference-beam panels.
    Fig4,
}

impl GlobalArgs {
    /// Defaults, then the config file, then flags.
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::from_file(path)?,
            None => RunConfig::default(),
        };
        if let Some((n_u, n_w)) = self.grid {
            cfg.grid.n_u = n_u;
            cfg.grid.n_w = n_w;
        }
        if let Some((u, w)) = self.extent {
            cfg.grid.u_half = u;
            cfg.grid.w_half = w;
        }
        if let Some(mode) = &self.mode {
            cfg.mode = mode.parse::<Mode>()?;
        }
        if let Some(eta) = self.eta {
            cfg.eta = eta;
        }
        if let Some(out) = &self.out {
            cfg.output_dir = out.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

pub fn command_name(command: &Command) -> &'static str {
    match command {
        Command::Synth { .. } => "synth",
        Command::Superpose { .. } => "superpose",
        Command::Entangle { .. } => "entangle",
        Command::Orthogonality { .. } => "orthogonality",
        Command::Polscan { .. } => "polscan",
        Command::Spectrometer { .. } => "spectrometer",
        Command::Fig2 => "fig2",
        Command::Fig3 => "fig3",
        Command::Fig4 => "fig4",
    }
}

/// Runs one command. Any failed embedded check becomes [`CliError::ChecksFailed`].
pub fn run_command(cfg: &RunConfig, command: &Command) -> Result<Outcome> {
    let outcome = match command {
        Command::Synth { q } => commands::cmd_synth(cfg, *q),
        Command::Superpose { terms, delta } => commands::cmd_superpose(cfg, terms, *delta),
        Command::Entangle { terms, delta } => commands::cmd_entangle(cfg, terms.as_deref(), *delta),
        Command::Orthogonality { pairs } => commands::cmd_orthogonality(cfg, pairs),
        Command::Polscan {
            terms,
            delta,
            angles,
            qwp,
            lp,
        } => commands::cmd_polscan(cfg, terms.as_deref(), *delta, *angles, *qwp, *lp),
        Command::Spectrometer { q, terms, delta } => {
            commands::cmd_spectrometer(cfg, *q, terms.as_deref(), *delta)
        }
        Command::Fig2 => figures::cmd_fig2(cfg),
        Command::Fig3 => figures::cmd_fig3(cfg),
        Command::Fig4 => figures::cmd_fig4(cfg),
    }?;
    let failed = failures(&outcome.checks);
    if failed.is_empty() {
        Ok(outcome)
    } else {
        Err(CliError::ChecksFailed {
            command: command_name(command).into(),
            failed,
        })
    }
}

pub fn run(cli: &Cli) -> Result<Outcome> {
    let cfg = cli.global.resolve()?;
    run_command(&cfg, &cli.command)
}
