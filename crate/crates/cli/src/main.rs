//! `hkdiss`: Green's functions, spectra, relaxation and second-order
//! Hubbard dressing of the dissipative Hatsugai-Kohmoto chain.

mod commands;
mod config;
mod manifest;
mod oracle_check;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use commands::{HubbardOptions, OmegaOverride, TimeGrid};
use config::RunConfig;
use oracle_check::OracleOptions;

#[derive(Parser, Debug)]
#[command(name = "hkdiss", version, about)]
struct Cli {
    /// Parameter file with `key = value` lines.
    #[arg(long, global = true, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Named parameter set: fig1b, fig1c, fig2a, fig2b, fig2c, fig3 or fig4.
    #[arg(long, global = true)]
    preset: Option<String>,
    /// Output directory, created if missing.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Retarded Green's function in momentum and real space, and its drift.
    Green {
        #[arg(long, default_value_t = 20.0)]
        t_max: f64,
        #[arg(long, default_value_t = 0.02)]
        dt: f64,
    },
    /// Spectral function on the momentum grid.
    Spectral {
        #[arg(long, allow_negative_numbers = true)]
        omega_min: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        omega_max: Option<f64>,
        #[arg(long)]
        omega_points: Option<usize>,
    },
    /// Density spreading of a spin-up particle released at site 0.
    Relax {
        #[arg(long, default_value_t = 10.0)]
        t_max: f64,
        #[arg(long, default_value_t = 0.1)]
        dt: f64,
    },
    /// Second-order self-energy, spectrum and real-time propagator.
    Hubbard {
        /// Include the static Hartree shift.
        #[arg(long)]
        hartree: bool,
        /// Half-width of the symmetric frequency window.
        #[arg(long)]
        omega_span: Option<f64>,
        #[arg(long)]
        omega_points: Option<usize>,
        /// Distance of the frequency grid above the real axis.
        #[arg(long)]
        eta: Option<f64>,
        #[arg(long, default_value_t = 10.0)]
        t_max: f64,
        #[arg(long, default_value_t = 0.5)]
        dt: f64,
    },
    /// Compare the closed forms with the brute-force oracle; exits 1 on
    /// any failure.
    OracleCheck {
        /// Chain length for the many-body density check.
        #[arg(long, default_value_t = 4)]
        sites: usize,
        /// Jump-term sign on fermion-odd operators; 1 is the wrong sign.
        #[arg(long, default_value_t = -1.0, allow_negative_numbers = true)]
        xi: f64,
    },
}

fn load_config(cli: &Cli) -> Result<RunConfig> {
    match (&cli.config, &cli.preset) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            RunConfig::parse(&text).with_context(|| format!("in {}", path.display()))
        }
        (None, Some(name)) => Ok(RunConfig::from_preset(name)?),
        (None, None) => match cli.command {
            Command::OracleCheck { .. } => Ok(RunConfig::from_preset("fig1c")?),
            _ => bail!("pass --config PATH or --preset NAME"),
        },
    }
}

fn run(cli: &Cli) -> Result<bool> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    let cfg = load_config(cli)?;
    commands::prepare_out(&cli.out)?;
    let out = cli.out.as_path();
    match cli.command {
        Command::Green { t_max, dt } => commands::green(&cfg, TimeGrid { t_max, dt }, out)?,
        Command::Spectral { omega_min, omega_max, omega_points } => {
            let over = OmegaOverride { min: omega_min, max: omega_max, points: omega_points };
            commands::spectral(&cfg, over, out)?
        }
        Command::Relax { t_max, dt } => commands::relax(&cfg, TimeGrid { t_max, dt }, out)?,
        Command::Hubbard { hartree, omega_span, omega_points, eta, t_max, dt } => {
            let opts = HubbardOptions { hartree, omega_span, omega_points, eta };
            commands::hubbard(&cfg, opts, TimeGrid { t_max, dt }, out)?
        }
        Command::OracleCheck { sites, xi } => {
            return oracle_check::oracle_check(&cfg, OracleOptions { sites, xi }, out);
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
