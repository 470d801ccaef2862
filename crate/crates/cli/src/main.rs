//! Command-line front end for the one-dimensional Cosserat shear toolkit.
//!
//! Exit status: 0 on success, 2 for invalid input, 3 for a computational
//! error, 4 when an iterative solve did not converge (the output is still
//! written).

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use cosserat_shear::closed_form::well_set;
use cosserat_shear::{Error, GridField, MaterialParams, SolverConfig};

use commands::{Failure, Outcome};
use output::emit;

#[derive(Debug, Parser)]
#[command(name = "cosserat-shear", version, about = "Energies, relaxation and surface energies of 1D Cosserat shear")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Regime, critical couple modulus, wells and minimal energies at gamma.
    Regime {
        #[command(flatten)]
        material: Material,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Nonzero well, surface energy and reduced surface energy for mu_c = 0.
    Table2 {
        #[arg(long, default_value_t = 2.0)]
        mu: f64,
        /// Comma-separated shear amounts; pass the flag with no value for an empty table.
        #[arg(long, value_delimiter = ',', num_args = 0.., allow_negative_numbers = true,
              default_value = "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1.0")]
        gammas: Vec<f64>,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Potential, its convex envelope in alpha and the full densities at one shear.
    Envelope {
        #[command(flatten)]
        material: Material,
        /// Shear at which to sample [default: gamma].
        #[arg(long, allow_negative_numbers = true)]
        z: Option<f64>,
        /// Number of alpha intervals on [0, 2pi].
        #[arg(long, default_value_t = 1024)]
        n: usize,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Discrete energy of a field: breakdown, rescaled and relaxed values.
    Energy {
        #[command(flatten)]
        material: Material,
        /// CSV file with a header naming `u` and `alpha` columns, one row per node,
        /// or JSON field output of `relax` [default: homogeneous shear with alpha = theta].
        #[arg(long)]
        field: Option<PathBuf>,
        /// Grid cells of the homogeneous field.
        #[arg(long, default_value_t = 512)]
        n: usize,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Surface energy between two angles [default: the two wells].
    Surface {
        #[command(flatten)]
        material: Material,
        #[command(flatten)]
        angles: Angles,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Optimal transition profile between two angles [default: the two wells].
    Profile {
        #[command(flatten)]
        material: Material,
        #[command(flatten)]
        angles: Angles,
        /// Sample spacing in the stretched variable.
        #[arg(long, default_value_t = 1e-2)]
        step: f64,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Constrained minimizer of the discrete energy (the relaxed one when eps = 0).
    Relax {
        #[command(flatten)]
        material: Material,
        #[command(flatten)]
        solver: SolverArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Gap between constrained minima at each eps and the relaxed minimum.
    GammaSweep {
        #[command(flatten)]
        material: Material,
        /// Strictly decreasing regularization lengths.
        #[arg(long, value_delimiter = ',', default_value = "0.2,0.1,0.05,0.025")]
        eps_list: Vec<f64>,
        #[command(flatten)]
        solver: SolverArgs,
        /// Directory for one field CSV per eps.
        #[arg(long)]
        fields_dir: Option<PathBuf>,
        #[command(flatten)]
        out: OutputArgs,
    },
}

#[derive(Debug, Args)]
struct Material {
    /// Shear modulus.
    #[arg(long, default_value_t = 2.0, allow_negative_numbers = true)]
    mu: f64,
    /// Cosserat couple modulus.
    #[arg(long = "mu-c", default_value_t = 0.0, allow_negative_numbers = true)]
    mu_c: f64,
    /// Boundary shear, in (0, 2).
    #[arg(long, default_value_t = 0.6, allow_negative_numbers = true)]
    gamma: f64,
    /// Regularization length.
    #[arg(long, default_value_t = 0.1, allow_negative_numbers = true)]
    eps: f64,
    /// Mean of alpha [default: midpoint of the wells].
    #[arg(long, allow_negative_numbers = true)]
    theta: Option<f64>,
}

impl Material {
    fn params(&self) -> Result<MaterialParams, Failure> {
        let usage = |e: Error| Failure::Usage(e.to_string());
        let p = MaterialParams::new(self.mu, self.mu_c, self.gamma, 0.0, self.eps).map_err(usage)?;
        let theta = match self.theta {
            Some(t) => t,
            None => {
                let w = well_set(self.gamma, &p)?;
                0.5 * (w.angles()[0] + w.last())
            }
        };
        p.with_theta(theta).map_err(usage)
    }
}

#[derive(Debug, Args)]
struct Angles {
    #[arg(long = "alpha-minus")]
    alpha_minus: Option<f64>,
    #[arg(long = "alpha-plus")]
    alpha_plus: Option<f64>,
}

#[derive(Debug, Args)]
struct SolverArgs {
    /// Grid cells.
    #[arg(long, default_value_t = 512)]
    n: usize,
    /// Newton iteration cap over all augmented Lagrangian rounds.
    #[arg(long, default_value_t = 2000)]
    max_iters: usize,
}

impl SolverArgs {
    fn config(&self) -> Result<SolverConfig, Failure> {
        let cfg = SolverConfig { max_iters: self.max_iters, ..SolverConfig::with_n(self.n) };
        cfg.validate().map_err(|e| Failure::Usage(e.to_string()))?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args)]
struct OutputArgs {
    /// Output file [default: stdout].
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format [default: json for `regime`, csv otherwise].
    #[arg(long, value_enum)]
    format: Option<Format>,
}

fn run(cli: Cli) -> Result<Option<String>, Failure> {
    let (name, out, default_format, outcome): (&str, &OutputArgs, Format, Outcome) = match &cli.command {
        Command::Regime { material, out } => ("regime", out, Format::Json, commands::regime(&material.params()?)),
        Command::Table2 { mu, gammas, out } => ("table2", out, Format::Csv, commands::table2(*mu, gammas)),
        Command::Envelope { material, z, n, out } => {
            let p = material.params()?;
            let z = z.unwrap_or(p.gamma());
            if z.is_nan() || z <= 0.0 {
                return Err(Failure::Usage("--z must be positive".into()));
            }
            if *n < 16 {
                return Err(Failure::Usage("--n must be at least 16".into()));
            }
            ("envelope", out, Format::Csv, commands::envelope(&p, z, *n))
        }
        Command::Energy { material, field, n, out } => {
            let p = material.params()?;
            let f = match field {
                Some(path) => commands::read_field(path)?,
                None => GridField::construct_homogeneous((*n).max(2), &p, p.theta())
                    .map_err(|e| Failure::Usage(e.to_string()))?,
            };
            ("energy", out, Format::Csv, commands::energy(&p, &f))
        }
        Command::Surface { material, angles, out } => {
            let p = material.params()?;
            ("surface", out, Format::Csv, commands::surface(&p, angles.alpha_minus, angles.alpha_plus))
        }
        Command::Profile { material, angles, step, out } => {
            let p = material.params()?;
            if !(*step > 0.0 && *step <= 1.0) {
                return Err(Failure::Usage("--step must lie in (0, 1]".into()));
            }
            ("profile", out, Format::Csv, commands::profile(&p, angles.alpha_minus, angles.alpha_plus, *step))
        }
        Command::Relax { material, solver, out } => {
            let p = material.params()?;
            ("relax", out, Format::Csv, commands::relax(&p, &solver.config()?))
        }
        Command::GammaSweep { material, eps_list, solver, fields_dir, out } => {
            let p = material.params()?;
            let cfg = solver.config()?;
            ("gamma-sweep", out, Format::Csv, commands::gamma_sweep(&p, eps_list, &cfg, fields_dir.as_deref()))
        }
    };
    let (table, warning) = outcome?;
    let text = match out.format.unwrap_or(default_format) {
        Format::Csv => table.to_csv(),
        Format::Json => table.to_json(name),
    };
    emit(&text, out.out.as_deref())?;
    Ok(warning)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(None) => ExitCode::SUCCESS,
        Ok(Some(warning)) => {
            eprintln!("warning: {warning}");
            ExitCode::from(4)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Compute(Error::NoConvergence { iterations })) => {
            eprintln!("error: no convergence after {iterations} iterations");
            ExitCode::from(4)
        }
        Err(Failure::Compute(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
        Err(Failure::Io(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
    }
}
