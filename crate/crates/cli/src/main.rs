use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gibbsfit::inference::{DEFAULT_DIM_MIN, DEFAULT_SIGNIFICANCE};
use gibbsfit::AlphaPolicy;
use gibbsfit_cli::demos::{DemoName, QUBIT_R, QUBIT_TILTS_DEG};
use gibbsfit_cli::{execute, Command, OutputFormat, RunConfig};

/// Entropic inference of Gibbs states from measurement data.
#[derive(Parser)]
#[command(name = "gibbsfit", version, about)]
struct Cli {
    /// Output format.
    #[arg(long, value_enum, default_value_t = OutputFormat::Table, global = true)]
    format: OutputFormat,

    /// Write the report to this file instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Seed for randomized self-tests.
    #[arg(long, default_value_t = 0, global = true)]
    seed: u64,

    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args)]
struct DataArgs {
    /// Counts CSV (`outcome,count[,reference_weight]`) or quantum JSON document.
    #[arg(long)]
    data: PathBuf,

    /// Observables CSV (`outcome,<name>,...`) for classical data.
    #[arg(long)]
    observables: Option<PathBuf>,
}

#[derive(Args)]
struct AlphaArgs {
    /// Prior confidence: `auto` for the evidence procedure, a positive number, or `none`.
    #[arg(long, default_value = "auto")]
    alpha: String,

    /// Value used when the evidence procedure is inapplicable.
    #[arg(long)]
    fallback_alpha: Option<f64>,

    /// Minimum experimental dimension for a sharp evidence estimate.
    #[arg(long, default_value_t = DEFAULT_DIM_MIN)]
    dim_min: usize,
}

impl AlphaArgs {
    fn policy(&self) -> Result<Option<AlphaPolicy>, String> {
        match self.alpha.as_str() {
            "auto" => Ok(Some(AlphaPolicy::Evidence {
                fallback: self.fallback_alpha,
                dim_min: self.dim_min,
            })),
            "none" => Ok(None),
            v => v
                .parse::<f64>()
                .map(|a| Some(AlphaPolicy::Fixed(a)))
                .map_err(|_| format!("--alpha expects `auto`, `none` or a number, got `{v}`")),
        }
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Project the data onto a level of description.
    Project {
        #[command(flatten)]
        data: DataArgs,
        /// Level: `trivial`, `full`, `all`, a named level or a comma-separated observable list.
        #[arg(long, default_value = "full")]
        level: String,
    },
    /// Chi-squared significance of the deviation from the reference state.
    Significance {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, default_value = "full")]
        level: String,
        /// Significance level for the tail probability.
        #[arg(long, default_value_t = DEFAULT_SIGNIFICANCE)]
        sig_level: f64,
    },
    /// Posterior estimate with error bars on a theoretical level.
    Estimate {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, default_value = "full")]
        level: String,
        #[command(flatten)]
        alpha: AlphaArgs,
    },
    /// Bayesian comparison of a coarse level against a finer one.
    Compare {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        coarse: String,
        #[arg(long)]
        fine: String,
        #[command(flatten)]
        alpha: AlphaArgs,
        /// Prior odds of the coarse level against the fine one.
        #[arg(long, default_value_t = 1.0)]
        prior_odds: f64,
    },
    /// Run a bundled demonstration.
    Demo {
        #[arg(value_enum)]
        name: DemoName,
        /// Tilt angles in degrees (qubit demo).
        #[arg(long = "tilt-deg", value_delimiter = ',', default_values_t = QUBIT_TILTS_DEG.to_vec())]
        tilt_deg: Vec<f64>,
        /// Bloch vector length (qubit demo).
        #[arg(long, default_value_t = QUBIT_R)]
        r: f64,
        #[arg(long, default_value_t = DEFAULT_SIGNIFICANCE)]
        sig_level: f64,
        /// Also check random Pythagoras identities using `--seed`.
        #[arg(long)]
        self_test: bool,
    },
    /// Re-ingest a saved JSON report.
    Show {
        #[arg(long)]
        report: PathBuf,
    },
}

fn config(cli: Cli) -> Result<RunConfig, String> {
    let mut cfg = RunConfig {
        command: Command::Show { report: PathBuf::new() },
        data: None,
        observables: None,
        alpha_policy: None,
        significance_level: DEFAULT_SIGNIFICANCE,
        format: cli.format,
        out: cli.out,
        seed: cli.seed,
        self_test: false,
    };
    let set_data = |cfg: &mut RunConfig, d: DataArgs| {
        cfg.data = Some(d.data);
        cfg.observables = d.observables;
    };
    cfg.command = match cli.command {
        Cmd::Project { data, level } => {
            set_data(&mut cfg, data);
            Command::Project { level }
        }
        Cmd::Significance { data, level, sig_level } => {
            set_data(&mut cfg, data);
            cfg.significance_level = sig_level;
            Command::Significance { level }
        }
        Cmd::Estimate { data, level, alpha } => {
            set_data(&mut cfg, data);
            cfg.alpha_policy = alpha.policy()?;
            Command::Estimate { level }
        }
        Cmd::Compare {
            data,
            coarse,
            fine,
            alpha,
            prior_odds,
        } => {
            set_data(&mut cfg, data);
            cfg.alpha_policy = alpha.policy()?;
            Command::Compare {
                coarse,
                fine,
                prior_odds,
            }
        }
        Cmd::Demo {
            name,
            tilt_deg,
            r,
            sig_level,
            self_test,
        } => {
            cfg.significance_level = sig_level;
            cfg.self_test = self_test;
            Command::Demo {
                demo: name,
                tilts_deg: tilt_deg,
                r,
            }
        }
        Cmd::Show { report } => Command::Show { report },
    };
    Ok(cfg)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("GIBBSFIT_LOG", "warn"))
        .format_timestamp(None)
        .init();
    let cfg = match config(Cli::parse()) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(gibbsfit_cli::EXIT_DATA as u8);
        }
    };
    ExitCode::from(execute(&cfg) as u8)
}
