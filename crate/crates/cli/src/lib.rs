//! Command-line front end: config handling, subcommands and exit codes.

pub mod commands;
pub mod config;

use std::fmt;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

pub use config::{parse_config, Experiment, RunConfig};

/// Environment variable naming the output root when `--output` is absent.
pub const OUTPUT_ROOT_ENV: &str = "GMI_OUTPUT_ROOT";

#[derive(Debug)]
pub enum CliError {
    /// Invalid configuration, flags or input files. Exit code 2.
    Config(String),
    /// A numerical routine gave up. Exit code 3.
    Numerical(String),
    /// The stability verdict could not be decided. Exit code 4.
    Indeterminate(String),
    /// Filesystem trouble. Exit code 1.
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) => 1,
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Indeterminate(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical abort: {m}"),
            CliError::Indeterminate(m) => write!(f, "indeterminate: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<gmi_core::Error> for CliError {
    fn from(e: gmi_core::Error) -> Self {
        use gmi_core::Error as E;
        match e {
            E::Parameter(_) | E::Parse(_) | E::Aliasing(_) | E::Csv(_) | E::Json(_) => CliError::Config(e.to_string()),
            E::Domain(_) | E::Numerical(_) => CliError::Numerical(e.to_string()),
            E::Io(_) => CliError::Io(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(name = "gmi", version, about = "Modulational instability of random and periodic wave fields")]
pub struct Cli {
    /// JSON run configuration.
    #[arg(long, short, global = true)]
    pub config: Option<PathBuf>,
    /// Output root.
    #[arg(long, short, global = true, env = OUTPUT_ROOT_ENV)]
    pub output: Option<PathBuf>,
    /// Worker threads; defaults to the number of cores.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Print the resolved configuration and exit.
    #[arg(long, global = true)]
    pub dry_run: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Default)]
pub struct DomainArgs {
    /// Domain length L.
    #[arg(long)]
    pub length: Option<f64>,
    /// Wavenumber spacing multiplier m.
    #[arg(long)]
    pub spacing_multiplier: Option<u32>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Discretized autocorrelation coefficients P_n.
    Spectrum {
        #[command(flatten)]
        domain: DomainArgs,
    },
    /// Random-phase realizations: modes and sampled fields.
    Realize {
        #[command(flatten)]
        domain: DomainArgs,
        #[arg(long)]
        count: Option<usize>,
        #[arg(long)]
        points: Option<usize>,
    },
    /// Stability verdict and Nyquist curve.
    Stability {
        #[command(flatten)]
        domain: DomainArgs,
        #[arg(long, value_enum)]
        method: Option<config::StabilityMethod>,
        #[arg(long)]
        p: Option<f64>,
        #[arg(long)]
        q: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        xi_min: Option<i64>,
        #[arg(long, allow_negative_numbers = true)]
        xi_max: Option<i64>,
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        nyquist_xi: Option<i64>,
    },
    /// Periodized kernel against its infinite-domain limit along a length ladder.
    Converge {
        #[command(flatten)]
        domain: DomainArgs,
        #[arg(long, allow_negative_numbers = true)]
        x: Option<f64>,
        #[arg(long)]
        omega_re: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        omega_im: Option<f64>,
    },
    /// Time-integrate the NLS equation.
    Simulate {
        #[command(flatten)]
        domain: DomainArgs,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        dx: Option<f64>,
        #[arg(long)]
        nx: Option<usize>,
        #[arg(long)]
        t_final: Option<f64>,
    },
    /// Maximum inhomogeneity for localized perturbations of a plane wave.
    Table1 {
        /// Inhomogeneity index, repeatable.
        #[arg(long = "j")]
        j: Vec<u8>,
        /// Domain length in units of the critical length, repeatable.
        #[arg(long = "N")]
        n: Vec<f64>,
    },
    /// Perturbation growth on a periodic three-mode background.
    Gmi {
        /// Number of background periods, repeatable.
        #[arg(long = "N")]
        n: Vec<f64>,
    },
    /// Run the experiment named by `experiment.select` in the config.
    Run,
}

/// Fully resolved inputs of one invocation.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub experiment: Experiment,
    pub config: RunConfig,
    pub root: PathBuf,
}

/// Merges defaults, the config file and flags.
pub fn resolve(cli: &Cli) -> Result<Resolved, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
            parse_config(&text)?
        }
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    let experiment = apply_command(&mut cfg, &cli.command);
    let root = cli
        .output
        .clone()
        .or_else(|| cfg.output.clone())
        .unwrap_or_else(|| PathBuf::from("."));
    cfg.output = Some(root.clone());
    cfg.validate()?;
    Ok(Resolved {
        experiment,
        config: cfg,
        root,
    })
}

fn set<T: Clone>(slot: &mut T, v: &Option<T>) {
    if let Some(v) = v {
        *slot = v.clone();
    }
}

fn apply_domain(cfg: &mut RunConfig, d: &DomainArgs) {
    set(&mut cfg.domain.length, &d.length);
    set(&mut cfg.domain.spacing_multiplier, &d.spacing_multiplier);
}

fn apply_command(cfg: &mut RunConfig, cmd: &Command) -> Experiment {
    match cmd {
        Command::Spectrum { domain } => {
            apply_domain(cfg, domain);
            Experiment::Spectrum
        }
        Command::Realize { domain, count, points } => {
            apply_domain(cfg, domain);
            set(&mut cfg.experiment.realize.count, count);
            if points.is_some() {
                cfg.experiment.realize.points = *points;
            }
            Experiment::Realize
        }
        Command::Stability {
            domain,
            method,
            p,
            q,
            xi_min,
            xi_max,
            epsilon,
            nyquist_xi,
        } => {
            apply_domain(cfg, domain);
            let s = &mut cfg.stability;
            set(&mut s.method, method);
            set(&mut s.p, p);
            set(&mut s.q, q);
            set(&mut s.contour.epsilon, epsilon);
            for (slot, v) in [(&mut s.xi_min, xi_min), (&mut s.xi_max, xi_max), (&mut s.nyquist_xi, nyquist_xi)] {
                if v.is_some() {
                    *slot = *v;
                }
            }
            Experiment::Stability
        }
        Command::Converge {
            domain,
            x,
            omega_re,
            omega_im,
        } => {
            apply_domain(cfg, domain);
            let s = &mut cfg.stability;
            if x.is_some() {
                s.converge_x = *x;
            }
            set(&mut s.converge_omega[0], omega_re);
            set(&mut s.converge_omega[1], omega_im);
            Experiment::Converge
        }
        Command::Simulate {
            domain,
            dt,
            dx,
            nx,
            t_final,
        } => {
            apply_domain(cfg, domain);
            let s = &mut cfg.simulation;
            set(&mut s.dt, dt);
            set(&mut s.dx, dx);
            set(&mut s.t_final, t_final);
            if nx.is_some() {
                s.nx = *nx;
            }
            Experiment::Simulate
        }
        Command::Table1 { j, n } => {
            let t = &mut cfg.experiment.table1;
            if !j.is_empty() {
                t.j = j.clone();
            }
            if !n.is_empty() {
                t.factors = n.clone();
            }
            Experiment::Table1
        }
        Command::Gmi { n } => {
            if !n.is_empty() {
                cfg.experiment.gmi.periods = n.clone();
            }
            Experiment::Gmi
        }
        Command::Run => cfg.experiment.select,
    }
}

/// What a completed run produced.
#[derive(Debug)]
pub struct Report {
    pub directory: PathBuf,
    pub artifacts: Vec<String>,
    pub summary: String,
}

/// Resolves and executes one invocation. With `--dry-run` the resolved
/// configuration is returned as the summary and nothing is written.
pub fn execute(cli: &Cli) -> Result<Report, CliError> {
    let r = resolve(cli)?;
    if cli.dry_run {
        return Ok(Report {
            directory: r.root.clone(),
            artifacts: Vec::new(),
            summary: serde_json::to_string_pretty(&r.config)?,
        });
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.workers.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Config(format!("worker pool: {e}")))?;
    pool.install(|| commands::run(r.experiment, &r.config, &r.root))
}

/// `<root>/runs/<experiment>/<hash>` for a resolved configuration.
pub fn run_directory(root: &Path, experiment: Experiment, cfg: &RunConfig) -> Result<PathBuf, CliError> {
    Ok(root
        .join("runs")
        .join(experiment.name())
        .join(commands::hash(cfg)?))
}
