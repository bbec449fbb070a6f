//! Command-line front end: argument definitions, scenario resolution and the
//! exit-code contract. `main.rs` only forwards `std::env::args_os` to [`run`].

use std::ffi::OsString;
use std::fmt;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mobisim_core::{parse_scenario, preset, Error, Method, ParamKey, ScenarioSpec};

mod commands;

pub use commands::{cmd_figure, FigureRow, FigureSummary};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;
pub const EXIT_NO_RESULT: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "mobisim",
    version,
    about = "Simulate the coupled dynamics of traffic congestion and AI adoption"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// List the built-in scenarios
    Scenarios {
        #[arg(long, value_enum, default_value_t = OutputFormat::Text)]
        format: OutputFormat,
    },
    /// Integrate one scenario and write its trajectory
    Simulate {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Trajectory output; the extension (.csv or .json) picks the format
        #[arg(long)]
        out: PathBuf,
        /// Also render the trajectory as an SVG chart
        #[arg(long)]
        plot: Option<PathBuf>,
    },
    /// Run all four presets and write their CSVs, charts and a summary
    Figure {
        /// Output directory, created if missing
        #[arg(long)]
        out: PathBuf,
    },
    /// Fixed points of a scenario and their stability
    Equilibria {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long, value_enum, default_value_t = OutputFormat::Text)]
        format: OutputFormat,
    },
    /// Times at which a state variable crosses a level
    Threshold {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// congestion or adoption
        #[arg(long)]
        variable: String,
        /// Level to cross, in the variable's units
        #[arg(long, allow_negative_numbers = true)]
        level: f64,
        /// Read --level as a percentage of a_max
        #[arg(long)]
        percent_of_amax: bool,
        #[arg(long, value_enum, default_value_t = DirectionArg::Any)]
        direction: DirectionArg,
        #[arg(long, value_enum, default_value_t = WhichArg::All)]
        which: WhichArg,
    },
    /// Re-run a scenario over a range of one parameter
    Sweep {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Parameter to vary (k1, k2, k3, k4, a_max, c0, a0)
        #[arg(long)]
        param: String,
        /// First value of the parameter
        #[arg(long, allow_negative_numbers = true)]
        from: f64,
        /// Last value of the parameter
        #[arg(long, allow_negative_numbers = true)]
        to: f64,
        /// Number of evenly spaced values, endpoints included
        #[arg(long)]
        steps: usize,
        /// final-congestion, final-adoption, time-to-adoption:<level>, min-congestion or peak-congestion
        #[arg(long)]
        metric: String,
        /// Write the table here instead of standard output
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Finite-difference derivatives of a metric with respect to parameters
    Sensitivity {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Same metric names as sweep
        #[arg(long)]
        metric: String,
        /// Comma-separated parameters
        #[arg(long, default_value = "k1,k2,k3,k4")]
        params: String,
        /// Step as a fraction of each parameter's magnitude
        #[arg(long, default_value_t = mobisim_core::analysis::DEFAULT_RELATIVE_STEP)]
        relative_step: f64,
        /// Write the table here instead of standard output
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit model constants to an observed trajectory
    Calibrate {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Observed trajectory (.csv or .json); the first row is the initial state
        #[arg(long)]
        data: PathBuf,
        /// Comma-separated constants to fit
        #[arg(long, default_value = "k1,k2,k3,k4")]
        free: String,
        /// Comma-separated starting values, one per free constant
        #[arg(long)]
        guess: Option<String>,
        /// Where to write the fitted scenario document
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = OutputFormat::Text)]
        format: OutputFormat,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Text,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DirectionArg {
    Any,
    Upward,
    Downward,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum WhichArg {
    First,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    FixedRk4,
    AdaptiveRk45,
}

/// Scenario selection and overrides shared by most commands.
#[derive(Debug, Clone, Default, Args)]
pub struct ScenarioArgs {
    /// Built-in scenario name
    #[arg(long, conflicts_with = "config")]
    pub scenario: Option<String>,
    /// Scenario JSON document
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Override one value, KEY=VALUE; repeatable. Keys: k1 k2 k3 k4 a_max c0 a0
    /// t0 t_end output_points method step rtol atol max_steps
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    #[arg(long, value_enum)]
    pub method: Option<MethodArg>,
    /// Fixed-step size
    #[arg(long)]
    pub step: Option<f64>,
    /// Relative tolerance for the adaptive method
    #[arg(long)]
    pub rtol: Option<f64>,
    /// Absolute tolerance for the adaptive method
    #[arg(long)]
    pub atol: Option<f64>,
    /// Step budget before the run is abandoned
    #[arg(long)]
    pub max_steps: Option<usize>,
}

/// A failed command: what to print and which exit code to use.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    pub fn numerical(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_NUMERICAL,
            message: message.into(),
        }
    }

    pub fn no_result(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_NO_RESULT,
            message: message.into(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = if e.is_numerical() {
            EXIT_NUMERICAL
        } else {
            EXIT_USAGE
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

/// Exit code plus what the command printed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommandOutcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

/// Parses `args` (including the program name) and executes the command.
pub fn run<I, T>(args: I) -> CommandOutcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            return if code == EXIT_OK {
                CommandOutcome {
                    code,
                    stdout: text,
                    stderr: String::new(),
                }
            } else {
                CommandOutcome {
                    code,
                    stdout: String::new(),
                    stderr: text,
                }
            };
        }
    };
    match commands::execute(&cli.command) {
        Ok(stdout) => CommandOutcome {
            code: EXIT_OK,
            stdout,
            stderr: String::new(),
        },
        Err(e) => CommandOutcome {
            code: e.code,
            stdout: String::new(),
            stderr: format!("error: {}\n", e.message),
        },
    }
}

/// Sizes the global thread pool from `MOBISIM_THREADS` when set.
pub fn configure_threads(value: Option<&str>) -> Result<(), CliError> {
    let Some(v) = value else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|n| *n >= 1)
        .ok_or_else(|| CliError::usage(format!("MOBISIM_THREADS must be an integer ≥ 1, got `{v}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::usage(format!("cannot configure {n} threads: {e}")))
}

fn parse_number<T: std::str::FromStr>(key: &str, raw: &str) -> Result<T, CliError> {
    raw.trim()
        .parse()
        .map_err(|_| CliError::usage(format!("--set {key}: `{raw}` is not a valid number")))
}

/// Applies one `KEY=VALUE` override.
pub fn apply_set(spec: &mut ScenarioSpec, assignment: &str) -> Result<(), CliError> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| CliError::usage(format!("--set expects KEY=VALUE, got `{assignment}`")))?;
    let key = key.trim();
    match key {
        "t0" => spec.horizon.t0 = parse_number(key, raw)?,
        "t_end" => spec.horizon.t_end = parse_number(key, raw)?,
        "output_points" => spec.horizon.output_points = parse_number(key, raw)?,
        "step" => spec.integrator.step = parse_number(key, raw)?,
        "rtol" => spec.integrator.rtol = parse_number(key, raw)?,
        "atol" => spec.integrator.atol = parse_number(key, raw)?,
        "max_steps" => spec.integrator.max_steps = parse_number(key, raw)?,
        "method" => {
            spec.integrator.method = raw
                .trim()
                .parse::<Method>()
                .map_err(|e| CliError::usage(e.to_string()))?
        }
        other => {
            let k: ParamKey = other.parse().map_err(|_| {
                CliError::usage(format!(
                    "--set: unknown key `{other}` (expected k1 k2 k3 k4 a_max c0 a0 t0 t_end \
                     output_points method step rtol atol max_steps)"
                ))
            })?;
            k.set(spec, parse_number(key, raw)?);
        }
    }
    Ok(())
}

impl ScenarioArgs {
    /// Base scenario, or `None` when neither `--scenario` nor `--config` was given.
    pub fn base(&self) -> Result<Option<ScenarioSpec>, CliError> {
        match (&self.scenario, &self.config) {
            (Some(_), Some(_)) => Err(CliError::usage(
                "--scenario and --config are mutually exclusive",
            )),
            (Some(name), None) => Ok(Some(preset(name)?)),
            (None, Some(path)) => {
                let text = std::fs::read_to_string(path).map_err(|e| {
                    CliError::usage(format!("cannot read {}: {e}", path.display()))
                })?;
                let spec = parse_scenario(&text)
                    .map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
                Ok(Some(spec))
            }
            (None, None) => Ok(None),
        }
    }

    /// Layers `--set` overrides, then integrator flags, on top of `spec`.
    pub fn apply(&self, mut spec: ScenarioSpec) -> Result<ScenarioSpec, CliError> {
        for s in &self.set {
            apply_set(&mut spec, s)?;
        }
        if let Some(m) = self.method {
            spec.integrator.method = match m {
                MethodArg::FixedRk4 => Method::FixedRk4,
                MethodArg::AdaptiveRk45 => Method::AdaptiveRk45,
            };
        }
        if let Some(v) = self.step {
            spec.integrator.step = v;
        }
        if let Some(v) = self.rtol {
            spec.integrator.rtol = v;
        }
        if let Some(v) = self.atol {
            spec.integrator.atol = v;
        }
        if let Some(v) = self.max_steps {
            spec.integrator.max_steps = v;
        }
        spec.validate()?;
        Ok(spec)
    }

    /// The fully resolved scenario; one of `--scenario`/`--config` is required.
    pub fn resolve(&self) -> Result<ScenarioSpec, CliError> {
        let base = self
            .base()?
            .ok_or_else(|| CliError::usage("one of --scenario or --config is required"))?;
        self.apply(base)
    }
}
