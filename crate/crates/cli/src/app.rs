//! Command-line definition and dispatch.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use hopfield_core::experiments::{run_scenario, validation_suite, Linspace, ResultTable, ScenarioConfig, SweepAxis};
use hopfield_core::{polariton_spectrum, BeatingPeriod, ModelVariant, SystemParams};
use serde::Serialize;

use crate::error::{CliError, CliResult};
use crate::output::{format_float, write_table, Format};
use crate::scenario_file::{locate, parse_file, Override};

#[derive(Debug, Parser)]
#[command(name = "hopfield", version, about = "Light-matter beating dynamics of the Hopfield model")]
pub struct Cli {
    /// Report failures as one JSON object on stderr.
    #[arg(long, global = true)]
    pub machine: bool,
    /// Worker threads for sweeps (default: all cores).
    #[arg(long, global = true, value_name = "N")]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print polariton frequencies, splitting, beating period and beta.
    Spectrum {
        #[arg(long)]
        gamma: f64,
        #[arg(long)]
        lambda: f64,
        #[arg(long, value_enum, default_value = "full")]
        variant: VariantArg,
        /// Print JSON instead of aligned text.
        #[arg(long)]
        json: bool,
    },
    /// Run a time-series config file.
    Evolve {
        config: PathBuf,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Run shipped scenarios by name (`fig03`, `fig03a`) or path.
    Scenario {
        #[arg(required = true)]
        names: Vec<String>,
        /// Directory holding scenario files (repeatable).
        #[arg(long = "scenarios", value_name = "DIR")]
        scenario_dirs: Vec<PathBuf>,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Sweep one field of a config over a list or range of values.
    Sweep {
        config: PathBuf,
        /// Field to sweep, e.g. `params.gamma`; replaces any sweep in the file.
        #[arg(long, requires = "values_or_range")]
        field: Option<String>,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', group = "values_or_range", allow_negative_numbers = true)]
        values: Option<Vec<f64>>,
        /// `start:stop:count`.
        #[arg(long, group = "values_or_range", allow_hyphen_values = true)]
        range: Option<String>,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Run the invariant suite and check config files.
    Validate {
        /// Config files to parse; defaults to every shipped scenario.
        configs: Vec<PathBuf>,
        #[arg(long = "scenarios", value_name = "DIR")]
        scenario_dirs: Vec<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum VariantArg {
    Full,
    NoDiamagnetic,
    Rwa,
}

impl From<VariantArg> for ModelVariant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Full => ModelVariant::Full,
            VariantArg::NoDiamagnetic => ModelVariant::NoDiamagnetic,
            VariantArg::Rwa => ModelVariant::Rwa,
        }
    }
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Output directory.
    #[arg(short, long, default_value = ".")]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    /// Override a config field, e.g. `params.lambda=0.05` (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

impl OutputArgs {
    fn overrides(&self) -> CliResult<Vec<Override>> {
        self.overrides.iter().map(|s| s.parse()).collect()
    }
}

/// Scenario directories searched when none are given.
pub fn default_scenario_dirs() -> Vec<PathBuf> {
    let mut dirs = Vec::new();
    if let Some(d) = std::env::var_os("HOPFIELD_SCENARIOS") {
        dirs.push(PathBuf::from(d));
    }
    dirs.push(PathBuf::from("scenarios"));
    dirs.push(Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios"));
    dirs
}

/// Runs a parsed command, writing human-readable output to `stdout`.
pub fn run(cli: &Cli, stdout: &mut dyn Write) -> CliResult<()> {
    if let Some(n) = cli.jobs {
        if n == 0 {
            return Err(CliError::Config("--jobs must be >= 1".into()));
        }
        // A second initialisation in the same process keeps the first pool.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match &cli.command {
        Command::Spectrum { gamma, lambda, variant, json } => spectrum(*gamma, *lambda, (*variant).into(), *json, stdout),
        Command::Evolve { config, out } => {
            let configs = load(config, None, &out.overrides()?)?;
            for c in &configs {
                if c.is_scalar() || c.has_sweep() {
                    return Err(CliError::Config(format!(
                        "`{}` tabulates per-point outputs; use `sweep` or `scenario`",
                        c.name
                    )));
                }
            }
            execute(&configs, out, stdout)
        }
        Command::Scenario { names, scenario_dirs, out } => {
            let dirs = if scenario_dirs.is_empty() { default_scenario_dirs() } else { scenario_dirs.clone() };
            let overrides = out.overrides()?;
            let mut configs = Vec::new();
            for name in names {
                let (path, panel) = locate(name, &dirs)?;
                configs.extend(load(&path, panel.as_deref(), &overrides)?);
            }
            execute(&configs, out, stdout)
        }
        Command::Sweep { config, field, values, range, out } => {
            let mut configs = load(config, None, &out.overrides()?)?;
            for c in &mut configs {
                if let Some(field) = field {
                    let axis = match (values, range) {
                        (Some(v), _) => SweepAxis::new(field.clone(), v.clone()),
                        (None, Some(r)) => SweepAxis {
                            field: field.clone(),
                            values: None,
                            linspace: Some(parse_range(r)?),
                        },
                        (None, None) => return Err(CliError::Config("--field needs --values or --range".into())),
                    };
                    c.sweep = vec![axis];
                    c.validate().map_err(|e| CliError::Config(e.to_string()))?;
                }
                if !c.has_sweep() {
                    return Err(CliError::Config(format!(
                        "`{}` has no sweep axis; pass --field with --values or --range",
                        c.name
                    )));
                }
            }
            execute(&configs, out, stdout)
        }
        Command::Validate { configs, scenario_dirs } => validate(configs, scenario_dirs, stdout),
    }
}

fn load(path: &Path, panel: Option<&str>, overrides: &[Override]) -> CliResult<Vec<ScenarioConfig>> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    parse_file(&text)
        .and_then(|f| f.resolve(overrides, panel))
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn parse_range(s: &str) -> CliResult<Linspace> {
    let bad = || CliError::Config(format!("--range `{s}` must be start:stop:count"));
    let parts: Vec<&str> = s.split(':').collect();
    let [a, b, n] = parts.as_slice() else { return Err(bad()) };
    Ok(Linspace {
        start: a.trim().parse().map_err(|_| bad())?,
        stop: b.trim().parse().map_err(|_| bad())?,
        count: n.trim().parse().map_err(|_| bad())?,
    })
}

/// Runs each config, writes its table, and fails if any sweep point failed.
fn execute(configs: &[ScenarioConfig], out: &OutputArgs, stdout: &mut dyn Write) -> CliResult<()> {
    let mut failed_points = 0;
    for c in configs {
        let table: ResultTable = run_scenario(c)?;
        let paths = write_table(&table, &out.out, out.format)?;
        for p in &paths {
            writeln!(stdout, "{}", p.display())?;
        }
        failed_points += table
            .row_errors
            .as_ref()
            .map_or(0, |e| e.iter().filter(|x| x.is_some()).count());
    }
    if failed_points > 0 {
        return Err(CliError::Core(hopfield_core::Error::Numerical(format!(
            "{failed_points} sweep point(s) failed; see the `error` column"
        ))));
    }
    Ok(())
}

#[derive(Serialize)]
struct SpectrumReport {
    gamma: f64,
    lambda: f64,
    variant: &'static str,
    omega_plus: f64,
    omega_minus: f64,
    sigma_bar: f64,
    delta_bar: f64,
    /// `None` when the branches are degenerate.
    period: Option<f64>,
    beta: f64,
}

fn spectrum(gamma: f64, lambda: f64, variant: ModelVariant, json: bool, stdout: &mut dyn Write) -> CliResult<()> {
    let params = SystemParams::new(gamma, lambda, variant).map_err(|e| CliError::Config(e.to_string()))?;
    let sp = polariton_spectrum(&params)?;
    let report = SpectrumReport {
        gamma,
        lambda,
        variant: variant.as_str(),
        omega_plus: sp.omega_plus,
        omega_minus: sp.omega_minus,
        sigma_bar: sp.sigma_bar,
        delta_bar: sp.delta_bar,
        period: match sp.period {
            BeatingPeriod::Finite(t) => Some(t),
            BeatingPeriod::Infinite => None,
        },
        beta: sp.beta,
    };
    if json {
        writeln!(stdout, "{}", serde_json::to_string(&report).expect("report serializes"))?;
        return Ok(());
    }
    let rows = [
        ("omega_plus", Some(report.omega_plus)),
        ("omega_minus", Some(report.omega_minus)),
        ("sigma_bar", Some(report.sigma_bar)),
        ("delta_bar", Some(report.delta_bar)),
        ("T", report.period),
        ("beta", Some(report.beta)),
    ];
    for (k, v) in rows {
        writeln!(stdout, "{k:<12}{}", v.map_or("inf".into(), format_float))?;
    }
    Ok(())
}

fn validate(configs: &[PathBuf], dirs: &[PathBuf], stdout: &mut dyn Write) -> CliResult<()> {
    let mut total = 0;
    let mut failed = 0;
    for c in validation_suite() {
        total += 1;
        if !c.passed {
            failed += 1;
        }
        let verdict = if c.passed { "PASS" } else { "FAIL" };
        writeln!(stdout, "{verdict}  {:<40} worst {:.3e} (tolerance {:.0e})", c.name, c.worst, c.tolerance)?;
    }
    let files: Vec<PathBuf> = if configs.is_empty() {
        let dirs = if dirs.is_empty() { default_scenario_dirs() } else { dirs.to_vec() };
        shipped_scenarios(&dirs)
    } else {
        configs.to_vec()
    };
    for f in files {
        total += 1;
        match load(&f, None, &[]) {
            Ok(cs) => writeln!(stdout, "PASS  config {} ({} panel(s))", f.display(), cs.len())?,
            Err(e) => {
                failed += 1;
                writeln!(stdout, "FAIL  config {e}")?;
            }
        }
    }
    writeln!(stdout, "{} passed, {failed} failed", total - failed)?;
    if failed > 0 {
        return Err(CliError::Validation { failed, total });
    }
    Ok(())
}

/// `*.toml` files of the first existing directory, sorted by name.
fn shipped_scenarios(dirs: &[PathBuf]) -> Vec<PathBuf> {
    let Some(dir) = dirs.iter().find(|d| d.is_dir()) else { return Vec::new() };
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .into_iter()
        .flatten()
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "toml"))
        .collect();
    files.sort();
    files
}
