//! Command-line front end: configuration, sweeps, plots and reports.

pub mod config;
pub mod eval;
pub mod plot;
pub mod table;
pub mod validity;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::error::{Error, Result};
use crate::oracle::oracle_check;
use crate::susceptibility::Formula;
use config::{AxisName, AxisScale, AxisSpec, Chi0Inclusion, FieldKind, OutputFormat, PlotPart, RunConfig};
use eval::{build, evaluate_built, formula_for, Point};
use plot::{emit_plot, PlotSpec};
use table::{point_table, run_sweep, Table};
use validity::validity_report;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_EVAL: i32 = 3;
pub const EXIT_ORACLE: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "qsusc", version, about = "Susceptibilities of a quantum emitter in a quantized cavity mode")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Global {
    /// TOML run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory; results go to stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<OutputFormat>,
    /// Also write SVG plots of every channel.
    #[arg(long, global = true)]
    pub plot: bool,
    #[command(flatten)]
    pub overrides: Overrides,
}

/// Flags mirroring the configuration file; each one replaces the file's value.
#[derive(Debug, Default, Args)]
pub struct Overrides {
    /// Matter state: PE, PG, MM, MS or custom.
    #[arg(long, global = true)]
    pub matter: Option<String>,
    #[arg(long, global = true)]
    pub alpha: Option<f64>,
    #[arg(long, global = true, value_name = "KIND")]
    pub field: Option<FieldKind>,
    #[arg(long, global = true)]
    pub mean_photons: Option<f64>,
    #[arg(long, global = true)]
    pub fock_n: Option<usize>,
    #[arg(long, global = true)]
    pub phi: Option<f64>,
    #[arg(long, global = true)]
    pub custom_field: Option<PathBuf>,
    #[arg(long, global = true)]
    pub custom_joint: Option<PathBuf>,
    /// Detuning in units of the transition frequency.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub detuning: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub asymmetry: Option<f64>,
    #[arg(long, global = true)]
    pub formula: Option<Formula>,
    /// Field-rate scenario: a, b or c.
    #[arg(long, global = true)]
    pub scenario: Option<String>,
    #[arg(long, global = true, value_enum)]
    pub chi0: Option<Chi0Inclusion>,
    #[arg(long, global = true)]
    pub fock_cutoff: Option<usize>,
    /// Comma-separated tensor components, e.g. `xx,xy`.
    #[arg(long, global = true, value_delimiter = ',')]
    pub components: Option<Vec<String>>,
    /// Sweep axis `name:start:stop:count[:log]`; repeat for a second axis.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub axis: Vec<String>,
    /// Base name of written files.
    #[arg(long, global = true)]
    pub name: Option<String>,
    #[arg(long, global = true, value_enum)]
    pub plot_part: Option<PlotPart>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Spontaneous polarization term.
    Chi0,
    /// Linear susceptibility.
    Chi1,
    /// Second-harmonic susceptibility.
    Chi2,
    /// Parameter sweep over the configured axes and series.
    Sweep,
    /// Time-domain cross-check of the closed forms.
    OracleCheck,
    /// Semiclassical validity report.
    Validate,
}

fn parse_axis(text: &str) -> Result<AxisSpec> {
    let bad = || Error::Config(format!("axis '{text}': expected name:start:stop:count[:log]"));
    let parts: Vec<&str> = text.split(':').collect();
    if !(4..=5).contains(&parts.len()) {
        return Err(bad());
    }
    let name = match parts[0] {
        "detuning" => AxisName::Detuning,
        "mean_photons" => AxisName::MeanPhotons,
        "asymmetry" => AxisName::Asymmetry,
        "fock_n" => AxisName::FockN,
        "phi" => AxisName::Phi,
        _ => return Err(bad()),
    };
    let num = |s: &str| s.parse::<f64>().map_err(|_| bad());
    let scale = match parts.get(4) {
        None | Some(&"linear") => AxisScale::Linear,
        Some(&"log") => AxisScale::Log,
        _ => return Err(bad()),
    };
    Ok(AxisSpec {
        name,
        start: num(parts[1])?,
        stop: num(parts[2])?,
        count: parts[3].parse().map_err(|_| bad())?,
        scale,
    })
}

impl Global {
    /// Configuration file (or defaults) with every given flag applied on top.
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        let o = &self.overrides;
        macro_rules! set {
            ($flag:expr, $field:expr) => {
                if let Some(v) = $flag.clone() {
                    $field = v;
                }
            };
        }
        set!(o.matter, cfg.state.matter);
        if o.alpha.is_some() {
            cfg.state.alpha = o.alpha;
        }
        set!(o.field, cfg.state.field);
        set!(o.mean_photons, cfg.state.mean_photons);
        set!(o.fock_n, cfg.state.fock_n);
        set!(o.phi, cfg.state.phi);
        if o.custom_field.is_some() {
            cfg.state.custom_field = o.custom_field.clone();
        }
        if o.custom_joint.is_some() {
            cfg.state.custom_joint = o.custom_joint.clone();
        }
        set!(o.detuning, cfg.evaluation.detuning);
        set!(o.asymmetry, cfg.system.asymmetry);
        if o.formula.is_some() {
            cfg.evaluation.formula = o.formula;
        }
        set!(o.scenario, cfg.evaluation.rate_scenario);
        set!(o.chi0, cfg.evaluation.chi0_inclusion);
        if o.fock_cutoff.is_some() {
            cfg.system.fock_cutoff = o.fock_cutoff;
        }
        set!(o.components, cfg.evaluation.components);
        if !o.axis.is_empty() {
            cfg.sweep.axes = o.axis.iter().map(|a| parse_axis(a)).collect::<Result<_>>()?;
        }
        set!(o.name, cfg.output.name);
        set!(o.plot_part, cfg.output.plot_part);
        if self.out.is_some() {
            cfg.output.out_dir = self.out.clone();
        }
        set!(self.format, cfg.output.format);
        if self.plot {
            cfg.output.plot = true;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Error reported by a subcommand, with the exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub error: Error,
}

impl Failure {
    fn config(error: Error) -> Self {
        Self { code: EXIT_CONFIG, error }
    }
    fn eval(error: Error) -> Self {
        Self { code: EXIT_EVAL, error }
    }
}

/// Build-stage and input problems are configuration errors; the rest are evaluator errors.
fn classify(error: Error) -> Failure {
    match error {
        Error::Config(_) | Error::Io(_) => Failure::config(error),
        _ => Failure::eval(error),
    }
}

fn base_point(cfg: &RunConfig) -> Point {
    Point { system: cfg.system.clone(), state: cfg.state.clone(), eval: cfg.evaluation.clone() }
}

fn write_or_print(cfg: &RunConfig, file: &str, text: &str) -> Result<Option<PathBuf>> {
    match &cfg.output.out_dir {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            let path = dir.join(file);
            std::fs::write(&path, text)?;
            Ok(Some(path))
        }
        None => {
            print!("{text}");
            Ok(None)
        }
    }
}

fn ext(cfg: &RunConfig) -> &'static str {
    match cfg.output.format {
        OutputFormat::Csv => "csv",
        OutputFormat::Json => "json",
    }
}

fn write_plots(cfg: &RunConfig, table: &Table) -> Result<Vec<PathBuf>> {
    let dir = cfg.output.out_dir.clone().unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&dir)?;
    let axes: Vec<(AxisName, AxisScale)> = cfg.sweep.axes.iter().map(|a| (a.name, a.scale)).collect();
    let mut written = Vec::new();
    for ch in &table.channels {
        let spec = PlotSpec {
            channel: ch.clone(),
            part: cfg.output.plot_part,
            axes: axes.clone(),
            title: cfg.output.title.clone().unwrap_or_else(|| ch.clone()),
        };
        let svg = emit_plot(table, &spec)?;
        let path = dir.join(format!("{}_{ch}.svg", cfg.output.name));
        std::fs::write(&path, svg)?;
        written.push(path);
    }
    Ok(written)
}

fn run_single(cfg: &RunConfig) -> std::result::Result<(), Failure> {
    let point = base_point(cfg);
    let orders = &point.eval.orders;
    let f1 = orders.contains(&1).then(|| formula_for(1, point.eval.formula)).transpose().map_err(Failure::config)?;
    let f2 = orders.contains(&2).then(|| formula_for(2, point.eval.formula)).transpose().map_err(Failure::config)?;
    let need_joint = f1 == Some(Formula::QuantumGeneral) || f2 == Some(Formula::QuantumSHG);
    let built = build(&point, need_joint).map_err(Failure::config)?;
    let result = evaluate_built(&point, &built, f1, f2).map_err(Failure::eval)?;
    let text = match cfg.output.format {
        // JSON keeps the full tensors and provenance.
        OutputFormat::Json => result.to_json() + "\n",
        OutputFormat::Csv => point_table(cfg, &point, &result).and_then(|t| t.to_csv()).map_err(Failure::config)?,
    };
    let file = format!("{}.{}", cfg.output.name, ext(cfg));
    if let Some(path) = write_or_print(cfg, &file, &text).map_err(Failure::config)? {
        eprintln!("wrote {}", path.display());
    }
    if cfg.output.plot {
        eprintln!("no sweep axis; nothing to plot");
    }
    Ok(())
}

fn run_table(mut cfg: RunConfig, orders: Option<Vec<u8>>) -> std::result::Result<(), Failure> {
    if let Some(o) = orders {
        cfg.evaluation.orders = o;
    }
    if cfg.sweep.axes.is_empty() && cfg.sweep.series.is_empty() {
        return run_single(&cfg);
    }
    let table = run_sweep(&cfg).map_err(classify)?;
    let text = match cfg.output.format {
        OutputFormat::Csv => table.to_csv(),
        OutputFormat::Json => table.to_json().map(|s| s + "\n"),
    }
    .map_err(Failure::config)?;
    let file = format!("{}.{}", cfg.output.name, ext(&cfg));
    if let Some(path) = write_or_print(&cfg, &file, &text).map_err(Failure::config)? {
        eprintln!("wrote {}", path.display());
    }
    let failed = table.rows.iter().filter(|r| !r.error.is_empty()).count();
    if failed > 0 {
        eprintln!("{failed} of {} point(s) failed; see the error column", table.rows.len());
    }
    if cfg.output.plot {
        if cfg.sweep.axes.is_empty() {
            eprintln!("no sweep axis; nothing to plot");
        } else {
            for path in write_plots(&cfg, &table).map_err(Failure::eval)? {
                eprintln!("wrote {}", path.display());
            }
        }
    }
    if failed == table.rows.len() {
        let first = table.rows.first().map(|r| r.error.clone()).unwrap_or_default();
        return Err(Failure::eval(Error::InvalidParameter(format!("every point failed (first: {first})"))));
    }
    Ok(())
}

fn run_oracle_check(cfg: RunConfig) -> std::result::Result<(), Failure> {
    let point = base_point(&cfg);
    let built = build(&point, true).map_err(classify)?;
    let eq = built.joint().map_err(Failure::eval)?;
    let report = oracle_check(&built.problem, eq, &cfg.oracle).map_err(Failure::eval)?;
    for row in &report.comparison {
        eprintln!(
            "{:<6} relative error {:.3e} (tolerance {:.0e}) {}",
            row.quantity,
            row.relative_error,
            row.tolerance,
            if row.pass { "pass" } else { "FAIL" }
        );
    }
    let file = format!("{}_oracle.json", cfg.output.name);
    write_or_print(&cfg, &file, &(report.to_json() + "\n")).map_err(Failure::config)?;
    if !report.all_pass() {
        return Err(Failure { code: EXIT_ORACLE, error: Error::InvalidParameter("oracle disagrees with the closed forms".into()) });
    }
    Ok(())
}

fn run_validate(cfg: RunConfig) -> std::result::Result<(), Failure> {
    let report = validity_report(&base_point(&cfg));
    match cfg.output.format {
        OutputFormat::Json => {
            let text = serde_json::to_string_pretty(&report).map_err(|e| Failure::config(Error::Io(e.to_string())))? + "\n";
            write_or_print(&cfg, &format!("{}_validity.json", cfg.output.name), &text).map_err(Failure::config)?;
        }
        OutputFormat::Csv => {
            print!("{}", report.render());
            if let Some(dir) = &cfg.output.out_dir {
                let text = serde_json::to_string_pretty(&report).map_err(|e| Failure::config(Error::Io(e.to_string())))?;
                std::fs::create_dir_all(dir).map_err(|e| Failure::config(e.into()))?;
                std::fs::write(dir.join(format!("{}_validity.json", cfg.output.name)), text + "\n")
                    .map_err(|e| Failure::config(e.into()))?;
            }
        }
    }
    Ok(())
}

/// Runs a parsed command line and returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    let cfg = match cli.global.resolve() {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config error: {e}");
            return EXIT_CONFIG;
        }
    };
    let outcome = match cli.command {
        Command::Chi0 => run_table(cfg, Some(vec![0])),
        Command::Chi1 => run_table(cfg, Some(vec![1])),
        Command::Chi2 => run_table(cfg, Some(vec![2])),
        Command::Sweep => run_table(cfg, None),
        Command::OracleCheck => run_oracle_check(cfg),
        Command::Validate => run_validate(cfg),
    };
    match outcome {
        Ok(()) => EXIT_OK,
        Err(f) => {
            let kind = match f.code {
                EXIT_CONFIG => "config error",
                EXIT_ORACLE => "oracle check failed",
                _ => "evaluation error",
            };
            eprintln!("{kind} [{}]: {}", f.error.code(), f.error);
            f.code
        }
    }
}
