//! Run configuration: a TOML document whose fields can also be set from flags.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::oracle::OracleConfig;
use crate::states::StateRole;
use crate::susceptibility::Formula;

/// Physical parameters at the boundary: frequencies in Hz, volume in μm³.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemConfig {
    pub omega_x_hz: f64,
    pub coupling_hz: f64,
    pub gamma_hz: f64,
    pub gamma_d_hz: f64,
    pub kappa_hz: f64,
    pub volume_um3: f64,
    pub epsilon0: f64,
    pub asymmetry: f64,
    pub polarization: [f64; 3],
    /// Emitters per m³; one per mode volume when absent.
    pub number_density: Option<f64>,
    /// Chosen from the field state when absent.
    pub fock_cutoff: Option<usize>,
    /// Allowed trace deficit of truncated field states.
    pub truncation_tol: f64,
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self {
            omega_x_hz: 2.05e12,
            coupling_hz: 25e9,
            gamma_hz: 100e9,
            gamma_d_hz: 10e9,
            kappa_hz: 27e9,
            volume_um3: 0.05,
            epsilon0: 1.0,
            asymmetry: 1.0,
            polarization: [1.0, 0.0, 0.0],
            number_density: None,
            fock_cutoff: None,
            truncation_tol: 1e-8,
        }
    }
}

impl SystemConfig {
    pub fn volume_m3(&self) -> f64 {
        self.volume_um3 * 1e-18
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldKind {
    Coherent,
    Thermal,
    Fock,
    Auxiliary,
    AuxiliaryAdjacent,
    ThermalAuxiliary,
    Custom,
}

impl std::str::FromStr for FieldKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "coherent" => Ok(Self::Coherent),
            "thermal" => Ok(Self::Thermal),
            "fock" | "number" => Ok(Self::Fock),
            "auxiliary" => Ok(Self::Auxiliary),
            "auxiliary_adjacent" => Ok(Self::AuxiliaryAdjacent),
            "thermal_auxiliary" => Ok(Self::ThermalAuxiliary),
            "custom" => Ok(Self::Custom),
            other => Err(Error::Config(format!("unknown field state '{other}'"))),
        }
    }
}

impl FieldKind {
    pub fn tag(&self) -> &'static str {
        match self {
            Self::Coherent => "coherent",
            Self::Thermal => "thermal",
            Self::Fock => "fock",
            Self::Auxiliary => "auxiliary",
            Self::AuxiliaryAdjacent => "auxiliary_adjacent",
            Self::ThermalAuxiliary => "thermal_auxiliary",
            Self::Custom => "custom",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StateConfig {
    /// `PE`, `PG`, `MM`, `MS` or `custom` (then `alpha`/`beta` are used).
    pub matter: String,
    pub alpha: Option<f64>,
    /// `[re, im]`.
    pub beta: Option<[f64; 2]>,
    pub field: FieldKind,
    pub mean_photons: f64,
    pub fock_n: usize,
    pub phi: f64,
    /// Field-factor matrix as `{"dim", "re", "im"}` JSON.
    pub custom_field: Option<PathBuf>,
    /// Whole joint matrix; replaces the matter/field factors.
    pub custom_joint: Option<PathBuf>,
    pub role: StateRole,
}

impl Default for StateConfig {
    fn default() -> Self {
        Self {
            matter: "MS".into(),
            alpha: None,
            beta: None,
            field: FieldKind::Coherent,
            mean_photons: 3.0,
            fock_n: 1,
            phi: 20.0,
            custom_field: None,
            custom_joint: None,
            role: StateRole::Equilibrium,
        }
    }
}

/// How the spontaneous polarization enters the linear response.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Chi0Inclusion {
    #[default]
    Include,
    Exclude,
    /// Report `χ⁽ω⁾(with) − χ⁽ω⁾(without)`.
    Difference,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    /// Applied to every requested order it belongs to; the other order uses its counterpart.
    pub formula: Option<Formula>,
    pub rate_scenario: String,
    /// In units of the transition frequency.
    pub detuning: f64,
    pub chi0_inclusion: Chi0Inclusion,
    /// Orders to report (0, 1, 2).
    pub orders: Vec<u8>,
    /// Tensor components per order, e.g. `"x"`, `"xx"`, `"xxx"`.
    pub components: Vec<String>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            formula: None,
            rate_scenario: "c".into(),
            detuning: 0.0,
            chi0_inclusion: Chi0Inclusion::Include,
            orders: vec![1],
            components: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AxisName {
    Detuning,
    MeanPhotons,
    Asymmetry,
    FockN,
    Phi,
}

impl AxisName {
    pub fn tag(&self) -> &'static str {
        match self {
            Self::Detuning => "detuning",
            Self::MeanPhotons => "mean_photons",
            Self::Asymmetry => "asymmetry",
            Self::FockN => "fock_n",
            Self::Phi => "phi",
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Self::Detuning => "detuning Δ/ω_x (dimensionless)",
            Self::MeanPhotons => "mean photon number n̄",
            Self::Asymmetry => "asymmetry A (dimensionless)",
            Self::FockN => "photon number N",
            Self::Phi => "auxiliary decay φ",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AxisScale {
    #[default]
    Linear,
    Log,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisSpec {
    pub name: AxisName,
    pub start: f64,
    pub stop: f64,
    pub count: usize,
    #[serde(default)]
    pub scale: AxisScale,
}

impl AxisSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(format!("axis {}: {m}", self.name.tag())));
        if self.count < 2 {
            return bad(format!("count {} must be at least 2", self.count));
        }
        if !(self.start.is_finite() && self.stop.is_finite()) || self.start == self.stop {
            return bad("start and stop must be finite and different".into());
        }
        if self.scale == AxisScale::Log && !(self.start > 0.0 && self.stop > 0.0) {
            return bad("a log axis needs positive bounds".into());
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<f64> {
        let n = self.count;
        (0..n)
            .map(|i| {
                let t = i as f64 / (n - 1) as f64;
                let v = match (i, self.scale) {
                    (0, _) => self.start,
                    (i, _) if i == n - 1 => self.stop,
                    (_, AxisScale::Linear) => self.start + (self.stop - self.start) * t,
                    (_, AxisScale::Log) => (self.start.ln() + (self.stop.ln() - self.start.ln()) * t).exp(),
                };
                if matches!(self.name, AxisName::FockN) {
                    v.round()
                } else {
                    v
                }
            })
            .collect()
    }
}

/// One curve family of a sweep: overrides applied on top of the base configuration.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SeriesSpec {
    pub label: String,
    pub matter: Option<String>,
    pub field: Option<FieldKind>,
    pub mean_photons: Option<f64>,
    pub fock_n: Option<usize>,
    pub phi: Option<f64>,
    pub formula: Option<Formula>,
    pub rate_scenario: Option<String>,
    pub asymmetry: Option<f64>,
    pub detuning: Option<f64>,
    pub chi0_inclusion: Option<Chi0Inclusion>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub axes: Vec<AxisSpec>,
    pub series: Vec<SeriesSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum PlotPart {
    #[default]
    Re,
    Im,
    Both,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub out_dir: Option<PathBuf>,
    pub format: OutputFormat,
    pub plot: bool,
    /// Base name of the written files.
    pub name: String,
    pub plot_part: PlotPart,
    pub title: Option<String>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { out_dir: None, format: OutputFormat::Csv, plot: false, name: "result".into(), plot_part: PlotPart::Re, title: None }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub system: SystemConfig,
    pub state: StateConfig,
    pub evaluation: EvalConfig,
    pub sweep: SweepConfig,
    pub oracle: OracleConfig,
    pub output: OutputConfig,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Reads a config file; relative paths inside it are resolved against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [&mut cfg.state.custom_field, &mut cfg.state.custom_joint].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        for a in &self.sweep.axes {
            a.validate()?;
        }
        if self.sweep.axes.len() > 2 {
            return Err(Error::Config("at most two sweep axes are supported".into()));
        }
        let mut names: Vec<&str> = self.sweep.axes.iter().map(|a| a.name.tag()).collect();
        names.sort_unstable();
        names.dedup();
        if names.len() != self.sweep.axes.len() {
            return Err(Error::Config("sweep axes must be distinct".into()));
        }
        let mut labels: Vec<&str> = self.sweep.series.iter().map(|s| s.label.as_str()).collect();
        if labels.iter().any(|l| l.is_empty()) {
            return Err(Error::Config("every sweep series needs a label".into()));
        }
        labels.sort_unstable();
        labels.dedup();
        if labels.len() != self.sweep.series.len() {
            return Err(Error::Config("sweep series labels must be distinct".into()));
        }
        if self.evaluation.orders.is_empty() || self.evaluation.orders.iter().any(|&o| o > 2) {
            return Err(Error::Config("orders must be a nonempty subset of 0, 1, 2".into()));
        }
        for c in &self.evaluation.components {
            parse_component(c)?;
        }
        self.oracle.validate().map_err(|e| Error::Config(format!("oracle: {e}")))?;
        Ok(())
    }
}

/// `"xy"` → `[0, 1]`.
pub fn parse_component(s: &str) -> Result<Vec<usize>> {
    let idx: Result<Vec<usize>> = s
        .chars()
        .map(|c| match c.to_ascii_lowercase() {
            'x' => Ok(0),
            'y' => Ok(1),
            'z' => Ok(2),
            other => Err(Error::Config(format!("component '{s}': unknown axis '{other}'"))),
        })
        .collect();
    let idx = idx?;
    if idx.is_empty() || idx.len() > 3 {
        return Err(Error::Config(format!("component '{s}' must have 1 to 3 indices")));
    }
    Ok(idx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_toml() {
        let cfg = RunConfig::default();
        let text = toml::to_string(&cfg).unwrap();
        assert_eq!(RunConfig::from_toml(&text).unwrap(), cfg);
    }

    #[test]
    fn sweep_axis_rules() {
        let a = AxisSpec { name: AxisName::Detuning, start: -0.01, stop: 0.01, count: 5, scale: AxisScale::Linear };
        let want = [-0.01, -0.005, 0.0, 0.005, 0.01];
        assert!(a.values().iter().zip(want).all(|(v, w)| (v - w).abs() < 1e-15));
        assert!(AxisSpec { count: 1, ..a.clone() }.validate().is_err());
        assert!(AxisSpec { stop: -0.01, ..a.clone() }.validate().is_err());
        let log = AxisSpec { name: AxisName::MeanPhotons, start: 1.0, stop: 100.0, count: 3, scale: AxisScale::Log };
        let v = log.values();
        assert!((v[1] - 10.0).abs() < 1e-12);
    }

    #[test]
    fn unknown_keys_are_config_errors() {
        assert!(matches!(RunConfig::from_toml("[system]\nbogus = 1"), Err(Error::Config(_))));
        let cfg = RunConfig::from_toml("[evaluation]\norders = [3]").unwrap();
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn components() {
        assert_eq!(parse_component("xyz").unwrap(), vec![0, 1, 2]);
        assert!(parse_component("xq").is_err());
        assert!(parse_component("").is_err());
    }
}
