//! Run configuration: one JSON document, every section optional.
//!
//! Precedence, highest first: command-line flags, `GMI_OUTPUT_ROOT` (output
//! root only), the config file, built-in defaults.

use std::path::PathBuf;

use gmi_core::alber::{ContourSpec, Convention, OmegaGrid};
use gmi_core::experiments::{GmiConfig, Table1Config, GMI_BASE_LENGTH, TABLE1_FACTORS};
use gmi_core::spectrum::SpectrumSpec;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub spectrum: SpectrumSpec,
    pub domain: DomainConfig,
    pub stability: StabilityConfig,
    pub simulation: SimulationConfig,
    pub experiment: ExperimentConfig,
    /// Output root; artifacts go to `<output>/runs/<experiment>/<hash>/`.
    pub output: Option<PathBuf>,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            spectrum: SpectrumSpec::Gaussian {
                variance: 1.0,
                center: 0.2,
                width: 0.02,
            },
            domain: DomainConfig::default(),
            stability: StabilityConfig::default(),
            simulation: SimulationConfig::default(),
            experiment: ExperimentConfig::default(),
            output: None,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DomainConfig {
    pub length: f64,
    pub spacing_multiplier: u32,
}

impl Default for DomainConfig {
    fn default() -> Self {
        Self {
            length: 50.0,
            spacing_multiplier: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum StabilityMethod {
    #[default]
    Contour,
    Gridscan,
    Oracle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StabilityConfig {
    pub method: StabilityMethod,
    pub p: f64,
    pub q: f64,
    /// Which normalization `p`, `q` are written in. The kernel's own is `half`.
    pub convention: Convention,
    /// Defaults to `±2·max|n|`.
    pub xi_min: Option<i64>,
    pub xi_max: Option<i64>,
    pub contour: ContourSpec,
    pub grid: OmegaGrid,
    pub refine_tol: f64,
    /// Defaults to the smallest admissible truncation.
    pub k_trunc: Option<i64>,
    /// Mode whose Nyquist curve is exported; defaults to the fastest witness, else 1.
    pub nyquist_xi: Option<i64>,
    /// `converge` evaluates at lengths `domain.length × factor`.
    pub ladder_factors: Vec<f64>,
    /// Defaults to `1/domain.length`.
    pub converge_x: Option<f64>,
    pub converge_omega: [f64; 2],
}

impl Default for StabilityConfig {
    fn default() -> Self {
        Self {
            method: StabilityMethod::Contour,
            p: 1.0,
            q: 1.0,
            convention: Convention::Half,
            xi_min: None,
            xi_max: None,
            contour: ContourSpec::default(),
            grid: OmegaGrid {
                re_min: 0.01,
                re_max: 2.0,
                im_min: -4.0,
                im_max: 4.0,
                n_re: 60,
                n_im: 200,
            },
            refine_tol: 1e-10,
            k_trunc: None,
            nyquist_xi: None,
            ladder_factors: vec![1.0, 2.0, 4.0, 8.0],
            converge_x: None,
            converge_omega: [0.3, 0.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialCondition {
    PlaneWave { amplitude: f64 },
    /// `A(1 + δ_j(x))` with the five localized inhomogeneities.
    Inhomogeneity { j: u8, amplitude: f64 },
    /// A random-phase realization of `spectrum` on `domain`, drawn with `seed`.
    SeaState,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulationConfig {
    pub p: f64,
    pub q: f64,
    /// The simulator's own normalization is `full`.
    pub convention: Convention,
    pub dt: f64,
    /// Grid spacing; ignored when `nx` is set.
    pub dx: f64,
    pub nx: Option<usize>,
    pub t_final: f64,
    pub store_every: usize,
    pub initial: InitialCondition,
    pub heatmap_stride: usize,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            p: 1.0,
            q: 1.0,
            convention: Convention::Full,
            dt: 4e-3,
            dx: 4e-3,
            nx: None,
            t_final: 10.0,
            store_every: 25,
            initial: InitialCondition::PlaneWave { amplitude: 1.0 },
            heatmap_stride: 1,
        }
    }
}

impl SimulationConfig {
    /// `(p, q)` in the simulator's normalization.
    pub fn full_coefficients(&self) -> (f64, f64) {
        match self.convention {
            Convention::Full => (self.p, self.q),
            Convention::Half => (0.5 * self.p, 0.5 * self.q),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    Spectrum,
    Realize,
    #[default]
    Stability,
    Converge,
    Simulate,
    Table1,
    Gmi,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Spectrum => "spectrum",
            Experiment::Realize => "realize",
            Experiment::Stability => "stability",
            Experiment::Converge => "converge",
            Experiment::Simulate => "simulate",
            Experiment::Table1 => "table1",
            Experiment::Gmi => "gmi",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    /// What `gmi run` executes.
    pub select: Experiment,
    pub realize: RealizeConfig,
    pub table1: Table1Section,
    pub gmi: GmiSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RealizeConfig {
    pub count: usize,
    /// Grid points per sampled realization; defaults to the alias-free minimum.
    pub points: Option<usize>,
}

impl Default for RealizeConfig {
    fn default() -> Self {
        Self { count: 1, points: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Table1Section {
    pub j: Vec<u8>,
    pub factors: Vec<f64>,
    pub dt: f64,
    pub dx: f64,
    pub t_final: f64,
    pub store_every: usize,
}

impl Default for Table1Section {
    fn default() -> Self {
        let base = Table1Config::new(1, 1.0);
        Self {
            j: vec![1, 2, 3, 4, 5],
            factors: TABLE1_FACTORS.to_vec(),
            dt: base.dt,
            dx: base.dx,
            t_final: base.t_final,
            store_every: base.store_every,
        }
    }
}

impl Table1Section {
    pub fn cells(&self) -> Vec<Table1Config> {
        self.j
            .iter()
            .flat_map(|&j| {
                self.factors.iter().map(move |&f| Table1Config {
                    dt: self.dt,
                    dx: self.dx,
                    t_final: self.t_final,
                    store_every: self.store_every,
                    ..Table1Config::new(j, f)
                })
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GmiSection {
    pub periods: Vec<f64>,
    pub base_length: f64,
    pub dt: f64,
    pub dx: f64,
    pub t_final: f64,
    pub perturbation: f64,
    pub store_every: usize,
}

impl Default for GmiSection {
    fn default() -> Self {
        let base = GmiConfig::new(1.0);
        Self {
            periods: vec![1.0, 2.0, 3.0, 10.0],
            base_length: GMI_BASE_LENGTH,
            dt: base.dt,
            dx: base.dx,
            t_final: base.t_final,
            perturbation: base.perturbation,
            store_every: base.store_every,
        }
    }
}

impl GmiSection {
    pub fn runs(&self) -> Vec<GmiConfig> {
        self.periods
            .iter()
            .map(|&periods| GmiConfig {
                periods,
                base_length: self.base_length,
                dt: self.dt,
                dx: self.dx,
                t_final: self.t_final,
                perturbation: self.perturbation,
                store_every: self.store_every,
            })
            .collect()
    }
}

/// Parses a config document. Missing sections and keys take their defaults;
/// unknown keys are an error.
pub fn parse_config(text: &str) -> Result<RunConfig, CliError> {
    let cfg: RunConfig = serde_json::from_str(text).map_err(|e| CliError::Config(format!("config: {e}")))?;
    cfg.validate()?;
    Ok(cfg)
}

impl RunConfig {
    /// Cheap structural checks. Numerical preconditions are left to the
    /// library, whose parameter errors map to the same exit code.
    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: &str| Err(CliError::Config(m.to_string()));
        if !(self.domain.length > 0.0 && self.domain.length.is_finite()) {
            return bad("domain.length must be positive and finite");
        }
        if self.domain.spacing_multiplier == 0 {
            return bad("domain.spacing_multiplier must be at least 1");
        }
        if let (Some(lo), Some(hi)) = (self.stability.xi_min, self.stability.xi_max) {
            if lo > hi {
                return bad("stability.xi_min exceeds stability.xi_max");
            }
        }
        if self.stability.ladder_factors.iter().any(|f| !(*f > 0.0 && f.is_finite())) {
            return bad("stability.ladder_factors must be positive");
        }
        if self.simulation.store_every == 0 || self.simulation.heatmap_stride == 0 {
            return bad("simulation.store_every and simulation.heatmap_stride must be at least 1");
        }
        if self.experiment.table1.store_every == 0 || self.experiment.gmi.store_every == 0 {
            return bad("experiment store_every must be at least 1");
        }
        if self.experiment.realize.count == 0 {
            return bad("experiment.realize.count must be at least 1");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_is_all_defaults() {
        assert_eq!(parse_config("{}").unwrap(), RunConfig::default());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(parse_config(r#"{"domain": {"lenght": 3}}"#).is_err());
        assert!(parse_config(r#"{"extra": 1}"#).is_err());
        assert!(parse_config(r#"{"spectrum": {"kind": "gaussian", "variance": 1, "center": 0, "width": 1, "x": 0}}"#).is_err());
    }

    #[test]
    fn defaults_round_trip() {
        let text = serde_json::to_string(&RunConfig::default()).unwrap();
        assert_eq!(parse_config(&text).unwrap(), RunConfig::default());
    }

    #[test]
    fn partial_sections_keep_other_defaults() {
        let cfg = parse_config(r#"{"stability": {"q": 2.0}, "simulation": {"initial": {"kind": "inhomogeneity", "j": 3, "amplitude": 1}}}"#).unwrap();
        assert_eq!(cfg.stability.q, 2.0);
        assert_eq!(cfg.stability.p, 1.0);
        assert_eq!(cfg.simulation.initial, InitialCondition::Inhomogeneity { j: 3, amplitude: 1.0 });
    }

    #[test]
    fn half_convention_halves_simulator_coefficients() {
        let s = SimulationConfig {
            convention: Convention::Half,
            p: 2.0,
            q: 4.0,
            ..Default::default()
        };
        assert_eq!(s.full_coefficients(), (1.0, 2.0));
    }

    #[test]
    fn table1_cells_cover_the_matrix() {
        let cells = Table1Section::default().cells();
        assert_eq!(cells.len(), 20);
        assert_eq!((cells[5].j, cells[5].factor), (2, 1.3));
    }

    #[test]
    fn structural_errors_are_config_errors() {
        for bad in [
            r#"{"domain": {"length": -1}}"#,
            r#"{"stability": {"xi_min": 3, "xi_max": 1}}"#,
            r#"{"experiment": {"realize": {"count": 0}}}"#,
            "not json",
        ] {
            assert!(matches!(parse_config(bad), Err(CliError::Config(_))), "{bad}");
        }
    }
}
