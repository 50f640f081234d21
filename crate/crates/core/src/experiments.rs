//! Scripted studies: plane-wave inhomogeneity growth across the bifurcation
//! length, suppression of generalized MI on short domains, and the
//! end-to-end stability pipeline. Each study can leave a [`RunRecord`].

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::alber::{
    default_xi_range, detect_instability_contour, eigenvalue_oracle, minimal_truncation, riemann_convergence_study,
    Convention, ContourSpec, ConvergenceRow, KernelParams, StabilityVerdict, Status,
};
use crate::error::param;
use crate::nlssim::{
    extract_inhomogeneity_general, extract_inhomogeneity_planewave, grid, grid_points_for, linear_mi_analysis, solve,
    sup_modulus, SimConfig, WaveField,
};
use crate::spectrum::{discretize, PowerSpectrum};
use crate::{Complex64, Result};

pub const TOOLKIT_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Domain-length factors `N` in `L = N·L_c`.
pub const TABLE1_FACTORS: [f64; 4] = [0.98, 1.3, 3.0, 10.0];

/// Published `max|δ|` per inhomogeneity (rows) and factor (columns).
pub const TABLE1_PUBLISHED: [[f64; 4]; 5] = [
    [0.0359, 2.59, 3.08, 3.03],
    [0.0393, 2.59, 3.09, 3.03],
    [0.149, 2.65, 3.17, 3.12],
    [0.25, 2.69, 3.22, 3.18],
    [0.03, 2.57, 3.05, 2.96],
];

/// Domain length of the three-mode gMI background.
pub const GMI_BASE_LENGTH: f64 = 4.4518;

/// Initial inhomogeneities `δ_j(x)` added to the unit plane wave.
pub fn inhomogeneity(j: u8, x: f64) -> Result<f64> {
    Ok(match j {
        1 => 0.03 * (5.0 * x).cos() / (15.0 * x).cosh(),
        2 => 0.03 / (15.0 * x).cosh(),
        3 => 0.03 * (-3.0 * x * x).exp(),
        4 => 0.03 * (-x.powi(4)).exp(),
        5 => 0.06 * x * (-x.powi(4)).exp(),
        _ => return param(format!("inhomogeneity index must be 1..=5, got {j}")),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Table1Config {
    pub j: u8,
    pub factor: f64,
    #[serde(default = "one")]
    pub amplitude: f64,
    #[serde(default = "one")]
    pub p: f64,
    #[serde(default = "one")]
    pub q: f64,
    #[serde(default = "default_step")]
    pub dt: f64,
    #[serde(default = "default_step")]
    pub dx: f64,
    #[serde(default = "ten")]
    pub t_final: f64,
    #[serde(default = "default_cadence")]
    pub store_every: usize,
}

fn one() -> f64 {
    1.0
}
fn ten() -> f64 {
    10.0
}
fn default_step() -> f64 {
    4e-3
}
fn default_cadence() -> usize {
    25
}

impl Table1Config {
    pub fn new(j: u8, factor: f64) -> Self {
        Self {
            j,
            factor,
            amplitude: 1.0,
            p: 1.0,
            q: 1.0,
            dt: default_step(),
            dx: default_step(),
            t_final: ten(),
            store_every: default_cadence(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Table1Outcome {
    pub max_delta: f64,
    pub critical_length: f64,
    pub domain_length: f64,
    pub nx: usize,
    pub dx: f64,
    pub unstable_modes: Vec<i64>,
    pub mass_drift: f64,
    pub energy_drift: f64,
    pub wall_seconds: f64,
}

pub struct Table1Run {
    pub outcome: Table1Outcome,
    pub field: WaveField,
    pub delta: Vec<Vec<Complex64>>,
}

/// Runs `u₀ = A(1 + δ_j)` on `L = N·L_c` and measures `max_{x,t}|δ|`.
pub fn run_table1_with(cfg: &Table1Config) -> Result<Table1Run> {
    if !(cfg.factor > 0.0) {
        return param("domain factor must be positive");
    }
    let start = Instant::now();
    let mi = linear_mi_analysis(cfg.p, cfg.q, cfg.amplitude, 1.0, 1)?;
    let lc = mi.critical_length;
    let l = cfg.factor * lc;
    let nx = grid_points_for(l, cfg.dx)?;
    let init = grid(l, nx)
        .into_iter()
        .map(|x| inhomogeneity(cfg.j, x).map(|d| Complex64::new(cfg.amplitude * (1.0 + d), 0.0)))
        .collect::<Result<Vec<_>>>()?;
    let sim = SimConfig::new(cfg.p, cfg.q, l, cfg.dt, cfg.t_final, init)?;
    let field = solve(&sim, cfg.store_every)?;
    let delta = extract_inhomogeneity_planewave(&field, cfg.amplitude, cfg.q)?;
    let unstable_modes = linear_mi_analysis(cfg.p, cfg.q, cfg.amplitude, l, 64)?.unstable_modes;
    Ok(Table1Run {
        outcome: Table1Outcome {
            max_delta: sup_modulus(&delta),
            critical_length: lc,
            domain_length: l,
            nx,
            dx: sim.dx(),
            unstable_modes,
            mass_drift: field.mass_drift(),
            energy_drift: field.energy_drift(),
            wall_seconds: start.elapsed().as_secs_f64(),
        },
        field,
        delta,
    })
}

/// `max|δ|` for inhomogeneity `j` on `L = N·L_c` with the default resolution.
pub fn run_table1(j: u8, factor: f64) -> Result<f64> {
    Ok(run_table1_with(&Table1Config::new(j, factor))?.outcome.max_delta)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GmiConfig {
    /// Number of background periods, `L = N·L₀`.
    pub periods: f64,
    #[serde(default = "gmi_base")]
    pub base_length: f64,
    #[serde(default = "default_step")]
    pub dt: f64,
    #[serde(default = "default_step")]
    pub dx: f64,
    #[serde(default = "gmi_time")]
    pub t_final: f64,
    #[serde(default = "gmi_perturbation")]
    pub perturbation: f64,
    #[serde(default = "default_cadence")]
    pub store_every: usize,
}

fn gmi_base() -> f64 {
    GMI_BASE_LENGTH
}
fn gmi_time() -> f64 {
    10.3
}
fn gmi_perturbation() -> f64 {
    0.07
}

impl GmiConfig {
    pub fn new(periods: f64) -> Self {
        Self {
            periods,
            base_length: gmi_base(),
            dt: default_step(),
            dx: default_step(),
            t_final: gmi_time(),
            perturbation: gmi_perturbation(),
            store_every: default_cadence(),
        }
    }
}

/// Three-mode background `0.018e^{−2πix/L₀} + 0.899 + 0.1252e^{2πix/L₀}`.
pub fn gmi_background(x: f64, base_length: f64) -> Complex64 {
    let k = 2.0 * PI * x / base_length;
    0.018 * Complex64::from_polar(1.0, -k) + 0.899 + 0.1252 * Complex64::from_polar(1.0, k)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GmiOutcome {
    pub sup_delta: f64,
    pub initial_sup_delta: f64,
    pub domain_length: f64,
    pub nx: usize,
    pub dx: f64,
    pub mass_drift_background: f64,
    pub mass_drift_perturbed: f64,
    pub wall_seconds: f64,
}

pub struct GmiRun {
    pub outcome: GmiOutcome,
    pub times: Vec<f64>,
    pub delta: Vec<Vec<Complex64>>,
}

/// Runs the background `u` and the perturbed `v = u + ε·sech(15x)cos(5x)` and
/// returns `δ = v − u`. A non-integer number of periods would break the
/// periodicity of the background and is refused.
pub fn run_gmi_with(cfg: &GmiConfig) -> Result<GmiRun> {
    if !(cfg.periods >= 1.0) || cfg.periods.fract() != 0.0 {
        return param(format!("number of periods must be a positive integer, got {}", cfg.periods));
    }
    let start = Instant::now();
    let l = cfg.periods * cfg.base_length;
    let nx = grid_points_for(l, cfg.dx)?;
    let xs = grid(l, nx);
    let u0: Vec<Complex64> = xs.iter().map(|&x| gmi_background(x, cfg.base_length)).collect();
    let v0: Vec<Complex64> = xs
        .iter()
        .zip(&u0)
        .map(|(&x, &u)| u + cfg.perturbation * (5.0 * x).cos() / (15.0 * x).cosh())
        .collect();
    let run = |init: Vec<Complex64>| -> Result<WaveField> {
        solve(&SimConfig::new(1.0, 1.0, l, cfg.dt, cfg.t_final, init)?, cfg.store_every)
    };
    let (u, v) = rayon::join(|| run(u0), || run(v0));
    let (u, v) = (u?, v?);
    let delta = extract_inhomogeneity_general(&v, &u)?;
    Ok(GmiRun {
        outcome: GmiOutcome {
            sup_delta: sup_modulus(&delta),
            initial_sup_delta: sup_modulus(&delta[..1]),
            domain_length: l,
            nx,
            dx: l / nx as f64,
            mass_drift_background: u.mass_drift(),
            mass_drift_perturbed: v.mass_drift(),
            wall_seconds: start.elapsed().as_secs_f64(),
        },
        times: u.times,
        delta,
    })
}

pub fn run_gmi(periods: f64) -> Result<(f64, GmiRun)> {
    let r = run_gmi_with(&GmiConfig::new(periods))?;
    Ok((r.outcome.sup_delta, r))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineOptions {
    #[serde(default)]
    pub convention: Convention,
    #[serde(default = "one_u32")]
    pub spacing_multiplier: u32,
    #[serde(default)]
    pub contour: ContourSpec,
    #[serde(default = "default_refine")]
    pub refine_tol: f64,
    /// `None` selects the smallest admissible truncation.
    #[serde(default)]
    pub k_trunc: Option<i64>,
    #[serde(default = "default_ladder")]
    pub ladder_factors: Vec<f64>,
}

fn one_u32() -> u32 {
    1
}
fn default_refine() -> f64 {
    1e-10
}
fn default_ladder() -> Vec<f64> {
    vec![1.0, 2.0, 4.0, 8.0]
}

impl Default for PipelineOptions {
    fn default() -> Self {
        Self {
            convention: Convention::Half,
            spacing_multiplier: 1,
            contour: ContourSpec::default(),
            refine_tol: default_refine(),
            k_trunc: None,
            ladder_factors: default_ladder(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PipelineOutcome {
    pub contour: StabilityVerdict,
    pub oracle: StabilityVerdict,
    /// Evaluated at the fastest-growing contour witness, or at `X = 1/L`,
    /// `ω = 0.3` when there is none.
    pub convergence: Vec<ConvergenceRow>,
    pub agree: bool,
    pub flags: Vec<String>,
}

/// Discretize, decide by the argument principle, cross-check with the
/// eigenvalue oracle, and compare `h̃_L` with `h_∞` along a length ladder.
pub fn run_stability_pipeline(
    s: &PowerSpectrum,
    domain_length: f64,
    p: f64,
    q: f64,
    opts: &PipelineOptions,
) -> Result<PipelineOutcome> {
    let d = discretize(s, domain_length, opts.spacing_multiplier)?;
    let kp = KernelParams::from_convention(p, q, opts.convention, d)?;
    let contour = detect_instability_contour(&kp, default_xi_range(&kp), &opts.contour, opts.refine_tol)?;
    let k_trunc = opts.k_trunc.unwrap_or_else(|| minimal_truncation(&kp));
    let oracle = eigenvalue_oracle(&kp, k_trunc)?;

    let mut flags = Vec::new();
    let decisive = matches!(contour.status, Status::Stable | Status::Unstable);
    if !decisive {
        flags.push(format!("contour verdict is {:?}", contour.status));
    }
    let agree = decisive && contour.unstable == oracle.unstable;
    if decisive && !agree {
        flags.push(format!(
            "methods disagree: contour unstable={}, oracle unstable={}",
            contour.unstable, oracle.unstable
        ));
    }

    let (x, omega) = contour
        .witnesses
        .iter()
        .max_by(|a, b| a.omega.re.total_cmp(&b.omega.re))
        .map(|w| (w.x, w.omega))
        .unwrap_or((1.0 / domain_length, Complex64::new(0.3, 0.0)));
    let ladder: Vec<f64> = opts.ladder_factors.iter().map(|f| f * domain_length).collect();
    let convergence = riemann_convergence_study(s, x, omega, kp.p, kp.q, &ladder)?;
    Ok(PipelineOutcome {
        contour,
        oracle,
        convergence,
        agree,
        flags,
    })
}

/// Provenance of one experiment run. Timing lives in its own field so that
/// everything else is reproducible byte for byte.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunRecord {
    pub experiment: String,
    pub config_hash: String,
    pub config: serde_json::Value,
    pub outputs: BTreeMap<String, serde_json::Value>,
    pub artifacts: Vec<String>,
    pub toolkit_version: String,
    pub timing: Timing,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Timing {
    pub started_unix: f64,
    pub wall_seconds: f64,
}

impl Timing {
    pub fn start() -> (Instant, f64) {
        let unix = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map_or(0.0, |d| d.as_secs_f64());
        (Instant::now(), unix)
    }

    pub fn finish(started: (Instant, f64)) -> Self {
        Self {
            started_unix: started.1,
            wall_seconds: started.0.elapsed().as_secs_f64(),
        }
    }
}

/// Hex SHA-256 of the compact JSON serialization of `config`.
pub fn config_hash<T: Serialize>(config: &T) -> Result<String> {
    let value = serde_json::to_value(config)?;
    let bytes = serde_json::to_vec(&value)?;
    Ok(Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect())
}

impl RunRecord {
    pub fn new<T: Serialize>(experiment: &str, config: &T, timing: Timing) -> Result<Self> {
        Ok(Self {
            experiment: experiment.to_string(),
            config_hash: config_hash(config)?,
            config: serde_json::to_value(config)?,
            outputs: BTreeMap::new(),
            artifacts: Vec::new(),
            toolkit_version: TOOLKIT_VERSION.to_string(),
            timing,
        })
    }

    pub fn output<V: Serialize>(mut self, key: &str, value: V) -> Result<Self> {
        self.outputs.insert(key.to_string(), serde_json::to_value(value)?);
        Ok(self)
    }

    /// `<root>/runs/<experiment>/<hash>`.
    pub fn directory(&self, root: &Path) -> PathBuf {
        root.join("runs").join(&self.experiment).join(&self.config_hash)
    }

    /// Appends the record as one line of `records.jsonl` in its directory.
    pub fn append(&self, root: &Path) -> Result<PathBuf> {
        let dir = self.directory(root);
        fs::create_dir_all(&dir)?;
        let path = dir.join("records.jsonl");
        let mut f = OpenOptions::new().create(true).append(true).open(&path)?;
        writeln!(f, "{}", serde_json::to_string(self)?)?;
        Ok(path)
    }
}

/// Reads every record from a `records.jsonl` file.
pub fn read_records(path: &Path) -> Result<Vec<RunRecord>> {
    fs::read_to_string(path)?
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| Ok(serde_json::from_str(l)?))
        .collect()
}
