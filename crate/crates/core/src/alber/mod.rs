//! Stability of a periodized homogeneous sea state.
//!
//! The kernel `h̃_L(ξ, ω)` comes from the NLS written as
//! `i u_t + (p/2)Δu + (q/2)|u|²u = 0`. The simulator uses
//! `i u_t + pΔu + q|u|²u = 0`; use [`KernelParams::from_convention`] to state
//! which form a pair `(p, q)` refers to.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::param;
use crate::spectrum::DiscreteSpectrum;
use crate::{Complex64, Result};

mod contour;
mod gridscan;
mod kernel;
mod oracle;
mod reconstruct;

pub use contour::{detect_instability_contour, image_curve, write_nyquist_csv, ContourSpec, CurveSample};
pub use gridscan::{detect_instability_gridscan, OmegaGrid};
pub use kernel::{h_infinity, h_infinity_with, h_tilde_l, riemann_convergence_study, ConvergenceRow};
pub use oracle::{eigenvalue_oracle, minimal_truncation};
pub use reconstruct::{reconstruct_r, RTrajectory};

/// Which NLS normalization a coefficient pair refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Convention {
    /// `i u_t + (p/2)Δu + (q/2)|u|²u = 0`, native to the kernel.
    #[default]
    Half,
    /// `i u_t + pΔu + q|u|²u = 0`, as used by the simulator.
    Full,
}

/// Coefficients and discrete spectrum entering `h̃_L`, in the half convention.
#[derive(Debug, Clone, Serialize)]
pub struct KernelParams {
    pub p: f64,
    pub q: f64,
    spectrum: DiscreteSpectrum,
    #[serde(skip)]
    pub(crate) support: Vec<i64>,
    #[serde(skip)]
    pub(crate) weights: Vec<f64>,
}

impl KernelParams {
    /// `p > 0` is required. `q = 0` is accepted as the linear limit, in which
    /// the kernel vanishes identically.
    pub fn new(p: f64, q: f64, spectrum: DiscreteSpectrum) -> Result<Self> {
        if !(p > 0.0 && p.is_finite()) {
            return param(format!("dispersion coefficient p must be positive, got {p}"));
        }
        if !(q >= 0.0 && q.is_finite()) {
            return param(format!("nonlinearity q must be nonnegative (focusing), got {q}"));
        }
        let support = spectrum.support();
        let weights = support.iter().map(|&n| spectrum.coefficient(n)).collect();
        Ok(Self {
            p,
            q,
            spectrum,
            support,
            weights,
        })
    }

    /// Converts `(p, q)` given in `convention` to the kernel's half convention.
    pub fn from_convention(p: f64, q: f64, convention: Convention, spectrum: DiscreteSpectrum) -> Result<Self> {
        match convention {
            Convention::Half => Self::new(p, q, spectrum),
            Convention::Full => Self::new(2.0 * p, 2.0 * q, spectrum),
        }
    }

    pub fn spectrum(&self) -> &DiscreteSpectrum {
        &self.spectrum
    }

    pub fn domain_length(&self) -> f64 {
        self.spectrum.domain_length()
    }

    /// `2π²p/L²`.
    pub fn dispersion_scale(&self) -> f64 {
        let l = self.domain_length();
        2.0 * PI * PI * self.p / (l * l)
    }

    /// Upper bound `2qΣP_n` on `Re ω·|h̃_L(ξ, ω)|`.
    pub fn kernel_bound(&self) -> f64 {
        2.0 * self.q * self.spectrum.total_variance()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ArgumentPrinciple,
    GridScan,
    EigenvalueOracle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Stable,
    Unstable,
    /// The image curve comes within `1e-6` of 1: a root may sit on the contour.
    Marginal,
    /// The computation could not be trusted (curve through 1, unresolved
    /// phase jumps, non-integer winding).
    Indeterminate,
    /// Grid-scan results are candidates only.
    Advisory,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub xi: i64,
    /// `ξ/L`.
    pub x: f64,
    pub omega: Complex64,
    pub residual: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StabilityVerdict {
    pub method: Method,
    pub status: Status,
    pub unstable: bool,
    pub witnesses: Vec<Witness>,
    /// Only filled by the argument-principle method.
    pub winding_numbers: BTreeMap<i64, i64>,
    /// Largest `Re ω` among witnesses or eigenvalues, 0 if none.
    pub max_growth_rate: f64,
    pub parameters: VerdictParameters,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerdictParameters {
    pub p: f64,
    pub q: f64,
    pub domain_length: f64,
    pub spacing_multiplier: u32,
    pub mode_count: usize,
    pub total_variance: f64,
    pub xi_min: i64,
    pub xi_max: i64,
    #[serde(flatten)]
    pub tolerances: BTreeMap<String, f64>,
}

impl VerdictParameters {
    pub(crate) fn new(kp: &KernelParams, xi_min: i64, xi_max: i64) -> Self {
        let d = kp.spectrum();
        Self {
            p: kp.p,
            q: kp.q,
            domain_length: d.domain_length(),
            spacing_multiplier: d.spacing_multiplier(),
            mode_count: d.mode_count(),
            total_variance: d.total_variance(),
            xi_min,
            xi_max,
            tolerances: BTreeMap::new(),
        }
    }

    pub(crate) fn with(mut self, key: &str, value: f64) -> Self {
        self.tolerances.insert(key.to_string(), value);
        self
    }
}

impl StabilityVerdict {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Range of ξ that can couple to the spectrum: `|ξ| ≤ 2·max_index`.
pub fn default_xi_range(kp: &KernelParams) -> (i64, i64) {
    let n = kp.spectrum().max_index().max(1);
    (-2 * n, 2 * n)
}
