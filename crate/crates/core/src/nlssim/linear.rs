//! Linear stability of the plane wave `A e^{iqA²t}` on a periodic domain.
//!
//! Perturbations `∝ e^{2πinx/L}` satisfy
//! `(2πω_n)² = β_n²[p²β_n² − 2pqA²]`, `β_n = 2πn/L`; a negative right-hand
//! side means exponential growth at rate `β_n·√(2pqA² − p²β_n²)`.

use std::f64::consts::{PI, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::error::param;
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeRow {
    pub n: i64,
    pub omega_n_squared: f64,
    /// `Im(2πω_n)`, zero for stable modes.
    pub growth_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearMIReport {
    pub critical_length: f64,
    pub mode_table: Vec<ModeRow>,
    pub unstable_modes: Vec<i64>,
}

impl LinearMIReport {
    pub fn growth_rate(&self, n: i64) -> Option<f64> {
        self.mode_table.iter().find(|r| r.n == n).map(|r| r.growth_rate)
    }

    pub fn max_growth_rate(&self) -> f64 {
        self.mode_table.iter().map(|r| r.growth_rate).fold(0.0, f64::max)
    }
}

/// Modes `n = −n_max..=n_max` of the plane wave with amplitude `A` on a domain
/// of length `L`.
pub fn linear_mi_analysis(p: f64, q: f64, amplitude: f64, domain_length: f64, n_max: i64) -> Result<LinearMIReport> {
    if !(amplitude > 0.0 && amplitude.is_finite()) {
        return param(format!("plane-wave amplitude must be positive, got {amplitude}"));
    }
    if !(p > 0.0 && q > 0.0) {
        return param("linear MI analysis needs p > 0 and q > 0");
    }
    if !(domain_length > 0.0 && domain_length.is_finite()) {
        return param("domain length must be positive");
    }
    if n_max < 1 {
        return param("n_max must be at least 1");
    }
    let a2 = amplitude * amplitude;
    let mode_table: Vec<ModeRow> = (-n_max..=n_max)
        .map(|n| {
            let beta = 2.0 * PI * n as f64 / domain_length;
            let rhs = beta * beta * (p * p * beta * beta - 2.0 * p * q * a2);
            ModeRow {
                n,
                omega_n_squared: rhs / (4.0 * PI * PI),
                growth_rate: if rhs < 0.0 { (-rhs).sqrt() } else { 0.0 },
            }
        })
        .collect();
    let unstable_modes = mode_table
        .iter()
        .filter(|r| r.n != 0 && r.omega_n_squared < 0.0)
        .map(|r| r.n)
        .collect();
    Ok(LinearMIReport {
        critical_length: 2.0 * PI * p.sqrt() / (amplitude * (2.0 * q).sqrt()),
        mode_table,
        unstable_modes,
    })
}

/// Bifurcation length for deep-water waves of wavelength `λ₀` and amplitude
/// `A`, using `p = √g/(8k₀^{3/2})`, `q = √g·k₀^{5/2}/2`, `k₀ = 2π/λ₀`.
pub fn water_wave_lc(wavelength: f64, amplitude: f64, gravity: f64) -> Result<f64> {
    if !(wavelength > 0.0 && amplitude > 0.0 && gravity > 0.0) {
        return param("wavelength, amplitude and gravity must be positive");
    }
    let k0 = 2.0 * PI / wavelength;
    let p = gravity.sqrt() / (8.0 * k0.powf(1.5));
    let q = gravity.sqrt() * k0.powf(2.5) / 2.0;
    Ok(2.0 * PI * p.sqrt() / (amplitude * (2.0 * q).sqrt()))
}

/// Closed form `λ₀²/(4π√2·A)` of [`water_wave_lc`].
pub fn water_wave_lc_closed_form(wavelength: f64, amplitude: f64) -> f64 {
    wavelength * wavelength / (4.0 * PI * SQRT_2 * amplitude)
}
