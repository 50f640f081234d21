//! Random-phase realizations of a sea state on the torus, and Monte Carlo
//! estimators of their second-order statistics.

use std::f64::consts::PI;
use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::param;
use crate::spectrum::{mode_count_for, PowerSpectrum};
use crate::{Complex64, Error, Result};

/// Name of the phase generator, recorded in run manifests.
pub const GENERATOR_NAME: &str = "ChaCha20Rng (rand_chacha 0.9), seed_from_u64";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mode {
    pub amplitude: f64,
    /// Cycles per unit length.
    pub wavenumber: f64,
    /// In `[0, 1)`; the mode is `A·e^{2πi(kx + φ)}`.
    pub phase: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Realization {
    modes: Vec<Mode>,
    domain_length: f64,
    spacing_multiplier: u32,
    seed: u64,
}

impl Realization {
    /// Assembles a realization from explicit modes, checking that wavenumbers
    /// are `j·m/L` for `j = 1, 2, …` in order.
    pub fn from_modes(domain_length: f64, spacing_multiplier: u32, seed: u64, modes: Vec<Mode>) -> Result<Self> {
        if !(domain_length > 0.0 && domain_length.is_finite()) {
            return param("domain length must be positive");
        }
        if spacing_multiplier == 0 {
            return param("spacing multiplier must be positive");
        }
        let dk = f64::from(spacing_multiplier) / domain_length;
        for (j, mode) in modes.iter().enumerate() {
            let want = (j + 1) as f64 * dk;
            if (mode.wavenumber - want).abs() > 1e-9 * want.max(1.0) {
                return param(format!(
                    "mode {} has wavenumber {}, expected {want}",
                    j + 1,
                    mode.wavenumber
                ));
            }
            if !(mode.amplitude >= 0.0 && mode.amplitude.is_finite()) {
                return param(format!("mode {} has invalid amplitude {}", j + 1, mode.amplitude));
            }
            if !(0.0..1.0).contains(&mode.phase) {
                return param(format!("mode {} phase {} outside [0, 1)", j + 1, mode.phase));
            }
        }
        Ok(Self {
            modes,
            domain_length,
            spacing_multiplier,
            seed,
        })
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn domain_length(&self) -> f64 {
        self.domain_length
    }

    pub fn spacing_multiplier(&self) -> u32 {
        self.spacing_multiplier
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn mode_count(&self) -> usize {
        self.modes.len()
    }

    /// Highest Fourier bin occupied on the torus, `m·M`.
    pub fn max_bin(&self) -> usize {
        self.modes.len() * self.spacing_multiplier as usize
    }

    /// `Σ_j A_j²`.
    pub fn power(&self) -> f64 {
        self.modes.iter().map(|m| m.amplitude * m.amplitude).sum()
    }

    /// Smallest grid that resolves every mode without aliasing.
    pub fn min_grid_points(&self) -> usize {
        (2 * self.max_bin()).max(2)
    }
}

/// One realization `u₀(x) = Σ_j A_j e^{2πi(k_j x + φ_j)}` with
/// `A_j = √(δk·S(k_j))`, `k_j = j·δk`, `δk = m/L` and i.i.d. uniform phases.
pub fn generate(s: &PowerSpectrum, domain_length: f64, spacing_multiplier: u32, seed: u64) -> Result<Realization> {
    if !(domain_length > 0.0 && domain_length.is_finite()) {
        return param(format!("domain length must be positive, got {domain_length}"));
    }
    if spacing_multiplier == 0 {
        return param("spacing multiplier must be positive");
    }
    let mode_count = mode_count_for(s.support_max(), domain_length, spacing_multiplier);
    if mode_count < 1 {
        return param(format!(
            "domain length {domain_length} too short: no wavenumber j·{spacing_multiplier}/L fits below k_max = {}",
            s.support_max()
        ));
    }
    let dk = f64::from(spacing_multiplier) / domain_length;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let modes = (1..=mode_count)
        .map(|j| {
            let k = j as f64 * dk;
            Mode {
                amplitude: (dk * s.eval(k)).sqrt(),
                wavenumber: k,
                phase: rng.random::<f64>(),
            }
        })
        .collect();
    Ok(Realization {
        modes,
        domain_length,
        spacing_multiplier,
        seed,
    })
}

/// Direct summation of the realization at `x`.
pub fn evaluate(r: &Realization, x: f64) -> Complex64 {
    r.modes
        .iter()
        .map(|m| {
            // Reduce the phase argument modulo 1 before scaling by 2π to keep
            // periodicity exact for large x.
            let arg = (m.wavenumber * x + m.phase).rem_euclid(1.0);
            Complex64::from_polar(m.amplitude, 2.0 * PI * arg)
        })
        .sum()
}

/// Grid abscissae `x_i = −L/2 + i·L/N`.
pub fn grid(domain_length: f64, points: usize) -> Vec<f64> {
    let dx = domain_length / points as f64;
    (0..points).map(|i| -0.5 * domain_length + i as f64 * dx).collect()
}

/// Samples the realization on the periodic grid `x_i = −L/2 + i·L/N`.
pub fn sample_on_grid(r: &Realization, points: usize) -> Result<Vec<Complex64>> {
    sample_shifted(r, points, 0.0)
}

/// Samples `x ↦ u(x − shift)` on the standard grid.
pub fn sample_shifted(r: &Realization, points: usize, shift: f64) -> Result<Vec<Complex64>> {
    if points < r.min_grid_points() {
        return Err(Error::Aliasing(format!(
            "{points} grid points cannot resolve bin {}; need at least {}",
            r.max_bin(),
            r.min_grid_points()
        )));
    }
    let mut buf = vec![Complex64::new(0.0, 0.0); points];
    let m = r.spacing_multiplier as usize;
    for (j, mode) in r.modes.iter().enumerate() {
        let bin = (j + 1) * m;
        // e^{2πi n x_i/L} = e^{−iπn} e^{2πi n i/N}
        let sign = if bin.is_multiple_of(2) { 0.0 } else { 0.5 };
        let arg = (mode.phase + sign - mode.wavenumber * shift).rem_euclid(1.0);
        buf[bin] = Complex64::from_polar(mode.amplitude, 2.0 * PI * arg);
    }
    let fft = FftPlanner::new().plan_fft_inverse(points);
    fft.process(&mut buf);
    Ok(buf)
}

/// A collection of realizations sharing spectrum and discretization.
#[derive(Debug, Clone)]
pub struct Ensemble {
    realizations: Vec<Realization>,
    base_seed: u64,
}

impl Ensemble {
    pub fn realizations(&self) -> &[Realization] {
        &self.realizations
    }

    pub fn base_seed(&self) -> u64 {
        self.base_seed
    }

    pub fn len(&self) -> usize {
        self.realizations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.realizations.is_empty()
    }
}

/// SplitMix64 output function; a bijection on `u64`.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of realization `index`; distinct indices give distinct seeds.
pub fn derived_seed(base_seed: u64, index: u64) -> u64 {
    splitmix64(base_seed.wrapping_add(index.wrapping_mul(0x9E37_79B9_7F4A_7C15)))
}

pub fn generate_ensemble(
    s: &PowerSpectrum,
    domain_length: f64,
    spacing_multiplier: u32,
    base_seed: u64,
    count: usize,
) -> Result<Ensemble> {
    let realizations = (0..count as u64)
        .into_par_iter()
        .map(|i| generate(s, domain_length, spacing_multiplier, derived_seed(base_seed, i)))
        .collect::<Result<Vec<_>>>()?;
    Ok(Ensemble {
        realizations,
        base_seed,
    })
}

/// A Monte Carlo mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: Complex64,
    pub std_error: f64,
    pub samples: usize,
}

impl Estimate {
    /// Mean and standard error of independent samples, summed in order.
    pub fn from_samples(samples: &[Complex64]) -> Result<Self> {
        let n = samples.len();
        if n == 0 {
            return param("cannot estimate from an empty sample");
        }
        let mean = samples.iter().sum::<Complex64>() / n as f64;
        let std_error = if n > 1 {
            let var = samples.iter().map(|s| (s - mean).norm_sqr()).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        } else {
            0.0
        };
        Ok(Self {
            value: mean,
            std_error,
            samples: n,
        })
    }

    /// Whether `target` lies within `k` standard errors, allowing `floor`
    /// for estimators whose Monte Carlo variance vanishes.
    pub fn agrees_with(&self, target: Complex64, k: f64, floor: f64) -> bool {
        (self.value - target).norm() <= k * self.std_error + floor
    }
}

fn require_nonempty(e: &Ensemble) -> Result<()> {
    if e.is_empty() {
        return param("ensemble is empty");
    }
    Ok(())
}

/// `E[u(x) ū(x − lag)]`, averaged over realizations and over every base
/// point of the smallest power-of-two grid that resolves the modes.
///
/// On the torus the grid average is exactly `Σ_j A_j² e^{2πi k_j lag}` for
/// each realization, so the Monte Carlo spread of this estimator is at
/// round-off level.
pub fn ensemble_autocorrelation(e: &Ensemble, lag: f64) -> Result<Estimate> {
    require_nonempty(e)?;
    let points = e.realizations[0].min_grid_points().next_power_of_two();
    let per: Vec<Complex64> = e
        .realizations
        .par_iter()
        .map(|r| {
            let u = sample_on_grid(r, points)?;
            let v = sample_shifted(r, points, lag)?;
            let acc: Complex64 = u.iter().zip(&v).map(|(a, b)| a * b.conj()).sum();
            Ok(acc / points as f64)
        })
        .collect::<Result<_>>()?;
    Estimate::from_samples(&per)
}

/// `E[u(x) ū(x − lag)]` at a single base point `x`.
pub fn ensemble_autocorrelation_at(e: &Ensemble, lag: f64, base: f64) -> Result<Estimate> {
    require_nonempty(e)?;
    let per: Vec<Complex64> = e
        .realizations
        .par_iter()
        .map(|r| evaluate(r, base) * evaluate(r, base - lag).conj())
        .collect();
    Estimate::from_samples(&per)
}

/// Paired difference of the single-point estimator at two base points.
pub fn homogeneity_difference(e: &Ensemble, lag: f64, x1: f64, x2: f64) -> Result<Estimate> {
    require_nonempty(e)?;
    let per: Vec<Complex64> = e
        .realizations
        .par_iter()
        .map(|r| {
            evaluate(r, x1) * evaluate(r, x1 - lag).conj() - evaluate(r, x2) * evaluate(r, x2 - lag).conj()
        })
        .collect();
    Estimate::from_samples(&per)
}

/// `E[u(x)]` at one point.
pub fn ensemble_mean_at(e: &Ensemble, x: f64) -> Result<Estimate> {
    require_nonempty(e)?;
    let per: Vec<Complex64> = e.realizations.par_iter().map(|r| evaluate(r, x)).collect();
    Estimate::from_samples(&per)
}

/// Writes `j,amplitude,wavenumber,phase` rows.
pub fn write_modes_csv<W: Write>(r: &Realization, w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["j", "amplitude", "wavenumber", "phase"])?;
    for (j, m) in r.modes.iter().enumerate() {
        wtr.write_record(&[
            (j + 1).to_string(),
            format!("{:e}", m.amplitude),
            format!("{:e}", m.wavenumber),
            format!("{:e}", m.phase),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

/// Reads the format produced by [`write_modes_csv`].
pub fn parse_modes_csv<R: Read>(reader: R) -> Result<Vec<Mode>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut modes = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        if rec.len() != 4 {
            return Err(Error::Parse(format!("row {}: expected 4 columns", i + 1)));
        }
        let j: usize = rec[0]
            .parse()
            .map_err(|e| Error::Parse(format!("row {}: bad index: {e}", i + 1)))?;
        if j != i + 1 {
            return Err(Error::Parse(format!("row {}: index {j} out of sequence", i + 1)));
        }
        let f = |c: usize| -> Result<f64> {
            let v: f64 = rec[c]
                .parse()
                .map_err(|e| Error::Parse(format!("row {}, column {}: {e}", i + 1, c + 1)))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(Error::Parse(format!("row {}, column {}: not finite", i + 1, c + 1)))
            }
        };
        modes.push(Mode {
            amplitude: f(1)?,
            wavenumber: f(2)?,
            phase: f(3)?,
        });
    }
    Ok(modes)
}
