//! Continuous power spectra and their discretization on a periodic domain.
//!
//! A [`PowerSpectrum`] is a nonnegative density `S(k)` supported on
//! `[0, k_max]`, with `k` in cycles per unit length. [`discretize`] maps it to
//! the Fourier coefficients `P_n` of the homogeneous autocorrelation of the
//! random-phase field on a torus of length `L`.

use std::f64::consts::PI;
use std::fmt;
use std::io::Read;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::param;
use crate::{Complex64, Error, Result};

/// Relative level below which a parametric spectrum is cut off.
pub const DEFAULT_CUTOFF_RATIO: f64 = 1e-12;

/// Gaussian spectra are truncated this many widths above the center.
pub const GAUSSIAN_TRUNCATION_WIDTHS: f64 = 8.0;

#[derive(Clone)]
enum Shape {
    Zero,
    Gaussian {
        variance: f64,
        center: f64,
        width: f64,
    },
    Jonswap {
        alpha: f64,
        gamma: f64,
        peak: f64,
    },
    Tabulated {
        k: Vec<f64>,
        s: Vec<f64>,
    },
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

/// A nonnegative spectral density with compact support `[0, support_max]`.
#[derive(Clone)]
pub struct PowerSpectrum {
    shape: Shape,
    support_max: f64,
    label: String,
}

impl fmt::Debug for PowerSpectrum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PowerSpectrum")
            .field("label", &self.label)
            .field("support_max", &self.support_max)
            .finish()
    }
}

impl PowerSpectrum {
    /// The identically zero spectrum.
    pub fn zero(support_max: f64) -> Self {
        Self {
            shape: Shape::Zero,
            support_max: support_max.max(0.0),
            label: "zero".into(),
        }
    }

    /// Wraps an arbitrary density. Values outside `[0, support_max]` and
    /// negative or non-finite values are clamped to zero.
    pub fn from_fn<F>(label: impl Into<String>, support_max: f64, f: F) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        if !(support_max >= 0.0 && support_max.is_finite()) {
            return param("support_max must be finite and nonnegative");
        }
        Ok(Self {
            shape: Shape::Custom(Arc::new(f)),
            support_max,
            label: label.into(),
        })
    }

    /// Piecewise-linear interpolation of `(k, S)` samples, zero outside the
    /// table range.
    pub fn tabulated(k: Vec<f64>, s: Vec<f64>) -> Result<Self> {
        if k.len() != s.len() {
            return param("wavenumber and density columns differ in length");
        }
        if k.len() < 2 {
            return param("a tabulated spectrum needs at least two samples");
        }
        if k.iter().chain(s.iter()).any(|v| !v.is_finite()) {
            return param("tabulated spectrum contains non-finite values");
        }
        if k[0] < 0.0 {
            return param("tabulated wavenumbers must be nonnegative");
        }
        if k.windows(2).any(|w| w[1] <= w[0]) {
            return param("tabulated wavenumbers must be strictly increasing");
        }
        if s.iter().any(|&v| v < 0.0) {
            return param("tabulated densities must be nonnegative");
        }
        let support_max = *k.last().unwrap();
        Ok(Self {
            shape: Shape::Tabulated { k, s },
            support_max,
            label: "tabulated".into(),
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn support_max(&self) -> f64 {
        self.support_max
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.shape, Shape::Zero)
    }

    /// Evaluates `S(k)`. Always zero outside `[0, support_max]`.
    pub fn eval(&self, k: f64) -> f64 {
        if !(k >= 0.0 && k <= self.support_max) {
            return 0.0;
        }
        let v = match &self.shape {
            Shape::Zero => 0.0,
            Shape::Gaussian {
                variance,
                center,
                width,
            } => {
                let z = (k - center) / width;
                variance / (width * PI.sqrt()) * (-z * z).exp()
            }
            Shape::Jonswap { alpha, gamma, peak } => jonswap_density(k, *alpha, *gamma, *peak),
            Shape::Tabulated { k: ks, s } => interpolate(ks, s, k),
            Shape::Custom(f) => f(k),
        };
        if v.is_finite() && v > 0.0 {
            v
        } else {
            0.0
        }
    }

    /// Breakpoints useful to a quadrature routine: support ends, peak, table
    /// knots.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut b = vec![0.0, self.support_max];
        match &self.shape {
            Shape::Gaussian { center, width, .. } => {
                for j in -4..=4 {
                    b.push(center + f64::from(j) * width);
                }
            }
            Shape::Jonswap { peak, .. } => b.push(*peak),
            Shape::Tabulated { k, .. } => b.extend_from_slice(k),
            _ => {}
        }
        b.retain(|&x| x >= 0.0 && x <= self.support_max);
        b.sort_by(f64::total_cmp);
        b.dedup();
        b
    }
}

fn interpolate(ks: &[f64], s: &[f64], k: f64) -> f64 {
    if k < ks[0] || k > ks[ks.len() - 1] {
        return 0.0;
    }
    let i = ks.partition_point(|&x| x <= k);
    if i == 0 {
        return s[0];
    }
    if i >= ks.len() {
        return s[ks.len() - 1];
    }
    let (k0, k1) = (ks[i - 1], ks[i]);
    let t = (k - k0) / (k1 - k0);
    s[i - 1] + t * (s[i] - s[i - 1])
}

/// Gaussian density `variance/(width√π)·exp(−((k−center)/width)²)` truncated to
/// `[0, center + 8·width]`.
pub fn gaussian_spectrum(variance: f64, center: f64, width: f64) -> Result<PowerSpectrum> {
    if !(width > 0.0 && width.is_finite()) {
        return param(format!("gaussian width must be positive, got {width}"));
    }
    if !(variance >= 0.0 && variance.is_finite()) {
        return param(format!("gaussian variance must be nonnegative, got {variance}"));
    }
    if !(center > 0.0 && center.is_finite()) {
        return param(format!("gaussian center must be positive, got {center}"));
    }
    Ok(PowerSpectrum {
        shape: Shape::Gaussian {
            variance,
            center,
            width,
        },
        support_max: center + GAUSSIAN_TRUNCATION_WIDTHS * width,
        label: format!("gaussian(variance={variance}, center={center}, width={width})"),
    })
}

// JONSWAP in radian wavenumber κ under deep-water dispersion ω² = gκ:
//   S(κ) = α/(2κ³) · exp(−5/4 (κp/κ)²) · γ^r,  r = exp(−(√κ − √κp)² / (2σ²κp)),
// σ = 0.07 below the peak and 0.09 above. Converted to cycles: S(k) = 2π S(2πk).
fn jonswap_density(k: f64, alpha: f64, gamma: f64, peak: f64) -> f64 {
    if k <= 0.0 {
        return 0.0;
    }
    let kappa = 2.0 * PI * k;
    let kappa_p = 2.0 * PI * peak;
    let sigma = if kappa <= kappa_p { 0.07 } else { 0.09 };
    let d = kappa.sqrt() - kappa_p.sqrt();
    let r = (-d * d / (2.0 * sigma * sigma * kappa_p)).exp();
    let q = kappa_p / kappa;
    2.0 * PI * alpha / (2.0 * kappa.powi(3)) * (-1.25 * q * q).exp() * gamma.powf(r)
}

/// JONSWAP spectrum in wavenumber space with the default relative cutoff.
pub fn jonswap_spectrum(alpha: f64, gamma: f64, peak_wavenumber: f64) -> Result<PowerSpectrum> {
    jonswap_spectrum_with_cutoff(alpha, gamma, peak_wavenumber, DEFAULT_CUTOFF_RATIO)
}

/// JONSWAP spectrum truncated where the density falls below
/// `cutoff_ratio` times its peak value.
pub fn jonswap_spectrum_with_cutoff(
    alpha: f64,
    gamma: f64,
    peak_wavenumber: f64,
    cutoff_ratio: f64,
) -> Result<PowerSpectrum> {
    if !(gamma >= 1.0 && gamma.is_finite()) {
        return param(format!("JONSWAP gamma must be >= 1, got {gamma}"));
    }
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return param(format!("JONSWAP alpha must be nonnegative, got {alpha}"));
    }
    if !(peak_wavenumber > 0.0 && peak_wavenumber.is_finite()) {
        return param("JONSWAP peak wavenumber must be positive");
    }
    if !(cutoff_ratio > 0.0 && cutoff_ratio < 1.0) {
        return param("cutoff ratio must lie in (0, 1)");
    }
    let label = format!("jonswap(alpha={alpha}, gamma={gamma}, peak={peak_wavenumber})");
    if alpha == 0.0 {
        return Ok(PowerSpectrum::zero(peak_wavenumber).with_label(label));
    }
    // Unit-alpha shape; the cut does not depend on alpha.
    let shape = |k: f64| jonswap_density(k, 1.0, gamma, peak_wavenumber);
    let (k_peak, s_peak) = maximize(&shape, 0.2 * peak_wavenumber, 3.0 * peak_wavenumber);
    let level = cutoff_ratio * s_peak;
    let mut hi = 2.0 * k_peak;
    while shape(hi) > level {
        hi *= 2.0;
    }
    let mut lo = k_peak;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if shape(mid) > level {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-12 * hi {
            break;
        }
    }
    Ok(PowerSpectrum {
        shape: Shape::Jonswap {
            alpha,
            gamma,
            peak: peak_wavenumber,
        },
        support_max: hi,
        label,
    })
}

fn maximize<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    // Coarse scan then golden-section polish.
    let n = 2000;
    let h = (b - a) / n as f64;
    let (mut best, mut best_v) = (a, f(a));
    for i in 1..=n {
        let x = a + h * i as f64;
        let v = f(x);
        if v > best_v {
            best = x;
            best_v = v;
        }
    }
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = ((best - h).max(a), (best + h).min(b));
    for _ in 0..100 {
        let x1 = hi - g * (hi - lo);
        let x2 = lo + g * (hi - lo);
        if f(x1) < f(x2) {
            lo = x1;
        } else {
            hi = x2;
        }
    }
    let x = 0.5 * (lo + hi);
    let v = f(x);
    if v >= best_v {
        (x, v)
    } else {
        (best, best_v)
    }
}

/// Parses a two-column CSV `(k, S)` with a header row.
pub fn parse_spectrum_csv<R: Read>(reader: R) -> Result<PowerSpectrum> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(reader);
    let mut ks = Vec::new();
    let mut ss = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        if rec.len() != 2 {
            return Err(Error::Parse(format!(
                "row {}: expected 2 columns, found {}",
                i + 1,
                rec.len()
            )));
        }
        let parse = |j: usize| -> Result<f64> {
            rec[j]
                .parse::<f64>()
                .map_err(|e| Error::Parse(format!("row {}, column {}: {e}", i + 1, j + 1)))
        };
        ks.push(parse(0)?);
        ss.push(parse(1)?);
    }
    PowerSpectrum::tabulated(ks, ss)
}

pub fn load_spectrum_csv(path: &Path) -> Result<PowerSpectrum> {
    let file = std::fs::File::open(path)?;
    Ok(parse_spectrum_csv(file)?.with_label(format!("tabulated({})", path.display())))
}

/// Serializable description of a spectrum, as found in run configurations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SpectrumSpec {
    Zero {
        #[serde(default = "one")]
        support_max: f64,
    },
    Gaussian {
        variance: f64,
        center: f64,
        width: f64,
    },
    Jonswap {
        alpha: f64,
        gamma: f64,
        peak_wavenumber: f64,
        #[serde(default = "default_cutoff")]
        cutoff_ratio: f64,
    },
    /// Two-column CSV file.
    Csv { path: String },
    /// Inline table.
    Table { k: Vec<f64>, s: Vec<f64> },
}

fn one() -> f64 {
    1.0
}

fn default_cutoff() -> f64 {
    DEFAULT_CUTOFF_RATIO
}

impl SpectrumSpec {
    pub fn build(&self) -> Result<PowerSpectrum> {
        match self {
            SpectrumSpec::Zero { support_max } => Ok(PowerSpectrum::zero(*support_max)),
            SpectrumSpec::Gaussian {
                variance,
                center,
                width,
            } => gaussian_spectrum(*variance, *center, *width),
            SpectrumSpec::Jonswap {
                alpha,
                gamma,
                peak_wavenumber,
                cutoff_ratio,
            } => jonswap_spectrum_with_cutoff(*alpha, *gamma, *peak_wavenumber, *cutoff_ratio),
            SpectrumSpec::Csv { path } => load_spectrum_csv(Path::new(path)),
            SpectrumSpec::Table { k, s } => PowerSpectrum::tabulated(k.clone(), s.clone()),
        }
    }
}

/// Fourier coefficients `P_n` of the autocorrelation of a random-phase field on
/// a torus of length `L`, with wavenumber spacing `m/L` and `M` modes.
///
/// Only `n = m, 2m, …, mM` can be nonzero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteSpectrum {
    /// `coefficients[n - 1] = P_n` for `n = 1..=m·M`.
    coefficients: Vec<f64>,
    domain_length: f64,
    spacing_multiplier: u32,
    mode_count: usize,
}

impl DiscreteSpectrum {
    /// Builds a spectrum from explicit coefficients `P_1..P_{len}`.
    pub fn from_coefficients(domain_length: f64, spacing_multiplier: u32, coefficients: Vec<f64>) -> Result<Self> {
        if !(domain_length > 0.0 && domain_length.is_finite()) {
            return param("domain length must be positive");
        }
        if spacing_multiplier == 0 {
            return param("spacing multiplier must be a positive integer");
        }
        let m = spacing_multiplier as usize;
        if !coefficients.len().is_multiple_of(m) {
            return param("coefficient count must be a multiple of the spacing multiplier");
        }
        for (i, &p) in coefficients.iter().enumerate() {
            if !(p >= 0.0 && p.is_finite()) {
                return param(format!("P_{} = {p} is not a finite nonnegative value", i + 1));
            }
            if (i + 1) % m != 0 && p != 0.0 {
                return param(format!("P_{} must vanish for n mod m != 0", i + 1));
            }
        }
        let mode_count = coefficients.len() / m;
        Ok(Self {
            coefficients,
            domain_length,
            spacing_multiplier,
            mode_count,
        })
    }

    /// `P_n` for any integer `n`.
    #[inline]
    pub fn coefficient(&self, n: i64) -> f64 {
        if n < 1 {
            return 0.0;
        }
        self.coefficients.get(n as usize - 1).copied().unwrap_or(0.0)
    }

    /// `P_1..P_{mM}`.
    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn domain_length(&self) -> f64 {
        self.domain_length
    }

    pub fn spacing_multiplier(&self) -> u32 {
        self.spacing_multiplier
    }

    pub fn mode_count(&self) -> usize {
        self.mode_count
    }

    /// Largest index that may carry a nonzero coefficient, `m·M`.
    pub fn max_index(&self) -> i64 {
        self.coefficients.len() as i64
    }

    pub fn spacing(&self) -> f64 {
        f64::from(self.spacing_multiplier) / self.domain_length
    }

    /// `Σ_n P_n`, the field variance.
    pub fn total_variance(&self) -> f64 {
        self.coefficients.iter().sum()
    }

    /// Indices with nonzero coefficients, ascending.
    pub fn support(&self) -> Vec<i64> {
        self.coefficients
            .iter()
            .enumerate()
            .filter(|(_, &p)| p != 0.0)
            .map(|(i, _)| i as i64 + 1)
            .collect()
    }

    /// `(min, max)` of the nonzero indices, or `None` for the zero spectrum.
    pub fn support_range(&self) -> Option<(i64, i64)> {
        let first = self.coefficients.iter().position(|&p| p != 0.0)?;
        let last = self.coefficients.iter().rposition(|&p| p != 0.0)?;
        Some((first as i64 + 1, last as i64 + 1))
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::from_coefficients(
            self.domain_length,
            self.spacing_multiplier,
            self.coefficients.iter().map(|p| p * factor).collect(),
        )
    }
}

/// Samples `S` on the torus: `P_n = (m/L)·S(n/L)` for `n = m·j`, `j = 1..M`,
/// with `M = ⌊k_max·L/m⌋`.
pub fn discretize(s: &PowerSpectrum, domain_length: f64, spacing_multiplier: u32) -> Result<DiscreteSpectrum> {
    if !(domain_length > 0.0 && domain_length.is_finite()) {
        return param(format!("domain length must be positive, got {domain_length}"));
    }
    if spacing_multiplier == 0 {
        return param("spacing multiplier must be a positive integer");
    }
    let m = spacing_multiplier as usize;
    let mode_count = mode_count_for(s.support_max(), domain_length, spacing_multiplier);
    let dk = f64::from(spacing_multiplier) / domain_length;
    let mut coefficients = vec![0.0; m * mode_count];
    for j in 1..=mode_count {
        let n = m * j;
        coefficients[n - 1] = dk * s.eval(n as f64 / domain_length);
    }
    DiscreteSpectrum::from_coefficients(domain_length, spacing_multiplier, coefficients)
}

/// `⌊k_max·L/m⌋`, tolerant of round-off when the product is an integer.
pub fn mode_count_for(support_max: f64, domain_length: f64, spacing_multiplier: u32) -> usize {
    let exact = support_max * domain_length / f64::from(spacing_multiplier);
    (exact * (1.0 + 1e-12) + 1e-9).floor().max(0.0) as usize
}

/// `Γ(x) = Σ_n P_n e^{2πi x n / L}`.
pub fn autocorrelation(d: &DiscreteSpectrum, x: f64) -> Complex64 {
    let l = d.domain_length();
    d.coefficients
        .iter()
        .enumerate()
        .filter(|(_, &p)| p != 0.0)
        .map(|(i, &p)| {
            let n = (i + 1) as f64;
            Complex64::from_polar(p, 2.0 * PI * x * n / l)
        })
        .sum()
}
