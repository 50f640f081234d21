//! Periodic cubic NLS `i u_t + p u_xx + q|u|²u = 0` on `[−L/2, L/2)`, solved
//! with a relaxation Crank–Nicolson scheme, plus linear modulation-instability
//! analysis of the plane wave.

use serde::{Deserialize, Serialize};

use crate::error::param;
use crate::linalg::{solve_cyclic, CyclicWorkspace};
use crate::{Complex64, Error, Result};

mod linear;

pub use linear::{linear_mi_analysis, water_wave_lc, water_wave_lc_closed_form, LinearMIReport, ModeRow};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub p: f64,
    pub q: f64,
    pub domain_length: f64,
    pub dt: f64,
    pub t_final: f64,
    pub initial: Vec<Complex64>,
}

impl SimConfig {
    pub fn new(p: f64, q: f64, domain_length: f64, dt: f64, t_final: f64, initial: Vec<Complex64>) -> Result<Self> {
        let cfg = Self {
            p,
            q,
            domain_length,
            dt,
            t_final,
            initial,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p.is_finite() && self.q.is_finite()) {
            return param("coefficients must be finite");
        }
        if !(self.domain_length > 0.0 && self.domain_length.is_finite()) {
            return param("domain length must be positive");
        }
        if self.initial.len() < 16 {
            return param(format!("need at least 16 grid points, got {}", self.initial.len()));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return param("time step must be positive");
        }
        if !(self.t_final >= self.dt && self.t_final.is_finite()) {
            return param("final time must be at least one time step");
        }
        if self.initial.iter().any(|z| !z.is_finite()) {
            return param("initial field contains non-finite values");
        }
        Ok(())
    }

    pub fn nx(&self) -> usize {
        self.initial.len()
    }

    pub fn dx(&self) -> f64 {
        self.domain_length / self.nx() as f64
    }

    /// Number of steps; `T/dt` is rounded when it is within 1e-9 of an
    /// integer and rounded up otherwise.
    pub fn steps(&self) -> usize {
        let r = self.t_final / self.dt;
        if (r - r.round()).abs() <= 1e-9 * r.max(1.0) {
            r.round() as usize
        } else {
            r.ceil() as usize
        }
    }
}

/// `L/dx` rounded to the nearest even integer.
pub fn grid_points_for(domain_length: f64, dx: f64) -> Result<usize> {
    if !(domain_length > 0.0 && dx > 0.0) {
        return param("domain length and dx must be positive");
    }
    let n = 2 * ((domain_length / dx / 2.0).round() as usize);
    if n < 16 {
        return param(format!("L/dx gives only {n} grid points"));
    }
    Ok(n)
}

/// Grid `x_i = −L/2 + i·L/N`.
pub fn grid(domain_length: f64, nx: usize) -> Vec<f64> {
    let dx = domain_length / nx as f64;
    (0..nx).map(|i| -0.5 * domain_length + i as f64 * dx).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InvariantRow {
    pub time: f64,
    pub mass: f64,
    pub energy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveField {
    pub domain_length: f64,
    pub dx: f64,
    pub dt: f64,
    pub times: Vec<f64>,
    pub snapshots: Vec<Vec<Complex64>>,
    pub invariant_trace: Vec<InvariantRow>,
}

impl WaveField {
    pub fn nx(&self) -> usize {
        self.snapshots.first().map_or(0, Vec::len)
    }

    pub fn last(&self) -> &[Complex64] {
        self.snapshots.last().map_or(&[], Vec::as_slice)
    }

    /// Largest relative deviation of the mass from its initial value.
    pub fn mass_drift(&self) -> f64 {
        relative_drift(self.invariant_trace.iter().map(|r| r.mass))
    }

    pub fn energy_drift(&self) -> f64 {
        relative_drift(self.invariant_trace.iter().map(|r| r.energy))
    }
}

fn relative_drift(mut it: impl Iterator<Item = f64>) -> f64 {
    let Some(first) = it.next() else { return 0.0 };
    let scale = first.abs();
    let dev = it.map(|v| (v - first).abs()).fold(0.0, f64::max);
    if scale == 0.0 {
        dev
    } else {
        dev / scale
    }
}

/// `Σ|u_i|² dx`.
pub fn mass(u: &[Complex64], dx: f64) -> f64 {
    u.iter().map(|z| z.norm_sqr()).sum::<f64>() * dx
}

/// `Σ [p|u_{i+1} − u_i|²/dx² − (q/2)|u_i|⁴] dx` on the periodic grid.
pub fn energy(u: &[Complex64], dx: f64, p: f64, q: f64) -> f64 {
    let n = u.len();
    (0..n)
        .map(|i| {
            let d = (u[(i + 1) % n] - u[i]) / dx;
            p * d.norm_sqr() - 0.5 * q * u[i].norm_sqr() * u[i].norm_sqr()
        })
        .sum::<f64>()
        * dx
}

/// Advances `cfg.initial` to `cfg.t_final`, storing every `store_every`-th
/// step plus the first and last, and recording mass and energy every step.
///
/// Each step solves
/// `i(u⁺ − u)/dt + pΔ_h(u⁺ + u)/2 + qφ(u⁺ + u)/2 = 0` with
/// `φ^{n+1/2} = 2|uⁿ|² − φ^{n−1/2}` and `φ^{−1/2} = |u⁰|²`.
pub fn solve(cfg: &SimConfig, store_every: usize) -> Result<WaveField> {
    cfg.validate()?;
    if store_every == 0 {
        return param("store_every must be at least 1");
    }
    let n = cfg.nx();
    let dx = cfg.dx();
    let dt = cfg.dt;
    let steps = cfg.steps();
    let (p, q) = (cfg.p, cfg.q);

    let mut u = cfg.initial.clone();
    let mut phi: Vec<f64> = u.iter().map(|z| z.norm_sqr()).collect();
    let off = Complex64::new(0.5 * p / (dx * dx), 0.0);
    let sub = vec![off; n];
    let sup = vec![off; n];
    let mut diag = vec![Complex64::new(0.0, 0.0); n];
    let mut rhs = vec![Complex64::new(0.0, 0.0); n];
    let mut next = vec![Complex64::new(0.0, 0.0); n];
    let mut ws = CyclicWorkspace::new(n);
    let idt = Complex64::new(0.0, 1.0 / dt);
    let lap = p / (dx * dx);

    let mut field = WaveField {
        domain_length: cfg.domain_length,
        dx,
        dt,
        times: vec![0.0],
        snapshots: vec![u.clone()],
        invariant_trace: vec![InvariantRow {
            time: 0.0,
            mass: mass(&u, dx),
            energy: energy(&u, dx, p, q),
        }],
    };

    for step in 1..=steps {
        for (ph, z) in phi.iter_mut().zip(&u) {
            *ph = 2.0 * z.norm_sqr() - *ph;
        }
        for i in 0..n {
            let pot = 0.5 * q * phi[i];
            diag[i] = idt + (pot - lap);
            let nb = u[(i + n - 1) % n] + u[(i + 1) % n];
            rhs[i] = (idt + (lap - pot)) * u[i] - off * nb;
        }
        solve_cyclic(&sub, &diag, &sup, &rhs, &mut next, &mut ws)
            .map_err(|e| Error::Numerical(format!("step {step} (t = {}): {e}", step as f64 * dt)))?;
        if next.iter().any(|z| !z.is_finite()) {
            return Err(Error::Numerical(format!("non-finite value at step {step} (t = {})", step as f64 * dt)));
        }
        std::mem::swap(&mut u, &mut next);

        let t = step as f64 * dt;
        field.invariant_trace.push(InvariantRow {
            time: t,
            mass: mass(&u, dx),
            energy: energy(&u, dx, p, q),
        });
        if step % store_every == 0 || step == steps {
            field.times.push(t);
            field.snapshots.push(u.clone());
        }
    }
    Ok(field)
}

/// `δ = (u − A e^{iqA²t}) e^{−iqA²t} / A` for every snapshot.
pub fn extract_inhomogeneity_planewave(field: &WaveField, amplitude: f64, q: f64) -> Result<Vec<Vec<Complex64>>> {
    if amplitude == 0.0 || !amplitude.is_finite() {
        return param("plane-wave amplitude must be nonzero");
    }
    Ok(field
        .times
        .iter()
        .zip(&field.snapshots)
        .map(|(&t, snap)| {
            let rot = Complex64::from_polar(1.0 / amplitude, -q * amplitude * amplitude * t);
            snap.iter().map(|&z| z * rot - 1.0).collect()
        })
        .collect())
}

/// `δ = v − u` snapshot by snapshot.
pub fn extract_inhomogeneity_general(v: &WaveField, u: &WaveField) -> Result<Vec<Vec<Complex64>>> {
    if v.times.len() != u.times.len() || v.nx() != u.nx() || v.dx != u.dx {
        return param("fields are on different grids");
    }
    if v.times.iter().zip(&u.times).any(|(a, b)| a != b) {
        return param("fields have different snapshot times");
    }
    Ok(v.snapshots
        .iter()
        .zip(&u.snapshots)
        .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x - y).collect())
        .collect())
}

/// `max_{x,t} |δ|`.
pub fn sup_modulus(delta: &[Vec<Complex64>]) -> f64 {
    delta.iter().flatten().map(|z| z.norm()).fold(0.0, f64::max)
}
