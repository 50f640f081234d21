//! Recovery of the full correlation coefficients `r_{k,l}(t)` on the diagonal
//! `k + l = ξ` from the driver `f(ξ, t) = Σ_K r_{K,ξ−K}(t)`:
//!
//! `r_{k,l}(t) = e^{−iθt} r_{k,l}(0) + iq(P_{−l} − P_k) ∫₀ᵗ e^{−iθ(t−s)} f(ξ, s) ds`,
//! with `θ = 2π²p(k + l)(k − l)/L²`.

use serde::{Deserialize, Serialize};

use super::KernelParams;
use crate::error::param;
use crate::{Complex64, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RTrajectory {
    pub k: i64,
    pub l: i64,
    /// `r_{k,l}` at each time of the driver history.
    pub values: Vec<Complex64>,
}

/// Evaluates the Duhamel formula by the trapezoid rule on the sample times of
/// `f_history`. `initial` lists `(k, r_{k,ξ−k}(t₀))`; time is measured from
/// `times[0]`.
pub fn reconstruct_r(
    xi: i64,
    times: &[f64],
    f_history: &[Complex64],
    kp: &KernelParams,
    initial: &[(i64, Complex64)],
) -> Result<Vec<RTrajectory>> {
    if times.len() != f_history.len() {
        return param("driver history and time stamps differ in length");
    }
    if times.is_empty() {
        return param("empty driver history");
    }
    if times.windows(2).any(|w| !(w[1] > w[0])) || times.iter().any(|t| !t.is_finite()) {
        return param("time stamps must be finite and strictly increasing");
    }
    let c = kp.dispersion_scale();
    let d = kp.spectrum();
    let t0 = times[0];
    let x = xi as f64;
    Ok(initial
        .iter()
        .map(|&(k, r0)| {
            let theta = c * x * (2.0 * k as f64 - x);
            let drive = Complex64::new(0.0, kp.q * (d.coefficient(k - xi) - d.coefficient(k)));
            let weighted = |i: usize| Complex64::from_polar(1.0, theta * (times[i] - t0)) * f_history[i];
            let mut integral = Complex64::new(0.0, 0.0);
            let mut values = Vec::with_capacity(times.len());
            values.push(r0);
            let mut prev = weighted(0);
            for i in 1..times.len() {
                let cur = weighted(i);
                integral += 0.5 * (times[i] - times[i - 1]) * (prev + cur);
                prev = cur;
                let phase = Complex64::from_polar(1.0, -theta * (times[i] - t0));
                values.push(phase * (r0 + drive * integral));
            }
            RTrajectory { k, l: xi - k, values }
        })
        .collect())
}
