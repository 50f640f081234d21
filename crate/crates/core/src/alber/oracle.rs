//! Spectrum of the truncated linear operator
//! `ṙ_{k,l} = −i(2π²p/L²)(k² − l²) r_{k,l} + iq(P_{−l} − P_k) Σ_K r_{K,k+l−K}`
//! on `|k|, |l| ≤ K`.
//!
//! The operator commutes with `ξ = k + l`, so it splits into blocks
//! `A_ξ = D + b·1ᵀ`. Rows with `b_k = 0` carry only their diagonal entry, which
//! makes the block triangular after a permutation; those eigenvalues are read
//! off directly and only the coupled rows go through a dense Schur
//! decomposition.

use nalgebra::DMatrix;
use rayon::prelude::*;

use super::kernel::h_tilde_unchecked;
use super::{KernelParams, Method, Status, StabilityVerdict, VerdictParameters, Witness};
use crate::error::param;
use crate::{Complex64, Error, Result};

const GROWTH_THRESHOLD: f64 = 1e-8;

/// Smallest admissible truncation, `2·m·M`.
pub fn minimal_truncation(kp: &KernelParams) -> i64 {
    2 * kp.spectrum().max_index()
}

struct Block {
    xi: i64,
    eigenvalues: Vec<Complex64>,
    scale: f64,
}

fn block(kp: &KernelParams, xi: i64, k_trunc: i64, deflate: bool) -> Result<Block> {
    let c = kp.dispersion_scale();
    let d = kp.spectrum();
    let x = xi as f64;
    let lo = (xi - k_trunc).max(-k_trunc);
    let hi = (xi + k_trunc).min(k_trunc);
    let mut diag = Vec::new();
    let mut coupling = Vec::new();
    for k in lo..=hi {
        diag.push(Complex64::new(0.0, -c * x * (2.0 * k as f64 - x)));
        coupling.push(Complex64::new(0.0, kp.q * (d.coefficient(k - xi) - d.coefficient(k))));
    }
    let scale = diag
        .iter()
        .chain(&coupling)
        .map(|z| z.norm())
        .fold(0.0, f64::max);

    let (mut eigenvalues, coupled): (Vec<Complex64>, Vec<usize>) = if deflate {
        let free = (0..diag.len()).filter(|&i| coupling[i].norm() == 0.0).map(|i| diag[i]);
        (free.collect(), (0..diag.len()).filter(|&i| coupling[i].norm() != 0.0).collect())
    } else {
        (Vec::new(), (0..diag.len()).collect())
    };
    let n = coupled.len();
    if n > 0 {
        let a = DMatrix::from_fn(n, n, |i, j| {
            let (ri, cj) = (coupled[i], coupled[j]);
            let mut v = coupling[ri];
            if ri == cj {
                v += diag[ri];
            }
            v
        });
        let schur = nalgebra::linalg::Schur::try_new(a, f64::EPSILON, 10_000)
            .ok_or_else(|| Error::Numerical(format!("Schur iteration did not converge for ξ = {xi}")))?;
        let ev = schur
            .eigenvalues()
            .ok_or_else(|| Error::Numerical(format!("no triangular Schur form for ξ = {xi}")))?;
        eigenvalues.extend(ev.iter().copied());
    }
    Ok(Block { xi, eigenvalues, scale })
}

/// Unstable iff some eigenvalue has `Re λ > 1e-8·(entry scale of its block)`.
pub fn eigenvalue_oracle(kp: &KernelParams, k_trunc: i64) -> Result<StabilityVerdict> {
    eigenvalue_oracle_with(kp, k_trunc, true)
}

pub(crate) fn eigenvalue_oracle_with(kp: &KernelParams, k_trunc: i64, deflate: bool) -> Result<StabilityVerdict> {
    let need = minimal_truncation(kp);
    if k_trunc < need {
        return param(format!("truncation K = {k_trunc} does not cover the spectrum (need K ≥ {need})"));
    }
    let l = kp.domain_length();
    let blocks: Vec<Block> = (-2 * k_trunc..=2 * k_trunc)
        .into_par_iter()
        .map(|xi| block(kp, xi, k_trunc, deflate))
        .collect::<Result<_>>()?;

    let mut witnesses = Vec::new();
    let mut max_re = f64::NEG_INFINITY;
    for b in &blocks {
        for &lambda in &b.eigenvalues {
            max_re = max_re.max(lambda.re);
            if lambda.re > GROWTH_THRESHOLD * b.scale {
                witnesses.push(Witness {
                    xi: b.xi,
                    x: b.xi as f64 / l,
                    omega: lambda,
                    residual: (h_tilde_unchecked(b.xi, lambda, kp) - 1.0).norm(),
                });
            }
        }
    }
    witnesses.sort_by(|a, b| b.omega.re.total_cmp(&a.omega.re));
    let unstable = !witnesses.is_empty();
    Ok(StabilityVerdict {
        method: Method::EigenvalueOracle,
        status: if unstable { Status::Unstable } else { Status::Stable },
        unstable,
        max_growth_rate: if unstable { witnesses[0].omega.re } else { 0.0 },
        witnesses,
        winding_numbers: Default::default(),
        parameters: VerdictParameters::new(kp, -2 * k_trunc, 2 * k_trunc)
            .with("k_trunc", k_trunc as f64)
            .with("growth_threshold", GROWTH_THRESHOLD)
            .with("max_real_part", max_re),
        notes: Vec::new(),
    })
}
