//! Brute-force scan of `|h̃_L − 1|` over a rectangle of the right half-plane.
//! Results are candidates only; verdicts come from the contour or the oracle.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::contour::{grid_minima, newton_refine, push_distinct};
use super::{KernelParams, Method, Status, StabilityVerdict, VerdictParameters, Witness};
use crate::error::param;
use crate::Result;

/// Candidates are grid minima of `|h̃ − 1|` below this value.
pub const CANDIDATE_THRESHOLD: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OmegaGrid {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
    pub n_re: usize,
    pub n_im: usize,
}

impl OmegaGrid {
    pub fn validate(&self) -> Result<()> {
        if !(self.re_min > 0.0 && self.re_max > self.re_min) {
            return param("grid must lie in Re ω > 0 with re_max > re_min");
        }
        if !(self.im_max > self.im_min) || !self.im_min.is_finite() || !self.im_max.is_finite() {
            return param("grid needs im_max > im_min");
        }
        if self.n_re < 2 || self.n_im < 2 {
            return param("grid needs at least 2 points per direction");
        }
        Ok(())
    }
}

pub fn detect_instability_gridscan(
    kp: &KernelParams,
    xi_range: (i64, i64),
    grid: &OmegaGrid,
    refine_tol: f64,
) -> Result<StabilityVerdict> {
    grid.validate()?;
    let (lo, hi) = xi_range;
    if lo > hi {
        return param(format!("empty ξ range [{lo}, {hi}]"));
    }
    let l = kp.domain_length();
    let xis: Vec<i64> = (lo..=hi).filter(|&x| x != 0).collect();
    let bounds = (grid.re_min, grid.re_max, grid.im_min, grid.im_max);
    let per_xi: Vec<(Vec<Witness>, usize)> = if kp.q == 0.0 {
        Vec::new()
    } else {
        xis.par_iter()
            .map(|&xi| {
                let cands = grid_minima(xi, kp, bounds, grid.n_re, grid.n_im, CANDIDATE_THRESHOLD);
                let mut roots = Vec::new();
                for (w, _) in &cands {
                    // Newton can slide onto the imaginary axis, which is not a growing mode.
                    if let Some(r) = newton_refine(xi, kp, *w, refine_tol).filter(|r| r.0.re >= 0.5 * grid.re_min) {
                        push_distinct(&mut roots, r);
                    }
                }
                let ws = roots
                    .into_iter()
                    .map(|(omega, residual)| Witness {
                        xi,
                        x: xi as f64 / l,
                        omega,
                        residual,
                    })
                    .collect();
                (ws, cands.len())
            })
            .collect()
    };
    let candidates: usize = per_xi.iter().map(|(_, c)| c).sum();
    let witnesses: Vec<Witness> = per_xi.into_iter().flat_map(|(w, _)| w).collect();
    let max_growth_rate = witnesses.iter().map(|w| w.omega.re).fold(0.0, f64::max);
    Ok(StabilityVerdict {
        method: Method::GridScan,
        status: Status::Advisory,
        unstable: !witnesses.is_empty(),
        witnesses,
        winding_numbers: Default::default(),
        max_growth_rate,
        parameters: VerdictParameters::new(kp, lo, hi)
            .with("threshold", CANDIDATE_THRESHOLD)
            .with("refine_tol", refine_tol)
            .with("candidates", candidates as f64),
        notes: vec![format!("{candidates} grid candidates below {CANDIDATE_THRESHOLD}")],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::{discretize, gaussian_spectrum};

    fn params(variance: f64, q: f64) -> KernelParams {
        let s = gaussian_spectrum(variance, 0.2, 0.02).unwrap();
        KernelParams::new(1.0, q, discretize(&s, 100.0, 1).unwrap()).unwrap()
    }

    fn grid() -> OmegaGrid {
        OmegaGrid {
            re_min: 0.01,
            re_max: 2.0,
            im_min: -4.0,
            im_max: 4.0,
            n_re: 60,
            n_im: 200,
        }
    }

    #[test]
    fn rejects_left_half_plane_grid() {
        let g = OmegaGrid { re_min: 0.0, ..grid() };
        assert!(detect_instability_gridscan(&params(1.0, 1.0), (1, 2), &g, 1e-10).is_err());
    }

    #[test]
    fn no_candidates_without_nonlinearity() {
        let v = detect_instability_gridscan(&params(1.0, 0.0), (-10, 10), &grid(), 1e-10).unwrap();
        assert!(v.witnesses.is_empty());
        assert_eq!(v.parameters.tolerances["candidates"], 0.0);
    }

    #[test]
    fn no_candidates_for_weak_spectrum() {
        let v = detect_instability_gridscan(&params(1e-4, 1.0), (-40, 40), &grid(), 1e-10).unwrap();
        assert_eq!(v.parameters.tolerances["candidates"], 0.0);
        assert!(!v.unstable);
    }

    #[test]
    fn finds_refinable_candidate_for_intense_spectrum() {
        let v = detect_instability_gridscan(&params(1.0, 1.0), (1, 40), &grid(), 1e-10).unwrap();
        assert!(v.unstable);
        assert!(v.witnesses.iter().all(|w| w.residual < 1e-8));
        assert_eq!(v.status, Status::Advisory);
    }
}
