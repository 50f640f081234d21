//! Argument-principle detection of roots of `h̃_L(ξ, ω) = 1` in the right
//! half-plane.
//!
//! The contour Γ bounds `D = {Re ω > ε, |ω| < 1/ε}`: the segment
//! `Re ω = ε` traversed downwards, closed by the arc of radius `1/ε`.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::kernel::{h_tilde_derivative, h_tilde_unchecked, pole_heights};
use super::{KernelParams, Method, Status, StabilityVerdict, VerdictParameters, Witness};
use crate::error::param;
use crate::{Complex64, Result};

const MARGINAL_DISTANCE: f64 = 1e-6;
const DEGENERATE_DISTANCE: f64 = 10.0 * f64::EPSILON;
const ARC_BOUND: f64 = 0.5;
const MAX_DEPTH: u32 = 48;

/// Roots with `Re ω < ε` lie outside the contour, so `ε` is also the
/// smallest growth rate the detector can report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContourSpec {
    pub epsilon: f64,
    pub n_line: usize,
    pub n_arc: usize,
    /// How many times ε may be halved to bring `|h̃|` below 0.5 on the arc.
    #[serde(default = "default_shrinks")]
    pub max_shrinks: u32,
}

fn default_shrinks() -> u32 {
    8
}

impl Default for ContourSpec {
    fn default() -> Self {
        Self {
            epsilon: 1e-3,
            n_line: 512,
            n_arc: 64,
            max_shrinks: default_shrinks(),
        }
    }
}

impl ContourSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return param(format!("contour epsilon must lie in (0, 1), got {}", self.epsilon));
        }
        if self.n_line < 16 || self.n_arc < 16 {
            return param("contour needs at least 16 samples on the line and on the arc");
        }
        Ok(())
    }

    fn halved(&self) -> Self {
        Self {
            epsilon: 0.5 * self.epsilon,
            ..*self
        }
    }
}

/// One point of the image curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveSample {
    pub omega: Complex64,
    pub h: Complex64,
}

#[derive(Clone, Copy)]
enum Piece {
    Line,
    Arc,
}

struct Geometry {
    eps: f64,
    half_height: f64,
    half_angle: f64,
}

impl Geometry {
    fn new(eps: f64) -> Self {
        let r = 1.0 / eps;
        Self {
            eps,
            half_height: (r * r - eps * eps).sqrt(),
            half_angle: (eps * eps).acos(),
        }
    }

    fn point(&self, piece: Piece, t: f64) -> Complex64 {
        match piece {
            Piece::Line => Complex64::new(self.eps, self.half_height * (1.0 - 2.0 * t)),
            Piece::Arc => Complex64::from_polar(1.0 / self.eps, -self.half_angle + 2.0 * self.half_angle * t),
        }
    }

    fn line_parameter(&self, im: f64) -> f64 {
        0.5 * (1.0 - im / self.half_height)
    }
}

#[derive(Clone, Copy)]
struct Node {
    t: f64,
    omega: Complex64,
    h: Complex64,
}

struct Trace {
    samples: Vec<CurveSample>,
    /// Σ Δarg(h̃ − 1) / 2π.
    winding: f64,
    /// (1/2πi) ∮ ω dlog(h̃ − 1), the sum of the enclosed roots.
    root_sum: Complex64,
    min_distance: f64,
    closest: Complex64,
    arc_max: f64,
    unresolved: bool,
}

fn trace(xi: i64, kp: &KernelParams, geom: &Geometry, spec: &ContourSpec) -> Trace {
    let one = Complex64::new(1.0, 0.0);
    let eval = |piece: Piece, t: f64| {
        let omega = geom.point(piece, t);
        Node {
            t,
            omega,
            h: h_tilde_unchecked(xi, omega, kp),
        }
    };

    // Geometric in |Im ω| between ε and 1/ε, so that every scale of |ω| is
    // resolved, plus the heights of the poles just left of the line.
    let half = spec.n_line / 2;
    let ratio = geom.half_height / geom.eps;
    let mut line_t: Vec<f64> = vec![0.0, 0.5, 1.0];
    for i in 0..half {
        let y = geom.eps * ratio.powf(i as f64 / (half - 1) as f64);
        line_t.push(geom.line_parameter(y));
        line_t.push(geom.line_parameter(-y));
    }
    line_t.retain(|t| (0.0..=1.0).contains(t));
    let mut last = f64::NEG_INFINITY;
    for y in pole_heights(xi, kp) {
        if y.abs() < geom.half_height && y - last > 0.5 * geom.eps {
            line_t.push(geom.line_parameter(y));
            last = y;
        }
    }
    line_t.sort_by(f64::total_cmp);
    line_t.dedup();
    let arc_t: Vec<f64> = (0..=spec.n_arc).map(|i| i as f64 / spec.n_arc as f64).collect();

    let mut out = Trace {
        samples: Vec::new(),
        winding: 0.0,
        root_sum: Complex64::new(0.0, 0.0),
        min_distance: f64::INFINITY,
        closest: geom.point(Piece::Line, 0.5),
        arc_max: 0.0,
        unresolved: false,
    };

    for (piece, ts) in [(Piece::Line, &line_t), (Piece::Arc, &arc_t)] {
        let mut prev = eval(piece, ts[0]);
        push(&mut out, prev, piece, one);
        for &t in &ts[1..] {
            let next = eval(piece, t);
            // Depth-first bisection of [prev, next] until every step turns
            // (h̃ − 1) by at most π/2 and stays short relative to its distance to 1.
            let mut stack = vec![(next, 0u32)];
            while let Some((b, depth)) = stack.pop() {
                let (wa, wb) = (prev.h - one, b.h - one);
                let turn = (wb / wa).arg().abs();
                let chord = (wb - wa).norm();
                let needs = turn > 0.5 * PI || chord > 0.5 * wa.norm().min(wb.norm());
                if needs && depth < MAX_DEPTH {
                    let mid = eval(piece, 0.5 * (prev.t + b.t));
                    stack.push((b, depth + 1));
                    stack.push((mid, depth + 1));
                    continue;
                }
                if turn > 0.5 * PI {
                    out.unresolved = true;
                }
                let dlog = Complex64::new((wb.norm() / wa.norm()).ln(), (wb / wa).arg());
                out.winding += dlog.im / (2.0 * PI);
                out.root_sum += 0.5 * (prev.omega + b.omega) * dlog;
                push(&mut out, b, piece, one);
                prev = b;
            }
        }
    }
    out.root_sum /= Complex64::new(0.0, 2.0 * PI);
    out
}

fn push(out: &mut Trace, n: Node, piece: Piece, one: Complex64) {
    let d = (n.h - one).norm();
    if !(d >= out.min_distance) {
        out.min_distance = d;
        out.closest = n.omega;
    }
    if let Piece::Arc = piece {
        out.arc_max = out.arc_max.max(n.h.norm());
    }
    out.samples.push(CurveSample { omega: n.omega, h: n.h });
}

/// Samples the image curve `h̃_L(ξ, Γ)` with the same adaptive refinement as
/// the detector, for plotting.
pub fn image_curve(kp: &KernelParams, xi: i64, spec: &ContourSpec) -> Result<Vec<CurveSample>> {
    spec.validate()?;
    Ok(trace(xi, kp, &Geometry::new(spec.epsilon), spec).samples)
}

/// Writes `re_omega,im_omega,re_h,im_h` rows.
pub fn write_nyquist_csv<W: Write>(samples: &[CurveSample], w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["re_omega", "im_omega", "re_h", "im_h"])?;
    for s in samples {
        wr.write_record([
            format!("{:e}", s.omega.re),
            format!("{:e}", s.omega.im),
            format!("{:e}", s.h.re),
            format!("{:e}", s.h.im),
        ])?;
    }
    wr.flush()?;
    Ok(())
}

/// Damped Newton iteration for `h̃_L(ξ, ω) = 1` that keeps `Re ω > 0`.
pub(crate) fn newton_refine(xi: i64, kp: &KernelParams, start: Complex64, tol: f64) -> Option<(Complex64, f64)> {
    let one = Complex64::new(1.0, 0.0);
    let mut w = start;
    if !(w.re > 0.0) {
        return None;
    }
    let mut f = h_tilde_unchecked(xi, w, kp) - one;
    for _ in 0..200 {
        let r = f.norm();
        if r < tol {
            return Some((w, r));
        }
        let df = h_tilde_derivative(xi, w, kp);
        if df.norm() == 0.0 || !df.is_finite() {
            return None;
        }
        let step = f / df;
        let mut lambda = 1.0;
        loop {
            let cand = w - lambda * step;
            if cand.re > 0.0 && cand.is_finite() {
                let fc = h_tilde_unchecked(xi, cand, kp) - one;
                if fc.norm() < r {
                    w = cand;
                    f = fc;
                    break;
                }
            }
            lambda *= 0.5;
            if lambda < 1e-12 {
                return None;
            }
        }
    }
    let r = f.norm();
    (r < tol).then_some((w, r))
}

/// Box in the right half-plane that contains every root of `h̃_L(ξ, ·) = 1`:
/// `Re ω ≤ 2qΣP` by the decay bound, and `Im ω` within that distance of the
/// pole heights.
pub(crate) fn root_box(xi: i64, kp: &KernelParams, re_min: f64) -> (f64, f64, f64, f64) {
    let b = kp.kernel_bound();
    let poles = pole_heights(xi, kp);
    let lo = poles.first().copied().unwrap_or(0.0);
    let hi = poles.last().copied().unwrap_or(0.0);
    (re_min, b.max(re_min * 2.0), lo - b, hi + b)
}

/// Local minima of `|h̃ − 1|` on a rectangular grid, ascending by value.
pub(crate) fn grid_minima(
    xi: i64,
    kp: &KernelParams,
    (re0, re1, im0, im1): (f64, f64, f64, f64),
    n_re: usize,
    n_im: usize,
    threshold: f64,
) -> Vec<(Complex64, f64)> {
    let one = Complex64::new(1.0, 0.0);
    let at = |i: usize, j: usize| {
        let re = re0 + (re1 - re0) * i as f64 / (n_re - 1) as f64;
        let im = im0 + (im1 - im0) * j as f64 / (n_im - 1) as f64;
        Complex64::new(re, im)
    };
    let vals: Vec<f64> = (0..n_re * n_im)
        .map(|idx| (h_tilde_unchecked(xi, at(idx / n_im, idx % n_im), kp) - one).norm())
        .collect();
    let v = |i: usize, j: usize| vals[i * n_im + j];
    let mut out = Vec::new();
    for i in 0..n_re {
        for j in 0..n_im {
            let c = v(i, j);
            if !(c < threshold) {
                continue;
            }
            let mut is_min = true;
            for di in -1i64..=1 {
                for dj in -1i64..=1 {
                    let (a, b) = (i as i64 + di, j as i64 + dj);
                    if (di, dj) == (0, 0) || a < 0 || b < 0 || a >= n_re as i64 || b >= n_im as i64 {
                        continue;
                    }
                    if v(a as usize, b as usize) < c {
                        is_min = false;
                    }
                }
            }
            if is_min {
                out.push((at(i, j), c));
            }
        }
    }
    out.sort_by(|a, b| a.1.total_cmp(&b.1));
    out
}

pub(crate) fn push_distinct(roots: &mut Vec<(Complex64, f64)>, cand: (Complex64, f64)) -> bool {
    if roots.iter().any(|(w, _)| (w - cand.0).norm() <= 1e-7 * (1.0 + w.norm())) {
        return false;
    }
    roots.push(cand);
    true
}

struct XiResult {
    xi: i64,
    winding: i64,
    status: Status,
    min_distance: f64,
    epsilon: f64,
    witnesses: Vec<Witness>,
    note: Option<String>,
}

fn analyse_xi(xi: i64, kp: &KernelParams, spec: &ContourSpec, refine_tol: f64) -> XiResult {
    let l = kp.domain_length();
    let mut spec = *spec;
    let mut shrinks = 0;
    let (geom, tr) = loop {
        let geom = Geometry::new(spec.epsilon);
        let tr = trace(xi, kp, &geom, &spec);
        if tr.arc_max < ARC_BOUND || shrinks >= spec.max_shrinks {
            break (geom, tr);
        }
        spec = spec.halved();
        shrinks += 1;
    };

    let mut res = XiResult {
        xi,
        winding: 0,
        status: Status::Stable,
        min_distance: tr.min_distance,
        epsilon: geom.eps,
        witnesses: Vec::new(),
        note: None,
    };
    if tr.min_distance < DEGENERATE_DISTANCE {
        res.status = Status::Indeterminate;
        res.note = Some(format!("ξ={xi}: image curve passes through 1"));
        return res;
    }
    if tr.min_distance < MARGINAL_DISTANCE {
        res.status = Status::Marginal;
        res.note = Some(format!("ξ={xi}: |h̃−1| = {:e} on the contour", tr.min_distance));
        return res;
    }
    if tr.arc_max >= ARC_BOUND {
        res.status = Status::Indeterminate;
        res.note = Some(format!("ξ={xi}: |h̃| = {} on the arc at ε = {}", tr.arc_max, geom.eps));
        return res;
    }
    let rounded = tr.winding.round();
    if tr.unresolved || (tr.winding - rounded).abs() > 0.1 {
        res.status = Status::Indeterminate;
        res.note = Some(format!("ξ={xi}: winding {:.3} not resolved", tr.winding));
        return res;
    }
    res.winding = rounded as i64;
    if res.winding <= 0 {
        if res.winding < 0 {
            res.status = Status::Indeterminate;
            res.note = Some(format!("ξ={xi}: negative winding {}", res.winding));
        }
        return res;
    }

    res.status = Status::Unstable;
    let mut starts = vec![tr.root_sum / res.winding as f64, tr.closest + geom.eps];
    starts.extend(
        grid_minima(xi, kp, root_box(xi, kp, geom.eps), 48, 96, f64::INFINITY)
            .into_iter()
            .take(32)
            .map(|(w, _)| w),
    );
    let mut roots = Vec::new();
    for s in starts {
        if roots.len() as i64 >= res.winding {
            break;
        }
        if let Some(r) = newton_refine(xi, kp, s, refine_tol) {
            if r.0.re > geom.eps && r.0.norm() < 1.0 / geom.eps {
                push_distinct(&mut roots, r);
            }
        }
    }
    if roots.is_empty() {
        res.note = Some(format!("ξ={xi}: winding {} but no root refined below {refine_tol:e}", res.winding));
    }
    res.witnesses = roots
        .into_iter()
        .map(|(omega, residual)| Witness {
            xi,
            x: xi as f64 / l,
            omega,
            residual,
        })
        .collect();
    res
}

/// Winding number of `h̃_L(ξ, Γ)` around 1 for every ξ in `xi_range`
/// (ξ = 0 is skipped: the kernel vanishes there).
pub fn detect_instability_contour(
    kp: &KernelParams,
    xi_range: (i64, i64),
    spec: &ContourSpec,
    refine_tol: f64,
) -> Result<StabilityVerdict> {
    spec.validate()?;
    let (lo, hi) = xi_range;
    if lo > hi {
        return param(format!("empty ξ range [{lo}, {hi}]"));
    }
    if !(refine_tol > 0.0) {
        return param("refinement tolerance must be positive");
    }
    let xis: Vec<i64> = (lo..=hi).filter(|&x| x != 0).collect();
    let results: Vec<XiResult> = if kp.q == 0.0 || kp.spectrum().total_variance() == 0.0 {
        Vec::new()
    } else {
        xis.par_iter().map(|&xi| analyse_xi(xi, kp, spec, refine_tol)).collect()
    };

    let mut winding_numbers: BTreeMap<i64, i64> = xis.iter().map(|&x| (x, 0)).collect();
    let mut witnesses = Vec::new();
    let mut notes = Vec::new();
    let mut min_distance = f64::INFINITY;
    let mut min_eps = spec.epsilon;
    let (mut any_unstable, mut any_marginal, mut any_indeterminate) = (false, false, false);
    for r in results {
        winding_numbers.insert(r.xi, r.winding);
        min_distance = min_distance.min(r.min_distance);
        min_eps = min_eps.min(r.epsilon);
        match r.status {
            Status::Unstable => any_unstable = true,
            Status::Marginal => any_marginal = true,
            Status::Indeterminate => any_indeterminate = true,
            _ => {}
        }
        witnesses.extend(r.witnesses);
        notes.extend(r.note);
    }
    let status = if any_indeterminate {
        Status::Indeterminate
    } else if any_unstable {
        Status::Unstable
    } else if any_marginal {
        Status::Marginal
    } else {
        Status::Stable
    };
    if min_eps < spec.epsilon {
        notes.push(format!("epsilon shrunk to {min_eps:e} for some ξ"));
    }
    let max_growth_rate = witnesses.iter().map(|w| w.omega.re).fold(0.0, f64::max);
    Ok(StabilityVerdict {
        method: Method::ArgumentPrinciple,
        status,
        unstable: any_unstable,
        witnesses,
        winding_numbers,
        max_growth_rate,
        parameters: VerdictParameters::new(kp, lo, hi)
            .with("epsilon", spec.epsilon)
            .with("epsilon_min", min_eps)
            .with("refine_tol", refine_tol)
            .with("marginal_distance", MARGINAL_DISTANCE)
            .with("min_distance", if min_distance.is_finite() { min_distance } else { -1.0 }),
        notes,
    })
}
