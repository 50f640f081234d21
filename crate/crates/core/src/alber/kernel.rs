//! The periodized stability kernel `h̃_L(ξ, ω)`, its infinite-line limit, and
//! a convergence study between the two.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::KernelParams;
use crate::quad::{integrate, QuadOptions};
use crate::spectrum::{discretize, PowerSpectrum};
use crate::{Complex64, Error, Result};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

fn check_half_plane(omega: Complex64) -> Result<()> {
    if !(omega.re > 0.0) || !omega.im.is_finite() {
        return Err(Error::Domain(format!(
            "kernel is defined for Re ω > 0 only, got ω = {omega}"
        )));
    }
    Ok(())
}

/// `h̃_L(ξ, ω) = iq Σ_k (P_{k−ξ} − P_k) / (ω + i·2π²p·ξ(2k−ξ)/L²)`.
///
/// Only indices where a coefficient is nonzero contribute, so the sum is
/// taken exactly over the support of the discrete spectrum.
pub fn h_tilde_l(xi: i64, omega: Complex64, kp: &KernelParams) -> Result<Complex64> {
    check_half_plane(omega)?;
    Ok(h_tilde_unchecked(xi, omega, kp))
}

/// [`h_tilde_l`] without the half-plane check, for inner loops that already
/// guarantee `Re ω > 0`.
pub(crate) fn h_tilde_unchecked(xi: i64, omega: Complex64, kp: &KernelParams) -> Complex64 {
    if xi == 0 || kp.q == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let c = kp.dispersion_scale();
    let x = xi as f64;
    let mut acc = Complex64::new(0.0, 0.0);
    for (&n, &p) in kp.support.iter().zip(&kp.weights) {
        let n = n as f64;
        // k = n + ξ contributes +P_n, k = n contributes −P_n.
        let plus = omega + I * (c * x * (2.0 * n + x));
        let minus = omega + I * (c * x * (2.0 * n - x));
        acc += p * (plus.inv() - minus.inv());
    }
    I * kp.q * acc
}

/// `∂h̃_L/∂ω`.
pub(crate) fn h_tilde_derivative(xi: i64, omega: Complex64, kp: &KernelParams) -> Complex64 {
    if xi == 0 || kp.q == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let c = kp.dispersion_scale();
    let x = xi as f64;
    let mut acc = Complex64::new(0.0, 0.0);
    for (&n, &p) in kp.support.iter().zip(&kp.weights) {
        let n = n as f64;
        let plus = omega + I * (c * x * (2.0 * n + x));
        let minus = omega + I * (c * x * (2.0 * n - x));
        acc += p * ((minus * minus).inv() - (plus * plus).inv());
    }
    I * kp.q * acc
}

/// Imaginary parts `−2π²p·ξ(2n ± ξ)/L²` at which the terms of `h̃_L(ξ, ·)`
/// have their poles on the imaginary axis.
pub(crate) fn pole_heights(xi: i64, kp: &KernelParams) -> Vec<f64> {
    let c = kp.dispersion_scale();
    let x = xi as f64;
    let mut v: Vec<f64> = kp
        .support
        .iter()
        .flat_map(|&n| {
            let n = n as f64;
            [-c * x * (2.0 * n + x), -c * x * (2.0 * n - x)]
        })
        .collect();
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

/// Infinite-line limit
/// `h_∞(X, ω) = iq ∫ [S(k − X/2) − S(k + X/2)] / (ω + 4π²i·p·k·X) dk`,
/// by adaptive Gauss–Kronrod quadrature to absolute tolerance `1e-10`.
pub fn h_infinity(x: f64, omega: Complex64, p: f64, q: f64, s: &PowerSpectrum) -> Result<Complex64> {
    h_infinity_with(x, omega, p, q, s, QuadOptions::default())
}

pub fn h_infinity_with(
    x: f64,
    omega: Complex64,
    p: f64,
    q: f64,
    s: &PowerSpectrum,
    opts: QuadOptions,
) -> Result<Complex64> {
    check_half_plane(omega)?;
    if x == 0.0 || q == 0.0 || s.is_zero() {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let half = 0.5 * x;
    let kmax = s.support_max();
    let lo = -half.abs();
    let hi = kmax + half.abs();
    let mut breaks = Vec::new();
    for b in s.breakpoints() {
        breaks.push(b + half);
        breaks.push(b - half);
    }
    // The integrand peaks where 4π²p·k·X cancels Im ω, with width Re ω/(4π²p|X|).
    let slope = 4.0 * PI * PI * p * x;
    let k_star = -omega.im / slope;
    let w = omega.re / slope.abs();
    for j in [-8.0, -2.0, -0.5, 0.0, 0.5, 2.0, 8.0] {
        breaks.push(k_star + j * w);
    }
    let integrand = |k: f64| {
        let num = s.eval(k - half) - s.eval(k + half);
        if num == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        num / (omega + I * (slope * k))
    };
    let r = integrate(integrand, lo, hi, &breaks, opts)?;
    Ok(I * q * r.value)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub domain_length: f64,
    pub xi: i64,
    pub periodized: Complex64,
    pub limit: Complex64,
    pub error: f64,
}

/// `|h̃_L(round(X·L), ω) − h_∞(X, ω)|` along a ladder of domain lengths, with
/// `P_n = S(n/L)/L`.
pub fn riemann_convergence_study(
    s: &PowerSpectrum,
    x: f64,
    omega: Complex64,
    p: f64,
    q: f64,
    lengths: &[f64],
) -> Result<Vec<ConvergenceRow>> {
    check_half_plane(omega)?;
    let limit = h_infinity_with(
        x,
        omega,
        p,
        q,
        s,
        QuadOptions {
            abs_tol: 1e-13,
            ..Default::default()
        },
    )?;
    lengths
        .iter()
        .map(|&l| {
            let d = discretize(s, l, 1)?;
            let kp = KernelParams::new(p, q, d)?;
            let xi = (x * l).round() as i64;
            let periodized = h_tilde_l(xi, omega, &kp)?;
            Ok(ConvergenceRow {
                domain_length: l,
                xi,
                periodized,
                limit,
                error: (periodized - limit).norm(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::{gaussian_spectrum, DiscreteSpectrum};
    use rand::{Rng, SeedableRng};

    fn gaussian_params(l: f64) -> (PowerSpectrum, KernelParams) {
        let s = gaussian_spectrum(1.0, 1.0, 0.1).unwrap();
        let d = discretize(&s, l, 1).unwrap();
        (s, KernelParams::new(1.0, 1.0, d).unwrap())
    }

    /// Literal evaluation of the defining sum over a wide window of k, using
    /// the continuous spectrum directly.
    fn wide_window(s: &PowerSpectrum, xi: i64, omega: Complex64, p: f64, q: f64, l: f64) -> Complex64 {
        let span = (s.support_max() * l).ceil() as i64 + xi.abs();
        let pad = 10 * span;
        let c = 2.0 * PI * PI * p / (l * l);
        let x = xi as f64;
        let mut acc = Complex64::new(0.0, 0.0);
        for k in -pad..=pad {
            let num = s.eval((k - xi) as f64 / l) - s.eval(k as f64 / l);
            acc += num / (omega + I * (c * x * (2.0 * k as f64 - x)));
        }
        I * q / l * acc
    }

    #[test]
    fn zero_wavenumber_vanishes() {
        let (_, kp) = gaussian_params(50.0);
        for w in [Complex64::new(0.1, 0.0), Complex64::new(2.0, -3.0)] {
            assert_eq!(h_tilde_l(0, w, &kp).unwrap(), Complex64::new(0.0, 0.0));
        }
    }

    #[test]
    fn zero_spectrum_vanishes() {
        let d = discretize(&PowerSpectrum::zero(1.0), 50.0, 1).unwrap();
        let kp = KernelParams::new(1.0, 1.0, d).unwrap();
        assert_eq!(h_tilde_l(7, Complex64::new(0.3, 1.0), &kp).unwrap().norm(), 0.0);
    }

    #[test]
    fn rejects_left_half_plane() {
        let (_, kp) = gaussian_params(50.0);
        assert!(matches!(h_tilde_l(3, Complex64::new(0.0, 1.0), &kp), Err(Error::Domain(_))));
        assert!(matches!(h_tilde_l(3, Complex64::new(-0.2, 0.0), &kp), Err(Error::Domain(_))));
    }

    #[test]
    fn matches_wide_window_summation() {
        let (s, kp) = gaussian_params(200.0);
        let omega = Complex64::new(0.5, 0.0);
        let a = h_tilde_l(20, omega, &kp).unwrap();
        let b = wide_window(&s, 20, omega, 1.0, 1.0, 200.0);
        assert!((a - b).norm() <= 1e-13 * b.norm(), "{a} vs {b}");
    }

    #[test]
    fn matches_wide_window_for_spacing_two() {
        // With m = 2 the kernel is built from P_n = (2/L)S(n/L) on even n only.
        let s = gaussian_spectrum(1.0, 1.0, 0.1).unwrap();
        let d = discretize(&s, 100.0, 2).unwrap();
        let kp = KernelParams::new(1.0, 1.0, d.clone()).unwrap();
        let omega = Complex64::new(0.4, -2.0);
        let xi = 9;
        let c = 2.0 * PI * PI / (100.0f64 * 100.0);
        let mut want = Complex64::new(0.0, 0.0);
        for k in -2000i64..=2000 {
            let num = d.coefficient(k - xi) - d.coefficient(k);
            want += num / (omega + I * (c * xi as f64 * (2.0 * k as f64 - xi as f64)));
        }
        want *= I;
        let got = h_tilde_l(xi, omega, &kp).unwrap();
        assert!((got - want).norm() < 1e-13 * want.norm());
    }

    #[test]
    fn decay_bound_holds() {
        let (_, kp) = gaussian_params(80.0);
        let bound_scale = 2.0 * kp.q * kp.spectrum().total_variance();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let xi = rng.random_range(-200i64..=200);
            let omega = Complex64::new(rng.random_range(0.01..3.0), rng.random_range(-30.0..30.0));
            let h = h_tilde_l(xi, omega, &kp).unwrap();
            assert!(h.norm() <= bound_scale / omega.re * (1.0 + 1e-12));
        }
    }

    #[test]
    fn linear_in_q() {
        let s = gaussian_spectrum(1.0, 1.0, 0.1).unwrap();
        let d = discretize(&s, 60.0, 1).unwrap();
        let k1 = KernelParams::new(1.0, 1.0, d.clone()).unwrap();
        let k3 = KernelParams::new(1.0, 3.0, d).unwrap();
        let w = Complex64::new(0.2, 0.7);
        let a = h_tilde_l(11, w, &k1).unwrap();
        let b = h_tilde_l(11, w, &k3).unwrap();
        assert!((b - 3.0 * a).norm() < 1e-14 * b.norm());
    }

    #[test]
    fn conjugate_symmetry_in_xi() {
        let (_, kp) = gaussian_params(70.0);
        let w = Complex64::new(0.3, 1.7);
        for xi in [1, 5, 33] {
            let a = h_tilde_l(-xi, w, &kp).unwrap();
            let b = h_tilde_l(xi, w.conj(), &kp).unwrap().conj();
            assert!((a - b).norm() < 1e-13 * a.norm().max(1e-300));
        }
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let (_, kp) = gaussian_params(50.0);
        let w = Complex64::new(0.3, -4.0);
        let h = 1e-6;
        let fd = (h_tilde_unchecked(13, w + h, &kp) - h_tilde_unchecked(13, w - h, &kp)) / (2.0 * h);
        let an = h_tilde_derivative(13, w, &kp);
        assert!((fd - an).norm() < 1e-6 * an.norm());
    }

    #[test]
    fn single_bin_closed_form() {
        // P_n = σ² at n = n0: h̃ = iqσ²[1/(ω + icξ(2n0+ξ)) − 1/(ω + icξ(2n0−ξ))].
        let mut coeffs = vec![0.0; 10];
        coeffs[9] = 0.5;
        let d = DiscreteSpectrum::from_coefficients(25.0, 1, coeffs).unwrap();
        let kp = KernelParams::new(0.7, 1.3, d).unwrap();
        let c = 2.0 * PI * PI * 0.7 / 625.0;
        let w = Complex64::new(0.2, 0.1);
        let xi = 3.0;
        let want = I * 1.3 * 0.5 * ((w + I * c * xi * (20.0 + xi)).inv() - (w + I * c * xi * (20.0 - xi)).inv());
        assert!((h_tilde_l(3, w, &kp).unwrap() - want).norm() < 1e-15);
    }

    #[test]
    fn h_infinity_trivial_cases() {
        let s = gaussian_spectrum(1.0, 1.0, 0.1).unwrap();
        let w = Complex64::new(0.3, 0.0);
        assert_eq!(h_infinity(0.0, w, 1.0, 1.0, &s).unwrap().norm(), 0.0);
        assert_eq!(h_infinity(0.4, w, 1.0, 1.0, &PowerSpectrum::zero(2.0)).unwrap().norm(), 0.0);
        assert!(matches!(h_infinity(0.4, Complex64::new(0.0, 1.0), 1.0, 1.0, &s), Err(Error::Domain(_))));
    }

    /// `h_∞` for `S = σ²δ(k − k0)` evaluated by hand.
    fn delta_limit(x: f64, omega: Complex64, p: f64, q: f64, var: f64, k0: f64) -> Complex64 {
        let a = 4.0 * PI * PI * p * x;
        I * q * var * ((omega + I * a * (k0 + 0.5 * x)).inv() - (omega + I * a * (k0 - 0.5 * x)).inv())
    }

    #[test]
    fn h_infinity_narrow_gaussian_approaches_delta_limit() {
        let (x, w, p, q, var, k0) = (0.2, Complex64::new(0.6, 0.3), 1.0, 1.0, 0.8, 1.0);
        let want = delta_limit(x, w, p, q, var, k0);
        let err = |width: f64| {
            let s = gaussian_spectrum(var, k0, width).unwrap();
            (h_infinity(x, w, p, q, &s).unwrap() - want).norm()
        };
        let (e1, e2) = (err(0.01), err(0.005));
        assert!(e1 < 1e-2 * want.norm(), "{e1}");
        // O(width²): halving the width quarters the error.
        assert!((e1 / e2 - 4.0).abs() < 0.4, "{e1} {e2}");
    }

    #[test]
    fn h_infinity_is_close_to_large_l_kernel() {
        let (s, kp) = gaussian_params(400.0);
        let w = Complex64::new(0.3, 0.0);
        let a = h_infinity(0.5, w, 1.0, 1.0, &s).unwrap();
        let b = h_tilde_l(200, w, &kp).unwrap();
        assert!((a - b).norm() < 1e-9, "{a} {b}");
    }

    #[test]
    fn convergence_study_trivial_cases() {
        let w = Complex64::new(0.3, 0.0);
        let z = riemann_convergence_study(&PowerSpectrum::zero(1.8), 0.5, w, 1.0, 1.0, &[50.0, 100.0]).unwrap();
        assert!(z.iter().all(|r| r.error == 0.0));
        let s = gaussian_spectrum(1.0, 1.0, 0.1).unwrap();
        let z = riemann_convergence_study(&s, 0.0, w, 1.0, 1.0, &[50.0, 100.0]).unwrap();
        assert!(z.iter().all(|r| r.error == 0.0));
    }

    #[test]
    fn convergence_at_commensurate_x_is_spectral() {
        // X·L is an integer on the whole ladder, so the periodized kernel is
        // an exact rectangle rule of a smooth integrand: errors drop to
        // round-off immediately rather than halving.
        let s = gaussian_spectrum(1.0, 1.0, 0.1).unwrap();
        let rows = riemann_convergence_study(&s, 0.5, Complex64::new(0.3, 0.0), 1.0, 1.0, &[50.0, 100.0, 200.0, 400.0]).unwrap();
        for r in &rows {
            assert!(r.error < 1e-11, "{rows:?}");
        }
    }

    #[test]
    fn convergence_is_first_order_through_rounding() {
        // frac(50·X) = 1/3 keeps |round(XL) − XL| = 1/3 along the doubling ladder.
        let s = gaussian_spectrum(1.0, 1.0, 0.1).unwrap();
        let x = (25.0 + 1.0 / 3.0) / 50.0;
        let rows = riemann_convergence_study(&s, x, Complex64::new(0.3, 0.0), 1.0, 1.0, &[50.0, 100.0, 200.0, 400.0]).unwrap();
        for w in rows.windows(2) {
            let ratio = w[0].error / w[1].error;
            assert!((1.5..=2.5).contains(&ratio), "{rows:?}");
        }
    }
}
