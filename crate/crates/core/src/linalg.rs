//! Direct solvers for (cyclic) tridiagonal complex systems.
//!
//! Row `i` of the cyclic system reads
//! `sub[i]·x[i−1] + diag[i]·x[i] + sup[i]·x[i+1] = rhs[i]` with indices taken
//! modulo `n`, so `sub[0]` couples to `x[n−1]` and `sup[n−1]` to `x[0]`.

use crate::{Complex64, Error, Result};

/// Reusable scratch space for [`solve_cyclic`].
#[derive(Debug, Default, Clone)]
pub struct CyclicWorkspace {
    diag: Vec<Complex64>,
    gam: Vec<Complex64>,
    u: Vec<Complex64>,
    z: Vec<Complex64>,
}

impl CyclicWorkspace {
    pub fn new(n: usize) -> Self {
        let zero = Complex64::new(0.0, 0.0);
        Self {
            diag: vec![zero; n],
            gam: vec![zero; n],
            u: vec![zero; n],
            z: vec![zero; n],
        }
    }

    fn resize(&mut self, n: usize) {
        let zero = Complex64::new(0.0, 0.0);
        self.diag.resize(n, zero);
        self.gam.resize(n, zero);
        self.u.resize(n, zero);
        self.z.resize(n, zero);
    }
}

/// Thomas algorithm for the open (non-cyclic) system; `sub[0]` and
/// `sup[n−1]` are ignored.
pub fn solve_tridiagonal(
    sub: &[Complex64],
    diag: &[Complex64],
    sup: &[Complex64],
    rhs: &[Complex64],
    out: &mut [Complex64],
    gam: &mut [Complex64],
) -> Result<()> {
    let n = diag.len();
    if n == 0 {
        return Ok(());
    }
    let mut bet = diag[0];
    if bet.norm() == 0.0 {
        return Err(Error::Numerical("zero pivot in tridiagonal solve (row 0)".into()));
    }
    out[0] = rhs[0] / bet;
    for j in 1..n {
        gam[j] = sup[j - 1] / bet;
        bet = diag[j] - sub[j] * gam[j];
        if bet.norm() == 0.0 || !bet.is_finite() {
            return Err(Error::Numerical(format!("zero pivot in tridiagonal solve (row {j})")));
        }
        out[j] = (rhs[j] - sub[j] * out[j - 1]) / bet;
    }
    for j in (0..n - 1).rev() {
        let next = out[j + 1];
        out[j] -= gam[j + 1] * next;
    }
    Ok(())
}

/// Solves the cyclic tridiagonal system by the Sherman–Morrison correction of
/// an open tridiagonal solve. Requires `n ≥ 3`.
pub fn solve_cyclic(
    sub: &[Complex64],
    diag: &[Complex64],
    sup: &[Complex64],
    rhs: &[Complex64],
    out: &mut [Complex64],
    ws: &mut CyclicWorkspace,
) -> Result<()> {
    let n = diag.len();
    if sub.len() != n || sup.len() != n || rhs.len() != n || out.len() != n {
        return Err(Error::Parameter("cyclic solve: length mismatch".into()));
    }
    if n < 3 {
        return Err(Error::Parameter("cyclic solve needs at least 3 unknowns".into()));
    }
    ws.resize(n);
    let alpha = sup[n - 1]; // A[n−1][0]
    let beta = sub[0]; // A[0][n−1]
    let gamma = -diag[0];
    if gamma.norm() == 0.0 {
        return Err(Error::Numerical("cyclic solve: zero leading diagonal".into()));
    }

    ws.diag.copy_from_slice(diag);
    ws.diag[0] = diag[0] - gamma;
    ws.diag[n - 1] = diag[n - 1] - alpha * beta / gamma;

    solve_tridiagonal(sub, &ws.diag, sup, rhs, out, &mut ws.gam)?;

    let zero = Complex64::new(0.0, 0.0);
    ws.u.iter_mut().for_each(|v| *v = zero);
    ws.u[0] = gamma;
    ws.u[n - 1] = alpha;
    let CyclicWorkspace { diag: d, gam, u, z } = ws;
    solve_tridiagonal(sub, d, sup, u, z, gam)?;

    let ratio = beta / gamma;
    let num = out[0] + ratio * out[n - 1];
    let den = Complex64::new(1.0, 0.0) + z[0] + ratio * z[n - 1];
    if den.norm() == 0.0 || !den.is_finite() {
        return Err(Error::Numerical("cyclic solve: singular Sherman–Morrison update".into()));
    }
    let fact = num / den;
    for (o, zi) in out.iter_mut().zip(z.iter()) {
        *o -= fact * zi;
    }
    Ok(())
}
