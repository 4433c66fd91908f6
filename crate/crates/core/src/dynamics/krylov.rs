//! Action of exp(−iHt) by Lanczos with full reorthogonalization.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::Serialize;

use super::sector::SparseHamiltonian;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Serialize)]
pub struct KrylovOptions {
    /// Krylov subspace dimension per step.
    pub dimension: usize,
    /// Error allowed per unit time; a step of length τ may spend rate·τ.
    pub error_rate: f64,
}

impl KrylovOptions {
    /// Budget `tol` spread uniformly over `horizon`.
    pub fn for_horizon(tol: f64, horizon: f64) -> Self {
        Self { dimension: 30, error_rate: tol / horizon.max(1.0) }
    }
}

#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct KrylovStats {
    pub steps: usize,
    pub matvecs: usize,
    /// Sum of the per-step error estimates.
    pub error_estimate: f64,
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

struct Lanczos {
    basis: Vec<Vec<Complex64>>,
    alpha: Vec<f64>,
    beta: Vec<f64>,
    /// β after the last vector; zero on an invariant subspace.
    residual: f64,
}

fn lanczos(h: &SparseHamiltonian, psi: &[Complex64], m: usize, stats: &mut KrylovStats) -> Lanczos {
    let beta0 = norm(psi);
    let mut basis = vec![psi.iter().map(|z| z / beta0).collect::<Vec<_>>()];
    let (mut alpha, mut beta) = (Vec::new(), Vec::new());
    let mut w = vec![Complex64::new(0.0, 0.0); psi.len()];
    let mut residual = 0.0;
    for j in 0..m {
        h.apply(&basis[j], &mut w);
        stats.matvecs += 1;
        let a = dot(&basis[j], &w).re;
        alpha.push(a);
        // Two passes of Gram-Schmidt against the whole basis.
        for _ in 0..2 {
            for v in &basis {
                let c = dot(v, &w);
                w.iter_mut().zip(v).for_each(|(x, y)| *x -= c * y);
            }
        }
        let b = norm(&w);
        let scale = a.abs() + beta.last().copied().unwrap_or(0.0);
        if b <= 1e-14 * scale.max(1e-300) {
            residual = 0.0;
            break;
        }
        residual = b;
        if j + 1 == m {
            break;
        }
        beta.push(b);
        basis.push(w.iter().map(|z| z / b).collect());
    }
    Lanczos { basis, alpha, beta, residual }
}

/// exp(−iTτ)e₁ in the Lanczos basis.
fn small_exponential(eig: &SymmetricEigen<f64, nalgebra::Dyn>, tau: f64) -> Vec<Complex64> {
    let q = &eig.eigenvectors;
    let n = q.nrows();
    let w: Vec<Complex64> =
        (0..n).map(|i| Complex64::from_polar(1.0, -eig.eigenvalues[i] * tau) * q[(0, i)]).collect();
    (0..n).map(|r| (0..n).map(|i| w[i] * q[(r, i)]).sum()).collect()
}

/// Replace `psi` by exp(−iHt)ψ.
pub fn propagate(
    h: &SparseHamiltonian,
    psi: &mut [Complex64],
    t: f64,
    opts: &KrylovOptions,
    stats: &mut KrylovStats,
) -> Result<()> {
    if !(t >= 0.0) {
        return Err(Error::Domain(format!("evolution time must be non-negative, got {t}")));
    }
    if opts.dimension < 2 {
        return Err(Error::Domain("Krylov dimension must be at least 2".into()));
    }
    let mut done = 0.0;
    let mut tau_guess = t;
    while done < t {
        let beta0 = norm(psi);
        if beta0 == 0.0 {
            return Ok(());
        }
        let lz = lanczos(h, psi, opts.dimension, stats);
        let m = lz.alpha.len();
        let mut tmat = DMatrix::zeros(m, m);
        for i in 0..m {
            tmat[(i, i)] = lz.alpha[i];
            if i + 1 < m {
                tmat[(i, i + 1)] = lz.beta[i];
                tmat[(i + 1, i)] = lz.beta[i];
            }
        }
        let eig = SymmetricEigen::new(tmat);
        let mut tau = tau_guess.min(t - done);
        let mut halvings = 0;
        let (y, err) = loop {
            let y = small_exponential(&eig, tau);
            let err = lz.residual * y[m - 1].norm() * beta0;
            if err <= opts.error_rate * tau || lz.residual == 0.0 {
                break (y, err);
            }
            tau *= 0.5;
            halvings += 1;
            if halvings > 60 {
                return Err(Error::Numerical(format!("Krylov step underflow at t = {done}")));
            }
        };
        for (r, x) in psi.iter_mut().enumerate() {
            *x = lz.basis.iter().zip(&y).map(|(v, c)| v[r] * c).sum::<Complex64>() * beta0;
        }
        stats.steps += 1;
        stats.error_estimate += err;
        done += tau;
        tau_guess = if halvings == 0 { tau * 1.5 } else { tau };
        if t - done <= 1e-14 * t {
            break;
        }
    }
    Ok(())
}
