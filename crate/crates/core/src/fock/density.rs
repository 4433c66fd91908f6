//! Dense emitter density matrices on a per-mode occupation cap.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

use super::logspace::ln_fact;
use super::{check_probability, emitter_state, parity_sign, EmitterPureState};

/// ρ over |ℓ_A, ℓ_B⟩ with 0 ≤ ℓ_A, ℓ_B ≤ cap, index ℓ_A·(cap+1) + ℓ_B.
#[derive(Debug, Clone, PartialEq)]
pub struct EmitterDensityMatrix {
    pub cap: usize,
    pub data: DMatrix<Complex64>,
}

impl EmitterDensityMatrix {
    pub fn zeros(cap: usize) -> Self {
        let dim = (cap + 1) * (cap + 1);
        Self { cap, data: DMatrix::zeros(dim, dim) }
    }

    pub fn index(&self, l_a: usize, l_b: usize) -> usize {
        l_a * (self.cap + 1) + l_b
    }

    pub fn dimension(&self) -> usize {
        self.data.nrows()
    }

    /// |ψ⟩⟨ψ| for a fixed-N_at state; the cap defaults to N_at.
    pub fn from_pure(psi: &EmitterPureState) -> Self {
        let mut rho = Self::zeros(psi.n_at);
        rho.add_pure(psi, 1.0);
        rho
    }

    /// Accumulate weight·|ψ⟩⟨ψ|.
    pub fn add_pure(&mut self, psi: &EmitterPureState, weight: f64) {
        assert!(psi.n_at <= 2 * self.cap, "state does not fit the cap");
        let entries: Vec<(usize, Complex64)> = psi
            .amplitudes
            .iter()
            .enumerate()
            .filter(|&(l, _)| l <= self.cap && psi.n_at - l <= self.cap)
            .map(|(l, &a)| (self.index(l, psi.n_at - l), a))
            .collect();
        for &(i, a) in &entries {
            for &(j, b) in &entries {
                self.data[(i, j)] += a * b.conj() * weight;
            }
        }
    }

    pub fn trace(&self) -> Complex64 {
        self.data.trace()
    }

    /// max |ρ − ρ†|
    pub fn hermiticity_defect(&self) -> f64 {
        let d = &self.data - self.data.adjoint();
        d.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let herm = (&self.data + self.data.adjoint()) * Complex64::new(0.5, 0.0);
        herm.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// ρ_A = Tr_B ρ by explicit index summation.
    pub fn partial_trace_b(&self) -> DMatrix<Complex64> {
        let n = self.cap + 1;
        DMatrix::from_fn(n, n, |a, a2| (0..n).map(|b| self.data[(self.index(a, b), self.index(a2, b))]).sum())
    }

    /// Tr ρ_A².
    pub fn purity_a(&self) -> f64 {
        let ra = self.partial_trace_b();
        (&ra * &ra).trace().re
    }

    /// ⟨ψ|ρ|ψ⟩
    pub fn expectation(&self, psi: &EmitterPureState) -> Complex64 {
        let v: Vec<(usize, Complex64)> = psi
            .amplitudes
            .iter()
            .enumerate()
            .filter(|&(l, _)| l <= self.cap && psi.n_at - l <= self.cap)
            .map(|(l, &a)| (self.index(l, psi.n_at - l), a))
            .collect();
        let mut acc = Complex64::new(0.0, 0.0);
        for &(i, a) in &v {
            for &(j, b) in &v {
                acc += a.conj() * self.data[(i, j)] * b;
            }
        }
        acc
    }

    /// Largest |ρ_ij| with either index outside the N_at = `n` line.
    pub fn weight_outside_sector(&self, n: usize) -> f64 {
        let c = self.cap + 1;
        let on = |i: usize| i / c + i % c == n;
        let mut worst: f64 = 0.0;
        for j in 0..self.dimension() {
            for i in 0..self.dimension() {
                if !(on(i) && on(j)) {
                    worst = worst.max(self.data[(i, j)].norm());
                }
            }
        }
        worst
    }
}

/// Pure two-mode state on a square per-mode cap, amplitudes[(ℓ_A, ℓ_B)].
#[derive(Debug, Clone, PartialEq)]
pub struct TwoModeState {
    pub cap: usize,
    pub amplitudes: DMatrix<Complex64>,
}

impl TwoModeState {
    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|z| z.norm_sqr()).sum()
    }

    /// ρ_A = Ψ Ψ† with Ψ the amplitude matrix (rows ℓ_A, columns ℓ_B).
    pub fn reduced_density_a(&self) -> DMatrix<Complex64> {
        &self.amplitudes * self.amplitudes.adjoint()
    }

    pub fn purity_a(&self) -> f64 {
        let ra = self.reduced_density_a();
        (&ra * &ra).trace().re
    }

    pub fn to_density(&self) -> EmitterDensityMatrix {
        let c = self.cap + 1;
        let v = DMatrix::from_fn(c * c, 1, |i, _| self.amplitudes[(i / c, i % c)]);
        EmitterDensityMatrix { cap: self.cap, data: &v * v.adjoint() }
    }
}

/// Smallest T with P(n > T) < `eps` for a Poisson law of mean `mu`.
fn poisson_cutoff(mu: f64, eps: f64) -> usize {
    if mu == 0.0 {
        return 0;
    }
    let mut cdf = 0.0;
    let mut n = 0usize;
    loop {
        cdf += (-mu + n as f64 * mu.ln() - ln_fact(n)).exp();
        if 1.0 - cdf < eps || n > 100_000 {
            return n;
        }
        n += 1;
    }
}

/// Emitter projection of a coherent bound-mode state.
///
/// exp(α(s b_A† + b_B†)/√2) acting on the vacuum, normalized: amplitudes
/// e^{−|α|²/2} (sα)^ℓ α^m / √(2^{ℓ+m} ℓ! m!). It factorizes into coherent
/// states of amplitude sα/√2 and α/√2.
pub fn coherent_atomic_state(alpha: Complex64, n_parity: u32, trunc: usize) -> Result<TwoModeState> {
    let a2 = alpha.norm_sqr();
    // Per-mode tail below 1e-13 leaves the product norm within 1e-12.
    let needed = ((10.0 * a2).ceil() as usize).max(poisson_cutoff(0.5 * a2, 1e-13));
    if trunc < needed {
        return Err(Error::Truncation {
            reason: format!("per-mode cap {trunc} too small for |α|² = {a2}"),
            required: needed,
        });
    }
    let s = parity_sign(n_parity);
    let c = trunc + 1;
    let (r, theta) = (alpha.norm(), alpha.arg());
    let amp = |l: usize| -> Complex64 {
        if r == 0.0 {
            return if l == 0 { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) };
        }
        let ln_mag = l as f64 * (r.ln() - 0.5 * std::f64::consts::LN_2) - 0.5 * ln_fact(l);
        Complex64::from_polar(ln_mag.exp(), l as f64 * theta)
    };
    let prefactor = (-0.5 * a2).exp();
    let amplitudes = DMatrix::from_fn(c, c, |l, m| {
        let sign = if l % 2 == 1 { s } else { 1.0 };
        amp(l) * amp(m) * (prefactor * sign)
    });
    Ok(TwoModeState { cap: trunc, amplitudes })
}

/// p_in = p_at^{2N} ⟨ψ^(N)|ρ_in|ψ^(N)⟩ for an initial emitter state in sector N.
pub fn relaxation_probability(rho_in: &EmitterDensityMatrix, n: usize, p_at: f64, n_parity: u32) -> Result<f64> {
    check_probability(p_at)?;
    let outside = rho_in.weight_outside_sector(n);
    if outside > 1e-12 {
        return Err(Error::Precondition(format!(
            "initial state has weight {outside:e} outside the N_at = {n} sector"
        )));
    }
    if n > 2 * rho_in.cap {
        return Err(Error::Precondition(format!("sector {n} does not fit cap {}", rho_in.cap)));
    }
    let overlap = rho_in.expectation(&emitter_state(n, n_parity)).re;
    Ok(p_at.powi(2 * n as i32) * overlap)
}
