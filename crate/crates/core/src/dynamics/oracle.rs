//! Exact diagonalization of the single-excitation sector.
//!
//! The reflection k → −k combined with A ↔ B splits H into two real symmetric
//! arrow matrices. With θ_j = k_j d/2 the symmetric block couples
//! e₊ = (|A⟩+|B⟩)/√2 to |0⟩ with √2 g_0 and to
//! f₊_j = (e^{−iθ_j}|j⟩ + e^{iθ_j}|−j⟩)/√2 with 2 g_j cos θ_j; the
//! antisymmetric block couples e₋ = (|A⟩−|B⟩)/√2 to
//! f₋_j = i(e^{−iθ_j}|j⟩ − e^{iθ_j}|−j⟩)/√2 with 2 g_j sin θ_j.

use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::Serialize;

use super::grid::{discretize, DiscretizedModel};
use crate::error::{Error, Result};
use crate::model::EmitterConfig;
use crate::spectral::{ModeKind, Parity, SingleExcitationMode};

/// Default half-width of the eigenvalue cluster attributed to the bound mode.
pub const CLUSTER_WINDOW: f64 = 1e-6;

/// One parity block: row 0 is the emitter combination, row i ≥ 1 the photon
/// combination built on |j| = `modes[i−1]`.
#[derive(Debug, Clone)]
pub struct ParityBlock {
    pub parity: Parity,
    pub omega0: f64,
    pub modes: Vec<usize>,
    pub energies: Vec<f64>,
    pub couplings: Vec<f64>,
}

impl ParityBlock {
    pub fn dimension(&self) -> usize {
        self.modes.len() + 1
    }

    pub fn matrix(&self) -> DMatrix<f64> {
        let n = self.dimension();
        let mut h = DMatrix::zeros(n, n);
        h[(0, 0)] = self.omega0;
        for (i, (&e, &c)) in self.energies.iter().zip(&self.couplings).enumerate() {
            h[(i + 1, i + 1)] = e;
            h[(0, i + 1)] = c;
            h[(i + 1, 0)] = c;
        }
        h
    }

    /// Coordinates of a full single-excitation vector (A, B, k_{−J..J}) in this block.
    pub fn project(&self, dm: &DiscretizedModel, v: &[Complex64]) -> Vec<Complex64> {
        let s = self.parity.sign();
        let mut out = Vec::with_capacity(self.dimension());
        out.push((v[0] + v[1] * s) * FRAC_1_SQRT_2);
        for &j in &self.modes {
            if j == 0 {
                out.push(v[2 + dm.position(0)]);
                continue;
            }
            let phase = Complex64::from_polar(1.0, half_angle(dm, j));
            let plus = v[2 + dm.position(j as i64)];
            let minus = v[2 + dm.position(-(j as i64))];
            let c = match self.parity {
                Parity::Symmetric => phase * plus + phase.conj() * minus,
                Parity::Antisymmetric => Complex64::new(0.0, -1.0) * (phase * plus - phase.conj() * minus),
            };
            out.push(c * FRAC_1_SQRT_2);
        }
        out
    }
}

/// θ_j = jπ/(2·cells), exact on the grid by construction.
fn half_angle(dm: &DiscretizedModel, j: usize) -> f64 {
    j as f64 * PI / (2 * dm.cells) as f64
}

/// cos θ_j and sin θ_j with exact zeros at multiples of `cells`.
fn trig(dm: &DiscretizedModel, j: usize) -> (f64, f64) {
    if j % dm.cells == 0 {
        let q = j / dm.cells;
        return match q % 4 {
            0 => (1.0, 0.0),
            1 => (0.0, 1.0),
            2 => (-1.0, 0.0),
            _ => (0.0, -1.0),
        };
    }
    let t = half_angle(dm, j);
    (t.cos(), t.sin())
}

pub fn parity_block(dm: &DiscretizedModel, parity: Parity) -> ParityBlock {
    let half = dm.half_width();
    let (mut modes, mut energies, mut couplings) = (Vec::new(), Vec::new(), Vec::new());
    if parity == Parity::Symmetric {
        modes.push(0);
        energies.push(dm.omega[dm.position(0)]);
        couplings.push(SQRT_2 * dm.g[dm.position(0)]);
    }
    for j in 1..=half {
        let p = dm.position(j as i64);
        let (c, s) = trig(dm, j);
        let factor = match parity {
            Parity::Symmetric => c,
            Parity::Antisymmetric => s,
        };
        modes.push(j);
        energies.push(dm.omega[p]);
        couplings.push(2.0 * dm.g[p] * factor);
    }
    ParityBlock { parity, omega0: dm.omega0, modes, energies, couplings }
}

/// All N_modes + 2 eigenvalues, ascending, from the two parity blocks.
pub fn spectrum_n1(dm: &DiscretizedModel) -> Vec<f64> {
    let mut all: Vec<f64> = [Parity::Symmetric, Parity::Antisymmetric]
        .iter()
        .flat_map(|&p| parity_block(dm, p).matrix().symmetric_eigenvalues().iter().copied().collect::<Vec<_>>())
        .collect();
    all.sort_by(f64::total_cmp);
    all
}

/// H v over (A, B, k_{−J..J}) using the arrow structure.
pub fn apply_n1(dm: &DiscretizedModel, v: &[Complex64]) -> Vec<Complex64> {
    assert_eq!(v.len(), dm.n_modes + 2);
    let mut out = vec![Complex64::new(0.0, 0.0); v.len()];
    out[0] = v[0] * dm.omega0;
    out[1] = v[1] * dm.omega0;
    for j in 0..dm.n_modes {
        let phase = dm.phase_b(j);
        let g = dm.g[j];
        out[0] += v[2 + j] * g;
        out[1] += v[2 + j] * phase * g;
        out[2 + j] = v[2 + j] * dm.omega[j] + (v[0] + v[1] * phase.conj()) * g;
    }
    out
}

/// v_φ = (φ_A, φ_B, φ(k_j)·√Δk).
pub fn analytic_vector(dm: &DiscretizedModel, mode: &SingleExcitationMode) -> Result<Vec<Complex64>> {
    let root_dk = dm.dk.sqrt();
    let mut v = Vec::with_capacity(dm.n_modes + 2);
    v.push(mode.phi_a);
    v.push(mode.phi_b);
    for &k in &dm.k {
        v.push(mode.amplitude(k)? * root_dk);
    }
    Ok(v)
}

fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn check_match(dm: &DiscretizedModel, mode: &SingleExcitationMode) -> Result<()> {
    let scale = dm.distance.abs().max(1.0);
    if (mode.distance - dm.distance).abs() > 1e-12 * scale {
        return Err(Error::Precondition(format!(
            "mode distance {} differs from the grid distance {}",
            mode.distance, dm.distance
        )));
    }
    Ok(())
}

/// ‖(H − E)v_φ‖ on the grid.
pub fn ladder_residual(dm: &DiscretizedModel, mode: &SingleExcitationMode) -> Result<f64> {
    check_match(dm, mode)?;
    let v = analytic_vector(dm, mode)?;
    let hv = apply_n1(dm, &v);
    Ok(hv.iter().zip(&v).map(|(h, x)| (h - x * mode.energy).norm_sqr()).sum::<f64>().sqrt())
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleReport {
    pub cells: usize,
    pub n_modes: usize,
    pub block_dimension: usize,
    /// Eigenvalue of the emitter-dominated eigenvector inside the cluster.
    pub eigenvalue: f64,
    pub eigenvalue_error: f64,
    /// Weight of v_φ/‖v_φ‖ on the eigenvectors within `window` of `eigenvalue`.
    pub overlap: f64,
    pub cluster_size: usize,
    pub ladder_residual: f64,
    /// ‖v_φ‖ on the grid; 1 up to the quadrature error of the sum.
    pub analytic_norm: f64,
    pub window: f64,
}

/// Diagonalize the block of the mode's parity and compare with the analytic mode.
///
/// Photon combinations with an exactly vanishing coupling (f₊ at k̄ for odd n,
/// f₋ for even n) are eigenvectors at ω(k̄) on their own. They are left out
/// of the diagonalization and added back to the cluster when degenerate.
pub fn bic_oracle(dm: &DiscretizedModel, mode: &SingleExcitationMode, window: f64) -> Result<OracleReport> {
    if mode.kind != ModeKind::Bic {
        return Err(Error::Precondition("the diagonalization oracle needs a resonant mode".into()));
    }
    check_match(dm, mode)?;
    let v = analytic_vector(dm, mode)?;
    let v_norm = norm(&v);
    let block = parity_block(dm, mode.parity);
    let coords = block.project(dm, &v);

    let mut kept = vec![0usize];
    let mut decoupled = Vec::new();
    for i in 0..block.modes.len() {
        if block.couplings[i] == 0.0 {
            decoupled.push(i + 1);
        } else {
            kept.push(i + 1);
        }
    }
    let full = block.matrix();
    let reduced = DMatrix::from_fn(kept.len(), kept.len(), |r, c| full[(kept[r], kept[c])]);
    let eig = SymmetricEigen::new(reduced);
    let values = &eig.eigenvalues;
    let vectors = &eig.eigenvectors;

    let candidates: Vec<usize> = (0..values.len()).filter(|&i| (values[i] - mode.energy).abs() < window).collect();
    let best = if candidates.is_empty() {
        (0..values.len())
            .min_by(|&a, &b| (values[a] - mode.energy).abs().total_cmp(&(values[b] - mode.energy).abs()))
            .ok_or_else(|| Error::Numerical("empty parity block".into()))?
    } else {
        *candidates.iter().max_by(|&&a, &&b| vectors[(0, a)].abs().total_cmp(&vectors[(0, b)].abs())).unwrap()
    };
    let lambda = values[best];

    let mut weight = 0.0;
    let mut cluster = 0;
    for i in 0..values.len() {
        if (values[i] - lambda).abs() < window {
            let dot: Complex64 = kept.iter().enumerate().map(|(r, &row)| coords[row] * vectors[(r, i)]).sum();
            weight += dot.norm_sqr();
            cluster += 1;
        }
    }
    for &row in &decoupled {
        if (full[(row, row)] - lambda).abs() < window {
            weight += coords[row].norm_sqr();
            cluster += 1;
        }
    }

    let hv = apply_n1(dm, &v);
    let residual = hv.iter().zip(&v).map(|(h, x)| (h - x * mode.energy).norm_sqr()).sum::<f64>().sqrt();

    Ok(OracleReport {
        cells: dm.cells,
        n_modes: dm.n_modes,
        block_dimension: block.dimension(),
        eigenvalue: lambda,
        eigenvalue_error: (lambda - mode.energy).abs(),
        overlap: weight / (v_norm * v_norm),
        cluster_size: cluster,
        ladder_residual: residual,
        analytic_norm: v_norm,
        window,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SelfConvergence {
    pub reports: Vec<OracleReport>,
    /// max over consecutive grids of cells·|λ(cells) − λ(next)|.
    pub fitted_c: f64,
}

/// Repeat [`bic_oracle`] over increasing box sizes at fixed N_modes.
pub fn self_convergence(
    mode: &SingleExcitationMode,
    cells: &[usize],
    n_modes: usize,
    window: f64,
) -> Result<SelfConvergence> {
    let n = mode.n.ok_or_else(|| Error::Precondition("self-convergence needs a resonant mode".into()))?;
    let emitters = EmitterConfig::new(mode.omega0, mode.distance);
    let reports = cells
        .iter()
        .map(|&c| bic_oracle(&discretize(mode.model(), &emitters, c, n_modes, Some(n))?, mode, window))
        .collect::<Result<Vec<_>>>()?;
    let fitted_c = reports
        .windows(2)
        .map(|w| w[0].cells as f64 * (w[0].eigenvalue - w[1].eigenvalue).abs())
        .fold(0.0, f64::max);
    Ok(SelfConvergence { reports, fitted_c })
}
