//! Single-excitation bound states of the emitter pair.
//!
//! A collective annihilator b = φ_A b_A + φ_B b_B + ∫φ(k) b(k) dk that obeys
//! [b, H] = E b creates exact eigenstates N·E in every excitation sector.
//! This module finds such modes below the propagation threshold and above it
//! (bound states in the continuum), where the photon amplitude has removable
//! singularities at k = ±k̄ with k̄·d = nπ.

mod below;
mod bic;
mod integrals;
mod residuals;
mod scan;

pub use below::solve_below_threshold;
pub use bic::{mode_amplitudes, required_omega0_for_bic, solve_bic_fixed_frequency, BicSolution};
pub use integrals::{atomic_weight, atomic_weight_with, level_shift, level_shift_with};
pub use residuals::{residuals, Residuals};
pub use scan::{scan, Observable, RowStatus, ScanAxis, ScanResult, ScanRow, ScanSpec};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::WaveguideModel;

/// Relative symmetry of the emitter amplitudes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Parity {
    /// φ_A = φ_B
    Symmetric,
    /// φ_A = −φ_B
    Antisymmetric,
}

impl Parity {
    pub fn sign(self) -> f64 {
        match self {
            Parity::Symmetric => 1.0,
            Parity::Antisymmetric => -1.0,
        }
    }

    /// Parity forced on a bound state in the continuum with index `n`:
    /// φ_A = (−1)^{n+1} φ_B.
    pub fn for_resonance(n: u32) -> Self {
        if n % 2 == 1 {
            Parity::Symmetric
        } else {
            Parity::Antisymmetric
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Parity::Symmetric => Parity::Antisymmetric,
            Parity::Antisymmetric => Parity::Symmetric,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeKind {
    BelowThreshold,
    Bic,
}

/// Numerical controls shared by the spectral solvers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectralOptions {
    /// Absolute tolerance of every momentum quadrature.
    pub abs_tol: f64,
    /// Half-width of the Taylor patch around ±k̄, as a fraction of k̄.
    pub patch_fraction: f64,
    /// Samples of φ(k) stored on each mode.
    pub grid_points: usize,
    /// Allowed |k̄·d − nπ| relative to nπ.
    pub resonance_tol: f64,
    /// Root tolerance on the self-consistency function.
    pub root_ftol: f64,
    /// Subintervals scanned for sign changes in distance brackets.
    pub bracket_samples: usize,
    /// Multiplier on the momentum cutoff of every quadrature domain.
    pub cutoff_factor: f64,
}

impl Default for SpectralOptions {
    fn default() -> Self {
        Self {
            abs_tol: 1e-12,
            patch_fraction: 1e-3,
            grid_points: 2001,
            resonance_tol: 1e-10,
            root_ftol: 1e-12,
            bracket_samples: 16,
            cutoff_factor: 1.0,
        }
    }
}

impl SpectralOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0) || !(self.root_ftol > 0.0) || !(self.resonance_tol > 0.0) {
            return Err(Error::Domain("spectral tolerances must be positive".into()));
        }
        if !(self.patch_fraction > 0.0 && self.patch_fraction < 0.5) {
            return Err(Error::Domain(format!("patch_fraction must lie in (0, 0.5), got {}", self.patch_fraction)));
        }
        if !(self.cutoff_factor >= 1.0 && self.cutoff_factor.is_finite()) {
            return Err(Error::Domain(format!("cutoff_factor must be at least 1, got {}", self.cutoff_factor)));
        }
        if self.grid_points < 3 {
            return Err(Error::Domain("grid_points must be at least 3".into()));
        }
        Ok(())
    }
}

/// A bound collective mode of the single-excitation sector.
#[derive(Debug, Clone)]
pub struct SingleExcitationMode {
    pub kind: ModeKind,
    pub parity: Parity,
    pub energy: f64,
    pub omega0: f64,
    pub distance: f64,
    pub kbar: Option<f64>,
    pub n: Option<u32>,
    pub phi_a: Complex64,
    pub phi_b: Complex64,
    /// 2|φ_A|², the weight of the emitter component.
    pub p_at: f64,
    pub k_grid: Vec<f64>,
    pub phi_k: Vec<Complex64>,
    pub warnings: Vec<String>,
    model: WaveguideModel,
}

impl SingleExcitationMode {
    pub fn model(&self) -> &WaveguideModel {
        &self.model
    }

    /// Closed-form photon amplitude φ(k) = g(k)(φ_A + φ_B e^{−ikd})/(E − ω(k)).
    ///
    /// For resonant modes the factor is evaluated through
    /// 1 + (−1)^{n+1} e^{−ikd} = 1 − e^{−i(k∓k̄)d}, which keeps full relative
    /// accuracy next to the removable points and returns the analytic limit on
    /// them.
    pub fn amplitude(&self, k: f64) -> Result<Complex64> {
        let d = self.distance;
        match (self.kind, self.kbar) {
            (ModeKind::Bic, Some(kbar)) => {
                let g = self.model.coupling(k);
                let u = if (k - kbar).abs() <= (k + kbar).abs() { k - kbar } else { k + kbar };
                let den = self.model.omega_difference(kbar, k);
                if u == 0.0 || den == 0.0 {
                    let v = self.model.group_velocity(kbar);
                    let sign = if k > 0.0 { -1.0 } else { 1.0 };
                    return Ok(Complex64::new(0.0, sign * d * g / v) * self.phi_a);
                }
                let half = 0.5 * u * d;
                let factor = Complex64::new(0.0, 2.0 * half.sin()) * Complex64::from_polar(1.0, -half);
                Ok(self.phi_a * factor * (g / den))
            }
            _ => field_amplitude(&self.model, self.energy, self.phi_a, self.phi_b, d, k),
        }
    }

    /// Amplitudes φ(k_j) on an arbitrary grid.
    pub fn sample(&self, grid: &[f64]) -> Result<Vec<Complex64>> {
        grid.iter().map(|&k| self.amplitude(k)).collect()
    }
}

/// g(k)(φ_A + φ_B e^{−ikd})/(E − ω(k)) for arbitrary amplitudes.
///
/// At a zero of E − ω(k) the first-order limit is returned when the numerator
/// vanishes too; otherwise the point is a genuine pole and a domain error.
pub fn field_amplitude(
    model: &WaveguideModel,
    energy: f64,
    phi_a: Complex64,
    phi_b: Complex64,
    d: f64,
    k: f64,
) -> Result<Complex64> {
    let g = model.coupling(k);
    let phase = Complex64::from_polar(1.0, -k * d);
    let num = phi_a + phi_b * phase;
    let den = energy - model.omega(k);
    let scale = phi_a.norm() + phi_b.norm();
    if den.abs() <= 1e-14 * energy.abs().max(1.0) {
        if num.norm() > 1e-9 * scale.max(f64::MIN_POSITIVE) {
            return Err(Error::Domain(format!("photon amplitude has a pole at k = {k} (E = {energy})")));
        }
        let v = model.group_velocity(k);
        return Ok(Complex64::new(0.0, d) * phi_b * phase * (g / v));
    }
    Ok(num * (g / den))
}

/// Quadrature cutoff for integrands localized around ±`offset`.
pub(crate) fn cutoff(model: &WaveguideModel, offset: f64, opts: &SpectralOptions) -> Result<f64> {
    Ok(opts.cutoff_factor * model.integration_cutoff(offset)?)
}

pub(crate) fn uniform_grid(k_max: f64, points: usize) -> Vec<f64> {
    let n = points.max(2);
    (0..n).map(|i| -k_max + 2.0 * k_max * i as f64 / (n - 1) as f64).collect()
}

pub(crate) fn resonance_index(kbar: f64, d: f64, tol: f64) -> Result<u32> {
    if !(kbar > 0.0 && d > 0.0) {
        return Err(Error::Precondition(format!("resonance needs k̄ > 0 and d > 0, got k̄ = {kbar}, d = {d}")));
    }
    let phase = kbar * d / std::f64::consts::PI;
    let n = phase.round();
    if n < 1.0 || (phase - n).abs() > tol * n.max(1.0) {
        return Err(Error::Precondition(format!(
            "k̄·d = {:.15}·π is not an integer multiple of π; the imaginary part would not cancel",
            phase
        )));
    }
    Ok(n as u32)
}
