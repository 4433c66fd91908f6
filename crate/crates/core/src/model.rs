//! Waveguide dispersion relations, emitter–field coupling profiles and the
//! checks the bound-state solver relies on.
//!
//! Units: ħ = 1; the default dimensionless system measures frequencies in
//! units of the propagation cutoff `M`.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::{integrate, QuadOptions};

/// Relative tail level used to truncate momentum integrals.
pub const TAIL_EPS: f64 = 1e-16;

pub type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Dispersion relation ω(k) of the single guided mode.
#[derive(Clone)]
pub enum Dispersion {
    /// ω(k) = √(k² + M²), lowest mode of a rectangular guide.
    Rectangular { cutoff: f64 },
    /// User supplied ω(k) with its minimum value `threshold`.
    Custom { name: String, threshold: f64, omega: RealFn },
}

/// Shape of g(k) before the overall prefactor λ.
#[derive(Clone)]
pub enum CouplingProfile {
    /// √(M/ω(k)) · exp(−(k/k_c)²)
    InvSqrtGauss,
    /// exp(−(k/k_c)²)
    FlatGauss,
    /// Constant; violates the high-frequency decoupling condition.
    Flat,
    Custom { name: String, shape: RealFn },
}

impl fmt::Debug for Dispersion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Dispersion::Rectangular { cutoff } => write!(f, "Rectangular {{ cutoff: {cutoff} }}"),
            Dispersion::Custom { name, threshold, .. } => write!(f, "Custom {{ name: {name:?}, threshold: {threshold} }}"),
        }
    }
}

impl fmt::Debug for CouplingProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CouplingProfile::InvSqrtGauss => f.write_str("InvSqrtGauss"),
            CouplingProfile::FlatGauss => f.write_str("FlatGauss"),
            CouplingProfile::Flat => f.write_str("Flat"),
            CouplingProfile::Custom { name, .. } => write!(f, "Custom({name:?})"),
        }
    }
}

/// Named coupling profiles accepted in configuration files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ProfileName {
    #[default]
    InvSqrtGauss,
    FlatGauss,
}

/// Immutable waveguide model: dispersion, coupling and its overall scale.
#[derive(Clone, Debug)]
pub struct WaveguideModel {
    dispersion: Dispersion,
    profile: CouplingProfile,
    lambda: f64,
    regulator: Option<f64>,
}

/// Emitter pair placement and level structure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmitterConfig {
    pub omega0: f64,
    pub distance: f64,
    /// Levels per emitter; `None` means harmonic oscillators.
    pub levels: Option<u32>,
}

impl EmitterConfig {
    pub fn new(omega0: f64, distance: f64) -> Self {
        Self { omega0, distance, levels: None }
    }

    pub fn validate(&self, model: &WaveguideModel) -> Result<()> {
        if !(self.omega0 > model.threshold()) {
            return Err(Error::Domain(format!(
                "omega0 = {} must lie above the propagation cutoff {}",
                self.omega0,
                model.threshold()
            )));
        }
        if !(self.distance > 0.0) {
            return Err(Error::Domain(format!("distance must be positive, got {}", self.distance)));
        }
        if self.levels == Some(0) {
            return Err(Error::Domain("emitters need at least one level".into()));
        }
        Ok(())
    }
}

/// ω(k) = √(k²+M²), g(k) = λ √(M/ω(k)) exp(−(k/k_c)²).
pub fn make_rectangular_model(cutoff: f64, k_c: f64, lambda: f64) -> Result<WaveguideModel> {
    make_rectangular_model_with(cutoff, k_c, lambda, ProfileName::InvSqrtGauss)
}

pub fn make_rectangular_model_with(cutoff: f64, k_c: f64, lambda: f64, profile: ProfileName) -> Result<WaveguideModel> {
    if !(cutoff > 0.0 && cutoff.is_finite()) {
        return Err(Error::Domain(format!("cutoff M must be positive, got {cutoff}")));
    }
    if !(k_c > 0.0 && k_c.is_finite()) {
        return Err(Error::Domain(format!("regulator k_c must be positive, got {k_c}")));
    }
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::Domain(format!("coupling scale lambda must be non-negative, got {lambda}")));
    }
    let profile = match profile {
        ProfileName::InvSqrtGauss => CouplingProfile::InvSqrtGauss,
        ProfileName::FlatGauss => CouplingProfile::FlatGauss,
    };
    Ok(WaveguideModel { dispersion: Dispersion::Rectangular { cutoff }, profile, lambda, regulator: Some(k_c) })
}

impl WaveguideModel {
    /// General constructor. Gaussian profiles need a regulator scale.
    pub fn new(dispersion: Dispersion, profile: CouplingProfile, lambda: f64, regulator: Option<f64>) -> Result<Self> {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::Domain(format!("coupling scale lambda must be non-negative, got {lambda}")));
        }
        let needs_regulator = matches!(profile, CouplingProfile::InvSqrtGauss | CouplingProfile::FlatGauss);
        match regulator {
            Some(k_c) if !(k_c > 0.0 && k_c.is_finite()) => {
                return Err(Error::Domain(format!("regulator k_c must be positive, got {k_c}")))
            }
            None if needs_regulator => {
                return Err(Error::Domain("gaussian coupling profiles need a regulator scale".into()))
            }
            _ => {}
        }
        if let Dispersion::Rectangular { cutoff } = dispersion {
            if !(cutoff > 0.0) {
                return Err(Error::Domain(format!("cutoff M must be positive, got {cutoff}")));
            }
        }
        Ok(Self { dispersion, profile, lambda, regulator })
    }

    pub fn dispersion(&self) -> &Dispersion {
        &self.dispersion
    }

    pub fn profile(&self) -> &CouplingProfile {
        &self.profile
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn regulator(&self) -> Option<f64> {
        self.regulator
    }

    /// Same model with a different coupling prefactor.
    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        Self::new(self.dispersion.clone(), self.profile.clone(), lambda, self.regulator)
    }

    /// M = min_k ω(k).
    pub fn threshold(&self) -> f64 {
        match &self.dispersion {
            Dispersion::Rectangular { cutoff } => *cutoff,
            Dispersion::Custom { threshold, .. } => *threshold,
        }
    }

    pub fn omega(&self, k: f64) -> f64 {
        match &self.dispersion {
            Dispersion::Rectangular { cutoff } => k.hypot(*cutoff),
            Dispersion::Custom { omega, .. } => omega(k),
        }
    }

    /// ω(k1) − ω(k2), evaluated without cancellation where the form allows it.
    pub fn omega_difference(&self, k1: f64, k2: f64) -> f64 {
        match &self.dispersion {
            Dispersion::Rectangular { .. } => (k1 - k2) * (k1 + k2) / (self.omega(k1) + self.omega(k2)),
            Dispersion::Custom { .. } => self.omega(k1) - self.omega(k2),
        }
    }

    /// [ω, ω′, ω″, ω‴] at `k`.
    pub fn omega_derivatives(&self, k: f64) -> [f64; 4] {
        match &self.dispersion {
            Dispersion::Rectangular { cutoff } => {
                let m2 = cutoff * cutoff;
                let w = k.hypot(*cutoff);
                [w, k / w, m2 / w.powi(3), -3.0 * m2 * k / w.powi(5)]
            }
            Dispersion::Custom { omega, .. } => finite_derivatives(omega.as_ref(), k),
        }
    }

    /// Group velocity ω′(k).
    pub fn group_velocity(&self, k: f64) -> f64 {
        self.omega_derivatives(k)[1]
    }

    /// Positive k with ω(k) = `frequency` (inverse on the k > 0 branch).
    pub fn inverse_omega(&self, frequency: f64) -> Option<f64> {
        let m = self.threshold();
        if !(frequency > m) {
            return None;
        }
        match &self.dispersion {
            Dispersion::Rectangular { cutoff } => Some(((frequency - cutoff) * (frequency + cutoff)).sqrt()),
            Dispersion::Custom { .. } => {
                let mut hi = 1.0;
                while self.omega(hi) < frequency {
                    hi *= 2.0;
                    if hi > 1e12 {
                        return None;
                    }
                }
                crate::roots::find_root(|k| self.omega(k) - frequency, 0.0, hi, 1e-14).ok().map(|r| r.x)
            }
        }
    }

    pub fn coupling(&self, k: f64) -> f64 {
        let shape = match &self.profile {
            CouplingProfile::InvSqrtGauss => {
                let k_c = self.regulator.unwrap_or(f64::INFINITY);
                (self.threshold() / self.omega(k)).sqrt() * (-(k / k_c).powi(2)).exp()
            }
            CouplingProfile::FlatGauss => {
                let k_c = self.regulator.unwrap_or(f64::INFINITY);
                (-(k / k_c).powi(2)).exp()
            }
            CouplingProfile::Flat => 1.0,
            CouplingProfile::Custom { shape, .. } => shape(k),
        };
        self.lambda * shape
    }

    pub fn coupling_sq(&self, k: f64) -> f64 {
        let g = self.coupling(k);
        g * g
    }

    /// [g², (g²)′, (g²)″] at `k`.
    pub fn coupling_sq_derivatives(&self, k: f64) -> [f64; 3] {
        let g2 = self.coupling_sq(k);
        let gauss_log = |k: f64| -> (f64, f64) {
            let k_c = self.regulator.unwrap_or(f64::INFINITY);
            (-4.0 * k / (k_c * k_c), -4.0 / (k_c * k_c))
        };
        match &self.profile {
            CouplingProfile::InvSqrtGauss => {
                let [w, w1, w2, _] = self.omega_derivatives(k);
                let (r1, r2) = gauss_log(k);
                let h1 = -w1 / w + r1;
                let h2 = -(w2 * w - w1 * w1) / (w * w) + r2;
                [g2, g2 * h1, g2 * (h2 + h1 * h1)]
            }
            CouplingProfile::FlatGauss => {
                let (h1, h2) = gauss_log(k);
                [g2, g2 * h1, g2 * (h2 + h1 * h1)]
            }
            CouplingProfile::Flat => [g2, 0.0, 0.0],
            CouplingProfile::Custom { .. } => {
                let d = finite_derivatives(&|x| self.coupling_sq(x), k);
                [d[0], d[1], d[2]]
            }
        }
    }

    /// Momentum beyond which g² has fallen below `TAIL_EPS` (relative to λ²),
    /// shifted by `offset` so the resonant region stays well inside.
    pub fn integration_cutoff(&self, offset: f64) -> Result<f64> {
        if let (Some(k_c), CouplingProfile::InvSqrtGauss | CouplingProfile::FlatGauss) = (self.regulator, &self.profile) {
            let ratio = (self.lambda * self.lambda / TAIL_EPS).max(std::f64::consts::E);
            return Ok(k_c * ratio.ln().sqrt() + offset.abs());
        }
        // Generic profiles: walk outwards until the integrand weight is negligible.
        let scale = self.coupling_sq(0.0).abs().max(f64::MIN_POSITIVE);
        let mut k = 1.0_f64.max(offset.abs());
        while k < 1e7 {
            let tail = self.coupling_sq(k).max(self.coupling_sq(-k));
            if tail <= TAIL_EPS * scale {
                return Ok(k + offset.abs());
            }
            k *= 2.0;
        }
        Err(Error::Domain(format!("{:?} coupling does not decay at large momentum", self.profile)))
    }

    /// ∫ g(k)² / (1 + ω(k)) dk over |k| ≤ `k_max`.
    pub fn low_pass_integral(&self, k_max: f64) -> Result<f64> {
        let opts = QuadOptions { abs_tol: 1e-14, rel_tol: 1e-13, ..QuadOptions::default() };
        let est = integrate(|k| self.coupling_sq(k) / (1.0 + self.omega(k)), -k_max, k_max, &[0.0], &opts)?;
        Ok(est.value)
    }

    /// ‖g‖² = ∫ g² dk over the truncated domain; reported as `coupling_norm_sq`.
    pub fn coupling_norm_sq(&self) -> Result<f64> {
        if self.lambda == 0.0 {
            return Ok(0.0);
        }
        let k_max = self.integration_cutoff(0.0)?;
        let opts = QuadOptions { abs_tol: 1e-15, rel_tol: 1e-13, ..QuadOptions::default() };
        Ok(integrate(|k| self.coupling_sq(k), -k_max, k_max, &[0.0], &opts)?.value)
    }
}

fn finite_derivatives(f: &dyn Fn(f64) -> f64, k: f64) -> [f64; 4] {
    let h = 1e-3 * k.abs().max(1.0);
    let f0 = f(k);
    let (fp1, fm1) = (f(k + h), f(k - h));
    let (fp2, fm2) = (f(k + 2.0 * h), f(k - 2.0 * h));
    let d1 = (fm2 - 8.0 * fm1 + 8.0 * fp1 - fp2) / (12.0 * h);
    let d2 = (-fm2 + 16.0 * fm1 - 30.0 * f0 + 16.0 * fp1 - fp2) / (12.0 * h * h);
    let d3 = (-fm2 + 2.0 * fm1 - 2.0 * fp1 + fp2) / (2.0 * h * h * h);
    [f0, d1, d2, d3]
}

/// One named pass/fail check with its measured violation.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub measured: f64,
    pub tolerance: f64,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, measured: f64, tolerance: f64, passed: bool, detail: impl Into<String>) -> Self {
        Self { name: name.into(), passed, measured, tolerance, detail: detail.into() }
    }

    /// Passes when `measured <= tolerance` (NaN fails).
    pub fn at_most(name: impl Into<String>, measured: f64, tolerance: f64) -> Self {
        Self::new(name, measured, tolerance, measured <= tolerance, "")
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Probe the symmetry, monotonicity and high-frequency decoupling the
/// bound-state construction assumes.
pub fn validate_assumptions(model: &WaveguideModel, probe_grid: &[f64]) -> Result<ValidationReport> {
    if probe_grid.is_empty() {
        return Err(Error::Precondition("probe grid must not be empty".into()));
    }
    let mut report = ValidationReport::default();

    let omega_odd = probe_grid
        .iter()
        .map(|&k| 0.5 * (model.omega(k) - model.omega(-k)).abs())
        .fold(0.0, f64::max);
    let omega_scale = probe_grid.iter().map(|&k| model.omega(k).abs()).fold(1.0, f64::max);
    report.checks.push(Check::at_most("dispersion_even", omega_odd, 1e-12 * omega_scale));

    // Odd part of |g|; g² is even exactly when this vanishes.
    let g_odd = probe_grid
        .iter()
        .map(|&k| 0.5 * (model.coupling(k).abs() - model.coupling(-k).abs()).abs())
        .fold(0.0, f64::max);
    let g_scale = probe_grid.iter().map(|&k| model.coupling(k).abs()).fold(f64::MIN_POSITIVE, f64::max);
    report.checks.push(Check::at_most("coupling_sq_even", g_odd, 1e-12 * g_scale));

    let mut by_abs: Vec<(f64, f64)> = probe_grid.iter().map(|&k| (k.abs(), model.omega(k))).collect();
    by_abs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut monotone_violation: f64 = 0.0;
    let mut strictly = true;
    for w in by_abs.windows(2) {
        if w[1].0 > w[0].0 {
            let step = w[1].1 - w[0].1;
            if step <= 0.0 {
                strictly = false;
                monotone_violation = monotone_violation.max(-step);
            }
        }
    }
    report.checks.push(Check::new(
        "dispersion_increasing_in_abs_k",
        monotone_violation,
        0.0,
        strictly,
        "omega must increase strictly with |k|",
    ));

    let m = model.threshold();
    let below = probe_grid.iter().map(|&k| (m - model.omega(k)).max(0.0)).fold(0.0, f64::max);
    report.checks.push(Check::at_most("dispersion_above_cutoff", below, 1e-12 * m.abs().max(1.0)));

    report.checks.push(low_pass_check(model, probe_grid));
    Ok(report)
}

/// Converged when one range doubling changes the integral by < 1e-8 relative;
/// gives up after 16 doublings.
fn low_pass_check(model: &WaveguideModel, probe_grid: &[f64]) -> Check {
    const REL: f64 = 1e-8;
    let mut k_max = probe_grid.iter().map(|k| k.abs()).fold(1.0, f64::max);
    let mut previous = match model.low_pass_integral(k_max) {
        Ok(v) => v,
        Err(e) => return Check::new("low_pass_finite", f64::INFINITY, REL, false, e.to_string()),
    };
    let mut last_change = f64::INFINITY;
    for _ in 0..16 {
        k_max *= 2.0;
        let current = match model.low_pass_integral(k_max) {
            Ok(v) => v,
            Err(e) => return Check::new("low_pass_finite", f64::INFINITY, REL, false, e.to_string()),
        };
        last_change = (current - previous).abs() / current.abs().max(f64::MIN_POSITIVE);
        if current == 0.0 || last_change <= REL {
            return Check::new("low_pass_finite", last_change, REL, true, format!("integral = {current:e} at |k| <= {k_max}"));
        }
        previous = current;
    }
    Check::new("low_pass_finite", last_change, REL, false, format!("still changing at |k| <= {k_max}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_coupling_model() {
        let m = make_rectangular_model(1.0, 5.0, 0.0).unwrap();
        assert_eq!(m.omega(0.0), 1.0);
        for k in [-3.0, 0.0, 0.7, 10.0] {
            assert_eq!(m.coupling(k), 0.0);
        }
    }

    #[test]
    fn rectangular_dispersion_value() {
        let m = make_rectangular_model(1.0, 2.0, 0.3).unwrap();
        assert!((m.omega(3.0) - 10f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(matches!(make_rectangular_model(0.0, 5.0, 0.1), Err(Error::Domain(_))));
        assert!(matches!(make_rectangular_model(1.0, -1.0, 0.1), Err(Error::Domain(_))));
        assert!(matches!(make_rectangular_model(1.0, 5.0, -0.1), Err(Error::Domain(_))));
    }

    #[test]
    fn analytic_derivatives_match_finite_differences() {
        let m = make_rectangular_model(1.0, 5.0, 0.1).unwrap();
        for k in [-2.0, -0.3, 0.0, 1.0, 2.5] {
            let a = m.omega_derivatives(k);
            let fd = finite_derivatives(&|x| m.omega(x), k);
            // The five-point third derivative carries an O(h²) ≈ 1e-6 error.
            let tol = [1e-12, 1e-9, 1e-7, 1e-5];
            for i in 0..4 {
                assert!((a[i] - fd[i]).abs() < tol[i], "omega deriv {i} at {k}: {} vs {}", a[i], fd[i]);
            }
            let g = m.coupling_sq_derivatives(k);
            let gfd = finite_derivatives(&|x| m.coupling_sq(x), k);
            for i in 0..3 {
                assert!((g[i] - gfd[i]).abs() < 1e-8, "g2 deriv {i} at {k}");
            }
        }
    }

    #[test]
    fn stable_difference_matches_naive() {
        let m = make_rectangular_model(1.0, 5.0, 0.1).unwrap();
        for (a, b) in [(1.0, 0.5), (2.0, -3.0), (0.1, 0.1000001)] {
            let naive = m.omega(a) - m.omega(b);
            assert!((m.omega_difference(a, b) - naive).abs() < 1e-12);
        }
    }

    #[test]
    fn emitter_config_validation() {
        let m = make_rectangular_model(1.0, 5.0, 0.1).unwrap();
        assert!(EmitterConfig::new(1.5, 3.0).validate(&m).is_ok());
        assert!(EmitterConfig::new(0.9, 3.0).validate(&m).is_err());
        assert!(EmitterConfig::new(1.5, 0.0).validate(&m).is_err());
    }

    #[test]
    fn inverse_omega_roundtrip() {
        let m = make_rectangular_model(1.0, 5.0, 0.1).unwrap();
        let k = m.inverse_omega(2f64.sqrt()).unwrap();
        assert!((k - 1.0).abs() < 1e-15);
        assert!(m.inverse_omega(0.5).is_none());
    }
}
