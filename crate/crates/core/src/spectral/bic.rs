//! Bound states embedded in the continuum (E > M).

use std::cell::RefCell;
use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::WaveguideModel;
use crate::quad::{integrate, QuadOptions};
use crate::roots::{find_root, sign_changes};

use super::integrals::level_shift_with;
use super::{cutoff, resonance_index, uniform_grid, ModeKind, Parity, SingleExcitationMode, SpectralOptions};

/// Resonant mode with its self-consistent emitter frequency ω0 = ω(k̄) − Σ.
///
/// `kbar` is nπ/d; the returned mode carries φ_A > 0 and the sampled photon
/// amplitude on the default grid.
pub fn required_omega0_for_bic(model: &WaveguideModel, d: f64, n: u32, opts: &SpectralOptions) -> Result<SingleExcitationMode> {
    if n == 0 {
        return Err(Error::Domain("resonance index n must be at least 1".into()));
    }
    if !(d > 0.0 && d.is_finite()) {
        return Err(Error::Domain(format!("emitter distance must be positive, got {d}")));
    }
    let kbar = n as f64 * PI / d;
    let energy = model.omega(kbar);
    mode_amplitudes(model, energy, kbar, n, d, None, opts)
}

/// Normalized resonant mode at (E, k̄, n, d).
///
/// The level shift fixes ω0; the normalization is computed independently as
/// ∫|φ(k)|² dk of the closed-form amplitude, so that 2|φ_A|² and
/// [`atomic_weight`](super::atomic_weight) are separate quadratures of the same
/// quantity. `k_grid` defaults to a uniform grid over the coupling range.
pub fn mode_amplitudes(
    model: &WaveguideModel,
    energy: f64,
    kbar: f64,
    n: u32,
    d: f64,
    k_grid: Option<&[f64]>,
    opts: &SpectralOptions,
) -> Result<SingleExcitationMode> {
    let found = resonance_index(kbar, d, opts.resonance_tol)?;
    if found != n {
        return Err(Error::Precondition(format!("k̄·d = {found}π does not match n = {n}")));
    }
    let e_res = model.omega(kbar);
    if (energy - e_res).abs() > 1e-12 * e_res.max(1.0) {
        return Err(Error::Precondition(format!("energy {energy} differs from ω(k̄) = {e_res}")));
    }
    let sigma = level_shift_with(model, kbar, d, opts)?;
    let mut warnings = Vec::new();
    let above = energy - model.threshold();
    if above < 10.0 * opts.abs_tol.sqrt() {
        warnings.push(format!("resonance sits {above:e} above the threshold; the band-edge integrands are steep"));
    }
    let parity = Parity::for_resonance(n);
    let mut mode = SingleExcitationMode {
        kind: ModeKind::Bic,
        parity,
        energy,
        omega0: energy - sigma.value,
        distance: d,
        kbar: Some(kbar),
        n: Some(n),
        phi_a: Complex64::new(1.0, 0.0),
        phi_b: Complex64::new(parity.sign(), 0.0),
        p_at: 1.0,
        k_grid: Vec::new(),
        phi_k: Vec::new(),
        warnings,
        model: model.clone(),
    };

    let field_norm = if model.lambda() == 0.0 {
        0.0
    } else {
        let k_max = cutoff(model, kbar, opts)?;
        let quad = QuadOptions::with_abs_tol(opts.abs_tol);
        let probe = &mode;
        integrate(
            |k| probe.amplitude(k).map(|a| a.norm_sqr()).unwrap_or(f64::NAN),
            -k_max,
            k_max,
            &[-kbar, 0.0, kbar],
            &quad,
        )?
        .value
    };
    if !field_norm.is_finite() {
        return Err(Error::Numerical("photon normalization is not finite".into()));
    }
    let norm = 2.0 + field_norm;
    let phi_a = norm.sqrt().recip();
    mode.phi_a = Complex64::new(phi_a, 0.0);
    mode.phi_b = Complex64::new(parity.sign() * phi_a, 0.0);
    mode.p_at = 2.0 / norm;

    let grid = match k_grid {
        Some(g) => g.to_vec(),
        None => {
            let k_max = if model.lambda() == 0.0 { 2.0 * kbar } else { cutoff(model, kbar, opts)? };
            uniform_grid(k_max, opts.grid_points)
        }
    };
    mode.phi_k = mode.sample(&grid)?;
    mode.k_grid = grid;
    Ok(mode)
}

/// A resonant mode found at fixed emitter frequency.
#[derive(Debug, Clone)]
pub struct BicSolution {
    pub distance: f64,
    pub mode: SingleExcitationMode,
    /// Further distances in the bracket that also satisfy the condition.
    pub other_roots: Vec<f64>,
}

/// Solve ω(nπ/d) − Σ(nπ/d, d) = ω0 for the distance d inside `d_bracket`.
///
/// The root nearest the bare-resonance guess nπ/k0 (with ω(k0) = ω0) is
/// returned; any others found in the bracket are listed. A bracket without a
/// sign change is reported as [`Error::NoSolution`].
pub fn solve_bic_fixed_frequency(
    model: &WaveguideModel,
    omega0: f64,
    n: u32,
    d_bracket: (f64, f64),
    opts: &SpectralOptions,
) -> Result<BicSolution> {
    if n == 0 {
        return Err(Error::Domain("resonance index n must be at least 1".into()));
    }
    let k0 = model
        .inverse_omega(omega0)
        .ok_or_else(|| Error::Domain(format!("ω0 = {omega0} is not above the threshold {}", model.threshold())))?;
    let (lo, hi) = if d_bracket.0 <= d_bracket.1 { d_bracket } else { (d_bracket.1, d_bracket.0) };
    if !(lo > 0.0 && hi.is_finite()) {
        return Err(Error::Domain(format!("distance bracket must be positive and finite, got [{lo}, {hi}]")));
    }
    let guess = n as f64 * PI / k0;

    let failure: RefCell<Option<Error>> = RefCell::new(None);
    let mismatch = |d: f64| -> f64 {
        let kbar = n as f64 * PI / d;
        match level_shift_with(model, kbar, d, opts) {
            Ok(s) => model.omega(kbar) - s.value - omega0,
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                f64::NAN
            }
        }
    };
    if model.lambda() == 0.0 {
        return finish(model, omega0, n, guess, Vec::new(), (lo, hi), opts);
    }

    let brackets = sign_changes(mismatch, lo, hi, opts.bracket_samples.max(1));
    if let Some(e) = failure.borrow_mut().take() {
        return Err(e);
    }
    if brackets.is_empty() {
        return Err(Error::NoSolution(format!(
            "no distance in [{lo}, {hi}] makes ω0 = {omega0} resonant with n = {n}"
        )));
    }
    let mut roots = Vec::with_capacity(brackets.len());
    for (a, b) in brackets {
        let r = find_root(mismatch, a, b, opts.root_ftol * omega0.abs().max(1.0));
        if let Some(e) = failure.borrow_mut().take() {
            return Err(e);
        }
        roots.push(r?.x);
    }
    roots.sort_by(|a, b| (a - guess).abs().total_cmp(&(b - guess).abs()));
    let best = roots.remove(0);
    finish(model, omega0, n, best, roots, (lo, hi), opts)
}

fn finish(
    model: &WaveguideModel,
    omega0: f64,
    n: u32,
    d: f64,
    other_roots: Vec<f64>,
    bracket: (f64, f64),
    opts: &SpectralOptions,
) -> Result<BicSolution> {
    if !(d >= bracket.0 && d <= bracket.1) {
        return Err(Error::NoSolution(format!(
            "the uncoupled resonance distance {d} lies outside [{}, {}]",
            bracket.0, bracket.1
        )));
    }
    let kbar = n as f64 * PI / d;
    let mut mode = mode_amplitudes(model, model.omega(kbar), kbar, n, d, None, opts)?;
    if !other_roots.is_empty() {
        mode.warnings.push(format!("{} further solution(s) in the bracket at d = {:?}", other_roots.len(), other_roots));
    }
    // The mode belongs to the requested emitter frequency.
    mode.omega0 = omega0;
    Ok(BicSolution { distance: d, mode, other_roots })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::make_rectangular_model;

    #[test]
    fn amplitude_is_continuous_at_resonance() {
        let m = make_rectangular_model(1.0, 2.0, 0.1).unwrap();
        let mode = required_omega0_for_bic(&m, PI / 2.0, 1, &SpectralOptions::default()).unwrap();
        let kbar = mode.kbar.unwrap();
        for k0 in [kbar, -kbar] {
            let at = mode.amplitude(k0).unwrap();
            for h in [1e-6, -1e-6] {
                let near = mode.amplitude(k0 + h).unwrap();
                assert!((near - at).norm() < 1e-5 * at.norm(), "{near} vs {at}");
            }
        }
    }

    #[test]
    fn even_resonance_is_antisymmetric() {
        let m = make_rectangular_model(1.0, 2.0, 0.1).unwrap();
        let mode = required_omega0_for_bic(&m, PI, 2, &SpectralOptions::default()).unwrap();
        assert_eq!(mode.parity, Parity::Antisymmetric);
        assert!((mode.phi_a + mode.phi_b).norm() < 1e-15);
    }

    #[test]
    fn fixed_frequency_round_trip() {
        let m = make_rectangular_model(1.0, 2.0, 0.1).unwrap();
        let opts = SpectralOptions::default();
        let d = 1.7;
        let target = required_omega0_for_bic(&m, d, 1, &opts).unwrap();
        let sol = solve_bic_fixed_frequency(&m, target.omega0, 1, (1.2, 2.4), &opts).unwrap();
        assert!((sol.distance - d).abs() < 1e-9, "{}", sol.distance);
    }

    #[test]
    fn empty_bracket_is_no_solution() {
        let m = make_rectangular_model(1.0, 2.0, 0.1).unwrap();
        let err = solve_bic_fixed_frequency(&m, 2.0, 1, (5.0, 6.0), &SpectralOptions::default()).unwrap_err();
        assert!(matches!(err, Error::NoSolution(_)));
    }
}
