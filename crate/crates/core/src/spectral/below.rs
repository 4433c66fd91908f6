//! Bound states below the propagation threshold (E < M).

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::WaveguideModel;
use crate::quad::{integrate, QuadOptions};
use crate::roots::find_root;

use super::{cutoff, uniform_grid, ModeKind, Parity, SingleExcitationMode, SpectralOptions};

/// Momentum scale on which E − ω(k) varies near the band edge.
fn edge_scale(model: &WaveguideModel, energy: f64) -> f64 {
    let m = model.threshold();
    (2.0 * m.abs().max(1e-300) * (m - energy).max(0.0)).sqrt()
}

fn breakpoints(model: &WaveguideModel, energy: f64) -> Vec<f64> {
    let kappa = edge_scale(model, energy);
    let mut b = vec![0.0];
    for s in [1.0, 10.0] {
        if kappa > 0.0 {
            b.push(s * kappa);
            b.push(-s * kappa);
        }
    }
    b
}

/// ∫ g² (1 + σ cos kd) / (E − ω)^p dk for p = 1, 2.
///
/// Near the edge the integral grows like (M − E)^{1/2 − p}, so the absolute
/// tolerance is relaxed to a relative one once the value exceeds order one.
fn parity_integral(model: &WaveguideModel, energy: f64, d: f64, sigma: f64, power: i32, k_max: f64, tol: f64) -> Result<f64> {
    let opts = QuadOptions { rel_tol: 1e-13, ..QuadOptions::with_abs_tol(tol) };
    let m = model.threshold();
    let edge_offset = model.omega(0.0) - m;
    let f = |k: f64| {
        // (E − M) − (ω − M); both terms are small near the edge.
        let den = (energy - m) - model.omega_difference(k, 0.0) - edge_offset;
        // 1 ± cos kd in half-angle form: no cancellation at small k.
        let half = 0.5 * k * d;
        let form = if sigma > 0.0 { half.cos() } else { half.sin() };
        model.coupling_sq(k) * 2.0 * form * form / den.powi(power)
    };
    Ok(integrate(f, -k_max, k_max, &breakpoints(model, energy), &opts)?.value)
}

/// Bound states with E < M for the requested parity sector.
///
/// The self-consistency function f(E) = E − ω0 − ∫ g²(1 ± cos kd)/(E − ω) dk
/// is strictly increasing below the threshold, so each parity holds at most
/// one state. The list is empty when there is none; in particular an
/// antisymmetric state needs the band-edge integral to exceed M − ω0.
pub fn solve_below_threshold(
    model: &WaveguideModel,
    omega0: f64,
    d: f64,
    parity: Parity,
    opts: &SpectralOptions,
) -> Result<Vec<SingleExcitationMode>> {
    opts.validate()?;
    let m = model.threshold();
    if !(omega0 > m) {
        return Err(Error::Precondition(format!("ω0 = {omega0} must lie above the threshold {m}")));
    }
    if !(d > 0.0 && d.is_finite()) {
        return Err(Error::Domain(format!("emitter distance must be positive, got {d}")));
    }
    if model.lambda() == 0.0 {
        return Ok(Vec::new());
    }
    let sigma = parity.sign();
    let k_max = cutoff(model, 0.0, opts)?;
    let tol = opts.abs_tol;
    let f = |e: f64| -> Result<f64> { Ok(e - omega0 - parity_integral(model, e, d, sigma, 1, k_max, tol)?) };

    // Upper end: f(M − ε) > 0 for some small ε, unless the band-edge integral
    // stays finite and too small.
    let scale = m.abs().max(1.0);
    let mut hi = None;
    let mut eps = 1e-2 * scale;
    while eps >= 1e-12 * scale {
        let e = m - eps;
        if f(e)? > 0.0 {
            hi = Some(e);
            break;
        }
        eps *= 0.1;
    }
    let Some(hi) = hi else {
        return Ok(Vec::new());
    };
    let mut step = scale;
    let mut lo = hi - step;
    while f(lo)? >= 0.0 {
        step *= 2.0;
        lo = hi - step;
        if step > 1e12 * scale {
            return Err(Error::Root("could not bracket the bound state from below".into()));
        }
    }

    let failure = std::cell::RefCell::new(None);
    let g = |e: f64| match f(e) {
        Ok(v) => v,
        Err(err) => {
            failure.borrow_mut().get_or_insert(err);
            f64::NAN
        }
    };
    let root = find_root(g, lo, hi, opts.root_ftol * omega0.abs().max(1.0));
    if let Some(err) = failure.into_inner() {
        return Err(err);
    }
    let energy = root?.x;

    let weight_integral = parity_integral(model, energy, d, sigma, 2, k_max, tol)?;
    let p_at = 1.0 / (1.0 + weight_integral);
    let phi_a = (0.5 * p_at).sqrt();
    let mut warnings = Vec::new();
    if m - energy < 10.0 * tol.sqrt() {
        warnings.push(format!("bound state sits {:e} below the threshold; it is barely localized", m - energy));
    }
    let mut mode = SingleExcitationMode {
        kind: ModeKind::BelowThreshold,
        parity,
        energy,
        omega0,
        distance: d,
        kbar: None,
        n: None,
        phi_a: Complex64::new(phi_a, 0.0),
        phi_b: Complex64::new(sigma * phi_a, 0.0),
        p_at,
        k_grid: Vec::new(),
        phi_k: Vec::new(),
        warnings,
        model: model.clone(),
    };
    let grid = uniform_grid(k_max, opts.grid_points);
    mode.phi_k = mode.sample(&grid)?;
    mode.k_grid = grid;
    Ok(vec![mode])
}
