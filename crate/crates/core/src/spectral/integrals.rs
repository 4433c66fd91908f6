//! Momentum integrals of the resonant mode.
//!
//! Both integrands have removable singularities at k = ±k̄. Outside a small
//! window |k ∓ k̄| < δ they are evaluated in cancellation-free form and handed
//! to adaptive quadrature; inside the window a fourth-order Taylor expansion
//! is integrated in closed form.

use crate::error::{Error, Result};
use crate::model::WaveguideModel;
use crate::quad::{integrate, Estimate, QuadOptions};

use super::{cutoff, resonance_index, SpectralOptions};

/// 2 sin²(u d / 2) = 1 − cos(u d), the resonant numerator in terms of the
/// offset u = k ∓ k̄ from the nearer resonance.
fn resonant_numerator(k: f64, kbar: f64, d: f64) -> f64 {
    let u = if (k - kbar).abs() <= (k + kbar).abs() { k - kbar } else { k + kbar };
    let s = (0.5 * u * d).sin();
    2.0 * s * s
}

/// Coefficients of a truncated power series in u.
type Series3 = [f64; 3];

/// q = n / d to second order.
fn divide(n: Series3, d: Series3) -> Series3 {
    let q0 = n[0] / d[0];
    let q1 = (n[1] - q0 * d[1]) / d[0];
    let q2 = (n[2] - q0 * d[2] - q1 * d[1]) / d[0];
    [q0, q1, q2]
}

struct Patch {
    /// g² expansion coefficients [g², (g²)′, (g²)″/2] at k0.
    g: Series3,
    /// ω expansion coefficients [ω′, ω″/2, ω‴/6] at k0.
    w: Series3,
    /// 2 sin²(ud/2) = a2 u² + a4 u⁴ + …
    a2: f64,
    a4: f64,
}

impl Patch {
    fn at(model: &WaveguideModel, k0: f64, d: f64) -> Self {
        let [_, w1, w2, w3] = model.omega_derivatives(k0);
        let [g0, g1, g2] = model.coupling_sq_derivatives(k0);
        Self { g: [g0, g1, 0.5 * g2], w: [w1, 0.5 * w2, w3 / 6.0], a2: 0.5 * d * d, a4: -d.powi(4) / 24.0 }
    }

    /// Numerator g²·2sin²(ud/2) divided by u².
    fn numerator(&self) -> Series3 {
        let g = self.g;
        [g[0] * self.a2, g[1] * self.a2, g[2] * self.a2 + g[0] * self.a4]
    }

    /// ∫_{−δ}^{δ} N(u) / (ω(k̄) − ω(k0 + u)) du.
    fn level_shift(&self, delta: f64) -> f64 {
        // Denominator −(w1 u + w2 u² + w3 u³), stripped of one power of u; the
        // quotient times u is odd at leading order.
        let den = [-self.w[0], -self.w[1], -self.w[2]];
        let q = divide(self.numerator(), den);
        2.0 / 3.0 * delta.powi(3) * q[1]
    }

    /// ∫_{−δ}^{δ} N(u) / (ω(k̄) − ω(k0 + u))² du.
    fn weight(&self, delta: f64) -> f64 {
        let w = self.w;
        let den = [w[0] * w[0], 2.0 * w[0] * w[1], w[1] * w[1] + 2.0 * w[0] * w[2]];
        let q = divide(self.numerator(), den);
        2.0 * delta * q[0] + 2.0 / 3.0 * delta.powi(3) * q[2]
    }
}

struct Setup {
    kbar: f64,
    delta: f64,
    k_max: f64,
    quad: QuadOptions,
}

fn setup(model: &WaveguideModel, kbar: f64, d: f64, opts: &SpectralOptions) -> Result<Setup> {
    opts.validate()?;
    resonance_index(kbar, d, opts.resonance_tol)?;
    let delta = opts.patch_fraction * kbar;
    let k_max = cutoff(model, kbar, opts)?;
    if k_max <= kbar + delta {
        return Err(Error::Domain(format!("integration cutoff {k_max} does not enclose the resonance k̄ = {kbar}")));
    }
    // Three quadrature pieces share the tolerance budget.
    let quad = QuadOptions::with_abs_tol(opts.abs_tol / 3.0);
    Ok(Setup { kbar, delta, k_max, quad })
}

/// Sum of adaptive integrals over [−K, −k̄−δ], [−k̄+δ, k̄−δ], [k̄+δ, K].
fn outer_integral<F: Fn(f64) -> f64>(f: F, s: &Setup) -> Result<Estimate<f64>> {
    let (kb, dl, km) = (s.kbar, s.delta, s.k_max);
    let pieces = [(-km, -kb - dl, -kb - dl), (-kb + dl, kb - dl, 0.0), (kb + dl, km, kb + dl)];
    let mut total = Estimate { value: 0.0, error: 0.0, evaluations: 0 };
    for (a, b, brk) in pieces {
        // Extra break at twice the resonance pulls refinement towards the
        // structured region on the outer pieces.
        let breaks = [brk, 2.0 * kb, -2.0 * kb];
        let e = integrate(&f, a, b, &breaks, &s.quad)?;
        total.value += e.value;
        total.error += e.error;
        total.evaluations += e.evaluations;
    }
    Ok(total)
}

/// Level shift Σ(k̄, d) = ∫ g² [1 − (−1)ⁿ cos kd] / (ω(k̄) − ω(k)) dk.
///
/// Requires k̄·d = nπ. The principal value is regular: the numerator vanishes
/// to second order at ±k̄.
pub fn level_shift(model: &WaveguideModel, kbar: f64, d: f64) -> Result<f64> {
    Ok(level_shift_with(model, kbar, d, &SpectralOptions::default())?.value)
}

pub fn level_shift_with(model: &WaveguideModel, kbar: f64, d: f64, opts: &SpectralOptions) -> Result<Estimate<f64>> {
    let s = setup(model, kbar, d, opts)?;
    if model.lambda() == 0.0 {
        return Ok(Estimate { value: 0.0, error: 0.0, evaluations: 0 });
    }
    let f = |k: f64| {
        let den = model.omega_difference(kbar, k);
        model.coupling_sq(k) * resonant_numerator(k, kbar, d) / den
    };
    let mut est = outer_integral(f, &s)?;
    for k0 in [kbar, -kbar] {
        est.value += Patch::at(model, k0, d).level_shift(s.delta);
    }
    // Truncation of the patch series is O(δ⁵) relative; fold a bound in.
    est.error += patch_truncation(model, kbar, d, s.delta);
    Ok(est)
}

/// Emitter weight p_at = 1 / (1 + ∫ g² [1 − (−1)ⁿ cos kd] / (ω(k̄) − ω(k))² dk).
pub fn atomic_weight(model: &WaveguideModel, kbar: f64, d: f64) -> Result<f64> {
    Ok(atomic_weight_with(model, kbar, d, &SpectralOptions::default())?.value)
}

/// As [`atomic_weight`], with the error estimate propagated to p_at.
pub fn atomic_weight_with(model: &WaveguideModel, kbar: f64, d: f64, opts: &SpectralOptions) -> Result<Estimate<f64>> {
    let s = setup(model, kbar, d, opts)?;
    if model.lambda() == 0.0 {
        return Ok(Estimate { value: 1.0, error: 0.0, evaluations: 0 });
    }
    let f = |k: f64| {
        let den = model.omega_difference(kbar, k);
        model.coupling_sq(k) * resonant_numerator(k, kbar, d) / (den * den)
    };
    let mut est = outer_integral(f, &s)?;
    for k0 in [kbar, -kbar] {
        est.value += Patch::at(model, k0, d).weight(s.delta);
    }
    let x = est.value;
    let p = 1.0 / (1.0 + x);
    Ok(Estimate { value: p, error: est.error * p * p, evaluations: est.evaluations })
}

fn patch_truncation(model: &WaveguideModel, kbar: f64, d: f64, delta: f64) -> f64 {
    // Size of the dropped u⁵ term relative to the retained u³ term.
    let g2 = model.coupling_sq(kbar);
    let v = model.group_velocity(kbar).abs().max(f64::MIN_POSITIVE);
    let scale = 1.0 / kbar.abs().max(d.recip()).max(1.0);
    g2 * d * d / v * delta.powi(3) * (delta / scale).powi(2)
}
