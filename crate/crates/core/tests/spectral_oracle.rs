//! Resonant and below-threshold modes checked against independent oracles.
//!
//! The dense oracle places ±k̄ on grid nodes, uses the naive cosine numerator
//! and the naive frequency difference, and substitutes the analytic limit only
//! on the two resonant nodes. The integrands are analytic and vanish at the
//! domain ends, so the trapezoidal rule converges faster than any power of the
//! spacing; the frozen values below are its output at 4000 nodes per k̄.

use std::f64::consts::PI;

use num_complex::Complex64;
use waveguide_bic::error::Error;
use waveguide_bic::model::make_rectangular_model;
use waveguide_bic::spectral::{
    atomic_weight, atomic_weight_with, level_shift, level_shift_with, required_omega0_for_bic, residuals,
    solve_below_threshold, solve_bic_fixed_frequency, Parity, SpectralOptions,
};
use waveguide_bic::WaveguideModel;

struct Dense {
    level_shift: f64,
    weight_integral: f64,
}

fn dense_oracle(m: &WaveguideModel, kbar: f64, d: f64, n: u32, per_kbar: usize, k_max: f64) -> Dense {
    let h = kbar / per_kbar as f64;
    let nodes = (k_max / h).ceil() as i64;
    let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
    let e = (kbar * kbar + 1.0).sqrt();
    let v = kbar / e;
    let (mut ls, mut w) = (0.0, 0.0);
    for j in -nodes..=nodes {
        let k = j as f64 * h;
        let g2 = m.coupling_sq(k);
        if j.unsigned_abs() as usize == per_kbar {
            w += g2 * d * d / (2.0 * v * v);
            continue;
        }
        let num = 1.0 - sign * (k * d).cos();
        let den = e - (k * k + 1.0).sqrt();
        ls += g2 * num / den;
        w += g2 * num / (den * den);
    }
    Dense { level_shift: ls * h, weight_integral: w * h }
}

// (k_c, λ, k̄, d, n, Σ, p_at)
const FROZEN: [(f64, f64, f64, f64, u32, f64, f64); 4] = [
    (5.0, 0.1, 1.0, PI, 1, 3.096_517_854_999_481_3e-2, 7.906_480_470_425_080_2e-1),
    (5.0, 0.1, 2.0, PI, 2, 2.498_594_078_322_478_2e-2, 9.206_971_370_485_099_7e-1),
    (5.0, 0.1, 3.0, PI, 3, 2.012_002_812_279_120_9e-2, 9.622_766_559_496_235_3e-1),
    (2.0, 0.1, 2.0, PI / 2.0, 1, 2.642_709_800_664_798_7e-2, 9.730_530_517_818_202_2e-1),
];

#[test]
fn dense_oracle_reproduces_frozen_values() {
    for &(kc, lam, kbar, d, n, sigma, p) in &FROZEN {
        let m = make_rectangular_model(1.0, kc, lam).unwrap();
        let o = dense_oracle(&m, kbar, d, n, 4000, 40.0);
        assert!((o.level_shift - sigma).abs() < 1e-15);
        assert!((1.0 / (1.0 + o.weight_integral) - p).abs() < 1e-15);
    }
}

#[test]
fn level_shift_and_weight_match_dense_oracle() {
    for &(kc, lam, kbar, d, _, sigma, p) in &FROZEN {
        let m = make_rectangular_model(1.0, kc, lam).unwrap();
        let ls = level_shift(&m, kbar, d).unwrap();
        let pa = atomic_weight(&m, kbar, d).unwrap();
        assert!((ls - sigma).abs() < 1e-8, "Σ {ls} vs {sigma}");
        assert!((pa - p).abs() < 1e-8, "p_at {pa} vs {p}");
    }
}

#[test]
fn two_routes_to_atomic_weight_agree() {
    let opts = SpectralOptions::default();
    for &(kc, lam, kbar, d, n, _, _) in &FROZEN {
        let m = make_rectangular_model(1.0, kc, lam).unwrap();
        let mode = required_omega0_for_bic(&m, d, n, &opts).unwrap();
        let direct = atomic_weight(&m, kbar, d).unwrap();
        assert!((mode.p_at - direct).abs() < 1e-8);
        assert!((mode.p_at - 2.0 * mode.phi_a.norm_sqr()).abs() < 1e-15);
    }
}

#[test]
fn level_shift_is_quadratic_in_coupling() {
    let m1 = make_rectangular_model(1.0, 5.0, 0.05).unwrap();
    let m2 = make_rectangular_model(1.0, 5.0, 0.1).unwrap();
    let a = level_shift(&m1, 1.0, PI).unwrap();
    let b = level_shift(&m2, 1.0, PI).unwrap();
    assert!((b / a - 4.0).abs() < 4e-10, "{}", b / a);
}

#[test]
fn uncoupled_resonance() {
    let m = make_rectangular_model(1.0, 5.0, 0.0).unwrap();
    let mode = required_omega0_for_bic(&m, PI, 1, &SpectralOptions::default()).unwrap();
    assert_eq!(mode.omega0, 2f64.sqrt());
    assert_eq!(mode.p_at, 1.0);
    assert!((mode.phi_a.re - 0.5f64.sqrt()).abs() < 1e-15);
    assert!(mode.phi_k.iter().all(|z| *z == Complex64::new(0.0, 0.0)));
    let r = residuals(&mode, &SpectralOptions::default()).unwrap();
    assert_eq!((r.emitter_a, r.emitter_b, r.field_sup), (0.0, 0.0, 0.0));
}

#[test]
fn second_resonance_is_antisymmetric() {
    let m = make_rectangular_model(1.0, 5.0, 0.1).unwrap();
    let mode = required_omega0_for_bic(&m, PI, 2, &SpectralOptions::default()).unwrap();
    assert_eq!(mode.kbar, Some(2.0));
    assert_eq!(mode.energy, 5f64.sqrt());
    assert_eq!(mode.phi_a, -mode.phi_b);
}

#[test]
fn normalization_by_dense_sum() {
    let m = make_rectangular_model(1.0, 5.0, 0.1).unwrap();
    let mode = required_omega0_for_bic(&m, PI, 1, &SpectralOptions::default()).unwrap();
    // Trapezoid over the closed-form amplitude; φ is analytic across ±k̄.
    let h = 1e-3;
    let nodes = (40.0 / h) as i64;
    let field: f64 = (-nodes..=nodes).map(|j| mode.amplitude(j as f64 * h).unwrap().norm_sqr()).sum::<f64>() * h;
    let total = mode.phi_a.norm_sqr() + mode.phi_b.norm_sqr() + field;
    assert!((total - 1.0).abs() < 1e-8, "{total}");
}

#[test]
fn resonant_limit_matches_extrapolation() {
    let m = make_rectangular_model(1.0, 5.0, 0.1).unwrap();
    let mode = required_omega0_for_bic(&m, PI, 1, &SpectralOptions::default()).unwrap();
    for k0 in [1.0, -1.0] {
        let at = mode.amplitude(k0).unwrap();
        // Symmetric Richardson combination of samples at ±h, ±2h.
        let h = 1e-6;
        let f = |x: f64| -> Complex64 {
            let den = mode.energy - m.omega(x);
            (mode.phi_a + mode.phi_b * Complex64::from_polar(1.0, -x * PI)) * m.coupling(x) / den
        };
        let s1 = (f(k0 + h) + f(k0 - h)) * 0.5;
        let s2 = (f(k0 + 2.0 * h) + f(k0 - 2.0 * h)) * 0.5;
        let extrapolated = (s1 * 4.0 - s2) / 3.0;
        assert!((extrapolated - at).norm() < 1e-6, "{extrapolated} vs {at}");
        assert!(at.re.abs() < 1e-18, "limit is purely imaginary: {at}");
    }
}

#[test]
fn residual_triple_across_couplings_and_indices() {
    let opts = SpectralOptions::default();
    for lam in [0.025, 0.05, 0.1] {
        let m = make_rectangular_model(1.0, 5.0, lam).unwrap();
        for n in 1..=3 {
            let mode = required_omega0_for_bic(&m, PI, n, &opts).unwrap();
            let r = residuals(&mode, &opts).unwrap();
            assert!(r.emitter_a <= 1e-10 && r.emitter_b <= 1e-10 && r.field_sup <= 1e-12, "λ={lam} n={n}: {r:?}");
            assert_eq!(mode.phi_a - mode.parity.sign() * mode.phi_b, Complex64::new(0.0, 0.0));
        }
    }
}

#[test]
fn perturbed_energy_shows_linear_residual() {
    let m = make_rectangular_model(1.0, 5.0, 0.1).unwrap();
    let opts = SpectralOptions::default();
    let mut mode = required_omega0_for_bic(&m, PI, 1, &opts).unwrap();
    mode.energy += 1e-4;
    let r = residuals(&mode, &opts).unwrap();
    let expected = 1e-4 * mode.phi_a.norm();
    assert!((r.emitter_a - expected).abs() < 1e-3 * expected, "{} vs {expected}", r.emitter_a);
}

#[test]
fn patch_width_and_cutoff_independence() {
    let m = make_rectangular_model(1.0, 5.0, 0.1).unwrap();
    let base = SpectralOptions::default();
    let wide = SpectralOptions { patch_fraction: 2.0 * base.patch_fraction, ..base };
    let far = SpectralOptions { cutoff_factor: 2.0, ..base };
    for (kbar, d) in [(1.0, PI), (3.0, PI)] {
        let a = level_shift_with(&m, kbar, d, &base).unwrap().value;
        assert!((a - level_shift_with(&m, kbar, d, &wide).unwrap().value).abs() < 1e-8);
        assert!((a - level_shift_with(&m, kbar, d, &far).unwrap().value).abs() < 1e-10);
        let p = atomic_weight_with(&m, kbar, d, &base).unwrap().value;
        assert!((p - atomic_weight_with(&m, kbar, d, &wide).unwrap().value).abs() < 1e-8);
        assert!((p - atomic_weight_with(&m, kbar, d, &far).unwrap().value).abs() < 1e-10);
    }
}

#[test]
fn halving_tolerance_stays_within_error_estimate() {
    let m = make_rectangular_model(1.0, 5.0, 0.1).unwrap();
    let base = SpectralOptions::default();
    let tight = SpectralOptions { abs_tol: 0.5 * base.abs_tol, ..base };
    let a = level_shift_with(&m, 1.0, PI, &base).unwrap();
    let b = level_shift_with(&m, 1.0, PI, &tight).unwrap();
    assert!((a.value - b.value).abs() <= a.error, "{} > {}", (a.value - b.value).abs(), a.error);
    let a = atomic_weight_with(&m, 1.0, PI, &base).unwrap();
    let b = atomic_weight_with(&m, 1.0, PI, &tight).unwrap();
    assert!((a.value - b.value).abs() <= a.error);
}

#[test]
fn non_resonant_distance_is_rejected() {
    let m = make_rectangular_model(1.0, 5.0, 0.1).unwrap();
    assert!(matches!(level_shift(&m, 1.0, 3.0), Err(Error::Precondition(_))));
}

#[test]
fn fixed_frequency_uncoupled_limit() {
    let m = make_rectangular_model(1.0, 5.0, 0.0).unwrap();
    let sol = solve_bic_fixed_frequency(&m, 2f64.sqrt(), 1, (0.8 * PI, 1.2 * PI), &SpectralOptions::default()).unwrap();
    assert!((sol.distance - PI).abs() < 1e-15);
    assert_eq!(sol.mode.p_at, 1.0);
}

fn log_log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let mx = lx.iter().sum::<f64>() / lx.len() as f64;
    let my = ly.iter().sum::<f64>() / ly.len() as f64;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

#[test]
fn fixed_frequency_distance_shift_is_quadratic() {
    let opts = SpectralOptions::default();
    let lams = [0.025, 0.05, 0.1];
    let shifts: Vec<f64> = lams
        .iter()
        .map(|&lam| {
            let m = make_rectangular_model(1.0, 5.0, lam).unwrap();
            let sol = solve_bic_fixed_frequency(&m, 2f64.sqrt(), 1, (0.8 * PI, 1.2 * PI), &opts).unwrap();
            let r = residuals(&sol.mode, &opts).unwrap();
            assert!(r.max() <= 1e-10, "{r:?}");
            (sol.distance - PI).abs()
        })
        .collect();
    let slope = log_log_slope(&lams, &shifts);
    assert!((slope - 2.0).abs() < 0.05, "slope {slope}");
}

#[test]
fn fixed_frequency_third_resonance_is_symmetric() {
    let m = make_rectangular_model(1.0, 5.0, 0.1).unwrap();
    let sol = solve_bic_fixed_frequency(&m, 2f64.sqrt(), 3, (2.7 * PI, 3.3 * PI), &SpectralOptions::default()).unwrap();
    // The O(λ²) shift is a few percent of 3π at λ = 0.1.
    assert!((sol.distance / (3.0 * PI) - 1.0).abs() < 0.05, "{}", sol.distance);
    assert_eq!(sol.mode.parity, Parity::Symmetric);
    assert_eq!(sol.mode.phi_a, sol.mode.phi_b);
}

#[test]
fn atomic_weight_drops_toward_threshold() {
    let m = make_rectangular_model(1.0, 5.0, 0.1).unwrap();
    let ds = [PI, 2.0 * PI, 4.0 * PI, 8.0 * PI, 16.0 * PI];
    let ps: Vec<f64> = ds.iter().map(|&d| atomic_weight(&m, PI / d, d).unwrap()).collect();
    assert!(ps.windows(2).all(|w| w[1] < w[0]), "{ps:?}");
}

#[test]
fn below_threshold_states_for_strong_coupling() {
    let m = make_rectangular_model(1.0, 5.0, 0.5).unwrap();
    let opts = SpectralOptions::default();
    for parity in [Parity::Symmetric, Parity::Antisymmetric] {
        let modes = solve_below_threshold(&m, 1.05, 3.0, parity, &opts).unwrap();
        assert_eq!(modes.len(), 1, "{parity:?}");
        let mode = &modes[0];
        assert!(mode.energy < 1.0);
        let r = residuals(mode, &opts).unwrap();
        assert!(r.max() <= 1e-10, "{parity:?}: {r:?}");
    }
}

#[test]
fn below_threshold_parities_merge_at_large_distance() {
    let m = make_rectangular_model(1.0, 5.0, 0.5).unwrap();
    let opts = SpectralOptions::default();
    let d = 1e3 / 5.0;
    let s = solve_below_threshold(&m, 1.05, d, Parity::Symmetric, &opts).unwrap();
    let a = solve_below_threshold(&m, 1.05, d, Parity::Antisymmetric, &opts).unwrap();
    assert!((s[0].energy - a[0].energy).abs() <= 1e-6, "{} vs {}", s[0].energy, a[0].energy);
}
