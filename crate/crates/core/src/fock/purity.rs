//! Reduced emitter spectra and purities.

use serde::Serialize;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

use super::check_probability;
use super::logspace::{compensated_sum, ln_binomial_pmf, ln_choose, ln_fact, CompensatedSum};

/// Diagonal of ρ_A for |N⟩:
/// C_ℓ = Σ_m 2^{−m} C(N,m) C(m,ℓ) p^m (1−p)^{N−m}, ℓ = 0..=N.
///
/// Every term is formed in log space and the sum is compensated.
pub fn reduced_density_a(n: usize, p_at: f64) -> Result<Vec<f64>> {
    check_probability(p_at)?;
    let ln2 = std::f64::consts::LN_2;
    let c = (0..=n)
        .map(|l| {
            compensated_sum((l..=n).map(|m| (ln_binomial_pmf(n, m, p_at) + ln_choose(m, l) - m as f64 * ln2).exp()))
        })
        .collect();
    Ok(c)
}

/// Σ_ℓ C_ℓ².
pub fn purity_a(n: usize, p_at: f64) -> Result<f64> {
    let c = reduced_density_a(n, p_at)?;
    Ok(compensated_sum(c.iter().map(|x| x * x)))
}

/// Γ(N+½)/(√π N!), the purity of |N⟩ with all excitations in the emitters.
pub fn purity_closed_form(n: usize) -> f64 {
    (ln_gamma(n as f64 + 0.5) - 0.5 * std::f64::consts::PI.ln() - ln_fact(n)).exp()
}

/// C(2N,N)/4^N as the running product Π (2j−1)/(2j).
pub fn central_binomial_ratio(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, j| acc * (2 * j - 1) as f64 / (2 * j) as f64)
}

/// Leading large-N behaviour 1/√(πN).
pub fn purity_asymptote(n: usize) -> f64 {
    1.0 / (std::f64::consts::PI * n as f64).sqrt()
}

/// Neglected geometric weight allowed by [`thermal_purity`].
pub const THERMAL_TAIL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ThermalPurity {
    pub purity: f64,
    /// Mean bound-mode occupation q/(1−q).
    pub n_th: f64,
    pub n_max: usize,
    /// Weight q^{N_max+1} of the dropped sectors.
    pub tail: f64,
}

/// Purity of A for the Gibbs mixture Σ_N (1−q) q^N |N⟩⟨N|, q = e^{−βE}.
///
/// Sectors above `n_max` are dropped; their total weight q^{n_max+1} must stay
/// below [`THERMAL_TAIL`], otherwise a truncation error names the required
/// `n_max`.
pub fn thermal_purity(beta_e: f64, p_at: f64, n_max: usize) -> Result<ThermalPurity> {
    check_probability(p_at)?;
    if !(beta_e > 0.0 && beta_e.is_finite()) {
        return Err(Error::Domain(format!("βE must be positive and finite, got {beta_e}")));
    }
    let ln_q = -beta_e;
    let q = ln_q.exp();
    let tail = ((n_max + 1) as f64 * ln_q).exp();
    if tail >= THERMAL_TAIL {
        // Smallest N_max with (N_max + 1)·βE > −ln(tail).
        let required = (THERMAL_TAIL.ln() / ln_q).floor() as usize;
        return Err(Error::Truncation {
            reason: format!("geometric tail q^(N_max+1) = {tail:e} at q = {q}"),
            required,
        });
    }
    let ln_one_minus_q = (-q).ln_1p();
    let mut rho: Vec<CompensatedSum> = vec![CompensatedSum::default(); n_max + 1];
    let ln2 = std::f64::consts::LN_2;
    for n in 0..=n_max {
        let ln_w = ln_one_minus_q + n as f64 * ln_q;
        for m in 0..=n {
            let ln_nm = ln_w + ln_binomial_pmf(n, m, p_at) - m as f64 * ln2;
            if ln_nm == f64::NEG_INFINITY {
                continue;
            }
            for (l, acc) in rho.iter_mut().enumerate().take(m + 1) {
                acc.add((ln_nm + ln_choose(m, l)).exp());
            }
        }
    }
    let purity = compensated_sum(rho.iter().map(|c| c.value().powi(2)));
    Ok(ThermalPurity { purity, n_th: q / (1.0 - q), n_max, tail })
}
