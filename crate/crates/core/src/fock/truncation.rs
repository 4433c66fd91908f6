//! Effect of capping each emitter at N̄ levels on the bound state |N⟩.

use num_complex::Complex64;
use serde::Serialize;

use super::{check_probability, parity_sign, TwoModeKet};
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MissingComponent {
    /// Emitter excitation number of the affected term.
    pub m: usize,
    pub l_a: u32,
    pub l_b: u32,
    /// Normalized amplitude the component carries without the cap.
    pub amplitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TruncationReport {
    pub n: usize,
    pub n_bar: usize,
    /// True when every emitter component of |N⟩ survives the cap.
    pub expressible: bool,
    /// Largest amplitude change of any normalized ψ^(m), m ≤ N.
    pub deviation: f64,
    /// First lost component, scanning m downward from N and ℓ_A downward.
    pub missing: Option<MissingComponent>,
}

/// Rebuild every ψ^(m), m ≤ N, with creation operators restricted to
/// occupations ≤ `n_bar` and compare with the unrestricted construction.
///
/// `p_at` only validates the input: the comparison is structural and holds for
/// every weight distribution of the expansion.
pub fn truncation_check(n: usize, n_bar: usize, p_at: f64, n_parity: u32) -> Result<TruncationReport> {
    check_probability(p_at)?;
    let s = Complex64::new(parity_sign(n_parity), 0.0);
    let one = Complex64::new(1.0, 0.0);
    let mut deviation: f64 = 0.0;
    let mut missing = None;
    for m in (0..=n).rev() {
        let (free, _) = TwoModeKet::collective_power(s, one, m as u32, None);
        let (capped, _) = TwoModeKet::collective_power(s, one, m as u32, Some(n_bar as u32));
        let norm = free.norm_sqr().sqrt();
        let mut lost: Vec<((u32, u32), f64)> = Vec::new();
        for ((a, b), c) in free.terms() {
            let diff = (c - capped.coefficient(a, b)).norm() / norm;
            deviation = deviation.max(diff);
            if diff > 0.0 {
                lost.push(((a, b), c.re / norm));
            }
        }
        if missing.is_none() {
            if let Some(&((a, b), amp)) = lost.iter().max_by_key(|((a, _), _)| *a) {
                missing = Some(MissingComponent { m, l_a: a, l_b: b, amplitude: amp });
            }
        }
    }
    Ok(TruncationReport { n, n_bar, expressible: missing.is_none(), deviation, missing })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cap_equal_to_n_is_harmless() {
        let r = truncation_check(2, 2, 0.9, 1).unwrap();
        assert!(r.expressible);
        assert_eq!(r.deviation, 0.0);
        assert!(truncation_check(0, 0, 0.5, 1).unwrap().expressible);
    }

    #[test]
    fn cap_below_n_names_the_lost_component() {
        let r = truncation_check(2, 1, 0.9, 2).unwrap();
        assert!(!r.expressible);
        let miss = r.missing.unwrap();
        assert_eq!((miss.m, miss.l_a, miss.l_b), (2, 2, 0));
        assert!((miss.amplitude - 0.5).abs() < 1e-15);
    }
}
