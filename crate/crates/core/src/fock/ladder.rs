//! Two-mode bosonic kets built from creation operators.
//!
//! b†|ℓ⟩ = √(ℓ+1)|ℓ+1⟩ is the only rule used here; every emitter state in
//! this crate is checked against kets grown this way.

use std::collections::BTreeMap;

use num_complex::Complex64;

/// Sparse ket Σ c_{ℓ_A ℓ_B} |ℓ_A, ℓ_B⟩.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoModeKet {
    terms: BTreeMap<(u32, u32), Complex64>,
}

/// A component pushed past a per-mode occupation cap.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DroppedTerm {
    pub l_a: u32,
    pub l_b: u32,
    pub coefficient: Complex64,
}

impl TwoModeKet {
    pub fn vacuum() -> Self {
        let mut terms = BTreeMap::new();
        terms.insert((0, 0), Complex64::new(1.0, 0.0));
        Self { terms }
    }

    pub fn coefficient(&self, l_a: u32, l_b: u32) -> Complex64 {
        self.terms.get(&(l_a, l_b)).copied().unwrap_or_default()
    }

    pub fn terms(&self) -> impl Iterator<Item = ((u32, u32), Complex64)> + '_ {
        self.terms.iter().map(|(&k, &v)| (k, v))
    }

    pub fn norm_sqr(&self) -> f64 {
        self.terms.values().map(|c| c.norm_sqr()).sum()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self { terms: self.terms.iter().map(|(&k, &v)| (k, v * factor)).collect() }
    }

    /// Apply c_A b_A† + c_B b_B†, truncating each mode at `cap`.
    ///
    /// Terms that would exceed the cap are returned with the coefficient they
    /// would have carried.
    pub fn create(&self, c_a: Complex64, c_b: Complex64, cap: Option<u32>) -> (Self, Vec<DroppedTerm>) {
        let mut out: BTreeMap<(u32, u32), Complex64> = BTreeMap::new();
        let mut dropped = Vec::new();
        let allowed = |l: u32| cap.is_none_or(|c| l <= c);
        for (&(a, b), &c) in &self.terms {
            let targets = [((a + 1, b), c * c_a * ((a + 1) as f64).sqrt()), ((a, b + 1), c * c_b * ((b + 1) as f64).sqrt())];
            for ((ta, tb), v) in targets {
                if v == Complex64::new(0.0, 0.0) {
                    continue;
                }
                if allowed(ta) && allowed(tb) {
                    *out.entry((ta, tb)).or_default() += v;
                } else {
                    dropped.push(DroppedTerm { l_a: ta, l_b: tb, coefficient: v });
                }
            }
        }
        out.retain(|_, v| *v != Complex64::new(0.0, 0.0));
        (Self { terms: out }, dropped)
    }

    /// (c_A b_A† + c_B b_B†)^m |0,0⟩, with every dropped term collected.
    pub fn collective_power(c_a: Complex64, c_b: Complex64, m: u32, cap: Option<u32>) -> (Self, Vec<DroppedTerm>) {
        let mut ket = Self::vacuum();
        let mut dropped = Vec::new();
        for _ in 0..m {
            let (next, lost) = ket.create(c_a, c_b, cap);
            ket = next;
            dropped.extend(lost);
        }
        (ket, dropped)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_creation_norm() {
        let one = Complex64::new(1.0, 0.0);
        let (k, _) = TwoModeKet::collective_power(one, one, 3, None);
        // (b_A† + b_B†)^3 |0⟩ has norm² 2³·3!.
        assert!((k.norm_sqr() - 48.0).abs() < 1e-12);
    }

    #[test]
    fn cap_drops_high_occupations() {
        let one = Complex64::new(1.0, 0.0);
        let (k, dropped) = TwoModeKet::collective_power(one, one, 2, Some(1));
        assert_eq!(k.coefficient(1, 1), Complex64::new(2.0, 0.0));
        assert_eq!(k.coefficient(2, 0), Complex64::new(0.0, 0.0));
        assert_eq!(dropped.len(), 2);
    }
}
