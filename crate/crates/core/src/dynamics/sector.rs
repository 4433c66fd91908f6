//! Fixed-excitation Fock bases and the sparse sector Hamiltonian.
//!
//! Sites are numbered A = 0, B = 1 and 2 + p for the photon stored at grid
//! position p. A basis state is the sorted multiset of occupied sites, so the
//! ordering is lexicographically descending in (ℓ_A, ℓ_B, m_{−J}, …, m_J).

use num_complex::Complex64;
use serde::Serialize;

use super::grid::DiscretizedModel;
use crate::error::{Error, Result};

/// Largest N_modes accepted for the two-excitation sector.
pub const MAX_MODES_N2: usize = 600;

/// Occupation numbers of one basis state.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Occupation {
    pub l_a: u32,
    pub l_b: u32,
    /// (grid position, count) for every occupied photon mode.
    pub photons: Vec<(usize, u32)>,
}

impl Occupation {
    pub fn total(&self) -> u32 {
        self.l_a + self.l_b + self.photons.iter().map(|&(_, m)| m).sum::<u32>()
    }

    fn sites(&self) -> Vec<usize> {
        let mut s = Vec::new();
        s.extend(std::iter::repeat_n(0, self.l_a as usize));
        s.extend(std::iter::repeat_n(1, self.l_b as usize));
        for &(p, m) in &self.photons {
            s.extend(std::iter::repeat_n(2 + p, m as usize));
        }
        s.sort_unstable();
        s
    }

    fn from_sites(sites: &[usize]) -> Self {
        let mut occ = Occupation { l_a: 0, l_b: 0, photons: Vec::new() };
        for &s in sites {
            match s {
                0 => occ.l_a += 1,
                1 => occ.l_b += 1,
                _ => match occ.photons.last_mut() {
                    Some((p, m)) if *p == s - 2 => *m += 1,
                    _ => occ.photons.push((s - 2, 1)),
                },
            }
        }
        occ
    }
}

#[derive(Debug, Clone)]
pub struct SectorBasis {
    pub n: u32,
    /// N_modes + 2.
    pub sites: usize,
    states: Vec<[usize; 2]>,
}

impl SectorBasis {
    pub fn dimension(&self) -> usize {
        match self.n {
            0 => 1,
            1 => self.sites,
            _ => self.sites * (self.sites + 1) / 2,
        }
    }

    fn sites_of(&self, i: usize) -> &[usize] {
        &self.states[i][..self.n as usize]
    }

    pub fn occupation(&self, i: usize) -> Occupation {
        Occupation::from_sites(self.sites_of(i))
    }

    /// Index of a sorted site multiset.
    fn index_sites(&self, sites: &[usize]) -> Option<usize> {
        if sites.len() != self.n as usize || sites.iter().any(|&s| s >= self.sites) {
            return None;
        }
        match sites {
            [] => Some(0),
            [s] => Some(*s),
            [s1, s2] if s1 <= s2 => Some(s1 * self.sites - s1 * (s1.saturating_sub(1)) / 2 + (s2 - s1)),
            _ => None,
        }
    }

    pub fn index(&self, occ: &Occupation) -> Option<usize> {
        self.index_sites(&occ.sites())
    }

    /// Index of the all-emitter state |ℓ_A, (N − ℓ_A)_B⟩.
    pub fn emitter_index(&self, l_a: u32) -> Option<usize> {
        if l_a > self.n {
            return None;
        }
        self.index(&Occupation { l_a, l_b: self.n - l_a, photons: Vec::new() })
    }
}

/// Enumerate the N-excitation sector over the emitters and every grid mode.
pub fn build_sector_basis(dm: &DiscretizedModel, n: u32) -> Result<SectorBasis> {
    if n > 2 {
        return Err(Error::UnsupportedSector(n));
    }
    if n == 2 && dm.n_modes > MAX_MODES_N2 {
        return Err(Error::Domain(format!(
            "the two-excitation sector is limited to N_modes ≤ {MAX_MODES_N2}, got {}",
            dm.n_modes
        )));
    }
    let sites = dm.n_modes + 2;
    let states = match n {
        0 => vec![[0, 0]],
        1 => (0..sites).map(|s| [s, 0]).collect(),
        _ => (0..sites).flat_map(|a| (a..sites).map(move |b| [a, b])).collect(),
    };
    Ok(SectorBasis { n, sites, states })
}

/// Complex CSR matrix.
#[derive(Debug, Clone)]
pub struct SparseHamiltonian {
    pub dimension: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<Complex64>,
}

impl SparseHamiltonian {
    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// y = H x
    pub fn apply(&self, x: &[Complex64], y: &mut [Complex64]) {
        for (r, out) in y.iter_mut().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for i in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.vals[i] * x[self.cols[i]];
            }
            *out = acc;
        }
    }

    /// ⟨x|H|x⟩, real for Hermitian H.
    pub fn expectation(&self, x: &[Complex64]) -> f64 {
        let mut y = vec![Complex64::new(0.0, 0.0); self.dimension];
        self.apply(x, &mut y);
        x.iter().zip(&y).map(|(a, b)| (a.conj() * b).re).sum()
    }

    /// Entry (r, c), zero when absent.
    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        (self.row_ptr[r]..self.row_ptr[r + 1])
            .find(|&i| self.cols[i] == c)
            .map_or(Complex64::new(0.0, 0.0), |i| self.vals[i])
    }

    /// max |H_rc − conj(H_cr)| over stored entries.
    pub fn hermiticity_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for r in 0..self.dimension {
            for i in self.row_ptr[r]..self.row_ptr[r + 1] {
                worst = worst.max((self.vals[i] - self.get(self.cols[i], r).conj()).norm());
            }
        }
        worst
    }
}

/// Single-particle couplings: out[t] lists (s, h_st), the amplitude moved
/// from site t to site s.
fn hopping(dm: &DiscretizedModel) -> Vec<Vec<(usize, Complex64)>> {
    let sites = dm.n_modes + 2;
    let w0 = Complex64::new(dm.omega0, 0.0);
    let mut out: Vec<Vec<(usize, Complex64)>> = vec![Vec::new(); sites];
    out[0].push((0, w0));
    out[1].push((1, w0));
    for p in 0..dm.n_modes {
        let s = 2 + p;
        out[s].push((s, Complex64::new(dm.omega[p], 0.0)));
        if dm.g[p] == 0.0 {
            continue;
        }
        let g = Complex64::new(dm.g[p], 0.0);
        let gb = dm.phase_b(p) * dm.g[p];
        out[0].push((s, g));
        out[1].push((s, gb.conj()));
        out[s].push((0, g));
        out[s].push((1, gb));
    }
    out
}

/// Sparse H restricted to the sector. Every image state is looked up in the
/// basis; a miss means the basis is not closed and is reported as an error.
pub fn build_sector_hamiltonian(dm: &DiscretizedModel, basis: &SectorBasis) -> Result<SparseHamiltonian> {
    if basis.sites != dm.n_modes + 2 {
        return Err(Error::Precondition("basis was built for a different grid".into()));
    }
    let hop = hopping(dm);
    let dim = basis.dimension();
    let mut triplets: Vec<(usize, usize, Complex64)> = Vec::new();
    let mut scratch = Vec::with_capacity(2);
    for col in 0..dim {
        let sites = basis.sites_of(col);
        for (pos, &t) in sites.iter().enumerate() {
            if pos > 0 && sites[pos - 1] == t {
                continue;
            }
            let n_t = sites.iter().filter(|&&x| x == t).count() as f64;
            let rest: Vec<usize> = sites.iter().enumerate().filter(|&(i, _)| i != pos).map(|(_, &x)| x).collect();
            for &(s, h) in &hop[t] {
                let n_s = rest.iter().filter(|&&x| x == s).count() as f64;
                scratch.clear();
                scratch.extend_from_slice(&rest);
                scratch.push(s);
                scratch.sort_unstable();
                let row = basis.index_sites(&scratch).ok_or_else(|| {
                    Error::Numerical(format!("sector basis is not closed: image {scratch:?} of state {col}"))
                })?;
                triplets.push((row, col, h * (n_t * (n_s + 1.0)).sqrt()));
            }
        }
    }
    triplets.sort_unstable_by_key(|&(r, c, _)| (r, c));
    let mut row_ptr = vec![0usize; dim + 1];
    let mut cols = Vec::with_capacity(triplets.len());
    let mut vals: Vec<Complex64> = Vec::with_capacity(triplets.len());
    let mut last: Option<(usize, usize)> = None;
    for (r, c, v) in triplets {
        if last == Some((r, c)) {
            *vals.last_mut().unwrap() += v;
            continue;
        }
        last = Some((r, c));
        row_ptr[r + 1] += 1;
        cols.push(c);
        vals.push(v);
    }
    for r in 0..dim {
        row_ptr[r + 1] += row_ptr[r];
    }
    Ok(SparseHamiltonian { dimension: dim, row_ptr, cols, vals })
}
