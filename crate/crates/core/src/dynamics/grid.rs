//! Box quantization of the waveguide field.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{EmitterConfig, WaveguideModel};

/// Resonant wavenumber k̄ = nπ/d sitting on grid index ±`index`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridResonance {
    pub n: u32,
    pub kbar: f64,
    /// j* with k_{±j*} = ±k̄.
    pub index: usize,
}

/// Finite momentum grid with couplings g_j = g(k_j)·√Δk.
#[derive(Debug, Clone)]
pub struct DiscretizedModel {
    model: WaveguideModel,
    pub omega0: f64,
    pub distance: f64,
    pub cells: usize,
    /// L = cells·2d.
    pub box_length: f64,
    /// Δk = 2π/L.
    pub dk: f64,
    pub n_modes: usize,
    /// k_j for j = −J..=J, stored at position j + J.
    pub k: Vec<f64>,
    pub omega: Vec<f64>,
    pub g: Vec<f64>,
    pub resonance: Option<GridResonance>,
    /// Σ g_j² against ∫ g² dk.
    pub coupling_sum: f64,
    pub coupling_integral: f64,
}

impl DiscretizedModel {
    pub fn model(&self) -> &WaveguideModel {
        &self.model
    }

    /// J = (N_modes − 1)/2.
    pub fn half_width(&self) -> usize {
        (self.n_modes - 1) / 2
    }

    /// Storage position of grid index j.
    pub fn position(&self, j: i64) -> usize {
        (j + self.half_width() as i64) as usize
    }

    pub fn coupling_sum_relative_error(&self) -> f64 {
        if self.coupling_integral == 0.0 {
            return 0.0;
        }
        (self.coupling_sum - self.coupling_integral).abs() / self.coupling_integral
    }

    /// Revival time L/v_g with v_g the group velocity at the resonance (or at
    /// the emitter frequency when no resonance is attached).
    pub fn revival_time(&self) -> f64 {
        let k_ref = match self.resonance {
            Some(r) => r.kbar,
            None => self.model.inverse_omega(self.omega0).unwrap_or(self.dk),
        };
        self.box_length / self.model.group_velocity(k_ref)
    }

    /// Phase e^{i k_j d} of the B-emitter coupling.
    pub fn phase_b(&self, pos: usize) -> Complex64 {
        Complex64::from_polar(1.0, self.k[pos] * self.distance)
    }

    /// Same grid with a different emitter frequency.
    pub fn with_omega0(&self, omega0: f64) -> Self {
        Self { omega0, ..self.clone() }
    }
}

/// Build the grid for a box of `cells` emitter-pair lengths.
///
/// With L = cells·2d, Δk = π/(cells·d) and every resonance k̄ = nπ/d sits on
/// index j* = n·cells. `resonance` attaches one of them and requires it to lie
/// inside the grid.
pub fn discretize(
    model: &WaveguideModel,
    emitters: &EmitterConfig,
    cells: usize,
    n_modes: usize,
    resonance: Option<u32>,
) -> Result<DiscretizedModel> {
    emitters.validate(model)?;
    if cells < 10 {
        return Err(Error::Domain(format!("cells must be at least 10, got {cells}")));
    }
    if n_modes % 2 == 0 || n_modes < 3 {
        return Err(Error::Domain(format!("N_modes must be odd and at least 3, got {n_modes}")));
    }
    let d = emitters.distance;
    let box_length = cells as f64 * 2.0 * d;
    let dk = 2.0 * PI / box_length;
    let half = (n_modes - 1) / 2;

    let res = match resonance {
        None => None,
        Some(0) => return Err(Error::Domain("resonance index n must be at least 1".into())),
        Some(n) => {
            let index = n as usize * cells;
            if index > half {
                return Err(Error::Domain(format!(
                    "k̄ = {}π/d sits on grid index {index} but the grid ends at {half}; use N_modes ≥ {}",
                    n,
                    2 * index + 1
                )));
            }
            Some(GridResonance { n, kbar: n as f64 * PI / d, index })
        }
    };

    let mut k: Vec<f64> = (0..n_modes).map(|i| (i as i64 - half as i64) as f64 * dk).collect();
    if let Some(r) = res {
        k[half + r.index] = r.kbar;
        k[half - r.index] = -r.kbar;
    }
    let omega: Vec<f64> = k.iter().map(|&q| model.omega(q)).collect();
    let root_dk = dk.sqrt();
    let g: Vec<f64> = k.iter().map(|&q| model.coupling(q) * root_dk).collect();
    let coupling_sum = g.iter().map(|x| x * x).sum();
    let coupling_integral = model.coupling_norm_sq()?;

    Ok(DiscretizedModel {
        model: model.clone(),
        omega0: emitters.omega0,
        distance: d,
        cells,
        box_length,
        dk,
        n_modes,
        k,
        omega,
        g,
        resonance: res,
        coupling_sum,
        coupling_integral,
    })
}

/// Dense single-excitation Hamiltonian over (A, B, k_{−J}, …, k_J).
///
/// Diagonal (ω0, ω0, ω(k_j)); row A couples with g_j and row B with
/// g_j e^{ik_j d}; the lower triangle is the exact conjugate.
pub fn build_hamiltonian_n1(dm: &DiscretizedModel) -> DMatrix<Complex64> {
    let n = dm.n_modes + 2;
    let mut h = DMatrix::from_element(n, n, Complex64::new(0.0, 0.0));
    h[(0, 0)] = Complex64::new(dm.omega0, 0.0);
    h[(1, 1)] = Complex64::new(dm.omega0, 0.0);
    for j in 0..dm.n_modes {
        let a = Complex64::new(dm.g[j], 0.0);
        let b = dm.phase_b(j) * dm.g[j];
        h[(2 + j, 2 + j)] = Complex64::new(dm.omega[j], 0.0);
        h[(0, 2 + j)] = a;
        h[(2 + j, 0)] = a.conj();
        h[(1, 2 + j)] = b;
        h[(2 + j, 1)] = b.conj();
    }
    h
}
