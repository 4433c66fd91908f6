//! Sector states, time evolution and relaxation runs.

use std::fmt::Write as _;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::grid::DiscretizedModel;
use super::krylov::{propagate, KrylovOptions, KrylovStats};
use super::sector::{build_sector_basis, build_sector_hamiltonian, Occupation, SectorBasis, SparseHamiltonian};
use crate::error::{Error, Result};
use crate::fock::{emitter_state, EmitterPureState};
use crate::numfmt::{float, float_opt};
use crate::spectral::{required_omega0_for_bic, SpectralOptions};

/// Fraction of the revival time L/v_g after which samples are flagged.
pub const REVIVAL_FRACTION: f64 = 0.8;

/// Amplitudes over a fixed-N sector basis.
#[derive(Debug, Clone)]
pub struct SectorState {
    pub basis: Arc<SectorBasis>,
    pub amplitudes: Vec<Complex64>,
}

impl SectorState {
    pub fn n(&self) -> u32 {
        self.basis.n
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Probability that every excitation sits in the emitters.
    pub fn atomic_population(&self) -> f64 {
        (0..=self.n()).filter_map(|l| self.basis.emitter_index(l)).map(|i| self.amplitudes[i].norm_sqr()).sum()
    }

    /// |⟨ψ ⊗ vac|state⟩|² for an emitter state of the same excitation number.
    pub fn emitter_overlap(&self, psi: &EmitterPureState) -> f64 {
        if psi.n_at != self.n() as usize {
            return 0.0;
        }
        let amp: Complex64 = (0..=self.n())
            .filter_map(|l| self.basis.emitter_index(l).map(|i| psi.amplitudes[l as usize].conj() * self.amplitudes[i]))
            .sum();
        amp.norm_sqr()
    }

    /// Emitter state ψ ⊗ vac embedded in the sector.
    pub fn from_emitters(basis: Arc<SectorBasis>, psi: &EmitterPureState) -> Result<Self> {
        if psi.n_at != basis.n as usize {
            return Err(Error::Precondition(format!(
                "emitter state has {} excitations, sector has {}",
                psi.n_at, basis.n
            )));
        }
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); basis.dimension()];
        for l in 0..=basis.n {
            let i = basis.emitter_index(l).expect("emitter states belong to the sector");
            amplitudes[i] = psi.amplitudes[l as usize];
        }
        Ok(Self { basis, amplitudes })
    }
}

/// One entry of a user-supplied initial state; photon modes use signed grid indices j.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomComponent {
    #[serde(default)]
    pub l_a: u32,
    #[serde(default)]
    pub l_b: u32,
    /// (j, m_j) pairs.
    #[serde(default)]
    pub photons: Vec<(i64, u32)>,
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialState {
    /// ψ^(N) ⊗ vac with the bound-mode parity.
    PsiN,
    /// |N_A, 0_B⟩ ⊗ vac.
    SingleA,
    /// (s b_A† + b_B†)^N|0⟩ normalized, with s = −1.
    BellMinus,
    Custom(Vec<CustomComponent>),
}

impl InitialState {
    pub fn name(&self) -> &'static str {
        match self {
            Self::PsiN => "psiN",
            Self::SingleA => "singleA",
            Self::BellMinus => "bell_minus",
            Self::Custom(_) => "custom",
        }
    }
}

/// Build the initial sector state; `n_parity` fixes the sign s of ψ^(N).
pub fn prepare_state(basis: Arc<SectorBasis>, initial: &InitialState, n_parity: u32) -> Result<SectorState> {
    let n = basis.n as usize;
    match initial {
        InitialState::PsiN => SectorState::from_emitters(basis, &emitter_state(n, n_parity)),
        InitialState::SingleA => SectorState::from_emitters(basis, &EmitterPureState::basis(n, n)?),
        InitialState::BellMinus => SectorState::from_emitters(basis, &emitter_state(n, 2)),
        InitialState::Custom(parts) => {
            let half = (basis.sites - 3) as i64 / 2;
            let mut amplitudes = vec![Complex64::new(0.0, 0.0); basis.dimension()];
            for c in parts {
                let mut photons = Vec::new();
                for &(j, m) in &c.photons {
                    if j.abs() > half {
                        return Err(Error::Domain(format!("photon index {j} outside the grid ±{half}")));
                    }
                    if m > 0 {
                        photons.push(((j + half) as usize, m));
                    }
                }
                photons.sort_unstable();
                let occ = Occupation { l_a: c.l_a, l_b: c.l_b, photons };
                if occ.total() != basis.n {
                    return Err(Error::Precondition(format!(
                        "component {occ:?} has {} excitations, sector has {}",
                        occ.total(),
                        basis.n
                    )));
                }
                let i = basis
                    .index(&occ)
                    .ok_or_else(|| Error::Precondition(format!("component {occ:?} repeats a photon mode")))?;
                amplitudes[i] += Complex64::new(c.re, c.im);
            }
            let st = SectorState { basis, amplitudes };
            let norm = st.norm();
            if (norm - 1.0).abs() > 1e-10 {
                return Err(Error::Precondition(format!("initial state has norm {norm}, expected 1")));
            }
            Ok(st)
        }
    }
}

/// Sector Hamiltonian bundled with its basis.
#[derive(Debug, Clone)]
pub struct Propagator {
    pub basis: Arc<SectorBasis>,
    pub hamiltonian: SparseHamiltonian,
    /// Time after which samples are flagged.
    pub flag_time: f64,
    pub revival_time: f64,
}

impl Propagator {
    pub fn new(dm: &DiscretizedModel, n: u32) -> Result<Self> {
        let basis = Arc::new(build_sector_basis(dm, n)?);
        let hamiltonian = build_sector_hamiltonian(dm, &basis)?;
        let revival_time = dm.revival_time();
        Ok(Self { basis, hamiltonian, flag_time: REVIVAL_FRACTION * revival_time, revival_time })
    }

    pub fn energy(&self, state: &SectorState) -> f64 {
        self.hamiltonian.expectation(&state.amplitudes)
    }
}

#[derive(Debug, Clone)]
pub struct Evolved {
    pub state: SectorState,
    /// True when t passes the revival flag time.
    pub flagged: bool,
    pub stats: KrylovStats,
}

/// exp(−iHt) applied to `state` with total error budget `tol`.
pub fn evolve(dm: &DiscretizedModel, state: &SectorState, t: f64, tol: f64) -> Result<Evolved> {
    let prop = Propagator::new(dm, state.n())?;
    if prop.basis.dimension() != state.amplitudes.len() {
        return Err(Error::Precondition("state does not belong to this grid".into()));
    }
    let mut stats = KrylovStats::default();
    let mut amplitudes = state.amplitudes.clone();
    propagate(&prop.hamiltonian, &mut amplitudes, t, &KrylovOptions::for_horizon(tol, t), &mut stats)?;
    Ok(Evolved {
        state: SectorState { basis: prop.basis.clone(), amplitudes },
        flagged: t > prop.flag_time,
        stats,
    })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct TrajectoryPoint {
    pub t: f64,
    pub p_at: f64,
    pub overlap_psi_n: f64,
    pub norm: f64,
    pub energy: f64,
    pub flag: bool,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Asymptote {
    pub p_at: f64,
    pub overlap_psi_n: f64,
    pub t_start: f64,
    pub t_end: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct Trajectory {
    pub n: u32,
    pub initial: String,
    pub horizon: f64,
    pub revival_time: f64,
    pub flag_time: f64,
    pub points: Vec<TrajectoryPoint>,
    /// Mean over the final quarter of the unflagged samples.
    pub asymptote: Option<Asymptote>,
    pub norm_drift: f64,
    /// max |⟨H⟩(t) − ⟨H⟩(0)| / |⟨H⟩(0)|
    pub energy_drift: f64,
    pub stats: KrylovStats,
}

impl Trajectory {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,P_at,overlap_psiN,norm,flag\n");
        for p in &self.points {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                float(p.t),
                float(p.p_at),
                float(p.overlap_psi_n),
                float(p.norm),
                u8::from(p.flag)
            );
        }
        out
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RelaxationSpec {
    pub horizon: f64,
    pub samples: usize,
    pub tol: f64,
    /// Resonance index fixing the sign of ψ^(N) in the overlap column.
    pub n_parity: u32,
}

fn asymptote(points: &[TrajectoryPoint]) -> Option<Asymptote> {
    let clean: Vec<&TrajectoryPoint> = points.iter().filter(|p| !p.flag).collect();
    let t_end = clean.last()?.t;
    if t_end <= 0.0 {
        return None;
    }
    let t_start = 0.75 * t_end;
    let window: Vec<&&TrajectoryPoint> = clean.iter().filter(|p| p.t >= t_start).collect();
    let k = window.len() as f64;
    Some(Asymptote {
        p_at: window.iter().map(|p| p.p_at).sum::<f64>() / k,
        overlap_psi_n: window.iter().map(|p| p.overlap_psi_n).sum::<f64>() / k,
        t_start,
        t_end,
        samples: window.len(),
    })
}

/// Sample P_at, the ψ^(N) overlap, norm and ⟨H⟩ on `samples` equal steps up to the horizon.
pub fn relaxation_experiment(prop: &Propagator, initial: &SectorState, spec: &RelaxationSpec) -> Result<Trajectory> {
    if !(spec.horizon >= 0.0 && spec.horizon.is_finite()) {
        return Err(Error::Domain(format!("horizon must be finite and non-negative, got {}", spec.horizon)));
    }
    if !(spec.tol > 0.0) {
        return Err(Error::Domain(format!("tolerance must be positive, got {}", spec.tol)));
    }
    if initial.amplitudes.len() != prop.basis.dimension() || initial.n() != prop.basis.n {
        return Err(Error::Precondition("initial state does not belong to the propagator sector".into()));
    }
    let psi_n = emitter_state(prop.basis.n as usize, spec.n_parity);
    let opts = KrylovOptions::for_horizon(spec.tol, spec.horizon);
    let mut stats = KrylovStats::default();
    let mut state = initial.clone();
    let e0 = prop.energy(&state);
    let n0 = state.norm();
    let steps = if spec.horizon == 0.0 { 0 } else { spec.samples.max(1) };
    let mut points = Vec::with_capacity(steps + 1);
    let (mut norm_drift, mut energy_drift): (f64, f64) = (0.0, 0.0);
    for i in 0..=steps {
        let t = if steps == 0 { 0.0 } else { spec.horizon * i as f64 / steps as f64 };
        if i > 0 {
            let dt = t - points.last().map_or(0.0, |p: &TrajectoryPoint| p.t);
            propagate(&prop.hamiltonian, &mut state.amplitudes, dt, &opts, &mut stats)?;
        }
        let norm = state.norm();
        let energy = prop.energy(&state);
        norm_drift = norm_drift.max((norm - n0).abs());
        energy_drift = energy_drift.max((energy - e0).abs() / e0.abs().max(f64::MIN_POSITIVE));
        points.push(TrajectoryPoint {
            t,
            p_at: state.atomic_population(),
            overlap_psi_n: state.emitter_overlap(&psi_n),
            norm,
            energy,
            flag: t > prop.flag_time,
        });
    }
    Ok(Trajectory {
        n: prop.basis.n,
        initial: String::new(),
        horizon: spec.horizon,
        revival_time: prop.revival_time,
        flag_time: prop.flag_time,
        asymptote: asymptote(&points),
        points,
        norm_drift,
        energy_drift,
        stats,
    })
}

/// Build the propagator, prepare the state and run.
pub fn run_relaxation(
    dm: &DiscretizedModel,
    n: u32,
    initial: &InitialState,
    spec: &RelaxationSpec,
) -> Result<Trajectory> {
    let prop = Propagator::new(dm, n)?;
    let state = prepare_state(prop.basis.clone(), initial, spec.n_parity)?;
    let mut traj = relaxation_experiment(&prop, &state, spec)?;
    traj.initial = initial.name().to_string();
    Ok(traj)
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub offset: f64,
    pub omega0: f64,
    pub p_at: Option<f64>,
    pub overlap_psi_n: Option<f64>,
    /// "ok" when a resonant bound mode exists at this ω0, else "no_solution".
    pub bic: &'static str,
    pub status: &'static str,
    pub message: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepResult {
    pub n: u32,
    pub initial: String,
    /// ω0 at which the grid distance is resonant.
    pub resonant_omega0: f64,
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# detuning sweep: N = {}, initial = {}", self.n, self.initial);
        let _ = writeln!(out, "# resonant omega0 = {}", float(self.resonant_omega0));
        out.push_str("param,value,omega0,P_at,overlap_psiN,bic,status\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "omega0_offset,{},{},{},{},{},{}",
                float(r.offset),
                float(r.omega0),
                float_opt(r.p_at),
                float_opt(r.overlap_psi_n),
                r.bic,
                r.status
            );
        }
        out
    }
}

/// Relaxation asymptotes for ω0 = ω0(template) + offset, one independent run per row.
///
/// The grid must carry a resonance; the resonant frequency at the grid distance
/// decides whether each row still hosts a bound mode (`resonance_window`).
pub fn detuning_sweep(
    dm: &DiscretizedModel,
    offsets: &[f64],
    n: u32,
    initial: &InitialState,
    spec: &RelaxationSpec,
    resonance_window: f64,
    opts: &SpectralOptions,
) -> Result<SweepResult> {
    let res = dm
        .resonance
        .ok_or_else(|| Error::Precondition("detuning sweep needs a grid built with a resonance".into()))?;
    let bic = required_omega0_for_bic(dm.model(), dm.distance, res.n, opts)?;
    let rows = offsets
        .par_iter()
        .map(|&offset| {
            let omega0 = dm.omega0 + offset;
            let bic_status = if (omega0 - bic.omega0).abs() <= resonance_window { "ok" } else { "no_solution" };
            let run = if omega0 > dm.model().threshold() {
                run_relaxation(&dm.with_omega0(omega0), n, initial, spec)
            } else {
                Err(Error::Domain(format!("omega0 = {omega0} is below the propagation cutoff")))
            };
            match run {
                Ok(traj) => SweepRow {
                    offset,
                    omega0,
                    p_at: traj.asymptote.map(|a| a.p_at),
                    overlap_psi_n: traj.asymptote.map(|a| a.overlap_psi_n),
                    bic: bic_status,
                    status: "ok",
                    message: String::new(),
                },
                Err(e) => SweepRow {
                    offset,
                    omega0,
                    p_at: None,
                    overlap_psi_n: None,
                    bic: bic_status,
                    status: "error",
                    message: e.to_string(),
                },
            }
        })
        .collect();
    Ok(SweepResult { n, initial: initial.name().to_string(), resonant_omega0: bic.omega0, rows })
}
