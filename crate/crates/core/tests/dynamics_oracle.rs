//! The box-quantized Hamiltonian checked against independent constructions.
//!
//! Two oracles live here. The first diagonalizes the full complex N = 1 matrix
//! with no parity reduction. The second evolves the two-excitation sector of
//! the quadratic Hamiltonian from the single-particle propagator
//! U = exp(−iht): a pair a_s†a_t†|0⟩ maps to Σ U_rs U_qt a_r†a_q†|0⟩.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use waveguide_bic::dynamics::{
    analytic_vector, bic_oracle, build_hamiltonian_n1, build_sector_basis, detuning_sweep, discretize, evolve,
    ladder_residual, prepare_state, run_relaxation, spectrum_n1, DiscretizedModel, InitialState, Propagator,
    RelaxationSpec, SectorState, CLUSTER_WINDOW,
};
use waveguide_bic::fock::{relaxation_probability, EmitterDensityMatrix, EmitterPureState};
use waveguide_bic::model::{make_rectangular_model, EmitterConfig};
use waveguide_bic::spectral::{required_omega0_for_bic, SpectralOptions};
use waveguide_bic::SingleExcitationMode;

const D: f64 = PI / 2.0;

fn reference(lambda: f64) -> SingleExcitationMode {
    let m = make_rectangular_model(1.0, 2.0, lambda).unwrap();
    required_omega0_for_bic(&m, D, 1, &SpectralOptions::default()).unwrap()
}

fn grid(mode: &SingleExcitationMode, cells: usize, n_modes: usize) -> DiscretizedModel {
    let e = EmitterConfig::new(mode.omega0, mode.distance);
    discretize(mode.model(), &e, cells, n_modes, mode.n).unwrap()
}

#[test]
fn coupling_sum_converges_to_the_integral() {
    let mode = reference(0.1);
    let coarse = grid(&mode, 20, 81).coupling_sum_relative_error();
    let fine = grid(&mode, 200, 2001).coupling_sum_relative_error();
    assert!(coarse > 1e-6, "{coarse}");
    assert!(fine < 1e-14, "{fine}");
}

#[test]
fn uncoupled_spectrum() {
    let m = make_rectangular_model(1.0, 2.0, 0.0).unwrap();
    let dm = discretize(&m, &EmitterConfig::new(1.3, 1.0), 10, 31, None).unwrap();
    let mut expected: Vec<f64> = dm.omega.clone();
    expected.extend([1.3, 1.3]);
    expected.sort_by(f64::total_cmp);
    let got = spectrum_n1(&dm);
    assert_eq!(got.len(), expected.len());
    for (a, b) in got.iter().zip(&expected) {
        assert!((a - b).abs() <= 4.0 * f64::EPSILON * b, "{a} vs {b}");
    }
}

#[test]
fn full_complex_diagonalization_agrees_with_parity_blocks() {
    let mode = reference(0.1);
    let dm = grid(&mode, 72, 401);
    let eig = build_hamiltonian_n1(&dm).symmetric_eigen();
    let v = analytic_vector(&dm, &mode).unwrap();
    let v = DMatrix::from_column_slice(v.len(), 1, &v);
    let norm2 = v.norm_squared();
    let nearest = (0..eig.eigenvalues.len())
        .min_by(|&a, &b| (eig.eigenvalues[a] - mode.energy).abs().total_cmp(&(eig.eigenvalues[b] - mode.energy).abs()))
        .unwrap();
    let cluster: Vec<usize> =
        (0..eig.eigenvalues.len()).filter(|&i| (eig.eigenvalues[i] - mode.energy).abs() < CLUSTER_WINDOW).collect();
    let overlap: f64 =
        cluster.iter().map(|&i| (eig.eigenvectors.column(i).adjoint() * &v)[(0, 0)].norm_sqr()).sum::<f64>() / norm2;

    let report = bic_oracle(&dm, &mode, CLUSTER_WINDOW).unwrap();
    assert_eq!(cluster.len(), report.cluster_size);
    assert!((overlap - report.overlap).abs() < 1e-10, "{overlap} vs {}", report.overlap);
    assert!((eig.eigenvalues[nearest] - mode.energy).abs() < 1e-10);
    assert!(report.overlap > 0.999);
}

#[test]
fn oracle_overlap_on_the_reference_grid() {
    let mode = reference(0.1);
    let mut last = 0.0;
    for cells in [50, 100, 200] {
        let r = bic_oracle(&grid(&mode, cells, 2001), &mode, CLUSTER_WINDOW).unwrap();
        assert!(r.overlap >= 0.999, "cells {cells}: {}", r.overlap);
        assert!(r.overlap >= last - 1e-12, "overlap fell from {last} to {}", r.overlap);
        assert!(r.ladder_residual < 1e-12 && r.eigenvalue_error < 1e-12, "{r:?}");
        last = r.overlap;
    }
}

#[test]
fn shifted_energy_residual() {
    let mut mode = reference(0.1);
    let dm = grid(&mode, 100, 1001);
    mode.energy += 0.1;
    let r = ladder_residual(&dm, &mode).unwrap();
    assert!((r - 0.1).abs() < 1e-9, "{r}");
}

#[test]
fn uncoupled_evolution_only_rotates_phases() {
    let m = make_rectangular_model(1.0, 2.0, 0.0).unwrap();
    let dm = discretize(&m, &EmitterConfig::new(1.3, 1.0), 10, 21, None).unwrap();
    let prop = Propagator::new(&dm, 1).unwrap();
    let st = prepare_state(prop.basis.clone(), &InitialState::SingleA, 1).unwrap();
    let t = 4.2;
    let out = evolve(&dm, &st, t, 1e-12).unwrap();
    let expected = Complex64::from_polar(1.0, -1.3 * t);
    assert!((out.state.amplitudes[0] - expected).norm() < 1e-12);
    assert_eq!(out.state.atomic_population(), out.state.amplitudes[0].norm_sqr());
    assert!(!out.flagged);
}

fn single_particle_propagator(dm: &DiscretizedModel, t: f64) -> DMatrix<Complex64> {
    let eig = build_hamiltonian_n1(dm).symmetric_eigen();
    let n = eig.eigenvalues.len();
    let phases = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            Complex64::from_polar(1.0, -eig.eigenvalues[i] * t)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    &eig.eigenvectors * phases * eig.eigenvectors.adjoint()
}

#[test]
fn two_excitation_evolution_matches_single_particle_propagator() {
    let m = make_rectangular_model(1.0, 2.0, 0.4).unwrap();
    let dm = discretize(&m, &EmitterConfig::new(1.6, 1.2), 10, 15, None).unwrap();
    let t = 3.7;
    let u = single_particle_propagator(&dm, t);
    let basis = Arc::new(build_sector_basis(&dm, 2).unwrap());
    // Superposition of |1_A,1_B⟩ and |1_A,1_k⟩ with k at grid position 4.
    let i_ab = basis.emitter_index(1).unwrap();
    let mut init = vec![Complex64::new(0.0, 0.0); basis.dimension()];
    init[i_ab] = Complex64::new(0.6, 0.0);
    init[2 + 4] = Complex64::new(0.0, 0.8);
    let st = SectorState { basis: basis.clone(), amplitudes: init };
    let out = evolve(&dm, &st, t, 1e-12).unwrap();

    // Oracle: the pair (s, t) with s ≠ t evolves into Σ_{r≤q} amplitude on |r q⟩.
    let sites = dm.n_modes + 2;
    let pair = |s: usize, p: usize| -> Vec<Complex64> {
        let mut amp = vec![Complex64::new(0.0, 0.0); basis.dimension()];
        for r in 0..sites {
            for q in r..sites {
                let perm = u[(r, s)] * u[(q, p)] + u[(q, s)] * u[(r, p)];
                let idx = r * sites - r * r.saturating_sub(1) / 2 + (q - r);
                amp[idx] = if r == q { perm / 2f64.sqrt() } else { perm };
            }
        }
        amp
    };
    let a = pair(0, 1);
    let b = pair(0, 2 + 4);
    let worst = (0..basis.dimension())
        .map(|i| (out.state.amplitudes[i] - (a[i] * 0.6 + b[i] * Complex64::new(0.0, 0.8))).norm())
        .fold(0.0, f64::max);
    assert!(worst < 1e-10, "{worst}");
}

#[test]
fn two_excitation_population_is_the_square_of_one() {
    let mode = reference(0.3);
    let dm = grid(&mode, 10, 31);
    let spec = RelaxationSpec { horizon: 40.0, samples: 40, tol: 1e-11, n_parity: 1 };
    let one = run_relaxation(&dm, 1, &InitialState::PsiN, &spec).unwrap();
    let two = run_relaxation(&dm, 2, &InitialState::PsiN, &spec).unwrap();
    for (a, b) in one.points.iter().zip(&two.points) {
        assert!((b.p_at - a.p_at * a.p_at).abs() < 1e-10, "t = {}: {} vs {}", a.t, b.p_at, a.p_at * a.p_at);
    }
}

#[test]
fn relaxation_tracks_fock_relaxation_probability() {
    let mode = reference(0.1);
    let dm = grid(&mode, 200, 2001);
    let spec = RelaxationSpec { horizon: 0.7 * dm.revival_time(), samples: 200, tol: 1e-10, n_parity: 1 };
    let traj = run_relaxation(&dm, 1, &InitialState::SingleA, &spec).unwrap();
    let rho = EmitterDensityMatrix::from_pure(&EmitterPureState::basis(1, 1).unwrap());
    let p_in = relaxation_probability(&rho, 1, mode.p_at, 1).unwrap();
    let asym = traj.asymptote.unwrap();
    assert!((asym.p_at / p_in - 1.0).abs() < 0.03, "{} vs {p_in}", asym.p_at);
    assert!((asym.overlap_psi_n / p_in - 1.0).abs() < 0.03);
    assert!(traj.norm_drift < 1e-8 && traj.energy_drift < 1e-8);
}

#[test]
fn wrong_parity_state_decays() {
    let mode = reference(0.1);
    let dm = grid(&mode, 200, 2001);
    let spec = RelaxationSpec { horizon: 0.7 * dm.revival_time(), samples: 100, tol: 1e-10, n_parity: 1 };
    let traj = run_relaxation(&dm, 1, &InitialState::BellMinus, &spec).unwrap();
    let asym = traj.asymptote.unwrap();
    assert!(asym.p_at < 2e-3, "{}", asym.p_at);
    assert!(asym.overlap_psi_n < 1e-20);
}

#[test]
fn revival_region_is_flagged_and_excluded() {
    let mode = reference(0.3);
    let dm = grid(&mode, 20, 201);
    let spec = RelaxationSpec { horizon: 1.2 * dm.revival_time(), samples: 60, tol: 1e-10, n_parity: 1 };
    let traj = run_relaxation(&dm, 1, &InitialState::PsiN, &spec).unwrap();
    let first_flag = traj.points.iter().find(|p| p.flag).unwrap();
    assert!(first_flag.t > 0.8 * dm.revival_time());
    let asym = traj.asymptote.unwrap();
    assert!(asym.t_end <= traj.flag_time);
    assert!(traj.to_csv().lines().last().unwrap().ends_with(",1"));
}

#[test]
fn detuning_sweep_peaks_at_resonance() {
    // Strong coupling keeps the detuned decay inside the box time.
    let mode = reference(0.5);
    let dm = grid(&mode, 200, 2001);
    let spec = RelaxationSpec { horizon: 0.75 * dm.revival_time(), samples: 200, tol: 1e-10, n_parity: 1 };
    let offsets = [-0.05, 0.0, 0.05, 1.0];
    let sw =
        detuning_sweep(&dm, &offsets, 1, &InitialState::PsiN, &spec, 1e-10, &SpectralOptions::default()).unwrap();
    let p: Vec<f64> = sw.rows.iter().map(|r| r.p_at.unwrap()).collect();
    assert_eq!(sw.rows.iter().map(|r| r.bic).collect::<Vec<_>>(), ["no_solution", "ok", "no_solution", "no_solution"]);
    assert!(p[1] > p[0] && p[1] > p[2] && p[1] > p[3], "{p:?}");
    assert!((p[0] / p[2] - 1.0).abs() < 0.05, "{p:?}");
    assert!(p[3] < 0.1 * p[1], "{p:?}");
}
