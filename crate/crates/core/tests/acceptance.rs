//! Acceptance criteria, one line each. Runs without the libtest harness so the
//! table is always printed; the exit status is non-zero when any line fails.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use num_complex::Complex64;
use waveguide_bic::dynamics::{
    build_sector_basis, build_sector_hamiltonian, discretize, run_relaxation, self_convergence, DiscretizedModel,
    InitialState, RelaxationSpec, Trajectory, CLUSTER_WINDOW,
};
use waveguide_bic::fock::{
    central_binomial_ratio, coherent_atomic_state, emitter_state, purity_a, purity_closed_form, thermal_purity,
    truncation_check, two_excitation_comparison,
};
use waveguide_bic::spectral::{required_omega0_for_bic, residuals};
use waveguide_bic::{make_rectangular_model, EmitterConfig, SingleExcitationMode, SpectralOptions};

struct Line {
    id: &'static str,
    name: &'static str,
    passed: bool,
    detail: String,
    seconds: f64,
}

fn reference_mode(lambda: f64) -> SingleExcitationMode {
    let m = make_rectangular_model(1.0, 2.0, lambda).unwrap();
    required_omega0_for_bic(&m, PI / 2.0, 1, &SpectralOptions::default()).unwrap()
}

fn grid(mode: &SingleExcitationMode, cells: usize, n_modes: usize) -> DiscretizedModel {
    let e = EmitterConfig::new(mode.omega0, mode.distance);
    discretize(mode.model(), &e, cells, n_modes, mode.n).unwrap()
}

fn relax_spec(dm: &DiscretizedModel) -> RelaxationSpec {
    RelaxationSpec { horizon: 0.7 * dm.revival_time(), samples: 200, tol: 1e-10, n_parity: 1 }
}

fn residual_table() -> (bool, String) {
    let opts = SpectralOptions::default();
    let model = make_rectangular_model(1.0, 5.0, 0.1).unwrap();
    let mut worst = [0.0f64; 3];
    for lambda in [0.025, 0.05, 0.1] {
        let m = model.with_lambda(lambda).unwrap();
        for n in 1..=3 {
            let r = residuals(&required_omega0_for_bic(&m, PI, n, &opts).unwrap(), &opts).unwrap();
            worst[0] = worst[0].max(r.emitter_a);
            worst[1] = worst[1].max(r.emitter_b);
            worst[2] = worst[2].max(r.field_sup);
        }
    }
    let ok = worst[0] <= 1e-10 && worst[1] <= 1e-10 && worst[2] <= 1e-12;
    (ok, format!("max (A, B, field) = ({:.1e}, {:.1e}, {:.1e}); tol (1e-10, 1e-10, 1e-12)", worst[0], worst[1], worst[2]))
}

/// Least-squares slope of ln(1 − p_at) against ln λ.
fn weight_slope(k_c: f64, d: f64) -> f64 {
    let lambdas = [0.0125, 0.025, 0.05, 0.1];
    let opts = SpectralOptions::default();
    let pts: Vec<(f64, f64)> = lambdas
        .iter()
        .map(|&l| {
            let m = make_rectangular_model(1.0, k_c, l).unwrap();
            let p = required_omega0_for_bic(&m, d, 1, &opts).unwrap().p_at;
            (l.ln(), (1.0 - p).ln())
        })
        .collect();
    let n = pts.len() as f64;
    let (mx, my) = (pts.iter().map(|p| p.0).sum::<f64>() / n, pts.iter().map(|p| p.1).sum::<f64>() / n);
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

fn halves(coarse: f64, fine: f64) -> bool {
    let r = coarse / fine;
    (1.6..=2.4).contains(&r)
}

/// Both errors within a few hundred ulps of E: the ratio is noise.
fn roundoff_note(coarse: f64, fine: f64, scale: f64) -> &'static str {
    if coarse.max(fine) < 1e3 * f64::EPSILON * scale {
        "; both at round-off, so the ratio is not a convergence rate"
    } else {
        ""
    }
}

fn relative(measured: f64, target: f64) -> f64 {
    (measured / target - 1.0).abs()
}

fn asymptote(t: &Trajectory) -> f64 {
    t.asymptote.map_or(f64::NAN, |a| a.p_at)
}

fn main() -> ExitCode {
    let mut lines: Vec<Line> = Vec::new();
    let mut record = |id, name, passed, detail: String, start: Instant| {
        let l = Line { id, name, passed, detail, seconds: start.elapsed().as_secs_f64() };
        println!(
            "{} {:<4} {:<34} {} [{:.2} s]",
            if l.passed { "PASS" } else { "FAIL" },
            l.id,
            l.name,
            l.detail,
            l.seconds
        );
        lines.push(l);
    };

    // 1
    let t = Instant::now();
    let (ok, detail) = residual_table();
    let secs = t.elapsed().as_secs_f64();
    record("C1", "eigenvalue-system residuals", ok && secs < 5.0, format!("{detail}; runtime limit 5 s"), t);

    // 2
    let t = Instant::now();
    let slope = weight_slope(2.0, PI / 2.0);
    let info = weight_slope(5.0, PI);
    record(
        "C2",
        "1 - p_at ~ lambda^2",
        (slope - 2.0).abs() <= 0.05,
        format!("slope {slope:.4} over lambda in {{0.0125..0.1}} (k_c=2, d=pi/2); target 2.00 +- 0.05; k_c=5, d=pi gives {info:.4}"),
        t,
    );

    // 3
    let t = Instant::now();
    let mode = reference_mode(0.1);
    let conv = self_convergence(&mode, &[100, 200], 2001, CLUSTER_WINDOW).unwrap();
    let (r100, r200) = (&conv.reports[0], &conv.reports[1]);
    let secs = t.elapsed().as_secs_f64();
    record(
        "C3a",
        "oracle overlap",
        r200.overlap >= 0.999 && secs < 60.0,
        format!("overlap {:.15} at cells=200, N_modes=2001; min 0.999; runtime limit 60 s", r200.overlap),
        t,
    );
    record(
        "C3b",
        "oracle eigenvalue error halves",
        halves(r100.eigenvalue_error, r200.eigenvalue_error),
        format!(
            "cells 100 -> 200: {:.2e} -> {:.2e}, ratio {:.2}; required 2 +- 20%{}",
            r100.eigenvalue_error,
            r200.eigenvalue_error,
            r100.eigenvalue_error / r200.eigenvalue_error,
            roundoff_note(r100.eigenvalue_error, r200.eigenvalue_error, mode.energy)
        ),
        t,
    );
    record(
        "C3c",
        "oracle ladder residual halves",
        halves(r100.ladder_residual, r200.ladder_residual),
        format!(
            "cells 100 -> 200: {:.2e} -> {:.2e}, ratio {:.2}; required 2 +- 20%{}",
            r100.ladder_residual,
            r200.ladder_residual,
            r100.ladder_residual / r200.ladder_residual,
            roundoff_note(r100.ladder_residual, r200.ladder_residual, mode.energy)
        ),
        t,
    );

    // 4
    let t = Instant::now();
    let mut worst: f64 = 0.0;
    for n in 0..=60 {
        let closed = purity_closed_form(n);
        let p = purity_a(n, 1.0).unwrap();
        worst = worst.max((p / closed - 1.0).abs()).max((central_binomial_ratio(n) / closed - 1.0).abs());
    }
    let mut asym_ok = true;
    let mut asym = Vec::new();
    for n in [10usize, 20, 40] {
        let dev = (purity_a(n, 1.0).unwrap() * (PI * n as f64).sqrt() - 1.0).abs();
        asym_ok &= dev <= 0.2 / n as f64;
        asym.push(format!("N={n}: {dev:.2e} <= {:.3}", 0.2 / n as f64));
    }
    let secs = t.elapsed().as_secs_f64();
    record(
        "C4",
        "purity identities",
        worst <= 1e-12 && asym_ok && secs < 1.0,
        format!("max rel dev {worst:.1e} (tol 1e-12, N <= 60); {}; runtime limit 1 s", asym.join(", ")),
        t,
    );

    // 5
    let t = Instant::now();
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let plus = emitter_state(1, 1);
    let minus = emitter_state(1, 2);
    let bell = (plus.amplitudes[0].re - r).abs().max((plus.amplitudes[1].re - r).abs())
        .max((minus.amplitudes[0].re - r).abs())
        .max((minus.amplitudes[1].re + r).abs());
    // (s a† + b†)²|0,0⟩ = √2 s²|2,0⟩ + 2s|1,1⟩ + √2|0,2⟩, norm √8; s = −1.
    let bosonic = [2f64.sqrt() / 8f64.sqrt(), -2.0 / 8f64.sqrt(), 2f64.sqrt() / 8f64.sqrt()];
    let psi2 = emitter_state(2, 2);
    let dev2 = (0..3).map(|l| (psi2.amplitudes[l].re - bosonic[l]).abs()).fold(0.0, f64::max);
    let cmp = two_excitation_comparison(2);
    record(
        "C5",
        "Bell and two-excitation states",
        bell <= 1e-12 && dev2 <= 1e-12 && cmp.derived_vs_algebra <= 1e-12,
        format!(
            "Bell dev {bell:.1e}; N=2 derived {:?} vs bosonic dev {dev2:.1e} (tol 1e-12); displayed (1,-2,1)/sqrt6 differs by {:.3} (reported, not asserted)",
            cmp.derived, cmp.displayed_vs_algebra
        ),
        t,
    );

    // 6
    let t = Instant::now();
    let (mut exact, mut near) = (0.0f64, 0.0f64);
    for be in [0.1f64, 0.7, 2.3] {
        let n_max = (27.7 / be).ceil() as usize;
        let target = 1.0 - (-be).exp();
        exact = exact.max((thermal_purity(be, 1.0, n_max).unwrap().purity - target).abs());
        near = near.max((thermal_purity(be, 0.99, n_max).unwrap().purity - target).abs());
    }
    record(
        "C6",
        "pseudothermal purity",
        exact <= 1e-10 && near <= 0.05,
        format!("p_at=1 dev {exact:.1e} (tol 1e-10); p_at=0.99 dev {near:.4} (tol 0.05)"),
        t,
    );

    // 7 and 8
    let t = Instant::now();
    let p = mode.p_at;
    let dm1 = grid(&mode, 200, 2001);
    let from_psi = run_relaxation(&dm1, 1, &InitialState::PsiN, &relax_spec(&dm1)).unwrap();
    let from_a = run_relaxation(&dm1, 1, &InitialState::SingleA, &relax_spec(&dm1)).unwrap();
    let dm2 = grid(&mode, 72, 401);
    let two = run_relaxation(&dm2, 2, &InitialState::PsiN, &relax_spec(&dm2)).unwrap();
    let secs = t.elapsed().as_secs_f64();
    let e1 = relative(asymptote(&from_psi), p * p);
    let e_a = relative(asymptote(&from_a), p * p / 2.0);
    let e2 = relative(asymptote(&two), p.powi(4));
    record(
        "C7",
        "relaxation to the bound state",
        e1 <= 0.02 && e_a <= 0.03 && e2 <= 0.03 && secs < 600.0,
        format!(
            "psi1 {:.5} vs p^2 {:.5} ({:.2}% <= 2%); 1_A {:.5} vs p^2/2 {:.5} ({:.2}% <= 3%); psi2 {:.5} vs p^4 {:.5} ({:.2}% <= 3%, cells 72, N_modes 401); runtime limit 600 s",
            asymptote(&from_psi),
            p * p,
            100.0 * e1,
            asymptote(&from_a),
            p * p / 2.0,
            100.0 * e_a,
            asymptote(&two),
            p.powi(4),
            100.0 * e2
        ),
        t,
    );

    let t = Instant::now();
    let drift = [&from_psi, &from_a, &two].iter().map(|x| x.norm_drift.max(x.energy_drift)).fold(0.0, f64::max);
    let mut closed = true;
    for (dm, n) in [(&dm1, 1u32), (&dm2, 2)] {
        let basis = build_sector_basis(dm, n).unwrap();
        closed &= (0..basis.dimension()).all(|i| basis.occupation(i).total() == n);
        closed &= build_sector_hamiltonian(dm, &basis).is_ok();
    }
    record(
        "C8",
        "conservation",
        drift <= 1e-8 && closed,
        format!("max norm/energy drift {drift:.1e} (tol 1e-8); sector bases closed under H: {closed}"),
        t,
    );

    // 9
    let t = Instant::now();
    let mut dev: f64 = 0.0;
    let mut named = 0;
    for n in 1..=6 {
        dev = dev.max(truncation_check(n, n, p, 1).unwrap().deviation);
        let below = truncation_check(n, n - 1, p, 1).unwrap();
        if !below.expressible && below.missing.is_some() {
            named += 1;
        }
    }
    record(
        "C9",
        "truncation invariance",
        dev <= 1e-12 && named == 6,
        format!("cap N: max dev {dev:.1e} (tol 1e-12, N <= 6); cap N-1 names the lost amplitude in {named}/6 cases"),
        t,
    );

    // 10
    let t = Instant::now();
    let mut worst: f64 = 0.0;
    for r in [0.0, 0.5, 1.0, 1.5, 2.0] {
        for phase in [0.0, 1.1, 2.9] {
            let st = coherent_atomic_state(Complex64::from_polar(r, phase), 1, 80).unwrap();
            worst = worst.max((st.purity_a() - 1.0).abs());
        }
    }
    record("C10", "coherent-state factorization", worst <= 1e-10, format!("max |purity - 1| {worst:.1e} for |alpha| <= 2 (tol 1e-10)"), t);

    let failed: Vec<&str> = lines.iter().filter(|l| !l.passed).map(|l| l.id).collect();
    println!("{} of {} criteria passed", lines.len() - failed.len(), lines.len());
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("failed: {}", failed.join(", "));
        ExitCode::FAILURE
    }
}
