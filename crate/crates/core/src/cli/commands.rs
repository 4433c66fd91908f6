//! The five subcommands.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;

use num_complex::Complex64;
use serde::Serialize;
use serde_json::json;

use super::config::{Auto, ConfigError, RunConfig};
use super::output::{json, manifest_hash, write_atomic};
use crate::dynamics::{
    bic_oracle, detuning_sweep, discretize, run_relaxation, CustomComponent, DiscretizedModel, InitialState,
    RelaxationSpec, CLUSTER_WINDOW,
};
use crate::error::Error;
use crate::fock::{
    central_binomial_ratio, coherent_atomic_state, emitter_state, purity_a, purity_closed_form, reduced_density_a,
    relaxation_probability, thermal_purity, truncation_check, two_excitation_comparison, EmitterDensityMatrix,
    EmitterPureState,
};
use crate::model::{Check, EmitterConfig};
use crate::numfmt::{float, float_opt};
use crate::spectral::{
    atomic_weight_with, required_omega0_for_bic, residuals, scan, solve_bic_fixed_frequency, RowStatus, ScanSpec,
    SingleExcitationMode,
};

/// Why a command stopped.
#[derive(Debug)]
pub enum Failure {
    Config(ConfigError),
    Run(Error),
    Io(std::io::Error),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Run(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e)
    }
}

/// Finished command: exit code and the files written.
#[derive(Debug)]
pub struct Completed {
    pub code: i32,
    pub files: Vec<PathBuf>,
    /// Short report echoed to stdout.
    pub summary: String,
}

pub type CmdResult = Result<Completed, Failure>;

struct Writer<'a> {
    cfg: &'a RunConfig,
    files: Vec<PathBuf>,
}

impl<'a> Writer<'a> {
    fn new(cfg: &'a RunConfig) -> Self {
        Self { cfg, files: Vec::new() }
    }

    fn put(&mut self, name: &str, contents: &str) -> std::io::Result<()> {
        let p = write_atomic(std::path::Path::new(&self.cfg.output.dir), name, contents)?;
        self.files.push(p);
        Ok(())
    }

    fn done(self, code: i32, summary: String) -> CmdResult {
        Ok(Completed { code, files: self.files, summary })
    }
}

/// Resonant mode named by the emitter block.
pub fn resolve_mode(cfg: &RunConfig) -> crate::Result<SingleExcitationMode> {
    let model = cfg.model()?;
    let opts = cfg.solver.options();
    let n = cfg.emitters.n;
    match (cfg.emitters.omega0, cfg.emitters.d) {
        (Auto::Auto, Auto::Value(d)) => required_omega0_for_bic(&model, d, n, &opts),
        (Auto::Value(w), Auto::Auto) => {
            let bracket = match cfg.solver.d_bracket {
                Some([a, b]) => (a, b),
                None => {
                    let k0 = model.inverse_omega(w).ok_or_else(|| {
                        Error::Domain(format!("omega0 = {w} must lie above the propagation cutoff {}", model.threshold()))
                    })?;
                    let d0 = n as f64 * PI / k0;
                    (0.8 * d0, 1.2 * d0)
                }
            };
            Ok(solve_bic_fixed_frequency(&model, w, n, bracket, &opts)?.mode)
        }
        (Auto::Value(w), Auto::Value(d)) => {
            let mode = required_omega0_for_bic(&model, d, n, &opts)?;
            let detuning = w - mode.omega0;
            if detuning.abs() > cfg.solver.resonance_window {
                return Err(Error::NoSolution(format!(
                    "omega0 = {w} is detuned by {detuning:e} from the resonant value {} at d = {d}",
                    mode.omega0
                )));
            }
            Ok(mode)
        }
        (Auto::Auto, Auto::Auto) => Err(Error::Precondition("omega0 and d cannot both be auto".into())),
    }
}

#[derive(Serialize)]
struct ModeRecord {
    status: &'static str,
    #[serde(rename = "E")]
    energy: f64,
    kbar: Option<f64>,
    n: Option<u32>,
    parity: crate::spectral::Parity,
    p_at: f64,
    #[serde(rename = "phi_A")]
    phi_a: [f64; 2],
    #[serde(rename = "phi_B")]
    phi_b: [f64; 2],
    residuals: crate::spectral::Residuals,
    omega0: f64,
    d: f64,
    warnings: Vec<String>,
}

pub fn solve(cfg: &RunConfig) -> CmdResult {
    let mut w = Writer::new(cfg);
    let mode = match resolve_mode(cfg) {
        Ok(m) => m,
        Err(Error::NoSolution(msg)) => {
            let body = json(&json!({ "status": "no_solution", "message": msg }));
            if cfg.output.format.json() {
                w.put("solve.json", &body)?;
            }
            if cfg.output.format.csv() {
                w.put("solve.csv", &format!("# {msg}\nstatus\nno_solution\n"))?;
            }
            return w.done(3, body);
        }
        Err(e) => return Err(e.into()),
    };
    let res = residuals(&mode, &cfg.solver.options())?;
    let rec = ModeRecord {
        status: "ok",
        energy: mode.energy,
        kbar: mode.kbar,
        n: mode.n,
        parity: mode.parity,
        p_at: mode.p_at,
        phi_a: [mode.phi_a.re, mode.phi_a.im],
        phi_b: [mode.phi_b.re, mode.phi_b.im],
        residuals: res,
        omega0: mode.omega0,
        d: mode.distance,
        warnings: mode.warnings.clone(),
    };
    let body = json(&rec);
    if cfg.output.format.json() {
        w.put("solve.json", &body)?;
    }
    if cfg.output.format.csv() {
        let mut csv = String::from("E,kbar,n,p_at,omega0,d,residual_a,residual_b,residual_field,status\n");
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{},{},{},ok",
            float(mode.energy),
            float_opt(mode.kbar),
            mode.n.map(|n| n.to_string()).unwrap_or_default(),
            float(mode.p_at),
            float(mode.omega0),
            float(mode.distance),
            float(res.emitter_a),
            float(res.emitter_b),
            float(res.field_sup)
        );
        w.put("solve.csv", &csv)?;
    }
    w.done(0, body)
}

pub fn scan_cmd(cfg: &RunConfig) -> CmdResult {
    let model = cfg.model()?;
    let mut spec = ScanSpec::new(cfg.scan.axis, cfg.scan.grid(), cfg.emitters.n, cfg.scan.observable);
    spec.omega0 = cfg.emitters.omega0.value();
    spec.distance = cfg.emitters.d.value();
    spec.d_bracket = cfg.solver.d_bracket.map(|[a, b]| (a, b));
    spec.resonance_window = cfg.solver.resonance_window;
    let result = scan(&model, &spec, &cfg.solver.options())?;
    let mut w = Writer::new(cfg);
    let csv = result.to_csv();
    if cfg.output.format.csv() {
        w.put("scan.csv", &csv)?;
    }
    if cfg.output.format.json() {
        w.put("scan.json", &json(&result))?;
    }
    let code = if result.rows.iter().any(|r| r.status == RowStatus::Error) { 1 } else { 0 };
    w.done(code, csv)
}

#[derive(Serialize)]
struct FockRecord {
    #[serde(rename = "N")]
    n: usize,
    p_at: f64,
    n_parity: u32,
    #[serde(rename = "C")]
    c: Vec<f64>,
    purity: f64,
    /// Γ(N+½)/(√π N!), the purity at p_at = 1.
    purity_closed_form: f64,
    central_binomial_ratio: f64,
    /// |purity_closed_form·√(πN) − 1|
    asymptote_err: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    comparison: Option<crate::fock::TwoExcitationComparison>,
}

pub fn fock_cmd(cfg: &RunConfig) -> CmdResult {
    let n = cfg.fock.n;
    let p_at = match cfg.fock.p_at {
        Some(p) => p,
        None => resolve_mode(cfg)?.p_at,
    };
    let n_parity = cfg.emitters.n;
    let c = reduced_density_a(n, p_at)?;
    let closed = purity_closed_form(n);
    let rec = FockRecord {
        n,
        p_at,
        n_parity,
        purity: purity_a(n, p_at)?,
        c,
        purity_closed_form: closed,
        central_binomial_ratio: central_binomial_ratio(n),
        asymptote_err: (n > 0).then(|| (closed * (PI * n as f64).sqrt() - 1.0).abs()),
        comparison: (n == 2).then(|| two_excitation_comparison(n_parity)),
    };
    let body = json(&rec);
    let mut w = Writer::new(cfg);
    if cfg.output.format.json() {
        w.put("fock.json", &body)?;
    }
    if cfg.output.format.csv() {
        let mut csv = format!("# N={} p_at={} purity={}\nl,C\n", n, float(p_at), float(rec.purity));
        for (l, x) in rec.c.iter().enumerate() {
            let _ = writeln!(csv, "{l},{}", float(*x));
        }
        w.put("fock.csv", &csv)?;
    }
    w.done(0, body)
}

fn load_initial(cfg: &RunConfig) -> Result<InitialState, Failure> {
    if let Some(s) = cfg.dynamics.initial.builtin() {
        return Ok(s);
    }
    let path = cfg.dynamics.custom_file.as_deref().unwrap_or_default();
    let text = fs::read_to_string(path).map_err(|e| ConfigError(format!("cannot read custom state {path}: {e}")))?;
    let parts: Vec<CustomComponent> = serde_json::from_str(&text)
        .map_err(|e| ConfigError(format!("custom state {path} rejected at line {}: {e}", e.line())))?;
    Ok(InitialState::Custom(parts))
}

fn dynamics_grid(cfg: &RunConfig, mode: &SingleExcitationMode) -> crate::Result<DiscretizedModel> {
    let emitters = EmitterConfig { omega0: mode.omega0, distance: mode.distance, levels: cfg.emitters.levels };
    discretize(mode.model(), &emitters, cfg.dynamics.cells, cfg.dynamics.n_modes, mode.n)
}

fn horizon(cfg: &RunConfig, dm: &DiscretizedModel) -> f64 {
    cfg.dynamics.horizon.value().unwrap_or(0.7 * dm.revival_time())
}

/// p_at^{2N} times the weight of ψ^(N) in a pure emitter initial state.
fn expected_relaxation(initial: &InitialState, n: usize, p_at: f64, n_parity: u32) -> Option<f64> {
    let psi: EmitterPureState = match initial {
        InitialState::PsiN => emitter_state(n, n_parity),
        InitialState::SingleA => EmitterPureState::basis(n, n).ok()?,
        InitialState::BellMinus => emitter_state(n, 2),
        InitialState::Custom(_) => return None,
    };
    relaxation_probability(&EmitterDensityMatrix::from_pure(&psi), n, p_at, n_parity).ok()
}

pub fn evolve_cmd(cfg: &RunConfig) -> CmdResult {
    let initial = load_initial(cfg)?;
    let mode = resolve_mode(cfg)?;
    let dm = dynamics_grid(cfg, &mode)?;
    let n_parity = cfg.emitters.n;
    let spec = RelaxationSpec {
        horizon: horizon(cfg, &dm),
        samples: cfg.dynamics.samples,
        tol: cfg.dynamics.tol,
        n_parity,
    };
    let sector = cfg.dynamics.sector;
    let hash = manifest_hash(cfg);
    let mut w = Writer::new(cfg);

    if !cfg.dynamics.offsets.is_empty() {
        let sweep = detuning_sweep(
            &dm,
            &cfg.dynamics.offsets,
            sector,
            &initial,
            &spec,
            cfg.solver.resonance_window,
            &cfg.solver.options(),
        )?;
        let csv = sweep.to_csv();
        if cfg.output.format.csv() {
            w.put("sweep.csv", &csv)?;
        }
        if cfg.output.format.json() {
            w.put("sweep.json", &json(&json!({ "manifest_hash": hash, "config": cfg, "sweep": sweep })))?;
        }
        let code = if sweep.rows.iter().any(|r| r.status != "ok") { 1 } else { 0 };
        return w.done(code, csv);
    }

    let traj = run_relaxation(&dm, sector, &initial, &spec)?;
    let expected = expected_relaxation(&initial, sector as usize, mode.p_at, n_parity);
    let record = json!({
        "manifest_hash": hash,
        "config": cfg,
        "grid": {
            "box_length": dm.box_length,
            "dk": dm.dk,
            "n_modes": dm.n_modes,
            "cells": dm.cells,
            "coupling_sum_rel_error": dm.coupling_sum_relative_error(),
        },
        "sector": sector,
        "initial": traj.initial,
        "horizon": traj.horizon,
        "samples": spec.samples,
        "tol": spec.tol,
        "revival_time": traj.revival_time,
        "flag_time": traj.flag_time,
        "p_at": mode.p_at,
        "expected_asymptote": expected,
        "asymptote": traj.asymptote,
        "norm_drift": traj.norm_drift,
        "energy_drift": traj.energy_drift,
        "krylov": traj.stats,
    });
    let body = json(&record);
    if cfg.output.format.csv() {
        w.put("trajectory.csv", &traj.to_csv())?;
    }
    if cfg.output.format.json() {
        w.put("evolve.json", &body)?;
    }
    w.done(0, body)
}

fn thermal_auto(beta_e: f64, p_at: f64) -> crate::Result<f64> {
    match thermal_purity(beta_e, p_at, 0) {
        Ok(t) => Ok(t.purity),
        Err(Error::Truncation { required, .. }) => Ok(thermal_purity(beta_e, p_at, required)?.purity),
        Err(e) => Err(e),
    }
}

fn run_checks(cfg: &RunConfig) -> crate::Result<Vec<Check>> {
    let v = &cfg.verify;
    let opts = cfg.solver.options();
    let mut checks = Vec::new();

    let mode = resolve_mode(cfg)?;
    let res = residuals(&mode, &opts)?;
    checks.push(Check::at_most("residual.emitter_a", res.emitter_a, v.emitter_residual));
    checks.push(Check::at_most("residual.emitter_b", res.emitter_b, v.emitter_residual));
    checks.push(Check::at_most("residual.field", res.field_sup, v.field_residual));
    let kbar = mode.kbar.unwrap_or(f64::NAN);
    let w2 = atomic_weight_with(mode.model(), kbar, mode.distance, &opts)?.value;
    checks.push(Check::at_most("weight.two_routes", (mode.p_at - w2).abs(), v.weight_routes));

    let mut worst: f64 = 0.0;
    for n in 0..=60 {
        let closed = purity_closed_form(n);
        worst = worst.max((purity_a(n, 1.0)? / closed - 1.0).abs()).max((central_binomial_ratio(n) / closed - 1.0).abs());
    }
    checks.push(Check::at_most("purity.identity", worst, v.purity_identity));
    let asym = [10usize, 20, 40]
        .iter()
        .map(|&n| n as f64 * (purity_closed_form(n) * (PI * n as f64).sqrt() - 1.0).abs())
        .fold(0.0, f64::max);
    checks.push(Check::new("purity.asymptotic", asym, 0.2, asym <= 0.2, "max N·|purity·√(πN) − 1|"));

    let r = std::f64::consts::FRAC_1_SQRT_2;
    let bell = [(1u32, 1.0), (2, -1.0)]
        .iter()
        .map(|&(np, s)| {
            let psi = emitter_state(1, np);
            (psi.amplitudes[0].re - r).abs().max((psi.amplitudes[1].re - s * r).abs())
        })
        .fold(0.0, f64::max);
    checks.push(Check::at_most("state.bell", bell, v.state_algebra));
    let cmp = two_excitation_comparison(cfg.emitters.n);
    checks.push(Check::at_most("state.two_excitation", cmp.derived_vs_algebra, v.state_algebra));
    checks.push(Check::new(
        "state.two_excitation_displayed",
        cmp.displayed_vs_algebra,
        f64::INFINITY,
        true,
        "deviation of the (1, ∓2, 1)/√6 form; reported, not asserted",
    ));

    let mut thermal: f64 = 0.0;
    for be in [0.1, 0.7, 2.3] {
        thermal = thermal.max((thermal_auto(be, 1.0)? - (1.0 - (-be as f64).exp())).abs());
    }
    checks.push(Check::at_most("thermal.full_weight", thermal, v.thermal));

    let mut dev: f64 = 0.0;
    let mut missed = 0usize;
    for n in 1..=6 {
        dev = dev.max(truncation_check(n, n, mode.p_at, cfg.emitters.n)?.deviation);
        let below = truncation_check(n, n - 1, mode.p_at, cfg.emitters.n)?;
        if below.expressible || below.missing.is_none() {
            missed += 1;
        }
    }
    checks.push(Check::at_most("truncation.cap_n", dev, v.truncation));
    checks.push(Check::new(
        "truncation.cap_below_n",
        missed as f64,
        0.0,
        missed == 0,
        "caps N̄ = N − 1 that failed to name a lost amplitude",
    ));

    let mut coh: f64 = 0.0;
    for alpha in [Complex64::new(0.5, 0.0), Complex64::new(1.0, 1.0), Complex64::from_polar(2.0, PI / 3.0)] {
        coh = coh.max((coherent_atomic_state(alpha, cfg.emitters.n, 60)?.purity_a() - 1.0).abs());
    }
    checks.push(Check::at_most("coherent.purity", coh, v.coherent));

    let dm = dynamics_grid(cfg, &mode)?;
    let oracle = bic_oracle(&dm, &mode, CLUSTER_WINDOW)?;
    checks.push(Check::new(
        "oracle.overlap",
        oracle.overlap,
        v.oracle_overlap_min,
        oracle.overlap >= v.oracle_overlap_min,
        "cluster-projected weight of the analytic mode",
    ));
    checks.push(Check::at_most("oracle.ladder_residual", oracle.ladder_residual, 1e-3));

    let spec = RelaxationSpec { horizon: horizon(cfg, &dm), samples: cfg.dynamics.samples, tol: cfg.dynamics.tol, n_parity: cfg.emitters.n };
    let traj = run_relaxation(&dm, 1, &InitialState::PsiN, &spec)?;
    checks.push(Check::at_most("dynamics.norm_drift", traj.norm_drift, v.conservation));
    checks.push(Check::at_most("dynamics.energy_drift", traj.energy_drift, v.conservation));
    let target = mode.p_at * mode.p_at;
    let rel = traj.asymptote.map_or(f64::INFINITY, |a| (a.p_at / target - 1.0).abs());
    checks.push(Check::at_most("dynamics.relaxation", rel, v.relaxation_rel));

    // Two-excitation sector on a small grid: closure, conservation and the square law.
    let small = discretize(mode.model(), &EmitterConfig::new(mode.omega0, mode.distance), 10, 31, mode.n)?;
    let short = RelaxationSpec { horizon: 20.0, samples: 20, tol: cfg.dynamics.tol, n_parity: cfg.emitters.n };
    let one = run_relaxation(&small, 1, &InitialState::PsiN, &short)?;
    let two = run_relaxation(&small, 2, &InitialState::PsiN, &short)?;
    checks.push(Check::at_most("sector2.norm_drift", two.norm_drift, v.conservation));
    checks.push(Check::at_most("sector2.energy_drift", two.energy_drift, v.conservation));
    let square = one.points.iter().zip(&two.points).map(|(a, b)| (b.p_at - a.p_at * a.p_at).abs()).fold(0.0, f64::max);
    checks.push(Check::at_most("sector2.square_law", square, v.conservation));
    Ok(checks)
}

pub fn verify_cmd(cfg: &RunConfig) -> CmdResult {
    let checks = run_checks(cfg)?;
    let all = checks.iter().all(|c| c.passed);
    let report = json!({
        "manifest_hash": manifest_hash(cfg),
        "all_passed": all,
        "checks": checks,
        "config": cfg,
    });
    let mut w = Writer::new(cfg);
    if cfg.output.format.json() {
        w.put("verify.json", &json(&report))?;
    }
    let mut table = String::from("name,measured,tolerance,passed\n");
    for c in &checks {
        let _ = writeln!(table, "{},{},{},{}", c.name, float(c.measured), float(c.tolerance), c.passed);
    }
    if cfg.output.format.csv() {
        w.put("verify.csv", &table)?;
    }
    w.done(if all { 0 } else { 1 }, table)
}
