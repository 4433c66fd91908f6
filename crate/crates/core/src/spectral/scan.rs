//! Parameter scans over resonant modes.

use std::f64::consts::PI;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::WaveguideModel;
use crate::numfmt::{float, float_opt};

use super::{required_omega0_for_bic, solve_bic_fixed_frequency, SingleExcitationMode, SpectralOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScanAxis {
    /// Emitter distance d; ω0 is either derived or compared against the fixed value.
    #[serde(alias = "d")]
    Distance,
    /// Emitter frequency ω0; the distance is solved for.
    Omega0,
    /// Coupling scale λ at fixed d; ω0 is derived.
    Lambda,
}

impl ScanAxis {
    pub fn name(self) -> &'static str {
        match self {
            ScanAxis::Distance => "d",
            ScanAxis::Omega0 => "omega0",
            ScanAxis::Lambda => "lambda",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Observable {
    PAt,
    #[serde(rename = "E")]
    Energy,
    Omega0Required,
    Detuning,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSpec {
    pub axis: ScanAxis,
    pub values: Vec<f64>,
    pub n: u32,
    pub observable: Observable,
    /// Fixed emitter frequency for distance and λ scans; required for detuning.
    pub omega0: Option<f64>,
    /// Fixed distance for ω0 and λ scans.
    pub distance: Option<f64>,
    /// Distance bracket for ω0 scans; defaults to ±20% around nπ/k0.
    pub d_bracket: Option<(f64, f64)>,
    /// |ω0 − ω0_required| accepted as resonant when ω0 is fixed.
    pub resonance_window: f64,
}

impl ScanSpec {
    pub fn new(axis: ScanAxis, values: Vec<f64>, n: u32, observable: Observable) -> Self {
        Self { axis, values, n, observable, omega0: None, distance: None, d_bracket: None, resonance_window: 1e-10 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowStatus {
    Ok,
    NoSolution,
    Error,
}

impl RowStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            RowStatus::Ok => "ok",
            RowStatus::NoSolution => "no_solution",
            RowStatus::Error => "error",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanRow {
    pub param: &'static str,
    pub value: f64,
    #[serde(rename = "E")]
    pub energy: Option<f64>,
    pub kbar: Option<f64>,
    pub p_at: Option<f64>,
    pub omega0: Option<f64>,
    pub d: Option<f64>,
    pub detuning: Option<f64>,
    pub observable: Option<f64>,
    pub status: RowStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScanResult {
    pub axis: ScanAxis,
    pub observable: Observable,
    pub n: u32,
    pub rows: Vec<ScanRow>,
}

impl ScanResult {
    /// CSV with `#` comment lines, readable by gnuplot and most CSV tools.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# axis={} n={} observable={}", self.axis.name(), self.n, observable_name(self.observable));
        out.push_str("param,value,E,kbar,p_at,omega0,status\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                r.param,
                float(r.value),
                float_opt(r.energy),
                float_opt(r.kbar),
                float_opt(r.p_at),
                float_opt(r.omega0),
                r.status.as_str()
            );
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scan rows serialize")
    }

    /// Observable column of rows with a solution, in row order.
    pub fn observable_values(&self) -> Vec<(f64, f64)> {
        self.rows.iter().filter_map(|r| r.observable.map(|o| (r.value, o))).collect()
    }
}

pub(crate) fn observable_name(o: Observable) -> &'static str {
    match o {
        Observable::PAt => "p_at",
        Observable::Energy => "E",
        Observable::Omega0Required => "omega0_required",
        Observable::Detuning => "detuning",
    }
}

/// Evaluate one resonant mode per scan value.
///
/// Points run in parallel; rows keep the order of `spec.values`. Points with
/// no resonant mode get status `no_solution` and empty numeric fields.
pub fn scan(model: &WaveguideModel, spec: &ScanSpec, opts: &SpectralOptions) -> Result<ScanResult> {
    opts.validate()?;
    if spec.values.is_empty() {
        return Err(Error::Domain("scan range is empty".into()));
    }
    let increasing = spec.values.windows(2).all(|w| w[1] > w[0]);
    let decreasing = spec.values.windows(2).all(|w| w[1] < w[0]);
    if !(increasing || decreasing) {
        return Err(Error::Domain("scan values must be strictly monotone".into()));
    }
    if spec.n == 0 {
        return Err(Error::Domain("resonance index n must be at least 1".into()));
    }
    match spec.axis {
        ScanAxis::Omega0 if spec.distance.is_some() => {
            return Err(Error::Domain("an omega0 scan solves for d; do not fix the distance".into()));
        }
        ScanAxis::Lambda if spec.distance.is_none() => {
            return Err(Error::Domain("a lambda scan needs a fixed distance".into()));
        }
        _ => {}
    }
    if spec.observable == Observable::Detuning && spec.omega0.is_none() && spec.axis != ScanAxis::Omega0 {
        return Err(Error::Domain("the detuning observable needs a fixed omega0".into()));
    }
    let rows = spec.values.par_iter().map(|&v| scan_point(model, spec, v, opts)).collect();
    Ok(ScanResult { axis: spec.axis, observable: spec.observable, n: spec.n, rows })
}

fn scan_point(model: &WaveguideModel, spec: &ScanSpec, value: f64, opts: &SpectralOptions) -> ScanRow {
    let param = spec.axis.name();
    let solved: Result<(SingleExcitationMode, f64)> = match spec.axis {
        ScanAxis::Distance => required_omega0_for_bic(model, value, spec.n, opts).map(|m| {
            let req = m.omega0;
            (m, req)
        }),
        ScanAxis::Lambda => model
            .with_lambda(value)
            .and_then(|m| required_omega0_for_bic(&m, spec.distance.unwrap_or(f64::NAN), spec.n, opts))
            .map(|m| {
                let req = m.omega0;
                (m, req)
            }),
        ScanAxis::Omega0 => {
            let bracket = spec.d_bracket.or_else(|| {
                model.inverse_omega(value).map(|k0| {
                    let guess = spec.n as f64 * PI / k0;
                    (0.8 * guess, 1.2 * guess)
                })
            });
            match bracket {
                None => Err(Error::NoSolution(format!("ω0 = {value} is not above the threshold"))),
                Some(b) => solve_bic_fixed_frequency(model, value, spec.n, b, opts).map(|s| (s.mode, value)),
            }
        }
    };
    let empty = |status: RowStatus, message: String| ScanRow {
        param,
        value,
        energy: None,
        kbar: None,
        p_at: None,
        omega0: None,
        d: None,
        detuning: None,
        observable: None,
        status,
        message: Some(message),
    };
    let (mode, omega0_required) = match solved {
        Ok(x) => x,
        Err(e @ (Error::NoSolution(_) | Error::Precondition(_))) => return empty(RowStatus::NoSolution, e.to_string()),
        Err(e) => return empty(RowStatus::Error, e.to_string()),
    };
    let detuning = match spec.axis {
        ScanAxis::Omega0 => Some(0.0),
        _ => spec.omega0.map(|w| w - omega0_required),
    };
    if let Some(det) = detuning {
        if spec.axis != ScanAxis::Omega0 && det.abs() > spec.resonance_window && spec.observable != Observable::Detuning {
            return ScanRow {
                detuning: Some(det),
                ..empty(RowStatus::NoSolution, format!("fixed ω0 misses the resonance by {det:e}"))
            };
        }
    }
    let observable = match spec.observable {
        Observable::PAt => Some(mode.p_at),
        Observable::Energy => Some(mode.energy),
        Observable::Omega0Required => Some(omega0_required),
        Observable::Detuning => detuning,
    };
    ScanRow {
        param,
        value,
        energy: Some(mode.energy),
        kbar: mode.kbar,
        p_at: Some(mode.p_at),
        omega0: Some(omega0_required),
        d: Some(mode.distance),
        detuning,
        observable,
        status: RowStatus::Ok,
        message: if mode.warnings.is_empty() { None } else { Some(mode.warnings.join("; ")) },
    }
}
