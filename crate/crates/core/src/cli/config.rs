//! Strict JSON run configuration with dotted-path overrides.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::Value;

use crate::dynamics::InitialState;
use crate::model::{make_rectangular_model_with, ProfileName, WaveguideModel};
use crate::spectral::{Observable, ScanAxis, SpectralOptions};

/// Failure to read, override or validate a configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

/// A number or the literal string "auto".
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Auto {
    Auto,
    Value(f64),
}

impl Auto {
    pub fn value(self) -> Option<f64> {
        match self {
            Auto::Auto => None,
            Auto::Value(v) => Some(v),
        }
    }
}

impl Serialize for Auto {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Auto::Auto => s.serialize_str("auto"),
            Auto::Value(v) => s.serialize_f64(*v),
        }
    }
}

impl<'de> Deserialize<'de> for Auto {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        match Value::deserialize(d)? {
            Value::String(s) if s == "auto" => Ok(Auto::Auto),
            Value::Number(n) => n.as_f64().map(Auto::Value).ok_or_else(|| serde::de::Error::custom("bad number")),
            other => Err(serde::de::Error::custom(format!("expected a number or \"auto\", got {other}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DispersionName {
    #[default]
    Rectangular,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelBlock {
    pub dispersion: DispersionName,
    /// Propagation cutoff M.
    pub cutoff: f64,
    pub k_c: f64,
    pub lambda: f64,
    pub profile: ProfileName,
}

impl Default for ModelBlock {
    fn default() -> Self {
        Self { dispersion: DispersionName::Rectangular, cutoff: 1.0, k_c: 2.0, lambda: 0.1, profile: ProfileName::InvSqrtGauss }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EmitterBlock {
    pub omega0: Auto,
    pub d: Auto,
    pub n: u32,
    /// Levels per emitter N̄; absent means harmonic.
    pub levels: Option<u32>,
}

impl Default for EmitterBlock {
    fn default() -> Self {
        Self { omega0: Auto::Auto, d: Auto::Value(PI / 2.0), n: 1, levels: None }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverBlock {
    pub abs_tol: f64,
    pub patch_fraction: f64,
    pub grid_points: usize,
    pub resonance_tol: f64,
    pub root_ftol: f64,
    pub bracket_samples: usize,
    pub cutoff_factor: f64,
    /// Distance bracket when d is "auto"; defaults to ±20% around nπ/k0.
    pub d_bracket: Option<[f64; 2]>,
    /// |ω0 − ω0_required| accepted as resonant when both are fixed.
    pub resonance_window: f64,
}

impl Default for SolverBlock {
    fn default() -> Self {
        let o = SpectralOptions::default();
        Self {
            abs_tol: o.abs_tol,
            patch_fraction: o.patch_fraction,
            grid_points: o.grid_points,
            resonance_tol: o.resonance_tol,
            root_ftol: o.root_ftol,
            bracket_samples: o.bracket_samples,
            cutoff_factor: o.cutoff_factor,
            d_bracket: None,
            resonance_window: 1e-10,
        }
    }
}

impl SolverBlock {
    pub fn options(&self) -> SpectralOptions {
        SpectralOptions {
            abs_tol: self.abs_tol,
            patch_fraction: self.patch_fraction,
            grid_points: self.grid_points,
            resonance_tol: self.resonance_tol,
            root_ftol: self.root_ftol,
            bracket_samples: self.bracket_samples,
            cutoff_factor: self.cutoff_factor,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum InitialName {
    #[default]
    #[serde(rename = "psiN")]
    PsiN,
    #[serde(rename = "singleA")]
    SingleA,
    #[serde(rename = "bell_minus")]
    BellMinus,
    #[serde(rename = "custom")]
    Custom,
}

impl InitialName {
    pub fn parse(s: &str) -> Option<Self> {
        serde_json::from_value(Value::String(s.to_string())).ok()
    }

    /// The state for every kind except `custom`, which needs its file.
    pub fn builtin(self) -> Option<InitialState> {
        match self {
            Self::PsiN => Some(InitialState::PsiN),
            Self::SingleA => Some(InitialState::SingleA),
            Self::BellMinus => Some(InitialState::BellMinus),
            Self::Custom => None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DynamicsBlock {
    pub cells: usize,
    pub n_modes: usize,
    /// Evolution horizon; "auto" is 0.7·L/v_g.
    pub horizon: Auto,
    pub samples: usize,
    pub tol: f64,
    /// Excitation number N of the evolved sector.
    pub sector: u32,
    pub initial: InitialName,
    /// JSON list of components for `initial = "custom"`.
    pub custom_file: Option<String>,
    /// ω0 offsets for a detuning sweep; empty means a single run.
    pub offsets: Vec<f64>,
}

impl Default for DynamicsBlock {
    fn default() -> Self {
        Self {
            cells: 200,
            n_modes: 2001,
            horizon: Auto::Auto,
            samples: 400,
            tol: 1e-10,
            sector: 1,
            initial: InitialName::PsiN,
            custom_file: None,
            offsets: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    #[default]
    Linear,
    Log,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScanBlock {
    pub axis: ScanAxis,
    pub observable: Observable,
    /// Explicit values; when absent the range below is used.
    pub values: Option<Vec<f64>>,
    pub start: f64,
    pub stop: f64,
    pub points: usize,
    pub spacing: Spacing,
}

impl Default for ScanBlock {
    fn default() -> Self {
        Self {
            axis: ScanAxis::Lambda,
            observable: Observable::PAt,
            values: None,
            start: 0.0125,
            stop: 0.1,
            points: 4,
            spacing: Spacing::Log,
        }
    }
}

impl ScanBlock {
    pub fn grid(&self) -> Vec<f64> {
        if let Some(v) = &self.values {
            return v.clone();
        }
        if self.points == 1 {
            return vec![self.start];
        }
        let last = (self.points - 1) as f64;
        (0..self.points)
            .map(|i| {
                let t = i as f64 / last;
                match self.spacing {
                    Spacing::Linear => self.start + t * (self.stop - self.start),
                    Spacing::Log => (self.start.ln() + t * (self.stop.ln() - self.start.ln())).exp(),
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FockBlock {
    pub n: usize,
    /// Overrides the weight of the configured mode.
    pub p_at: Option<f64>,
}

impl Default for FockBlock {
    fn default() -> Self {
        Self { n: 2, p_at: None }
    }
}

/// Tolerances of the named checks run by `verify`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifyBlock {
    pub emitter_residual: f64,
    pub field_residual: f64,
    pub weight_routes: f64,
    pub purity_identity: f64,
    pub state_algebra: f64,
    pub thermal: f64,
    pub truncation: f64,
    pub coherent: f64,
    pub oracle_overlap_min: f64,
    pub conservation: f64,
    pub relaxation_rel: f64,
}

impl Default for VerifyBlock {
    fn default() -> Self {
        Self {
            emitter_residual: 1e-10,
            field_residual: 1e-12,
            weight_routes: 1e-10,
            purity_identity: 1e-12,
            state_algebra: 1e-12,
            thermal: 1e-10,
            truncation: 1e-12,
            coherent: 1e-10,
            oracle_overlap_min: 0.999,
            conservation: 1e-8,
            relaxation_rel: 0.02,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
    #[default]
    Both,
}

impl Format {
    pub fn csv(self) -> bool {
        matches!(self, Format::Csv | Format::Both)
    }

    pub fn json(self) -> bool {
        matches!(self, Format::Json | Format::Both)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputBlock {
    pub dir: String,
    pub format: Format,
}

impl Default for OutputBlock {
    fn default() -> Self {
        Self { dir: ".".into(), format: Format::Both }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub model: ModelBlock,
    pub emitters: EmitterBlock,
    pub solver: SolverBlock,
    pub dynamics: DynamicsBlock,
    pub scan: ScanBlock,
    pub fock: FockBlock,
    pub verify: VerifyBlock,
    pub output: OutputBlock,
}

/// Set `path` (dot separated) inside a JSON object. The value is parsed as
/// JSON when possible and kept as a string otherwise.
pub fn apply_override(root: &mut Value, assignment: &str) -> Result<(), ConfigError> {
    let (path, raw) = assignment
        .split_once('=')
        .ok_or_else(|| ConfigError(format!("--set expects key=value, got {assignment:?}")))?;
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let keys: Vec<&str> = path.split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(ConfigError(format!("--set has an empty key segment in {path:?}")));
    }
    let mut node = root;
    for (i, key) in keys.iter().enumerate() {
        let obj = node
            .as_object_mut()
            .ok_or_else(|| ConfigError(format!("--set {path}: {} is not an object", keys[..i].join("."))))?;
        if i + 1 == keys.len() {
            obj.insert(key.to_string(), value);
            return Ok(());
        }
        node = obj.entry(key.to_string()).or_insert_with(|| Value::Object(Default::default()));
    }
    unreachable!("loop returns on the last key")
}

fn positive(name: &str, x: f64) -> Result<(), ConfigError> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(ConfigError(format!("{name} must be positive and finite, got {x}")))
    }
}

impl RunConfig {
    /// Parse `text` (or `{}`), apply overrides, then validate.
    pub fn load(text: Option<&str>, overrides: &[String]) -> Result<Self, ConfigError> {
        let mut root: Value = match text {
            Some(t) => serde_json::from_str(t)
                .map_err(|e| ConfigError(format!("config is not valid JSON at line {}, column {}: {e}", e.line(), e.column())))?,
            None => Value::Object(Default::default()),
        };
        if !root.is_object() {
            return Err(ConfigError("config must be a JSON object".into()));
        }
        for o in overrides {
            apply_override(&mut root, o)?;
        }
        let cfg: RunConfig = serde_json::from_value(root).map_err(|e| ConfigError(format!("config rejected: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.emitters.omega0 == Auto::Auto && self.emitters.d == Auto::Auto {
            return Err(ConfigError("at most one of emitters.omega0 and emitters.d may be \"auto\"".into()));
        }
        if self.emitters.n == 0 {
            return Err(ConfigError("emitters.n must be at least 1".into()));
        }
        let s = &self.solver;
        for (name, x) in [
            ("solver.abs_tol", s.abs_tol),
            ("solver.resonance_tol", s.resonance_tol),
            ("solver.root_ftol", s.root_ftol),
            ("solver.resonance_window", s.resonance_window),
            ("dynamics.tol", self.dynamics.tol),
            ("model.cutoff", self.model.cutoff),
            ("model.k_c", self.model.k_c),
        ] {
            positive(name, x)?;
        }
        let v = &self.verify;
        for (name, x) in [
            ("verify.emitter_residual", v.emitter_residual),
            ("verify.field_residual", v.field_residual),
            ("verify.weight_routes", v.weight_routes),
            ("verify.purity_identity", v.purity_identity),
            ("verify.state_algebra", v.state_algebra),
            ("verify.thermal", v.thermal),
            ("verify.truncation", v.truncation),
            ("verify.coherent", v.coherent),
            ("verify.oracle_overlap_min", v.oracle_overlap_min),
            ("verify.conservation", v.conservation),
            ("verify.relaxation_rel", v.relaxation_rel),
        ] {
            positive(name, x)?;
        }
        s.options().validate().map_err(|e| ConfigError(format!("solver: {e}")))?;
        if let Some(d) = self.emitters.d.value() {
            positive("emitters.d", d)?;
        }
        if let Some(h) = self.dynamics.horizon.value() {
            if !(h >= 0.0 && h.is_finite()) {
                return Err(ConfigError(format!("dynamics.horizon must be non-negative, got {h}")));
            }
        }
        if self.dynamics.initial == InitialName::Custom && self.dynamics.custom_file.is_none() {
            return Err(ConfigError("dynamics.initial = \"custom\" needs dynamics.custom_file".into()));
        }
        if self.scan.values.is_none() && self.scan.points == 0 {
            return Err(ConfigError("scan.points must be at least 1".into()));
        }
        if self.scan.spacing == Spacing::Log && self.scan.values.is_none() && !(self.scan.start > 0.0 && self.scan.stop > 0.0) {
            return Err(ConfigError("log-spaced scans need positive scan.start and scan.stop".into()));
        }
        if let Some(p) = self.fock.p_at {
            if !(0.0..=1.0).contains(&p) {
                return Err(ConfigError(format!("fock.p_at must lie in [0, 1], got {p}")));
            }
        }
        Ok(())
    }

    pub fn model(&self) -> crate::Result<WaveguideModel> {
        let m = &self.model;
        match m.dispersion {
            DispersionName::Rectangular => make_rectangular_model_with(m.cutoff, m.k_c, m.lambda, m.profile),
        }
    }

    /// Canonical JSON of the resolved configuration.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("configuration serializes")
    }
}
