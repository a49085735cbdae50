//! Scenario files: sectioned TOML, validated into simulator inputs.
//!
//! ```toml
//! [plant]
//! omega_n = 2.0
//! zeta = 0.15
//! e1_0 = 2.0        # or `x0` for a first-order scenario
//! e2_0 = -0.3
//!
//! [ppf]
//! rho0 = 2.5
//! rho_inf = 0.35
//! lambda = 1.4
//!
//! [gain]
//! k0 = 0.8          # or "auto"
//! k1 = 1.6
//! gamma_out = 0.7
//! eps0 = 0.3
//! eps = 0.1
//! inner.variant = "gaussian"
//! Lambda = 0.9
//!
//! [disturbance]
//! d_max = 0.25
//! freq = 10.0
//!
//! [sim]
//! horizon = 10.0
//! dt = 1e-3
//! integrator = "rk4"
//!
//! [controller]
//! controller = "ppf"
//! c = 0.8
//! sign_mode = "smoothed"
//! boundary_layer = 1e-2
//! ```

use std::fmt;
use std::path::Path;

use ftsmc_core::{
    erf_inv, Disturbance, FirstOrderScenario, HybridGainSpec, InnerGain, Integrator, PerformanceFunction,
    SecondOrderController, SecondOrderPlant, SecondOrderScenario, SimConfig, SlidingConfig, Switching,
};
use serde::{Deserialize, Serialize};

/// Factor applied to `|x0|` when the envelope is inflated to admit the initial state.
pub const INFLATION_FACTOR: f64 = 1.1;
/// Margin used when `k0 = "auto"`.
pub const AUTO_K0_MARGIN: f64 = 1.05;

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioError {
    /// `section.key` the problem refers to, when there is one.
    pub key: Option<String>,
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ScenarioError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (&self.key, self.line) {
            (Some(k), Some(l)) => write!(f, "{k} (line {l}): {}", self.message),
            (Some(k), None) => write!(f, "{k}: {}", self.message),
            (None, Some(l)) => write!(f, "line {l}: {}", self.message),
            (None, None) => f.write_str(&self.message),
        }
    }
}

impl std::error::Error for ScenarioError {}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GainValue {
    Value(f64),
    Keyword(AutoKeyword),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AutoKeyword {
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InnerVariant {
    MixedPower,
    Gaussian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IntegratorName {
    Rk4,
    Euler,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ControllerName {
    Ppf,
    Baseline,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SignMode {
    Hard,
    Smoothed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub e1_0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub e2_0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_n: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zeta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PpfSection {
    pub rho0: f64,
    pub rho_inf: f64,
    pub lambda: f64,
    #[serde(default)]
    pub allow_envelope_inflation: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InnerSection {
    pub variant: InnerVariant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GainSection {
    pub k0: GainValue,
    pub k1: f64,
    pub gamma_out: f64,
    pub eps0: f64,
    pub eps: f64,
    pub inner: InnerSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_in: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, rename = "Lambda", skip_serializing_if = "Option::is_none")]
    pub lambda_inner: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisturbanceSection {
    pub d_max: f64,
    #[serde(default = "default_freq")]
    pub freq: f64,
}

fn default_freq() -> f64 {
    10.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    pub horizon: f64,
    pub dt: f64,
    #[serde(default = "default_integrator")]
    pub integrator: IntegratorName,
    #[serde(default = "default_stride")]
    pub record_stride: usize,
}

fn default_integrator() -> IntegratorName {
    IntegratorName::Rk4
}

fn default_stride() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerSection {
    #[serde(default = "default_controller")]
    pub controller: ControllerName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(default = "default_sign_mode")]
    pub sign_mode: SignMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boundary_layer: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u_limit: Option<f64>,
}

fn default_controller() -> ControllerName {
    ControllerName::Ppf
}

fn default_sign_mode() -> SignMode {
    SignMode::Hard
}

/// The file as written, before validation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub plant: PlantSection,
    pub ppf: PpfSection,
    pub gain: GainSection,
    pub disturbance: DisturbanceSection,
    pub sim: SimSection,
    pub controller: ControllerSection,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    FirstOrder(FirstOrderScenario<f64>),
    SecondOrder(SecondOrderScenario<f64>),
}

/// A validated scenario ready to simulate.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub file: ScenarioFile,
    pub model: Model,
    pub sim: SimConfig<f64>,
    pub pf: PerformanceFunction<f64>,
    /// False when `|x(0)| >= rho(0)` and inflation was not requested.
    pub initial_feasible: bool,
    /// Substitutions made while loading (envelope inflation, resolved `k0`).
    pub notes: Vec<String>,
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Self, ScenarioError> {
        let src = std::fs::read_to_string(path).map_err(|e| ScenarioError {
            key: None,
            line: None,
            message: format!("cannot read {}: {e}", path.display()),
        })?;
        Self::parse(&src)
    }

    pub fn parse(src: &str) -> Result<Self, ScenarioError> {
        let file: ScenarioFile = toml::from_str(src).map_err(|e| ScenarioError {
            key: None,
            line: e.span().map(|s| line_of_offset(src, s.start)),
            message: e.message().trim().to_string(),
        })?;
        build(file).map_err(|(key, message)| ScenarioError {
            line: locate(src, key),
            key: Some(key.to_string()),
            message,
        })
    }

    pub fn from_file(file: ScenarioFile) -> Result<Self, ScenarioError> {
        build(file).map_err(|(key, message)| ScenarioError { key: Some(key.to_string()), line: None, message })
    }

    /// Serializes the file as loaded (not the resolved values).
    pub fn dump(&self) -> String {
        dump(&self.file)
    }

    pub fn is_first_order(&self) -> bool {
        matches!(self.model, Model::FirstOrder(_))
    }

    pub fn controller(&self) -> ControllerName {
        match &self.model {
            Model::FirstOrder(_) => ControllerName::Ppf,
            Model::SecondOrder(sc) => match sc.controller {
                SecondOrderController::Ppf => ControllerName::Ppf,
                SecondOrderController::Baseline => ControllerName::Baseline,
            },
        }
    }

    pub fn gain(&self) -> &HybridGainSpec<f64> {
        match &self.model {
            Model::FirstOrder(sc) => &sc.gain,
            Model::SecondOrder(sc) => &sc.gain,
        }
    }

    pub fn disturbance(&self) -> &Disturbance<f64> {
        match &self.model {
            Model::FirstOrder(sc) => &sc.disturbance,
            Model::SecondOrder(sc) => &sc.disturbance,
        }
    }

    /// Initial position error: `x0` or `e1_0`.
    pub fn initial_position(&self) -> f64 {
        match &self.model {
            Model::FirstOrder(sc) => sc.x0,
            Model::SecondOrder(sc) => sc.e0.0,
        }
    }
}

pub fn dump(file: &ScenarioFile) -> String {
    toml::to_string(file).expect("scenario files always serialize")
}

type BuildError = (&'static str, String);

fn err<T>(key: &'static str, message: impl Into<String>) -> Result<T, BuildError> {
    Err((key, message.into()))
}

fn require(v: Option<f64>, key: &'static str) -> Result<f64, BuildError> {
    match v {
        Some(v) if v.is_finite() => Ok(v),
        Some(_) => err(key, "must be finite"),
        None => err(key, "is required"),
    }
}

fn core_err(key: &'static str) -> impl Fn(ftsmc_core::Error) -> BuildError {
    move |e| (key, e.to_string())
}

fn build(file: ScenarioFile) -> Result<Scenario, BuildError> {
    let mut notes = Vec::new();
    let p = &file.plant;
    let first_order = match (p.x0, p.e1_0, p.e2_0) {
        (Some(_), None, None) => true,
        (None, Some(_), Some(_)) => false,
        (Some(_), _, _) => return err("plant.x0", "cannot be combined with e1_0/e2_0"),
        (None, Some(_), None) => return err("plant.e2_0", "is required with e1_0"),
        (None, None, Some(_)) => return err("plant.e1_0", "is required with e2_0"),
        (None, None, None) => return err("plant.x0", "give x0 (first order) or e1_0 and e2_0 (second order)"),
    };
    let x0 = if first_order { require(p.x0, "plant.x0")? } else { require(p.e1_0, "plant.e1_0")? };

    let mut rho0 = file.ppf.rho0;
    let mut initial_feasible = x0.abs() < rho0;
    if !initial_feasible && file.ppf.allow_envelope_inflation {
        let inflated = INFLATION_FACTOR * x0.abs();
        notes.push(format!(
            "ppf.rho0 inflated from {rho0} to {inflated} ({INFLATION_FACTOR} * |x(0)|) to admit the initial state"
        ));
        rho0 = inflated;
        initial_feasible = true;
    }
    let pf = PerformanceFunction::new(rho0, file.ppf.rho_inf, file.ppf.lambda).map_err(|e| match &e {
        ftsmc_core::Error::InvalidParameter { name: "rho_inf", .. } => ("ppf.rho_inf", e.to_string()),
        ftsmc_core::Error::InvalidParameter { name: "lambda", .. } => ("ppf.lambda", e.to_string()),
        _ => ("ppf.rho0", e.to_string()),
    })?;

    let disturbance = Disturbance::new(file.disturbance.d_max, file.disturbance.freq).map_err(|e| match &e {
        ftsmc_core::Error::InvalidParameter { name: "freq", .. } => ("disturbance.freq", e.to_string()),
        _ => ("disturbance.d_max", e.to_string()),
    })?;

    let g = &file.gain;
    let inner = match g.inner.variant {
        InnerVariant::MixedPower => {
            for (v, k) in [(g.lambda_inner, "gain.Lambda")] {
                if v.is_some() {
                    return err(k, "only applies to inner.variant = \"gaussian\"");
                }
            }
            let a = require(g.a, "gain.a")?;
            let b = require(g.b, "gain.b")?;
            let gamma = require(g.gamma_in, "gain.gamma_in")?;
            let alpha = require(g.alpha, "gain.alpha")?;
            InnerGain::mixed_power(a, b, gamma, alpha).map_err(gain_err)?
        }
        InnerVariant::Gaussian => {
            for (v, k) in [(g.a, "gain.a"), (g.b, "gain.b"), (g.gamma_in, "gain.gamma_in"), (g.alpha, "gain.alpha")] {
                if v.is_some() {
                    return err(k, "only applies to inner.variant = \"mixed_power\"");
                }
            }
            InnerGain::gaussian(require(g.lambda_inner, "gain.Lambda")?).map_err(gain_err)?
        }
    };

    let d_max = disturbance.d_max;
    let k0 = match g.k0 {
        GainValue::Value(v) => v,
        GainValue::Keyword(AutoKeyword::Auto) => {
            let (k0, basis) = if first_order {
                if x0.abs() < pf.rho0() {
                    let xi0 = erf_inv(x0 / pf.rho0()).map_err(core_err("plant.x0"))?.abs();
                    (AUTO_K0_MARGIN * pf.scaled_disturbance_bound(xi0, d_max), format!("d_bar_xi(xi0 = {xi0:.6})"))
                } else {
                    // This scenario is refused before it runs; any admissible k0 will do.
                    (AUTO_K0_MARGIN * pf.scaled_disturbance_bound(g.eps, d_max), "d_bar_xi(eps), x0 outside the envelope".to_string())
                }
            } else {
                (AUTO_K0_MARGIN * d_max, "d_max".to_string())
            };
            if k0 <= 0.0 || k0.is_nan() {
                return err("gain.k0", "\"auto\" resolves to 0 when d_max = 0; give k0 explicitly");
            }
            notes.push(format!("gain.k0 = \"auto\" resolved to {k0} ({AUTO_K0_MARGIN} * {basis})"));
            k0
        }
    };
    let gain = HybridGainSpec::new(k0, g.k1, g.gamma_out, g.eps0, g.eps, inner).map_err(gain_err)?;

    let ctl = &file.controller;
    let switching = match ctl.sign_mode {
        SignMode::Hard => {
            if ctl.boundary_layer.is_some() {
                return err("controller.boundary_layer", "only applies to sign_mode = \"smoothed\"");
            }
            Switching::Hard
        }
        SignMode::Smoothed => {
            let bl = require(ctl.boundary_layer, "controller.boundary_layer")?;
            let s = Switching::Smoothed { boundary_layer: bl };
            s.validate().map_err(core_err("controller.boundary_layer"))?;
            s
        }
    };

    let model = if first_order {
        if p.omega_n.is_some() || p.zeta.is_some() {
            return err(if p.omega_n.is_some() { "plant.omega_n" } else { "plant.zeta" }, "not used by first-order scenarios");
        }
        if ctl.c.is_some() {
            return err("controller.c", "not used by first-order scenarios");
        }
        if ctl.controller == ControllerName::Baseline {
            return err("controller.controller", "the baseline law is defined for second-order scenarios only");
        }
        Model::FirstOrder(FirstOrderScenario { pf, gain, disturbance, switching, x0 })
    } else {
        let plant = SecondOrderPlant::new(require(p.omega_n, "plant.omega_n")?, require(p.zeta, "plant.zeta")?)
            .map_err(|e| match &e {
                ftsmc_core::Error::InvalidParameter { name: "zeta", .. } => ("plant.zeta", e.to_string()),
                _ => ("plant.omega_n", e.to_string()),
            })?;
        let sliding = SlidingConfig::new(require(ctl.c, "controller.c")?, switching).map_err(core_err("controller.c"))?;
        let controller = match ctl.controller {
            ControllerName::Ppf => SecondOrderController::Ppf,
            ControllerName::Baseline => SecondOrderController::Baseline,
        };
        let e0 = (x0, require(p.e2_0, "plant.e2_0")?);
        Model::SecondOrder(SecondOrderScenario { pf: Some(pf), plant, gain, disturbance, sliding, e0, controller })
    };
    if !first_order && ctl.controller == ControllerName::Baseline {
        // The envelope is diagnostic only for the baseline; nothing to refuse.
        initial_feasible = true;
    }

    let s = &file.sim;
    let integrator = match s.integrator {
        IntegratorName::Rk4 => Integrator::Rk4,
        IntegratorName::Euler => Integrator::Euler,
    };
    let mut sim = SimConfig { horizon: s.horizon, dt: s.dt, integrator, record_stride: s.record_stride, u_limit: ctl.u_limit };
    sim.validate().map_err(|e| match &e {
        ftsmc_core::Error::InvalidParameter { name: "horizon", .. } => ("sim.horizon", e.to_string()),
        ftsmc_core::Error::InvalidParameter { name: "record_stride", .. } => ("sim.record_stride", e.to_string()),
        ftsmc_core::Error::InvalidParameter { name: "u_limit", .. } => ("controller.u_limit", e.to_string()),
        _ => ("sim.dt", e.to_string()),
    })?;
    sim.u_limit = ctl.u_limit;

    Ok(Scenario { file, model, sim, pf, initial_feasible, notes })
}

fn gain_err(e: ftsmc_core::Error) -> BuildError {
    let key = match &e {
        ftsmc_core::Error::InvalidParameter { name, .. } => match *name {
            "k0" => "gain.k0",
            "k1" => "gain.k1",
            "gamma_out" => "gain.gamma_out",
            "eps0" => "gain.eps0",
            "a" => "gain.a",
            "b" => "gain.b",
            "gamma_in" => "gain.gamma_in",
            "alpha" => "gain.alpha",
            "Lambda" => "gain.Lambda",
            _ => "gain.eps",
        },
        _ => "gain.k0",
    };
    (key, e.to_string())
}

fn line_of_offset(src: &str, offset: usize) -> usize {
    src[..offset.min(src.len())].matches('\n').count() + 1
}

/// Line of `section.key` in the source, falling back to the section header.
fn locate(src: &str, qualified: &str) -> Option<usize> {
    let (section, key) = qualified.split_once('.')?;
    let mut current = "";
    let mut header = None;
    for (i, raw) in src.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            current = name.trim();
            if current == section {
                header = Some(i + 1);
            }
            continue;
        }
        if current == section {
            if let Some((lhs, _)) = line.split_once('=') {
                let lhs: String = lhs.split('.').map(str::trim).collect::<Vec<_>>().join(".");
                if lhs == key {
                    return Some(i + 1);
                }
            }
        }
    }
    header
}

#[cfg(test)]
mod tests {
    use super::*;

    const SECOND_ORDER: &str = r#"
[plant]
omega_n = 2.0
zeta = 0.15
e1_0 = 2.0
e2_0 = -0.3

[ppf]
rho0 = 2.5
rho_inf = 0.35
lambda = 1.4

[gain]
k0 = 0.8
k1 = 1.6
gamma_out = 0.7
eps0 = 0.3
eps = 0.1
inner.variant = "gaussian"
Lambda = 0.9

[disturbance]
d_max = 0.25
freq = 10.0

[sim]
horizon = 10.0
dt = 1e-3
integrator = "rk4"

[controller]
controller = "ppf"
c = 0.8
sign_mode = "smoothed"
boundary_layer = 1e-2
"#;

    #[test]
    fn parses_second_order() {
        let sc = Scenario::parse(SECOND_ORDER).unwrap();
        assert!(!sc.is_first_order());
        assert_eq!(sc.controller(), ControllerName::Ppf);
        assert_eq!(sc.gain().k0, 0.8);
        assert_eq!(sc.sim.n_steps(), 10_000);
        assert!(sc.initial_feasible && sc.notes.is_empty());
    }

    #[test]
    fn unknown_key_rejected_with_line() {
        let src = SECOND_ORDER.replace("zeta = 0.15", "zeta = 0.15\nomega = 3.0");
        let e = Scenario::parse(&src).unwrap_err();
        assert!(e.message.contains("omega"), "{e}");
        assert_eq!(e.line, Some(5));
    }

    #[test]
    fn validation_error_names_key_and_line() {
        let src = SECOND_ORDER.replace("eps = 0.1", "eps = 0.5");
        let e = Scenario::parse(&src).unwrap_err();
        assert_eq!(e.key.as_deref(), Some("gain.eps"));
        assert_eq!(e.line, Some(18));
        let src = SECOND_ORDER.replace("Lambda = 0.9", "Lambda = -1.0");
        let e = Scenario::parse(&src).unwrap_err();
        assert_eq!(e.key.as_deref(), Some("gain.Lambda"));
        assert_eq!(e.line, Some(20));
    }

    #[test]
    fn wrong_variant_parameters_rejected() {
        let src = SECOND_ORDER.replace("Lambda = 0.9", "Lambda = 0.9\na = 0.2");
        assert_eq!(Scenario::parse(&src).unwrap_err().key.as_deref(), Some("gain.a"));
    }

    #[test]
    fn auto_k0_second_order() {
        let src = SECOND_ORDER.replace("k0 = 0.8", "k0 = \"auto\"");
        let sc = Scenario::parse(&src).unwrap();
        assert!((sc.gain().k0 - 0.2625).abs() < 1e-12);
        assert_eq!(sc.notes.len(), 1);
        assert!(Scenario::parse(&src.replace("k0 = \"auto\"", "k0 = \"often\"")).is_err());
    }

    #[test]
    fn first_order_inflation() {
        let src = r#"
[plant]
x0 = 4.5
[ppf]
rho0 = 4.0
rho_inf = 0.05
lambda = 4.0
[gain]
k0 = "auto"
k1 = 1.9
gamma_out = 0.7
eps0 = 0.6
eps = 0.2
inner.variant = "mixed_power"
a = 0.2
b = 0.5
gamma_in = 0.7
alpha = 1.5
[disturbance]
d_max = 0.25
[sim]
horizon = 10.0
dt = 1e-3
[controller]
sign_mode = "hard"
"#;
        let refused = Scenario::parse(src).unwrap();
        assert!(refused.is_first_order() && !refused.initial_feasible);
        let inflated = Scenario::parse(&src.replace("lambda = 4.0", "lambda = 4.0\nallow_envelope_inflation = true")).unwrap();
        assert!(inflated.initial_feasible);
        assert!((inflated.pf.rho0() - 4.95).abs() < 1e-12);
        assert!(inflated.notes[0].contains("inflated"));
    }

    #[test]
    fn dump_roundtrip() {
        let sc = Scenario::parse(SECOND_ORDER).unwrap();
        let again = Scenario::parse(&sc.dump()).unwrap();
        assert_eq!(sc, again);
    }
}
