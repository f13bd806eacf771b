//! Experiment configuration, read from TOML.

use npsense::geometry::FourierMode;
use npsense::potentials::contrast_from_permittivity;
use npsense::{make_shape, HelmholtzParams, ShapeSpec};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("config does not parse: {0}")]
    Parse(String),
    #[error("config key `{key}`: {message}")]
    Invalid { key: String, message: String },
}

fn invalid(key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { key: key.to_string(), message: message.into() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Spectrum,
    Gpt,
    SensitivityMap,
    LowFreqLimit,
    ConditionNumber,
    Recover,
    Newton,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 7] = [
        ExperimentKind::Spectrum,
        ExperimentKind::Gpt,
        ExperimentKind::SensitivityMap,
        ExperimentKind::LowFreqLimit,
        ExperimentKind::ConditionNumber,
        ExperimentKind::Recover,
        ExperimentKind::Newton,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Spectrum => "spectrum",
            ExperimentKind::Gpt => "gpt",
            ExperimentKind::SensitivityMap => "sensitivity_map",
            ExperimentKind::LowFreqLimit => "low_freq_limit",
            ExperimentKind::ConditionNumber => "condition_number",
            ExperimentKind::Recover => "recover",
            ExperimentKind::Newton => "newton",
        }
    }

    pub fn doc(self) -> &'static str {
        match self {
            ExperimentKind::Spectrum => "leading Neumann-Poincare eigenvalues, twin-spectrum defect, ellipse closed form",
            ExperimentKind::Gpt => "GPT matrix by the integral definition and by far-field projection",
            ExperimentKind::SensitivityMap => "per-node GPT sensitivity against boundary curvature",
            ExperimentKind::LowFreqLimit => "distance between scattering coefficients and GPTs as omega -> 0",
            ExperimentKind::ConditionNumber => "condition number of the harmonic / Laplace-Beltrami change of basis",
            ExperimentKind::Recover => "least-squares recovery of h from a GPT sensitivity, with noise",
            ExperimentKind::Newton => "Newton-type shape reconstruction from GPT data",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, ConfigError> {
        ExperimentKind::ALL.into_iter().find(|k| k.name() == s).ok_or_else(|| {
            let valid: Vec<&str> = ExperimentKind::ALL.iter().map(|k| k.name()).collect();
            invalid("kind", format!("unknown experiment kind `{s}`; valid kinds: {}", valid.join(", ")))
        })
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContrastConfig {
    pub lambda: Option<f64>,
    pub eps_c: Option<f64>,
    pub eps_m: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HelmholtzConfig {
    pub mu0: f64,
    pub mu1: f64,
    pub eps0: f64,
    pub eps1: f64,
    pub omega: Option<f64>,
    /// Frequencies for `low_freq_limit`.
    pub omegas: Option<Vec<f64>>,
}

impl HelmholtzConfig {
    pub fn params(&self, omega: f64) -> HelmholtzParams {
        HelmholtzParams { mu0: self.mu0, mu1: self.mu1, eps0: self.eps0, eps1: self.eps1, omega }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OrdersConfig {
    /// GPT / SC order.
    pub k: usize,
    /// Resolution of the change of basis and of the recovery basis.
    pub s: usize,
    /// Number of eigenvalues reported by `spectrum`.
    pub count: usize,
}

impl Default for OrdersConfig {
    fn default() -> Self {
        OrdersConfig { k: 4, s: 4, count: 12 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseConfig {
    /// Relative level; `0.01` is 1%.
    pub level: f64,
    pub draws: usize,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        NoiseConfig { level: 0.0, draws: 20 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SensitivityConfig {
    pub width_nodes: f64,
}

impl Default for SensitivityConfig {
    fn default() -> Self {
        SensitivityConfig { width_nodes: 4.0 }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GptConfig {
    /// Measurement radius for the far-field route; defaults to twice the largest node radius.
    pub radius: Option<f64>,
}

/// Normal perturbation `h(t) = constant + sum cos_m cos(m t) + sin_m sin(m t)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PerturbationConfig {
    pub constant: f64,
    pub modes: Vec<FourierMode>,
}

impl Default for PerturbationConfig {
    fn default() -> Self {
        PerturbationConfig { constant: 0.0, modes: vec![FourierMode { m: 2, cos: 1.0, sin: 0.0 }] }
    }
}

impl PerturbationConfig {
    pub fn eval(&self, t: f64) -> f64 {
        self.constant + self.modes.iter().map(|m| m.cos * (m.m as f64 * t).cos() + m.sin * (m.m as f64 * t).sin()).sum::<f64>()
    }
}

/// Bump added to the initial curve at its curvature maximum and at the antipode.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LocalizationConfig {
    pub height: f64,
    pub width: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NewtonConfig {
    pub max_iters: usize,
    pub alpha_rel: f64,
    pub damping: f64,
    pub tol: f64,
    /// Highest Fourier mode of the update; defaults to 6.
    pub modes: Option<u32>,
    /// Pass threshold on the final boundary L2 error (noiseless runs).
    pub error_tol: f64,
    pub localization: Option<LocalizationConfig>,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        NewtonConfig { max_iters: 15, alpha_rel: 1e-8, damping: 0.5, tol: 1e-10, modes: None, error_tol: 1e-3, localization: None }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    /// Directory under the output root; defaults to the experiment kind.
    pub dir: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    kind: String,
    #[serde(default = "default_n")]
    n: usize,
    #[serde(default)]
    seed: u64,
    shape: ShapeSpec,
    target: Option<ShapeSpec>,
    #[serde(default)]
    contrast: ContrastConfig,
    helmholtz: Option<HelmholtzConfig>,
    #[serde(default)]
    orders: OrdersConfig,
    #[serde(default)]
    noise: NoiseConfig,
    #[serde(default)]
    gpt: GptConfig,
    #[serde(default)]
    sensitivity: SensitivityConfig,
    #[serde(default)]
    perturbation: PerturbationConfig,
    #[serde(default)]
    newton: NewtonConfig,
    #[serde(default)]
    output: OutputConfig,
}

fn default_n() -> usize {
    256
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub n: usize,
    pub seed: u64,
    pub shape: ShapeSpec,
    pub target: Option<ShapeSpec>,
    pub contrast: ContrastConfig,
    /// Resolved contrast.
    pub lambda: f64,
    pub helmholtz: Option<HelmholtzConfig>,
    pub orders: OrdersConfig,
    pub noise: NoiseConfig,
    pub gpt: GptConfig,
    pub sensitivity: SensitivityConfig,
    pub perturbation: PerturbationConfig,
    pub newton: NewtonConfig,
    pub output: OutputConfig,
}

fn check_omega(key: &str, omega: f64) -> Result<(), ConfigError> {
    if !(omega > 0.0 && omega <= 1.0) {
        return Err(invalid(key, format!("omega must be in (0, 1], got {omega}")));
    }
    Ok(())
}

impl ExperimentConfig {
    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read { path: path.display().to_string(), source })?;
        text.parse()
    }

    pub fn output_dir(&self) -> String {
        self.output.dir.clone().unwrap_or_else(|| self.kind.name().to_string())
    }

    fn from_raw(raw: RawConfig) -> Result<Self, ConfigError> {
        let kind: ExperimentKind = raw.kind.parse()?;
        let n = raw.n;
        if n < 16 || n % 2 != 0 {
            return Err(invalid("n", format!("node count must be even and >= 16, got {n}")));
        }
        make_shape(&raw.shape, n).map_err(|e| invalid("shape", e.to_string()))?;
        if let Some(t) = &raw.target {
            make_shape(t, n).map_err(|e| invalid("target", e.to_string()))?;
        }
        let c = &raw.contrast;
        let lambda = match (c.lambda, c.eps_c, c.eps_m) {
            (Some(l), None, None) => l,
            (None, Some(ec), Some(em)) => {
                contrast_from_permittivity(ec, em).map_err(|e| invalid("contrast.eps_c", e.to_string()))?
            }
            (None, None, None) => 1.0,
            (Some(_), _, _) => return Err(invalid("contrast.lambda", "give either lambda or eps_c and eps_m, not both")),
            (None, _, _) => return Err(invalid("contrast.eps_m", "eps_c and eps_m must be given together")),
        };
        if !(lambda.abs() > 0.5) {
            return Err(invalid("contrast.lambda", format!("|lambda| must exceed 1/2, got {lambda}")));
        }
        if let Some(h) = &raw.helmholtz {
            for (key, v) in [("helmholtz.mu0", h.mu0), ("helmholtz.mu1", h.mu1), ("helmholtz.eps0", h.eps0), ("helmholtz.eps1", h.eps1)] {
                if !(v > 0.0) {
                    return Err(invalid(key, format!("must be positive, got {v}")));
                }
            }
            if h.mu0 == h.mu1 && kind == ExperimentKind::LowFreqLimit {
                return Err(invalid("helmholtz.mu1", "mu1 must differ from mu0 so that the static contrast is finite"));
            }
            if let Some(w) = h.omega {
                check_omega("helmholtz.omega", w)?;
            }
            for &w in h.omegas.iter().flatten() {
                check_omega("helmholtz.omegas", w)?;
            }
        }
        let o = &raw.orders;
        if o.k == 0 || o.k > n / 8 {
            return Err(invalid("orders.k", format!("K must be in 1..={} (N/8), got {}", n / 8, o.k)));
        }
        if o.s == 0 || o.s > n / 8 {
            return Err(invalid("orders.s", format!("s must be in 1..={} (N/8), got {}", n / 8, o.s)));
        }
        if o.count == 0 || o.count > n / 4 {
            return Err(invalid("orders.count", format!("count must be in 1..={} (N/4), got {}", n / 4, o.count)));
        }
        if !(raw.noise.level >= 0.0) {
            return Err(invalid("noise.level", format!("must be non-negative, got {}", raw.noise.level)));
        }
        if raw.noise.draws == 0 {
            return Err(invalid("noise.draws", "need at least one draw"));
        }
        if !(raw.sensitivity.width_nodes > 0.0) {
            return Err(invalid("sensitivity.width_nodes", format!("must be positive, got {}", raw.sensitivity.width_nodes)));
        }
        let nw = &raw.newton;
        if !(nw.damping > 0.0 && nw.damping <= 1.0) {
            return Err(invalid("newton.damping", format!("must be in (0, 1], got {}", nw.damping)));
        }
        if !(nw.alpha_rel >= 0.0) {
            return Err(invalid("newton.alpha_rel", format!("must be non-negative, got {}", nw.alpha_rel)));
        }
        if let Some(l) = &nw.localization {
            if !(l.width > 0.0) {
                return Err(invalid("newton.localization.width", format!("must be positive, got {}", l.width)));
            }
        }
        match kind {
            ExperimentKind::LowFreqLimit if raw.helmholtz.is_none() => {
                return Err(invalid("helmholtz", "low_freq_limit needs a [helmholtz] section"))
            }
            ExperimentKind::Newton if raw.target.is_none() && nw.localization.is_none() => {
                return Err(invalid("target", "newton needs a [target] shape or [newton.localization]"))
            }
            _ => {}
        }
        Ok(ExperimentConfig {
            kind,
            n,
            seed: raw.seed,
            shape: raw.shape,
            target: raw.target,
            contrast: raw.contrast,
            lambda,
            helmholtz: raw.helmholtz,
            orders: raw.orders,
            noise: raw.noise,
            gpt: raw.gpt,
            sensitivity: raw.sensitivity,
            perturbation: raw.perturbation,
            newton: raw.newton,
            output: raw.output,
        })
    }
}

impl FromStr for ExperimentConfig {
    type Err = ConfigError;

    fn from_str(text: &str) -> Result<Self, ConfigError> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        ExperimentConfig::from_raw(raw)
    }
}
