//! Declarative scenario configuration for the command-line driver.
//!
//! A scenario is a TOML file with nested sections picking a space, a
//! functional, initial data, scheme parameters, and a list of audits. See
//! the repository README and the `examples/` directory for complete files.

use serde::Deserialize;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("config field `{field}`: {message}")]
    Invalid { field: &'static str, message: String },
}

fn invalid(field: &'static str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { field, message: message.into() }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub seed: u64,
    pub space: SpaceConfig,
    pub functional: FunctionalConfig,
    pub initial: InitialConfig,
    /// Second starting point, for the contraction audit.
    pub initial2: Option<InitialConfig>,
    pub scheme: SchemeConfig,
    pub audits: AuditsConfig,
    #[serde(default)]
    pub output: OutputConfig,
    /// Trajectory input for the `verify` subcommand.
    pub verify: Option<VerifyConfig>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceConfig {
    pub kind: String,
    pub dim: Option<usize>,
    pub grid_m: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionalConfig {
    pub kind: String,
    /// Scalar quadratic coefficient.
    pub a: Option<f64>,
    /// Full symmetric matrix, row by row.
    pub matrix: Option<Vec<Vec<f64>>>,
    pub b: Option<Vec<f64>>,
    pub weight: Option<f64>,
    pub kappa: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialConfig {
    pub coords: Option<Vec<f64>>,
    pub gaussian: Option<GaussianInit>,
    pub file: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianInit {
    pub mean: f64,
    pub variance: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeConfig {
    pub horizon: f64,
    pub n_list: Vec<usize>,
    #[serde(default)]
    pub eta: f64,
    #[serde(default)]
    pub eps_target: f64,
    #[serde(default = "default_tol")]
    pub solver_tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default)]
    pub force_iterative: bool,
    /// Measure study errors against a refined scheme run with
    /// `lcm(n_list) * refine_reference` steps instead of the closed-form
    /// flow (even multiplier). The natural choice when the closed form
    /// solves the continuum problem while the scheme evolves a fixed grid.
    pub refine_reference: Option<usize>,
}

fn default_tol() -> f64 {
    1e-10
}

fn default_max_iter() -> usize {
    200
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuditsConfig {
    pub names: Vec<String>,
    /// Lower bound asserted on the fitted convergence order by `rates`.
    pub min_order: Option<f64>,
    pub contraction_tol: Option<f64>,
    pub duality_tau_grid: Option<Vec<f64>>,
    pub duality_tol: Option<f64>,
    /// Tolerance for the pairwise energy-identity comparison.
    pub identity_tol: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default)]
    pub save_trajectory: bool,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    pub trajectory: PathBuf,
}

/// Audit names the driver understands.
pub const AUDIT_NAMES: &[&str] = &[
    "rates",
    "crandall-liggett",
    "bound-regular",
    "bound-domain",
    "contraction",
    "evi-integral",
    "energy-identity",
    "slope-monotonicity",
    "discrete-stability",
    "continuous-stability",
    "duality",
    "mccann",
    "local-error",
];

impl ScenarioConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let cfg: ScenarioConfig = toml::from_str(&text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        match self.space.kind.as_str() {
            "euclidean" => {
                if self.space.dim.is_none() {
                    return Err(invalid("space.dim", "required for euclidean spaces"));
                }
            }
            "quantile" => {
                if self.space.grid_m.is_none() {
                    return Err(invalid("space.grid_m", "required for quantile spaces"));
                }
            }
            other => {
                return Err(invalid(
                    "space.kind",
                    format!("unknown space kind `{other}` (euclidean | quantile)"),
                ))
            }
        }
        match self.functional.kind.as_str() {
            "quadratic" | "abs" | "neg_sqrt" => {
                if self.space.kind != "euclidean" {
                    return Err(invalid(
                        "functional.kind",
                        format!("`{}` needs a euclidean space", self.functional.kind),
                    ));
                }
            }
            "entropy" | "entropy_potential" => {
                if self.space.kind != "quantile" {
                    return Err(invalid(
                        "functional.kind",
                        format!("`{}` needs a quantile space", self.functional.kind),
                    ));
                }
            }
            other => {
                return Err(invalid(
                    "functional.kind",
                    format!(
                        "unknown functional kind `{other}` \
                         (quadratic | abs | neg_sqrt | entropy | entropy_potential)"
                    ),
                ))
            }
        }
        if self.scheme.n_list.is_empty() {
            return Err(invalid("scheme.n_list", "must not be empty"));
        }
        if !self.scheme.n_list.windows(2).all(|w| w[0] < w[1]) {
            return Err(invalid("scheme.n_list", "must be strictly increasing"));
        }
        if self.scheme.horizon <= 0.0 || self.scheme.horizon.is_nan() {
            return Err(invalid("scheme.horizon", "must be positive"));
        }
        for name in &self.audits.names {
            if !AUDIT_NAMES.contains(&name.as_str()) {
                return Err(invalid(
                    "audits.names",
                    format!("unknown audit `{name}`; known: {}", AUDIT_NAMES.join(", ")),
                ));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
seed = 7
[space]
kind = "euclidean"
dim = 1
[functional]
kind = "quadratic"
a = 1.0
[initial]
coords = [1.0]
[scheme]
horizon = 1.0
n_list = [4, 8]
[audits]
names = ["rates"]
"#;

    #[test]
    fn minimal_config_parses() {
        let cfg: ScenarioConfig = toml::from_str(MINIMAL).unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.scheme.eta, 0.0);
        assert_eq!(cfg.scheme.solver_tol, 1e-10);
    }

    #[test]
    fn unknown_functional_kind_names_the_field() {
        let text = MINIMAL.replace("\"quadratic\"", "\"cubic\"");
        let cfg: ScenarioConfig = toml::from_str(&text).unwrap();
        let err = cfg.validate().unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("functional.kind"), "{msg}");
        assert!(msg.contains("cubic"), "{msg}");
    }

    #[test]
    fn unknown_audit_is_rejected() {
        let text = MINIMAL.replace("[\"rates\"]", "[\"frobnicate\"]");
        let cfg: ScenarioConfig = toml::from_str(&text).unwrap();
        let err = cfg.validate().unwrap_err();
        assert!(err.to_string().contains("audits.names"));
    }

    #[test]
    fn unknown_toml_key_is_rejected_at_parse_time() {
        let text = format!("{MINIMAL}\n[extra]\nfoo = 1\n");
        assert!(toml::from_str::<ScenarioConfig>(&text).is_err());
    }
}
