//! Experiment configuration: defaults, an optional JSON config file, and
//! command-line flags, merged in that order of increasing priority.

use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Fsasc,
    SascA,
    SascD,
    Fasc,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Fsasc => "fsasc",
            Method::SascA => "sasc-a",
            Method::SascD => "sasc-d",
            Method::Fasc => "fasc",
        }
    }

    pub fn parse(s: &str) -> Result<Self, CliError> {
        match s.trim() {
            "fsasc" => Ok(Method::Fsasc),
            "sasc-a" => Ok(Method::SascA),
            "sasc-d" => Ok(Method::SascD),
            "fasc" => Ok(Method::Fasc),
            other => Err(CliError::Config(format!(
                "unknown method {other:?} (expected fsasc, sasc-a, sasc-d or fasc)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Json,
    Csv,
}

impl Format {
    pub fn parse(s: &str) -> Result<Self, CliError> {
        match s.trim() {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            other => Err(CliError::Config(format!("unknown format {other:?} (expected json or csv)"))),
        }
    }
}

/// Values as they may appear in a config file or on the command line; every
/// field optional so layers can be merged.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct ConfigLayer {
    pub methods: Option<Vec<Method>>,
    pub ambient_dim: Option<usize>,
    /// One or more dimension configurations.
    pub dims: Option<Vec<Vec<usize>>>,
    pub counts: Option<Vec<usize>>,
    pub sigmas: Option<Vec<f64>>,
    pub trials: Option<usize>,
    pub seed: Option<u64>,
    /// Number of clusters.
    pub n: Option<usize>,
    /// Polynomial degree; defaults to `n`.
    pub degree: Option<usize>,
    pub min_cluster: Option<usize>,
    pub gammas: Option<Vec<f64>>,
    pub tol: Option<f64>,
    pub format: Option<Format>,
}

impl ConfigLayer {
    /// `self` with gaps filled from `lower`.
    pub fn over(self, lower: ConfigLayer) -> ConfigLayer {
        ConfigLayer {
            methods: self.methods.or(lower.methods),
            ambient_dim: self.ambient_dim.or(lower.ambient_dim),
            dims: self.dims.or(lower.dims),
            counts: self.counts.or(lower.counts),
            sigmas: self.sigmas.or(lower.sigmas),
            trials: self.trials.or(lower.trials),
            seed: self.seed.or(lower.seed),
            n: self.n.or(lower.n),
            degree: self.degree.or(lower.degree),
            min_cluster: self.min_cluster.or(lower.min_cluster),
            gammas: self.gammas.or(lower.gammas),
            tol: self.tol.or(lower.tol),
            format: self.format.or(lower.format),
        }
    }
}

/// Parses a JSON config file.
pub fn parse_config(text: &str) -> Result<ConfigLayer, CliError> {
    serde_json::from_str(text).map_err(|e| CliError::Config(format!("config file: {e}")))
}

pub const DEFAULT_AMBIENT_DIM: usize = 9;
pub const DEFAULT_PER_SUBSPACE: usize = 200;
pub const DEFAULT_MIN_CLUSTER: usize = 10;
pub const DEFAULT_GAMMA: f64 = 0.1;
pub const DEFAULT_TOL: f64 = 1e-10;

/// Fully resolved configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct ExperimentConfig {
    pub methods: Vec<Method>,
    pub ambient_dim: usize,
    pub dims: Vec<Vec<usize>>,
    /// Per-subspace counts; `None` means [`DEFAULT_PER_SUBSPACE`] each.
    pub counts: Option<Vec<usize>>,
    pub sigmas: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    pub n: Option<usize>,
    pub degree: Option<usize>,
    pub min_cluster: usize,
    pub gammas: Vec<f64>,
    pub tol: f64,
    pub format: Format,
}

impl ExperimentConfig {
    pub fn resolve(layer: ConfigLayer) -> Result<Self, CliError> {
        let cfg = ExperimentConfig {
            methods: layer.methods.unwrap_or_else(|| vec![Method::Fsasc]),
            ambient_dim: layer.ambient_dim.unwrap_or(DEFAULT_AMBIENT_DIM),
            dims: layer.dims.unwrap_or_else(|| vec![vec![2, 3, 4]]),
            counts: layer.counts,
            sigmas: layer.sigmas.unwrap_or_else(|| vec![0.0]),
            trials: layer.trials.unwrap_or(1),
            seed: layer.seed.unwrap_or(0),
            n: layer.n,
            degree: layer.degree,
            min_cluster: layer.min_cluster.unwrap_or(DEFAULT_MIN_CLUSTER),
            gammas: layer.gammas.unwrap_or_else(|| vec![DEFAULT_GAMMA]),
            tol: layer.tol.unwrap_or(DEFAULT_TOL),
            format: layer.format.unwrap_or(Format::Json),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        if self.methods.is_empty() {
            return bad("at least one method is required".into());
        }
        if self.ambient_dim == 0 {
            return bad("ambient dimension must be positive".into());
        }
        if self.dims.is_empty() || self.dims.iter().any(|d| d.is_empty()) {
            return bad("dims must list at least one subspace".into());
        }
        for set in &self.dims {
            if let Some(&d) = set.iter().find(|&&d| d == 0 || d > self.ambient_dim) {
                return bad(format!("subspace dimension {d} must lie in 1..={}", self.ambient_dim));
            }
        }
        if let Some(c) = &self.counts {
            if self.dims.iter().any(|d| d.len() != c.len()) {
                return bad(format!("{} counts do not match the number of subspaces", c.len()));
            }
            if c.contains(&0) {
                return bad("counts must be positive".into());
            }
        }
        if self.sigmas.is_empty() || self.sigmas.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
            return bad("sigma values must be finite and nonnegative".into());
        }
        for set in &self.dims {
            if self.sigmas.iter().any(|&s| s > 0.0) && set.contains(&self.ambient_dim) {
                return bad("noisy samples need every subspace to be proper".into());
            }
        }
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if self.n == Some(0) || self.degree == Some(0) {
            return bad("n and degree must be at least 1".into());
        }
        if self.min_cluster == 0 {
            return bad("min-cluster must be at least 1".into());
        }
        if self.gammas.is_empty() || self.gammas.iter().any(|g| !(g.is_finite() && *g >= 0.0)) {
            return bad("gamma values must be finite and nonnegative".into());
        }
        if !(self.tol.is_finite() && self.tol > 0.0) {
            return bad("tol must be positive".into());
        }
        Ok(())
    }

    pub fn counts_for(&self, dims: &[usize]) -> Vec<usize> {
        self.counts.clone().unwrap_or_else(|| vec![DEFAULT_PER_SUBSPACE; dims.len()])
    }

    /// The effective configuration as JSON, echoed into every output.
    pub fn echo(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serializes")
    }
}

/// Parses `"2,3,4"` into `[2, 3, 4]`.
pub fn parse_usize_list(s: &str) -> Result<Vec<usize>, CliError> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| CliError::Config(format!("{t:?} is not a nonnegative integer")))
        })
        .collect()
}

pub fn parse_f64_list(s: &str) -> Result<Vec<f64>, CliError> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Config(format!("{t:?} is not a number")))
        })
        .collect()
}

/// Parses `"2,3,4;4,5,6"` into two dimension configurations.
pub fn parse_dim_sets(s: &str) -> Result<Vec<Vec<usize>>, CliError> {
    s.split(';').map(parse_usize_list).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn precedence() {
        let flags = ConfigLayer {
            seed: Some(3),
            ..Default::default()
        };
        let file = parse_config(r#"{"seed": 1, "trials": 4, "methods": ["sasc-d"]}"#).unwrap();
        let cfg = ExperimentConfig::resolve(flags.over(file)).unwrap();
        assert_eq!(cfg.seed, 3);
        assert_eq!(cfg.trials, 4);
        assert_eq!(cfg.methods, vec![Method::SascD]);
        assert_eq!(cfg.gammas, vec![DEFAULT_GAMMA]);
    }

    #[test]
    fn rejects_bad_values() {
        assert!(parse_config(r#"{"unknown": 1}"#).is_err());
        assert!(parse_config(r#"{"methods": ["kmeans"]}"#).is_err());
        for layer in [
            ConfigLayer {
                trials: Some(0),
                ..Default::default()
            },
            ConfigLayer {
                dims: Some(vec![vec![10]]),
                ..Default::default()
            },
            ConfigLayer {
                counts: Some(vec![1, 2]),
                ..Default::default()
            },
            ConfigLayer {
                sigmas: Some(vec![-1.0]),
                ..Default::default()
            },
            ConfigLayer {
                tol: Some(0.0),
                ..Default::default()
            },
        ] {
            assert!(ExperimentConfig::resolve(layer).is_err());
        }
    }

    #[test]
    fn list_parsing() {
        assert_eq!(parse_dim_sets("2,3,4;8, 8").unwrap(), vec![vec![2, 3, 4], vec![8, 8]]);
        assert_eq!(parse_f64_list("0,0.01").unwrap(), vec![0.0, 0.01]);
        assert!(parse_usize_list("2,x").is_err());
        assert!(Method::parse("lrr").is_err());
    }
}
