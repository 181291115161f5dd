//! Method identifiers and per-method hyperparameters.
//!
//! Defaults are the benchmark settings used throughout: significance 0.05
//! for CI tests, BIC score for GES, pairwise likelihood ratio with edge
//! threshold 0.1 for Direct-LiNGAM, and the augmented-Lagrangian settings
//! (l1, outer cap 100, h tolerance 1e-8, penalty cap 1e16, threshold 0.1)
//! for both NOTEARS variants, with 10 hidden units for the MLP.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    StablePc,
    Ges,
    DirectLingam,
    NotearsLinear,
    NotearsMlp,
    Granger,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::StablePc,
        Method::Ges,
        Method::DirectLingam,
        Method::NotearsLinear,
        Method::NotearsMlp,
        Method::Granger,
    ];

    /// The five non-temporal methods that consume a DataMatrix.
    pub const NON_TEMPORAL: [Method; 5] = [
        Method::StablePc,
        Method::Ges,
        Method::DirectLingam,
        Method::NotearsLinear,
        Method::NotearsMlp,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Method::StablePc => "stable-pc",
            Method::Ges => "ges",
            Method::DirectLingam => "direct-lingam",
            Method::NotearsLinear => "notears-linear",
            Method::NotearsMlp => "notears-mlp",
            Method::Granger => "granger",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        for m in Method::ALL {
            if m.name() == s {
                return Ok(m);
            }
        }
        Err(Error::Config(format!(
            "unknown method {s:?}; expected one of: stable-pc, ges, direct-lingam, \
             notears-linear, notears-mlp, granger"
        )))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StablePcConfig {
    /// Significance level of the Fisher's Z CI tests.
    pub alpha: f64,
}

impl Default for StablePcConfig {
    fn default() -> Self {
        Self { alpha: 0.05 }
    }
}

/// GES uses the Gaussian BIC local score; there is nothing to tune.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GesConfig {}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DirectLingamConfig {
    /// Keep an edge when the fitted coefficient magnitude exceeds this.
    pub edge_threshold: f64,
}

impl Default for DirectLingamConfig {
    fn default() -> Self {
        Self { edge_threshold: 0.1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NotearsLinearConfig {
    pub l1: f64,
    pub max_outer_iter: usize,
    pub h_tol: f64,
    pub rho_max: f64,
    pub edge_threshold: f64,
    /// Inner proximal-gradient iteration cap per outer step.
    pub max_inner_iter: usize,
}

impl Default for NotearsLinearConfig {
    fn default() -> Self {
        Self {
            l1: 0.1,
            max_outer_iter: 100,
            h_tol: 1e-8,
            rho_max: 1e16,
            edge_threshold: 0.1,
            max_inner_iter: 2000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NotearsMlpConfig {
    pub l1: f64,
    pub l2: f64,
    pub max_outer_iter: usize,
    pub h_tol: f64,
    pub rho_max: f64,
    pub hidden_units: usize,
    pub edge_threshold: f64,
    /// Projected quasi-Newton iteration cap per outer step.
    pub max_inner_iter: usize,
    /// Seeded initializations to try; the best final objective wins.
    pub restarts: usize,
    /// Seed for weight initialization.
    pub seed: u64,
}

impl Default for NotearsMlpConfig {
    fn default() -> Self {
        Self {
            l1: 0.01,
            l2: 0.01,
            max_outer_iter: 100,
            h_tol: 1e-8,
            rho_max: 1e16,
            hidden_units: 10,
            edge_threshold: 0.1,
            max_inner_iter: 300,
            restarts: 3,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GrangerConfig {
    /// Lag order of both autoregressions.
    pub max_lag: usize,
    /// Significance level of the F-tests.
    pub alpha: f64,
    /// When set, pick the lag in 1..=aic_max_lag by AIC of the restricted
    /// model instead of using max_lag directly.
    pub aic_max_lag: Option<usize>,
}

impl Default for GrangerConfig {
    fn default() -> Self {
        Self {
            max_lag: 2,
            alpha: 0.05,
            aic_max_lag: None,
        }
    }
}

/// Bundle of per-method hyperparameters with benchmark defaults.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MethodConfig {
    pub stable_pc: StablePcConfig,
    pub ges: GesConfig,
    pub direct_lingam: DirectLingamConfig,
    pub notears_linear: NotearsLinearConfig,
    pub notears_mlp: NotearsMlpConfig,
    pub granger: GrangerConfig,
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::str::FromStr;

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(Method::from_str(m.name()).unwrap(), m);
        }
    }

    #[test]
    fn unknown_method_is_enumerated_choice_error() {
        let err = Method::from_str("caps").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("caps") && msg.contains("stable-pc"), "{msg}");
    }

    #[test]
    fn defaults_match_benchmark_settings() {
        let cfg = MethodConfig::default();
        assert_eq!(cfg.stable_pc.alpha, 0.05);
        assert_eq!(cfg.direct_lingam.edge_threshold, 0.1);
        assert_eq!(cfg.notears_linear.l1, 0.1);
        assert_eq!(cfg.notears_linear.max_outer_iter, 100);
        assert_eq!(cfg.notears_linear.h_tol, 1e-8);
        assert_eq!(cfg.notears_linear.rho_max, 1e16);
        assert_eq!(cfg.notears_linear.edge_threshold, 0.1);
        assert_eq!(cfg.notears_mlp.l1, 0.01);
        assert_eq!(cfg.notears_mlp.l2, 0.01);
        assert_eq!(cfg.notears_mlp.hidden_units, 10);
        assert_eq!(cfg.notears_mlp.edge_threshold, 0.1);
        assert_eq!(cfg.granger.max_lag, 2);
        assert_eq!(cfg.granger.alpha, 0.05);
    }
}
