//! Structure-learning algorithms: Stable-PC, GES, Direct-LiNGAM,
//! NOTEARS-Linear, NOTEARS-MLP and a Granger-causality temporal baseline.

mod config;
mod ges;
mod granger;
mod lingam;
mod mlp;
mod notears;
mod pc;

pub use config::{
    DirectLingamConfig, GesConfig, GrangerConfig, Method, MethodConfig, NotearsLinearConfig,
    NotearsMlpConfig, StablePcConfig,
};
pub use ges::ges;
pub use granger::granger_pairwise;
pub use lingam::direct_lingam;
pub use mlp::{mlp_objective_grad, notears_mlp, MlpParams};
pub use notears::{
    acyclicity_h, linear_objective_grad, notears_linear, notears_linear_fit, NotearsFit,
};
pub use pc::stable_pc;

use crate::error::{Error, Result};
use crate::graph::CausalGraph;
use crate::strategy::DataMatrix;

/// Runs one non-temporal method on a data matrix. The Granger baseline
/// operates on raw per-unit series and has its own entry point,
/// [`granger_pairwise`].
pub fn discover(method: Method, m: &DataMatrix, cfg: &MethodConfig) -> Result<CausalGraph> {
    match method {
        Method::StablePc => stable_pc(m, &cfg.stable_pc),
        Method::Ges => ges(m, &cfg.ges),
        Method::DirectLingam => direct_lingam(m, &cfg.direct_lingam),
        Method::NotearsLinear => notears_linear(m, &cfg.notears_linear),
        Method::NotearsMlp => notears_mlp(m, &cfg.notears_mlp),
        Method::Granger => Err(Error::Config(
            "granger runs on degradation datasets, not observation matrices".into(),
        )),
    }
}
