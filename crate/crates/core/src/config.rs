//! Problem configuration: the JSON document consumed by the CLI.
//!
//! ```json
//! {
//!   "loss": {"dist": "exp", "mu": 1.0},
//!   "agents": [
//!     {"g": {"family": "pwl", "points": [[0,0],[0.5,0.5625],[1,1]]},
//!      "a": 0.0, "b": 0.3333333333333333, "c": -2.0}
//!   ],
//!   "constraints": [{"h": {"family": "avar", "alpha": 2.0},
//!                    "budget": 0.3953, "agent": 0}],
//!   "options": {"grid_size": 2048, "tie_rule": "lowest"},
//!   "original": {"breakpoints": [0.0, "inf"], "weights": [[0.0, 1.0]],
//!                "offsets": [0.0, 0.0]}
//! }
//! ```

use serde::{Deserialize, Serialize};

use crate::constrained::ConstraintSpec;
use crate::distortion::Distortion;
use crate::distribution::LossModel;
use crate::error::{CoreError, Result};
use crate::pareto::{SolverOptions, TieRule};
use crate::riskmeasure::AgentSpec;

/// Solver options as they appear on the wire; all fields optional.
#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct OptionsConfig {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub grid_size: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub tie_rule: Option<TieRule>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub tol_lambda: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub tol_residual: Option<f64>,
    /// Family weight for the fully degenerate two-agent configuration.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub delta: Option<f64>,
}

impl OptionsConfig {
    pub fn to_solver_options(&self) -> SolverOptions {
        let mut o = SolverOptions::default();
        if let Some(g) = self.grid_size {
            o.grid_size = g.max(2);
        }
        if let Some(t) = self.tie_rule {
            o.tie_rule = t;
        }
        if let Some(t) = self.tol_lambda {
            o.tol_lambda = t;
        }
        if let Some(t) = self.tol_residual {
            o.tol_residual = t;
        }
        o
    }
}

/// Multi-agent problem document.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub loss: LossModel<f64>,
    pub agents: Vec<AgentSpec<f64>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub constraints: Vec<ConstraintSpec<f64>>,
    #[serde(default)]
    pub options: OptionsConfig,
    /// Initial allocation, for rationality and side-payment reporting.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub original: Option<crate::allocation::Ladder<f64>>,
}

impl ProblemConfig {
    pub fn validate(&self) -> Result<()> {
        if self.agents.is_empty() {
            return Err(CoreError::InvalidConfig("at least one agent required".into()));
        }
        for c in &self.constraints {
            if c.agent() >= self.agents.len() {
                return Err(CoreError::AgentIndex(c.agent(), self.agents.len()));
            }
        }
        if let Some(orig) = &self.original {
            if orig.n_agents() != self.agents.len() {
                return Err(CoreError::InvalidConfig(format!(
                    "original allocation has {} agents, expected {}",
                    orig.n_agents(),
                    self.agents.len()
                )));
            }
        }
        Ok(())
    }
}

/// Single-buyer problem document: minimize the buyer's risk-adjusted loss
/// subject to a regulator cap on the insurer's indemnity.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BuyerConfig {
    pub loss: LossModel<f64>,
    pub g: Distortion<f64>,
    pub h: Distortion<f64>,
    #[serde(default)]
    pub b: f64,
    pub theta: f64,
    pub budget: f64,
    #[serde(default)]
    pub options: OptionsConfig,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_a_full_problem_document() {
        let doc = r#"{
            "loss": {"dist": "exp", "mu": 1.0},
            "agents": [
                {"g": {"family": "avar", "alpha": 1.1}, "b": 0.3, "c": -2.2},
                {"g": {"family": "avar", "alpha": 1.5}, "c": -2.2}
            ],
            "constraints": [
                {"h": {"family": "avar", "alpha": 2.0}, "budget": 0.4, "agent": 0}
            ],
            "options": {"grid_size": 512, "tie_rule": "split"}
        }"#;
        let cfg: ProblemConfig = serde_json::from_str(doc).unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.agents.len(), 2);
        let opts = cfg.options.to_solver_options();
        assert_eq!(opts.grid_size, 512);
        assert_eq!(opts.tie_rule, TieRule::Split);
        assert_eq!(opts.tol_lambda, 1e-10);
    }

    #[test]
    fn bad_constraint_index_is_rejected() {
        let doc = r#"{
            "loss": {"dist": "exp", "mu": 1.0},
            "agents": [{"g": {"family": "identity"}}],
            "constraints": [
                {"h": {"family": "avar", "alpha": 2.0}, "budget": 0.4, "agent": 3}
            ]
        }"#;
        let cfg: ProblemConfig = serde_json::from_str(doc).unwrap();
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn buyer_document_round_trips() {
        let doc = r#"{
            "loss": {"dist": "exp", "mu": 1.0},
            "g": {"family": "avar", "alpha": 3.0},
            "h": {"family": "avar", "alpha": 1.5},
            "b": 0.1,
            "theta": 1.0,
            "budget": 0.8
        }"#;
        let cfg: BuyerConfig = serde_json::from_str(doc).unwrap();
        let back: BuyerConfig =
            serde_json::from_str(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(back.budget, 0.8);
        assert_eq!(back.b, 0.1);
    }
}
