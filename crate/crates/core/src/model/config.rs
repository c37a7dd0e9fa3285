use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How output distributions are read out.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Shots {
    /// Exact distributions.
    Exact,
    /// Empirical distributions from this many shots.
    Sampled(u64),
}

/// How the CNR threshold and the rank cut combine.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RejectionRule {
    /// Keep a circuit only if it passes both the threshold and the rank cut.
    All,
    /// Keep a circuit if it passes either.
    Any,
}

/// Search hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Samples drawn per class for representational capacity.
    pub d_c: usize,
    /// Parameter draws averaged per similarity.
    pub n_p: usize,
    /// Clifford replicas per circuit.
    pub m_replicas: usize,
    /// Random measurement bases per state approximation.
    pub n_bases: usize,
    pub cnr_threshold: f64,
    pub keep_fraction: f64,
    pub rejection: RejectionRule,
    /// Exponent on CNR in the composite score.
    pub alpha_cnr: f64,
    /// Softmax temperature for every generation-time choice.
    pub tau: f64,
    /// Two-qubit gates per parametric gate in a generated circuit.
    pub two_q_fraction: f64,
    pub n_subgraph_samples: usize,
    pub shots: Shots,
    /// Monte-Carlo trajectories per noisy distribution.
    pub trajectories: usize,
    /// (x, θ) draws for the reference fidelity estimate.
    pub fidelity_samples: usize,
    /// Largest circuit the statevector simulator accepts.
    pub qubit_cap: usize,
    pub rng_seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            d_c: 16,
            n_p: 32,
            m_replicas: 32,
            n_bases: 8,
            cnr_threshold: 0.7,
            keep_fraction: 0.5,
            rejection: RejectionRule::All,
            alpha_cnr: 0.5,
            tau: 0.05,
            two_q_fraction: 0.3,
            n_subgraph_samples: 32,
            shots: Shots::Exact,
            trajectories: 256,
            fidelity_samples: 8,
            qubit_cap: 14,
            rng_seed: 0,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("d_c", self.d_c),
            ("n_p", self.n_p),
            ("m_replicas", self.m_replicas),
            ("n_bases", self.n_bases),
            ("n_subgraph_samples", self.n_subgraph_samples),
            ("trajectories", self.trajectories),
            ("fidelity_samples", self.fidelity_samples),
            ("qubit_cap", self.qubit_cap),
        ];
        for (field, v) in counts {
            if v < 1 {
                return Err(Error::config(field, "must be at least 1"));
            }
        }
        if !(0.0..=1.0).contains(&self.cnr_threshold) {
            return Err(Error::config("cnr_threshold", format!(
                "{} is outside [0, 1]",
                self.cnr_threshold
            )));
        }
        if !(self.keep_fraction > 0.0 && self.keep_fraction <= 1.0) {
            return Err(Error::config("keep_fraction", format!(
                "{} is outside (0, 1]",
                self.keep_fraction
            )));
        }
        if !(0.0..=1.0).contains(&self.two_q_fraction) {
            return Err(Error::config("two_q_fraction", format!(
                "{} is outside [0, 1]",
                self.two_q_fraction
            )));
        }
        if !(self.alpha_cnr > 0.0 && self.alpha_cnr.is_finite()) {
            return Err(Error::config("alpha_cnr", "must be positive"));
        }
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::config("tau", "must be positive"));
        }
        if self.shots == Shots::Sampled(0) {
            return Err(Error::config("shots", "sampled shot count must be at least 1"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        RunConfig::default().validate().unwrap();
    }

    #[test]
    fn bad_threshold_names_field() {
        let cfg = RunConfig {
            cnr_threshold: 1.01,
            ..Default::default()
        };
        match cfg.validate() {
            Err(Error::InvalidConfig { field, .. }) => assert_eq!(field, "cnr_threshold"),
            other => panic!("unexpected {other:?}"),
        }
        let cfg = RunConfig {
            keep_fraction: 0.0,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
        let cfg = RunConfig {
            trajectories: 0,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
    }
}
