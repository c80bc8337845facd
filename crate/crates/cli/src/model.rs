//! Versioned JSON model file.

use std::fs;
use std::path::Path;

use pbmin_core::{
    ensemble_profile, Ensemble64, HypothesisEnsemble, LearnerSpec64, PosteriorWeights64, Prior, SubsamplePlan,
    TrainedClassifier,
};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};
use crate::pipeline::Fitted;

pub const FORMAT_VERSION: u32 = 1;
const WEIGHT_SUM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundSummary {
    pub lambda: f64,
    pub bound: f64,
    pub pb_kl_bound: f64,
    pub delta: f64,
    pub n: usize,
    pub r: usize,
    pub m: usize,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisRecord {
    pub classifier: TrainedClassifier<f64>,
    pub subset: Vec<usize>,
    pub validation_loss: f64,
    pub posterior_weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format_version: u32,
    pub classes: Vec<String>,
    pub dim: usize,
    pub summary: BoundSummary,
    pub prior: Prior<f64>,
    pub plan_seed: u64,
    pub learner: LearnerSpec64,
    pub hypotheses: Vec<HypothesisRecord>,
}

impl ModelFile {
    pub fn from_fitted(f: &Fitted) -> Self {
        let ens = &f.ensemble;
        let rho = f.trace.final_posterior.weights();
        let hypotheses = ens
            .hypotheses()
            .iter()
            .zip(&ens.plan().subsets)
            .zip(ens.validation_losses())
            .zip(rho)
            .map(|(((c, s), &l), &w)| HypothesisRecord {
                classifier: c.clone(),
                subset: s.clone(),
                validation_loss: l,
                posterior_weight: w,
            })
            .collect();
        Self {
            format_version: FORMAT_VERSION,
            classes: ens.classes().to_vec(),
            dim: ens.dim(),
            summary: BoundSummary {
                lambda: f.trace.final_lambda(),
                bound: f.trace.final_bound(),
                pb_kl_bound: f.pb_kl,
                delta: f.cfg.delta(),
                n: ens.n(),
                r: ens.r(),
                m: ens.m(),
                iterations: f.trace.iterations.len(),
                converged: f.trace.converged,
            },
            prior: Prior::Uniform,
            plan_seed: ens.plan().seed,
            learner: f.learner.clone(),
            hypotheses,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("model serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: Self = serde_json::from_str(text).map_err(|e| CliError::Model(e.to_string()))?;
        if model.format_version != FORMAT_VERSION {
            return Err(CliError::Model(format!(
                "format_version {} is not supported (expected {FORMAT_VERSION})",
                model.format_version
            )));
        }
        let total: f64 = model.hypotheses.iter().map(|h| h.posterior_weight).sum();
        if (total - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(CliError::Model(format!("posterior weights sum to {total}")));
        }
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()).map_err(|e| CliError::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_json(&text)
    }

    /// Rebuilds the ensemble and posterior without the training data.
    pub fn ensemble(&self) -> Result<(Ensemble64, PosteriorWeights64)> {
        let plan = SubsamplePlan {
            subsets: self.hypotheses.iter().map(|h| h.subset.clone()).collect(),
            seed: self.plan_seed,
            n: self.summary.n,
            r: self.summary.r,
        };
        let ens = HypothesisEnsemble::from_parts(
            self.hypotheses.iter().map(|h| h.classifier.clone()).collect(),
            plan,
            self.hypotheses.iter().map(|h| h.validation_loss).collect(),
            self.classes.clone(),
        )?;
        if ens.dim() != self.dim {
            return Err(CliError::Model(format!("classifiers have dimension {}, file says {}", ens.dim(), self.dim)));
        }
        let (profile, _) = ensemble_profile(&ens, &self.prior, self.summary.delta)?;
        let rho = PosteriorWeights64::new(self.hypotheses.iter().map(|h| h.posterior_weight).collect(), &profile)?;
        Ok((ens, rho))
    }
}
