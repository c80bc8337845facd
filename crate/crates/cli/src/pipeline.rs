//! Subsample → train → validate → minimize, shared by `train` and the
//! experiment harnesses.

use pbmin_core::{
    alternate_minimize, build_ensemble, draw_subsamples, ensemble_profile, jaakkola_grid, pac_bayes_kl_bound,
    BoundConfig64, Dataset64, Ensemble64, GammaPolicy, LearnerSpec64, LossProfile64, OptimizationTrace64, Prior,
};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LearnerChoice {
    KernelPerceptron,
    Stump,
    Constant,
}

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub m: usize,
    pub r: usize,
    pub delta: f64,
    pub seed: u64,
    pub learner: LearnerChoice,
    /// Fixed RBF bandwidth; `None` draws one per subset from the bandwidth grid.
    pub gamma: Option<f64>,
    pub epochs: usize,
}

pub struct Fitted {
    pub learner: LearnerSpec64,
    pub ensemble: Ensemble64,
    pub profile: LossProfile64,
    pub cfg: BoundConfig64,
    pub trace: OptimizationTrace64,
    /// PAC-Bayes-kl bound at the final posterior.
    pub pb_kl: f64,
}

/// `d + 1` for `d >= 5`, else `round(√n)`; clamped to `[1, n − 1]`.
pub fn auto_r(n: usize, d: usize) -> usize {
    let r = if d >= 5 { d + 1 } else { (n as f64).sqrt().round() as usize };
    r.clamp(1, n.saturating_sub(1).max(1))
}

pub fn learner_spec(
    choice: LearnerChoice,
    gamma: Option<f64>,
    epochs: usize,
    data: &Dataset64,
) -> Result<LearnerSpec64> {
    let spec = match choice {
        LearnerChoice::Stump => LearnerSpec64::stump(),
        LearnerChoice::Constant => LearnerSpec64::constant(),
        LearnerChoice::KernelPerceptron => {
            if data.num_classes() != 2 {
                return Err(CliError::Usage(format!(
                    "kernel perceptron needs exactly 2 classes, data has {}",
                    data.num_classes()
                )));
            }
            let policy = match gamma {
                Some(g) => GammaPolicy::Fixed(g),
                None => GammaPolicy::RandomFromGrid(jaakkola_grid(data)?),
            };
            LearnerSpec64::kernel_perceptron(policy)?
        }
    };
    Ok(spec.with_epochs(epochs)?)
}

pub fn fit_pipeline(data: &Dataset64, pc: &PipelineConfig) -> Result<Fitted> {
    if data.num_classes() < 2 {
        return Err(pbmin_core::Error::Invalid("training data has a single class".into()).into());
    }
    if pc.r == 0 || pc.r >= data.n() {
        return Err(CliError::Usage(format!("--r {} must satisfy 1 <= r < n = {}", pc.r, data.n())));
    }
    if pc.m == 0 {
        return Err(CliError::Usage("--m must be at least 1".into()));
    }
    let learner = learner_spec(pc.learner, pc.gamma, pc.epochs, data)?;
    let plan = draw_subsamples(data.n(), pc.m, pc.r, pc.seed)?;
    let ensemble = build_ensemble(data, &plan, &learner)?;
    let (profile, cfg) = ensemble_profile(&ensemble, &Prior::Uniform, pc.delta)?;
    let trace = alternate_minimize(&profile, &cfg)?;
    let pb_kl = pac_bayes_kl_bound(&profile, &trace.final_posterior, &cfg)?;
    Ok(Fitted { learner, ensemble, profile, cfg, trace, pb_kl })
}
