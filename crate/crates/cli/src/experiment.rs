//! Experiment harnesses: (m, r) heatmaps, Monte Carlo bound validity, and
//! the predictor comparison.

use pbmin_core::ensemble::child_rng;
use pbmin_core::predict::hypothesis_test_losses;
use pbmin_core::{best_h, expected_randomized_loss, mass_count, test_loss, Dataset64, PredictionMode};
use rand::RngCore;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{CliError, Result};
use crate::pipeline::{fit_pipeline, LearnerChoice, PipelineConfig};
use crate::synth::{noisy_threshold, threshold_true_risk};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Spacing {
    Linear,
    Geometric,
}

/// `count` integers from `lo` to `hi` inclusive, rounded; duplicates are kept
/// so the grid always has `count` entries.
pub fn integer_grid(lo: usize, hi: usize, count: usize, spacing: Spacing) -> Vec<usize> {
    if count == 1 {
        return vec![hi];
    }
    let (lo_f, hi_f) = (lo as f64, hi as f64);
    (0..count)
        .map(|i| {
            let t = i as f64 / (count - 1) as f64;
            let v = match spacing {
                Spacing::Linear => lo_f + (hi_f - lo_f) * t,
                Spacing::Geometric => lo_f * (hi_f / lo_f).powf(t),
            };
            (v.round() as usize).clamp(lo, hi)
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct HeatmapConfig {
    pub m_count: usize,
    pub r_count: usize,
    pub spacing: Spacing,
    /// Largest r; defaults to `d + 1`.
    pub r_max: Option<usize>,
    pub delta: f64,
    pub seed: u64,
    pub learner: LearnerChoice,
    pub gamma: Option<f64>,
    pub epochs: usize,
    pub baseline: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Heatmap {
    pub m_values: Vec<usize>,
    pub r_values: Vec<usize>,
    /// `cells[i][j]`: expected randomized test loss at `(m_values[i], r_values[j])`,
    /// minus the baseline when one was given.
    pub cells: Vec<Vec<f64>>,
}

impl Heatmap {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("m");
        for r in &self.r_values {
            s.push_str(&format!(",r={r}"));
        }
        s.push('\n');
        for (m, row) in self.m_values.iter().zip(&self.cells) {
            s.push_str(&m.to_string());
            for v in row {
                s.push_str(&format!(",{v}"));
            }
            s.push('\n');
        }
        s
    }
}

pub fn heatmap(train: &Dataset64, test: &Dataset64, hc: &HeatmapConfig) -> Result<Heatmap> {
    if hc.m_count == 0 || hc.r_count == 0 {
        return Err(CliError::Usage("grid sizes must be positive".into()));
    }
    let n = train.n();
    let r_hi = hc.r_max.unwrap_or(train.d() + 1).min(n - 1);
    if r_hi < 2 {
        return Err(CliError::Usage(format!("r range [2, {r_hi}] is empty")));
    }
    let m_values = integer_grid(1, n, hc.m_count, hc.spacing);
    let r_values = integer_grid(2, r_hi, hc.r_count, Spacing::Linear);
    let cells: Vec<(usize, usize)> =
        (0..m_values.len()).flat_map(|i| (0..r_values.len()).map(move |j| (i, j))).collect();
    let losses: Vec<f64> = cells
        .par_iter()
        .enumerate()
        .map(|(k, &(i, j))| {
            let pc = PipelineConfig {
                m: m_values[i],
                r: r_values[j],
                delta: hc.delta,
                seed: child_rng(hc.seed, k as u64).next_u64(),
                learner: hc.learner,
                gamma: hc.gamma,
                epochs: hc.epochs,
            };
            let f = fit_pipeline(train, &pc)?;
            let loss = expected_randomized_loss(&f.ensemble, &f.trace.final_posterior, test)?;
            Ok(loss - hc.baseline.unwrap_or(0.0))
        })
        .collect::<Result<_>>()?;
    let cols = r_values.len();
    let cells = losses.chunks(cols).map(<[f64]>::to_vec).collect();
    Ok(Heatmap { m_values, r_values, cells })
}

#[derive(Debug, Clone)]
pub struct ValidityConfig {
    pub trials: usize,
    pub n: usize,
    pub d: usize,
    pub m: usize,
    pub r: usize,
    pub delta: f64,
    pub noise: f64,
    pub seed: u64,
}

impl Default for ValidityConfig {
    fn default() -> Self {
        Self { trials: 1000, n: 500, d: 2, m: 20, r: 10, delta: 0.05, noise: 0.1, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidityTrial {
    pub lambda_bound: f64,
    pub kl_bound: f64,
    /// `Σ_h ρ(h)·L(h)` from the known distribution.
    pub true_risk: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidityReport {
    pub trials: usize,
    /// Trials where the minimized λ-bound fell below the true randomized risk.
    pub violations: usize,
    pub kl_violations: usize,
    /// Mean of `λ-bound − true risk`.
    pub mean_gap: f64,
    pub mean_kl_gap: f64,
    pub delta: f64,
    pub gaps: Vec<f64>,
    pub per_trial: Vec<ValidityTrial>,
}

impl ValidityReport {
    pub fn violation_rate(&self) -> f64 {
        self.violations as f64 / self.trials as f64
    }
}

/// Draws `trials` noisy-threshold datasets, fits stump ensembles, and checks
/// the final bounds against the exact randomized risk.
pub fn validity(vc: &ValidityConfig) -> Result<ValidityReport> {
    if vc.trials == 0 {
        return Err(CliError::Usage("--trials must be positive".into()));
    }
    if !(0.0..0.5).contains(&vc.noise) {
        return Err(CliError::Usage(format!("--noise {} must lie in [0, 0.5)", vc.noise)));
    }
    if vc.d == 0 {
        return Err(CliError::Usage("--d must be positive".into()));
    }
    let per_trial: Vec<ValidityTrial> = (0..vc.trials)
        .into_par_iter()
        .map(|t| {
            let mut data_rng = child_rng(vc.seed, 2 * t as u64);
            let data = noisy_threshold(vc.n, vc.d, vc.noise, &mut data_rng);
            let pc = PipelineConfig {
                m: vc.m,
                r: vc.r,
                delta: vc.delta,
                seed: child_rng(vc.seed, 2 * t as u64 + 1).next_u64(),
                learner: LearnerChoice::Stump,
                gamma: None,
                epochs: 1,
            };
            let f = fit_pipeline(&data, &pc)?;
            let true_risk = f
                .ensemble
                .hypotheses()
                .iter()
                .zip(f.trace.final_posterior.weights())
                .map(|(h, &w)| w * threshold_true_risk(h, vc.noise).expect("stumps and constants only"))
                .sum();
            Ok(ValidityTrial { lambda_bound: f.trace.final_bound(), kl_bound: f.pb_kl, true_risk })
        })
        .collect::<Result<_>>()?;
    let gaps: Vec<f64> = per_trial.iter().map(|t| t.lambda_bound - t.true_risk).collect();
    let kl_gaps: Vec<f64> = per_trial.iter().map(|t| t.kl_bound - t.true_risk).collect();
    let trials = per_trial.len();
    Ok(ValidityReport {
        trials,
        violations: gaps.iter().filter(|&&g| g < 0.0).count(),
        kl_violations: kl_gaps.iter().filter(|&&g| g < 0.0).count(),
        mean_gap: gaps.iter().sum::<f64>() / trials as f64,
        mean_kl_gap: kl_gaps.iter().sum::<f64>() / trials as f64,
        delta: vc.delta,
        gaps,
        per_trial,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareReport {
    pub randomized: f64,
    pub randomized_expected: f64,
    pub majority: f64,
    pub uniform: f64,
    pub best_h: f64,
    pub best_h_index: usize,
    /// Hypotheses carrying half of the posterior mass.
    pub mass50: usize,
    pub lambda: f64,
    pub bound: f64,
    pub pb_kl_bound: f64,
    pub mean_hypothesis_loss: f64,
}

pub fn predictor_compare(
    train: &Dataset64,
    test: &Dataset64,
    pc: &PipelineConfig,
    draw_seed: u64,
) -> Result<CompareReport> {
    let f = fit_pipeline(train, pc)?;
    let (ens, rho) = (&f.ensemble, &f.trace.final_posterior);
    let per_h = hypothesis_test_losses(ens, test)?;
    let best = best_h(ens);
    Ok(CompareReport {
        randomized: test_loss(ens, rho, PredictionMode::Randomized { seed: draw_seed }, test)?,
        randomized_expected: expected_randomized_loss(ens, rho, test)?,
        majority: test_loss(ens, rho, PredictionMode::Majority, test)?,
        uniform: test_loss(ens, rho, PredictionMode::Uniform, test)?,
        best_h: per_h[best],
        best_h_index: best,
        mass50: mass_count(rho.weights(), 0.5),
        lambda: f.trace.final_lambda(),
        bound: f.trace.final_bound(),
        pb_kl_bound: f.pb_kl,
        mean_hypothesis_loss: per_h.iter().sum::<f64>() / per_h.len() as f64,
    })
}
