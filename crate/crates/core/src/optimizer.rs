//! Alternating minimization of the λ-bound and the one-dimensional λ scan.
//!
//! For fixed λ the bound is minimized over ρ by the Gibbs posterior
//! `ρ_λ(h) ∝ π(h)·e^{−λ n L̂(h)}`; for fixed ρ it is minimized over λ by
//! `λ = 2 / (√(2nE_ρ[L̂]/(KL(ρ‖π) + ln(2√n/δ)) + 1) + 1)`. Alternating the
//! two never increases the bound.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{f_of_lambda, lambda_bound_parts, log_partition};
use crate::error::{domain, Result};
use crate::profile::{gibbs_loss, kl_posterior_prior, BoundConfig, LossProfile, PosteriorWeights};
use crate::scalar::{compensated_sum, Real};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceStep<T> {
    pub lambda: T,
    pub bound: T,
    pub gibbs_loss: T,
    pub kl: T,
}

/// History of [`alternate_minimize`]; one step per (λ-update, ρ-update) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationTrace<T> {
    pub iterations: Vec<TraceStep<T>>,
    /// False when the iteration cap was hit before the stopping rule fired.
    pub converged: bool,
    pub final_posterior: PosteriorWeights<T>,
}

impl<T: Real> OptimizationTrace<T> {
    pub fn last(&self) -> &TraceStep<T> {
        self.iterations.last().expect("trace has at least one step")
    }

    pub fn final_lambda(&self) -> T {
        self.last().lambda
    }

    pub fn final_bound(&self) -> T {
        self.last().bound
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaScan<T> {
    pub grid: Vec<T>,
    pub values: Vec<T>,
    /// Grid indices of discrete local minima (first index of a plateau).
    pub local_minima: Vec<usize>,
}

impl<T: Real> LambdaScan<T> {
    /// Grid point with the smallest value; ties resolve to the lowest λ.
    pub fn argmin(&self) -> usize {
        let mut best = 0;
        for (i, v) in self.values.iter().enumerate() {
            if *v < self.values[best] {
                best = i;
            }
        }
        best
    }
}

/// Gibbs posterior `ρ_λ ∝ π·e^{−λ n_eff L̂}`, normalized in the log domain.
pub fn gibbs_posterior<T: Real>(profile: &LossProfile<T>, lambda: T) -> Result<PosteriorWeights<T>> {
    if lambda.is_nan() || lambda < T::zero() || !lambda.is_finite() {
        return Err(domain(format!("lambda = {lambda} must be finite and nonnegative")));
    }
    let scale = lambda * T::from_count(profile.n_eff() as u64);
    let log_z = log_partition(profile, scale);
    let mut weights: Vec<T> =
        profile.entries().iter().map(|e| (e.prior_mass.ln() - scale * e.loss - log_z).exp()).collect();
    let total = compensated_sum(weights.iter().zip(profile.entries()).map(|(&w, e)| w * e.mult()));
    for w in &mut weights {
        *w /= total;
    }
    Ok(PosteriorWeights::from_raw(weights))
}

/// Minimizer over λ of the λ-bound at fixed ρ, where
/// `complexity = KL(ρ‖π) + ln(2√n_eff/δ)`. Always in (0, 1].
pub fn optimal_lambda<T: Real>(gibbs_loss: T, complexity: T, n_eff: usize) -> Result<T> {
    if gibbs_loss.is_nan() || gibbs_loss < T::zero() || gibbs_loss > T::one() {
        return Err(domain(format!("gibbs loss {gibbs_loss} outside [0, 1]")));
    }
    if !(complexity > T::zero()) || !complexity.is_finite() {
        return Err(domain(format!("complexity {complexity} must be positive and finite")));
    }
    if n_eff == 0 {
        return Err(domain("n_eff must be at least 1"));
    }
    let n = T::from_count(n_eff as u64);
    let two = T::lit(2.0);
    Ok(two / ((two * n * gibbs_loss / complexity + T::one()).sqrt() + T::one()))
}

/// Alternates λ- and ρ-updates starting from `ρ = π`, λ first, until the
/// bound decreases by less than `cfg.tol_bound()` or `cfg.max_iters()` steps.
pub fn alternate_minimize<T: Real>(profile: &LossProfile<T>, cfg: &BoundConfig<T>) -> Result<OptimizationTrace<T>> {
    cfg.check_profile(profile)?;
    let confidence = cfg.confidence_term();
    let mut rho = PosteriorWeights::prior(profile);
    let mut emp = gibbs_loss(profile, &rho)?;
    let mut kl = T::zero();
    let mut previous = T::infinity();
    let mut iterations = Vec::new();
    let mut converged = false;

    for _ in 0..cfg.max_iters() {
        let lambda = optimal_lambda(emp, kl + confidence, cfg.n_eff())?;
        rho = gibbs_posterior(profile, lambda)?;
        emp = gibbs_loss(profile, &rho)?;
        kl = kl_posterior_prior(profile, &rho)?;
        let bound = lambda_bound_parts(emp, kl, lambda, cfg).value;
        iterations.push(TraceStep { lambda, bound, gibbs_loss: emp, kl });
        if previous - bound < cfg.tol_bound() {
            converged = true;
            break;
        }
        previous = bound;
    }

    Ok(OptimizationTrace { iterations, converged, final_posterior: rho })
}

/// Evaluates `F` on the uniform grid `{λ_max·i/grid_size : i = 1..=grid_size}`
/// and reports its discrete local minima.
pub fn scan_lambda<T: Real>(
    profile: &LossProfile<T>,
    cfg: &BoundConfig<T>,
    grid_size: usize,
    lambda_max: T,
) -> Result<LambdaScan<T>> {
    if grid_size < 3 {
        return Err(domain(format!("grid size {grid_size} must be at least 3")));
    }
    if !(lambda_max > T::zero() && lambda_max < T::lit(2.0)) {
        return Err(domain(format!("lambda_max = {lambda_max} outside (0, 2)")));
    }
    cfg.check_profile(profile)?;
    let size = T::from_count(grid_size as u64);
    let grid: Vec<T> = (1..=grid_size).map(|i| lambda_max * T::from_count(i as u64) / size).collect();
    let values = grid.par_iter().map(|&lam| f_of_lambda(profile, lam, cfg)).collect::<Result<Vec<T>>>()?;
    let local_minima = local_minima(&values);
    Ok(LambdaScan { grid, values, local_minima })
}

/// Indices `i` with `v[i-1] > v[i] < v[i+1]`, where runs of equal values
/// coalesce into one candidate and out-of-range neighbours count as `+∞`.
pub fn local_minima<T: Real>(values: &[T]) -> Vec<usize> {
    let mut minima = Vec::new();
    let mut start = 0;
    while start < values.len() {
        let mut end = start;
        while end + 1 < values.len() && values[end + 1] == values[start] {
            end += 1;
        }
        let left_higher = start == 0 || values[start - 1] > values[start];
        let right_higher = end + 1 == values.len() || values[end + 1] > values[start];
        if left_higher && right_higher {
            minima.push(start);
        }
        start = end + 1;
    }
    minima
}
