//! Binary kl, its upper inversion, and the PAC-Bayes-kl / PAC-Bayes-λ bounds.
//!
//! `F(λ)` is the λ-bound evaluated at the Gibbs posterior `ρ_λ`, which
//! collapses to `(−ln E_π[e^{−nλL}] + ln(2√n/δ)) / (nλ(1 − λ/2))`. Its
//! derivatives come from the decomposition `F = f·g` with
//! `f(λ) = λE_ρλ[L] + (KL(ρ_λ‖π) + ln(2√n/δ))/n` and `g(λ) = 1/(λ(1 − λ/2))`,
//! using `f′ = E_ρλ[L]` and `f″ = −n·Var_ρλ[L]`.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::optimizer::gibbs_posterior;
use crate::profile::{gibbs_loss, gibbs_variance, kl_posterior_prior, BoundConfig, LossProfile, PosteriorWeights};
use crate::scalar::{compensated_sum, Real};

const KL_INV_MAX_ITERS: usize = 200;

/// Right-hand side of the λ-bound, split into its two terms. Not clipped to 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundValue<T> {
    pub value: T,
    pub gibbs_loss_term: T,
    pub complexity_term: T,
}

/// `F(λ)` and its first two derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Derivatives<T> {
    pub value: T,
    pub first: T,
    pub second: T,
}

fn check_unit<T: Real>(name: &str, x: T) -> Result<()> {
    if x.is_nan() || x < T::zero() || x > T::one() {
        return Err(domain(format!("{name} = {x} outside [0, 1]")));
    }
    Ok(())
}

pub(crate) fn check_lambda<T: Real>(lambda: T) -> Result<()> {
    if !(lambda > T::zero() && lambda < T::lit(2.0)) {
        return Err(domain(format!("lambda = {lambda} outside (0, 2)")));
    }
    Ok(())
}

/// `kl(p‖q)` between Bernoulli(p) and Bernoulli(q); `+∞` when `q ∈ {0, 1}` and `p ≠ q`.
pub fn binary_kl<T: Real>(p: T, q: T) -> Result<T> {
    check_unit("p", p)?;
    check_unit("q", q)?;
    if p == q {
        return Ok(T::zero());
    }
    if q == T::zero() || q == T::one() {
        return Ok(T::infinity());
    }
    let one = T::one();
    let head = if p == T::zero() { T::zero() } else { p * (p / q).ln() };
    let tail = if p == one { T::zero() } else { (one - p) * ((one - p) / (one - q)).ln() };
    Ok((head + tail).max(T::zero()))
}

/// Largest `q ∈ [p_hat, 1]` with `kl(p_hat‖q) ≤ eps`, by bisection.
///
/// The search runs on `[p_hat, 1 − 1e-15]`; if even the upper end satisfies
/// the budget the result saturates at 1. Otherwise the returned point
/// always satisfies the budget and lies within `tol` of the root.
pub fn kl_inverse_upper<T: Real>(p_hat: T, eps: T, tol: T) -> Result<T> {
    check_unit("p_hat", p_hat)?;
    if eps.is_nan() || eps < T::zero() {
        return Err(domain(format!("kl budget {eps} must be nonnegative")));
    }
    if !(tol > T::zero()) {
        return Err(domain(format!("tolerance {tol} must be positive")));
    }
    if eps == T::zero() {
        return Ok(p_hat);
    }
    let top = T::one() - T::lit(1e-15).max(T::epsilon());
    if p_hat >= top || !eps.is_finite() || binary_kl(p_hat, top)? <= eps {
        return Ok(T::one());
    }
    let (mut lo, mut hi) = (p_hat, top);
    let half = T::lit(0.5);
    for _ in 0..KL_INV_MAX_ITERS {
        // Width is also held below tol·(1 − hi) so the kl value, whose slope is
        // at most 1/(1 − q), lands within tol of the budget.
        if hi - lo <= tol * (T::one() - hi).min(T::one()) {
            break;
        }
        let mid = lo + (hi - lo) * half;
        if mid <= lo || mid >= hi {
            break;
        }
        if binary_kl(p_hat, mid)? <= eps {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// PAC-Bayes-kl bound on `E_ρ[L]`: the upper kl inverse of `E_ρ[L̂]` at
/// budget `(KL(ρ‖π) + ln(2√n/δ))/n`.
pub fn pac_bayes_kl_bound<T: Real>(
    profile: &LossProfile<T>,
    rho: &PosteriorWeights<T>,
    cfg: &BoundConfig<T>,
) -> Result<T> {
    cfg.check_profile(profile)?;
    let emp = gibbs_loss(profile, rho)?;
    let kl = kl_posterior_prior(profile, rho)?;
    let budget = (kl + cfg.confidence_term()) / cfg.n();
    kl_inverse_upper(emp, budget, T::lit(T::KL_INV_TOL))
}

/// PAC-Bayes-λ bound for λ ∈ (0, 2).
pub fn pac_bayes_lambda_bound<T: Real>(
    profile: &LossProfile<T>,
    rho: &PosteriorWeights<T>,
    lambda: T,
    cfg: &BoundConfig<T>,
) -> Result<BoundValue<T>> {
    check_lambda(lambda)?;
    cfg.check_profile(profile)?;
    let emp = gibbs_loss(profile, rho)?;
    let kl = kl_posterior_prior(profile, rho)?;
    Ok(lambda_bound_parts(emp, kl, lambda, cfg))
}

pub(crate) fn lambda_bound_parts<T: Real>(emp: T, kl: T, lambda: T, cfg: &BoundConfig<T>) -> BoundValue<T> {
    let shrink = T::one() - lambda / T::lit(2.0);
    let gibbs_loss_term = emp / shrink;
    let complexity_term = (kl + cfg.confidence_term()) / (lambda * shrink * cfg.n());
    BoundValue { value: gibbs_loss_term + complexity_term, gibbs_loss_term, complexity_term }
}

/// Bound from the relaxed inequality `E_ρ[L] − E_ρ[L̂] ≤ √(2 E_ρ[L] c)` with
/// `c = (KL(ρ‖π) + ln(2√n/δ))/n`, solved for `E_ρ[L]`: `p̂ + c + √(c² + 2cp̂)`.
pub fn pinsker_sqrt_bound<T: Real>(
    profile: &LossProfile<T>,
    rho: &PosteriorWeights<T>,
    cfg: &BoundConfig<T>,
) -> Result<T> {
    cfg.check_profile(profile)?;
    let emp = gibbs_loss(profile, rho)?;
    let kl = kl_posterior_prior(profile, rho)?;
    let c = (kl + cfg.confidence_term()) / cfg.n();
    Ok(emp + c + (c * c + T::lit(2.0) * c * emp).sqrt())
}

/// `ln E_π[e^{−s·L̂}]`, evaluated with a max shift so huge `s` and millions
/// of hypotheses neither underflow nor overflow.
pub fn log_partition<T: Real>(profile: &LossProfile<T>, scale: T) -> T {
    let exponents: Vec<T> =
        profile.entries().iter().map(|e| e.prior_mass.ln() + e.mult().ln() - scale * e.loss).collect();
    let shift = exponents.iter().copied().fold(T::neg_infinity(), T::max);
    shift + compensated_sum(exponents.iter().map(|&a| (a - shift).exp())).ln()
}

/// `F(λ)`: the λ-bound at its optimal posterior, as a function of λ alone.
pub fn f_of_lambda<T: Real>(profile: &LossProfile<T>, lambda: T, cfg: &BoundConfig<T>) -> Result<T> {
    check_lambda(lambda)?;
    cfg.check_profile(profile)?;
    let n = cfg.n();
    let log_z = log_partition(profile, n * lambda);
    Ok((cfg.confidence_term() - log_z) / (n * lambda * (T::one() - lambda / T::lit(2.0))))
}

/// Analytic `F`, `F′`, `F″` at λ ∈ (0, 2).
pub fn f_derivatives<T: Real>(profile: &LossProfile<T>, lambda: T, cfg: &BoundConfig<T>) -> Result<Derivatives<T>> {
    check_lambda(lambda)?;
    cfg.check_profile(profile)?;
    let n = cfg.n();
    let rho = gibbs_posterior(profile, lambda)?;
    let emp = gibbs_loss(profile, &rho)?;
    let var = gibbs_variance(profile, &rho)?;
    let kl = kl_posterior_prior(profile, &rho)?;

    let one = T::one();
    let two = T::lit(2.0);
    let shrink = one - lambda / two;

    let f = lambda * emp + (kl + cfg.confidence_term()) / n;
    let f1 = emp;
    let f2 = -n * var;

    let g = one / (lambda * shrink);
    let g1 = (lambda - one) / (lambda * lambda * shrink * shrink);
    let g2 = (T::lit(3.0) * (lambda - one) * (lambda - one) + one) / (two * lambda.powi(3) * shrink.powi(3));

    Ok(Derivatives { value: f * g, first: f1 * g + g1 * f, second: f2 * g + two * f1 * g1 + g2 * f })
}
