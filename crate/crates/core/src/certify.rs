//! Sufficient conditions for strong quasiconvexity of `F(λ)`.
//!
//! The counting certificates split hypotheses by their excess loss
//! `x_h = L̂(h) − min L̂` into good (`x_h ≤ a`), mediocre (`a < x_h < b`) and
//! bad (`x_h ≥ b`). If at most `K` hypotheses are mediocre, the variance of
//! the Gibbs posterior stays below `ln(4n/δ²)/(λ²n²)` on the whole relevant
//! λ range, which rules out spurious stationary points. `(α, β)` trade the
//! interval ends against `K`:
//!
//! ```text
//! a(α) = √(α ln(4n/δ²)) / n
//! b(β) = ln(m n² / β) / √(n ln(2√n/δ))
//! K(α, β) = e² (1 − α − β) / 4 · ln(4n/δ²)
//! ```
//!
//! and the refined `b(β)` keeps the dropped `b²` factor. The base constants
//! are the `α = β = 1/3` case.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::optimizer::gibbs_posterior;
use crate::profile::{gibbs_loss, gibbs_variance, kl_posterior_prior, BoundConfig, LossProfile};
use crate::scalar::Real;

/// Smallest `n` for which the certificates' λ floor argument goes through.
pub const MIN_CERTIFIABLE_N: usize = 7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Certified,
    NotCertified,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CertificateMethod {
    /// Base constants `a`, `b`, `K`.
    Thm4Base,
    /// Tuned `(α, β)` with the plain `b(β)`.
    TunedAlphaBeta,
    /// Base `(1/3, 1/3)` split with the refined `b`.
    RefinedB,
    /// Tuned `(α, β)` with the refined `b(β)`.
    Combined,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Witnesses<T> {
    pub a: T,
    pub b: T,
    pub k: T,
    pub mediocre_count: u64,
    pub alpha: T,
    pub beta: T,
    /// `b > 1`: no loss can reach the bad interval.
    pub b_vacuous: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Certificate<T> {
    pub verdict: Verdict,
    pub method: CertificateMethod,
    pub witnesses: Witnesses<T>,
}

impl<T: Real> Certificate<T> {
    pub fn is_certified(&self) -> bool {
        self.verdict == Verdict::Certified
    }

    fn slack_ratio(&self) -> f64 {
        let count = self.witnesses.mediocre_count as f64;
        let k = self.witnesses.k.as_f64();
        if count == 0.0 {
            0.0
        } else if k <= 0.0 {
            f64::INFINITY
        } else {
            count / k
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExcessLoss<T> {
    pub excess: T,
    pub multiplicity: u64,
}

/// `x_h = L̂(h) − min L̂`, aligned with the profile's entries.
pub fn excess_losses<T: Real>(profile: &LossProfile<T>) -> Vec<ExcessLoss<T>> {
    let min = profile.min_loss();
    profile.entries().iter().map(|e| ExcessLoss { excess: e.loss - min, multiplicity: e.multiplicity }).collect()
}

struct Logs<T> {
    n: T,
    m: T,
    /// `ln(4n/δ²)`
    four_n: T,
    /// `ln(2√n/δ)`
    confidence: T,
}

fn logs<T: Real>(profile: &LossProfile<T>, cfg: &BoundConfig<T>) -> Result<Logs<T>> {
    cfg.check_profile(profile)?;
    if !profile.has_uniform_prior() {
        return Err(Error::Precondition("counting certificates assume a uniform prior".into()));
    }
    if cfg.n_eff() < MIN_CERTIFIABLE_N {
        return Err(Error::Precondition(format!(
            "counting certificates need n >= {MIN_CERTIFIABLE_N}, got {}; use runtime_conditions",
            cfg.n_eff()
        )));
    }
    let n = T::from_count(cfg.n_eff() as u64);
    let delta = cfg.delta();
    Ok(Logs {
        n,
        m: T::from_count(profile.num_hypotheses()),
        four_n: (T::lit(4.0) * n / (delta * delta)).ln(),
        confidence: cfg.confidence_term(),
    })
}

/// `K(0, 0) = (e²/4) ln(4n/δ²)`; any `m ≤ K(0,0) + 1` is certifiable.
pub fn k_zero_zero<T: Real>(cfg: &BoundConfig<T>) -> T {
    let n = T::from_count(cfg.n_eff() as u64);
    let delta = cfg.delta();
    T::E() * T::E() / T::lit(4.0) * (T::lit(4.0) * n / (delta * delta)).ln()
}

fn plain_b<T: Real>(lg: &Logs<T>, beta: T) -> T {
    if beta == T::zero() {
        return T::infinity();
    }
    (lg.m * lg.n * lg.n / beta).ln() / (lg.n * lg.confidence).sqrt()
}

/// Refined `b(β)`, or `None` when its side conditions fail.
fn refined_b<T: Real>(lg: &Logs<T>, beta: T) -> Option<T> {
    if beta == T::zero() {
        return Some(T::infinity());
    }
    let mn_beta = lg.m * lg.n / beta;
    if mn_beta < T::lit(0.5) {
        return None;
    }
    let log_arg = (T::lit(4.0) * mn_beta * mn_beta.ln().powi(2) / (lg.confidence * lg.four_n)).ln();
    if !(log_arg >= T::lit(2.0)) {
        return None;
    }
    Some(log_arg / (lg.n * lg.confidence).sqrt())
}

fn count_mediocre<T: Real>(profile: &LossProfile<T>, a: T, b: T) -> u64 {
    excess_losses(profile).iter().filter(|x| x.excess > a && x.excess < b).map(|x| x.multiplicity).sum()
}

fn evaluate<T: Real>(
    profile: &LossProfile<T>,
    lg: &Logs<T>,
    alpha: T,
    beta: T,
    refine_b: bool,
    (plain_method, refined_method): (CertificateMethod, CertificateMethod),
) -> Certificate<T> {
    let a = (alpha * lg.four_n).sqrt() / lg.n;
    let refined = if refine_b { refined_b(lg, beta) } else { None };
    let (b, method) = match refined {
        Some(b) => (b, refined_method),
        None => (plain_b(lg, beta), plain_method),
    };
    let k = T::E() * T::E() * (T::one() - alpha - beta) / T::lit(4.0) * lg.four_n;
    let mediocre_count = count_mediocre(profile, a, b);
    let verdict = if T::from_count(mediocre_count) <= k { Verdict::Certified } else { Verdict::NotCertified };
    Certificate {
        verdict,
        method,
        witnesses: Witnesses { a, b, k, mediocre_count, alpha, beta, b_vacuous: b > T::one() },
    }
}

fn methods<T: Real>(alpha: T, beta: T) -> (CertificateMethod, CertificateMethod) {
    let third = T::one() / T::lit(3.0);
    if alpha == third && beta == third {
        (CertificateMethod::TunedAlphaBeta, CertificateMethod::RefinedB)
    } else {
        (CertificateMethod::TunedAlphaBeta, CertificateMethod::Combined)
    }
}

/// Base counting certificate (`α = β = 1/3`, plain `b`).
pub fn thm4_certificate<T: Real>(profile: &LossProfile<T>, cfg: &BoundConfig<T>) -> Result<Certificate<T>> {
    let lg = logs(profile, cfg)?;
    let third = T::one() / T::lit(3.0);
    let methods = (CertificateMethod::Thm4Base, CertificateMethod::RefinedB);
    Ok(evaluate(profile, &lg, third, third, false, methods))
}

/// Counting certificate at a chosen `(α, β)`. With `refine_b`, the refined
/// `b(β)` is used when its side conditions hold and the plain one otherwise.
pub fn tuned_certificate<T: Real>(
    profile: &LossProfile<T>,
    cfg: &BoundConfig<T>,
    alpha: T,
    beta: T,
    refine_b: bool,
) -> Result<Certificate<T>> {
    if !(alpha >= T::zero() && beta >= T::zero()) || alpha + beta > T::one() + T::epsilon() {
        return Err(domain(format!("(alpha, beta) = ({alpha}, {beta}) must be nonnegative with alpha + beta <= 1")));
    }
    let lg = logs(profile, cfg)?;
    Ok(evaluate(profile, &lg, alpha, beta, refine_b, methods(alpha, beta)))
}

/// Searches `(α, β)` over the simplex grid `{(i, j)/(grid_steps − 1)}`,
/// with and without the refined `b`, after trying the base split. Returns the
/// first certifying witness in that order, else the one with the lowest
/// mediocre-count-to-`K` ratio.
pub fn search_certificate<T: Real>(
    profile: &LossProfile<T>,
    cfg: &BoundConfig<T>,
    grid_steps: usize,
) -> Result<Certificate<T>> {
    if grid_steps < 2 {
        return Err(domain(format!("grid_steps {grid_steps} must be at least 2")));
    }
    let lg = logs(profile, cfg)?;
    let third = T::one() / T::lit(3.0);
    let base = (CertificateMethod::Thm4Base, CertificateMethod::RefinedB);
    let mut candidates = vec![(third, third, false, base), (third, third, true, base)];
    let last = T::from_count((grid_steps - 1) as u64);
    for i in 0..grid_steps {
        for j in 0..grid_steps - i {
            let alpha = T::from_count(i as u64) / last;
            let beta = T::from_count(j as u64) / last;
            candidates.push((alpha, beta, false, methods(alpha, beta)));
            candidates.push((alpha, beta, true, methods(alpha, beta)));
        }
    }
    let results: Vec<Certificate<T>> =
        candidates.par_iter().map(|&(alpha, beta, refine, m)| evaluate(profile, &lg, alpha, beta, refine, m)).collect();
    if let Some(found) = results.iter().find(|c| c.is_certified()) {
        return Ok(*found);
    }
    let mut best = results[0];
    for c in &results[1..] {
        if c.slack_ratio() < best.slack_ratio() {
            best = *c;
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionPoint<T> {
    pub lambda: T,
    /// `2 KL(ρ_λ‖π) + ln(4n/δ²) > λ² n² Var_ρλ[L̂]`
    pub cond9: bool,
    /// `E_ρλ[L̂] > (1 − λ) n Var_ρλ[L̂]`
    pub cond10: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuntimeCheck<T> {
    pub points: Vec<ConditionPoint<T>>,
    /// `√(ln(2√n/δ)/n)`: points below it are reported but not required.
    pub lambda_floor: T,
    pub certified: bool,
}

/// Lower end of the λ range the stationary-point conditions must cover.
pub fn lambda_floor<T: Real>(cfg: &BoundConfig<T>) -> T {
    (cfg.confidence_term() / T::from_count(cfg.n_eff() as u64)).sqrt()
}

/// `size` evenly spaced points from `min(λ_floor, 1)` to 1.
pub fn default_condition_grid<T: Real>(cfg: &BoundConfig<T>, size: usize) -> Vec<T> {
    let lo = lambda_floor(cfg).min(T::one());
    if size <= 1 {
        return vec![T::one()];
    }
    let span = T::one() - lo;
    let last = T::from_count((size - 1) as u64);
    (0..size).map(|i| if i + 1 == size { T::one() } else { lo + span * T::from_count(i as u64) / last }).collect()
}

/// Evaluates both stationary-point conditions on `lambda_grid ⊂ (0, 1]`.
/// Certified iff at least one holds at every grid point `≥ λ_floor`.
pub fn runtime_conditions<T: Real>(
    profile: &LossProfile<T>,
    cfg: &BoundConfig<T>,
    lambda_grid: &[T],
) -> Result<RuntimeCheck<T>> {
    cfg.check_profile(profile)?;
    let n = T::from_count(cfg.n_eff() as u64);
    let delta = cfg.delta();
    let four_n = (T::lit(4.0) * n / (delta * delta)).ln();
    let floor = lambda_floor(cfg);
    let mut points = Vec::with_capacity(lambda_grid.len());
    for &lambda in lambda_grid {
        if !(lambda > T::zero() && lambda <= T::one()) {
            return Err(domain(format!("condition grid point {lambda} outside (0, 1]")));
        }
        let rho = gibbs_posterior(profile, lambda)?;
        let kl = kl_posterior_prior(profile, &rho)?;
        let emp = gibbs_loss(profile, &rho)?;
        let var = gibbs_variance(profile, &rho)?;
        points.push(ConditionPoint {
            lambda,
            cond9: T::lit(2.0) * kl + four_n > lambda * lambda * n * n * var,
            cond10: emp > (T::one() - lambda) * n * var,
        });
    }
    let certified = points.iter().filter(|p| p.lambda >= floor).all(|p| p.cond9 || p.cond10);
    Ok(RuntimeCheck { points, lambda_floor: floor, certified })
}

/// Two hypotheses with losses 0 and 0.5, uniform prior, `n = 100`, `δ = 0.01`.
pub fn make_nonconvex_example<T: Real>() -> (LossProfile<T>, BoundConfig<T>) {
    let profile = LossProfile::uniform(&[T::zero(), T::lit(0.5)], 100).expect("valid example");
    let cfg = BoundConfig::new(100, T::lit(0.01)).expect("valid example");
    (profile, cfg)
}

/// Number of hypotheses in [`make_two_minima_example`]: `round(e^{0.74·n·Δ}) + 1`.
pub fn two_minima_hypothesis_count() -> u64 {
    (0.74f64 * 200.0 * 0.1).exp().round_ties_even() as u64 + 1
}

/// One zero-loss hypothesis and `m − 1` hypotheses at loss 0.1 under a uniform
/// prior, `n = 200`, `δ = 0.25`; `F` has two local minima on (0, 1].
pub fn make_two_minima_example<T: Real>() -> (LossProfile<T>, BoundConfig<T>) {
    let m = two_minima_hypothesis_count();
    let profile = LossProfile::uniform_compressed(&[(T::zero(), 1), (T::lit(0.1), m - 1)], 200).expect("valid example");
    let cfg = BoundConfig::new(200, T::lit(0.25)).expect("valid example");
    (profile, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optimizer::scan_lambda;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cfg(n: usize, delta: f64) -> BoundConfig<f64> {
        BoundConfig::new(n, delta).unwrap()
    }

    #[test]
    fn excess_loss_examples() {
        let p = LossProfile::uniform(&[0.2, 0.2], 10).unwrap();
        let x: Vec<f64> = excess_losses(&p).iter().map(|x| x.excess).collect();
        assert_eq!(x, vec![0.0, 0.0]);

        let p = LossProfile::uniform(&[0.1, 0.4], 10).unwrap();
        let x = excess_losses(&p);
        assert_eq!(x[0].excess, 0.0);
        assert_abs_diff_eq!(x[1].excess, 0.3, epsilon = 1e-15);

        let p = LossProfile::uniform_compressed(&[(0.1, 1), (0.3, 5)], 10).unwrap();
        let x = excess_losses(&p);
        assert_abs_diff_eq!(x[1].excess, 0.2, epsilon = 1e-15);
        assert_eq!(x[1].multiplicity, 5);
    }

    #[test]
    fn base_constants() {
        let losses: Vec<f64> = (0..100).map(|i| i as f64 / 100.0).collect();
        let p = LossProfile::uniform(&losses, 1000).unwrap();
        let c = thm4_certificate(&p, &cfg(1000, 0.05)).unwrap();
        let l4 = (4.0 * 1000.0f64 / 0.0025).ln();
        let conf = (2.0 * 1000f64.sqrt() / 0.05).ln();
        // Literal base constants against the (1/3, 1/3) evaluation.
        let a = l4.sqrt() / (1000.0 * 3f64.sqrt());
        let b = (3.0 * 100.0 * 1e6f64).ln() / (1000.0 * conf).sqrt();
        let k = std::f64::consts::E.powi(2) / 12.0 * l4;
        assert_abs_diff_eq!(c.witnesses.a, a, epsilon = 1e-15);
        assert_abs_diff_eq!(c.witnesses.b, b, epsilon = 1e-14);
        assert_abs_diff_eq!(c.witnesses.k, k, epsilon = 1e-13);
        assert_abs_diff_eq!(a, 0.0021822, epsilon = 1e-7);
        assert_abs_diff_eq!(k, 8.797, epsilon = 1e-3);
        assert_abs_diff_eq!(b, 0.23095, epsilon = 1e-5);
        assert_eq!(c.method, CertificateMethod::Thm4Base);
        // losses 0.01..0.23 are mediocre: 23 > K
        assert_eq!(c.witnesses.mediocre_count, 23);
        assert_eq!(c.verdict, Verdict::NotCertified);
    }

    #[test]
    fn equal_losses_are_certified() {
        let p = LossProfile::uniform(&[0.4; 50], 500).unwrap();
        let c = thm4_certificate(&p, &cfg(500, 0.05)).unwrap();
        assert_eq!(c.witnesses.mediocre_count, 0);
        assert!(c.is_certified());
    }

    #[test]
    fn preconditions() {
        let p = LossProfile::new(
            vec![crate::profile::LossEntry::new(0.1, 0.3, 1), crate::profile::LossEntry::new(0.2, 0.7, 1)],
            100,
        )
        .unwrap();
        assert!(matches!(thm4_certificate(&p, &cfg(100, 0.05)), Err(Error::Precondition(_))));
        let p = LossProfile::uniform(&[0.1, 0.2], 6).unwrap();
        assert!(matches!(thm4_certificate(&p, &cfg(6, 0.05)), Err(Error::Precondition(_))));
        let p = LossProfile::uniform(&[0.1, 0.2], 60).unwrap();
        assert!(tuned_certificate(&p, &cfg(60, 0.05), 0.7, 0.4, false).is_err());
        assert!(tuned_certificate(&p, &cfg(60, 0.05), -0.1, 0.4, false).is_err());
        assert!(search_certificate(&p, &cfg(60, 0.05), 1).is_err());
    }

    #[test]
    fn small_m_always_certifiable() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..50 {
            let n = rng.random_range(7..3000);
            let c = cfg(n, rng.random_range(0.01..0.5));
            let m = (k_zero_zero(&c).floor() as usize + 1).max(1);
            let losses: Vec<f64> = (0..m).map(|_| rng.random::<f64>()).collect();
            let p = LossProfile::uniform(&losses, n).unwrap();
            assert!(search_certificate(&p, &c, 21).unwrap().is_certified());
        }
    }

    #[test]
    fn boundary_of_the_simplex() {
        // α = 1, β = 0: K = 0 and b = ∞, so any loss above a(1) breaks it.
        let c = cfg(1000, 0.05);
        let p = LossProfile::uniform(&[0.0, 0.001, 0.002], 1000).unwrap();
        let cert = tuned_certificate(&p, &c, 1.0, 0.0, false).unwrap();
        assert_eq!(cert.witnesses.k, 0.0);
        assert_eq!(cert.witnesses.b, f64::INFINITY);
        assert!(cert.witnesses.a > 0.002);
        assert!(cert.is_certified());
        let p = LossProfile::uniform(&[0.0, 0.5], 1000).unwrap();
        assert!(!tuned_certificate(&p, &c, 1.0, 0.0, false).unwrap().is_certified());
    }

    #[test]
    fn refined_b_is_smaller() {
        let losses: Vec<f64> = (0..100).map(|i| i as f64 / 100.0).collect();
        let p = LossProfile::uniform(&losses, 1000).unwrap();
        let c = cfg(1000, 0.05);
        let third = 1.0 / 3.0;
        let base = thm4_certificate(&p, &c).unwrap();
        let refined = tuned_certificate(&p, &c, third, third, true).unwrap();
        assert_eq!(refined.method, CertificateMethod::RefinedB);
        assert!(refined.witnesses.b < base.witnesses.b);
        // hand evaluation of ln(12 m n ln(3mn)^2 / (ln(2√n/δ) ln(4n/δ²))) / √(n ln(2√n/δ))
        let conf = (2.0 * 1000f64.sqrt() / 0.05).ln();
        let l4 = (4.0 * 1000.0f64 / 0.0025).ln();
        let hand = (12.0 * 100.0 * 1000.0 * (3.0f64 * 100.0 * 1000.0).ln().powi(2) / (conf * l4)).ln()
            / (1000.0 * conf).sqrt();
        assert_abs_diff_eq!(refined.witnesses.b, hand, epsilon = 1e-13);
        let combined = tuned_certificate(&p, &c, 0.2, 0.1, true).unwrap();
        assert_eq!(combined.method, CertificateMethod::Combined);
    }

    #[test]
    fn tuned_third_matches_base_field_for_field() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..100 {
            let n = rng.random_range(7..3000);
            let m = rng.random_range(1..100);
            let losses: Vec<f64> = (0..m).map(|_| rng.random::<f64>()).collect();
            let p = LossProfile::uniform(&losses, n).unwrap();
            let c = cfg(n, rng.random_range(0.01..0.5));
            let base = thm4_certificate(&p, &c).unwrap();
            let tuned = tuned_certificate(&p, &c, 1.0 / 3.0, 1.0 / 3.0, false).unwrap();
            assert_eq!(base.verdict, tuned.verdict);
            assert_eq!(base.witnesses, tuned.witnesses);
        }
    }

    #[test]
    fn removing_a_mediocre_hypothesis_never_breaks_a_certificate() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let mut checked = 0;
        for _ in 0..300 {
            let n = rng.random_range(50..2000);
            let m = rng.random_range(2..40);
            let mut losses: Vec<f64> = (0..m).map(|_| rng.random::<f64>() * 0.1).collect();
            let c = cfg(n, 0.05);
            let p = LossProfile::uniform(&losses, n).unwrap();
            let before = thm4_certificate(&p, &c).unwrap();
            let w = before.witnesses;
            let min = p.min_loss();
            if let Some(i) = losses.iter().position(|&l| l - min > w.a && l - min < w.b) {
                losses.remove(i);
                let q = LossProfile::uniform(&losses, n).unwrap();
                let after = thm4_certificate(&q, &c).unwrap();
                assert!(after.witnesses.mediocre_count < w.mediocre_count);
                if before.is_certified() {
                    checked += 1;
                    assert!(after.is_certified());
                }
            }
        }
        assert!(checked > 0);
    }

    #[test]
    fn certificate_search_contains_base() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let mut base_max = 0;
        let mut search_max = 0;
        for m in (5..200).step_by(5) {
            let losses: Vec<f64> = (0..m).map(|_| 0.1 + rng.random::<f64>() * 0.2).collect();
            let p = LossProfile::uniform(&losses, 1000).unwrap();
            let c = cfg(1000, 0.05);
            let base = thm4_certificate(&p, &c).unwrap().is_certified();
            let search = search_certificate(&p, &c, 21).unwrap().is_certified();
            assert!(!base || search);
            if base {
                base_max = m;
            }
            if search {
                search_max = m;
            }
        }
        assert!(search_max >= base_max);
    }

    #[test]
    fn single_hypothesis_everything_passes() {
        let p = LossProfile::uniform(&[0.3], 100).unwrap();
        let c = cfg(100, 0.05);
        assert!(search_certificate(&p, &c, 21).unwrap().is_certified());
        let grid = default_condition_grid(&c, 50);
        let check = runtime_conditions(&p, &c, &grid).unwrap();
        assert!(check.certified);
        assert!(check.points.iter().all(|pt| pt.cond9));
    }

    #[test]
    fn loss_condition_at_lambda_one() {
        let p = LossProfile::uniform(&[0.1, 0.4, 0.6], 100).unwrap();
        let c = cfg(100, 0.05);
        let check = runtime_conditions(&p, &c, &[1.0]).unwrap();
        assert!(check.points[0].cond10);
        let zero = LossProfile::uniform(&[0.0, 0.0], 100).unwrap();
        let check = runtime_conditions(&zero, &c, &[1.0]).unwrap();
        assert!(!check.points[0].cond10);
        assert!(runtime_conditions(&p, &c, &[1.5]).is_err());
    }

    #[test]
    fn certified_profiles_satisfy_the_variance_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let mut seen = 0;
        for _ in 0..200 {
            let n = rng.random_range(50..2000);
            let m = rng.random_range(1..30);
            let losses: Vec<f64> = (0..m).map(|_| rng.random::<f64>()).collect();
            let p = LossProfile::uniform(&losses, n).unwrap();
            let c = cfg(n, 0.05);
            if !thm4_certificate(&p, &c).unwrap().is_certified() {
                continue;
            }
            seen += 1;
            let l4 = (4.0 * n as f64 / 0.0025).ln();
            let grid = default_condition_grid(&c, 100);
            for &lam in &grid {
                let rho = gibbs_posterior(&p, lam).unwrap();
                let var = gibbs_variance(&p, &rho).unwrap();
                assert!(var <= l4 / (lam * lam * (n * n) as f64) + 1e-15);
            }
            assert!(runtime_conditions(&p, &c, &grid).unwrap().points.iter().all(|pt| pt.cond9));
        }
        assert!(seen > 20);
    }

    #[test]
    fn nonconvex_example_round_trips() {
        let (p, c) = make_nonconvex_example::<f64>();
        assert_eq!(c.n_eff(), 100);
        assert_eq!(c.delta(), 0.01);
        assert_eq!(p.len(), 2);
        let scan = scan_lambda(&p, &c, 2000, 1.0).unwrap();
        assert_eq!(scan.local_minima.len(), 1);
    }

    #[test]
    fn two_minima_example() {
        // e^14.8 = 2676445.055..., so round(.) + 1 = 2676446
        assert_eq!(two_minima_hypothesis_count(), 2_676_446);
        let (p, c) = make_two_minima_example::<f64>();
        assert_eq!(p.num_hypotheses(), 2_676_446);
        assert_eq!(p.len(), 2);
        let scan = scan_lambda(&p, &c, 2000, 1.0).unwrap();
        assert_eq!(scan.local_minima.len(), 2);
    }
}
