//! Loss profiles, posterior weights and the Gibbs expectations over them.
//!
//! A [`LossProfile`] stores the empirical losses of a finite hypothesis set
//! together with the prior. Hypotheses that share a loss and a prior mass
//! can be stored once with a multiplicity; every operation here treats an
//! entry of multiplicity `k` exactly like `k` separate entries.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::scalar::{compensated_sum, Real};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossEntry<T> {
    pub loss: T,
    /// Prior mass of each single hypothesis in this entry.
    pub prior_mass: T,
    pub multiplicity: u64,
}

impl<T: Real> LossEntry<T> {
    pub fn new(loss: T, prior_mass: T, multiplicity: u64) -> Self {
        Self { loss, prior_mass, multiplicity }
    }

    #[inline]
    pub(crate) fn mult(&self) -> T {
        T::from_count(self.multiplicity)
    }
}

/// Empirical losses over a finite hypothesis space, with prior masses and
/// the number of i.i.d. evaluation points behind each loss.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossProfile<T> {
    entries: Vec<LossEntry<T>>,
    n_eff: usize,
}

impl<T: Real> LossProfile<T> {
    /// Validates the entries. A prior whose total mass is off by at most
    /// `T::RENORM_TOL` is renormalized; larger deviations are rejected.
    pub fn new(mut entries: Vec<LossEntry<T>>, n_eff: usize) -> Result<Self> {
        if entries.is_empty() {
            return Err(invalid("loss profile needs at least one entry"));
        }
        if n_eff == 0 {
            return Err(invalid("n_eff must be at least 1"));
        }
        for (i, e) in entries.iter().enumerate() {
            if !e.loss.is_finite() || e.loss < T::zero() || e.loss > T::one() {
                return Err(invalid(format!("entry {i}: loss {} outside [0, 1]", e.loss)));
            }
            if !e.prior_mass.is_finite() || e.prior_mass <= T::zero() || e.prior_mass > T::one() {
                return Err(invalid(format!("entry {i}: prior mass {} outside (0, 1]", e.prior_mass)));
            }
            if e.multiplicity == 0 {
                return Err(invalid(format!("entry {i}: multiplicity must be at least 1")));
            }
        }
        let total = compensated_sum(entries.iter().map(|e| e.prior_mass * e.mult()));
        let dev = (total - T::one()).abs();
        if dev > T::lit(T::RENORM_TOL) {
            return Err(invalid(format!("prior masses sum to {total}, expected 1")));
        }
        if dev > T::zero() {
            for e in &mut entries {
                e.prior_mass = (e.prior_mass / total).min(T::one());
            }
        }
        Ok(Self { entries, n_eff })
    }

    /// One entry per loss, uniform prior `1/m`.
    pub fn uniform(losses: &[T], n_eff: usize) -> Result<Self> {
        let pairs: Vec<(T, u64)> = losses.iter().map(|&l| (l, 1)).collect();
        Self::uniform_compressed(&pairs, n_eff)
    }

    /// `(loss, multiplicity)` pairs under a uniform prior over all
    /// `Σ multiplicity` hypotheses.
    pub fn uniform_compressed(pairs: &[(T, u64)], n_eff: usize) -> Result<Self> {
        let m: u64 = pairs.iter().map(|&(_, k)| k).sum();
        if m == 0 {
            return Err(invalid("loss profile needs at least one hypothesis"));
        }
        let mass = T::one() / T::from_count(m);
        let entries = pairs.iter().map(|&(l, k)| LossEntry::new(l, mass, k)).collect();
        Self::new(entries, n_eff)
    }

    pub fn entries(&self) -> &[LossEntry<T>] {
        &self.entries
    }

    /// Number of stored entries (distinct rows, not hypotheses).
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Number of hypotheses represented, counting multiplicities.
    pub fn num_hypotheses(&self) -> u64 {
        self.entries.iter().map(|e| e.multiplicity).sum()
    }

    pub fn n_eff(&self) -> usize {
        self.n_eff
    }

    pub fn min_loss(&self) -> T {
        self.entries.iter().map(|e| e.loss).fold(T::infinity(), T::min)
    }

    /// True when every hypothesis carries the same prior mass (relative 1e-9).
    pub fn has_uniform_prior(&self) -> bool {
        let first = self.entries[0].prior_mass;
        let tol = T::lit(1e-9).max(T::lit(T::MASS_TOL));
        self.entries.iter().all(|e| ((e.prior_mass - first) / first).abs() <= tol)
    }

    /// The same hypothesis space with every entry split to multiplicity one.
    pub fn expand(&self) -> Self {
        let entries = self
            .entries
            .iter()
            .flat_map(|e| std::iter::repeat_n(LossEntry::new(e.loss, e.prior_mass, 1), e.multiplicity as usize))
            .collect();
        Self { entries, n_eff: self.n_eff }
    }

    /// Replaces `n_eff`, e.g. to move from `n` to `n - r` evaluation points.
    pub fn with_n_eff(&self, n_eff: usize) -> Result<Self> {
        Self::new(self.entries.clone(), n_eff)
    }
}

/// A probability distribution over the hypotheses of a [`LossProfile`].
///
/// Weights are per hypothesis and aligned with the profile's entries: the
/// total mass of entry `i` is `weights[i] * multiplicity[i]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorWeights<T> {
    weights: Vec<T>,
}

impl<T: Real> PosteriorWeights<T> {
    /// Validates against `profile`. Deviations from unit mass up to the mass
    /// tolerance are kept as given (so stored posteriors reload bit-exact);
    /// larger ones up to the renormalization tolerance are rescaled.
    pub fn new(weights: Vec<T>, profile: &LossProfile<T>) -> Result<Self> {
        check_aligned(profile, weights.len())?;
        for (i, &w) in weights.iter().enumerate() {
            if !w.is_finite() || w < T::zero() {
                return Err(invalid(format!("posterior weight {i} is {w}")));
            }
        }
        let total = compensated_sum(weights.iter().zip(profile.entries()).map(|(&w, e)| w * e.mult()));
        let dev = (total - T::one()).abs();
        if dev > T::lit(T::RENORM_TOL) {
            return Err(invalid(format!("posterior masses sum to {total}, expected 1")));
        }
        let mut rho = Self { weights };
        if dev > T::lit(T::MASS_TOL) {
            rho.scale(T::one() / total);
        }
        Ok(rho)
    }

    /// Nonnegative weights of any total, normalized to a distribution.
    pub fn from_unnormalized(weights: Vec<T>, profile: &LossProfile<T>) -> Result<Self> {
        check_aligned(profile, weights.len())?;
        let total = compensated_sum(weights.iter().zip(profile.entries()).map(|(&w, e)| w * e.mult()));
        if !(total > T::zero()) || !total.is_finite() {
            return Err(invalid("weights must have positive finite total mass"));
        }
        let normalized = weights.into_iter().map(|w| w / total).collect();
        Self::new(normalized, profile)
    }

    /// The prior itself.
    pub fn prior(profile: &LossProfile<T>) -> Self {
        Self { weights: profile.entries().iter().map(|e| e.prior_mass).collect() }
    }

    /// All mass on the single hypothesis stored at `entry`.
    pub fn point_mass(profile: &LossProfile<T>, entry: usize) -> Result<Self> {
        let e = profile.entries().get(entry).ok_or_else(|| invalid(format!("entry {entry} out of range")))?;
        if e.multiplicity != 1 {
            return Err(invalid("point mass needs an entry of multiplicity 1"));
        }
        let mut weights = vec![T::zero(); profile.len()];
        weights[entry] = T::one();
        Ok(Self { weights })
    }

    pub(crate) fn from_raw(weights: Vec<T>) -> Self {
        Self { weights }
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Total mass per entry (`weight * multiplicity`).
    pub fn entry_masses(&self, profile: &LossProfile<T>) -> Result<Vec<T>> {
        check_aligned(profile, self.len())?;
        Ok(self.weights.iter().zip(profile.entries()).map(|(&w, e)| w * e.mult()).collect())
    }

    fn scale(&mut self, s: T) {
        for w in &mut self.weights {
            *w *= s;
        }
    }
}

/// Run-wide constants of a bound evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundConfig<T> {
    n_eff: usize,
    delta: T,
    tol_mass: T,
    tol_bound: T,
    max_iters: usize,
}

impl<T: Real> BoundConfig<T> {
    pub const DEFAULT_MAX_ITERS: usize = 1000;

    pub fn new(n_eff: usize, delta: T) -> Result<Self> {
        if n_eff == 0 {
            return Err(Error::Domain("n_eff must be at least 1".into()));
        }
        if !(delta > T::zero() && delta < T::one()) {
            return Err(Error::Domain(format!("delta {delta} outside (0, 1)")));
        }
        Ok(Self {
            n_eff,
            delta,
            tol_mass: T::lit(T::MASS_TOL),
            tol_bound: T::lit(T::BOUND_TOL),
            max_iters: Self::DEFAULT_MAX_ITERS,
        })
    }

    pub fn with_max_iters(mut self, max_iters: usize) -> Self {
        self.max_iters = max_iters.max(1);
        self
    }

    pub fn with_tol_bound(mut self, tol: T) -> Self {
        self.tol_bound = tol;
        self
    }

    pub fn n_eff(&self) -> usize {
        self.n_eff
    }

    pub fn delta(&self) -> T {
        self.delta
    }

    pub fn tol_mass(&self) -> T {
        self.tol_mass
    }

    pub fn tol_bound(&self) -> T {
        self.tol_bound
    }

    pub fn max_iters(&self) -> usize {
        self.max_iters
    }

    pub(crate) fn n(&self) -> T {
        T::from_count(self.n_eff as u64)
    }

    /// `ln(2 sqrt(n) / delta)`.
    pub fn confidence_term(&self) -> T {
        (T::lit(2.0) * self.n().sqrt() / self.delta).ln()
    }

    /// Fails unless `profile` was built for the same number of evaluation points.
    pub fn check_profile(&self, profile: &LossProfile<T>) -> Result<()> {
        if profile.n_eff() != self.n_eff {
            return Err(invalid(format!(
                "profile has n_eff = {} but the bound config uses {}",
                profile.n_eff(),
                self.n_eff
            )));
        }
        Ok(())
    }
}

pub(crate) fn check_aligned<T>(profile: &LossProfile<T>, got: usize) -> Result<()> {
    if profile.entries.len() != got {
        return Err(Error::Alignment { expected: profile.entries.len(), got });
    }
    Ok(())
}

/// `E_rho[L]`.
pub fn gibbs_loss<T: Real>(profile: &LossProfile<T>, rho: &PosteriorWeights<T>) -> Result<T> {
    check_aligned(profile, rho.len())?;
    let s = compensated_sum(rho.weights().iter().zip(profile.entries()).map(|(&w, e)| w * e.mult() * e.loss));
    Ok(s.max(T::zero()).min(T::one()))
}

/// `Var_rho[L]`, clamped at zero against roundoff.
pub fn gibbs_variance<T: Real>(profile: &LossProfile<T>, rho: &PosteriorWeights<T>) -> Result<T> {
    let mean = gibbs_loss(profile, rho)?;
    // Centered second moment: same value as E[L^2] - E[L]^2 without the cancellation.
    let s = compensated_sum(rho.weights().iter().zip(profile.entries()).map(|(&w, e)| {
        let d = e.loss - mean;
        w * e.mult() * d * d
    }));
    Ok(s.max(T::zero()))
}

/// `KL(rho || prior)` with `0 ln 0 = 0`.
pub fn kl_posterior_prior<T: Real>(profile: &LossProfile<T>, rho: &PosteriorWeights<T>) -> Result<T> {
    check_aligned(profile, rho.len())?;
    let mut terms = Vec::with_capacity(rho.len());
    for (i, (&w, e)) in rho.weights().iter().zip(profile.entries()).enumerate() {
        if w > T::zero() {
            if e.prior_mass <= T::zero() {
                return Err(Error::SupportViolation { index: i });
            }
            terms.push(w * e.mult() * (w / e.prior_mass).ln());
        }
    }
    Ok(compensated_sum(terms).max(T::zero()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn two(losses: [f64; 2]) -> LossProfile<f64> {
        LossProfile::uniform(&losses, 100).unwrap()
    }

    #[test]
    fn gibbs_loss_examples() {
        let p = two([0.0, 0.5]);
        let uniform = PosteriorWeights::prior(&p);
        assert_abs_diff_eq!(gibbs_loss(&p, &uniform).unwrap(), 0.25, epsilon = 1e-15);
        let point = PosteriorWeights::point_mass(&p, 0).unwrap();
        assert_eq!(gibbs_loss(&p, &point).unwrap(), 0.0);

        let p = two([0.0, 0.1]);
        let rho = PosteriorWeights::new(vec![0.73106, 0.26894], &p).unwrap();
        assert_abs_diff_eq!(gibbs_loss(&p, &rho).unwrap(), 0.026894, epsilon = 1e-12);
    }

    #[test]
    fn variance_examples() {
        let p = LossProfile::uniform(&[0.37], 10).unwrap();
        let rho = PosteriorWeights::prior(&p);
        assert_eq!(gibbs_variance(&p, &rho).unwrap(), 0.0);

        let p = two([0.0, 0.5]);
        let rho = PosteriorWeights::prior(&p);
        assert_abs_diff_eq!(gibbs_variance(&p, &rho).unwrap(), 0.0625, epsilon = 1e-15);

        let p = LossProfile::uniform(&[0.3, 0.3, 0.3], 10).unwrap();
        let rho = PosteriorWeights::prior(&p);
        assert_abs_diff_eq!(gibbs_variance(&p, &rho).unwrap(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn kl_examples() {
        let p = LossProfile::uniform(&[0.1, 0.2, 0.3, 0.4], 10).unwrap();
        assert_abs_diff_eq!(kl_posterior_prior(&p, &PosteriorWeights::prior(&p)).unwrap(), 0.0, epsilon = 1e-15);
        let point = PosteriorWeights::point_mass(&p, 2).unwrap();
        assert_abs_diff_eq!(kl_posterior_prior(&p, &point).unwrap(), 4f64.ln(), epsilon = 1e-12);

        let p = two([0.0, 0.1]);
        let rho = PosteriorWeights::new(vec![0.73106, 0.26894], &p).unwrap();
        // 0.73106 ln(1.46212) + 0.26894 ln(0.53788), summed by hand
        assert_abs_diff_eq!(kl_posterior_prior(&p, &rho).unwrap(), 0.110_945_493, epsilon = 1e-8);
    }

    #[test]
    fn misaligned_inputs_are_rejected() {
        let p = two([0.0, 0.5]);
        let q = LossProfile::uniform(&[0.1, 0.2, 0.3], 100).unwrap();
        let rho = PosteriorWeights::prior(&q);
        assert_eq!(gibbs_loss(&p, &rho), Err(Error::Alignment { expected: 2, got: 3 }));
        assert!(matches!(gibbs_variance(&p, &rho), Err(Error::Alignment { .. })));
        assert!(matches!(kl_posterior_prior(&p, &rho), Err(Error::Alignment { .. })));
    }

    #[test]
    fn constructor_validation() {
        assert!(LossProfile::<f64>::uniform(&[], 10).is_err());
        assert!(LossProfile::uniform(&[1.2], 10).is_err());
        assert!(LossProfile::uniform(&[-0.1], 10).is_err());
        assert!(LossProfile::uniform(&[f64::NAN], 10).is_err());
        assert!(LossProfile::uniform(&[0.1], 0).is_err());
        let bad = vec![LossEntry::new(0.1, 0.5, 1), LossEntry::new(0.2, 0.4, 1)];
        assert!(LossProfile::new(bad, 10).is_err());
        let zero_mult = vec![LossEntry::new(0.1, 1.0, 0)];
        assert!(LossProfile::new(zero_mult, 10).is_err());
    }

    #[test]
    fn small_mass_errors_are_renormalized() {
        let near = vec![LossEntry::new(0.1, 0.5 + 2e-10, 1), LossEntry::new(0.2, 0.5, 1)];
        let p = LossProfile::new(near, 10).unwrap();
        let total: f64 = p.entries().iter().map(|e| e.prior_mass).sum();
        assert!((total - 1.0).abs() <= 1e-12);

        let rho = PosteriorWeights::new(vec![0.3 + 5e-10, 0.7], &p).unwrap();
        let total: f64 = rho.weights().iter().sum();
        assert!((total - 1.0).abs() <= 1e-12);
        assert!(PosteriorWeights::new(vec![0.3, 0.6], &p).is_err());
        assert!(PosteriorWeights::new(vec![-0.1, 1.1], &p).is_err());
    }

    #[test]
    fn compressed_prior_is_exact() {
        let p = LossProfile::uniform_compressed(&[(0.0f64, 1), (0.1, 2_676_445)], 200).unwrap();
        assert_eq!(p.num_hypotheses(), 2_676_446);
        let total = compensated_sum(p.entries().iter().map(|e| e.prior_mass * e.mult()));
        assert!((total - 1.0).abs() <= 1e-12);
        assert!(p.has_uniform_prior());
    }

    #[test]
    fn bound_config_validation() {
        assert!(BoundConfig::new(0, 0.05).is_err());
        assert!(BoundConfig::new(10, 0.0).is_err());
        assert!(BoundConfig::new(10, 1.0).is_err());
        let cfg = BoundConfig::new(100, 0.05).unwrap();
        assert_abs_diff_eq!(cfg.confidence_term(), 400f64.ln(), epsilon = 1e-14);
        assert!(cfg.check_profile(&two([0.0, 0.1])).is_ok());
        assert!(cfg.check_profile(&LossProfile::uniform(&[0.1], 99).unwrap()).is_err());
    }

    #[test]
    fn f32_profiles_work() {
        let p = LossProfile::<f32>::uniform(&[0.0, 0.5], 100).unwrap();
        let rho = PosteriorWeights::prior(&p);
        assert!((gibbs_loss(&p, &rho).unwrap() - 0.25).abs() < 1e-6);
        assert!((gibbs_variance(&p, &rho).unwrap() - 0.0625).abs() < 1e-6);
    }
}
