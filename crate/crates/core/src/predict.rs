//! Prediction rules over a weighted ensemble: randomized (a fresh draw from
//! ρ per query), ρ-weighted vote, uniform vote, and the best single member.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ensemble::{child_rng, Dataset, HypothesisEnsemble};
use crate::error::{domain, invalid, Error, Result};
use crate::learners::Classifier;
use crate::profile::PosteriorWeights;
use crate::scalar::{compensated_sum, Real};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PredictionMode {
    Randomized { seed: u64 },
    Majority,
    Uniform,
    BestH,
}

fn check_rho<T: Real, C>(ens: &HypothesisEnsemble<T, C>, weights: &[T]) -> Result<()> {
    if weights.len() != ens.hypotheses().len() {
        return Err(Error::Alignment { expected: ens.hypotheses().len(), got: weights.len() });
    }
    Ok(())
}

fn check_point<T: Real, C: Classifier<T>>(ens: &HypothesisEnsemble<T, C>, point: &[T]) -> Result<()> {
    if point.len() != ens.dim() {
        return Err(domain(format!("point has dimension {}, ensemble expects {}", point.len(), ens.dim())));
    }
    Ok(())
}

/// Label with the largest total weight; the lowest label index wins ties.
/// Any positive rescaling of `weights` gives the same answer.
pub fn weighted_vote<T: Real, C: Classifier<T>>(
    ens: &HypothesisEnsemble<T, C>,
    weights: &[T],
    point: &[T],
) -> Result<usize> {
    check_rho(ens, weights)?;
    check_point(ens, point)?;
    let mut mass = vec![T::zero(); ens.classes().len().max(1)];
    for (h, &w) in ens.hypotheses().iter().zip(weights) {
        let label = h.predict(point)?;
        if label >= mass.len() {
            mass.resize(label + 1, T::zero());
        }
        mass[label] += w;
    }
    let mut best = 0;
    for (i, &v) in mass.iter().enumerate() {
        if v > mass[best] {
            best = i;
        }
    }
    Ok(best)
}

pub fn majority_vote<T: Real, C: Classifier<T>>(
    ens: &HypothesisEnsemble<T, C>,
    rho: &PosteriorWeights<T>,
    point: &[T],
) -> Result<usize> {
    weighted_vote(ens, rho.weights(), point)
}

/// Index drawn from `weights` by inverse CDF over hypothesis order.
pub fn sample_index<T: Real, R: Rng + ?Sized>(weights: &[T], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut cum = 0.0;
    let mut last_positive = 0;
    for (i, w) in weights.iter().enumerate() {
        let w = w.as_f64();
        if w > 0.0 {
            last_positive = i;
            cum += w;
            if u < cum {
                return i;
            }
        }
    }
    last_positive
}

pub fn randomized_predict<T: Real, C: Classifier<T>, R: Rng + ?Sized>(
    ens: &HypothesisEnsemble<T, C>,
    rho: &PosteriorWeights<T>,
    point: &[T],
    rng: &mut R,
) -> Result<usize> {
    check_rho(ens, rho.weights())?;
    check_point(ens, point)?;
    ens.hypotheses()[sample_index(rho.weights(), rng)].predict(point)
}

/// Lowest validation loss, lowest index on ties.
pub fn best_h<T: Real, C>(ens: &HypothesisEnsemble<T, C>) -> usize {
    let losses = ens.validation_losses();
    let mut best = 0;
    for (i, &l) in losses.iter().enumerate() {
        if l < losses[best] {
            best = i;
        }
    }
    best
}

fn check_test<T: Real, C: Classifier<T>>(ens: &HypothesisEnsemble<T, C>, test: &Dataset<T>) -> Result<()> {
    if test.d() != ens.dim() {
        return Err(domain(format!("test data has dimension {}, ensemble expects {}", test.d(), ens.dim())));
    }
    if test.classes() != ens.classes() {
        return Err(invalid("test data uses a different class list than the ensemble"));
    }
    Ok(())
}

/// Predictions of `mode` for every test point. Randomized mode draws point
/// `i`'s hypothesis from child stream `i` of the mode's seed.
pub fn predict_all<T: Real, C: Classifier<T>>(
    ens: &HypothesisEnsemble<T, C>,
    rho: &PosteriorWeights<T>,
    mode: PredictionMode,
    test: &Dataset<T>,
) -> Result<Vec<usize>> {
    check_test(ens, test)?;
    check_rho(ens, rho.weights())?;
    let uniform = vec![T::one(); ens.m()];
    let best = best_h(ens);
    test.points()
        .par_iter()
        .enumerate()
        .map(|(i, x)| match mode {
            PredictionMode::Randomized { seed } => randomized_predict(ens, rho, x, &mut child_rng(seed, i as u64)),
            PredictionMode::Majority => majority_vote(ens, rho, x),
            PredictionMode::Uniform => weighted_vote(ens, &uniform, x),
            PredictionMode::BestH => ens.hypotheses()[best].predict(x),
        })
        .collect()
}

/// Mean zero-one loss of `mode` on `test`.
pub fn test_loss<T: Real, C: Classifier<T>>(
    ens: &HypothesisEnsemble<T, C>,
    rho: &PosteriorWeights<T>,
    mode: PredictionMode,
    test: &Dataset<T>,
) -> Result<T> {
    let predicted = predict_all(ens, rho, mode, test)?;
    let errors = predicted.iter().zip(test.labels()).filter(|(p, l)| p != l).count();
    Ok(T::from_count(errors as u64) / T::from_count(test.n() as u64))
}

/// Zero-one test loss of every hypothesis.
pub fn hypothesis_test_losses<T: Real, C: Classifier<T>>(
    ens: &HypothesisEnsemble<T, C>,
    test: &Dataset<T>,
) -> Result<Vec<T>> {
    check_test(ens, test)?;
    let n = T::from_count(test.n() as u64);
    ens.hypotheses()
        .par_iter()
        .map(|h| {
            let mut errors = 0u64;
            for (x, &y) in test.points().iter().zip(test.labels()) {
                if h.predict(x)? != y {
                    errors += 1;
                }
            }
            Ok(T::from_count(errors) / n)
        })
        .collect()
}

/// Exact expectation of the randomized loss: `Σ_h ρ(h)·L̂_test(h)`.
pub fn expected_randomized_loss<T: Real, C: Classifier<T>>(
    ens: &HypothesisEnsemble<T, C>,
    rho: &PosteriorWeights<T>,
    test: &Dataset<T>,
) -> Result<T> {
    check_rho(ens, rho.weights())?;
    let losses = hypothesis_test_losses(ens, test)?;
    Ok(compensated_sum(losses.iter().zip(rho.weights()).map(|(&l, &w)| l * w)))
}

/// Fewest hypotheses whose weights reach `fraction` of the mass, taking the
/// heaviest first.
pub fn mass_count<T: Real>(weights: &[T], fraction: T) -> usize {
    let mut sorted: Vec<T> = weights.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).expect("finite weights"));
    let mut cum = T::zero();
    for (i, w) in sorted.iter().enumerate() {
        cum += *w;
        if cum >= fraction {
            return i + 1;
        }
    }
    sorted.len()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::SubsamplePlan;
    use crate::learners::TrainedClassifier;
    use crate::profile::LossProfile;

    fn constant_ensemble(labels: &[usize], losses: &[f64]) -> HypothesisEnsemble<f64, TrainedClassifier<f64>> {
        let m = labels.len();
        let hyps = labels.iter().map(|&label| TrainedClassifier::Constant { dim: 1, label }).collect();
        let plan = SubsamplePlan { subsets: vec![vec![0]; m], seed: 0, n: 4, r: 1 };
        HypothesisEnsemble::from_parts(hyps, plan, losses.to_vec(), vec!["-1".into(), "1".into()]).unwrap()
    }

    fn rho(w: &[f64]) -> PosteriorWeights<f64> {
        let p = LossProfile::uniform(&vec![0.0; w.len()], 10).unwrap();
        PosteriorWeights::new(w.to_vec(), &p).unwrap()
    }

    #[test]
    fn vote_examples() {
        let ens = constant_ensemble(&[1, 0], &[0.1, 0.1]);
        assert_eq!(majority_vote(&ens, &rho(&[0.6, 0.4]), &[0.0]).unwrap(), 1);
        assert_eq!(majority_vote(&ens, &rho(&[0.5, 0.5]), &[0.0]).unwrap(), 0);
        assert!(majority_vote(&ens, &rho(&[0.2, 0.3, 0.5]), &[0.0]).is_err());
        assert!(majority_vote(&ens, &rho(&[0.5, 0.5]), &[0.0, 1.0]).is_err());
    }

    #[test]
    fn best_h_examples() {
        assert_eq!(best_h(&constant_ensemble(&[0, 0, 0], &[0.3, 0.1, 0.2])), 1);
        assert_eq!(best_h(&constant_ensemble(&[0, 0, 0], &[0.2, 0.2, 0.2])), 0);
    }

    #[test]
    fn point_mass_always_picks_its_hypothesis() {
        let ens = constant_ensemble(&[0, 1, 0], &[0.1; 3]);
        let r = rho(&[0.0, 1.0, 0.0]);
        let mut rng = child_rng(3, 0);
        for _ in 0..100 {
            assert_eq!(randomized_predict(&ens, &r, &[0.0], &mut rng).unwrap(), 1);
        }
    }

    #[test]
    fn mass_count_examples() {
        assert_eq!(mass_count(&[0.0, 1.0, 0.0], 0.5), 1);
        assert_eq!(mass_count(&[0.25; 4], 0.5), 2);
        assert_eq!(mass_count(&[0.1, 0.3, 0.15, 0.45], 0.5), 2);
    }
}
