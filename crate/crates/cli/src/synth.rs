//! Synthetic tasks with known generating distributions.

use pbmin_core::{Dataset64, TrainedClassifier};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

fn binary_classes() -> Vec<String> {
    vec!["0".into(), "1".into()]
}

/// `x ~ U[0,1]^d`, clean label `1[x₀ > 1/2]`, flipped with probability `noise`.
pub fn noisy_threshold<R: Rng + ?Sized>(n: usize, d: usize, noise: f64, rng: &mut R) -> Dataset64 {
    let mut points = Vec::with_capacity(n);
    let mut names = Vec::with_capacity(n);
    for _ in 0..n {
        let x: Vec<f64> = (0..d).map(|_| rng.random()).collect();
        let clean = x[0] > 0.5;
        let flip = rng.random::<f64>() < noise;
        names.push(if clean != flip { "1" } else { "0" });
        points.push(x);
    }
    Dataset64::with_classes(points, &names, &binary_classes()).expect("well-formed synthetic data")
}

/// Exact zero-one risk under [`noisy_threshold`]'s distribution, for stumps
/// and constants.
pub fn threshold_true_risk(clf: &TrainedClassifier<f64>, noise: f64) -> Option<f64> {
    // q = P(prediction differs from the clean label)
    let q = match *clf {
        TrainedClassifier::Constant { .. } => 0.5,
        TrainedClassifier::Stump { feature: 0, threshold, left_label, right_label, .. } => {
            let t = threshold.clamp(0.0, 1.0);
            let left = if left_label == 0 { (t - 0.5).max(0.0) } else { t.min(0.5) };
            let right = if right_label == 0 { 1.0 - t.max(0.5) } else { (0.5 - t).max(0.0) };
            left + right
        }
        TrainedClassifier::Stump { .. } => 0.5,
        TrainedClassifier::KernelPerceptron { .. } => return None,
    };
    Some(noise + (1.0 - 2.0 * noise) * q)
}

/// Balanced classes with `x ~ N(±(s/√d)·1, I_d)`, so the means sit `2s` apart.
pub fn two_gaussian<R: Rng + ?Sized>(n: usize, d: usize, separation: f64, rng: &mut R) -> Dataset64 {
    let shift = separation / (d as f64).sqrt();
    let mut points = Vec::with_capacity(n);
    let mut names = Vec::with_capacity(n);
    for _ in 0..n {
        let positive = rng.random::<bool>();
        let mean = if positive { shift } else { -shift };
        points.push(
            (0..d)
                .map(|_| {
                    let z: f64 = StandardNormal.sample(rng);
                    mean + z
                })
                .collect::<Vec<f64>>(),
        );
        names.push(if positive { "1" } else { "0" });
    }
    Dataset64::with_classes(points, &names, &binary_classes()).expect("well-formed synthetic data")
}

#[cfg(test)]
mod tests {
    use super::*;
    use pbmin_core::ensemble::child_rng;
    use pbmin_core::Classifier;

    #[test]
    fn stump_risk_matches_monte_carlo() {
        let noise = 0.1;
        let mut rng = child_rng(5, 0);
        let probe = noisy_threshold(200_000, 2, noise, &mut rng);
        for (t, ll, rl) in [(0.5, 0, 1), (0.3, 0, 1), (0.8, 1, 0), (0.6, 1, 1)] {
            let clf = TrainedClassifier::Stump { dim: 2, feature: 0, threshold: t, left_label: ll, right_label: rl };
            let exact = threshold_true_risk(&clf, noise).unwrap();
            let errors =
                probe.points().iter().zip(probe.labels()).filter(|(x, &y)| clf.predict(x).unwrap() != y).count();
            let mc = errors as f64 / probe.n() as f64;
            let sigma = (exact * (1.0 - exact) / probe.n() as f64).sqrt();
            assert!((mc - exact).abs() < 4.0 * sigma, "t={t}: {mc} vs {exact}");
        }
        assert_eq!(threshold_true_risk(&TrainedClassifier::Constant { dim: 2, label: 1 }, noise), Some(0.5));
    }
}
