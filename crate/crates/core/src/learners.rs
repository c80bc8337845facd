//! Weak learners: RBF kernel perceptron, decision stump and the constant
//! fallback, plus the plugin traits the ensemble builder works against.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ensemble::Dataset;
use crate::error::{domain, Result};
use crate::scalar::Real;

pub const DEFAULT_EPOCHS: usize = 50;

/// Anything that maps a point to a class index.
pub trait Classifier<T>: Send + Sync {
    fn dim(&self) -> usize;

    /// Class index for `point`; errors on a dimension mismatch.
    fn predict(&self, point: &[T]) -> Result<usize>;
}

/// Training side of the plugin contract. `fit` must be a deterministic
/// function of its arguments; `fallback` is what the ensemble records when
/// `fit` fails on a subset.
pub trait Learner<T>: Sync {
    type Model: Classifier<T>;

    fn fit(&self, points: &[&[T]], labels: &[usize], stream_seed: u64) -> Result<Self::Model>;

    fn fallback(&self, dim: usize, label: usize) -> Self::Model;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LearnerKind {
    KernelPerceptron,
    Stump,
    Constant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GammaPolicy<T> {
    Fixed(T),
    /// One value drawn uniformly per subset from its own stream.
    RandomFromGrid(Vec<T>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnerSpec<T> {
    pub kind: LearnerKind,
    pub gamma: GammaPolicy<T>,
    pub epochs: usize,
}

impl<T: Real> LearnerSpec<T> {
    pub fn kernel_perceptron(gamma: GammaPolicy<T>) -> Result<Self> {
        let spec = Self { kind: LearnerKind::KernelPerceptron, gamma, epochs: DEFAULT_EPOCHS };
        spec.validate()?;
        Ok(spec)
    }

    pub fn stump() -> Self {
        Self { kind: LearnerKind::Stump, gamma: GammaPolicy::Fixed(T::one()), epochs: DEFAULT_EPOCHS }
    }

    pub fn constant() -> Self {
        Self { kind: LearnerKind::Constant, gamma: GammaPolicy::Fixed(T::one()), epochs: DEFAULT_EPOCHS }
    }

    pub fn with_epochs(mut self, epochs: usize) -> Result<Self> {
        self.epochs = epochs;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(domain("epochs must be positive"));
        }
        if self.kind != LearnerKind::KernelPerceptron {
            return Ok(());
        }
        match &self.gamma {
            GammaPolicy::Fixed(g) if !(*g > T::zero() && g.is_finite()) => {
                Err(domain(format!("kernel bandwidth {g} must be positive and finite")))
            }
            GammaPolicy::RandomFromGrid(grid) if grid.is_empty() => Err(domain("empty bandwidth grid")),
            GammaPolicy::RandomFromGrid(grid) if grid.iter().any(|g| !(*g > T::zero() && g.is_finite())) => {
                Err(domain("bandwidth grid values must be positive and finite"))
            }
            _ => Ok(()),
        }
    }

    fn pick_gamma(&self, stream_seed: u64) -> T {
        match &self.gamma {
            GammaPolicy::Fixed(g) => *g,
            GammaPolicy::RandomFromGrid(grid) => {
                let mut rng = ChaCha8Rng::seed_from_u64(stream_seed);
                grid[rng.random_range(0..grid.len())]
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TrainedClassifier<T> {
    /// Class 0 maps to −1 and class 1 to +1; a score of exactly 0 gives class 0.
    KernelPerceptron {
        gamma: T,
        points: Vec<Vec<T>>,
        dual: Vec<T>,
    },
    /// `x[feature] <= threshold` goes left.
    Stump {
        dim: usize,
        feature: usize,
        threshold: T,
        left_label: usize,
        right_label: usize,
    },
    Constant {
        dim: usize,
        label: usize,
    },
}

pub fn rbf_kernel<T: Real>(gamma: T, x: &[T], y: &[T]) -> T {
    let sq: T = x.iter().zip(y).map(|(&a, &b)| (a - b) * (a - b)).sum();
    (-gamma * sq).exp()
}

fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(domain(format!("point has dimension {got}, classifier expects {expected}")));
    }
    Ok(())
}

impl<T: Real> Classifier<T> for TrainedClassifier<T> {
    fn dim(&self) -> usize {
        match self {
            Self::KernelPerceptron { points, .. } => points[0].len(),
            Self::Stump { dim, .. } | Self::Constant { dim, .. } => *dim,
        }
    }

    fn predict(&self, point: &[T]) -> Result<usize> {
        check_dim(self.dim(), point.len())?;
        Ok(match self {
            Self::KernelPerceptron { gamma, points, dual } => {
                let score: T = points.iter().zip(dual).map(|(p, &c)| c * rbf_kernel(*gamma, p, point)).sum();
                usize::from(score > T::zero())
            }
            Self::Stump { feature, threshold, left_label, right_label, .. } => {
                if point[*feature] <= *threshold {
                    *left_label
                } else {
                    *right_label
                }
            }
            Self::Constant { label, .. } => *label,
        })
    }
}

impl<T: Real> Learner<T> for LearnerSpec<T> {
    type Model = TrainedClassifier<T>;

    fn fit(&self, points: &[&[T]], labels: &[usize], stream_seed: u64) -> Result<TrainedClassifier<T>> {
        fit(self, points, labels, stream_seed)
    }

    fn fallback(&self, dim: usize, label: usize) -> TrainedClassifier<T> {
        TrainedClassifier::Constant { dim, label }
    }
}

/// Majority label, lowest index on ties.
pub fn majority_label(labels: &[usize]) -> usize {
    let classes = labels.iter().max().map_or(1, |&l| l + 1);
    let mut counts = vec![0usize; classes];
    for &l in labels {
        counts[l] += 1;
    }
    argmax_first(&counts)
}

fn argmax_first(counts: &[usize]) -> usize {
    let mut best = 0;
    for (i, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = i;
        }
    }
    best
}

pub fn fit<T: Real>(
    spec: &LearnerSpec<T>,
    points: &[&[T]],
    labels: &[usize],
    stream_seed: u64,
) -> Result<TrainedClassifier<T>> {
    spec.validate()?;
    if points.is_empty() {
        return Err(domain("cannot fit on an empty training set"));
    }
    if points.len() != labels.len() {
        return Err(crate::error::Error::Alignment { expected: points.len(), got: labels.len() });
    }
    let dim = points[0].len();
    if let Some(bad) = points.iter().position(|p| p.len() != dim) {
        return Err(domain(format!("training point {bad} has dimension {}, expected {dim}", points[bad].len())));
    }
    let first = labels[0];
    if labels.iter().all(|&l| l == first) {
        return Ok(TrainedClassifier::Constant { dim, label: first });
    }
    match spec.kind {
        LearnerKind::Constant => Ok(TrainedClassifier::Constant { dim, label: majority_label(labels) }),
        LearnerKind::Stump => Ok(fit_stump(points, labels)),
        LearnerKind::KernelPerceptron => {
            if let Some(&l) = labels.iter().find(|&&l| l >= 2) {
                return Err(domain(format!("kernel perceptron is binary; got class index {l}")));
            }
            Ok(fit_perceptron(spec.pick_gamma(stream_seed), spec.epochs, points, labels))
        }
    }
}

fn fit_perceptron<T: Real>(gamma: T, epochs: usize, points: &[&[T]], labels: &[usize]) -> TrainedClassifier<T> {
    let r = points.len();
    let y: Vec<T> = labels.iter().map(|&l| if l == 1 { T::one() } else { -T::one() }).collect();
    let mut gram = vec![T::zero(); r * r];
    for i in 0..r {
        gram[i * r + i] = T::one();
        for j in 0..i {
            let k = rbf_kernel(gamma, points[i], points[j]);
            gram[i * r + j] = k;
            gram[j * r + i] = k;
        }
    }
    // dual[i] = α_i y_i
    let mut dual = vec![T::zero(); r];
    for _ in 0..epochs {
        let mut mistakes = 0;
        for i in 0..r {
            let row = &gram[i * r..(i + 1) * r];
            let score: T = row.iter().zip(&dual).map(|(&k, &c)| k * c).sum();
            let predicted = if score > T::zero() { T::one() } else { -T::one() };
            if predicted != y[i] {
                dual[i] += y[i];
                mistakes += 1;
            }
        }
        if mistakes == 0 {
            break;
        }
    }
    TrainedClassifier::KernelPerceptron { gamma, points: points.iter().map(|p| p.to_vec()).collect(), dual }
}

#[allow(clippy::needless_range_loop)]
fn fit_stump<T: Real>(points: &[&[T]], labels: &[usize]) -> TrainedClassifier<T> {
    let dim = points[0].len();
    let classes = labels.iter().max().map_or(1, |&l| l + 1);
    let total = {
        let mut c = vec![0usize; classes];
        for &l in labels {
            c[l] += 1;
        }
        c
    };
    let majority = argmax_first(&total);
    let mut best_err = labels.len() - total[majority];
    let mut best = TrainedClassifier::Constant { dim, label: majority };
    let mut order: Vec<usize> = (0..points.len()).collect();
    for feature in 0..dim {
        order.sort_by(|&a, &b| points[a][feature].partial_cmp(&points[b][feature]).expect("finite features"));
        let mut left = vec![0usize; classes];
        for k in 0..order.len() - 1 {
            left[labels[order[k]]] += 1;
            let (v, next) = (points[order[k]][feature], points[order[k + 1]][feature]);
            if v == next {
                continue;
            }
            let right: Vec<usize> = total.iter().zip(&left).map(|(t, l)| t - l).collect();
            let (ll, rl) = (argmax_first(&left), argmax_first(&right));
            let err = (k + 1 - left[ll]) + (labels.len() - k - 1 - right[rl]);
            if err < best_err {
                best_err = err;
                let threshold = v + (next - v) / T::lit(2.0);
                best = TrainedClassifier::Stump { dim, feature, threshold, left_label: ll, right_label: rl };
            }
        }
    }
    best
}

/// `{γ_J·10^k : k ∈ {−4, −2, 0, 2, 4}}` with `γ_J = 1/(2·median(G)²)`, where
/// `G(X_i)` is the distance from `X_i` to its nearest opposite-label point.
/// The median of an even count averages the two middle values.
pub fn jaakkola_grid<T: Real>(data: &Dataset<T>) -> Result<Vec<T>> {
    let labels = data.labels();
    if labels.iter().all(|&l| l == labels[0]) {
        return Err(domain("bandwidth heuristic needs at least two classes in the data"));
    }
    let points = data.points();
    let mut g: Vec<T> = (0..points.len())
        .into_par_iter()
        .map(|i| {
            let mut best = T::infinity();
            for j in 0..points.len() {
                if labels[j] != labels[i] {
                    let sq: T = points[i].iter().zip(&points[j]).map(|(&a, &b)| (a - b) * (a - b)).sum();
                    best = best.min(sq);
                }
            }
            best.sqrt()
        })
        .collect();
    g.sort_by(|a, b| a.partial_cmp(b).expect("finite distances"));
    let mid = g.len() / 2;
    let median = if g.len() % 2 == 1 { g[mid] } else { (g[mid - 1] + g[mid]) / T::lit(2.0) };
    if !(median > T::zero()) {
        return Err(domain(
            "median distance to the opposite class is 0 (duplicated points with conflicting labels); \
             deduplicate the data or pass a fixed bandwidth",
        ));
    }
    let gamma_j = T::one() / (T::lit(2.0) * median * median);
    Ok([-4, -2, 0, 2, 4].iter().map(|&k| gamma_j * T::lit(10.0).powi(k)).collect())
}
