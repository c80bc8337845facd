//! Hypothesis spaces built by training weak learners on random r-subsets and
//! scoring each on the points it did not see.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, invalid, Error, Result};
use crate::learners::{majority_label, Classifier, Learner};
use crate::profile::{BoundConfig, LossEntry, LossProfile};
use crate::scalar::Real;

/// Deterministic child stream `stream` of `seed`.
pub fn child_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

// Subset draws and learner seeds use disjoint stream families.
const SUBSET_STREAM: u64 = 0;
const LEARNER_STREAM: u64 = 1;

fn hypothesis_stream(h: usize, family: u64) -> u64 {
    ((h as u64) << 1) | family
}

/// Canonical text for a label: integers lose signs and decimals that carry no
/// information (`"+1"` and `"1.0"` become `"1"`), anything else is trimmed.
pub fn canonical_label(raw: &str) -> String {
    let t = raw.trim();
    match t.parse::<f64>() {
        Ok(v) if v.is_finite() && v.fract() == 0.0 && v.abs() < 1e15 => format!("{}", v as i64),
        _ => t.to_string(),
    }
}

/// Sorted class list: numeric order if every name parses as a number,
/// lexicographic otherwise.
pub fn sort_classes(names: &mut Vec<String>) {
    names.sort();
    names.dedup();
    let numeric: Option<Vec<f64>> = names.iter().map(|n| n.parse::<f64>().ok()).collect();
    if let Some(values) = numeric {
        let mut paired: Vec<(f64, String)> = values.into_iter().zip(names.drain(..)).collect();
        paired.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite labels"));
        names.extend(paired.into_iter().map(|(_, n)| n));
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset<T> {
    points: Vec<Vec<T>>,
    labels: Vec<usize>,
    classes: Vec<String>,
}

impl<T: Real> Dataset<T> {
    /// `labels[i]` indexes into `classes`.
    pub fn new(points: Vec<Vec<T>>, labels: Vec<usize>, classes: Vec<String>) -> Result<Self> {
        if points.is_empty() {
            return Err(invalid("dataset is empty"));
        }
        if points.len() != labels.len() {
            return Err(Error::Alignment { expected: points.len(), got: labels.len() });
        }
        let d = points[0].len();
        for (i, p) in points.iter().enumerate() {
            if p.len() != d {
                return Err(invalid(format!("point {i} has {} features, expected {d}", p.len())));
            }
            if let Some(v) = p.iter().find(|v| !v.is_finite()) {
                return Err(invalid(format!("point {i} has non-finite feature {v}")));
            }
        }
        if let Some(&l) = labels.iter().find(|&&l| l >= classes.len()) {
            return Err(invalid(format!("label index {l} outside {} classes", classes.len())));
        }
        Ok(Self { points, labels, classes })
    }

    /// Builds the class list from the label names themselves.
    pub fn from_named<S: AsRef<str>>(points: Vec<Vec<T>>, names: &[S]) -> Result<Self> {
        let canon: Vec<String> = names.iter().map(|n| canonical_label(n.as_ref())).collect();
        let mut classes = canon.clone();
        sort_classes(&mut classes);
        Self::with_classes(points, &canon, &classes)
    }

    /// Maps label names onto a fixed class list; unknown names are rejected.
    pub fn with_classes<S: AsRef<str>>(points: Vec<Vec<T>>, names: &[S], classes: &[String]) -> Result<Self> {
        let labels = names
            .iter()
            .map(|n| {
                let c = canonical_label(n.as_ref());
                classes.iter().position(|k| *k == c).ok_or_else(|| invalid(format!("unknown label {c:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(points, labels, classes.to_vec())
    }

    pub fn n(&self) -> usize {
        self.points.len()
    }

    pub fn d(&self) -> usize {
        self.points[0].len()
    }

    pub fn points(&self) -> &[Vec<T>] {
        &self.points
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn label_name(&self, i: usize) -> &str {
        &self.classes[self.labels[i]]
    }

    pub fn num_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn select(&self, indices: &[usize]) -> Self {
        Self {
            points: indices.iter().map(|&i| self.points[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            classes: self.classes.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubsamplePlan {
    pub subsets: Vec<Vec<usize>>,
    pub seed: u64,
    pub n: usize,
    pub r: usize,
}

impl SubsamplePlan {
    pub fn m(&self) -> usize {
        self.subsets.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.r == 0 || self.r >= self.n {
            return Err(domain(format!("subset size r = {} must satisfy 1 <= r < n = {}", self.r, self.n)));
        }
        if self.subsets.is_empty() {
            return Err(invalid("plan has no subsets"));
        }
        for (h, s) in self.subsets.iter().enumerate() {
            if s.len() != self.r || s.iter().any(|&i| i >= self.n) || s.windows(2).any(|w| w[0] >= w[1]) {
                return Err(invalid(format!("subset {h} is not {} sorted distinct indices below {}", self.r, self.n)));
            }
        }
        Ok(())
    }

    /// Indices outside subset `h`, ascending.
    pub fn complement(&self, h: usize) -> Vec<usize> {
        let mut inside = vec![false; self.n];
        for &i in &self.subsets[h] {
            inside[i] = true;
        }
        (0..self.n).filter(|&i| !inside[i]).collect()
    }

    /// Seed handed to the learner for hypothesis `h`.
    pub fn learner_seed(&self, h: usize) -> u64 {
        use rand::RngCore;
        child_rng(self.seed, hypothesis_stream(h, LEARNER_STREAM)).next_u64()
    }
}

/// `m` subsets of `r` distinct indices from `0..n`, subset `h` drawn from its
/// own child stream of `seed`, each stored sorted.
pub fn draw_subsamples(n: usize, m: usize, r: usize, seed: u64) -> Result<SubsamplePlan> {
    if r == 0 || r >= n {
        return Err(domain(format!(
            "subset size r = {r} must satisfy 1 <= r < n = {n}; n - r points are needed for validation"
        )));
    }
    if m == 0 {
        return Err(domain("m must be at least 1"));
    }
    let subsets = (0..m)
        .into_par_iter()
        .map(|h| {
            let mut rng = child_rng(seed, hypothesis_stream(h, SUBSET_STREAM));
            let mut s = sample(&mut rng, n, r).into_vec();
            s.sort_unstable();
            s
        })
        .collect();
    Ok(SubsamplePlan { subsets, seed, n, r })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisEnsemble<T, C> {
    hypotheses: Vec<C>,
    plan: SubsamplePlan,
    validation_losses: Vec<T>,
    classes: Vec<String>,
    dim: usize,
}

impl<T: Real, C: Classifier<T>> HypothesisEnsemble<T, C> {
    /// Reassembles a stored ensemble.
    pub fn from_parts(
        hypotheses: Vec<C>,
        plan: SubsamplePlan,
        validation_losses: Vec<T>,
        classes: Vec<String>,
    ) -> Result<Self> {
        plan.validate()?;
        if hypotheses.len() != plan.m() {
            return Err(Error::Alignment { expected: plan.m(), got: hypotheses.len() });
        }
        if validation_losses.len() != plan.m() {
            return Err(Error::Alignment { expected: plan.m(), got: validation_losses.len() });
        }
        if let Some(l) = validation_losses.iter().find(|l| !(**l >= T::zero() && **l <= T::one())) {
            return Err(invalid(format!("validation loss {l} outside [0, 1]")));
        }
        let dim = hypotheses[0].dim();
        if hypotheses.iter().any(|h| h.dim() != dim) {
            return Err(invalid("hypotheses disagree on input dimension"));
        }
        Ok(Self { hypotheses, plan, validation_losses, classes, dim })
    }
}

impl<T, C> HypothesisEnsemble<T, C> {
    pub fn hypotheses(&self) -> &[C] {
        &self.hypotheses
    }

    pub fn plan(&self) -> &SubsamplePlan {
        &self.plan
    }

    pub fn validation_losses(&self) -> &[T] {
        &self.validation_losses
    }

    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn m(&self) -> usize {
        self.hypotheses.len()
    }

    pub fn n(&self) -> usize {
        self.plan.n
    }

    pub fn r(&self) -> usize {
        self.plan.r
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
}

/// Trains one hypothesis per subset (in parallel) and records its zero-one
/// loss on the complement. A failed fit records the learner's fallback for
/// the subset's majority label.
pub fn build_ensemble<T: Real, L: Learner<T>>(
    data: &Dataset<T>,
    plan: &SubsamplePlan,
    learner: &L,
) -> Result<HypothesisEnsemble<T, L::Model>> {
    plan.validate()?;
    if plan.n != data.n() {
        return Err(invalid(format!("plan is for n = {}, dataset has {} points", plan.n, data.n())));
    }
    let points = data.points();
    let labels = data.labels();
    let denom = T::from_count((plan.n - plan.r) as u64);
    let trained: Vec<(L::Model, T)> = (0..plan.m())
        .into_par_iter()
        .map(|h| {
            let subset = &plan.subsets[h];
            let xs: Vec<&[T]> = subset.iter().map(|&i| points[i].as_slice()).collect();
            let ys: Vec<usize> = subset.iter().map(|&i| labels[i]).collect();
            let model = learner
                .fit(&xs, &ys, plan.learner_seed(h))
                .unwrap_or_else(|_| learner.fallback(data.d(), majority_label(&ys)));
            let mut errors = 0u64;
            for i in plan.complement(h) {
                if model.predict(&points[i])? != labels[i] {
                    errors += 1;
                }
            }
            Ok((model, T::from_count(errors) / denom))
        })
        .collect::<Result<_>>()?;
    let (hypotheses, validation_losses) = trained.into_iter().unzip();
    HypothesisEnsemble::from_parts(hypotheses, plan.clone(), validation_losses, data.classes().to_vec())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Prior<T> {
    Uniform,
    Explicit(Vec<T>),
}

/// Loss profile over validation losses with `n_eff = n − r`, one entry per
/// hypothesis in ensemble order, and the matching bound configuration.
pub fn ensemble_profile<T: Real, C: Classifier<T>>(
    ens: &HypothesisEnsemble<T, C>,
    prior: &Prior<T>,
    delta: T,
) -> Result<(LossProfile<T>, BoundConfig<T>)> {
    let n_eff = ens.n() - ens.r();
    let m = ens.m();
    let masses = match prior {
        Prior::Uniform => vec![T::one() / T::from_count(m as u64); m],
        Prior::Explicit(w) => {
            if w.len() != m {
                return Err(Error::Alignment { expected: m, got: w.len() });
            }
            w.clone()
        }
    };
    let entries = ens.validation_losses().iter().zip(masses).map(|(&l, p)| LossEntry::new(l, p, 1)).collect();
    Ok((LossProfile::new(entries, n_eff)?, BoundConfig::new(n_eff, delta)?))
}
