#![allow(dead_code)]

use pbmin_core::{BoundConfig64, LossProfile64};
use rand::Rng;

/// Uniform-prior profile with `m` losses in `[0, 1)`.
pub fn random_profile<R: Rng>(rng: &mut R, max_m: usize, max_n: usize) -> (LossProfile64, BoundConfig64) {
    let m = rng.random_range(1..=max_m);
    let n = rng.random_range(10..=max_n);
    let losses: Vec<f64> = (0..m).map(|_| rng.random::<f64>()).collect();
    let delta = rng.random_range(0.01..0.5);
    (LossProfile64::uniform(&losses, n).unwrap(), BoundConfig64::new(n, delta).unwrap())
}

pub fn random_weights<R: Rng>(rng: &mut R, m: usize) -> Vec<f64> {
    (0..m).map(|_| rng.random::<f64>() + 1e-3).collect()
}
