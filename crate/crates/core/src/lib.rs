//! PAC-Bayes-λ bound minimization over finite hypothesis sets.
//!
//! Generic over `f32`/`f64` through [`Real`]; the `*64` aliases at the crate
//! root fix the scalar to `f64`.

// `!(x > 0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod certify;
pub mod ensemble;
pub mod error;
pub mod learners;
pub mod optimizer;
pub mod predict;
pub mod profile;
pub mod scalar;

pub use bounds::{
    binary_kl, f_derivatives, f_of_lambda, kl_inverse_upper, log_partition, pac_bayes_kl_bound, pac_bayes_lambda_bound,
    pinsker_sqrt_bound, BoundValue, Derivatives,
};
pub use certify::{
    excess_losses, make_nonconvex_example, make_two_minima_example, runtime_conditions, search_certificate,
    thm4_certificate, tuned_certificate, Certificate, CertificateMethod, RuntimeCheck, Verdict,
};
pub use ensemble::{
    build_ensemble, draw_subsamples, ensemble_profile, Dataset, HypothesisEnsemble, Prior, SubsamplePlan,
};
pub use error::{Error, Result};
pub use learners::{jaakkola_grid, Classifier, GammaPolicy, Learner, LearnerKind, LearnerSpec, TrainedClassifier};
pub use optimizer::{alternate_minimize, gibbs_posterior, optimal_lambda, scan_lambda, LambdaScan, OptimizationTrace};
pub use predict::{
    best_h, expected_randomized_loss, majority_vote, mass_count, randomized_predict, test_loss, PredictionMode,
};
pub use profile::{
    gibbs_loss, gibbs_variance, kl_posterior_prior, BoundConfig, LossEntry, LossProfile, PosteriorWeights,
};
pub use scalar::Real;

pub type LossProfile64 = LossProfile<f64>;
pub type PosteriorWeights64 = PosteriorWeights<f64>;
pub type BoundConfig64 = BoundConfig<f64>;
pub type Certificate64 = Certificate<f64>;
pub type OptimizationTrace64 = OptimizationTrace<f64>;
pub type Dataset64 = Dataset<f64>;
pub type Ensemble64 = HypothesisEnsemble<f64, TrainedClassifier<f64>>;
pub type LearnerSpec64 = LearnerSpec<f64>;
