//! Command-line surface. Every command writes `key=value` lines or a CSV
//! table to `out`, so tests can drive it in-process.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use pbmin_core::certify::{default_condition_grid, MIN_CERTIFIABLE_N};
use pbmin_core::ensemble::child_rng;
use pbmin_core::predict::predict_all;
use pbmin_core::{
    alternate_minimize, gibbs_loss, gibbs_posterior, kl_posterior_prior, make_nonconvex_example,
    make_two_minima_example, pac_bayes_kl_bound, pac_bayes_lambda_bound, pinsker_sqrt_bound, runtime_conditions,
    scan_lambda, search_certificate, thm4_certificate, tuned_certificate, BoundConfig64, Certificate64, LossProfile64,
    PosteriorWeights64, PredictionMode,
};
use rand::RngCore;

use crate::error::{CliError, Result};
use crate::experiment::{self, HeatmapConfig, Spacing, ValidityConfig};
use crate::io::{parse_dataset, parse_dataset_with, parse_losses, Format, ReadOptions};
use crate::model::ModelFile;
use crate::pipeline::{auto_r, fit_pipeline, LearnerChoice, PipelineConfig};
use crate::synth::two_gaussian;

#[derive(Debug, Parser)]
#[command(name = "pbmin", version, about = "PAC-Bayes-λ bound minimization over finite hypothesis sets")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a subsample ensemble and minimize its bound.
    Train(TrainArgs),
    /// Predict with a trained model and report the test loss.
    Predict(PredictArgs),
    /// Evaluate or minimize the bound on a losses file.
    Bound(BoundArgs),
    /// Tabulate F(λ) on a grid and count its local minima.
    Scan(ScanArgs),
    /// Check the quasiconvexity certificates.
    Certify(CertifyArgs),
    /// Experiment harnesses.
    #[command(subcommand)]
    Experiment(ExperimentCommand),
}

#[derive(Debug, Args)]
pub struct DataArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Inferred from the extension when omitted (.csv or svmlight).
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Args)]
pub struct LearnerArgs {
    #[arg(long, value_enum, default_value = "kernel-perceptron")]
    pub learner: LearnerChoice,
    /// Fixed RBF bandwidth; by default drawn per subset from the bandwidth grid.
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long, default_value_t = pbmin_core::learners::DEFAULT_EPOCHS)]
    pub epochs: usize,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub m: usize,
    /// Subset size, or "auto" (d + 1 when d >= 5, else round(√n)).
    #[arg(long, default_value = "auto")]
    pub r: String,
    #[arg(long, default_value_t = 0.05)]
    pub delta: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub learner: LearnerArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Randomized,
    Majority,
    Uniform,
    BestH,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, value_enum, default_value = "majority")]
    pub mode: ModeArg,
    /// Seed for randomized mode.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Write per-point labels here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Example {
    TwoMinima,
    Nonconvex,
}

#[derive(Debug, Args)]
pub struct ProfileArgs {
    /// Losses file: loss[,multiplicity[,prior_mass]] per line.
    #[arg(long, conflicts_with = "example", required_unless_present = "example")]
    pub losses: Option<PathBuf>,
    /// Built-in example instance (carries its own n and δ).
    #[arg(long, value_enum)]
    pub example: Option<Example>,
    #[arg(long, required_unless_present = "example")]
    pub n_eval: Option<usize>,
    #[arg(long, default_value_t = 0.05)]
    pub delta: f64,
}

impl ProfileArgs {
    fn load(&self) -> Result<(LossProfile64, BoundConfig64)> {
        match (self.example, &self.losses, self.n_eval) {
            (Some(Example::TwoMinima), ..) => Ok(make_two_minima_example()),
            (Some(Example::Nonconvex), ..) => Ok(make_nonconvex_example()),
            (None, Some(path), Some(n)) => {
                let cfg = BoundConfig64::new(n, self.delta)?;
                Ok((parse_losses(path, n)?, cfg))
            }
            _ => Err(CliError::Usage("give --losses with --n-eval, or --example".into())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PosteriorArg {
    Prior,
    Gibbs,
}

#[derive(Debug, Args)]
pub struct BoundArgs {
    #[command(flatten)]
    pub profile: ProfileArgs,
    /// Evaluate at this λ instead of minimizing.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Posterior used with --lambda.
    #[arg(long, value_enum, default_value = "prior")]
    pub posterior: PosteriorArg,
}

#[derive(Debug, Args)]
pub struct ScanArgs {
    #[command(flatten)]
    pub profile: ProfileArgs,
    #[arg(long, default_value_t = 1000)]
    pub grid: usize,
    #[arg(long, default_value_t = 1.0)]
    pub lambda_max: f64,
    /// Write the table here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CertifyMethod {
    Base,
    Tuned,
    Search,
}

#[derive(Debug, Args)]
pub struct CertifyArgs {
    #[command(flatten)]
    pub profile: ProfileArgs,
    #[arg(long, value_enum, default_value = "search")]
    pub method: CertifyMethod,
    #[arg(long, default_value_t = 1.0 / 3.0)]
    pub alpha: f64,
    #[arg(long, default_value_t = 1.0 / 3.0)]
    pub beta: f64,
    #[arg(long)]
    pub refine_b: bool,
    #[arg(long, default_value_t = 21)]
    pub grid_steps: usize,
    /// Points in the runtime-condition λ grid.
    #[arg(long, default_value_t = 200)]
    pub runtime_grid: usize,
}

#[derive(Debug, Subcommand)]
pub enum ExperimentCommand {
    /// Test loss over a grid of (m, r).
    Heatmap(HeatmapArgs),
    /// Monte Carlo coverage check on a synthetic task.
    Validity(ValidityArgs),
    /// Randomized vs vote vs best single hypothesis.
    PredictorCompare(CompareArgs),
}

#[derive(Debug, Args)]
pub struct HeatmapArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub test: PathBuf,
    #[arg(long, default_value_t = 20)]
    pub m_count: usize,
    #[arg(long, default_value_t = 20)]
    pub r_count: usize,
    #[arg(long, value_enum, default_value = "linear")]
    pub spacing: Spacing,
    #[arg(long)]
    pub r_max: Option<usize>,
    #[arg(long, default_value_t = 0.05)]
    pub delta: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub learner: LearnerArgs,
    /// Subtracted from every cell.
    #[arg(long)]
    pub baseline: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ValidityArgs {
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,
    #[arg(long, default_value_t = 500)]
    pub n: usize,
    #[arg(long, default_value_t = 2)]
    pub d: usize,
    #[arg(long, default_value_t = 20)]
    pub m: usize,
    #[arg(long, default_value_t = 10)]
    pub r: usize,
    #[arg(long, default_value_t = 0.05)]
    pub delta: f64,
    #[arg(long, default_value_t = 0.1)]
    pub noise: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Per-trial table.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Training data; omit to use the synthetic two-Gaussian task.
    #[arg(long, requires = "test")]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub test: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Synthetic task size (train and test each).
    #[arg(long, default_value_t = 2000)]
    pub n: usize,
    #[arg(long, default_value_t = 10)]
    pub d: usize,
    /// Half the distance between the synthetic class means.
    #[arg(long, default_value_t = 1.0)]
    pub separation: f64,
    #[arg(long, default_value_t = 200)]
    pub m: usize,
    #[arg(long, default_value = "auto")]
    pub r: String,
    #[arg(long, default_value_t = 0.05)]
    pub delta: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub learner: LearnerArgs,
}

fn format_of(path: &Path, explicit: Option<Format>) -> Format {
    explicit.unwrap_or_else(|| Format::infer(path))
}

fn parse_r(raw: &str, n: usize, d: usize) -> Result<usize> {
    if raw == "auto" {
        return Ok(auto_r(n, d));
    }
    raw.parse().map_err(|_| CliError::Usage(format!("--r must be an integer or \"auto\", got {raw:?}")))
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn emit(out: &mut dyn Write, text: &str) -> Result<()> {
    out.write_all(text.as_bytes()).map_err(|e| CliError::io("<stdout>", e))
}

pub fn run(cli: Cli, out: &mut dyn Write) -> Result<()> {
    match cli.command {
        Command::Train(a) => train(a, out),
        Command::Predict(a) => predict(a, out),
        Command::Bound(a) => bound(a, out),
        Command::Scan(a) => scan(a, out),
        Command::Certify(a) => certify(a, out),
        Command::Experiment(ExperimentCommand::Heatmap(a)) => heatmap(a, out),
        Command::Experiment(ExperimentCommand::Validity(a)) => validity(a, out),
        Command::Experiment(ExperimentCommand::PredictorCompare(a)) => compare(a, out),
    }
}

fn train(a: TrainArgs, out: &mut dyn Write) -> Result<()> {
    let data = parse_dataset(&a.data.data, format_of(&a.data.data, a.data.format))?;
    let pc = PipelineConfig {
        m: a.m,
        r: parse_r(&a.r, data.n(), data.d())?,
        delta: a.delta,
        seed: a.seed,
        learner: a.learner.learner,
        gamma: a.learner.gamma,
        epochs: a.learner.epochs,
    };
    let fitted = fit_pipeline(&data, &pc)?;
    let model = ModelFile::from_fitted(&fitted);
    model.save(&a.out)?;
    let s = &model.summary;
    emit(
        out,
        &format!(
            "n={}\nr={}\nm={}\ndelta={}\nlambda={}\nbound={}\npb_kl_bound={}\niterations={}\nconverged={}\n",
            s.n, s.r, s.m, s.delta, s.lambda, s.bound, s.pb_kl_bound, s.iterations, s.converged
        ),
    )
}

fn predict(a: PredictArgs, out: &mut dyn Write) -> Result<()> {
    let model = ModelFile::load(&a.model)?;
    let (ens, rho) = model.ensemble()?;
    let opts = ReadOptions { dim: Some(model.dim), classes: Some(&model.classes) };
    let data = parse_dataset_with(&a.data.data, format_of(&a.data.data, a.data.format), &opts)?;
    let mode = match a.mode {
        ModeArg::Randomized => PredictionMode::Randomized { seed: a.seed },
        ModeArg::Majority => PredictionMode::Majority,
        ModeArg::Uniform => PredictionMode::Uniform,
        ModeArg::BestH => PredictionMode::BestH,
    };
    let predicted = predict_all(&ens, &rho, mode, &data)?;
    let errors = predicted.iter().zip(data.labels()).filter(|(p, l)| p != l).count();
    let labels: String = predicted.iter().map(|&p| format!("{}\n", model.classes[p])).collect();
    match &a.out {
        Some(path) => write_file(path, &labels)?,
        None => emit(out, &labels)?,
    }
    emit(out, &format!("test_loss={}\n", errors as f64 / data.n() as f64))
}

fn bound(a: BoundArgs, out: &mut dyn Write) -> Result<()> {
    let (profile, cfg) = a.profile.load()?;
    let (lambda, rho, extra) = match a.lambda {
        Some(l) => {
            let rho = match a.posterior {
                PosteriorArg::Prior => PosteriorWeights64::prior(&profile),
                PosteriorArg::Gibbs => gibbs_posterior(&profile, l)?,
            };
            (l, rho, String::new())
        }
        None => {
            let trace = alternate_minimize(&profile, &cfg)?;
            let extra = format!("iterations={}\nconverged={}\n", trace.iterations.len(), trace.converged);
            (trace.final_lambda(), trace.final_posterior, extra)
        }
    };
    let value = pac_bayes_lambda_bound(&profile, &rho, lambda, &cfg)?;
    emit(
        out,
        &format!(
            "lambda={lambda}\nbound={}\ngibbs_loss={}\nkl={}\npb_kl_bound={}\npinsker_bound={}\n{extra}",
            value.value,
            gibbs_loss(&profile, &rho)?,
            kl_posterior_prior(&profile, &rho)?,
            pac_bayes_kl_bound(&profile, &rho, &cfg)?,
            pinsker_sqrt_bound(&profile, &rho, &cfg)?,
        ),
    )
}

fn scan(a: ScanArgs, out: &mut dyn Write) -> Result<()> {
    let (profile, cfg) = a.profile.load()?;
    let s = scan_lambda(&profile, &cfg, a.grid, a.lambda_max)?;
    let mut table = String::from("lambda,F\n");
    for (l, v) in s.grid.iter().zip(&s.values) {
        table.push_str(&format!("{l},{v}\n"));
    }
    match &a.out {
        Some(path) => write_file(path, &table)?,
        None => emit(out, &table)?,
    }
    let minima: Vec<String> = s.local_minima.iter().map(|&i| s.grid[i].to_string()).collect();
    emit(out, &format!("local_minima={}\nminima_lambda={}\n", s.local_minima.len(), minima.join(",")))
}

fn certificate_lines(c: &Certificate64) -> String {
    let w = &c.witnesses;
    let verdict = if c.is_certified() { "certified" } else { "not_certified" };
    let method = serde_json::to_value(c.method).expect("enum serializes");
    format!(
        "verdict={verdict}\nmethod={}\na={}\nb={}\nK={}\nmediocre_count={}\nalpha={}\nbeta={}\nb_vacuous={}\n",
        method.as_str().unwrap_or_default(),
        w.a,
        w.b,
        w.k,
        w.mediocre_count,
        w.alpha,
        w.beta,
        w.b_vacuous
    )
}

fn certify(a: CertifyArgs, out: &mut dyn Write) -> Result<()> {
    let (profile, cfg) = a.profile.load()?;
    let grid = default_condition_grid(&cfg, a.runtime_grid.max(2));
    let runtime = runtime_conditions(&profile, &cfg, &grid)?;
    let counting = if profile.has_uniform_prior() && cfg.n_eff() >= MIN_CERTIFIABLE_N {
        Some(match a.method {
            CertifyMethod::Base => thm4_certificate(&profile, &cfg)?,
            CertifyMethod::Tuned => tuned_certificate(&profile, &cfg, a.alpha, a.beta, a.refine_b)?,
            CertifyMethod::Search => search_certificate(&profile, &cfg, a.grid_steps)?,
        })
    } else {
        None
    };
    let mut text = match &counting {
        Some(c) => certificate_lines(c),
        None => {
            let verdict = if runtime.certified { "certified" } else { "not_certified" };
            format!("verdict={verdict}\nmethod=runtime_conditions\n")
        }
    };
    text.push_str(&format!("runtime_certified={}\nlambda_floor={}\n", runtime.certified, runtime.lambda_floor));
    emit(out, &text)
}

fn heatmap(a: HeatmapArgs, out: &mut dyn Write) -> Result<()> {
    let train = parse_dataset(&a.data.data, format_of(&a.data.data, a.data.format))?;
    let opts = ReadOptions { dim: Some(train.d()), classes: Some(train.classes()) };
    let test = parse_dataset_with(&a.test, format_of(&a.test, a.data.format), &opts)?;
    let hc = HeatmapConfig {
        m_count: a.m_count,
        r_count: a.r_count,
        spacing: a.spacing,
        r_max: a.r_max,
        delta: a.delta,
        seed: a.seed,
        learner: a.learner.learner,
        gamma: a.learner.gamma,
        epochs: a.learner.epochs,
        baseline: a.baseline,
    };
    let table = experiment::heatmap(&train, &test, &hc)?.to_csv();
    match &a.out {
        Some(path) => write_file(path, &table),
        None => emit(out, &table),
    }
}

fn validity(a: ValidityArgs, out: &mut dyn Write) -> Result<()> {
    let vc = ValidityConfig {
        trials: a.trials,
        n: a.n,
        d: a.d,
        m: a.m,
        r: a.r,
        delta: a.delta,
        noise: a.noise,
        seed: a.seed,
    };
    let rep = experiment::validity(&vc)?;
    if let Some(path) = &a.out {
        let mut table = String::from("trial,lambda_bound,kl_bound,true_risk\n");
        for (i, t) in rep.per_trial.iter().enumerate() {
            table.push_str(&format!("{i},{},{},{}\n", t.lambda_bound, t.kl_bound, t.true_risk));
        }
        write_file(path, &table)?;
    }
    emit(
        out,
        &format!(
            "trials={}\nviolations={}\nviolation_rate={}\nkl_violations={}\nmean_gap={}\nmean_kl_gap={}\ndelta={}\n",
            rep.trials,
            rep.violations,
            rep.violation_rate(),
            rep.kl_violations,
            rep.mean_gap,
            rep.mean_kl_gap,
            rep.delta
        ),
    )
}

fn compare(a: CompareArgs, out: &mut dyn Write) -> Result<()> {
    let (train, test) = match (&a.data, &a.test) {
        (Some(train_path), Some(test_path)) => {
            let train = parse_dataset(train_path, format_of(train_path, a.format))?;
            let opts = ReadOptions { dim: Some(train.d()), classes: Some(train.classes()) };
            let test = parse_dataset_with(test_path, format_of(test_path, a.format), &opts)?;
            (train, test)
        }
        _ => (
            two_gaussian(a.n, a.d, a.separation, &mut child_rng(a.seed, 0)),
            two_gaussian(a.n, a.d, a.separation, &mut child_rng(a.seed, 1)),
        ),
    };
    let pc = PipelineConfig {
        m: a.m,
        r: parse_r(&a.r, train.n(), train.d())?,
        delta: a.delta,
        seed: child_rng(a.seed, 2).next_u64(),
        learner: a.learner.learner,
        gamma: a.learner.gamma,
        epochs: a.learner.epochs,
    };
    let rep = experiment::predictor_compare(&train, &test, &pc, child_rng(a.seed, 3).next_u64())?;
    emit(
        out,
        &format!(
            "mode,test_loss\nrandomized,{}\nrandomized_expected,{}\nmajority,{}\nuniform,{}\nbest_h,{}\n\
             mass50_count={}\nbest_h_index={}\nlambda={}\nbound={}\npb_kl_bound={}\n",
            rep.randomized,
            rep.randomized_expected,
            rep.majority,
            rep.uniform,
            rep.best_h,
            rep.mass50,
            rep.best_h_index,
            rep.lambda,
            rep.bound,
            rep.pb_kl_bound
        ),
    )
}
