//! End-to-end runs driven by a [`RunConfig`]: transform, solve, score,
//! train, predict, k-fold evaluation, plot data and the augmented-space
//! baseline. Every run writes only inside `config.out_dir` and every report
//! carries the effective configuration.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{
    center, column_index, load_csv, read_table, split_folds, synth_generate, RegressionDataset,
    Standardizer, SynthFunction,
};
use crate::equivalence::{
    bi_bennett_predict, bi_bennett_transform, default_tau, predict_from_weights, to_classification,
    EquivalentClassificationDataset,
};
use crate::error::{Error, Result};
use crate::linmap::{
    fit_linear_head, mse, pca_project, r_squared, train_j4_observed, MlpNetwork, TrainConfig,
    DEFAULT_EPS_DIV,
};
use crate::model::TrainedModel;
use crate::regressability::{
    classifiability_percentile, LabeledPoints, RegressabilityReport, DEFAULT_D_PERCENTILE,
};
use crate::svc::{solve_dual, SvcProblem, DEFAULT_C, DEFAULT_MAX_ITER, DEFAULT_TOL};

/// Target column name of synthetic data.
pub const SYNTH_TARGET: &str = "z";

/// Synthetic data source used when no CSV path is configured.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSpec {
    pub function: SynthFunction,
    pub samples: usize,
    pub lo: f64,
    pub hi: f64,
    #[serde(default)]
    pub noise: f64,
    /// Defaults to the run seed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub data: Option<PathBuf>,
    /// Target column; the last column when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub synth: Option<SynthSpec>,
    pub standardize: bool,
    /// Near-zero threshold for the equivalence transform.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    pub c: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub d_percentile: f64,
    /// Hidden and output layer sizes.
    pub arch: Vec<usize>,
    pub lr: f64,
    pub epochs: usize,
    pub eps_div: f64,
    /// Near-zero threshold for the training loss.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub train_tau: Option<f64>,
    pub k_folds: usize,
    pub seed: u64,
    /// Margin half-width of the augmented-space baseline.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    /// Epochs at which PCA projections of the feature map are recorded.
    pub snapshots: Vec<usize>,
    pub out_dir: PathBuf,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub time_limit: Option<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            data: None,
            target: None,
            synth: None,
            standardize: true,
            tau: None,
            c: DEFAULT_C,
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
            d_percentile: DEFAULT_D_PERCENTILE,
            arch: vec![5, 10],
            lr: 0.01,
            epochs: 5000,
            eps_div: DEFAULT_EPS_DIV,
            train_tau: None,
            k_folds: 10,
            seed: 42,
            epsilon: None,
            snapshots: vec![100, 500, 1000],
            out_dir: PathBuf::from("out"),
            time_limit: None,
        }
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!(
            "{name} must be a positive finite number, got {v}"
        )))
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        if !path.exists() {
            return Err(Error::MissingFile(path.to_path_buf()));
        }
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        positive("c", self.c)?;
        positive("tol", self.tol)?;
        positive("lr", self.lr)?;
        if let Some(t) = self.tau {
            positive("tau", t)?;
        }
        if let Some(t) = self.train_tau {
            positive("train_tau", t)?;
        }
        if let Some(e) = self.epsilon {
            positive("epsilon", e)?;
        }
        if let Some(t) = self.time_limit {
            positive("time_limit", t)?;
        }
        if !(self.d_percentile > 0.0 && self.d_percentile < 100.0) {
            return Err(Error::Config(format!(
                "d_percentile must lie in (0, 100), got {}",
                self.d_percentile
            )));
        }
        if !(self.eps_div >= 0.0 && self.eps_div.is_finite()) {
            return Err(Error::Config(
                "eps_div must be a nonnegative finite number".into(),
            ));
        }
        if self.max_iter == 0 || self.epochs == 0 {
            return Err(Error::Config(
                "max_iter and epochs must be at least 1".into(),
            ));
        }
        if self.arch.is_empty() || self.arch.contains(&0) {
            return Err(Error::Config(format!(
                "arch needs at least an output layer and no zero-width layer, got {:?}",
                self.arch
            )));
        }
        if self.k_folds < 2 {
            return Err(Error::Config(format!(
                "k_folds must be at least 2, got {}",
                self.k_folds
            )));
        }
        if let Some(s) = &self.synth {
            if s.samples == 0 || !(s.lo < s.hi) || !(s.noise >= 0.0) {
                return Err(Error::Config(
                    "synth needs samples ≥ 1, lo < hi and noise ≥ 0".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            hidden_and_output: self.arch.clone(),
            lr: self.lr,
            epochs: self.epochs,
            seed: self.seed,
            tau: self.train_tau,
            eps_div: self.eps_div,
        }
    }

    /// The configured CSV file, or the synthetic source.
    pub fn load_dataset(&self) -> Result<RegressionDataset> {
        match (&self.data, &self.synth) {
            (Some(path), _) => load_csv(path, self.target.as_deref()),
            (None, Some(s)) => synth_generate(
                s.function,
                s.samples,
                (s.lo, s.hi),
                s.noise,
                s.seed.unwrap_or(self.seed),
            ),
            (None, None) => Err(Error::Config("no data source: set data or synth".into())),
        }
    }

    /// Name of the target column: the configured one, the last CSV column,
    /// or `z` for synthetic data.
    pub fn target_name(&self) -> Result<String> {
        if let Some(t) = &self.target {
            return Ok(t.clone());
        }
        match &self.data {
            Some(path) => {
                let mut reader = csv::ReaderBuilder::new()
                    .trim(csv::Trim::All)
                    .from_path(path)?;
                Ok(reader
                    .headers()?
                    .iter()
                    .last()
                    .unwrap_or_default()
                    .to_owned())
            }
            None => Ok(SYNTH_TARGET.to_owned()),
        }
    }

    fn deadline(&self, started: Instant) -> Option<(Instant, f64)> {
        self.time_limit
            .map(|s| (started + std::time::Duration::from_secs_f64(s), s))
    }
}

fn check_deadline(deadline: Option<(Instant, f64)>) -> Result<()> {
    match deadline {
        Some((at, seconds)) if Instant::now() >= at => Err(Error::TimeLimit { seconds }),
        _ => Ok(()),
    }
}

/// Path of a fixed file name inside the output directory, creating the
/// directory on first use.
pub fn output_path(config: &RunConfig, file_name: &str) -> Result<PathBuf> {
    let plain = Path::new(file_name)
        .file_name()
        .is_some_and(|n| n == file_name);
    if !plain {
        return Err(Error::Config(format!(
            "output name '{file_name}' must be a plain file name"
        )));
    }
    std::fs::create_dir_all(&config.out_dir)?;
    Ok(config.out_dir.join(file_name))
}

/// Standardizes (when configured) and centers `ds`.
fn prepare(
    ds: &RegressionDataset,
    config: &RunConfig,
) -> Result<(
    RegressionDataset,
    Option<Standardizer>,
    crate::dataset::ReferencePoint,
)> {
    let standardizer = if config.standardize {
        Some(Standardizer::fit(ds)?)
    } else {
        None
    };
    let scaled = match &standardizer {
        Some(s) => s.transform(ds)?,
        None => ds.clone(),
    };
    let (centered, reference) = center(&scaled)?;
    Ok((centered, standardizer, reference))
}

fn equivalence_of(
    centered: &RegressionDataset,
    config: &RunConfig,
) -> Result<EquivalentClassificationDataset> {
    let tau = config.tau.unwrap_or_else(|| default_tau(centered));
    to_classification(centered, tau)
}

// ---------------------------------------------------------------------------
// transform

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformSummary {
    pub n_samples: usize,
    pub n_points: usize,
    pub dropped: Vec<usize>,
    pub file: PathBuf,
    pub config: RunConfig,
}

pub fn run_transform(config: &RunConfig) -> Result<TransformSummary> {
    config.validate()?;
    let ds = config.load_dataset()?;
    let (centered, _, _) = prepare(&ds, config)?;
    let eq = equivalence_of(&centered, config)?;
    let file = output_path(config, "transform.csv")?;
    eq.write_csv(&file)?;
    Ok(TransformSummary {
        n_samples: ds.len(),
        n_points: eq.len(),
        dropped: eq.dropped().to_vec(),
        file,
        config: config.clone(),
    })
}

// ---------------------------------------------------------------------------
// solve

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

fn histogram(values: &[f64], lo: f64, hi: f64, bins: usize) -> Vec<HistogramBin> {
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0; bins];
    for &v in values {
        let pos = ((v - lo) / width).floor();
        counts[(pos.max(0.0) as usize).min(bins - 1)] += 1;
    }
    counts
        .into_iter()
        .enumerate()
        .map(|(b, count)| HistogramBin {
            lo: lo + b as f64 * width,
            hi: lo + (b + 1) as f64 * width,
            count,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KktCounts {
    pub interior: usize,
    pub at_lower: usize,
    pub at_upper: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    /// Weights in the centered (and standardized, when configured) space.
    pub w: Vec<f64>,
    pub n_points: usize,
    pub n_dropped: usize,
    pub iterations: usize,
    pub converged: bool,
    pub max_violation: f64,
    pub dual_objective: f64,
    pub primal_objective: f64,
    pub duality_gap: f64,
    pub kkt: KktCounts,
    pub lambda_histogram: Vec<HistogramBin>,
    pub train_r2: f64,
    pub config: RunConfig,
}

/// Fits the L1-error SVC on the equivalent classification dataset. A
/// solver that runs out of sweeps still produces a report (`converged:
/// false`); the caller decides whether that is an error.
pub fn run_solve(config: &RunConfig) -> Result<SolveReport> {
    config.validate()?;
    let ds = config.load_dataset()?;
    let (centered, _, _) = prepare(&ds, config)?;
    let eq = equivalence_of(&centered, config)?;
    let problem = SvcProblem::from_equivalence(&eq, config.c)?;
    let sol = solve_dual(&problem, config.tol, config.max_iter)?;
    let (interior, at_lower, at_upper) = sol.status_counts();
    let fitted: Vec<f64> = centered
        .rows()
        .map(|x| x.iter().zip(&sol.w).map(|(a, b)| a * b).sum())
        .collect();
    Ok(SolveReport {
        n_points: problem.len(),
        n_dropped: eq.dropped().len(),
        iterations: sol.iterations,
        converged: sol.converged,
        max_violation: sol.max_violation,
        dual_objective: sol.dual_objective,
        primal_objective: sol.primal_objective,
        duality_gap: sol.duality_gap(),
        kkt: KktCounts {
            interior,
            at_lower,
            at_upper,
        },
        lambda_histogram: histogram(&sol.lambda, -config.c, config.c, 10),
        train_r2: r_squared(&fitted, centered.targets()),
        w: sol.w,
        config: config.clone(),
    })
}

// ---------------------------------------------------------------------------
// regressability

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressabilitySummary {
    pub score: f64,
    pub d: f64,
    pub d_percentile: f64,
    pub n_points: usize,
    pub n_dropped: usize,
    /// Per-sample scores in 10 bins over `[−1, 1]`.
    pub histogram: Vec<HistogramBin>,
    pub config: RunConfig,
}

fn score_dataset(
    ds: &RegressionDataset,
    config: &RunConfig,
) -> Result<(EquivalentClassificationDataset, RegressabilityReport)> {
    let (centered, _, _) = prepare(ds, config)?;
    let eq = equivalence_of(&centered, config)?;
    let set = LabeledPoints::new(eq.points(), eq.n_features(), eq.labels())?;
    let report = classifiability_percentile(&set, config.d_percentile, config.seed)?;
    Ok((eq, report))
}

pub fn run_regressability(config: &RunConfig) -> Result<RegressabilitySummary> {
    config.validate()?;
    let ds = config.load_dataset()?;
    let (eq, report) = score_dataset(&ds, config)?;
    Ok(RegressabilitySummary {
        score: report.score,
        d: report.d,
        d_percentile: config.d_percentile,
        n_points: eq.len(),
        n_dropped: eq.dropped().len(),
        histogram: histogram(&report.per_sample, -1.0, 1.0, 10),
        config: config.clone(),
    })
}

// ---------------------------------------------------------------------------
// training

/// A fitted regressor plus its training record.
#[derive(Debug, Clone, PartialEq)]
pub struct FittedModel {
    pub model: TrainedModel,
    pub loss_trace: Vec<f64>,
    /// False when every centered target fell below the training threshold
    /// (e.g. a constant target) and the initial network was kept.
    pub trained: bool,
    /// Centered, preprocessed training data the map was fitted on.
    pub centered: RegressionDataset,
}

/// Preprocesses `ds`, trains the feature map and fits the head on all of it.
pub fn fit_model(
    ds: &RegressionDataset,
    config: &RunConfig,
    deadline: Option<(Instant, f64)>,
    observer: impl FnMut(usize, &MlpNetwork),
) -> Result<FittedModel> {
    let (centered, standardizer, reference) = prepare(ds, config)?;
    let train_cfg = config.train_config();
    let (network, loss_trace, trained) =
        match train_j4_observed(&centered, &train_cfg, deadline, observer) {
            Ok(out) => (out.network, out.loss_trace, true),
            Err(Error::AllDropped { .. }) => (
                MlpNetwork::init(&train_cfg.layer_dims(centered.n_features()), train_cfg.seed)?,
                Vec::new(),
                false,
            ),
            Err(e) => return Err(e),
        };
    let head = fit_linear_head(&network, &centered)?;
    Ok(FittedModel {
        model: TrainedModel {
            network,
            head,
            reference,
            standardizer,
            feature_names: ds.feature_names().to_vec(),
            target: config.target_name()?,
        },
        loss_trace,
        trained,
        centered,
    })
}

/// `R²` of the least-squares line from `x` to `z` (squared correlation).
pub fn linear_fit_r2(x: &[f64], z: &[f64]) -> f64 {
    let n = x.len() as f64;
    if x.is_empty() {
        return 0.0;
    }
    let mx = x.iter().sum::<f64>() / n;
    let mz = z.iter().sum::<f64>() / n;
    let (mut sxx, mut szz, mut sxz) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(z) {
        sxx += (a - mx) * (a - mx);
        szz += (b - mz) * (b - mz);
        sxz += (a - mx) * (b - mz);
    }
    if sxx == 0.0 || szz == 0.0 {
        return 0.0;
    }
    sxz * sxz / (sxx * szz)
}

/// PCA of the feature images at one epoch, scored against the targets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaSnapshot {
    pub epoch: usize,
    /// Row-major `M × k` scores, `k = min(2, p)`.
    pub scores: Vec<f64>,
    pub k: usize,
    pub pc1_r2: f64,
}

pub fn pca_snapshot(net: &MlpNetwork, ds: &RegressionDataset, epoch: usize) -> Result<PcaSnapshot> {
    let p = net.output_dim();
    let mut phi = Vec::with_capacity(ds.len() * p);
    for row in ds.rows() {
        phi.extend(net.forward(row)?);
    }
    let k = p.min(2);
    let proj = pca_project(&phi, p, k)?;
    let pc1 = proj.component_scores(0);
    Ok(PcaSnapshot {
        epoch,
        pc1_r2: linear_fit_r2(&pc1, ds.targets()),
        scores: proj.scores,
        k,
    })
}

fn write_loss_csv(path: &Path, trace: &[f64]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["epoch", "loss"])?;
    for (e, l) in trace.iter().enumerate() {
        w.write_record([e.to_string(), l.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

fn write_pca_csv(path: &Path, snap: &PcaSnapshot, z: &[f64]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["sample".to_owned()];
    header.extend((1..=snap.k).map(|c| format!("pc{c}")));
    header.push("z".to_owned());
    w.write_record(&header)?;
    for (i, (scores, zi)) in snap.scores.chunks_exact(snap.k).zip(z).enumerate() {
        let mut rec = vec![i.to_string()];
        rec.extend(scores.iter().map(f64::to_string));
        rec.push(zi.to_string());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

fn write_pca_summary(path: &Path, snaps: &[PcaSnapshot]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["epoch", "pc1_r2"])?;
    for s in snaps {
        w.write_record([s.epoch.to_string(), s.pc1_r2.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Trains with PCA snapshots at `config.snapshots` (those within the epoch
/// budget).
fn fit_with_snapshots(
    ds: &RegressionDataset,
    config: &RunConfig,
    deadline: Option<(Instant, f64)>,
) -> Result<(FittedModel, Vec<PcaSnapshot>)> {
    let (centered, _, _) = prepare(ds, config)?;
    let mut snaps = Vec::new();
    let mut failure = None;
    let fitted = fit_model(ds, config, deadline, |epoch, net| {
        if failure.is_none() && config.snapshots.contains(&epoch) {
            match pca_snapshot(net, &centered, epoch) {
                Ok(s) => snaps.push(s),
                Err(e) => failure = Some(e),
            }
        }
    })?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok((fitted, snaps))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainSummary {
    pub n_samples: usize,
    pub trained: bool,
    pub initial_loss: Option<f64>,
    pub final_loss: Option<f64>,
    pub train_r2: f64,
    pub train_mse: f64,
    pub pc1_r2: Vec<(usize, f64)>,
    pub files: Vec<PathBuf>,
    pub wall_seconds: f64,
    pub config: RunConfig,
}

/// Trains on the whole dataset and writes `model.json` and `loss.csv`, plus
/// PCA projection CSVs when `with_pca` is set.
pub fn run_train(config: &RunConfig, with_pca: bool) -> Result<TrainSummary> {
    config.validate()?;
    let started = Instant::now();
    let ds = config.load_dataset()?;
    let deadline = config.deadline(started);
    let (fitted, snaps) = if with_pca {
        fit_with_snapshots(&ds, config, deadline)?
    } else {
        (fit_model(&ds, config, deadline, |_, _| {})?, Vec::new())
    };
    let mut files = Vec::new();
    let model_path = output_path(config, "model.json")?;
    fitted.model.save(&model_path)?;
    files.push(model_path);
    let loss_path = output_path(config, "loss.csv")?;
    write_loss_csv(&loss_path, &fitted.loss_trace)?;
    files.push(loss_path);
    for s in &snaps {
        let path = output_path(config, &format!("pca_epoch_{}.csv", s.epoch))?;
        write_pca_csv(&path, s, fitted.centered.targets())?;
        files.push(path);
    }
    Ok(TrainSummary {
        n_samples: ds.len(),
        trained: fitted.trained,
        initial_loss: fitted.loss_trace.first().copied(),
        final_loss: fitted.loss_trace.last().copied(),
        train_r2: fitted.model.head.train_r2,
        train_mse: fitted.model.head.train_mse,
        pc1_r2: snaps.iter().map(|s| (s.epoch, s.pc1_r2)).collect(),
        files,
        wall_seconds: started.elapsed().as_secs_f64(),
        config: config.clone(),
    })
}

// ---------------------------------------------------------------------------
// predict

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictSummary {
    pub n_samples: usize,
    /// Present when the input carries the model's target column.
    pub r2: Option<f64>,
    pub mse: Option<f64>,
    pub file: PathBuf,
}

/// Applies a saved model to every row of `input` (columns matched by name)
/// and writes `predictions.csv`.
pub fn run_predict(model_path: &Path, input: &Path, config: &RunConfig) -> Result<PredictSummary> {
    let model = TrainedModel::load(model_path)?;
    let (headers, cells) = read_table(input)?;
    if cells.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let cols = model
        .feature_names
        .iter()
        .map(|name| column_index(&headers, name))
        .collect::<Result<Vec<_>>>()?;
    let target_col = column_index(&headers, &model.target).ok();
    let mut predictions = Vec::new();
    let mut actual = Vec::new();
    let mut x = vec![0.0; cols.len()];
    for row in cells.chunks_exact(headers.len()) {
        for (slot, &c) in x.iter_mut().zip(&cols) {
            *slot = row[c];
        }
        predictions.push(model.predict(&x)?);
        if let Some(t) = target_col {
            actual.push(row[t]);
        }
    }
    let file = output_path(config, "predictions.csv")?;
    let mut w = csv::Writer::from_path(&file)?;
    w.write_record(["row", "prediction"])?;
    for (i, p) in predictions.iter().enumerate() {
        w.write_record([(i + 1).to_string(), p.to_string()])?;
    }
    w.flush()?;
    let scored = target_col.is_some();
    Ok(PredictSummary {
        n_samples: predictions.len(),
        r2: scored.then(|| r_squared(&predictions, &actual)),
        mse: scored.then(|| mse(&predictions, &actual)),
        file,
    })
}

// ---------------------------------------------------------------------------
// evaluation

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldRecord {
    pub method: String,
    pub fold: usize,
    pub seed: u64,
    pub n_train: usize,
    pub n_test: usize,
    pub train_r2: f64,
    pub train_mse: f64,
    pub test_r2: f64,
    pub test_mse: f64,
    /// SVC-based methods only: whether the dual solver met its tolerance
    /// within `max_iter` sweeps. Predictions use the last iterate either way.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub solver_converged: Option<bool>,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub method: String,
    pub folds: Vec<FoldRecord>,
    pub mean_test_r2: f64,
    pub mean_test_mse: f64,
    pub mean_train_r2: f64,
    pub wall_seconds: f64,
    /// Absent when every centered target is below tau (constant target).
    pub regressability: Option<f64>,
    pub regressability_d: Option<f64>,
    pub config: RunConfig,
}

#[derive(Serialize)]
#[serde(tag = "record", rename_all = "snake_case")]
enum ReportLine<'a> {
    Fold(&'a FoldRecord),
    Aggregate {
        method: &'a str,
        k_folds: usize,
        mean_test_r2: f64,
        mean_test_mse: f64,
        mean_train_r2: f64,
        wall_seconds: f64,
        regressability: Option<f64>,
        regressability_d: Option<f64>,
        seed: u64,
        config: &'a RunConfig,
    },
}

impl EvaluationReport {
    fn assemble(
        method: &str,
        folds: Vec<FoldRecord>,
        started: Instant,
        regress: Option<&RegressabilityReport>,
        config: &RunConfig,
    ) -> Self {
        let k = folds.len() as f64;
        let mean = |f: fn(&FoldRecord) -> f64| folds.iter().map(f).sum::<f64>() / k;
        Self {
            method: method.to_owned(),
            mean_test_r2: mean(|r| r.test_r2),
            mean_test_mse: mean(|r| r.test_mse),
            mean_train_r2: mean(|r| r.train_r2),
            folds,
            wall_seconds: started.elapsed().as_secs_f64(),
            regressability: regress.map(|r| r.score),
            regressability_d: regress.map(|r| r.d),
            config: config.clone(),
        }
    }

    /// One JSON record per fold, then one aggregate record.
    pub fn to_json_lines(&self) -> String {
        let mut out = String::new();
        for f in &self.folds {
            out.push_str(&serde_json::to_string(&ReportLine::Fold(f)).expect("serializable"));
            out.push('\n');
        }
        let agg = ReportLine::Aggregate {
            method: &self.method,
            k_folds: self.folds.len(),
            mean_test_r2: self.mean_test_r2,
            mean_test_mse: self.mean_test_mse,
            mean_train_r2: self.mean_train_r2,
            wall_seconds: self.wall_seconds,
            regressability: self.regressability,
            regressability_d: self.regressability_d,
            seed: self.config.seed,
            config: &self.config,
        };
        out.push_str(&serde_json::to_string(&agg).expect("serializable"));
        out.push('\n');
        out
    }
}

/// Regressability for the report; `None` when no sample survives tau.
fn optional_score(
    ds: &RegressionDataset,
    config: &RunConfig,
) -> Result<Option<RegressabilityReport>> {
    match score_dataset(ds, config) {
        Ok((_, r)) => Ok(Some(r)),
        Err(Error::AllDropped { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Train/test predictions of one method on one fold.
struct FoldFit {
    train_pred: Vec<f64>,
    test_pred: Vec<f64>,
    solver_converged: Option<bool>,
}

fn fold_record(
    method: &str,
    fold: usize,
    config: &RunConfig,
    train: &RegressionDataset,
    test: &RegressionDataset,
    fit: FoldFit,
    seconds: f64,
) -> FoldRecord {
    FoldRecord {
        method: method.to_owned(),
        fold,
        seed: config.seed,
        n_train: train.len(),
        n_test: test.len(),
        train_r2: r_squared(&fit.train_pred, train.targets()),
        train_mse: mse(&fit.train_pred, train.targets()),
        test_r2: r_squared(&fit.test_pred, test.targets()),
        test_mse: mse(&fit.test_pred, test.targets()),
        solver_converged: fit.solver_converged,
        seconds,
    }
}

fn predict_all(
    ds: &RegressionDataset,
    mut f: impl FnMut(&[f64]) -> Result<f64>,
) -> Result<Vec<f64>> {
    ds.rows().map(|x| f(x)).collect()
}

fn fit_j4_fold(
    train: &RegressionDataset,
    test: &RegressionDataset,
    config: &RunConfig,
    deadline: Option<(Instant, f64)>,
) -> Result<FoldFit> {
    let fitted = fit_model(train, config, deadline, |_, _| {})?;
    let m = &fitted.model;
    Ok(FoldFit {
        train_pred: predict_all(train, |x| m.predict(x))?,
        test_pred: predict_all(test, |x| m.predict(x))?,
        solver_converged: None,
    })
}

fn scale_row(s: &Option<Standardizer>, x: &[f64]) -> Result<Vec<f64>> {
    match s {
        Some(s) => s.transform_row(x),
        None => Ok(x.to_vec()),
    }
}

/// Linear regressor from the L1-error SVC on the equivalent dataset.
fn fit_equivalence_svc_fold(
    train: &RegressionDataset,
    test: &RegressionDataset,
    config: &RunConfig,
) -> Result<FoldFit> {
    let (centered, standardizer, reference) = prepare(train, config)?;
    let eq = equivalence_of(&centered, config)?;
    let problem = SvcProblem::from_equivalence(&eq, config.c)?;
    let sol = solve_dual(&problem, config.tol, config.max_iter)?;
    let mut predict =
        |x: &[f64]| predict_from_weights(&sol.w, &reference, &scale_row(&standardizer, x)?);
    Ok(FoldFit {
        train_pred: predict_all(train, &mut predict)?,
        test_pred: predict_all(test, &mut predict)?,
        solver_converged: Some(sol.converged),
    })
}

/// SVC on the augmented points `(x, z ± ε, 1)`; the hyperplane
/// `w·x + η z + b = 0` is read as `z = −(w·x + b)/η`.
fn fit_bi_bennett_fold(
    train: &RegressionDataset,
    test: &RegressionDataset,
    config: &RunConfig,
    epsilon: f64,
) -> Result<FoldFit> {
    let (centered, standardizer, reference) = prepare(train, config)?;
    let aug = bi_bennett_transform(&centered, epsilon)?;
    let dim = aug.dim() + 1;
    let problem = SvcProblem::new(
        aug.homogeneous_points(),
        dim,
        aug.labels().to_vec(),
        config.c,
    )?;
    let sol = solve_dual(&problem, config.tol, config.max_iter)?;
    let n = centered.n_features();
    let (w, eta, b) = (&sol.w[..n], sol.w[n], sol.w[n + 1]);
    if eta == 0.0 {
        return Err(Error::Model(
            "augmented hyperplane has no target component; increase epsilon or C".into(),
        ));
    }
    let mut predict = |x: &[f64]| -> Result<f64> {
        let scaled = scale_row(&standardizer, x)?;
        let shifted: Vec<f64> = scaled
            .iter()
            .zip(&reference.x0)
            .map(|(a, b)| a - b)
            .collect();
        Ok(bi_bennett_predict(w, b, eta, &shifted)? + reference.z0)
    };
    Ok(FoldFit {
        train_pred: predict_all(train, &mut predict)?,
        test_pred: predict_all(test, &mut predict)?,
        solver_converged: Some(sol.converged),
    })
}

/// Runs `fit` on every fold (in parallel) and returns records ordered by fold.
fn cross_validate(
    ds: &RegressionDataset,
    config: &RunConfig,
    deadline: Option<(Instant, f64)>,
    methods: &[&str],
    fit: impl Fn(&str, &RegressionDataset, &RegressionDataset) -> Result<FoldFit> + Sync,
) -> Result<Vec<Vec<FoldRecord>>> {
    let folds = split_folds(ds, config.k_folds, config.seed)?;
    let per_fold: Vec<Vec<FoldRecord>> = (0..config.k_folds)
        .into_par_iter()
        .map(|fold| -> Result<Vec<FoldRecord>> {
            let train = ds.subset(&folds.train_indices(fold));
            let test = ds.subset(&folds.test_indices(fold));
            methods
                .iter()
                .map(|&method| {
                    check_deadline(deadline)?;
                    let t = Instant::now();
                    let fitted = fit(method, &train, &test)?;
                    let secs = t.elapsed().as_secs_f64();
                    Ok(fold_record(
                        method, fold, config, &train, &test, fitted, secs,
                    ))
                })
                .collect::<Result<Vec<_>>>()
                .map_err(|e| e.in_fold(fold))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((0..methods.len())
        .map(|m| per_fold.iter().map(|records| records[m].clone()).collect())
        .collect())
}

/// k-fold evaluation of the linearizing-map pipeline: per fold, preprocess
/// and center on the training split, train the map, fit the head, and score
/// the held-out split.
pub fn run_evaluate(config: &RunConfig) -> Result<EvaluationReport> {
    config.validate()?;
    let started = Instant::now();
    let deadline = config.deadline(started);
    let ds = config.load_dataset()?;
    let regress = optional_score(&ds, config)?;
    check_deadline(deadline)?;
    let mut records = cross_validate(&ds, config, deadline, &["j4"], |_, train, test| {
        fit_j4_fold(train, test, config, deadline)
    })?;
    Ok(EvaluationReport::assemble(
        "j4",
        records.remove(0),
        started,
        regress.as_ref(),
        config,
    ))
}

pub const COMPARE_METHODS: [&str; 3] = ["bi_bennett", "equivalence_svc", "j4"];

/// k-fold comparison on shared folds of the augmented-space baseline, the
/// linear equivalence SVC and the linearizing-map pipeline. One report per
/// method, in [`COMPARE_METHODS`] order.
pub fn run_compare_bibennett(config: &RunConfig) -> Result<Vec<EvaluationReport>> {
    config.validate()?;
    let epsilon = config
        .epsilon
        .ok_or_else(|| Error::Config("the augmented-space baseline needs epsilon".into()))?;
    let started = Instant::now();
    let deadline = config.deadline(started);
    let ds = config.load_dataset()?;
    let regress = optional_score(&ds, config)?;
    let records = cross_validate(
        &ds,
        config,
        deadline,
        &COMPARE_METHODS,
        |method, train, test| match method {
            "bi_bennett" => fit_bi_bennett_fold(train, test, config, epsilon),
            "equivalence_svc" => fit_equivalence_svc_fold(train, test, config),
            _ => fit_j4_fold(train, test, config, deadline),
        },
    )?;
    Ok(records
        .into_iter()
        .zip(COMPARE_METHODS)
        .map(|(folds, method)| {
            EvaluationReport::assemble(method, folds, started, regress.as_ref(), config)
        })
        .collect())
}

// ---------------------------------------------------------------------------
// plot data

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotDataSummary {
    pub files: Vec<PathBuf>,
    pub regressability: f64,
    pub final_loss: Option<f64>,
    pub pc1_r2: Vec<(usize, f64)>,
    pub config: RunConfig,
}

/// Writes the data behind the transform, classifiability, loss and PCA
/// figures. Everything is computed before the first file is written.
pub fn run_plotdata(config: &RunConfig) -> Result<PlotDataSummary> {
    config.validate()?;
    let started = Instant::now();
    let deadline = config.deadline(started);
    let ds = config.load_dataset()?;
    let (eq, regress) = score_dataset(&ds, config)?;
    let (fitted, snaps) = fit_with_snapshots(&ds, config, deadline)?;

    let mut files = Vec::new();
    let path = output_path(config, "transform.csv")?;
    eq.write_csv(&path)?;
    files.push(path);

    let path = output_path(config, "classifiability.csv")?;
    let mut w = csv::Writer::from_path(&path)?;
    w.write_record([
        "point",
        "source_index",
        "label",
        "classifiability",
        "neighborhood_size",
    ])?;
    for i in 0..eq.len() {
        w.write_record([
            i.to_string(),
            eq.source_index()[i].to_string(),
            eq.labels()[i].to_string(),
            regress.per_sample[i].to_string(),
            regress.neighborhood_sizes[i].to_string(),
        ])?;
    }
    w.flush()?;
    files.push(path);

    let path = output_path(config, "loss.csv")?;
    write_loss_csv(&path, &fitted.loss_trace)?;
    files.push(path);

    for s in &snaps {
        let path = output_path(config, &format!("pca_epoch_{}.csv", s.epoch))?;
        write_pca_csv(&path, s, fitted.centered.targets())?;
        files.push(path);
    }
    let path = output_path(config, "pca_summary.csv")?;
    write_pca_summary(&path, &snaps)?;
    files.push(path);

    Ok(PlotDataSummary {
        files,
        regressability: regress.score,
        final_loss: fitted.loss_trace.last().copied(),
        pc1_r2: snaps.iter().map(|s| (s.epoch, s.pc1_r2)).collect(),
        config: config.clone(),
    })
}
