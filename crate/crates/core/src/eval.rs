//! Experimental protocol: conversation-level test split, shuffled train/dev
//! split, per-label grid search on dev, seed variance on test, reports.

use alloc::borrow::ToOwned;
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::nb::{nb_train_instances, NbError, Prediction};
use crate::schema::LabelKey;
use crate::switches::SwitchInstance;

pub const DEFAULT_SEEDS: [u64; 5] = [42, 30, 20, 10, 5];
pub const DEFAULT_DEV_FRACTION: f64 = 0.25;
pub const DEFAULT_NB_ALPHAS: [f64; 4] = [0.1, 0.25, 0.5, 1.0];
pub const TRANSFORMER_BATCH_SIZES: [u32; 2] = [4, 16];
pub const TRANSFORMER_LEARNING_RATES: [f64; 2] = [2e-5, 1e-4];
pub const TRANSFORMER_EPOCHS: u32 = 20;
pub const TRANSFORMER_WEIGHT_DECAY: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("unknown test conversation `{0}`")]
    UnknownConversation(String),
    #[error("dev fraction must lie in (0, 1), got {0}")]
    BadDevFraction(f64),
    #[error("prediction ids do not match gold ids: {0}")]
    IdMismatch(String),
    #[error("instance `{0}` has no gold labels")]
    MissingGold(String),
    #[error("hyperparameter grid is empty")]
    EmptyGrid,
    #[error("no seeds given")]
    NoSeeds,
    #[error("backend `{backend}` does not accept {params:?}")]
    UnsupportedParams { backend: String, params: HyperParams },
    #[error(transparent)]
    NaiveBayes(#[from] NbError),
    #[error("backend failed: {0}")]
    Backend(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub test_conversation_ids: Vec<String>,
    #[serde(default = "default_dev_fraction")]
    pub dev_fraction: f64,
    #[serde(default = "default_shuffle_seed")]
    pub shuffle_seed: u64,
}

fn default_dev_fraction() -> f64 {
    DEFAULT_DEV_FRACTION
}

fn default_shuffle_seed() -> u64 {
    DEFAULT_SEEDS[0]
}

impl SplitSpec {
    pub fn new(test_conversation_ids: Vec<String>) -> Self {
        SplitSpec { test_conversation_ids, dev_fraction: DEFAULT_DEV_FRACTION, shuffle_seed: DEFAULT_SEEDS[0] }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Splits {
    pub train: Vec<SwitchInstance>,
    pub dev: Vec<SwitchInstance>,
    pub test: Vec<SwitchInstance>,
}

/// Test = every instance of the listed conversations. The rest is sorted by
/// id, shuffled with `spec.shuffle_seed` and cut so that dev gets
/// `round(n * dev_fraction)` instances.
pub fn make_splits(instances: &[SwitchInstance], spec: &SplitSpec) -> Result<Splits, EvalError> {
    if !(spec.dev_fraction > 0.0 && spec.dev_fraction < 1.0) {
        return Err(EvalError::BadDevFraction(spec.dev_fraction));
    }
    let known: BTreeSet<&str> = instances.iter().map(|i| i.transcript_id.as_str()).collect();
    if let Some(missing) = spec.test_conversation_ids.iter().find(|id| !known.contains(id.as_str())) {
        return Err(EvalError::UnknownConversation(missing.clone()));
    }
    let test_ids: BTreeSet<&str> = spec.test_conversation_ids.iter().map(String::as_str).collect();

    let (test, mut rest): (Vec<_>, Vec<_>) =
        instances.iter().cloned().partition(|i| test_ids.contains(i.transcript_id.as_str()));
    rest.sort_by(|a, b| a.id.cmp(&b.id));
    let mut rng = ChaCha8Rng::seed_from_u64(spec.shuffle_seed);
    rest.shuffle(&mut rng);
    let n_dev = libm::round(rest.len() as f64 * spec.dev_fraction) as usize;
    let dev = rest.split_off(rest.len() - n_dev);
    Ok(Splits { train: rest, dev, test })
}

/// Fraction of `gold` instances whose prediction matches the gold label.
pub fn accuracy(predictions: &[Prediction], gold: &[SwitchInstance], label: LabelKey) -> Result<f64, EvalError> {
    let mut truth = BTreeMap::new();
    for inst in gold {
        let labels = inst.labels.ok_or_else(|| EvalError::MissingGold(inst.id.clone()))?;
        if truth.insert(inst.id.as_str(), labels.get(label)).is_some() {
            return Err(EvalError::IdMismatch(format!("duplicate gold id `{}`", inst.id)));
        }
    }
    let mut seen = BTreeSet::new();
    let mut correct = 0usize;
    for p in predictions {
        let Some(&g) = truth.get(p.instance_id.as_str()) else {
            return Err(EvalError::IdMismatch(format!("no gold instance `{}`", p.instance_id)));
        };
        if !seen.insert(p.instance_id.as_str()) {
            return Err(EvalError::IdMismatch(format!("duplicate prediction for `{}`", p.instance_id)));
        }
        correct += usize::from(p.decision == g);
    }
    if seen.len() != truth.len() {
        let missing = truth.keys().find(|id| !seen.contains(*id)).copied().unwrap_or_default();
        return Err(EvalError::IdMismatch(format!("no prediction for `{missing}`")));
    }
    if truth.is_empty() {
        return Err(EvalError::IdMismatch("empty gold set".to_owned()));
    }
    Ok(correct as f64 / truth.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HyperParams {
    NaiveBayes { alpha: f64 },
    Transformer { batch_size: u32, learning_rate: f64, epochs: u32, weight_decay: f64 },
}

impl HyperParams {
    /// Order used to break accuracy ties: smaller batch size, then smaller
    /// learning rate (smaller alpha for Naive Bayes).
    fn tie_key(&self) -> (u32, f64) {
        match *self {
            HyperParams::NaiveBayes { alpha } => (0, alpha),
            HyperParams::Transformer { batch_size, learning_rate, .. } => (batch_size, learning_rate),
        }
    }

    pub fn nb_grid(alphas: &[f64]) -> Vec<HyperParams> {
        alphas.iter().map(|&alpha| HyperParams::NaiveBayes { alpha }).collect()
    }

    pub fn transformer_grid() -> Vec<HyperParams> {
        let mut grid = Vec::new();
        for &batch_size in &TRANSFORMER_BATCH_SIZES {
            for &learning_rate in &TRANSFORMER_LEARNING_RATES {
                grid.push(HyperParams::Transformer {
                    batch_size,
                    learning_rate,
                    epochs: TRANSFORMER_EPOCHS,
                    weight_decay: TRANSFORMER_WEIGHT_DECAY,
                });
            }
        }
        grid
    }
}

/// Something that trains one binary classifier and predicts `test`.
pub trait Backend {
    fn name(&self) -> String;

    fn train_predict(
        &self,
        label: LabelKey,
        params: &HyperParams,
        seed: u64,
        train: &[SwitchInstance],
        dev: &[SwitchInstance],
        test: &[SwitchInstance],
    ) -> Result<Vec<Prediction>, EvalError>;
}

impl<B: Backend + ?Sized> Backend for &B {
    fn name(&self) -> String {
        (**self).name()
    }

    fn train_predict(
        &self,
        label: LabelKey,
        params: &HyperParams,
        seed: u64,
        train: &[SwitchInstance],
        dev: &[SwitchInstance],
        test: &[SwitchInstance],
    ) -> Result<Vec<Prediction>, EvalError> {
        (**self).train_predict(label, params, seed, train, dev, test)
    }
}

/// The native Naive Bayes backend. Training ignores the seed.
#[derive(Debug, Clone, Copy, Default)]
pub struct NbBackend;

impl Backend for NbBackend {
    fn name(&self) -> String {
        "nb".to_owned()
    }

    fn train_predict(
        &self,
        label: LabelKey,
        params: &HyperParams,
        _seed: u64,
        train: &[SwitchInstance],
        _dev: &[SwitchInstance],
        test: &[SwitchInstance],
    ) -> Result<Vec<Prediction>, EvalError> {
        let HyperParams::NaiveBayes { alpha } = *params else {
            return Err(EvalError::UnsupportedParams { backend: self.name(), params: *params });
        };
        let model = nb_train_instances(train, label, alpha)?;
        Ok(test.iter().map(|inst| crate::nb::nb_predict(&model, inst)).collect())
    }
}

/// Mean and sample standard deviation (n - 1). One value gives std 0.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    (mean, libm::sqrt(ss / (n - 1.0)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub label: LabelKey,
    /// Percent.
    pub accuracy_mean: f64,
    pub accuracy_std: f64,
    pub n_runs: usize,
    pub seeds: Vec<u64>,
    /// Test accuracy (percent) of each seed, in `seeds` order.
    pub per_seed: Vec<f64>,
    pub backend: String,
    pub hyperparams: HyperParams,
    /// Dev accuracy (percent) of the selected configuration; absent when the
    /// grid had a single point and no search ran.
    pub dev_accuracy: Option<f64>,
}

/// Grid search on dev with the first seed, then the selected configuration
/// on test once per seed.
pub fn run_experiment(
    backend: &dyn Backend,
    splits: &Splits,
    label: LabelKey,
    grid: &[HyperParams],
    seeds: &[u64],
) -> Result<ReportRow, EvalError> {
    let (&first_seed, _) = seeds.split_first().ok_or(EvalError::NoSeeds)?;
    let mut ordered = grid.to_vec();
    ordered.sort_by(|a, b| a.tie_key().partial_cmp(&b.tie_key()).unwrap_or(core::cmp::Ordering::Equal));

    let (params, dev_accuracy) = match ordered.as_slice() {
        [] => return Err(EvalError::EmptyGrid),
        [only] => (*only, None),
        _ => {
            let mut best: Option<(HyperParams, f64)> = None;
            for p in &ordered {
                let preds = backend.train_predict(label, p, first_seed, &splits.train, &splits.dev, &splits.dev)?;
                let acc = accuracy(&preds, &splits.dev, label)?;
                log::debug!("{label}: {p:?} dev accuracy {acc:.4}");
                if best.is_none_or(|(_, b)| acc > b) {
                    best = Some((*p, acc));
                }
            }
            let (p, acc) = best.expect("grid is non-empty");
            (p, Some(acc * 100.0))
        }
    };

    let per_seed = seeds
        .iter()
        .map(|&seed| {
            let preds = backend.train_predict(label, &params, seed, &splits.train, &splits.dev, &splits.test)?;
            Ok(accuracy(&preds, &splits.test, label)? * 100.0)
        })
        .collect::<Result<Vec<f64>, EvalError>>()?;
    let (accuracy_mean, accuracy_std) = mean_std(&per_seed);
    Ok(ReportRow {
        label,
        accuracy_mean,
        accuracy_std,
        n_runs: per_seed.len(),
        seeds: seeds.to_vec(),
        per_seed,
        backend: backend.name(),
        hyperparams: params,
        dev_accuracy,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AverageRow {
    /// Unweighted mean of the per-label means.
    pub accuracy_mean: f64,
    /// Sample std across seeds of the per-seed macro averages.
    pub accuracy_std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    /// Language pair of the test data, e.g. `spa-eng` or `hin-eng`.
    pub pair: String,
    pub backend: String,
    pub rows: Vec<ReportRow>,
    pub average: AverageRow,
    pub std_estimator: String,
    pub flags: Vec<String>,
}

impl EvalReport {
    pub fn new(pair: impl Into<String>, backend: impl Into<String>, rows: Vec<ReportRow>) -> Self {
        let means: Vec<f64> = rows.iter().map(|r| r.accuracy_mean).collect();
        let (accuracy_mean, _) = mean_std(&means);
        let mut flags = Vec::new();

        let runs = rows.first().map_or(0, |r| r.per_seed.len());
        let aligned = rows.iter().all(|r| r.per_seed.len() == runs && r.seeds == rows[0].seeds);
        let accuracy_std = if aligned && runs > 0 {
            let macro_by_seed: Vec<f64> = (0..runs)
                .map(|s| rows.iter().map(|r| r.per_seed[s]).sum::<f64>() / rows.len() as f64)
                .collect();
            mean_std(&macro_by_seed).1
        } else {
            if !rows.is_empty() {
                flags.push("rows were run with different seeds; average std not computed".to_owned());
            }
            0.0
        };
        for r in &rows {
            if r.n_runs < 2 {
                flags.push(format!("{}: single run, std reported as 0", r.label));
            }
        }
        EvalReport {
            pair: pair.into(),
            backend: backend.into(),
            rows,
            average: AverageRow { accuracy_mean, accuracy_std },
            std_estimator: "sample (n-1)".to_owned(),
            flags,
        }
    }
}

/// `86.3 ± 0.9`.
pub fn format_cell(mean: f64, std: f64) -> String {
    format!("{mean:.1} ± {std:.1}")
}

/// Plain-text table: one row per label plus the average row.
pub fn render_report(report: &EvalReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "Label detection accuracy (%), pair: {}, backend: {}", report.pair, report.backend);
    let width = LabelKey::ALL.iter().map(|k| k.display_name().len()).max().unwrap_or(0).max(7);
    for r in &report.rows {
        let _ = writeln!(out, "{:<width$}  {}", r.label.display_name(), format_cell(r.accuracy_mean, r.accuracy_std));
    }
    let _ = writeln!(
        out,
        "{:<width$}  {}",
        "Average",
        format_cell(report.average.accuracy_mean, report.average.accuracy_std)
    );
    let _ = writeln!(out, "std: {}", report.std_estimator);
    for f in &report.flags {
        let _ = writeln!(out, "note: {f}");
    }
    out
}
