//! Training, evaluation, multi-seed experiments and the hyperparameter sweep.

use std::borrow::Cow;
use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::mnist::{ImageSet, LabeledImage, N_CLASSES};
use crate::network::{InitMode, Network, NetworkConfig};
use crate::par;
use crate::plasticity::{train_on_image, PlasticityUpdate, RewardKind};
use crate::resource::ResourceKind;

/// Accuracy figures in percent plus the confusion matrix
/// (`confusion[true][predicted]`).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metrics {
    pub overall_accuracy: f64,
    pub per_class_accuracy: [f64; N_CLASSES],
    pub confusion: [[u64; N_CLASSES]; N_CLASSES],
}

impl Metrics {
    pub fn from_confusion(confusion: [[u64; N_CLASSES]; N_CLASSES]) -> Self {
        let total: u64 = confusion.iter().flatten().sum();
        let correct: u64 = (0..N_CLASSES).map(|c| confusion[c][c]).sum();
        let mut per_class = [0.0; N_CLASSES];
        for (c, row) in confusion.iter().enumerate() {
            let n: u64 = row.iter().sum();
            per_class[c] = percent(row[c], n);
        }
        Self {
            overall_accuracy: percent(correct, total),
            per_class_accuracy: per_class,
            confusion,
        }
    }

    pub fn from_predictions(labels: &[usize], predictions: &[usize]) -> Self {
        let mut confusion = [[0u64; N_CLASSES]; N_CLASSES];
        for (&t, &p) in labels.iter().zip(predictions) {
            confusion[t][p] += 1;
        }
        Self::from_confusion(confusion)
    }

    pub fn total(&self) -> u64 {
        self.confusion.iter().flatten().sum()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("metric,avg");
        for c in 0..N_CLASSES {
            let _ = write!(out, ",{c}");
        }
        let _ = write!(out, "\nacc,{}", self.overall_accuracy);
        for a in self.per_class_accuracy {
            let _ = write!(out, ",{a}");
        }
        out.push('\n');
        out
    }
}

fn percent(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        100.0 * num as f64 / den as f64
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct EpochStats {
    pub images: usize,
    pub group_rewards: usize,
    pub single_rewards: usize,
    pub punishments: usize,
}

/// Training rng for a given seed; independent of the weight-init stream.
pub fn training_rng(seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    rng
}

/// Sampling rng for [`sweep`].
pub fn sweep_rng(seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(3);
    rng
}

/// One pass over `images` in the given order.
pub fn train_epoch<R: Rng + ?Sized>(
    net: &mut Network,
    images: &[LabeledImage],
    rng: &mut R,
) -> Result<EpochStats> {
    train_epoch_logged(net, images, rng, |_, _| {})
}

/// Like [`train_epoch`], calling `log(index, update)` after every image.
pub fn train_epoch_logged<R, F>(
    net: &mut Network,
    images: &[LabeledImage],
    rng: &mut R,
    mut log: F,
) -> Result<EpochStats>
where
    R: Rng + ?Sized,
    F: FnMut(usize, &PlasticityUpdate),
{
    let mut stats = EpochStats::default();
    for (i, img) in images.iter().enumerate() {
        let up = train_on_image(net, img, rng)?;
        stats.images += 1;
        match up.kind {
            RewardKind::GroupReward => stats.group_rewards += 1,
            RewardKind::SingleReward => stats.single_rewards += 1,
        }
        stats.punishments += up.punished.len();
        log(i, &up);
    }
    Ok(stats)
}

pub fn evaluate(net: &Network, images: &[LabeledImage]) -> Metrics {
    let predictions = par::map(images, |img| net.infer(img.pixels()));
    metrics_for(images, &predictions)
}

pub fn evaluate_sequential(net: &Network, images: &[LabeledImage]) -> Metrics {
    let predictions = par::map_sequential(images, |img| net.infer(img.pixels()));
    metrics_for(images, &predictions)
}

fn metrics_for(images: &[LabeledImage], predictions: &[usize]) -> Metrics {
    let labels: Vec<usize> = images.iter().map(LabeledImage::label).collect();
    Metrics::from_predictions(&labels, predictions)
}

#[derive(Debug, Clone, Serialize)]
pub struct RunResult {
    pub seed: u64,
    pub metrics: Metrics,
    pub epoch: EpochStats,
    pub timesteps: u64,
    pub plasticity_calls: u64,
}

/// Training order for one run: file order, or a seeded shuffle of it.
pub fn training_order(train: &[LabeledImage], seed: u64, shuffle: bool) -> Cow<'_, [LabeledImage]> {
    if !shuffle {
        return Cow::Borrowed(train);
    }
    let mut order = train.to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(2);
    order.shuffle(&mut rng);
    Cow::Owned(order)
}

/// Trains one network from `config` (seeded by `config.seed`) for a single
/// epoch and evaluates it.
pub fn train_and_evaluate(
    config: &NetworkConfig,
    train: &[LabeledImage],
    test: &[LabeledImage],
    shuffle: bool,
) -> Result<(Network, RunResult)> {
    train_and_evaluate_logged(config, train, test, shuffle, |_, _| {})
}

pub fn train_and_evaluate_logged<F>(
    config: &NetworkConfig,
    train: &[LabeledImage],
    test: &[LabeledImage],
    shuffle: bool,
    log: F,
) -> Result<(Network, RunResult)>
where
    F: FnMut(usize, &PlasticityUpdate),
{
    let mut net = Network::new(config.clone())?;
    let mut rng = training_rng(config.seed);
    let order = training_order(train, config.seed, shuffle);
    let epoch = train_epoch_logged(&mut net, &order, &mut rng, log)?;
    let metrics = evaluate(&net, test);
    let result = RunResult {
        seed: config.seed,
        metrics,
        epoch,
        timesteps: net.counters.timesteps,
        plasticity_calls: net.counters.plasticity_calls,
    };
    Ok((net, result))
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentReport {
    pub runs: Vec<RunResult>,
    pub mean_overall: f64,
    pub std_overall: f64,
    pub mean_per_class: [f64; N_CLASSES],
    pub std_per_class: [f64; N_CLASSES],
    /// False with a single run: the std fields are then reported as 0.
    pub std_defined: bool,
}

impl ExperimentReport {
    pub fn from_runs(runs: Vec<RunResult>) -> Self {
        let overall: Vec<f64> = runs.iter().map(|r| r.metrics.overall_accuracy).collect();
        let (mean_overall, std_overall) = mean_std(&overall);
        let mut mean_per_class = [0.0; N_CLASSES];
        let mut std_per_class = [0.0; N_CLASSES];
        for c in 0..N_CLASSES {
            let xs: Vec<f64> = runs
                .iter()
                .map(|r| r.metrics.per_class_accuracy[c])
                .collect();
            (mean_per_class[c], std_per_class[c]) = mean_std(&xs);
        }
        Self {
            std_defined: runs.len() >= 2,
            runs,
            mean_overall,
            std_overall,
            mean_per_class,
            std_per_class,
        }
    }

    /// Console table: `avg` then one column per class, `acc` and `std` rows.
    pub fn table(&self) -> String {
        format_table(
            self.mean_overall,
            &self.mean_per_class,
            self.std_defined
                .then_some((self.std_overall, &self.std_per_class)),
        )
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("seed,avg");
        for c in 0..N_CLASSES {
            let _ = write!(out, ",{c}");
        }
        out.push('\n');
        let mut row = |name: String, avg: f64, cls: &[f64; N_CLASSES]| {
            let _ = write!(out, "{name},{avg}");
            for a in cls {
                let _ = write!(out, ",{a}");
            }
            out.push('\n');
        };
        for r in &self.runs {
            row(
                r.seed.to_string(),
                r.metrics.overall_accuracy,
                &r.metrics.per_class_accuracy,
            );
        }
        row("mean".into(), self.mean_overall, &self.mean_per_class);
        row("std".into(), self.std_overall, &self.std_per_class);
        out
    }
}

pub fn format_table(
    avg: f64,
    per_class: &[f64; N_CLASSES],
    std: Option<(f64, &[f64; N_CLASSES])>,
) -> String {
    let mut out = format!("{:<5}|{:>7}", "", "avg");
    for c in 0..N_CLASSES {
        let _ = write!(out, "|{c:>7}");
    }
    let _ = write!(out, "\n{:<5}|{avg:>7.2}", "acc");
    for a in per_class {
        let _ = write!(out, "|{a:>7.2}");
    }
    if let Some((s, cls)) = std {
        let _ = write!(out, "\n{:<5}|{s:>7.2}", "std");
        for a in cls {
            let _ = write!(out, "|{a:>7.2}");
        }
    }
    out.push('\n');
    out
}

/// Mean and sample standard deviation; std is 0 for fewer than two values.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// `n_runs` independent runs with seeds `config.seed, config.seed + 1, ...`.
pub fn run_experiment(
    config: &NetworkConfig,
    n_runs: usize,
    train: &[LabeledImage],
    test: &[LabeledImage],
    shuffle: bool,
) -> Result<(Vec<Network>, ExperimentReport)> {
    if n_runs == 0 {
        return Err(Error::Usage("n_runs must be at least 1".into()));
    }
    let seeds: Vec<u64> = (0..n_runs as u64)
        .map(|k| config.seed.wrapping_add(k))
        .collect();
    let outcomes = par::map(&seeds, |&seed| {
        let cfg = NetworkConfig {
            seed,
            ..config.clone()
        };
        train_and_evaluate(&cfg, train, test, shuffle)
    });
    let mut nets = Vec::with_capacity(n_runs);
    let mut runs = Vec::with_capacity(n_runs);
    for o in outcomes {
        let (net, run) = o?;
        nets.push(net);
        runs.push(run);
    }
    Ok((nets, ExperimentReport::from_runs(runs)))
}

/// Inclusive sampling range; `log` samples uniformly in log space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Range {
    pub lo: f64,
    pub hi: f64,
    pub log: bool,
}

impl Range {
    pub fn linear(lo: f64, hi: f64) -> Self {
        Self { lo, hi, log: false }
    }

    pub fn log(lo: f64, hi: f64) -> Self {
        Self { lo, hi, log: true }
    }

    pub fn fixed(v: f64) -> Self {
        Self::linear(v, v)
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        if self.log {
            (self.lo.ln() + u * (self.hi.ln() - self.lo.ln())).exp()
        } else {
            self.lo + u * (self.hi - self.lo)
        }
    }

    fn validate(&self, name: &str) -> Result<()> {
        let ok = self.lo.is_finite() && self.hi.is_finite() && self.lo <= self.hi;
        if !ok || (self.log && self.lo <= 0.0) {
            return Err(Error::Usage(format!(
                "bad search range for {name}: {self:?}"
            )));
        }
        Ok(())
    }
}

/// Ranges for the tuned hyperparameters. `w_max` is sampled directly;
/// `w_min` as a (non-positive) fraction of `w_max`, which keeps every
/// sampled pair valid. The quantum is shared by reward and punishment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchSpace {
    pub tau_v: Range,
    pub d: Range,
    pub w_max: Range,
    pub w_min_ratio: Range,
    pub init_scale: Range,
}

impl Default for SearchSpace {
    fn default() -> Self {
        Self {
            tau_v: Range::log(2.0, 30.0),
            d: Range::log(3e-4, 2e-2),
            w_max: Range::log(5e-3, 0.2),
            w_min_ratio: Range::linear(-1.5, 0.0),
            init_scale: Range::linear(0.0, 1.0),
        }
    }
}

impl SearchSpace {
    pub fn validate(&self) -> Result<()> {
        self.tau_v.validate("tau_v")?;
        self.d.validate("d")?;
        self.w_max.validate("w_max")?;
        self.w_min_ratio.validate("w_min_ratio")?;
        self.init_scale.validate("init_scale")?;
        if self.w_min_ratio.hi >= 1.0 || self.w_max.lo <= 0.0 {
            return Err(Error::Usage(
                "w_min_ratio must stay below 1 and w_max above 0".into(),
            ));
        }
        Ok(())
    }

    /// Draws one configuration. `init_scale` is a fraction of `w_max`.
    pub fn sample<R: Rng + ?Sized>(&self, base: &NetworkConfig, rng: &mut R) -> NetworkConfig {
        let tau_v = self.tau_v.sample(rng);
        let d = self.d.sample(rng);
        let w_max = self.w_max.sample(rng);
        let w_min = self.w_min_ratio.sample(rng) * w_max;
        let init_scale = self.init_scale.sample(rng) * w_max;
        let mut cfg = base.clone().with_quantum(d);
        cfg.tau_v = tau_v;
        cfg.resource_fn.w_max = w_max;
        cfg.resource_fn.w_min = w_min;
        cfg.init_scale = if base.init_mode == InitMode::Zero {
            0.0
        } else {
            init_scale
        };
        cfg
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Trial {
    pub index: usize,
    pub config: NetworkConfig,
    pub accuracy: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepReport {
    pub best: NetworkConfig,
    pub best_accuracy: f64,
    pub trials: Vec<Trial>,
}

impl SweepReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "trial,resource_fn,init_mode,tau_v,d_reward,d_punish,w_min,w_max,init_scale,seed,accuracy\n",
        );
        for t in &self.trials {
            let c = &t.config;
            let _ = writeln!(
                out,
                "{},{},{},{:?},{:?},{:?},{:?},{:?},{:?},{},{}",
                t.index,
                c.resource_fn.kind,
                c.init_mode,
                c.tau_v,
                c.d_reward,
                c.d_punish,
                c.resource_fn.w_min,
                c.resource_fn.w_max,
                c.init_scale,
                c.seed,
                t.accuracy
            );
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

/// Random search: `budget` configurations drawn from `space`, each trained
/// for one epoch on `train` and scored on `validation`. Trial `k` uses seed
/// `base.seed + k`, so a repeated configuration reproduces its score only
/// when compared at the same seed. The best trial wins; ties go to the
/// earliest.
pub fn sweep<R: Rng + ?Sized>(
    base: &NetworkConfig,
    space: &SearchSpace,
    budget: usize,
    rng: &mut R,
    train: &[LabeledImage],
    validation: &[LabeledImage],
) -> Result<SweepReport> {
    if budget == 0 {
        return Err(Error::Usage("sweep budget must be at least 1".into()));
    }
    if train.is_empty() || validation.is_empty() {
        return Err(Error::Usage(
            "sweep needs non-empty train and validation sets".into(),
        ));
    }
    space.validate()?;
    let configs: Vec<NetworkConfig> = (0..budget)
        .map(|k| NetworkConfig {
            seed: base.seed.wrapping_add(k as u64),
            ..space.sample(base, rng)
        })
        .collect();
    score_configs(configs, train, validation)
}

/// Scores explicit configurations (no sampling); shares the sweep's
/// trial bookkeeping.
pub fn score_configs(
    configs: Vec<NetworkConfig>,
    train: &[LabeledImage],
    validation: &[LabeledImage],
) -> Result<SweepReport> {
    if configs.is_empty() {
        return Err(Error::Usage("nothing to score".into()));
    }
    let indexed: Vec<(usize, NetworkConfig)> = configs.into_iter().enumerate().collect();
    let scored = par::map(&indexed, |(i, cfg)| {
        train_and_evaluate(cfg, train, validation, false).map(|(_, r)| Trial {
            index: *i,
            config: cfg.clone(),
            accuracy: r.metrics.overall_accuracy,
        })
    });
    let trials = scored.into_iter().collect::<Result<Vec<_>>>()?;
    let best = trials.iter().fold(
        &trials[0],
        |b, t| if t.accuracy > b.accuracy { t } else { b },
    );
    Ok(SweepReport {
        best: best.config.clone(),
        best_accuracy: best.accuracy,
        trials,
    })
}

/// Re-scores the `k` best trials of `report` on (typically larger) data and
/// returns the result; trial indices refer back to the original sweep.
pub fn confirm_top(
    report: &SweepReport,
    k: usize,
    train: &[LabeledImage],
    validation: &[LabeledImage],
) -> Result<SweepReport> {
    let mut ranked: Vec<&Trial> = report.trials.iter().collect();
    ranked.sort_by(|a, b| {
        b.accuracy
            .total_cmp(&a.accuracy)
            .then(a.index.cmp(&b.index))
    });
    ranked.truncate(k);
    let configs = ranked.iter().map(|t| t.config.clone()).collect();
    let mut confirmed = score_configs(configs, train, validation)?;
    for (t, src) in confirmed.trials.iter_mut().zip(&ranked) {
        t.index = src.index;
    }
    Ok(confirmed)
}

/// Splits the canonical training file into a leading training subset and a
/// trailing validation block, so sweeps never look at the test split.
pub fn sweep_split(train: &ImageSet, n_train: usize, n_validation: usize) -> (ImageSet, ImageSet) {
    let n = train.len();
    let val_start = n.saturating_sub(n_validation);
    (
        train.slice(0, n_train.min(val_start)),
        train.slice(val_start, n_validation),
    )
}

pub fn describe(config: &NetworkConfig) -> String {
    format!(
        "{}+{} tau_v={:.3} d={:.5}/{:.5} w=[{:.4},{:.4}] init_scale={:.4}",
        match config.resource_fn.kind {
            ResourceKind::Classic => "classic",
            ResourceKind::Linear => "linear",
        },
        config.init_mode,
        config.tau_v,
        config.d_reward,
        config.d_punish,
        config.resource_fn.w_min,
        config.resource_fn.w_max,
        config.init_scale
    )
}
