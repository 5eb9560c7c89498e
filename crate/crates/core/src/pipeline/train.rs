use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use log::info;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::{artifact_hash, Featurizer, ModelChoice, PreparedFeaturizer, TrainConfig, TrainMode};
use crate::artifact::{write_atomic, write_dir_atomic};
use crate::locate::{estimate_position, summarize, MetricsSummary};
use crate::models::{ModelGraph, WeightStore};
use crate::nn::{halving_lr, kd_loss, AdamW, Chw, Mode, Network, Tensor};
use crate::signalgen::{sub_seed, Dataset, Split};
use crate::{Error, Result};

pub const CHECKPOINT_FILE: &str = "model.wkck";
pub const RECORD_FILE: &str = "record.toml";
const EVAL_BATCH: usize = 32;
const TAG_INIT: u64 = 20;
const TAG_SHUFFLE: u64 = 21;

/// Featurized examples of one split, concatenated in manifest order.
#[derive(Debug, Clone)]
pub struct FeatureSet {
    pub shape: Chw,
    pub inputs: Vec<f32>,
    pub labels: Vec<usize>,
}

impl FeatureSet {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    fn item_len(&self) -> usize {
        self.shape.iter().product()
    }

    /// Stacks the examples at `idx` into a batch.
    pub fn batch(&self, idx: &[usize]) -> Result<Tensor<f32>> {
        let n = self.item_len();
        let mut data = Vec::with_capacity(idx.len() * n);
        for &i in idx {
            data.extend_from_slice(&self.inputs[i * n..(i + 1) * n]);
        }
        let [c, h, w] = self.shape;
        Tensor::from_vec([idx.len(), c, h, w], data)
    }
}

pub fn featurize_split(dataset: &Dataset, split: Split, featurizer: &PreparedFeaturizer) -> Result<FeatureSet> {
    let shape = featurizer.input_shape(dataset.manifest.window_len)?;
    let recs = dataset.load_split(split)?;
    let mut inputs = Vec::with_capacity(recs.len() * shape.iter().product::<usize>());
    let mut labels = Vec::with_capacity(recs.len());
    for r in &recs {
        inputs.extend(featurizer.apply(&r.samples)?.values);
        labels.push(r.label);
    }
    Ok(FeatureSet { shape, inputs, labels })
}

/// A frozen network queried in evaluation mode.
pub struct Teacher<'a> {
    pub net: &'a mut Network<f32>,
}

/// Trains `net` in place; returns the mean training loss of each epoch.
///
/// Batches follow a permutation seeded by `(seed, epoch)`. A trailing batch
/// of one example is skipped, since batch statistics need two.
pub fn fit(
    net: &mut Network<f32>,
    train: &FeatureSet,
    config: &TrainConfig,
    mut teacher: Option<Teacher<'_>>,
    label: &str,
) -> Result<Vec<f64>> {
    if train.len() < 2 {
        return Err(Error::EmptySet(format!("{} training examples", train.len())));
    }
    let params = config.distill_params();
    let mut opt = AdamW::new(config.optimizer);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut losses = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        let lr = halving_lr(config.lr0, config.lr_halving_period, epoch);
        order.sort_unstable();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(sub_seed(config.seed, &[TAG_SHUFFLE, epoch as u64])));
        let (mut sum, mut count) = (0.0, 0usize);
        for (b, idx) in order.chunks(config.batch_size).enumerate() {
            if idx.len() < 2 {
                continue;
            }
            let x = train.batch(idx)?;
            let labels: Vec<usize> = idx.iter().map(|&i| train.labels[i]).collect();
            let soft = match teacher.as_mut() {
                Some(t) => Some(t.net.forward(&x, Mode::Eval)?),
                None => None,
            };
            net.zero_grad();
            let logits = net.forward(&x, Mode::Train)?;
            let loss = kd_loss(&logits, soft.as_ref(), &labels, params)?;
            if !loss.total.is_finite() {
                return Err(Error::Divergence {
                    epoch,
                    batch: b,
                    loss: loss.total,
                });
            }
            net.backward(&loss.grad)?;
            opt.step(&mut net.params_mut(), lr)?;
            sum += loss.total * idx.len() as f64;
            count += idx.len();
        }
        let mean = sum / count as f64;
        info!("event=epoch run={label} epoch={epoch} lr={lr:e} loss={mean:.6}");
        losses.push(mean);
    }
    Ok(losses)
}

/// Logits of every example, in order.
pub fn predict(net: &mut Network<f32>, set: &FeatureSet) -> Result<Vec<Vec<f64>>> {
    let idx: Vec<usize> = (0..set.len()).collect();
    let mut out = Vec::with_capacity(set.len());
    for chunk in idx.chunks(EVAL_BATCH) {
        let y = net.forward(&set.batch(chunk)?, Mode::Eval)?;
        out.extend((0..chunk.len()).map(|b| y.item(b).iter().map(|&v| v as f64).collect()));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub split: Split,
    pub examples: usize,
    pub accuracy: f64,
    /// Mean cross-entropy of the labels.
    pub ce: f64,
    pub metrics: MetricsSummary,
}

impl Evaluation {
    pub fn mde(&self) -> f64 {
        self.metrics.mde
    }
}

pub fn evaluate(net: &mut Network<f32>, set: &FeatureSet, split: Split, coords: &[(f64, f64)]) -> Result<Evaluation> {
    if set.is_empty() {
        return Err(Error::EmptySet(format!("split {split} has no examples")));
    }
    let logits = predict(net, set)?;
    let mut estimates = Vec::with_capacity(set.len());
    let (mut correct, mut ce) = (0usize, 0.0);
    for (z, &label) in logits.iter().zip(&set.labels) {
        let argmax = z
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .unwrap_or(0);
        correct += usize::from(argmax == label);
        let e = estimate_position(z, coords, coords[label])?;
        ce -= e.confidences[label].max(f64::MIN_POSITIVE).ln();
        estimates.push(e);
    }
    let n = set.len() as f64;
    Ok(Evaluation {
        split,
        examples: set.len(),
        accuracy: correct as f64 / n,
        ce: ce / n,
        metrics: summarize(&estimates, None)?,
    })
}

/// Written next to each checkpoint once training completes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub run: String,
    pub config: TrainConfig,
    pub dataset_hash: String,
    pub checkpoint: PathBuf,
    pub epoch_losses: Vec<f64>,
    pub train_accuracy: f64,
    pub train_ce: f64,
    pub evaluations: Vec<Evaluation>,
    pub wall_clock_s: f64,
}

impl ExperimentRecord {
    pub fn evaluation(&self, split: Split) -> Option<&Evaluation> {
        self.evaluations.iter().find(|e| e.split == split)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&text).map_err(|e| Error::format("experiment record", e.to_string()))
    }
}

fn coords(dataset: &Dataset) -> Vec<(f64, f64)> {
    dataset.manifest.points.iter().map(|p| p.coord).collect()
}

/// Builds the graph for `model` on this dataset and featurizer.
pub fn model_graph(dataset: &Dataset, featurizer: &PreparedFeaturizer, model: ModelChoice) -> Result<ModelGraph> {
    let shape = featurizer.input_shape(dataset.manifest.window_len)?;
    model.graph(dataset.manifest.num_classes(), shape)
}

/// Loads a checkpoint after checking it was trained on this dataset and featurizer.
pub fn load_checkpoint(
    dataset: &Dataset,
    featurizer: Featurizer,
    graph: &ModelGraph,
    path: &Path,
) -> Result<Network<f32>> {
    let store = WeightStore::read(path)?;
    let want = artifact_hash(&dataset.manifest.config_hash, featurizer);
    if store.config_hash != want {
        return Err(Error::Incompatible(format!(
            "{} was trained on another dataset or featurizer (hash {}, expected {want})",
            path.display(),
            store.config_hash
        )));
    }
    let mut net = graph.build::<f32>(&mut ChaCha8Rng::seed_from_u64(0))?;
    store.load_into(graph, &mut net)?;
    Ok(net)
}

/// Test splits of the dataset that hold examples.
pub fn test_splits(dataset: &Dataset) -> Vec<Split> {
    [Split::TestDay1, Split::TestDay2, Split::TestDay3]
        .into_iter()
        .filter(|&s| dataset.manifest.split(s).next().is_some())
        .collect()
}

/// Evaluates a trained network on every nonempty test split.
pub fn evaluate_all(
    dataset: &Dataset,
    featurizer: &PreparedFeaturizer,
    net: &mut Network<f32>,
) -> Result<Vec<Evaluation>> {
    let coords = coords(dataset);
    test_splits(dataset)
        .into_iter()
        .map(|split| evaluate(net, &featurize_split(dataset, split, featurizer)?, split, &coords))
        .collect()
}

/// Trains one model on the day-1 training split, evaluates it on the test
/// splits and writes `model.wkck` plus `record.toml` into `out`.
pub fn train(dataset: &Dataset, config: &TrainConfig, out: &Path, overwrite: bool) -> Result<ExperimentRecord> {
    config.validate()?;
    crate::artifact::ensure_writable(out, overwrite)?;
    let start = Instant::now();
    let run = out.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let featurizer = config.featurizer.prepare()?;
    let graph = model_graph(dataset, &featurizer, config.model)?;
    let mut teacher = match &config.mode {
        TrainMode::Plain => None,
        TrainMode::Distill {
            checkpoint,
            teacher_scale,
        } => {
            let tg = model_graph(dataset, &featurizer, ModelChoice::Teacher { scale: *teacher_scale })?;
            Some(load_checkpoint(dataset, config.featurizer, &tg, checkpoint)?)
        }
    };
    let train_set = featurize_split(dataset, Split::Train, &featurizer)?;
    info!(
        "event=train_start run={run} model={} featurizer={} mode={} seed={} examples={} params={}",
        config.model,
        config.featurizer,
        if teacher.is_some() { "distill" } else { "plain" },
        config.seed,
        train_set.len(),
        graph.param_count()
    );
    let mut net = graph.build::<f32>(&mut ChaCha8Rng::seed_from_u64(sub_seed(config.seed, &[TAG_INIT])))?;
    let losses = fit(&mut net, &train_set, config, teacher.as_mut().map(|net| Teacher { net }), &run)?;
    let train_eval = evaluate(&mut net, &train_set, Split::Train, &coords(dataset))?;
    let evaluations = evaluate_all(dataset, &featurizer, &mut net)?;
    let hash = artifact_hash(&dataset.manifest.config_hash, config.featurizer);
    let store = WeightStore::from_network(&graph, &net, &hash);
    let record = ExperimentRecord {
        run: run.clone(),
        config: config.clone(),
        dataset_hash: dataset.manifest.config_hash.clone(),
        checkpoint: out.join(CHECKPOINT_FILE),
        epoch_losses: losses,
        train_accuracy: train_eval.accuracy,
        train_ce: train_eval.ce,
        evaluations,
        wall_clock_s: start.elapsed().as_secs_f64(),
    };
    let text = toml::to_string(&record).map_err(|e| Error::format("experiment record", e.to_string()))?;
    write_dir_atomic(out, overwrite, |dir| {
        store.write(&dir.join(CHECKPOINT_FILE))?;
        write_atomic(&dir.join(RECORD_FILE), text.as_bytes())
    })?;
    for e in &record.evaluations {
        info!(
            "event=evaluated run={run} split={} accuracy={:.4} mde={:.4} std={:.4}",
            e.split, e.accuracy, e.metrics.mde, e.metrics.std
        );
    }
    Ok(record)
}
