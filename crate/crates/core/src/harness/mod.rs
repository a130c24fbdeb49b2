//! Training and evaluation: example windows, the Adam training loop, top-k
//! and per-beam statistics, beam heatmaps and the per-region breakdown.

mod report;

pub use report::{emit_report, EPOCHS_HEADER, HEATMAP_HEADER, PERBEAM_HEADER, REGIONS_HEADER};

use std::collections::{BTreeMap, HashMap};
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::beams::{LabeledGrid, Link};
use crate::dataset::TrajectorySequence;
use crate::derive_seed;
use crate::error::{Error, Result};
use crate::scene::GridIndex;
use crate::seqmodel::{AdamState, Example, Mode, ModelParams, ModelShape, PositionNormalizer, Task};

/// Network hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    pub gru_layers: usize,
    pub hidden: usize,
    pub dropout: f64,
    pub embedding_dim: usize,
    /// Must equal `max(|F|, |P|)`.
    pub classifier_dim: usize,
    /// Must equal `|F| + |P|`.
    pub embedding_vocab: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            gru_layers: 2,
            hidden: 20,
            dropout: 0.2,
            embedding_dim: 50,
            classifier_dim: 256,
            embedding_vocab: 320,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// Input steps per example; the label comes from the step after.
    pub window: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 100,
            batch_size: 256,
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            window: 7,
        }
    }
}

/// One example per sequence: the first `window` steps as input, the next
/// step's serving-node beam and link as labels.
pub fn make_examples(data: &[TrajectorySequence], n_bs_beams: usize, window: usize) -> Result<Vec<Example>> {
    data.iter()
        .map(|seq| {
            if window == 0 || window + 1 > seq.steps.len() {
                return Err(Error::domain(format!(
                    "window {window} needs {} steps, sequence {} has {}",
                    window + 1,
                    seq.seq_id,
                    seq.steps.len()
                )));
            }
            let input = &seq.steps[..window];
            let target = &seq.steps[window];
            let beams = input
                .iter()
                .map(|s| s.serving_beam(n_bs_beams))
                .collect::<Option<Vec<_>>>()
                .ok_or_else(|| Error::domain(format!("sequence {} has an unserved step", seq.seq_id)))?;
            let beam_label = target
                .serving_codebook_beam()
                .ok_or_else(|| Error::domain(format!("sequence {} has an unserved target", seq.seq_id)))?;
            Ok(Example {
                seq_id: seq.seq_id,
                positions: input.iter().map(|s| s.position).collect(),
                beams,
                beam_label,
                link_label: target.link_bit(),
                target_position: target.position,
            })
        })
        .collect()
}

/// Index of the label among logits sorted descending, ties to lower index.
fn label_rank(logits: &[f64], label: usize) -> usize {
    let v = logits[label];
    logits
        .iter()
        .enumerate()
        .filter(|(i, x)| **x > v || (**x == v && *i < label))
        .count()
}

/// Fraction of examples whose label is among the `k` largest logits.
pub fn topk_accuracy(logits: &[Vec<f64>], labels: &[usize], k: usize) -> Result<f64> {
    if logits.len() != labels.len() {
        return Err(Error::domain("logits and labels differ in length"));
    }
    if logits.is_empty() {
        return Ok(0.0);
    }
    let c = logits[0].len();
    if k == 0 || k > c {
        return Err(Error::domain(format!("k = {k} outside 1..={c}")));
    }
    let hits = logits
        .iter()
        .zip(labels)
        .filter(|(l, y)| label_rank(l, **y) < k)
        .count();
    Ok(hits as f64 / labels.len() as f64)
}

/// Highest logit, ties to the lower index.
pub fn argmax(logits: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in logits.iter().enumerate() {
        if *v > logits[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeamStat {
    pub beam: usize,
    pub count: usize,
    pub mean_pred: f64,
    /// Sample standard deviation over `sqrt(count)`; 0 for a single example.
    pub stderr: f64,
}

/// Mean and standard error of the predicted index for every groundtruth
/// index that occurs, in increasing groundtruth order.
pub fn per_beam_stats(predictions: &[usize], labels: &[usize]) -> Result<Vec<BeamStat>> {
    if predictions.len() != labels.len() {
        return Err(Error::domain("predictions and labels differ in length"));
    }
    let mut by_beam: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for (p, g) in predictions.iter().zip(labels) {
        by_beam.entry(*g).or_default().push(*p as f64);
    }
    Ok(by_beam
        .into_iter()
        .map(|(beam, preds)| {
            let n = preds.len() as f64;
            let mean = preds.iter().sum::<f64>() / n;
            let stderr = if preds.len() < 2 {
                0.0
            } else {
                let var = preds.iter().map(|p| (p - mean).powi(2)).sum::<f64>() / (n - 1.0);
                (var / n).sqrt()
            };
            BeamStat {
                beam,
                count: preds.len(),
                mean_pred: mean,
                stderr,
            }
        })
        .collect())
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(xs: &[f64], ys: &[f64]) -> f64 {
    fn ranks(v: &[f64]) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|a, b| v[*a].total_cmp(&v[*b]));
        let mut r = vec![0.0; v.len()];
        let mut i = 0;
        while i < idx.len() {
            let mut j = i;
            while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
                j += 1;
            }
            let avg = (i + j) as f64 / 2.0;
            for k in i..=j {
                r[idx[k]] = avg;
            }
            i = j + 1;
        }
        r
    }
    let (rx, ry) = (ranks(xs), ranks(ys));
    let n = xs.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    if sxx == 0.0 || syy == 0.0 {
        return 0.0;
    }
    sxy / (sxx * syy).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatmapCell {
    pub x: f64,
    pub y: f64,
    pub gt_beam: usize,
    pub pred_beam: usize,
    /// Modal groundtruth link bit.
    pub link: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionAccuracy {
    pub region: String,
    pub count: usize,
    pub beam_top1: f64,
    pub link_accuracy: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub n_examples: usize,
    /// k -> accuracy
    pub topk: BTreeMap<usize, f64>,
    pub link_accuracy: f64,
    /// Accuracy of always predicting the more frequent link.
    pub majority_link_fraction: f64,
    pub per_beam: Vec<BeamStat>,
    pub heatmap: Vec<HeatmapCell>,
    pub regions: Vec<RegionAccuracy>,
}

impl Metrics {
    pub fn top(&self, k: usize) -> f64 {
        self.topk.get(&k).copied().unwrap_or(0.0)
    }
}

/// Smallest value among those with the highest count.
fn mode_of(values: &[usize]) -> usize {
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for v in values {
        *counts.entry(*v).or_default() += 1;
    }
    let mut best = (0, 0);
    for (v, c) in counts {
        if c > best.1 {
            best = (v, c);
        }
    }
    best.0
}

/// Whether a grid cell sits within `band` x-y cells of a cell served by a
/// different link.
fn near_link_boundary(labels: &LabeledGrid, idx: GridIndex, band: usize) -> bool {
    let [nx, ny, _] = labels.grid.counts;
    let own = labels.get(idx).link;
    let x0 = idx.ix.saturating_sub(band);
    let y0 = idx.iy.saturating_sub(band);
    for ix in x0..=(idx.ix + band).min(nx - 1) {
        for iy in y0..=(idx.iy + band).min(ny - 1) {
            if labels.get(GridIndex::new(ix, iy, idx.iz)).link != own {
                return true;
            }
        }
    }
    false
}

/// Validation metrics for a beam model and a link model.
pub fn evaluate(
    beam_model: &ModelParams,
    link_model: &ModelParams,
    examples: &[Example],
    labels: &LabeledGrid,
    boundary_band: usize,
) -> Result<Metrics> {
    if examples.is_empty() {
        return Ok(Metrics::default());
    }
    let beam_logits = beam_model.predict_all(examples)?;
    let link_logits = link_model.predict_all(examples)?;
    let beam_labels: Vec<usize> = examples.iter().map(|e| e.beam_label).collect();
    let link_labels: Vec<usize> = examples.iter().map(|e| e.link_label).collect();
    let beam_pred: Vec<usize> = beam_logits.iter().map(|l| argmax(l)).collect();
    let link_pred: Vec<usize> = link_logits.iter().map(|l| argmax(l)).collect();

    let classes = beam_model.shape.classes;
    let mut topk = BTreeMap::new();
    for k in [1, 3, 5] {
        if k <= classes {
            topk.insert(k, topk_accuracy(&beam_logits, &beam_labels, k)?);
        }
    }
    let n = examples.len() as f64;
    let link_accuracy = link_pred.iter().zip(&link_labels).filter(|(a, b)| a == b).count() as f64 / n;
    let direct = link_labels.iter().filter(|l| **l == 1).count() as f64 / n;
    let majority_link_fraction = direct.max(1.0 - direct);

    let per_beam = per_beam_stats(&beam_pred, &beam_labels)?;

    let mut cells: BTreeMap<(usize, usize), (Vec<usize>, Vec<usize>, Vec<usize>)> = BTreeMap::new();
    let mut regions: BTreeMap<&str, (usize, usize, usize)> = BTreeMap::new();
    for (i, ex) in examples.iter().enumerate() {
        let idx = labels.grid.index_of(ex.target_position, 1e-6).ok_or_else(|| {
            Error::domain(format!("sequence {} target is not a grid point", ex.seq_id))
        })?;
        let e = cells.entry((idx.ix, idx.iy)).or_default();
        e.0.push(beam_labels[i]);
        e.1.push(beam_pred[i]);
        e.2.push(link_labels[i]);

        let region = if near_link_boundary(labels, idx, boundary_band) {
            "boundary"
        } else if labels.get(idx).link == Link::Direct {
            "los"
        } else {
            "nlos"
        };
        let r = regions.entry(region).or_default();
        r.0 += 1;
        r.1 += usize::from(beam_pred[i] == beam_labels[i]);
        r.2 += usize::from(link_pred[i] == link_labels[i]);
    }
    let heatmap = cells
        .into_iter()
        .map(|((ix, iy), (gt, pred, link))| {
            let p = labels.grid.position(GridIndex::new(ix, iy, 0))?;
            Ok(HeatmapCell {
                x: p.x,
                y: p.y,
                gt_beam: mode_of(&gt),
                pred_beam: mode_of(&pred),
                link: mode_of(&link),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let regions = ["los", "nlos", "boundary"]
        .into_iter()
        .filter_map(|name| {
            regions.get(name).map(|(c, b, l)| RegionAccuracy {
                region: name.to_string(),
                count: *c,
                beam_top1: *b as f64 / *c as f64,
                link_accuracy: *l as f64 / *c as f64,
            })
        })
        .collect();

    Ok(Metrics {
        n_examples: examples.len(),
        topk,
        link_accuracy,
        majority_link_fraction,
        per_beam,
        heatmap,
        regions,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Mean beam-task loss over the epoch's minibatches (train mode).
    pub train_loss: f64,
    pub link_train_loss: f64,
    pub val_top1: f64,
    pub val_top3: f64,
    pub val_top5: f64,
    pub link_acc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainRun {
    pub model: ModelConfig,
    pub training: TrainConfig,
    pub seed: u64,
    pub n_train: usize,
    pub n_val: usize,
    /// Before any update; losses are eval-mode means over the training set.
    pub initial: EpochRecord,
    /// Epochs 1..=n.
    pub epochs: Vec<EpochRecord>,
    /// Epoch of the best beam-task validation top-1 (0 = initial model).
    pub best_epoch: usize,
    pub wall_seconds: f64,
}

pub struct TrainOutcome {
    pub run: TrainRun,
    pub beam_final: ModelParams,
    pub beam_best: ModelParams,
    pub link_final: ModelParams,
}

pub struct Trainer<'a> {
    pub model: &'a ModelConfig,
    pub training: &'a TrainConfig,
    pub n_bs_beams: usize,
    pub n_ris_beams: usize,
    pub seed: u64,
}

struct TaskState {
    model: ModelParams,
    adam: AdamState,
    seed: u64,
}

impl TaskState {
    fn new(shape: ModelShape, task: Task, cfg: &ModelConfig, tc: &TrainConfig, norm: PositionNormalizer, seed: u64) -> Result<Self> {
        let model = ModelParams::init(shape, task, cfg.dropout, norm, derive_seed(seed, 1))?;
        let adam = AdamState::new(model.weights.len(), tc.learning_rate, tc.beta1, tc.beta2, tc.epsilon);
        Ok(TaskState { model, adam, seed })
    }

    fn epoch(&mut self, data: &[Example], batch_size: usize, epoch: usize) -> Result<f64> {
        let mut order: Vec<usize> = (0..data.len()).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(derive_seed(self.seed, 1000 + epoch as u64)));
        let mut total = 0.0;
        for (b, idx) in order.chunks(batch_size).enumerate() {
            let batch: Vec<&Example> = idx.iter().map(|i| &data[*i]).collect();
            let mode = Mode::Train {
                seed: derive_seed(self.seed, ((epoch as u64) << 32) | b as u64),
            };
            let (loss, grad) = self.model.loss_and_grad(&batch, mode)?;
            if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                return Err(Error::Divergence { epoch, batch: b, loss });
            }
            self.adam.update(&mut self.model.weights, &grad)?;
            total += loss * batch.len() as f64;
        }
        Ok(total / data.len() as f64)
    }
}

impl Trainer<'_> {
    pub fn shape(&self, task: Task) -> ModelShape {
        ModelShape {
            vocab: self.n_bs_beams + self.n_ris_beams,
            embed_dim: self.model.embedding_dim,
            hidden: self.model.hidden,
            layers: self.model.gru_layers,
            classes: match task {
                Task::Beam => self.n_bs_beams.max(self.n_ris_beams),
                Task::Link => 2,
            },
            window: self.training.window,
        }
    }

    fn record(&self, epoch: usize, beam: &ModelParams, link: &ModelParams, losses: (f64, f64), val: &[Example]) -> Result<EpochRecord> {
        let (mut top, mut link_acc) = ([0.0; 3], 0.0);
        if !val.is_empty() {
            let logits = beam.predict_all(val)?;
            let labels: Vec<usize> = val.iter().map(|e| e.beam_label).collect();
            for (slot, k) in top.iter_mut().zip([1, 3, 5]) {
                *slot = topk_accuracy(&logits, &labels, k.min(beam.shape.classes))?;
            }
            let ll = link.predict_all(val)?;
            link_acc = ll
                .iter()
                .zip(val)
                .filter(|(l, e)| argmax(l) == e.link_label)
                .count() as f64
                / val.len() as f64;
        }
        Ok(EpochRecord {
            epoch,
            train_loss: losses.0,
            link_train_loss: losses.1,
            val_top1: top[0],
            val_top3: top[1],
            val_top5: top[2],
            link_acc,
        })
    }

    /// Trains the beam and link models side by side, one epoch each per
    /// round, logging validation metrics after every round.
    pub fn train(
        &self,
        train: &[Example],
        val: &[Example],
        mut on_epoch: impl FnMut(&EpochRecord),
    ) -> Result<TrainOutcome> {
        if train.is_empty() {
            return Err(Error::domain("training split is empty"));
        }
        if self.training.batch_size == 0 {
            return Err(Error::domain("batch size must be positive"));
        }
        let started = Instant::now();
        let norm = PositionNormalizer::fit(train.iter().flat_map(|e| &e.positions))?;
        let mut beam = TaskState::new(self.shape(Task::Beam), Task::Beam, self.model, self.training, norm, derive_seed(self.seed, 11))?;
        let mut link = TaskState::new(self.shape(Task::Link), Task::Link, self.model, self.training, norm, derive_seed(self.seed, 12))?;

        let all: Vec<&Example> = train.iter().collect();
        let initial = self.record(
            0,
            &beam.model,
            &link.model,
            (beam.model.loss(&all, Mode::Eval)?, link.model.loss(&all, Mode::Eval)?),
            val,
        )?;
        let mut best = (initial.val_top1, 0usize, beam.model.clone());
        let mut epochs = Vec::with_capacity(self.training.epochs);
        for epoch in 1..=self.training.epochs {
            let bl = beam.epoch(train, self.training.batch_size, epoch)?;
            let ll = link.epoch(train, self.training.batch_size, epoch)?;
            let rec = self.record(epoch, &beam.model, &link.model, (bl, ll), val)?;
            if rec.val_top1 > best.0 {
                best = (rec.val_top1, epoch, beam.model.clone());
            }
            on_epoch(&rec);
            epochs.push(rec);
        }
        let run = TrainRun {
            model: self.model.clone(),
            training: self.training.clone(),
            seed: self.seed,
            n_train: train.len(),
            n_val: val.len(),
            initial,
            epochs,
            best_epoch: best.1,
            wall_seconds: started.elapsed().as_secs_f64(),
        };
        Ok(TrainOutcome {
            run,
            beam_final: beam.model,
            beam_best: best.2,
            link_final: link.model,
        })
    }
}

/// Training-set top-1 accuracy in eval mode.
pub fn train_accuracy(model: &ModelParams, examples: &[Example]) -> Result<f64> {
    let logits = model.predict_all(examples)?;
    let labels: Vec<usize> = examples.iter().map(|e| model.task.label(e)).collect();
    topk_accuracy(&logits, &labels, 1)
}

/// Fraction of adjacent visited heatmap cells (4-neighborhood) sharing a
/// link whose groundtruth beams differ by at most `tol`.
pub fn heatmap_smoothness(cells: &[HeatmapCell], spacing: [f64; 2], tol: usize) -> Option<f64> {
    let key = |c: &HeatmapCell| ((c.x / spacing[0]).round() as i64, (c.y / spacing[1]).round() as i64);
    let map: HashMap<(i64, i64), &HeatmapCell> = cells.iter().map(|c| (key(c), c)).collect();
    let (mut pairs, mut ok) = (0usize, 0usize);
    for c in cells {
        let (x, y) = key(c);
        for n in [(x + 1, y), (x, y + 1)] {
            if let Some(o) = map.get(&n) {
                if o.link == c.link {
                    pairs += 1;
                    ok += usize::from(o.gt_beam.abs_diff(c.gt_beam) <= tol);
                }
            }
        }
    }
    (pairs > 0).then(|| ok as f64 / pairs as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Step;
    use crate::geometry::Vec3;

    #[test]
    fn topk_examples() {
        let logits = vec![
            vec![0.1, 0.9, 0.3, 0.2, 0.0], // label 1 ranked 1st
            vec![0.5, 0.4, 0.3, 0.2, 0.1], // label 3 ranked 4th
            vec![0.2, 0.9, 0.5, 0.1, 0.0], // label 2 ranked 2nd
        ];
        let labels = vec![1, 3, 2];
        assert!((topk_accuracy(&logits, &labels, 3).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(topk_accuracy(&logits, &labels, 5).unwrap(), 1.0);
        assert!(topk_accuracy(&logits, &labels, 6).is_err());

        let onehot: Vec<Vec<f64>> = labels
            .iter()
            .map(|l| (0..5).map(|i| if i == *l { 1.0 } else { 0.0 }).collect())
            .collect();
        assert_eq!(topk_accuracy(&onehot, &labels, 1).unwrap(), 1.0);
    }

    #[test]
    fn topk_ties_go_to_lower_index() {
        let logits = vec![vec![1.0, 1.0, 1.0]];
        assert_eq!(topk_accuracy(&logits, &[0], 1).unwrap(), 1.0);
        assert_eq!(topk_accuracy(&logits, &[1], 1).unwrap(), 0.0);
        assert_eq!(topk_accuracy(&logits, &[2], 2).unwrap(), 0.0);
        assert_eq!(argmax(&logits[0]), 0);
    }

    #[test]
    fn per_beam_examples() {
        let s = per_beam_stats(&[4, 4, 4], &[4, 4, 4]).unwrap();
        assert_eq!(s, vec![BeamStat { beam: 4, count: 3, mean_pred: 4.0, stderr: 0.0 }]);
        let s = per_beam_stats(&[49, 51], &[50, 50]).unwrap();
        assert_eq!(s[0].mean_pred, 50.0);
        assert!((s[0].stderr - 1.0).abs() < 1e-15);
        let s = per_beam_stats(&[7, 2], &[1, 3]).unwrap();
        assert_eq!(s.iter().map(|b| b.beam).collect::<Vec<_>>(), vec![1, 3]);
        assert_eq!(s[0].stderr, 0.0);
    }

    #[test]
    fn spearman_basics() {
        assert!((spearman(&[1.0, 2.0, 3.0], &[10.0, 20.0, 30.0]) - 1.0).abs() < 1e-15);
        assert!((spearman(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]) + 1.0).abs() < 1e-15);
        assert!(spearman(&[1.0, 2.0, 3.0, 4.0], &[1.0, 3.0, 2.0, 4.0]) < 1.0);
    }

    fn seq(n: usize) -> TrajectorySequence {
        TrajectorySequence {
            seq_id: 5,
            steps: (0..n)
                .map(|i| Step {
                    position: Vec3::new(i as f64, 0.0, 40.0),
                    link: if i < 8 { Link::Direct } else { Link::RisAssisted },
                    beam_bs: (i < 8).then_some(i),
                    beam_ris: Some(20 + i),
                })
                .collect(),
        }
    }

    #[test]
    fn make_examples_windows() {
        let data = vec![seq(10)];
        let ex = &make_examples(&data, 32, 7).unwrap()[0];
        assert_eq!(ex.beams, (0..7).collect::<Vec<_>>());
        assert_eq!(ex.beam_label, 7);
        assert_eq!(ex.link_label, 1);
        assert_eq!(ex.target_position, Vec3::new(7.0, 0.0, 40.0));

        let ex = &make_examples(&data, 32, 9).unwrap()[0];
        assert_eq!(ex.beams[8], 32 + 28);
        assert_eq!(ex.beam_label, 29);
        assert_eq!(ex.link_label, 0);

        assert!(matches!(make_examples(&data, 32, 10), Err(Error::Domain(_))));
    }

    #[test]
    fn mode_prefers_smaller_on_ties() {
        assert_eq!(mode_of(&[3, 1, 3, 1, 2]), 1);
        assert_eq!(mode_of(&[5, 5, 1]), 5);
    }
}
