//! GRU sequence classifier.
//!
//! Each step is encoded as `[standardized position (3); beam embedding (a)]`,
//! run through stacked GRU layers (inverted dropout between layers while
//! training), and the top layer's last state feeds an affine head producing
//! class logits. Training minimizes mean cross-entropy with full
//! backpropagation through time.

mod adam;
mod checkpoint;
mod gru;

pub use adam::AdamState;
pub use checkpoint::{read_checkpoint, write_checkpoint, CHECKPOINT_VERSION};
pub use gru::{gru_cell, sigmoid, GruLayer, GruLayerGrad, GruStep};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Vec3;
use gru::{gemv_acc, gemv_t_acc, outer_acc};

/// Which label a model predicts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    /// Best beam of the serving node, within that node's codebook.
    Beam,
    /// 1 = direct link, 0 = RIS-assisted.
    Link,
}

impl Task {
    pub fn label(self, ex: &Example) -> usize {
        match self {
            Task::Beam => ex.beam_label,
            Task::Link => ex.link_label,
        }
    }
}

/// One supervised window cut from a trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub seq_id: u64,
    pub positions: Vec<Vec3>,
    /// Joint-vocabulary serving beams of the input steps.
    pub beams: Vec<usize>,
    pub beam_label: usize,
    pub link_label: usize,
    /// Position of the step being predicted.
    pub target_position: Vec3,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelShape {
    /// Embedding vocabulary, `|F| + |P|`.
    pub vocab: usize,
    pub embed_dim: usize,
    pub hidden: usize,
    pub layers: usize,
    pub classes: usize,
    /// Input steps per example.
    pub window: usize,
}

/// Named contiguous slice of the flat parameter vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamGroup {
    pub name: String,
    pub offset: usize,
    pub len: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct LayerOffsets {
    w_x: usize,
    w_h: usize,
    b: usize,
    input: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Layout {
    layers: Vec<LayerOffsets>,
    head_w: usize,
    head_b: usize,
    total: usize,
}

impl ModelShape {
    pub fn validate(&self) -> Result<()> {
        if self.vocab == 0 || self.embed_dim == 0 || self.hidden == 0 || self.layers == 0 || self.window == 0 {
            return Err(Error::domain("model dimensions must be positive"));
        }
        if self.classes < 2 {
            return Err(Error::domain("a classifier needs at least two classes"));
        }
        Ok(())
    }

    pub fn step_dim(&self) -> usize {
        3 + self.embed_dim
    }

    fn layout(&self) -> Layout {
        let h = self.hidden;
        let mut off = self.vocab * self.embed_dim;
        let mut layers = Vec::with_capacity(self.layers);
        for l in 0..self.layers {
            let input = if l == 0 { self.step_dim() } else { h };
            let w_x = off;
            let w_h = w_x + 3 * h * input;
            let b = w_h + 3 * h * h;
            off = b + 3 * h;
            layers.push(LayerOffsets { w_x, w_h, b, input });
        }
        let head_w = off;
        let head_b = head_w + self.classes * h;
        Layout {
            layers,
            head_w,
            head_b,
            total: head_b + self.classes,
        }
    }

    pub fn n_params(&self) -> usize {
        self.layout().total
    }

    /// Parameter groups at gate granularity, in storage order.
    pub fn groups(&self) -> Vec<ParamGroup> {
        let lay = self.layout();
        let h = self.hidden;
        let mut g = vec![ParamGroup {
            name: "embedding".into(),
            offset: 0,
            len: self.vocab * self.embed_dim,
        }];
        for (l, lo) in lay.layers.iter().enumerate() {
            for (k, gate) in ["z", "r", "n"].iter().enumerate() {
                g.push(ParamGroup {
                    name: format!("gru{l}.w_{gate}"),
                    offset: lo.w_x + k * h * lo.input,
                    len: h * lo.input,
                });
            }
            for (k, gate) in ["z", "r", "n"].iter().enumerate() {
                g.push(ParamGroup {
                    name: format!("gru{l}.u_{gate}"),
                    offset: lo.w_h + k * h * h,
                    len: h * h,
                });
            }
            for (k, gate) in ["z", "r", "n"].iter().enumerate() {
                g.push(ParamGroup {
                    name: format!("gru{l}.b_{gate}"),
                    offset: lo.b + k * h,
                    len: h,
                });
            }
        }
        g.push(ParamGroup {
            name: "head.w".into(),
            offset: lay.head_w,
            len: self.classes * h,
        });
        g.push(ParamGroup {
            name: "head.b".into(),
            offset: lay.head_b,
            len: self.classes,
        });
        g
    }
}

/// Position standardization statistics, from the training split only.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PositionNormalizer {
    pub mean: [f64; 3],
    pub std: [f64; 3],
}

impl PositionNormalizer {
    pub const IDENTITY: PositionNormalizer = PositionNormalizer {
        mean: [0.0; 3],
        std: [1.0; 3],
    };

    /// Per-axis mean and population standard deviation. Axes with zero
    /// spread get a unit scale.
    pub fn fit<'a>(positions: impl IntoIterator<Item = &'a Vec3>) -> Result<Self> {
        let mut n = 0usize;
        let mut sum = [0.0; 3];
        let mut sq = [0.0; 3];
        for p in positions {
            n += 1;
            for (a, v) in p.to_array().into_iter().enumerate() {
                sum[a] += v;
                sq[a] += v * v;
            }
        }
        if n == 0 {
            return Err(Error::domain("cannot fit a normalizer to zero positions"));
        }
        let nf = n as f64;
        let mean = sum.map(|s| s / nf);
        let mut std = [1.0; 3];
        for a in 0..3 {
            let var = (sq[a] / nf - mean[a] * mean[a]).max(0.0);
            if var > 1e-18 {
                std[a] = var.sqrt();
            }
        }
        Ok(PositionNormalizer { mean, std })
    }

    pub fn apply(&self, p: Vec3) -> [f64; 3] {
        let v = p.to_array();
        [0, 1, 2].map(|a| (v[a] - self.mean[a]) / self.std[a])
    }
}

/// Forward-pass mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Eval,
    /// Dropout masks come from a ChaCha stream keyed by `seed` and the
    /// example's position in the batch.
    Train { seed: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub shape: ModelShape,
    pub task: Task,
    pub dropout: f64,
    pub normalizer: PositionNormalizer,
    /// Flat trainable parameters, laid out as in [`ModelShape::groups`].
    pub weights: Vec<f64>,
    layout: Layout,
}

struct LayerTrace {
    /// `T x input`
    xs: Vec<f64>,
    /// `(T + 1) x H`; row 0 is the zero initial state.
    hs: Vec<f64>,
    gates: Vec<GruStep>,
    /// Dropout scale applied to this layer's outputs before the next layer.
    mask: Option<Vec<f64>>,
}

struct Trace {
    layers: Vec<LayerTrace>,
    logits: Vec<f64>,
}

impl ModelParams {
    /// Seeded initialization: standard normal embeddings,
    /// `U(-1/sqrt(fan_in), 1/sqrt(fan_in))` for GRU and head weights.
    pub fn init(shape: ModelShape, task: Task, dropout: f64, normalizer: PositionNormalizer, seed: u64) -> Result<Self> {
        let mut m = Self::zeros(shape, task, dropout, normalizer)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n_emb = shape.vocab * shape.embed_dim;
        for w in &mut m.weights[..n_emb] {
            *w = rng.sample(StandardNormal);
        }
        let bound = 1.0 / (shape.hidden as f64).sqrt();
        for lo in &m.layout.layers {
            let in_bound = 1.0 / (lo.input as f64).sqrt();
            for w in &mut m.weights[lo.w_x..lo.w_h] {
                *w = rng.random_range(-in_bound..in_bound);
            }
            for w in &mut m.weights[lo.w_h..lo.b + 3 * shape.hidden] {
                *w = rng.random_range(-bound..bound);
            }
        }
        for w in &mut m.weights[m.layout.head_w..] {
            *w = rng.random_range(-bound..bound);
        }
        Ok(m)
    }

    pub fn zeros(shape: ModelShape, task: Task, dropout: f64, normalizer: PositionNormalizer) -> Result<Self> {
        shape.validate()?;
        if !(0.0..1.0).contains(&dropout) {
            return Err(Error::domain("dropout must lie in [0, 1)"));
        }
        if normalizer.std.iter().any(|s| !(*s > 0.0)) {
            return Err(Error::domain("position std must be strictly positive"));
        }
        let layout = shape.layout();
        Ok(ModelParams {
            shape,
            task,
            dropout,
            normalizer,
            weights: vec![0.0; layout.total],
            layout,
        })
    }

    pub(crate) fn from_parts(
        shape: ModelShape,
        task: Task,
        dropout: f64,
        normalizer: PositionNormalizer,
        weights: Vec<f64>,
    ) -> Result<Self> {
        let mut m = Self::zeros(shape, task, dropout, normalizer)?;
        if weights.len() != m.weights.len() {
            return Err(Error::domain("weight vector length does not match shape"));
        }
        m.weights = weights;
        Ok(m)
    }

    pub fn embedding_row(&self, beam: usize) -> &[f64] {
        let a = self.shape.embed_dim;
        &self.weights[beam * a..(beam + 1) * a]
    }

    pub fn layer(&self, l: usize) -> GruLayer<'_> {
        let lo = self.layout.layers[l];
        let h = self.shape.hidden;
        GruLayer {
            w_x: &self.weights[lo.w_x..lo.w_h],
            w_h: &self.weights[lo.w_h..lo.b],
            b: &self.weights[lo.b..lo.b + 3 * h],
            input: lo.input,
            hidden: h,
        }
    }

    fn head(&self) -> (&[f64], &[f64]) {
        (
            &self.weights[self.layout.head_w..self.layout.head_b],
            &self.weights[self.layout.head_b..],
        )
    }

    /// `[standardized position; embedding row]`, length `3 + a`.
    pub fn encode_step(&self, position: Vec3, serving_beam: usize) -> Result<Vec<f64>> {
        if serving_beam >= self.shape.vocab {
            return Err(Error::domain(format!(
                "beam {serving_beam} outside vocabulary of {}",
                self.shape.vocab
            )));
        }
        let mut v = Vec::with_capacity(self.shape.step_dim());
        v.extend(self.normalizer.apply(position));
        v.extend_from_slice(self.embedding_row(serving_beam));
        Ok(v)
    }

    fn check_input(&self, positions: &[Vec3], beams: &[usize]) -> Result<()> {
        if positions.len() != self.shape.window || beams.len() != self.shape.window {
            return Err(Error::domain(format!(
                "expected a window of {} steps, got {} positions and {} beams",
                self.shape.window,
                positions.len(),
                beams.len()
            )));
        }
        if let Some(b) = beams.iter().find(|b| **b >= self.shape.vocab) {
            return Err(Error::domain(format!("beam {b} outside vocabulary of {}", self.shape.vocab)));
        }
        Ok(())
    }

    fn dropout_masks(&self, mode: Mode, sample: u64) -> Vec<Option<Vec<f64>>> {
        let n = self.shape.window * self.shape.hidden;
        let layers = self.shape.layers;
        match mode {
            Mode::Train { seed } if self.dropout > 0.0 => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(sample);
                let keep = 1.0 - self.dropout;
                let scale = 1.0 / keep;
                (0..layers)
                    .map(|l| {
                        (l + 1 < layers).then(|| {
                            (0..n)
                                .map(|_| if rng.random::<f64>() < keep { scale } else { 0.0 })
                                .collect()
                        })
                    })
                    .collect()
            }
            _ => vec![None; layers],
        }
    }

    fn run(&self, positions: &[Vec3], beams: &[usize], mode: Mode, sample: u64) -> Result<Trace> {
        self.check_input(positions, beams)?;
        let t_len = self.shape.window;
        let h = self.shape.hidden;
        let masks = self.dropout_masks(mode, sample);
        let mut layers: Vec<LayerTrace> = Vec::with_capacity(self.shape.layers);
        for (l, mask) in masks.into_iter().enumerate() {
            let layer = self.layer(l);
            let xs = if l == 0 {
                let mut xs = Vec::with_capacity(t_len * layer.input);
                for (p, b) in positions.iter().zip(beams) {
                    xs.extend(self.normalizer.apply(*p));
                    xs.extend_from_slice(self.embedding_row(*b));
                }
                xs
            } else {
                let prev = &layers[l - 1];
                let out = &prev.hs[h..];
                match &prev.mask {
                    Some(m) => out.iter().zip(m).map(|(v, s)| v * s).collect(),
                    None => out.to_vec(),
                }
            };
            let mut hs = vec![0.0; (t_len + 1) * h];
            let mut gates = Vec::with_capacity(t_len);
            for t in 0..t_len {
                let mut cache = GruStep::default();
                let (before, after) = hs.split_at_mut((t + 1) * h);
                layer.step(
                    &xs[t * layer.input..(t + 1) * layer.input],
                    &before[t * h..],
                    &mut after[..h],
                    &mut cache,
                );
                gates.push(cache);
            }
            layers.push(LayerTrace { xs, hs, gates, mask });
        }
        let last = &layers.last().expect("at least one layer").hs[t_len * h..];
        let (hw, hb) = self.head();
        let mut logits = hb.to_vec();
        gemv_acc(hw, last, &mut logits);
        Ok(Trace { layers, logits })
    }

    /// Class logits for one window.
    pub fn forward(&self, positions: &[Vec3], beams: &[usize], mode: Mode, sample: u64) -> Result<Vec<f64>> {
        Ok(self.run(positions, beams, mode, sample)?.logits)
    }

    pub fn predict(&self, ex: &Example) -> Result<Vec<f64>> {
        self.forward(&ex.positions, &ex.beams, Mode::Eval, 0)
    }

    /// Eval-mode logits for many examples, in input order.
    pub fn predict_all(&self, examples: &[Example]) -> Result<Vec<Vec<f64>>> {
        examples.par_iter().map(|e| self.predict(e)).collect()
    }

    /// Accumulates `dL/dtheta` for one example given `dL/dlogits`.
    fn backward(&self, trace: &Trace, beams: &[usize], dlogits: &[f64], grad: &mut [f64]) {
        let t_len = self.shape.window;
        let h = self.shape.hidden;
        let n_layers = self.shape.layers;
        let top = &trace.layers[n_layers - 1];
        let last = &top.hs[t_len * h..];
        let (hw, _) = self.head();
        outer_acc(&mut grad[self.layout.head_w..self.layout.head_b], dlogits, last);
        for (g, d) in grad[self.layout.head_b..].iter_mut().zip(dlogits) {
            *g += d;
        }
        // gradient w.r.t. each layer's outputs, T x H
        let mut d_out = vec![0.0; t_len * h];
        gemv_t_acc(hw, dlogits, &mut d_out[(t_len - 1) * h..]);

        for l in (0..n_layers).rev() {
            let tr = &trace.layers[l];
            let layer = self.layer(l);
            let lo = self.layout.layers[l];
            let input = lo.input;
            let mut d_in = vec![0.0; t_len * input];
            {
                let (front, rest) = grad.split_at_mut(lo.w_h);
                let (wh, rest) = rest.split_at_mut(lo.b - lo.w_h);
                let mut g = GruLayerGrad {
                    w_x: &mut front[lo.w_x..],
                    w_h: wh,
                    b: &mut rest[..3 * h],
                };
                let mut dh_next = vec![0.0; h];
                for t in (0..t_len).rev() {
                    let dh: Vec<f64> = d_out[t * h..(t + 1) * h]
                        .iter()
                        .zip(&dh_next)
                        .map(|(a, b)| a + b)
                        .collect();
                    dh_next.fill(0.0);
                    layer.step_backward(
                        &tr.xs[t * input..(t + 1) * input],
                        &tr.hs[t * h..(t + 1) * h],
                        &tr.gates[t],
                        &dh,
                        &mut g,
                        &mut d_in[t * input..(t + 1) * input],
                        &mut dh_next,
                    );
                }
            }
            if l == 0 {
                let a = self.shape.embed_dim;
                for (t, b) in beams.iter().enumerate() {
                    let src = &d_in[t * input + 3..(t + 1) * input];
                    for (g, d) in grad[b * a..(b + 1) * a].iter_mut().zip(src) {
                        *g += d;
                    }
                }
            } else {
                let below = &trace.layers[l - 1];
                d_out = match &below.mask {
                    Some(m) => d_in.iter().zip(m).map(|(d, s)| d * s).collect(),
                    None => d_in,
                };
            }
        }
    }

    /// Mean cross-entropy over `batch` and its gradient.
    ///
    /// Examples are processed in fixed chunks whose partial sums are added in
    /// chunk order, so the result is independent of the thread count.
    pub fn loss_and_grad(&self, batch: &[&Example], mode: Mode) -> Result<(f64, Vec<f64>)> {
        const CHUNK: usize = 16;
        if batch.is_empty() {
            return Err(Error::domain("empty batch"));
        }
        let inv_b = 1.0 / batch.len() as f64;
        let partials = batch
            .par_chunks(CHUNK)
            .enumerate()
            .map(|(c, chunk)| -> Result<(f64, Vec<f64>)> {
                let mut grad = vec![0.0; self.weights.len()];
                let mut loss = 0.0;
                for (i, ex) in chunk.iter().enumerate() {
                    let label = self.task.label(ex);
                    if label >= self.shape.classes {
                        return Err(Error::domain(format!(
                            "label {label} outside {} classes",
                            self.shape.classes
                        )));
                    }
                    let trace = self.run(&ex.positions, &ex.beams, mode, (c * CHUNK + i) as u64)?;
                    let p = softmax(&trace.logits);
                    loss -= p[label].max(f64::MIN_POSITIVE).ln();
                    let dlogits: Vec<f64> = p
                        .iter()
                        .enumerate()
                        .map(|(k, pk)| (pk - if k == label { 1.0 } else { 0.0 }) * inv_b)
                        .collect();
                    self.backward(&trace, &ex.beams, &dlogits, &mut grad);
                }
                Ok((loss, grad))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut total = 0.0;
        let mut grad = vec![0.0; self.weights.len()];
        for (l, g) in partials {
            total += l;
            for (a, b) in grad.iter_mut().zip(&g) {
                *a += b;
            }
        }
        Ok((total * inv_b, grad))
    }

    /// Mean cross-entropy without gradients.
    pub fn loss(&self, batch: &[&Example], mode: Mode) -> Result<f64> {
        if batch.is_empty() {
            return Err(Error::domain("empty batch"));
        }
        let mut total = 0.0;
        for (i, ex) in batch.iter().enumerate() {
            let logits = self.forward(&ex.positions, &ex.beams, mode, i as u64)?;
            let p = softmax(&logits);
            total -= p[self.task.label(ex)].max(f64::MIN_POSITIVE).ln();
        }
        Ok(total / batch.len() as f64)
    }
}

/// Numerically stable softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = logits.iter().map(|v| (v - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}
