//! Forward model over value-function space: a rectifier MLP mapping
//! `[z ; one_hot(skill)]` to the next `z`, trained with Adam on mean squared
//! error.

use std::io;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{TransitionDataset, TransitionRecord, VfsPoint};
use crate::error::{Error, Result};
use crate::seed;

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

/// Dense layer `y = W x + b` with `W` stored row-major as `rows × cols`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub rows: usize,
    pub cols: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Layer {
    fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            weights: vec![0.0; rows * cols],
            bias: vec![0.0; rows],
        }
    }

    fn he_uniform(rows: usize, cols: usize, rng: &mut impl Rng) -> Self {
        let limit = (6.0 / cols as f64).sqrt();
        Self {
            rows,
            cols,
            weights: (0..rows * cols).map(|_| rng.gen_range(-limit..limit)).collect(),
            bias: vec![0.0; rows],
        }
    }

    fn apply(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend(self.weights.chunks_exact(self.cols).zip(&self.bias).map(|(row, b)| {
            row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + b
        }));
    }

    fn params_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.weights.iter_mut().chain(self.bias.iter_mut())
    }

    fn params(&self) -> impl Iterator<Item = &f64> {
        self.weights.iter().chain(self.bias.iter())
    }

    pub fn num_params(&self) -> usize {
        self.weights.len() + self.bias.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DynamicsModel {
    pub k: usize,
    pub hidden_width: usize,
    pub layers: Vec<Layer>,
}

impl DynamicsModel {
    /// He-initialized network with two hidden layers.
    pub fn new(k: usize, hidden_width: usize, seed: u64) -> Self {
        let mut rng = seed::rng(seed);
        Self {
            k,
            hidden_width,
            layers: vec![
                Layer::he_uniform(hidden_width, 2 * k, &mut rng),
                Layer::he_uniform(hidden_width, hidden_width, &mut rng),
                Layer::he_uniform(k, hidden_width, &mut rng),
            ],
        }
    }

    pub fn zeros(k: usize, hidden_width: usize) -> Self {
        Self {
            k,
            hidden_width,
            layers: vec![
                Layer::zeros(hidden_width, 2 * k),
                Layer::zeros(hidden_width, hidden_width),
                Layer::zeros(k, hidden_width),
            ],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (k, h) = (self.k, self.hidden_width);
        let expected = [(h, 2 * k), (h, h), (k, h)];
        if self.layers.len() != expected.len() {
            return Err(Error::Config(format!("expected 3 layers, found {}", self.layers.len())));
        }
        for (i, (layer, (rows, cols))) in self.layers.iter().zip(expected).enumerate() {
            if layer.rows != rows
                || layer.cols != cols
                || layer.weights.len() != rows * cols
                || layer.bias.len() != rows
            {
                return Err(Error::Config(format!(
                    "layer {i} should be {rows}×{cols} with {rows} biases"
                )));
            }
            if layer.params().any(|p| !p.is_finite()) {
                return Err(Error::Config(format!("layer {i} has non-finite parameters")));
            }
        }
        Ok(())
    }

    pub fn input(&self, z: &[f64], skill: usize) -> Vec<f64> {
        let mut x = Vec::with_capacity(2 * self.k);
        x.extend_from_slice(z);
        x.extend((0..self.k).map(|i| if i == skill { 1.0 } else { 0.0 }));
        x
    }

    /// Network output before clamping.
    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        let mut cur = x.to_vec();
        let mut next = Vec::with_capacity(self.hidden_width);
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            layer.apply(&cur, &mut next);
            if i < last {
                next.iter_mut().for_each(|v| *v = v.max(0.0));
            }
            std::mem::swap(&mut cur, &mut next);
        }
        cur
    }

    /// Predicted value-function reading after running `skill` from `z`,
    /// clamped to `[0, 1]`.
    ///
    /// # Panics
    /// If `skill >= k` or `z` does not have `k` components.
    pub fn predict_next(&self, z: &VfsPoint, skill: usize) -> VfsPoint {
        assert!(skill < self.k, "skill {skill} out of range for k = {}", self.k);
        assert_eq!(z.dim(), self.k, "input dimension mismatch");
        VfsPoint::clamped(self.forward(&self.input(z.as_slice(), skill)))
    }

    /// Mean over records and components of the squared prediction error,
    /// without output clamping.
    pub fn batch_loss(&self, batch: &[&TransitionRecord]) -> f64 {
        let total: f64 = batch
            .iter()
            .map(|r| {
                self.forward(&self.input(r.z.as_slice(), r.skill))
                    .iter()
                    .zip(r.z_next.as_slice())
                    .map(|(p, t)| (p - t).powi(2))
                    .sum::<f64>()
            })
            .sum();
        total / (batch.len() * self.k) as f64
    }

    /// Loss and its gradient with respect to every weight and bias, shaped
    /// like `self.layers`.
    pub fn batch_gradient(&self, batch: &[&TransitionRecord]) -> (f64, Vec<Layer>) {
        let mut grads: Vec<Layer> = self.layers.iter().map(|l| Layer::zeros(l.rows, l.cols)).collect();
        let scale = 1.0 / (batch.len() * self.k) as f64;
        let mut loss = 0.0;
        let n = self.layers.len();
        let mut acts: Vec<Vec<f64>> = vec![Vec::new(); n + 1];
        let mut pre: Vec<Vec<f64>> = vec![Vec::new(); n];
        for r in batch {
            acts[0] = self.input(r.z.as_slice(), r.skill);
            for (i, layer) in self.layers.iter().enumerate() {
                let mut z = Vec::with_capacity(layer.rows);
                layer.apply(&acts[i], &mut z);
                acts[i + 1] = if i + 1 < n {
                    z.iter().map(|v| v.max(0.0)).collect()
                } else {
                    z.clone()
                };
                pre[i] = z;
            }
            let mut delta: Vec<f64> = acts[n]
                .iter()
                .zip(r.z_next.as_slice())
                .map(|(p, t)| {
                    loss += (p - t).powi(2);
                    2.0 * (p - t) * scale
                })
                .collect();
            for i in (0..n).rev() {
                let layer = &self.layers[i];
                let g = &mut grads[i];
                let input = &acts[i];
                for (row, d) in delta.iter().enumerate() {
                    g.bias[row] += d;
                    let grow = &mut g.weights[row * layer.cols..(row + 1) * layer.cols];
                    for (gw, a) in grow.iter_mut().zip(input) {
                        *gw += d * a;
                    }
                }
                if i > 0 {
                    let mut prev = vec![0.0; layer.cols];
                    for (row, d) in delta.iter().enumerate() {
                        let wrow = &layer.weights[row * layer.cols..(row + 1) * layer.cols];
                        for (p, w) in prev.iter_mut().zip(wrow) {
                            *p += w * d;
                        }
                    }
                    for (p, z) in prev.iter_mut().zip(&pre[i - 1]) {
                        if *z <= 0.0 {
                            *p = 0.0;
                        }
                    }
                    delta = prev;
                }
            }
        }
        (loss * scale, grads)
    }

    pub fn write_json<W: io::Write>(&self, writer: W) -> Result<()> {
        serde_json::to_writer_pretty(writer, self)?;
        Ok(())
    }

    pub fn read_json<R: io::Read>(reader: R) -> Result<Self> {
        let model: Self = serde_json::from_reader(reader)?;
        model.validate()?;
        Ok(model)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub hidden_width: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            hidden_width: 64,
            epochs: 100,
            learning_rate: 1e-3,
            batch_size: 64,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    #[serde(skip)]
    pub model: Option<DynamicsModel>,
    pub train_records: usize,
    pub holdout_records: usize,
    pub initial_train_loss: f64,
    pub final_train_loss: f64,
    pub initial_holdout_loss: Option<f64>,
    pub final_holdout_loss: Option<f64>,
    /// Holdout mean squared error of each output component.
    pub holdout_component_mse: Option<Vec<f64>>,
    /// Mean minibatch loss of every epoch.
    pub epoch_losses: Vec<f64>,
}

impl TrainReport {
    pub fn into_model(self) -> DynamicsModel {
        self.model.expect("report produced by train_dynamics")
    }
}

struct Adam {
    m: Vec<Layer>,
    v: Vec<Layer>,
    t: i32,
}

impl Adam {
    fn new(model: &DynamicsModel) -> Self {
        let zeros: Vec<Layer> = model.layers.iter().map(|l| Layer::zeros(l.rows, l.cols)).collect();
        Self {
            m: zeros.clone(),
            v: zeros,
            t: 0,
        }
    }

    fn step(&mut self, model: &mut DynamicsModel, grads: &[Layer], lr: f64) {
        self.t += 1;
        let c1 = 1.0 - BETA1.powi(self.t);
        let c2 = 1.0 - BETA2.powi(self.t);
        for (((layer, g), m), v) in model
            .layers
            .iter_mut()
            .zip(grads)
            .zip(&mut self.m)
            .zip(&mut self.v)
        {
            for (((p, g), m), v) in layer
                .params_mut()
                .zip(g.params())
                .zip(m.params_mut())
                .zip(v.params_mut())
            {
                *m = BETA1 * *m + (1.0 - BETA1) * g;
                *v = BETA2 * *v + (1.0 - BETA2) * g * g;
                *p -= lr * (*m / c1) / ((*v / c2).sqrt() + ADAM_EPS);
            }
        }
    }
}

/// Fit a fresh model on a seeded 90/10 train/holdout split.
pub fn train_dynamics(data: &TransitionDataset, cfg: &TrainConfig) -> Result<TrainReport> {
    let k = data
        .dim()
        .ok_or_else(|| Error::Config("cannot train on an empty dataset".into()))?;
    if cfg.batch_size == 0 || cfg.hidden_width == 0 {
        return Err(Error::Config("batch_size and hidden_width must be positive".into()));
    }
    if !(cfg.learning_rate > 0.0 && cfg.learning_rate.is_finite()) {
        return Err(Error::Config(format!("learning_rate must be positive, got {}", cfg.learning_rate)));
    }
    if data.records.iter().any(|r| r.z.dim() != k || r.z_next.dim() != k || r.skill >= k) {
        return Err(Error::Config("dataset records disagree on dimension".into()));
    }

    let mut order: Vec<&TransitionRecord> = data.records.iter().collect();
    order.shuffle(&mut seed::rng(seed::derive(cfg.seed, "split", 0)));
    let holdout_len = order.len() / 10;
    let (holdout, train) = order.split_at(holdout_len);
    let mut train = train.to_vec();

    let mut model = DynamicsModel::new(k, cfg.hidden_width, seed::derive(cfg.seed, "init", 0));
    let mut adam = Adam::new(&model);
    let mut batch_rng = seed::rng(seed::derive(cfg.seed, "batch", 0));

    let holdout_loss = |m: &DynamicsModel| (!holdout.is_empty()).then(|| m.batch_loss(holdout));
    let initial_train_loss = model.batch_loss(&train);
    let initial_holdout_loss = holdout_loss(&model);

    let mut epoch_losses = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        train.shuffle(&mut batch_rng);
        let mut sum = 0.0;
        for batch in train.chunks(cfg.batch_size) {
            let (loss, grads) = model.batch_gradient(batch);
            if !loss.is_finite() {
                return Err(Error::Divergence { epoch, loss });
            }
            sum += loss * batch.len() as f64;
            adam.step(&mut model, &grads, cfg.learning_rate);
        }
        epoch_losses.push(sum / train.len() as f64);
    }

    let final_train_loss = model.batch_loss(&train);
    if !final_train_loss.is_finite() {
        return Err(Error::Divergence {
            epoch: cfg.epochs,
            loss: final_train_loss,
        });
    }
    let holdout_component_mse = (!holdout.is_empty()).then(|| {
        let mut acc = vec![0.0; k];
        for r in holdout {
            let p = model.forward(&model.input(r.z.as_slice(), r.skill));
            for (a, (p, t)) in acc.iter_mut().zip(p.iter().zip(r.z_next.as_slice())) {
                *a += (p - t).powi(2);
            }
        }
        acc.iter().map(|a| a / holdout.len() as f64).collect()
    });
    Ok(TrainReport {
        train_records: train.len(),
        holdout_records: holdout.len(),
        initial_train_loss,
        final_train_loss,
        initial_holdout_loss,
        final_holdout_loss: holdout_loss(&model),
        holdout_component_mse,
        epoch_losses,
        model: Some(model),
    })
}
