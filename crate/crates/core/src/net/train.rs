use std::path::Path;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::model::{predict_grid, Network, Query};
use crate::dataset::{make_sample, CropStrategy, PairConfig, Sample};
use crate::error::{Error, Result};
use crate::metrics::psnr;
use crate::phase::PhaseDiagram;
use crate::rng::{stream, Stream};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub milestones: Vec<usize>,
    pub decay: f64,
    pub batch_size: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub seed: u64,
    pub pairs: PairConfig,
    /// Pairs drawn from each training diagram per epoch.
    pub pairs_per_diagram: usize,
    /// Random subset of window targets per pair; all targets when `None`.
    pub targets_per_pair: Option<usize>,
    pub validation_ratios: Vec<usize>,
    pub validation_strategy: CropStrategy,
    pub validation_pairs_per_ratio: usize,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig {
            epochs: 1000,
            learning_rate: 1e-5,
            milestones: vec![200, 400, 600, 800],
            decay: 0.5,
            batch_size: 16,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            seed: 0,
            pairs: PairConfig { input_side: 48, ratio_min: 1, ratio_max: 4, strategy: CropStrategy::ContiguousBlock },
            pairs_per_diagram: 1,
            targets_per_pair: None,
            validation_ratios: vec![2, 3, 4],
            validation_strategy: CropStrategy::ContiguousBlock,
            validation_pairs_per_ratio: 1,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<()> {
        self.pairs.validate()?;
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::invalid(format!("learning rate {} must be positive", self.learning_rate)));
        }
        if !(self.decay > 0.0 && self.decay <= 1.0) {
            return Err(Error::invalid(format!("decay {} outside (0, 1]", self.decay)));
        }
        if self.milestones.windows(2).any(|m| m[1] <= m[0]) {
            return Err(Error::invalid("milestones must be strictly increasing"));
        }
        if self.epochs > 0 && self.milestones.last().is_some_and(|&m| m >= self.epochs) {
            return Err(Error::invalid(format!("milestones must be below the {} epochs", self.epochs)));
        }
        if self.batch_size == 0 || self.pairs_per_diagram == 0 {
            return Err(Error::Empty("batch size and pairs per diagram must be positive".into()));
        }
        if self.targets_per_pair == Some(0) {
            return Err(Error::Empty("targets per pair must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) || !(self.epsilon > 0.0) {
            return Err(Error::invalid("moment coefficients must lie in [0, 1) with positive epsilon"));
        }
        if self.validation_ratios.is_empty()
            || self.validation_ratios.contains(&0)
            || self.validation_pairs_per_ratio == 0
        {
            return Err(Error::Empty("validation needs at least one positive ratio and pair".into()));
        }
        Ok(())
    }

    /// Step size in effect during `epoch` (0-based).
    pub fn learning_rate_at(&self, epoch: usize) -> f64 {
        let passed = self.milestones.iter().filter(|&&m| m <= epoch).count();
        self.learning_rate * self.decay.powi(passed as i32)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub step: u64,
}

impl Adam {
    pub fn new(n: usize) -> Self {
        Adam { m: vec![0.0; n], v: vec![0.0; n], step: 0 }
    }

    pub fn update(&mut self, params: &mut [f64], grad: &[f64], lr: f64, cfg: &TrainingConfig) {
        self.step += 1;
        let c1 = 1.0 - cfg.beta1.powi(self.step as i32);
        let c2 = 1.0 - cfg.beta2.powi(self.step as i32);
        for (((p, g), m), v) in params.iter_mut().zip(grad).zip(&mut self.m).zip(&mut self.v) {
            *m = cfg.beta1 * *m + (1.0 - cfg.beta1) * g;
            *v = cfg.beta2 * *v + (1.0 - cfg.beta2) * g * g;
            *p -= lr * (*m / c1) / ((*v / c2).sqrt() + cfg.epsilon);
        }
    }
}

/// Network, optimizer moments, and completed epochs.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkState {
    pub network: Network,
    pub optimizer: Adam,
    pub epoch: usize,
}

impl NetworkState {
    pub fn new(network: Network) -> Self {
        let n = network.param_count();
        NetworkState { network, optimizer: Adam::new(n), epoch: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_l1: f64,
    pub val_l1: f64,
    pub val_psnr: f64,
}

/// Sum of absolute errors over `targets` (all targets when `None`) and, when
/// `grad` is given, its gradient accumulated into `grad`.
pub fn sample_loss(net: &Network, sample: &Sample, targets: Option<&[usize]>, grad: Option<&mut [f64]>) -> Result<f64> {
    let input = &sample.input;
    if input.data.len() != input.rows * input.cols * net.arch().in_channels {
        return Err(Error::ShapeMismatch("sample input does not match the network".into()));
    }
    let all: Vec<usize>;
    let targets = match targets {
        Some(t) => t,
        None => {
            all = (0..sample.targets.len()).collect();
            &all
        }
    };
    if targets.is_empty() {
        return Err(Error::Empty("pair has no targets".into()));
    }
    let want_grad = grad.is_some();
    let mut enc_cache = Network::empty_encoder_cache();
    let (data, scale) = net.standardize(input);
    let features = net.encoder_forward(&data, input.rows, input.cols, want_grad.then_some(&mut enc_cache));
    let values: Vec<f64> = input.data.iter().step_by(net.arch().in_channels).copied().collect();
    let latent = super::model::LatentGrid::new(
        input.rows,
        input.cols,
        net.arch().latent_dim,
        features,
        values,
        sample.input_coords.clone(),
    )?
    .with_scale(scale);

    let rows = 4 * targets.len();
    let mut x = Vec::with_capacity(rows * net.arch().decoder_inputs());
    let mut ensembles = Vec::with_capacity(targets.len());
    for &k in targets {
        let t = &sample.targets[k];
        let e = latent.ensemble(t.coord)?;
        for s in 0..4 {
            net.decoder_row(&latent, &Query { site: e.sites[s], offset: e.offsets[s], cell: t.cell }, &mut x);
        }
        ensembles.push(e);
    }
    let mut dec_cache = Network::empty_decoder_cache();
    let out = net.decoder_forward(x, rows, want_grad.then_some(&mut dec_cache));

    let mut loss = 0.0;
    let mut d_out = vec![0.0; if want_grad { rows } else { 0 }];
    for (n, (&k, e)) in targets.iter().zip(&ensembles).enumerate() {
        let pred: f64 = (0..4).map(|s| e.weights[s] * scale.restore(out[4 * n + s])).sum();
        let err = pred - sample.targets[k].value;
        loss += err.abs();
        if want_grad {
            let sign = if err > 0.0 {
                1.0
            } else if err < 0.0 {
                -1.0
            } else {
                0.0
            };
            for s in 0..4 {
                d_out[4 * n + s] = sign * scale.spread * e.weights[s];
            }
        }
    }
    if let Some(grad) = grad {
        let d_x = net.decoder_backward(&dec_cache, &d_out, grad);
        let (dim, width) = (net.arch().latent_dim, net.arch().decoder_inputs());
        let mut d_latent = vec![0.0; input.rows * input.cols * dim];
        for (n, e) in ensembles.iter().enumerate() {
            for s in 0..4 {
                let row = &d_x[(4 * n + s) * width..(4 * n + s) * width + dim];
                let site = &mut d_latent[e.sites[s] * dim..(e.sites[s] + 1) * dim];
                for (a, b) in site.iter_mut().zip(row) {
                    *a += b;
                }
            }
        }
        net.encoder_backward(&enc_cache, &d_latent, grad);
    }
    Ok(loss)
}

/// Mean absolute error over every target of every sample.
pub fn mean_l1(net: &Network, samples: &[Sample]) -> Result<f64> {
    let sums = samples.par_iter().map(|s| sample_loss(net, s, None, None)).collect::<Result<Vec<_>>>()?;
    let count: usize = samples.iter().map(|s| s.targets.len()).sum();
    if count == 0 {
        return Err(Error::Empty("no targets to evaluate".into()));
    }
    Ok(sums.iter().sum::<f64>() / count as f64)
}

/// `(mean L1, mean PSNR)` of full-window predictions.
pub fn validate(net: &Network, samples: &[Sample]) -> Result<(f64, f64)> {
    if samples.is_empty() {
        return Err(Error::Empty("validation set is empty".into()));
    }
    let per = samples
        .iter()
        .map(|s| {
            let latent = net.encode(&s.input, &s.input_coords)?;
            let axes = s.target_axes();
            let pred = predict_grid(&latent, net, [&axes[0], &axes[1]], s.cell())?;
            let truth = s.target_grid();
            let l1: f64 = pred.as_slice().iter().zip(truth.as_slice()).map(|(p, t)| (p - t).abs()).sum();
            Ok((l1, truth.as_slice().len(), psnr(&pred, &truth)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let count: usize = per.iter().map(|p| p.1).sum();
    let l1 = per.iter().map(|p| p.0).sum::<f64>() / count as f64;
    let db = per.iter().map(|p| p.2).sum::<f64>() / per.len() as f64;
    Ok((l1, db))
}

/// Fixed validation pairs: every ratio, `validation_pairs_per_ratio` times,
/// for each validation diagram.
pub fn validation_samples(config: &TrainingConfig, diagrams: &[PhaseDiagram], ids: &[usize]) -> Result<Vec<Sample>> {
    let mut out = Vec::new();
    let mut index = 0u64;
    for &id in ids {
        for &ratio in &config.validation_ratios {
            for _ in 0..config.validation_pairs_per_ratio {
                let mut rng = stream(config.seed, Stream::ValidationPair, index);
                index += 1;
                out.push(make_sample(
                    id,
                    &diagrams[id],
                    config.validation_strategy,
                    config.pairs.input_side,
                    ratio,
                    &mut rng,
                )?);
            }
        }
    }
    Ok(out)
}

/// Training pairs for one epoch in shuffled order, with their target subsets.
pub fn epoch_pairs(
    config: &TrainingConfig,
    diagrams: &[PhaseDiagram],
    ids: &[usize],
    epoch: usize,
) -> Result<Vec<(Sample, Option<Vec<usize>>)>> {
    let mut order: Vec<usize> = ids.iter().copied().cycle().take(ids.len() * config.pairs_per_diagram).collect();
    order.shuffle(&mut stream(config.seed, Stream::Epoch, epoch as u64));
    order
        .iter()
        .enumerate()
        .map(|(k, &id)| {
            let mut rng = stream(config.seed, Stream::TrainPair, ((epoch as u64) << 24) | k as u64);
            let sample = config.pairs.pair(diagrams, id, &mut rng)?;
            let subset = config.targets_per_pair.filter(|&q| q < sample.targets.len()).map(|q| {
                let mut picked = rand::seq::index::sample(&mut rng, sample.targets.len(), q).into_vec();
                picked.sort_unstable();
                picked
            });
            Ok((sample, subset))
        })
        .collect()
}

fn check_finite(values: &[f64], epoch: usize, batch: usize, what: &str) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(Error::NonFinite { epoch, batch, what: format!("{what} entry {i} is {}", values[i]) }),
        None => Ok(()),
    }
}

pub fn train(
    state: NetworkState,
    config: &TrainingConfig,
    diagrams: &[PhaseDiagram],
    train_ids: &[usize],
    val_ids: &[usize],
) -> Result<(NetworkState, Vec<EpochRecord>)> {
    train_with(state, config, diagrams, train_ids, val_ids, |_| {})
}

/// As [`train`], calling `on_epoch` after each epoch.
pub fn train_with(
    mut state: NetworkState,
    config: &TrainingConfig,
    diagrams: &[PhaseDiagram],
    train_ids: &[usize],
    val_ids: &[usize],
    mut on_epoch: impl FnMut(&EpochRecord),
) -> Result<(NetworkState, Vec<EpochRecord>)> {
    config.validate()?;
    if train_ids.is_empty() || val_ids.is_empty() {
        return Err(Error::Empty("training and validation sets must be non-empty".into()));
    }
    if let Some(&bad) = train_ids.iter().chain(val_ids).find(|&&i| i >= diagrams.len()) {
        return Err(Error::invalid(format!("diagram index {bad} out of range")));
    }
    let mut history = Vec::with_capacity(config.epochs);
    if config.epochs == 0 {
        return Ok((state, history));
    }
    let validation = validation_samples(config, diagrams, val_ids)?;
    let n = state.network.param_count();

    for epoch in state.epoch..config.epochs {
        let lr = config.learning_rate_at(epoch);
        let pairs = epoch_pairs(config, diagrams, train_ids, epoch)?;
        let (mut abs_sum, mut count) = (0.0, 0usize);
        for (b, batch) in pairs.chunks(config.batch_size).enumerate() {
            let net = &state.network;
            let parts = batch
                .par_iter()
                .map(|(s, subset)| {
                    let mut g = vec![0.0; n];
                    let loss = sample_loss(net, s, subset.as_deref(), Some(&mut g))?;
                    Ok((loss, subset.as_ref().map_or(s.targets.len(), Vec::len), g))
                })
                .collect::<Result<Vec<_>>>()?;
            let targets: usize = parts.iter().map(|p| p.1).sum();
            if targets == 0 {
                return Err(Error::Empty(format!("epoch {epoch} batch {b} has no targets")));
            }
            let mut grad = vec![0.0; n];
            let mut batch_loss = 0.0;
            for (loss, _, g) in &parts {
                batch_loss += loss;
                for (a, x) in grad.iter_mut().zip(g) {
                    *a += x;
                }
            }
            let scale = 1.0 / targets as f64;
            grad.iter_mut().for_each(|g| *g *= scale);
            check_finite(&[batch_loss], epoch, b, "loss")?;
            check_finite(&grad, epoch, b, "gradient")?;
            state.optimizer.update(state.network.params_mut(), &grad, lr, config);
            check_finite(state.network.params(), epoch, b, "parameter")?;
            abs_sum += batch_loss;
            count += targets;
        }
        let (val_l1, val_psnr) = validate(&state.network, &validation)?;
        state.epoch = epoch + 1;
        let record = EpochRecord { epoch: epoch + 1, train_l1: abs_sum / count as f64, val_l1, val_psnr };
        on_epoch(&record);
        history.push(record);
    }
    Ok((state, history))
}

pub fn write_history(path: impl AsRef<Path>, history: &[EpochRecord]) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path)?;
    for r in history {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_history(path: impl AsRef<Path>) -> Result<Vec<EpochRecord>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}
