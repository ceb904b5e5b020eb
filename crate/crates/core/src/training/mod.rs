//! Objective, Adam optimiser, early-stopped training loop and the variation split.

pub mod objective;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::microworld::Episode;
use crate::negmine::TrainingInstance;
use crate::rng;
use crate::scorer::{init_params, GradientSet, ScorerParams, Tensors, Vocabulary};

pub use objective::{
    bce_loss, infonce_loss, margin_loss, score_gradients, total_loss, LossHyper, Mode, RegScope,
};

/// First held-out variation; everything below trains.
pub const HELDOUT_FROM: u32 = 7;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub tau: f64,
    pub gamma: f64,
    pub lambda_m: f64,
    pub lambda_r: f64,
    pub l2_scope: RegScope,
    pub learning_rate: f64,
    pub max_epochs: usize,
    pub patience: usize,
    pub grad_accum: usize,
    pub mode: Mode,
    pub seed: u64,
    pub embed_dim: usize,
    pub hidden_dim: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            tau: 0.6,
            gamma: 2.0,
            lambda_m: 0.3,
            lambda_r: 0.005,
            l2_scope: RegScope::Interaction,
            learning_rate: 3e-3,
            max_epochs: 150,
            patience: 20,
            grad_accum: 1,
            mode: Mode::Cwm,
            seed: 0,
            embed_dim: 64,
            hidden_dim: 64,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if !(self.tau > 0.0) {
            return bad("tau must be positive");
        }
        if !(self.gamma >= 0.0 && self.lambda_m >= 0.0 && self.lambda_r >= 0.0) {
            return bad("gamma and lambdas must be non-negative");
        }
        if !(self.learning_rate > 0.0) {
            return bad("learning_rate must be positive");
        }
        if self.max_epochs == 0 || self.grad_accum == 0 {
            return bad("max_epochs and grad_accum must be positive");
        }
        if self.patience > self.max_epochs {
            return bad("patience may not exceed max_epochs");
        }
        if self.embed_dim == 0 || self.hidden_dim == 0 {
            return bad("scorer dims must be positive");
        }
        Ok(())
    }

    pub fn hyper(&self) -> LossHyper {
        LossHyper {
            mode: self.mode,
            tau: self.tau,
            gamma: self.gamma,
            lambda_m: self.lambda_m,
            lambda_r: self.lambda_r,
            l2_scope: self.l2_scope,
        }
    }
}

/// Adam moments and step counter.
#[derive(Debug, Clone)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub m: Tensors,
    pub v: Tensors,
    pub t: u64,
}

impl Adam {
    pub fn new(params: &ScorerParams, lr: f64) -> Self {
        Adam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            m: Tensors::zeros(params.dims),
            v: Tensors::zeros(params.dims),
            t: 0,
        }
    }

    pub fn step(&mut self, params: &mut Tensors, grad: &GradientSet) {
        self.t += 1;
        let (b1, b2) = (self.beta1, self.beta2);
        let c1 = 1.0 - b1.powi(self.t as i32);
        let c2 = 1.0 - b2.powi(self.t as i32);
        let slices = params
            .slices_mut()
            .into_iter()
            .zip(grad.slices())
            .zip(self.m.slices_mut().into_iter().zip(self.v.slices_mut()));
        for ((p, g), (m, v)) in slices {
            for i in 0..p.len() {
                m[i] = b1 * m[i] + (1.0 - b1) * g[i];
                v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
                let m_hat = m[i] / c1;
                let v_hat = v[i] / c2;
                p[i] -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Patience,
    MaxEpochs,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub mode: Mode,
    pub train_instances: usize,
    pub heldout_instances: usize,
    /// Mean training loss before the first update.
    pub initial_train_loss: f64,
    pub initial_heldout_loss: f64,
    /// One entry per epoch run, measured after the epoch.
    pub train_loss: Vec<f64>,
    pub heldout_loss: Vec<f64>,
    pub stop_epoch: usize,
    pub stop_reason: StopReason,
    /// Epoch whose weights were kept; 0 means the initial weights.
    pub best_epoch: usize,
}

impl TrainReport {
    pub fn loss_reduction(&self) -> f64 {
        let best = self
            .train_loss
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        1.0 - best / self.initial_train_loss
    }
}

pub fn mean_loss(
    params: &ScorerParams,
    data: &[TrainingInstance],
    hyper: &LossHyper,
) -> Result<f64> {
    if data.is_empty() {
        return Ok(f64::NAN);
    }
    let mut sum = 0.0;
    for inst in data {
        sum += params.loss(inst, hyper)?;
    }
    Ok(sum / data.len() as f64)
}

/// Train from freshly initialised weights.
pub fn train(
    dataset: &[TrainingInstance],
    heldout: &[TrainingInstance],
    config: &TrainConfig,
) -> Result<(ScorerParams, TrainReport)> {
    config.validate()?;
    let init = init_params(
        rng::derive_seed(config.seed, "init"),
        Vocabulary::standard(),
        config.embed_dim,
        config.hidden_dim,
    )?;
    train_from(init, dataset, heldout, config)
}

/// Early-stopped Adam loop. Gradients are averaged over windows of
/// `grad_accum` instances; the weights with the best held-out loss are returned.
/// An empty held-out set falls back to the training loss for model selection.
pub fn train_from(
    mut params: ScorerParams,
    dataset: &[TrainingInstance],
    heldout: &[TrainingInstance],
    config: &TrainConfig,
) -> Result<(ScorerParams, TrainReport)> {
    config.validate()?;
    if dataset.is_empty() {
        return Err(Error::Config("training set is empty".into()));
    }
    let hyper = config.hyper();
    let select = |params: &ScorerParams, train_loss: f64| -> Result<f64> {
        if heldout.is_empty() {
            Ok(train_loss)
        } else {
            mean_loss(params, heldout, &hyper)
        }
    };

    let initial_train_loss = mean_loss(&params, dataset, &hyper)?;
    let initial_heldout_loss = select(&params, initial_train_loss)?;
    let mut report = TrainReport {
        mode: config.mode,
        train_instances: dataset.len(),
        heldout_instances: heldout.len(),
        initial_train_loss,
        initial_heldout_loss,
        train_loss: Vec::new(),
        heldout_loss: Vec::new(),
        stop_epoch: 0,
        stop_reason: StopReason::MaxEpochs,
        best_epoch: 0,
    };

    let mut best = (initial_heldout_loss, params.clone());
    let mut since_best = 0;
    let mut adam = Adam::new(&params, config.learning_rate);
    let mut order: Vec<usize> = (0..dataset.len()).collect();

    for epoch in 1..=config.max_epochs {
        let mut shuffle_rng = rng::stream(config.seed, &format!("shuffle/{epoch}"));
        order.shuffle(&mut shuffle_rng);
        for window in order.chunks(config.grad_accum) {
            let mut acc = Tensors::zeros(params.dims);
            for &i in window {
                let (_, g) =
                    params
                        .loss_and_gradients(&dataset[i], &hyper)
                        .map_err(|e| match e {
                            Error::NonFinite(at) => {
                                Error::NonFinite(format!("epoch {epoch}, {at}"))
                            }
                            other => other,
                        })?;
                acc.add_scaled(&g, 1.0);
            }
            acc.scale(1.0 / window.len() as f64);
            adam.step(&mut params.weights, &acc);
        }
        if !params.weights.all_finite() {
            return Err(Error::NonFinite(format!("weights after epoch {epoch}")));
        }

        let train_loss = mean_loss(&params, dataset, &hyper)?;
        let heldout_loss = select(&params, train_loss)?;
        log::info!("epoch {epoch}: train {train_loss:.5} heldout {heldout_loss:.5}");
        report.train_loss.push(train_loss);
        report.heldout_loss.push(heldout_loss);
        report.stop_epoch = epoch;

        if heldout_loss < best.0 {
            best = (heldout_loss, params.clone());
            report.best_epoch = epoch;
            since_best = 0;
        } else {
            since_best += 1;
        }
        if since_best >= config.patience && epoch < config.max_epochs {
            report.stop_reason = StopReason::Patience;
            break;
        }
    }
    Ok((best.1, report))
}

/// Variations below [`HELDOUT_FROM`] train, the rest are held out. With
/// `exclude_ood`, out-of-domain families are dropped from the training side.
pub fn split_by_variation(episodes: &[Episode], exclude_ood: bool) -> (Vec<Episode>, Vec<Episode>) {
    let mut train = Vec::new();
    let mut heldout = Vec::new();
    for ep in episodes {
        if ep.variation >= HELDOUT_FROM {
            heldout.push(ep.clone());
        } else if !(exclude_ood && ep.family.is_ood()) {
            train.push(ep.clone());
        }
    }
    (train, heldout)
}
