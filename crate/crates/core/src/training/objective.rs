//! Scalar loss terms over one positive score and its negatives.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Pooled InfoNCE plus margin hinge plus L2.
    Cwm,
    /// Independent binary cross-entropy per pair plus L2.
    Sft,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Cwm => "cwm",
            Mode::Sft => "sft",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cwm" => Ok(Mode::Cwm),
            "sft" => Ok(Mode::Sft),
            _ => Err(Error::Config(format!("unknown training mode {s:?}"))),
        }
    }
}

/// Which parameters the L2 penalty covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RegScope {
    /// Every learnable tensor.
    All,
    /// Only the interaction matrix and output bias; embeddings and tower
    /// affines are left free.
    #[default]
    Interaction,
}

/// Loss hyper-parameters shared by the scorer's gradient code and the trainer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossHyper {
    pub mode: Mode,
    pub tau: f64,
    pub gamma: f64,
    pub lambda_m: f64,
    pub lambda_r: f64,
    pub l2_scope: RegScope,
}

impl Default for LossHyper {
    fn default() -> Self {
        LossHyper {
            mode: Mode::Cwm,
            tau: 0.6,
            gamma: 2.0,
            lambda_m: 0.3,
            lambda_r: 0.005,
            l2_scope: RegScope::default(),
        }
    }
}

fn logsumexp(xs: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = xs.clone().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + xs.map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// `-log softmax(pos)` over `pos` and `negs` at temperature `tau`.
pub fn infonce_loss(pos: f64, negs: &[f64], tau: f64) -> Result<f64> {
    if !(tau > 0.0) {
        return Err(Error::Config(format!("tau must be positive, got {tau}")));
    }
    if negs.is_empty() {
        return Err(Error::Config(
            "infonce_loss needs at least one negative".into(),
        ));
    }
    let all = std::iter::once(pos)
        .chain(negs.iter().copied())
        .map(|s| s / tau);
    // rounding can leave a tiny negative when pos dominates
    Ok((logsumexp(all) - pos / tau).max(0.0))
}

/// Softmax of `scores / tau`, max-subtracted.
pub fn softmax(scores: &[f64], tau: f64) -> Vec<f64> {
    let max = scores
        .iter()
        .fold(f64::NEG_INFINITY, |m, &s| m.max(s / tau));
    let exps: Vec<f64> = scores.iter().map(|&s| (s / tau - max).exp()).collect();
    let z: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / z).collect()
}

pub fn margin_loss(pos: f64, negs: &[f64], gamma: f64) -> Result<f64> {
    if negs.is_empty() {
        return Err(Error::Config(
            "margin_loss needs at least one negative".into(),
        ));
    }
    let mean = negs.iter().sum::<f64>() / negs.len() as f64;
    Ok((gamma - pos + mean).max(0.0))
}

/// Numerically stable `log(1 + exp(x))`.
pub fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Mean binary cross-entropy with logits: positive labelled 1, negatives 0.
pub fn bce_loss(pos: f64, negs: &[f64]) -> f64 {
    let total = softplus(-pos) + negs.iter().map(|&n| softplus(n)).sum::<f64>();
    total / (negs.len() + 1) as f64
}

/// Full objective given scores and the squared parameter norm.
pub fn total_loss(pos: f64, negs: &[f64], sq_norm: f64, hyper: &LossHyper) -> Result<f64> {
    let data = match hyper.mode {
        Mode::Cwm => {
            infonce_loss(pos, negs, hyper.tau)?
                + hyper.lambda_m * margin_loss(pos, negs, hyper.gamma)?
        }
        Mode::Sft => {
            if negs.is_empty() {
                return Err(Error::Config("bce_loss needs at least one negative".into()));
            }
            bce_loss(pos, negs)
        }
    };
    Ok(data + hyper.lambda_r * sq_norm)
}

/// d(loss)/d(score) for each of `[pos, negs...]`, excluding the L2 term.
pub fn score_gradients(pos: f64, negs: &[f64], hyper: &LossHyper) -> Vec<f64> {
    let n = negs.len() as f64;
    let mut scores = Vec::with_capacity(negs.len() + 1);
    scores.push(pos);
    scores.extend_from_slice(negs);
    match hyper.mode {
        Mode::Cwm => {
            let mut g: Vec<f64> = softmax(&scores, hyper.tau)
                .into_iter()
                .map(|p| p / hyper.tau)
                .collect();
            g[0] -= 1.0 / hyper.tau;
            let mean = negs.iter().sum::<f64>() / n;
            if hyper.gamma - pos + mean > 0.0 {
                g[0] -= hyper.lambda_m;
                for gi in &mut g[1..] {
                    *gi += hyper.lambda_m / n;
                }
            }
            g
        }
        Mode::Sft => {
            let m = n + 1.0;
            scores
                .iter()
                .enumerate()
                .map(|(i, &s)| (sigmoid(s) - if i == 0 { 1.0 } else { 0.0 }) / m)
                .collect()
        }
    }
}
