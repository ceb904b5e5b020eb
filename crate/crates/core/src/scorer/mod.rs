//! Two-tower bilinear action scorer with hand-written backpropagation.
//!
//! ```text
//! u = tanh(A · mean(E[state tokens]) + a)
//! v = tanh(B · mean(E[action tokens]) + b)
//! score = uᵀ W v + c
//! ```

pub mod checkpoint;
pub mod vocab;

use rand::distributions::{Distribution, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::negmine::TrainingInstance;
use crate::rng;
use crate::training::objective::{score_gradients, total_loss, LossHyper, RegScope};

pub use checkpoint::{load_checkpoint, read_checkpoint, save_checkpoint, Provenance};
pub use vocab::Vocabulary;

pub const INIT_RANGE: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dims {
    pub vocab: usize,
    /// Embedding width.
    pub embed: usize,
    /// Tower output width.
    pub hidden: usize,
}

impl Dims {
    pub fn new(vocab: usize, embed: usize, hidden: usize) -> Self {
        Dims {
            vocab,
            embed,
            hidden,
        }
    }

    pub fn param_count(&self) -> usize {
        self.vocab * self.embed
            + 2 * (self.hidden * self.embed + self.hidden)
            + self.hidden * self.hidden
            + 1
    }
}

/// Every learnable tensor, row-major. Also used for gradients and optimizer moments.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensors {
    /// `vocab × embed`
    pub embeddings: Vec<f64>,
    /// `hidden × embed`
    pub state_weight: Vec<f64>,
    pub state_bias: Vec<f64>,
    /// `hidden × embed`
    pub action_weight: Vec<f64>,
    pub action_bias: Vec<f64>,
    /// `hidden × hidden`
    pub interaction: Vec<f64>,
    pub bias: f64,
}

pub type GradientSet = Tensors;

impl Tensors {
    pub fn zeros(d: Dims) -> Self {
        Tensors {
            embeddings: vec![0.0; d.vocab * d.embed],
            state_weight: vec![0.0; d.hidden * d.embed],
            state_bias: vec![0.0; d.hidden],
            action_weight: vec![0.0; d.hidden * d.embed],
            action_bias: vec![0.0; d.hidden],
            interaction: vec![0.0; d.hidden * d.hidden],
            bias: 0.0,
        }
    }

    /// Tensors in serialisation order.
    pub fn slices(&self) -> [&[f64]; 7] {
        [
            &self.embeddings,
            &self.state_weight,
            &self.state_bias,
            &self.action_weight,
            &self.action_bias,
            &self.interaction,
            std::slice::from_ref(&self.bias),
        ]
    }

    pub fn slices_mut(&mut self) -> [&mut [f64]; 7] {
        [
            &mut self.embeddings,
            &mut self.state_weight,
            &mut self.state_bias,
            &mut self.action_weight,
            &mut self.action_bias,
            &mut self.interaction,
            std::slice::from_mut(&mut self.bias),
        ]
    }

    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        self.slices().into_iter().flatten().copied()
    }

    pub fn sq_norm(&self) -> f64 {
        self.iter().map(|x| x * x).sum()
    }

    /// Squared norm of the tensors the penalty covers.
    pub fn reg_sq_norm(&self, scope: RegScope) -> f64 {
        match scope {
            RegScope::All => self.sq_norm(),
            RegScope::Interaction => {
                self.interaction.iter().map(|x| x * x).sum::<f64>() + self.bias * self.bias
            }
        }
    }

    /// `self += k · θ` restricted to the penalised tensors.
    pub fn add_reg_scaled(&mut self, w: &Tensors, k: f64, scope: RegScope) {
        match scope {
            RegScope::All => self.add_scaled(w, k),
            RegScope::Interaction => {
                for (x, y) in self.interaction.iter_mut().zip(&w.interaction) {
                    *x += k * y;
                }
                self.bias += k * w.bias;
            }
        }
    }

    pub fn all_finite(&self) -> bool {
        self.iter().all(f64::is_finite)
    }

    /// `self += k · other`
    pub fn add_scaled(&mut self, other: &Tensors, k: f64) {
        for (dst, src) in self.slices_mut().into_iter().zip(other.slices()) {
            for (x, y) in dst.iter_mut().zip(src) {
                *x += k * y;
            }
        }
    }

    pub fn scale(&mut self, k: f64) {
        for s in self.slices_mut() {
            s.iter_mut().for_each(|x| *x *= k);
        }
    }

    pub fn len(&self) -> usize {
        self.slices().iter().map(|s| s.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScorerParams {
    pub vocab: Vocabulary,
    pub dims: Dims,
    pub weights: Tensors,
}

/// Cached forward pass of one tower.
struct Encoded {
    tokens: Vec<u32>,
    pooled: Vec<f64>,
    out: Vec<f64>,
}

/// Embeddings and affine weights uniform in ±[`INIT_RANGE`], biases zero.
pub fn init_params(
    seed: u64,
    vocab: Vocabulary,
    embed: usize,
    hidden: usize,
) -> Result<ScorerParams> {
    if embed == 0 || hidden == 0 {
        return Err(Error::Config("scorer dims must be positive".into()));
    }
    let dims = Dims::new(vocab.len(), embed, hidden);
    let mut w = Tensors::zeros(dims);
    let mut rng = rng::stream(seed, "scorer-init");
    let dist = Uniform::new_inclusive(-INIT_RANGE, INIT_RANGE);
    for t in [
        &mut w.embeddings,
        &mut w.state_weight,
        &mut w.action_weight,
        &mut w.interaction,
    ] {
        t.iter_mut().for_each(|x| *x = dist.sample(&mut rng));
    }
    Ok(ScorerParams {
        vocab,
        dims,
        weights: w,
    })
}

impl ScorerParams {
    pub fn zeros(vocab: Vocabulary, embed: usize, hidden: usize) -> Self {
        let dims = Dims::new(vocab.len(), embed, hidden);
        ScorerParams {
            vocab,
            dims,
            weights: Tensors::zeros(dims),
        }
    }

    fn encode(&self, text: &str, weight: &[f64], bias: &[f64]) -> Encoded {
        let (d, h) = (self.dims.embed, self.dims.hidden);
        let tokens = self.vocab.tokenize(text);
        let mut pooled = vec![0.0; d];
        for &t in &tokens {
            let row = &self.weights.embeddings[t as usize * d..][..d];
            pooled.iter_mut().zip(row).for_each(|(p, e)| *p += e);
        }
        let inv = 1.0 / tokens.len() as f64;
        pooled.iter_mut().for_each(|p| *p *= inv);
        let out = (0..h)
            .map(|i| {
                let row = &weight[i * d..][..d];
                let z: f64 = row.iter().zip(&pooled).map(|(w, x)| w * x).sum::<f64>() + bias[i];
                z.tanh()
            })
            .collect();
        Encoded {
            tokens,
            pooled,
            out,
        }
    }

    fn encode_state(&self, text: &str) -> Encoded {
        self.encode(text, &self.weights.state_weight, &self.weights.state_bias)
    }

    fn encode_action(&self, text: &str) -> Encoded {
        self.encode(text, &self.weights.action_weight, &self.weights.action_bias)
    }

    fn bilinear(&self, u: &[f64], v: &[f64]) -> f64 {
        let h = self.dims.hidden;
        let w = &self.weights.interaction;
        let mut s = self.weights.bias;
        for (i, ui) in u.iter().enumerate() {
            let row = &w[i * h..][..h];
            s += ui * row.iter().zip(v).map(|(a, b)| a * b).sum::<f64>();
        }
        s
    }

    pub fn score(&self, state_prompt: &str, action: &str) -> f64 {
        let u = self.encode_state(state_prompt);
        let v = self.encode_action(action);
        self.bilinear(&u.out, &v.out)
    }

    /// Scores of several actions against one state, encoding the state once.
    pub fn score_many<S: AsRef<str>>(&self, state_prompt: &str, actions: &[S]) -> Vec<f64> {
        let u = self.encode_state(state_prompt);
        actions
            .iter()
            .map(|a| self.bilinear(&u.out, &self.encode_action(a.as_ref()).out))
            .collect()
    }

    fn instance_scores(&self, inst: &TrainingInstance) -> Result<(f64, Vec<f64>)> {
        if inst.negatives.is_empty() {
            return Err(Error::Data(format!(
                "instance {} has no negatives",
                inst.id()
            )));
        }
        let mut scores = self.score_many(
            &inst.state_prompt,
            &std::iter::once(inst.positive.as_str())
                .chain(inst.negative_surfaces())
                .collect::<Vec<_>>(),
        );
        let pos = scores.remove(0);
        Ok((pos, scores))
    }

    pub fn loss(&self, inst: &TrainingInstance, hyper: &LossHyper) -> Result<f64> {
        let (pos, negs) = self.instance_scores(inst)?;
        let l = total_loss(pos, &negs, self.weights.reg_sq_norm(hyper.l2_scope), hyper)?;
        if !l.is_finite() {
            return Err(Error::NonFinite(format!("instance {}", inst.id())));
        }
        Ok(l)
    }

    /// Objective value for one instance and its exact gradient.
    pub fn loss_and_gradients(
        &self,
        inst: &TrainingInstance,
        hyper: &LossHyper,
    ) -> Result<(f64, GradientSet)> {
        if inst.negatives.is_empty() {
            return Err(Error::Data(format!(
                "instance {} has no negatives",
                inst.id()
            )));
        }
        let (d, h) = (self.dims.embed, self.dims.hidden);
        let w = &self.weights;
        let u = self.encode_state(&inst.state_prompt);
        let actions: Vec<Encoded> = std::iter::once(inst.positive.as_str())
            .chain(inst.negative_surfaces())
            .map(|a| self.encode_action(a))
            .collect();
        let scores: Vec<f64> = actions
            .iter()
            .map(|v| self.bilinear(&u.out, &v.out))
            .collect();
        let loss = total_loss(
            scores[0],
            &scores[1..],
            w.reg_sq_norm(hyper.l2_scope),
            hyper,
        )?;
        if !loss.is_finite() {
            return Err(Error::NonFinite(format!("instance {}", inst.id())));
        }
        let dscore = score_gradients(scores[0], &scores[1..], hyper);

        let mut g = Tensors::zeros(self.dims);
        let mut du = vec![0.0; h];
        for (v, &gs) in actions.iter().zip(&dscore) {
            if gs == 0.0 {
                continue;
            }
            g.bias += gs;
            let mut dv = vec![0.0; h];
            for i in 0..h {
                let row = &w.interaction[i * h..][..h];
                let grow = &mut g.interaction[i * h..][..h];
                let mut wv = 0.0;
                for j in 0..h {
                    grow[j] += gs * u.out[i] * v.out[j];
                    dv[j] += gs * u.out[i] * row[j];
                    wv += row[j] * v.out[j];
                }
                du[i] += gs * wv;
            }
            self.backprop_tower(
                v,
                &dv,
                &w.action_weight,
                &mut g.action_weight,
                &mut g.action_bias,
                &mut g.embeddings,
                d,
                h,
            );
        }
        self.backprop_tower(
            &u,
            &du,
            &w.state_weight,
            &mut g.state_weight,
            &mut g.state_bias,
            &mut g.embeddings,
            d,
            h,
        );

        g.add_reg_scaled(w, 2.0 * hyper.lambda_r, hyper.l2_scope);
        Ok((loss, g))
    }

    #[allow(clippy::too_many_arguments)]
    fn backprop_tower(
        &self,
        enc: &Encoded,
        dout: &[f64],
        weight: &[f64],
        gweight: &mut [f64],
        gbias: &mut [f64],
        gemb: &mut [f64],
        d: usize,
        h: usize,
    ) {
        let mut dpooled = vec![0.0; d];
        for i in 0..h {
            let dz = dout[i] * (1.0 - enc.out[i] * enc.out[i]);
            if dz == 0.0 {
                continue;
            }
            gbias[i] += dz;
            let row = &weight[i * d..][..d];
            let grow = &mut gweight[i * d..][..d];
            for k in 0..d {
                grow[k] += dz * enc.pooled[k];
                dpooled[k] += dz * row[k];
            }
        }
        let inv = 1.0 / enc.tokens.len() as f64;
        for &t in &enc.tokens {
            let grow = &mut gemb[t as usize * d..][..d];
            grow.iter_mut()
                .zip(&dpooled)
                .for_each(|(g, dp)| *g += dp * inv);
        }
    }
}
