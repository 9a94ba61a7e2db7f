//! Shift policy: actor-critic network trained with PPO.

use std::collections::VecDeque;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::nn::{entropy, log_softmax, sample, softmax, Adam, Mlp};
use super::RlError;
use crate::geometry::{Direction, InternalRepresentation, Rect};

/// Features per component: one-hot kind (4) and normalised ll/ur (4).
pub const FEATURES_PER_COMPONENT: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InnerAgentConfig {
    pub lr: f64,
    pub blocks: usize,
    /// Hidden units per block, per component.
    pub units_per_component: usize,
    pub gamma: f64,
    pub clip: f64,
    pub value_coef: f64,
    pub entropy_coef: f64,
    pub batch: usize,
    pub replay: usize,
    pub failure_penalty: f64,
    /// Passes over the replay memory per update.
    pub epochs: usize,
}

impl Default for InnerAgentConfig {
    fn default() -> Self {
        Self {
            lr: 1e-5,
            blocks: 5,
            units_per_component: 128,
            gamma: 0.99,
            clip: 0.2,
            value_coef: 0.5,
            entropy_coef: 0.01,
            batch: 16,
            replay: 128,
            failure_penalty: -0.001,
            epochs: 1,
        }
    }
}

/// Component-wise features normalised to the die box.
pub fn features(ir: &InternalRepresentation, die: Rect) -> Vec<f64> {
    let (w, h) = (die.width().max(1) as f64, die.height().max(1) as f64);
    let mut out = Vec::with_capacity(ir.tiles.len() * FEATURES_PER_COMPONENT);
    for t in &ir.tiles {
        let mut onehot = [0.0; 4];
        onehot[t.kind.index()] = 1.0;
        out.extend(onehot);
        out.push((t.rect.ll.x - die.ll.x) as f64 / w);
        out.push((t.rect.ll.y - die.ll.y) as f64 / h);
        out.push((t.rect.ur.x - die.ll.x) as f64 / w);
        out.push((t.rect.ur.y - die.ll.y) as f64 / h);
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct Action {
    pub component: usize,
    pub direction: Direction,
    pub log_prob: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub state: Vec<f64>,
    pub component: usize,
    pub direction: usize,
    pub log_prob: f64,
    pub reward: f64,
    pub value: f64,
    pub terminal: bool,
    /// Discounted return, filled in when the episode is closed.
    pub ret: f64,
}

#[derive(Debug, Clone)]
pub struct InnerAgent {
    pub cfg: InnerAgentConfig,
    pub components: usize,
    pub net: Mlp,
    adam: Adam,
    pub replay: VecDeque<Transition>,
}

/// Policy outputs for one state.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyOutput {
    pub component: Vec<f64>,
    pub direction: Vec<f64>,
    pub value: f64,
}

impl InnerAgent {
    pub fn new(components: usize, cfg: InnerAgentConfig, rng: &mut impl Rng) -> Self {
        let units = cfg.units_per_component * components;
        let mut trunk = vec![FEATURES_PER_COMPONENT * components];
        trunk.extend(std::iter::repeat(units).take(cfg.blocks));
        let net = Mlp::new(trunk, vec![components, 4, 1], rng);
        let adam = Adam::new(cfg.lr, net.param_count());
        Self {
            cfg,
            components,
            net,
            adam,
            replay: VecDeque::new(),
        }
    }

    pub fn policy(&self, state: &[f64]) -> PolicyOutput {
        let f = self.net.forward(state);
        PolicyOutput {
            component: softmax(&f.heads[0]),
            direction: softmax(&f.heads[1]),
            value: f.heads[2][0],
        }
    }

    pub fn act(&self, state: &[f64], rng: &mut impl Rng) -> Action {
        let p = self.policy(state);
        let c = sample(&p.component, rng);
        let d = sample(&p.direction, rng);
        Action {
            component: c,
            direction: Direction::ALL[d],
            log_prob: p.component[c].ln() + p.direction[d].ln(),
            value: p.value,
        }
    }

    /// Fills in discounted returns and moves the episode into replay memory,
    /// evicting the oldest transitions beyond capacity.
    pub fn close_episode(&mut self, mut steps: Vec<Transition>) {
        let mut g = 0.0;
        for t in steps.iter_mut().rev() {
            if t.terminal {
                g = 0.0;
            }
            g = t.reward + self.cfg.gamma * g;
            t.ret = g;
        }
        self.replay.extend(steps);
        while self.replay.len() > self.cfg.replay {
            self.replay.pop_front();
        }
    }

    /// Clipped surrogate, value and entropy terms averaged over `batch`.
    pub fn ppo_loss(&self, batch: &[Transition]) -> f64 {
        self.ppo_eval(batch, None)
    }

    pub fn ppo_gradient(&self, batch: &[Transition]) -> (f64, Vec<f64>) {
        let mut grad = vec![0.0; self.net.param_count()];
        let loss = self.ppo_eval(batch, Some(&mut grad));
        (loss, grad)
    }

    fn ppo_eval(&self, batch: &[Transition], mut grad: Option<&mut Vec<f64>>) -> f64 {
        let n = batch.len().max(1) as f64;
        let (eps, cv, ce) = (self.cfg.clip, self.cfg.value_coef, self.cfg.entropy_coef);
        let mut total = 0.0;
        for t in batch {
            let f = self.net.forward(&t.state);
            let lc = log_softmax(&f.heads[0]);
            let ld = log_softmax(&f.heads[1]);
            let value = f.heads[2][0];
            let logp = lc[t.component] + ld[t.direction];
            let ratio = (logp - t.log_prob).exp();
            let adv = t.ret - t.value;
            let clipped = ratio.clamp(1.0 - eps, 1.0 + eps);
            let surrogate = (ratio * adv).min(clipped * adv);
            let pc: Vec<f64> = lc.iter().map(|v| v.exp()).collect();
            let pd: Vec<f64> = ld.iter().map(|v| v.exp()).collect();
            let (hc, hd) = (entropy(&pc), entropy(&pd));
            total += -surrogate + cv * (value - t.ret).powi(2) - ce * (hc + hd);

            let Some(g) = grad.as_deref_mut() else { continue };
            // The clipped branch only wins when the ratio is outside the band,
            // where it is constant.
            let ds = if ratio * adv <= clipped * adv { ratio * adv } else { 0.0 };
            let head_grad = |p: &[f64], h: f64, chosen: usize| -> Vec<f64> {
                p.iter()
                    .enumerate()
                    .map(|(k, &pk)| {
                        let onehot = if k == chosen { 1.0 } else { 0.0 };
                        let lp = if pk > 0.0 { pk.ln() } else { 0.0 };
                        (-ds * (onehot - pk) + ce * pk * (lp + h)) / n
                    })
                    .collect()
            };
            let dheads = vec![
                head_grad(&pc, hc, t.component),
                head_grad(&pd, hd, t.direction),
                vec![2.0 * cv * (value - t.ret) / n],
            ];
            self.net.backward(&f, &dheads, g);
        }
        total / n
    }

    /// Runs `epochs` passes of minibatch PPO over the replay memory once it
    /// holds at least one batch. Returns the mean minibatch loss.
    pub fn update(&mut self, rng: &mut impl Rng) -> Result<Option<f64>, RlError> {
        let b = self.cfg.batch.max(1);
        if self.replay.len() < b {
            return Ok(None);
        }
        let mut losses = Vec::new();
        for _ in 0..self.cfg.epochs.max(1) {
            let mut order: Vec<usize> = (0..self.replay.len()).collect();
            order.shuffle(rng);
            for chunk in order.chunks_exact(b) {
                let batch: Vec<Transition> = chunk.iter().map(|&i| self.replay[i].clone()).collect();
                let (loss, grad) = self.ppo_gradient(&batch);
                if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                    return Err(RlError::NonFinite("inner gradient"));
                }
                self.adam.step(&mut self.net.params, &grad);
                losses.push(loss);
            }
        }
        Ok(Some(losses.iter().sum::<f64>() / losses.len() as f64))
    }
}
