//! Finger-assignment policy trained with REINFORCE.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::nn::{log_softmax, sample, softmax, Adam, Mlp};
use super::RlError;
use crate::netlist::{Circuit, FingerAssignment, MatchingPairs};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OuterAgentConfig {
    pub lr: f64,
    pub blocks: usize,
    /// Hidden units per block, per transistor.
    pub units_per_device: usize,
    /// Reward for an assignment that cannot be built.
    pub penalty: f64,
    pub max_resamples: usize,
}

impl Default for OuterAgentConfig {
    fn default() -> Self {
        Self {
            lr: 1e-5,
            blocks: 5,
            units_per_device: 64,
            penalty: -10.0,
            max_resamples: 64,
        }
    }
}

/// One sampled assignment; `choices[d]` indexes the finger value list.
#[derive(Debug, Clone, PartialEq)]
pub struct OuterSample {
    pub input: Vec<f64>,
    pub choices: Vec<usize>,
    pub assignment: FingerAssignment,
    pub log_prob: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OuterEpisode {
    pub input: Vec<f64>,
    pub choices: Vec<usize>,
    pub reward: f64,
}

#[derive(Debug, Clone)]
pub struct OuterAgent {
    pub cfg: OuterAgentConfig,
    /// MOS device names, sorted.
    pub names: Vec<String>,
    /// Index of the device whose sample each device copies (itself for leaders).
    pub leaders: Vec<usize>,
    pub values: Vec<u32>,
    pub net: Mlp,
    adam: Adam,
    /// Previous assignment, normalised by the largest finger value.
    prev: Vec<f64>,
}

impl OuterAgent {
    pub fn new(
        template: &Circuit,
        pairs: &MatchingPairs,
        values: &[u32],
        cfg: OuterAgentConfig,
        rng: &mut impl Rng,
    ) -> Self {
        let mut names: Vec<String> = template.mos_devices().map(|d| d.name.clone()).collect();
        names.sort();
        let d = names.len();
        let mut leaders: Vec<usize> = (0..d).collect();
        let idx = |n: &str| names.iter().position(|m| m == n);
        for (a, b) in &pairs.pairs {
            if let (Some(a), Some(b)) = (idx(a), idx(b)) {
                let (lo, hi) = (leaders[a].min(leaders[b]), leaders[a].max(leaders[b]));
                for l in leaders.iter_mut() {
                    if *l == hi {
                        *l = lo;
                    }
                }
            }
        }
        let units = cfg.units_per_device * d.max(1);
        let mut trunk = vec![d.max(1)];
        trunk.extend(std::iter::repeat(units).take(cfg.blocks));
        let net = Mlp::new(trunk, vec![values.len(); d], rng);
        let adam = Adam::new(cfg.lr, net.param_count());
        // Before any selection the input is the smallest finger count; an
        // all-zero input would leave every ReLU of the trunk inactive.
        let top = values.iter().copied().max().unwrap_or(1) as f64;
        let first = values.iter().copied().min().unwrap_or(1) as f64 / top;
        Self {
            cfg,
            names,
            leaders,
            values: values.to_vec(),
            net,
            adam,
            prev: vec![first; d.max(1)],
        }
    }

    pub fn input(&self) -> Vec<f64> {
        self.prev.clone()
    }

    /// Per-device categorical distributions for an input.
    pub fn distributions(&self, input: &[f64]) -> Vec<Vec<f64>> {
        self.net.forward(input).heads.iter().map(|z| softmax(z)).collect()
    }

    /// Log-probability of `choices`; copied devices contribute nothing.
    pub fn log_prob(&self, input: &[f64], choices: &[usize]) -> f64 {
        let f = self.net.forward(input);
        (0..self.names.len())
            .filter(|&d| self.leaders[d] == d)
            .map(|d| log_softmax(&f.heads[d])[choices[d]])
            .sum()
    }

    pub fn sample(&self, rng: &mut impl Rng) -> OuterSample {
        let input = self.input();
        let probs = self.distributions(&input);
        let mut choices = vec![0; self.names.len()];
        let mut log_prob = 0.0;
        for d in 0..self.names.len() {
            if self.leaders[d] == d {
                choices[d] = sample(&probs[d], rng);
                log_prob += probs[d][choices[d]].ln();
            } else {
                choices[d] = choices[self.leaders[d]];
            }
        }
        let assignment = FingerAssignment(
            self.names
                .iter()
                .zip(&choices)
                .map(|(n, &k)| (n.clone(), self.values[k]))
                .collect(),
        );
        OuterSample {
            input,
            choices,
            assignment,
            log_prob,
        }
    }

    /// Remembers `s` as the conditioning input of the next selection.
    pub fn commit(&mut self, s: &OuterSample) {
        let top = self.values.iter().copied().max().unwrap_or(1) as f64;
        for (p, &k) in self.prev.iter_mut().zip(&s.choices) {
            *p = self.values[k] as f64 / top;
        }
    }

    /// Samples until `accept` holds, recording a penalty episode for every
    /// rejected draw.
    pub fn select(
        &self,
        rng: &mut impl Rng,
        mut accept: impl FnMut(&FingerAssignment) -> bool,
    ) -> Result<(OuterSample, Vec<OuterEpisode>), RlError> {
        let mut penalties = Vec::new();
        for _ in 0..self.cfg.max_resamples {
            let s = self.sample(rng);
            if accept(&s.assignment) {
                return Ok((s, penalties));
            }
            penalties.push(OuterEpisode {
                input: s.input,
                choices: s.choices,
                reward: self.cfg.penalty,
            });
        }
        Err(RlError::NoValidAssignment(self.cfg.max_resamples))
    }

    /// `−mean(R · log π)` over episodes.
    pub fn loss(&self, episodes: &[OuterEpisode]) -> f64 {
        let n = episodes.len().max(1) as f64;
        -episodes
            .iter()
            .map(|e| e.reward * self.log_prob(&e.input, &e.choices))
            .sum::<f64>()
            / n
    }

    pub fn gradient(&self, episodes: &[OuterEpisode]) -> Vec<f64> {
        let n = episodes.len().max(1) as f64;
        let mut grad = vec![0.0; self.net.param_count()];
        for e in episodes {
            if e.reward == 0.0 {
                continue;
            }
            let f = self.net.forward(&e.input);
            let dheads: Vec<Vec<f64>> = (0..self.names.len())
                .map(|d| {
                    if self.leaders[d] != d {
                        return vec![0.0; self.values.len()];
                    }
                    let p = softmax(&f.heads[d]);
                    p.iter()
                        .enumerate()
                        .map(|(k, pk)| {
                            let onehot = if k == e.choices[d] { 1.0 } else { 0.0 };
                            -e.reward * (onehot - pk) / n
                        })
                        .collect()
                })
                .collect();
            self.net.backward(&f, &dheads, &mut grad);
        }
        grad
    }

    /// One Adam step on the REINFORCE loss. Returns the loss before the step.
    pub fn update(&mut self, episodes: &[OuterEpisode]) -> Result<f64, RlError> {
        let loss = self.loss(episodes);
        let grad = self.gradient(episodes);
        if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(RlError::NonFinite("outer gradient"));
        }
        self.adam.step(&mut self.net.params, &grad);
        Ok(loss)
    }
}
