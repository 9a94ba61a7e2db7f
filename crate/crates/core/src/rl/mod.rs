//! Two-level learning strategy.
//!
//! An outer policy picks a finger assignment (REINFORCE); an inner
//! actor-critic policy picks component shifts on that netlist's layout
//! (PPO). Both are small dense networks trained from scratch.

pub mod inner;
pub mod nn;
pub mod outer;
pub mod reward;

use std::collections::BTreeMap;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use inner::{features, InnerAgent, InnerAgentConfig, Transition};
pub use nn::{Adam, Mlp};
pub use outer::{OuterAgent, OuterAgentConfig, OuterEpisode, OuterSample};
pub use reward::{AreaMeasure, DeltaScale, RewardConfig, RewardSign};

use crate::explore::{baseline_pnr, Evaluator, ExplorationConfig, NetlistRun, Variant};
use crate::netlist::{Circuit, ConcreteNetlist, FingerAssignment, MatchingPairs, Testbench, DEFAULT_FINGER_SET};
use crate::tech::TechnologyCard;

#[derive(Debug, Error)]
pub enum RlError {
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("no buildable finger assignment after {0} draws")]
    NoValidAssignment(usize),
    #[error("no netlists to explore")]
    NoNetlists,
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RlConfig {
    pub outer: OuterAgentConfig,
    pub inner: InnerAgentConfig,
    pub reward: RewardConfig,
    /// Finger-assignment selections.
    pub outer_iterations: usize,
    /// Shift attempts per selection; a failed attempt ends the episode and
    /// the next one restarts from the baseline.
    pub inner_steps: usize,
    pub seed: u64,
}

impl Default for RlConfig {
    fn default() -> Self {
        Self {
            outer: OuterAgentConfig::default(),
            inner: InnerAgentConfig::default(),
            reward: RewardConfig::default(),
            outer_iterations: 4,
            inner_steps: 25,
            seed: 0,
        }
    }
}

/// One line of the training log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum LogRecord {
    Outer {
        iteration: usize,
        netlist: usize,
        reward: f64,
        penalties: usize,
        loss: f64,
    },
    Inner {
        iteration: usize,
        step: usize,
        netlist: usize,
        component: String,
        direction: String,
        reward: f64,
        terminal: bool,
        pscore: Option<f64>,
    },
    Ppo {
        iteration: usize,
        loss: f64,
    },
}

impl LogRecord {
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("log record serializes")
    }
}

/// Outcome of one outer iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationSummary {
    pub netlist: usize,
    pub reward: f64,
    pub variants: usize,
    pub best_pscore: Option<f64>,
}

pub struct RlExplorer<'a> {
    pub template: &'a Circuit,
    pub netlists: &'a [ConcreteNetlist],
    pub tb: &'a Testbench,
    pub tech: &'a TechnologyCard,
    pub explore: &'a ExplorationConfig,
    pub cfg: &'a RlConfig,
    pub outer: OuterAgent,
    pub inner: Option<InnerAgent>,
    rng: ChaCha8Rng,
    by_assignment: BTreeMap<FingerAssignment, usize>,
    baselines: BTreeMap<usize, Option<(Evaluator, Variant)>>,
    next_variant: BTreeMap<usize, usize>,
}

impl<'a> RlExplorer<'a> {
    pub fn new(
        template: &'a Circuit,
        pairs: &MatchingPairs,
        netlists: &'a [ConcreteNetlist],
        tb: &'a Testbench,
        tech: &'a TechnologyCard,
        explore: &'a ExplorationConfig,
        cfg: &'a RlConfig,
    ) -> Result<Self, RlError> {
        if netlists.is_empty() {
            return Err(RlError::NoNetlists);
        }
        cfg.reward.validate().map_err(RlError::Config)?;
        explore.validate().map_err(RlError::Config)?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let outer = OuterAgent::new(template, pairs, &DEFAULT_FINGER_SET, cfg.outer.clone(), &mut rng);
        let by_assignment = netlists
            .iter()
            .enumerate()
            .map(|(k, n)| (n.assignment.clone(), k))
            .collect();
        Ok(Self {
            template,
            netlists,
            tb,
            tech,
            explore,
            cfg,
            outer,
            inner: None,
            rng,
            by_assignment,
            baselines: BTreeMap::new(),
            next_variant: BTreeMap::new(),
        })
    }

    fn baseline(&mut self, k: usize) -> Option<&(Evaluator, Variant)> {
        let n = &self.netlists[k];
        self.baselines
            .entry(k)
            .or_insert_with(|| baseline_pnr(n.index, &n.circuit, self.tb, self.tech, self.explore).ok())
            .as_ref()
    }

    /// Selects a netlist whose baseline builds; unbuildable and unknown
    /// assignments become penalty episodes.
    fn select(&mut self) -> Result<(OuterSample, usize, Vec<OuterEpisode>), RlError> {
        let mut penalties = Vec::new();
        for _ in 0..self.cfg.outer.max_resamples {
            let map = &self.by_assignment;
            let (s, mut pen) = self.outer.select(&mut self.rng, |a| map.contains_key(a))?;
            penalties.append(&mut pen);
            let k = self.by_assignment[&s.assignment];
            if self.baseline(k).is_some() {
                return Ok((s, k, penalties));
            }
            penalties.push(OuterEpisode {
                input: s.input,
                choices: s.choices,
                reward: self.cfg.outer.penalty,
            });
        }
        Err(RlError::NoValidAssignment(self.cfg.outer.max_resamples))
    }

    /// One outer iteration: select, explore with the inner agent, update both.
    pub fn iteration(
        &mut self,
        it: usize,
        log: &mut dyn FnMut(&LogRecord),
    ) -> Result<(NetlistRun, IterationSummary), RlError> {
        let (sample, k, mut episodes) = self.select()?;
        let (ev, base) = self.baseline(k).cloned().expect("selected baseline exists");
        let components = base.ir.tiles.len();
        let inner_cfg = self.cfg.inner.clone();
        let inner = self
            .inner
            .get_or_insert_with(|| InnerAgent::new(components, inner_cfg, &mut self.rng));

        let netlist = ev.netlist;
        let mut j = *self.next_variant.get(&k).unwrap_or(&1);
        let mut variants: Vec<Variant> = Vec::new();
        let mut current = base.ir.clone();
        let mut episode: Vec<Transition> = Vec::new();
        for step in 1..=self.cfg.inner_steps {
            let state = features(&current, ev.die);
            let a = inner.act(&state, &mut self.rng);
            let name = current.tiles[a.component].name.clone();
            let outcome = current
                .shift_component(&name, a.direction, self.explore.shift)
                .map_err(Into::into)
                .and_then(|next| ev.evaluate(&next, j));
            let (reward, terminal, pscore) = match outcome {
                Ok(v) => {
                    let r = self.cfg.reward.step_reward(&v.qos, &base.qos);
                    let p = v.qos.pscore;
                    current = v.ir.clone();
                    variants.push(v);
                    j += 1;
                    (r, false, Some(p))
                }
                Err(_) => (self.cfg.inner.failure_penalty, true, None),
            };
            log(&LogRecord::Inner {
                iteration: it,
                step,
                netlist,
                component: name,
                direction: a.direction.to_string(),
                reward,
                terminal,
                pscore,
            });
            episode.push(Transition {
                state,
                component: a.component,
                direction: crate::geometry::Direction::ALL.iter().position(|d| *d == a.direction).unwrap(),
                log_prob: a.log_prob,
                reward,
                value: a.value,
                terminal,
                ret: 0.0,
            });
            if terminal {
                inner.close_episode(std::mem::take(&mut episode));
                if let Some(loss) = inner.update(&mut self.rng)? {
                    log(&LogRecord::Ppo { iteration: it, loss });
                }
                current = base.ir.clone();
            }
        }
        if !episode.is_empty() {
            inner.close_episode(episode);
            if let Some(loss) = inner.update(&mut self.rng)? {
                log(&LogRecord::Ppo { iteration: it, loss });
            }
        }
        self.next_variant.insert(k, j);

        let reward = self.cfg.reward.netlist_reward(variants.iter().map(|v| &v.qos), &base.qos);
        let penalties = episodes.len();
        episodes.push(OuterEpisode {
            input: sample.input.clone(),
            choices: sample.choices.clone(),
            reward,
        });
        let loss = self.outer.update(&episodes)?;
        self.outer.commit(&sample);
        log(&LogRecord::Outer {
            iteration: it,
            netlist,
            reward,
            penalties,
            loss,
        });
        let summary = IterationSummary {
            netlist,
            reward,
            variants: variants.len(),
            best_pscore: variants.iter().map(|v| v.qos.pscore).reduce(f64::min),
        };
        let run = NetlistRun {
            netlist: self.netlists[k].clone(),
            baseline: Some(base),
            pre: Some(ev.pre.clone()),
            variants,
            error: None,
        };
        Ok((run, summary))
    }

    /// Writes both networks as `outer.ckpt` and `inner.ckpt` under `dir`.
    pub fn save_checkpoints(&self, dir: &Path) -> Result<(), RlError> {
        std::fs::create_dir_all(dir)?;
        let mut f = std::io::BufWriter::new(std::fs::File::create(dir.join("outer.ckpt"))?);
        self.outer.net.write_checkpoint(&mut f)?;
        if let Some(inner) = &self.inner {
            let mut f = std::io::BufWriter::new(std::fs::File::create(dir.join("inner.ckpt"))?);
            inner.net.write_checkpoint(&mut f)?;
        }
        Ok(())
    }
}

/// Runs `cfg.outer_iterations` outer iterations, handing every iteration's
/// layouts to `sink`.
#[allow(clippy::too_many_arguments)]
pub fn rl_explore(
    template: &Circuit,
    pairs: &MatchingPairs,
    netlists: &[ConcreteNetlist],
    tb: &Testbench,
    tech: &TechnologyCard,
    explore: &ExplorationConfig,
    cfg: &RlConfig,
    log: &mut dyn FnMut(&LogRecord),
    sink: &mut dyn FnMut(NetlistRun),
) -> Result<Vec<IterationSummary>, RlError> {
    let mut ex = RlExplorer::new(template, pairs, netlists, tb, tech, explore, cfg)?;
    let mut out = Vec::with_capacity(cfg.outer_iterations);
    for it in 0..cfg.outer_iterations {
        let (run, summary) = ex.iteration(it, log)?;
        sink(run);
        out.push(summary);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::netlist::{apply_fingers, enumerate_finger_permutations, parse_pairs, parse_template, parse_testbench};
    use crate::par::Parallelism;

    fn setup(name: &str) -> (Circuit, MatchingPairs, Vec<ConcreteNetlist>, Testbench) {
        let f = fixtures::by_name(name).unwrap();
        let t = parse_template(f.template).unwrap();
        let p = parse_pairs(f.pairs).unwrap();
        let tb = parse_testbench(f.testbench).unwrap();
        let all = enumerate_finger_permutations(&t, &p, &DEFAULT_FINGER_SET, 150, 1000).unwrap();
        let nl = all.iter().enumerate().map(|(i, a)| apply_fingers(&t, a, i).unwrap()).collect();
        (t, p, nl, tb)
    }

    fn small_cfg() -> RlConfig {
        RlConfig {
            outer: OuterAgentConfig { units_per_device: 4, ..Default::default() },
            inner: InnerAgentConfig { units_per_component: 8, batch: 4, ..Default::default() },
            outer_iterations: 2,
            inner_steps: 6,
            seed: 3,
            ..Default::default()
        }
    }

    #[test]
    fn runs_are_reproducible_and_logged() {
        let (t, p, nl, tb) = setup("five_transistor_ota");
        let tech = TechnologyCard::default();
        let ex = ExplorationConfig { parallelism: Parallelism::Sequential, ..Default::default() };
        let cfg = small_cfg();
        let go = || {
            let mut lines = Vec::new();
            let mut runs = Vec::new();
            let s = rl_explore(&t, &p, &nl, &tb, &tech, &ex, &cfg, &mut |r| lines.push(r.to_json_line()), &mut |r| {
                runs.push((r.netlist.index, r.variants.iter().map(|v| (v.qos.variant, v.ir.moves.clone())).collect::<Vec<_>>()))
            })
            .unwrap();
            (s, lines, runs)
        };
        let a = go();
        let b = go();
        assert_eq!(a.0, b.0);
        assert_eq!(a.1, b.1);
        assert_eq!(a.2, b.2);
        assert!(a.1.iter().any(|l| l.contains("\"kind\":\"outer\"")));
        let inner_lines = a.1.iter().filter(|l| l.contains("\"kind\":\"inner\"")).count();
        assert_eq!(inner_lines, 12);
        for (_, vs) in &a.2 {
            for (k, (j, _)) in vs.iter().enumerate() {
                assert!(*j >= k + 1);
            }
        }
    }

    #[test]
    fn single_netlist_circuit_is_inner_only() {
        let (t, p, nl, tb) = setup("rc_lowpass");
        assert_eq!(nl.len(), 1);
        let tech = TechnologyCard::default();
        let ex = ExplorationConfig::default();
        let s = rl_explore(&t, &p, &nl, &tb, &tech, &ex, &small_cfg(), &mut |_| {}, &mut |_| {}).unwrap();
        assert!(s.iter().all(|x| x.netlist == 0));
    }

    #[test]
    fn checkpoints_written() {
        let (t, p, nl, tb) = setup("rc_lowpass");
        let tech = TechnologyCard::default();
        let ex = ExplorationConfig::default();
        let cfg = small_cfg();
        let mut e = RlExplorer::new(&t, &p, &nl, &tb, &tech, &ex, &cfg).unwrap();
        e.iteration(0, &mut |_| {}).unwrap();
        let dir = tempfile::tempdir().unwrap();
        e.save_checkpoints(dir.path()).unwrap();
        let mut f = std::fs::File::open(dir.path().join("inner.ckpt")).unwrap();
        let net = Mlp::read_checkpoint(&mut f).unwrap();
        assert_eq!(net, e.inner.unwrap().net);
    }
}
