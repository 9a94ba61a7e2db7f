use serde::{Deserialize, Serialize};

use crate::metrics::QoS;

/// Direction of the deltas fed to both agents.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RewardSign {
    /// `baseline − variant`: an improvement earns a positive reward.
    #[default]
    Improvement,
    /// `variant − baseline`, as the reward is sometimes written.
    Literal,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DeltaScale {
    /// Deltas divided by the baseline value.
    #[default]
    Relative,
    /// Deltas in volts and µm².
    Raw,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AreaMeasure {
    /// Bounding box of all tiles; changes with shifts.
    #[default]
    BoundingBox,
    /// Sum of tile areas; constant within a netlist.
    Components,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RewardConfig {
    pub alpha: f64,
    pub beta: f64,
    pub sign: RewardSign,
    pub scale: DeltaScale,
    pub area: AreaMeasure,
}

impl Default for RewardConfig {
    fn default() -> Self {
        Self {
            alpha: 5.0,
            beta: 1.5,
            sign: RewardSign::default(),
            scale: DeltaScale::default(),
            area: AreaMeasure::default(),
        }
    }
}

impl RewardConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.alpha > 0.0 && self.beta > 0.0) {
            return Err("reward weights must be positive".into());
        }
        Ok(())
    }

    fn delta(&self, base: f64, value: f64) -> f64 {
        let d = match self.sign {
            RewardSign::Improvement => base - value,
            RewardSign::Literal => value - base,
        };
        match self.scale {
            DeltaScale::Relative if base != 0.0 => d / base,
            _ => d,
        }
    }

    fn area_of(&self, q: &QoS) -> f64 {
        match self.area {
            AreaMeasure::BoundingBox => q.bbox_area,
            AreaMeasure::Components => q.area,
        }
    }

    /// Reward of one validated variant against its baseline.
    pub fn step_reward(&self, variant: &QoS, baseline: &QoS) -> f64 {
        self.alpha * self.delta(baseline.pscore, variant.pscore)
            + self.beta * self.delta(self.area_of(baseline), self.area_of(variant))
    }

    /// Best step reward over a set of variants; 0 when there are none.
    pub fn netlist_reward<'a>(&self, variants: impl IntoIterator<Item = &'a QoS>, baseline: &QoS) -> f64 {
        variants
            .into_iter()
            .map(|q| self.step_reward(q, baseline))
            .fold(None, |best: Option<f64>, r| Some(best.map_or(r, |b| b.max(r))))
            .unwrap_or(0.0)
    }
}
