//! TOML run configuration.
//!
//! ```toml
//! [tech]
//! wire_pitch = 100
//!
//! [explore]
//! variants = 50
//! max_retries = 32
//!
//! [rl]
//! outer_iterations = 4
//! inner_steps = 25
//!
//! [rl.reward]
//! sign = "improvement"   # or "literal"
//! scale = "relative"     # or "raw"
//! ```
//!
//! Every table and key is optional. Tables nested below `tech` (`mos`,
//! `layers`) must be given in full.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::explore::ExplorationConfig;
use crate::rl::RlConfig;
use crate::tech::{TechError, TechnologyCard};

/// Environment variable naming a config file when none is given explicitly.
pub const CONFIG_ENV: &str = "ANADEX_CONFIG";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Toml { path: PathBuf, source: toml::de::Error },
    #[error(transparent)]
    Tech(#[from] TechError),
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub tech: TechnologyCard,
    pub explore: ExplorationConfig,
    pub rl: RlConfig,
}

impl Config {
    pub fn parse(text: &str, path: &Path) -> Result<Self, ConfigError> {
        let c: Config = toml::from_str(text).map_err(|source| ConfigError::Toml {
            path: path.to_path_buf(),
            source,
        })?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text, path)
    }

    /// Loads `explicit`, else the file named by [`CONFIG_ENV`], else defaults.
    pub fn resolve(explicit: Option<&Path>) -> Result<Self, ConfigError> {
        match explicit {
            Some(p) => Self::load(p),
            None => match std::env::var_os(CONFIG_ENV) {
                Some(p) if !p.is_empty() => Self::load(Path::new(&p)),
                _ => Ok(Self::default()),
            },
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.tech.validate()?;
        self.explore.validate().map_err(ConfigError::Invalid)?;
        self.rl.reward.validate().map_err(ConfigError::Invalid)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rl::RewardSign;

    #[test]
    fn partial_file_overrides_defaults() {
        let text = "[explore]\nvariants = 7\n[rl.reward]\nsign = \"literal\"\n[tech]\nwire_pitch = 120\n";
        let c = Config::parse(text, Path::new("x.toml")).unwrap();
        assert_eq!(c.explore.variants, 7);
        assert_eq!(c.explore.max_retries, 32);
        assert_eq!(c.rl.reward.sign, RewardSign::Literal);
        assert_eq!(c.tech.wire_pitch, 120);
        assert_eq!(c.tech.wire_width, 50);
    }

    #[test]
    fn rejects_bad_values_and_keys() {
        assert!(matches!(
            Config::parse("[explore]\nvariants = 0\n", Path::new("x")),
            Err(ConfigError::Invalid(_))
        ));
        assert!(matches!(Config::parse("colour = 1\n", Path::new("x")), Err(ConfigError::Toml { .. })));
        assert!(matches!(
            Config::parse("[tech]\nwire_pitch = 10\n", Path::new("x")),
            Err(ConfigError::Tech(_))
        ));
    }

    #[test]
    fn round_trips_through_toml() {
        let c = Config::default();
        let text = toml::to_string(&c).unwrap();
        assert_eq!(Config::parse(&text, Path::new("x")).unwrap(), c);
    }
}
