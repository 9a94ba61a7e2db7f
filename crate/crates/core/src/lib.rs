//! Analog layout generation and design-space exploration.
//!
//! The pipeline takes a circuit template, enumerates finger assignments,
//! places and routes each concrete netlist, validates the result (DRC, LVS,
//! parasitic extraction, AC simulation) and explores layout variants by
//! shifting components, either at random or with a two-level RL agent.

pub mod acsim;
pub mod config;
pub mod dataset;
pub mod explore;
pub mod fixtures;
pub mod gds;
pub mod geometry;
pub mod metrics;
pub mod netlist;
pub mod par;
pub mod pex;
pub mod placer;
pub mod rl;
pub mod router;
pub mod tech;
pub mod verify;
