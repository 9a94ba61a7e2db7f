//! Circuit templates, concrete netlists, matching pairs and testbenches.
//!
//! The accepted grammar is a small SPICE subset:
//!
//! ```text
//! * comment
//! M<name> d g s b [nmos|pmos] W=<v> L=<v> [nf=<n>]
//! R<name> a b <ohms> [W=<v> L=<v>]
//! C<name> a b <farads> [W=<v> L=<v>]
//! .port <in|out|supply> <net> [<net> ...]
//! .end
//! ```
//!
//! Values accept engineering suffixes (`u`, `n`, `k`, `meg`, ...).

mod parse;
mod permute;
mod testbench;
pub mod value;

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use parse::{
    parse_netlist, parse_pairs, parse_template, write_circuit_text, write_netlist, write_pairs,
};
pub use permute::{
    apply_fingers, enumerate_finger_permutations, FingerAssignment, DEFAULT_FINGER_SET,
    DEFAULT_MAX_NETLISTS,
};
pub use testbench::{is_ground_name, parse_testbench, write_testbench, Sweep, Testbench};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NetlistError {
    #[error("line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("line {line}: duplicate device name `{name}`")]
    DuplicateDevice { line: usize, name: String },
    #[error("line {line}: port references undeclared net `{net}`")]
    UndeclaredPortNet { line: usize, net: String },
    #[error("circuit declares no output port")]
    NoOutputPort,
    #[error("unknown device `{0}`")]
    UnknownDevice(String),
    #[error("matching pair ({0}, {1}) must name two MOS devices of the same kind and size")]
    BadPair(String, String),
    #[error("finger assignment does not cover MOS device `{0}`")]
    MissingFingers(String),
    #[error("finger assignment names non-MOS or unknown device `{0}`")]
    ExtraFingers(String),
    #[error("device `{device}`: nf={nf} is invalid ({reason})")]
    InvalidFingers {
        device: String,
        nf: u32,
        reason: &'static str,
    },
    #[error("matched devices `{0}` and `{1}` have different finger counts")]
    MatchingViolated(String, String),
    #[error("no valid finger assignment exists")]
    OverConstrained,
    #[error("testbench: {0}")]
    Testbench(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DeviceKind {
    Nmos,
    Pmos,
    Resistor,
    Capacitor,
}

impl DeviceKind {
    pub fn is_mos(self) -> bool {
        matches!(self, DeviceKind::Nmos | DeviceKind::Pmos)
    }

    pub fn index(self) -> usize {
        match self {
            DeviceKind::Nmos => 0,
            DeviceKind::Pmos => 1,
            DeviceKind::Resistor => 2,
            DeviceKind::Capacitor => 3,
        }
    }

    /// Terminal role names in netlist order.
    pub fn terminal_names(self) -> &'static [&'static str] {
        if self.is_mos() {
            &["d", "g", "s", "b"]
        } else {
            &["p", "n"]
        }
    }
}

impl fmt::Display for DeviceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DeviceKind::Nmos => "nmos",
            DeviceKind::Pmos => "pmos",
            DeviceKind::Resistor => "resistor",
            DeviceKind::Capacitor => "capacitor",
        })
    }
}

/// One device line. Dimensions are SI metres; `value` is Ω or F for passives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Device {
    pub name: String,
    pub kind: DeviceKind,
    pub terminals: Vec<String>,
    pub w: f64,
    pub l: f64,
    pub value: f64,
    pub nf: Option<u32>,
}

impl Device {
    pub fn w_nm(&self) -> i64 {
        (self.w * 1e9).round() as i64
    }

    pub fn l_nm(&self) -> i64 {
        (self.l * 1e9).round() as i64
    }

    pub fn fingers(&self) -> u32 {
        self.nf.unwrap_or(1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PortRole {
    In,
    Out,
    Supply,
}

impl PortRole {
    fn as_str(self) -> &'static str {
        match self {
            PortRole::In => "in",
            PortRole::Out => "out",
            PortRole::Supply => "supply",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Port {
    pub role: PortRole,
    pub net: String,
}

/// A parsed circuit. As a template the MOS finger counts are unset; a
/// concrete netlist has every MOS `nf` filled in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Circuit {
    pub devices: Vec<Device>,
    pub nets: BTreeSet<String>,
    pub ports: Vec<Port>,
}

pub type CircuitTemplate = Circuit;

impl Circuit {
    pub fn device(&self, name: &str) -> Option<&Device> {
        self.devices.iter().find(|d| d.name == name)
    }

    pub fn mos_devices(&self) -> impl Iterator<Item = &Device> {
        self.devices.iter().filter(|d| d.kind.is_mos())
    }

    pub fn outputs(&self) -> impl Iterator<Item = &str> {
        self.ports
            .iter()
            .filter(|p| p.role == PortRole::Out)
            .map(|p| p.net.as_str())
    }

    /// Nets with the `(device, terminal index)` pairs attached to them, in
    /// device order.
    pub fn net_terminals(&self) -> std::collections::BTreeMap<&str, Vec<(usize, usize)>> {
        let mut map: std::collections::BTreeMap<&str, Vec<(usize, usize)>> = Default::default();
        for (di, d) in self.devices.iter().enumerate() {
            for (ti, net) in d.terminals.iter().enumerate() {
                map.entry(net.as_str()).or_default().push((di, ti));
            }
        }
        map
    }

    pub fn count_kind(&self, kind: DeviceKind) -> usize {
        self.devices.iter().filter(|d| d.kind == kind).count()
    }
}

/// Matched transistor pairs.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchingPairs {
    pub pairs: Vec<(String, String)>,
}

impl MatchingPairs {
    pub fn validate(&self, t: &Circuit) -> Result<(), NetlistError> {
        for (a, b) in &self.pairs {
            let da = t.device(a).ok_or_else(|| NetlistError::UnknownDevice(a.clone()))?;
            let db = t.device(b).ok_or_else(|| NetlistError::UnknownDevice(b.clone()))?;
            if !da.kind.is_mos() || da.kind != db.kind || da.w != db.w || da.l != db.l || a == b {
                return Err(NetlistError::BadPair(a.clone(), b.clone()));
            }
        }
        Ok(())
    }
}

/// A template annotated with one finger assignment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcreteNetlist {
    pub index: usize,
    pub assignment: FingerAssignment,
    pub circuit: Circuit,
}
