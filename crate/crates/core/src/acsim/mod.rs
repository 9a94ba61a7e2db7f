//! AC small-signal simulation by modified nodal analysis.
//!
//! MOS devices are linearised with a square-law model; every biased net and
//! every ground alias is an AC ground. The testbench source drives its net
//! with 1 V through an extra branch row, so `|V(out)|` is the gain.

mod lu;
mod model;

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_complex::Complex64;
use thiserror::Error;

pub use lu::{lu_solve, ComplexMatrix};
pub use model::{diffusion_regions, small_signal, SmallSignalModel};

use crate::netlist::{is_ground_name, Circuit, DeviceKind, Testbench};
use crate::par::{map_indexed, Parallelism};
use crate::tech::TechnologyCard;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum SimError {
    #[error("singular matrix at {frequency:e} Hz: node `{node}` is floating")]
    SingularMatrix { node: String, frequency: f64 },
    #[error("testbench net `{0}` is not in the circuit")]
    UnknownNet(String),
    #[error("source net `{0}` is an AC ground")]
    GroundedSource(String),
    #[error("device `{0}` has a non-positive value")]
    BadDevice(String),
    #[error("trace line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// Magnitude response sampled on a log frequency grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationTrace {
    pub frequencies: Vec<f64>,
    pub magnitudes: Vec<f64>,
}

impl SimulationTrace {
    pub fn len(&self) -> usize {
        self.frequencies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frequencies.is_empty()
    }

    /// Two columns, frequency then magnitude, one line per point.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (f, m) in self.frequencies.iter().zip(&self.magnitudes) {
            let _ = writeln!(s, "{f:e} {m:e}");
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self, SimError> {
        let mut t = SimulationTrace {
            frequencies: Vec::new(),
            magnitudes: Vec::new(),
        };
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |msg: &str| SimError::Parse {
                line: i + 1,
                msg: msg.to_string(),
            };
            let mut cols = line.split_whitespace();
            let (Some(f), Some(m), None) = (cols.next(), cols.next(), cols.next()) else {
                return Err(err("expected two columns"));
            };
            let f: f64 = f.parse().map_err(|_| err("bad frequency"))?;
            let m: f64 = m.parse().map_err(|_| err("bad magnitude"))?;
            if t.frequencies.last().is_some_and(|&p| f <= p) {
                return Err(err("frequencies must increase"));
            }
            t.frequencies.push(f);
            t.magnitudes.push(m);
        }
        Ok(t)
    }
}

/// Frequency-independent part of the MNA system: `A(ω) = G + jωC`.
#[derive(Debug, Clone)]
pub struct MnaSystem {
    pub nodes: Vec<String>,
    pub g: Vec<f64>,
    pub c: Vec<f64>,
    pub output: Option<usize>,
    dim: usize,
}

struct Stamper {
    dim: usize,
    g: Vec<f64>,
    c: Vec<f64>,
}

impl Stamper {
    fn admittance(m: &mut [f64], dim: usize, a: Option<usize>, b: Option<usize>, y: f64) {
        if let Some(a) = a {
            m[a * dim + a] += y;
        }
        if let Some(b) = b {
            m[b * dim + b] += y;
        }
        if let (Some(a), Some(b)) = (a, b) {
            m[a * dim + b] -= y;
            m[b * dim + a] -= y;
        }
    }

    fn conductance(&mut self, a: Option<usize>, b: Option<usize>, y: f64) {
        Self::admittance(&mut self.g, self.dim, a, b, y);
    }

    fn capacitance(&mut self, a: Option<usize>, b: Option<usize>, y: f64) {
        Self::admittance(&mut self.c, self.dim, a, b, y);
    }

    /// Current `gm·(V(cp) − V(cn))` flowing from `out_p` to `out_n` inside the device.
    fn vccs(&mut self, out_p: Option<usize>, out_n: Option<usize>, cp: Option<usize>, cn: Option<usize>, gm: f64) {
        for (row, sign) in [(out_p, 1.0), (out_n, -1.0)] {
            let Some(r) = row else { continue };
            if let Some(c) = cp {
                self.g[r * self.dim + c] += sign * gm;
            }
            if let Some(c) = cn {
                self.g[r * self.dim + c] -= sign * gm;
            }
        }
    }
}

impl MnaSystem {
    pub fn build(circuit: &Circuit, tb: &Testbench, tech: &TechnologyCard) -> Result<Self, SimError> {
        let grounded = |net: &str| {
            net != tb.source && (is_ground_name(net) || tb.bias.contains_key(net))
        };
        for net in [&tb.source, &tb.output] {
            if !circuit.nets.contains(net) && !is_ground_name(net) {
                return Err(SimError::UnknownNet(net.clone()));
            }
        }
        if is_ground_name(&tb.source) {
            return Err(SimError::GroundedSource(tb.source.clone()));
        }
        let nodes: Vec<String> = circuit.nets.iter().filter(|n| !grounded(n)).cloned().collect();
        let index: BTreeMap<&str, usize> = nodes.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
        let dim = nodes.len() + 1;
        let mut s = Stamper {
            dim,
            g: vec![0.0; dim * dim],
            c: vec![0.0; dim * dim],
        };
        let at = |net: &str| index.get(net).copied();

        for d in &circuit.devices {
            let t: Vec<Option<usize>> = d.terminals.iter().map(|n| at(n)).collect();
            match d.kind {
                DeviceKind::Resistor => {
                    if !(d.value > 0.0) {
                        return Err(SimError::BadDevice(d.name.clone()));
                    }
                    s.conductance(t[0], t[1], 1.0 / d.value);
                }
                DeviceKind::Capacitor => {
                    if d.value < 0.0 {
                        return Err(SimError::BadDevice(d.name.clone()));
                    }
                    s.capacitance(t[0], t[1], d.value);
                }
                DeviceKind::Nmos | DeviceKind::Pmos => {
                    if !(d.w > 0.0 && d.l > 0.0) {
                        return Err(SimError::BadDevice(d.name.clone()));
                    }
                    let m = small_signal(d, tech, tb.v_ov);
                    let (dr, g, so, b) = (t[0], t[1], t[2], t[3]);
                    s.vccs(dr, so, g, so, m.gm);
                    s.conductance(dr, so, m.gds);
                    s.capacitance(g, so, m.cgs);
                    s.capacitance(g, dr, m.cgd);
                    s.capacitance(dr, b, m.cdb);
                    s.capacitance(so, b, m.csb);
                }
            }
        }

        // Branch row: V(source) = 1, branch current enters the source node.
        let src = index[tb.source.as_str()];
        let br = dim - 1;
        s.g[src * dim + br] += 1.0;
        s.g[br * dim + src] += 1.0;

        Ok(MnaSystem {
            output: at(&tb.output),
            nodes,
            g: s.g,
            c: s.c,
            dim,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self, frequency: f64) -> ComplexMatrix {
        let w = 2.0 * std::f64::consts::PI * frequency;
        ComplexMatrix {
            n: self.dim,
            data: self
                .g
                .iter()
                .zip(&self.c)
                .map(|(&g, &c)| Complex64::new(g, w * c))
                .collect(),
        }
    }

    pub fn rhs(&self) -> Vec<Complex64> {
        let mut b = vec![Complex64::new(0.0, 0.0); self.dim];
        b[self.dim - 1] = Complex64::new(1.0, 0.0);
        b
    }

    /// Node voltages (and the branch current last) at one frequency.
    pub fn solve(&self, frequency: f64) -> Result<Vec<Complex64>, SimError> {
        lu_solve(self.matrix(frequency), self.rhs()).map_err(|k| SimError::SingularMatrix {
            node: self.nodes.get(k).cloned().unwrap_or_else(|| "source branch".into()),
            frequency,
        })
    }
}

/// Output magnitude at every sweep frequency.
pub fn ac_sweep(
    circuit: &Circuit,
    tb: &Testbench,
    tech: &TechnologyCard,
    par: Parallelism,
) -> Result<SimulationTrace, SimError> {
    let sys = MnaSystem::build(circuit, tb, tech)?;
    let frequencies = tb.sweep.frequencies();
    let solved = map_indexed(par, frequencies.len(), |i| {
        sys.solve(frequencies[i])
            .map(|x| sys.output.map_or(0.0, |o| x[o].norm()))
    });
    let magnitudes = solved.into_iter().collect::<Result<Vec<_>, _>>()?;
    Ok(SimulationTrace {
        frequencies,
        magnitudes,
    })
}
