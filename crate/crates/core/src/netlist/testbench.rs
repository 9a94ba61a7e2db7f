use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::value::{format_value, parse_value};
use super::{Circuit, NetlistError};

/// Logarithmic AC sweep, both endpoints included.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sweep {
    pub f_start: f64,
    pub f_stop: f64,
    pub points_per_decade: u32,
}

impl Default for Sweep {
    fn default() -> Self {
        Self {
            f_start: 1e3,
            f_stop: 1e9,
            points_per_decade: 50,
        }
    }
}

impl Sweep {
    pub fn point_count(&self) -> usize {
        let decades = (self.f_stop / self.f_start).log10();
        (decades * f64::from(self.points_per_decade) + 1e-9).floor() as usize + 1
    }

    pub fn frequencies(&self) -> Vec<f64> {
        let k = self.point_count();
        let ppd = f64::from(self.points_per_decade);
        let mut f: Vec<f64> = (0..k)
            .map(|i| self.f_start * 10f64.powf(i as f64 / ppd))
            .collect();
        let last = f.last_mut().unwrap();
        if ((*last - self.f_stop) / self.f_stop).abs() < 1e-9 {
            *last = self.f_stop;
        }
        f
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Testbench {
    /// Net driven by the 1 V AC source.
    pub source: String,
    /// DC-biased nets; these are AC grounds.
    pub bias: BTreeMap<String, f64>,
    pub output: String,
    pub sweep: Sweep,
    /// Overrides the technology overdrive voltage when set.
    pub v_ov: Option<f64>,
}

impl Testbench {
    pub fn validate(&self) -> Result<(), NetlistError> {
        let s = &self.sweep;
        if !(s.f_start > 0.0 && s.f_start < s.f_stop) {
            return Err(NetlistError::Testbench("f_start must be below f_stop".into()));
        }
        if s.points_per_decade < 1 {
            return Err(NetlistError::Testbench("points per decade must be at least 1".into()));
        }
        Ok(())
    }

    pub fn check_against(&self, c: &Circuit) -> Result<(), NetlistError> {
        self.validate()?;
        let nets = std::iter::once(&self.output)
            .chain(std::iter::once(&self.source))
            .chain(self.bias.keys());
        for net in nets {
            if !c.nets.contains(net) && !is_ground_name(net) {
                return Err(NetlistError::Testbench(format!("net `{net}` not in circuit")));
            }
        }
        Ok(())
    }
}

/// Nets that are ground regardless of testbench bias.
pub fn is_ground_name(net: &str) -> bool {
    net == "0" || net.eq_ignore_ascii_case("gnd")
}

fn tb_err(line: usize, msg: impl std::fmt::Display) -> NetlistError {
    NetlistError::Testbench(format!("line {line}: {msg}"))
}

/// Parses `.src`, `.bias`, `.out`, `.ac dec <ppd> <fstart> <fstop>`, and `.vov`.
pub fn parse_testbench(text: &str) -> Result<Testbench, NetlistError> {
    let mut source = None;
    let mut output = None;
    let mut bias = BTreeMap::new();
    let mut sweep = None;
    let mut v_ov = None;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let tokens: Vec<&str> = raw.split_whitespace().collect();
        let Some(head) = tokens.first() else { continue };
        if head.starts_with('*') {
            continue;
        }
        let value = |i: usize| -> Result<f64, NetlistError> {
            let tok = tokens.get(i).ok_or_else(|| tb_err(line, "missing value"))?;
            parse_value(tok).ok_or_else(|| tb_err(line, format!("bad value `{tok}`")))
        };
        let net = |i: usize| -> Result<String, NetlistError> {
            tokens
                .get(i)
                .map(|s| s.to_string())
                .ok_or_else(|| tb_err(line, "missing net"))
        };
        match head.to_ascii_lowercase().as_str() {
            ".src" => source = Some(net(1)?),
            ".out" => output = Some(net(1)?),
            ".bias" => {
                bias.insert(net(1)?, value(2)?);
            }
            ".vov" => v_ov = Some(value(1)?),
            ".ac" => {
                if tokens.get(1).map(|s| s.to_ascii_lowercase()) != Some("dec".into()) {
                    return Err(tb_err(line, "only `.ac dec` sweeps are supported"));
                }
                let ppd = tokens
                    .get(2)
                    .and_then(|s| s.parse::<u32>().ok())
                    .ok_or_else(|| tb_err(line, "bad points per decade"))?;
                sweep = Some(Sweep {
                    points_per_decade: ppd,
                    f_start: value(3)?,
                    f_stop: value(4)?,
                });
            }
            ".end" => break,
            other => return Err(tb_err(line, format!("unknown directive `{other}`"))),
        }
    }
    let tb = Testbench {
        source: source.ok_or_else(|| NetlistError::Testbench("missing .src".into()))?,
        output: output.ok_or_else(|| NetlistError::Testbench("missing .out".into()))?,
        bias,
        sweep: sweep.unwrap_or_default(),
        v_ov,
    };
    tb.validate()?;
    Ok(tb)
}

pub fn write_testbench(tb: &Testbench) -> String {
    let mut out = String::new();
    let _ = writeln!(out, ".src {}", tb.source);
    for (net, v) in &tb.bias {
        let _ = writeln!(out, ".bias {net} {}", format_value(*v));
    }
    let _ = writeln!(out, ".out {}", tb.output);
    let s = &tb.sweep;
    let _ = writeln!(
        out,
        ".ac dec {} {} {}",
        s.points_per_decade,
        format_value(s.f_start),
        format_value(s.f_stop)
    );
    if let Some(v) = tb.v_ov {
        let _ = writeln!(out, ".vov {}", format_value(v));
    }
    out.push_str(".end\n");
    out
}
