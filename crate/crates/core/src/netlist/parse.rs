use std::collections::BTreeSet;
use std::fmt::Write as _;

use super::value::{format_value, parse_value};
use super::{
    Circuit, ConcreteNetlist, Device, DeviceKind, MatchingPairs, NetlistError, Port, PortRole,
};

/// Default footprint of a passive device declared without `W=`/`L=`.
const DEFAULT_PASSIVE_SIDE: f64 = 2e-6;

struct Token<'a> {
    text: &'a str,
    column: usize,
}

fn tokenize(line: &str) -> Vec<Token<'_>> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, c) in line.char_indices() {
        if c.is_whitespace() {
            if let Some(s) = start.take() {
                out.push(Token {
                    text: &line[s..i],
                    column: s + 1,
                });
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        out.push(Token {
            text: &line[s..],
            column: s + 1,
        });
    }
    out
}

fn syntax(line: usize, column: usize, message: impl Into<String>) -> NetlistError {
    NetlistError::Syntax {
        line,
        column,
        message: message.into(),
    }
}

fn value_at(tok: &Token<'_>, line: usize) -> Result<f64, NetlistError> {
    parse_value(tok.text).ok_or_else(|| syntax(line, tok.column, format!("bad value `{}`", tok.text)))
}

#[derive(Default)]
struct Params {
    w: Option<f64>,
    l: Option<f64>,
    nf: Option<u32>,
}

fn parse_params(tokens: &[Token<'_>], line: usize) -> Result<Params, NetlistError> {
    let mut p = Params::default();
    for tok in tokens {
        let (key, val) = tok
            .text
            .split_once('=')
            .ok_or_else(|| syntax(line, tok.column, format!("expected key=value, got `{}`", tok.text)))?;
        let val_col = tok.column + key.len() + 1;
        let bad = || syntax(line, val_col, format!("bad value `{val}`"));
        match key.to_ascii_lowercase().as_str() {
            "w" => p.w = Some(parse_value(val).filter(|v| *v > 0.0).ok_or_else(bad)?),
            "l" => p.l = Some(parse_value(val).filter(|v| *v > 0.0).ok_or_else(bad)?),
            "nf" => p.nf = Some(val.parse::<u32>().ok().filter(|n| *n > 0).ok_or_else(bad)?),
            _ => return Err(syntax(line, tok.column, format!("unknown parameter `{key}`"))),
        }
    }
    Ok(p)
}

fn parse_device(tokens: &[Token<'_>], line: usize) -> Result<Device, NetlistError> {
    let name = tokens[0].text;
    let first = name.chars().next().unwrap().to_ascii_uppercase();
    let end_col = |t: &Token<'_>| t.column + t.text.len();
    match first {
        'M' => {
            if tokens.len() < 5 {
                let col = tokens.last().map(end_col).unwrap_or(1);
                return Err(syntax(line, col, "MOS device needs four terminals d g s b"));
            }
            let terminals: Vec<String> = tokens[1..5].iter().map(|t| t.text.to_string()).collect();
            let mut rest = &tokens[5..];
            let mut kind = DeviceKind::Nmos;
            if let Some(t) = rest.first() {
                if !t.text.contains('=') {
                    kind = match t.text.to_ascii_lowercase().as_str() {
                        "nmos" => DeviceKind::Nmos,
                        "pmos" => DeviceKind::Pmos,
                        _ => return Err(syntax(line, t.column, format!("unknown model `{}`", t.text))),
                    };
                    rest = &rest[1..];
                }
            }
            let p = parse_params(rest, line)?;
            let col = end_col(tokens.last().unwrap());
            let w = p.w.ok_or_else(|| syntax(line, col, "MOS device requires W="))?;
            let l = p.l.ok_or_else(|| syntax(line, col, "MOS device requires L="))?;
            Ok(Device {
                name: name.to_string(),
                kind,
                terminals,
                w,
                l,
                value: 0.0,
                nf: p.nf,
            })
        }
        'R' | 'C' => {
            if tokens.len() < 4 {
                let col = tokens.last().map(end_col).unwrap_or(1);
                return Err(syntax(line, col, "passive device needs two terminals and a value"));
            }
            let value = value_at(&tokens[3], line)?;
            if !(value > 0.0) {
                return Err(syntax(line, tokens[3].column, "value must be positive"));
            }
            let p = parse_params(&tokens[4..], line)?;
            if p.nf.is_some() {
                return Err(syntax(line, tokens[4].column, "nf is only valid for MOS devices"));
            }
            Ok(Device {
                name: name.to_string(),
                kind: if first == 'R' {
                    DeviceKind::Resistor
                } else {
                    DeviceKind::Capacitor
                },
                terminals: vec![tokens[1].text.to_string(), tokens[2].text.to_string()],
                w: p.w.unwrap_or(DEFAULT_PASSIVE_SIDE),
                l: p.l.unwrap_or(DEFAULT_PASSIVE_SIDE),
                value,
                nf: None,
            })
        }
        _ => Err(syntax(line, tokens[0].column, format!("unknown device `{name}`"))),
    }
}

/// Parses a template or concrete netlist.
pub fn parse_netlist(text: &str) -> Result<Circuit, NetlistError> {
    let mut devices: Vec<Device> = Vec::new();
    let mut nets = BTreeSet::new();
    let mut ports = Vec::new();
    let mut port_lines = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let tokens = tokenize(raw);
        let Some(head) = tokens.first() else { continue };
        if head.text.starts_with('*') {
            continue;
        }
        if let Some(directive) = head.text.strip_prefix('.') {
            match directive.to_ascii_lowercase().as_str() {
                "end" => break,
                "port" => {
                    let role_tok = tokens
                        .get(1)
                        .ok_or_else(|| syntax(line, head.column + head.text.len(), "missing port role"))?;
                    let role = match role_tok.text.to_ascii_lowercase().as_str() {
                        "in" => PortRole::In,
                        "out" => PortRole::Out,
                        "supply" => PortRole::Supply,
                        _ => {
                            return Err(syntax(
                                line,
                                role_tok.column,
                                format!("unknown port role `{}`", role_tok.text),
                            ))
                        }
                    };
                    if tokens.len() < 3 {
                        return Err(syntax(line, role_tok.column + role_tok.text.len(), "missing port net"));
                    }
                    for t in &tokens[2..] {
                        ports.push(Port {
                            role,
                            net: t.text.to_string(),
                        });
                        port_lines.push(line);
                    }
                }
                _ => return Err(syntax(line, head.column, format!("unknown directive `{}`", head.text))),
            }
            continue;
        }
        let device = parse_device(&tokens, line)?;
        if devices.iter().any(|d| d.name == device.name) {
            return Err(NetlistError::DuplicateDevice {
                line,
                name: device.name,
            });
        }
        nets.extend(device.terminals.iter().cloned());
        devices.push(device);
    }
    for (port, line) in ports.iter().zip(port_lines) {
        if !nets.contains(&port.net) {
            return Err(NetlistError::UndeclaredPortNet {
                line,
                net: port.net.clone(),
            });
        }
    }
    Ok(Circuit {
        devices,
        nets,
        ports,
    })
}

/// Parses a circuit template; in addition to [`parse_netlist`] it requires
/// an output port.
pub fn parse_template(text: &str) -> Result<Circuit, NetlistError> {
    let c = parse_netlist(text)?;
    if c.outputs().next().is_none() {
        return Err(NetlistError::NoOutputPort);
    }
    Ok(c)
}

fn write_circuit(c: &Circuit, out: &mut String) {
    for d in &c.devices {
        let _ = write!(out, "{} {}", d.name, d.terminals.join(" "));
        match d.kind {
            DeviceKind::Nmos | DeviceKind::Pmos => {
                let _ = write!(out, " {} W={} L={}", d.kind, format_value(d.w), format_value(d.l));
                if let Some(nf) = d.nf {
                    let _ = write!(out, " nf={nf}");
                }
            }
            DeviceKind::Resistor | DeviceKind::Capacitor => {
                let _ = write!(
                    out,
                    " {} W={} L={}",
                    format_value(d.value),
                    format_value(d.w),
                    format_value(d.l)
                );
            }
        }
        out.push('\n');
    }
    for p in &c.ports {
        let _ = writeln!(out, ".port {} {}", p.role.as_str(), p.net);
    }
    out.push_str(".end\n");
}

/// Serializes a circuit in the grammar accepted by [`parse_netlist`].
pub fn write_circuit_text(c: &Circuit) -> String {
    let mut out = String::new();
    write_circuit(c, &mut out);
    out
}

pub fn write_netlist(n: &ConcreteNetlist) -> String {
    let mut out = format!("* netlist {}\n", n.index);
    write_circuit(&n.circuit, &mut out);
    out
}

/// One `name name` pair per line; `*` and `#` start comments.
pub fn parse_pairs(text: &str) -> Result<MatchingPairs, NetlistError> {
    let mut pairs = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let tokens = tokenize(raw);
        let Some(head) = tokens.first() else { continue };
        if head.text.starts_with('*') || head.text.starts_with('#') {
            continue;
        }
        if tokens.len() != 2 {
            let col = tokens.get(2).map(|t| t.column).unwrap_or(head.column + head.text.len());
            return Err(syntax(idx + 1, col, "expected exactly two device names"));
        }
        pairs.push((tokens[0].text.to_string(), tokens[1].text.to_string()));
    }
    Ok(MatchingPairs { pairs })
}

pub fn write_pairs(p: &MatchingPairs) -> String {
    p.pairs.iter().map(|(a, b)| format!("{a} {b}\n")).collect()
}
