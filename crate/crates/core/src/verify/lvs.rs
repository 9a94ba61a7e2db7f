use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use super::extract::Extraction;
use crate::geometry::Layout;
use crate::netlist::{Circuit, DeviceKind};

/// Bipartite device/net graph. Edges carry the terminal role; both
/// terminals of a resistor or capacitor share one role.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeviceGraph {
    pub kinds: Vec<DeviceKind>,
    /// Per device, the net index of each terminal (`None` if absent).
    pub terminals: Vec<Vec<Option<usize>>>,
    pub net_count: usize,
}

fn role(kind: DeviceKind, terminal: usize) -> usize {
    if kind.is_mos() {
        terminal
    } else {
        0
    }
}

impl DeviceGraph {
    pub fn from_circuit(c: &Circuit) -> Self {
        let index: BTreeMap<&str, usize> = c
            .net_terminals()
            .keys()
            .enumerate()
            .map(|(i, n)| (*n, i))
            .collect();
        Self {
            kinds: c.devices.iter().map(|d| d.kind).collect(),
            terminals: c
                .devices
                .iter()
                .map(|d| d.terminals.iter().map(|t| Some(index[t.as_str()])).collect())
                .collect(),
            net_count: index.len(),
        }
    }

    /// Nets are the extracted components that touch at least one pin.
    pub fn from_extraction(layout: &Layout, ex: &Extraction) -> Self {
        let mut index: BTreeMap<usize, usize> = BTreeMap::new();
        for &c in ex.pins.values() {
            let next = index.len();
            index.entry(c).or_insert(next);
        }
        Self {
            kinds: layout.tiles.iter().map(|t| t.kind).collect(),
            terminals: layout
                .tiles
                .iter()
                .enumerate()
                .map(|(ti, t)| {
                    (0..t.kind.terminal_names().len())
                        .map(|k| ex.pins.get(&(ti, k)).map(|c| index[c]))
                        .collect()
                })
                .collect(),
            net_count: index.len(),
        }
    }

    fn net_edges(&self) -> Vec<Vec<(usize, usize)>> {
        let mut edges = vec![Vec::new(); self.net_count];
        for (d, terms) in self.terminals.iter().enumerate() {
            for (k, n) in terms.iter().enumerate() {
                if let Some(n) = n {
                    edges[*n].push((role(self.kinds[d], k), d));
                }
            }
        }
        edges
    }
}

/// Colour refinement run jointly on both graphs so colours are comparable.
fn refine(a: &DeviceGraph, b: &DeviceGraph) -> (Vec<usize>, Vec<usize>) {
    let graphs = [a, b];
    let edges = [a.net_edges(), b.net_edges()];
    let mut dev: [Vec<usize>; 2] = [
        a.kinds.iter().map(|k| k.index()).collect(),
        b.kinds.iter().map(|k| k.index()).collect(),
    ];
    let mut net: [Vec<usize>; 2] = [vec![0; a.net_count], vec![0; b.net_count]];
    for _ in 0..4 {
        let mut palette: BTreeMap<(usize, Vec<(usize, usize)>), usize> = BTreeMap::new();
        let mut next_net: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
        for g in 0..2 {
            for n in 0..graphs[g].net_count {
                let mut sig: Vec<(usize, usize)> =
                    edges[g][n].iter().map(|&(r, d)| (r, dev[g][d])).collect();
                sig.sort_unstable();
                let len = palette.len();
                next_net[g].push(*palette.entry((net[g][n], sig)).or_insert(len));
            }
        }
        net = next_net;
        let mut palette: BTreeMap<(usize, Vec<(usize, usize)>), usize> = BTreeMap::new();
        let mut next_dev: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
        for g in 0..2 {
            for (d, terms) in graphs[g].terminals.iter().enumerate() {
                let kind = graphs[g].kinds[d];
                let mut sig: Vec<(usize, usize)> = terms
                    .iter()
                    .enumerate()
                    .map(|(k, n)| (role(kind, k), n.map_or(usize::MAX, |n| net[g][n])))
                    .collect();
                sig.sort_unstable();
                let len = palette.len();
                next_dev[g].push(*palette.entry((dev[g][d], sig)).or_insert(len));
            }
        }
        dev = next_dev;
    }
    let [da, db] = dev;
    (da, db)
}

struct Matcher<'a> {
    a: &'a DeviceGraph,
    b: &'a DeviceGraph,
    ca: Vec<usize>,
    cb: Vec<usize>,
    used: Vec<bool>,
    net_ab: Vec<Option<usize>>,
    net_ba: Vec<Option<usize>>,
}

impl Matcher<'_> {
    fn orientations(&self, d: usize) -> Vec<Vec<usize>> {
        let n = self.a.terminals[d].len();
        let mut out = vec![(0..n).collect::<Vec<_>>()];
        if !self.a.kinds[d].is_mos() && n == 2 {
            out.push(vec![1, 0]);
        }
        out
    }

    fn search(&mut self, d: usize) -> bool {
        if d == self.a.kinds.len() {
            return true;
        }
        for e in 0..self.b.kinds.len() {
            if self.used[e] || self.ca[d] != self.cb[e] || self.a.kinds[d] != self.b.kinds[e] {
                continue;
            }
            for perm in self.orientations(d) {
                let mut bound = Vec::new();
                let mut ok = true;
                for (k, &pk) in perm.iter().enumerate() {
                    let (na, nb) = (self.a.terminals[d][k], self.b.terminals[e][pk]);
                    match (na, nb) {
                        (None, None) => {}
                        (Some(x), Some(y)) => match (self.net_ab[x], self.net_ba[y]) {
                            (None, None) => {
                                self.net_ab[x] = Some(y);
                                self.net_ba[y] = Some(x);
                                bound.push((x, y));
                            }
                            (Some(yy), Some(xx)) if yy == y && xx == x => {}
                            _ => ok = false,
                        },
                        _ => ok = false,
                    }
                    if !ok {
                        break;
                    }
                }
                if ok {
                    self.used[e] = true;
                    if self.search(d + 1) {
                        return true;
                    }
                    self.used[e] = false;
                }
                for (x, y) in bound {
                    self.net_ab[x] = None;
                    self.net_ba[y] = None;
                }
            }
        }
        false
    }
}

/// Label-aware isomorphism of two device graphs.
pub fn isomorphic(a: &DeviceGraph, b: &DeviceGraph) -> bool {
    if a.kinds.len() != b.kinds.len() || a.net_count != b.net_count {
        return false;
    }
    let (ca, cb) = refine(a, b);
    let hist = |c: &[usize]| {
        let mut h = c.to_vec();
        h.sort_unstable();
        h
    };
    if hist(&ca) != hist(&cb) {
        return false;
    }
    let mut m = Matcher {
        a,
        b,
        ca,
        cb,
        used: vec![false; b.kinds.len()],
        net_ab: vec![None; a.net_count],
        net_ba: vec![None; b.net_count],
    };
    m.search(0)
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LvsReport {
    pub pass: bool,
    /// Groups of reference nets shorted into one extracted net.
    pub merged: Vec<Vec<String>>,
    /// Reference nets whose pins fall into more than one extracted net.
    pub split: Vec<String>,
    /// Reference nets with no pin in the layout.
    pub missing: Vec<String>,
    /// Terminals isolated from every other terminal of their net.
    pub dangling: Vec<String>,
    /// Reference devices without a tile, and tiles without a device.
    pub device_mismatch: Vec<String>,
}

impl fmt::Display for LvsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "lvs {}", if self.pass { "pass" } else { "fail" })?;
        for m in &self.merged {
            writeln!(f, "merged {}", m.join(" "))?;
        }
        for s in &self.split {
            writeln!(f, "split {s}")?;
        }
        for s in &self.missing {
            writeln!(f, "missing {s}")?;
        }
        for s in &self.dangling {
            writeln!(f, "dangling {s}")?;
        }
        for s in &self.device_mismatch {
            writeln!(f, "device {s}")?;
        }
        Ok(())
    }
}

/// Compares the extracted layout against the reference circuit.
///
/// Terminals are first compared by name: each reference net must map to
/// exactly one extracted net and vice versa. When that fails the layout
/// still passes if the two device graphs are isomorphic, which accepts
/// relabelled symmetric devices. The diff always reflects the name-based
/// comparison.
pub fn lvs(layout: &Layout, ex: &Extraction, circuit: &Circuit) -> LvsReport {
    let mut report = LvsReport::default();
    let tile_index: BTreeMap<&str, usize> = layout
        .tiles
        .iter()
        .enumerate()
        .map(|(i, t)| (t.name.as_str(), i))
        .collect();
    for d in &circuit.devices {
        match tile_index.get(d.name.as_str()) {
            None => report.device_mismatch.push(format!("{} missing from layout", d.name)),
            Some(&ti) if layout.tiles[ti].kind != d.kind => report
                .device_mismatch
                .push(format!("{} is {} in layout", d.name, layout.tiles[ti].kind)),
            _ => {}
        }
    }
    for t in &layout.tiles {
        if circuit.device(&t.name).is_none() {
            report.device_mismatch.push(format!("{} not in netlist", t.name));
        }
    }

    let mut comps_of_net: BTreeMap<&str, BTreeSet<usize>> = BTreeMap::new();
    let mut nets_of_comp: BTreeMap<usize, BTreeSet<&str>> = BTreeMap::new();
    let mut comp_pins: BTreeMap<usize, usize> = BTreeMap::new();
    for &c in ex.pins.values() {
        *comp_pins.entry(c).or_default() += 1;
    }
    let net_terms = circuit.net_terminals();
    for (&net, terms) in &net_terms {
        let entry = comps_of_net.entry(net).or_default();
        for &(di, k) in terms {
            let d = &circuit.devices[di];
            let Some(&ti) = tile_index.get(d.name.as_str()) else { continue };
            match ex.pins.get(&(ti, k)) {
                Some(&c) => {
                    entry.insert(c);
                    nets_of_comp.entry(c).or_default().insert(net);
                    if terms.len() > 1 && comp_pins[&c] == 1 {
                        report.dangling.push(format!("{}.{}", d.name, d.kind.terminal_names()[k]));
                    }
                }
                None => report
                    .dangling
                    .push(format!("{}.{} has no pin", d.name, d.kind.terminal_names()[k])),
            }
        }
    }
    for (net, comps) in &comps_of_net {
        match comps.len() {
            0 => report.missing.push(net.to_string()),
            1 => {}
            _ => report.split.push(net.to_string()),
        }
    }
    for nets in nets_of_comp.values() {
        if nets.len() > 1 {
            report.merged.push(nets.iter().map(|s| s.to_string()).collect());
        }
    }

    let by_name = report.merged.is_empty()
        && report.split.is_empty()
        && report.missing.is_empty()
        && report.dangling.is_empty()
        && report.device_mismatch.is_empty();
    report.pass = by_name
        || (report.device_mismatch.is_empty()
            && isomorphic(
                &DeviceGraph::from_circuit(circuit),
                &DeviceGraph::from_extraction(layout, ex),
            ));
    if report.pass {
        report = LvsReport {
            pass: true,
            ..Default::default()
        };
    }
    report
}
