//! Wire parasitic extraction and netlist annotation.
//!
//! Each net's wires are reduced to centre-line intervals, split at pins,
//! vias and junctions, and turned into a lumped-π RC ladder: a series
//! resistor per piece with half of its ground capacitance at either end.
//! Parallel runs of different nets on adjacent tracks add a coupling
//! capacitor between the nodes nearest the middle of their overlap.

use std::collections::{BTreeMap, BTreeSet};

use crate::geometry::{Layout, Point};
use crate::netlist::{Circuit, Device, DeviceKind};
use crate::tech::TechnologyCard;

/// Name of the node all ground capacitors return to.
pub const GROUND: &str = "0";

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct PexOptions {
    /// Multiplies every extracted R and C; zero yields an empty network.
    pub scale: f64,
}

impl Default for PexOptions {
    fn default() -> Self {
        Self { scale: 1.0 }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParasiticNetwork {
    /// Node names: the net name for the node holding the net's first pin,
    /// `<net>#<k>` for the others.
    pub nodes: Vec<String>,
    pub resistors: Vec<(usize, usize, f64)>,
    pub ground_caps: Vec<(usize, f64)>,
    pub couplings: Vec<(usize, usize, f64)>,
    /// Node of each `(device name, terminal index)`.
    pub pin_nodes: BTreeMap<(String, usize), usize>,
}

impl ParasiticNetwork {
    pub fn is_empty(&self) -> bool {
        self.resistors.is_empty() && self.ground_caps.is_empty() && self.couplings.is_empty()
    }

    pub fn total_ground_cap(&self) -> f64 {
        self.ground_caps.iter().map(|c| c.1).sum()
    }

    pub fn total_coupling_cap(&self) -> f64 {
        self.couplings.iter().map(|c| c.2).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Axis {
    Horizontal,
    Vertical,
}

/// A merged run along one track: `coord` is the fixed coordinate,
/// `[lo, hi]` the extent along the axis.
#[derive(Debug, Clone, PartialEq, Eq)]
struct Run {
    layer: u8,
    axis: Axis,
    coord: i64,
    lo: i64,
    hi: i64,
    width: i64,
    breaks: BTreeSet<i64>,
}

impl Run {
    fn point(&self, t: i64) -> Point {
        match self.axis {
            Axis::Horizontal => Point::new(t, self.coord),
            Axis::Vertical => Point::new(self.coord, t),
        }
    }

    fn along(&self, p: Point) -> Option<i64> {
        let (c, t) = match self.axis {
            Axis::Horizontal => (p.y, p.x),
            Axis::Vertical => (p.x, p.y),
        };
        (c == self.coord && self.lo <= t && t <= self.hi).then_some(t)
    }
}

type NodeKey = (u8, Point);

struct NetGeometry {
    runs: Vec<Run>,
    pads: Vec<(u8, Point, i64)>,
}

fn um(nm: i64) -> f64 {
    nm as f64 * 1e-3
}

/// Merges collinear overlapping wire rectangles into runs and splits them
/// at every point where something else attaches.
fn net_geometry(layout: &Layout, net: &str, anchors: &[NodeKey]) -> NetGeometry {
    let mut raw: BTreeMap<(u8, Axis, i64, i64), Vec<(i64, i64)>> = BTreeMap::new();
    let mut pads = Vec::new();
    for w in layout.wires.iter().filter(|w| w.net.as_deref() == Some(net)) {
        let r = w.rect;
        let width = r.width().min(r.height());
        let half = width / 2;
        if r.width() > r.height() {
            raw.entry((w.layer, Axis::Horizontal, r.ll.y + half, width))
                .or_default()
                .push((r.ll.x + half, r.ur.x - (width - half)));
        } else if r.height() > r.width() {
            raw.entry((w.layer, Axis::Vertical, r.ll.x + half, width))
                .or_default()
                .push((r.ll.y + half, r.ur.y - (width - half)));
        } else {
            pads.push((w.layer, r.center(), width));
        }
    }
    let mut runs = Vec::new();
    for ((layer, axis, coord, width), mut spans) in raw {
        spans.sort_unstable();
        let mut cur: Option<(i64, i64)> = None;
        for (lo, hi) in spans {
            cur = match cur {
                Some((a, b)) if lo <= b => Some((a, b.max(hi))),
                Some((a, b)) => {
                    runs.push(Run { layer, axis, coord, lo: a, hi: b, width, breaks: BTreeSet::new() });
                    Some((lo, hi))
                }
                None => Some((lo, hi)),
            };
        }
        if let Some((lo, hi)) = cur {
            runs.push(Run { layer, axis, coord, lo, hi, width, breaks: BTreeSet::new() });
        }
    }
    // Endpoints of every run, plus anchors, may land on another run.
    let mut attach: Vec<NodeKey> = anchors.to_vec();
    for r in &runs {
        attach.push((r.layer, r.point(r.lo)));
        attach.push((r.layer, r.point(r.hi)));
    }
    attach.extend(pads.iter().map(|&(l, p, _)| (l, p)));
    let crossings: Vec<NodeKey> = runs
        .iter()
        .flat_map(|a| {
            runs.iter().filter_map(move |b| {
                if a.layer != b.layer || a.axis == b.axis {
                    return None;
                }
                let p = match a.axis {
                    Axis::Horizontal => Point::new(b.coord, a.coord),
                    Axis::Vertical => Point::new(a.coord, b.coord),
                };
                (a.along(p).is_some() && b.along(p).is_some()).then_some((a.layer, p))
            })
        })
        .collect();
    attach.extend(crossings);
    for r in &mut runs {
        r.breaks.insert(r.lo);
        r.breaks.insert(r.hi);
        for &(layer, p) in &attach {
            if layer == r.layer {
                if let Some(t) = r.along(p) {
                    r.breaks.insert(t);
                }
            }
        }
    }
    NetGeometry { runs, pads }
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn find(&mut self, mut a: usize) -> usize {
        while self.0[a] != a {
            self.0[a] = self.0[self.0[a]];
            a = self.0[a];
        }
        a
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Extracts the RC network of a routed layout whose wires carry net names.
pub fn extract_parasitics(
    layout: &Layout,
    circuit: &Circuit,
    tech: &TechnologyCard,
    opts: &PexOptions,
) -> ParasiticNetwork {
    let s = opts.scale;
    let tile_of: BTreeMap<&str, usize> =
        layout.tiles.iter().enumerate().map(|(i, t)| (t.name.as_str(), i)).collect();
    let via_points: BTreeMap<&str, Vec<Point>> = layout.vias.iter().fold(BTreeMap::new(), |mut m, v| {
        if let Some(n) = v.net.as_deref() {
            m.entry(n).or_insert_with(Vec::new).push(v.at);
        }
        m
    });

    // Per net: keyed nodes, raw elements, pin bindings.
    let mut keys: Vec<(String, NodeKey)> = Vec::new();
    let mut key_index: BTreeMap<(String, NodeKey), usize> = BTreeMap::new();
    let mut intern = |net: &str, k: NodeKey, keys: &mut Vec<(String, NodeKey)>| -> usize {
        *key_index.entry((net.to_string(), k)).or_insert_with(|| {
            keys.push((net.to_string(), k));
            keys.len() - 1
        })
    };
    let mut resistors: Vec<(usize, usize, f64)> = Vec::new();
    let mut caps: Vec<(usize, f64)> = Vec::new();
    let mut joins: Vec<(usize, usize)> = Vec::new();
    let mut first_pin: BTreeMap<String, usize> = BTreeMap::new();
    let mut pin_key: BTreeMap<(String, usize), usize> = BTreeMap::new();
    let mut net_runs: Vec<(String, Run, Vec<usize>)> = Vec::new();

    for (net, terms) in circuit.net_terminals() {
        let mut anchors: Vec<NodeKey> = Vec::new();
        for &(di, k) in &terms {
            let d = &circuit.devices[di];
            if let Some(p) = tile_of.get(d.name.as_str()).and_then(|&t| layout.tiles[t].pin(k)) {
                anchors.push((1, p));
            }
        }
        let vias = via_points.get(net).cloned().unwrap_or_default();
        for &v in &vias {
            anchors.push((1, v));
            anchors.push((2, v));
        }
        let geo = net_geometry(layout, net, &anchors);

        for &(di, k) in &terms {
            let d = &circuit.devices[di];
            if let Some(p) = tile_of.get(d.name.as_str()).and_then(|&t| layout.tiles[t].pin(k)) {
                let id = intern(net, (1, p), &mut keys);
                first_pin.entry(net.to_string()).or_insert(id);
                pin_key.insert((d.name.clone(), k), id);
            }
        }
        for &v in &vias {
            let a = intern(net, (1, v), &mut keys);
            let b = intern(net, (2, v), &mut keys);
            joins.push((a, b));
        }
        for &(layer, p, w) in &geo.pads {
            let id = intern(net, (layer, p), &mut keys);
            let lc = tech.layer(layer);
            caps.push((id, s * (lc.cap_area * um(w) * um(w) + lc.cap_fringe * 4.0 * um(w))));
        }
        for run in geo.runs {
            let lc = *tech.layer(run.layer);
            let ids: Vec<usize> = run
                .breaks
                .iter()
                .map(|&t| intern(net, (run.layer, run.point(t)), &mut keys))
                .collect();
            let ts: Vec<i64> = run.breaks.iter().copied().collect();
            for k in 1..ts.len() {
                let len = ts[k] - ts[k - 1];
                let r = s * lc.sheet_resistance * len as f64 / run.width as f64;
                let c = s * (lc.cap_area * um(len) * um(run.width) + lc.cap_fringe * 2.0 * um(len));
                caps.push((ids[k - 1], c / 2.0));
                caps.push((ids[k], c / 2.0));
                if r > 0.0 {
                    resistors.push((ids[k - 1], ids[k], r));
                } else {
                    joins.push((ids[k - 1], ids[k]));
                }
            }
            net_runs.push((net.to_string(), run, ids));
        }
    }

    let mut couplings: Vec<(usize, usize, f64)> = Vec::new();
    for (i, (na, a, ia)) in net_runs.iter().enumerate() {
        for (nb, b, ib) in &net_runs[i + 1..] {
            if na == nb || a.layer != b.layer || a.axis != b.axis {
                continue;
            }
            let gap = (a.coord - b.coord).abs() - (a.width + b.width) / 2;
            let overlap = a.hi.min(b.hi) - a.lo.max(b.lo);
            if gap <= 0 || gap > 2 * tech.min_spacing || overlap <= 0 {
                continue;
            }
            let c = s * tech.cap_coupling * um(overlap) * (tech.min_spacing as f64 / gap as f64);
            let mid = (a.hi.min(b.hi) + a.lo.max(b.lo)) / 2;
            let nearest = |r: &Run, ids: &[usize]| {
                let (k, _) = r
                    .breaks
                    .iter()
                    .enumerate()
                    .min_by_key(|(_, &t)| (t - mid).abs())
                    .expect("run has end points");
                ids[k]
            };
            couplings.push((nearest(a, ia), nearest(b, ib), c));
        }
    }

    let mut uf = UnionFind((0..keys.len()).collect());
    for (a, b) in joins {
        uf.union(a, b);
    }

    // Name classes: the first pin's class takes the net name, the rest are
    // numbered in key order.
    let mut class_name: BTreeMap<usize, String> = BTreeMap::new();
    for (net, &id) in &first_pin {
        class_name.insert(uf.find(id), net.clone());
    }
    let mut counters: BTreeMap<String, usize> = BTreeMap::new();
    let mut order: Vec<usize> = (0..keys.len()).collect();
    order.sort_by(|&x, &y| keys[x].cmp(&keys[y]));
    for id in order {
        let root = uf.find(id);
        if !class_name.contains_key(&root) {
            let net = &keys[id].0;
            let k = counters.entry(net.clone()).or_insert(0);
            *k += 1;
            class_name.insert(root, format!("{net}#{k}"));
        }
    }
    let mut names: Vec<String> = class_name.values().cloned().collect();
    names.sort();
    names.dedup();
    let node_of_name: BTreeMap<&str, usize> = names.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
    let node = |id: usize, uf: &mut UnionFind| node_of_name[class_name[&uf.find(id)].as_str()];

    let mut net = ParasiticNetwork {
        nodes: names.clone(),
        ..Default::default()
    };
    for (a, b, r) in resistors {
        let (na, nb) = (node(a, &mut uf), node(b, &mut uf));
        if na != nb {
            net.resistors.push((na.min(nb), na.max(nb), r));
        }
    }
    let mut ground: BTreeMap<usize, f64> = BTreeMap::new();
    for (a, c) in caps {
        *ground.entry(node(a, &mut uf)).or_insert(0.0) += c;
    }
    net.ground_caps = ground.into_iter().filter(|&(_, c)| c > 0.0).collect();
    for (a, b, c) in couplings {
        let (na, nb) = (node(a, &mut uf), node(b, &mut uf));
        if c > 0.0 {
            net.couplings.push((na.min(nb), na.max(nb), c));
        }
    }
    for ((dev, k), id) in pin_key {
        net.pin_nodes.insert((dev, k), node(id, &mut uf));
    }
    net
}

fn passive(name: String, kind: DeviceKind, a: &str, b: &str, value: f64) -> Device {
    Device {
        name,
        kind,
        terminals: vec![a.to_string(), b.to_string()],
        w: 1e-6,
        l: 1e-6,
        value,
        nf: None,
    }
}

/// Reconnects device terminals to their extracted nodes and adds the
/// parasitic elements. An empty network leaves the circuit unchanged.
pub fn annotate(circuit: &Circuit, pn: &ParasiticNetwork) -> Circuit {
    let mut out = circuit.clone();
    for d in &mut out.devices {
        for (k, t) in d.terminals.iter_mut().enumerate() {
            if let Some(&n) = pn.pin_nodes.get(&(d.name.clone(), k)) {
                *t = pn.nodes[n].clone();
            }
        }
    }
    let taken: BTreeSet<String> = circuit.devices.iter().map(|d| d.name.clone()).collect();
    let fresh = |prefix: &str, k: usize| {
        let mut name = format!("{prefix}{k}");
        while taken.contains(&name) {
            name.push('_');
        }
        name
    };
    for (k, &(a, b, r)) in pn.resistors.iter().enumerate() {
        out.devices.push(passive(fresh("Rpar", k + 1), DeviceKind::Resistor, &pn.nodes[a], &pn.nodes[b], r));
    }
    for (k, &(a, c)) in pn.ground_caps.iter().enumerate() {
        out.devices.push(passive(fresh("Cpar", k + 1), DeviceKind::Capacitor, &pn.nodes[a], GROUND, c));
    }
    for (k, &(a, b, c)) in pn.couplings.iter().enumerate() {
        out.devices.push(passive(fresh("Ccpl", k + 1), DeviceKind::Capacitor, &pn.nodes[a], &pn.nodes[b], c));
    }
    out.nets = out.devices.iter().flat_map(|d| d.terminals.iter().cloned()).collect();
    out.nets.extend(circuit.nets.iter().cloned());
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{ComponentTile, FingerGeometry, Pin, Rect, Via, WireSegment};
    use crate::netlist::parse_netlist;

    fn tile(name: &str, x: i64, y: i64) -> ComponentTile {
        ComponentTile {
            name: name.into(),
            kind: DeviceKind::Resistor,
            rect: Rect::new(x - 100, y - 100, x + 300, y + 100),
            pins: vec![
                Pin { terminal: 0, at: Point::new(x, y) },
                Pin { terminal: 1, at: Point::new(x + 200, y) },
            ],
            fingers: FingerGeometry::default(),
        }
    }

    fn wire(layer: u8, r: Rect, net: &str) -> WireSegment {
        WireSegment { layer, rect: r, net: Some(net.into()) }
    }

    fn via(x: i64, y: i64, net: &str) -> Via {
        Via { lower: 1, at: Point::new(x, y), net: Some(net.into()) }
    }

    /// R1 and R2 joined on net `b` by a 10 µm layer-2 run.
    fn line_layout() -> (Layout, Circuit) {
        let c = parse_netlist("R1 a b 1k\nR2 b c 1k\n").unwrap();
        let mut l = Layout::empty(Rect::new(0, 0, 20000, 2000));
        l.tiles = vec![tile("R1", 1000, 1000), tile("R2", 11400, 1000)];
        l.wires.push(wire(2, Rect::new(1175, 975, 11425, 1025), "b"));
        l.vias = vec![via(1200, 1000, "b"), via(11400, 1000, "b")];
        (l, c)
    }

    #[test]
    fn single_run_gives_one_resistor() {
        let (l, c) = line_layout();
        let tech = TechnologyCard::default();
        let pn = extract_parasitics(&l, &c, &tech, &PexOptions::default());
        assert_eq!(pn.resistors.len(), 1);
        let (_, _, r) = pn.resistors[0];
        assert!((r - 0.125 * 10_200.0 / 50.0).abs() < 1e-12);
        // Lumped π: equal halves at both ends.
        assert_eq!(pn.ground_caps.len(), 2);
        assert_eq!(pn.ground_caps[0].1, pn.ground_caps[1].1);
        let expect = 3e-17 * 10.2 * 0.05 + 4e-17 * 2.0 * 10.2;
        assert!((pn.total_ground_cap() - expect).abs() < 1e-30);
        assert_eq!(pn.nodes, ["a", "b", "b#1", "c"]);
        let ann = annotate(&c, &pn);
        assert_eq!(ann.devices.len(), 2 + 1 + 2);
        assert_eq!(ann.devices[1].terminals[0], "b#1");
    }

    #[test]
    fn direct_resistance_formula() {
        let mut tech = TechnologyCard::default();
        tech.layers[1].sheet_resistance = 0.1;
        let c = parse_netlist("R1 a b 1k\nR2 b c 1k\n").unwrap();
        let mut l = Layout::empty(Rect::new(0, 0, 20000, 2000));
        l.tiles = vec![tile("R1", 1000, 1000), tile("R2", 11200, 1000)];
        l.wires.push(wire(2, Rect::new(1050, 850, 11350, 1150), "b"));
        l.vias = vec![via(1200, 1000, "b"), via(11200, 1000, "b")];
        let pn = extract_parasitics(&l, &c, &tech, &PexOptions::default());
        let total: f64 = pn.resistors.iter().map(|r| r.2).sum();
        assert!((total - 0.1 * 10.0 / 0.3).abs() < 1e-9, "{total}");
    }

    #[test]
    fn zero_scale_is_identity() {
        let (l, c) = line_layout();
        let pn = extract_parasitics(&l, &c, &TechnologyCard::default(), &PexOptions { scale: 0.0 });
        assert!(pn.is_empty());
        assert_eq!(annotate(&c, &pn), c);
    }

    #[test]
    fn coupling_falls_with_spacing() {
        let c = parse_netlist("R1 a b 1k\nR2 c d 1k\n").unwrap();
        let tech = TechnologyCard::default();
        let coupling = |dy: i64| {
            let mut l = Layout::empty(Rect::new(0, 0, 20000, 4000));
            l.wires.push(wire(1, Rect::new(975, 975, 6025, 1025), "b"));
            l.wires.push(wire(1, Rect::new(975, 975 + dy, 6025, 1025 + dy), "c"));
            extract_parasitics(&l, &c, &tech, &PexOptions::default()).total_coupling_cap()
        };
        let (near, far) = (coupling(100), coupling(125));
        assert!(near > far && far > 0.0);
        assert!((near - 8e-17 * 5.0).abs() < 1e-30);
        assert_eq!(coupling(200), 0.0);
    }

    #[test]
    fn scaling_lengths_scales_resistance() {
        let (mut l, c) = line_layout();
        let tech = TechnologyCard::default();
        let r1: f64 = extract_parasitics(&l, &c, &tech, &PexOptions::default()).resistors.iter().map(|r| r.2).sum();
        l.tiles[1] = tile("R2", 21600, 1000);
        l.die = Rect::new(0, 0, 40000, 2000);
        l.wires[0] = wire(2, Rect::new(1175, 975, 21625, 1025), "b");
        l.vias[1] = via(21600, 1000, "b");
        let r2: f64 = extract_parasitics(&l, &c, &tech, &PexOptions::default()).resistors.iter().map(|r| r.2).sum();
        assert!((r2 / r1 - 2.0).abs() < 1e-12);
    }
}
