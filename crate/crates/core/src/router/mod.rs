//! Two-stage grid router.
//!
//! Every net is first routed on a coarse grid (Dijkstra with congestion
//! costs) and then realised on the fine track grid by A* inside a corridor
//! around its coarse route, falling back to the whole grid when the
//! corridor is too tight. Layer 1 is blocked inside component tiles except
//! at pins; layer 2 may pass over tiles. Wires are one wire width wide and
//! centred on tracks one pitch apart, so shapes of different nets never come
//! closer than `pitch - wire_width`.

mod detail;
mod global;
mod grid;

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

pub use detail::{astar, Corridor, SearchPath};
pub use global::{Cell, CoarseGrid, GlobalRoute};
pub use grid::{NodeId, NodeState, RoutingGrid};

use crate::geometry::{ComponentTile, Layout, Point, Rect, Via, WireSegment};
use crate::netlist::Circuit;
use crate::tech::TechnologyCard;

/// Cost of a layer change, in planar steps.
pub const VIA_COST: u32 = 3;

#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct RouterConfig {
    /// Fine tracks per coarse cell side.
    pub coarse_factor: usize,
    /// Extra coarse cost per net already using a cell.
    pub congestion_penalty: u64,
}

impl Default for RouterConfig {
    fn default() -> Self {
        Self {
            coarse_factor: 8,
            congestion_penalty: 2,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RouteError {
    #[error("no tile for device `{0}`")]
    MissingTile(String),
    #[error("pin {terminal} of `{device}` is off the routing grid")]
    OffGrid { device: String, terminal: usize },
    #[error("pin {terminal} of `{device}` overlaps a pin of another net")]
    PinConflict { device: String, terminal: usize },
    #[error("unroutable nets: {}", .0.join(", "))]
    Unroutable(Vec<String>),
}

/// A net with its pin locations, in routing order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RouteNet {
    pub name: String,
    pub id: u32,
    pub pins: Vec<Point>,
}

/// Sum of half perimeters of the pin bounding box.
fn pin_hpwl(pins: &[Point]) -> i64 {
    let xs = pins.iter().map(|p| p.x);
    let ys = pins.iter().map(|p| p.y);
    let (x0, x1) = (xs.clone().min().unwrap_or(0), xs.max().unwrap_or(0));
    let (y0, y1) = (ys.clone().min().unwrap_or(0), ys.max().unwrap_or(0));
    (x1 - x0) + (y1 - y0)
}

/// Collects every net's pins and orders them by pin count (descending),
/// then HPWL (ascending), then name.
pub fn collect_nets(tiles: &[ComponentTile], circuit: &Circuit) -> Result<Vec<RouteNet>, RouteError> {
    let by_name: BTreeMap<&str, &ComponentTile> = tiles.iter().map(|t| (t.name.as_str(), t)).collect();
    let mut nets = Vec::new();
    for (id, (name, terms)) in circuit.net_terminals().into_iter().enumerate() {
        let mut pins = Vec::with_capacity(terms.len());
        for (di, ti) in terms {
            let dev = &circuit.devices[di];
            let tile = by_name
                .get(dev.name.as_str())
                .ok_or_else(|| RouteError::MissingTile(dev.name.clone()))?;
            let p = tile.pin(ti).ok_or_else(|| RouteError::OffGrid {
                device: dev.name.clone(),
                terminal: ti,
            })?;
            pins.push(p);
        }
        nets.push(RouteNet {
            name: name.to_string(),
            id: id as u32,
            pins,
        });
    }
    nets.sort_by(|a, b| {
        b.pins
            .len()
            .cmp(&a.pins.len())
            .then(pin_hpwl(&a.pins).cmp(&pin_hpwl(&b.pins)))
            .then(a.name.cmp(&b.name))
    });
    Ok(nets)
}

/// Blocks tiles on layer 1 and reserves both layers at every pin.
pub fn build_grid(
    tiles: &[ComponentTile],
    nets: &[RouteNet],
    die: Rect,
    pitch: i64,
) -> Result<RoutingGrid, RouteError> {
    let mut grid = RoutingGrid::new(die, pitch);
    for t in tiles {
        grid.block_rect(0, &t.rect);
    }
    let mut owner: BTreeMap<Point, u32> = BTreeMap::new();
    for net in nets {
        for &p in &net.pins {
            if let Some(&other) = owner.get(&p) {
                if other != net.id {
                    let (device, terminal) = pin_owner(tiles, p);
                    return Err(RouteError::PinConflict { device, terminal });
                }
            }
            owner.insert(p, net.id);
        }
    }
    for (&p, &id) in &owner {
        for layer in 0..2 {
            let node = grid.locate(layer, p).ok_or_else(|| {
                let (device, terminal) = pin_owner(tiles, p);
                RouteError::OffGrid { device, terminal }
            })?;
            if layer == 1 && grid.state(node) == NodeState::Blocked {
                let (device, terminal) = pin_owner(tiles, p);
                return Err(RouteError::OffGrid { device, terminal });
            }
            grid.set(node, NodeState::Reserved(id));
        }
    }
    Ok(grid)
}

fn pin_owner(tiles: &[ComponentTile], p: Point) -> (String, usize) {
    tiles
        .iter()
        .flat_map(|t| t.pins.iter().map(move |pin| (t, pin)))
        .find(|(_, pin)| pin.at == p)
        .map(|(t, pin)| (t.name.clone(), pin.terminal))
        .unwrap_or_default()
}

/// Fine-grid paths of one routed net.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoutedNet {
    pub name: String,
    pub paths: Vec<Vec<NodeId>>,
    pub global: GlobalRoute,
    /// Some attachment needed the full-grid fallback.
    pub used_fallback: bool,
}

fn corridor_for(grid: &RoutingGrid, route: &GlobalRoute, factor: usize) -> Corridor {
    let mut c = Corridor::new(grid.nx, grid.ny);
    let dilated: BTreeSet<Cell> = route
        .cells
        .iter()
        .flat_map(|&(cx, cy)| {
            (cx.saturating_sub(1)..=cx + 1).flat_map(move |x| (cy.saturating_sub(1)..=cy + 1).map(move |y| (x, y)))
        })
        .collect();
    for (cx, cy) in dilated {
        for j in cy * factor..((cy + 1) * factor).min(grid.ny) {
            for i in cx * factor..((cx + 1) * factor).min(grid.nx) {
                c.allow(i, j);
            }
        }
    }
    c
}

/// Routes every multi-pin net and returns the fine paths per net.
pub fn route_nets(
    grid: &mut RoutingGrid,
    nets: &[RouteNet],
    cfg: &RouterConfig,
) -> Result<Vec<RoutedNet>, RouteError> {
    let f = cfg.coarse_factor.max(1);
    let mut coarse = CoarseGrid::new(grid.nx.div_ceil(f), grid.ny.div_ceil(f), cfg.congestion_penalty);
    let mut globals = Vec::with_capacity(nets.len());
    let mut failed = Vec::new();
    for net in nets.iter().filter(|n| n.pins.len() >= 2) {
        let cells: Vec<Cell> = net
            .pins
            .iter()
            .map(|&p| {
                let (_, i, j) = grid.coords(grid.locate(0, p).expect("pins checked on grid"));
                (i / f, j / f)
            })
            .collect();
        match coarse.route_net(&cells) {
            Some(g) => globals.push((net, g)),
            None => failed.push(net.name.clone()),
        }
    }

    let mut routed = Vec::with_capacity(globals.len());
    for (net, global) in globals {
        let corridor = corridor_for(grid, &global, f);
        let pin_nodes: Vec<NodeId> = net.pins.iter().map(|&p| grid.locate(0, p).unwrap()).collect();
        let mut tree: BTreeSet<NodeId> = BTreeSet::from([pin_nodes[global.order[0]]]);
        let mut paths = Vec::new();
        let mut used_fallback = false;
        let mut ok = true;
        for &k in &global.order[1..] {
            let source = pin_nodes[k];
            if tree.contains(&source) {
                continue;
            }
            let found = astar(grid, net.id, source, &tree, Some(&corridor)).or_else(|| {
                used_fallback = true;
                astar(grid, net.id, source, &tree, None)
            });
            match found {
                Some(p) => {
                    for &n in &p.nodes {
                        grid.set(n, NodeState::Net(net.id));
                    }
                    tree.extend(p.nodes.iter().copied());
                    paths.push(p.nodes);
                }
                None => {
                    ok = false;
                    break;
                }
            }
        }
        if ok {
            routed.push(RoutedNet {
                name: net.name.clone(),
                paths,
                global,
                used_fallback,
            });
        } else {
            failed.push(net.name.clone());
        }
    }
    if failed.is_empty() {
        Ok(routed)
    } else {
        failed.sort();
        Err(RouteError::Unroutable(failed))
    }
}

/// Converts fine paths into wire rectangles, landing pads and vias.
pub fn paths_to_shapes(
    grid: &RoutingGrid,
    routed: &[RoutedNet],
    pins: &BTreeSet<Point>,
    wire_width: i64,
) -> (Vec<WireSegment>, Vec<Via>) {
    let half = wire_width / 2;
    let rect_between = |a: Point, b: Point| {
        Rect::new(a.x.min(b.x) - half, a.y.min(b.y) - half, a.x.max(b.x) - half + wire_width, a.y.max(b.y) - half + wire_width)
    };
    let mut wires = Vec::new();
    let mut vias = Vec::new();
    for net in routed {
        let mut rects: BTreeSet<(u8, Rect)> = BTreeSet::new();
        let mut cuts: BTreeSet<Point> = BTreeSet::new();
        for path in &net.paths {
            let mut k = 0;
            while k < path.len() {
                let layer = grid.coords(path[k]).0;
                let mut end = k;
                while end + 1 < path.len() && grid.coords(path[end + 1]).0 == layer {
                    end += 1;
                }
                let group: Vec<Point> = path[k..=end].iter().map(|&n| grid.point(n)).collect();
                if group.len() == 1 {
                    if !(layer == 0 && pins.contains(&group[0])) {
                        rects.insert((layer as u8 + 1, rect_between(group[0], group[0])));
                    }
                } else {
                    let mut start = 0;
                    for m in 1..group.len() {
                        let turns = m + 1 < group.len() && {
                            let d0 = (group[m].x - group[m - 1].x, group[m].y - group[m - 1].y);
                            let d1 = (group[m + 1].x - group[m].x, group[m + 1].y - group[m].y);
                            d0 != d1
                        };
                        if turns || m + 1 == group.len() {
                            rects.insert((layer as u8 + 1, rect_between(group[start], group[m])));
                            start = m;
                        }
                    }
                }
                if end + 1 < path.len() {
                    cuts.insert(grid.point(path[end]));
                }
                k = end + 1;
            }
        }
        wires.extend(rects.into_iter().map(|(layer, rect)| WireSegment {
            layer,
            rect,
            net: Some(net.name.clone()),
        }));
        vias.extend(cuts.into_iter().map(|at| Via {
            lower: 1,
            at,
            net: Some(net.name.clone()),
        }));
    }
    (wires, vias)
}

/// Places all wires for the tiles of `circuit` inside `die`.
pub fn route_all(
    tiles: &[ComponentTile],
    circuit: &Circuit,
    die: Rect,
    tech: &TechnologyCard,
    cfg: &RouterConfig,
) -> Result<Layout, RouteError> {
    let nets = collect_nets(tiles, circuit)?;
    let mut grid = build_grid(tiles, &nets, die, tech.wire_pitch)?;
    let routed = route_nets(&mut grid, &nets, cfg)?;
    let pins: BTreeSet<Point> = nets.iter().flat_map(|n| n.pins.iter().copied()).collect();
    let (wires, vias) = paths_to_shapes(&grid, &routed, &pins, tech.wire_width);
    Ok(Layout {
        die,
        tiles: tiles.to_vec(),
        wires,
        vias,
    })
}
