use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{bounding_box, build_tiles, ComponentTile, Point, Rect};
use crate::netlist::{Circuit, DeviceKind};
use crate::tech::TechnologyCard;

/// Shift step used by both exploration strategies.
pub const DEFAULT_SHIFT_NM: i64 = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Up,
    Down,
    Left,
    Right,
}

impl Direction {
    pub const ALL: [Direction; 4] = [
        Direction::Up,
        Direction::Down,
        Direction::Left,
        Direction::Right,
    ];

    pub fn delta(self, amount: i64) -> (i64, i64) {
        match self {
            Direction::Up => (0, amount),
            Direction::Down => (0, -amount),
            Direction::Left => (-amount, 0),
            Direction::Right => (amount, 0),
        }
    }

    pub fn opposite(self) -> Self {
        match self {
            Direction::Up => Direction::Down,
            Direction::Down => Direction::Up,
            Direction::Left => Direction::Right,
            Direction::Right => Direction::Left,
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "up" => Some(Direction::Up),
            "down" => Some(Direction::Down),
            "left" => Some(Direction::Left),
            "right" => Some(Direction::Right),
            _ => None,
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Up => "up",
            Direction::Down => "down",
            Direction::Left => "left",
            Direction::Right => "right",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Move {
    pub component: String,
    pub direction: Direction,
    pub amount: i64,
}

impl fmt::Display for Move {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.component, self.direction, self.amount)
    }
}

impl Move {
    /// Parses the `component direction amount` line format.
    pub fn parse(line: &str) -> Option<Self> {
        let mut it = line.split_whitespace();
        let m = Move {
            component: it.next()?.to_string(),
            direction: Direction::parse(it.next()?)?,
            amount: it.next()?.parse().ok()?,
        };
        it.next().is_none().then_some(m)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ShiftError {
    #[error("unknown component `{0}`")]
    UnknownComponent(String),
    #[error("`{0}` would leave its halo")]
    HaloViolation(String),
    #[error("`{0}` would overlap `{1}`")]
    OverlapViolation(String, String),
}

/// Placed tiles with their halos and the moves applied since baseline.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InternalRepresentation {
    pub netlist_index: usize,
    pub iteration: usize,
    pub tiles: Vec<ComponentTile>,
    pub halos: Vec<Rect>,
    pub moves: Vec<Move>,
}

impl InternalRepresentation {
    /// Wraps placed tiles with halos of `margin` per side.
    pub fn new(netlist_index: usize, tiles: Vec<ComponentTile>, margin: i64) -> Self {
        let halos = tiles.iter().map(|t| t.rect.expand(margin)).collect();
        Self {
            netlist_index,
            iteration: 0,
            tiles,
            halos,
            moves: Vec::new(),
        }
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.tiles.iter().position(|t| t.name == name)
    }

    /// Returns a new representation with one tile translated.
    pub fn shift_component(
        &self,
        name: &str,
        direction: Direction,
        amount: i64,
    ) -> Result<Self, ShiftError> {
        let idx = self
            .index_of(name)
            .ok_or_else(|| ShiftError::UnknownComponent(name.to_string()))?;
        let (dx, dy) = direction.delta(amount);
        let moved = self.tiles[idx].translate(dx, dy);
        if !self.halos[idx].contains_rect(&moved.rect) {
            return Err(ShiftError::HaloViolation(name.to_string()));
        }
        if let Some(other) = self
            .tiles
            .iter()
            .enumerate()
            .find(|(i, t)| *i != idx && t.rect.overlaps(&moved.rect))
        {
            return Err(ShiftError::OverlapViolation(
                name.to_string(),
                other.1.name.clone(),
            ));
        }
        let mut next = self.clone();
        next.tiles[idx] = moved;
        next.moves.push(Move {
            component: name.to_string(),
            direction,
            amount,
        });
        next.iteration += 1;
        Ok(next)
    }

    /// Sum of tile areas in nm².
    pub fn component_area_nm2(&self) -> i128 {
        self.tiles.iter().map(|t| t.rect.area()).sum()
    }

    pub fn tile_bbox(&self) -> Rect {
        bounding_box(self.tiles.iter().map(|t| &t.rect)).unwrap_or_default()
    }

    pub fn halo_bbox(&self) -> Rect {
        bounding_box(&self.halos).unwrap_or_default()
    }

    pub fn record(&self) -> IrRecord {
        IrRecord {
            netlist: self.netlist_index,
            iteration: self.iteration,
            tiles: self
                .tiles
                .iter()
                .zip(&self.halos)
                .map(|(t, h)| TileRecord {
                    name: t.name.clone(),
                    kind: t.kind,
                    ll: [t.rect.ll.x, t.rect.ll.y],
                    ur: [t.rect.ur.x, t.rect.ur.y],
                    halo_ll: [h.ll.x, h.ll.y],
                    halo_ur: [h.ur.x, h.ur.y],
                })
                .collect(),
            moves: self.moves.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.record()).expect("IR record serializes")
    }

    /// Rebuilds a representation from its record; tile internals (pins,
    /// finger stripes) are regenerated from the netlist.
    pub fn from_record(
        record: &IrRecord,
        circuit: &Circuit,
        tech: &TechnologyCard,
    ) -> Result<Self, String> {
        let base = build_tiles(circuit, tech);
        let mut tiles = Vec::with_capacity(record.tiles.len());
        let mut halos = Vec::with_capacity(record.tiles.len());
        for tr in &record.tiles {
            let t = base
                .iter()
                .find(|t| t.name == tr.name)
                .ok_or_else(|| format!("tile `{}` not in netlist", tr.name))?;
            let placed = t.moved_to(Point::new(tr.ll[0], tr.ll[1]));
            if placed.rect.ur != Point::new(tr.ur[0], tr.ur[1]) || placed.kind != tr.kind {
                return Err(format!("tile `{}` does not match the netlist", tr.name));
            }
            tiles.push(placed);
            halos.push(Rect::new(tr.halo_ll[0], tr.halo_ll[1], tr.halo_ur[0], tr.halo_ur[1]));
        }
        Ok(Self {
            netlist_index: record.netlist,
            iteration: record.iteration,
            tiles,
            halos,
            moves: record.moves.clone(),
        })
    }
}

/// On-disk form of one tile: `{"name","kind","ll":[x,y],"ur":[x,y],"halo_ll","halo_ur"}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TileRecord {
    pub name: String,
    pub kind: DeviceKind,
    pub ll: [i64; 2],
    pub ur: [i64; 2],
    pub halo_ll: [i64; 2],
    pub halo_ur: [i64; 2],
}

/// JSON document with `netlist`, `iteration`, `tiles` and `moves`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IrRecord {
    pub netlist: usize,
    pub iteration: usize,
    pub tiles: Vec<TileRecord>,
    pub moves: Vec<Move>,
}

/// Applies a move log to a baseline.
pub fn replay(
    baseline: &InternalRepresentation,
    moves: &[Move],
) -> Result<InternalRepresentation, ShiftError> {
    moves.iter().try_fold(baseline.clone(), |ir, m| {
        ir.shift_component(&m.component, m.direction, m.amount)
    })
}
