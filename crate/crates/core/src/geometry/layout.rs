use serde::{Deserialize, Serialize};

use super::{ComponentTile, Point, Rect};

pub const LAYER_M1: u8 = 1;
pub const LAYER_M2: u8 = 2;

/// A routed rectangle on a wiring layer. A zero-length run is a landing pad.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WireSegment {
    pub layer: u8,
    pub rect: Rect,
    /// Net name when known; shapes read back from GDS carry none.
    pub net: Option<String>,
}

/// A cut between layer 1 and layer 2.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Via {
    pub lower: u8,
    pub at: Point,
    pub net: Option<String>,
}

impl Via {
    pub fn upper(&self) -> u8 {
        self.lower + 1
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Layout {
    pub die: Rect,
    pub tiles: Vec<ComponentTile>,
    pub wires: Vec<WireSegment>,
    pub vias: Vec<Via>,
}

impl Layout {
    pub fn empty(die: Rect) -> Self {
        Self {
            die,
            tiles: Vec::new(),
            wires: Vec::new(),
            vias: Vec::new(),
        }
    }

    /// Square cut shape of a via for a given wire width.
    pub fn via_rect(at: Point, wire_width: i64) -> Rect {
        let h = wire_width / 2;
        Rect::new(at.x - h, at.y - h, at.x - h + wire_width, at.y - h + wire_width)
    }

    /// Square pin shape on layer 1.
    pub fn pin_rect(at: Point, wire_width: i64) -> Rect {
        Self::via_rect(at, wire_width)
    }

    /// Equality of shapes, ignoring net annotations and ordering of tiles.
    pub fn geometry_eq(&self, other: &Layout) -> bool {
        let shapes = |l: &Layout| {
            let mut w: Vec<(u8, Rect)> = l.wires.iter().map(|s| (s.layer, s.rect)).collect();
            w.sort();
            let mut v: Vec<(u8, Point)> = l.vias.iter().map(|v| (v.lower, v.at)).collect();
            v.sort();
            let mut t = l.tiles.clone();
            t.sort_by(|a, b| a.name.cmp(&b.name));
            (l.die, w, v, t)
        };
        shapes(self) == shapes(other)
    }

    /// Every shape lies inside the die box.
    pub fn within_die(&self, wire_width: i64) -> bool {
        self.tiles.iter().all(|t| self.die.contains_rect(&t.rect))
            && self.wires.iter().all(|w| self.die.contains_rect(&w.rect))
            && self
                .vias
                .iter()
                .all(|v| self.die.contains_rect(&Layout::via_rect(v.at, wire_width)))
    }
}
