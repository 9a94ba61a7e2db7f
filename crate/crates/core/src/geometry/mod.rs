//! Physical layout model. Coordinates are integer nanometres.

mod ir;
mod layout;
mod tile;

use serde::{Deserialize, Serialize};

pub use ir::{
    replay, Direction, InternalRepresentation, IrRecord, Move, ShiftError, TileRecord,
    DEFAULT_SHIFT_NM,
};
pub use layout::{Layout, Via, WireSegment, LAYER_M1, LAYER_M2};
pub use tile::{build_tiles, ComponentTile, FingerGeometry, Pin};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Point {
    pub x: i64,
    pub y: i64,
}

impl Point {
    pub const fn new(x: i64, y: i64) -> Self {
        Self { x, y }
    }

    pub fn translate(self, dx: i64, dy: i64) -> Self {
        Self::new(self.x + dx, self.y + dy)
    }

    pub fn manhattan(self, other: Point) -> i64 {
        (self.x - other.x).abs() + (self.y - other.y).abs()
    }
}

/// Axis-aligned rectangle given by its lower-left and upper-right corners.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Rect {
    pub ll: Point,
    pub ur: Point,
}

impl Rect {
    pub fn new(x0: i64, y0: i64, x1: i64, y1: i64) -> Self {
        Self {
            ll: Point::new(x0.min(x1), y0.min(y1)),
            ur: Point::new(x0.max(x1), y0.max(y1)),
        }
    }

    pub fn from_size(ll: Point, w: i64, h: i64) -> Self {
        Self::new(ll.x, ll.y, ll.x + w, ll.y + h)
    }

    pub fn width(&self) -> i64 {
        self.ur.x - self.ll.x
    }

    pub fn height(&self) -> i64 {
        self.ur.y - self.ll.y
    }

    /// Area in nm².
    pub fn area(&self) -> i128 {
        i128::from(self.width()) * i128::from(self.height())
    }

    pub fn translate(&self, dx: i64, dy: i64) -> Self {
        Self {
            ll: self.ll.translate(dx, dy),
            ur: self.ur.translate(dx, dy),
        }
    }

    pub fn expand(&self, d: i64) -> Self {
        Self::new(self.ll.x - d, self.ll.y - d, self.ur.x + d, self.ur.y + d)
    }

    /// Interiors intersect; shared edges do not count.
    pub fn overlaps(&self, o: &Rect) -> bool {
        self.ll.x < o.ur.x && o.ll.x < self.ur.x && self.ll.y < o.ur.y && o.ll.y < self.ur.y
    }

    /// Closed rectangles intersect (touching edges or corners count).
    pub fn touches(&self, o: &Rect) -> bool {
        self.ll.x <= o.ur.x && o.ll.x <= self.ur.x && self.ll.y <= o.ur.y && o.ll.y <= self.ur.y
    }

    pub fn contains_rect(&self, o: &Rect) -> bool {
        self.ll.x <= o.ll.x && self.ll.y <= o.ll.y && o.ur.x <= self.ur.x && o.ur.y <= self.ur.y
    }

    pub fn contains(&self, p: Point) -> bool {
        self.ll.x <= p.x && p.x <= self.ur.x && self.ll.y <= p.y && p.y <= self.ur.y
    }

    pub fn union(&self, o: &Rect) -> Rect {
        Rect::new(
            self.ll.x.min(o.ll.x),
            self.ll.y.min(o.ll.y),
            self.ur.x.max(o.ur.x),
            self.ur.y.max(o.ur.y),
        )
    }

    /// Euclidean gap between two rectangles; zero when they touch.
    pub fn distance(&self, o: &Rect) -> f64 {
        let dx = (o.ll.x - self.ur.x).max(self.ll.x - o.ur.x).max(0);
        let dy = (o.ll.y - self.ur.y).max(self.ll.y - o.ur.y).max(0);
        ((dx * dx + dy * dy) as f64).sqrt()
    }

    pub fn center(&self) -> Point {
        Point::new((self.ll.x + self.ur.x) / 2, (self.ll.y + self.ur.y) / 2)
    }

    /// The five-point closed outline, counter-clockwise from the lower-left.
    pub fn outline(&self) -> [Point; 5] {
        [
            self.ll,
            Point::new(self.ur.x, self.ll.y),
            self.ur,
            Point::new(self.ll.x, self.ur.y),
            self.ll,
        ]
    }
}

/// Bounding box of a set of rectangles.
pub fn bounding_box<'a>(rects: impl IntoIterator<Item = &'a Rect>) -> Option<Rect> {
    rects.into_iter().copied().reduce(|a, b| a.union(&b))
}
