use crate::geometry::{Point, Rect};

/// Occupancy of one grid node on one layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeState {
    Free,
    Blocked,
    /// Kept clear for a pin of the given net.
    Reserved(u32),
    /// Committed wire of the given net.
    Net(u32),
}

impl NodeState {
    pub fn passable_for(self, net: u32) -> bool {
        match self {
            NodeState::Free => true,
            NodeState::Blocked => false,
            NodeState::Reserved(n) | NodeState::Net(n) => n == net,
        }
    }
}

/// Fine routing grid over two layers. Node `(i, j)` sits at
/// `origin + (i, j) * pitch`. Layer indices here are 0 and 1 for wiring
/// layers 1 and 2.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoutingGrid {
    pub origin: Point,
    pub pitch: i64,
    pub nx: usize,
    pub ny: usize,
    states: Vec<NodeState>,
}

pub type NodeId = usize;

impl RoutingGrid {
    /// Grid covering `die`; nodes on the die boundary are blocked so that
    /// wire shapes stay inside.
    pub fn new(die: Rect, pitch: i64) -> Self {
        let nx = (die.width() / pitch + 1) as usize;
        let ny = (die.height() / pitch + 1) as usize;
        let mut g = Self {
            origin: die.ll,
            pitch,
            nx,
            ny,
            states: vec![NodeState::Free; 2 * nx * ny],
        };
        for layer in 0..2 {
            for i in 0..nx {
                g.set(g.id(layer, i, 0), NodeState::Blocked);
                g.set(g.id(layer, i, ny - 1), NodeState::Blocked);
            }
            for j in 0..ny {
                g.set(g.id(layer, 0, j), NodeState::Blocked);
                g.set(g.id(layer, nx - 1, j), NodeState::Blocked);
            }
        }
        g
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn id(&self, layer: usize, i: usize, j: usize) -> NodeId {
        (layer * self.ny + j) * self.nx + i
    }

    /// `(layer, i, j)` of a node.
    pub fn coords(&self, id: NodeId) -> (usize, usize, usize) {
        let plane = self.nx * self.ny;
        let layer = id / plane;
        let rest = id % plane;
        (layer, rest % self.nx, rest / self.nx)
    }

    pub fn point(&self, id: NodeId) -> Point {
        let (_, i, j) = self.coords(id);
        Point::new(
            self.origin.x + i as i64 * self.pitch,
            self.origin.y + j as i64 * self.pitch,
        )
    }

    /// Node at an on-grid point, if any.
    pub fn locate(&self, layer: usize, p: Point) -> Option<NodeId> {
        let dx = p.x - self.origin.x;
        let dy = p.y - self.origin.y;
        if dx < 0 || dy < 0 || dx % self.pitch != 0 || dy % self.pitch != 0 {
            return None;
        }
        let (i, j) = ((dx / self.pitch) as usize, (dy / self.pitch) as usize);
        (i < self.nx && j < self.ny).then(|| self.id(layer, i, j))
    }

    pub fn state(&self, id: NodeId) -> NodeState {
        self.states[id]
    }

    pub fn set(&mut self, id: NodeId, s: NodeState) {
        self.states[id] = s;
    }

    /// Blocks every node of `layer` inside the closed rectangle.
    pub fn block_rect(&mut self, layer: usize, r: &Rect) {
        let lo_i = (r.ll.x - self.origin.x).div_euclid(self.pitch).max(0);
        let lo_j = (r.ll.y - self.origin.y).div_euclid(self.pitch).max(0);
        for j in lo_j..self.ny as i64 {
            for i in lo_i..self.nx as i64 {
                let id = self.id(layer, i as usize, j as usize);
                if r.contains(self.point(id)) {
                    self.states[id] = NodeState::Blocked;
                } else if self.point(id).x > r.ur.x {
                    break;
                }
            }
            if self.origin.y + j * self.pitch > r.ur.y {
                break;
            }
        }
    }

    /// Planar neighbours plus the node on the other layer.
    pub fn neighbors(&self, id: NodeId) -> impl Iterator<Item = (NodeId, u32)> + '_ {
        let (layer, i, j) = self.coords(id);
        let planar = [
            (i > 0).then(|| self.id(layer, i - 1, j)),
            (i + 1 < self.nx).then(|| self.id(layer, i + 1, j)),
            (j > 0).then(|| self.id(layer, i, j - 1)),
            (j + 1 < self.ny).then(|| self.id(layer, i, j + 1)),
        ];
        planar
            .into_iter()
            .flatten()
            .map(|n| (n, 1))
            .chain(std::iter::once((self.id(1 - layer, i, j), super::VIA_COST)))
    }
}
