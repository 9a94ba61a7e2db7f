use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap};

use super::grid::{NodeId, RoutingGrid};

/// Allowed `(i, j)` columns of the grid, shared by both layers.
#[derive(Debug, Clone)]
pub struct Corridor {
    nx: usize,
    allowed: Vec<bool>,
}

impl Corridor {
    pub fn new(nx: usize, ny: usize) -> Self {
        Self {
            nx,
            allowed: vec![false; nx * ny],
        }
    }

    pub fn allow(&mut self, i: usize, j: usize) {
        self.allowed[j * self.nx + i] = true;
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.allowed[j * self.nx + i]
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchPath {
    /// From the source to the first target reached.
    pub nodes: Vec<NodeId>,
    pub cost: u32,
}

/// A* from `source` to any node of `targets` for net `net`. The heuristic
/// is the Manhattan distance (in grid steps) to the targets' bounding box,
/// which never overestimates since planar steps cost 1 and vias do not
/// move in the plane.
pub fn astar(
    grid: &RoutingGrid,
    net: u32,
    source: NodeId,
    targets: &BTreeSet<NodeId>,
    corridor: Option<&Corridor>,
) -> Option<SearchPath> {
    if targets.is_empty() {
        return None;
    }
    let (mut lo_i, mut lo_j, mut hi_i, mut hi_j) = (usize::MAX, usize::MAX, 0, 0);
    for &t in targets {
        let (_, i, j) = grid.coords(t);
        lo_i = lo_i.min(i);
        lo_j = lo_j.min(j);
        hi_i = hi_i.max(i);
        hi_j = hi_j.max(j);
    }
    let h = |id: NodeId| -> u32 {
        let (_, i, j) = grid.coords(id);
        let dx = lo_i.saturating_sub(i) + i.saturating_sub(hi_i);
        let dy = lo_j.saturating_sub(j) + j.saturating_sub(hi_j);
        (dx + dy) as u32
    };
    let inside = |id: NodeId| {
        corridor.map_or(true, |c| {
            let (_, i, j) = grid.coords(id);
            c.contains(i, j)
        })
    };

    let mut g = vec![u32::MAX; grid.len()];
    let mut prev = vec![usize::MAX; grid.len()];
    let mut closed = vec![false; grid.len()];
    let mut open = BinaryHeap::new();
    g[source] = 0;
    open.push(Reverse((h(source), u32::MAX, source)));
    while let Some(Reverse((_, _, u))) = open.pop() {
        if closed[u] {
            continue;
        }
        closed[u] = true;
        let gu = g[u];
        if targets.contains(&u) {
            let mut nodes = vec![u];
            let mut v = u;
            while prev[v] != usize::MAX {
                v = prev[v];
                nodes.push(v);
            }
            nodes.reverse();
            return Some(SearchPath { nodes, cost: gu });
        }
        for (v, w) in grid.neighbors(u) {
            if closed[v] || !grid.state(v).passable_for(net) || !inside(v) {
                continue;
            }
            let gv = gu + w;
            if gv < g[v] {
                g[v] = gv;
                prev[v] = u;
                // Ties prefer deeper nodes so straight runs are explored first.
                open.push(Reverse((gv + h(v), u32::MAX - gv, v)));
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Point, Rect};
    use crate::router::grid::NodeState;

    /// Plain Dijkstra on the same graph.
    fn dijkstra(grid: &RoutingGrid, net: u32, s: NodeId, targets: &BTreeSet<NodeId>) -> Option<u32> {
        let mut dist = vec![u32::MAX; grid.len()];
        let mut heap = BinaryHeap::new();
        dist[s] = 0;
        heap.push(Reverse((0, s)));
        while let Some(Reverse((d, u))) = heap.pop() {
            if d > dist[u] {
                continue;
            }
            if targets.contains(&u) {
                return Some(d);
            }
            for (v, w) in grid.neighbors(u) {
                if grid.state(v).passable_for(net) && d + w < dist[v] {
                    dist[v] = d + w;
                    heap.push(Reverse((d + w, v)));
                }
            }
        }
        None
    }

    #[test]
    fn straight_run_has_no_vias() {
        let grid = RoutingGrid::new(Rect::new(0, 0, 2000, 1000), 100);
        let s = grid.locate(0, Point::new(300, 500)).unwrap();
        let t = grid.locate(0, Point::new(1500, 500)).unwrap();
        let p = astar(&grid, 0, s, &BTreeSet::from([t]), None).unwrap();
        assert_eq!(p.cost, 12);
        assert!(p.nodes.iter().all(|&n| grid.coords(n).0 == 0));
    }

    #[test]
    fn detour_matches_dijkstra() {
        let mut grid = RoutingGrid::new(Rect::new(0, 0, 2000, 2000), 100);
        grid.block_rect(0, &Rect::new(800, 300, 1200, 1700));
        grid.block_rect(1, &Rect::new(800, 300, 1200, 1700));
        let s = grid.locate(0, Point::new(300, 1000)).unwrap();
        let t = grid.locate(0, Point::new(1700, 1000)).unwrap();
        let targets = BTreeSet::from([t]);
        let p = astar(&grid, 0, s, &targets, None).unwrap();
        assert_eq!(Some(p.cost), dijkstra(&grid, 0, s, &targets));
        assert_eq!(p.cost, 14 + 2 * 8);
    }

    #[test]
    fn other_net_forces_via_crossing() {
        let mut grid = RoutingGrid::new(Rect::new(0, 0, 1000, 1000), 100);
        for j in 1..9 {
            let id = grid.id(0, 5, j);
            grid.set(id, NodeState::Net(7));
        }
        let s = grid.locate(0, Point::new(200, 500)).unwrap();
        let t = grid.locate(0, Point::new(800, 500)).unwrap();
        let p = astar(&grid, 1, s, &BTreeSet::from([t]), None).unwrap();
        assert_eq!(p.cost, 6 + 2 * 3);
        assert!(p.nodes.iter().any(|&n| grid.coords(n).0 == 1));
    }

    #[test]
    fn corridor_restricts_search() {
        let grid = RoutingGrid::new(Rect::new(0, 0, 1000, 1000), 100);
        let mut c = Corridor::new(grid.nx, grid.ny);
        for i in 1..5 {
            c.allow(i, 1);
        }
        let s = grid.locate(0, Point::new(100, 100)).unwrap();
        let t = grid.locate(0, Point::new(700, 100)).unwrap();
        assert!(astar(&grid, 0, s, &BTreeSet::from([t]), Some(&c)).is_none());
        assert!(astar(&grid, 0, s, &BTreeSet::from([t]), None).is_some());
    }
}
