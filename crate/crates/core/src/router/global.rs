use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap};

/// Coarse cell coordinates.
pub type Cell = (usize, usize);

/// Coarse grid with per-cell congestion counts.
#[derive(Debug, Clone)]
pub struct CoarseGrid {
    pub nx: usize,
    pub ny: usize,
    pub penalty: u64,
    occupancy: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GlobalRoute {
    /// Cells used by the net's tree.
    pub cells: BTreeSet<Cell>,
    /// Sum of the attachment path costs.
    pub cost: u64,
    /// Pin indices in the order they join the tree; the first two are the
    /// seed pair.
    pub order: Vec<usize>,
}

impl CoarseGrid {
    pub fn new(nx: usize, ny: usize, penalty: u64) -> Self {
        Self {
            nx,
            ny,
            penalty,
            occupancy: vec![0; nx * ny],
        }
    }

    pub fn occupancy(&self, c: Cell) -> u32 {
        self.occupancy[c.1 * self.nx + c.0]
    }

    fn entry_cost(&self, c: Cell) -> u64 {
        1 + self.penalty * u64::from(self.occupancy(c))
    }

    /// Dijkstra from `from` to the nearest cell of `targets`. Returns the
    /// path (including both ends) and its cost.
    pub fn shortest_path(&self, from: Cell, targets: &BTreeSet<Cell>) -> Option<(Vec<Cell>, u64)> {
        let n = self.nx * self.ny;
        let idx = |c: Cell| c.1 * self.nx + c.0;
        let mut dist = vec![u64::MAX; n];
        let mut prev = vec![usize::MAX; n];
        let mut heap = BinaryHeap::new();
        dist[idx(from)] = 0;
        heap.push(Reverse((0u64, idx(from))));
        while let Some(Reverse((d, u))) = heap.pop() {
            if d > dist[u] {
                continue;
            }
            let cu = (u % self.nx, u / self.nx);
            if targets.contains(&cu) {
                let mut path = vec![cu];
                let mut v = u;
                while prev[v] != usize::MAX {
                    v = prev[v];
                    path.push((v % self.nx, v / self.nx));
                }
                path.reverse();
                return Some((path, d));
            }
            let (x, y) = cu;
            let nbrs = [
                (x > 0).then(|| (x - 1, y)),
                (x + 1 < self.nx).then(|| (x + 1, y)),
                (y > 0).then(|| (x, y - 1)),
                (y + 1 < self.ny).then(|| (x, y + 1)),
            ];
            for c in nbrs.into_iter().flatten() {
                let nd = d + self.entry_cost(c);
                let v = idx(c);
                if nd < dist[v] {
                    dist[v] = nd;
                    prev[v] = u;
                    heap.push(Reverse((nd, v)));
                }
            }
        }
        None
    }

    /// Builds a tree over `pins`: the closest pair first, then the pin
    /// nearest to the partial tree, each joined by a shortest path. The
    /// tree's cells are then charged to the congestion map.
    pub fn route_net(&mut self, pins: &[Cell]) -> Option<GlobalRoute> {
        let manhattan = |a: Cell, b: Cell| a.0.abs_diff(b.0) + a.1.abs_diff(b.1);
        let mut cells = BTreeSet::new();
        let mut order = Vec::new();
        let mut cost = 0;
        if let Some(&p) = pins.first() {
            if pins.len() == 1 {
                cells.insert(p);
                order.push(0);
            }
        }
        if pins.len() >= 2 {
            let mut seed = (0, 1);
            for a in 0..pins.len() {
                for b in a + 1..pins.len() {
                    if manhattan(pins[a], pins[b]) < manhattan(pins[seed.0], pins[seed.1]) {
                        seed = (a, b);
                    }
                }
            }
            let target = BTreeSet::from([pins[seed.1]]);
            let (path, c) = self.shortest_path(pins[seed.0], &target)?;
            cells.extend(path);
            cost += c;
            order.extend([seed.0, seed.1]);
            while order.len() < pins.len() {
                let next = (0..pins.len())
                    .filter(|i| !order.contains(i))
                    .min_by_key(|&i| {
                        cells.iter().map(|&c| manhattan(c, pins[i])).min().unwrap_or(usize::MAX)
                    })
                    .expect("pins remain");
                let (path, c) = self.shortest_path(pins[next], &cells)?;
                cells.extend(path);
                cost += c;
                order.push(next);
            }
        }
        for &c in &cells {
            self.occupancy[c.1 * self.nx + c.0] += 1;
        }
        Some(GlobalRoute { cells, cost, order })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn adjacent_cells_cost_one() {
        let mut g = CoarseGrid::new(4, 4, 2);
        let r = g.route_net(&[(1, 1), (2, 1)]).unwrap();
        assert_eq!(r.cost, 1);
        assert_eq!(r.cells.len(), 2);
    }

    #[test]
    fn empty_grid_cost_is_manhattan() {
        let g = CoarseGrid::new(10, 10, 2);
        for (a, b) in [((0, 0), (9, 9)), ((3, 7), (8, 2)), ((5, 5), (5, 5))] {
            let (_, c) = g.shortest_path(a, &BTreeSet::from([b])).unwrap();
            assert_eq!(c as usize, a.0.abs_diff(b.0) + a.1.abs_diff(b.1));
        }
    }

    #[test]
    fn collinear_pins_cost_span() {
        let mut g = CoarseGrid::new(12, 3, 2);
        let r = g.route_net(&[(1, 1), (9, 1), (4, 1)]).unwrap();
        assert_eq!(r.cost, 8);
        assert_eq!(r.order, vec![0, 2, 1]);
    }

    #[test]
    fn congestion_raises_cost() {
        let mut g = CoarseGrid::new(5, 3, 4);
        g.route_net(&[(0, 1), (4, 1)]).unwrap();
        let (path, _) = g.shortest_path((0, 0), &BTreeSet::from([(4, 0)])).unwrap();
        assert!(path.iter().all(|c| c.1 == 0));
        let (_, crossing) = g.shortest_path((2, 0), &BTreeSet::from([(2, 2)])).unwrap();
        assert_eq!(crossing, (1 + 4) + 1);
    }
}
