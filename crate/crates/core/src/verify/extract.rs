use std::collections::BTreeMap;

use crate::geometry::{Layout, Rect};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ShapeKind {
    Wire,
    /// Labelled terminal of a component.
    Pin { device: usize, terminal: usize },
    Via,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Shape {
    /// Wiring layer (1 or 2); vias report their lower layer.
    pub layer: u8,
    pub rect: Rect,
    pub kind: ShapeKind,
}

/// Connected components of the layout's conducting shapes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Extraction {
    pub shapes: Vec<Shape>,
    /// Component id of each shape; ids are numbered by first appearance.
    pub component: Vec<usize>,
    pub component_count: usize,
    /// Component of each `(tile index, terminal)` pin.
    pub pins: BTreeMap<(usize, usize), usize>,
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

/// All conducting shapes: layer-1 pins, wires on both layers, via cuts.
pub fn layout_shapes(layout: &Layout, wire_width: i64) -> Vec<Shape> {
    let mut shapes = Vec::new();
    for (ti, t) in layout.tiles.iter().enumerate() {
        for p in &t.pins {
            shapes.push(Shape {
                layer: 1,
                rect: Layout::pin_rect(p.at, wire_width),
                kind: ShapeKind::Pin {
                    device: ti,
                    terminal: p.terminal,
                },
            });
        }
    }
    for w in &layout.wires {
        shapes.push(Shape {
            layer: w.layer,
            rect: w.rect,
            kind: ShapeKind::Wire,
        });
    }
    for v in &layout.vias {
        shapes.push(Shape {
            layer: v.lower,
            rect: Layout::via_rect(v.at, wire_width),
            kind: ShapeKind::Via,
        });
    }
    shapes
}

/// Same-layer shapes connect when their closed rectangles touch; a via
/// connects every shape on either adjacent layer that overlaps its cut.
pub fn extract_connectivity(layout: &Layout, wire_width: i64) -> Extraction {
    let shapes = layout_shapes(layout, wire_width);
    let n = shapes.len();
    let mut uf = UnionFind((0..n).collect());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&i| (shapes[i].rect.ll.x, i));
    for (k, &a) in order.iter().enumerate() {
        let ra = shapes[a].rect;
        for &b in &order[k + 1..] {
            let rb = shapes[b].rect;
            if rb.ll.x > ra.ur.x {
                break;
            }
            let (sa, sb) = (&shapes[a], &shapes[b]);
            let connected = match (&sa.kind, &sb.kind) {
                (ShapeKind::Via, ShapeKind::Via) => false,
                (ShapeKind::Via, _) => via_hits(sa, sb),
                (_, ShapeKind::Via) => via_hits(sb, sa),
                _ => sa.layer == sb.layer && ra.touches(&rb),
            };
            if connected {
                uf.union(a, b);
            }
        }
    }
    let mut ids: BTreeMap<usize, usize> = BTreeMap::new();
    let mut component = Vec::with_capacity(n);
    for i in 0..n {
        let root = uf.find(i);
        let next = ids.len();
        component.push(*ids.entry(root).or_insert(next));
    }
    let pins = shapes
        .iter()
        .zip(&component)
        .filter_map(|(s, &c)| match s.kind {
            ShapeKind::Pin { device, terminal } => Some(((device, terminal), c)),
            _ => None,
        })
        .collect();
    Extraction {
        component_count: ids.len(),
        shapes,
        component,
        pins,
    }
}

fn via_hits(via: &Shape, other: &Shape) -> bool {
    (other.layer == via.layer || other.layer == via.layer + 1) && via.rect.overlaps(&other.rect)
}
