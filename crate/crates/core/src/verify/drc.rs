use std::fmt;

use super::extract::{Extraction, ShapeKind};
use crate::geometry::{Layout, Rect};
use crate::tech::TechnologyCard;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum DrcRule {
    Spacing,
    Width,
    OffGrid,
    OutsideDie,
}

impl fmt::Display for DrcRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DrcRule::Spacing => "spacing",
            DrcRule::Width => "width",
            DrcRule::OffGrid => "off_grid",
            DrcRule::OutsideDie => "outside_die",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub rule: DrcRule,
    pub layer: u8,
    pub rect: Rect,
    /// Second shape of a spacing violation.
    pub other: Option<Rect>,
    /// Measured gap or width in nm.
    pub value: f64,
}

fn fmt_rect(r: &Rect) -> String {
    format!("({},{})-({},{})", r.ll.x, r.ll.y, r.ur.x, r.ur.y)
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} layer={} {}", self.rule, self.layer, fmt_rect(&self.rect))?;
        if let Some(o) = &self.other {
            write!(f, " {}", fmt_rect(o))?;
        }
        write!(f, " value={:.3}", self.value)
    }
}

/// One violation per line.
pub fn format_report(violations: &[Violation]) -> String {
    violations.iter().map(|v| format!("{v}\n")).collect()
}

fn on_grid(v: i64, origin: i64, pitch: i64) -> bool {
    (v - origin).rem_euclid(pitch) == 0
}

/// Spacing between different connected components, wire width, track
/// alignment and die containment.
pub fn drc(layout: &Layout, ex: &Extraction, tech: &TechnologyCard) -> Vec<Violation> {
    let mut out = Vec::new();
    let half = tech.wire_width / 2;
    let (ox, oy, pitch) = (layout.die.ll.x, layout.die.ll.y, tech.wire_pitch);
    let shapes = &ex.shapes;

    for s in shapes {
        if !layout.die.contains_rect(&s.rect) {
            out.push(Violation {
                rule: DrcRule::OutsideDie,
                layer: s.layer,
                rect: s.rect,
                other: None,
                value: 0.0,
            });
        }
        let narrow = s.rect.width().min(s.rect.height());
        if s.kind == ShapeKind::Wire && narrow < tech.wire_width {
            out.push(Violation {
                rule: DrcRule::Width,
                layer: s.layer,
                rect: s.rect,
                other: None,
                value: narrow as f64,
            });
        }
        let aligned = on_grid(s.rect.ll.x + half, ox, pitch)
            && on_grid(s.rect.ll.y + half, oy, pitch)
            && on_grid(s.rect.ur.x - (tech.wire_width - half), ox, pitch)
            && on_grid(s.rect.ur.y - (tech.wire_width - half), oy, pitch);
        if !aligned {
            out.push(Violation {
                rule: DrcRule::OffGrid,
                layer: s.layer,
                rect: s.rect,
                other: None,
                value: 0.0,
            });
        }
    }

    let min = tech.min_spacing as f64;
    let mut order: Vec<usize> = (0..shapes.len())
        .filter(|&i| shapes[i].kind != ShapeKind::Via)
        .collect();
    order.sort_by_key(|&i| (shapes[i].rect.ll.x, i));
    for (k, &a) in order.iter().enumerate() {
        for &b in &order[k + 1..] {
            if shapes[b].rect.ll.x >= shapes[a].rect.ur.x + tech.min_spacing {
                break;
            }
            if shapes[a].layer != shapes[b].layer || ex.component[a] == ex.component[b] {
                continue;
            }
            let d = shapes[a].rect.distance(&shapes[b].rect);
            if d < min {
                let (p, q) = if shapes[a].rect <= shapes[b].rect { (a, b) } else { (b, a) };
                out.push(Violation {
                    rule: DrcRule::Spacing,
                    layer: shapes[a].layer,
                    rect: shapes[p].rect,
                    other: Some(shapes[q].rect),
                    value: d,
                });
            }
        }
    }
    out.sort_by(|a, b| (a.rule, a.layer, a.rect, a.other).cmp(&(b.rule, b.layer, b.rect, b.other)));
    out
}
