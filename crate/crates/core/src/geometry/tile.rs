use serde::{Deserialize, Serialize};

use super::{Point, Rect};
use crate::netlist::{Circuit, Device, DeviceKind};
use crate::tech::TechnologyCard;

/// A device terminal landing on the first routing layer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pin {
    /// Index into the device's terminal list.
    pub terminal: usize,
    pub at: Point,
}

/// Gate stripes and diffusion regions of a fingered transistor.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FingerGeometry {
    pub gates: Vec<Rect>,
    pub diffusions: Vec<Rect>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComponentTile {
    pub name: String,
    pub kind: DeviceKind,
    pub rect: Rect,
    pub pins: Vec<Pin>,
    pub fingers: FingerGeometry,
}

impl ComponentTile {
    pub fn nf(&self) -> u32 {
        self.fingers.gates.len() as u32
    }

    pub fn translate(&self, dx: i64, dy: i64) -> Self {
        Self {
            name: self.name.clone(),
            kind: self.kind,
            rect: self.rect.translate(dx, dy),
            pins: self
                .pins
                .iter()
                .map(|p| Pin {
                    terminal: p.terminal,
                    at: p.at.translate(dx, dy),
                })
                .collect(),
            fingers: FingerGeometry {
                gates: self.fingers.gates.iter().map(|r| r.translate(dx, dy)).collect(),
                diffusions: self
                    .fingers
                    .diffusions
                    .iter()
                    .map(|r| r.translate(dx, dy))
                    .collect(),
            },
        }
    }

    /// Moves the tile so its lower-left corner sits at `ll`.
    pub fn moved_to(&self, ll: Point) -> Self {
        self.translate(ll.x - self.rect.ll.x, ll.y - self.rect.ll.y)
    }

    pub fn pin(&self, terminal: usize) -> Option<Point> {
        self.pins.iter().find(|p| p.terminal == terminal).map(|p| p.at)
    }
}

fn div_ceil(a: i64, b: i64) -> i64 {
    (a + b - 1) / b
}

/// Snaps `v` to the nearest track strictly inside `(0, extent)`.
fn snap_inside(v: i64, extent: i64, pitch: i64) -> i64 {
    let hi = ((extent - 1) / pitch).max(1) * pitch;
    let snapped = ((v + pitch / 2) / pitch) * pitch;
    snapped.clamp(pitch, hi.max(pitch))
}

fn mos_tile(d: &Device, tech: &TechnologyCard) -> ComponentTile {
    let nf = i64::from(d.fingers().max(1));
    let l = d.l_nm();
    let ld = tech.mos.l_diff;
    let pitch = tech.wire_pitch;
    let finger_w = div_ceil(d.w_nm(), nf);
    let width = nf * (l + ld) + 2 * ld;
    let height = finger_w + 2 * tech.contact_margin;

    let well = ld / 2;
    let y0 = tech.contact_margin;
    let y1 = y0 + finger_w;
    let mut diffusions = Vec::with_capacity(nf as usize + 1);
    let mut gates = Vec::with_capacity(nf as usize);
    let mut x = well;
    for k in 0..=nf {
        diffusions.push(Rect::new(x, y0, x + ld, y1));
        x += ld;
        if k < nf {
            gates.push(Rect::new(x, y0 / 2, x + l, height - y0 / 2));
            x += l;
        }
    }
    let region_center = |k: usize| (diffusions[k].ll.x + diffusions[k].ur.x) / 2;
    let mid = snap_inside(height / 2, height, pitch);
    let top = snap_inside(height - pitch, height, pitch);
    let pins = vec![
        Pin {
            terminal: 0,
            at: Point::new(snap_inside(region_center(1), width, pitch), mid),
        },
        Pin {
            terminal: 1,
            at: Point::new(snap_inside(width / 2, width, pitch), top),
        },
        Pin {
            terminal: 2,
            at: Point::new(snap_inside(region_center(0), width, pitch), mid),
        },
        Pin {
            terminal: 3,
            at: Point::new(pitch, snap_inside(pitch, height, pitch)),
        },
    ];
    ComponentTile {
        name: d.name.clone(),
        kind: d.kind,
        rect: Rect::new(0, 0, width, height),
        pins,
        fingers: FingerGeometry { gates, diffusions },
    }
}

fn passive_tile(d: &Device, tech: &TechnologyCard) -> ComponentTile {
    let pitch = tech.wire_pitch;
    let width = d.l_nm();
    let height = d.w_nm();
    let mid = snap_inside(height / 2, height, pitch);
    ComponentTile {
        name: d.name.clone(),
        kind: d.kind,
        rect: Rect::new(0, 0, width, height),
        pins: vec![
            Pin {
                terminal: 0,
                at: Point::new(pitch, mid),
            },
            Pin {
                terminal: 1,
                at: Point::new(snap_inside(width - pitch, width, pitch), mid),
            },
        ],
        fingers: FingerGeometry::default(),
    }
}

/// Builds one tile per device with its lower-left corner at the origin.
///
/// A MOS tile is `nf·(L + l_diff) + 2·l_diff` wide and `W/nf` plus two
/// contact margins tall; passives are `L` wide and `W` tall.
pub fn build_tiles(c: &Circuit, tech: &TechnologyCard) -> Vec<ComponentTile> {
    c.devices
        .iter()
        .map(|d| {
            if d.kind.is_mos() {
                mos_tile(d, tech)
            } else {
                passive_tile(d, tech)
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::parse_netlist;

    fn one(text: &str) -> ComponentTile {
        let c = parse_netlist(text).unwrap();
        build_tiles(&c, &TechnologyCard::default()).remove(0)
    }

    #[test]
    fn more_fingers_wider_and_shorter() {
        let t2 = one("M1 d g s b W=2.4u L=0.5u nf=2\n");
        let t4 = one("M1 d g s b W=2.4u L=0.5u nf=4\n");
        assert!(t4.rect.width() > t2.rect.width());
        assert!(t4.rect.height() < t2.rect.height());
        assert_eq!(t2.fingers.diffusions.len(), 3);
        assert_eq!(t4.fingers.diffusions.len(), 5);
        assert_eq!(t4.nf(), 4);
        // nf*(L + l_diff) + 2*l_diff
        assert_eq!(t2.rect.width(), 2 * (500 + 250) + 500);
        assert_eq!(t2.rect.height(), 1200 + 600);
    }

    #[test]
    fn resistor_tile_is_w_by_l() {
        let t = one("R1 a b 10k W=1u L=10u\n");
        assert_eq!(t.rect.area(), 1000 * 10_000);
        assert_eq!(t.nf(), 0);
    }

    #[test]
    fn pins_inside_distinct_and_on_grid() {
        for nf in [2, 4, 8, 16] {
            let t = one(&format!("M1 d g s b W=2.4u L=0.5u nf={nf}\n"));
            for (i, p) in t.pins.iter().enumerate() {
                assert!(t.rect.contains(p.at));
                assert_eq!(p.at.x % 100, 0);
                assert_eq!(p.at.y % 100, 0);
                for q in &t.pins[i + 1..] {
                    assert_ne!(p.at, q.at);
                }
            }
            for r in t.fingers.gates.iter().chain(&t.fingers.diffusions) {
                assert!(t.rect.contains_rect(r));
            }
        }
    }
}
