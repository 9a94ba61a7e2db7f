//! GDSII stream subset.
//!
//! Only the records needed for flat rectangle libraries are written or
//! accepted: HEADER, BGNLIB, LIBNAME, UNITS, BGNSTR, STRNAME, BOUNDARY,
//! LAYER, DATATYPE, XY, ENDEL, ENDSTR and ENDLIB. The database unit is 1 nm.
//!
//! Layer map:
//!
//! | layer | datatype | content                                 |
//! |-------|----------|-----------------------------------------|
//! | 0     | 0        | die outline (routing structure)         |
//! | 1     | 0        | layer-1 wires and pads                  |
//! | 1     | 10 + t   | pin of terminal `t` (component structs) |
//! | 2     | 0        | layer-2 wires and pads                  |
//! | 3     | 0        | via cuts                                |
//! | 50+k  | 0        | tile outline, `k` = nmos/pmos/res/cap   |
//! | 60    | 0        | diffusion regions                       |
//! | 61    | 0        | gate stripes                            |
//!
//! Each component is written as its own structure named after the device;
//! wires, vias and the die outline go to a structure named `_ROUTING`.
//! All structures are flat and share absolute coordinates.

use thiserror::Error;

use crate::geometry::{ComponentTile, FingerGeometry, Layout, Pin, Point, Rect, Via, WireSegment};
use crate::netlist::DeviceKind;

pub const ROUTING_STRUCT: &str = "_ROUTING";
const LAYER_DIE: i16 = 0;
const LAYER_VIA: i16 = 3;
const LAYER_OUTLINE: i16 = 50;
const LAYER_DIFF: i16 = 60;
const LAYER_POLY: i16 = 61;
const PIN_DATATYPE: i16 = 10;

mod rec {
    pub const HEADER: u8 = 0x00;
    pub const BGNLIB: u8 = 0x01;
    pub const LIBNAME: u8 = 0x02;
    pub const UNITS: u8 = 0x03;
    pub const ENDLIB: u8 = 0x04;
    pub const BGNSTR: u8 = 0x05;
    pub const STRNAME: u8 = 0x06;
    pub const ENDSTR: u8 = 0x07;
    pub const BOUNDARY: u8 = 0x08;
    pub const LAYER: u8 = 0x0D;
    pub const DATATYPE: u8 = 0x0E;
    pub const XY: u8 = 0x10;
    pub const ENDEL: u8 = 0x11;
}

const DT_NONE: u8 = 0x00;
const DT_INT2: u8 = 0x02;
const DT_INT4: u8 = 0x03;
const DT_REAL8: u8 = 0x05;
const DT_ASCII: u8 = 0x06;

#[derive(Debug, Error, PartialEq)]
pub enum GdsError {
    #[error("unsupported record type 0x{0:02x}")]
    UnsupportedRecord(u8),
    #[error("stream truncated")]
    Truncated,
    #[error("malformed stream: {0}")]
    Malformed(String),
    #[error("coordinate {0} overflows 32-bit database units")]
    CoordinateOverflow(i64),
}

/// Encodes an excess-64, base-16 GDSII real.
pub fn encode_real8(v: f64) -> [u8; 8] {
    if v == 0.0 {
        return [0; 8];
    }
    let sign = if v < 0.0 { 0x80u8 } else { 0 };
    let mut m = v.abs();
    let mut exp: i32 = 64;
    while m >= 1.0 {
        m /= 16.0;
        exp += 1;
    }
    while m < 1.0 / 16.0 {
        m *= 16.0;
        exp -= 1;
    }
    let mut mantissa = (m * (1u64 << 56) as f64).round() as u64;
    if mantissa >= 1u64 << 56 {
        mantissa >>= 4;
        exp += 1;
    }
    let mut out = mantissa.to_be_bytes();
    out[0] = sign | exp as u8;
    out
}

pub fn decode_real8(b: [u8; 8]) -> f64 {
    let sign = if b[0] & 0x80 != 0 { -1.0 } else { 1.0 };
    let exp = i32::from(b[0] & 0x7f) - 64;
    let mut mb = b;
    mb[0] = 0;
    let mantissa = u64::from_be_bytes(mb) as f64 / (1u64 << 56) as f64;
    sign * mantissa * 16f64.powi(exp)
}

struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    fn record(&mut self, rtype: u8, dtype: u8, payload: &[u8]) {
        let len = (payload.len() + 4) as u16;
        self.buf.extend_from_slice(&len.to_be_bytes());
        self.buf.push(rtype);
        self.buf.push(dtype);
        self.buf.extend_from_slice(payload);
    }

    fn int2(&mut self, rtype: u8, values: &[i16]) {
        let payload: Vec<u8> = values.iter().flat_map(|v| v.to_be_bytes()).collect();
        self.record(rtype, DT_INT2, &payload);
    }

    fn ascii(&mut self, rtype: u8, s: &str) {
        let mut payload = s.as_bytes().to_vec();
        if payload.len() % 2 == 1 {
            payload.push(0);
        }
        self.record(rtype, DT_ASCII, &payload);
    }

    fn boundary(&mut self, layer: i16, datatype: i16, r: &Rect) -> Result<(), GdsError> {
        self.record(rec::BOUNDARY, DT_NONE, &[]);
        self.int2(rec::LAYER, &[layer]);
        self.int2(rec::DATATYPE, &[datatype]);
        let mut xy = Vec::with_capacity(40);
        for p in r.outline() {
            for c in [p.x, p.y] {
                let c32 = i32::try_from(c).map_err(|_| GdsError::CoordinateOverflow(c))?;
                xy.extend_from_slice(&c32.to_be_bytes());
            }
        }
        self.record(rec::XY, DT_INT4, &xy);
        self.record(rec::ENDEL, DT_NONE, &[]);
        Ok(())
    }
}

/// Fixed timestamp so that identical layouts produce identical bytes.
const TIMESTAMP: [i16; 12] = [2000, 1, 1, 0, 0, 0, 2000, 1, 1, 0, 0, 0];

pub fn write_gds(l: &Layout, wire_width: i64) -> Result<Vec<u8>, GdsError> {
    let mut w = Writer { buf: Vec::new() };
    w.int2(rec::HEADER, &[600]);
    w.int2(rec::BGNLIB, &TIMESTAMP);
    w.ascii(rec::LIBNAME, "LAYOUT");
    let mut units = Vec::with_capacity(16);
    units.extend_from_slice(&encode_real8(1e-3));
    units.extend_from_slice(&encode_real8(1e-9));
    w.record(rec::UNITS, DT_REAL8, &units);

    for t in &l.tiles {
        w.int2(rec::BGNSTR, &TIMESTAMP);
        w.ascii(rec::STRNAME, &t.name);
        w.boundary(LAYER_OUTLINE + t.kind.index() as i16, 0, &t.rect)?;
        for d in &t.fingers.diffusions {
            w.boundary(LAYER_DIFF, 0, d)?;
        }
        for g in &t.fingers.gates {
            w.boundary(LAYER_POLY, 0, g)?;
        }
        for p in &t.pins {
            w.boundary(1, PIN_DATATYPE + p.terminal as i16, &Layout::pin_rect(p.at, wire_width))?;
        }
        w.record(rec::ENDSTR, DT_NONE, &[]);
    }

    w.int2(rec::BGNSTR, &TIMESTAMP);
    w.ascii(rec::STRNAME, ROUTING_STRUCT);
    w.boundary(LAYER_DIE, 0, &l.die)?;
    for s in &l.wires {
        w.boundary(i16::from(s.layer), 0, &s.rect)?;
    }
    for v in &l.vias {
        w.boundary(LAYER_VIA, 0, &Layout::via_rect(v.at, wire_width))?;
    }
    w.record(rec::ENDSTR, DT_NONE, &[]);
    w.record(rec::ENDLIB, DT_NONE, &[]);
    Ok(w.buf)
}

struct Record<'a> {
    rtype: u8,
    data: &'a [u8],
}

fn records(bytes: &[u8]) -> Result<Vec<Record<'_>>, GdsError> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        if i + 4 > bytes.len() {
            return Err(GdsError::Truncated);
        }
        let len = usize::from(u16::from_be_bytes([bytes[i], bytes[i + 1]]));
        if len < 4 {
            return Err(GdsError::Malformed(format!("record length {len}")));
        }
        if i + len > bytes.len() {
            return Err(GdsError::Truncated);
        }
        let rtype = bytes[i + 2];
        out.push(Record {
            rtype,
            data: &bytes[i + 4..i + len],
        });
        i += len;
        if rtype == rec::ENDLIB {
            break;
        }
    }
    Ok(out)
}

fn int2(data: &[u8]) -> Result<i16, GdsError> {
    data.get(..2)
        .map(|b| i16::from_be_bytes([b[0], b[1]]))
        .ok_or(GdsError::Truncated)
}

fn ascii(data: &[u8]) -> String {
    String::from_utf8_lossy(data).trim_end_matches('\0').to_string()
}

fn xy_rect(data: &[u8]) -> Result<Rect, GdsError> {
    if data.len() % 8 != 0 || data.len() < 32 {
        return Err(GdsError::Malformed("XY of a rectangle needs at least 4 points".into()));
    }
    let pts: Vec<Point> = data
        .chunks_exact(8)
        .map(|c| {
            Point::new(
                i64::from(i32::from_be_bytes([c[0], c[1], c[2], c[3]])),
                i64::from(i32::from_be_bytes([c[4], c[5], c[6], c[7]])),
            )
        })
        .collect();
    let r = Rect::new(
        pts.iter().map(|p| p.x).min().unwrap(),
        pts.iter().map(|p| p.y).min().unwrap(),
        pts.iter().map(|p| p.x).max().unwrap(),
        pts.iter().map(|p| p.y).max().unwrap(),
    );
    if pts.iter().any(|p| (p.x != r.ll.x && p.x != r.ur.x) || (p.y != r.ll.y && p.y != r.ur.y)) {
        return Err(GdsError::Malformed("only axis-aligned rectangles are supported".into()));
    }
    Ok(r)
}

struct Boundary {
    layer: i16,
    datatype: i16,
    rect: Rect,
}

struct Structure {
    name: String,
    boundaries: Vec<Boundary>,
}

fn kind_from_layer(layer: i16) -> Option<DeviceKind> {
    match layer - LAYER_OUTLINE {
        0 => Some(DeviceKind::Nmos),
        1 => Some(DeviceKind::Pmos),
        2 => Some(DeviceKind::Resistor),
        3 => Some(DeviceKind::Capacitor),
        _ => None,
    }
}

pub fn read_gds(bytes: &[u8]) -> Result<Layout, GdsError> {
    let mut structs: Vec<Structure> = Vec::new();
    let mut current: Option<Structure> = None;
    let mut element: Option<(Option<i16>, Option<i16>, Option<Rect>)> = None;
    let mut ended = false;
    for r in records(bytes)? {
        match r.rtype {
            rec::HEADER | rec::BGNLIB | rec::LIBNAME | rec::UNITS => {}
            rec::BGNSTR => {
                current = Some(Structure {
                    name: String::new(),
                    boundaries: Vec::new(),
                })
            }
            rec::STRNAME => {
                current
                    .as_mut()
                    .ok_or_else(|| GdsError::Malformed("STRNAME outside structure".into()))?
                    .name = ascii(r.data)
            }
            rec::BOUNDARY => element = Some((None, None, None)),
            rec::LAYER => {
                element
                    .as_mut()
                    .ok_or_else(|| GdsError::Malformed("LAYER outside element".into()))?
                    .0 = Some(int2(r.data)?)
            }
            rec::DATATYPE => {
                element
                    .as_mut()
                    .ok_or_else(|| GdsError::Malformed("DATATYPE outside element".into()))?
                    .1 = Some(int2(r.data)?)
            }
            rec::XY => {
                element
                    .as_mut()
                    .ok_or_else(|| GdsError::Malformed("XY outside element".into()))?
                    .2 = Some(xy_rect(r.data)?)
            }
            rec::ENDEL => {
                let (layer, datatype, rect) = element
                    .take()
                    .ok_or_else(|| GdsError::Malformed("ENDEL without element".into()))?;
                let b = Boundary {
                    layer: layer.ok_or_else(|| GdsError::Malformed("missing LAYER".into()))?,
                    datatype: datatype.unwrap_or(0),
                    rect: rect.ok_or_else(|| GdsError::Malformed("missing XY".into()))?,
                };
                current
                    .as_mut()
                    .ok_or_else(|| GdsError::Malformed("element outside structure".into()))?
                    .boundaries
                    .push(b);
            }
            rec::ENDSTR => structs.push(
                current
                    .take()
                    .ok_or_else(|| GdsError::Malformed("ENDSTR without BGNSTR".into()))?,
            ),
            rec::ENDLIB => ended = true,
            other => return Err(GdsError::UnsupportedRecord(other)),
        }
    }
    if !ended {
        return Err(GdsError::Truncated);
    }

    let mut layout = Layout::empty(Rect::default());
    for s in structs {
        if s.name == ROUTING_STRUCT {
            for b in s.boundaries {
                match b.layer {
                    LAYER_DIE => layout.die = b.rect,
                    1 | 2 => layout.wires.push(WireSegment {
                        layer: b.layer as u8,
                        rect: b.rect,
                        net: None,
                    }),
                    LAYER_VIA => layout.vias.push(Via {
                        lower: 1,
                        at: b.rect.center(),
                        net: None,
                    }),
                    other => {
                        return Err(GdsError::Malformed(format!("unexpected routing layer {other}")))
                    }
                }
            }
            continue;
        }
        let mut tile: Option<ComponentTile> = None;
        let mut pins = Vec::new();
        let mut fingers = FingerGeometry::default();
        for b in s.boundaries {
            match b.layer {
                LAYER_DIFF => fingers.diffusions.push(b.rect),
                LAYER_POLY => fingers.gates.push(b.rect),
                1 if b.datatype >= PIN_DATATYPE => pins.push(Pin {
                    terminal: (b.datatype - PIN_DATATYPE) as usize,
                    at: b.rect.center(),
                }),
                l => {
                    let kind = kind_from_layer(l)
                        .ok_or_else(|| GdsError::Malformed(format!("unexpected layer {l} in `{}`", s.name)))?;
                    tile = Some(ComponentTile {
                        name: s.name.clone(),
                        kind,
                        rect: b.rect,
                        pins: Vec::new(),
                        fingers: FingerGeometry::default(),
                    });
                }
            }
        }
        let mut tile =
            tile.ok_or_else(|| GdsError::Malformed(format!("component `{}` has no outline", s.name)))?;
        tile.pins = pins;
        tile.fingers = fingers;
        layout.tiles.push(tile);
    }
    Ok(layout)
}
