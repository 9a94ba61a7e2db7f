//! Streams written here must parse with an independent GDSII reader.

use anadex::explore::{baseline_pnr, ExplorationConfig};
use anadex::fixtures;
use anadex::gds::{write_gds, ROUTING_STRUCT};
use anadex::geometry::Rect;
use anadex::netlist::{parse_netlist, parse_testbench};
use anadex::tech::TechnologyCard;
use gds21::{GdsElement, GdsLibrary};

fn rect_of(xy: &[gds21::GdsPoint]) -> Rect {
    let xs = xy.iter().map(|p| i64::from(p.x));
    let ys = xy.iter().map(|p| i64::from(p.y));
    Rect::new(xs.clone().min().unwrap(), ys.clone().min().unwrap(), xs.max().unwrap(), ys.max().unwrap())
}

#[test]
fn ota_layout_reads_with_gds21() {
    let f = fixtures::FIVE_T_OTA;
    let c = parse_netlist(f.template).unwrap();
    let tb = parse_testbench(f.testbench).unwrap();
    let tech = TechnologyCard::default();
    let (_, base) = baseline_pnr(0, &c, &tb, &tech, &ExplorationConfig::default()).unwrap();
    let bytes = write_gds(&base.layout, tech.wire_width).unwrap();
    let lib = GdsLibrary::from_bytes(bytes).unwrap();

    assert!((lib.units.db_unit() - 1e-9).abs() < 1e-20);
    let names: Vec<&str> = lib.structs.iter().map(|s| s.name.as_str()).collect();
    let mut expected: Vec<&str> = base.layout.tiles.iter().map(|t| t.name.as_str()).collect();
    expected.push(ROUTING_STRUCT);
    assert_eq!(names, expected);

    for (s, t) in lib.structs.iter().zip(&base.layout.tiles) {
        let first = match &s.elems[0] {
            GdsElement::GdsBoundary(b) => rect_of(&b.xy),
            e => panic!("unexpected element {e:?}"),
        };
        assert_eq!(first, t.rect, "{}", t.name);
        assert!(s.elems.iter().all(|e| matches!(e, GdsElement::GdsBoundary(b) if b.xy.len() == 5)));
    }

    let routing = lib.structs.last().unwrap();
    let wires: Vec<(i16, Rect)> = routing
        .elems
        .iter()
        .filter_map(|e| match e {
            GdsElement::GdsBoundary(b) if b.layer == 1 || b.layer == 2 => Some((b.layer, rect_of(&b.xy))),
            _ => None,
        })
        .collect();
    let ours: Vec<(i16, Rect)> = base.layout.wires.iter().map(|w| (i16::from(w.layer), w.rect)).collect();
    assert_eq!(wires, ours);
    let vias = routing
        .elems
        .iter()
        .filter(|e| matches!(e, GdsElement::GdsBoundary(b) if b.layer == 3))
        .count();
    assert_eq!(vias, base.layout.vias.len());
}
