use anadex::explore::{explore_netlist, ExplorationConfig};
use anadex::fixtures;
use anadex::netlist::{apply_fingers, enumerate_finger_permutations, parse_pairs, parse_template, parse_testbench};
use anadex::tech::TechnologyCard;

#[test]
fn ota_first_netlist_explores_cleanly() {
    let f = fixtures::FIVE_T_OTA;
    let t = parse_template(f.template).unwrap();
    let pairs = parse_pairs(f.pairs).unwrap();
    let tb = parse_testbench(f.testbench).unwrap();
    let tech = TechnologyCard::default();
    let all = enumerate_finger_permutations(&t, &pairs, &anadex::netlist::DEFAULT_FINGER_SET, tech.min_gate_width, 1000).unwrap();
    let n = apply_fingers(&t, &all[0], 0).unwrap();
    let cfg = ExplorationConfig { variants: 5, seed: 1, ..Default::default() };
    let start = std::time::Instant::now();
    let run = explore_netlist(&n, &tb, &tech, &cfg, &|e| eprintln!("{e}"));
    eprintln!("elapsed {:?}", start.elapsed());
    assert_eq!(run.error, None);
    assert_eq!(run.variants.len(), 5);
    assert!(run.variants.iter().all(|v| v.qos.admissible()));
}

#[test]
fn each_wire_deletion_splits_exactly_its_net() {
    let f = fixtures::FIVE_T_OTA;
    let c = anadex::netlist::parse_netlist(f.template).unwrap();
    let tb = parse_testbench(f.testbench).unwrap();
    let tech = TechnologyCard::default();
    let (_, base) = anadex::explore::baseline_pnr(0, &c, &tb, &tech, &ExplorationConfig::default()).unwrap();
    assert!(anadex::verify::check_layout(&base.layout, &c, &tech).passed());
    for k in 0..base.layout.wires.len() {
        let mut l = base.layout.clone();
        let seg = l.wires.remove(k);
        let r = anadex::verify::check_layout(&l, &c, &tech).lvs;
        assert!(!r.pass);
        assert_eq!(r.split, vec![seg.net.clone().unwrap()], "segment {k}");
        assert!(r.merged.is_empty());
    }
}
