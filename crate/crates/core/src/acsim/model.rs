use crate::netlist::Device;
use crate::tech::TechnologyCard;

/// Linearised MOS at a fixed overdrive. Conductances in S, capacitances in F.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmallSignalModel {
    pub gm: f64,
    pub gds: f64,
    pub cgs: f64,
    pub cgd: f64,
    pub cdb: f64,
    pub csb: f64,
}

/// Number of `(source, drain)` diffusion regions for `nf` fingers.
///
/// Fingers alternate S/D/S/..., giving `nf + 1` regions with the outer ones
/// on the source side.
pub fn diffusion_regions(nf: u32) -> (u32, u32) {
    let nf = nf.max(1);
    let source = nf / 2 + 1;
    (source, nf + 1 - source)
}

/// Square-law small-signal parameters. `v_ov` overrides the card's overdrive.
pub fn small_signal(device: &Device, tech: &TechnologyCard, v_ov: Option<f64>) -> SmallSignalModel {
    let m = &tech.mos;
    let v_ov = v_ov.unwrap_or(m.v_ov);
    let aspect = device.w / device.l;
    let gm = m.k_prime * aspect * v_ov;
    let id = 0.5 * m.k_prime * aspect * v_ov * v_ov;

    let w_um = device.w * 1e6;
    let l_um = device.l * 1e6;
    let l_diff_um = m.l_diff as f64 * 1e-3;
    let nf = device.fingers().max(1);
    let finger_w = w_um / f64::from(nf);
    let region_area = finger_w * l_diff_um;
    let (source, drain) = diffusion_regions(nf);
    // Only the two outermost regions expose a sidewall across the finger width.
    let sidewall = m.c_jsw * 2.0 * finger_w;

    SmallSignalModel {
        gm,
        gds: m.lambda * id,
        cgs: 2.0 / 3.0 * m.c_ox * w_um * l_um,
        cgd: m.c_ox * w_um * l_diff_um,
        cdb: m.c_j * region_area * f64::from(drain),
        csb: m.c_j * region_area * f64::from(source) + sidewall,
    }
}
