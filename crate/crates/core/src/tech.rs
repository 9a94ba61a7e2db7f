//! Simplified process description.
//!
//! All lengths are integer nanometres. Capacitances are expressed per square
//! micrometre (area) or per micrometre (fringe, coupling, sidewall), so that
//! geometry in nm has to be scaled by `1e-3` / `1e-6` before use.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Number of routing layers. Layer 1 prefers horizontal runs, layer 2 vertical.
pub const ROUTING_LAYERS: usize = 2;

#[derive(Debug, Error, PartialEq)]
pub enum TechError {
    #[error("technology field `{0}` must be positive")]
    NonPositive(&'static str),
    #[error("technology field `{0}` must be non-negative")]
    Negative(&'static str),
    #[error("wire width {width} nm plus spacing {spacing} nm exceeds pitch {pitch} nm")]
    PitchTooSmall { width: i64, spacing: i64, pitch: i64 },
}

/// Per-layer wiring electricals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LayerRc {
    /// Ohm per square.
    pub sheet_resistance: f64,
    /// F/µm².
    pub cap_area: f64,
    /// F/µm of edge.
    pub cap_fringe: f64,
}

/// Square-law MOS parameters shared by both device polarities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MosParams {
    /// Transconductance coefficient k' in A/V².
    pub k_prime: f64,
    /// Channel-length modulation in 1/V.
    pub lambda: f64,
    /// Gate overdrive in V.
    pub v_ov: f64,
    /// Gate capacitance per area, F/µm².
    pub c_ox: f64,
    /// Junction capacitance per area, F/µm².
    pub c_j: f64,
    /// Junction sidewall capacitance, F/µm.
    pub c_jsw: f64,
    /// Diffusion extension in nm.
    pub l_diff: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TechnologyCard {
    pub min_gate_width: i64,
    pub min_spacing: i64,
    pub wire_width: i64,
    pub wire_pitch: i64,
    /// Vertical margin above and below the diffusion of a MOS tile, nm.
    pub contact_margin: i64,
    pub layers: [LayerRc; ROUTING_LAYERS],
    /// F/µm of parallel run at minimum spacing.
    pub cap_coupling: f64,
    pub mos: MosParams,
}

impl Default for TechnologyCard {
    fn default() -> Self {
        let layer = LayerRc {
            sheet_resistance: 0.125,
            cap_area: 3.0e-17,
            cap_fringe: 4.0e-17,
        };
        Self {
            min_gate_width: 150,
            min_spacing: 50,
            wire_width: 50,
            wire_pitch: 100,
            contact_margin: 300,
            layers: [layer, layer],
            cap_coupling: 8.0e-17,
            mos: MosParams {
                k_prime: 200e-6,
                lambda: 0.1,
                v_ov: 0.2,
                c_ox: 8.5e-15,
                c_j: 1.0e-15,
                c_jsw: 3.0e-16,
                l_diff: 250,
            },
        }
    }
}

impl TechnologyCard {
    pub fn validate(&self) -> Result<(), TechError> {
        let positive = [
            ("min_gate_width", self.min_gate_width),
            ("min_spacing", self.min_spacing),
            ("wire_width", self.wire_width),
            ("wire_pitch", self.wire_pitch),
            ("contact_margin", self.contact_margin),
            ("l_diff", self.mos.l_diff),
        ];
        for (name, v) in positive {
            if v <= 0 {
                return Err(TechError::NonPositive(name));
            }
        }
        if self.wire_width + self.min_spacing > self.wire_pitch {
            return Err(TechError::PitchTooSmall {
                width: self.wire_width,
                spacing: self.min_spacing,
                pitch: self.wire_pitch,
            });
        }
        for layer in &self.layers {
            if layer.sheet_resistance < 0.0 || layer.cap_area < 0.0 || layer.cap_fringe < 0.0 {
                return Err(TechError::Negative("layer electricals"));
            }
        }
        if self.cap_coupling < 0.0 {
            return Err(TechError::Negative("cap_coupling"));
        }
        let m = &self.mos;
        for (name, v) in [("k_prime", m.k_prime), ("v_ov", m.v_ov)] {
            if !(v > 0.0) {
                return Err(TechError::NonPositive(name));
            }
        }
        for (name, v) in [
            ("lambda", m.lambda),
            ("c_ox", m.c_ox),
            ("c_j", m.c_j),
            ("c_jsw", m.c_jsw),
        ] {
            if v < 0.0 {
                return Err(TechError::Negative(name));
            }
        }
        Ok(())
    }

    pub fn layer(&self, layer: u8) -> &LayerRc {
        &self.layers[usize::from(layer.clamp(1, ROUTING_LAYERS as u8)) - 1]
    }

    /// Halo margin per side: two routing tracks.
    pub fn halo_margin(&self) -> i64 {
        2 * self.wire_pitch
    }
}
