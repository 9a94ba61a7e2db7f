//! Design-rule checking and layout-versus-schematic comparison.

mod drc;
mod extract;
mod lvs;

pub use drc::{drc, format_report, DrcRule, Violation};
pub use extract::{extract_connectivity, layout_shapes, Extraction, Shape, ShapeKind};
pub use lvs::{isomorphic, lvs, DeviceGraph, LvsReport};

use crate::geometry::Layout;
use crate::netlist::Circuit;
use crate::tech::TechnologyCard;

#[derive(Debug, Clone)]
pub struct StructuralCheck {
    pub violations: Vec<Violation>,
    pub lvs: LvsReport,
}

impl StructuralCheck {
    pub fn drc_clean(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn passed(&self) -> bool {
        self.drc_clean() && self.lvs.pass
    }
}

/// Extracts once and runs both DRC and LVS.
pub fn check_layout(layout: &Layout, circuit: &Circuit, tech: &TechnologyCard) -> StructuralCheck {
    let ex = extract_connectivity(layout, tech.wire_width);
    StructuralCheck {
        violations: drc(layout, &ex, tech),
        lvs: lvs(layout, &ex, circuit),
    }
}
