//! Quality-of-solution numbers for one layout.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::acsim::SimulationTrace;
use crate::geometry::{bounding_box, ComponentTile};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum MetricsError {
    #[error("traces have {0} and {1} points")]
    LengthMismatch(usize, usize),
    #[error("frequency grids differ at point {0}")]
    GridMismatch(usize),
    #[error("empty trace")]
    Empty,
}

/// Root-mean-square difference of two magnitude traces, in volts.
pub fn pscore(pre: &SimulationTrace, post: &SimulationTrace) -> Result<f64, MetricsError> {
    if pre.len() != post.len() {
        return Err(MetricsError::LengthMismatch(pre.len(), post.len()));
    }
    if pre.is_empty() {
        return Err(MetricsError::Empty);
    }
    for (i, (a, b)) in pre.frequencies.iter().zip(&post.frequencies).enumerate() {
        if (a - b).abs() > 1e-9 * a.abs().max(b.abs()) {
            return Err(MetricsError::GridMismatch(i));
        }
    }
    let sum: f64 = pre
        .magnitudes
        .iter()
        .zip(&post.magnitudes)
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok((sum / pre.len() as f64).sqrt())
}

/// Sum of component rectangle areas in µm².
pub fn area_um2(tiles: &[ComponentTile]) -> f64 {
    let nm2: i128 = tiles.iter().map(|t| t.rect.area()).sum();
    nm2 as f64 * 1e-6
}

/// Area of the box enclosing every tile, in µm². Unlike [`area_um2`] this
/// moves when components are shifted.
pub fn bbox_area_um2(tiles: &[ComponentTile]) -> f64 {
    bounding_box(tiles.iter().map(|t| &t.rect)).map_or(0.0, |r| r.area() as f64 * 1e-6)
}

/// Report attached to every admitted layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QoS {
    pub netlist: usize,
    pub variant: usize,
    pub pscore: f64,
    pub area: f64,
    pub bbox_area: f64,
    pub drc_clean: bool,
    pub lvs_pass: bool,
    /// Length of the accumulated move log.
    pub moves: usize,
    /// Seconds spent producing this layout.
    pub elapsed: f64,
}

impl QoS {
    pub fn admissible(&self) -> bool {
        self.drc_clean && self.lvs_pass && self.pscore >= 0.0 && self.area > 0.0
    }
}
